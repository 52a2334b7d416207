//! Eigenvalue sequences standing in for the operator `A`, coefficient vectors in its
//! eigenbasis, and the power scale `A^τ`.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};

pub const DEFAULT_MODES: usize = 64;

/// Heuristic defaults for `tail_membership`.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;
pub const TAIL_THRESHOLD: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumKind {
    /// `-d²/dx²` on `(0, L)` with Dirichlet conditions: `λ_k = (kπ/L)²`.
    DirichletInterval {
        length: f64,
    },
    /// `λ_k = c·k^a`.
    PowerLaw {
        c: f64,
        a: f64,
    },
    Explicit,
}

/// Content fingerprint binding coefficient vectors to their spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpectrumId(u64);

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    kind: SpectrumKind,
    eigenvalues: Vec<f64>,
    id: SpectrumId,
}

fn positive(name: &'static str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(
            name,
            format!("must be positive and finite, got {x}"),
        ))
    }
}

impl Spectrum {
    pub fn dirichlet_interval(length: f64, modes: usize) -> Result<Self> {
        let length = positive("L", length)?;
        let ev = (1..=modes)
            .map(|k| (k as f64 * std::f64::consts::PI / length).powi(2))
            .collect();
        Self::build(SpectrumKind::DirichletInterval { length }, ev)
    }

    pub fn power_law(c: f64, a: f64, modes: usize) -> Result<Self> {
        let c = positive("c", c)?;
        let a = positive("a", a)?;
        let ev = (1..=modes).map(|k| c * (k as f64).powf(a)).collect();
        Self::build(SpectrumKind::PowerLaw { c, a }, ev)
    }

    /// A user-supplied list; must be strictly positive and nondecreasing.
    pub fn explicit(eigenvalues: Vec<f64>) -> Result<Self> {
        Self::build(SpectrumKind::Explicit, eigenvalues)
    }

    fn build(kind: SpectrumKind, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(invalid("modes", "need at least one mode"));
        }
        if let Some((i, &l)) = eigenvalues
            .iter()
            .enumerate()
            .find(|(_, l)| !(**l > 0.0 && l.is_finite()))
        {
            return Err(invalid(
                "eigenvalues",
                format!("λ_{} = {l} is not positive", i + 1),
            ));
        }
        if let Some(i) = eigenvalues.windows(2).position(|w| w[1] < w[0]) {
            return Err(invalid(
                "eigenvalues",
                format!("non-monotone at k = {}", i + 2),
            ));
        }
        let mut h = DefaultHasher::new();
        format!("{kind:?}").hash(&mut h);
        for l in &eigenvalues {
            l.to_bits().hash(&mut h);
        }
        let id = SpectrumId(h.finish());
        Ok(Self {
            kind,
            eigenvalues,
            id,
        })
    }

    /// Parse `dirichlet:L=1`, `power:c=1,a=2` or `file:PATH`.
    pub fn parse(desc: &str, modes: usize) -> Result<Self> {
        let (head, rest) = desc.split_once(':').unwrap_or((desc, ""));
        let params = || -> Result<Vec<(&str, f64)>> {
            rest.split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| {
                    let (k, v) = p.split_once('=').ok_or_else(|| {
                        invalid("spectrum", format!("expected key=value, got {p:?}"))
                    })?;
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| invalid("spectrum", format!("bad number in {p:?}")))?;
                    Ok((k.trim(), v))
                })
                .collect()
        };
        match head.trim() {
            "dirichlet" => {
                let mut length = 1.0;
                for (k, v) in params()? {
                    match k {
                        "L" => length = v,
                        _ => return Err(invalid("spectrum", format!("unknown parameter {k}"))),
                    }
                }
                Self::dirichlet_interval(length, modes)
            }
            "power" => {
                let (mut c, mut a) = (1.0, 2.0);
                for (k, v) in params()? {
                    match k {
                        "c" => c = v,
                        "a" => a = v,
                        _ => return Err(invalid("spectrum", format!("unknown parameter {k}"))),
                    }
                }
                Self::power_law(c, a, modes)
            }
            "file" => {
                let s = Self::read_csv(Path::new(rest))?;
                if s.len() < modes {
                    return Err(invalid(
                        "modes",
                        format!("file lists {} eigenvalues, {modes} requested", s.len()),
                    ));
                }
                s.truncated(modes)
            }
            other => Err(invalid("spectrum", format!("unknown kind {other:?}"))),
        }
    }

    /// First `modes` eigenvalues, keeping the kind.
    pub fn truncated(&self, modes: usize) -> Result<Self> {
        Self::build(
            self.kind.clone(),
            self.eigenvalues[..modes.min(self.len())].to_vec(),
        )
    }

    pub fn kind(&self) -> &SpectrumKind {
        &self.kind
    }

    pub fn id(&self) -> SpectrumId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `λ_1, …, λ_K` (index 0 holds `λ_1`).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Bind coefficients to this spectrum.
    pub fn coefs(&self, values: Vec<f64>) -> Result<CoefVector> {
        if values.len() != self.len() {
            return Err(invalid(
                "coefficients",
                format!("expected {} values, got {}", self.len(), values.len()),
            ));
        }
        Ok(CoefVector {
            values,
            spectrum: self.id,
        })
    }

    pub fn zeros(&self) -> CoefVector {
        CoefVector {
            values: vec![0.0; self.len()],
            spectrum: self.id,
        }
    }

    /// Unit vector `e_k`, with `k` counted from 1.
    pub fn unit(&self, k: usize) -> Result<CoefVector> {
        if k == 0 || k > self.len() {
            return Err(invalid(
                "k",
                format!("must lie in 1..={}, got {k}", self.len()),
            ));
        }
        let mut v = self.zeros();
        v.values[k - 1] = 1.0;
        Ok(v)
    }

    pub fn from_fn(&self, f: impl FnMut(usize) -> f64) -> CoefVector {
        CoefVector {
            values: (1..=self.len()).map(f).collect(),
            spectrum: self.id,
        }
    }

    pub fn check(&self, g: &CoefVector) -> Result<()> {
        if g.spectrum == self.id {
            Ok(())
        } else {
            Err(Error::SpectrumMismatch)
        }
    }

    /// Header line with the descriptor, then `k,lambda_k` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {self}")?;
        writeln!(w, "k,lambda_k")?;
        for (i, l) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, crate::fmt_sig17(*l))?;
        }
        Ok(())
    }

    /// Reads the format produced by `write_csv`. The descriptor line is optional and
    /// informational: the result is always an explicit spectrum.
    pub fn read_csv_from<R: BufRead>(r: R) -> Result<Self> {
        let mut ev = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("k,") {
                continue;
            }
            let parse_err = |m: &str| Error::Parse {
                line: n + 1,
                message: m.to_string(),
            };
            let (k, l) = line
                .split_once(',')
                .ok_or_else(|| parse_err("expected k,lambda_k"))?;
            let k: usize = k.trim().parse().map_err(|_| parse_err("bad mode index"))?;
            if k != ev.len() + 1 {
                return Err(parse_err("mode indices must run 1, 2, 3, ..."));
            }
            ev.push(
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err("bad eigenvalue"))?,
            );
        }
        Self::explicit(ev)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv_from(std::io::BufReader::new(f))
    }
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SpectrumKind::DirichletInterval { length } => write!(f, "dirichlet:L={length}"),
            SpectrumKind::PowerLaw { c, a } => write!(f, "power:c={c},a={a}"),
            SpectrumKind::Explicit => write!(f, "explicit:K={}", self.len()),
        }
    }
}

/// Coefficients `g_k = (g, v_k)` of an element of the truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefVector {
    values: Vec<f64>,
    spectrum: SpectrumId,
}

impl CoefVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spectrum_id(&self) -> SpectrumId {
        self.spectrum
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Euclidean norm, i.e. the norm of `H`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            values: self.values.iter().map(|x| a * x).collect(),
            spectrum: self.spectrum,
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.spectrum != other.spectrum {
            return Err(Error::SpectrumMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            values,
            spectrum: self.spectrum,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,g_k")?;
        for (i, g) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, crate::fmt_sig17(*g))?;
        }
        Ok(())
    }

    pub fn read_csv_from<R: BufRead>(r: R, s: &Spectrum) -> Result<Self> {
        let mut values = vec![0.0; s.len()];
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with("k,") {
                continue;
            }
            let parse_err = |m: &str| Error::Parse {
                line: n + 1,
                message: m.to_string(),
            };
            let (k, g) = line
                .split_once(',')
                .ok_or_else(|| parse_err("expected k,g_k"))?;
            let k: usize = k.trim().parse().map_err(|_| parse_err("bad mode index"))?;
            if k == 0 || k > s.len() {
                return Err(parse_err("mode index outside the spectrum"));
            }
            values[k - 1] = g.trim().parse().map_err(|_| parse_err("bad coefficient"))?;
        }
        s.coefs(values)
    }
}

/// `‖g‖_τ = (Σ λ_k^{2τ} |g_k|²)^{1/2}`.
pub fn norm_tau(g: &CoefVector, s: &Spectrum, tau: f64) -> Result<f64> {
    s.check(g)?;
    Ok(g.values
        .iter()
        .zip(&s.eigenvalues)
        .map(|(x, l)| (l.powf(tau) * x).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Coefficients of `A^τ g`.
pub fn apply_power(g: &CoefVector, s: &Spectrum, tau: f64) -> Result<CoefVector> {
    s.check(g)?;
    let values = g
        .values
        .iter()
        .zip(&s.eigenvalues)
        .map(|(x, l)| l.powf(tau) * x)
        .collect();
    Ok(CoefVector {
        values,
        spectrum: g.spectrum,
    })
}

/// Point values of `Σ g_k √(2/L) sin(kπx/L)`; only for Dirichlet interval spectra.
pub fn synthesize(g: &CoefVector, s: &Spectrum, x_grid: &[f64]) -> Result<Vec<f64>> {
    s.check(g)?;
    let SpectrumKind::DirichletInterval { length } = s.kind else {
        return Err(Error::UnsupportedSpectrum {
            kind: s.to_string(),
        });
    };
    let amp = (2.0 / length).sqrt();
    Ok(x_grid
        .iter()
        .map(|&x| {
            g.values
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, c)| c * crate::gamma::sin_pi((i + 1) as f64 * x / length))
                .sum::<f64>()
                * amp
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailReport {
    pub in_scale: bool,
    pub tail_ratio: f64,
}

/// Share of `Σ λ_k^{2τ}|g_k|²` carried by the top `fraction` of indices.
pub fn tail_membership(
    g: &CoefVector,
    s: &Spectrum,
    tau: f64,
    fraction: f64,
) -> Result<TailReport> {
    s.check(g)?;
    if s.len() < 10 {
        return Err(invalid("modes", "tail membership needs at least 10 modes"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid(
            "fraction",
            format!("must lie in (0, 1), got {fraction}"),
        ));
    }
    let w: Vec<f64> = g
        .values
        .iter()
        .zip(&s.eigenvalues)
        .map(|(x, l)| (l.powf(tau) * x).powi(2))
        .collect();
    let total: f64 = w.iter().sum();
    let n_tail = ((fraction * s.len() as f64).ceil() as usize).max(1);
    let tail: f64 = w[s.len() - n_tail..].iter().sum();
    let tail_ratio = if total > 0.0 { tail / total } else { 0.0 };
    Ok(TailReport {
        in_scale: tail_ratio < TAIL_THRESHOLD,
        tail_ratio,
    })
}
