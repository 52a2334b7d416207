//! Forward problem: given the weighted initial datum `φ` and a source `f`, evaluate
//! `u_k(t) = t^{ρ-1}E_{ρ,ρ}(-λ_k t^ρ) φ_k + ∫_0^t η^{ρ-1}E_{ρ,ρ}(-λ_k η^ρ) f_k(t-η) dη`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fracops::{
    gauss_jacobi, graded_integral, graded_singular_integral, legendre16, ModalTrajectory,
    QuadratureRule, DEFAULT_NODES,
};
use crate::gamma::rgamma;
use crate::mlf::{kernel_with, FractionalOrder, MittagLeffler, MlfConfig};
use crate::spectral::{CoefVector, Spectrum, SpectrumId};
use crate::timefn::{DeclaredSingular, TimeFunction};

pub type ModeFn = Arc<dyn TimeFunction>;

/// Graded panels on the far side of the convolution when the source is singular.
const SOURCE_PANELS: usize = 10;
/// The leading kernel panel ends where `λ η^ρ` drops below this.
const LEADING_PANEL_ARG: f64 = 1e-6;

/// Modal source `f_k(t)`; `None` marks an identically zero mode.
#[derive(Clone)]
pub struct SourceTerm {
    modes: Vec<Option<ModeFn>>,
    epsilon: f64,
    singular_at_zero: bool,
    spectrum: SpectrumId,
}

impl std::fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SourceTerm")
            .field(
                "active_modes",
                &self.modes.iter().filter(|m| m.is_some()).count(),
            )
            .field("epsilon", &self.epsilon)
            .field("singular_at_zero", &self.singular_at_zero)
            .finish()
    }
}

impl SourceTerm {
    /// Source whose modes are bounded near `t = 0`.
    pub fn regular(s: &Spectrum, modes: Vec<Option<ModeFn>>, epsilon: f64) -> Result<Self> {
        Self::build(s, modes, epsilon, None)
    }

    /// Source whose modes behave like `t^{ρ-1} g_k(t)` with `g_k` continuous at 0.
    pub fn singular(
        s: &Spectrum,
        modes: Vec<Option<ModeFn>>,
        epsilon: f64,
        rho: FractionalOrder,
    ) -> Result<Self> {
        Self::build(s, modes, epsilon, Some(rho))
    }

    fn build(
        s: &Spectrum,
        modes: Vec<Option<ModeFn>>,
        epsilon: f64,
        rho: Option<FractionalOrder>,
    ) -> Result<Self> {
        if modes.len() != s.len() {
            return Err(invalid(
                "source",
                format!("expected {} modes, got {}", s.len(), modes.len()),
            ));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid(
                "epsilon",
                format!("must lie in (0, 1), got {epsilon}"),
            ));
        }
        let modes = modes
            .into_iter()
            .enumerate()
            .map(|(k, m)| {
                let Some(f) = m else { return Ok(None) };
                let f: ModeFn = match rho {
                    Some(r) if f.singular_exponent() != Some(r.get()) => {
                        let inner = Arc::clone(&f);
                        Arc::new(DeclaredSingular::new(r.get(), move |t| inner.eval(t))?)
                    }
                    _ => f,
                };
                // The regular factor must stay bounded as t → 0.
                let (a, b) = (f.regular_part(1e-6), f.regular_part(1e-8));
                if !(a.is_finite() && b.is_finite()) || b.abs() > 3.0 * (a.abs() + 1.0) {
                    return Err(invalid(
                        "source",
                        format!(
                            "mode {} is not bounded near t = 0 in the declared class",
                            k + 1
                        ),
                    ));
                }
                Ok(Some(f))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            modes,
            epsilon,
            singular_at_zero: rho.is_some(),
            spectrum: s.id(),
        })
    }

    /// Single active mode `k` (counted from 1).
    pub fn single_mode(s: &Spectrum, k: usize, f: ModeFn, epsilon: f64) -> Result<Self> {
        if k == 0 || k > s.len() {
            return Err(invalid(
                "k",
                format!("must lie in 1..={}, got {k}", s.len()),
            ));
        }
        let mut modes: Vec<Option<ModeFn>> = vec![None; s.len()];
        modes[k - 1] = Some(f);
        Self::regular(s, modes, epsilon)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn singular_at_zero(&self) -> bool {
        self.singular_at_zero
    }

    pub fn spectrum_id(&self) -> SpectrumId {
        self.spectrum
    }

    /// Mode `k` (zero-based), `None` when it vanishes.
    pub fn mode(&self, k: usize) -> Option<&dyn TimeFunction> {
        self.modes.get(k).and_then(|m| m.as_deref())
    }

    /// `a·self + b·other`, mode by mode.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.spectrum != other.spectrum || self.len() != other.len() {
            return Err(Error::SpectrumMismatch);
        }
        let singular = self.singular_at_zero || other.singular_at_zero;
        let modes = self
            .modes
            .iter()
            .zip(&other.modes)
            .map(|(x, y)| -> Option<ModeFn> {
                match (x.clone(), y.clone()) {
                    (None, None) => None,
                    (x, y) => Some(Arc::new(LinearCombination {
                        a,
                        x,
                        b,
                        y,
                        singular,
                    }) as ModeFn),
                }
            })
            .collect();
        Ok(Self {
            modes,
            epsilon: self.epsilon.min(other.epsilon),
            singular_at_zero: singular,
            spectrum: self.spectrum,
        })
    }
}

struct LinearCombination {
    a: f64,
    x: Option<ModeFn>,
    b: f64,
    y: Option<ModeFn>,
    singular: bool,
}

impl TimeFunction for LinearCombination {
    fn eval(&self, t: f64) -> f64 {
        self.a * self.x.as_ref().map_or(0.0, |f| f.eval(t))
            + self.b * self.y.as_ref().map_or(0.0, |f| f.eval(t))
    }
    fn singular_exponent(&self) -> Option<f64> {
        if !self.singular {
            return None;
        }
        self.x
            .iter()
            .chain(self.y.iter())
            .find_map(|f| f.singular_exponent())
    }
    fn regular_part(&self, t: f64) -> f64 {
        match self.singular_exponent() {
            Some(b) => {
                let part = |f: &Option<ModeFn>| {
                    f.as_ref().map_or(0.0, |f| match f.singular_exponent() {
                        Some(fb) if fb == b => f.regular_part(t),
                        _ => t.powf(1.0 - b) * f.eval(t),
                    })
                };
                self.a * part(&self.x) + self.b * part(&self.y)
            }
            None => self.eval(t),
        }
    }
}

/// `∫_0^t η^{ρ-1} E_{ρ,ρ}(-λ η^ρ) f(t-η) dη`.
///
/// `[0, t/2]` is integrated in `τ = η^ρ`, where the kernel is the entire function
/// `E_{ρ,ρ}(-λτ)`, with panels graded towards the scale `1/λ`; the innermost piece,
/// where `λη^ρ` is small, uses the Gauss-Jacobi `rule` (exponent `ρ`) in `η`.
/// On `[t/2, t]` the variable is `ζ = t - η`; a declared singularity of `f` is removed
/// the same way.
pub fn source_convolution(
    fk: &dyn TimeFunction,
    lambda: f64,
    rho: FractionalOrder,
    t: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let e = MittagLeffler::shared(rho.get(), rho.get(), &MlfConfig::default())?;
    convolve(&e, fk, lambda, t, rule)
}

fn convolve(
    e: &MittagLeffler,
    fk: &dyn TimeFunction,
    lambda: f64,
    t: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let r = e.rho();
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(
            "lambda",
            format!("must be finite and >= 0, got {lambda}"),
        ));
    }
    if (rule.exponent() - r).abs() > 1e-14 {
        return Err(invalid(
            "rule",
            format!("exponent {} does not match ρ = {r}", rule.exponent()),
        ));
    }
    let half = 0.5 * t;
    let mut failure: Option<Error> = None;
    let mut ml = |z: f64| match e.eval(z) {
        Ok(v) => v,
        Err(err) => {
            failure.get_or_insert(err);
            f64::NAN
        }
    };

    // Kernel side, η ∈ [0, t/2].
    let tau_top = half.powf(r);
    let tau_stop = tau_top.min(1.0 / lambda.max(f64::MIN_POSITIVE)) * LEADING_PANEL_ARG;
    let gl = legendre16();
    let mut near = 0.0;
    let mut hi = tau_top;
    while hi > tau_stop {
        let lo = hi / 4.0;
        let len = hi - lo;
        near +=
            len * gl.apply(|x| {
                let tau = lo + len * x;
                ml(-lambda * tau) * fk.eval(t - tau.powf(1.0 / r))
            }) / r;
        hi = lo;
    }
    let a = hi.powf(1.0 / r);
    let lead = hi * rule.apply(|x| ml(-lambda * hi * x.powf(r)) * fk.eval(t - a * x));

    // Source side, ζ = t - η ∈ [0, t/2].
    let k = |zeta: f64, ml: &mut dyn FnMut(f64) -> f64| {
        let eta = t - zeta;
        eta.powf(r - 1.0) * ml(-lambda * eta.powf(r))
    };
    let far = match fk.singular_exponent() {
        Some(beta) => graded_singular_integral(beta, half, SOURCE_PANELS, |z| {
            k(z, &mut ml) * fk.regular_part(z)
        }),
        None => graded_integral(half, 2, |z| k(z, &mut ml) * fk.eval(z)),
    };
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(near + lead + far)
}

/// Solution of the forward problem, evaluated lazily and cached per `(mode, t)`.
pub struct FieldSolution {
    spectrum: Spectrum,
    rho: FractionalOrder,
    t_end: f64,
    phi: CoefVector,
    source: Option<SourceTerm>,
    kernel: Arc<MittagLeffler>,
    rule: QuadratureRule,
    kernel_cache: Mutex<HashMap<(usize, u64), f64>>,
    source_cache: Mutex<HashMap<(usize, u64), f64>>,
}

impl std::fmt::Debug for FieldSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSolution")
            .field("rho", &self.rho)
            .field("t_end", &self.t_end)
            .field("spectrum", &self.spectrum.to_string())
            .field("source", &self.source)
            .finish()
    }
}

fn check_horizon(t_end: f64) -> Result<()> {
    if t_end > 0.0 && t_end.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            "T",
            format!("must be positive and finite, got {t_end}"),
        ))
    }
}

/// `u_k(t) = t^{ρ-1} E_{ρ,ρ}(-λ_k t^ρ) φ_k`.
pub fn solve_homogeneous(
    phi: &CoefVector,
    s: &Spectrum,
    rho: FractionalOrder,
    t_end: f64,
) -> Result<FieldSolution> {
    solve_forward(phi, None, s, rho, t_end)
}

/// Homogeneous evolution of `φ` plus the convolution of the kernel with `f`.
pub fn solve_forward(
    phi: &CoefVector,
    f: Option<&SourceTerm>,
    s: &Spectrum,
    rho: FractionalOrder,
    t_end: f64,
) -> Result<FieldSolution> {
    s.check(phi)?;
    check_horizon(t_end)?;
    if let Some(f) = f {
        if f.spectrum_id() != s.id() {
            return Err(Error::SpectrumMismatch);
        }
    }
    Ok(FieldSolution {
        spectrum: s.clone(),
        rho,
        t_end,
        phi: phi.clone(),
        source: f.cloned(),
        kernel: MittagLeffler::shared(rho.get(), rho.get(), &MlfConfig::default())?,
        rule: gauss_jacobi(rho.get(), DEFAULT_NODES)?,
        kernel_cache: Mutex::new(HashMap::new()),
        source_cache: Mutex::new(HashMap::new()),
    })
}

impl FieldSolution {
    pub fn rho(&self) -> FractionalOrder {
        self.rho
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn source(&self) -> Option<&SourceTerm> {
        self.source.as_ref()
    }

    /// `lim_{t→0} Γ(ρ) t^{1-ρ} u(t)`, which equals `φ`.
    pub fn weighted_initial(&self) -> &CoefVector {
        &self.phi
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t > 0.0 && t <= self.t_end * (1.0 + 4.0 * f64::EPSILON) {
            Ok(())
        } else {
            Err(invalid(
                "t",
                format!("must lie in (0, {}], got {t}", self.t_end),
            ))
        }
    }

    fn cached(
        cache: &Mutex<HashMap<(usize, u64), f64>>,
        key: (usize, u64),
        compute: impl FnOnce() -> Result<f64>,
    ) -> Result<f64> {
        if let Some(v) = cache.lock().expect("solution cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = compute()?;
        cache
            .lock()
            .expect("solution cache poisoned")
            .insert(key, v);
        Ok(v)
    }

    /// `t^{ρ-1} E_{ρ,ρ}(-λ_k t^ρ)` for zero-based mode `k`.
    pub fn kernel_value(&self, k: usize, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let lambda = self.spectrum.eigenvalues()[k];
        Self::cached(&self.kernel_cache, (k, t.to_bits()), || {
            kernel_with(&self.kernel, lambda, t)
        })
    }

    /// The convolution part of mode `k` (zero-based).
    pub fn source_value(&self, k: usize, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let Some(f) = self.source.as_ref().and_then(|s| s.mode(k)) else {
            return Ok(0.0);
        };
        let lambda = self.spectrum.eigenvalues()[k];
        Self::cached(&self.source_cache, (k, t.to_bits()), || {
            convolve(&self.kernel, f, lambda, t, &self.rule)
        })
    }

    /// `u_k(t)` for zero-based mode `k`.
    pub fn mode_value(&self, k: usize, t: f64) -> Result<f64> {
        if k >= self.spectrum.len() {
            return Err(invalid("k", format!("mode index {k} out of range")));
        }
        let phi = self.phi.values()[k];
        let hom = if phi == 0.0 {
            0.0
        } else {
            phi * self.kernel_value(k, t)?
        };
        Ok(hom + self.source_value(k, t)?)
    }

    /// `u(t)` as a coefficient vector.
    pub fn eval(&self, t: f64) -> Result<CoefVector> {
        self.check_time(t)?;
        let values: Vec<Result<f64>> = (0..self.spectrum.len())
            .into_par_iter()
            .map(|k| self.mode_value(k, t))
            .collect();
        self.spectrum
            .coefs(values.into_iter().collect::<Result<Vec<f64>>>()?)
    }

    /// `d^m/dt^m u_k(t)` of the homogeneous part; errors when a source is present.
    pub fn mode_derivative(&self, k: usize, t: f64, m: u32) -> Result<f64> {
        if self.source.is_some() {
            return Err(invalid(
                "u",
                "derivatives are available for homogeneous solutions only",
            ));
        }
        self.check_time(t)?;
        let phi = self.phi.values()[k];
        if phi == 0.0 {
            return Ok(0.0);
        }
        Ok(phi * crate::mlf::kernel_dm(self.rho, self.spectrum.eigenvalues()[k], t, m)?)
    }

    /// `Γ(ρ) t^{1-ρ} u(t)`, which tends to the weighted initial datum.
    pub fn weighted_value(&self, t: f64) -> Result<CoefVector> {
        let r = self.rho.get();
        Ok(self.eval(t)?.scaled(t.powf(1.0 - r) / rgamma(r)))
    }

    /// Rows `t,k,u_k(t)` for every grid time and mode.
    pub fn write_csv<W: Write>(&self, t_grid: &[f64], mut w: W) -> Result<()> {
        writeln!(w, "t,k,u_k")?;
        for &t in t_grid {
            let u = self.eval(t)?;
            for (i, v) in u.values().iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{}",
                    crate::fmt_sig17(t),
                    i + 1,
                    crate::fmt_sig17(*v)
                )?;
            }
        }
        Ok(())
    }
}

impl ModalTrajectory for FieldSolution {
    fn mode_count(&self) -> usize {
        self.spectrum.len()
    }

    fn mode_value(&self, k: usize, t: f64) -> Result<f64> {
        FieldSolution::mode_value(self, k, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRow {
    pub t: f64,
    pub norm: f64,
    /// `t^{ρ-1} / (1 + (λ_1 t^ρ)²)`.
    pub envelope: f64,
    pub ratio: f64,
}

/// `‖u(t)‖` against the envelope `t^{ρ-1}/(1+(λ_1 t^ρ)²)` on a time grid.
pub fn decay_profile(u: &FieldSolution, t_grid: &[f64]) -> Result<Vec<DecayRow>> {
    if u.source.is_some() {
        return Err(invalid("u", "decay profile needs a homogeneous solution"));
    }
    let r = u.rho.get();
    let l1 = u.spectrum.eigenvalues()[0];
    t_grid
        .iter()
        .map(|&t| {
            let norm = u.eval(t)?.norm();
            let x = l1 * t.powf(r);
            let envelope = t.powf(r - 1.0) / (1.0 + x * x);
            Ok(DecayRow {
                t,
                norm,
                envelope,
                ratio: norm / envelope,
            })
        })
        .collect()
}

pub fn write_profile_csv<W: Write>(rows: &[DecayRow], mut w: W) -> Result<()> {
    writeln!(w, "t,norm,envelope,ratio")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            crate::fmt_sig17(r.t),
            crate::fmt_sig17(r.norm),
            crate::fmt_sig17(r.envelope),
            crate::fmt_sig17(r.ratio)
        )?;
    }
    Ok(())
}
