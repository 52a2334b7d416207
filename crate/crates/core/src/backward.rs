//! Backward problem: recover the weighted initial datum `φ` from the terminal state
//! `u(T) = Φ`, directly by mode division when `f = 0` and by splitting off the
//! source-driven part otherwise.

use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::forward::{solve_forward, FieldSolution, SourceTerm};
use crate::mlf::{kernel_with, FractionalOrder, MittagLeffler, MlfConfig};
use crate::spectral::{
    norm_tau, tail_membership, CoefVector, Spectrum, TailReport, DEFAULT_TAIL_FRACTION,
};

/// Divisors below this are treated as lost to underflow.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct BackwardProblem {
    phi_t: CoefVector,
    t_end: f64,
    rho: FractionalOrder,
    spectrum: Spectrum,
    source: Option<SourceTerm>,
}

impl BackwardProblem {
    pub fn new(
        phi_t: CoefVector,
        t_end: f64,
        rho: FractionalOrder,
        spectrum: Spectrum,
        source: Option<SourceTerm>,
    ) -> Result<Self> {
        spectrum.check(&phi_t)?;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(invalid(
                "T",
                format!("must be positive and finite, got {t_end}"),
            ));
        }
        if let Some(f) = &source {
            if f.spectrum_id() != spectrum.id() {
                return Err(Error::SpectrumMismatch);
            }
        }
        Ok(Self {
            phi_t,
            t_end,
            rho,
            spectrum,
            source,
        })
    }

    pub fn terminal(&self) -> &CoefVector {
        &self.phi_t
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn rho(&self) -> FractionalOrder {
        self.rho
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn source(&self) -> Option<&SourceTerm> {
        self.source.as_ref()
    }

    /// Numerical check that `Φ ∈ D(A²)`; `None` when the truncation is too short to judge.
    pub fn solvability(&self) -> Result<Option<TailReport>> {
        if self.spectrum.len() < 10 {
            return Ok(None);
        }
        tail_membership(&self.phi_t, &self.spectrum, 2.0, DEFAULT_TAIL_FRACTION).map(Some)
    }
}

fn divide_by_kernel(
    data: &CoefVector,
    s: &Spectrum,
    rho: FractionalOrder,
    t_end: f64,
) -> Result<CoefVector> {
    let e = MittagLeffler::shared(rho.get(), rho.get(), &MlfConfig::default())?;
    let values: Vec<Result<f64>> = data
        .values()
        .par_iter()
        .zip(s.eigenvalues().par_iter())
        .enumerate()
        .map(|(k, (&phi_k, &lambda))| {
            let divisor = kernel_with(&e, lambda, t_end)?;
            if divisor.is_nan() || divisor < UNDERFLOW_THRESHOLD {
                return Err(Error::Underflow {
                    mode: k + 1,
                    lambda,
                    divisor,
                });
            }
            Ok(phi_k / divisor)
        })
        .collect();
    s.coefs(values.into_iter().collect::<Result<Vec<f64>>>()?)
}

/// `φ_k = Φ_k / (T^{ρ-1} E_{ρ,ρ}(-λ_k T^ρ))`; requires a zero source.
pub fn recover_initial(p: &BackwardProblem) -> Result<CoefVector> {
    if p.source.is_some() {
        return Err(invalid(
            "source",
            "direct recovery needs a zero source; use solve_backward",
        ));
    }
    divide_by_kernel(&p.phi_t, &p.spectrum, p.rho, p.t_end)
}

/// Recover `φ` and the full solution `u` with `u(T) = Φ`.
///
/// With a source, `v` solves the forward problem from zero weighted initial data and
/// the homogeneous backward problem is solved for `Φ - v(T)`.
pub fn solve_backward(p: &BackwardProblem) -> Result<(CoefVector, FieldSolution)> {
    let data = match &p.source {
        None => p.phi_t.clone(),
        Some(f) => {
            let v = solve_forward(&p.spectrum.zeros(), Some(f), &p.spectrum, p.rho, p.t_end)?;
            p.phi_t.combine(1.0, &v.eval(p.t_end)?, -1.0)?
        }
    };
    let phi = divide_by_kernel(&data, &p.spectrum, p.rho, p.t_end)?;
    let u = solve_forward(&phi, p.source.as_ref(), &p.spectrum, p.rho, p.t_end)?;
    Ok((phi, u))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub lambda: f64,
    /// `‖Φ^{(k)}‖ = λ_k^{-2+ε}`.
    pub phi_t_norm: f64,
    /// `‖Φ^{(k)}‖_2 = λ_k^ε`.
    pub phi_t_norm2: f64,
    pub phi_norm: f64,
    /// `‖φ^{(k)}‖ / ‖Φ^{(k)}‖`.
    pub amplification: f64,
}

/// Recover `φ^{(k)}` from `Φ^{(k)} = λ_k^{-2+ε} e_k` for each `k` in `k_range` (from 1).
pub fn illposedness_sweep(
    s: &Spectrum,
    rho: FractionalOrder,
    t_end: f64,
    epsilon: f64,
    k_range: RangeInclusive<usize>,
) -> Result<Vec<SweepRow>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(
            "epsilon",
            format!("must be positive, got {epsilon}"),
        ));
    }
    if *k_range.start() == 0 || *k_range.end() > s.len() || k_range.is_empty() {
        return Err(invalid(
            "k_range",
            format!("must lie within 1..={}", s.len()),
        ));
    }
    let rows: Vec<Result<SweepRow>> = k_range
        .into_par_iter()
        .map(|k| {
            let lambda = s.eigenvalues()[k - 1];
            let phi_t = s.unit(k)?.scaled(lambda.powf(epsilon - 2.0));
            let p = BackwardProblem::new(phi_t, t_end, rho, s.clone(), None)?;
            let phi = recover_initial(&p)?;
            let phi_t_norm = p.phi_t.norm();
            let phi_norm = phi.norm();
            Ok(SweepRow {
                k,
                lambda,
                phi_t_norm,
                phi_t_norm2: norm_tau(&p.phi_t, s, 2.0)?,
                phi_norm,
                amplification: phi_norm / phi_t_norm,
            })
        })
        .collect();
    rows.into_iter().collect()
}

/// Least-squares slope of `ln(amplification)` against `ln λ` over the largest decade
/// of `λ` present in `rows`.
pub fn amplification_slope(rows: &[SweepRow]) -> Result<f64> {
    let l_max = rows.iter().map(|r| r.lambda).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.lambda >= l_max / 10.0)
        .map(|r| (r.lambda.ln(), r.amplification.ln()))
        .collect();
    loglog_slope(&pts).ok_or_else(|| {
        invalid(
            "rows",
            "need at least two distinct eigenvalues in the top decade",
        )
    })
}

/// Ordinary least-squares slope; `None` for fewer than two distinct abscissae.
pub fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `‖Φ‖_2 / ‖φ‖` for a homogeneous problem with nonzero data.
pub fn stability_ratio(p: &BackwardProblem) -> Result<f64> {
    if p.phi_t.is_zero() {
        return Err(Error::ZeroData);
    }
    let phi = recover_initial(p)?;
    Ok(norm_tau(&p.phi_t, &p.spectrum, 2.0)? / phi.norm())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "k,norm_Phi,norm2_Phi,norm_phi,amplification")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.k,
            crate::fmt_sig17(r.phi_t_norm),
            crate::fmt_sig17(r.phi_t_norm2),
            crate::fmt_sig17(r.phi_norm),
            crate::fmt_sig17(r.amplification)
        )?;
    }
    Ok(())
}
