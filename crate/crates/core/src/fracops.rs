//! Riemann-Liouville integrals by singular-weight quadrature, Grünwald-Letnikov
//! derivatives, and the equation residual built from them.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::forward::SourceTerm;
use crate::gamma::rgamma;
use crate::mlf::FractionalOrder;
use crate::spectral::Spectrum;
use crate::timefn::TimeFunction;

pub const DEFAULT_NODES: usize = 32;
pub const DEFAULT_GL_STEPS: usize = 4096;
pub const MAX_NODES: usize = 128;
/// Number of modes checked by `residual`.
pub const RESIDUAL_MODES: usize = 8;

/// The start value matches the mass of `u` on `[0, T/START_DIVISOR]`.
pub const START_DIVISOR: usize = 32;

const PANEL_RATIO: f64 = 4.0;
const PANELS: usize = 10;

/// Gauss rule for `∫_0^1 x^{β-1} h(x) dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    exponent: f64,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// `Σ w_i h(x_i)`.
    pub fn apply(&self, mut h: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * h(x))
            .sum()
    }

    /// `∫_lo^hi h` for a unit-weight rule mapped onto `[lo, hi]`.
    fn panel(&self, lo: f64, hi: f64, mut h: impl FnMut(f64) -> f64) -> f64 {
        let len = hi - lo;
        len * self.apply(|x| h(lo + len * x))
    }
}

/// Gauss-Jacobi rule with weight `x^{β-1}` on `[0, 1]`, by Golub-Welsch.
///
/// `β = 1` gives Gauss-Legendre. Nodes come from the symmetric tridiagonal Jacobi
/// matrix; weights from the Christoffel numbers of the orthonormal recurrence, which
/// keeps small weights accurate to full relative precision.
pub fn gauss_jacobi(exponent: f64, n: usize) -> Result<QuadratureRule> {
    if !(exponent > 0.0 && exponent.is_finite()) {
        return Err(invalid(
            "exponent",
            format!("must be positive, got {exponent}"),
        ));
    }
    if n == 0 || n > MAX_NODES {
        return Err(invalid(
            "n",
            format!("must lie in 1..={MAX_NODES}, got {n}"),
        ));
    }
    // Jacobi (α, β) = (0, exponent - 1) on [-1, 1], shifted to [0, 1].
    let b = exponent - 1.0;
    let diag: Vec<f64> = (0..n)
        .map(|k| {
            let a = if k == 0 {
                b / (b + 2.0)
            } else {
                let s = 2.0 * k as f64 + b;
                b * b / (s * (s + 2.0))
            };
            0.5 * (1.0 + a)
        })
        .collect();
    // off[k] couples rows k-1 and k, for k = 1..=n (off[n] is used by Newton polishing).
    let off: Vec<f64> = (0..=n)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            let k = k as f64;
            let s = 2.0 * k + b;
            let bk = 4.0 * k * k * (k + b) * (k + b) / (s * s * (s + 1.0) * (s - 1.0));
            0.5 * bk.sqrt()
        })
        .collect();
    let mu0 = 1.0 / exponent;

    let mut nodes = if n == 1 {
        vec![diag[0]]
    } else {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = diag[k];
            if k + 1 < n {
                m[(k, k + 1)] = off[k + 1];
                m[(k + 1, k)] = off[k + 1];
            }
        }
        let eig =
            SymmetricEigen::try_new(m, f64::EPSILON, 10_000).ok_or(Error::EigenSolver { n })?;
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    };

    // Orthonormal polynomials p_0..p_n at x: off[k+1] p_{k+1} = (x - diag[k]) p_k - off[k] p_{k-1}.
    let orthonormal = |x: f64| -> (f64, f64, f64) {
        let (mut p_prev, mut p) = (0.0, 1.0 / mu0.sqrt());
        let (mut d_prev, mut d) = (0.0, 0.0);
        let mut sum_sq = p * p;
        for k in 0..n {
            let p_next = ((x - diag[k]) * p - off[k] * p_prev) / off[k + 1];
            let d_next = (p + (x - diag[k]) * d - off[k] * d_prev) / off[k + 1];
            if k + 1 < n {
                sum_sq += p_next * p_next;
            }
            (p_prev, p) = (p, p_next);
            (d_prev, d) = (d, d_next);
        }
        (p, d, sum_sq)
    };

    for x in nodes.iter_mut() {
        let (p, d, _) = orthonormal(*x);
        let step = p / d;
        if step.is_finite() && step.abs() < 1e-8 * x.abs().max(1e-300) {
            *x -= step;
        }
    }
    let weights: Vec<f64> = nodes.iter().map(|&x| 1.0 / orthonormal(x).2).collect();

    if nodes.first().is_some_and(|&x| x <= 0.0)
        || nodes.last().is_some_and(|&x| x >= 1.0)
        || nodes.windows(2).any(|w| w[1] <= w[0])
        || weights.iter().any(|w| w.is_nan() || *w <= 0.0)
    {
        return Err(Error::EigenSolver { n });
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        exponent,
    })
}

pub(crate) fn legendre16() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_jacobi(1.0, 16).expect("16-point Gauss-Legendre rule"))
}

/// `∫_0^top h` with Gauss-Legendre panels graded geometrically towards 0.
pub(crate) fn graded_integral(top: f64, panels: usize, mut h: impl FnMut(f64) -> f64) -> f64 {
    let gl = legendre16();
    let mut hi = top;
    let mut total = 0.0;
    for _ in 0..panels {
        let lo = hi / PANEL_RATIO;
        total += gl.panel(lo, hi, &mut h);
        hi = lo;
    }
    total + gl.panel(0.0, hi, &mut h)
}

/// `∫_0^top s^{β-1} g(s) ds`, integrated in `τ = s^β` so that expansions of `g` in
/// powers of `s^β` become polynomial.
pub(crate) fn graded_singular_integral(
    beta: f64,
    top: f64,
    panels: usize,
    mut g: impl FnMut(f64) -> f64,
) -> f64 {
    let inv = 1.0 / beta;
    graded_integral(top.powf(beta), panels, |tau| g(tau.powf(inv))) * inv
}

/// `(1/Γ(α)) ∫_0^t (t-s)^{α-1} h(s) ds`.
///
/// The Gauss-Jacobi `rule` (exponent `α`) covers `[t/2, t]`, where the kernel is
/// singular. On `[0, t/2]` a declared singularity `s^{β-1}` of `h` is removed by the
/// substitution `τ = s^β`, followed by graded Gauss-Legendre panels.
pub fn rl_integral(h: &dyn TimeFunction, order: f64, t: f64, rule: &QuadratureRule) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    if !(order > 0.0 && order.is_finite()) {
        return Err(invalid("order", format!("must be positive, got {order}")));
    }
    if (rule.exponent - order).abs() > 1e-14 {
        return Err(invalid(
            "rule",
            format!("exponent {} does not match order {order}", rule.exponent),
        ));
    }
    let half = 0.5 * t;
    let top = half.powf(order) * rule.apply(|x| h.eval(t - half * x));
    let bottom = match h.singular_exponent() {
        Some(beta) => graded_singular_integral(beta, half, PANELS, |s| {
            h.regular_part(s) * (t - s).powf(order - 1.0)
        }),
        None => graded_integral(half, PANELS, |s| h.eval(s) * (t - s).powf(order - 1.0)),
    };
    Ok((top + bottom) * rgamma(order))
}

/// Grünwald-Letnikov weights `w_0 = 1, w_i = w_{i-1}(1 - (ρ+1)/i)`.
pub fn gl_weights(rho: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0);
    for i in 1..=n {
        let prev = w[i - 1];
        w.push(prev * (1.0 - (rho + 1.0) / i as f64));
    }
    w
}

/// `D^ρ f(t_j) ≈ h^{-ρ} Σ_{i=0}^{j} w_i f(t_{j-i})` for samples at `t_j = j h`.
pub fn gl_derivative(samples: &[f64], h: f64, rho: FractionalOrder) -> Result<Vec<f64>> {
    if samples.len() < 5 {
        return Err(invalid(
            "samples",
            "need at least five grid values (n >= 4)",
        ));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("grid step must be positive, got {h}")));
    }
    let rho = rho.get();
    let w = gl_weights(rho, samples.len() - 1);
    let scale = h.powf(-rho);
    Ok((0..samples.len())
        .map(|j| scale * (0..=j).map(|i| w[i] * samples[j - i]).sum::<f64>())
        .collect())
}

/// Uniform grid `t_j = j T / steps`, `j = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformGrid {
    t_end: f64,
    steps: usize,
}

impl UniformGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(invalid("T", format!("must be positive, got {t_end}")));
        }
        if steps < 2 * START_DIVISOR {
            return Err(invalid(
                "steps",
                format!("need at least {} steps", 2 * START_DIVISOR),
            ));
        }
        Ok(Self { t_end, steps })
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.step()
    }
}

/// Anything whose modal components can be sampled in time.
pub trait ModalTrajectory: Sync {
    fn mode_count(&self) -> usize;
    /// `u_k(t)` for zero-based mode index `k`.
    fn mode_value(&self, k: usize, t: f64) -> Result<f64>;
}

/// Placeholder for `f(0)` making the Grünwald-Letnikov sum consistent with the true
/// mass of `f` near the origin, where `f ~ t^{ρ-1}` has no finite value.
///
/// Chosen so that `h (f_0 + f_1 + … + f_{M-1} + f_M/2) = ∫_0^{Mh} f` with `M = cells`.
pub fn start_value(f: &dyn TimeFunction, samples: &[f64], h: f64, cells: usize) -> Result<f64> {
    if cells == 0 || samples.len() <= cells {
        return Err(invalid(
            "cells",
            format!("need 0 < cells < {}", samples.len()),
        ));
    }
    let top = cells as f64 * h;
    let mass = match f.singular_exponent() {
        Some(beta) => graded_singular_integral(beta, top, PANELS, |s| f.regular_part(s)),
        None => graded_integral(top, PANELS, |s| f.eval(s)),
    };
    let inner: f64 = samples[1..cells].iter().sum();
    Ok(mass / h - inner - 0.5 * samples[cells])
}

struct ModeOf<'a> {
    u: &'a dyn ModalTrajectory,
    k: usize,
}

impl TimeFunction for ModeOf<'_> {
    fn eval(&self, t: f64) -> f64 {
        self.u.mode_value(self.k, t).unwrap_or(f64::NAN)
    }
}

/// Largest normalized residual `|D^ρ u_k + λ_k u_k - f_k|` over the first
/// `min(K, 8)` modes and grid points in `[0.2T, T]`.
///
/// Each term is divided by `max(1, λ_k max|u_k|)`, the maximum taken over the same
/// window. The value at `t = 0` is replaced by `start_value`.
pub fn residual(
    u: &dyn ModalTrajectory,
    f: Option<&SourceTerm>,
    s: &Spectrum,
    rho: FractionalOrder,
    grid: &UniformGrid,
) -> Result<f64> {
    let k_check = s.len().min(RESIDUAL_MODES).min(u.mode_count());
    if let Some(f) = f {
        if f.len() != s.len() {
            return Err(Error::SpectrumMismatch);
        }
    }
    let per_mode: Vec<Result<f64>> = (0..k_check)
        .into_par_iter()
        .map(|k| mode_residual(u, f, s.eigenvalues()[k], k, rho, grid))
        .collect();
    per_mode
        .into_iter()
        .try_fold(0.0_f64, |acc, r| Ok(acc.max(r?)))
}

fn mode_residual(
    u: &dyn ModalTrajectory,
    f: Option<&SourceTerm>,
    lambda: f64,
    k: usize,
    rho: FractionalOrder,
    grid: &UniformGrid,
) -> Result<f64> {
    let n = grid.steps();
    let h = grid.step();
    let mut samples = vec![0.0; n + 1];
    for (j, v) in samples.iter_mut().enumerate().skip(1) {
        *v = u.mode_value(k, grid.time(j))?;
    }
    if samples[1..].iter().any(|v| !v.is_finite()) {
        return Err(invalid("u", format!("non-finite value in mode {}", k + 1)));
    }
    if samples[1..].iter().any(|&v| v != 0.0) {
        let mode = ModeOf { u, k };
        let declared = crate::timefn::DeclaredSingular::new(rho.get(), |t| mode.eval(t))?;
        samples[0] = start_value(&declared, &samples, h, (n / START_DIVISOR).max(1))?;
    }
    let d = gl_derivative(&samples, h, rho)?;
    let first = (0.2 * n as f64).ceil() as usize;
    let source = f.and_then(|f| f.mode(k));
    let u_max = samples[first..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let norm = (lambda * u_max).max(1.0);
    let mut worst = 0.0_f64;
    for j in first..=n {
        let fj = source.map_or(0.0, |g| g.eval(grid.time(j)));
        worst = worst.max((d[j] + lambda * samples[j] - fj).abs());
    }
    Ok(worst / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_rule() {
        for &r in &[0.2, 0.5, 0.9] {
            let q = gauss_jacobi(r, 1).unwrap();
            assert!((q.nodes()[0] - r / (r + 1.0)).abs() < 1e-15);
            assert!((q.weights()[0] - 1.0 / r).abs() < 1e-14);
        }
    }

    #[test]
    fn legendre_two_point() {
        let q = gauss_jacobi(1.0, 2).unwrap();
        let d = 0.5 / 3f64.sqrt();
        assert!((q.nodes()[0] - (0.5 - d)).abs() < 1e-15);
        assert!((q.nodes()[1] - (0.5 + d)).abs() < 1e-15);
        assert!((q.weights()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gl_weights_sum_to_zero_in_the_limit() {
        // Σ w_i = 0 for ρ > 0; partial sums decay like i^{-ρ}.
        let w = gl_weights(0.5, 100_000);
        let s: f64 = w.iter().sum();
        assert!(s.abs() < 5e-3);
    }

    #[test]
    fn grid_validation() {
        assert!(UniformGrid::new(1.0, 10).is_err());
        assert!(UniformGrid::new(0.0, 4096).is_err());
        let g = UniformGrid::new(2.0, 4096).unwrap();
        assert_eq!(g.time(4096), 2.0);
    }
}
