//! Two-parameter Mittag-Leffler function `E_{ρ,μ}(z)` on the non-positive real axis,
//! and the solution kernel `t^{ρ-1} E_{ρ,ρ}(-λ t^ρ)` with its time derivatives.
//!
//! Three regimes are used, selected on the scaled magnitude `s = |z|^{1/ρ}`:
//! a plain power series, the same series summed in double-double, and the
//! algebraic asymptotic expansion. Each returns an error estimate; when the preferred
//! regime misses the target the other one is tried before giving up.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::gamma::{ln_gamma, rgamma_dd};

/// Fractional order `ρ ∈ (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(rho: f64) -> Result<Self> {
        if rho > 0.0 && rho < 1.0 {
            Ok(Self(rho))
        } else {
            Err(Error::InvalidOrder(rho))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;
    fn try_from(rho: f64) -> Result<Self> {
        Self::new(rho)
    }
}

/// Regime thresholds, expressed in `s = |z|^{1/ρ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlfConfig {
    /// Below this the plain `f64` series is tried first.
    pub series_cutoff: f64,
    /// At or above this the asymptotic expansion is tried first.
    pub asymptotic_cutoff: f64,
    pub target_rel_err: f64,
    pub max_terms: usize,
}

impl Default for MlfConfig {
    fn default() -> Self {
        Self {
            series_cutoff: 2.0,
            asymptotic_cutoff: 40.0,
            target_rel_err: 1e-11,
            max_terms: 600,
        }
    }
}

impl MlfConfig {
    /// Configuration used for derivatives of the kernel, whose second parameter is
    /// `ρ - m`. These are worse conditioned near the regime crossover.
    pub fn for_derivatives() -> Self {
        Self {
            target_rel_err: 1e-9,
            ..Self::default()
        }
    }

    fn key(&self) -> [u64; 4] {
        [
            self.series_cutoff.to_bits(),
            self.asymptotic_cutoff.to_bits(),
            self.target_rel_err.to_bits(),
            self.max_terms as u64,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Origin,
    Series,
    ExtendedSeries,
    Asymptotic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub regime: Regime,
    /// Estimated relative error.
    pub rel_err: f64,
}

/// Precomputed coefficient tables for one `(ρ, μ)` pair.
#[derive(Debug)]
pub struct MittagLeffler {
    rho: f64,
    mu: f64,
    config: MlfConfig,
    /// `1/Γ(ρn + μ)`.
    series: Vec<DoubleDouble>,
    /// Signed asymptotic coefficients: the `n`-th term is `asym[n] · t^{-n}` for `z = -t`.
    asym: Vec<f64>,
    /// `ln` of an upper bound for `|asym[n]|` that varies smoothly in `n`.
    asym_log_env: Vec<f64>,
}

type CacheKey = (u64, u64, [u64; 4]);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<MittagLeffler>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<MittagLeffler>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

const LN_PI: f64 = 1.144_729_885_849_400_2;

impl MittagLeffler {
    pub fn new(rho: f64, mu: f64, config: MlfConfig) -> Result<Self> {
        // The evaluator also accepts ρ = 1 (the exponential family) for cross-checks.
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidOrder(rho));
        }
        if !mu.is_finite() {
            return Err(crate::error::invalid("mu", "must be finite"));
        }
        if !(config.series_cutoff > 0.0 && config.asymptotic_cutoff >= config.series_cutoff) {
            return Err(crate::error::invalid(
                "config",
                "need 0 < series_cutoff <= asymptotic_cutoff",
            ));
        }
        if config.max_terms < 8 {
            return Err(crate::error::invalid(
                "config",
                "max_terms must be at least 8",
            ));
        }

        // Series: enough terms to reach far past the peak at the largest s the series may see.
        let s_max = 1.25 * config.asymptotic_cutoff;
        let ln_s = s_max.ln();
        let mut series = Vec::new();
        let mut peak = f64::NEG_INFINITY;
        for n in 0..config.max_terms {
            let x = DoubleDouble::from_prod(rho, n as f64).add_f64(mu);
            series.push(rgamma_dd(x));
            if x.hi > 1.0 {
                let l = rho * n as f64 * ln_s - ln_gamma(x.hi);
                peak = peak.max(l);
                if x.hi > s_max && l < peak - 80.0 {
                    break;
                }
            }
            if x.hi > 170.0 {
                break;
            }
        }

        // Asymptotic: E_{ρ,μ}(-t) ~ -Σ_{n≥1} (-t)^{-n} / Γ(μ - ρn).
        let mut asym = vec![0.0];
        let mut asym_log_env = vec![f64::INFINITY];
        for n in 1..config.max_terms {
            let x = DoubleDouble::from_f64(mu) - DoubleDouble::from_prod(rho, n as f64);
            if x.hi < -170.0 {
                break;
            }
            let c = rgamma_dd(x).to_f64();
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            asym.push(sign * c);
            let reflected = 1.0 - x.hi;
            let mut env = if c != 0.0 {
                c.abs().ln()
            } else {
                f64::NEG_INFINITY
            };
            if reflected > 0.0 {
                env = env.max(ln_gamma(reflected) - LN_PI);
            }
            asym_log_env.push(env);
        }

        Ok(Self {
            rho,
            mu,
            config,
            series,
            asym,
            asym_log_env,
        })
    }

    /// Shared, lazily built evaluator for `(ρ, μ, config)`.
    pub fn shared(rho: f64, mu: f64, config: &MlfConfig) -> Result<Arc<Self>> {
        let key = (rho.to_bits(), mu.to_bits(), config.key());
        if let Some(e) = cache().lock().expect("mlf cache poisoned").get(&key) {
            return Ok(Arc::clone(e));
        }
        let built = Arc::new(Self::new(rho, mu, *config)?);
        let mut guard = cache().lock().expect("mlf cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(built)))
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn config(&self) -> &MlfConfig {
        &self.config
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        self.evaluate(z).map(|e| e.value)
    }

    /// Evaluate with regime selection, reporting which regime produced the value.
    pub fn evaluate(&self, z: f64) -> Result<Evaluation> {
        if !z.is_finite() {
            return Err(crate::error::invalid("z", "must be finite"));
        }
        if z == 0.0 {
            return Ok(Evaluation {
                value: self.series[0].to_f64(),
                regime: Regime::Origin,
                rel_err: 0.0,
            });
        }
        let s = z.abs().powf(1.0 / self.rho);
        let target = self.config.target_rel_err;
        let order: &[Regime] = if z > 0.0 || self.rho == 1.0 {
            &[Regime::Series, Regime::ExtendedSeries]
        } else if s < self.config.series_cutoff {
            &[Regime::Series, Regime::ExtendedSeries, Regime::Asymptotic]
        } else if s < self.config.asymptotic_cutoff {
            &[Regime::ExtendedSeries, Regime::Asymptotic]
        } else {
            &[Regime::Asymptotic, Regime::ExtendedSeries]
        };
        let mut best: Option<Evaluation> = None;
        for &regime in order {
            let e = self.evaluate_in(regime, z);
            if e.rel_err <= target {
                return Ok(e);
            }
            if best.is_none_or(|b| e.rel_err < b.rel_err) {
                best = Some(e);
            }
        }
        Err(Error::NonConvergence {
            rho: self.rho,
            mu: self.mu,
            z,
            estimate: best.map_or(f64::INFINITY, |b| b.rel_err),
        })
    }

    /// Evaluate in a fixed regime, without fallback. `rel_err` is infinite when the
    /// regime does not apply or its truncation did not settle.
    pub fn evaluate_in(&self, regime: Regime, z: f64) -> Evaluation {
        match regime {
            Regime::Origin => Evaluation {
                value: self.series[0].to_f64(),
                regime,
                rel_err: if z == 0.0 { 0.0 } else { f64::INFINITY },
            },
            Regime::Series => self.series_f64(z),
            Regime::ExtendedSeries => self.series_dd(z),
            Regime::Asymptotic => self.asymptotic(z),
        }
    }

    /// Index past which series terms decrease monotonically.
    fn past_peak(&self, z: f64) -> usize {
        let s = z.abs().powf(1.0 / self.rho);
        (((s - self.mu) / self.rho).ceil().max(1.0)) as usize
    }

    fn series_f64(&self, z: f64) -> Evaluation {
        let n0 = self.past_peak(z);
        let (mut sum, mut abs_sum, mut peak, mut pw) = (0.0_f64, 0.0_f64, 0.0_f64, 1.0_f64);
        let mut converged = false;
        for (n, c) in self.series.iter().enumerate() {
            let a = c.hi * pw;
            sum += a;
            abs_sum += a.abs();
            peak = peak.max(a.abs());
            if n >= n0 && a != 0.0 && a.abs() <= 1e-18 * peak {
                converged = true;
                break;
            }
            pw *= z;
            if !pw.is_finite() {
                break;
            }
        }
        let rel_err = if converged && sum != 0.0 {
            4.0 * f64::EPSILON * abs_sum / sum.abs()
        } else {
            f64::INFINITY
        };
        Evaluation {
            value: sum,
            regime: Regime::Series,
            rel_err,
        }
    }

    fn series_dd(&self, z: f64) -> Evaluation {
        let n0 = self.past_peak(z);
        let mut sum = DoubleDouble::ZERO;
        let mut pw = DoubleDouble::ONE;
        let (mut abs_sum, mut peak) = (0.0_f64, 0.0_f64);
        let mut converged = false;
        for (n, c) in self.series.iter().enumerate() {
            let term = *c * pw;
            sum = sum + term;
            let a = term.hi.abs();
            abs_sum += a;
            peak = peak.max(a);
            if n >= n0 && a != 0.0 && a <= 1e-34 * peak {
                converged = true;
                break;
            }
            pw = pw.mul_f64(z);
            if !pw.is_finite() {
                break;
            }
        }
        let value = sum.to_f64();
        let rel_err = if converged && value != 0.0 {
            (abs_sum * 2f64.powi(-106) / value.abs()).max(f64::EPSILON / 2.0)
        } else {
            f64::INFINITY
        };
        Evaluation {
            value,
            regime: Regime::ExtendedSeries,
            rel_err,
        }
    }

    fn asymptotic(&self, z: f64) -> Evaluation {
        if z >= 0.0 || self.rho == 1.0 {
            return Evaluation {
                value: f64::NAN,
                regime: Regime::Asymptotic,
                rel_err: f64::INFINITY,
            };
        }
        let t = -z;
        let ln_t = t.ln();
        let mut sum = 0.0_f64;
        let mut prev_env = f64::INFINITY;
        let mut err = f64::INFINITY;
        for n in 1..self.asym.len() {
            let log_env = self.asym_log_env[n] - n as f64 * ln_t;
            let env = log_env.exp();
            if env > prev_env {
                // Past the smallest term; the remainder is comparable to it.
                err = 2.0 * env;
                break;
            }
            sum += self.asym[n] * (-(n as f64) * ln_t).exp();
            if env <= 1e-17 * sum.abs() {
                err = env;
                break;
            }
            prev_env = env;
        }
        let rel_err = if sum != 0.0 {
            (err / sum.abs()).max(f64::EPSILON / 2.0)
        } else {
            f64::INFINITY
        };
        Evaluation {
            value: sum,
            regime: Regime::Asymptotic,
            rel_err,
        }
    }
}

/// `E_{ρ,μ}(z)`.
pub fn mlf(rho: f64, mu: f64, z: f64, config: &MlfConfig) -> Result<f64> {
    MittagLeffler::shared(rho, mu, config)?.eval(z)
}

fn check_kernel_args(lambda: f64, t: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(crate::error::invalid(
            "lambda",
            format!("must be finite and >= 0, got {lambda}"),
        ));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(crate::error::invalid(
            "t",
            format!("must be finite and > 0, got {t}"),
        ));
    }
    Ok(())
}

/// `t^{ρ-1} E_{ρ,ρ}(-λ t^ρ)`.
pub fn kernel(rho: FractionalOrder, lambda: f64, t: f64) -> Result<f64> {
    kernel_dm(rho, lambda, t, 0)
}

/// `d^m/dt^m [t^{ρ-1} E_{ρ,ρ}(-λ t^ρ)] = t^{ρ-1-m} E_{ρ,ρ-m}(-λ t^ρ)`.
pub fn kernel_dm(rho: FractionalOrder, lambda: f64, t: f64, m: u32) -> Result<f64> {
    let config = if m == 0 {
        MlfConfig::default()
    } else {
        MlfConfig::for_derivatives()
    };
    let r = rho.get();
    let e = MittagLeffler::shared(r, r - m as f64, &config)?;
    kernel_with(&e, lambda, t)
}

/// Kernel evaluation against an evaluator whose `μ` is `ρ - m`.
pub fn kernel_with(e: &MittagLeffler, lambda: f64, t: f64) -> Result<f64> {
    check_kernel_args(lambda, t)?;
    let r = e.rho();
    let tr = t.powf(r);
    Ok(t.powf(e.mu() - 1.0) * e.eval(-lambda * tr)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn exponential_case() {
        let c = MlfConfig::default();
        assert!(rel(mlf(1.0, 1.0, -1.0, &c).unwrap(), 0.367_879_441_171_442_33) < 1e-15);
    }

    #[test]
    fn value_at_origin() {
        let c = MlfConfig::default();
        assert!(rel(mlf(0.5, 0.5, 0.0, &c).unwrap(), 0.564_189_583_547_756_3) < 1e-15);
        assert_eq!(mlf(0.5, -1.0, 0.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn erfc_case() {
        // E_{1/2,1}(-x) = exp(x²) erfc(x)
        let c = MlfConfig::default();
        assert!(rel(mlf(0.5, 1.0, -1.0, &c).unwrap(), 0.427_583_576_155_807) < 1e-14);
    }

    #[test]
    fn large_argument_uses_asymptotics() {
        let e = MittagLeffler::shared(0.5, 0.5, &MlfConfig::default()).unwrap();
        let v = e.evaluate(-100.0).unwrap();
        assert_eq!(v.regime, Regime::Asymptotic);
        assert!(rel(v.value, 2.8205e-5) < 1e-3);
    }

    #[test]
    fn order_is_validated() {
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(1.0).is_err());
        assert!(FractionalOrder::new(0.999).is_ok());
        assert!(MittagLeffler::new(1.0, 1.0, MlfConfig::default()).is_ok());
    }

    #[test]
    fn kernel_at_zero_lambda() {
        let rho = FractionalOrder::new(0.5).unwrap();
        let k = kernel(rho, 0.0, 4.0).unwrap();
        assert!(rel(k, 0.5 / 1.772_453_850_905_516) < 1e-15);
    }
}
