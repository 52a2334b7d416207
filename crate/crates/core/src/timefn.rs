//! Scalar functions of time, optionally carrying a declared `t^{β-1}` singularity at 0.

use crate::error::{invalid, Result};

pub trait TimeFunction: Send + Sync {
    fn eval(&self, t: f64) -> f64;

    /// `Some(β)` when `eval(t) = t^{β-1} g(t)` with `g` continuous on `[0, T]`.
    fn singular_exponent(&self) -> Option<f64> {
        None
    }

    /// The factor `g` above; equal to `eval` when no singularity is declared.
    fn regular_part(&self, t: f64) -> f64 {
        match self.singular_exponent() {
            Some(b) => t.powf(1.0 - b) * self.eval(t),
            None => self.eval(t),
        }
    }
}

impl<F> TimeFunction for F
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

/// `t^{β-1} g(t)` given the regular factor `g`.
#[derive(Clone, Debug)]
pub struct WeaklySingular<G> {
    exponent: f64,
    regular: G,
}

impl<G: Fn(f64) -> f64 + Send + Sync> WeaklySingular<G> {
    pub fn new(exponent: f64, regular: G) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(invalid(
                "exponent",
                format!("must be positive, got {exponent}"),
            ));
        }
        Ok(Self { exponent, regular })
    }
}

impl<G: Fn(f64) -> f64 + Send + Sync> TimeFunction for WeaklySingular<G> {
    fn eval(&self, t: f64) -> f64 {
        t.powf(self.exponent - 1.0) * (self.regular)(t)
    }
    fn singular_exponent(&self) -> Option<f64> {
        Some(self.exponent)
    }
    fn regular_part(&self, t: f64) -> f64 {
        (self.regular)(t)
    }
}

/// A function known only through its values, declared to behave like `t^{β-1}` at 0.
#[derive(Clone, Debug)]
pub struct DeclaredSingular<F> {
    exponent: f64,
    f: F,
}

impl<F: Fn(f64) -> f64 + Send + Sync> DeclaredSingular<F> {
    pub fn new(exponent: f64, f: F) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(invalid(
                "exponent",
                format!("must be positive, got {exponent}"),
            ));
        }
        Ok(Self { exponent, f })
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> TimeFunction for DeclaredSingular<F> {
    fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }
    fn singular_exponent(&self) -> Option<f64> {
        Some(self.exponent)
    }
}

/// Piecewise-linear interpolation of tabulated values, constant beyond the ends.
/// With a declared exponent the table holds the regular factor `g`.
#[derive(Clone, Debug)]
pub struct Sampled {
    times: Vec<f64>,
    values: Vec<f64>,
    exponent: Option<f64>,
}

impl Sampled {
    pub fn new(times: Vec<f64>, values: Vec<f64>, exponent: Option<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(invalid(
                "samples",
                "need at least two (t, value) pairs of equal length",
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("samples", "times must be strictly increasing"));
        }
        if let Some(b) = exponent {
            if !(b > 0.0 && b.is_finite()) {
                return Err(invalid("exponent", format!("must be positive, got {b}")));
            }
        }
        Ok(Self {
            times,
            values,
            exponent,
        })
    }

    fn interp(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }
}

impl TimeFunction for Sampled {
    fn eval(&self, t: f64) -> f64 {
        match self.exponent {
            Some(b) => t.powf(b - 1.0) * self.interp(t),
            None => self.interp(t),
        }
    }
    fn singular_exponent(&self) -> Option<f64> {
        self.exponent
    }
    fn regular_part(&self, t: f64) -> f64 {
        self.interp(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_interpolates_regular_part() {
        let s = Sampled::new(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 3.0], Some(0.5)).unwrap();
        assert_eq!(s.regular_part(0.5), 2.0);
        assert!((s.eval(0.25) - 0.25f64.powf(-0.5) * 1.5).abs() < 1e-15);
        assert_eq!(s.regular_part(5.0), 3.0);
    }

    #[test]
    fn declared_singular_regular_part() {
        let f = DeclaredSingular::new(0.5, |t: f64| 2.0 / t.sqrt()).unwrap();
        assert!((f.regular_part(0.01) - 2.0).abs() < 1e-15);
    }
}
