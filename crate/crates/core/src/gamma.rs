//! Gamma function and its reciprocal.
//!
//! The reciprocal `1/Γ` is entire, so it is the primitive here: it is evaluated in
//! double-double from a Taylor expansion of `1/Γ(1+ε)` on `|ε| <= 1/2` and shifted
//! by the recurrence. `Γ` itself uses reflection for `x < 1/2`.

use crate::dd::DoubleDouble;
use crate::error::GammaError;

/// Distance from a non-positive integer below which `gamma` reports a pole.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Largest argument for which `Γ(x)` is finite in `f64`.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

/// Taylor coefficients of `1/Γ(1+ε)` about `ε = 0`.
const RGAMMA_TAYLOR: [DoubleDouble; 35] = [
    DoubleDouble::new(1.0, 0.0),
    DoubleDouble::new(0.5772156649015329, -4.942915152430645e-18),
    DoubleDouble::new(-0.6558780715202539, 2.137185197068536e-17),
    DoubleDouble::new(-0.04200263503409524, 1.4920306285650505e-18),
    DoubleDouble::new(0.16653861138229148, 1.0189144546842026e-17),
    DoubleDouble::new(-0.04219773455554433, -3.3579992682480134e-18),
    DoubleDouble::new(-0.009621971527876973, -5.300031368830263e-19),
    DoubleDouble::new(0.0072189432466631, -3.6006537063394283e-19),
    DoubleDouble::new(-0.0011651675918590652, 5.659947853880981e-20),
    DoubleDouble::new(-0.00021524167411495098, 2.3758686180729364e-21),
    DoubleDouble::new(0.0001280502823881162, -9.359124499198967e-21),
    DoubleDouble::new(-2.013485478078824e-05, 3.0488773972037385e-23),
    DoubleDouble::new(-1.2504934821426706e-06, -2.66214092271898e-23),
    DoubleDouble::new(1.133027231981696e-06, -4.622235212104869e-23),
    DoubleDouble::new(-2.056338416977607e-07, -3.0061601618645134e-24),
    DoubleDouble::new(6.116095104481416e-09, -2.693458298171306e-25),
    DoubleDouble::new(5.002007644469223e-09, -1.538123614056751e-26),
    DoubleDouble::new(-1.18127457048702e-09, -1.0052356155716208e-25),
    DoubleDouble::new(1.0434267116911005e-10, -2.9298419956825035e-27),
    DoubleDouble::new(7.782263439905071e-12, 4.397255556595848e-28),
    DoubleDouble::new(-3.696805618642206e-12, 2.7050034921703885e-28),
    DoubleDouble::new(5.100370287454476e-13, 2.253001461085878e-29),
    DoubleDouble::new(-2.0583260535665066e-14, -1.4747481491954336e-30),
    DoubleDouble::new(-5.348122539423018e-15, -1.6208384686356568e-31),
    DoubleDouble::new(1.2267786282382608e-15, -5.072915146023867e-32),
    DoubleDouble::new(-1.1812593016974588e-16, 6.422257838149681e-33),
    DoubleDouble::new(1.1866922547516004e-18, -4.2037265494226014e-35),
    DoubleDouble::new(1.4123806553180319e-18, -7.576946701116294e-35),
    DoubleDouble::new(-2.29874568443537e-19, 1.3335481917069145e-36),
    DoubleDouble::new(1.7144063219273374e-20, 5.230715150426935e-38),
    DoubleDouble::new(1.337351730493693e-22, 2.6434059649079228e-39),
    DoubleDouble::new(-2.0542335517666728e-22, 3.6856892424568953e-39),
    DoubleDouble::new(2.736030048608e-23, -2.8599315416397774e-39),
    DoubleDouble::new(-1.7323564459105165e-24, -1.7540883508197598e-40),
    DoubleDouble::new(-2.3606190244992872e-26, -1.260225016995785e-42),
];

/// `1/Γ(x)` in double-double. Exact zeros at the poles; `0` once `Γ` overflows.
pub fn rgamma_dd(x: DoubleDouble) -> DoubleDouble {
    if !x.is_finite() {
        return DoubleDouble::new(f64::NAN, 0.0);
    }
    if x.hi > GAMMA_MAX_ARG + 0.5 {
        return DoubleDouble::ZERO;
    }
    let m = (x.hi - 0.5).floor();
    let x0 = x.add_f64(-m);
    let eps = x0.add_f64(-1.0);
    let mut r = RGAMMA_TAYLOR[RGAMMA_TAYLOR.len() - 1];
    for c in RGAMMA_TAYLOR.iter().rev().skip(1) {
        r = r * eps + *c;
    }
    if m > 0.0 {
        let mut p = x0;
        for j in 1..(m as i64) {
            p = p * x0.add_f64(j as f64);
        }
        r / p
    } else if m < 0.0 {
        let mut p = x;
        for j in 1..(-m as i64) {
            p = p * x.add_f64(j as f64);
        }
        r * p
    } else {
        r
    }
}

/// `1/Γ(x)` for real `x`, with exact zeros at `0, -1, -2, ...`.
pub fn rgamma(x: f64) -> f64 {
    if x >= 0.5 {
        rgamma_dd(DoubleDouble::from_f64(x)).to_f64()
    } else {
        // 1/Γ(x) = sin(πx) Γ(1-x) / π
        let g1 = rgamma_dd(DoubleDouble::from_sum(1.0, -x));
        sin_pi(x) / (g1 * DoubleDouble::PI).to_f64()
    }
}

/// `Γ(x)`; errors within `POLE_TOLERANCE` of a pole and when the result overflows.
pub fn gamma(x: f64) -> Result<f64, GammaError> {
    if x.is_nan() {
        return Err(GammaError::NotANumber);
    }
    if x <= 0.0 && (x - x.round()).abs() <= POLE_TOLERANCE {
        return Err(GammaError::Pole { x });
    }
    if x > GAMMA_MAX_ARG {
        return Err(GammaError::Overflow { x });
    }
    if x >= 0.5 {
        Ok(rgamma_dd(DoubleDouble::from_f64(x)).recip().to_f64())
    } else {
        let g1 = rgamma_dd(DoubleDouble::from_sum(1.0, -x));
        Ok((DoubleDouble::PI * g1).to_f64() / sin_pi(x))
    }
}

/// `ln|Γ(x)|` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 100.0 {
        return -rgamma_dd(DoubleDouble::from_f64(x)).hi.abs().ln();
    }
    // Stirling series; five correction terms are ample beyond 100.
    let z = 1.0 / (x * x);
    let corr =
        (1.0 / 12.0 - z * (1.0 / 360.0 - z * (1.0 / 1260.0 - z * (1.0 / 1680.0 - z / 1188.0)))) / x;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + corr
}

/// `sin(πx)` with exact argument reduction.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let n = x.round();
    let r = x - n; // exact, |r| <= 1/2
    let s = if r.abs() <= 0.25 {
        (std::f64::consts::PI * r).sin()
    } else {
        r.signum() * (std::f64::consts::PI * (0.5 - r.abs())).cos()
    };
    if n.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}
