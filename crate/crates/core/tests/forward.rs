mod common;

use std::sync::Arc;

use common::{logspace, rel};
use fracback_core::forward::{
    decay_profile, solve_forward, solve_homogeneous, source_convolution, write_profile_csv, ModeFn,
    SourceTerm,
};
use fracback_core::fracops::gauss_jacobi;
use fracback_core::gamma::gamma;
use fracback_core::mlf::{kernel, FractionalOrder};
use fracback_core::spectral::Spectrum;
use fracback_core::timefn::WeaklySingular;
use fracback_core::{mlf, MlfConfig};

const E_HALF_HALF_MINUS_ONE: f64 = 0.136_606_007_391_949_28;
const ONE_MINUS_E_HALF_ONE: f64 = 0.572_416_423_844_193;

fn half() -> FractionalOrder {
    FractionalOrder::new(0.5).unwrap()
}

fn mode(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ModeFn {
    Arc::new(f)
}

#[test]
fn homogeneous_examples() {
    let s = Spectrum::explicit(vec![1.0, 4.0]).unwrap();
    let u = solve_homogeneous(&s.zeros(), &s, half(), 1.0).unwrap();
    assert!(u.eval(0.5).unwrap().is_zero());

    let u = solve_homogeneous(&s.unit(1).unwrap(), &s, half(), 1.0).unwrap();
    assert!(rel(u.eval(1.0).unwrap().values()[0], E_HALF_HALF_MINUS_ONE) < 1e-14);
    assert_eq!(u.weighted_initial(), &s.unit(1).unwrap());
    // Γ(ρ)t^{1-ρ}u = 1 - Γ(ρ)/Γ(2ρ)·λt^ρ + …; at λ = 1, t = 1e-8 that is 1.77e-4 off.
    let w = u.weighted_value(1e-8).unwrap().values()[0];
    assert!(rel(1.0 - w, gamma(0.5).unwrap() * 1e-4) < 1e-3, "{w}");
    assert!(u.eval(1.5).is_err());
    assert!(u.eval(0.0).is_err());
}

#[test]
fn convolution_examples() {
    let q = gauss_jacobi(0.5, 32).unwrap();
    let zero = |_t: f64| 0.0;
    assert_eq!(
        source_convolution(&zero, 1.0, half(), 1.0, &q).unwrap(),
        0.0
    );
    let one = |_t: f64| 1.0;
    let tiny = source_convolution(&one, 1e-12, half(), 1.0, &q).unwrap();
    assert!(rel(tiny, 1.0 / gamma(1.5).unwrap()) < 1e-10);
    let v = source_convolution(&one, 1.0, half(), 1.0, &q).unwrap();
    assert!(rel(v, ONE_MINUS_E_HALF_ONE) < 1e-12, "{v}");
    let wrong = gauss_jacobi(0.3, 32).unwrap();
    assert!(source_convolution(&one, 1.0, half(), 1.0, &wrong).is_err());
}

#[test]
fn convolution_identity_across_orders() {
    // ∫_0^t η^{ρ-1}E_{ρ,ρ}(-λη^ρ)dη = (1 - E_{ρ,1}(-λt^ρ))/λ
    let cfg = MlfConfig::default();
    for r in [0.3, 0.5, 0.7, 0.9] {
        let rho = FractionalOrder::new(r).unwrap();
        let q = gauss_jacobi(r, 32).unwrap();
        for lambda in [0.1, 1.0, 9.869_604_401_089_358, 1e3, 1e5] {
            for t in [0.01, 1.0, 7.0] {
                let v = source_convolution(&|_t: f64| 1.0, lambda, rho, t, &q).unwrap();
                let want = (1.0 - mlf(r, 1.0, -lambda * f64::powf(t, r), &cfg).unwrap()) / lambda;
                assert!(
                    rel(v, want) < 1e-10,
                    "ρ={r} λ={lambda} t={t}: {v} vs {want}"
                );
            }
        }
    }
}

#[test]
fn singular_source_convolution() {
    // f = t^{ρ-1}: the convolution is Γ(ρ) t^{2ρ-1} E_{ρ,2ρ}(-λt^ρ).
    let cfg = MlfConfig::default();
    for r in [0.3, 0.5, 0.7] {
        let rho = FractionalOrder::new(r).unwrap();
        let q = gauss_jacobi(r, 32).unwrap();
        let f = WeaklySingular::new(r, |_t: f64| 1.0).unwrap();
        for (lambda, t) in [(1.0, 1.0), (50.0, 0.5), (1e3, 2.0)] {
            let v = source_convolution(&f, lambda, rho, t, &q).unwrap();
            let t: f64 = t;
            let want = gamma(r).unwrap()
                * t.powf(2.0 * r - 1.0)
                * mlf(r, 2.0 * r, -lambda * t.powf(r), &cfg).unwrap();
            assert!(rel(v, want) < 1e-10, "ρ={r} λ={lambda}: {v} vs {want}");
        }
    }
}

#[test]
fn forward_examples() {
    let s = Spectrum::explicit(vec![1.0, 4.0, 9.0]).unwrap();
    let phi = s.coefs(vec![1.0, -0.5, 0.25]).unwrap();
    let a = solve_homogeneous(&phi, &s, half(), 1.0).unwrap();
    let b = solve_forward(&phi, None, &s, half(), 1.0).unwrap();
    for t in [0.1, 0.5, 1.0] {
        assert_eq!(a.eval(t).unwrap(), b.eval(t).unwrap());
    }

    let f = SourceTerm::single_mode(&s, 1, mode(|_| 1.0), 0.5).unwrap();
    let u = solve_forward(&s.zeros(), Some(&f), &s, half(), 1.0).unwrap();
    let v = u.eval(1.0).unwrap();
    assert!(rel(v.values()[0], ONE_MINUS_E_HALF_ONE) < 1e-12);
    assert_eq!(&v.values()[1..], &[0.0, 0.0]);
}

#[test]
fn manufactured_constant_shift() {
    let r = 0.5;
    let s = Spectrum::dirichlet_interval(1.0, 4).unwrap();
    let phi = s.from_fn(|k| 1.0 / k as f64);
    let base = solve_homogeneous(&phi, &s, half(), 2.0).unwrap();
    let c = 0.7;
    let f = SourceTerm::regular(&s, (0..4).map(|_| Some(mode(move |_| c))).collect(), 0.5).unwrap();
    let u = solve_forward(&phi, Some(&f), &s, half(), 2.0).unwrap();
    let cfg = MlfConfig::default();
    for t in [0.05, 1.0, 2.0] {
        let (a, b) = (base.eval(t).unwrap(), u.eval(t).unwrap());
        for (k, &lambda) in s.eigenvalues().iter().enumerate() {
            let shift = c * (1.0 - mlf(r, 1.0, -lambda * f64::powf(t, r), &cfg).unwrap()) / lambda;
            assert!(rel(b.values()[k] - a.values()[k], shift) < 1e-10);
        }
    }
}

#[test]
fn solution_is_linear() {
    let rho = FractionalOrder::new(0.3).unwrap();
    let s = Spectrum::dirichlet_interval(1.0, 6).unwrap();
    let p1 = s.from_fn(|k| (k as f64).powi(-2));
    let p2 = s.from_fn(|k| if k % 2 == 0 { 1.0 } else { -0.3 });
    let f1 = SourceTerm::regular(
        &s,
        (1..=6)
            .map(|k| Some(mode(move |t| (k as f64 * t).cos())))
            .collect(),
        0.5,
    )
    .unwrap();
    let f2 = SourceTerm::singular(
        &s,
        (1..=6)
            .map(|k| Some(mode(move |t| f64::powf(t, -0.7) * (1.0 + t / k as f64))))
            .collect(),
        0.5,
        rho,
    )
    .unwrap();
    let (a, b) = (1.7, -0.4);
    let u1 = solve_forward(&p1, Some(&f1), &s, rho, 1.0).unwrap();
    let u2 = solve_forward(&p2, Some(&f2), &s, rho, 1.0).unwrap();
    let uc = solve_forward(
        &p1.combine(a, &p2, b).unwrap(),
        Some(&f1.combine(a, &f2, b).unwrap()),
        &s,
        rho,
        1.0,
    )
    .unwrap();
    for t in [0.01, 0.3, 1.0] {
        let want = u1
            .eval(t)
            .unwrap()
            .combine(a, &u2.eval(t).unwrap(), b)
            .unwrap();
        for (x, y) in uc.eval(t).unwrap().values().iter().zip(want.values()) {
            assert!(rel(*x, *y) < 1e-10, "t={t}: {x} vs {y}");
        }
    }
}

#[test]
fn weighted_initial_limit() {
    let s = Spectrum::dirichlet_interval(1.0, 8).unwrap();
    for r in [0.3, 0.5, 0.7] {
        let rho = FractionalOrder::new(r).unwrap();
        let lead = gamma(r).unwrap() / gamma(2.0 * r).unwrap();
        for k in [1, 8] {
            let lambda = s.eigenvalues()[k - 1];
            let u = solve_homogeneous(&s.unit(k).unwrap(), &s, rho, 1.0).unwrap();
            assert_eq!(u.weighted_initial().values()[k - 1], 1.0);
            for t in [1e-4, 1e-6, 1e-10, 1e-14] {
                let x = lambda * f64::powf(t, r);
                if x > 1e-2 {
                    continue;
                }
                let gap = 1.0 - u.weighted_value(t).unwrap().values()[k - 1];
                assert!(
                    (gap - lead * x).abs() < 4.0 * x * x + 1e-14,
                    "ρ={r} k={k} t={t}: {gap}"
                );
            }
        }
    }
    // Plain evaluation meets 1e-4 at t = 1e-6 once λ t^ρ is small enough.
    let rho = FractionalOrder::new(0.7).unwrap();
    let one = Spectrum::explicit(vec![1.0]).unwrap();
    let u = solve_homogeneous(&one.unit(1).unwrap(), &one, rho, 1.0).unwrap();
    assert!((u.weighted_value(1e-6).unwrap().values()[0] - 1.0).abs() < 1e-4);
}

#[test]
fn decay_profile_examples() {
    let s = Spectrum::explicit(vec![1.0]).unwrap();
    let u = solve_homogeneous(&s.unit(1).unwrap(), &s, half(), 1e4).unwrap();
    let rows = decay_profile(&u, &[1e-10, 1.0, 1e4]).unwrap();
    assert!(rel(rows[0].ratio, 1.0 / gamma(0.5).unwrap()) < 1e-4);
    assert!(rel(rows[1].ratio, 2.0 * E_HALF_HALF_MINUS_ONE) < 1e-13);
    assert!(rel(rows[2].ratio, 0.282_094_791_8) < 0.05);

    let mut buf = Vec::new();
    write_profile_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,norm,envelope,ratio\n1.0000000000000000e-10,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn decay_envelope_is_bounded() {
    let s = Spectrum::dirichlet_interval(1.0, 16).unwrap();
    let phi = s.from_fn(|k| (k as f64).powi(-2));
    for r in [0.3, 0.5, 0.7] {
        let rho = FractionalOrder::new(r).unwrap();
        let u = solve_homogeneous(&phi, &s, rho, 1e2).unwrap();
        let rows = decay_profile(&u, &logspace(1e-2, 1e2, 60)).unwrap();
        let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        assert!(lo > 0.0 && hi / lo <= 10.0, "ρ={r}: [{lo}, {hi}]");
    }
}

#[test]
fn derivative_decay_is_bounded() {
    let s = Spectrum::explicit(vec![9.869_604_401_089_358]).unwrap();
    for r in [0.3, 0.5, 0.7] {
        let rho = FractionalOrder::new(r).unwrap();
        let u = solve_homogeneous(&s.unit(1).unwrap(), &s, rho, 1e4).unwrap();
        for m in [1, 2] {
            let scaled: Vec<f64> = logspace(1.0, 1e4, 41)
                .into_iter()
                .map(|t| u.mode_derivative(0, t, m).unwrap().abs() * t.powf(m as f64 + 1.0 - r))
                .collect();
            assert!(scaled.iter().all(|v| v.is_finite()));
            let head = scaled[..11].iter().copied().fold(0.0, f64::max);
            let tail = scaled[30..].iter().copied().fold(0.0, f64::max);
            assert!(tail <= head, "ρ={r} m={m}: {head} {tail}");
            // Leading-order derivative of C t^{-ρ-1} sets the large-t scale.
            let k = kernel(rho, 9.869_604_401_089_358, 1e4).unwrap();
            assert!(scaled[40] <= 10.0 * k * 1e4f64.powf(1.0 - r) * (r + 1.0) * (r + 2.0));
        }
    }
}

#[test]
fn derivative_needs_homogeneous_solution() {
    let s = Spectrum::explicit(vec![1.0]).unwrap();
    let f = SourceTerm::single_mode(&s, 1, mode(|_| 1.0), 0.5).unwrap();
    let u = solve_forward(&s.unit(1).unwrap(), Some(&f), &s, half(), 1.0).unwrap();
    assert!(u.mode_derivative(0, 0.5, 1).is_err());
    assert!(decay_profile(&u, &[0.5]).is_err());
}

#[test]
fn source_validation() {
    let s = Spectrum::explicit(vec![1.0, 2.0]).unwrap();
    assert!(SourceTerm::regular(&s, vec![None], 0.5).is_err());
    assert!(SourceTerm::regular(&s, vec![None, None], 1.0).is_err());
    assert!(SourceTerm::regular(&s, vec![Some(mode(|t| 1.0 / t)), None], 0.5).is_err());
    let rho = half();
    assert!(SourceTerm::singular(&s, vec![Some(mode(|t| t.powf(-0.5))), None], 0.5, rho).is_ok());
    assert!(SourceTerm::singular(&s, vec![Some(mode(|t| 1.0 / t)), None], 0.5, rho).is_err());
    let other = Spectrum::explicit(vec![1.0, 3.0]).unwrap();
    let f = SourceTerm::single_mode(&other, 2, mode(|_| 1.0), 0.5).unwrap();
    assert!(solve_forward(&s.zeros(), Some(&f), &s, rho, 1.0).is_err());
}

#[test]
fn solution_csv_export() {
    let s = Spectrum::explicit(vec![1.0, 4.0]).unwrap();
    let u = solve_homogeneous(&s.unit(1).unwrap(), &s, half(), 1.0).unwrap();
    let mut buf = Vec::new();
    u.write_csv(&[0.5, 1.0], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,k,u_k");
    assert_eq!(lines.len(), 5);
    let row: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(&row[..2], &["1.0000000000000000e0", "1"]);
    assert!(rel(row[2].parse().unwrap(), E_HALF_HALF_MINUS_ONE) < 1e-14);
    assert!(lines[4].ends_with(",2,0.0000000000000000e0"));
}

#[test]
fn concurrent_queries_agree() {
    use rayon::prelude::*;
    let s = Spectrum::dirichlet_interval(1.0, 32).unwrap();
    let f = SourceTerm::regular(
        &s,
        (0..32).map(|_| Some(mode(|t: f64| t.sin()))).collect(),
        0.5,
    )
    .unwrap();
    let u = solve_forward(&s.from_fn(|k| 1.0 / k as f64), Some(&f), &s, half(), 1.0).unwrap();
    let ts = logspace(1e-3, 1.0, 16);
    let first: Vec<_> = ts.par_iter().map(|&t| u.eval(t).unwrap()).collect();
    let second: Vec<_> = ts.iter().map(|&t| u.eval(t).unwrap()).collect();
    assert_eq!(first, second);
}
