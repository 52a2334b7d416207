mod common;

use common::rel;
use fracback_core::forward::solve_homogeneous;
use fracback_core::fracops::{
    gauss_jacobi, gl_derivative, residual, rl_integral, start_value, ModalTrajectory, UniformGrid,
};
use fracback_core::gamma::{gamma, rgamma};
use fracback_core::mlf::{kernel, FractionalOrder};
use fracback_core::spectral::Spectrum;
use fracback_core::timefn::{TimeFunction, WeaklySingular};
use fracback_core::{MlfConfig, Result};
use proptest::prelude::*;

#[test]
fn gauss_jacobi_examples() {
    let q = gauss_jacobi(1.0, 2).unwrap();
    let d = 0.5 / 3f64.sqrt();
    assert!((q.nodes()[0] - (0.5 - d)).abs() < 1e-15 && (q.nodes()[1] - (0.5 + d)).abs() < 1e-15);
    assert!((q.weights()[0] - 0.5).abs() < 1e-15 && (q.weights()[1] - 0.5).abs() < 1e-15);

    let q = gauss_jacobi(0.5, 8).unwrap();
    for j in 0..16 {
        let m = q.apply(|x| x.powi(j));
        assert!(rel(m, 1.0 / (j as f64 + 0.5)) < 1e-12, "j = {j}");
    }
    for r in [0.1, 0.37, 0.99] {
        let q = gauss_jacobi(r, 1).unwrap();
        assert!(rel(q.nodes()[0], r / (r + 1.0)) < 1e-15);
        assert!(rel(q.weights()[0], 1.0 / r) < 1e-15);
    }
    assert!(gauss_jacobi(0.5, 0).is_err());
    assert!(gauss_jacobi(0.5, 129).is_err());
    assert!(gauss_jacobi(0.5, 128).is_ok());
}

#[test]
fn rl_integral_examples() {
    let q = gauss_jacobi(0.5, 32).unwrap();
    let one = |_s: f64| 1.0;
    assert!(
        rel(
            rl_integral(&one, 0.5, 1.0, &q).unwrap(),
            std::f64::consts::FRAC_2_SQRT_PI
        ) < 1e-10
    );
    let id = |s: f64| s;
    assert!(rel(rl_integral(&id, 0.5, 1.0, &q).unwrap(), 0.752_252_778_1) < 1e-10);

    // Fractional integral of order 1-ρ of the kernel is E_{ρ,1}(-λ t^ρ).
    let rho = FractionalOrder::new(0.5).unwrap();
    let k = WeaklySingular::new(0.5, |s: f64| {
        fracback_core::mlf(0.5, 0.5, -s.sqrt(), &MlfConfig::default()).unwrap()
    })
    .unwrap();
    assert!(rel(k.eval(0.3), kernel(rho, 1.0, 0.3).unwrap()) < 1e-14);
    let v = rl_integral(&k, 0.5, 1.0, &q).unwrap();
    assert!(rel(v, 0.427_583_576_155_807) < 1e-11, "{v}");

    assert!(rl_integral(&one, 0.5, 0.0, &q).is_err());
    assert!(rl_integral(&one, 0.3, 1.0, &q).is_err());
}

#[test]
fn rl_integral_of_powers() {
    // I^α s^b = Γ(b+1)/Γ(b+1+α) t^{b+α}, including a singular s^{β-1}.
    for (alpha, beta) in [(0.3, 0.4), (0.7, 0.2), (0.5, 1.5)] {
        let q = gauss_jacobi(alpha, 32).unwrap();
        let h = WeaklySingular::new(beta, |_s: f64| 1.0).unwrap();
        let t = 2.0_f64;
        let b = beta - 1.0;
        let want = gamma(b + 1.0).unwrap() * rgamma(b + 1.0 + alpha) * t.powf(b + alpha);
        assert!(rel(rl_integral(&h, alpha, t, &q).unwrap(), want) < 1e-12);
    }
}

#[test]
fn semigroup_property() {
    let (a, b) = (0.3, 0.3);
    let qa = gauss_jacobi(a, 32).unwrap();
    let qb = gauss_jacobi(b, 32).unwrap();
    let qab = gauss_jacobi(a + b, 32).unwrap();
    let inner = |s: f64| rl_integral(&|x: f64| x.cos(), a, s, &qa).unwrap();
    // I^a cos behaves like s^a near 0: smooth enough for the graded panels.
    for t in [0.5, 1.0, 2.0] {
        let two = rl_integral(&inner, b, t, &qb).unwrap();
        let one = rl_integral(&|x: f64| x.cos(), a + b, t, &qab).unwrap();
        assert!((two - one).abs() < 1e-8, "t = {t}: {two} vs {one}");
    }
}

#[test]
fn gl_derivative_examples() {
    let rho = FractionalOrder::new(0.5).unwrap();
    let n = 1000;
    let h = 1e-3;
    let ones = vec![1.0; n + 1];
    let d = gl_derivative(&ones, h, rho).unwrap();
    assert!((d[n] - 0.564_189_583_5).abs() < 2e-3);

    let lin: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    let d = gl_derivative(&lin, h, rho).unwrap();
    assert!((d[n] - 1.0 / gamma(1.5).unwrap()).abs() < 2e-3);

    assert!(gl_derivative(&[1.0; 4], h, rho).is_err());
    assert!(gl_derivative(&ones, 0.0, rho).is_err());
}

#[test]
fn gl_annihilates_the_singular_power() {
    // D^ρ t^{ρ-1} = 0; the t = 0 sample is fixed from the exact mass.
    for r in [0.3, 0.5, 0.7] {
        let rho = FractionalOrder::new(r).unwrap();
        let f = WeaklySingular::new(r, |_t: f64| 1.0).unwrap();
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut s: Vec<f64> = (0..=n).map(|j| f.eval(j as f64 * h)).collect();
            s[0] = start_value(&f, &s, h, n / 32).unwrap();
            let d = gl_derivative(&s, h, rho).unwrap();
            d[n / 2..].iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        };
        let (e1, e2) = (err(2048), err(4096));
        assert!(e1 < 5e-3 && e1 / e2 > 1.7, "ρ = {r}: {e1} {e2}");
    }
}

struct Zero;
impl ModalTrajectory for Zero {
    fn mode_count(&self) -> usize {
        4
    }
    fn mode_value(&self, _k: usize, _t: f64) -> Result<f64> {
        Ok(0.0)
    }
}

struct Shifted<'a, U: ModalTrajectory> {
    u: &'a U,
    mode: usize,
    shift: f64,
}
impl<U: ModalTrajectory> ModalTrajectory for Shifted<'_, U> {
    fn mode_count(&self) -> usize {
        self.u.mode_count()
    }
    fn mode_value(&self, k: usize, t: f64) -> Result<f64> {
        Ok(self.u.mode_value(k, t)? + if k == self.mode { self.shift } else { 0.0 })
    }
}

#[test]
fn residual_examples() {
    let rho = FractionalOrder::new(0.5).unwrap();
    let s = Spectrum::explicit(vec![1.0, 4.0, 9.0, 16.0]).unwrap();
    let u = solve_homogeneous(&s.unit(1).unwrap(), &s, rho, 1.0).unwrap();
    let grid = UniformGrid::new(1.0, 1000).unwrap();
    let r = residual(&u, None, &s, rho, &grid).unwrap();
    assert!(r <= 5e-3, "{r}");

    assert_eq!(residual(&Zero, None, &s, rho, &grid).unwrap(), 0.0);

    let bad = Shifted {
        u: &u,
        mode: 0,
        shift: 0.1,
    };
    assert!(residual(&bad, None, &s, rho, &grid).unwrap() >= 0.05);
}

#[test]
fn residual_halves_with_the_step() {
    for r in [0.3, 0.5, 0.7] {
        let rho = FractionalOrder::new(r).unwrap();
        let s = Spectrum::dirichlet_interval(1.0, 16).unwrap();
        let phi = s.from_fn(|k| 1.0 / k as f64);
        let u = solve_homogeneous(&phi, &s, rho, 1.0).unwrap();
        let r1 = residual(&u, None, &s, rho, &UniformGrid::new(1.0, 4096).unwrap()).unwrap();
        let r2 = residual(&u, None, &s, rho, &UniformGrid::new(1.0, 8192).unwrap()).unwrap();
        assert!(
            r1 <= 5e-3 && (1.7..=2.3).contains(&(r1 / r2)),
            "ρ = {r}: {r1} {r2}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn gauss_jacobi_moments(r in 0.05f64..1.0, n in 1usize..40) {
        let q = gauss_jacobi(r, n).unwrap();
        prop_assert!(q.nodes().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(q.nodes()[0] > 0.0 && q.nodes()[n - 1] < 1.0);
        for j in 0..(2 * n) {
            let m = q.apply(|x| x.powi(j as i32));
            prop_assert!(rel(m, 1.0 / (j as f64 + r)) < 1e-12, "j = {}", j);
        }
    }
}
