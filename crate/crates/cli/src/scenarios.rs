//! The six experiments.

use std::sync::Arc;

use fracback_core::backward::{
    amplification_slope, illposedness_sweep, loglog_slope, recover_initial, solve_backward,
    stability_ratio, BackwardProblem,
};
use fracback_core::forward::{decay_profile, solve_forward, solve_homogeneous, ModeFn, SourceTerm};
use fracback_core::fracops::{residual, UniformGrid};
use fracback_core::gamma::gamma;
use fracback_core::mlf::{kernel_dm, FractionalOrder};
use fracback_core::spectral::{CoefVector, Spectrum};
use fracback_core::{mlf, MlfConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Scenario};
use crate::report::{Cell, Limit, Report, Table};
use crate::RunError;

/// Reference values `rho,mu,z,E_{rho,mu}(z)`.
const MLF_FIXTURE: &str = include_str!("../../core/tests/fixtures/mlf_oracle.csv");

pub const STABILITY_DRAWS: usize = 100;
const FINE_STEPS: usize = 4096;

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.log10(), b.log10());
    (0..n)
        .map(|i| 10f64.powf(la + (lb - la) * i as f64 / (n - 1) as f64))
        .collect()
}

fn spread(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn spectrum(c: &ExperimentConfig) -> Result<Spectrum, RunError> {
    Ok(Spectrum::parse(&c.spectrum, c.modes)?)
}

/// `Φ_k = ξ_k k^{-6}` with `ξ_k` uniform in `[-1, 1]`.
fn smooth_draw(s: &Spectrum, rng: &mut ChaCha8Rng) -> CoefVector {
    s.from_fn(|k| rng.gen_range(-1.0..=1.0) * (k as f64).powi(-6))
}

pub fn run_scenario(c: &ExperimentConfig) -> Result<Report, RunError> {
    match c.scenario {
        Scenario::Roundtrip => roundtrip(c),
        Scenario::Illposed => illposed(c),
        Scenario::Decay => decay(c),
        Scenario::Source => source(c),
        Scenario::MlfAccuracy => mlf_accuracy(c),
        Scenario::Residual => residual_scenario(c),
        Scenario::All => Err(RunError::Composite),
    }
}

fn roundtrip(c: &ExperimentConfig) -> Result<Report, RunError> {
    let s = spectrum(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let data = smooth_draw(&s, &mut rng);
    let p = BackwardProblem::new(data.clone(), c.t_end, c.rho, s.clone(), None)?;
    let phi = recover_initial(&p)?;
    let back = solve_homogeneous(&phi, &s, c.rho, c.t_end)?.eval(c.t_end)?;

    let mut r = Report::new(Scenario::Roundtrip);
    let mut table = Table::new("", &["k", "lambda_k", "Phi_k", "phi_k", "u_k_T", "rel_err"]);
    let mut worst = 0.0_f64;
    for k in 0..s.len() {
        let e = rel(back.values()[k], data.values()[k]);
        worst = worst.max(e);
        table.push(vec![
            (k + 1).into(),
            s.eigenvalues()[k].into(),
            data.values()[k].into(),
            phi.values()[k].into(),
            back.values()[k].into(),
            e.into(),
        ]);
    }
    if let Some(tail) = p.solvability()? {
        r.metric("tail_ratio", tail.tail_ratio);
    }
    r.metric("max_rel_err", worst);
    r.check(
        "max_rel_roundtrip_error",
        worst,
        Limit::AtMost(c.tol.unwrap_or(1e-12)),
    );
    r.tables.push(table);
    Ok(r)
}

fn illposed(c: &ExperimentConfig) -> Result<Report, RunError> {
    let s = spectrum(c)?;
    let (a, b) = c.sweep_range();
    let rows = illposedness_sweep(&s, c.rho, c.t_end, c.epsilon, a..=b)?;
    let slope = amplification_slope(&rows)?;
    let decreasing_violations = rows
        .windows(2)
        .filter(|w| w[1].phi_t_norm >= w[0].phi_t_norm)
        .count();
    let band: Vec<f64> = rows.iter().map(|r| r.phi_t_norm2 / r.phi_norm).collect();
    let (band_lo, band_hi) = spread(&band);

    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut ratios = Table::new("ratios", &["draw", "ratio"]);
    let mut values = Vec::with_capacity(STABILITY_DRAWS);
    for i in 0..STABILITY_DRAWS {
        let p = BackwardProblem::new(smooth_draw(&s, &mut rng), c.t_end, c.rho, s.clone(), None)?;
        let x = stability_ratio(&p)?;
        values.push(x);
        ratios.push(vec![(i + 1).into(), x.into()]);
    }
    let (ratio_lo, ratio_hi) = spread(&values);

    let mut r = Report::new(Scenario::Illposed);
    let half_width = c.tol.unwrap_or(0.05);
    r.metric("slope", slope);
    r.metric("band_min", band_lo);
    r.metric("band_max", band_hi);
    r.metric("ratio_min", ratio_lo);
    r.metric("ratio_max", ratio_hi);
    r.series("amplification", rows.iter().map(|r| r.amplification));
    r.check(
        "amplification_slope",
        slope,
        Limit::Within(2.0 - half_width, 2.0 + half_width),
    );
    r.check(
        "norm_Phi_decreasing_violations",
        decreasing_violations as f64,
        Limit::AtMost(0.0),
    );
    r.check(
        "stability_band_width",
        band_hi / band_lo,
        Limit::AtMost(10.0),
    );
    r.check(
        "random_ratio_spread",
        ratio_hi / ratio_lo,
        Limit::AtMost(10.0),
    );

    let mut sweep = Table::new(
        "",
        &["k", "norm_Phi", "norm2_Phi", "norm_phi", "amplification"],
    );
    for row in &rows {
        sweep.push(vec![
            row.k.into(),
            row.phi_t_norm.into(),
            row.phi_t_norm2.into(),
            row.phi_norm.into(),
            row.amplification.into(),
        ]);
    }
    r.tables.push(sweep);
    r.tables.push(ratios);
    Ok(r)
}

fn decay(c: &ExperimentConfig) -> Result<Report, RunError> {
    let s = spectrum(c)?;
    let rho = c.rho.get();
    let t = c.t_end;
    let horizon = 1e4 * t;
    let lambda1 = s.eigenvalues()[0];
    let mut r = Report::new(Scenario::Decay);

    // Envelope over [1e-2 T, 1e2 T] for smooth multi-mode data.
    let smooth = s.from_fn(|k| (k as f64).powi(-2));
    let u = solve_homogeneous(&smooth, &s, c.rho, horizon)?;
    let rows = decay_profile(&u, &logspace(1e-2 * t, 1e2 * t, 61))?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let (lo, hi) = spread(&ratios);
    r.metric("envelope_ratio_min", lo);
    r.metric("envelope_ratio_max", hi);
    r.check(
        "envelope_ratio_spread",
        hi / lo,
        Limit::AtMost(c.tol.unwrap_or(10.0)),
    );

    // Single mode: ratio tends to 1/|Γ(-ρ)| for large t.
    let single = solve_homogeneous(&s.unit(1)?, &s, c.rho, horizon)?;
    let far = decay_profile(&single, &[horizon])?[0].ratio;
    let limit = 1.0 / gamma(-rho)?.abs();
    r.metric("large_t_ratio", far);
    r.metric("large_t_ratio_limit", limit);
    r.check(
        "large_t_ratio_rel_err",
        rel(far, limit),
        Limit::AtMost(0.05),
    );

    // |∂^m u| t^{m+1-ρ} on [T, 1e4 T]: the tail decade stays below the first.
    let grid = logspace(t, horizon, 41);
    let mut derivs = Table::new("derivatives", &["t", "m", "d_m_u", "scaled"]);
    for m in [1u32, 2] {
        let mut scaled = Vec::with_capacity(grid.len());
        for &x in &grid {
            let d = kernel_dm(c.rho, lambda1, x, m)?;
            let v = d.abs() * x.powf(m as f64 + 1.0 - rho);
            scaled.push(v);
            derivs.push(vec![x.into(), m.into(), d.into(), v.into()]);
        }
        let head = scaled[..11].iter().copied().fold(0.0, f64::max);
        let tail = scaled[30..].iter().copied().fold(0.0, f64::max);
        let finite = scaled.iter().all(|v| v.is_finite());
        r.metric(&format!("derivative_{m}_head_max"), head);
        r.metric(&format!("derivative_{m}_tail_max"), tail);
        r.check(
            format!("derivative_{m}_tail_over_head"),
            if finite { tail / head } else { f64::INFINITY },
            Limit::AtMost(1.0),
        );
    }

    // Weighted limit: Γ(ρ)t^{1-ρ}u_1(t) - 1 against its leading term -Γ(ρ)/Γ(2ρ)·λ_1 t^ρ.
    let lead = gamma(rho)? / gamma(2.0 * rho)?;
    let tw = (1e-3 / lambda1).powf(1.0 / rho).min(1e-6 * t);
    let near = solve_homogeneous(&s.unit(1)?, &s, c.rho, t)?;
    let gap_at =
        |x: f64| -> Result<f64, RunError> { Ok(1.0 - near.weighted_value(x)?.values()[0]) };
    let gap = gap_at(tw)?;
    let predicted = lead * lambda1 * tw.powf(rho);
    r.metric("weighted_gap_at_1e-6", gap_at(1e-6 * t)?);
    r.metric("weighted_probe_t", tw);
    r.check(
        "weighted_limit_leading_term_rel_err",
        rel(gap, predicted),
        Limit::AtMost(1e-2),
    );

    let mut profile = Table::new("", &["t", "norm", "envelope", "ratio"]);
    for row in &rows {
        profile.push(vec![
            row.t.into(),
            row.norm.into(),
            row.envelope.into(),
            row.ratio.into(),
        ]);
    }
    r.tables.push(profile);
    r.tables.push(derivs);
    Ok(r)
}

fn unit_source(s: &Spectrum, epsilon: f64) -> Result<SourceTerm, RunError> {
    Ok(SourceTerm::single_mode(
        s,
        1,
        Arc::new(|_t: f64| 1.0) as ModeFn,
        epsilon,
    )?)
}

fn source(c: &ExperimentConfig) -> Result<Report, RunError> {
    let s = spectrum(c)?;
    let f = unit_source(&s, c.epsilon)?;
    let truth = s.from_fn(|k| 0.5f64.powi(k as i32 - 1));
    let data = solve_forward(&truth, Some(&f), &s, c.rho, c.t_end)?.eval(c.t_end)?;
    let p = BackwardProblem::new(data.clone(), c.t_end, c.rho, s.clone(), Some(f.clone()))?;
    let (phi, u) = solve_backward(&p)?;
    let terminal = u.eval(c.t_end)?;

    let mut r = Report::new(Scenario::Source);
    let mut table = Table::new(
        "",
        &["k", "lambda_k", "phi_true", "phi_recovered", "rel_err"],
    );
    let mut worst = 0.0_f64;
    for k in 0..s.len() {
        let e = rel(phi.values()[k], truth.values()[k]);
        worst = worst.max(e);
        table.push(vec![
            (k + 1).into(),
            s.eigenvalues()[k].into(),
            truth.values()[k].into(),
            phi.values()[k].into(),
            e.into(),
        ]);
    }
    let terminal_err = terminal
        .values()
        .iter()
        .zip(data.values())
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max);

    // Source-only terminal data splits to zero initial data.
    let v = solve_forward(&s.zeros(), Some(&f), &s, c.rho, c.t_end)?;
    let v_t = v.eval(c.t_end)?;
    let zero = BackwardProblem::new(v_t.clone(), c.t_end, c.rho, s.clone(), Some(f))?;
    let zero_norm = solve_backward(&zero)?.0.norm();

    let rho = c.rho.get();
    let lambda1 = s.eigenvalues()[0];
    let closed =
        (1.0 - mlf(
            rho,
            1.0,
            -lambda1 * c.t_end.powf(rho),
            &MlfConfig::default(),
        )?) / lambda1;

    r.metric("max_rel_err", worst);
    r.metric("terminal_rel_err", terminal_err);
    r.check(
        "max_rel_recovery_error",
        worst,
        Limit::AtMost(c.tol.unwrap_or(1e-8)),
    );
    r.check("terminal_rel_error", terminal_err, Limit::AtMost(1e-10));
    r.check("source_only_recovers_zero", zero_norm, Limit::AtMost(0.0));
    r.check(
        "convolution_closed_form_rel_err",
        rel(v_t.values()[0], closed),
        Limit::AtMost(1e-10),
    );
    r.tables.push(table);
    Ok(r)
}

/// Parsed reference rows.
pub fn fixture_rows() -> Result<Vec<[f64; 4]>, RunError> {
    MLF_FIXTURE
        .lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| RunError::Fixture {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            <[f64; 4]>::try_from(v).map_err(|_| RunError::Fixture {
                line: i + 1,
                message: "expected four columns".into(),
            })
        })
        .collect()
}

pub const ORDERS: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

fn mlf_accuracy(c: &ExperimentConfig) -> Result<Report, RunError> {
    let cfg = MlfConfig::default();
    let mut r = Report::new(Scenario::MlfAccuracy);
    let mut table = Table::new("", &["rho", "mu", "z", "reference", "computed", "rel_err"]);
    let mut worst = 0.0_f64;
    let rows = fixture_rows()?;
    for [rho, mu, z, reference] in &rows {
        let v = mlf(*rho, *mu, *z, &cfg)?;
        let e = rel(v, *reference);
        worst = worst.max(e);
        table.push(vec![
            (*rho).into(),
            (*mu).into(),
            (*z).into(),
            (*reference).into(),
            v.into(),
            e.into(),
        ]);
    }
    r.metric("fixture_rows", rows.len() as f64);
    r.metric("max_rel_err", worst);
    r.check(
        "max_rel_error",
        worst,
        Limit::AtMost(c.tol.unwrap_or(1e-11)),
    );

    // E_{ρ,ρ}(-t) > 0 on 200 log-spaced points per order.
    let grid = logspace(1e-4, 1e8, 200);
    let mut nonpositive = 0usize;
    let mut smallest = f64::INFINITY;
    for rho in ORDERS {
        for &x in &grid {
            let v = mlf(rho, rho, -x, &cfg)?;
            smallest = smallest.min(v);
            if v.is_nan() || v <= 0.0 {
                nonpositive += 1;
            }
        }
    }
    r.metric("positivity_min_value", smallest);
    r.check(
        "positivity_violations",
        nonpositive as f64,
        Limit::AtMost(0.0),
    );

    // t² E_{ρ,ρ}(-t) → -1/Γ(-ρ) on [1e2, 1e4].
    let mut asym = Table::new(
        "asymptotic",
        &[
            "rho",
            "slope",
            "prefactor",
            "reference",
            "prefactor_rel_err",
        ],
    );
    let grid = logspace(1e2, 1e4, 50);
    let (mut slope_err, mut pref_err) = (0.0_f64, 0.0_f64);
    for rho in ORDERS {
        let mut pts = Vec::with_capacity(grid.len());
        let mut log_pref = 0.0;
        for &x in &grid {
            let v = mlf(rho, rho, -x, &cfg)?;
            pts.push((x.ln(), v.ln()));
            log_pref += (x * x * v).ln();
        }
        let slope = loglog_slope(&pts).unwrap_or(f64::NAN);
        let prefactor = (log_pref / grid.len() as f64).exp();
        let reference = -1.0 / gamma(-rho)?;
        let e = rel(prefactor, reference);
        slope_err = slope_err.max((slope + 2.0).abs());
        pref_err = pref_err.max(e);
        asym.push(vec![
            rho.into(),
            slope.into(),
            prefactor.into(),
            reference.into(),
            e.into(),
        ]);
    }
    r.check("asymptotic_slope_abs_err", slope_err, Limit::AtMost(0.05));
    r.check(
        "asymptotic_prefactor_rel_err",
        pref_err,
        Limit::AtMost(0.01),
    );
    r.tables.push(table);
    r.tables.push(asym);
    Ok(r)
}

fn residual_scenario(c: &ExperimentConfig) -> Result<Report, RunError> {
    let s = spectrum(c)?;
    let rho: FractionalOrder = c.rho;
    let f = SourceTerm::regular(
        &s,
        (1..=s.len())
            .map(|k| Some(Arc::new(move |t: f64| (t / k as f64).cos()) as ModeFn))
            .collect(),
        c.epsilon,
    )?;
    let phi = s.from_fn(|k| 1.0 / k as f64);
    let forward_hom = solve_homogeneous(&phi, &s, rho, c.t_end)?;
    let forward_src = solve_forward(&phi, Some(&f), &s, rho, c.t_end)?;
    let terminal = s.from_fn(|k| (k as f64).powi(-4));
    let p = BackwardProblem::new(terminal, c.t_end, rho, s.clone(), Some(f.clone()))?;
    let (_, backward) = solve_backward(&p)?;

    let mut r = Report::new(Scenario::Residual);
    let mut table = Table::new("", &["case", "steps", "h", "residual"]);
    let limit = c.tol.unwrap_or(5e-3);
    let cases = [
        ("forward_homogeneous", &forward_hom, None),
        ("forward_source", &forward_src, Some(&f)),
        ("backward_source", &backward, Some(&f)),
    ];
    for (name, u, src) in cases {
        let mut values = [0.0; 2];
        for (i, steps) in [FINE_STEPS, 2 * FINE_STEPS].into_iter().enumerate() {
            let grid = UniformGrid::new(c.t_end, steps)?;
            values[i] = residual(u, src, &s, rho, &grid)?;
            table.push(vec![
                Cell::from(name),
                steps.into(),
                grid.step().into(),
                values[i].into(),
            ]);
        }
        r.metric(&format!("{name}_residual"), values[0]);
        r.metric(&format!("{name}_residual_half_step"), values[1]);
        r.check(format!("{name}_residual"), values[0], Limit::AtMost(limit));
        r.check(
            format!("{name}_halving_ratio"),
            values[0] / values[1],
            Limit::Within(1.7, 2.3),
        );
    }
    r.tables.push(table);
    Ok(r)
}
