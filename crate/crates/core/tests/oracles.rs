//! Library results against independently computed references.

use std::f64::consts::PI;

use collapsim::background::{log_time_grid, BackgroundModel, ModeBackground};
use collapsim::cmb::{compute_cls, estimate_cls, synthesize_alm, ClSpectrum};
use collapsim::constraints::{exclusion_scan, log_grid, Criterion};
use collapsim::csl::{
    build_collapse_operator, collapse_diagnostics, evolve_modes_jointly, lindblad_moments, CollapseOperatorSpec,
    CslMode, SLabel, StepControl,
};
use collapsim::modes::evolve_omega;
use collapsim::rng::counter_rng;
use collapsim::spectrum::{
    analytic_csl_spectrum, calibrate_o1, estimate_spectrum, fit_spectral_index, AnalyticSpectrumParams, Regime,
    SpectrumEstimate,
};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

fn normal(rng: &mut impl rand::Rng) -> f64 {
    StandardNormal.sample(rng)
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn small_bg() -> BackgroundModel {
    BackgroundModel::new(1.0, 0.05, -20.0, -0.05, 1.0).unwrap()
}

/// Classical RK4 on the nonlinear Riccati equation
/// `Omega' = -2i Omega^2 - 2 (z'/z) Omega + i k^2/2 + Gamma`, stepping in
/// fixed fractions of `|eta|`.
fn riccati_rk4(k: f64, rate: impl Fn(f64) -> f64, grid: &[f64]) -> Vec<Complex64> {
    let bg = small_bg();
    let rhs =
        |eta: f64, om: Complex64| -2.0 * I * om * om - 2.0 * bg.z_prime_over_z(eta) * om + 0.5 * I * k * k + rate(eta);
    let mut eta = bg.eta_ini;
    let mut om = Complex64::new(0.5 * k, 0.0);
    let mut out = Vec::new();
    for &target in grid {
        while eta < target {
            let h = (2e-4 * eta.abs()).min(2e-3 / k).min(target - eta);
            let k1 = rhs(eta, om);
            let k2 = rhs(eta + 0.5 * h, om + 0.5 * h * k1);
            let k3 = rhs(eta + 0.5 * h, om + 0.5 * h * k2);
            let k4 = rhs(eta + h, om + h * k3);
            om += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            eta += h;
        }
        out.push(om);
    }
    out
}

#[test]
fn omega_matches_riccati_reference() {
    let bg = small_bg();
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 10).unwrap();
    for k in [0.5, 2.0] {
        let lib = evolve_omega(&bg, k, &grid).unwrap();
        let reference = riccati_rk4(k, |_| 0.0, &grid);
        for (a, b) in lib.omega.iter().zip(&reference) {
            assert!((a - b).norm() < 1e-7 * b.norm(), "k = {k}: {a} vs {b}");
        }
    }
}

#[test]
fn collapse_rate_and_omega_match_hand_formula() {
    let bg = small_bg();
    let (gamma, p) = (0.3, -0.5);
    let spec = CollapseOperatorSpec { m0: 1.0, ..CollapseOperatorSpec::amplitude(gamma, p) };
    let op = build_collapse_operator(&spec, &bg).unwrap();
    // Gamma = gamma a^4 (a^p / z)^2 / m0^2
    let hand = |eta: f64| {
        let a = -1.0 / (eta * (1.0 - bg.eps1));
        let z = a * (2.0 * bg.eps1).sqrt();
        gamma * a.powi(4) * (a.powf(p) / z).powi(2)
    };
    for eta in [-20.0, -1.0, -0.05] {
        assert!((op.rate(1.0, eta) / hand(eta) - 1.0).abs() < 1e-13);
    }
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 10).unwrap();
    let mode = CslMode::new(&bg, 1.0, &spec, &grid, StepControl::default()).unwrap();
    let reference = riccati_rk4(1.0, hand, &grid);
    for (a, b) in mode.omega().iter().zip(&reference) {
        assert!((a - b).norm() < 1e-7 * b.norm(), "{a} vs {b}");
    }
}

#[test]
fn zbar_ensemble_is_centred() {
    let bg = small_bg();
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 5).unwrap();
    let mode =
        CslMode::new(&bg, 1.0, &CollapseOperatorSpec::amplitude(1.0, 0.0), &grid, StepControl::default()).unwrap();
    let seeds: Vec<u64> = (0..4000).collect();
    let stats = mode.ensemble_statistics(&seeds);
    for i in 1..grid.len() {
        let var = stats.mean_sq(i) - stats.mean(i).powi(2);
        let se = (var / seeds.len() as f64).sqrt();
        assert!(stats.mean(i).abs() < 4.0 * se, "node {i}: mean {} se {se}", stats.mean(i));
    }
}

#[test]
fn joint_evolution_equals_independent_modes() {
    let bg = small_bg();
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 6).unwrap();
    let spec = CollapseOperatorSpec::amplitude(0.5, -0.5);
    let modes: Vec<CslMode> =
        [0.3, 1.0, 4.0].iter().map(|&k| CslMode::new(&bg, k, &spec, &grid, StepControl::default()).unwrap()).collect();
    let seeds = [11, 12, 13];
    let joint = evolve_modes_jointly(&modes, &seeds);
    for (j, m) in modes.iter().enumerate() {
        let alone = m.trajectory(seeds[j], SLabel::R);
        assert_eq!(joint[j].zbar, alone.zbar);
        assert_eq!(joint[j].chi, alone.chi);
    }
}

#[test]
fn trajectories_are_reproducible() {
    let bg = small_bg();
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 6).unwrap();
    let mode =
        CslMode::new(&bg, 1.0, &CollapseOperatorSpec::amplitude(1.0, 0.0), &grid, StepControl::default()).unwrap();
    let a = mode.trajectory(99, SLabel::I);
    let b = mode.trajectory(99, SLabel::I);
    assert_eq!(a.zbar, b.zbar);
    assert_eq!(a.sigma, b.sigma);
    assert_ne!(a.zbar, mode.trajectory(100, SLabel::I).zbar);
    assert_eq!(mode.final_zbar(99), *a.zbar.last().unwrap());
}

#[test]
fn width_shrinks_with_collapse_strength() {
    let bg = small_bg();
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 5).unwrap();
    let mut last = f64::INFINITY;
    let mut diagnostics = Vec::new();
    for gamma in [0.0, 1e-4, 1e-2, 1.0, 1e2] {
        let spec = CollapseOperatorSpec::amplitude(gamma, 0.0);
        let d = collapse_diagnostics(
            &CslMode::new(&bg, 1.0, &spec, &grid, StepControl::default()).unwrap().trajectory(1, SLabel::R),
        );
        assert!(d.width_ratio_to_standard <= last * (1.0 + 1e-12), "gamma = {gamma}");
        last = d.width_ratio_to_standard;
        diagnostics.push(d);
    }
    assert!((diagnostics[0].width_ratio_to_standard - 1.0).abs() < 1e-12);
    assert!(!diagnostics[0].collapsed);
    assert!(diagnostics[4].collapsed, "{:?}", diagnostics[4]);
}

#[test]
fn step_halving_converges() {
    let bg = BackgroundModel::new(1.0, 0.01, -30.0, -1e-2, 1.0).unwrap();
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 4).unwrap();
    let spec = CollapseOperatorSpec::amplitude(1.0, -0.5);
    let coarse = CslMode::new(&bg, 2.0, &spec, &grid, StepControl::default()).unwrap();
    let fine = CslMode::new(&bg, 2.0, &spec, &grid, StepControl::default().halved()).unwrap();
    assert!(fine.substeps() > coarse.substeps());
    for (a, b) in coarse.omega().iter().zip(fine.omega()) {
        assert!((a - b).norm() < 1e-8 * b.norm());
    }
    let seeds: Vec<u64> = (0..4000).collect();
    let (sc, sf) = (coarse.ensemble_statistics(&seeds), fine.ensemble_statistics(&seeds));
    let moments = lindblad_moments(&bg, 2.0, &spec, &grid).unwrap();
    let last = grid.len() - 1;
    let xx = moments.xx[last] - 1.0 / (4.0 * fine.omega()[last].re);
    for s in [&sc, &sf] {
        let pull = (s.mean_sq(last) - xx) / s.mean_sq_error(last);
        assert!(pull.abs() < 4.0, "pull {pull}");
    }
}

#[test]
fn spectrum_estimator_on_synthetic_gaussians() {
    let ks = [0.5, 1.0, 3.0];
    let sigma = 2e-3;
    let n = 20_000;
    let samples: Vec<Vec<f64>> = (0..ks.len())
        .map(|j| {
            let mut rng = counter_rng(7, j as u64);
            (0..n).map(|_| sigma * normal(&mut rng) + 1.0).collect()
        })
        .collect();
    let est = SpectrumEstimate::from_samples(&ks, &samples).unwrap();
    for (j, &k) in ks.iter().enumerate() {
        let truth = k.powi(3) / (2.0 * PI * PI) * sigma * sigma;
        assert!((est.p[j] - truth).abs() < 4.0 * est.p_err[j], "k = {k}");
        assert!((est.p_err[j] / est.p[j] - (2.0 / (n - 1) as f64).sqrt()).abs() < 1e-15);
    }
}

#[test]
fn estimate_spectrum_bins_by_mode() {
    let bg = small_bg();
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 4).unwrap();
    let spec = CollapseOperatorSpec::amplitude(1.0, 0.0);
    let mut ensemble = Vec::new();
    for k in [2.0, 1.0] {
        let mode = CslMode::new(&bg, k, &spec, &grid, StepControl::default()).unwrap();
        ensemble.extend((0..50).map(|s| mode.trajectory(s, SLabel::R)));
    }
    let est = estimate_spectrum(&ensemble, bg.eta_end).unwrap();
    assert_eq!(est.k_grid, vec![1.0, 2.0]);
    assert_eq!(est.n_traj, vec![50, 50]);
    assert!(est.p.iter().all(|&p| p > 0.0));
}

#[test]
fn fitter_errors_have_unit_pulls() {
    let (n_s, amp, rel) = (0.96, 2e-9, 0.05);
    let k: Vec<f64> = (0..10).map(|i| 10f64.powf(-1.0 + 0.2 * i as f64)).collect();
    let pulls: Vec<f64> = (0..400)
        .map(|r| {
            let mut rng = counter_rng(3, r);
            let p: Vec<f64> = k.iter().map(|k| amp * k.powf(n_s - 1.0) * (1.0 + rel * normal(&mut rng))).collect();
            let est = SpectrumEstimate {
                p_err: p.iter().map(|p| rel * p).collect(),
                n_traj: vec![1000; k.len()],
                k_grid: k.clone(),
                p,
                meta: Default::default(),
            };
            let fit = fit_spectral_index(&est, (k[0], k[9])).unwrap();
            (fit.n_s - n_s) / fit.n_s_error()
        })
        .collect();
    let mean = pulls.iter().sum::<f64>() / pulls.len() as f64;
    let sd = (pulls.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (pulls.len() - 1) as f64).sqrt();
    assert!(mean.abs() < 0.2, "mean pull {mean}");
    assert!((sd - 1.0).abs() < 0.15, "pull spread {sd}");
}

/// `int_0^inf x^(n-2) j_l(x)^2 dx` in closed form.
fn power_law_integral(l: usize, n: f64) -> f64 {
    let l = l as f64;
    ((n - 4.0) * 2f64.ln() + PI.ln() + ln_gamma(3.0 - n) + ln_gamma(l + 0.5 * (n - 1.0))
        - 2.0 * ln_gamma(0.5 * (4.0 - n))
        - ln_gamma(l + 0.5 * (5.0 - n)))
    .exp()
}

#[test]
fn cls_match_power_law_closed_form() {
    for (n_s, delta_eta) in [(1.0, 1.0), (0.9649, 1.0), (1.1, 2.5)] {
        let amp = 2.1e-9;
        let cls = compute_cls(|k| amp * k.powf(n_s - 1.0), delta_eta, 40).unwrap();
        for l in cls.ells() {
            let want = amp * delta_eta.powf(1.0 - n_s) * power_law_integral(l, n_s);
            assert!((cls.c(l) / want - 1.0).abs() < 2e-4, "n_s = {n_s}, l = {l}: {} vs {want}", cls.c(l));
            assert!(cls.error[l - 2] < 1e-4 * cls.c(l));
        }
        let d: Vec<f64> = cls.ells().map(|l| (l * (l + 1)) as f64 * cls.c(l)).collect();
        if n_s < 1.0 {
            assert!(d.windows(2).all(|w| w[1] < w[0]));
        }
    }
}

#[test]
fn alm_variances_match_input() {
    let cls = ClSpectrum::from_values((2..=12).map(|l| 1.0 / (l * (l + 1)) as f64).collect(), 1.0);
    let n = 2000;
    let l = 10;
    let mut per_m = vec![0.0; l + 1];
    let mut c_hat = [0.0; 11];
    for seed in 0..n {
        let alm = synthesize_alm(&cls, seed);
        for (m, acc) in per_m.iter_mut().enumerate() {
            *acc += alm.get(l, m as i64).norm_sqr();
        }
        for e in estimate_cls(&alm, Some(&cls)) {
            c_hat[e.l - 2] += e.c_hat;
        }
    }
    let c = cls.c(l);
    // |a_l0|^2 has relative variance 2, |a_lm|^2 (m > 0) relative variance 1
    for (m, acc) in per_m.iter().enumerate() {
        let sd = if m == 0 { 2f64.sqrt() } else { 1.0 } * c / (n as f64).sqrt();
        assert!((acc / n as f64 - c).abs() < 4.0 * sd, "m = {m}");
    }
    for l in cls.ells() {
        let sd = (cls.cosmic_variance(l) / n as f64).sqrt();
        assert!((c_hat[l - 2] / n as f64 - cls.c(l)).abs() < 4.0 * sd, "l = {l}");
    }
}

#[test]
fn analytic_spectrum_scaling() {
    let bg = BackgroundModel::new(1.0, 0.01, -1e3, -1e-3, 1e-11).unwrap();
    let ks = [1.0, 2.0, 5.0];
    let zero = analytic_csl_spectrum(
        &bg,
        &CollapseOperatorSpec::density_contrast(0.0, 1.0),
        &AnalyticSpectrumParams::new(Regime::InflationCrossing),
        &ks,
    )
    .unwrap();
    assert!(zero.iter().all(|p| p.p_csl == p.p_std && p.correction == 0.0));
    for regime in [Regime::InflationCrossing, Regime::RadiationCrossing] {
        let params = AnalyticSpectrumParams::new(regime);
        let one = analytic_csl_spectrum(&bg, &CollapseOperatorSpec::density_contrast(1e5, 1.0), &params, &ks).unwrap();
        let two = analytic_csl_spectrum(&bg, &CollapseOperatorSpec::density_contrast(2e5, 1.0), &params, &ks).unwrap();
        for (a, b) in one.iter().zip(&two) {
            assert!((b.correction / a.correction - 2.0).abs() < 1e-12);
        }
        let slope = (one[2].correction / one[0].correction).ln() / 5f64.ln();
        assert!((slope - params.frak_b()).abs() < 1e-10);
        let spec = CollapseOperatorSpec::density_contrast(1e5, 1.0);
        let o1 = calibrate_o1(&bg, &spec, regime, 2.0, 0.37).unwrap();
        let cal =
            analytic_csl_spectrum(&bg, &spec, &AnalyticSpectrumParams { o1_prefactor: o1, regime }, &[2.0]).unwrap();
        assert!((cal[0].correction - 0.37).abs() < 1e-12);
    }
}

#[test]
fn exclusion_is_upward_closed_in_lambda() {
    let bg = BackgroundModel::new(1e-5, 0.01, -1e30, -1e-3, 1e-11).unwrap();
    let rc = log_grid(1e-2, 1e40, 12).unwrap();
    let lambda = log_grid(1e-140, 1e-20, 24).unwrap();
    let map = exclusion_scan(
        &rc,
        &lambda,
        &bg,
        &CollapseOperatorSpec::density_contrast(1.0, 1.0),
        &Criterion::default_for(&bg),
    )
    .unwrap();
    assert_eq!(map.cells(), 12 * 24);
    let mut any = false;
    for row in &map.excluded {
        let first = row.iter().position(|&e| e).unwrap_or(row.len());
        assert!(row[first..].iter().all(|&e| e));
        any |= first < row.len();
    }
    assert!(any);
    assert!(map.failures.iter().flatten().all(Option::is_none));
}
