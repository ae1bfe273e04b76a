//! Closed-form CSL spectrum in both regimes and calibration of its prefactor.

use collapsim::background::BackgroundModel;
use collapsim::csl::CollapseOperatorSpec;
use collapsim::spectrum::{analytic_csl_spectrum, calibrate_o1, AnalyticSpectrumParams, Regime};

fn main() -> collapsim::Result<()> {
    let bg = BackgroundModel::new(1e-5, 0.01, -1e3, -1e-3, 1e-11)?;
    let spec = CollapseOperatorSpec::density_contrast(1e-27, 10.0);
    let ks = [0.5, 1.0, 2.0, 4.0];

    for regime in [Regime::InflationCrossing, Regime::RadiationCrossing] {
        let params = AnalyticSpectrumParams::new(regime);
        println!("{} (a = {}, b = {})", regime.name(), params.frak_a(), params.frak_b());
        for p in analytic_csl_spectrum(&bg, &spec, &params, &ks)? {
            println!("  k = {:4}: P_std = {:.4e}  correction = {:.4e}", p.k, p.p_std, p.correction);
        }
    }
    println!("regime of k = 1 for r_c = 10: {}", Regime::of(&bg, 1.0, 10.0).name());

    // pretend a Monte Carlo run measured a 5% excess at k = 1
    let o1 = calibrate_o1(&bg, &spec, Regime::InflationCrossing, 1.0, 0.05)?;
    let params = AnalyticSpectrumParams { o1_prefactor: o1, regime: Regime::InflationCrossing };
    let p = analytic_csl_spectrum(&bg, &spec, &params, &[1.0])?;
    println!("calibrated o1 = {o1:.4e}, correction at k = 1 -> {:.4}", p[0].correction);
    Ok(())
}
