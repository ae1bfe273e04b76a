//! Monte Carlo spectrum over a band of modes and its fitted tilt.

use collapsim::background::{log_time_grid, BackgroundModel};
use collapsim::csl::{trajectory_seed, CollapseOperatorSpec, CslMode, SLabel, StepControl};
use collapsim::modes::standard_spectrum_end;
use collapsim::spectrum::{fit_spectral_index, SpectrumEstimate};

fn main() -> collapsim::Result<()> {
    let bg = BackgroundModel::new(1.0, 0.01, -1e3, -1e-2, 1.0)?;
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 4)?;
    let spec = CollapseOperatorSpec {
        m0: 1.0,
        r_c: 0.2,
        include_smoothing: true,
        ..CollapseOperatorSpec::amplitude(1.0, -0.5)
    };
    let n = 2000;

    let ks: Vec<f64> = (0..6).map(|i| 10f64.powf(i as f64 / 5.0)).collect();
    let mut samples = Vec::new();
    let mut corrections = Vec::new();
    for (j, &k) in ks.iter().enumerate() {
        let mode = CslMode::new(&bg, k, &spec, &grid, StepControl::default())?;
        let zbar: Vec<f64> = (0..n).map(|i| mode.final_zbar(trajectory_seed(7, j, SLabel::R, i))).collect();
        let one = SpectrumEstimate::from_samples(&[k], std::slice::from_ref(&zbar))?;
        corrections.push(one.p[0] / standard_spectrum_end(&bg, k)?);
        samples.push(zbar);
    }
    let est = SpectrumEstimate::from_samples(&ks, &samples)?;
    for i in 0..ks.len() {
        println!("k = {:6.3}  P = {:.4e} +- {:.1e}  P/P_std = {:.4e}", ks[i], est.p[i], est.p_err[i], corrections[i]);
    }
    let fit = fit_spectral_index(&est, (ks[0], ks[5]))?;
    println!("n_s - 1 = {:.3} +- {:.3}", fit.n_s - 1.0, fit.n_s_error());
    Ok(())
}
