//! Ensemble second moments against the deterministic averaged dynamics.

use collapsim::background::{log_time_grid, BackgroundModel};
use collapsim::csl::{lindblad_moments, CollapseOperatorSpec, CslMode, StepControl};

fn main() -> collapsim::Result<()> {
    let bg = BackgroundModel::new(1.0, 0.01, -30.0, -1e-2, 1.0)?;
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 2)?;
    let k = 2.0;
    let spec = CollapseOperatorSpec { m0: 1.0, ..CollapseOperatorSpec::amplitude(0.5, -0.5) };

    let mode = CslMode::new(&bg, k, &spec, &grid, StepControl::default())?;
    let seeds: Vec<u64> = (0..5000).collect();
    let stats = mode.ensemble_statistics(&seeds);
    let moments = lindblad_moments(&bg, k, &spec, &grid)?;

    println!("{:>10} {:>13} {:>13} {:>7}", "eta", "<x^2> MC", "<x^2> exact", "pull");
    for (i, eta) in grid.iter().enumerate() {
        // total variance = spread of the means + width of each state
        let mc = stats.mean_sq(i) + 1.0 / (4.0 * mode.omega()[i].re);
        let pull = (mc - moments.xx[i]) / stats.mean_sq_error(i).max(1e-300);
        println!("{:>10.3e} {mc:>13.6e} {:>13.6e} {pull:>7.2}", eta, moments.xx[i]);
    }
    Ok(())
}
