//! A few stochastic trajectories of one mode with the amplitude collapse
//! operator, and how the wave-function width responds to gamma.

use collapsim::background::{log_time_grid, BackgroundModel};
use collapsim::csl::{collapse_diagnostics, CollapseOperatorSpec, CslMode, SLabel, StepControl};

fn main() -> collapsim::Result<()> {
    let bg = BackgroundModel::new(1.0, 0.01, -30.0, -1e-2, 1.0)?;
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 4)?;
    let k = 2.0;

    let spec = CollapseOperatorSpec { m0: 1.0, ..CollapseOperatorSpec::amplitude(1.0, -0.5) };
    let mode = CslMode::new(&bg, k, &spec, &grid, StepControl::default())?;
    println!("{} substeps per trajectory", mode.substeps());
    for seed in 0..3 {
        let t = mode.trajectory(seed, SLabel::R);
        let tail: Vec<String> = t.zbar.iter().rev().take(3).rev().map(|v| format!("{v:+.3e}")).collect();
        println!("seed {seed}: zeta_bar at last nodes = [{}]", tail.join(", "));
    }

    println!("{:>8} {:>14} {:>10}", "gamma", "width ratio", "collapsed");
    for gamma in [0.0, 1e-3, 1e-1, 10.0] {
        let spec = spec.with_gamma(gamma);
        let t = CslMode::new(&bg, k, &spec, &grid, StepControl::default())?.trajectory(0, SLabel::R);
        let d = collapse_diagnostics(&t);
        println!("{gamma:>8.0e} {:>14.4e} {:>10}", d.width_ratio_to_standard, d.collapsed);
    }
    Ok(())
}
