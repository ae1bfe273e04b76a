//! The standard spectrum computed from mode functions and from the Gaussian
//! wave-function width.

use collapsim::background::{log_time_grid, BackgroundModel};
use collapsim::modes::{evolve_bogoliubov, evolve_omega, spectrum_heisenberg, spectrum_schrodinger};

fn main() -> collapsim::Result<()> {
    let bg = BackgroundModel::new(1e-5, 0.01, -1e3, -1e-3, 1e-11)?;
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 3)?;
    for k in [0.5, 1.0, 5.0] {
        let modes = evolve_bogoliubov(&bg, k, &grid)?;
        let omega = evolve_omega(&bg, k, &grid)?;
        let ph = spectrum_heisenberg(&modes, &bg, bg.eta_end)?;
        let ps = spectrum_schrodinger(&omega, &bg, bg.eta_end)?;
        println!("k = {k}: P_mode = {ph:.6e}  P_width = {ps:.6e}  rel. diff = {:.1e}", (ph / ps - 1.0).abs());
    }
    // the scale-invariant de Sitter result for comparison
    let h = bg.hubble_rate();
    println!("H^2/(8 pi^2 eps1) = {:.6e}", h * h / (8.0 * std::f64::consts::PI.powi(2) * bg.eps1));
    Ok(())
}
