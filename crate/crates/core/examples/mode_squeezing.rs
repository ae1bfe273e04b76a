//! Bogoliubov evolution of one mode through Hubble crossing and the
//! squeezing parameters it implies.

use collapsim::background::{log_time_grid, BackgroundModel};
use collapsim::modes::{evolve_bogoliubov, wavefunction_ab};

fn main() -> collapsim::Result<()> {
    let bg = BackgroundModel::new(1e-5, 0.01, -1e3, -1e-3, 1e-11)?;
    let k = 1.0;
    let grid = log_time_grid(bg.eta_ini, bg.eta_end, 2)?;
    let traj = evolve_bogoliubov(&bg, k, &grid)?;

    println!("{:>11} {:>9} {:>9} {:>12}", "k|eta|", "r", "phi", "|u|^2-|v|^2");
    for (i, s) in traj.squeezing().iter().enumerate() {
        println!("{:>11.3e} {:>9.4} {:>9.4} {:>12.3e}", -k * grid[i], s.r, s.phi, traj.wronskian(i) - 1.0);
    }

    let last = traj.squeezing().pop().unwrap();
    let (a, b) = wavefunction_ab(&last);
    println!("two-mode wave function at the end: A = {a:.4e}, B = {b:.4e}");
    Ok(())
}
