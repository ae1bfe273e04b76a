//! Quasi-de Sitter background and the r_c crossing times of a few modes.

use collapsim::background::{log_time_grid, planck_density_to_g_per_cm3, BackgroundModel, RcCrossing};

fn main() -> collapsim::Result<()> {
    let bg = BackgroundModel::new(1e-5, 0.01, -1e3, -1e-3, 1e-11)?;
    println!("H = {:e}, 1/(aH) at the end = {:e}", bg.hubble_rate(), bg.hubble_radius_end());
    println!("rho_end = {:e} g/cm^3", planck_density_to_g_per_cm3(bg.rho_end));

    println!("{:>12} {:>12} {:>12} {:>12}", "eta", "a", "z", "z''/z");
    for eta in log_time_grid(bg.eta_ini, bg.eta_end, 1)? {
        let s = bg.eval(eta)?;
        println!("{eta:>12.3e} {:>12.4e} {:>12.4e} {:>12.4e}", s.a, s.z, s.z_pp_over_z);
    }

    let r_c = 1e5;
    for k in [1e-3, 1.0, 1e3] {
        match bg.rc_crossing_time(k, r_c) {
            RcCrossing::During(eta) => println!("k = {k:e}: crosses r_c at eta = {eta:e}"),
            other => println!("k = {k:e}: {other:?}"),
        }
    }
    Ok(())
}
