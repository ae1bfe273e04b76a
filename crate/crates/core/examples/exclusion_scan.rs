//! Coarse exclusion map of the (r_c, lambda) plane from the analytic
//! spectral-index shift.

use collapsim::background::BackgroundModel;
use collapsim::constraints::{exclusion_scan, log_grid, Criterion};
use collapsim::csl::CollapseOperatorSpec;

fn main() -> collapsim::Result<()> {
    let bg = BackgroundModel::new(1e-5, 0.01, -1e30, -1e-3, 1e-11)?;
    let criterion = Criterion::default_for(&bg);
    let rc = log_grid(1e-2, 1e40, 15)?;
    let lambda = log_grid(1e-140, 1e-20, 25)?;
    let map = exclusion_scan(&rc, &lambda, &bg, &CollapseOperatorSpec::density_contrast(1.0, 1.0), &criterion)?;

    println!("k_pivot = {:e}, threshold |delta n_s| > {}", criterion.window.k_pivot, criterion.threshold);
    println!("rows: r_c (log10), columns: lambda from 1e-140 to 1e-20; # = excluded");
    for (i, r) in rc.iter().enumerate() {
        let row: String = map.excluded[i].iter().map(|&e| if e { '#' } else { '.' }).collect();
        println!("{:>6.1} {} {}", r.log10(), row, map.regime[i].name());
    }
    Ok(())
}
