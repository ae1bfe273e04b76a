//! Sachs-Wolfe multipoles of a tilted spectrum and a few sky realizations.

use collapsim::cmb::{compute_cls, estimate_cls, synthesize_alm};

fn main() -> collapsim::Result<()> {
    let (a_s, n_s) = (2.1e-9, 0.9649);
    let cls = compute_cls(|k| a_s * k.powf(n_s - 1.0), 1.0, 30)?;

    println!("{:>3} {:>14} {:>12}", "l", "l(l+1)C_l/2pi", "quad error");
    for l in [2, 3, 5, 10, 20, 30] {
        let d = (l * (l + 1)) as f64 * cls.c(l) / (2.0 * std::f64::consts::PI);
        println!("{l:>3} {d:>14.5e} {:>12.1e}", cls.error[l - 2] / cls.c(l));
    }

    for seed in 0..3 {
        let alm = synthesize_alm(&cls, seed);
        let est = estimate_cls(&alm, Some(&cls));
        let ratio: Vec<String> = est.iter().take(4).map(|e| format!("{:.2}", e.c_hat / cls.c(e.l))).collect();
        println!("sky {seed}: C_hat/C for l = 2..5: {}", ratio.join(" "));
    }
    Ok(())
}
