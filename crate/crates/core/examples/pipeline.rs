//! The file-producing pipeline driven from a TOML document, as the
//! `collapsim` binary does it.

use collapsim::config::parse_config;
use collapsim::pipeline::{run_pipeline, ScanOverrides, Subcommand};

const CONFIG: &str = r#"
[background]
h_star = 1.0
eps1 = 0.01
eta_ini = -30.0
eta_end = -0.01
rho_end = 1.0

[csl]
gamma = 1.0
m0 = 1.0
p_exponent = -0.5

[run]
k = [1.0, 2.0, 4.0, 8.0]
n_traj = 200
grid_per_decade = 5

[scan]
nx = 8
ny = 8
"#;

fn main() -> collapsim::Result<()> {
    let mut cfg = parse_config(CONFIG)?;
    cfg.run.output_dir = std::env::temp_dir().join("collapsim-example");
    println!("config sha256 {}", cfg.hash());

    let steps = [
        Subcommand::Background,
        Subcommand::Modes { k: vec![], eta_end: None },
        Subcommand::CslRun,
        Subcommand::Spectrum { analytic: false },
        Subcommand::Spectrum { analytic: true },
        Subcommand::Cls { analytic: false, synthesize: Some(20), seed: 1 },
        Subcommand::Scan(ScanOverrides::default()),
    ];
    for cmd in &steps {
        let files = run_pipeline(&cfg, cmd)?.files;
        let names: Vec<_> = files.iter().filter_map(|f| f.file_name()?.to_str()).collect();
        println!("{cmd:?}: {}", names.join(" "));
    }
    Ok(())
}
