use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSubcommand};
use collapsim::config::parse_config;
use collapsim::pipeline::{run_pipeline, ScanOverrides, Subcommand};
use collapsim::Error;

#[derive(Parser)]
#[command(name = "collapsim", version, about = "CSL cosmological perturbation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `[run] output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ClapSubcommand)]
enum Command {
    Background {
        #[command(flatten)]
        common: Common,
    },
    Modes {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        k: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        eta_end: Option<f64>,
    },
    Csl {
        #[command(subcommand)]
        action: CslAction,
    },
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        analytic: bool,
    },
    Cls {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        synthesize: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rc_min: Option<f64>,
        #[arg(long)]
        rc_max: Option<f64>,
        #[arg(long)]
        lambda_min: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
    },
}

#[derive(ClapSubcommand)]
enum CslAction {
    Run {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, Error> {
    let (common, cmd) = match cli.command {
        Command::Background { common } => (common, Subcommand::Background),
        Command::Modes { common, k, eta_end } => (common, Subcommand::Modes { k, eta_end }),
        Command::Csl { action: CslAction::Run { common } } => (common, Subcommand::CslRun),
        Command::Spectrum { common, analytic } => (common, Subcommand::Spectrum { analytic }),
        Command::Cls { common, analytic, synthesize, seed } => (common, Subcommand::Cls { analytic, synthesize, seed }),
        Command::Scan { common, rc_min, rc_max, lambda_min, lambda_max, nx, ny } => {
            (common, Subcommand::Scan(ScanOverrides { rc_min, rc_max, lambda_min, lambda_max, nx, ny }))
        }
    };
    let text = std::fs::read_to_string(&common.config).map_err(|_| Error::MissingInput(common.config.clone()))?;
    let mut cfg = parse_config(&text)?;
    if let Some(out) = common.out {
        cfg.run.output_dir = out;
    }
    Ok(run_pipeline(&cfg, &cmd)?.files)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("COLLAPSIM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // ignore failure if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = serde_json::json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
            eprintln!("{record}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
