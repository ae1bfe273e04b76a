//! File-producing subcommands.
//!
//! Every CSV starts with `#` metadata lines (tool version, config hash,
//! seeds) followed by a column header. JSON sidecars carry the same
//! metadata. The effective configuration is echoed to
//! `effective_config.toml` in the output directory on every run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::background::{log_time_grid, BackgroundModel, ModeBackground, RcCrossing};
use crate::cmb::{compute_cls, estimate_cls, synthesize_alm};
use crate::config::RunConfig;
use crate::constraints::{exclusion_scan, log_grid, Criterion, PivotWindow};
use crate::csl::{collapse_diagnostics, lindblad_moments, trajectory_seed, CslMode, SLabel};
use crate::error::{Error, Result};
use crate::modes::{evolve_bogoliubov_with, evolve_omega_with, spectrum_heisenberg};
use crate::ode::GaussLegendre;
use crate::rng::derive_seed;
use crate::spectrum::{analytic_csl_spectrum, fit_spectral_index, AnalyticSpectrumParams, Regime, SpectrumEstimate};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanOverrides {
    pub rc_min: Option<f64>,
    pub rc_max: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Subcommand {
    Background,
    /// Mode functions for the given wavenumbers (config `k` list when
    /// empty), optionally up to an earlier `eta_end`.
    Modes {
        k: Vec<f64>,
        eta_end: Option<f64>,
    },
    CslRun,
    Spectrum {
        analytic: bool,
    },
    Cls {
        analytic: bool,
        synthesize: Option<usize>,
        seed: u64,
    },
    Scan(ScanOverrides),
}

/// Paths written by one subcommand.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    hash: String,
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Context<'_> {
    fn header(&self, seeds: &str, extra: &[String]) -> String {
        let mut h = format!("# collapsim {VERSION}\n# config_sha256: {}\n# seeds: {seeds}\n", self.hash);
        for line in extra {
            let _ = writeln!(h, "# {line}");
        }
        h
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }

    fn write_csv(&mut self, name: &str, seeds: &str, extra: &[String], columns: &[&str], rows: &str) -> Result<()> {
        let body = format!("{}{}\n{rows}", self.header(seeds, extra), columns.join(","));
        self.write(name, &body)
    }

    fn write_json(&mut self, name: &str, seeds: Value, payload: Value) -> Result<()> {
        let doc = json!({
            "tool": "collapsim",
            "version": VERSION,
            "config_sha256": self.hash,
            "seeds": seeds,
            "data": payload,
        });
        let text = serde_json::to_string_pretty(&doc).expect("json serializes");
        self.write(name, &(text + "\n"))
    }
}

pub fn run_pipeline(cfg: &RunConfig, cmd: &Subcommand) -> Result<Artifacts> {
    cfg.validate()?;
    let dir = cfg.run.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut ctx = Context { cfg, hash: cfg.hash(), dir, files: Vec::new() };
    ctx.write("effective_config.toml", &cfg.to_toml())?;
    match cmd {
        Subcommand::Background => background(&mut ctx)?,
        Subcommand::Modes { k, eta_end } => modes(&mut ctx, k, *eta_end)?,
        Subcommand::CslRun => csl_run(&mut ctx)?,
        Subcommand::Spectrum { analytic: false } => spectrum(&mut ctx)?,
        Subcommand::Spectrum { analytic: true } => spectrum_analytic(&mut ctx)?,
        Subcommand::Cls { analytic, synthesize, seed } => cls(&mut ctx, *analytic, *synthesize, *seed)?,
        Subcommand::Scan(o) => scan(&mut ctx, o)?,
    }
    Ok(Artifacts { files: ctx.files })
}

fn grid(cfg: &RunConfig, bg: &BackgroundModel) -> Result<Vec<f64>> {
    log_time_grid(bg.eta_ini, bg.eta_end, cfg.run.grid_per_decade)
}

fn background(ctx: &mut Context) -> Result<()> {
    let bg = ctx.cfg.background_model()?;
    let mut rows = String::new();
    for eta in grid(ctx.cfg, &bg)? {
        let s = bg.eval(eta)?;
        let _ = writeln!(rows, "{eta},{},{},{},{},{}", s.a, s.z, s.z_prime_over_z, s.z_pp_over_z, s.a_h);
    }
    ctx.write_csv("background.csv", "none", &[], &["eta", "a", "z", "z_prime_over_z", "z_pp_over_z", "a_h"], &rows)?;
    let crossings: Vec<Value> = ctx
        .cfg
        .k_values()
        .iter()
        .map(|&k| {
            let c = bg.rc_crossing_time(k, ctx.cfg.csl.r_c);
            let label = match c {
                RcCrossing::BeforeStart => "before_start",
                RcCrossing::During(_) => "during",
                RcCrossing::AfterEnd => "after_end",
            };
            json!({ "k": k, "crossing": label, "eta": c.time() })
        })
        .collect();
    let payload = json!({
        "model": bg,
        "hubble_rate": bg.hubble_rate(),
        "hubble_radius_end": bg.hubble_radius_end(),
        "rho_end_g_per_cm3": bg.rho_end_g_per_cm3(),
        "r_c": ctx.cfg.csl.r_c,
        "rc_crossings": crossings,
    });
    ctx.write_json("background.json", Value::Null, payload)
}

fn modes(ctx: &mut Context, k: &[f64], eta_end: Option<f64>) -> Result<()> {
    let mut bg = ctx.cfg.background_model()?;
    if let Some(e) = eta_end {
        let b = &ctx.cfg.background;
        bg = BackgroundModel::new(b.h_star, b.eps1, b.eta_ini, e, b.rho_end)?;
    }
    let ks = if k.is_empty() { ctx.cfg.k_values() } else { k.to_vec() };
    let solver = GaussLegendre::with_rtol(ctx.cfg.run.rtol);
    let grid = grid(ctx.cfg, &bg)?;
    let mut summary = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        if !(k > 0.0) {
            return Err(Error::Config(format!("k must be positive, got {k}")));
        }
        let tr = evolve_bogoliubov_with(&bg, k, &grid, &solver)?;
        let om = evolve_omega_with(&bg, k, &grid, &solver)?;
        let sq = tr.squeezing();
        let mut rows = String::new();
        let mut worst = 0.0f64;
        for (j, &eta) in grid.iter().enumerate() {
            let (u, v, s, o) = (tr.u[j], tr.v[j], sq[j], om.omega[j]);
            let p = spectrum_heisenberg(&tr, &bg, eta)?;
            worst = worst.max((tr.wronskian(j) - 1.0).abs());
            let _ = writeln!(
                rows,
                "{eta},{},{},{},{},{},{},{},{},{},{p}",
                u.re, u.im, v.re, v.im, s.r, s.phi, s.theta, o.re, o.im
            );
        }
        let name = format!("modes_k{i:02}.csv");
        let columns = ["eta", "re_u", "im_u", "re_v", "im_v", "r", "phi", "theta", "re_omega", "im_omega", "p_zeta"];
        ctx.write_csv(&name, "none", &[format!("k: {k}")], &columns, &rows)?;
        summary.push(json!({ "k": k, "file": name, "max_wronskian_deviation": worst }));
    }
    ctx.write_json("modes.json", Value::Null, json!({ "eta_end": bg.eta_end, "modes": summary }))
}

fn label_of(index: usize) -> SLabel {
    if index.is_multiple_of(2) {
        SLabel::R
    } else {
        SLabel::I
    }
}

fn csl_run(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.cfg;
    let bg = cfg.background_model()?;
    let spec = cfg.collapse_spec();
    let grid = grid(cfg, &bg)?;
    let base = cfg.run.base_seed;
    let n = cfg.run.n_traj;
    let seeds_line = format!("base_seed={base} per_trajectory=derive(base_seed, k_index, label, index)");
    let mut summary = Vec::new();
    for (ki, &k) in cfg.k_values().iter().enumerate() {
        let mode = CslMode::new(&bg, k, &spec, &grid, cfg.step_control())?;
        let seeds: Vec<(SLabel, u64)> = (0..n)
            .map(|j| {
                let l = label_of(j);
                (l, trajectory_seed(base, ki, l, j))
            })
            .collect();
        let finals: Vec<f64> = seeds.par_iter().map(|&(_, s)| mode.final_zbar(s)).collect();

        let saved: Vec<_> = seeds.iter().take(cfg.run.n_save).map(|&(l, s)| mode.trajectory(s, l)).collect();
        let mut rows = String::new();
        for (j, &eta) in grid.iter().enumerate() {
            let om = mode.omega()[j];
            let _ = write!(rows, "{eta},{},{}", om.re, om.im);
            for t in &saved {
                let _ = write!(rows, ",{}", t.zbar[j]);
            }
            rows.push('\n');
        }
        let mut columns = vec!["eta".to_string(), "re_omega".into(), "im_omega".into()];
        columns.extend((0..saved.len()).map(|j| format!("zbar_{j}")));
        let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
        let traj_name = format!("csl_k{ki:02}.csv");
        ctx.write_csv(&traj_name, &seeds_line, &[format!("k: {k}")], &columns, &rows)?;

        let mut rows = String::new();
        for (j, (&(l, s), z)) in seeds.iter().zip(&finals).enumerate() {
            let _ = writeln!(rows, "{j},{l:?},{s},{z}");
        }
        let ens_name = format!("ensemble_k{ki:02}.csv");
        ctx.write_csv(&ens_name, &seeds_line, &[format!("k: {k}")], &["index", "label", "seed", "zbar_end"], &rows)?;

        let last = grid.len() - 1;
        let nf = n as f64;
        let mean = finals.iter().sum::<f64>() / nf;
        let var = finals.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let re_end = mode.omega()[last].re;
        let z_end = mode.z()[last];
        let diag = match saved.first() {
            Some(t) => collapse_diagnostics(t),
            None => collapse_diagnostics(&mode.trajectory(seeds[0].1, seeds[0].0)),
        };
        let oracle = lindblad_moments(&bg, k, &spec, &grid)?;
        summary.push(json!({
            "k": k,
            "k_index": ki,
            "n_traj": n,
            "trajectory_file": traj_name,
            "ensemble_file": ens_name,
            "substeps": mode.substeps(),
            "re_omega_end": re_end,
            "re_omega_standard_end": mode.re_omega_standard_end(),
            "width": diag.width,
            "width_ratio_to_standard": diag.width_ratio_to_standard,
            "collapsed": diag.collapsed,
            "zbar_mean_end": mean,
            "zbar_variance_end": var,
            "xx_ensemble_end": z_end * z_end * (var + mean * mean) + 0.25 / re_end,
            "xx_oracle_end": oracle.xx[last],
            "first_seeds": seeds.iter().take(4).map(|s| s.1).collect::<Vec<_>>(),
        }));
    }
    let seeds = json!({ "base_seed": base, "derivation": "derive(base_seed, k_index, label, index)" });
    ctx.write_json("csl_summary.json", seeds, json!({ "spec": spec, "modes": summary }))
}

/// Data rows of a CSV written by this tool, with the `# key: value`
/// metadata lines.
struct CsvTable {
    meta: Vec<(String, String)>,
    rows: Vec<Vec<String>>,
    path: PathBuf,
}

impl CsvTable {
    fn read(path: &Path, columns: usize) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let mut meta = Vec::new();
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (n, line) in text.lines().enumerate() {
            if let Some(m) = line.strip_prefix('#') {
                if let Some((k, v)) = m.split_once(':') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                header_seen = true;
                continue;
            }
            let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
            if cells.len() < columns {
                return Err(Error::MalformedInput {
                    path: path.to_path_buf(),
                    reason: format!("line {}: expected {columns} columns, got {}", n + 1, cells.len()),
                });
            }
            rows.push(cells);
        }
        Ok(Self { meta, rows, path: path.to_path_buf() })
    }

    fn meta_f64(&self, key: &str) -> Result<f64> {
        self.meta.iter().find(|(k, _)| k == key).and_then(|(_, v)| v.parse().ok()).ok_or_else(|| {
            Error::MalformedInput { path: self.path.clone(), reason: format!("missing `# {key}:` line") }
        })
    }

    fn column_f64(&self, col: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[col].parse().map_err(|_| Error::MalformedInput {
                    path: self.path.clone(),
                    reason: format!("data row {}: `{}` is not a number", i + 1, r[col]),
                })
            })
            .collect()
    }
}

fn spectrum(ctx: &mut Context) -> Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(&ctx.dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("ensemble_k") && n.ends_with(".csv"))
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::MissingInput(ctx.dir.join("ensemble_k00.csv")));
    }
    paths.sort();
    let mut ks = Vec::new();
    let mut samples = Vec::new();
    for p in &paths {
        let t = CsvTable::read(p, 4)?;
        ks.push(t.meta_f64("k")?);
        samples.push(t.column_f64(3)?);
    }
    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by(|&a, &b| ks[a].total_cmp(&ks[b]));
    let ks: Vec<f64> = order.iter().map(|&i| ks[i]).collect();
    let samples: Vec<Vec<f64>> = order.iter().map(|&i| samples[i].clone()).collect();
    let mut est = SpectrumEstimate::from_samples(&ks, &samples)?;
    est.meta.spec = Some(ctx.cfg.collapse_spec());
    est.meta.base_seed = Some(ctx.cfg.run.base_seed);
    est.meta.eta = Some(ctx.cfg.background.eta_end);

    let mut rows = String::new();
    for i in 0..est.len() {
        let _ = writeln!(rows, "{},{},{},{}", est.k_grid[i], est.p[i], est.p_err[i], est.n_traj[i]);
    }
    let seeds_line = format!("base_seed={}", ctx.cfg.run.base_seed);
    ctx.write_csv("spectrum.csv", &seeds_line, &[], &["k", "p", "p_err", "n_traj"], &rows)?;
    let fit = fit_spectral_index(&est, (0.0, f64::INFINITY)).ok();
    ctx.write_json(
        "spectrum.json",
        json!({ "base_seed": ctx.cfg.run.base_seed }),
        json!({ "estimate": est, "fit": fit }),
    )
}

fn spectrum_analytic(ctx: &mut Context) -> Result<()> {
    let bg = ctx.cfg.background_model()?;
    let spec = ctx.cfg.collapse_spec();
    let mut rows = String::new();
    let mut points = Vec::new();
    for k in ctx.cfg.k_values() {
        let regime = ctx.cfg.analytic.regime.unwrap_or_else(|| Regime::of(&bg, k, spec.r_c));
        let params = AnalyticSpectrumParams { o1_prefactor: ctx.cfg.analytic.o1_prefactor, regime };
        let p = analytic_csl_spectrum(&bg, &spec, &params, &[k])?[0];
        let _ = writeln!(rows, "{},{},{},{},{}", p.k, p.p_std, p.p_csl, p.correction, regime.name());
        points.push(json!({ "point": p, "regime": regime }));
    }
    ctx.write_csv("spectrum_analytic.csv", "none", &[], &["k", "p_std", "p_csl", "correction", "regime"], &rows)?;
    ctx.write_json("spectrum_analytic.json", Value::Null, json!({ "spec": spec, "points": points }))
}

/// Piecewise-linear interpolation in `ln k`, constant beyond the ends.
fn tabulated(k: Vec<f64>, p: Vec<f64>) -> impl Fn(f64) -> f64 + Sync {
    let x: Vec<f64> = k.iter().map(|k| k.ln()).collect();
    move |kk: f64| {
        let t = kk.ln();
        if t <= x[0] {
            return p[0];
        }
        if t >= x[x.len() - 1] {
            return p[p.len() - 1];
        }
        let i = x.partition_point(|&v| v <= t) - 1;
        let w = (t - x[i]) / (x[i + 1] - x[i]);
        p[i] + w * (p[i + 1] - p[i])
    }
}

fn cls(ctx: &mut Context, analytic: bool, synthesize: Option<usize>, seed: u64) -> Result<()> {
    let m = ctx.cfg.cmb.clone();
    let (cls, source) = if analytic {
        let f = |k: f64| m.a_s * (k / m.k_star).powf(m.n_s - 1.0);
        (compute_cls(f, m.delta_eta, m.l_max)?, "analytic power law".to_string())
    } else {
        let path = ctx.dir.join("spectrum.csv");
        let t = CsvTable::read(&path, 2)?;
        let (k, p) = (t.column_f64(0)?, t.column_f64(1)?);
        if k.is_empty() {
            return Err(Error::MalformedInput { path, reason: "no data rows".into() });
        }
        (compute_cls(tabulated(k, p), m.delta_eta, m.l_max)?, "spectrum.csv".to_string())
    };
    let mut rows = String::new();
    for l in cls.ells() {
        let _ = writeln!(rows, "{l},{},{}", cls.c(l), cls.cosmic_variance(l));
    }
    let extra = [format!("source: {source}"), format!("delta_eta: {}", m.delta_eta)];
    ctx.write_csv("cls.csv", "none", &extra, &["l", "c_l", "cosmic_variance"], &rows)?;

    let mut synthesis = Value::Null;
    if let Some(n) = synthesize {
        if n < 2 {
            return Err(Error::Config("--synthesize needs at least 2 realizations".into()));
        }
        let per_real: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|r| {
                let alm = synthesize_alm(&cls, derive_seed(seed, &[r as u64]));
                estimate_cls(&alm, Some(&cls)).into_iter().map(|e| e.c_hat).collect()
            })
            .collect();
        let nf = n as f64;
        let mut rows = String::new();
        let mut stats = Vec::new();
        for (i, l) in cls.ells().enumerate() {
            let mean = per_real.iter().map(|v| v[i]).sum::<f64>() / nf;
            let var = per_real.iter().map(|v| (v[i] - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            let c = cls.c(l);
            let _ = writeln!(rows, "{l},{c},{mean},{var},{}", cls.cosmic_variance(l));
            stats.push(json!({ "l": l, "c_l": c, "mean_c_hat": mean, "var_c_hat": var }));
        }
        let seeds_line = format!("synthesis_seed={seed} per_realization=derive(seed, index)");
        let columns = ["l", "c_l", "mean_c_hat", "var_c_hat", "cosmic_variance"];
        ctx.write_csv("cls_synthesis.csv", &seeds_line, &[format!("realizations: {n}")], &columns, &rows)?;
        synthesis = json!({ "realizations": n, "seed": seed, "per_l": stats });
    }
    let seeds = if synthesize.is_some() { json!({ "synthesis_seed": seed }) } else { Value::Null };
    ctx.write_json("cls.json", seeds, json!({ "cls": cls, "source": source, "synthesis": synthesis }))
}

fn scan(ctx: &mut Context, o: &ScanOverrides) -> Result<()> {
    let s = &ctx.cfg.scan;
    let bg = ctx.cfg.background_model()?;
    let (rc_min, rc_max) = (o.rc_min.unwrap_or(s.rc_min), o.rc_max.unwrap_or(s.rc_max));
    let (l_min, l_max) = (o.lambda_min.unwrap_or(s.lambda_min), o.lambda_max.unwrap_or(s.lambda_max));
    let (nx, ny) = (o.nx.unwrap_or(s.nx), o.ny.unwrap_or(s.ny));
    let rc = log_grid(rc_min, rc_max, nx).map_err(|e| Error::Config(e.to_string()))?;
    let lambda = log_grid(l_min, l_max, ny).map_err(|e| Error::Config(e.to_string()))?;
    let mut window = PivotWindow::default_for(&bg);
    window.k_pivot = s.k_pivot.unwrap_or(window.k_pivot);
    window.decades = s.decades;
    window.n = s.n_k;
    let criterion = Criterion { threshold: s.threshold, window, o1_prefactor: ctx.cfg.analytic.o1_prefactor };
    let map = exclusion_scan(&rc, &lambda, &bg, &ctx.cfg.collapse_spec(), &criterion)?;
    let mut rows = String::new();
    for (i, &r) in map.r_c.iter().enumerate() {
        for (j, &l) in map.lambda.iter().enumerate() {
            let _ = writeln!(rows, "{r},{l},{},{},{}", map.delta_ns[i][j], map.regime[i].name(), map.excluded[i][j]);
        }
    }
    let extra = [
        format!("threshold: {}", criterion.threshold),
        format!("k_pivot: {}", window.k_pivot),
        format!("regime_switch_rc: {}", bg.scale_factor(bg.eta_end) / window.k_pivot),
    ];
    ctx.write_csv("exclusion.csv", "none", &extra, &["r_c", "lambda", "delta_ns", "regime", "excluded"], &rows)?;
    let payload = json!({ "config": ctx.cfg, "map": map });
    ctx.write_json("exclusion.json", Value::Null, payload)
}
