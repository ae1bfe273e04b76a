//! TOML run configuration.
//!
//! ```toml
//! [background]
//! h_star = 1e-5
//! eps1 = 0.01
//! eta_ini = -1e3
//! eta_end = -1e-2
//! rho_end = 1e-11
//!
//! [csl]
//! gamma = 1.0
//! preset = "amplitude"
//! p_exponent = -0.5
//!
//! [run]
//! k = [1.0, 2.0, 4.0]
//! n_traj = 1000
//! ```
//!
//! Only `[background]` is required. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::background::BackgroundModel;
use crate::csl::{CollapseOperatorSpec, Preset, StepControl, NUCLEON_MASS};
use crate::error::{Error, Result};
use crate::spectrum::Regime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSection {
    pub h_star: f64,
    pub eps1: f64,
    pub eta_ini: f64,
    pub eta_end: f64,
    #[serde(default = "default_rho_end")]
    pub rho_end: f64,
}

fn default_rho_end() -> f64 {
    1e-11
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CslSection {
    pub gamma: f64,
    pub m0: f64,
    pub r_c: f64,
    pub preset: Preset,
    pub p_exponent: f64,
    pub smoothing: bool,
    pub log_step: f64,
    pub phase_step: f64,
}

impl Default for CslSection {
    fn default() -> Self {
        let step = StepControl::default();
        Self {
            gamma: 0.0,
            m0: NUCLEON_MASS,
            r_c: 1.0,
            preset: Preset::Amplitude,
            p_exponent: 0.0,
            smoothing: false,
            log_step: step.log_step,
            phase_step: step.phase_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Comoving wavenumbers; empty means 16 log-spaced modes over three
    /// decades centred on the mode whose `r_c` crossing happens mid-run.
    pub k: Vec<f64>,
    pub n_traj: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Output nodes per decade of `|eta|`.
    pub grid_per_decade: usize,
    /// Trajectories written in full by `csl run`.
    pub n_save: usize,
    /// Relative tolerance of the deterministic integrators.
    pub rtol: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            k: Vec::new(),
            n_traj: 1000,
            base_seed: 42,
            output_dir: PathBuf::from("out"),
            grid_per_decade: 20,
            n_save: 8,
            rtol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticSection {
    pub o1_prefactor: f64,
    /// Fixed regime; when absent it is chosen per mode from the `r_c`
    /// crossing.
    pub regime: Option<Regime>,
}

impl Default for AnalyticSection {
    fn default() -> Self {
        Self { o1_prefactor: 1.0, regime: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CmbSection {
    pub delta_eta: f64,
    pub l_max: usize,
    /// Power law `a_s (k/k_star)^(n_s - 1)` used by `cls --analytic`.
    pub a_s: f64,
    pub n_s: f64,
    pub k_star: f64,
}

impl Default for CmbSection {
    fn default() -> Self {
        Self { delta_eta: 1.0, l_max: 50, a_s: 2.1e-9, n_s: 0.9649, k_star: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub rc_min: f64,
    pub rc_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub threshold: f64,
    /// Defaults to the mode leaving the Hubble radius 50 e-folds before the
    /// end of inflation.
    pub k_pivot: Option<f64>,
    pub decades: f64,
    pub n_k: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            rc_min: 1e-2,
            rc_max: 1e40,
            lambda_min: 1e-140,
            lambda_max: 1e-20,
            nx: 32,
            ny: 32,
            threshold: 3.0 * crate::constraints::N_S_SIGMA,
            k_pivot: None,
            decades: 3.0,
            n_k: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub background: BackgroundSection,
    #[serde(default)]
    pub csl: CslSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub analytic: AnalyticSection,
    #[serde(default)]
    pub cmb: CmbSection,
    #[serde(default)]
    pub scan: ScanSection,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.background_model().map_err(|e| Error::Config(format!("[background] {e}")))?;
        self.collapse_spec().validate().map_err(|e| Error::Config(format!("[csl] {e}")))?;
        let c = &self.csl;
        check(c.log_step > 0.0 && c.phase_step > 0.0, || "[csl] step control values must be positive".into())?;
        let r = &self.run;
        check(r.k.iter().all(|&k| k > 0.0 && k.is_finite()), || "[run] k values must be positive".into())?;
        check(r.n_traj >= 2, || format!("[run] n_traj must be at least 2, got {}", r.n_traj))?;
        check(r.grid_per_decade >= 1, || "[run] grid_per_decade must be at least 1".into())?;
        check(r.rtol > 0.0 && r.rtol < 1e-3, || "[run] rtol must be in (0, 1e-3)".into())?;
        check(self.analytic.o1_prefactor > 0.0, || "[analytic] o1_prefactor must be positive".into())?;
        let m = &self.cmb;
        check(m.delta_eta > 0.0, || "[cmb] delta_eta must be positive".into())?;
        check((2..=100).contains(&m.l_max), || "[cmb] l_max must be in [2, 100]".into())?;
        check(m.a_s > 0.0 && m.k_star > 0.0, || "[cmb] a_s and k_star must be positive".into())?;
        let s = &self.scan;
        check(0.0 < s.rc_min && s.rc_min <= s.rc_max, || "[scan] need 0 < rc_min <= rc_max".into())?;
        check(0.0 < s.lambda_min && s.lambda_min <= s.lambda_max, || {
            "[scan] need 0 < lambda_min <= lambda_max".into()
        })?;
        check(s.nx >= 1 && s.ny >= 1, || "[scan] nx and ny must be at least 1".into())?;
        check(s.threshold > 0.0, || "[scan] threshold must be positive".into())?;
        check(s.k_pivot.is_none_or(|k| k > 0.0), || "[scan] k_pivot must be positive".into())?;
        check(s.decades > 0.0 && s.n_k >= 4, || "[scan] need decades > 0 and n_k >= 4".into())?;
        Ok(())
    }

    pub fn background_model(&self) -> Result<BackgroundModel> {
        let b = &self.background;
        BackgroundModel::new(b.h_star, b.eps1, b.eta_ini, b.eta_end, b.rho_end)
    }

    pub fn collapse_spec(&self) -> CollapseOperatorSpec {
        let c = &self.csl;
        CollapseOperatorSpec {
            gamma: c.gamma,
            m0: c.m0,
            r_c: c.r_c,
            preset: c.preset,
            p_exponent: c.p_exponent,
            include_smoothing: c.smoothing,
        }
    }

    pub fn step_control(&self) -> StepControl {
        StepControl { log_step: self.csl.log_step, phase_step: self.csl.phase_step }
    }

    /// The configured modes, or the default grid.
    pub fn k_values(&self) -> Vec<f64> {
        if !self.run.k.is_empty() {
            return self.run.k.clone();
        }
        let b = &self.background;
        let bg = self.background_model().expect("validated");
        let k_mid = 1.0 / (bg.hubble_rate() * self.csl.r_c * (b.eta_ini * b.eta_end).sqrt());
        (0..16).map(|i| k_mid * 10f64.powf(-1.5 + 3.0 * i as f64 / 15.0)).collect()
    }

    /// The effective configuration with every default filled in.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`RunConfig::to_toml`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[background]\nh_star = 1e-5\neps1 = 0.01\neta_ini = -1e3\neta_end = -1e-2\n";

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.run.n_traj, 1000);
        assert_eq!(cfg.run.base_seed, 42);
        assert_eq!(cfg.k_values().len(), 16);
        assert_eq!(cfg.scan.threshold, 3.0 * 0.0042);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = format!("{MINIMAL}[csl]\ngama = 1.0\n");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("gama"), "{err}");
    }

    #[test]
    fn bad_ordering_rejected() {
        let text = MINIMAL.replace("eta_end = -1e-2", "eta_end = -1e4");
        assert!(matches!(parse_config(&text), Err(Error::Config(_))));
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn unknown_preset_rejected() {
        let text = format!("{MINIMAL}[csl]\npreset = \"delta_m\"\n");
        assert!(parse_config(&text).is_err());
    }
}
