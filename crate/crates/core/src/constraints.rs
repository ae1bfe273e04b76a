//! Exclusion scans of the `(r_c, lambda)` plane.
//!
//! Each cell converts `lambda` to `gamma`, picks the regime from whether the
//! pivot scale crosses `r_c` before the end of inflation, and compares the
//! spectral-index shift induced by the analytic CSL correction with a
//! threshold.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::BackgroundModel;
use crate::csl::CollapseOperatorSpec;
use crate::error::{domain, Result};
use crate::spectrum::{ln_correction, softplus, weighted_line, AnalyticSpectrumParams, Regime};

/// Observed scalar index and its one-sigma error.
pub const N_S_OBSERVED: f64 = 0.9649;
pub const N_S_SIGMA: f64 = 0.0042;

/// `lambda = gamma / (8 pi^{3/2} r_c^3)`.
pub fn lambda_from_gamma(gamma: f64, r_c: f64) -> f64 {
    gamma / (8.0 * PI.powf(1.5) * r_c.powi(3))
}

pub fn gamma_from_lambda(lambda: f64, r_c: f64) -> f64 {
    lambda * 8.0 * PI.powf(1.5) * r_c.powi(3)
}

/// Log-spaced `k` values `[k_pivot 10^{-d/2}, k_pivot 10^{d/2}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PivotWindow {
    pub k_pivot: f64,
    pub decades: f64,
    pub n: usize,
}

impl PivotWindow {
    /// Three decades centred on the mode that left the Hubble radius 50
    /// e-folds before the end of inflation.
    pub fn default_for(bg: &BackgroundModel) -> Self {
        Self { k_pivot: (-50f64).exp() / (-bg.eta_end), decades: 3.0, n: 16 }
    }

    pub fn k_values(&self) -> Vec<f64> {
        let lo = self.k_pivot.log10() - 0.5 * self.decades;
        let step = if self.n > 1 { self.decades / (self.n - 1) as f64 } else { 0.0 };
        (0..self.n).map(|i| 10f64.powf(lo + step * i as f64)).collect()
    }
}

/// Shift of the fitted spectral index caused by the CSL correction.
///
/// `ln P = ln P_std + ln(1 + correction)` and the unweighted fit is linear in
/// the data, so the standard part cancels and only `ln(1 + correction)`
/// needs fitting.
pub fn delta_ns_of(
    bg: &BackgroundModel,
    spec: &CollapseOperatorSpec,
    params: &AnalyticSpectrumParams,
    window: &PivotWindow,
) -> Result<f64> {
    if window.n < 4 || !(window.k_pivot > 0.0) || !(window.decades > 0.0) {
        return Err(domain("pivot window needs k_pivot > 0, decades > 0 and at least 4 points"));
    }
    let ks = window.k_values();
    let x: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let y: Vec<f64> = ks.iter().map(|&k| softplus(ln_correction(bg, spec, params, k))).collect();
    let ((_, slope, _), _) = weighted_line(&x, &y, &vec![1.0; x.len()]);
    if !slope.is_finite() {
        return Err(domain("non-finite spectral-index shift"));
    }
    Ok(slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    /// Cells with `|delta_ns|` above this are excluded.
    pub threshold: f64,
    pub window: PivotWindow,
    pub o1_prefactor: f64,
}

impl Criterion {
    pub fn default_for(bg: &BackgroundModel) -> Self {
        Self { threshold: 3.0 * N_S_SIGMA, window: PivotWindow::default_for(bg), o1_prefactor: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionMap {
    pub r_c: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Indexed `[i_rc][j_lambda]`.
    pub delta_ns: Vec<Vec<f64>>,
    pub regime: Vec<Regime>,
    pub excluded: Vec<Vec<bool>>,
    /// Failure message per cell, if any.
    pub failures: Vec<Vec<Option<String>>>,
    pub criterion: Criterion,
}

impl ExclusionMap {
    pub fn cells(&self) -> usize {
        self.r_c.len() * self.lambda.len()
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && n >= 1) || (n == 1 && hi != lo) {
        return Err(domain(format!("bad log grid [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

pub fn exclusion_scan(
    r_c: &[f64],
    lambda: &[f64],
    bg: &BackgroundModel,
    base_spec: &CollapseOperatorSpec,
    criterion: &Criterion,
) -> Result<ExclusionMap> {
    if r_c.is_empty() || lambda.is_empty() {
        return Err(domain("scan grids must be non-empty"));
    }
    if !(criterion.threshold > 0.0) {
        return Err(domain("exclusion threshold must be positive"));
    }
    type Cell = (f64, bool, Option<String>);
    let rows: Vec<(Regime, Vec<Cell>)> = r_c
        .par_iter()
        .map(|&rc| {
            let regime = Regime::of(bg, criterion.window.k_pivot, rc);
            let params = AnalyticSpectrumParams { o1_prefactor: criterion.o1_prefactor, regime };
            let cells = lambda
                .iter()
                .map(|&lam| {
                    let spec = CollapseOperatorSpec { gamma: gamma_from_lambda(lam, rc), r_c: rc, ..*base_spec };
                    match spec.validate().and_then(|_| delta_ns_of(bg, &spec, &params, &criterion.window)) {
                        Ok(d) => (d, d.abs() > criterion.threshold, None),
                        Err(e) => (f64::NAN, false, Some(e.to_string())),
                    }
                })
                .collect();
            (regime, cells)
        })
        .collect();
    let mut map = ExclusionMap {
        r_c: r_c.to_vec(),
        lambda: lambda.to_vec(),
        delta_ns: Vec::new(),
        regime: Vec::new(),
        excluded: Vec::new(),
        failures: Vec::new(),
        criterion: *criterion,
    };
    for (regime, cells) in rows {
        map.regime.push(regime);
        map.delta_ns.push(cells.iter().map(|c| c.0).collect());
        map.excluded.push(cells.iter().map(|c| c.1).collect());
        map.failures.push(cells.into_iter().map(|c| c.2).collect());
    }
    Ok(map)
}
