//! Power spectra: the ensemble estimator, the analytic CSL spectrum and
//! spectral-index fits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::background::BackgroundModel;
use crate::csl::{CollapseOperatorSpec, GaussianTrajectory};
use crate::error::{domain, Error, Result};
use crate::modes::standard_spectrum_end;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub spec: Option<CollapseOperatorSpec>,
    pub base_seed: Option<u64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub k_grid: Vec<f64>,
    pub p: Vec<f64>,
    pub p_err: Vec<f64>,
    pub n_traj: Vec<usize>,
    pub meta: SpectrumMeta,
}

/// `(P, P_err)` for one bin from running sums of `n` samples of `zeta_bar`.
///
/// `P = k^3/(2 pi^2) s^2` with `s^2` the unbiased sample variance and
/// `P_err = sqrt(2/(n-1)) P`.
pub fn bin_from_sums(k: f64, n: usize, sum: f64, sum_sq: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InsufficientData(format!("k = {k}: need at least two trajectories, got {n}")));
    }
    let nf = n as f64;
    let var = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    let p = k.powi(3) / (2.0 * PI * PI) * var;
    Ok((p, (2.0 / (nf - 1.0)).sqrt() * p))
}

impl SpectrumEstimate {
    /// One bin per entry of `k_grid`, from raw `zeta_bar` samples. Sums are
    /// taken around the sample mean for accuracy.
    pub fn from_samples(k_grid: &[f64], samples: &[Vec<f64>]) -> Result<Self> {
        if k_grid.len() != samples.len() {
            return Err(domain("one sample set per k is required"));
        }
        let mut out = Self::empty();
        for (&k, s) in k_grid.iter().zip(samples) {
            let n = s.len();
            let mean = if n == 0 { 0.0 } else { s.iter().sum::<f64>() / n as f64 };
            let sq: f64 = if s.iter().all(|v| *v == s[0]) { 0.0 } else { s.iter().map(|v| (v - mean).powi(2)).sum() };
            // shifted sums reproduce the centered variance exactly
            let (p, e) = bin_from_sums(k, n, 0.0, sq)?;
            out.push(k, p, e, n);
        }
        Ok(out)
    }

    pub fn empty() -> Self {
        Self { k_grid: Vec::new(), p: Vec::new(), p_err: Vec::new(), n_traj: Vec::new(), meta: SpectrumMeta::default() }
    }

    pub fn push(&mut self, k: f64, p: f64, p_err: f64, n: usize) {
        self.k_grid.push(k);
        self.p.push(p);
        self.p_err.push(p_err);
        self.n_traj.push(n);
    }

    pub fn len(&self) -> usize {
        self.k_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_grid.is_empty()
    }
}

/// Spectrum at time `eta` from an ensemble, binned by the trajectories' `k`
/// (ascending).
pub fn estimate_spectrum(ensemble: &[GaussianTrajectory], eta: f64) -> Result<SpectrumEstimate> {
    let mut ks: Vec<f64> = ensemble.iter().map(|t| t.k).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    let mut samples = vec![Vec::new(); ks.len()];
    for t in ensemble {
        let bin = ks.binary_search_by(|k| k.total_cmp(&t.k)).expect("k collected above");
        samples[bin].push(t.zbar[t.index_of(eta)?]);
    }
    let mut est = SpectrumEstimate::from_samples(&ks, &samples)?;
    est.meta.eta = Some(eta);
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `r_c` crossed during inflation.
    InflationCrossing,
    /// `r_c` crossed after the end of inflation.
    RadiationCrossing,
}

impl Regime {
    /// `(frak_a, frak_b)`.
    pub fn exponents(self) -> (f64, f64) {
        match self {
            Regime::InflationCrossing => (0.0, -1.0),
            Regime::RadiationCrossing => (-9.0, -10.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::InflationCrossing => "inflation_crossing",
            Regime::RadiationCrossing => "radiation_crossing",
        }
    }

    /// Regime of mode `k` for a given `r_c`.
    pub fn of(bg: &BackgroundModel, k: f64, r_c: f64) -> Self {
        if bg.rc_crossing_time(k, r_c).crossed_during_inflation() {
            Regime::InflationCrossing
        } else {
            Regime::RadiationCrossing
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSpectrumParams {
    pub o1_prefactor: f64,
    pub regime: Regime,
}

impl AnalyticSpectrumParams {
    pub fn new(regime: Regime) -> Self {
        Self { o1_prefactor: 1.0, regime }
    }

    pub fn frak_a(&self) -> f64 {
        self.regime.exponents().0
    }

    pub fn frak_b(&self) -> f64 {
        self.regime.exponents().1
    }
}

/// Natural log of the CSL correction
/// `o1 (gamma/m0^2) rho eps1 (r_c/l_H)^a (k/aH)^b` at the end of inflation.
/// Returns `-inf` when the correction vanishes.
pub fn ln_correction(
    bg: &BackgroundModel,
    spec: &CollapseOperatorSpec,
    params: &AnalyticSpectrumParams,
    k: f64,
) -> f64 {
    let amp = params.o1_prefactor * spec.gamma * bg.rho_end * bg.eps1 / (spec.m0 * spec.m0);
    if amp <= 0.0 {
        return f64::NEG_INFINITY;
    }
    amp.ln() + params.frak_a() * (spec.r_c / bg.hubble_radius_end()).ln() + params.frak_b() * bg.k_over_ah_end(k).ln()
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPoint {
    pub k: f64,
    pub p_std: f64,
    pub p_csl: f64,
    pub correction: f64,
}

/// The completed-collapse spectrum `P_std [1 + correction]`. The term
/// `Re Omega_std / Re Omega` is dropped, so `gamma = 0` returns `P_std`.
pub fn analytic_csl_spectrum(
    bg: &BackgroundModel,
    spec: &CollapseOperatorSpec,
    params: &AnalyticSpectrumParams,
    k_grid: &[f64],
) -> Result<Vec<AnalyticPoint>> {
    k_grid
        .iter()
        .map(|&k| {
            let p_std = standard_spectrum_end(bg, k)?;
            let correction = ln_correction(bg, spec, params, k).exp();
            Ok(AnalyticPoint { k, p_std, p_csl: p_std * (1.0 + correction), correction })
        })
        .collect()
}

/// The prefactor that makes the analytic correction equal `mc_correction`
/// at mode `k`.
pub fn calibrate_o1(
    bg: &BackgroundModel,
    spec: &CollapseOperatorSpec,
    regime: Regime,
    k: f64,
    mc_correction: f64,
) -> Result<f64> {
    let unit = ln_correction(bg, spec, &AnalyticSpectrumParams::new(regime), k);
    if !unit.is_finite() {
        return Err(domain("calibration needs a nonzero collapse strength"));
    }
    Ok(mc_correction / unit.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFit {
    pub n_s: f64,
    pub ln_amplitude: f64,
    /// Covariance of `(ln_amplitude, slope)`.
    pub covariance: [[f64; 2]; 2],
    pub n_points: usize,
}

impl SpectralFit {
    pub fn n_s_error(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }
}

/// Weighted least squares `ln P = ln A + (n_s - 1) ln k` over bins with
/// `k_window.0 <= k <= k_window.1`. Bins are weighted by
/// `(P / P_err)^2`; when any error is zero the fit is unweighted and the
/// covariance comes from the residuals.
pub fn fit_spectral_index(est: &SpectrumEstimate, k_window: (f64, f64)) -> Result<SpectralFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut sig = Vec::new();
    for i in 0..est.len() {
        let k = est.k_grid[i];
        if k < k_window.0 || k > k_window.1 {
            continue;
        }
        if !(est.p[i] > 0.0) {
            return Err(domain(format!("non-positive spectrum {} at k = {k}", est.p[i])));
        }
        x.push(k.ln());
        y.push(est.p[i].ln());
        sig.push(est.p_err[i] / est.p[i]);
    }
    if x.len() < 4 {
        return Err(Error::InsufficientData(format!("{} bins in the fit window, need 4", x.len())));
    }
    let weighted = sig.iter().all(|&s| s > 0.0);
    let w: Vec<f64> = if weighted { sig.iter().map(|s| 1.0 / (s * s)).collect() } else { vec![1.0; x.len()] };
    let (fit, chi2) = weighted_line(&x, &y, &w);
    let (ln_a, slope, mut cov) = fit;
    if !weighted {
        let dof = (x.len() - 2) as f64;
        let s2 = chi2 / dof;
        for row in cov.iter_mut() {
            for c in row.iter_mut() {
                *c *= s2;
            }
        }
    }
    Ok(SpectralFit { n_s: 1.0 + slope, ln_amplitude: ln_a, covariance: cov, n_points: x.len() })
}

type LineFit = (f64, f64, [[f64; 2]; 2]);

/// Weighted straight-line fit; returns `((intercept, slope, cov), chi2)`.
pub(crate) fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> (LineFit, f64) {
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += w[i] * (x[i] - xm).powi(2);
        sxy += w[i] * (x[i] - xm) * (y[i] - ym);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let chi2: f64 = (0..x.len()).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let var_slope = 1.0 / sxx;
    let cov = [[1.0 / sw + xm * xm * var_slope, -xm * var_slope], [-xm * var_slope, var_slope]];
    ((intercept, slope, cov), chi2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_law(index: f64) -> SpectrumEstimate {
        let mut est = SpectrumEstimate::empty();
        for i in 0..16 {
            let k = 10f64.powf(-3.0 + 3.0 * i as f64 / 15.0);
            let p = 2.1e-9 * k.powf(index);
            est.push(k, p, 0.01 * p, 1000);
        }
        est
    }

    #[test]
    fn identical_samples_give_zero() {
        let est = SpectrumEstimate::from_samples(&[1.0], &[vec![0.3; 10]]).unwrap();
        assert_eq!(est.p[0], 0.0);
        assert!(SpectrumEstimate::from_samples(&[1.0], &[vec![0.3]]).is_err());
    }

    #[test]
    fn bin_arithmetic() {
        // samples 1, -1: variance 2
        let (p, e) = bin_from_sums(2.0, 2, 0.0, 2.0).unwrap();
        assert!((p - 8.0 * 2.0 / (2.0 * PI * PI)).abs() < 1e-15);
        assert!((e - 2f64.sqrt() * p).abs() < 1e-15);
    }

    #[test]
    fn fit_scale_invariant_and_tilted() {
        let f = fit_spectral_index(&power_law(0.0), (0.0, f64::INFINITY)).unwrap();
        assert!((f.n_s - 1.0).abs() < 1e-12);
        let f = fit_spectral_index(&power_law(-0.0351), (0.0, f64::INFINITY)).unwrap();
        assert!((f.n_s - 0.9649).abs() < 1e-12);
        assert!((f.ln_amplitude - 2.1e-9f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn fit_rejects_bad_windows() {
        let est = power_law(0.0);
        assert!(matches!(fit_spectral_index(&est, (1e-3, 3e-3)), Err(Error::InsufficientData(_))));
        let mut bad = est.clone();
        bad.p[3] = 0.0;
        assert!(fit_spectral_index(&bad, (0.0, 1.0)).is_err());
    }

    #[test]
    fn unweighted_fit_covariance_from_residuals() {
        let mut est = power_law(0.0);
        for (i, e) in est.p_err.iter_mut().enumerate() {
            *e = 0.0;
            est.p[i] *= if i % 2 == 0 { 1.01 } else { 0.99 };
        }
        let f = fit_spectral_index(&est, (0.0, 1.0)).unwrap();
        assert!(f.covariance[1][1] > 0.0);
    }

    #[test]
    fn softplus_limits() {
        assert_eq!(softplus(f64::NEG_INFINITY), 0.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn correction_exponents() {
        let bg = BackgroundModel::new(1e-5, 0.01, -1e8, -1e3, 1e-11).unwrap();
        let spec = CollapseOperatorSpec::density_contrast(1.0, 1e5);
        let inf = AnalyticSpectrumParams::new(Regime::InflationCrossing);
        let rad = AnalyticSpectrumParams::new(Regime::RadiationCrossing);
        let d = |p: &AnalyticSpectrumParams| ln_correction(&bg, &spec, p, 1e-3) - ln_correction(&bg, &spec, p, 1e-5);
        assert!((d(&inf) / 100f64.ln() + 1.0).abs() < 1e-12);
        assert!((d(&rad) / 100f64.ln() + 10.0).abs() < 1e-12);
        let doubled = spec.with_gamma(2.0);
        let diff = ln_correction(&bg, &doubled, &inf, 1e-4) - ln_correction(&bg, &spec, &inf, 1e-4);
        assert!((diff - 2f64.ln()).abs() < 1e-12);
        assert_eq!(ln_correction(&bg, &spec.with_gamma(0.0), &inf, 1e-4), f64::NEG_INFINITY);
    }
}
