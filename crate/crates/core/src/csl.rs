//! Per-mode CSL dynamics for Gaussian states.
//!
//! For a collapse operator linear in the mode variable, `C = c(k, eta) x`
//! with `x = z zeta`, the CSL equation of a single mode keeps the state
//! Gaussian,
//!
//! ```text
//! Psi(x) ~ exp[-Re Omega (x - m)^2 - i Im Omega x^2 + i chi x + i sigma],
//! ```
//!
//! and reduces (in conformal time, `dt = a deta`) to
//!
//! ```text
//! Omega' = -2i Omega^2 - 2 (z'/z) Omega + i k^2/2 + Gamma
//! dm     = (P + (z'/z) m) deta + sqrt(Gamma) / (2 Re Omega) dW
//! dP     = (-k^2 m - (z'/z) P) deta - sqrt(Gamma) Im Omega / Re Omega dW
//! ```
//!
//! where `P = chi - 2 Im Omega m` is the mean momentum and
//! `Gamma = gamma a^4 c^2 / m0^2` is the collapse rate per unit conformal
//! time (`gamma a^3 c^2 / m0^2` per unit cosmic time). `Omega` is
//! deterministic; only the mean `m = z zeta_bar` is stochastic. The averaged
//! state obeys a Lindblad equation whose second moments close, which gives
//! the deterministic oracle [`lindblad_moments`].

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::ModeBackground;
use crate::error::{domain, Error, Result};
use crate::modes::{grid_index, integrate_omega};
use crate::ode::GaussLegendre;
use crate::rng::{counter_rng, derive_seed};

/// Nucleon mass in reduced Planck units.
pub const NUCLEON_MASS: f64 = 0.938_272_088 / 2.435_323e18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `C = a^p zeta`.
    Amplitude,
    /// `C = T_g(k, eta) zeta`, a density contrast with transfer `T_g`.
    DensityContrastG,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseOperatorSpec {
    pub gamma: f64,
    pub m0: f64,
    /// Localization length (physical).
    pub r_c: f64,
    pub preset: Preset,
    pub p_exponent: f64,
    /// Multiply by the coarse-graining kernel `exp(-k^2 r_c^2 / (2 a^2))`.
    pub include_smoothing: bool,
}

impl CollapseOperatorSpec {
    pub fn amplitude(gamma: f64, p_exponent: f64) -> Self {
        Self { gamma, m0: 1.0, r_c: 1.0, preset: Preset::Amplitude, p_exponent, include_smoothing: false }
    }

    pub fn density_contrast(gamma: f64, r_c: f64) -> Self {
        Self {
            gamma,
            m0: NUCLEON_MASS,
            r_c,
            preset: Preset::DensityContrastG,
            p_exponent: 0.0,
            include_smoothing: true,
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(domain(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.m0 > 0.0) {
            return Err(domain(format!("m0 must be > 0, got {}", self.m0)));
        }
        if !(self.r_c > 0.0) {
            return Err(domain(format!("r_c must be > 0, got {}", self.r_c)));
        }
        Ok(())
    }
}

/// Newtonian-like density transfer `(k / aH)^2`.
pub fn newtonian_transfer(k: f64, a_h: f64) -> f64 {
    (k / a_h).powi(2)
}

/// The coefficient `c(k, eta)` of `C = c x`, bound to a background.
#[derive(Clone, Copy)]
pub struct CollapseOperator<'a, B: ModeBackground> {
    pub spec: CollapseOperatorSpec,
    bg: &'a B,
    /// Density transfer `T(k, aH)` used by [`Preset::DensityContrastG`].
    pub transfer: fn(f64, f64) -> f64,
}

pub fn build_collapse_operator<'a, B: ModeBackground>(
    spec: &CollapseOperatorSpec,
    bg: &'a B,
) -> Result<CollapseOperator<'a, B>> {
    spec.validate()?;
    Ok(CollapseOperator { spec: *spec, bg, transfer: newtonian_transfer })
}

impl<B: ModeBackground> CollapseOperator<'_, B> {
    pub fn with_transfer(self, transfer: fn(f64, f64) -> f64) -> Self {
        Self { transfer, ..self }
    }

    /// Smoothing kernel `exp(-k^2 r_c^2 / (2 a^2))`, or one when disabled.
    pub fn kernel(&self, k: f64, eta: f64) -> f64 {
        if self.spec.include_smoothing {
            let a = self.bg.scale_factor(eta);
            (-(k * self.spec.r_c / a).powi(2) / 2.0).exp()
        } else {
            1.0
        }
    }

    pub fn coefficient(&self, k: f64, eta: f64) -> f64 {
        let z = self.bg.z(eta);
        let shape = match self.spec.preset {
            Preset::Amplitude => self.bg.scale_factor(eta).powf(self.spec.p_exponent),
            Preset::DensityContrastG => (self.transfer)(k, self.bg.comoving_hubble(eta)),
        };
        shape * self.kernel(k, eta) / z
    }

    /// Collapse rate per unit conformal time, `gamma a^4 c^2 / m0^2`.
    pub fn rate(&self, k: f64, eta: f64) -> f64 {
        if self.spec.gamma == 0.0 {
            return 0.0;
        }
        let a = self.bg.scale_factor(eta);
        let c = self.coefficient(k, eta);
        self.spec.gamma * a.powi(4) * c * c / (self.spec.m0 * self.spec.m0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWaveFunction {
    pub omega: Complex64,
    pub zbar: f64,
    pub chi: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SLabel {
    R,
    I,
}

impl SLabel {
    pub fn index(self) -> u64 {
        match self {
            SLabel::R => 0,
            SLabel::I => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaussianTrajectory {
    pub k: f64,
    pub label: SLabel,
    pub seed: u64,
    pub eta_grid: Arc<Vec<f64>>,
    pub omega: Arc<Vec<Complex64>>,
    pub z: Arc<Vec<f64>>,
    pub zbar: Vec<f64>,
    pub chi: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `Re Omega` of the unitary (`gamma = 0`) evolution at the last node.
    pub re_omega_standard_end: f64,
}

impl GaussianTrajectory {
    pub fn state(&self, i: usize) -> GaussianWaveFunction {
        GaussianWaveFunction { omega: self.omega[i], zbar: self.zbar[i], chi: self.chi[i], sigma: self.sigma[i] }
    }

    pub fn index_of(&self, eta: f64) -> Result<usize> {
        grid_index(&self.eta_grid, eta)
    }

    pub fn len(&self) -> usize {
        self.eta_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_grid.is_empty()
    }
}

/// Substep control for the stochastic integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Maximum substep in `ln|eta|`.
    pub log_step: f64,
    /// Maximum phase advance `max(k, |Omega|) deta` per substep.
    pub phase_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { log_step: 0.01, phase_step: 0.05 }
    }
}

impl StepControl {
    pub fn halved(&self) -> Self {
        Self { log_step: 0.5 * self.log_step, phase_step: 0.5 * self.phase_step }
    }
}

type Mat2 = [[f64; 2]; 2];

fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[derive(Debug, Clone)]
struct Substep {
    /// Flow from the substep start to its midpoint, and midpoint to end.
    first_half: Mat2,
    second_half: Mat2,
    /// Noise loading at the midpoint, already scaled by `sqrt(deta)`.
    noise: [f64; 2],
    deta: f64,
    /// `Re Omega`, `Im Omega` at the substep end (for the phase `sigma`).
    omega_end: Complex64,
}

/// A mode prepared for stochastic evolution: the deterministic `Omega(eta)`
/// and the linear propagators of the mean are computed once and shared by
/// every realization.
#[derive(Debug, Clone)]
pub struct CslMode {
    pub k: f64,
    pub spec: CollapseOperatorSpec,
    eta_grid: Arc<Vec<f64>>,
    omega: Arc<Vec<Complex64>>,
    z: Arc<Vec<f64>>,
    /// Substeps between consecutive output nodes.
    segments: Vec<Vec<Substep>>,
    re_omega_standard_end: f64,
}

impl CslMode {
    pub fn new<B: ModeBackground>(
        bg: &B,
        k: f64,
        spec: &CollapseOperatorSpec,
        eta_grid: &[f64],
        control: StepControl,
    ) -> Result<Self> {
        let op = build_collapse_operator(spec, bg)?;
        if !(k > 0.0) {
            return Err(domain(format!("k must be positive, got {k}")));
        }
        if eta_grid.len() < 2 {
            return Err(domain("stochastic evolution needs at least two grid nodes"));
        }
        if eta_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("time grid must be strictly increasing"));
        }
        let (lo, hi) = bg.eta_range();
        if eta_grid[0] != lo || *eta_grid.last().unwrap() > hi {
            return Err(domain("stochastic grid must start at eta_ini and stay inside the background"));
        }
        if !(control.log_step > 0.0 && control.phase_step > 0.0) {
            return Err(domain("step control values must be positive"));
        }
        let solver = GaussLegendre::default();
        let rate = |eta: f64| op.rate(k, eta);

        let omega_nodes = integrate_omega(bg, k, rate, eta_grid, &solver)?;
        let standard_end = integrate_omega(bg, k, |_| 0.0, &[hi.min(*eta_grid.last().unwrap())], &solver)?;

        // substep layout per output interval
        let mut counts = Vec::with_capacity(eta_grid.len() - 1);
        for (i, w) in eta_grid.windows(2).enumerate() {
            let (e0, e1) = (w[0], w[1]);
            let by_log = ((-e0).ln() - (-e1).ln()) / control.log_step;
            let freq = k.max(omega_nodes[i].norm()).max(omega_nodes[i + 1].norm());
            let by_phase = freq * (e1 - e0) / control.phase_step;
            counts.push(by_log.max(by_phase).ceil().max(1.0) as usize);
        }
        // fine grid: substep boundaries and midpoints
        let mut fine = Vec::new();
        fine.push(eta_grid[0]);
        for (i, w) in eta_grid.windows(2).enumerate() {
            let n = counts[i];
            let h = (w[1] - w[0]) / n as f64;
            for j in 0..n {
                let t0 = w[0] + h * j as f64;
                fine.push(t0 + 0.5 * h);
                fine.push(if j + 1 == n { w[1] } else { t0 + h });
            }
        }
        let omega_fine = integrate_omega(bg, k, rate, &fine, &solver)?;

        let flow = |eta: f64, m: &mut DMatrix<f64>| {
            let g = bg.z_prime_over_z(eta);
            m[(0, 0)] = g;
            m[(0, 1)] = 1.0;
            m[(1, 0)] = -k * k;
            m[(1, 1)] = -g;
        };
        let to_mat2 = |m: DMatrix<f64>| [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];

        let mut segments = Vec::with_capacity(counts.len());
        let mut idx = 0usize;
        for &n in &counts {
            let mut seg = Vec::with_capacity(n);
            for _ in 0..n {
                let (t0, tm, t1) = (fine[idx], fine[idx + 1], fine[idx + 2]);
                let om_mid = omega_fine[idx + 1];
                let deta = t1 - t0;
                let first_half = to_mat2(solver.step_propagator(&flow, t0, tm - t0, 2)?);
                let second_half = to_mat2(solver.step_propagator(&flow, tm, t1 - tm, 2)?);
                let gamma_mid = rate(tm);
                let amp = (gamma_mid * deta).sqrt();
                let noise = [amp / (2.0 * om_mid.re), -amp * om_mid.im / om_mid.re];
                seg.push(Substep { first_half, second_half, noise, deta, omega_end: omega_fine[idx + 2] });
                idx += 2;
            }
            segments.push(seg);
        }

        Ok(Self {
            k,
            spec: *spec,
            eta_grid: Arc::new(eta_grid.to_vec()),
            omega: Arc::new(omega_nodes),
            z: Arc::new(eta_grid.iter().map(|&e| bg.z(e)).collect()),
            segments,
            re_omega_standard_end: standard_end[0].re,
        })
    }

    pub fn eta_grid(&self) -> &[f64] {
        &self.eta_grid
    }

    pub fn omega(&self) -> &[Complex64] {
        &self.omega
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn re_omega_standard_end(&self) -> f64 {
        self.re_omega_standard_end
    }

    pub fn substeps(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    /// Mean `m = z zeta_bar` at every output node for one noise realization.
    fn mean_path(&self, seed: u64, mut visit: impl FnMut(usize, [f64; 2], &Substep)) {
        let mut rng = counter_rng(seed, 0);
        let mut x = [0.0f64; 2];
        for (i, seg) in self.segments.iter().enumerate() {
            for s in seg {
                let xi: f64 = StandardNormal.sample(&mut rng);
                let mut y = mat_vec(&s.first_half, x);
                y[0] += s.noise[0] * xi;
                y[1] += s.noise[1] * xi;
                x = mat_vec(&s.second_half, y);
                visit(i + 1, x, s);
            }
        }
    }

    pub fn trajectory(&self, seed: u64, label: SLabel) -> GaussianTrajectory {
        let n = self.eta_grid.len();
        let mut zbar = vec![0.0; n];
        let mut chi = vec![0.0; n];
        let mut sigma = vec![0.0; n];
        let mut sig = 0.0;
        let sigma_rate = |om: Complex64, m: f64, p: f64| {
            let c = p + 2.0 * om.im * m;
            -om.re + 0.5 * (4.0 * om.re * om.re * m * m - c * c)
        };
        let mut prev_rate = sigma_rate(self.omega[0], 0.0, 0.0);
        // each node is overwritten until its segment's final substep
        self.mean_path(seed, |node, x, s| {
            let r = sigma_rate(s.omega_end, x[0], x[1]);
            sig += 0.5 * (prev_rate + r) * s.deta;
            prev_rate = r;
            zbar[node] = x[0] / self.z[node];
            chi[node] = x[1] + 2.0 * self.omega[node].im * x[0];
            sigma[node] = sig;
        });
        GaussianTrajectory {
            k: self.k,
            label,
            seed,
            eta_grid: Arc::clone(&self.eta_grid),
            omega: Arc::clone(&self.omega),
            z: Arc::clone(&self.z),
            zbar,
            chi,
            sigma,
            re_omega_standard_end: self.re_omega_standard_end,
        }
    }

    /// `zeta_bar` at the last node only.
    pub fn final_zbar(&self, seed: u64) -> f64 {
        let mut last = [0.0; 2];
        self.mean_path(seed, |_, x, _| last = x);
        last[0] / self.z[self.z.len() - 1]
    }

    /// First and second moments of `m = z zeta_bar` at every node, reduced in
    /// a fixed order so that the result does not depend on the thread count.
    pub fn ensemble_statistics(&self, seeds: &[u64]) -> EnsembleStatistics {
        const CHUNK: usize = 256;
        let n = self.eta_grid.len();
        let partial: Vec<(Vec<f64>, Vec<f64>)> = seeds
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut s1 = vec![0.0; n];
                let mut s2 = vec![0.0; n];
                for &seed in chunk {
                    let mut node_x = vec![0.0; n];
                    self.mean_path(seed, |node, x, _| node_x[node] = x[0]);
                    for (j, &m) in node_x.iter().enumerate() {
                        s1[j] += m;
                        s2[j] += m * m;
                    }
                }
                (s1, s2)
            })
            .collect();
        let mut sum = vec![0.0; n];
        let mut sum_sq = vec![0.0; n];
        for (s1, s2) in partial {
            for j in 0..n {
                sum[j] += s1[j];
                sum_sq[j] += s2[j];
            }
        }
        EnsembleStatistics { n_traj: seeds.len(), eta_grid: self.eta_grid.to_vec(), sum, sum_sq }
    }
}

/// Running sums of the mean `m` over an ensemble, per output node.
#[derive(Debug, Clone)]
pub struct EnsembleStatistics {
    pub n_traj: usize,
    pub eta_grid: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl EnsembleStatistics {
    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n_traj as f64
    }

    pub fn mean_sq(&self, i: usize) -> f64 {
        self.sum_sq[i] / self.n_traj as f64
    }

    /// Standard error of the sample mean of `m^2`, assuming Gaussian `m`
    /// (`Var m^2 = 2 sigma^4` for zero mean).
    pub fn mean_sq_error(&self, i: usize) -> f64 {
        let var = self.mean_sq(i) - self.mean(i).powi(2);
        (2.0 * var * var / self.n_traj as f64).sqrt().max(1e-300)
    }
}

/// Seed of trajectory `index` of mode `k_index` with label `label`.
pub fn trajectory_seed(base_seed: u64, k_index: usize, label: SLabel, index: usize) -> u64 {
    derive_seed(base_seed, &[k_index as u64, label.index(), index as u64])
}

/// Evolves one realization of the stochastic Gaussian state on `eta_grid`,
/// which must start at the beginning of the background.
pub fn evolve_trajectory<B: ModeBackground>(
    bg: &B,
    k: f64,
    spec: &CollapseOperatorSpec,
    eta_grid: &[f64],
    seed: u64,
) -> Result<GaussianTrajectory> {
    Ok(CslMode::new(bg, k, spec, eta_grid, StepControl::default())?.trajectory(seed, SLabel::R))
}

/// Evolves several modes in one interleaved loop, each with its own noise
/// stream. Because the per-mode equations never reference other modes the
/// result equals evolving every mode on its own.
pub fn evolve_modes_jointly(modes: &[CslMode], seeds: &[u64]) -> Vec<GaussianTrajectory> {
    assert_eq!(modes.len(), seeds.len());
    // one rng per mode; draws interleave across modes step by step
    let mut rngs: Vec<_> = seeds.iter().map(|&s| counter_rng(s, 0)).collect();
    let mut states = vec![[0.0f64; 2]; modes.len()];
    let mut out: Vec<GaussianTrajectory> = modes.iter().zip(seeds).map(|(m, &s)| m.trajectory_shell(s)).collect();
    let max_nodes = modes.iter().map(|m| m.segments.len()).max().unwrap_or(0);
    for node in 0..max_nodes {
        for (j, mode) in modes.iter().enumerate() {
            let Some(seg) = mode.segments.get(node) else { continue };
            for s in seg {
                let xi: f64 = StandardNormal.sample(&mut rngs[j]);
                let mut y = mat_vec(&s.first_half, states[j]);
                y[0] += s.noise[0] * xi;
                y[1] += s.noise[1] * xi;
                states[j] = mat_vec(&s.second_half, y);
            }
            out[j].zbar[node + 1] = states[j][0] / mode.z[node + 1];
            out[j].chi[node + 1] = states[j][1] + 2.0 * mode.omega[node + 1].im * states[j][0];
        }
    }
    out
}

impl CslMode {
    fn trajectory_shell(&self, seed: u64) -> GaussianTrajectory {
        let n = self.eta_grid.len();
        GaussianTrajectory {
            k: self.k,
            label: SLabel::R,
            seed,
            eta_grid: Arc::clone(&self.eta_grid),
            omega: Arc::clone(&self.omega),
            z: Arc::clone(&self.z),
            zbar: vec![0.0; n],
            chi: vec![0.0; n],
            sigma: vec![0.0; n],
            re_omega_standard_end: self.re_omega_standard_end,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseDiagnostics {
    /// Variance `1/(4 z^2 Re Omega)` of `|Psi(zeta)|^2` at the last node.
    pub width: f64,
    pub width_ratio_to_standard: f64,
    pub collapsed: bool,
}

pub const DEFAULT_COLLAPSE_THRESHOLD: f64 = 1e-2;

pub fn collapse_diagnostics(traj: &GaussianTrajectory) -> CollapseDiagnostics {
    collapse_diagnostics_with(traj, DEFAULT_COLLAPSE_THRESHOLD)
}

pub fn collapse_diagnostics_with(traj: &GaussianTrajectory, threshold: f64) -> CollapseDiagnostics {
    let last = traj.len() - 1;
    let z = traj.z[last];
    let re = traj.omega[last].re;
    let width = 1.0 / (4.0 * z * z * re);
    let ratio = traj.re_omega_standard_end / re;
    CollapseDiagnostics { width, width_ratio_to_standard: ratio, collapsed: ratio < threshold }
}

/// Second moments of the stochastically averaged state in `(x, p)`.
#[derive(Debug, Clone)]
pub struct MomentTrajectory {
    pub eta_grid: Vec<f64>,
    pub xx: Vec<f64>,
    /// `<(xp + px)/2>`.
    pub xp_sym: Vec<f64>,
    pub pp: Vec<f64>,
}

impl MomentTrajectory {
    /// `xx pp - xp^2`, bounded below by 1/4.
    pub fn uncertainty_product(&self, i: usize) -> f64 {
        self.xx[i] * self.pp[i] - self.xp_sym[i].powi(2)
    }
}

/// Deterministic second moments of the averaged state, from the vacuum.
pub fn lindblad_moments<B: ModeBackground>(
    bg: &B,
    k: f64,
    spec: &CollapseOperatorSpec,
    eta_grid: &[f64],
) -> Result<MomentTrajectory> {
    let op = build_collapse_operator(spec, bg)?;
    let vacuum = [1.0 / (2.0 * k), 0.0, k / 2.0];
    integrate_moments(bg, k, |eta| op.rate(k, eta), eta_grid, true, vacuum)
}

/// Integrates
///
/// ```text
/// xx' = 2 xp + 2 (z'/z) xx
/// xp' = pp - k^2 xx
/// pp' = -2 k^2 xp - 2 (z'/z) pp + Gamma
/// ```
///
/// from `initial = [xx, xp, pp]` at `eta_grid[0]`. With `hamiltonian =
/// false` only the collapse diffusion `pp' = Gamma` remains.
pub fn integrate_moments<B, R>(
    bg: &B,
    k: f64,
    rate: R,
    eta_grid: &[f64],
    hamiltonian: bool,
    initial: [f64; 3],
) -> Result<MomentTrajectory>
where
    B: ModeBackground,
    R: Fn(f64) -> f64,
{
    if eta_grid.is_empty() {
        return Err(domain("empty time grid"));
    }
    let h = if hamiltonian { 1.0 } else { 0.0 };
    // state (xx, xp, pp, 1)
    let generator = |eta: f64, m: &mut DMatrix<f64>| {
        let g = bg.z_prime_over_z(eta) * h;
        let k2 = k * k * h;
        m.fill(0.0);
        m[(0, 0)] = 2.0 * g;
        m[(0, 1)] = 2.0 * h;
        m[(1, 0)] = -k2;
        m[(1, 2)] = h;
        m[(2, 1)] = -2.0 * k2;
        m[(2, 2)] = -2.0 * g;
        m[(2, 3)] = rate(eta);
    };
    let y0 = nalgebra::DVector::from_vec(vec![initial[0], initial[1], initial[2], 1.0]);
    let states = GaussLegendre::default().integrate(generator, y0, eta_grid, |_, _| {})?;
    let mut out = MomentTrajectory {
        eta_grid: eta_grid.to_vec(),
        xx: Vec::with_capacity(states.len()),
        xp_sym: Vec::with_capacity(states.len()),
        pp: Vec::with_capacity(states.len()),
    };
    for (s, &eta) in states.iter().zip(eta_grid) {
        if !(s[0] >= 0.0 && s[2] >= 0.0) {
            return Err(Error::Integration { eta, reason: "negative second moment".into() });
        }
        out.xx.push(s[0]);
        out.xp_sym.push(s[1]);
        out.pp.push(s[2]);
    }
    Ok(out)
}
