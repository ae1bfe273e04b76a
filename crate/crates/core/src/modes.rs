//! Unitary evolution of a single Fourier mode.
//!
//! Three equivalent descriptions are provided:
//!
//! * the Bogoliubov coefficients `(u, v)` with `c_k(eta) = u c_k + v c_{-k}^+`,
//!   integrated from `u = 1, v = 0`;
//! * the squeezing parameters `(r, phi, theta)` with
//!   `u = e^{-i theta} cosh r` and `v = -i e^{i theta + 2 i phi} sinh r`;
//! * the Gaussian width `Omega` of `Psi(zeta) ~ exp(-Omega z^2 zeta^2)`.
//!
//! `Omega` is written in the canonical frame of the Hamiltonian
//! `p^2/2 + k^2 x^2/2 + (z'/2z)(xp + px)` with `x = z zeta`, where the
//! Bunch-Davies vacuum is `Omega = k/2`. Rather than integrating the Riccati
//! equation, the linear pair `(y, w)` with `Omega = -(i/2) w/y` is evolved:
//!
//! ```text
//! y' = (z'/z) y + w,    w' = -(k^2 - 2i Gamma) y - (z'/z) w
//! ```
//!
//! (`Gamma` is the collapse rate, zero here). For `Gamma = 0` one has
//! `y = conj(u + v*)` up to normalization, so `Re Omega |u + v*|^2 = k/2`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::background::ModeBackground;
use crate::error::{domain, Error, Result};
use crate::ode::GaussLegendre;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone)]
pub struct ModeTrajectory {
    pub k: f64,
    pub eta_grid: Vec<f64>,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    /// `u + v*`, the mode function of `z zeta`.
    pub f: Vec<Complex64>,
}

impl ModeTrajectory {
    pub fn index_of(&self, eta: f64) -> Result<usize> {
        grid_index(&self.eta_grid, eta)
    }

    /// `|u|^2 - |v|^2`, identically one for unitary evolution.
    pub fn wronskian(&self, i: usize) -> f64 {
        self.u[i].norm_sqr() - self.v[i].norm_sqr()
    }

    pub fn squeezing(&self) -> Vec<SqueezingState> {
        self.u.iter().zip(&self.v).map(|(&u, &v)| SqueezingState::from_bogoliubov(u, v)).collect()
    }
}

/// Position of `eta` in `grid`, allowing for last-bit differences.
pub(crate) fn grid_index(grid: &[f64], eta: f64) -> Result<usize> {
    grid.iter()
        .position(|&g| (g - eta).abs() <= 1e-12 * eta.abs().max(1e-300))
        .ok_or_else(|| domain(format!("eta = {eta} is not a grid point")))
}

fn check_grid<B: ModeBackground>(bg: &B, k: f64, eta_grid: &[f64]) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(domain(format!("k must be positive, got {k}")));
    }
    if eta_grid.is_empty() {
        return Err(domain("empty time grid"));
    }
    if eta_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("time grid must be strictly increasing"));
    }
    let (lo, hi) = bg.eta_range();
    if eta_grid[0] < lo || *eta_grid.last().unwrap() > hi {
        return Err(domain(format!("time grid leaves [{lo}, {hi}]")));
    }
    Ok(())
}

/// Prepends `eta_ini` when the output grid starts later; returns the
/// integration nodes and how many leading nodes to drop.
fn with_initial_time(eta_ini: f64, eta_grid: &[f64]) -> (Vec<f64>, usize) {
    if eta_grid[0] > eta_ini {
        let mut t = Vec::with_capacity(eta_grid.len() + 1);
        t.push(eta_ini);
        t.extend_from_slice(eta_grid);
        (t, 1)
    } else {
        (eta_grid.to_vec(), 0)
    }
}

pub fn evolve_bogoliubov<B: ModeBackground>(bg: &B, k: f64, eta_grid: &[f64]) -> Result<ModeTrajectory> {
    evolve_bogoliubov_with(bg, k, eta_grid, &GaussLegendre::default())
}

/// Integrates `i u' = k u + i (z'/z) v*`, `i v' = k v + i (z'/z) u*` from
/// `u = 1, v = 0` at the start of the background.
pub fn evolve_bogoliubov_with<B: ModeBackground>(
    bg: &B,
    k: f64,
    eta_grid: &[f64],
    solver: &GaussLegendre,
) -> Result<ModeTrajectory> {
    check_grid(bg, k, eta_grid)?;
    let (times, skip) = with_initial_time(bg.eta_range().0, eta_grid);
    // real state (Re u, Im u, Re v, Im v)
    let generator = |eta: f64, m: &mut DMatrix<f64>| {
        let g = bg.z_prime_over_z(eta);
        m.fill(0.0);
        m[(0, 1)] = k;
        m[(0, 2)] = g;
        m[(1, 0)] = -k;
        m[(1, 3)] = -g;
        m[(2, 0)] = g;
        m[(2, 3)] = k;
        m[(3, 1)] = -g;
        m[(3, 2)] = -k;
    };
    let y0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    let states = solver.integrate(generator, y0, &times, |_, _| {})?;
    let mut u = Vec::with_capacity(eta_grid.len());
    let mut v = Vec::with_capacity(eta_grid.len());
    for s in states.into_iter().skip(skip) {
        u.push(Complex64::new(s[0], s[1]));
        v.push(Complex64::new(s[2], s[3]));
    }
    let f = u.iter().zip(&v).map(|(u, v)| u + v.conj()).collect();
    Ok(ModeTrajectory { k, eta_grid: eta_grid.to_vec(), u, v, f })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingState {
    pub r: f64,
    pub phi: f64,
    pub theta: f64,
}

impl SqueezingState {
    /// Inverts `u = e^{-i theta} cosh r`, `v = -i e^{i theta + 2 i phi} sinh r`.
    /// `phi` is reduced to `(-pi/2, pi/2]` and set to zero when `v = 0`.
    pub fn from_bogoliubov(u: Complex64, v: Complex64) -> Self {
        let r = v.norm().asinh();
        let theta = -u.arg();
        let phi = if v.norm() == 0.0 {
            0.0
        } else {
            let mut phi = 0.5 * (v.arg() - theta - 1.5 * PI);
            // phi is defined modulo pi
            phi = phi.rem_euclid(PI);
            if phi > 0.5 * PI {
                phi -= PI;
            }
            phi
        };
        Self { r, phi, theta }
    }

    pub fn to_bogoliubov(&self) -> (Complex64, Complex64) {
        let u = Complex64::from_polar(self.r.cosh(), -self.theta);
        let v = -I * Complex64::from_polar(self.r.sinh(), self.theta + 2.0 * self.phi);
        (u, v)
    }
}

pub fn squeezing_of(traj: &ModeTrajectory, eta: f64) -> Result<SqueezingState> {
    let i = traj.index_of(eta)?;
    Ok(SqueezingState::from_bogoliubov(traj.u[i], traj.v[i]))
}

/// Coefficients of `Psi(q_k, q_-k) ~ exp[A (q_k^2 + q_-k^2) - B q_k q_-k]`.
pub fn wavefunction_ab(s: &SqueezingState) -> (Complex64, Complex64) {
    let t = s.r.tanh();
    let e2 = Complex64::from_polar(1.0, -2.0 * s.phi);
    let e4t2 = e2 * e2 * (t * t);
    let denom = e4t2 - 1.0;
    let a = (e4t2 + 1.0) / (2.0 * denom);
    let b = 2.0 * e2 * t / denom;
    (a, b)
}

#[derive(Debug, Clone)]
pub struct OmegaTrajectory {
    pub k: f64,
    pub eta_grid: Vec<f64>,
    pub omega: Vec<Complex64>,
}

impl OmegaTrajectory {
    pub fn index_of(&self, eta: f64) -> Result<usize> {
        grid_index(&self.eta_grid, eta)
    }
}

pub fn evolve_omega<B: ModeBackground>(bg: &B, k: f64, eta_grid: &[f64]) -> Result<OmegaTrajectory> {
    evolve_omega_with(bg, k, eta_grid, &GaussLegendre::default())
}

pub fn evolve_omega_with<B: ModeBackground>(
    bg: &B,
    k: f64,
    eta_grid: &[f64],
    solver: &GaussLegendre,
) -> Result<OmegaTrajectory> {
    check_grid(bg, k, eta_grid)?;
    let omega = integrate_omega(bg, k, |_| 0.0, eta_grid, solver)?;
    Ok(OmegaTrajectory { k, eta_grid: eta_grid.to_vec(), omega })
}

/// `Omega` on `eta_grid` for the flow with collapse rate `rate(eta)` (per
/// unit conformal time), starting from the vacuum `Omega = k/2` at the start
/// of the background.
pub(crate) fn integrate_omega<B, R>(
    bg: &B,
    k: f64,
    rate: R,
    eta_grid: &[f64],
    solver: &GaussLegendre,
) -> Result<Vec<Complex64>>
where
    B: ModeBackground,
    R: Fn(f64) -> f64,
{
    let (times, skip) = with_initial_time(bg.eta_range().0, eta_grid);
    let generator = |eta: f64, m: &mut DMatrix<Complex64>| {
        let g = Complex64::from(bg.z_prime_over_z(eta));
        m[(0, 0)] = g;
        m[(0, 1)] = Complex64::from(1.0);
        m[(1, 0)] = -(Complex64::from(k * k) - 2.0 * I * rate(eta));
        m[(1, 1)] = -g;
    };
    // Omega = k/2  <=>  w/y = 2i Omega = i k
    let y0 = DVector::from_vec(vec![Complex64::from(1.0), I * k]);
    let states = solver.integrate(generator, y0, &times, |_, y| {
        let s = y[0];
        *y /= s;
    })?;
    let mut omega = Vec::with_capacity(eta_grid.len());
    for (s, &eta) in states.into_iter().skip(skip).zip(eta_grid) {
        let om = -0.5 * I * s[1] / s[0];
        if !(om.re > 0.0) {
            return Err(Error::NonNormalizable { eta, re_omega: om.re });
        }
        omega.push(om);
    }
    Ok(omega)
}

/// `P = k^2 |u + v*|^2 / (4 pi^2 z^2)`.
pub fn spectrum_heisenberg<B: ModeBackground>(traj: &ModeTrajectory, bg: &B, eta: f64) -> Result<f64> {
    let i = traj.index_of(eta)?;
    let z = bg.z(eta);
    Ok(traj.k * traj.k * traj.f[i].norm_sqr() / (4.0 * PI * PI * z * z))
}

/// `P = k^3/(2 pi^2) * 1/(4 z^2 Re Omega)`.
pub fn spectrum_schrodinger<B: ModeBackground>(om: &OmegaTrajectory, bg: &B, eta: f64) -> Result<f64> {
    let i = om.index_of(eta)?;
    Ok(spectrum_from_width(om.k, bg.z(eta), om.omega[i].re))
}

pub fn spectrum_from_width(k: f64, z: f64, re_omega: f64) -> f64 {
    k.powi(3) / (2.0 * PI * PI) / (4.0 * z * z * re_omega)
}

/// Standard power spectrum at the end of the background.
pub fn standard_spectrum_end<B: ModeBackground>(bg: &B, k: f64) -> Result<f64> {
    let (_, eta_end) = bg.eta_range();
    let om = evolve_omega(bg, k, &[eta_end])?;
    Ok(spectrum_from_width(k, bg.z(eta_end), om.omega[0].re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{BackgroundModel, StaticBackground};

    #[test]
    fn minkowski_modes_are_pure_phases() {
        let bg = StaticBackground { eta_ini: -10.0, eta_end: -1.0 };
        let k = 2.5;
        let grid: Vec<f64> = (0..=18).map(|i| -10.0 + 0.5 * i as f64).collect();
        let traj = evolve_bogoliubov(&bg, k, &grid).unwrap();
        for (i, &eta) in grid.iter().enumerate() {
            let exact = Complex64::from_polar(1.0, -k * (eta + 10.0));
            assert!((traj.u[i] - exact).norm() < 1e-10);
            assert_eq!(traj.v[i], Complex64::from(0.0));
        }
        let om = evolve_omega(&bg, k, &grid).unwrap();
        for w in &om.omega {
            assert!((w - Complex64::from(k / 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn initial_values() {
        let bg = BackgroundModel::new(1.0, 0.01, -100.0, -0.01, 1.0).unwrap();
        let grid = [-100.0, -10.0];
        let traj = evolve_bogoliubov(&bg, 1.0, &grid).unwrap();
        assert_eq!(traj.u[0], Complex64::from(1.0));
        assert_eq!(traj.v[0], Complex64::from(0.0));
        let om = evolve_omega(&bg, 1.0, &grid).unwrap();
        assert_eq!(om.omega[0], Complex64::from(0.5));
        let s = squeezing_of(&traj, -100.0).unwrap();
        assert_eq!((s.r, s.theta, s.phi), (0.0, 0.0, 0.0));
        let p = spectrum_heisenberg(&traj, &bg, -100.0).unwrap();
        let z = bg.z(-100.0);
        assert!((p / (1.0 / (4.0 * PI * PI * z * z)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ab_coefficients() {
        let (a, b) = wavefunction_ab(&SqueezingState { r: 0.0, phi: 0.3, theta: 0.0 });
        assert_eq!(a, Complex64::from(-0.5));
        assert_eq!(b, Complex64::from(0.0));
        // phi = 0, r = 5: A = -(1 + t^2) / (2 (1 - t^2)) directly
        let t = 5f64.tanh();
        let (a, _) = wavefunction_ab(&SqueezingState { r: 5.0, phi: 0.0, theta: 0.0 });
        let direct = -(1.0 + t * t) / (2.0 * (1.0 - t * t));
        assert!((a.re / direct - 1.0).abs() < 1e-10 && a.im.abs() < 1e-9);
    }

    #[test]
    fn re_a_negative_on_scan() {
        for i in 0..=100 {
            let r = 0.1 * i as f64;
            for j in 0..64 {
                let phi = -PI + (j as f64 + 1.0) * 2.0 * PI / 64.0;
                let (a, _) = wavefunction_ab(&SqueezingState { r, phi, theta: 0.0 });
                assert!(a.re < 0.0, "r = {r}, phi = {phi}");
            }
        }
    }

    #[test]
    fn spectrum_schrodinger_arithmetic() {
        let bg = StaticBackground { eta_ini: -2.0, eta_end: -1.0 };
        let om = OmegaTrajectory { k: 3.0, eta_grid: vec![-1.0], omega: vec![Complex64::from(1.5)] };
        let p = spectrum_schrodinger(&om, &bg, -1.0).unwrap();
        assert!((p - 9.0 / (4.0 * PI * PI)).abs() < 1e-15);
        // doubling z divides by four
        assert!((spectrum_from_width(3.0, 2.0, 1.5) * 4.0 - p).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        let bg = StaticBackground { eta_ini: -2.0, eta_end: -1.0 };
        assert!(evolve_bogoliubov(&bg, 1.0, &[-1.5, -1.6]).is_err());
        assert!(evolve_bogoliubov(&bg, 1.0, &[-3.0, -1.6]).is_err());
        assert!(evolve_omega(&bg, -1.0, &[-1.5]).is_err());
        let traj = evolve_bogoliubov(&bg, 1.0, &[-1.5]).unwrap();
        assert!(squeezing_of(&traj, -1.2).is_err());
    }
}
