//! Quasi-de Sitter background with a constant first slow-roll parameter.
//!
//! The scale factor is the closed form `a(eta) = -1 / [H_star eta (1 - eps1)]`
//! and the mode normalization is `z = a sqrt(2 eps1)`, so that every
//! coefficient entering the mode equations (`z'/z`, `z''/z`, `aH`) is
//! analytic.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Coefficients a Fourier mode needs from the space-time it lives on.
///
/// [`BackgroundModel`] is the physical implementation; [`StaticBackground`]
/// switches the expansion off (`z'/z = 0`) and is used to check the
/// flat-space limits of the mode and collapse dynamics.
pub trait ModeBackground: Sync {
    /// `(eta_ini, eta_end)`.
    fn eta_range(&self) -> (f64, f64);
    fn scale_factor(&self, eta: f64) -> f64;
    fn z(&self, eta: f64) -> f64;
    fn z_prime_over_z(&self, eta: f64) -> f64;
    fn z_pp_over_z(&self, eta: f64) -> f64;
    /// Comoving Hubble rate `a'/a`.
    fn comoving_hubble(&self, eta: f64) -> f64;

    fn omega_squared(&self, k: f64, eta: f64) -> f64 {
        k * k - self.z_pp_over_z(eta)
    }

    fn contains(&self, eta: f64) -> bool {
        let (lo, hi) = self.eta_range();
        eta >= lo && eta <= hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundModel {
    pub h_star: f64,
    pub eps1: f64,
    pub eta_ini: f64,
    pub eta_end: f64,
    pub rho_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundSample {
    pub a: f64,
    pub z: f64,
    pub z_prime_over_z: f64,
    pub z_pp_over_z: f64,
    /// Comoving Hubble rate `a'/a`.
    pub a_h: f64,
}

impl BackgroundSample {
    /// Time-dependent coupling `g = z'/(2z)` of the interaction Hamiltonian.
    pub fn coupling(&self) -> f64 {
        0.5 * self.z_prime_over_z
    }
}

/// Where the physical wavelength `a/k` of a mode meets the localization
/// length `r_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RcCrossing {
    /// Already longer than `r_c` when the run starts.
    BeforeStart,
    During(f64),
    /// Not crossed during inflation.
    AfterEnd,
}

impl RcCrossing {
    pub fn time(&self) -> Option<f64> {
        match self {
            RcCrossing::During(eta) => Some(*eta),
            _ => None,
        }
    }

    /// True unless the crossing happens after inflation ends.
    pub fn crossed_during_inflation(&self) -> bool {
        !matches!(self, RcCrossing::AfterEnd)
    }
}

impl BackgroundModel {
    pub fn new(h_star: f64, eps1: f64, eta_ini: f64, eta_end: f64, rho_end: f64) -> Result<Self> {
        if !(h_star > 0.0 && h_star.is_finite()) {
            return Err(domain(format!("h_star must be positive, got {h_star}")));
        }
        if !(0.0..1.0).contains(&eps1) {
            return Err(domain(format!("eps1 must lie in [0, 1), got {eps1}")));
        }
        if !(eta_ini < eta_end && eta_end < 0.0) {
            return Err(domain(format!("need eta_ini < eta_end < 0, got eta_ini = {eta_ini}, eta_end = {eta_end}")));
        }
        if !(rho_end >= 0.0 && rho_end.is_finite()) {
            return Err(domain(format!("rho_end must be non-negative, got {rho_end}")));
        }
        Ok(Self { h_star, eps1, eta_ini, eta_end, rho_end })
    }

    fn check(&self, eta: f64) -> Result<()> {
        if self.contains(eta) {
            Ok(())
        } else {
            Err(domain(format!("eta = {eta} outside [{}, {}]", self.eta_ini, self.eta_end)))
        }
    }

    pub fn eval(&self, eta: f64) -> Result<BackgroundSample> {
        self.check(eta)?;
        Ok(BackgroundSample {
            a: self.scale_factor(eta),
            z: self.z(eta),
            z_prime_over_z: self.z_prime_over_z(eta),
            z_pp_over_z: self.z_pp_over_z(eta),
            a_h: self.comoving_hubble(eta),
        })
    }

    /// `k^2 - z''/z`; negative once the mode is super-Hubble.
    pub fn omega_squared_checked(&self, k: f64, eta: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(domain(format!("k must be positive, got {k}")));
        }
        self.check(eta)?;
        Ok(ModeBackground::omega_squared(self, k, eta))
    }

    /// Physical Hubble rate `a'/a^2`, constant for this background.
    pub fn hubble_rate(&self) -> f64 {
        self.h_star * (1.0 - self.eps1)
    }

    /// Hubble radius `1/H` at the end of inflation.
    pub fn hubble_radius_end(&self) -> f64 {
        1.0 / self.hubble_rate()
    }

    /// `k/(aH)` at the end of inflation.
    pub fn k_over_ah_end(&self, k: f64) -> f64 {
        -k * self.eta_end
    }

    /// Time at which `a(eta)/k = r_c`.
    pub fn rc_crossing_time(&self, k: f64, r_c: f64) -> RcCrossing {
        let eta = -1.0 / (self.hubble_rate() * k * r_c);
        if eta < self.eta_ini {
            RcCrossing::BeforeStart
        } else if eta > self.eta_end {
            RcCrossing::AfterEnd
        } else {
            RcCrossing::During(eta)
        }
    }

    pub fn rho_end_g_per_cm3(&self) -> f64 {
        planck_density_to_g_per_cm3(self.rho_end)
    }
}

impl ModeBackground for BackgroundModel {
    fn eta_range(&self) -> (f64, f64) {
        (self.eta_ini, self.eta_end)
    }

    fn scale_factor(&self, eta: f64) -> f64 {
        -1.0 / (self.h_star * eta * (1.0 - self.eps1))
    }

    fn z(&self, eta: f64) -> f64 {
        self.scale_factor(eta) * (2.0 * self.eps1).sqrt()
    }

    fn z_prime_over_z(&self, eta: f64) -> f64 {
        -1.0 / eta
    }

    fn z_pp_over_z(&self, eta: f64) -> f64 {
        2.0 / (eta * eta)
    }

    fn comoving_hubble(&self, eta: f64) -> f64 {
        -1.0 / eta
    }
}

/// Non-expanding space-time: `a = z = 1`, `z'/z = z''/z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticBackground {
    pub eta_ini: f64,
    pub eta_end: f64,
}

impl ModeBackground for StaticBackground {
    fn eta_range(&self) -> (f64, f64) {
        (self.eta_ini, self.eta_end)
    }
    fn scale_factor(&self, _eta: f64) -> f64 {
        1.0
    }
    fn z(&self, _eta: f64) -> f64 {
        1.0
    }
    fn z_prime_over_z(&self, _eta: f64) -> f64 {
        0.0
    }
    fn z_pp_over_z(&self, _eta: f64) -> f64 {
        0.0
    }
    fn comoving_hubble(&self, _eta: f64) -> f64 {
        0.0
    }
}

/// Conformal times logarithmically spaced in `|eta|`, from `eta_ini` to
/// `eta_end` inclusive, with `per_decade` intervals per decade.
pub fn log_time_grid(eta_ini: f64, eta_end: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(eta_ini < eta_end && eta_end < 0.0) {
        return Err(domain("log grid needs eta_ini < eta_end < 0"));
    }
    if per_decade == 0 {
        return Err(domain("per_decade must be positive"));
    }
    let (l0, l1) = ((-eta_ini).log10(), (-eta_end).log10());
    let n = (((l0 - l1) * per_decade as f64).ceil() as usize).max(1);
    let mut grid: Vec<f64> = (0..=n).map(|i| -(10f64.powf(l0 + (l1 - l0) * i as f64 / n as f64))).collect();
    grid[0] = eta_ini;
    grid[n] = eta_end;
    Ok(grid)
}

/// Reduced-Planck-unit energy density to a mass density in g/cm^3.
pub fn planck_density_to_g_per_cm3(rho: f64) -> f64 {
    const HBAR: f64 = 1.054_571_817e-34; // J s
    const C: f64 = 2.997_924_58e8; // m/s
    const G: f64 = 6.674_30e-11; // m^3 kg^-1 s^-2
    let m_pl = (HBAR * C / (8.0 * std::f64::consts::PI * G)).sqrt(); // kg
    let kg_per_m3 = rho * m_pl.powi(4) * C.powi(3) / HBAR.powi(3);
    kg_per_m3 * 1e-3
}
