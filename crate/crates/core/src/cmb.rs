//! Large-scale CMB multipoles in the Sachs-Wolfe limit.
//!
//! `C_l = int_0^inf dk/k P(k) j_l(k delta_eta)^2`, with realizations drawn as
//! independent Gaussian `a_lm`.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature;
use crate::rng::counter_rng;

pub const L_MIN: usize = 2;

/// Spherical Bessel function `j_l(x)` for `x >= 0`.
pub fn bessel_j(l: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    if l == 0 {
        return x.sin() / x;
    }
    let lf = l as f64;
    if x < 1e-3 {
        return series(l, x);
    }
    if x >= lf + 10.0 {
        upward(l, x)
    } else {
        miller(l, x)
    }
}

/// Two terms of the small-argument series `x^l/(2l+1)!! (1 - x^2/(2(2l+3)))`.
fn series(l: usize, x: f64) -> f64 {
    let mut ln_df = 0.0;
    for n in 1..=l {
        ln_df += ((2 * n + 1) as f64).ln();
    }
    let lead = (l as f64 * x.ln() - ln_df).exp();
    lead * (1.0 - x * x / (2.0 * (2 * l + 3) as f64))
}

fn upward(l: usize, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let mut prev = s / x;
    let mut cur = s / (x * x) - c / x;
    for n in 1..l {
        let next = (2 * n + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Downward recurrence from well above the turning point, normalized with
/// `sum_n (2n+1) j_n^2 = 1`.
fn miller(l: usize, x: f64) -> f64 {
    let top = l.max(x as usize) + 20 + (10.0 * (l.max(x as usize) as f64).sqrt()) as usize;
    let mut next = 0.0f64;
    let mut cur = 1.0f64;
    let mut norm = 0.0;
    let mut at_l = 0.0;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    for n in (0..=top).rev() {
        norm += (2 * n + 1) as f64 * cur * cur;
        if n == l {
            at_l = cur;
        }
        if n == 1 {
            j1 = cur;
        }
        if n == 0 {
            j0 = cur;
            break;
        }
        let prev = (2 * n + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e100 {
            let s = 1e-100;
            cur *= s;
            next *= s;
            at_l *= s;
            j1 *= s;
            norm *= s * s;
        }
    }
    let scale = 1.0 / norm.sqrt();
    // sign from whichever low-order value is better conditioned
    let (s, c) = x.sin_cos();
    let exact0 = s / x;
    let exact1 = s / (x * x) - c / x;
    let sign = if exact0.abs() >= exact1.abs() { (exact0 * j0).signum() } else { (exact1 * j1).signum() };
    sign * at_l * scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClSpectrum {
    pub l_min: usize,
    pub l_max: usize,
    /// `c_l[i]` is `C_{l_min + i}`.
    pub c_l: Vec<f64>,
    /// Quadrature error estimate per multipole, including the uncertainty of
    /// the asymptotic tail.
    pub error: Vec<f64>,
    pub delta_eta: f64,
}

impl ClSpectrum {
    pub fn from_values(c_l: Vec<f64>, delta_eta: f64) -> Self {
        let l_max = L_MIN + c_l.len() - 1;
        Self { l_min: L_MIN, l_max, error: vec![0.0; c_l.len()], c_l, delta_eta }
    }

    pub fn c(&self, l: usize) -> f64 {
        self.c_l[l - self.l_min]
    }

    pub fn ells(&self) -> impl Iterator<Item = usize> {
        self.l_min..=self.l_max
    }

    /// `2 C_l^2 / (2l + 1)`.
    pub fn cosmic_variance(&self, l: usize) -> f64 {
        2.0 * self.c(l).powi(2) / (2 * l + 1) as f64
    }
}

/// Sachs-Wolfe multipoles for `l in [2, l_max]`.
pub fn compute_cls<F>(p_of_k: F, delta_eta: f64, l_max: usize) -> Result<ClSpectrum>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(delta_eta > 0.0) {
        return Err(domain(format!("delta_eta must be positive, got {delta_eta}")));
    }
    if !(L_MIN..=100).contains(&l_max) {
        return Err(domain(format!("l_max must be in [2, 100], got {l_max}")));
    }
    let x_lo: f64 = 1e-3;
    let x_hi = (10.0 * l_max as f64).max(1e3);
    let results: Vec<Result<(f64, f64)>> = (L_MIN..=l_max)
        .into_par_iter()
        .map(|l| {
            // u = ln x
            let f = |u: f64| {
                let x = u.exp();
                let j = bessel_j(l, x);
                p_of_k(x / delta_eta) * j * j
            };
            let panels = 64 + (x_hi - x_hi.sqrt()).sqrt() as usize;
            let r = quadrature::integrate(f, x_lo.ln(), x_hi.ln(), panels, 1e-6, 0.0, 200_000);
            // beyond x_hi, j_l^2 averages to 1/(2 x^2)
            let tail = p_of_k(x_hi / delta_eta) / (4.0 * x_hi * x_hi);
            let value = r.value + tail;
            let error = r.error + 0.05 * tail.abs();
            if !r.converged || !value.is_finite() || error > 1e-4 * value.abs() {
                return Err(Error::Quadrature { what: format!("C_{l}"), error });
            }
            Ok((value, error))
        })
        .collect();
    let mut c_l = Vec::with_capacity(results.len());
    let mut err = Vec::with_capacity(results.len());
    for r in results {
        let (v, e) = r?;
        c_l.push(v);
        err.push(e);
    }
    Ok(ClSpectrum { l_min: L_MIN, l_max, c_l, error: err, delta_eta })
}

/// One Gaussian sky: `alm[l - l_min][m]` for `m = 0..=l`. Negative `m`
/// follow from `a_{l,-m} = (-1)^m conj(a_lm)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmRealization {
    pub l_min: usize,
    pub l_max: usize,
    pub seed: u64,
    pub alm: Vec<Vec<Complex64>>,
}

impl AlmRealization {
    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        let row = &self.alm[l - self.l_min];
        let a = row[m.unsigned_abs() as usize];
        if m >= 0 {
            a
        } else if m % 2 == 0 {
            a.conj()
        } else {
            -a.conj()
        }
    }
}

pub fn synthesize_alm(cls: &ClSpectrum, seed: u64) -> AlmRealization {
    let alm = cls
        .ells()
        .map(|l| {
            let c = cls.c(l).max(0.0);
            let mut rng = counter_rng(seed, l as u64);
            let mut row = Vec::with_capacity(l + 1);
            let a0: f64 = StandardNormal.sample(&mut rng);
            row.push(Complex64::new(a0 * c.sqrt(), 0.0));
            let s = (0.5 * c).sqrt();
            for _ in 1..=l {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                row.push(Complex64::new(re * s, im * s));
            }
            row
        })
        .collect();
    AlmRealization { l_min: cls.l_min, l_max: cls.l_max, seed, alm }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClEstimate {
    pub l: usize,
    pub c_hat: f64,
    /// `2 C^2/(2l+1)`, from the input spectrum when given.
    pub variance: f64,
}

/// `C_hat_l = sum_m |a_lm|^2 / (2l + 1)`.
pub fn estimate_cls(alm: &AlmRealization, input: Option<&ClSpectrum>) -> Vec<ClEstimate> {
    (alm.l_min..=alm.l_max)
        .map(|l| {
            let row = &alm.alm[l - alm.l_min];
            let sum = row[0].norm_sqr() + 2.0 * row[1..].iter().map(|a| a.norm_sqr()).sum::<f64>();
            let c_hat = sum / (2 * l + 1) as f64;
            let c = input.map_or(c_hat, |s| s.c(l));
            ClEstimate { l, c_hat, variance: 2.0 * c * c / (2 * l + 1) as f64 }
        })
        .collect()
}
