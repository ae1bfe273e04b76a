//! Inflationary cosmological perturbations under continuous spontaneous
//! localization (CSL).
//!
//! The crate evolves the Fourier modes of the curvature perturbation on a
//! quasi-de Sitter background, first with ordinary unitary dynamics (in the
//! Bogoliubov, squeezing and Gaussian wave-function pictures) and then with the
//! per-mode CSL stochastic equation. Trajectory ensembles are reduced to a
//! curvature power spectrum, propagated to large-scale CMB multipoles through
//! the Sachs-Wolfe integral, and the collapse parameter plane `(r_c, lambda)`
//! can be scanned for observational exclusion.
//!
//! Everything is expressed in reduced Planck units (`M_pl = 1`) and conformal
//! time `eta < 0`.
//!
//! | module | contents |
//! |---|---|
//! | [`background`] | constant-`eps1` background, `a`, `z`, `z''/z`, r_c crossing |
//! | [`modes`] | Bogoliubov coefficients, squeezing, `Omega`, standard spectra |
//! | [`csl`] | collapse operator, stochastic Gaussian trajectories, Lindblad moments |
//! | [`spectrum`] | ensemble spectrum estimator, analytic CSL spectrum, `n_s` fits |
//! | [`cmb`] | spherical Bessel functions, `C_l`, `a_lm` synthesis |
//! | [`constraints`] | `lambda`/`gamma` conversion and exclusion scans |
//! | [`config`], [`pipeline`] | TOML run configuration and the file-producing pipeline |

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod background;
pub mod cmb;
pub mod config;
pub mod constraints;
pub mod csl;
pub mod error;
pub mod modes;
pub mod ode;
pub mod pipeline;
pub mod quadrature;
pub mod rng;
pub mod spectrum;

pub use error::{Error, Result};
