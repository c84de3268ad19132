//! Finite, desk-scale machinery for measure concentration and amenability of
//! groups of measurable maps.
//!
//! * [`mm_core`]: finite metric-measure spaces, exact concentration functions,
//!   medians and deviation masses.
//! * [`hamming`]: product spaces with the normalized Hamming distance and
//!   Lipschitz deviation profiles.
//! * [`groups`]: word-metric groups (`Z^d`, `Z_m`, `F2`), finitely supported
//!   measures and invariance defects.
//! * [`families`]: bounded-Lipschitz test families and their pull-backs along
//!   the cell embeddings.
//! * [`l0_step`]: step maps `[0,1) -> G`, the `h_n` embeddings and the
//!   disagreement pseudometric.
//! * [`amplify`]: push-forward product measures on step maps, telescoping
//!   defect bounds and schedule reports.
//! * [`mean_transfer`]: the averaging operator from functions on `G` to
//!   functions on step maps.

pub mod amplify;
pub mod error;
pub mod families;
pub mod groups;
pub mod hamming;
pub mod l0_step;
pub mod mean_transfer;
pub mod mm_core;
pub mod rng;

pub use error::{Error, Result};

/// Default tolerance for floating point equality checks.
pub const TOL: f64 = 1e-9;

/// Tolerance for probability vectors summing to one.
pub const MASS_TOL: f64 = 1e-12;

/// Cap on the number of points enumerated by exact product computations.
pub const EXACT_PRODUCT_CAP: u128 = 1_000_000;

pub(crate) fn check_probability(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidMeasure("empty weight vector".into()));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidMeasure(format!(
            "weight {w} is not a finite non-negative number"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
    }
    Ok(())
}

/// `base^exp` saturating in `u128`.
pub(crate) fn checked_power(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
        if acc == u128::MAX {
            break;
        }
    }
    acc
}
