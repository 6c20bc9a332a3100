//! Numerical tolerances shared by the whole crate.
//!
//! Incidence predicates (point on plane, vertex inside cell, facet matching)
//! use the geometric tolerance `eps_geo`, which defaults to `1e-9` and can be
//! overridden process-wide, e.g. from the `LIFTILE_TOL` environment variable.
//! Pure linear algebra uses the fixed [`EPS_LINALG`].

use std::sync::atomic::{AtomicU64, Ordering};

/// Default relative tolerance for incidence predicates.
pub const DEFAULT_EPS_GEO: f64 = 1e-9;

/// Tolerance for pure linear-algebra identities (symmetry, factor residuals).
pub const EPS_LINALG: f64 = 1e-12;

/// Name of the environment variable that overrides [`eps_geo`].
pub const TOL_ENV_VAR: &str = "LIFTILE_TOL";

/// Grid used to quantize coordinates into hash keys.
pub const KEY_GRID: f64 = 1e-7;

static EPS_GEO_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Current geometric tolerance.
pub fn eps_geo() -> f64 {
    f64::from_bits(EPS_GEO_BITS.load(Ordering::Relaxed))
}

/// Overrides the geometric tolerance. Non-finite or non-positive values are ignored.
pub fn set_eps_geo(eps: f64) {
    if eps.is_finite() && eps > 0.0 {
        EPS_GEO_BITS.store(eps.to_bits(), Ordering::Relaxed);
    }
}

/// Reads [`TOL_ENV_VAR`] and applies it when it parses as a positive float.
/// Returns the tolerance in effect afterwards.
pub fn apply_env_override() -> f64 {
    if let Ok(raw) = std::env::var(TOL_ENV_VAR) {
        if let Ok(eps) = raw.trim().parse::<f64>() {
            set_eps_geo(eps);
        }
    }
    eps_geo()
}

/// Quantizes a real number onto the [`KEY_GRID`] lattice.
#[inline]
pub fn quantize(x: f64) -> i64 {
    let q = (x / KEY_GRID).round();
    // -0 and 0 must collide
    if q == 0.0 {
        0
    } else {
        q as i64
    }
}
