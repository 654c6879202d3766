//! Diebold–Mariano, Pesaran–Timmermann and SPA tests.

mod bootstrap;
mod dm;
mod pt;
mod spa;
mod table;

pub use bootstrap::{stationary_bootstrap_indices, stationary_bootstrap_replication};
pub use dm::{dm_test, DmResult};
pub use pt::{pt_test, pt_test_signs, PtResult};
pub use spa::{spa_test, SpaConfig, SpaResult, SpaVariant};
pub use table::{parse_table, render_table, TableKind, TestRow};

use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal CDF.
pub(crate) fn norm_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").cdf(x)
}

/// `2 (1 - Phi(|z|))`.
pub fn two_sided_normal_p(z: f64) -> f64 {
    (2.0 * (1.0 - norm_cdf(z.abs()))).clamp(0.0, 1.0)
}

/// Why a test statistic could not be computed in the usual way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// Differences are identically zero.
    ZeroDifference,
    /// Zero (long-run) variance with a nonzero mean.
    ZeroVariance,
    /// A sign series has only one class.
    OneClass,
    /// Variance term of the statistic is not positive.
    NonPositiveVariance,
}
