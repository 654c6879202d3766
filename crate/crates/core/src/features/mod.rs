//! Indicator panel, cross-sectional columns, per-ticker standardization and snapshots.

mod build;
mod cross_section;
mod frame;
pub mod indicators;
mod policy;
mod standardize;

pub use build::{build_window_frame, RawFeatureStore};
pub use cross_section::{cross_sectional_ranks, market_context, xrank};
pub use frame::{ColumnKind, FeatureFrame};
pub use policy::{FeatureBlockPolicy, CONTEXT_COLUMNS, CORE_SCALAR, INTERACTIONS, RICH_SCALAR, XRANK_SOURCES};
pub use standardize::{add_interactions, standardize_per_ticker, standardize_per_ticker_probed, Standardization};
