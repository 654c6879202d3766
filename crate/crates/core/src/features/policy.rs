/// Per-ticker indicators always emitted.
pub const CORE_SCALAR: &[&str] = &[
    "mom_2",
    "mom_5",
    "mom_10",
    "mom_20",
    "vol_5",
    "vol_20",
    "rev_5",
    "volchg_5",
    "drawdown_20",
    "rsi_14",
    "macd",
    "macd_signal",
    "macd_hist",
];

/// Scalar columns that receive a per-date `<name>_xrank` companion.
pub const XRANK_SOURCES: &[&str] = &["mom_5", "mom_20", "vol_20", "drawdown_20", "rsi_14", "macd_hist"];

/// `(output, source)` pairs of per-date cross-sectional means.
pub const CONTEXT_COLUMNS: &[(&str, &str)] = &[
    ("mkt_mean_mom_5", "mom_5"),
    ("mkt_mean_mom_20", "mom_20"),
    ("mkt_mean_vol_20", "vol_20"),
];

/// Per-ticker indicators of the gated richer block.
pub const RICH_SCALAR: &[&str] = &[
    "mom_60",
    "mom_120",
    "vol_60",
    "volchg_20",
    "ret1_skew_20",
    "ret1_kurt_20",
    "beta_mkt_60",
    "obv_like",
];

/// Products of standardized pairs in the richer block: `(output, left, right)`.
pub const INTERACTIONS: &[(&str, &str, &str)] = &[
    ("int_mom_5__rsi_14", "mom_5", "rsi_14"),
    ("int_macd_hist__vol_20", "macd_hist", "vol_20"),
    ("int_drawdown_20__mom_20", "drawdown_20", "mom_20"),
];

/// Which feature blocks are emitted for a universe size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureBlockPolicy {
    /// Richer block enabled when `U >= rich_min_universe`; `None` disables it.
    pub rich_min_universe: Option<usize>,
}

impl Default for FeatureBlockPolicy {
    fn default() -> Self {
        Self {
            rich_min_universe: Some(21),
        }
    }
}

impl FeatureBlockPolicy {
    pub fn rich_enabled(&self, u: usize) -> bool {
        self.rich_min_universe.is_some_and(|m| u >= m)
    }

    pub fn scalar_columns(&self, u: usize) -> Vec<&'static str> {
        let mut cols = CORE_SCALAR.to_vec();
        if self.rich_enabled(u) {
            cols.extend_from_slice(RICH_SCALAR);
        }
        cols
    }

    /// Every column name emitted for universe size `u`, in frame order.
    pub fn columns(&self, u: usize) -> Vec<String> {
        let mut cols: Vec<String> = self.scalar_columns(u).iter().map(|s| s.to_string()).collect();
        cols.extend(XRANK_SOURCES.iter().map(|s| format!("{s}_xrank")));
        cols.extend(CONTEXT_COLUMNS.iter().map(|c| c.0.to_string()));
        if self.rich_enabled(u) {
            cols.extend(INTERACTIONS.iter().map(|c| c.0.to_string()));
        }
        cols
    }
}
