//! Daily bar panels, forward returns, walk-forward schedules and liquidity universes.

mod panel;
mod returns;
mod schedule;
mod universe;

pub use panel::{load_panel, Bar, ColumnMap, LoadOptions, PricePanel};
pub use returns::{forward_returns, ReturnFrame};
pub use schedule::{build_schedule, WalkForwardWindow, WindowSpan};
pub use universe::{select_universe, select_universe_probed, UniverseSelection, MAX_MISSING_FRACTION};
