use chrono::NaiveDate;

use super::PricePanel;
use crate::access::{Phase, Probe};
use crate::error::{Error, Result};

/// Tickers missing more than this fraction of training dates are not ranked.
pub const MAX_MISSING_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct UniverseSelection {
    pub tickers: Vec<String>,
    pub requested: usize,
    /// Fewer eligible tickers than requested.
    pub truncated: bool,
    /// Tickers dropped for missing more than [`MAX_MISSING_FRACTION`] of training dates.
    pub excluded_for_gaps: Vec<String>,
    pub avg_volume: Vec<f64>,
}

/// Top-`u` tickers by mean share volume over `[train_start, train_end]`.
pub fn select_universe(
    panel: &PricePanel,
    train_start: NaiveDate,
    train_end: NaiveDate,
    u: usize,
) -> Result<UniverseSelection> {
    select_universe_probed(
        panel,
        train_start,
        train_end,
        u,
        Probe::none(Phase::UniverseSelection),
    )
}

pub fn select_universe_probed(
    panel: &PricePanel,
    train_start: NaiveDate,
    train_end: NaiveDate,
    u: usize,
    probe: Probe<'_>,
) -> Result<UniverseSelection> {
    if u == 0 {
        return Err(Error::Argument("universe size U must be >= 1".into()));
    }
    let range = panel.date_range(train_start, train_end);
    if range.is_empty() {
        return Err(Error::Data(format!(
            "training window {train_start}..{train_end} contains no trading dates"
        )));
    }
    let n_dates = range.len();
    for d in range.clone() {
        probe.read(panel.calendar()[d]);
    }
    let mut ranked = Vec::new();
    let mut excluded = Vec::new();
    for (ti, ticker) in panel.tickers().iter().enumerate() {
        let vols: Vec<f64> = range
            .clone()
            .filter_map(|d| panel.bar(ti, d).map(|b| b.volume))
            .collect();
        let missing = (n_dates - vols.len()) as f64 / n_dates as f64;
        if vols.is_empty() {
            continue;
        }
        if missing > MAX_MISSING_FRACTION {
            excluded.push(ticker.clone());
            continue;
        }
        let avg = vols.iter().sum::<f64>() / vols.len() as f64;
        ranked.push((ticker.clone(), avg));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let truncated = ranked.len() < u;
    if truncated {
        log::warn!(
            "requested universe of {u} but only {} tickers eligible in {train_start}..{train_end}",
            ranked.len()
        );
    }
    ranked.truncate(u);
    Ok(UniverseSelection {
        avg_volume: ranked.iter().map(|r| r.1).collect(),
        tickers: ranked.into_iter().map(|r| r.0).collect(),
        requested: u,
        truncated,
        excluded_for_gaps: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Bar;
    use rand::{Rng, SeedableRng};

    fn day(i: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i)
    }

    fn bar(i: u64, volume: f64) -> Bar {
        Bar {
            date: day(i),
            close: 10.0,
            volume,
            open: None,
            high: None,
            low: None,
        }
    }

    fn panel(vols: &[(&str, f64)], days: u64) -> PricePanel {
        PricePanel::from_bars(
            vols.iter()
                .flat_map(|(t, v)| (0..days).map(move |i| (t.to_string(), bar(i, *v)))),
        )
        .unwrap()
    }

    #[test]
    fn ranks_by_average_volume() {
        let p = panel(&[("C", 100.0), ("A", 300.0), ("B", 200.0)], 5);
        let sel = select_universe(&p, day(0), day(4), 2).unwrap();
        assert_eq!(sel.tickers, vec!["A", "B"]);
        assert!(!sel.truncated);
    }

    #[test]
    fn ties_break_lexicographically() {
        let p = panel(&[("B", 100.0), ("A", 100.0)], 3);
        assert_eq!(select_universe(&p, day(0), day(2), 1).unwrap().tickers, vec!["A"]);
    }

    #[test]
    fn oversized_request_truncates() {
        let p = panel(&[("A", 1.0), ("B", 2.0)], 3);
        let sel = select_universe(&p, day(0), day(2), 5).unwrap();
        assert!(sel.truncated);
        assert_eq!(sel.tickers.len(), 2);
    }

    #[test]
    fn empty_window_is_error() {
        let p = panel(&[("A", 1.0)], 3);
        assert!(select_universe(&p, day(10), day(20), 1).is_err());
    }

    #[test]
    fn ignores_dates_outside_window() {
        // B is only heavy after the window
        let mut rows: Vec<(String, Bar)> = (0..10).map(|i| ("A".into(), bar(i, 50.0))).collect();
        rows.extend((0..10).map(|i| ("B".into(), bar(i, if i < 5 { 10.0 } else { 1e9 }))));
        let p = PricePanel::from_bars(rows).unwrap();
        assert_eq!(select_universe(&p, day(0), day(4), 1).unwrap().tickers, vec!["A"]);
    }

    #[test]
    fn gappy_tickers_excluded() {
        let mut rows: Vec<(String, Bar)> = (0..20).map(|i| ("A".into(), bar(i, 1.0))).collect();
        // B misses 3 of 20 dates (15%)
        rows.extend((3..20).map(|i| ("B".into(), bar(i, 1e6))));
        let p = PricePanel::from_bars(rows).unwrap();
        let sel = select_universe(&p, day(0), day(19), 2).unwrap();
        assert_eq!(sel.tickers, vec!["A"]);
        assert_eq!(sel.excluded_for_gaps, vec!["B"]);
    }

    #[test]
    fn matches_sort_oracle_on_seeded_volumes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let names: Vec<String> = (0..36).map(|i| format!("T{i:02}")).collect();
        let mut rows = Vec::new();
        for name in &names {
            let level: f64 = rng.gen_range(1e4..1e6);
            for i in 0..30 {
                let v = (level * rng.gen_range(0.5..1.5)).round();
                rows.push((name.clone(), bar(i, v)));
            }
        }
        let p = PricePanel::from_bars(rows.clone()).unwrap();
        let sel = select_universe(&p, day(0), day(29), 11).unwrap();

        // oracle: independent accumulation then full sort
        let mut totals: std::collections::HashMap<&str, (f64, usize)> = Default::default();
        for (t, b) in &rows {
            let e = totals.entry(t.as_str()).or_default();
            e.0 += b.volume;
            e.1 += 1;
        }
        let mut avgs: Vec<(&str, f64)> =
            totals.into_iter().map(|(t, (s, n))| (t, s / n as f64)).collect();
        avgs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
        let expected: Vec<String> = avgs[..11].iter().map(|a| a.0.to_string()).collect();
        assert_eq!(sel.tickers, expected);
    }
}
