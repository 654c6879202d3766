//! Re-checks stored run outputs against the engine's invariants.

use std::path::Path;

use chrono::NaiveDate;

use crate::error::Result;
use crate::report;
use crate::run_dir::{self, WindowId};
use crate::stattests::{parse_table, TableKind};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: usize,
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations.push(what());
        }
    }
}

fn range(v: Option<&String>) -> Option<(NaiveDate, NaiveDate)> {
    let (a, b) = v?.split_once("..")?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

fn verify_window(run: &Path, id: &WindowId, test: (NaiveDate, NaiveDate), rep: &mut VerifyReport) -> Result<()> {
    let dir = run_dir::window_dir(run, id);
    let features = std::fs::read_to_string(dir.join(run_dir::FEATURES)).map_err(|e| crate::Error::io(dir.join(run_dir::FEATURES), e))?;
    let mut lines = features.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split('\t').collect();
    let xr: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.ends_with("_xrank")).map(|(i, _)| i).collect();
    for line in lines {
        let f: Vec<&str> = line.split('\t').collect();
        for &i in &xr {
            if let Some(v) = f.get(i).filter(|s| !s.is_empty()).and_then(|s| s.parse::<f64>().ok()) {
                rep.check((0.0..=1.0).contains(&v), || format!("{id}: {} = {v} outside [0, 1]", header[i]));
            }
        }
        if let Some(d) = f.first().and_then(|s| s.parse::<NaiveDate>().ok()) {
            rep.check(d >= test.0 && d <= test.1, || format!("{id}: feature snapshot date {d} outside test range"));
        }
    }
    let mut labels = std::collections::BTreeSet::new();
    for row in run_dir::read_metrics(&dir.join(run_dir::METRICS))? {
        if let Some(ic) = row.metrics.ic {
            rep.check((-1.0..=1.0).contains(&ic), || format!("{id} {}: IC {ic} on {}", row.label, row.metrics.date));
        }
        let d = row.metrics.date;
        rep.check(d >= test.0 && d <= test.1, || format!("{id} {}: scored date {d} outside test range", row.label));
        labels.insert(row.label);
    }
    for label in labels {
        for day in run_dir::read_backtest(&dir.join(run_dir::backtest_file(&label)))? {
            let net = day.gross - day.trading_cost - day.borrow_cost;
            rep.check((day.net - net).abs() <= 1e-12 * (1.0 + net.abs()), || {
                format!("{id} {label}: net {} != gross - costs {net} on {}", day.net, day.date)
            });
            rep.check(day.turnover >= 0.0 && day.short_notional >= 0.0, || {
                format!("{id} {label}: negative turnover or short notional on {}", day.date)
            });
        }
    }
    Ok(())
}

pub fn cmd_verify(run: &Path) -> Result<VerifyReport> {
    let manifest = run_dir::read_manifest(run)?;
    let mut rep = VerifyReport::default();
    for (id, status) in run_dir::manifest_windows(&manifest) {
        let train = range(manifest.get(&format!("window.{id}.train")));
        let test = range(manifest.get(&format!("window.{id}.test")));
        let (Some(train), Some(test)) = (train, test) else {
            rep.check(false, || format!("{id}: missing train/test range in manifest"));
            continue;
        };
        rep.check(train.0 <= train.1 && train.1 < test.0 && test.0 <= test.1, || {
            format!("{id}: not chronological (train {}..{}, test {}..{})", train.0, train.1, test.0, test.1)
        });
        if status == "ok" {
            if let Err(e) = verify_window(run, &id, test, &mut rep) {
                rep.check(false, || format!("{id}: {e}"));
            }
        }
    }
    let reports = run.join(run_dir::REPORTS);
    for (file, kind) in [
        (report::DM_TABLE, TableKind::Dm),
        (report::SPA_TABLE, TableKind::Spa),
        (report::PT_TABLE, TableKind::Pt),
    ] {
        let Ok(text) = std::fs::read_to_string(reports.join(file)) else { continue };
        match parse_table(kind, &text) {
            Ok(rows) => {
                for r in rows.iter().filter(|r| !r.p_value.is_nan()) {
                    rep.check((0.0..=1.0).contains(&r.p_value), || format!("{file}: p = {} for {}", r.p_value, r.label));
                }
            }
            Err(e) => rep.check(false, || format!("{file}: {e}")),
        }
    }
    Ok(rep)
}
