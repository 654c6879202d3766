//! Test tables, loss summaries and figures computed from a finished run directory.
//!
//! Reads only stored window files and the manifest; writes only under `reports/`.

pub mod svg;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::metrics::{loss_series, ranking_loss, CiMode, DateMetrics, RankingLoss};
use crate::portfolio::{cost_perturbation_table, cost_sensitivity_table, grouped_sharpe, BacktestDay, PortfolioConfig};
use crate::run_dir::{self, ScoreRow};
use crate::seed::derive_seed;
use crate::stattests::{dm_test, pt_test, render_table, spa_test, SpaConfig, SpaVariant, TableKind, TestRow};
use crate::textfmt::repr_f64;
use svg::{Fit, Heatmap, LineChart, Point, Series};

pub const DM_TABLE: &str = "dm_matrix.tsv";
pub const SPA_TABLE: &str = "spa_results.tsv";
pub const PT_TABLE: &str = "pt_results.tsv";
pub const LOSS_TABLE: &str = "ranking_loss.tsv";
pub const SLOPE_TABLE: &str = "slope.tsv";
pub const COST_TABLE: &str = "cost_sensitivity.tsv";
pub const COST_PERTURBATION_TABLE: &str = "cost_perturbation.tsv";
pub const GAPS: &str = "gaps.txt";
pub const TEST_INPUTS: &str = "test_inputs.tsv";
pub const TEST_INPUTS_HEADER: &str = "horizon\tuniverse\ttest\tlabel\tused\tavailable";
pub const LOSS_HEADER: &str = "horizon\tuniverse\tmodel\tloss\thalf_width\tn";
pub const SLOPE_HEADER: &str = "horizon\tmodel\tslope\tintercept\tpoints";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    /// Missing or failed inputs and tests that could not be computed.
    pub gaps: Vec<String>,
}

#[derive(Debug, Clone)]
struct ModelInfo {
    kind: String,
    budget: u32,
}

#[derive(Debug, Default)]
struct LabelData {
    windows: Vec<Vec<DateMetrics>>,
    obs: Vec<ScoreRow>,
    days: Vec<BacktestDay>,
}

struct Settings {
    seed: u64,
    ci_mode: CiMode,
    base: String,
    spa: SpaConfig,
    dm_rank_loss: bool,
    dm_observation: bool,
    dm_lags: Option<usize>,
    portfolio: PortfolioConfig,
}

fn setting<T: FromStr>(m: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    match m.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Data(format!("manifest: cannot parse {key}='{v}'"))),
    }
}

impl Settings {
    fn from_manifest(m: &BTreeMap<String, String>) -> Result<Self> {
        let pd = PortfolioConfig::default();
        Ok(Self {
            seed: setting(m, "run.seed", 0)?,
            ci_mode: setting(m, "run.ci_mode", CiMode::Dates)?,
            base: setting(m, "stats.base", "ridge".to_string())?,
            spa: SpaConfig {
                replications: setting(m, "stats.replications", 1000)?,
                mean_block: setting(m, "stats.block_length", 5.0)?,
                seed: 0,
                variant: setting(m, "stats.spa_variant", SpaVariant::Consistent)?,
            },
            dm_rank_loss: m.get("stats.dm_loss").map(String::as_str) == Some("rank_loss"),
            dm_observation: m.get("stats.dm_axis").map(String::as_str) == Some("observation"),
            dm_lags: match m.get("stats.dm_lags").map(String::as_str) {
                None | Some("auto") => None,
                Some(v) => Some(v.parse().map_err(|_| Error::Data(format!("manifest: bad stats.dm_lags '{v}'")))?),
            },
            portfolio: PortfolioConfig {
                p_long: setting(m, "portfolio.p_long", pd.p_long)?,
                p_short: setting(m, "portfolio.p_short", pd.p_short)?,
                turnover_cap: setting(m, "portfolio.turnover_cap", pd.turnover_cap)?,
                cost_bps: setting(m, "portfolio.cost_bps", pd.cost_bps)?,
                borrow_bps: setting(m, "portfolio.borrow_bps", pd.borrow_bps)?,
            },
        })
    }
}

/// Rows of the inner-join log: what each test consumed out of what was on offer.
#[derive(Default)]
struct Joins(String);

impl Joins {
    fn log(&mut self, k: usize, u: usize, test: &str, label: &str, used: usize, available: usize) {
        writeln!(self.0, "{k}\t{u}\t{test}\t{label}\t{used}\t{available}").unwrap();
    }
}

/// `(horizon, universe)` -> label -> data
type Groups = BTreeMap<(usize, usize), BTreeMap<String, LabelData>>;

fn load_groups(run: &Path, manifest: &BTreeMap<String, String>, gaps: &mut Vec<String>) -> Groups {
    let mut groups: Groups = BTreeMap::new();
    for (id, status) in run_dir::manifest_windows(manifest) {
        if status != "ok" {
            gaps.push(format!("window {id}: {status}"));
            continue;
        }
        let dir = run_dir::window_dir(run, &id);
        let rows = match run_dir::read_metrics(&dir.join(run_dir::METRICS)) {
            Ok(r) => r,
            Err(e) => {
                gaps.push(format!("window {id}: {e}"));
                continue;
            }
        };
        let mut per_label: BTreeMap<String, Vec<DateMetrics>> = BTreeMap::new();
        for r in rows {
            let entry = per_label.entry(r.label).or_default();
            if r.valid {
                entry.push(r.metrics);
            }
        }
        let group = groups.entry((id.horizon, id.universe)).or_default();
        for (label, metrics) in per_label {
            let obs = run_dir::read_scores(&dir.join(run_dir::scores_file(&label)));
            let days = run_dir::read_backtest(&dir.join(run_dir::backtest_file(&label)));
            let (obs, days) = match (obs, days) {
                (Ok(o), Ok(d)) => (o, d),
                (Err(e), _) | (_, Err(e)) => {
                    gaps.push(format!("window {id} {label}: {e}"));
                    continue;
                }
            };
            let data = group.entry(label).or_default();
            data.windows.push(metrics);
            data.obs.extend(obs);
            data.days.extend(days);
        }
    }
    groups
}

fn model_info(manifest: &BTreeMap<String, String>) -> BTreeMap<String, ModelInfo> {
    manifest
        .iter()
        .filter_map(|(k, v)| {
            let id = k.strip_prefix("model.")?.strip_suffix(".kind")?;
            let budget = manifest.get(&format!("model.{id}.budget")).and_then(|b| b.parse().ok()).unwrap_or(0);
            Some((id.to_string(), ModelInfo { kind: v.clone(), budget }))
        })
        .collect()
}

/// Least-squares line `y = intercept + slope * x`; `None` below two distinct x values.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn all_metrics(d: &LabelData) -> Vec<DateMetrics> {
    d.windows.iter().flatten().cloned().collect()
}

fn dm_rows(groups: &Groups, s: &Settings, gaps: &mut Vec<String>, joins: &mut Joins) -> Vec<TestRow> {
    let mut rows = Vec::new();
    for (&(k, u), labels) in groups {
        let Some(base) = labels.get(&s.base) else {
            gaps.push(format!("dm k{k} u{u}: base '{}' has no outputs", s.base));
            continue;
        };
        let lags = s.dm_lags.unwrap_or(k.saturating_sub(1));
        let series = |d: &LabelData| -> BTreeMap<(NaiveDate, String), f64> {
            if s.dm_observation && !s.dm_rank_loss {
                d.obs
                    .iter()
                    .filter_map(|o| o.realized.map(|r| ((o.date, o.ticker.clone()), (o.score - r).powi(2))))
                    .collect()
            } else {
                loss_series(&all_metrics(d), s.dm_rank_loss)
                    .into_iter()
                    .map(|(date, v)| ((date, String::new()), v))
                    .collect()
            }
        };
        let base_series = series(base);
        for (label, data) in labels.iter().filter(|(l, _)| **l != s.base) {
            let other = series(data);
            let (a, b): (Vec<f64>, Vec<f64>) = base_series
                .iter()
                .filter_map(|(key, x)| other.get(key).map(|y| (*x, *y)))
                .unzip();
            joins.log(k, u, "dm", label, a.len(), base_series.len().max(other.len()));
            match dm_test(&a, &b, lags) {
                Ok(r) => rows.push(TestRow {
                    horizon: k,
                    universe: u,
                    label: format!("{label} vs {}", s.base),
                    statistic: r.statistic,
                    p_value: r.p_value,
                }),
                Err(e) => gaps.push(format!("dm k{k} u{u} {label}: {e}")),
            }
        }
    }
    rows
}

fn spa_rows(groups: &Groups, s: &Settings, gaps: &mut Vec<String>, joins: &mut Joins) -> Vec<TestRow> {
    let mut rows = Vec::new();
    for (&(k, u), labels) in groups {
        let Some(base) = labels.get(&s.base) else {
            gaps.push(format!("spa k{k} u{u}: base '{}' has no outputs", s.base));
            continue;
        };
        let base_loss = loss_series(&all_metrics(base), true);
        let cands: Vec<BTreeMap<NaiveDate, f64>> = labels
            .iter()
            .filter(|(l, _)| **l != s.base)
            .map(|(_, d)| loss_series(&all_metrics(d), true))
            .collect();
        if cands.is_empty() {
            gaps.push(format!("spa k{k} u{u}: no candidates"));
            continue;
        }
        let dates: Vec<NaiveDate> = base_loss
            .keys()
            .filter(|d| cands.iter().all(|c| c.contains_key(d)))
            .copied()
            .collect();
        let offered = cands.iter().map(BTreeMap::len).chain([base_loss.len()]).max().unwrap_or(0);
        joins.log(k, u, "spa", &s.base, dates.len(), offered);
        let b: Vec<f64> = dates.iter().map(|d| base_loss[d]).collect();
        let c: Vec<Vec<f64>> = cands.iter().map(|m| dates.iter().map(|d| m[d]).collect()).collect();
        let cfg = SpaConfig {
            seed: derive_seed(s.seed, &["spa", &k.to_string(), &u.to_string()]),
            ..s.spa.clone()
        };
        match spa_test(&b, &c, &cfg) {
            Ok(r) => rows.push(TestRow {
                horizon: k,
                universe: u,
                label: s.base.clone(),
                statistic: r.t_obs,
                p_value: r.p_value,
            }),
            Err(e) => gaps.push(format!("spa k{k} u{u}: {e}")),
        }
    }
    rows
}

fn pt_rows(groups: &Groups, gaps: &mut Vec<String>, joins: &mut Joins) -> Vec<TestRow> {
    let mut rows = Vec::new();
    for (&(k, u), labels) in groups {
        for (label, d) in labels {
            let (f, r): (Vec<f64>, Vec<f64>) = d.obs.iter().filter_map(|o| o.realized.map(|r| (o.score, r))).unzip();
            joins.log(k, u, "pt", label, f.len(), d.obs.len());
            match pt_test(&f, &r) {
                Ok(p) => rows.push(TestRow {
                    horizon: k,
                    universe: u,
                    label: label.clone(),
                    statistic: p.statistic,
                    p_value: p.p_value,
                }),
                Err(e) => gaps.push(format!("pt k{k} u{u} {label}: {e}")),
            }
        }
    }
    rows
}

/// `(horizon, label)` -> `[(U, loss)]` in increasing U.
type LossCurves = BTreeMap<(usize, String), Vec<(usize, RankingLoss)>>;

fn loss_curves(groups: &Groups, mode: CiMode) -> LossCurves {
    let mut curves: LossCurves = BTreeMap::new();
    for (&(k, u), labels) in groups {
        for (label, d) in labels {
            if let Some(rl) = ranking_loss(&d.windows, mode) {
                curves.entry((k, label.clone())).or_default().push((u, rl));
            }
        }
    }
    for v in curves.values_mut() {
        v.sort_by_key(|p| p.0);
    }
    curves
}

fn opt(x: Option<f64>) -> String {
    x.map(repr_f64).unwrap_or_else(|| "NA".into())
}

fn curve_fit(points: &[(usize, RankingLoss)]) -> Option<(f64, f64)> {
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.loss).collect();
    ols_slope(&xs, &ys)
}

fn series_for(curves: &LossCurves, k: usize, labels: &[String]) -> Vec<Series> {
    labels
        .iter()
        .filter_map(|l| {
            let pts = curves.get(&(k, l.clone()))?;
            Some(Series {
                label: l.clone(),
                points: pts
                    .iter()
                    .map(|(u, r)| Point { x: *u as f64, y: r.loss, half_width: r.half_width })
                    .collect(),
            })
        })
        .collect()
}

/// Builds every table and figure for the run at `run`.
pub fn cmd_report(run: &Path) -> Result<ReportOutcome> {
    let manifest = run_dir::read_manifest(run)?;
    let settings = Settings::from_manifest(&manifest)?;
    let models = model_info(&manifest);
    let mut gaps = Vec::new();
    let groups = load_groups(run, &manifest, &mut gaps);
    if groups.is_empty() {
        gaps.push("no completed windows".into());
    }
    let out_dir = run.join(run_dir::REPORTS);
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let mut files: BTreeMap<String, String> = BTreeMap::new();

    let mut joins = Joins(format!("{TEST_INPUTS_HEADER}\n"));
    let dm = dm_rows(&groups, &settings, &mut gaps, &mut joins);
    let spa = spa_rows(&groups, &settings, &mut gaps, &mut joins);
    let pt = pt_rows(&groups, &mut gaps, &mut joins);
    files.insert(DM_TABLE.into(), render_table(TableKind::Dm, &dm));
    files.insert(SPA_TABLE.into(), render_table(TableKind::Spa, &spa));
    files.insert(PT_TABLE.into(), render_table(TableKind::Pt, &pt));
    files.insert(TEST_INPUTS.into(), joins.0);

    let curves = loss_curves(&groups, settings.ci_mode);
    let mut loss = format!("{LOSS_HEADER}\n");
    let mut by_group: Vec<(usize, usize, &String, &RankingLoss)> =
        curves.iter().flat_map(|((k, l), pts)| pts.iter().map(move |(u, r)| (*k, *u, l, r))).collect();
    by_group.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    for (k, u, l, r) in by_group {
        writeln!(loss, "{k}\t{u}\t{l}\t{}\t{}\t{}", repr_f64(r.loss), opt(r.half_width), r.n).unwrap();
    }
    files.insert(LOSS_TABLE.into(), loss);

    let mut slope = format!("{SLOPE_HEADER}\n");
    for ((k, l), pts) in &curves {
        if let Some((b, a)) = curve_fit(pts) {
            writeln!(slope, "{k}\t{l}\t{}\t{}\t{}", repr_f64(b), repr_f64(a), pts.len()).unwrap();
        }
    }
    files.insert(SLOPE_TABLE.into(), slope);

    let mut backtests: BTreeMap<String, Vec<Vec<BacktestDay>>> = BTreeMap::new();
    for labels in groups.values() {
        for (l, d) in labels {
            backtests.entry(l.clone()).or_default().push(d.days.clone());
        }
    }
    let p = &settings.portfolio;
    let entries: Vec<(String, f64)> = backtests
        .iter()
        .filter_map(|(l, g)| match grouped_sharpe(g, p.cost_bps, p.borrow_bps) {
            Some(s) => Some((l.clone(), s)),
            None => {
                gaps.push(format!("cost {l}: net Sharpe undefined"));
                None
            }
        })
        .collect();
    files.insert(COST_TABLE.into(), cost_sensitivity_table(&entries));
    let grouped: Vec<(String, Vec<Vec<BacktestDay>>)> = backtests.into_iter().collect();
    files.insert(COST_PERTURBATION_TABLE.into(), cost_perturbation_table(&grouped, p));

    let horizons: BTreeSet<usize> = groups.keys().map(|g| g.0).collect();
    let all_labels: BTreeSet<String> = groups.values().flat_map(|m| m.keys().cloned()).collect();
    let raw_of_kind = |kinds: &[&str]| -> Vec<String> {
        let mut v: Vec<(u32, String)> = all_labels
            .iter()
            .filter(|l| models.get(*l).is_some_and(|m| kinds.contains(&m.kind.as_str())))
            .map(|l| (models[l].budget, l.clone()))
            .collect();
        v.sort();
        v.into_iter().map(|x| x.1).collect()
    };
    let llm = raw_of_kind(&["llm_direct", "tllm"]);
    let tllm = raw_of_kind(&["tllm"]);
    for &k in &horizons {
        let suffix = if horizons.len() > 1 { format!("_k{k}") } else { String::new() };
        let labels: Vec<String> = all_labels.iter().cloned().collect();
        files.insert(
            format!("fig_all{suffix}.svg"),
            svg::line_chart(&LineChart {
                title: format!("Ranking loss (1 - IC) vs universe size, k={k}"),
                x_label: "universe size U".into(),
                y_label: "mean 1 - IC (95% CI)".into(),
                series: series_for(&curves, k, &labels),
                fit: None,
            }),
        );
        files.insert(
            format!("fig_llm_vs_tllm{suffix}.svg"),
            svg::line_chart(&LineChart {
                title: format!("Direct vs reasoning LLM, k={k}"),
                x_label: "universe size U".into(),
                y_label: "mean 1 - IC (95% CI)".into(),
                series: series_for(&curves, k, &llm),
                fit: None,
            }),
        );
        let us: BTreeSet<usize> = groups.keys().filter(|g| g.0 == k).map(|g| g.1).collect();
        files.insert(
            format!("fig_heatmap{suffix}.svg"),
            svg::heatmap(&Heatmap {
                title: format!("LLM ranking loss by universe size and budget, k={k}"),
                x_label: "universe size U".into(),
                y_label: "rows: model (budget B)".into(),
                columns: us.iter().map(|u| u.to_string()).collect(),
                rows: llm.iter().map(|l| format!("{l} (B={})", models[l].budget)).collect(),
                values: llm
                    .iter()
                    .map(|l| {
                        us.iter()
                            .map(|u| {
                                curves
                                    .get(&(k, l.clone()))
                                    .and_then(|pts| pts.iter().find(|p| p.0 == *u))
                                    .map(|p| p.1.loss)
                            })
                            .collect()
                    })
                    .collect(),
            }),
        );
        let target = tllm.first().or(llm.first()).cloned().unwrap_or_else(|| settings.base.clone());
        let pts = curves.get(&(k, target.clone()));
        let fit = pts.and_then(|p| curve_fit(p)).map(|(slope, intercept)| Fit {
            slope,
            intercept,
            text: format!("OLS slope = {slope:.6} per name ({} points)", pts.map_or(0, |p| p.len())),
        });
        if fit.is_none() {
            gaps.push(format!("slope k{k} {target}: fewer than two universe sizes"));
        }
        files.insert(
            format!("fig_tllm_slope{suffix}.svg"),
            svg::line_chart(&LineChart {
                title: format!("{target}: ranking loss vs universe size, k={k}"),
                x_label: "universe size U".into(),
                y_label: "mean 1 - IC".into(),
                series: series_for(&curves, k, std::slice::from_ref(&target)),
                fit,
            }),
        );
    }

    let mut gap_text: String = gaps.iter().map(|g| format!("{g}\n")).collect();
    if gap_text.is_empty() {
        gap_text = "none\n".into();
    }
    files.insert(GAPS.into(), gap_text);
    for (name, text) in &files {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(ReportOutcome {
        dir: out_dir,
        files: files.into_keys().collect(),
        gaps,
    })
}
