//! Walk-forward orchestration: schedule, per-window fitting and forecasting,
//! calibration, metrics, backtests and the run directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::access::{AccessLog, Phase, Probe};
use crate::calibration::{Calibrator, TrainTargetStats};
use crate::config::{ModelConfig, RunConfig, TransportConfig};
use crate::error::{Error, Result};
use crate::features::{add_interactions, build_window_frame, standardize_per_ticker_probed, RawFeatureStore};
use crate::llm::{HttpTransport, LlmForecaster, LlmGateway, LlmTransport, ReplayTransport, ResponseCache, SYSTEM_PROMPT, SYSTEM_PROMPT_VERSION};
use crate::market_data::{build_schedule, forward_returns, load_panel, select_universe_probed, PricePanel, ReturnFrame, UniverseSelection, WindowSpan};
use crate::metrics::{aggregate_ranking_loss, date_metrics, mse};
use crate::models::{ClassicalForecaster, ForecastContext, Forecaster, MockRule, ScoreFrame, Stage, TrainingSet};
use crate::portfolio::backtest;
use crate::run_dir::{self, WindowId};
use crate::textfmt::repr_f64;

/// Outcome of one call to [`run_walkforward`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    pub windows: usize,
    pub failed: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl RunSummary {
    pub fn is_success(&self) -> bool {
        self.failed.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CallStat {
    model: String,
    transport_calls: usize,
    cache_hits: usize,
    retries: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct LabelStat {
    label: String,
    invalid: usize,
}

#[derive(Debug, Default)]
struct WindowRecord {
    universe: Option<UniverseSelection>,
    labels: Vec<LabelStat>,
    calls: Vec<CallStat>,
    warnings: Vec<String>,
}

struct Engine<'a> {
    cfg: &'a RunConfig,
    panel: PricePanel,
    store: RawFeatureStore,
    returns: BTreeMap<usize, ReturnFrame>,
    returns_1d: ReturnFrame,
    forecasters: Vec<Box<dyn Forecaster>>,
    calibrator: Calibrator,
    log: Option<&'a AccessLog>,
}

pub fn run_walkforward(cfg: &RunConfig) -> Result<RunSummary> {
    run(cfg, None)
}

/// As [`run_walkforward`], recording every date read during train-only phases.
pub fn run_walkforward_instrumented(cfg: &RunConfig, log: &AccessLog) -> Result<RunSummary> {
    run(cfg, Some(log))
}

fn build_forecasters(models: &[ModelConfig], gateway: &Arc<LlmGateway>) -> Result<Vec<Box<dyn Forecaster>>> {
    models
        .iter()
        .map(|m| -> Result<Box<dyn Forecaster>> {
            let spec = m.spec.clone();
            if !spec.kind.is_llm() {
                return Ok(Box::new(ClassicalForecaster::new(spec)?));
            }
            let transport = match &m.transport {
                TransportConfig::Mock => LlmTransport::Mock(MockRule::from_params(&spec.params)?),
                TransportConfig::Http(h) => LlmTransport::Shared(Arc::new(HttpTransport::new(h.clone())?)),
                TransportConfig::Replay(dir) => LlmTransport::Shared(Arc::new(ReplayTransport::new(dir))),
                TransportConfig::Local => {
                    return Err(Error::Config(format!("model '{}' needs an LLM transport", spec.id)));
                }
            };
            Ok(Box::new(LlmForecaster::new(spec, Arc::clone(gateway), transport)?))
        })
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn prepare_output(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for sub in [run_dir::WINDOWS, run_dir::REPORTS] {
        let p = dir.join(sub);
        if p.exists() {
            std::fs::remove_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(())
}

fn run(cfg: &RunConfig, log: Option<&AccessLog>) -> Result<RunSummary> {
    cfg.validate()?;
    let panel = load_panel(&cfg.data_path, &cfg.load)?;
    let store = RawFeatureStore::compute(&panel);
    let mut returns = BTreeMap::new();
    for &k in &cfg.horizons {
        returns.insert(k, forward_returns(&panel, k)?);
    }
    let returns_1d = forward_returns(&panel, 1)?;
    let schedule = build_schedule(panel.calendar(), cfg.train_months, cfg.test_months)?;
    if schedule.is_empty() {
        return Err(Error::InsufficientHistory {
            available: panel.calendar().len(),
            required: cfg.train_months + cfg.test_months,
        });
    }
    prepare_output(&cfg.output)?;
    let gateway = Arc::new(LlmGateway::new(Some(ResponseCache::new(&cfg.cache_base))));
    let forecasters = build_forecasters(&cfg.models, &gateway)?;
    let engine = Engine {
        cfg,
        calibrator: Calibrator::new(cfg.calibration.clone())?,
        panel,
        store,
        returns,
        returns_1d,
        forecasters,
        log,
    };

    let mut jobs: Vec<(WindowId, WindowSpan)> = Vec::new();
    for &k in &cfg.horizons {
        for &u in &cfg.universes {
            jobs.extend(schedule.iter().map(|s| (WindowId { horizon: k, universe: u, index: s.index }, *s)));
        }
    }
    info!("{} windows across {} horizon(s) and {} universe size(s)", jobs.len(), cfg.horizons.len(), cfg.universes.len());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records: Vec<Result<WindowRecord>> =
        pool.install(|| jobs.par_iter().map(|(id, span)| engine.run_window(id, span)).collect());

    let mut summary = RunSummary {
        run_dir: cfg.output.clone(),
        windows: jobs.len(),
        failed: Vec::new(),
        warnings: Vec::new(),
    };
    let mut manifest = String::new();
    for (k, v) in cfg.describe() {
        writeln!(manifest, "{k}={v}").unwrap();
    }
    let p = &engine.panel;
    writeln!(manifest, "data.sha256={}", sha256_hex(p.canonical_string().as_bytes())).unwrap();
    writeln!(manifest, "data.tickers={}", p.tickers().len()).unwrap();
    writeln!(manifest, "data.dates={}", p.calendar().len()).unwrap();
    if let (Some(a), Some(b)) = (p.calendar().first(), p.calendar().last()) {
        writeln!(manifest, "data.range={a}..{b}").unwrap();
    }
    writeln!(manifest, "liquidity=share_volume").unwrap();
    writeln!(manifest, "prompt.version={SYSTEM_PROMPT_VERSION}").unwrap();
    writeln!(manifest, "prompt.sha256={}", sha256_hex(SYSTEM_PROMPT.as_bytes())).unwrap();
    writeln!(manifest, "blend.convention=w*primary+(1-w)*partner").unwrap();
    writeln!(manifest, "backtest.returns=1d").unwrap();
    writeln!(manifest, "windows.count={}", jobs.len()).unwrap();

    let mut calls = String::from("window\tmodel\ttransport_calls\tcache_hits\tretries\n");
    for ((id, span), rec) in jobs.iter().zip(records) {
        writeln!(manifest, "window.{id}.train={}..{}", span.train_start, span.train_end).unwrap();
        writeln!(manifest, "window.{id}.test={}..{}", span.test_start, span.test_end).unwrap();
        match rec {
            Ok(rec) => {
                if let Some(sel) = &rec.universe {
                    writeln!(manifest, "window.{id}.universe={}", sel.tickers.join(",")).unwrap();
                    writeln!(manifest, "window.{id}.universe_size={}/{}", sel.tickers.len(), sel.requested).unwrap();
                    if !sel.excluded_for_gaps.is_empty() {
                        writeln!(manifest, "window.{id}.excluded_for_gaps={}", sel.excluded_for_gaps.join(",")).unwrap();
                    }
                }
                for l in &rec.labels {
                    writeln!(manifest, "window.{id}.invalid_dates.{}={}", l.label, l.invalid).unwrap();
                }
                for (i, w) in rec.warnings.iter().enumerate() {
                    writeln!(manifest, "window.{id}.warning.{i}={w}").unwrap();
                    summary.warnings.push(format!("{id}: {w}"));
                }
                for c in &rec.calls {
                    writeln!(calls, "{id}\t{}\t{}\t{}\t{}", c.model, c.transport_calls, c.cache_hits, c.retries).unwrap();
                }
                writeln!(manifest, "window.{id}.status=ok").unwrap();
            }
            Err(e) => {
                let msg = e.to_string().replace('\n', " ");
                warn!("window {id} failed: {msg}");
                writeln!(manifest, "window.{id}.status=failed: {msg}").unwrap();
                summary.failed.push((id.to_string(), msg));
            }
        }
    }
    writeln!(manifest, "windows.failed={}", summary.failed.len()).unwrap();
    write(&cfg.output.join(run_dir::MANIFEST), &manifest)?;
    write(&cfg.output.join(run_dir::CALL_LOG), &calls)?;
    Ok(summary)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl Engine<'_> {
    fn run_window(&self, id: &WindowId, span: &WindowSpan) -> Result<WindowRecord> {
        let cfg = self.cfg;
        let wid = id.to_string();
        let probe = |phase| Probe::new(self.log, &wid, phase);
        let returns = &self.returns[&id.horizon];
        let mut rec = WindowRecord::default();

        let sel = select_universe_probed(
            &self.panel,
            span.train_start,
            span.train_end,
            id.universe,
            probe(Phase::UniverseSelection),
        )?;
        if sel.truncated {
            let w = format!("universe truncated: requested {} tickers, {} eligible", sel.requested, sel.tickers.len());
            warn!("{wid}: {w}");
            rec.warnings.push(w);
        }
        let raw = build_window_frame(&self.store, &sel.tickers, span.train_start, span.test_end, &cfg.features);
        let (mut frame, _) =
            standardize_per_ticker_probed(&raw, span.train_start, span.train_end, probe(Phase::StandardizationFit));
        add_interactions(&mut frame);

        let fit = probe(Phase::ModelFit);
        let train = TrainingSet::build(&frame, returns, span, fit);
        if train.is_empty() {
            return Err(Error::Data(format!("{wid}: no complete training rows")));
        }
        let target_probe = probe(Phase::TargetStats);
        let mut seen = BTreeSet::new();
        for (d, _) in &train.keys {
            if seen.insert(*d) {
                fit.read(*d);
                target_probe.read(*d);
                if let Some(r) = returns.calendar_index(*d).and_then(|ci| returns.realized_on(ci)) {
                    target_probe.read(r);
                }
            }
        }
        let stats = TrainTargetStats::from_targets(train.targets());
        let test_dates: Vec<NaiveDate> = frame.dates().iter().copied().filter(|d| span.in_test(*d)).collect();

        let ctx = ForecastContext {
            window_id: &wid,
            horizon: id.horizon,
            features: &frame,
            train: &train,
            test_dates: &test_dates,
            truth: returns,
            run_seed: cfg.seed,
        };
        let mut frames: Vec<ScoreFrame> = Vec::new();
        for f in &self.forecasters {
            let spec = f.spec();
            let out = f.forecast(&ctx)?;
            rec.calls.push(CallStat {
                model: spec.id.clone(),
                transport_calls: out.transport_calls,
                cache_hits: out.cache_hits,
                retries: out.retries,
            });
            let raw = out.scores;
            let cal = if spec.calibrate {
                match self.calibrator.calibrate(&raw, &stats) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        rec.warnings.push(format!("{}: calibration skipped ({e})", spec.id));
                        None
                    }
                }
            } else {
                None
            };
            frames.push(raw);
            frames.extend(cal);
        }
        let blended = self.blend_all(&frames, &mut rec.warnings)?;
        frames.extend(blended);
        frames.sort_by_key(|f| f.label());

        let dir = run_dir::window_dir(&cfg.output, id);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write(&dir.join(run_dir::FEATURES), &frame.to_tsv_between(span.test_start, span.test_end))?;
        let mut metrics = format!("{}\n", run_dir::METRICS_HEADER);
        let mut summary = format!("{}\n", run_dir::SUMMARY_HEADER);
        for s in &frames {
            let label = s.label();
            write(&dir.join(run_dir::scores_file(&label)), &run_dir::scores_tsv(s, returns))?;
            let dm = date_metrics(s, returns);
            metrics.push_str(&run_dir::metrics_rows(&label, &dm, s.invalid_dates().iter().copied()));
            let ics: Vec<f64> = dm.iter().filter_map(|m| m.ic).collect();
            let rl = aggregate_ranking_loss(&ics);
            let opt = |x: Option<f64>| x.map(repr_f64).unwrap_or_else(|| "NA".into());
            writeln!(
                summary,
                "{label}\t{}\t{}\t{}\t{}\t{}",
                opt(rl.as_ref().map(|r| r.loss)),
                opt(rl.as_ref().and_then(|r| r.half_width)),
                ics.len(),
                opt(mse(&dm)),
                s.invalid_dates().len()
            )
            .unwrap();
            let bt = backtest(s, &self.returns_1d, &cfg.portfolio);
            write(&dir.join(run_dir::backtest_file(&label)), &bt.to_tsv())?;
            write(&dir.join(run_dir::positions_file(&label)), &bt.positions_tsv())?;
            rec.labels.push(LabelStat {
                label,
                invalid: s.invalid_dates().len(),
            });
        }
        write(&dir.join(run_dir::METRICS), &metrics)?;
        write(&dir.join(run_dir::SUMMARY), &summary)?;
        rec.universe = Some(sel);
        Ok(rec)
    }

    /// `cal -> cal_blend` for each configured model, over keys shared with the partner.
    fn blend_all(&self, frames: &[ScoreFrame], warnings: &mut Vec<String>) -> Result<Vec<ScoreFrame>> {
        let partner_name = &self.cfg.calibration.blend_partner;
        let partner = frames.iter().find(|f| &f.label() == partner_name).or_else(|| {
            let own: Vec<&ScoreFrame> = frames.iter().filter(|f| f.model_id() == partner_name).collect();
            own.iter().find(|f| f.stage() == Stage::Cal).or(own.first()).copied()
        });
        let mut out = Vec::new();
        for id in &self.cfg.blend_models {
            let Some(primary) = frames.iter().find(|f| f.model_id() == id && f.stage() == Stage::Cal) else {
                warnings.push(format!("{id}: no calibrated frame to blend"));
                continue;
            };
            let Some(partner) = partner else {
                warnings.push(format!("{id}: blend partner '{partner_name}' unavailable"));
                continue;
            };
            let a: BTreeSet<(NaiveDate, String)> = primary.keys().collect();
            let b: BTreeSet<(NaiveDate, String)> = partner.keys().collect();
            let shared: BTreeSet<_> = a.intersection(&b).cloned().collect();
            if shared.len() != a.len() || shared.len() != b.len() {
                warnings.push(format!(
                    "{id}: blend over {} shared keys ({} primary-only, {} partner-only dropped)",
                    shared.len(),
                    a.len() - shared.len(),
                    b.len() - shared.len()
                ));
            }
            out.push(
                self.calibrator
                    .blend(&primary.restricted_to(&shared), &partner.restricted_to(&shared))?,
            );
        }
        Ok(out)
    }
}
