mod common;

use common::*;
use wfeval::access::{AccessLog, Phase, Probe};
use wfeval::features::{build_window_frame, standardize_per_ticker, FeatureBlockPolicy, RawFeatureStore};
use wfeval::market_data::{build_schedule, forward_returns, load_panel, select_universe, LoadOptions};
use wfeval::metrics::{ranking_loss, CiMode};
use wfeval::models::{fit_ridge, TrainingSet};
use wfeval::pipeline::{run_walkforward, run_walkforward_instrumented};
use wfeval::run_dir::{self, manifest_windows, read_manifest, read_metrics};

#[test]
fn smoke_fifty_months_two_windows() {
    let dir = tempfile::tempdir().unwrap();
    write_panel(dir.path(), SMALL_SYNTH);
    let cfg = run_config(dir.path(), "out", RIDGE_AND_MOCK);
    let summary = run_walkforward(&cfg).unwrap();
    assert!(summary.is_success(), "{:?}", summary.failed);
    assert_eq!(summary.windows, 2);
    let manifest = read_manifest(&summary.run_dir).unwrap();
    let windows = manifest_windows(&manifest);
    assert_eq!(windows.len(), 2);
    for (id, status) in &windows {
        assert_eq!(status, "ok");
        let wdir = run_dir::window_dir(&summary.run_dir, id);
        let features = std::fs::read_to_string(wdir.join(run_dir::FEATURES)).unwrap();
        assert!(features.lines().count() > 1);
        for label in ["ridge", "llm", "llm_cal"] {
            assert!(wdir.join(run_dir::scores_file(label)).exists(), "{label}");
            assert!(wdir.join(run_dir::backtest_file(label)).exists(), "{label}");
        }
    }
    assert_eq!(manifest["backtest.returns"], "1d");
    assert_eq!(manifest["liquidity"], "share_volume");
}

#[test]
fn warm_cache_rerun_and_thread_count_do_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_panel(dir.path(), SMALL_SYNTH);
    let serial = run_config(dir.path(), "serial", &format!("{RIDGE_AND_MOCK}run.parallelism = 1\n"));
    let s1 = run_walkforward(&serial).unwrap();
    wfeval::report::cmd_report(&s1.run_dir).unwrap();
    let first = deterministic_outputs(&s1.run_dir);
    let cold_calls = std::fs::read_to_string(s1.run_dir.join(run_dir::CALL_LOG)).unwrap();

    run_walkforward(&serial).unwrap();
    wfeval::report::cmd_report(&s1.run_dir).unwrap();
    assert_eq!(first, deterministic_outputs(&s1.run_dir));
    let warm_calls = std::fs::read_to_string(s1.run_dir.join(run_dir::CALL_LOG)).unwrap();
    assert_ne!(cold_calls, warm_calls, "second run should be served from the cache");

    let parallel = run_config(dir.path(), "parallel", &format!("{RIDGE_AND_MOCK}run.parallelism = 4\n"));
    let s2 = run_walkforward(&parallel).unwrap();
    wfeval::report::cmd_report(&s2.run_dir).unwrap();
    assert_eq!(first, deterministic_outputs(&s2.run_dir));
}

#[test]
fn instrumented_run_never_reads_test_dates() {
    let dir = tempfile::tempdir().unwrap();
    write_panel(dir.path(), SMALL_SYNTH);
    let cfg = run_config(dir.path(), "out", RIDGE_AND_MOCK);
    let log = AccessLog::new();
    let summary = run_walkforward_instrumented(&cfg, &log).unwrap();
    assert!(summary.is_success());
    let manifest = read_manifest(&summary.run_dir).unwrap();
    for (id, _) in manifest_windows(&manifest) {
        let test = &manifest[&format!("window.{id}.test")];
        let test_start: chrono::NaiveDate = test.split_once("..").unwrap().0.parse().unwrap();
        for phase in Phase::ALL {
            let s = log.summary(&id.to_string(), phase).unwrap_or_else(|| panic!("{id} {phase:?} not logged"));
            assert!(s.reads > 0);
            assert!(s.max_date < test_start, "{id} {phase:?} read {}", s.max_date);
        }
    }
}

#[test]
fn oversized_universe_warns_and_completes() {
    let dir = tempfile::tempdir().unwrap();
    write_panel(dir.path(), SMALL_SYNTH);
    let body = RIDGE_AND_MOCK.replace("run.universes = 5", "run.universes = 20");
    let cfg = run_config(dir.path(), "out", &body);
    let summary = run_walkforward(&cfg).unwrap();
    assert!(summary.is_success(), "{:?}", summary.failed);
    assert!(summary.warnings.iter().any(|w| w.contains("12")), "{:?}", summary.warnings);
    let manifest = read_manifest(&summary.run_dir).unwrap();
    assert!(manifest.iter().any(|(k, v)| k.ends_with(".universe_size") && v == "12/20"));
}

#[test]
fn zero_beta_gives_mean_ic_within_ci_of_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_panel(dir.path(), "synth.tickers = 30\nsynth.months = 54\nsynth.seed = 22\n");
    let body = "run.universes = 21\nmodel.ridge.kind = ridge\nstats.base = ridge\nstats.replications = 99\n";
    let cfg = run_config(dir.path(), "out", body);
    let summary = run_walkforward(&cfg).unwrap();
    assert!(summary.is_success());
    let manifest = read_manifest(&summary.run_dir).unwrap();
    let mut windows = Vec::new();
    for (id, _) in manifest_windows(&manifest) {
        let rows = read_metrics(&run_dir::window_dir(&summary.run_dir, &id).join(run_dir::METRICS)).unwrap();
        windows.push(rows.into_iter().filter(|r| r.label == "ridge").map(|r| r.metrics).collect());
    }
    let loss = ranking_loss(&windows, CiMode::Dates).unwrap();
    assert!(loss.n > 100);
    let hw = loss.half_width.unwrap();
    assert!((loss.loss - 1.0).abs() <= hw, "loss {} +- {hw}", loss.loss);
}

#[test]
fn ridge_puts_largest_weight_on_planted_feature() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_panel(
        dir.path(),
        "synth.tickers = 20\nsynth.months = 49\nsynth.seed = 4\nsynth.noise = 0.01\nsynth.beta.mom_5 = -0.3\n",
    );
    let panel = load_panel(&path, &LoadOptions::default()).unwrap();
    let store = RawFeatureStore::compute(&panel);
    let returns = forward_returns(&panel, 1).unwrap();
    let span = build_schedule(panel.calendar(), 48, 1).unwrap()[0];
    let uni = select_universe(&panel, span.train_start, span.train_end, 11).unwrap();
    let policy = FeatureBlockPolicy { rich_min_universe: None };
    let raw = build_window_frame(&store, &uni.tickers, span.train_start, span.test_end, &policy);
    let (frame, _) = standardize_per_ticker(&raw, span.train_start, span.train_end);
    let train = TrainingSet::build(&frame, &returns, &span, Probe::none(Phase::ModelFit));
    let model = fit_ridge(&train, 1.0).unwrap();
    let (best, _) = model
        .columns
        .iter()
        .zip(&model.coef)
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .unwrap();
    assert!(best.contains("mom_5") || best == "rev_5", "largest weight on {best}");
    let mom = model.coef[model.columns.iter().position(|c| c == "mom_5").unwrap()];
    assert!(mom < 0.0);
}
