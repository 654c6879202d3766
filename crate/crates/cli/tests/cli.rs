use std::path::Path;
use std::process::{Command, Output};

fn wfeval(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfeval"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

const SYNTH: &str = "synth.tickers = 12\nsynth.months = 50\nsynth.seed = 2\nsynth.beta.rev_5 = 0.05\n";
const RUN: &str = "data.path = panel.csv\nrun.output = out\nrun.universes = 5\n\
model.ridge.kind = ridge\nmodel.llm.kind = llm_direct\nmodel.llm.transport = mock\n\
model.llm.rule = noisy_oracle\nmodel.llm.rho = 0.3\nstats.base = ridge\nstats.replications = 99\n";

#[test]
fn synth_run_report_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("synth.conf"), SYNTH).unwrap();
    std::fs::write(d.join("run.conf"), RUN).unwrap();
    let out = wfeval(&["synth", "synth.conf", "panel.csv"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("panel.csv.beta.tsv").exists());

    let out = wfeval(&["run", "run.conf"], d);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("run: 2 windows, 0 failed"), "{stdout}");
    assert!(d.join("out/reports/dm_matrix.tsv").exists());
    assert!(d.join("out/reports/fig_all.svg").exists());

    let out = wfeval(&["report", "out"], d);
    assert!(out.status.success());

    let out = wfeval(&["verify", "out"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));

    let window = std::fs::read_dir(d.join("out/windows")).unwrap().next().unwrap().unwrap().path();
    let bt = window.join("backtest_ridge.tsv");
    let text = std::fs::read_to_string(&bt).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut f: Vec<String> = lines[1].split('\t').map(str::to_string).collect();
    f[4] = "1.5".into();
    lines[1] = f.join("\t");
    std::fs::write(&bt, lines.join("\n") + "\n").unwrap();
    let out = wfeval(&["verify", "out"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("violation:"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "run.universes = 5\nmodel.x.kind = nonsense\n").unwrap();
    let out = wfeval(&["run", "bad.conf"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("data.path"), "{err}");
}
