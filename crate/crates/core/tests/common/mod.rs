#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use wfeval::config::RunConfig;
use wfeval::synth::{write_synth, SynthSpec};

/// Writes a synthetic panel to `dir/panel.csv`.
pub fn write_panel(dir: &Path, synth: &str) -> PathBuf {
    let spec = SynthSpec::parse(synth).expect("synth spec");
    let out = dir.join("panel.csv");
    write_synth(&spec, &out).expect("write synth");
    out
}

/// Writes `run.conf` pointing at `panel.csv` and loads it.
pub fn run_config(dir: &Path, output: &str, body: &str) -> RunConfig {
    let text = format!("data.path = panel.csv\nrun.output = {output}\n{body}");
    let path = dir.join(format!("{output}.conf"));
    std::fs::write(&path, text).unwrap();
    RunConfig::load(&path).expect("run config")
}

pub const SMALL_SYNTH: &str = "synth.tickers = 12\nsynth.months = 50\nsynth.seed = 3\nsynth.beta.rev_5 = 0.05\n";

pub const RIDGE_AND_MOCK: &str = "\
run.seed = 5
run.universes = 5
model.ridge.kind = ridge
model.ridge.lambda = 10
model.llm.kind = llm_direct
model.llm.transport = mock
model.llm.rule = noisy_oracle
model.llm.rho = 0.4
model.llm.seed = 9
stats.base = ridge
stats.replications = 99
";

/// Relative path to file contents for every file under `root`.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Files compared for determinism: everything except the transport call log and the cache.
pub fn deterministic_outputs(root: &Path) -> BTreeMap<String, Vec<u8>> {
    snapshot(root)
        .into_iter()
        .filter(|(k, _)| k != "calls.tsv" && !k.starts_with("cache/"))
        .collect()
}
