//! Flat `dotted.key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::calibration::CalibrationConfig;
use crate::error::{Error, Result};
use crate::features::FeatureBlockPolicy;
use crate::llm::HttpConfig;
use crate::market_data::{ColumnMap, LoadOptions};
use crate::metrics::CiMode;
use crate::models::{ForecasterKind, ForecasterSpec};
use crate::portfolio::PortfolioConfig;
use crate::stattests::SpaVariant;

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    let mut errs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                    errs.push(format!("line {}: duplicate key '{}'", i + 1, k.trim()));
                }
            }
            _ => errs.push(format!("line {}: expected key = value", i + 1)),
        }
    }
    if errs.is_empty() {
        Ok(map)
    } else {
        Err(Error::ConfigList(errs))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransportConfig {
    /// Ridge, forest and mock kinds run in-process.
    Local,
    Mock,
    Http(HttpConfig),
    /// Directory holding another run's `cache/`.
    Replay(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub spec: ForecasterSpec,
    pub transport: TransportConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmLoss {
    Mse,
    RankLoss,
}

/// Loss axis for DM: one pooled loss per date, or one loss per (date, ticker).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmAxis {
    Date,
    Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsConfig {
    pub base: String,
    pub replications: usize,
    pub block_length: f64,
    pub spa_variant: SpaVariant,
    pub dm_loss: DmLoss,
    pub dm_axis: DmAxis,
    /// `None` means `k - 1`.
    pub dm_lags: Option<usize>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            base: "ridge".into(),
            replications: 1000,
            block_length: 5.0,
            spa_variant: SpaVariant::Consistent,
            dm_loss: DmLoss::Mse,
            dm_axis: DmAxis::Date,
            dm_lags: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_path: PathBuf,
    pub load: LoadOptions,
    pub output: PathBuf,
    /// Directory holding `cache/`; defaults to the output directory.
    pub cache_base: PathBuf,
    pub seed: u64,
    pub universes: Vec<usize>,
    pub horizons: Vec<usize>,
    pub train_months: usize,
    pub test_months: usize,
    /// Worker threads; 0 lets the pool decide.
    pub parallelism: usize,
    pub ci_mode: CiMode,
    pub features: FeatureBlockPolicy,
    pub models: Vec<ModelConfig>,
    pub calibration: CalibrationConfig,
    /// Models whose calibrated frame is also blended with the partner.
    pub blend_models: Vec<String>,
    pub portfolio: PortfolioConfig,
    pub stats: StatsConfig,
}

const MODEL_PARAMS: &[&str] = &[
    "lambda",
    "trees",
    "max_depth",
    "min_leaf",
    "features_per_split",
    "bootstrap",
    "rule",
    "column",
    "value",
    "rho",
    "seed",
    "effort",
];

struct Reader<'a> {
    map: &'a BTreeMap<String, String>,
    errs: Vec<String>,
    used: std::collections::BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn raw(&mut self, key: &str) -> Option<&'a str> {
        self.used.insert(key.to_string());
        self.map.get(key).map(String::as_str)
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str, default: T) -> T {
        match self.raw(key) {
            None => default,
            Some(v) => match v.parse() {
                Ok(x) => x,
                Err(_) => {
                    self.errs.push(format!("{key}: cannot parse '{v}'"));
                    default
                }
            },
        }
    }

    fn list(&mut self, key: &str, default: &[usize]) -> Vec<usize> {
        match self.raw(key) {
            None => default.to_vec(),
            Some(v) => {
                let parsed: std::result::Result<Vec<usize>, _> =
                    v.split(',').map(|s| s.trim().parse::<usize>()).collect();
                parsed.unwrap_or_else(|_| {
                    self.errs.push(format!("{key}: expected comma-separated integers, got '{v}'"));
                    default.to_vec()
                })
            }
        }
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = PathBuf::from(p);
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses and validates; every problem is reported at once.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let map = parse_key_values(text)?;
        Self::from_map(&map, base_dir)
    }

    pub fn from_map(map: &BTreeMap<String, String>, base_dir: &Path) -> Result<Self> {
        let mut r = Reader {
            map,
            errs: Vec::new(),
            used: Default::default(),
        };
        let data_path = match r.raw("data.path") {
            Some(p) => resolve(base_dir, p),
            None => {
                r.errs.push("data.path is required".into());
                PathBuf::new()
            }
        };
        let delimiter = match r.raw("data.delimiter").unwrap_or("comma") {
            "comma" | "," => b',',
            "tab" | "\\t" => b'\t',
            other => {
                r.errs.push(format!("data.delimiter must be comma or tab, got '{other}'"));
                b','
            }
        };
        let d = ColumnMap::default();
        let columns = ColumnMap {
            ticker: r.get("col.ticker", d.ticker),
            date: r.get("col.date", d.date),
            close: r.get("col.close", d.close),
            volume: r.get("col.volume", d.volume),
            open: r.raw("col.open").map(str::to_string),
            high: r.raw("col.high").map(str::to_string),
            low: r.raw("col.low").map(str::to_string),
        };
        let output = resolve(base_dir, r.raw("run.output").unwrap_or("run"));
        let cache_base = r.raw("run.cache_dir").map(|p| resolve(base_dir, p)).unwrap_or_else(|| output.clone());
        let seed = r.get("run.seed", 0u64);
        let universes = r.list("run.universes", &[5, 11, 21, 36]);
        let horizons = r.list("run.horizons", &[1]);
        let train_months = r.get("run.train_months", 48usize);
        let test_months = r.get("run.test_months", 1usize);
        let parallelism = r.get("run.parallelism", 0usize);
        let ci_mode = r.get("run.ci_mode", CiMode::Dates);
        let rich_min_universe = match r.raw("features.rich_min_universe") {
            None => Some(21),
            Some("none") => None,
            Some(v) => match v.parse() {
                Ok(u) => Some(u),
                Err(_) => {
                    r.errs.push(format!("features.rich_min_universe: cannot parse '{v}'"));
                    None
                }
            },
        };

        let cd = CalibrationConfig::default();
        let calibration = CalibrationConfig {
            lower_pct: r.get("calibration.lower_pct", cd.lower_pct),
            upper_pct: r.get("calibration.upper_pct", cd.upper_pct),
            epsilon: r.get("calibration.epsilon", cd.epsilon),
            blend_weight: r.get("calibration.blend_weight", cd.blend_weight),
            blend_partner: r.get("calibration.blend_partner", cd.blend_partner),
        };
        let pd = PortfolioConfig::default();
        let portfolio = PortfolioConfig {
            p_long: r.get("portfolio.p_long", pd.p_long),
            p_short: r.get("portfolio.p_short", pd.p_short),
            turnover_cap: r.get("portfolio.turnover_cap", pd.turnover_cap),
            cost_bps: r.get("portfolio.cost_bps", pd.cost_bps),
            borrow_bps: r.get("portfolio.borrow_bps", pd.borrow_bps),
        };
        let sd = StatsConfig::default();
        let stats = StatsConfig {
            base: r.get("stats.base", sd.base),
            replications: r.get("stats.replications", sd.replications),
            block_length: r.get("stats.block_length", sd.block_length),
            spa_variant: r.get("stats.spa_variant", sd.spa_variant),
            dm_loss: match r.raw("stats.dm_loss").unwrap_or("mse") {
                "mse" => DmLoss::Mse,
                "rank_loss" => DmLoss::RankLoss,
                other => {
                    r.errs.push(format!("stats.dm_loss must be mse or rank_loss, got '{other}'"));
                    DmLoss::Mse
                }
            },
            dm_axis: match r.raw("stats.dm_axis").unwrap_or("date") {
                "date" => DmAxis::Date,
                "observation" => DmAxis::Observation,
                other => {
                    r.errs.push(format!("stats.dm_axis must be date or observation, got '{other}'"));
                    DmAxis::Date
                }
            },
            dm_lags: match r.raw("stats.dm_lags") {
                None | Some("auto") => None,
                Some(v) => v.parse().map(Some).unwrap_or_else(|_| {
                    r.errs.push(format!("stats.dm_lags: cannot parse '{v}'"));
                    None
                }),
            },
        };

        let ids: Vec<String> = {
            let mut v: Vec<String> = map
                .keys()
                .filter_map(|k| k.strip_prefix("model."))
                .filter_map(|k| k.split_once('.').map(|(id, _)| id.to_string()))
                .collect();
            v.dedup();
            v
        };
        let mut models = Vec::new();
        for id in &ids {
            if let Some(m) = Self::model(&mut r, id, base_dir) {
                models.push(m);
            }
        }
        let blend_models: Vec<String> = match r.raw("calibration.blend_models") {
            Some("") | Some("none") => Vec::new(),
            Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
            None => models
                .iter()
                .filter(|m| m.spec.kind == ForecasterKind::Tllm)
                .map(|m| m.spec.id.clone())
                .collect(),
        };

        let cfg = RunConfig {
            data_path,
            load: LoadOptions { columns, delimiter },
            output,
            cache_base,
            seed,
            universes,
            horizons,
            train_months,
            test_months,
            parallelism,
            ci_mode,
            features: FeatureBlockPolicy { rich_min_universe },
            models,
            calibration,
            blend_models,
            portfolio,
            stats,
        };
        for k in map.keys() {
            if !r.used.contains(k) {
                r.errs.push(format!("unknown key '{k}'"));
            }
        }
        cfg.validate_into(&mut r.errs);
        if r.errs.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::ConfigList(r.errs))
        }
    }

    fn model(r: &mut Reader<'_>, id: &str, base_dir: &Path) -> Option<ModelConfig> {
        let key = |s: &str| format!("model.{id}.{s}");
        let kind: ForecasterKind = match r.raw(&key("kind")) {
            Some(k) => match k.parse() {
                Ok(k) => k,
                Err(e) => {
                    r.errs.push(format!("{}: {e}", key("kind")));
                    return None;
                }
            },
            None => {
                r.errs.push(format!("{} is required", key("kind")));
                return None;
            }
        };
        let mut spec = ForecasterSpec::new(id, kind);
        spec.budget = r.get(&key("budget"), spec.budget);
        spec.calibrate = r.get(&key("calibrate"), spec.calibrate);
        spec.model_name = r.get(&key("model_name"), String::new());
        for p in MODEL_PARAMS {
            if let Some(v) = r.raw(&key(p)) {
                spec.params.insert(p.to_string(), v.to_string());
            }
        }
        let transport = if !kind.is_llm() {
            TransportConfig::Local
        } else {
            match r.raw(&key("transport")).unwrap_or("mock") {
                "mock" => TransportConfig::Mock,
                "replay" => match r.raw(&key("replay.dir")) {
                    Some(d) => TransportConfig::Replay(resolve(base_dir, d)),
                    None => {
                        r.errs.push(format!("{} is required for replay", key("replay.dir")));
                        TransportConfig::Mock
                    }
                },
                "http" => {
                    let d = HttpConfig::default();
                    let mut headers = Vec::new();
                    let prefix = key("http.header.");
                    let header_keys: Vec<String> =
                        r.map.keys().filter(|k| k.starts_with(&prefix)).cloned().collect();
                    for hk in header_keys {
                        let v = r.raw(&hk).unwrap_or_default().to_string();
                        headers.push((hk[prefix.len()..].to_string(), v));
                    }
                    TransportConfig::Http(HttpConfig {
                        endpoint: r.get(&key("http.endpoint"), d.endpoint),
                        auth_env: r.raw(&key("http.auth_env")).map(str::to_string),
                        auth_header: r.get(&key("http.auth_header"), d.auth_header),
                        auth_prefix: r.get(&key("http.auth_prefix"), d.auth_prefix),
                        headers,
                        body_template: r.get(&key("http.body_template"), d.body_template),
                        response_path: r.get(&key("http.response_path"), d.response_path),
                        timeout_secs: r.get(&key("http.timeout_secs"), d.timeout_secs),
                    })
                }
                other => {
                    r.errs.push(format!("{}: unknown transport '{other}'", key("transport")));
                    TransportConfig::Mock
                }
            }
        };
        if let Err(e) = spec.validate() {
            r.errs.push(e.to_string());
        }
        if kind == ForecasterKind::Mock
            || (kind.is_llm() && transport == TransportConfig::Mock)
        {
            if let Err(e) = crate::models::MockRule::from_params(&spec.params) {
                r.errs.push(format!("model.{id}: {e}"));
            }
        }
        Some(ModelConfig { spec, transport })
    }

    /// Re-checks a config assembled or edited in code.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        self.validate_into(&mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigList(errs))
        }
    }

    fn validate_into(&self, errs: &mut Vec<String>) {
        if !self.data_path.as_os_str().is_empty() && !self.data_path.exists() {
            errs.push(format!("data.path {} does not exist", self.data_path.display()));
        }
        if self.universes.is_empty() || self.universes.contains(&0) {
            errs.push("run.universes must list sizes >= 1".into());
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            errs.push("run.horizons must list horizons >= 1".into());
        }
        if self.train_months == 0 || self.test_months == 0 {
            errs.push("run.train_months and run.test_months must be >= 1".into());
        }
        if self.models.is_empty() {
            errs.push("no models configured (model.<id>.kind)".into());
        }
        let has = |id: &str| self.models.iter().any(|m| m.spec.id == id);
        if !self.models.is_empty() && !has(&self.stats.base) {
            errs.push(format!("stats.base '{}' is not a configured model", self.stats.base));
        }
        if !self.blend_models.is_empty() && !has(&self.calibration.blend_partner) {
            errs.push(format!(
                "calibration.blend_partner '{}' is not a configured model",
                self.calibration.blend_partner
            ));
        }
        for b in &self.blend_models {
            match self.models.iter().find(|m| &m.spec.id == b) {
                None => errs.push(format!("calibration.blend_models lists unknown model '{b}'")),
                Some(m) if !m.spec.calibrate => {
                    errs.push(format!("blended model '{b}' must have calibrate = true"))
                }
                _ => {}
            }
        }
        if let Err(e) = self.calibration.validate() {
            errs.push(e.to_string());
        }
        match self.portfolio.validate() {
            Err(Error::ConfigList(v)) => errs.extend(v),
            Err(e) => errs.push(e.to_string()),
            Ok(()) => {}
        }
        if self.stats.replications == 0 || !(self.stats.block_length >= 1.0) {
            errs.push("stats.replications must be > 0 and stats.block_length >= 1".into());
        }
    }

    /// Deterministic `key=value` rendering of the effective configuration.
    pub fn describe(&self) -> Vec<(String, String)> {
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = vec![
            ("data.path".to_string(), self.data_path.display().to_string()),
            ("run.seed".into(), self.seed.to_string()),
            ("run.universes".into(), join(&self.universes)),
            ("run.horizons".into(), join(&self.horizons)),
            ("run.train_months".into(), self.train_months.to_string()),
            ("run.test_months".into(), self.test_months.to_string()),
            (
                "run.ci_mode".into(),
                match self.ci_mode {
                    CiMode::Dates => "dates".into(),
                    CiMode::Windows => "windows".into(),
                },
            ),
            (
                "features.rich_min_universe".into(),
                self.features.rich_min_universe.map_or("none".into(), |u| u.to_string()),
            ),
            ("calibration.lower_pct".into(), self.calibration.lower_pct.to_string()),
            ("calibration.upper_pct".into(), self.calibration.upper_pct.to_string()),
            ("calibration.epsilon".into(), self.calibration.epsilon.to_string()),
            ("calibration.blend_weight".into(), self.calibration.blend_weight.to_string()),
            ("calibration.blend_partner".into(), self.calibration.blend_partner.clone()),
            ("calibration.blend_models".into(), self.blend_models.join(",")),
            ("portfolio.p_long".into(), self.portfolio.p_long.to_string()),
            ("portfolio.p_short".into(), self.portfolio.p_short.to_string()),
            ("portfolio.turnover_cap".into(), self.portfolio.turnover_cap.to_string()),
            ("portfolio.cost_bps".into(), self.portfolio.cost_bps.to_string()),
            ("portfolio.borrow_bps".into(), self.portfolio.borrow_bps.to_string()),
            ("stats.base".into(), self.stats.base.clone()),
            ("stats.replications".into(), self.stats.replications.to_string()),
            ("stats.block_length".into(), self.stats.block_length.to_string()),
            (
                "stats.spa_variant".into(),
                match self.stats.spa_variant {
                    SpaVariant::Lower => "lower",
                    SpaVariant::Consistent => "consistent",
                    SpaVariant::Upper => "upper",
                }
                .into(),
            ),
            (
                "stats.dm_loss".into(),
                match self.stats.dm_loss {
                    DmLoss::Mse => "mse",
                    DmLoss::RankLoss => "rank_loss",
                }
                .into(),
            ),
            (
                "stats.dm_axis".into(),
                match self.stats.dm_axis {
                    DmAxis::Date => "date",
                    DmAxis::Observation => "observation",
                }
                .into(),
            ),
            ("stats.dm_lags".into(), self.stats.dm_lags.map_or("auto".into(), |l| l.to_string())),
        ];
        for m in &self.models {
            let s = &m.spec;
            let p = |k: &str| format!("model.{}.{k}", s.id);
            out.push((p("kind"), s.kind.name().into()));
            out.push((p("budget"), s.budget.to_string()));
            out.push((p("calibrate"), s.calibrate.to_string()));
            if !s.model_name.is_empty() {
                out.push((p("model_name"), s.model_name.clone()));
            }
            out.push((
                p("transport"),
                match &m.transport {
                    TransportConfig::Local => "local".into(),
                    TransportConfig::Mock => "mock".into(),
                    TransportConfig::Http(h) => format!("http {}", h.endpoint),
                    TransportConfig::Replay(d) => format!("replay {}", d.display()),
                },
            ));
            for (k, v) in &s.params {
                out.push((p(k), v.clone()));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(extra: &str) -> String {
        format!("data.path = {}\nmodel.ridge.kind = ridge\n{extra}", env!("CARGO_MANIFEST_PATH"))
    }

    #[test]
    fn defaults_and_models() {
        let cfg = RunConfig::parse(
            &base("model.tllm_B512.kind = tllm\nmodel.tllm_B512.rule = constant\nrun.universes = 5, 11\n"),
            Path::new("."),
        )
        .unwrap();
        assert_eq!(cfg.universes, vec![5, 11]);
        assert_eq!(cfg.horizons, vec![1]);
        assert_eq!(cfg.train_months, 48);
        assert_eq!(cfg.portfolio, PortfolioConfig::default());
        assert_eq!(cfg.blend_models, vec!["tllm_B512".to_string()]);
        let t = cfg.models.iter().find(|m| m.spec.id == "tllm_B512").unwrap();
        assert_eq!((t.spec.budget, t.spec.calibrate, &t.transport), (512, true, &TransportConfig::Mock));
    }

    #[test]
    fn errors_reported_together() {
        let err = RunConfig::parse(
            "data.path = /nonexistent/x.csv\nrun.universes = 5,x\nportfolio.p_long = 0.9\nbogus = 1\nmodel.a.kind = tllm\nmodel.a.budget = 0\n",
            Path::new("."),
        )
        .unwrap_err();
        let Error::ConfigList(list) = err else { panic!("expected list") };
        let text = list.join("\n");
        for needle in ["data.path", "run.universes", "p_long", "unknown key 'bogus'", "budget > 0", "stats.base"] {
            assert!(text.contains(needle), "missing {needle} in {text}");
        }
    }

    #[test]
    fn key_value_syntax() {
        assert!(parse_key_values("a = 1\n# c\n\nb=2").unwrap().len() == 2);
        assert!(parse_key_values("a = 1\na = 2").is_err());
        assert!(parse_key_values("novalue").is_err());
    }
}
