use std::collections::BTreeMap;
use std::str::FromStr;

use chrono::NaiveDate;

use super::{
    design_rows, fit_random_forest, fit_ridge, ForestConfig, MockForecaster, MockRule, Regressor, ScoreFrame,
    TrainingSet,
};
use crate::error::{Error, Result};
use crate::features::FeatureFrame;
use crate::market_data::ReturnFrame;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ForecasterKind {
    Ridge,
    RandomForest,
    LlmDirect,
    Tllm,
    Mock,
}

impl ForecasterKind {
    pub fn name(self) -> &'static str {
        match self {
            ForecasterKind::Ridge => "ridge",
            ForecasterKind::RandomForest => "random_forest",
            ForecasterKind::LlmDirect => "llm_direct",
            ForecasterKind::Tllm => "tllm",
            ForecasterKind::Mock => "mock",
        }
    }

    pub fn is_llm(self) -> bool {
        matches!(self, ForecasterKind::LlmDirect | ForecasterKind::Tllm)
    }
}

impl FromStr for ForecasterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ridge" => ForecasterKind::Ridge,
            "random_forest" | "rf" => ForecasterKind::RandomForest,
            "llm_direct" => ForecasterKind::LlmDirect,
            "tllm" => ForecasterKind::Tllm,
            "mock" => ForecasterKind::Mock,
            other => return Err(Error::Config(format!("unknown forecaster kind '{other}'"))),
        })
    }
}

/// Configuration of one forecaster in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecasterSpec {
    /// Label used in outputs, e.g. `ridge` or `tllm_B512`.
    pub id: String,
    pub kind: ForecasterKind,
    /// Reasoning token budget: 0 for every kind except `tllm`.
    pub budget: u32,
    /// Endpoint-side model name for LLM kinds.
    pub model_name: String,
    /// Whether raw scores are calibrated (default: LLM kinds only).
    pub calibrate: bool,
    pub params: BTreeMap<String, String>,
}

impl ForecasterSpec {
    pub fn new(id: &str, kind: ForecasterKind) -> Self {
        Self {
            id: id.to_string(),
            kind,
            budget: if kind == ForecasterKind::Tllm { 512 } else { 0 },
            model_name: String::new(),
            calibrate: kind.is_llm(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn param<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::Config(format!("model '{}': cannot parse {key} = '{v}'", self.id))
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::Config(format!("invalid model id '{}'", self.id)));
        }
        match (self.kind, self.budget) {
            (ForecasterKind::Tllm, 0) => Err(Error::Config(format!(
                "model '{}': tllm requires a token budget > 0",
                self.id
            ))),
            (ForecasterKind::Tllm, _) | (_, 0) => Ok(()),
            (kind, b) => Err(Error::Config(format!(
                "model '{}': budget {b} is only valid for tllm, not {}",
                self.id,
                kind.name()
            ))),
        }
    }

    pub fn forest_config(&self, seed: u64) -> Result<ForestConfig> {
        let d = ForestConfig::default();
        Ok(ForestConfig {
            trees: self.param("trees", d.trees)?,
            max_depth: self.param("max_depth", d.max_depth)?,
            min_leaf: self.param("min_leaf", d.min_leaf)?,
            features_per_split: self.param("features_per_split", d.features_per_split)?,
            bootstrap: self.param("bootstrap", d.bootstrap)?,
            seed,
        })
    }
}

/// Everything a forecaster may consult for one window.
pub struct ForecastContext<'a> {
    pub window_id: &'a str,
    pub horizon: usize,
    /// Standardized features over train and test dates.
    pub features: &'a FeatureFrame,
    pub train: &'a TrainingSet,
    pub test_dates: &'a [NaiveDate],
    /// Realized returns; read only by planted-signal mocks.
    pub truth: &'a ReturnFrame,
    pub run_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastOutput {
    pub scores: ScoreFrame,
    pub transport_calls: usize,
    pub cache_hits: usize,
    pub retries: usize,
}

impl ForecastOutput {
    pub fn local(scores: ScoreFrame) -> Self {
        Self {
            scores,
            transport_calls: 0,
            cache_hits: 0,
            retries: 0,
        }
    }
}

pub trait Forecaster: Send + Sync {
    fn spec(&self) -> &ForecasterSpec;
    fn forecast(&self, ctx: &ForecastContext<'_>) -> Result<ForecastOutput>;
}

/// Ridge, random forest and mock forecasters, refit from scratch per window.
#[derive(Debug, Clone)]
pub struct ClassicalForecaster {
    spec: ForecasterSpec,
}

impl ClassicalForecaster {
    pub fn new(spec: ForecasterSpec) -> Result<Self> {
        spec.validate()?;
        if spec.kind.is_llm() {
            return Err(Error::Config(format!(
                "model '{}' is an LLM kind; use the gateway forecaster",
                spec.id
            )));
        }
        if spec.kind == ForecasterKind::Mock {
            MockRule::from_params(&spec.params)?;
        }
        Ok(Self { spec })
    }
}

impl Forecaster for ClassicalForecaster {
    fn spec(&self) -> &ForecasterSpec {
        &self.spec
    }

    fn forecast(&self, ctx: &ForecastContext<'_>) -> Result<ForecastOutput> {
        let spec = &self.spec;
        let rows = || design_rows(ctx.features, &ctx.train.columns, ctx.test_dates);
        let scores = match spec.kind {
            ForecasterKind::Ridge => {
                let model = fit_ridge(ctx.train, spec.param("lambda", 10.0)?)?;
                model.predict(&spec.id, &rows())?
            }
            ForecasterKind::RandomForest => {
                let seed = derive_seed(ctx.run_seed, &[ctx.window_id, &spec.id]);
                let model = fit_random_forest(ctx.train, &spec.forest_config(seed)?)?;
                model.predict(&spec.id, &rows())?
            }
            ForecasterKind::Mock => {
                MockForecaster::new(MockRule::from_params(&spec.params)?).forecast_frame(&spec.id, ctx)?
            }
            ForecasterKind::LlmDirect | ForecasterKind::Tllm => unreachable!("rejected in new()"),
        };
        Ok(ForecastOutput::local(scores))
    }
}
