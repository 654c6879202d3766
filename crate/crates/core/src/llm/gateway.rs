use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use log::warn;

use super::cache::{CacheKey, ResponseCache};
use super::contract::{parse_response, LlmResponse, ResponseStatus};
use super::prompt::{build_bundle, date_features, Effort, PromptBundle};
use super::transport::{LlmRequest, MockTransport, Transport};
use crate::error::{Error, Result};
use crate::models::{
    ForecastContext, ForecastOutput, Forecaster, ForecasterKind, ForecasterSpec, MockForecaster, MockRule, ScoreFrame,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DateOutcome {
    pub response: LlmResponse,
    pub transport_calls: usize,
    pub retries: usize,
    pub cache_hit: bool,
}

/// Cache-first request path with a bounded retry budget and per-key single flight.
pub struct LlmGateway {
    cache: Option<ResponseCache>,
    max_retries: usize,
    locks: Mutex<HashMap<CacheKey, Arc<Mutex<()>>>>,
}

impl LlmGateway {
    pub fn new(cache: Option<ResponseCache>) -> Self {
        Self {
            cache,
            max_retries: 1,
            locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    fn key_lock(&self, key: &CacheKey) -> Arc<Mutex<()>> {
        let mut map = self.locks.lock().expect("lock table");
        map.entry(key.clone()).or_default().clone()
    }

    pub fn forecast_date(
        &self,
        spec: &ForecasterSpec,
        bundle: &PromptBundle,
        key: &CacheKey,
        transport: &dyn Transport,
    ) -> Result<DateOutcome> {
        let lock = self.key_lock(key);
        let _guard = lock.lock().map_err(|_| Error::Data("cache entry lock poisoned".into()))?;
        if let Some(cache) = &self.cache {
            if let Some(response) = cache.lookup(key, &bundle.expected)? {
                return Ok(DateOutcome {
                    response,
                    transport_calls: 0,
                    retries: 0,
                    cache_hit: true,
                });
            }
        }
        let request = LlmRequest {
            system: &bundle.system,
            user: &bundle.user,
            budget: spec.budget,
            model_name: if spec.model_name.is_empty() { &spec.id } else { &spec.model_name },
            key,
            expected: &bundle.expected,
        };
        let mut calls = 0;
        loop {
            calls += 1;
            let response = match transport.complete(&request) {
                Ok(text) => parse_response(&text, &bundle.expected),
                Err(e) => LlmResponse::transport_error(e.to_string()),
            };
            if response.status.is_ok() {
                if let Some(cache) = &self.cache {
                    cache.store(key, &response)?;
                }
            }
            if response.status.is_ok() || calls > self.max_retries {
                return Ok(DateOutcome {
                    response,
                    transport_calls: calls,
                    retries: calls - 1,
                    cache_hit: false,
                });
            }
        }
    }
}

pub enum LlmTransport {
    Shared(Arc<dyn Transport>),
    /// Mock scores computed from the window context, served through the contract.
    Mock(MockRule),
}

/// Direct or reasoning LLM forecaster driven through the gateway.
pub struct LlmForecaster {
    spec: ForecasterSpec,
    gateway: Arc<LlmGateway>,
    transport: LlmTransport,
}

impl LlmForecaster {
    pub fn new(spec: ForecasterSpec, gateway: Arc<LlmGateway>, transport: LlmTransport) -> Result<Self> {
        spec.validate()?;
        if !spec.kind.is_llm() {
            return Err(Error::Config(format!("model '{}' is not an LLM kind", spec.id)));
        }
        Ok(Self { spec, gateway, transport })
    }

    pub fn effort(&self) -> Result<Option<Effort>> {
        match self.spec.kind {
            ForecasterKind::Tllm => Ok(Some(self.spec.param("effort", Effort::High)?)),
            _ => Ok(None),
        }
    }
}

impl Forecaster for LlmForecaster {
    fn spec(&self) -> &ForecasterSpec {
        &self.spec
    }

    fn forecast(&self, ctx: &ForecastContext<'_>) -> Result<ForecastOutput> {
        let mock;
        let transport: &dyn Transport = match &self.transport {
            LlmTransport::Shared(t) => t.as_ref(),
            LlmTransport::Mock(rule) => {
                let f = MockForecaster::new(rule.clone());
                let mut by_date = BTreeMap::new();
                for &d in ctx.test_dates {
                    by_date.insert(d, f.scores_for_date(ctx, d)?);
                }
                mock = MockTransport::new(by_date);
                &mock
            }
        };
        let effort = self.effort()?;
        let mut out = ForecastOutput::local(ScoreFrame::new_raw(&self.spec.id));
        for &date in ctx.test_dates {
            let rows = date_features(ctx.features, date)?;
            let bundle = match build_bundle(&rows, ctx.horizon, effort) {
                Ok(b) => b,
                Err(_) => {
                    out.scores.mark_invalid(date);
                    continue;
                }
            };
            let key = CacheKey::new(&self.spec.id, ctx.horizon, ctx.features.tickers(), date);
            let outcome = self.gateway.forecast_date(&self.spec, &bundle, &key, transport)?;
            out.transport_calls += outcome.transport_calls;
            out.retries += outcome.retries;
            out.cache_hits += usize::from(outcome.cache_hit);
            match &outcome.response.status {
                ResponseStatus::Ok => out.scores.insert_date(date, outcome.response.ordered(&bundle.expected)),
                status => {
                    warn!("{} {}: {date} invalid ({})", self.spec.id, ctx.window_id, status.code());
                    out.scores.mark_invalid(date);
                }
            }
        }
        Ok(out)
    }
}
