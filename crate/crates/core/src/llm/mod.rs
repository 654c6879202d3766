//! Prompt assembly, output-contract parsing, response caching and transports.

pub mod cache;
pub mod contract;
pub mod gateway;
pub mod prompt;
pub mod transport;

pub use cache::{universe_signature, CacheKey, ResponseCache};
pub use contract::{format_block, parse_response, LlmResponse, ResponseStatus, ViolationCode};
pub use gateway::{DateOutcome, LlmForecaster, LlmGateway, LlmTransport};
pub use prompt::{
    build_bundle, build_user_message, date_features, Effort, PromptBundle, TickerFeatures, SYSTEM_PROMPT,
    SYSTEM_PROMPT_VERSION,
};
pub use transport::{
    HttpConfig, HttpTransport, LlmRequest, MockTransport, ReplayTransport, ScriptedTransport, Transport,
};
