pub mod access;
pub mod calibration;
pub mod config;
pub mod error;
pub mod features;
pub mod llm;
pub mod market_data;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod portfolio;
pub mod rank;
pub mod report;
pub mod run_dir;
pub mod scalar;
pub mod seed;
pub mod stattests;
pub mod synth;
pub mod textfmt;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Ridge = models::RidgeModel<f64>;
pub type Forest = models::RandomForest<f64>;
pub type Tree = models::RegressionTree<f64>;
pub type TargetStats = calibration::TrainTargetStats<f64>;
pub type DmResult = stattests::DmResult<f64>;
pub type RankingLoss = metrics::RankingLoss<f64>;
pub type Weights = portfolio::Weights<f64>;
