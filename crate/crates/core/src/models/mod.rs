//! Classical baselines, the mock forecaster, and the forecaster interface.

mod forecaster;
mod forest;
mod mock;
mod ridge;
mod scores;
mod training;

pub use forecaster::{
    ClassicalForecaster, ForecastContext, ForecastOutput, Forecaster, ForecasterKind, ForecasterSpec,
};
pub use forest::{fit_random_forest, ForestConfig, RandomForest, RegressionTree};
pub use mock::{MockForecaster, MockRule, RhoSchedule};
pub use ridge::{fit_ridge, RidgeModel};
pub use scores::{CalStep, ScoreFrame, Stage};
pub use training::{design_rows, DesignRows, TrainingSet};

/// A fitted model that scores feature rows laid out in its training column order.
pub trait Regressor {
    fn columns(&self) -> &[String];
    fn predict_row(&self, x: &[f64]) -> f64;

    /// Scores every row; errors if the rows' columns differ from the training columns.
    fn predict(&self, model_id: &str, rows: &DesignRows) -> crate::Result<ScoreFrame> {
        check_columns(self.columns(), &rows.columns)?;
        let mut frame = ScoreFrame::new_raw(model_id);
        for ((date, ticker), x) in rows.keys.iter().zip(&rows.x) {
            frame.push(*date, ticker.clone(), self.predict_row(x));
        }
        frame.add_skipped(rows.skipped);
        Ok(frame)
    }
}

fn check_columns(expected: &[String], got: &[String]) -> crate::Result<()> {
    if expected == got {
        return Ok(());
    }
    let missing: Vec<&str> = expected.iter().filter(|c| !got.contains(c)).map(String::as_str).collect();
    let extra: Vec<&str> = got.iter().filter(|c| !expected.contains(c)).map(String::as_str).collect();
    Err(crate::Error::Data(format!(
        "feature columns do not match training order; missing [{}], extra [{}]",
        missing.join(", "),
        extra.join(", ")
    )))
}
