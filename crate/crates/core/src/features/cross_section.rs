use super::frame::{ColumnKind, FeatureFrame};
use crate::rank::average_ranks;
use crate::scalar::Scalar;

/// Percentile ranks in `[0, 1]` over present values: `(r - 1)/(m - 1)` with
/// average ranks for ties, `0.5` when only one value is present.
pub fn xrank<F: Scalar>(values: &[Option<F>]) -> Vec<Option<F>> {
    let present: Vec<F> = values.iter().flatten().copied().collect();
    let m = present.len();
    let ranks = average_ranks(&present);
    let mut it = ranks.into_iter();
    values
        .iter()
        .map(|v| {
            v.map(|_| {
                let r = it.next().expect("rank per present value");
                if m == 1 {
                    F::lit(0.5)
                } else {
                    (r - F::one()) / F::from_usize_lossy(m - 1)
                }
            })
        })
        .collect()
}

fn present_mean<F: Scalar>(values: &[Option<F>]) -> Option<F> {
    let present: Vec<F> = values.iter().flatten().copied().collect();
    (!present.is_empty())
        .then(|| present.iter().copied().sum::<F>() / F::from_usize_lossy(present.len()))
}

/// Adds `<col>_xrank` for each source column, computed per date over the frame's tickers.
pub fn cross_sectional_ranks(frame: &mut FeatureFrame, sources: &[&str]) {
    for src in sources {
        let Some(sc) = frame.column_index(src) else {
            continue;
        };
        let out = frame.add_column(&format!("{src}_xrank"), ColumnKind::CrossSectional);
        for d in 0..frame.dates().len() {
            let vals: Vec<Option<f64>> = (0..frame.tickers().len()).map(|t| frame.get(d, t, sc)).collect();
            for (t, r) in xrank(&vals).into_iter().enumerate() {
                frame.set(d, t, out, r);
            }
        }
    }
}

/// Adds per-date cross-sectional means broadcast to every ticker: `(output, source)`.
pub fn market_context(frame: &mut FeatureFrame, specs: &[(&str, &str)]) {
    for (name, src) in specs {
        let Some(sc) = frame.column_index(src) else {
            continue;
        };
        let out = frame.add_column(name, ColumnKind::CrossSectional);
        for d in 0..frame.dates().len() {
            let vals: Vec<Option<f64>> = (0..frame.tickers().len()).map(|t| frame.get(d, t, sc)).collect();
            let m = present_mean(&vals);
            for t in 0..frame.tickers().len() {
                frame.set(d, t, out, m);
            }
        }
    }
}
