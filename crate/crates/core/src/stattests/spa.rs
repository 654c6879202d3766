use rayon::prelude::*;

use super::bootstrap::stationary_bootstrap_replication;
use crate::error::{Error, Result};

/// Recentering of the bootstrap null.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaVariant {
    /// `max(x, 0)`; gives the lower p-value bound.
    Lower,
    /// Threshold at `-omega * sqrt(2 log log n / n)`.
    Consistent,
    /// `x`; the Reality Check upper bound.
    Upper,
}

impl std::str::FromStr for SpaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(SpaVariant::Lower),
            "consistent" => Ok(SpaVariant::Consistent),
            "upper" => Ok(SpaVariant::Upper),
            other => Err(Error::Config(format!("unknown SPA variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaConfig {
    pub replications: usize,
    pub mean_block: f64,
    pub seed: u64,
    pub variant: SpaVariant,
}

impl Default for SpaConfig {
    fn default() -> Self {
        Self {
            replications: 1000,
            mean_block: 5.0,
            seed: 0,
            variant: SpaVariant::Consistent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaResult {
    /// `max_k sqrt(n) dbar_k / omega_k` over usable candidates.
    pub t_obs: f64,
    /// One-sided p-value, `(1 + #{T* >= T}) / (B + 1)`.
    pub p_value: f64,
    /// Candidates dropped for zero bootstrap variance.
    pub excluded: Vec<usize>,
    pub n: usize,
}

/// SPA test of `H0: no candidate beats the base`, with `d_k = L_base - L_k`.
pub fn spa_test(base: &[f64], candidates: &[Vec<f64>], config: &SpaConfig) -> Result<SpaResult> {
    let n = base.len();
    if candidates.is_empty() {
        return Err(Error::Argument("SPA needs at least one candidate".into()));
    }
    if n < 2 || candidates.iter().any(|c| c.len() != n) {
        return Err(Error::Argument("SPA series must be aligned with n >= 2".into()));
    }
    if config.replications == 0 || config.mean_block < 1.0 {
        return Err(Error::Config("SPA needs replications > 0 and block length >= 1".into()));
    }
    let nf = n as f64;
    let d: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| base.iter().zip(c).map(|(b, l)| b - l).collect())
        .collect();
    let dbar: Vec<f64> = d.iter().map(|dk| dk.iter().sum::<f64>() / nf).collect();

    // bootstrap means per replication, in replication order
    let boot: Vec<Vec<f64>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|r| {
            let idx = stationary_bootstrap_replication(n, config.mean_block, config.seed, r);
            d.iter()
                .map(|dk| idx.iter().map(|&i| dk[i]).sum::<f64>() / nf)
                .collect()
        })
        .collect();

    let b = config.replications as f64;
    let omega: Vec<f64> = (0..d.len())
        .map(|k| {
            let ss: f64 = boot.iter().map(|row| (nf.sqrt() * (row[k] - dbar[k])).powi(2)).sum();
            (ss / b).sqrt()
        })
        .collect();
    let excluded: Vec<usize> = (0..d.len())
        .filter(|&k| !(omega[k] > 1e-12 * nf.sqrt() * dbar[k].abs()) || omega[k] == 0.0)
        .collect();
    let usable: Vec<usize> = (0..d.len()).filter(|k| !excluded.contains(k)).collect();
    if usable.is_empty() {
        return Ok(SpaResult {
            t_obs: f64::NAN,
            p_value: 1.0,
            excluded,
            n,
        });
    }
    let t_obs = usable
        .iter()
        .map(|&k| nf.sqrt() * dbar[k] / omega[k])
        .fold(f64::NEG_INFINITY, f64::max);
    let t = t_obs.max(0.0);
    let loglog = (2.0 * nf.ln().ln().max(0.0) / nf).sqrt();
    let g: Vec<f64> = (0..d.len())
        .map(|k| match config.variant {
            SpaVariant::Lower => dbar[k].max(0.0),
            SpaVariant::Upper => dbar[k],
            SpaVariant::Consistent => {
                if dbar[k] >= -omega[k] * loglog {
                    dbar[k]
                } else {
                    0.0
                }
            }
        })
        .collect();
    let exceed = boot
        .iter()
        .filter(|row| {
            let t_star = usable
                .iter()
                .map(|&k| nf.sqrt() * (row[k] - g[k]) / omega[k])
                .fold(0.0, f64::max);
            t_star >= t
        })
        .count();
    Ok(SpaResult {
        t_obs,
        p_value: (1 + exceed) as f64 / (b + 1.0),
        excluded,
        n,
    })
}
