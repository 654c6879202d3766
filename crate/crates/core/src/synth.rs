//! Synthetic daily panels with a planted linear signal.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, Months, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::config::parse_key_values;
use crate::error::{Error, Result};
use crate::features::indicators;
use crate::textfmt::repr_f64;

/// Raw features the generator can load a coefficient on.
pub const SIGNAL_FEATURES: &[&str] = &[
    "mom_2", "mom_5", "mom_10", "mom_20", "rev_5", "vol_5", "vol_20", "drawdown_20",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub tickers: usize,
    pub months: usize,
    pub start: NaiveDate,
    pub seed: u64,
    /// Coefficients on raw (unstandardized) features.
    pub beta: BTreeMap<String, f64>,
    /// Daily innovation standard deviation.
    pub noise: f64,
    /// Student-t (5 df) innovations scaled to unit variance.
    pub heavy_tail: bool,
    pub start_price: f64,
    /// Median of per-ticker daily volume levels.
    pub volume_level: f64,
    /// Dispersion of daily log volume around a ticker's level.
    pub volume_sigma: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            tickers: 40,
            months: 50,
            start: NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date"),
            seed: 0,
            beta: BTreeMap::new(),
            noise: 0.01,
            heavy_tail: false,
            start_price: 100.0,
            volume_level: 1e6,
            volume_sigma: 0.3,
        }
    }
}

impl SynthSpec {
    /// Reads `synth.*` keys; `synth.beta.<feature> = value` plants a coefficient.
    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let mut spec = SynthSpec::default();
        let mut errs = Vec::new();
        for (k, v) in &map {
            let bad = |errs: &mut Vec<String>| errs.push(format!("{k}: cannot parse '{v}'"));
            match k.as_str() {
                "synth.tickers" => v.parse().map(|x| spec.tickers = x).unwrap_or_else(|_| bad(&mut errs)),
                "synth.months" => v.parse().map(|x| spec.months = x).unwrap_or_else(|_| bad(&mut errs)),
                "synth.start" => v.parse().map(|x| spec.start = x).unwrap_or_else(|_| bad(&mut errs)),
                "synth.seed" => v.parse().map(|x| spec.seed = x).unwrap_or_else(|_| bad(&mut errs)),
                "synth.noise" => v.parse().map(|x| spec.noise = x).unwrap_or_else(|_| bad(&mut errs)),
                "synth.heavy_tail" => v.parse().map(|x| spec.heavy_tail = x).unwrap_or_else(|_| bad(&mut errs)),
                "synth.start_price" => v.parse().map(|x| spec.start_price = x).unwrap_or_else(|_| bad(&mut errs)),
                "synth.volume_level" => v.parse().map(|x| spec.volume_level = x).unwrap_or_else(|_| bad(&mut errs)),
                "synth.volume_sigma" => v.parse().map(|x| spec.volume_sigma = x).unwrap_or_else(|_| bad(&mut errs)),
                other => match other.strip_prefix("synth.beta.") {
                    Some(f) => match v.parse::<f64>() {
                        Ok(b) => {
                            spec.beta.insert(f.to_string(), b);
                        }
                        Err(_) => bad(&mut errs),
                    },
                    None => errs.push(format!("unknown key '{other}'")),
                },
            }
        }
        if let Err(Error::ConfigList(v)) = spec.validate() {
            errs.extend(v);
        }
        if errs.is_empty() {
            Ok(spec)
        } else {
            Err(Error::ConfigList(errs))
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.tickers == 0 || self.months == 0 {
            errs.push("synth.tickers and synth.months must be >= 1".to_string());
        }
        if !(self.noise >= 0.0) || !(self.start_price > 0.0) || !(self.volume_level > 0.0) || !(self.volume_sigma >= 0.0) {
            errs.push("synth noise, start_price, volume_level and volume_sigma must be non-negative (prices and volumes positive)".into());
        }
        for f in self.beta.keys() {
            if !SIGNAL_FEATURES.contains(&f.as_str()) {
                errs.push(format!("synth.beta.{f}: unsupported feature (use one of {})", SIGNAL_FEATURES.join(", ")));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigList(errs))
        }
    }
}

/// Monday–Friday dates from `start` over `months` calendar months.
pub fn business_days(start: NaiveDate, months: usize) -> Vec<NaiveDate> {
    let first = start.with_day(1).expect("day 1");
    let end = first + Months::new(months as u32);
    first
        .iter_days()
        .take_while(|d| *d < end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// Value of one supported raw feature at the end of `closes`.
fn feature_at(name: &str, closes: &[f64]) -> Option<f64> {
    let last = closes.len().checked_sub(1)?;
    let tail = |n: usize| &closes[closes.len().saturating_sub(n + 1)..];
    let lag = |n: usize| -> Option<f64> { (last >= n).then(|| closes[last] / closes[last - n] - 1.0) };
    match name {
        "mom_2" => lag(2),
        "mom_5" => lag(5),
        "mom_10" => lag(10),
        "mom_20" => lag(20),
        "rev_5" => lag(5).map(|m| -m),
        "vol_5" => indicators::volatility(tail(5), 5).last().copied().flatten(),
        "vol_20" => indicators::volatility(tail(20), 20).last().copied().flatten(),
        "drawdown_20" => indicators::drawdown(tail(20), 20).last().copied().flatten(),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPanel {
    pub calendar: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// `[ticker][date]`
    pub closes: Vec<Vec<f64>>,
    pub volumes: Vec<Vec<f64>>,
}

impl SynthPanel {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ticker,date,close,volume\n");
        for (t, name) in self.tickers.iter().enumerate() {
            for (d, date) in self.calendar.iter().enumerate() {
                writeln!(out, "{name},{date},{},{}", repr_f64(self.closes[t][d]), self.volumes[t][d]).unwrap();
            }
        }
        out
    }

    /// One-day simple returns pooled over tickers.
    pub fn daily_returns(&self) -> Vec<f64> {
        self.closes
            .iter()
            .flat_map(|c| c.windows(2).map(|w| w[1] / w[0] - 1.0).collect::<Vec<_>>())
            .collect()
    }
}

/// `r(t -> t+1) = sum_j beta_j * feature_j(t) + eps`, clamped to (-0.5, 0.5).
pub fn generate(spec: &SynthSpec) -> Result<SynthPanel> {
    spec.validate()?;
    let calendar = business_days(spec.start, spec.months);
    let width = (spec.tickers.max(1) as f64).log10().floor() as usize + 1;
    let tickers: Vec<String> = (0..spec.tickers).map(|i| format!("S{:0w$}", i, w = width.max(3))).collect();
    let t5 = StudentT::new(5.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let t_scale = (3.0f64 / 5.0).sqrt();
    let mut closes = Vec::with_capacity(spec.tickers);
    let mut volumes = Vec::with_capacity(spec.tickers);
    for t in 0..spec.tickers {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(t as u64);
        let level = spec.volume_level * (rng.gen::<f64>() * 4.0 - 2.0).exp();
        let mut c = Vec::with_capacity(calendar.len());
        let mut v = Vec::with_capacity(calendar.len());
        c.push(spec.start_price);
        for d in 0..calendar.len() {
            let z: f64 = StandardNormal.sample(&mut rng);
            v.push((level * (spec.volume_sigma * z).exp()).round().max(1.0));
            if d + 1 == calendar.len() {
                break;
            }
            let signal: f64 = spec
                .beta
                .iter()
                .map(|(f, b)| b * feature_at(f, &c).unwrap_or(0.0))
                .sum();
            let eps = if spec.heavy_tail {
                t5.sample(&mut rng) * t_scale
            } else {
                StandardNormal.sample(&mut rng)
            };
            let r = (signal + spec.noise * eps).clamp(-0.5, 0.5);
            let last = *c.last().expect("seeded");
            c.push(last * (1.0 + r));
        }
        closes.push(c);
        volumes.push(v);
    }
    Ok(SynthPanel {
        calendar,
        tickers,
        closes,
        volumes,
    })
}

/// Writes the panel CSV and a `<out>.beta.tsv` sidecar with the planted coefficients.
pub fn write_synth(spec: &SynthSpec, out: &Path) -> Result<SynthPanel> {
    let panel = generate(spec)?;
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(out, panel.to_csv()).map_err(|e| Error::io(out, e))?;
    let mut beta = String::from("feature\tbeta\n");
    for f in SIGNAL_FEATURES {
        writeln!(beta, "{f}\t{}", repr_f64(spec.beta.get(*f).copied().unwrap_or(0.0))).unwrap();
    }
    let side = beta_sidecar_path(out);
    std::fs::write(&side, beta).map_err(|e| Error::io(&side, e))?;
    Ok(panel)
}

pub fn beta_sidecar_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".beta.tsv");
    s.into()
}
