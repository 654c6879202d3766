use crate::error::{Error, Result};
use crate::textfmt::repr_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Dm,
    Spa,
    Pt,
}

impl TableKind {
    pub fn header(self) -> &'static str {
        match self {
            TableKind::Dm => "horizon\tuniverse\tpair\tDM\tp",
            TableKind::Spa => "horizon\tuniverse\tbase\tt_obs\tp",
            TableKind::Pt => "horizon\tuniverse\tmodel\tPT\tp",
        }
    }
}

/// One row of a test table: `label` is the pair (`model vs base`), base or model.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRow {
    pub horizon: usize,
    pub universe: usize,
    pub label: String,
    pub statistic: f64,
    pub p_value: f64,
}

pub fn render_table(kind: TableKind, rows: &[TestRow]) -> String {
    let mut out = String::from(kind.header());
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.horizon,
            r.universe,
            r.label,
            repr_f64(r.statistic),
            repr_f64(r.p_value)
        ));
    }
    out
}

pub fn parse_table(kind: TableKind, text: &str) -> Result<Vec<TestRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(kind.header()) {
        return Err(Error::Data(format!("expected header '{}'", kind.header())));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            let bad = || Error::Data(format!("table row {}: '{l}'", i + 2));
            if f.len() != 5 {
                return Err(bad());
            }
            Ok(TestRow {
                horizon: f[0].parse().map_err(|_| bad())?,
                universe: f[1].parse().map_err(|_| bad())?,
                label: f[2].to_string(),
                statistic: f[3].parse().map_err(|_| bad())?,
                p_value: f[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
