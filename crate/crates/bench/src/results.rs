use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const RESULTS_HEADER: &str =
    "method,map_type,instance_seed,episode,lifetime_rounds,decision_time_ms";

/// One evaluated episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub map_type: u8,
    pub instance_seed: u64,
    pub episode: u64,
    pub lifetime_rounds: u64,
    /// Mean wall-clock time per decision in this episode.
    pub decision_time_ms: f64,
}

/// Aggregate over the instances of one map type for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub map_type: u8,
    pub method: String,
    pub instances: usize,
    /// Mean over instances of the per-instance mean lifetime.
    pub mean_lifetime_rounds: f64,
    pub mean_lifetime_seconds: f64,
    pub mean_decision_time_ms: f64,
}

pub fn write_results<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    if rows.is_empty() {
        out.write_record(RESULTS_HEADER.split(','))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Group by (map type, method); rows ordered by map type, then method name.
pub fn summarize(rows: &[ResultRow], delta_t: f64) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(u8, &str), BTreeMap<u64, Vec<&ResultRow>>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.map_type, r.method.as_str()))
            .or_default()
            .entry(r.instance_seed)
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((map_type, method), per_instance)| {
            let lifetimes = mean(
                per_instance
                    .values()
                    .map(|eps| mean(eps.iter().map(|r| r.lifetime_rounds as f64))),
            );
            let decision = mean(
                per_instance
                    .values()
                    .map(|eps| mean(eps.iter().map(|r| r.decision_time_ms))),
            );
            SummaryRow {
                map_type,
                method: method.to_string(),
                instances: per_instance.len(),
                mean_lifetime_rounds: lifetimes,
                mean_lifetime_seconds: lifetimes * delta_t,
                mean_decision_time_ms: decision,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
