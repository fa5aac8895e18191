//! Per-round metrics: JSON lines while running, CSV at the end, and the
//! long-format table used for plotting.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub schema_version: u32,
    pub engine: String,
    pub protocol: String,
    pub seed: u64,
    pub round: usize,
    /// Mean recall k@k over the test queries; absent when not evaluated.
    pub recall_at_k: Option<f64>,
    pub insert_qps: f64,
    pub delete_qps: f64,
    pub search_qps: f64,
    pub live_nodes: usize,
    pub tombstones: usize,
    pub replaceable: usize,
    pub peak_slots: usize,
    pub elapsed_secs: f64,
}

/// Streams one JSON object per round to `out`.
pub struct JsonLines<W: Write> {
    out: W,
}

impl<W: Write> JsonLines<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn emit(&mut self, m: &RoundMetrics) -> anyhow::Result<()> {
        serde_json::to_writer(&mut self.out, m)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_csv(out: impl Write, rows: &[RoundMetrics]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(input: impl Read) -> anyhow::Result<Vec<RoundMetrics>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<RoundMetrics>, _>>()?)
}

#[derive(Debug, PartialEq, Serialize)]
pub struct PlotRow<'a> {
    pub engine: &'a str,
    pub protocol: &'a str,
    pub seed: u64,
    pub round: usize,
    pub metric: &'static str,
    pub value: f64,
}

/// Long-format rows (`engine, protocol, seed, round, metric, value`).
pub fn plot_rows(rows: &[RoundMetrics]) -> Vec<PlotRow<'_>> {
    let mut out = Vec::new();
    for r in rows {
        let mut push = |metric, value| {
            out.push(PlotRow { engine: &r.engine, protocol: &r.protocol, seed: r.seed, round: r.round, metric, value })
        };
        if let Some(recall) = r.recall_at_k {
            push("recall", recall);
        }
        push("insert_qps", r.insert_qps);
        push("delete_qps", r.delete_qps);
        push("search_qps", r.search_qps);
        push("peak_slots", r.peak_slots as f64);
        push("tombstones", r.tombstones as f64);
    }
    out
}

pub fn write_plot_csv(out: impl Write, rows: &[RoundMetrics]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in plot_rows(rows) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
