//! Metrics log (JSON lines, one object per step) and JSON report writers.
//!
//! The metrics line carries only quantities determined by (seed, config,
//! corpus), so two identical runs produce byte-identical logs; wall-clock
//! timing is printed to the console instead of the log.

use anyhow::{Context, Result};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ascnet_core::trainer::StepRecord;

#[derive(Serialize)]
struct MetricsLine {
    step: u64,
    l_a: f32,
    l_m: f32,
    l_sp: Option<f32>,
    total: f32,
    lr: f32,
    feat_std: f32,
}

pub struct MetricsWriter {
    out: BufWriter<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file =
            File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(MetricsWriter {
            out: BufWriter::new(file),
        })
    }

    /// Appends one line and flushes, so interrupted runs keep their history.
    pub fn log(&mut self, record: &StepRecord) -> Result<()> {
        let line = MetricsLine {
            step: record.step,
            l_a: record.losses.appearance,
            l_m: record.losses.speed_consistency,
            l_sp: record.losses.speed_prediction,
            total: record.losses.total,
            lr: record.lr,
            feat_std: record.feature_std,
        };
        serde_json::to_writer(&mut self.out, &line)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Writes any serializable report as pretty JSON.
pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Plain-text retrieval table for the console.
pub fn retrieval_table(ks: &[usize], accuracies: &[f32]) -> String {
    let mut header = String::from("        ");
    let mut row = String::from("top-k %  ");
    for (k, acc) in ks.iter().zip(accuracies) {
        header.push_str(&format!("{:>8}", format!("k={k}")));
        row.push_str(&format!("{:>8.1}", acc * 100.0));
    }
    format!("{header}\n{row}")
}
