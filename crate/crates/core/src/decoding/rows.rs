use crate::analysis::entropy;
use crate::model::TraceStep;
use crate::{Error, Result};
use std::path::Path;

/// One structured trace-dump row: per-step means of the two attention
/// distributions and of the gate, plus the attention entropies.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub doc: usize,
    pub sent: usize,
    pub step: usize,
    pub alpha_a_mean: f64,
    pub alpha_b_mean: f64,
    pub z_mean: f64,
    pub alpha_a_entropy: f64,
    pub alpha_b_entropy: f64,
}

pub const TRACE_HEADER: &str =
    "doc,sent,step,alpha_a_mean,alpha_b_mean,z_mean,alpha_a_entropy,alpha_b_entropy";

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

impl TraceRow {
    pub fn from_step(doc: usize, sent: usize, step_idx: usize, step: &TraceStep) -> Self {
        TraceRow {
            doc,
            sent,
            step: step_idx,
            alpha_a_mean: step.attn_a.as_deref().map(mean).unwrap_or(f64::NAN),
            alpha_b_mean: mean(&step.attn_b),
            z_mean: step.gate.as_deref().map(mean).unwrap_or(f64::NAN),
            alpha_a_entropy: step.attn_a.as_deref().map(entropy).unwrap_or(f64::NAN),
            alpha_b_entropy: entropy(&step.attn_b),
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.doc,
            self.sent,
            self.step,
            self.alpha_a_mean,
            self.alpha_b_mean,
            self.z_mean,
            self.alpha_a_entropy,
            self.alpha_b_entropy
        )
    }

    pub fn parse(line: &str) -> Option<TraceRow> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return None;
        }
        Some(TraceRow {
            doc: f[0].parse().ok()?,
            sent: f[1].parse().ok()?,
            step: f[2].parse().ok()?,
            alpha_a_mean: f[3].parse().ok()?,
            alpha_b_mean: f[4].parse().ok()?,
            z_mean: f[5].parse().ok()?,
            alpha_a_entropy: f[6].parse().ok()?,
            alpha_b_entropy: f[7].parse().ok()?,
        })
    }
}

/// Parses a trace dump file back into rows, skipping `#` comments and the
/// column header.
pub fn load_trace_rows(path: &Path) -> Result<Vec<TraceRow>> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line == TRACE_HEADER || line.trim().is_empty() {
            continue;
        }
        rows.push(TraceRow::parse(line).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "malformed trace row".into(),
        })?);
    }
    Ok(rows)
}
