//! Training reports and their on-disk forms.
//!
//! The history CSV starts with one `# {json}` line holding the run summary,
//! followed by `iteration,L_d,L_b,L_total,lambda,grad_norm` rows. Quantities
//! absent for a method (the boundary terms of the trial method) are written
//! as empty fields. Histograms are two-column `center,count` files.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{LossBreakdown, StopReason};
use crate::error::{Error, Result};
use crate::network::MlpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Soft,
    Trial,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Soft => "soft",
            Method::Trial => "trial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub loss: LossBreakdown,
    /// Max-norm of the gradient of the total loss.
    pub grad_norm: f64,
    /// Multiplier estimate computed before this iteration, if any.
    pub lambda_hat: Option<f64>,
}

/// Gradient spread at the final parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientStats {
    pub std_d_all: f64,
    pub std_d_last_hidden: f64,
    pub std_b_all: Option<f64>,
    pub std_b_last_hidden: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Histogram {
    /// Uniform bins over `[min, max]`; the last bin is closed.
    pub fn new(values: &[f64], bins: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("histogram needs values"));
        }
        if bins == 0 {
            return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (max - min) / bins as f64;
        let edges = (0..=bins).map(|i| min + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let i = if width > 0.0 {
                (((v - min) / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[i] += 1;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        Ok(Self {
            edges,
            counts,
            mean,
            std: super::std_dev(values),
            min,
            max,
        })
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "center,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{}", 0.5 * (self.edges[i] + self.edges[i + 1]), c)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub method: Method,
    pub history: Vec<IterationRecord>,
    pub initial: LossBreakdown,
    pub final_loss: LossBreakdown,
    pub stop: StopReason,
    pub iterations: usize,
    pub evaluations: usize,
    pub wall_seconds: f64,
    pub params: MlpParams,
    pub gradient_stats: Option<GradientStats>,
    /// Named histograms of final last-hidden-layer weight gradients.
    pub histograms: Vec<(String, Histogram)>,
    pub collocation_points: usize,
}

/// Everything in a report except the per-iteration rows and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub method: Method,
    pub stop: StopReason,
    pub iterations: usize,
    pub evaluations: usize,
    pub wall_seconds: f64,
    pub collocation_points: usize,
    pub initial: LossBreakdown,
    #[serde(rename = "final")]
    pub final_loss: LossBreakdown,
    pub gradient_stats: Option<GradientStats>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrainReport {
    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            method: self.method,
            stop: self.stop,
            iterations: self.iterations,
            evaluations: self.evaluations,
            wall_seconds: self.wall_seconds,
            collocation_points: self.collocation_points,
            initial: self.initial,
            final_loss: self.final_loss,
            gradient_stats: self.gradient_stats,
        }
    }

    pub fn lambda_hat_history(&self) -> Vec<f64> {
        self.history.iter().filter_map(|r| r.lambda_hat).collect()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let json = serde_json::to_string(&self.summary()).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "# {json}")?;
        writeln!(w, "iteration,L_d,L_b,L_total,lambda,grad_norm")?;
        let mut line = String::new();
        for r in &self.history {
            line.clear();
            let _ = write!(
                line,
                "{},{},{},{},{},{}",
                r.iteration,
                r.loss.l_d,
                opt(r.loss.l_b),
                r.loss.l_total,
                opt(r.loss.lambda),
                r.grad_norm
            );
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Reads back the summary line and rows of a history CSV.
pub fn read_history_csv<R: BufRead>(r: R) -> Result<(ReportSummary, Vec<IterationRecord>)> {
    let mut lines = r.lines();
    let head = lines
        .next()
        .ok_or_else(|| Error::Format("empty report".into()))??;
    let json = head
        .strip_prefix("# ")
        .ok_or_else(|| Error::Format("report must start with a '# {json}' summary".into()))?;
    let summary: ReportSummary = serde_json::from_str(json).map_err(|e| Error::Format(e.to_string()))?;
    let cols = lines.next().ok_or_else(|| Error::Format("missing column header".into()))??;
    if cols != "iteration,L_d,L_b,L_total,lambda,grad_norm" {
        return Err(Error::Format(format!("unexpected columns: {cols}")));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Format(format!("bad number {s:?}"))) };
    let maybe = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::Format(format!("expected 6 fields, got {}", f.len())));
        }
        rows.push(IterationRecord {
            iteration: f[0].parse().map_err(|_| Error::Format(format!("bad iteration {:?}", f[0])))?,
            loss: LossBreakdown {
                l_d: num(f[1])?,
                l_b: maybe(f[2])?,
                l_total: num(f[3])?,
                lambda: maybe(f[4])?,
            },
            grad_norm: num(f[5])?,
            lambda_hat: None,
        });
    }
    Ok((summary, rows))
}
