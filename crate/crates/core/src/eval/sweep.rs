use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalContext, MetricsRow};
use crate::domain::HyperParams;
use crate::error::{Error, Result};

/// Closed range of grid values `min, min + step, ..., max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for GridAxis {
    fn default() -> Self {
        GridAxis {
            min: -1.0,
            max: 1.0,
            step: 0.1,
        }
    }
}

impl GridAxis {
    pub fn single(v: f64) -> Self {
        GridAxis {
            min: v,
            max: v,
            step: 0.1,
        }
    }

    /// Grid points as integer multiples of `step`, rounded to 9 decimals so
    /// that `3 * 0.1` comes out as `0.3`.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::validation(format!(
                "grid step must be positive, got {}",
                self.step
            )));
        }
        if self.min.is_nan() || self.max.is_nan() || self.min > self.max {
            return Err(Error::validation(format!(
                "grid range [{}, {}] is not ordered",
                self.min, self.max
            )));
        }
        let lo = (self.min / self.step - 1e-9).ceil() as i64;
        let hi = (self.max / self.step + 1e-9).floor() as i64;
        let values: Vec<f64> = (lo..=hi)
            .map(|i| ((i as f64 * self.step) * 1e9).round() / 1e9)
            .collect();
        if values.is_empty() {
            return Err(Error::validation(format!(
                "grid range [{}, {}] holds no multiple of {}",
                self.min, self.max, self.step
            )));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<MetricsRow>,
}

pub const SWEEP_CSV_HEADER: [&str; 8] = ["alpha", "beta", "precision", "recall", "map", "pah", "k", "n_users"];

impl SweepReport {
    pub fn row(&self, alpha: f64, beta: f64) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.alpha == alpha && r.beta == beta)
    }

    pub fn write_csv(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.alpha.to_string(),
                r.beta.to_string(),
                r.precision_at_k.to_string(),
                r.recall_at_k.to_string(),
                r.map_at_k.to_string(),
                r.pah_at_k.to_string(),
                r.k.to_string(),
                r.n_users_evaluated.to_string(),
            ])?;
        }
        w.flush()
    }

    /// Long format `alpha,beta,metric,value`, one line per metric per cell.
    pub fn write_long_csv(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "beta", "metric", "value"])?;
        for r in &self.rows {
            for (name, v) in [
                ("precision", r.precision_at_k),
                ("recall", r.recall_at_k),
                ("map", r.map_at_k),
                ("pah", r.pah_at_k),
            ] {
                w.write_record([r.alpha.to_string(), r.beta.to_string(), name.to_owned(), v.to_string()])?;
            }
        }
        w.flush()
    }

    /// JSON document `{"metadata": ..., "rows": [...]}`.
    pub fn write_json(&self, out: impl Write, metadata: &impl Serialize) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Doc<'a, M: Serialize> {
            metadata: &'a M,
            rows: &'a [MetricsRow],
        }
        let mut out = out;
        serde_json::to_writer_pretty(
            &mut out,
            &Doc {
                metadata,
                rows: &self.rows,
            },
        )?;
        out.write_all(b"\n")
    }
}

/// Evaluates every `(alpha, beta)` cell, alpha-major. `workers` sizes a
/// dedicated thread pool; `None` uses the global one. Rows come back in grid
/// order whatever the pool size.
pub fn grid_sweep(
    ctx: &EvalContext<'_>,
    alphas: &GridAxis,
    betas: &GridAxis,
    workers: Option<usize>,
) -> Result<SweepReport> {
    let alpha_values = alphas.values()?;
    let beta_values = betas.values()?;
    let cells = alpha_values
        .iter()
        .flat_map(|&a| beta_values.iter().map(move |&b| HyperParams::new(a, b)))
        .collect::<Result<Vec<_>>>()?;

    let run = || cells.par_iter().map(|&h| ctx.evaluate(h)).collect::<Result<Vec<_>>>();
    let rows = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Evaluation(format!("cannot start worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok(SweepReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_axis_has_21_clean_points() {
        let v = GridAxis::default().values().unwrap();
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], -1.0);
        assert_eq!(v[13], 0.3);
        assert_eq!(v[10], 0.0);
        assert_eq!(v[20], 1.0);
    }

    #[test]
    fn single_point_axis() {
        assert_eq!(GridAxis::single(0.0).values().unwrap(), vec![0.0]);
        assert_eq!(GridAxis::single(-0.5).values().unwrap(), vec![-0.5]);
    }

    #[test]
    fn bad_axes() {
        assert!(GridAxis {
            min: 0.5,
            max: 0.1,
            step: 0.1
        }
        .values()
        .is_err());
        assert!(GridAxis {
            min: 0.0,
            max: 1.0,
            step: 0.0
        }
        .values()
        .is_err());
        assert!(GridAxis {
            min: 0.01,
            max: 0.02,
            step: 0.1
        }
        .values()
        .is_err());
    }
}
