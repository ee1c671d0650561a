//! Per-iteration run records and their CSV form.
//!
//! CSV schema: header `t,f,grad_norm,l_alpha,gamma,bits`, one row per
//! iteration starting at t = 0, floats printed with 17 significant digits so
//! files are byte-reproducible; `l_alpha` is left empty on domains where the
//! measure is not defined.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    /// Iterate, recorded only when the run asks for it (large-N runs elide it).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    pub f: f64,
    pub grad_norm: f64,
    pub l_alpha: Option<f64>,
    pub gamma: f64,
    pub bits_cumulative: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    RuleSatisfied,
    MaxIterReached,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    /// First t at which the stopping rule held (checked before stepping, so
    /// 0 is possible); None when the rule never fired.
    pub hit_iteration: Option<usize>,
    pub stop_reason: StopReason,
    /// Terminal iterate, always kept even when per-row x is elided.
    pub final_x: Vec<f64>,
    pub bits_per_iteration: u32,
}

/// 17 significant digits, deterministic.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl RunTrace {
    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("a trace always has the t=0 row")
    }

    pub fn final_f(&self) -> f64 {
        self.last().f
    }

    pub fn min_grad_norm(&self) -> f64 {
        self.rows.iter().map(|r| r.grad_norm).fold(f64::INFINITY, f64::min)
    }

    /// Total bits spent by the end of the run.
    pub fn bits_total(&self) -> u64 {
        self.last().bits_cumulative
    }

    /// Error floor: mean of L_α (or of ‖∇f‖ where L_α is not recorded) over
    /// the final 10% of iterations, rounded up to at least one row.
    pub fn floor_metric(&self) -> f64 {
        let n = self.rows.len();
        let tail = (n as f64 * 0.1).ceil() as usize;
        let tail = tail.clamp(1, n);
        let slice = &self.rows[n - tail..];
        let sum: f64 = slice
            .iter()
            .map(|r| r.l_alpha.unwrap_or(r.grad_norm))
            .sum();
        sum / tail as f64
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,f,grad_norm,l_alpha,gamma,bits")?;
        for r in &self.rows {
            let l_alpha = r.l_alpha.map(fmt17).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.t,
                fmt17(r.f),
                fmt17(r.grad_norm),
                l_alpha,
                fmt17(r.gamma),
                r.bits_cumulative
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}
