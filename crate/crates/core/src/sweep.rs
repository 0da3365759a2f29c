//! Linear versus refined bound as a function of `F`, for plotting.

use std::fmt::Write as _;

use crate::bounds::{linear_bound, refined_bound};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const CSV_HEADER: &str = "m,F,linear,refined,dominance";

/// Smallest `m` for which dominance of the refined bound is claimed.
pub const DOMINANCE_MIN_M: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub m_values: Vec<usize>,
    pub f_max: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one m value is required".into(),
            ));
        }
        if let Some(&m) = self.m_values.iter().find(|&&m| m < 2) {
            return Err(Error::InvalidParameter(format!(
                "m must be at least 2, got {m}"
            )));
        }
        if !(self.f_max > 0.0 && self.f_max <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "F max must lie in (0, 1], got {}",
                self.f_max
            )));
        }
        if self.steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "steps must be at least 2, got {}",
                self.steps
            )));
        }
        Ok(())
    }

    /// `F_max·k/steps` for `k = 1..=steps`.
    pub fn grid(&self) -> Vec<f64> {
        (1..=self.steps)
            .map(|k| self.f_max * k as f64 / self.steps as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub f: f64,
    pub linear: f64,
    pub refined: f64,
    /// `refined > linear`; `None` below [`DOMINANCE_MIN_M`], where nothing
    /// is claimed.
    pub dominance: Option<bool>,
}

/// Rows ordered by `m` (in the order given), then by ascending `F`.
pub fn sweep(spec: &SweepSpec, exec: Exec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let grid = spec.grid();
    let n = grid.len();
    Ok(exec.map_indices(spec.m_values.len() * n, |i| {
        let m = spec.m_values[i / n];
        let f = grid[i % n];
        let linear = linear_bound(m, f);
        let refined = refined_bound(m, f);
        SweepRow {
            m,
            f,
            linear,
            refined,
            dominance: (m >= DOMINANCE_MIN_M).then_some(refined > linear),
        }
    }))
}

/// CSV text with [`CSV_HEADER`]; floats in shortest round-trip form.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let dom = match r.dominance {
            Some(true) => "true",
            Some(false) => "false",
            None => "na",
        };
        writeln!(out, "{},{},{},{},{}", r.m, r.f, r.linear, r.refined, dom)
            .expect("write to string");
    }
    out
}
