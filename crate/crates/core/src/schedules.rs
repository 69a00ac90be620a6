//! Normalized step-size schedules `h_0, ..., h_{N-1}` (actual steps are `h_k / L`).

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::oracle::check_delta;

/// The silver ratio `1 + sqrt(2)`.
pub const SILVER_RATIO: f64 = 1.0 + std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Dynamic,
    Silver,
    #[serde(rename = "fgm", alias = "fgm_step")]
    FgmStep,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 4] = [
        ScheduleKind::Constant,
        ScheduleKind::Dynamic,
        ScheduleKind::Silver,
        ScheduleKind::FgmStep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::Dynamic => "dynamic",
            ScheduleKind::Silver => "silver",
            ScheduleKind::FgmStep => "fgm",
        }
    }
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Ok(ScheduleKind::Constant),
            "dynamic" => Ok(ScheduleKind::Dynamic),
            "silver" => Ok(ScheduleKind::Silver),
            "fgm" | "fgm_step" => Ok(ScheduleKind::FgmStep),
            other => Err(invalid(format!("unknown schedule kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    pub kind: ScheduleKind,
    pub steps: Vec<f64>,
    /// `0` for the original schedule, `delta` once divided by `1 + delta`.
    pub shortening_delta: f64,
    /// Iteration counts `2^j - 1` at which the silver guarantee applies.
    pub guarantee_points: Vec<usize>,
}

impl StepSchedule {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn max_step(&self) -> f64 {
        self.steps.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_shortened(&self) -> bool {
        self.shortening_delta > 0.0
    }

    /// One step per line, shortest round-trip decimal form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for h in &self.steps {
            let _ = writeln!(out, "{h:?}");
        }
        out
    }
}

/// Parse a plain-text step list (one decimal per line, blank lines and `#`
/// comments ignored) into a constant-kind-free list of steps.
pub fn parse_steps(text: &str) -> Result<Vec<f64>> {
    let mut steps = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let h: f64 = line.parse().map_err(|_| Error::Parse {
            row: i + 1,
            message: format!("not a number: {line:?}"),
        })?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("step must be positive and finite, got {h}"),
            });
        }
        steps.push(h);
    }
    Ok(steps)
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("schedule length must be at least 1"));
    }
    Ok(())
}

pub fn constant_schedule(h: f64, n: usize) -> Result<StepSchedule> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("step must be positive, got {h}")));
    }
    check_len(n)?;
    Ok(StepSchedule {
        kind: ScheduleKind::Constant,
        steps: vec![h; n],
        shortening_delta: 0.0,
        guarantee_points: Vec::new(),
    })
}

/// `h_0 = sqrt 2`, `h_n = (-H + sqrt(H^2 + 8(H + 1))) / 2` with `H` the sum of
/// all previous steps.
pub fn dynamic_schedule(n: usize) -> Result<StepSchedule> {
    check_len(n)?;
    let mut steps = Vec::with_capacity(n);
    let mut partial_sum = 0.0;
    for k in 0..n {
        let h = if k == 0 {
            std::f64::consts::SQRT_2
        } else {
            let big_h: f64 = partial_sum;
            (-big_h + (big_h * big_h + 8.0 * (big_h + 1.0)).sqrt()) / 2.0
        };
        partial_sum += h;
        steps.push(h);
    }
    Ok(StepSchedule {
        kind: ScheduleKind::Dynamic,
        steps,
        shortening_delta: 0.0,
        guarantee_points: Vec::new(),
    })
}

/// Silver schedule: `[sqrt 2]`, then `s -> [s, 1 + rho^(k-1), s]` until the
/// length reaches `N`; the last level is truncated to `N` entries.
pub fn silver_schedule(n: usize) -> Result<StepSchedule> {
    check_len(n)?;
    let mut steps = vec![std::f64::consts::SQRT_2];
    let mut k = 1;
    while steps.len() < n {
        let middle = 1.0 + SILVER_RATIO.powi(k - 1);
        let mut next = Vec::with_capacity(2 * steps.len() + 1);
        next.extend_from_slice(&steps);
        next.push(middle);
        next.extend_from_slice(&steps);
        steps = next;
        k += 1;
    }
    steps.truncate(n);
    let guarantee_points = (1..)
        .map(|j| (1usize << j) - 1)
        .take_while(|&p| p <= n)
        .collect();
    Ok(StepSchedule {
        kind: ScheduleKind::Silver,
        steps,
        shortening_delta: 0.0,
        guarantee_points,
    })
}

/// Constant step `h` consumed by the fast gradient method.
pub fn fgm_schedule(h: f64, n: usize) -> Result<StepSchedule> {
    let mut s = constant_schedule(h, n)?;
    s.kind = ScheduleKind::FgmStep;
    Ok(s)
}

/// Divide every step by `1 + delta`.
pub fn shorten(schedule: &StepSchedule, delta: f64) -> Result<StepSchedule> {
    check_delta(delta)?;
    if schedule.is_shortened() {
        return Err(invalid("schedule is already shortened"));
    }
    Ok(StepSchedule {
        kind: schedule.kind,
        steps: schedule.steps.iter().map(|h| h / (1.0 + delta)).collect(),
        shortening_delta: delta,
        guarantee_points: schedule.guarantee_points.clone(),
    })
}

/// Build a schedule of the given kind and length. `constant_step` is used by
/// `Constant` and `FgmStep`.
pub fn build_schedule(kind: ScheduleKind, n: usize, constant_step: f64) -> Result<StepSchedule> {
    match kind {
        ScheduleKind::Constant => constant_schedule(constant_step, n),
        ScheduleKind::Dynamic => dynamic_schedule(n),
        ScheduleKind::Silver => silver_schedule(n),
        ScheduleKind::FgmStep => fgm_schedule(constant_step, n),
    }
}
