use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::oracle::verify_relative_inexactness;

/// Everything recorded during one run of an inexact method.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `x_0, ..., x_N`, cut short if the run diverged.
    pub points: Vec<DVector<f64>>,
    /// `y_0, ..., y_N` for the accelerated method, empty otherwise.
    pub momentum_points: Vec<DVector<f64>>,
    /// True gradient at each `x_k`.
    pub gradients: Vec<DVector<f64>>,
    /// True gradient at each `y_k` (accelerated method only).
    pub momentum_gradients: Vec<DVector<f64>>,
    /// Directions `d_k` actually used, one per step taken.
    pub inexact_gradients: Vec<DVector<f64>>,
    /// `f(x_k)`.
    pub losses: Vec<f64>,
    /// Step multiplier `h_k` used for each step.
    pub steps: Vec<f64>,
    pub degeneracy_flags: Vec<bool>,
    pub best_index: usize,
    pub best_grad_norm_sq: f64,
    /// Storage cost of the compressed gradients, 0 when uncompressed.
    pub total_bits: u64,
    pub bits_per_gradient: u64,
    pub certified_delta: f64,
    pub divergent: bool,
    pub last_finite_index: usize,
}

impl Trajectory {
    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.inexact_gradients.len()
    }

    pub fn is_accelerated(&self) -> bool {
        !self.momentum_points.is_empty()
    }

    pub fn grad_norms_sq(&self) -> Vec<f64> {
        self.gradients.iter().map(|g| g.norm_squared()).collect()
    }

    /// The true gradient the oracle was queried with at step `k`.
    pub fn oracle_gradient(&self, k: usize) -> &DVector<f64> {
        if self.is_accelerated() {
            &self.momentum_gradients[k]
        } else {
            &self.gradients[k]
        }
    }

    /// Whether every `(d_k, g_k)` pair satisfies the certified relative bound.
    pub fn satisfies_certificate(&self) -> bool {
        (0..self.iterations()).all(|k| {
            verify_relative_inexactness(
                &self.inexact_gradients[k],
                self.oracle_gradient(k),
                self.certified_delta,
            )
            .unwrap_or(false)
        })
    }

    pub fn final_point(&self) -> &DVector<f64> {
        self.points.last().expect("trajectory holds x_0")
    }

    pub fn best_point(&self) -> &DVector<f64> {
        &self.points[self.best_index]
    }

    /// CSV with one row per iterate: `k, loss, grad_norm_sq, step_used,
    /// bits_cumulative, degenerate_flag`. `step_used` is empty on the last row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            k: usize,
            loss: f64,
            grad_norm_sq: f64,
            step_used: Option<f64>,
            bits_cumulative: u64,
            degenerate_flag: u8,
        }
        let mut w = csv::Writer::from_writer(writer);
        for (k, g) in self.gradients.iter().enumerate() {
            w.serialize(Row {
                k,
                loss: self.losses[k],
                grad_norm_sq: g.norm_squared(),
                step_used: self.steps.get(k).copied(),
                bits_cumulative: self.bits_per_gradient * k as u64,
                degenerate_flag: u8::from(self.degeneracy_flags.get(k).copied().unwrap_or(false)),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(argmin_k ||grad f(x_k)||^2, min value)` over the x-iterates; ties go to
/// the smallest `k`.
pub fn best_gradient_iterate(t: &Trajectory) -> Result<(usize, f64)> {
    argmin_first(t.gradients.iter().map(|g| g.norm_squared()))
        .ok_or_else(|| invalid("empty trajectory"))
}

pub(crate) fn argmin_first(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    values.enumerate().fold(None, |best, (k, v)| match best {
        Some((_, b)) if !(v < b) => best,
        _ if v.is_nan() => best,
        _ => Some((k, v)),
    })
}
