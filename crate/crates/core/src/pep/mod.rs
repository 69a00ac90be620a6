//! Worst-case rates of inexact first-order methods through performance
//! estimation: the method's iterates and the interpolation conditions of
//! 1-smooth convex functions are written as a semidefinite program over the
//! Gram matrix of
//! `x_0 - x_*`, the gradients at the evaluation points, and the directions
//! `d_k`.

mod solve;
mod witness;

pub use solve::{rate_sweep, solve_pep, SolveReport, SweepCell, SweepRow, DEFAULT_PEP_TOL};
pub use witness::{reconstruct_witness, Witness};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::DVector;
use relgrad_sdp::{sdpa, BlockKind, SdpaProblem};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::oracle::check_delta;
use crate::solvers::{momentum_coefficient, Method};

/// Which iterates enter the `min_k ||g_k||^2` of the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateCriterion {
    /// `k = 0, ..., N`.
    #[default]
    MinAll,
    /// `k = 1, ..., N`.
    ExcludeStart,
    /// `k = N` only.
    LastIterate,
}

impl RateCriterion {
    fn iterates(self, n: usize) -> std::ops::RangeInclusive<usize> {
        match self {
            RateCriterion::MinAll => 0..=n,
            RateCriterion::ExcludeStart => 1..=n,
            RateCriterion::LastIterate => n..=n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PepOptions {
    pub criterion: RateCriterion,
    /// Smoothness constant of the function class; steps are `h_k / L`.
    pub smoothness: f64,
}

impl Default for PepOptions {
    fn default() -> Self {
        Self {
            criterion: RateCriterion::MinAll,
            smoothness: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Interpolation { i: usize, j: usize },
    Inexactness { step: usize },
    Epigraph { iterate: usize },
    Normalization,
}

/// `sum_{p<=q} gram[(p,q)] G_pq + sum_i values[i] f_i + epigraph t >= lower_bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub kind: ConstraintKind,
    pub gram: Vec<(usize, usize, f64)>,
    pub values: Vec<(usize, f64)>,
    pub epigraph: f64,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConstraintCounts {
    pub interpolation: usize,
    pub inexactness: usize,
    pub epigraph: usize,
    pub normalization: usize,
}

impl ConstraintCounts {
    pub fn total(&self) -> usize {
        self.interpolation + self.inexactness + self.epigraph + self.normalization
    }
}

/// One evaluation point: its coordinates in the Gram basis and the indices of
/// its gradient column and function value.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub coords: DVector<f64>,
    pub gradient_column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PepInstance {
    pub method: Method,
    pub delta: f64,
    pub n: usize,
    pub options: PepOptions,
    /// Basis: `x_0 - x_*`, one gradient per evaluation point, `d_0..d_{N-1}`
    /// (the last group only when `delta > 0`).
    pub gram_dimension: usize,
    /// `f` at each evaluation point, `f_* = 0`.
    pub value_count: usize,
    pub points: Vec<EvalPoint>,
    /// Evaluation point index of `x_k` and of `y_k` (accelerated method).
    pub x_index: Vec<usize>,
    pub y_index: Vec<usize>,
    /// Gram column of each `d_k`; at `delta = 0` this is the gradient column
    /// of the point queried at step `k`.
    pub direction_columns: Vec<usize>,
    pub constraints: Vec<LinearConstraint>,
    pub counts: ConstraintCounts,
    pub sdpa: SdpaProblem,
}

impl PepInstance {
    pub fn gram_variable_count(&self) -> usize {
        self.gram_dimension * (self.gram_dimension + 1) / 2
    }

    /// SDPA variable index (0-based) of `G_pq`.
    pub fn gram_variable(&self, p: usize, q: usize) -> usize {
        gram_var(self.gram_dimension, p, q)
    }

    pub fn value_variable(&self, i: usize) -> usize {
        self.gram_variable_count() + i
    }

    pub fn epigraph_variable(&self) -> usize {
        self.gram_variable_count() + self.value_count
    }

    /// Column of `d_k` in the Gram basis.
    pub fn direction_column(&self, k: usize) -> usize {
        self.direction_columns[k]
    }

    pub fn export_sdpa(&self, path: impl AsRef<Path>) -> Result<()> {
        sdpa::write_file(&self.sdpa, path)?;
        Ok(())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Gradient(s) => {
                write!(f, "{}", s.kind)?;
                if s.is_shortened() {
                    write!(f, " shortened({})", s.shortening_delta)?;
                }
                Ok(())
            }
            Method::Fgm {
                h,
                momentum_index_offset,
            } => write!(f, "fgm h={h} offset={momentum_index_offset}"),
        }
    }
}

/// Row-major packing of the upper triangle: row `p` starts at `p n - p (p - 1) / 2`.
fn gram_var(n: usize, p: usize, q: usize) -> usize {
    let (p, q) = if p <= q { (p, q) } else { (q, p) };
    p * n - p * p.saturating_sub(1) / 2 + (q - p)
}

#[derive(Default)]
struct Row {
    gram: BTreeMap<(usize, usize), f64>,
    values: BTreeMap<usize, f64>,
    epigraph: f64,
}

impl Row {
    /// Add `scale * a' G b`.
    fn quad(&mut self, a: &DVector<f64>, b: &DVector<f64>, scale: f64) {
        let n = a.len();
        for p in 0..n {
            if a[p] == 0.0 {
                continue;
            }
            for q in 0..n {
                if b[q] == 0.0 {
                    continue;
                }
                let key = if p <= q { (p, q) } else { (q, p) };
                *self.gram.entry(key).or_insert(0.0) += scale * a[p] * b[q];
            }
        }
    }

    fn value(&mut self, i: usize, c: f64) {
        *self.values.entry(i).or_insert(0.0) += c;
    }

    fn finish(self, kind: ConstraintKind, lower_bound: f64) -> LinearConstraint {
        LinearConstraint {
            kind,
            gram: self
                .gram
                .into_iter()
                .filter(|&(_, v)| v != 0.0)
                .map(|((p, q), v)| (p, q, v))
                .collect(),
            values: self.values.into_iter().filter(|&(_, v)| v != 0.0).collect(),
            epigraph: self.epigraph,
            lower_bound,
        }
    }
}

/// Coefficient vectors of the iterates `x_k` and query points `y_k`.
type SymbolicIterates = (Vec<DVector<f64>>, Vec<DVector<f64>>);

/// Iterates as combinations of `[x_0, d_0, ..., d_{N-1}]`.
fn symbolic_iterates(method: &Method, n: usize, l: f64) -> Result<SymbolicIterates> {
    let m = 1 + n;
    let unit = |i: usize| DVector::from_fn(m, |r, _| if r == i { 1.0 } else { 0.0 });
    let mut xs = vec![unit(0)];
    let mut ys = Vec::new();
    match method {
        Method::Gradient(schedule) => {
            if schedule.len() < n {
                return Err(invalid(format!(
                    "schedule has {} steps, {n} requested",
                    schedule.len()
                )));
            }
            for k in 0..n {
                let next = &xs[k] - unit(1 + k) * (schedule.steps[k] / l);
                xs.push(next);
            }
        }
        &Method::Fgm {
            h,
            momentum_index_offset,
        } => {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid(format!("step must be positive, got {h}")));
            }
            if n > 0 {
                ys.push(unit(0));
            }
            for k in 0..n {
                let next = &ys[k] - unit(1 + k) * (h / l);
                if k + 1 < n {
                    let beta = momentum_coefficient(k, momentum_index_offset);
                    ys.push(&next + (&next - &xs[k]) * beta);
                }
                xs.push(next);
            }
        }
    }
    Ok((xs, ys))
}

fn same_point(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    let scale = a.amax().max(b.amax()).max(1.0);
    (a - b).amax() <= 1e-14 * scale
}

/// Assemble the performance estimation SDP of `n` steps of `method` under
/// relative inexactness `delta`.
pub fn build_pep(
    method: &Method,
    delta: f64,
    n: usize,
    options: PepOptions,
) -> Result<PepInstance> {
    check_delta(delta)?;
    let l = options.smoothness;
    if !(l > 0.0 && l.is_finite()) {
        return Err(invalid(format!(
            "smoothness constant must be positive, got {l}"
        )));
    }
    if options.criterion == RateCriterion::ExcludeStart && n == 0 {
        return Err(invalid("criterion excluding x_0 needs at least one step"));
    }
    let (xs, ys) = symbolic_iterates(method, n, l)?;

    // Evaluation points, merging iterates that coincide symbolically.
    let mut coords: Vec<DVector<f64>> = Vec::new();
    let mut index_of = |c: &DVector<f64>| -> usize {
        if let Some(i) = coords.iter().position(|p| same_point(p, c)) {
            return i;
        }
        coords.push(c.clone());
        coords.len() - 1
    };
    let x_index: Vec<usize> = xs.iter().map(&mut index_of).collect();
    let y_index: Vec<usize> = ys.iter().map(&mut index_of).collect();
    let num_points = coords.len();
    let queried: Vec<usize> = if matches!(method, Method::Fgm { .. }) {
        y_index.clone()
    } else {
        x_index[..n].to_vec()
    };
    // Without inexactness d_k is the gradient at its query point. Sharing the
    // column keeps the program strictly feasible.
    let exact = delta == 0.0;
    let direction_columns: Vec<usize> = (0..n)
        .map(|k| {
            if exact {
                1 + queried[k]
            } else {
                1 + num_points + k
            }
        })
        .collect();
    let dim = if exact {
        1 + num_points
    } else {
        1 + num_points + n
    };

    // Lift from [x_0, d_0..] to the Gram basis.
    let lift = |c: &DVector<f64>| {
        let mut v = DVector::zeros(dim);
        v[0] = c[0];
        for (k, &col) in direction_columns.iter().enumerate() {
            v[col] += c[1 + k];
        }
        v
    };
    let basis = |i: usize| DVector::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 });
    let points: Vec<EvalPoint> = coords
        .iter()
        .enumerate()
        .map(|(i, c)| EvalPoint {
            coords: lift(c),
            gradient_column: 1 + i,
        })
        .collect();

    let mut constraints = Vec::new();
    let mut counts = ConstraintCounts::default();

    // Interpolation over the evaluation points and the minimizer (index
    // `num_points`, at the origin with zero gradient and value).
    let zero = DVector::zeros(dim);
    let pt = |i: usize| -> (DVector<f64>, DVector<f64>) {
        if i == num_points {
            (zero.clone(), zero.clone())
        } else {
            (points[i].coords.clone(), basis(points[i].gradient_column))
        }
    };
    for i in 0..=num_points {
        for j in 0..=num_points {
            if i == j {
                continue;
            }
            let (xi, gi) = pt(i);
            let (xj, gj) = pt(j);
            // f_i - f_j - <g_j, x_i - x_j> - |g_i - g_j|^2 / 2L >= 0
            let mut row = Row::default();
            if i < num_points {
                row.value(i, 1.0);
            }
            if j < num_points {
                row.value(j, -1.0);
            }
            row.quad(&gj, &(&xi - &xj), -1.0);
            let dg = &gi - &gj;
            row.quad(&dg, &dg, -0.5 / l);
            constraints.push(row.finish(ConstraintKind::Interpolation { i, j }, 0.0));
            counts.interpolation += 1;
        }
    }

    // delta^2 |g|^2 - |d - g|^2 >= 0 at each query point.
    for k in (0..n).filter(|_| !exact) {
        let g = basis(points[queried[k]].gradient_column);
        let d = basis(direction_columns[k]);
        let mut row = Row::default();
        row.quad(&g, &g, delta * delta);
        let e = &d - &g;
        row.quad(&e, &e, -1.0);
        constraints.push(row.finish(ConstraintKind::Inexactness { step: k }, 0.0));
        counts.inexactness += 1;
    }

    // |g_k|^2 / L - t >= 0
    for k in options.criterion.iterates(n) {
        let g = basis(points[x_index[k]].gradient_column);
        let mut row = Row::default();
        row.quad(&g, &g, 1.0 / l);
        row.epigraph = -1.0;
        constraints.push(row.finish(ConstraintKind::Epigraph { iterate: k }, 0.0));
        counts.epigraph += 1;
    }

    // -f_0 >= -1
    let mut row = Row::default();
    row.value(x_index[0], -1.0);
    constraints.push(row.finish(ConstraintKind::Normalization, -1.0));
    counts.normalization += 1;

    let sdpa = to_sdpa(dim, num_points, &constraints, method, delta, n);
    Ok(PepInstance {
        method: method.clone(),
        delta,
        n,
        options,
        gram_dimension: dim,
        value_count: num_points,
        points,
        x_index,
        y_index,
        direction_columns,
        constraints,
        counts,
        sdpa,
    })
}

fn to_sdpa(
    dim: usize,
    value_count: usize,
    constraints: &[LinearConstraint],
    method: &Method,
    delta: f64,
    n: usize,
) -> SdpaProblem {
    let gram_vars = dim * (dim + 1) / 2;
    let t = gram_vars + value_count;
    let mut p = SdpaProblem::new(
        t + 1,
        vec![BlockKind::Psd(dim), BlockKind::Diagonal(constraints.len())],
    );
    p.comment = Some(format!(
        "performance estimation: {method}, N {n}, delta {delta}"
    ));
    p.objective[t] = -1.0;
    for a in 0..dim {
        for b in a..dim {
            p.push(gram_var(dim, a, b) + 1, 0, a, b, 1.0);
        }
    }
    for (r, c) in constraints.iter().enumerate() {
        for &(a, b, v) in &c.gram {
            p.push(gram_var(dim, a, b) + 1, 1, r, r, v);
        }
        for &(i, v) in &c.values {
            p.push(gram_vars + i + 1, 1, r, r, v);
        }
        p.push(t + 1, 1, r, r, c.epigraph);
        p.push(0, 1, r, r, c.lower_bound);
    }
    p.canonicalize();
    p
}
