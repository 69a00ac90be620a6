use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use relgrad_sdp::{ConicSolver, SolverStatus};
use serde::Serialize;

use super::{build_pep, PepInstance, PepOptions, RateCriterion};
use crate::error::{invalid, Result};
use crate::solvers::MethodSpec;

pub const DEFAULT_PEP_TOL: f64 = 1e-8;
/// Slack allowed when checking a returned solution against the instance.
const FEASIBILITY_TOL: f64 = 1e-6;
const TAU_ZERO: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub tau: f64,
    pub solver_status: SolverStatus,
    pub duality_gap: f64,
    pub iterations: usize,
    pub gram: DMatrix<f64>,
    /// `f` at the evaluation points.
    pub values: Vec<f64>,
    pub min_gram_eigenvalue: f64,
    /// Largest violation of any linear constraint (0 if all hold).
    pub max_violation: f64,
}

impl SolveReport {
    pub fn has_value(&self) -> bool {
        self.solver_status.has_value()
    }
}

/// Evaluate every constraint of `inst` at the variable vector `x`; returns
/// the residuals `lhs - lower_bound`.
pub(crate) fn residuals(inst: &PepInstance, x: &[f64]) -> Vec<f64> {
    let t = x[inst.epigraph_variable()];
    inst.constraints
        .iter()
        .map(|c| {
            let gram: f64 = c
                .gram
                .iter()
                .map(|&(p, q, v)| v * x[inst.gram_variable(p, q)])
                .sum();
            let values: f64 = c
                .values
                .iter()
                .map(|&(i, v)| v * x[inst.value_variable(i)])
                .sum();
            gram + values + c.epigraph * t - c.lower_bound
        })
        .collect()
}

/// Solve `inst` and check the answer: the Gram matrix must be PSD and every
/// constraint satisfied to `1e-6`, and under the all-iterates criterion the
/// rate cannot exceed the zero-step value 2. A solution failing these checks
/// is reported as a numerical failure; a gap above `tol` downgrades
/// `optimal` to `near_optimal`.
pub fn solve_pep(inst: &PepInstance, solver: &dyn ConicSolver, tol: f64) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let sol = solver.solve(&inst.sdpa)?;
    let n = inst.gram_dimension;
    let x = &sol.x;
    let gram = DMatrix::from_fn(n, n, |p, q| x[inst.gram_variable(p, q)]);
    let values: Vec<f64> = (0..inst.value_count)
        .map(|i| x[inst.value_variable(i)])
        .collect();
    let tau = x[inst.epigraph_variable()];
    let min_gram_eigenvalue = SymmetricEigen::new(gram.clone()).eigenvalues.min();
    let max_violation = residuals(inst, x)
        .into_iter()
        .fold(0.0f64, |m, r| m.max(-r));

    let mut status = sol.status;
    let gap = sol.duality_gap();
    if status.has_value() {
        let scale = gram.amax().max(1.0);
        let feasible =
            min_gram_eigenvalue >= -FEASIBILITY_TOL * scale && max_violation <= FEASIBILITY_TOL;
        let bounded = inst.options.criterion != RateCriterion::MinAll
            || tau <= TAU_ZERO * (1.0 + FEASIBILITY_TOL);
        if !feasible || !bounded || tau < -FEASIBILITY_TOL {
            log::warn!(
                "{}: solution fails checks (min eig {min_gram_eigenvalue:e}, violation {max_violation:e}, tau {tau})",
                inst.sdpa.comment.as_deref().unwrap_or("pep")
            );
            status = SolverStatus::NumericalFailure;
        } else if status == SolverStatus::Optimal && gap > tol * tau.abs().max(1.0) {
            status = SolverStatus::NearOptimal;
        }
    }
    Ok(SolveReport {
        tau,
        solver_status: status,
        duality_gap: gap,
        iterations: sol.iterations,
        gram,
        values,
        min_gram_eigenvalue,
        max_violation,
    })
}

/// One cell of a rate sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub method: MethodSpec,
    pub delta: f64,
    pub n: usize,
    pub shortened: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub delta: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub shortened: bool,
    /// Empty when the solve produced no value.
    pub tau: Option<f64>,
    pub status: String,
}

impl SweepRow {
    /// The zero-step reference line.
    pub fn baseline() -> Self {
        Self {
            method: "baseline".into(),
            delta: 0.0,
            n: 0,
            shortened: false,
            tau: Some(TAU_ZERO),
            status: SolverStatus::Optimal.as_str().into(),
        }
    }

    pub fn write_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn solve_cell(
    cell: &SweepCell,
    options: PepOptions,
    solver: &dyn ConicSolver,
    tol: f64,
) -> SweepRow {
    let outcome = cell
        .method
        .instantiate(cell.n, cell.shortened.then_some(cell.delta))
        .and_then(|m| build_pep(&m, cell.delta, cell.n, options))
        .and_then(|inst| solve_pep(&inst, solver, tol));
    let (tau, status) = match outcome {
        Ok(r) if r.has_value() => (Some(r.tau), r.solver_status.as_str().to_string()),
        Ok(r) => (None, r.solver_status.as_str().to_string()),
        Err(e) => {
            log::warn!("sweep cell {cell:?} failed: {e}");
            (None, SolverStatus::NumericalFailure.as_str().to_string())
        }
    };
    SweepRow {
        method: cell.method.name().to_string(),
        delta: cell.delta,
        n: cell.n,
        shortened: cell.shortened,
        tau,
        status,
    }
}

/// `tau_N` for every method, every `delta`, original and shortened. Cells are
/// solved in parallel; rows come back in (method, delta, shortened) order.
/// A failed cell is recorded with an empty `tau`.
pub fn rate_sweep(
    methods: &[MethodSpec],
    deltas: &[f64],
    n: usize,
    options: PepOptions,
    solver: &dyn ConicSolver,
    tol: f64,
) -> Vec<SweepRow> {
    let cells: Vec<SweepCell> = methods
        .iter()
        .flat_map(|&method| {
            deltas.iter().flat_map(move |&delta| {
                [false, true].map(|shortened| SweepCell {
                    method,
                    delta,
                    n,
                    shortened,
                })
            })
        })
        .collect();
    cells
        .par_iter()
        .map(|c| solve_cell(c, options, solver, tol))
        .collect()
}
