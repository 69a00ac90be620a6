//! Primal-dual interior-point method for SDPA-form problems.
//!
//! Infeasible-start path following with the HKM search direction and a
//! Mehrotra predictor-corrector step. Everything is dense except the
//! constraint matrices, which are kept as sparse entry lists; this is meant
//! for problems with a few hundred variables and blocks of a few dozen rows.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::SdpError;
use crate::problem::{BlockKind, SdpaProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::NearOptimal => "near_optimal",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::Unbounded => "unbounded",
            SolverStatus::NumericalFailure => "numerical_failure",
        }
    }

    pub fn has_value(self) -> bool {
        matches!(self, SolverStatus::Optimal | SolverStatus::NearOptimal)
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Relative duality gap required for `Optimal`.
    pub gap_tol: f64,
    /// Relative primal and dual residual required for `Optimal`.
    pub feas_tol: f64,
    /// Looser thresholds accepted as `NearOptimal` when the method stalls.
    pub near_gap_tol: f64,
    pub near_feas_tol: f64,
    pub max_iterations: usize,
    /// Scale of the starting point `X = Y = lambda I`.
    pub initial_scale: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Iterate norm beyond which a run is declared infeasible/unbounded.
    pub divergence_norm: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            near_gap_tol: 1e-5,
            near_feas_tol: 1e-5,
            max_iterations: 120,
            initial_scale: 10.0,
            step_fraction: 0.95,
            divergence_norm: 1e10,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Block {
    Dense(DMatrix<f64>),
    Diag(DVector<f64>),
}

impl Block {
    fn zeros(kind: BlockKind) -> Self {
        match kind {
            BlockKind::Psd(n) => Block::Dense(DMatrix::zeros(n, n)),
            BlockKind::Diagonal(n) => Block::Diag(DVector::zeros(n)),
        }
    }

    fn identity(kind: BlockKind, scale: f64) -> Self {
        match kind {
            BlockKind::Psd(n) => Block::Dense(DMatrix::identity(n, n) * scale),
            BlockKind::Diagonal(n) => Block::Diag(DVector::from_element(n, scale)),
        }
    }

    fn dot(&self, other: &Block) -> f64 {
        match (self, other) {
            (Block::Dense(a), Block::Dense(b)) => a.dot(b),
            (Block::Diag(a), Block::Diag(b)) => a.dot(b),
            _ => unreachable!("block kinds always match"),
        }
    }

    fn axpy(&mut self, alpha: f64, other: &Block) {
        match (self, other) {
            (Block::Dense(a), Block::Dense(b)) => *a += b * alpha,
            (Block::Diag(a), Block::Diag(b)) => a.axpy(alpha, b, 1.0),
            _ => unreachable!("block kinds always match"),
        }
    }

    fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn as_dense(&self) -> Option<&DMatrix<f64>> {
        match self {
            Block::Dense(m) => Some(m),
            Block::Diag(_) => None,
        }
    }

    pub fn as_diag(&self) -> Option<&DVector<f64>> {
        match self {
            Block::Diag(v) => Some(v),
            Block::Dense(_) => None,
        }
    }
}

/// Block-diagonal symmetric matrix.
pub type BlockMatrix = Vec<Block>;

fn bm_dot(a: &BlockMatrix, b: &BlockMatrix) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn bm_norm(a: &BlockMatrix) -> f64 {
    a.iter().map(Block::norm_sq).sum::<f64>().sqrt()
}

fn bm_axpy(a: &mut BlockMatrix, alpha: f64, b: &BlockMatrix) {
    for (x, y) in a.iter_mut().zip(b) {
        x.axpy(alpha, y);
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolverStatus,
    /// `x` of the SDPA primal.
    pub x: Vec<f64>,
    /// Slack `X = sum F_i x_i - F_0` as carried by the solver.
    pub slack: BlockMatrix,
    /// Dual matrix `Y`.
    pub dual: BlockMatrix,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Relative gap `|c'x - F_0.Y| / max(1, |c'x| + |F_0.Y|)`.
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

impl Solution {
    pub fn duality_gap(&self) -> f64 {
        (self.primal_objective - self.dual_objective).abs()
    }
}

/// Anything that can solve an SDPA-form problem.
pub trait ConicSolver: Sync {
    fn solve(&self, problem: &SdpaProblem) -> Result<Solution, SdpError>;
}

#[derive(Debug, Clone, Default)]
pub struct InteriorPointSolver {
    pub options: SolverOptions,
}

impl InteriorPointSolver {
    pub fn new(options: SolverOptions) -> Self {
        Self { options }
    }
}

impl ConicSolver for InteriorPointSolver {
    fn solve(&self, problem: &SdpaProblem) -> Result<Solution, SdpError> {
        problem.validate()?;
        let data = Data::assemble(problem);
        Ok(run(&data, &self.options))
    }
}

/// Upper-triangular sparse entry of one block of one coefficient matrix.
#[derive(Debug, Clone, Copy)]
struct Coef {
    row: usize,
    col: usize,
    value: f64,
}

struct Data {
    blocks: Vec<BlockKind>,
    c: DVector<f64>,
    f0: BlockMatrix,
    /// `per_var[i][b]`: entries of `F_{i+1}` in block `b`.
    per_var: Vec<Vec<Vec<Coef>>>,
    /// For each PSD block, the variables touching it.
    active: Vec<Vec<usize>>,
    /// For each diagonal block, row -> list of (variable, coefficient).
    diag_rows: Vec<Vec<Vec<(usize, f64)>>>,
}

impl Data {
    fn assemble(problem: &SdpaProblem) -> Self {
        let mut p = problem.clone();
        p.canonicalize();
        let m = p.num_vars();
        let nb = p.blocks.len();
        let mut f0: BlockMatrix = p.blocks.iter().map(|&k| Block::zeros(k)).collect();
        let mut per_var = vec![vec![Vec::new(); nb]; m];
        let mut diag_rows: Vec<Vec<Vec<(usize, f64)>>> = p
            .blocks
            .iter()
            .map(|k| match k {
                BlockKind::Diagonal(n) => vec![Vec::new(); *n],
                BlockKind::Psd(_) => Vec::new(),
            })
            .collect();
        for e in &p.entries {
            if e.matrix == 0 {
                match &mut f0[e.block] {
                    Block::Dense(a) => {
                        a[(e.row, e.col)] += e.value;
                        if e.row != e.col {
                            a[(e.col, e.row)] += e.value;
                        }
                    }
                    Block::Diag(v) => v[e.row] += e.value,
                }
            } else {
                let var = e.matrix - 1;
                per_var[var][e.block].push(Coef {
                    row: e.row,
                    col: e.col,
                    value: e.value,
                });
                if let BlockKind::Diagonal(_) = p.blocks[e.block] {
                    diag_rows[e.block][e.row].push((var, e.value));
                }
            }
        }
        let active = (0..nb)
            .map(|b| {
                if matches!(p.blocks[b], BlockKind::Psd(_)) {
                    (0..m).filter(|&i| !per_var[i][b].is_empty()).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        Self {
            blocks: p.blocks.clone(),
            c: DVector::from_vec(p.objective.clone()),
            f0,
            per_var,
            active,
            diag_rows,
        }
    }

    fn m(&self) -> usize {
        self.c.len()
    }

    /// `sum_i F_i x_i`
    fn apply(&self, x: &DVector<f64>) -> BlockMatrix {
        let mut out: BlockMatrix = self.blocks.iter().map(|&k| Block::zeros(k)).collect();
        for (i, blocks) in self.per_var.iter().enumerate() {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (b, coefs) in blocks.iter().enumerate() {
                match &mut out[b] {
                    Block::Dense(a) => {
                        for c in coefs {
                            a[(c.row, c.col)] += c.value * xi;
                            if c.row != c.col {
                                a[(c.col, c.row)] += c.value * xi;
                            }
                        }
                    }
                    Block::Diag(v) => {
                        for c in coefs {
                            v[c.row] += c.value * xi;
                        }
                    }
                }
            }
        }
        out
    }

    /// `(F_i . S)_i` for a (not necessarily symmetric) block matrix `S`.
    fn adjoint(&self, s: &BlockMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.per_var.iter().map(|blocks| {
                blocks
                    .iter()
                    .zip(s)
                    .map(|(coefs, sb)| match sb {
                        Block::Dense(a) => coefs
                            .iter()
                            .map(|c| {
                                if c.row == c.col {
                                    c.value * a[(c.row, c.row)]
                                } else {
                                    c.value * (a[(c.row, c.col)] + a[(c.col, c.row)])
                                }
                            })
                            .sum::<f64>(),
                        Block::Diag(v) => coefs.iter().map(|c| c.value * v[c.row]).sum(),
                    })
                    .sum()
            }),
        )
    }

    /// Schur complement `M_ij = tr(F_i X^{-1} F_j Y)`.
    fn schur(&self, xinv: &BlockMatrix, y: &BlockMatrix, x: &BlockMatrix) -> DMatrix<f64> {
        let m = self.m();
        let mut schur = DMatrix::zeros(m, m);
        for (b, kind) in self.blocks.iter().enumerate() {
            match kind {
                BlockKind::Psd(_) => {
                    let (Block::Dense(a), Block::Dense(yb)) = (&xinv[b], &y[b]) else {
                        unreachable!()
                    };
                    let act = &self.active[b];
                    // Directed entries (r, c, v) of each symmetric F_i.
                    let directed: Vec<Vec<(usize, usize, f64)>> = act
                        .iter()
                        .map(|&i| {
                            let mut d = Vec::new();
                            for c in &self.per_var[i][b] {
                                d.push((c.row, c.col, c.value));
                                if c.row != c.col {
                                    d.push((c.col, c.row, c.value));
                                }
                            }
                            d
                        })
                        .collect();
                    for (ii, &i) in act.iter().enumerate() {
                        for (jj, &j) in act.iter().enumerate().skip(ii) {
                            // tr(F_i A F_j B) = sum F_i[p,q] A[q,r] F_j[r,s] B[s,p]
                            let mut acc = 0.0;
                            for &(p, q, v) in &directed[ii] {
                                for &(r, s, w) in &directed[jj] {
                                    acc += v * w * a[(q, r)] * yb[(s, p)];
                                }
                            }
                            schur[(i, j)] += acc;
                            if i != j {
                                schur[(j, i)] += acc;
                            }
                        }
                    }
                }
                BlockKind::Diagonal(_) => {
                    let (Block::Diag(xb), Block::Diag(yb)) = (&x[b], &y[b]) else {
                        unreachable!()
                    };
                    for (r, row) in self.diag_rows[b].iter().enumerate() {
                        let w = yb[r] / xb[r];
                        for &(i, vi) in row {
                            for &(j, vj) in row {
                                schur[(i, j)] += w * vi * vj;
                            }
                        }
                    }
                }
            }
        }
        schur
    }
}

fn inverse(x: &BlockMatrix) -> Option<BlockMatrix> {
    x.iter()
        .map(|b| match b {
            Block::Dense(a) => Cholesky::new(a.clone()).map(|c| Block::Dense(c.inverse())),
            Block::Diag(v) => {
                if v.iter().all(|&e| e > 0.0) {
                    Some(Block::Diag(v.map(|e| 1.0 / e)))
                } else {
                    None
                }
            }
        })
        .collect()
}

/// Largest `alpha` (possibly infinite) with `X + alpha dX` in the cone.
fn max_step(x: &BlockMatrix, dx: &BlockMatrix) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        match (xb, db) {
            (Block::Dense(a), Block::Dense(d)) => {
                let Some(chol) = Cholesky::new(a.clone()) else {
                    return 0.0;
                };
                let l = chol.l();
                let linv = l
                    .solve_lower_triangular(&DMatrix::identity(a.nrows(), a.nrows()))
                    .unwrap_or_else(|| DMatrix::zeros(a.nrows(), a.nrows()));
                let mut w = &linv * d * linv.transpose();
                w = (&w + w.transpose()) * 0.5;
                let lmin = SymmetricEigen::new(w).eigenvalues.min();
                if lmin < 0.0 {
                    alpha = alpha.min(-1.0 / lmin);
                }
            }
            (Block::Diag(a), Block::Diag(d)) => {
                for (xe, de) in a.iter().zip(d.iter()) {
                    if *de < 0.0 {
                        alpha = alpha.min(-xe / de);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    alpha
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

struct Direction {
    dx: DVector<f64>,
    d_slack: BlockMatrix,
    d_dual: BlockMatrix,
}

#[allow(clippy::too_many_arguments)]
fn direction(
    data: &Data,
    chol: &Cholesky<f64, nalgebra::Dyn>,
    slack: &BlockMatrix,
    xinv: &BlockMatrix,
    dual: &BlockMatrix,
    rp: &BlockMatrix,
    rd: &DVector<f64>,
    mu: f64,
    corrector: Option<&BlockMatrix>,
) -> Direction {
    // R = mu X^{-1} - Y + X^{-1} rp Y - X^{-1} K
    let r: BlockMatrix = (0..data.blocks.len())
        .map(|b| match (&slack[b], &xinv[b], &dual[b], &rp[b]) {
            (Block::Dense(_), Block::Dense(ai), Block::Dense(y), Block::Dense(p)) => {
                let mut out = ai * mu - y + ai * p * y;
                if let Some(Block::Dense(k)) = corrector.map(|k| &k[b]) {
                    out -= ai * k;
                }
                Block::Dense(out)
            }
            (Block::Diag(x), Block::Diag(_), Block::Diag(y), Block::Diag(p)) => {
                let mut out =
                    DVector::from_fn(x.len(), |i, _| mu / x[i] - y[i] + p[i] * y[i] / x[i]);
                if let Some(Block::Diag(k)) = corrector.map(|k| &k[b]) {
                    for i in 0..out.len() {
                        out[i] -= k[i] / x[i];
                    }
                }
                Block::Diag(out)
            }
            _ => unreachable!(),
        })
        .collect();
    let rhs = data.adjoint(&r) - rd;
    let dx = chol.solve(&rhs);
    let fdx = data.apply(&dx);
    let mut d_slack = fdx.clone();
    bm_axpy(&mut d_slack, -1.0, rp);
    let d_dual: BlockMatrix = (0..data.blocks.len())
        .map(|b| match (&r[b], &xinv[b], &fdx[b], &dual[b]) {
            (Block::Dense(rb), Block::Dense(ai), Block::Dense(f), Block::Dense(y)) => {
                Block::Dense(symmetrize(&(rb - ai * f * y)))
            }
            (Block::Diag(rb), Block::Diag(ai), Block::Diag(f), Block::Diag(y)) => {
                Block::Diag(DVector::from_fn(rb.len(), |i, _| {
                    rb[i] - ai[i] * f[i] * y[i]
                }))
            }
            _ => unreachable!(),
        })
        .collect();
    Direction {
        dx,
        d_slack,
        d_dual,
    }
}

fn product(a: &BlockMatrix, b: &BlockMatrix) -> BlockMatrix {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Block::Dense(p), Block::Dense(q)) => Block::Dense(p * q),
            (Block::Diag(p), Block::Diag(q)) => Block::Diag(p.component_mul(q)),
            _ => unreachable!(),
        })
        .collect()
}

fn run(data: &Data, opts: &SolverOptions) -> Solution {
    let m = data.m();
    let nu: f64 = data.blocks.iter().map(|b| b.size() as f64).sum();
    let mut x = DVector::zeros(m);
    let mut slack: BlockMatrix = data
        .blocks
        .iter()
        .map(|&k| Block::identity(k, opts.initial_scale))
        .collect();
    let mut dual = slack.clone();
    let f0_norm = bm_norm(&data.f0);
    let c_norm = data.c.norm();

    let mut iterations = 0;
    let mut stalled = 0;
    let status;
    loop {
        let fx = data.apply(&x);
        let mut rp = slack.clone();
        bm_axpy(&mut rp, -1.0, &fx);
        bm_axpy(&mut rp, 1.0, &data.f0);
        let rd = &data.c - data.adjoint(&dual);
        let pobj = data.c.dot(&x);
        let dobj = bm_dot(&data.f0, &dual);
        let complementarity = bm_dot(&slack, &dual);
        let mu = complementarity / nu;
        let pinf = bm_norm(&rp) / (1.0 + f0_norm);
        let dinf = rd.norm() / (1.0 + c_norm);
        let rel_gap =
            (pobj - dobj).abs().max(complementarity.abs()) / (1.0f64).max(pobj.abs() + dobj.abs());
        log::trace!(
            "ipm it={iterations} pobj={pobj:.10e} dobj={dobj:.10e} gap={rel_gap:.2e} pinf={pinf:.2e} dinf={dinf:.2e}"
        );

        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && rel_gap <= opts.gap_tol {
            status = SolverStatus::Optimal;
            break;
        }
        let x_norm = x.norm();
        let y_norm = bm_norm(&dual);
        if y_norm > opts.divergence_norm && pinf > opts.near_feas_tol && dobj > 0.0 {
            status = SolverStatus::Infeasible;
            break;
        }
        if x_norm > opts.divergence_norm && dinf > opts.near_feas_tol && pobj < 0.0 {
            status = SolverStatus::Unbounded;
            break;
        }
        let near = pinf <= opts.near_feas_tol
            && dinf <= opts.near_feas_tol
            && rel_gap <= opts.near_gap_tol;
        if iterations >= opts.max_iterations || stalled >= 5 {
            status = if near {
                SolverStatus::NearOptimal
            } else {
                SolverStatus::NumericalFailure
            };
            break;
        }

        let Some(xinv) = inverse(&slack) else {
            status = if near {
                SolverStatus::NearOptimal
            } else {
                SolverStatus::NumericalFailure
            };
            break;
        };
        let schur = data.schur(&xinv, &dual, &slack);
        let chol = match Cholesky::new(schur.clone()) {
            Some(c) => c,
            None => {
                let scale = schur.diagonal().amax().max(1.0);
                let mut reg = schur;
                for i in 0..m {
                    reg[(i, i)] += 1e-13 * scale;
                }
                match Cholesky::new(reg) {
                    Some(c) => c,
                    None => {
                        status = if near {
                            SolverStatus::NearOptimal
                        } else {
                            SolverStatus::NumericalFailure
                        };
                        break;
                    }
                }
            }
        };

        let pred = direction(data, &chol, &slack, &xinv, &dual, &rp, &rd, 0.0, None);
        let ap = max_step(&slack, &pred.d_slack).min(1.0);
        let ad = max_step(&dual, &pred.d_dual).min(1.0);
        let mut xs = slack.clone();
        bm_axpy(&mut xs, ap, &pred.d_slack);
        let mut ys = dual.clone();
        bm_axpy(&mut ys, ad, &pred.d_dual);
        let mu_aff = bm_dot(&xs, &ys) / nu;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let k = product(&pred.d_slack, &pred.d_dual);

        let corr = direction(
            data,
            &chol,
            &slack,
            &xinv,
            &dual,
            &rp,
            &rd,
            sigma * mu,
            Some(&k),
        );
        let ap = (opts.step_fraction * max_step(&slack, &corr.d_slack)).min(1.0);
        let ad = (opts.step_fraction * max_step(&dual, &corr.d_dual)).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalled += 1;
        } else {
            stalled = 0;
        }
        x.axpy(ap, &corr.dx, 1.0);
        bm_axpy(&mut slack, ap, &corr.d_slack);
        bm_axpy(&mut dual, ad, &corr.d_dual);
        iterations += 1;
    }

    let fx = data.apply(&x);
    let mut rp = slack.clone();
    bm_axpy(&mut rp, -1.0, &fx);
    bm_axpy(&mut rp, 1.0, &data.f0);
    let rd = &data.c - data.adjoint(&dual);
    let pobj = data.c.dot(&x);
    let dobj = bm_dot(&data.f0, &dual);
    Solution {
        status,
        x: x.iter().copied().collect(),
        slack,
        dual,
        primal_objective: pobj,
        dual_objective: dobj,
        relative_gap: (pobj - dobj).abs() / (1.0f64).max(pobj.abs() + dobj.abs()),
        primal_infeasibility: bm_norm(&rp) / (1.0 + f0_norm),
        dual_infeasibility: rd.norm() / (1.0 + c_norm),
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn solve(p: &SdpaProblem) -> Solution {
        InteriorPointSolver::default().solve(p).unwrap()
    }

    #[test]
    fn sdpa_manual_example() {
        // SDPA user manual, example 1; optimum -41.9 in this sign convention.
        let mut p = SdpaProblem::new(3, vec![BlockKind::Psd(2)]);
        p.objective = vec![48.0, -8.0, 20.0];
        p.push(0, 0, 0, 0, -11.0);
        p.push(0, 0, 1, 1, 23.0);
        p.push(1, 0, 0, 0, 10.0);
        p.push(1, 0, 0, 1, 4.0);
        p.push(2, 0, 1, 1, -8.0);
        p.push(3, 0, 0, 1, -8.0);
        p.push(3, 0, 1, 1, -2.0);
        let s = solve(&p);
        assert_eq!(s.status, SolverStatus::Optimal);
        assert_abs_diff_eq!(s.primal_objective, -41.9, epsilon = 1e-6);
        assert_abs_diff_eq!(s.dual_objective, -41.9, epsilon = 1e-6);
    }

    #[test]
    fn lp_in_diagonal_block() {
        // min -x1 - x2 s.t. x1 <= 1, x2 <= 2, x1 + x2 <= 2.5
        let mut p = SdpaProblem::new(2, vec![BlockKind::Diagonal(3)]);
        p.objective = vec![-1.0, -1.0];
        // slack_r = b_r - a_r x  ->  F_i[r] = -a_ri, F_0[r] = -b_r
        p.push(1, 0, 0, 0, -1.0);
        p.push(0, 0, 0, 0, -1.0);
        p.push(2, 0, 1, 1, -1.0);
        p.push(0, 0, 1, 1, -2.0);
        p.push(1, 0, 2, 2, -1.0);
        p.push(2, 0, 2, 2, -1.0);
        p.push(0, 0, 2, 2, -2.5);
        let s = solve(&p);
        assert_eq!(s.status, SolverStatus::Optimal);
        assert_abs_diff_eq!(s.primal_objective, -2.5, epsilon = 1e-7);
    }

    #[test]
    fn mixed_blocks_min_eigenvalue() {
        // max t s.t. A - t I >= 0 with A = [[2,1],[1,2]]  ->  t = 1; plus t <= 5 in an LP block.
        let mut p = SdpaProblem::new(1, vec![BlockKind::Psd(2), BlockKind::Diagonal(1)]);
        p.objective = vec![-1.0];
        p.push(1, 0, 0, 0, -1.0);
        p.push(1, 0, 1, 1, -1.0);
        p.push(0, 0, 0, 0, -2.0);
        p.push(0, 0, 1, 1, -2.0);
        p.push(0, 0, 0, 1, -1.0);
        p.push(1, 1, 0, 0, -1.0);
        p.push(0, 1, 0, 0, -5.0);
        let s = solve(&p);
        assert_eq!(s.status, SolverStatus::Optimal);
        assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-7);
    }

    #[test]
    fn detects_unbounded() {
        // min -x s.t. x >= 0: unbounded below.
        let mut p = SdpaProblem::new(1, vec![BlockKind::Diagonal(1)]);
        p.objective = vec![-1.0];
        p.push(1, 0, 0, 0, 1.0);
        let s = solve(&p);
        assert_eq!(s.status, SolverStatus::Unbounded);
    }

    #[test]
    fn detects_infeasible() {
        // x >= 1 and x <= -1.
        let mut p = SdpaProblem::new(1, vec![BlockKind::Diagonal(2)]);
        p.objective = vec![1.0];
        p.push(1, 0, 0, 0, 1.0);
        p.push(0, 0, 0, 0, 1.0);
        p.push(1, 0, 1, 1, -1.0);
        p.push(0, 0, 1, 1, 1.0);
        let s = solve(&p);
        assert_eq!(s.status, SolverStatus::Infeasible);
    }
}
