use std::cell::Cell;

use nalgebra::{DVector, SymmetricEigen};

use super::{PepInstance, SolveReport};
use crate::error::{invalid, Result};
use crate::oracle::{GradientOracle, InexactGradient};
use crate::problems::Objective;
use crate::solvers::{run_method, DivergenceGuard, Trajectory};

/// Concrete vectors realising a solved instance: a factorization
/// `G = V'V` gives one vector per Gram basis element.
#[derive(Debug, Clone)]
pub struct Witness {
    /// Coordinates of each evaluation point (the minimizer is the origin).
    pub points: Vec<DVector<f64>>,
    pub gradients: Vec<DVector<f64>>,
    pub values: Vec<f64>,
    pub directions: Vec<DVector<f64>>,
    /// Largest violation of the smooth convex interpolation inequalities.
    pub max_interpolation_violation: f64,
}

pub fn reconstruct_witness(inst: &PepInstance, report: &SolveReport) -> Result<Witness> {
    let n = inst.gram_dimension;
    if report.gram.nrows() != n {
        return Err(invalid("report does not belong to this instance"));
    }
    let eig = SymmetricEigen::new(report.gram.clone());
    // Columns of V = diag(sqrt(lambda)) Q' are the basis vectors.
    let mut v = eig.eigenvectors.transpose();
    for (r, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        v.row_mut(r).scale_mut(s);
    }
    let embed = |coef: &DVector<f64>| -> DVector<f64> { &v * coef };
    let column = |c: usize| -> DVector<f64> { v.column(c).into_owned() };

    let points: Vec<DVector<f64>> = inst.points.iter().map(|p| embed(&p.coords)).collect();
    let gradients: Vec<DVector<f64>> = inst
        .points
        .iter()
        .map(|p| column(p.gradient_column))
        .collect();
    let directions = (0..inst.n)
        .map(|k| column(inst.direction_column(k)))
        .collect();
    let values = report.values.clone();

    let l = inst.options.smoothness;
    let m = points.len();
    let origin = DVector::zeros(n);
    let mut worst = 0.0f64;
    for i in 0..=m {
        for j in 0..=m {
            if i == j {
                continue;
            }
            let (xi, gi, fi) = if i < m {
                (&points[i], &gradients[i], values[i])
            } else {
                (&origin, &origin, 0.0)
            };
            let (xj, gj, fj) = if j < m {
                (&points[j], &gradients[j], values[j])
            } else {
                (&origin, &origin, 0.0)
            };
            let rhs = fj + gj.dot(&(xi - xj)) + (gi - gj).norm_squared() / (2.0 * l);
            worst = worst.max(rhs - fi);
        }
    }
    Ok(Witness {
        points,
        gradients,
        values,
        directions,
        max_interpolation_violation: worst,
    })
}

/// Gradient lookup on the witness data: the gradient of the nearest recorded
/// point. Only meaningful along the witness trajectory itself.
struct Tabulated<'a> {
    witness: &'a Witness,
}

impl Tabulated<'_> {
    fn nearest(&self, x: &DVector<f64>) -> usize {
        self.witness
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - x).norm_squared()))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
            .0
    }
}

impl Objective for Tabulated<'_> {
    fn dim(&self) -> usize {
        self.witness.points[0].len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.witness.values[self.nearest(x)]
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.witness.gradients[self.nearest(x)].clone()
    }
}

/// Hands out the witness directions in order.
struct Replay<'a> {
    directions: &'a [DVector<f64>],
    next: Cell<usize>,
    delta: f64,
}

impl GradientOracle for Replay<'_> {
    fn inexact_gradient(&self, _gradient: &DVector<f64>, _point: &DVector<f64>) -> InexactGradient {
        let k = self.next.get();
        self.next.set(k + 1);
        InexactGradient {
            direction: self.directions[k].clone(),
            degenerate: false,
        }
    }

    fn certified_delta(&self) -> f64 {
        self.delta
    }
}

impl Witness {
    /// Run the instance's method on the witness data with the witness
    /// directions as oracle output.
    pub fn replay(&self, inst: &PepInstance) -> Result<Trajectory> {
        let problem = Tabulated { witness: self };
        let oracle = Replay {
            directions: &self.directions,
            next: Cell::new(0),
            delta: inst.delta,
        };
        run_method(
            &problem,
            &oracle,
            &inst.method,
            &self.points[inst.x_index[0]],
            inst.n,
            inst.options.smoothness,
            DivergenceGuard::default(),
        )
    }

    /// `max_k |x_k(replayed) - x_k(witness)|`.
    pub fn replay_deviation(&self, inst: &PepInstance, t: &Trajectory) -> f64 {
        t.points
            .iter()
            .zip(&inst.x_index)
            .map(|(x, &i)| (x - &self.points[i]).amax())
            .fold(0.0, f64::max)
    }
}
