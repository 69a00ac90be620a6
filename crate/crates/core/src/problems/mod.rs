//! Objective functions: the logistic classification loss, its data, and a
//! secant-based smoothness estimator.

mod dataset;
mod logistic;
mod smoothness;

pub use dataset::{
    load_dataset, parse_dataset, synthetic_dataset, train_test_split, Dataset, FeatureScaler, Split,
};
pub use logistic::{accuracy, logistic_gradient, logistic_loss, LogisticParams, LogisticProblem};
pub use smoothness::{
    estimate_smoothness, validate_smoothness, SmoothnessCheck, SmoothnessEstimate,
    DEFAULT_ESTIMATION_STEP,
};

use nalgebra::DVector;

/// A differentiable function on `R^dim`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// `f(x) = (L/2) ||x||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub dim: usize,
    pub curvature: f64,
}

impl Quadratic {
    pub fn new(dim: usize, curvature: f64) -> Self {
        Self { dim, curvature }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.curvature * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x * self.curvature
    }
}
