use nalgebra::DVector;

use super::Objective;
use crate::error::{invalid, Result};

/// Displacement per step of the normalized-gradient walk.
pub const DEFAULT_ESTIMATION_STEP: f64 = 0.1;
const MIN_DISPLACEMENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessEstimate {
    /// Running maximum of the secant slopes.
    pub l_value: f64,
    /// Number of iterates generated after `x0`.
    pub iterate_count: usize,
    pub per_step_curvatures: Vec<f64>,
}

fn secant(x: &DVector<f64>, g: &DVector<f64>, y: &DVector<f64>, gy: &DVector<f64>) -> Option<f64> {
    let dx = (x - y).norm();
    (dx >= MIN_DISPLACEMENT).then(|| (g - gy).norm() / dx)
}

/// Track `||grad f(x_k) - grad f(x_{k+1})|| / ||x_k - x_{k+1}||` along `n`
/// steps of `x_{k+1} = x_k - step * grad f(x_k) / ||grad f(x_k)||`, which needs
/// no smoothness constant. Returns the largest slope seen.
pub fn estimate_smoothness(
    problem: &dyn Objective,
    x0: &DVector<f64>,
    n: usize,
    step: f64,
) -> Result<SmoothnessEstimate> {
    if n == 0 {
        return Err(invalid("estimation needs at least one step"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid(format!(
            "estimation step must be positive, got {step}"
        )));
    }
    let mut x = x0.clone();
    let mut g = problem.gradient(&x);
    let mut curvatures = Vec::with_capacity(n);
    let mut count = 0;
    for _ in 0..n {
        let gnorm = g.norm();
        if gnorm == 0.0 || !gnorm.is_finite() {
            break;
        }
        let next = &x - &g * (step / gnorm);
        let g_next = problem.gradient(&next);
        if let Some(slope) = secant(&x, &g, &next, &g_next) {
            curvatures.push(slope);
        }
        count += 1;
        x = next;
        g = g_next;
    }
    let l_value = curvatures.iter().copied().fold(0.0, f64::max);
    Ok(SmoothnessEstimate {
        l_value,
        iterate_count: count,
        per_step_curvatures: curvatures,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessCheck {
    pub max_observed: f64,
    pub estimate: f64,
    pub holds: bool,
}

/// Run `n` exact gradient steps of length `1 / estimate` from `x0` and check
/// that no secant slope along the way exceeds `estimate`.
pub fn validate_smoothness(
    problem: &dyn Objective,
    estimate: f64,
    x0: &DVector<f64>,
    n: usize,
) -> Result<SmoothnessCheck> {
    if !(estimate > 0.0 && estimate.is_finite()) {
        return Err(invalid(format!(
            "estimate must be positive, got {estimate}"
        )));
    }
    let mut x = x0.clone();
    let mut g = problem.gradient(&x);
    let mut max_observed = 0.0f64;
    for _ in 0..n {
        let next = &x - &g / estimate;
        let g_next = problem.gradient(&next);
        if let Some(slope) = secant(&x, &g, &next, &g_next) {
            max_observed = max_observed.max(slope);
        }
        x = next;
        g = g_next;
        if g.norm() == 0.0 {
            break;
        }
    }
    Ok(SmoothnessCheck {
        max_observed,
        estimate,
        holds: max_observed <= estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{synthetic_dataset, LogisticProblem, Quadratic};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Softplus;

    impl Objective for Softplus {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            x[0].exp().ln_1p()
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::from_element(1, 1.0 / (1.0 + (-x[0]).exp()))
        }
    }

    #[test]
    fn quadratic_is_exact() {
        for l in [0.5, 1.0, 3.0] {
            let q = Quadratic::new(4, l);
            let x0 = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
            let est = estimate_smoothness(&q, &x0, 50, DEFAULT_ESTIMATION_STEP).unwrap();
            assert_abs_diff_eq!(est.l_value, l, epsilon = 1e-10);
            assert_eq!(
                est.l_value,
                est.per_step_curvatures.iter().copied().fold(0.0, f64::max)
            );
        }
    }

    #[test]
    fn softplus_stays_below_quarter() {
        let est = estimate_smoothness(&Softplus, &DVector::zeros(1), 100, DEFAULT_ESTIMATION_STEP)
            .unwrap();
        assert!(est.l_value <= 0.25 && est.l_value > 0.2, "{}", est.l_value);
    }

    #[test]
    fn single_step_is_one_secant() {
        let est = estimate_smoothness(&Softplus, &DVector::zeros(1), 1, 0.5).unwrap();
        assert_eq!(est.iterate_count, 1);
        assert_eq!(est.per_step_curvatures.len(), 1);
        let s = 1.0 / (1.0 + 0.5f64.exp());
        assert_abs_diff_eq!(est.l_value, (0.5 - s) / 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_gradient_start() {
        let q = Quadratic::new(3, 2.0);
        let est = estimate_smoothness(&q, &DVector::zeros(3), 10, 0.1).unwrap();
        assert_eq!(est.l_value, 0.0);
        assert_eq!(est.iterate_count, 0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let q = Quadratic::new(1, 1.0);
        assert!(estimate_smoothness(&q, &DVector::zeros(1), 0, 0.1).is_err());
        assert!(estimate_smoothness(&q, &DVector::zeros(1), 1, 0.0).is_err());
    }

    #[test]
    fn logistic_estimate_survives_validation() {
        let problem = LogisticProblem::new(synthetic_dataset(4, 80, 5, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x0 = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let est = estimate_smoothness(&problem, &x0, 200, DEFAULT_ESTIMATION_STEP).unwrap();
        assert!(est.l_value > 0.0 && est.l_value <= problem.smoothness_upper_bound());
        let x1 = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let check = validate_smoothness(&problem, est.l_value * 1.05, &x1, 100).unwrap();
        assert!(check.holds, "{check:?}");
    }
}
