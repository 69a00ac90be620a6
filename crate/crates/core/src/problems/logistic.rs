use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{Dataset, Objective};

/// Classifier `sigma(b + w'x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub weights: DVector<f64>,
    pub bias: f64,
}

impl LogisticParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: DVector::zeros(dim),
            bias: 0.0,
        }
    }

    /// Pack as `[w; b]`.
    pub fn to_vector(&self) -> DVector<f64> {
        let d = self.weights.len();
        DVector::from_fn(
            d + 1,
            |i, _| if i < d { self.weights[i] } else { self.bias },
        )
    }

    pub fn from_vector(x: &DVector<f64>) -> Self {
        let d = x.len() - 1;
        Self {
            weights: x.rows(0, d).into_owned(),
            bias: x[d],
        }
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn margins(p: &LogisticParams, data: &Dataset) -> DVector<f64> {
    assert_eq!(
        p.weights.len(),
        data.num_features(),
        "parameter and feature dimensions differ"
    );
    let mut z = &data.features * &p.weights;
    z.add_scalar_mut(p.bias);
    z
}

/// Negative log-likelihood summed over the examples.
pub fn logistic_loss(p: &LogisticParams, data: &Dataset) -> f64 {
    // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    margins(p, data)
        .iter()
        .zip(&data.labels)
        .map(|(&z, &y)| softplus(z) - f64::from(y) * z)
        .sum()
}

/// Gradient of [`logistic_loss`] packed as `[dw; db]`.
pub fn logistic_gradient(p: &LogisticParams, data: &Dataset) -> DVector<f64> {
    let residual = DVector::from_iterator(
        data.len(),
        margins(p, data)
            .iter()
            .zip(&data.labels)
            .map(|(&z, &y)| sigmoid(z) - f64::from(y)),
    );
    let dw = data.features.tr_mul(&residual);
    let d = dw.len();
    DVector::from_fn(d + 1, |i, _| if i < d { dw[i] } else { residual.sum() })
}

/// Fraction of examples classified correctly; `sigma = 1/2` predicts label 1.
pub fn accuracy(p: &LogisticParams, data: &Dataset) -> f64 {
    let correct = margins(p, data)
        .iter()
        .zip(&data.labels)
        .filter(|(&z, &y)| u8::from(z >= 0.0) == y)
        .count();
    correct as f64 / data.len() as f64
}

/// Logistic loss as an [`Objective`] over `[w; b]`.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    pub data: Dataset,
}

impl LogisticProblem {
    pub fn new(data: Dataset) -> Self {
        Self { data }
    }

    /// `lambda_max(A'A) / 4` with `A = [X 1]`: a global upper bound on the
    /// Hessian, hence a valid smoothness constant.
    pub fn smoothness_upper_bound(&self) -> f64 {
        let k = self.data.len();
        let d = self.data.num_features();
        let a = DMatrix::from_fn(k, d + 1, |i, j| {
            if j < d {
                self.data.features[(i, j)]
            } else {
                1.0
            }
        });
        SymmetricEigen::new(a.tr_mul(&a)).eigenvalues.max() / 4.0
    }

    pub fn accuracy_at(&self, x: &DVector<f64>) -> f64 {
        accuracy(&LogisticParams::from_vector(x), &self.data)
    }
}

impl Objective for LogisticProblem {
    fn dim(&self) -> usize {
        self.data.num_features() + 1
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        logistic_loss(&LogisticParams::from_vector(x), &self.data)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        logistic_gradient(&LogisticParams::from_vector(x), &self.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{synthetic_dataset, Split};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(rows: &[(u8, &[f64])]) -> Dataset {
        let d = rows[0].1.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.1.iter().copied()).collect();
        Dataset::new(
            DMatrix::from_row_slice(rows.len(), d, &flat),
            rows.iter().map(|r| r.0).collect(),
            Split::Train,
        )
        .unwrap()
    }

    #[test]
    fn loss_examples() {
        let d = synthetic_dataset(3, 17, 4, 1.0).unwrap();
        assert_abs_diff_eq!(
            logistic_loss(&LogisticParams::zeros(4), &d),
            17.0 * std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        let one = data(&[(1, &[1.0])]);
        let p = LogisticParams {
            weights: DVector::from_vec(vec![1.0]),
            bias: 0.0,
        };
        assert_abs_diff_eq!(
            logistic_loss(&p, &one),
            (1.0 + (-1.0f64).exp()).ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(logistic_loss(&p, &one), 0.3133, epsilon = 1e-4);
        let far = LogisticParams {
            weights: DVector::from_vec(vec![800.0]),
            bias: 0.0,
        };
        assert!(logistic_loss(&far, &one) < 1e-300);
        let wrong = data(&[(0, &[1.0])]);
        assert_abs_diff_eq!(logistic_loss(&far, &wrong), 800.0, epsilon = 1e-9);
    }

    #[test]
    fn symmetric_data_has_zero_bias_gradient() {
        let d = data(&[
            (1, &[1.0, 2.0]),
            (0, &[-1.0, -2.0]),
            (1, &[0.5, -1.0]),
            (0, &[-0.5, 1.0]),
        ]);
        let g = logistic_gradient(&LogisticParams::zeros(2), &d);
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn accuracy_examples() {
        let d = data(&[(1, &[1.0]), (1, &[-1.0]), (1, &[3.0])]);
        assert_eq!(accuracy(&LogisticParams::zeros(1), &d), 1.0);
        let sep = data(&[(1, &[1.0]), (0, &[-1.0]), (1, &[2.0]), (0, &[-3.0])]);
        let p = LogisticParams {
            weights: DVector::from_vec(vec![1.0]),
            bias: 0.0,
        };
        assert_eq!(accuracy(&p, &sep), 1.0);
        let mut flipped = sep.clone();
        flipped.labels.iter_mut().for_each(|y| *y = 1 - *y);
        assert_eq!(accuracy(&p, &flipped), 0.0);
    }

    #[test]
    fn accuracy_invariant_to_feature_order() {
        let d = synthetic_dataset(9, 40, 3, 1.5).unwrap();
        let p = LogisticParams {
            weights: DVector::from_vec(vec![0.3, -0.2, 0.9]),
            bias: 0.1,
        };
        let perm = [2, 0, 1];
        let mut shuffled = d.clone();
        let mut q = p.clone();
        for (new, &old) in perm.iter().enumerate() {
            shuffled.features.set_column(new, &d.features.column(old));
            q.weights[new] = p.weights[old];
        }
        let acc = accuracy(&p, &d);
        assert_eq!(acc, accuracy(&q, &shuffled));
        assert!((0.0..=1.0).contains(&acc));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let k = rng.random_range(1..=20);
            let d = rng.random_range(1..=5);
            let data = synthetic_dataset(100 + trial, k, d, 1.0).unwrap();
            let problem = LogisticProblem::new(data);
            let x = DVector::from_fn(d + 1, |_, _| rng.random_range(-1.0..1.0));
            let g = problem.gradient(&x);
            let step = 1e-5;
            let fd = DVector::from_fn(d + 1, |i, _| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += step;
                xm[i] -= step;
                (problem.value(&xp) - problem.value(&xm)) / (2.0 * step)
            });
            let rel = (&g - &fd).norm() / g.norm().max(1e-12);
            assert!(rel < 1e-6, "trial {trial}: relative error {rel}");
        }
    }

    #[test]
    fn smoothness_bound_dominates_hessian_secants() {
        let problem = LogisticProblem::new(synthetic_dataset(5, 60, 4, 1.0).unwrap());
        let l = problem.smoothness_upper_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let u = DVector::from_fn(5, |_, _| rng.random_range(-3.0..3.0));
            let v = DVector::from_fn(5, |_, _| rng.random_range(-3.0..3.0));
            let slope = (problem.gradient(&u) - problem.gradient(&v)).norm() / (&u - &v).norm();
            assert!(slope <= l * (1.0 + 1e-12));
        }
    }

    proptest! {
        #[test]
        fn loss_is_convex_along_segments(
            u in proptest::collection::vec(-4.0f64..4.0, 4),
            v in proptest::collection::vec(-4.0f64..4.0, 4),
            alpha in 0.0f64..1.0,
        ) {
            let problem = LogisticProblem::new(synthetic_dataset(21, 30, 3, 1.0).unwrap());
            let u = DVector::from_vec(u);
            let v = DVector::from_vec(v);
            let mix = &u * alpha + &v * (1.0 - alpha);
            let lhs = problem.value(&mix);
            let rhs = alpha * problem.value(&u) + (1.0 - alpha) * problem.value(&v);
            prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()));
        }
    }
}
