//! Inexact gradient descent and its accelerated variant.

mod trajectory;

pub use trajectory::{best_gradient_iterate, Trajectory};

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::oracle::{bit_cost, GradientOracle, InexactnessModel};
use crate::problems::Objective;
use crate::schedules::{build_schedule, shorten, ScheduleKind, StepSchedule};

/// When a run is declared divergent and halted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceGuard {
    /// Halt once `||x_k||` exceeds this.
    pub max_norm: f64,
    /// Halt once `f(x_k) - f(x_0)` exceeds this multiple of `max(1, |f(x_0)|)`.
    pub max_loss_growth: f64,
}

impl Default for DivergenceGuard {
    fn default() -> Self {
        Self {
            max_norm: 1e100,
            max_loss_growth: 1e10,
        }
    }
}

impl DivergenceGuard {
    fn trips(&self, x: &DVector<f64>, loss: f64, loss0: f64) -> bool {
        x.norm() > self.max_norm || loss - loss0 > self.max_loss_growth * loss0.abs().max(1.0)
    }
}

/// The update rule of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// `x_{k+1} = x_k - (h_k / L) d_k`.
    Gradient(StepSchedule),
    /// Fixed step `h` with momentum `(k + offset - 1) / (k + offset + 2)`.
    Fgm {
        h: f64,
        momentum_index_offset: usize,
    },
}

/// A method family, instantiated for a given length and inexactness level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub kind: ScheduleKind,
    /// Step of the constant schedule and of the accelerated method.
    pub constant_step: f64,
    pub momentum_index_offset: usize,
}

impl MethodSpec {
    pub fn new(kind: ScheduleKind) -> Self {
        let constant_step = match kind {
            ScheduleKind::FgmStep => 1.0,
            _ => 1.5,
        };
        Self {
            kind,
            constant_step,
            momentum_index_offset: 0,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.as_str()
    }

    /// The method for `n` steps; with `shortening = Some(delta)` every step is
    /// divided by `1 + delta`.
    pub fn instantiate(&self, n: usize, shortening: Option<f64>) -> Result<Method> {
        let schedule = build_schedule(self.kind, n.max(1), self.constant_step)?;
        let schedule = match shortening {
            Some(delta) => shorten(&schedule, delta)?,
            None => schedule,
        };
        Ok(match self.kind {
            ScheduleKind::FgmStep => Method::Fgm {
                h: schedule.steps[0],
                momentum_index_offset: self.momentum_index_offset,
            },
            _ => Method::Gradient(schedule),
        })
    }
}

/// `(k + offset - 1) / (k + offset + 2)`; the default offset 0 gives `-1/2`
/// at `k = 0`.
pub fn momentum_coefficient(k: usize, offset: usize) -> f64 {
    let j = (k + offset) as f64;
    (j - 1.0) / (j + 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub tau_hat: f64,
    pub f_star_estimate: f64,
    pub smoothness_l: f64,
}

struct Recorder<'a> {
    problem: &'a dyn Objective,
    guard: DivergenceGuard,
    t: Trajectory,
    loss0: f64,
}

impl<'a> Recorder<'a> {
    fn new(
        problem: &'a dyn Objective,
        oracle: &dyn GradientOracle,
        x0: &DVector<f64>,
        guard: DivergenceGuard,
    ) -> Self {
        let g0 = problem.gradient(x0);
        let loss0 = problem.value(x0);
        let bits_per_gradient = oracle
            .mantissa_bits()
            .map_or(0, |n| bit_cost(1, n, x0.len() as u64));
        let t = Trajectory {
            points: vec![x0.clone()],
            momentum_points: Vec::new(),
            gradients: vec![g0],
            momentum_gradients: Vec::new(),
            inexact_gradients: Vec::new(),
            losses: vec![loss0],
            steps: Vec::new(),
            degeneracy_flags: Vec::new(),
            best_index: 0,
            best_grad_norm_sq: 0.0,
            total_bits: 0,
            bits_per_gradient,
            certified_delta: oracle.certified_delta(),
            divergent: false,
            last_finite_index: 0,
        };
        Self {
            problem,
            guard,
            t,
            loss0,
        }
    }

    /// Record `x_{k+1}`; returns `false` if the run must stop.
    fn push_point(&mut self, x: DVector<f64>) -> bool {
        if x.iter().any(|v| !v.is_finite()) {
            self.t.divergent = true;
            return false;
        }
        let loss = self.problem.value(&x);
        let g = self.problem.gradient(&x);
        if !(loss.is_finite() && g.iter().all(|v| v.is_finite())) {
            self.t.divergent = true;
            return false;
        }
        let tripped = self.guard.trips(&x, loss, self.loss0);
        self.t.points.push(x);
        self.t.losses.push(loss);
        self.t.gradients.push(g);
        self.t.last_finite_index = self.t.points.len() - 1;
        if tripped {
            self.t.divergent = true;
        }
        !tripped
    }

    fn push_step(&mut self, h: f64, d: DVector<f64>, degenerate: bool) {
        self.t.steps.push(h);
        self.t.inexact_gradients.push(d);
        self.t.degeneracy_flags.push(degenerate);
        self.t.total_bits += self.t.bits_per_gradient;
    }

    fn finish(mut self) -> Trajectory {
        let (k, v) = best_gradient_iterate(&self.t).expect("trajectory holds x_0");
        self.t.best_index = k;
        self.t.best_grad_norm_sq = v;
        self.t
    }
}

fn check_run(problem: &dyn Objective, x0: &DVector<f64>, l: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(invalid(format!(
            "smoothness constant must be positive, got {l}"
        )));
    }
    if x0.len() != problem.dim() {
        return Err(invalid(format!(
            "x0 has {} entries, problem dimension is {}",
            x0.len(),
            problem.dim()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("x0 must be finite"));
    }
    Ok(())
}

/// Run `n` steps of `method` from `x0`.
pub fn run_method(
    problem: &dyn Objective,
    oracle: &dyn GradientOracle,
    method: &Method,
    x0: &DVector<f64>,
    n: usize,
    l: f64,
    guard: DivergenceGuard,
) -> Result<Trajectory> {
    check_run(problem, x0, l)?;
    let mut rec = Recorder::new(problem, oracle, x0, guard);
    match method {
        Method::Gradient(schedule) => {
            if schedule.len() < n {
                return Err(invalid(format!(
                    "schedule has {} steps, {n} requested",
                    schedule.len()
                )));
            }
            for &h in &schedule.steps[..n] {
                let x = rec.t.points.last().unwrap();
                let step = oracle.inexact_gradient(rec.t.gradients.last().unwrap(), x);
                let next = x - &step.direction * (h / l);
                rec.push_step(h, step.direction, step.degenerate);
                if !rec.push_point(next) {
                    break;
                }
            }
        }
        &Method::Fgm {
            h,
            momentum_index_offset,
        } => {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid(format!("step must be positive, got {h}")));
            }
            let mut y = x0.clone();
            let mut gy = rec.t.gradients[0].clone();
            for k in 0..n {
                rec.t.momentum_points.push(y.clone());
                rec.t.momentum_gradients.push(gy.clone());
                let step = oracle.inexact_gradient(&gy, &y);
                let next = &y - &step.direction * (h / l);
                rec.push_step(h, step.direction, step.degenerate);
                if !rec.push_point(next) {
                    break;
                }
                let pts = &rec.t.points;
                let (prev, cur) = (&pts[pts.len() - 2], &pts[pts.len() - 1]);
                y = cur + (cur - prev) * momentum_coefficient(k, momentum_index_offset);
                if y.iter().any(|v| !v.is_finite()) {
                    rec.t.divergent = true;
                    break;
                }
                gy = problem.gradient(&y);
            }
            if !rec.t.divergent {
                rec.t.momentum_points.push(y);
                rec.t.momentum_gradients.push(gy);
            }
        }
    }
    Ok(rec.finish())
}

/// Inexact gradient descent with steps `h_k / L`.
pub fn run_inexact_gd(
    problem: &dyn Objective,
    oracle: &dyn GradientOracle,
    schedule: &StepSchedule,
    x0: &DVector<f64>,
    n: usize,
    l: f64,
) -> Result<Trajectory> {
    run_method(
        problem,
        oracle,
        &Method::Gradient(schedule.clone()),
        x0,
        n,
        l,
        DivergenceGuard::default(),
    )
}

/// Inexact accelerated gradient method; `momentum_index_offset = 0` is the
/// literal coefficient, `1` the conventional one.
pub fn run_inexact_fgm(
    problem: &dyn Objective,
    oracle: &dyn GradientOracle,
    h: f64,
    x0: &DVector<f64>,
    n: usize,
    l: f64,
    momentum_index_offset: usize,
) -> Result<Trajectory> {
    run_method(
        problem,
        oracle,
        &Method::Fgm {
            h,
            momentum_index_offset,
        },
        x0,
        n,
        l,
        DivergenceGuard::default(),
    )
}

/// `(1/L) min_k ||grad f(x_k)||^2 / (f(x_0) - f_star)`.
pub fn empirical_rate(t: &Trajectory, f_star: f64, l: f64) -> Result<RateEstimate> {
    let gap = t.losses[0] - f_star;
    if !(gap > 0.0) {
        return Err(invalid(format!(
            "f(x_0) - f_star = {gap} must be positive for a rate"
        )));
    }
    if !(l > 0.0) {
        return Err(invalid(format!(
            "smoothness constant must be positive, got {l}"
        )));
    }
    let (_, best) = best_gradient_iterate(t)?;
    Ok(RateEstimate {
        tau_hat: best / l / gap,
        f_star_estimate: f_star,
        smoothness_l: l,
    })
}

/// Exact accelerated method with `h = 1` for `budget` steps, returning the
/// iterate of lowest loss. The loss is only an upper bound on the true
/// minimum value.
pub fn reference_minimize(
    problem: &dyn Objective,
    x0: &DVector<f64>,
    l: f64,
    budget: usize,
) -> Result<(DVector<f64>, f64)> {
    if budget == 0 {
        return Err(invalid("reference budget must be at least one step"));
    }
    let method = Method::Fgm {
        h: 1.0,
        momentum_index_offset: 0,
    };
    let t = run_method(
        problem,
        &InexactnessModel::Exact,
        &method,
        x0,
        budget,
        l,
        DivergenceGuard::default(),
    )?;
    if t.divergent {
        return Err(Error::Internal(
            "exact reference run diverged; is the smoothness constant too small?".into(),
        ));
    }
    let (k, _) = trajectory::argmin_first(t.losses.iter().copied()).expect("trajectory holds x_0");
    Ok((t.points[k].clone(), t.losses[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::RoundingMode;
    use crate::problems::{synthetic_dataset, LogisticProblem, Quadratic};
    use crate::schedules::{constant_schedule, dynamic_schedule, shorten, silver_schedule};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn scalar(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn adversarial(delta: f64) -> InexactnessModel {
        InexactnessModel::adversarial(delta, scalar(0.0)).unwrap()
    }

    #[test]
    fn one_exact_step_solves_quadratic() {
        let q = Quadratic::new(1, 1.0);
        let t = run_inexact_gd(
            &q,
            &InexactnessModel::Exact,
            &constant_schedule(1.0, 1).unwrap(),
            &scalar(1.0),
            1,
            1.0,
        )
        .unwrap();
        assert_eq!(t.points[1][0], 0.0);
        assert_eq!(t.best_grad_norm_sq, 0.0);
        assert_eq!(t.best_index, 1);
        assert_eq!(t.points.len(), 2);
        assert_eq!(t.inexact_gradients.len(), 1);
    }

    #[test]
    fn adversarial_quadratic_dynamics() {
        let q = Quadratic::new(1, 1.0);
        let t = run_inexact_gd(
            &q,
            &adversarial(0.25),
            &constant_schedule(1.8, 200).unwrap(),
            &scalar(1.0),
            200,
            1.0,
        )
        .unwrap();
        for (k, x) in t.points.iter().enumerate().take(20) {
            assert!((x[0].abs() - 1.25f64.powi(k as i32)).abs() <= 1e-12 * 1.25f64.powi(k as i32));
        }
        assert!(t.divergent);
        assert_eq!(t.best_index, 0);

        let t = run_inexact_gd(
            &q,
            &adversarial(0.25),
            &constant_schedule(1.6, 100).unwrap(),
            &scalar(1.0),
            100,
            1.0,
        )
        .unwrap();
        assert!(!t.divergent);
        assert_eq!(t.points.len(), 101);
        for x in &t.points {
            assert_abs_diff_eq!(x[0].abs(), 1.0, epsilon = 1e-12);
        }
        assert_eq!(t.best_index, 0);
    }

    #[test]
    fn nonfinite_iterate_halts() {
        let q = Quadratic::new(1, 1.0);
        let t = run_inexact_gd(
            &q,
            &InexactnessModel::Exact,
            &constant_schedule(1e300, 5).unwrap(),
            &scalar(1e10),
            5,
            1e-300,
        )
        .unwrap();
        assert!(t.divergent);
        assert_eq!(t.last_finite_index, 0);
        assert_eq!(t.points.len(), 1);
    }

    #[test]
    fn fgm_hand_simulation() {
        let q = Quadratic::new(1, 1.0);
        let t =
            run_inexact_fgm(&q, &InexactnessModel::Exact, 1.0, &scalar(1.0), 2, 1.0, 0).unwrap();
        let xs: Vec<f64> = t.points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = t.momentum_points.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![1.0, 0.0, 0.0]);
        assert_eq!(ys, vec![1.0, 0.5, 0.0]);
        assert_eq!(t.momentum_gradients.len(), 3);
    }

    #[test]
    fn fgm_first_step_is_gradient_step() {
        let p = LogisticProblem::new(synthetic_dataset(1, 20, 2, 1.0).unwrap());
        let x0 = DVector::from_vec(vec![0.3, -0.1, 0.2]);
        let t = run_inexact_fgm(&p, &InexactnessModel::Exact, 1.0, &x0, 1, 4.0, 0).unwrap();
        assert_eq!(t.points[1], &x0 - p.gradient(&x0) / 4.0);
    }

    #[test]
    fn momentum_coefficients() {
        assert_eq!(momentum_coefficient(0, 0), -0.5);
        assert_eq!(momentum_coefficient(1, 0), 0.0);
        assert_eq!(momentum_coefficient(2, 0), 0.25);
        assert_eq!(momentum_coefficient(0, 1), 0.0);
    }

    #[test]
    fn best_iterate_examples() {
        let q = Quadratic::new(1, 1.0);
        let t = run_inexact_gd(
            &q,
            &InexactnessModel::Exact,
            &constant_schedule(0.5, 6).unwrap(),
            &scalar(1.0),
            6,
            1.0,
        )
        .unwrap();
        assert_eq!(best_gradient_iterate(&t).unwrap().0, 6);
    }

    #[test]
    fn empirical_rate_examples() {
        let q = Quadratic::new(1, 1.0);
        let t = run_inexact_gd(
            &q,
            &InexactnessModel::Exact,
            &constant_schedule(1.0, 1).unwrap(),
            &scalar(1.0),
            0,
            1.0,
        )
        .unwrap();
        assert_eq!(empirical_rate(&t, 0.0, 1.0).unwrap().tau_hat, 2.0);
        let t = run_inexact_gd(
            &q,
            &InexactnessModel::Exact,
            &constant_schedule(1.0, 1).unwrap(),
            &scalar(1.0),
            1,
            1.0,
        )
        .unwrap();
        assert_eq!(empirical_rate(&t, 0.0, 1.0).unwrap().tau_hat, 0.0);
        assert!(empirical_rate(&t, 0.5, 1.0).is_err());
        assert!(empirical_rate(&t, 1.0, 1.0).is_err());
    }

    #[test]
    fn reference_minimize_examples() {
        let q = Quadratic::new(1, 1.0);
        let (_, f) = reference_minimize(&q, &scalar(1.0), 1.0, 50).unwrap();
        assert!(f <= 1e-6);
        let (x, f) = reference_minimize(&q, &scalar(0.0), 1.0, 10).unwrap();
        assert_eq!((x[0], f), (0.0, 0.0));
        let q2 = Quadratic::new(1, 2.0);
        let (x, _) = reference_minimize(&q2, &scalar(1.0), 4.0, 1).unwrap();
        assert_eq!(x[0], 0.5);
        assert!(reference_minimize(&q, &scalar(1.0), 1.0, 0).is_err());
    }

    #[test]
    fn rejects_bad_runs() {
        let q = Quadratic::new(2, 1.0);
        let s = constant_schedule(1.0, 3).unwrap();
        let x0 = DVector::zeros(2);
        assert!(run_inexact_gd(&q, &InexactnessModel::Exact, &s, &x0, 4, 1.0).is_err());
        assert!(run_inexact_gd(&q, &InexactnessModel::Exact, &s, &x0, 3, 0.0).is_err());
        assert!(run_inexact_gd(&q, &InexactnessModel::Exact, &s, &scalar(1.0), 3, 1.0).is_err());
        assert!(run_inexact_fgm(&q, &InexactnessModel::Exact, -1.0, &x0, 3, 1.0, 0).is_err());
    }

    #[test]
    fn compressed_runs_count_bits() {
        let p = LogisticProblem::new(synthetic_dataset(3, 30, 4, 2.0).unwrap());
        let model = InexactnessModel::compressed(3, RoundingMode::TruncateTowardZero).unwrap();
        let s = silver_schedule(10).unwrap();
        let t = run_inexact_gd(
            &p,
            &model,
            &s,
            &DVector::zeros(5),
            10,
            p.smoothness_upper_bound(),
        )
        .unwrap();
        assert_eq!(t.total_bits, 10 * 12 * 5);
        assert!(t.satisfies_certificate());
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "k,loss,grad_norm_sq,step_used,bits_cumulative,degenerate_flag"
        );
        assert_eq!(lines.len(), 12);
        assert!(lines[11].starts_with("10,") && lines[11].contains(",,600,0"));
    }

    #[test]
    fn shortening_by_zero_is_identity() {
        let p = LogisticProblem::new(synthetic_dataset(5, 25, 3, 2.0).unwrap());
        let x0 = DVector::from_element(4, 0.5);
        let l = p.smoothness_upper_bound();
        for s in [dynamic_schedule(8).unwrap(), silver_schedule(8).unwrap()] {
            let a = run_inexact_gd(&p, &InexactnessModel::Exact, &s, &x0, 8, l).unwrap();
            let b = run_inexact_gd(
                &p,
                &InexactnessModel::Exact,
                &shorten(&s, 0.0).unwrap(),
                &x0,
                8,
                l,
            )
            .unwrap();
            assert_eq!(a.points, b.points);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let p = LogisticProblem::new(synthetic_dataset(6, 40, 3, 2.0).unwrap());
        let x0 = DVector::from_element(4, -0.2);
        let l = p.smoothness_upper_bound();
        let (xs, _) = reference_minimize(&p, &x0, l, 200).unwrap();
        let model = InexactnessModel::adversarial(0.3, xs).unwrap();
        let a = run_inexact_fgm(&p, &model, 0.8, &x0, 20, l, 0).unwrap();
        let b = run_inexact_fgm(&p, &model, 0.8, &x0, 20, l, 0).unwrap();
        assert_eq!(a, b);
        assert!(a.satisfies_certificate());
    }

    proptest! {
        #[test]
        fn threshold_law(delta in 0.05f64..0.9, excess in 0.02f64..0.5) {
            let q = Quadratic::new(1, 1.0);
            let threshold = 2.0 / (1.0 + delta);
            let n = 60;
            let above = run_inexact_gd(&q, &adversarial(delta), &constant_schedule(threshold + excess, n).unwrap(), &scalar(1.0), n, 1.0).unwrap();
            prop_assert!(above.final_point()[0].abs() > 1.0);
            let below = run_inexact_gd(&q, &adversarial(delta), &constant_schedule(threshold - excess.min(threshold / 2.0), n).unwrap(), &scalar(1.0), n, 1.0).unwrap();
            prop_assert!(below.final_point()[0].abs() < 1.0);
        }

        #[test]
        fn rate_never_exceeds_two(seed in 0u64..200, n in 0usize..12, hi in 0usize..3) {
            let p = LogisticProblem::new(synthetic_dataset(seed, 20, 2, 1.5).unwrap());
            let l = p.smoothness_upper_bound();
            let x0 = DVector::from_element(3, 1.0);
            let m = n.max(1);
            let s = [constant_schedule(1.5, m).unwrap(), dynamic_schedule(m).unwrap(), silver_schedule(m).unwrap()][hi].clone();
            let t = run_inexact_gd(&p, &InexactnessModel::Exact, &s, &x0, n, l).unwrap();
            let (_, f_star) = reference_minimize(&p, &x0, l, 2000).unwrap();
            let r = empirical_rate(&t, f_star, l).unwrap();
            prop_assert!(r.tau_hat <= 2.0 * (1.0 + 1e-9), "{}", r.tau_hat);
        }

        #[test]
        fn every_pair_meets_certificate(seed in 0u64..50, n_bit in 0u32..=23, m in 0usize..3) {
            let p = LogisticProblem::new(synthetic_dataset(seed, 15, 3, 1.0).unwrap());
            let model = InexactnessModel::compressed(n_bit, RoundingMode::ALL[m]).unwrap();
            let t = run_inexact_fgm(&p, &model, 1.0, &DVector::from_element(4, 0.7), 15, p.smoothness_upper_bound(), 1).unwrap();
            prop_assert!(t.satisfies_certificate());
        }
    }
}
