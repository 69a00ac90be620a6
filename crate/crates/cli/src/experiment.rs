use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use relgrad::oracle::{bit_cost, InexactnessModel, MANTISSA_BITS};
use relgrad::pep::{rate_sweep, PepOptions, SweepRow};
use relgrad::problems::{
    estimate_smoothness, load_dataset, synthetic_dataset, train_test_split, validate_smoothness,
    Dataset, FeatureScaler, LogisticProblem, Objective, Quadratic, SmoothnessCheck,
    SmoothnessEstimate,
};
use relgrad::schedules::{constant_schedule, ScheduleKind};
use relgrad::solvers::{reference_minimize, run_inexact_gd, MethodSpec, Trajectory};
use relgrad::solvers::{run_method, DivergenceGuard};
use relgrad_sdp::{InteriorPointSolver, SolverStatus};
use serde::Serialize;

use crate::config::{ExperimentConfig, InexactnessSpec, ProblemSource};
use crate::error::{CliError, Result};

/// Standard Gaussian scaled by `radius`, deterministic in `seed`.
pub fn initial_point(seed: u64, dim: usize, radius: f64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(dim, |_, _| radius * rng.sample::<f64, _>(StandardNormal))
}

fn load_source(source: &ProblemSource) -> Result<Dataset> {
    match source {
        ProblemSource::Dataset { path } => Ok(load_dataset(path)?),
        &ProblemSource::Synthetic {
            samples,
            dim,
            separation,
            seed,
        } => Ok(synthetic_dataset(seed, samples, dim, separation)?),
        ProblemSource::Quadratic { .. } => Err(CliError::Config(
            "this command needs a classification problem (dataset or synthetic)".into(),
        )),
    }
}

/// Train/test logistic problems with the smoothness constant and the
/// reference minimizer shared by every run.
pub struct Prepared {
    pub train: LogisticProblem,
    pub test: LogisticProblem,
    pub smoothness: f64,
    pub minimizer: DVector<f64>,
    pub f_star: f64,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let data = load_source(&config.problem)?;
    let (mut train, mut test) = train_test_split(&data, config.split_ratio, config.split_seed)?;
    if config.scale_features {
        let scaler = FeatureScaler::fit(&train);
        train = scaler.apply(&train);
        test = scaler.apply(&test);
    }
    let train = LogisticProblem::new(train);
    let test = LogisticProblem::new(test);
    let origin = DVector::zeros(train.dim());
    let smoothness = match config.smoothness {
        Some(l) => l,
        None => {
            let est = estimate_smoothness(
                &train,
                &origin,
                config.estimation_iters,
                config.estimation_step,
            )?;
            if est.l_value <= 0.0 {
                return Err(CliError::Config(
                    "smoothness estimate is zero; set `smoothness` explicitly".into(),
                ));
            }
            est.l_value
        }
    };
    let budget = config.reference_budget_factor * config.n_iters;
    let (minimizer, f_star) = reference_minimize(&train, &origin, smoothness, budget.max(1))?;
    log::info!("L = {smoothness}, reference loss {f_star} after {budget} steps");
    Ok(Prepared {
        train,
        test,
        smoothness,
        minimizer,
        f_star,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub method: String,
    pub shortened: bool,
    pub delta: f64,
    pub seed: u64,
    pub best_grad_norm_sq: f64,
    pub best_train_acc: f64,
    pub test_acc_at_best_train: f64,
    pub total_bits: u64,
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: String,
    pub shortened: bool,
    pub delta: f64,
    pub runs: usize,
    pub mean_best_grad_norm_sq: f64,
    pub mean_best_train_acc: f64,
    pub mean_test_acc_at_best_train: f64,
    pub mean_total_bits: f64,
    pub divergent_runs: usize,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    method: MethodSpec,
    shortened: bool,
    /// Index into the inexactness grid.
    level: usize,
    seed: u64,
}

fn model_for(
    config: &ExperimentConfig,
    level: usize,
    minimizer: &DVector<f64>,
) -> Result<(InexactnessModel, f64)> {
    Ok(match &config.inexactness {
        InexactnessSpec::Exact => (InexactnessModel::Exact, 0.0),
        InexactnessSpec::Compressed { mode, n_bits } => {
            let m = InexactnessModel::compressed(n_bits[level], *mode)?;
            let delta = m.nominal_delta();
            (m, delta)
        }
        InexactnessSpec::Adversarial { deltas } => {
            let d = deltas[level];
            (InexactnessModel::adversarial(d, minimizer.clone())?, d)
        }
    })
}

fn method_spec(config: &ExperimentConfig, kind: ScheduleKind) -> MethodSpec {
    MethodSpec {
        kind,
        constant_step: match kind {
            ScheduleKind::FgmStep => config.fgm_step,
            _ => config.constant_step,
        },
        momentum_index_offset: config.momentum_index_offset,
    }
}

/// Options of `cmd_run` that are not part of the experiment itself.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write one trajectory CSV per run here and check every `(d, g)` pair.
    pub trajectory_dir: Option<PathBuf>,
}

pub struct RunOutput {
    pub rows: Vec<RunRow>,
    pub report: Vec<ReportRow>,
    pub smoothness: f64,
    /// Runs whose recorded pairs broke the certified bound (only checked
    /// when trajectories are written).
    pub certificate_failures: usize,
}

fn run_cell(
    config: &ExperimentConfig,
    prep: &Prepared,
    cell: &Cell,
) -> Result<(RunRow, Trajectory)> {
    let (model, delta) = model_for(config, cell.level, &prep.minimizer)?;
    let method = cell
        .method
        .instantiate(config.n_iters, cell.shortened.then_some(delta))?;
    let x0 = initial_point(cell.seed, prep.train.dim(), config.init_radius);
    let t = run_method(
        &prep.train,
        &model,
        &method,
        &x0,
        config.n_iters,
        prep.smoothness,
        DivergenceGuard::default(),
    )?;
    let train_acc: Vec<f64> = t.points.iter().map(|x| prep.train.accuracy_at(x)).collect();
    let (best_k, best_train_acc) =
        train_acc
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |b, (k, a)| if a > b.1 { (k, a) } else { b },
            );
    let row = RunRow {
        method: cell.method.name().to_string(),
        shortened: cell.shortened,
        delta,
        seed: cell.seed,
        best_grad_norm_sq: t.best_grad_norm_sq,
        best_train_acc,
        test_acc_at_best_train: prep.test.accuracy_at(&t.points[best_k]),
        total_bits: t.total_bits,
        divergent: t.divergent,
    };
    Ok((row, t))
}

/// Arithmetic means over seeds, grouped by (method, shortened, delta) in
/// first-appearance order.
pub fn aggregate(rows: &[RunRow]) -> Vec<ReportRow> {
    let mut out: Vec<ReportRow> = Vec::new();
    for r in rows {
        let pos = out
            .iter()
            .position(|g| g.method == r.method && g.shortened == r.shortened && g.delta == r.delta);
        let g = match pos {
            Some(i) => &mut out[i],
            None => {
                out.push(ReportRow {
                    method: r.method.clone(),
                    shortened: r.shortened,
                    delta: r.delta,
                    runs: 0,
                    mean_best_grad_norm_sq: 0.0,
                    mean_best_train_acc: 0.0,
                    mean_test_acc_at_best_train: 0.0,
                    mean_total_bits: 0.0,
                    divergent_runs: 0,
                });
                out.last_mut().unwrap()
            }
        };
        g.runs += 1;
        g.mean_best_grad_norm_sq += r.best_grad_norm_sq;
        g.mean_best_train_acc += r.best_train_acc;
        g.mean_test_acc_at_best_train += r.test_acc_at_best_train;
        g.mean_total_bits += r.total_bits as f64;
        g.divergent_runs += usize::from(r.divergent);
    }
    out.into_iter()
        .map(|mut g| {
            let n = g.runs as f64;
            g.mean_best_grad_norm_sq /= n;
            g.mean_best_train_acc /= n;
            g.mean_test_acc_at_best_train /= n;
            g.mean_total_bits /= n;
            g
        })
        .collect()
}

pub fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Every (method, shortened, delta, seed) run, in parallel, written to
/// `runs.csv` and averaged into `report.csv` under `config.out_dir`.
pub fn cmd_run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutput> {
    config.validate()?;
    let prep = prepare(config)?;
    let levels = config.deltas().len();
    let shortened: &[bool] = if config.include_shortened {
        &[false, true]
    } else {
        &[false]
    };
    let mut cells = Vec::new();
    for &kind in &config.methods {
        let method = method_spec(config, kind);
        for &s in shortened {
            for level in 0..levels {
                for &seed in &config.seeds {
                    cells.push(Cell {
                        method,
                        shortened: s,
                        level,
                        seed,
                    });
                }
            }
        }
    }
    let results: Vec<(RunRow, Trajectory)> = cells
        .par_iter()
        .map(|c| run_cell(config, &prep, c))
        .collect::<Result<_>>()?;

    std::fs::create_dir_all(&config.out_dir)?;
    let mut certificate_failures = 0;
    if let Some(dir) = &options.trajectory_dir {
        std::fs::create_dir_all(dir)?;
        for (row, t) in &results {
            if !t.satisfies_certificate() {
                log::error!("run {row:?} recorded a pair outside the certified bound");
                certificate_failures += 1;
            }
            let name = format!(
                "{}_{}_{}_{}.csv",
                row.method,
                if row.shortened { "short" } else { "orig" },
                row.delta,
                row.seed
            );
            t.write_csv(BufWriter::new(File::create(dir.join(name))?))?;
        }
    }
    let rows: Vec<RunRow> = results.into_iter().map(|(r, _)| r).collect();
    let report = aggregate(&rows);
    write_rows(&rows, &config.out_dir.join("runs.csv"))?;
    write_rows(&report, &config.out_dir.join("report.csv"))?;
    Ok(RunOutput {
        rows,
        report,
        smoothness: prep.smoothness,
        certificate_failures,
    })
}

pub struct PepOutput {
    pub rows: Vec<SweepRow>,
    /// Cells without a rate value.
    pub failures: usize,
    /// Cells with a value whose duality gap missed the tolerance.
    pub near_optimal: usize,
}

/// Worst-case rates for every configured method and level, original and
/// shortened, with the zero-step baseline row first. Writes `pep.csv`.
pub fn cmd_pep(config: &ExperimentConfig, force: bool) -> Result<PepOutput> {
    config.validate()?;
    let pep = &config.pep;
    if pep.n_iters > pep.max_n_iters && !force {
        return Err(CliError::Config(format!(
            "N = {} exceeds the cap {}; pass --force to run anyway",
            pep.n_iters, pep.max_n_iters
        )));
    }
    let methods: Vec<MethodSpec> = pep
        .methods
        .iter()
        .map(|&k| method_spec(config, k))
        .collect();
    let options = PepOptions {
        criterion: pep.criterion,
        smoothness: 1.0,
    };
    let solver = InteriorPointSolver::default();
    let mut rows = vec![SweepRow::baseline()];
    rows.extend(rate_sweep(
        &methods,
        &pep.deltas,
        pep.n_iters,
        options,
        &solver,
        pep.tolerance,
    ));
    let failures = rows.iter().filter(|r| r.tau.is_none()).count();
    let near_optimal = rows
        .iter()
        .filter(|r| r.status == SolverStatus::NearOptimal.as_str())
        .count();
    std::fs::create_dir_all(&config.out_dir)?;
    let file = BufWriter::new(File::create(config.out_dir.join("pep.csv"))?);
    SweepRow::write_csv(&rows, file)?;
    Ok(PepOutput {
        rows,
        failures,
        near_optimal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressRow {
    pub variant: String,
    pub n_bit: u32,
    pub iteration: usize,
    pub bits_cumulative: u64,
    pub loss: f64,
}

pub struct CompressOutput {
    pub rows: Vec<CompressRow>,
    /// Largest budget every variant reaches exactly.
    pub common_budget: u64,
    /// `(variant, loss)` at the common budget.
    pub at_common_budget: Vec<(String, f64)>,
}

/// Full-precision gradient descent (32 bits per component) against
/// compressed variants, each run until `budget_bits` is spent. Writes
/// `compress_demo.csv`.
pub fn cmd_compress_demo(config: &ExperimentConfig) -> Result<CompressOutput> {
    config.validate()?;
    let demo = &config.compress_demo;
    let prep = prepare(config)?;
    let dim = prep.train.dim() as u64;
    let full_cost = bit_cost(1, MANTISSA_BITS, dim);
    if demo.budget_bits <= full_cost {
        return Err(CliError::Config(format!(
            "budget of {} bits does not cover one full-precision iteration ({full_cost} bits)",
            demo.budget_bits
        )));
    }
    let x0 = initial_point(config.seeds[0], prep.train.dim(), config.init_radius);
    let mut variants = vec![(
        "full_precision".to_string(),
        MANTISSA_BITS,
        InexactnessModel::Exact,
    )];
    for &n in &demo.n_bits {
        variants.push((
            format!("mantissa_{n}"),
            n,
            InexactnessModel::compressed(n, demo.mode)?,
        ));
    }
    let mut rows = Vec::new();
    let mut spent = Vec::new();
    let mut trajectories = Vec::new();
    for (name, n_bit, model) in &variants {
        let per_iter = bit_cost(1, *n_bit, dim);
        let iters = (demo.budget_bits / per_iter) as usize;
        let schedule = constant_schedule(demo.step, iters.max(1))?;
        let t = run_inexact_gd(&prep.train, model, &schedule, &x0, iters, prep.smoothness)?;
        for (k, loss) in t.losses.iter().enumerate() {
            rows.push(CompressRow {
                variant: name.clone(),
                n_bit: *n_bit,
                iteration: k,
                bits_cumulative: per_iter * k as u64,
                loss: *loss,
            });
        }
        spent.push((per_iter, t.losses.len() - 1));
        trajectories.push(t);
    }
    let common_budget = spent.iter().map(|&(c, k)| c * k as u64).min().unwrap_or(0);
    let at_common_budget = variants
        .iter()
        .zip(&spent)
        .zip(&trajectories)
        .map(|(((name, _, _), &(cost, _)), t)| {
            let k = (common_budget / cost) as usize;
            (name.clone(), t.losses[k.min(t.losses.len() - 1)])
        })
        .collect();
    std::fs::create_dir_all(&config.out_dir)?;
    write_rows(&rows, &config.out_dir.join("compress_demo.csv"))?;
    Ok(CompressOutput {
        rows,
        common_budget,
        at_common_budget,
    })
}

pub struct EstimateOutput {
    pub estimate: SmoothnessEstimate,
    pub check: Option<SmoothnessCheck>,
}

/// Smoothness estimate from `x_0(seeds[0])`, validated by a fresh run from
/// `x_0(seeds[0] + 1)`.
pub fn cmd_estimate_l(config: &ExperimentConfig, n: usize) -> Result<EstimateOutput> {
    config.validate()?;
    let problem: Box<dyn Objective> = match &config.problem {
        &ProblemSource::Quadratic { dim, curvature } => Box::new(Quadratic::new(dim, curvature)),
        source => {
            let data = load_source(source)?;
            let (mut train, _) = train_test_split(&data, config.split_ratio, config.split_seed)?;
            if config.scale_features {
                train = FeatureScaler::fit(&train).apply(&train);
            }
            Box::new(LogisticProblem::new(train))
        }
    };
    let seed = config.seeds[0];
    let x0 = initial_point(seed, problem.dim(), config.init_radius);
    let estimate = estimate_smoothness(problem.as_ref(), &x0, n, config.estimation_step)?;
    let check = if estimate.l_value > 0.0 {
        let x1 = initial_point(seed.wrapping_add(1), problem.dim(), config.init_radius);
        Some(validate_smoothness(
            problem.as_ref(),
            estimate.l_value,
            &x1,
            n,
        )?)
    } else {
        None
    };
    Ok(EstimateOutput { estimate, check })
}
