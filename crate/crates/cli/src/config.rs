use std::path::{Path, PathBuf};

use relgrad::oracle::RoundingMode;
use relgrad::pep::RateCriterion;
use relgrad::schedules::ScheduleKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Where the objective comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    /// CSV rows `label, f_1, ..., f_d`.
    Dataset { path: PathBuf },
    /// Two Gaussian clusters; see `relgrad::problems::synthetic_dataset`.
    Synthetic {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_separation")]
        separation: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `(L/2) ||x||^2`; only meaningful for `estimate-l`.
    Quadratic { dim: usize, curvature: f64 },
}

fn default_samples() -> usize {
    200
}

fn default_dim() -> usize {
    10
}

fn default_separation() -> f64 {
    2.0
}

impl Default for ProblemSource {
    fn default() -> Self {
        ProblemSource::Synthetic {
            samples: default_samples(),
            dim: default_dim(),
            separation: default_separation(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InexactnessSpec {
    Exact,
    /// Mantissa compression; the reported level is `(1/2)^(n+1)`.
    Compressed {
        mode: RoundingMode,
        n_bits: Vec<u32>,
    },
    Adversarial {
        deltas: Vec<f64>,
    },
}

impl Default for InexactnessSpec {
    fn default() -> Self {
        InexactnessSpec::Adversarial {
            deltas: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PepConfig {
    pub methods: Vec<ScheduleKind>,
    pub deltas: Vec<f64>,
    pub n_iters: usize,
    /// Largest `N` accepted without `--force`.
    pub max_n_iters: usize,
    pub criterion: RateCriterion,
    pub tolerance: f64,
}

impl Default for PepConfig {
    fn default() -> Self {
        Self {
            methods: vec![
                ScheduleKind::Constant,
                ScheduleKind::Dynamic,
                ScheduleKind::Silver,
                ScheduleKind::FgmStep,
            ],
            deltas: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            n_iters: 5,
            max_n_iters: 25,
            criterion: RateCriterion::MinAll,
            tolerance: relgrad::pep::DEFAULT_PEP_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressDemoConfig {
    pub n_bits: Vec<u32>,
    pub mode: RoundingMode,
    pub budget_bits: u64,
    pub step: f64,
}

impl Default for CompressDemoConfig {
    fn default() -> Self {
        Self {
            n_bits: vec![2, 1, 0],
            mode: RoundingMode::TruncateTowardZero,
            budget_bits: 200_000,
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub scale_features: bool,
    pub methods: Vec<ScheduleKind>,
    pub constant_step: f64,
    pub fgm_step: f64,
    pub momentum_index_offset: usize,
    pub include_shortened: bool,
    pub inexactness: InexactnessSpec,
    pub n_iters: usize,
    pub seeds: Vec<u64>,
    /// `x_0 = init_radius * N(0, I)`.
    pub init_radius: f64,
    /// Skip the estimate and use this smoothness constant.
    pub smoothness: Option<f64>,
    pub estimation_step: f64,
    pub estimation_iters: usize,
    /// Reference minimization runs `factor * N` exact accelerated steps.
    pub reference_budget_factor: usize,
    pub out_dir: PathBuf,
    pub pep: PepConfig,
    pub compress_demo: CompressDemoConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSource::default(),
            split_ratio: 0.8,
            split_seed: 0,
            scale_features: true,
            methods: vec![
                ScheduleKind::Constant,
                ScheduleKind::Dynamic,
                ScheduleKind::Silver,
                ScheduleKind::FgmStep,
            ],
            constant_step: 1.5,
            fgm_step: 1.0,
            momentum_index_offset: 0,
            include_shortened: true,
            inexactness: InexactnessSpec::default(),
            n_iters: 100,
            seeds: (0..6).collect(),
            init_radius: 1.0,
            smoothness: None,
            estimation_step: relgrad::problems::DEFAULT_ESTIMATION_STEP,
            estimation_iters: 100,
            reference_budget_factor: 10,
            out_dir: PathBuf::from("out"),
            pep: PepConfig::default(),
            compress_demo: CompressDemoConfig::default(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_deltas(deltas: &[f64], what: &str) -> Result<()> {
    if deltas.is_empty() {
        return Err(config_err(format!("{what} is empty")));
    }
    if let Some(d) = deltas.iter().find(|d| !(0.0..1.0).contains(*d)) {
        return Err(config_err(format!("{what} entry {d} is outside [0, 1)")));
    }
    Ok(())
}

/// `n` with `(1/2)^(n+1) == delta`, if any.
pub fn mantissa_bits_for_delta(delta: f64) -> Option<u32> {
    (0..=23).find(|&n| relgrad::oracle::nearest_rounding_bound(n) == delta)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    /// Inexactness levels of the run sweep.
    pub fn deltas(&self) -> Vec<f64> {
        match &self.inexactness {
            InexactnessSpec::Exact => vec![0.0],
            InexactnessSpec::Compressed { n_bits, .. } => n_bits
                .iter()
                .map(|&n| relgrad::oracle::nearest_rounding_bound(n))
                .collect(),
            InexactnessSpec::Adversarial { deltas } => deltas.clone(),
        }
    }

    /// Replace the run and PEP inexactness grids. Under compression each
    /// level must be `(1/2)^(n+1)` for some mantissa width `n`.
    pub fn override_deltas(&mut self, deltas: &[f64]) -> Result<()> {
        check_deltas(deltas, "--delta-grid")?;
        match &mut self.inexactness {
            InexactnessSpec::Exact => {}
            InexactnessSpec::Compressed { n_bits, .. } => {
                *n_bits = deltas
                    .iter()
                    .map(|&d| {
                        mantissa_bits_for_delta(d).ok_or_else(|| {
                            config_err(format!(
                                "delta {d} is not (1/2)^(n+1) for any mantissa width n"
                            ))
                        })
                    })
                    .collect::<Result<_>>()?;
            }
            InexactnessSpec::Adversarial { deltas: grid } => *grid = deltas.to_vec(),
        }
        self.pep.deltas = deltas.to_vec();
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(config_err("seed list is empty"));
        }
        if self.n_iters == 0 {
            return Err(config_err("n_iters must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(config_err("method list is empty"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(config_err(format!(
                "split_ratio {} is outside (0, 1)",
                self.split_ratio
            )));
        }
        for (name, v) in [
            ("constant_step", self.constant_step),
            ("fgm_step", self.fgm_step),
            ("estimation_step", self.estimation_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.init_radius >= 0.0 && self.init_radius.is_finite()) {
            return Err(config_err(format!(
                "init_radius must be non-negative, got {}",
                self.init_radius
            )));
        }
        if let Some(l) = self.smoothness {
            if !(l > 0.0 && l.is_finite()) {
                return Err(config_err(format!("smoothness must be positive, got {l}")));
            }
        }
        if self.estimation_iters == 0 || self.reference_budget_factor == 0 {
            return Err(config_err(
                "estimation_iters and reference_budget_factor must be positive",
            ));
        }
        match &self.inexactness {
            InexactnessSpec::Exact => {}
            InexactnessSpec::Compressed { n_bits, .. } => {
                if n_bits.is_empty() {
                    return Err(config_err("n_bits is empty"));
                }
                if let Some(n) = n_bits.iter().find(|&&n| n > relgrad::oracle::MANTISSA_BITS) {
                    return Err(config_err(format!("n_bits entry {n} exceeds 23")));
                }
            }
            InexactnessSpec::Adversarial { deltas } => check_deltas(deltas, "inexactness.deltas")?,
        }
        match &self.problem {
            ProblemSource::Synthetic {
                samples,
                dim,
                separation,
                ..
            } => {
                if *samples < 2 || *dim == 0 || !separation.is_finite() {
                    return Err(config_err(
                        "synthetic problem needs samples >= 2, dim >= 1, finite separation",
                    ));
                }
            }
            ProblemSource::Quadratic { dim, curvature } => {
                if *dim == 0 || !(*curvature > 0.0) {
                    return Err(config_err(
                        "quadratic problem needs dim >= 1 and positive curvature",
                    ));
                }
            }
            ProblemSource::Dataset { .. } => {}
        }
        check_deltas(&self.pep.deltas, "pep.deltas")?;
        if self.pep.methods.is_empty() {
            return Err(config_err("pep.methods is empty"));
        }
        if !(self.pep.tolerance > 0.0) {
            return Err(config_err("pep.tolerance must be positive"));
        }
        let demo = &self.compress_demo;
        if let Some(n) = demo
            .n_bits
            .iter()
            .find(|&&n| n > relgrad::oracle::MANTISSA_BITS)
        {
            return Err(config_err(format!(
                "compress_demo.n_bits entry {n} exceeds 23"
            )));
        }
        if !(demo.step > 0.0 && demo.step.is_finite()) {
            return Err(config_err("compress_demo.step must be positive"));
        }
        Ok(())
    }
}
