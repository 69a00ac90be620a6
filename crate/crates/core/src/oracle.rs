//! Inexact gradient oracles.
//!
//! An oracle turns the true gradient `g` at a point into an approximate
//! gradient `d` satisfying the relative bound `||d - g|| <= delta ||g||`.
//! Three models are provided: the exact oracle, per-component mantissa
//! compression on the binary32 encoding, and an adversarial oracle that adds
//! the longest admissible error pointing away from a reference minimizer.

use std::sync::OnceLock;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Width of the binary32 fraction field.
pub const MANTISSA_BITS: u32 = 23;
/// Sign and exponent bits of a binary32 value.
pub const SIGN_EXPONENT_BITS: u32 = 9;
/// Absolute slack used by [`verify_relative_inexactness`].
pub const VERIFY_ABS_TOL: f64 = 1e-12;
/// Unit roundoff of the f64 -> binary32 conversion.
const BINARY32_UNIT_ROUNDOFF: f64 = 1.0 / (1u64 << 24) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMode {
    TruncateTowardZero,
    RoundNearestEven,
    RoundUp,
}

impl RoundingMode {
    pub const ALL: [RoundingMode; 3] = [
        RoundingMode::TruncateTowardZero,
        RoundingMode::RoundNearestEven,
        RoundingMode::RoundUp,
    ];

    fn index(self) -> usize {
        match self {
            RoundingMode::TruncateTowardZero => 0,
            RoundingMode::RoundNearestEven => 1,
            RoundingMode::RoundUp => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressedValue {
    pub value: f64,
    /// `1 + 8 + n_bit`.
    pub bits_used: u32,
}

fn check_bits(n_bit: u32) -> Result<()> {
    if n_bit > MANTISSA_BITS {
        return Err(invalid(format!(
            "n_bit must be in [0, {MANTISSA_BITS}], got {n_bit}"
        )));
    }
    Ok(())
}

/// Keep the top `n_bit` bits of the fraction field of a binary32 value.
///
/// Zeros, subnormals, infinities and NaN are returned unchanged. A rounding
/// carry that would overflow the exponent into infinity falls back to the
/// truncated value.
///
/// # Panics
/// If `n_bit > 23`.
pub fn compress_binary32(a: f32, n_bit: u32, mode: RoundingMode) -> f32 {
    assert!(n_bit <= MANTISSA_BITS, "n_bit out of range");
    let bits = a.to_bits();
    let sign = bits & 0x8000_0000;
    let magnitude = bits & 0x7fff_ffff;
    let exponent = magnitude >> MANTISSA_BITS;
    if exponent == 0 || exponent == 0xff {
        return a;
    }
    let dropped = MANTISSA_BITS - n_bit;
    if dropped == 0 {
        return a;
    }
    let ulp = 1u32 << dropped;
    let low = magnitude & (ulp - 1);
    let truncated = magnitude & !(ulp - 1);
    let rounded = match mode {
        RoundingMode::TruncateTowardZero => truncated,
        RoundingMode::RoundNearestEven => {
            let half = ulp >> 1;
            // Parity of the rounded significand counted in ulps. With no
            // fraction bits kept that count is the implicit leading one.
            let odd = n_bit == 0 || truncated & ulp != 0;
            if low > half || (low == half && odd) {
                truncated + ulp
            } else {
                truncated
            }
        }
        RoundingMode::RoundUp => {
            if low != 0 {
                truncated + ulp
            } else {
                truncated
            }
        }
    };
    let rounded = if rounded >> MANTISSA_BITS == 0xff {
        truncated
    } else {
        rounded
    };
    f32::from_bits(sign | rounded)
}

/// Compress one gradient component.
///
/// `a` is converted to binary32, its fraction field reduced to `n_bit` bits
/// with `mode`, and the result widened back to f64. Values that are zero,
/// non-finite, or fall outside the normal binary32 range pass through
/// unchanged.
pub fn compress_component(a: f64, n_bit: u32, mode: RoundingMode) -> Result<CompressedValue> {
    check_bits(n_bit)?;
    let bits_used = SIGN_EXPONENT_BITS + n_bit;
    let single = a as f32;
    let value = if a == 0.0 || !a.is_finite() || !single.is_normal() {
        a
    } else {
        f64::from(compress_binary32(single, n_bit, mode))
    };
    Ok(CompressedValue { value, bits_used })
}

/// Relative error bound for round-to-nearest: half an ulp of a mantissa in `[1, 2)`.
pub fn nearest_rounding_bound(n_bit: u32) -> f64 {
    0.5f64.powi(n_bit as i32 + 1)
}

fn exhaustive_bound(n_bit: u32, mode: RoundingMode) -> f64 {
    let one = 1.0f32.to_bits();
    let mut worst = 0.0f64;
    for fraction in 0..(1u32 << MANTISSA_BITS) {
        let b = f32::from_bits(one | fraction);
        let r = compress_binary32(b, n_bit, mode);
        let err = (f64::from(b) - f64::from(r)).abs() / f64::from(b);
        if err > worst {
            worst = err;
        }
    }
    worst
}

/// Worst-case per-component relative error of [`compress_binary32`].
///
/// For round-to-nearest-even this is `(1/2)^(n_bit+1)`. For truncation and
/// rounding up the bound is the maximum over every fraction field of a
/// mantissa in `[1, 2)`, computed exhaustively once and cached. Exponent
/// saturation only ever substitutes truncation, whose bound never exceeds
/// either of the other two.
pub fn certified_delta(n_bit: u32, mode: RoundingMode) -> Result<f64> {
    check_bits(n_bit)?;
    if mode == RoundingMode::RoundNearestEven {
        return Ok(nearest_rounding_bound(n_bit));
    }
    static CACHE: OnceLock<Vec<OnceLock<f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        (0..3 * (MANTISSA_BITS as usize + 1))
            .map(|_| OnceLock::new())
            .collect()
    });
    let slot = &cache[mode.index() * (MANTISSA_BITS as usize + 1) + n_bit as usize];
    Ok(*slot.get_or_init(|| {
        let own = exhaustive_bound(n_bit, mode);
        if mode == RoundingMode::RoundUp {
            own.max(exhaustive_bound(n_bit, RoundingMode::TruncateTowardZero))
        } else {
            own
        }
    }))
}

/// Storage cost in bits of `iterations` gradients of `dimension` components
/// each holding a `n_bit`-bit mantissa.
pub fn bit_cost(iterations: u64, n_bit: u32, dimension: u64) -> u64 {
    iterations * u64::from(SIGN_EXPONENT_BITS + n_bit) * dimension
}

/// `||d - g|| <= delta ||g|| + 1e-12`.
pub fn verify_relative_inexactness(d: &DVector<f64>, g: &DVector<f64>, delta: f64) -> Result<bool> {
    if d.len() != g.len() {
        return Err(invalid(format!(
            "dimension mismatch: d has {} entries, g has {}",
            d.len(),
            g.len()
        )));
    }
    Ok((d - g).norm() <= delta * g.norm() + VERIFY_ABS_TOL)
}

/// How approximate gradients are produced from true ones.
#[derive(Debug, Clone, PartialEq)]
pub enum InexactnessModel {
    Exact,
    Compressed {
        n_bit: u32,
        mode: RoundingMode,
    },
    Adversarial {
        delta: f64,
        reference_minimizer: DVector<f64>,
    },
}

impl InexactnessModel {
    pub fn compressed(n_bit: u32, mode: RoundingMode) -> Result<Self> {
        check_bits(n_bit)?;
        Ok(InexactnessModel::Compressed { n_bit, mode })
    }

    pub fn adversarial(delta: f64, reference_minimizer: DVector<f64>) -> Result<Self> {
        check_delta(delta)?;
        Ok(InexactnessModel::Adversarial {
            delta,
            reference_minimizer,
        })
    }

    /// The inexactness level this model is reported under. For compression
    /// this is the round-to-nearest bound `(1/2)^(n_bit+1)`.
    pub fn nominal_delta(&self) -> f64 {
        match self {
            InexactnessModel::Exact => 0.0,
            InexactnessModel::Compressed { n_bit, .. } => nearest_rounding_bound(*n_bit),
            InexactnessModel::Adversarial { delta, .. } => *delta,
        }
    }

    /// A level every emitted gradient is guaranteed to satisfy.
    ///
    /// For compression this adds the f64 -> binary32 conversion error to the
    /// per-component bound: `delta + u (1 + delta)` with `u = 2^-24`.
    pub fn certified_delta(&self) -> f64 {
        match self {
            InexactnessModel::Exact => 0.0,
            InexactnessModel::Compressed { n_bit, mode } => {
                let base = certified_delta(*n_bit, *mode).expect("n_bit validated on construction");
                base + BINARY32_UNIT_ROUNDOFF * (1.0 + base)
            }
            InexactnessModel::Adversarial { delta, .. } => *delta,
        }
    }

    pub fn mantissa_bits(&self) -> Option<u32> {
        match self {
            InexactnessModel::Compressed { n_bit, .. } => Some(*n_bit),
            _ => None,
        }
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(invalid(format!("delta must lie in [0, 1), got {delta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct InexactGradient {
    pub direction: DVector<f64>,
    /// The oracle could not build its error term (adversarial oracle at the
    /// reference minimizer) and returned the true gradient.
    pub degenerate: bool,
}

/// Produces approximate gradients. Implemented by [`InexactnessModel`];
/// other implementations can replay recorded gradients.
pub trait GradientOracle {
    fn inexact_gradient(&self, gradient: &DVector<f64>, point: &DVector<f64>) -> InexactGradient;

    /// Level that every output of this oracle satisfies.
    fn certified_delta(&self) -> f64;

    /// Mantissa width when gradients are stored compressed.
    fn mantissa_bits(&self) -> Option<u32> {
        None
    }
}

pub fn apply_inexactness(
    gradient: &DVector<f64>,
    point: &DVector<f64>,
    model: &InexactnessModel,
) -> InexactGradient {
    match model {
        InexactnessModel::Exact => InexactGradient {
            direction: gradient.clone(),
            degenerate: false,
        },
        InexactnessModel::Compressed { n_bit, mode } => InexactGradient {
            direction: gradient.map(|gi| {
                compress_component(gi, *n_bit, *mode)
                    .expect("n_bit validated on construction")
                    .value
            }),
            degenerate: false,
        },
        InexactnessModel::Adversarial {
            delta,
            reference_minimizer,
        } => {
            let away = point - reference_minimizer;
            let dist = away.norm();
            let gnorm = gradient.norm();
            if dist == 0.0 || !dist.is_finite() {
                return InexactGradient {
                    direction: gradient.clone(),
                    degenerate: true,
                };
            }
            let budget = delta * gnorm;
            let mut direction = gradient + away * (budget / dist);
            // Pull back by a few ulps if rounding pushed the realised error
            // past the budget.
            for _ in 0..4 {
                let err = (&direction - gradient).norm();
                if err <= budget {
                    break;
                }
                let shrink = budget / err * (1.0 - 4.0 * f64::EPSILON);
                direction = gradient + (&direction - gradient) * shrink;
            }
            InexactGradient {
                direction,
                degenerate: false,
            }
        }
    }
}

impl GradientOracle for InexactnessModel {
    fn inexact_gradient(&self, gradient: &DVector<f64>, point: &DVector<f64>) -> InexactGradient {
        apply_inexactness(gradient, point, self)
    }

    fn certified_delta(&self) -> f64 {
        InexactnessModel::certified_delta(self)
    }

    fn mantissa_bits(&self) -> Option<u32> {
        InexactnessModel::mantissa_bits(self)
    }
}
