//! In-memory representation of a block-diagonal SDP in SDPA form.
//!
//! ```text
//!   minimize    c' x
//!   subject to  X = F_1 x_1 + ... + F_m x_m - F_0,   X >= 0
//! ```
//!
//! with the dual
//!
//! ```text
//!   maximize    F_0 . Y
//!   subject to  F_i . Y = c_i,   Y >= 0
//! ```
//!
//! Every `F_i` is block-diagonal with the same block structure. Blocks are
//! either dense symmetric (positive semidefinite cone) or diagonal
//! (nonnegative orthant).

use crate::error::SdpError;

/// Shape of one diagonal block of the constraint matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Symmetric `n x n` block constrained to the PSD cone.
    Psd(usize),
    /// Diagonal block of length `n`, constrained entrywise nonnegative.
    Diagonal(usize),
}

impl BlockKind {
    pub fn size(self) -> usize {
        match self {
            BlockKind::Psd(n) | BlockKind::Diagonal(n) => n,
        }
    }

    /// Size as written in an SDPA block-structure line (diagonal blocks are negative).
    pub fn sdpa_size(self) -> i64 {
        match self {
            BlockKind::Psd(n) => n as i64,
            BlockKind::Diagonal(n) => -(n as i64),
        }
    }
}

/// One nonzero of a constraint matrix, stored upper-triangular (`row <= col`).
///
/// `matrix == 0` addresses the constant matrix `F_0`; `matrix == i` addresses
/// the coefficient matrix of variable `x_i` (1-based, as in SDPA). Blocks,
/// rows and columns are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub matrix: usize,
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    pub objective: Vec<f64>,
    pub blocks: Vec<BlockKind>,
    pub entries: Vec<Entry>,
    pub comment: Option<String>,
}

impl SdpaProblem {
    pub fn new(num_vars: usize, blocks: Vec<BlockKind>) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            blocks,
            entries: Vec::new(),
            comment: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Add `value` at (`row`, `col`) of block `block` of matrix `matrix`.
    ///
    /// Indices are normalized to the upper triangle. Repeated positions are
    /// summed when the problem is assembled; zeros are dropped.
    pub fn push(&mut self, matrix: usize, block: usize, row: usize, col: usize, value: f64) {
        if value == 0.0 {
            return;
        }
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.entries.push(Entry {
            matrix,
            block,
            row,
            col,
            value,
        });
    }

    /// Merge duplicate positions and drop entries that cancel to zero.
    ///
    /// Entries come out sorted by (matrix, block, row, col), which is also the
    /// order the SDPA writer emits.
    pub fn canonicalize(&mut self) {
        self.entries
            .sort_by_key(|e| (e.matrix, e.block, e.row, e.col));
        let mut merged: Vec<Entry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match merged.last_mut() {
                Some(last)
                    if last.matrix == e.matrix
                        && last.block == e.block
                        && last.row == e.row
                        && last.col == e.col =>
                {
                    last.value += e.value;
                }
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        self.entries = merged;
    }

    /// Structural checks: indices in range, diagonal blocks only touched on the
    /// diagonal, at least one constraint block, no empty problem.
    pub fn validate(&self) -> Result<(), SdpError> {
        if self.objective.is_empty() {
            return Err(SdpError::Malformed("problem has no variables".into()));
        }
        if self.blocks.is_empty() || self.blocks.iter().all(|b| b.size() == 0) {
            return Err(SdpError::Malformed(
                "problem has no constraint blocks".into(),
            ));
        }
        if self.entries.iter().all(|e| e.matrix == 0) {
            return Err(SdpError::Malformed(
                "no coefficient matrix has a nonzero entry".into(),
            ));
        }
        for e in &self.entries {
            if e.matrix > self.num_vars() {
                return Err(SdpError::Malformed(format!(
                    "matrix index {} exceeds variable count {}",
                    e.matrix,
                    self.num_vars()
                )));
            }
            let kind = self.blocks.get(e.block).ok_or_else(|| {
                SdpError::Malformed(format!("block index {} out of range", e.block + 1))
            })?;
            if e.row >= kind.size() || e.col >= kind.size() {
                return Err(SdpError::Malformed(format!(
                    "entry ({}, {}) outside block {} of size {}",
                    e.row + 1,
                    e.col + 1,
                    e.block + 1,
                    kind.size()
                )));
            }
            if matches!(kind, BlockKind::Diagonal(_)) && e.row != e.col {
                return Err(SdpError::Malformed(format!(
                    "off-diagonal entry ({}, {}) in diagonal block {}",
                    e.row + 1,
                    e.col + 1,
                    e.block + 1
                )));
            }
            if !e.value.is_finite() {
                return Err(SdpError::Malformed("non-finite coefficient".into()));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(SdpError::Malformed(
                "non-finite objective coefficient".into(),
            ));
        }
        Ok(())
    }
}
