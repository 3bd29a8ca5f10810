//! Rating scales, annual transition matrices and marginal generators.
//!
//! Categories are labelled `1..=K` with `1` the best rating and `K` the
//! default state. Default is absorbing in every matrix and generator built
//! over a scale.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{self, LogFailure};

/// Input row sums may deviate from one by at most this much.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Largest accepted entrywise error of `exp(G·h)` against the input matrix.
pub const EMBEDDING_TOL: f64 = 1e-3;
/// Generator rows must sum to zero within this tolerance.
pub const GENERATOR_ROW_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatingError {
    #[error("rating scale needs at least two categories, got {0}")]
    ScaleTooSmall(usize),
    #[error("rating category {category} is outside 1..={k}")]
    CategoryOutOfRange { category: usize, k: usize },
    #[error("unknown rating label `{0}`")]
    UnknownLabel(String),
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    Dimension { expected: usize, rows: usize, cols: usize },
    #[error("row {row} sums to {sum}, not 1")]
    RowSum { row: usize, sum: f64 },
    #[error("entry ({row}, {col}) = {value} is outside [0, 1]")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("default row is not absorbing")]
    NonAbsorbingDefault,
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("matrix logarithm did not converge")]
    LogDivergence,
    #[error("matrix has no real principal logarithm")]
    NoRealLogarithm,
    #[error("regularized generator reproduces the matrix only to {error:e} (limit {EMBEDDING_TOL:e})")]
    EmbeddingFailure { error: f64 },
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
}

/// The ordered rating categories `1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingScale {
    k: usize,
}

impl RatingScale {
    pub fn new(k: usize) -> Result<Self, RatingError> {
        if k < 2 {
            return Err(RatingError::ScaleTooSmall(k));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The default category `K`.
    pub fn default_category(&self) -> usize {
        self.k
    }

    pub fn check(&self, category: usize) -> Result<usize, RatingError> {
        if (1..=self.k).contains(&category) {
            Ok(category)
        } else {
            Err(RatingError::CategoryOutOfRange { category, k: self.k })
        }
    }

    /// Letter label: `A` for category 1, `B` for 2, and so on.
    pub fn label(&self, category: usize) -> String {
        if category <= 26 {
            char::from(b'A' + (category as u8 - 1)).to_string()
        } else {
            category.to_string()
        }
    }

    /// Parses a letter label or a 1-based category number.
    pub fn parse(&self, label: &str) -> Result<usize, RatingError> {
        let s = label.trim();
        let category = if let Ok(n) = s.parse::<usize>() {
            n
        } else {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_alphabetic() => {
                    (c.to_ascii_uppercase() as u8 - b'A') as usize + 1
                }
                _ => return Err(RatingError::UnknownLabel(s.to_string())),
            }
        };
        self.check(category)
    }
}

/// A validated row-stochastic matrix of migration probabilities over `horizon` years.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    horizon: f64,
    p: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn k(&self) -> usize {
        self.p.nrows()
    }
}

/// Checks squareness, entry range, unit row sums and an absorbing default row.
pub fn validate_transition_matrix(
    scale: RatingScale,
    horizon: f64,
    p: DMatrix<f64>,
) -> Result<TransitionMatrix, RatingError> {
    let k = scale.k();
    if p.nrows() != k || p.ncols() != k {
        return Err(RatingError::Dimension { expected: k, rows: p.nrows(), cols: p.ncols() });
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(RatingError::BadHorizon(horizon));
    }
    for (row, r) in p.row_iter().enumerate() {
        for (col, &value) in r.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(RatingError::NegativeEntry { row: row + 1, col: col + 1, value });
            }
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(RatingError::RowSum { row: row + 1, sum });
        }
    }
    if p[(k - 1, k - 1)] != 1.0 {
        return Err(RatingError::NonAbsorbingDefault);
    }
    Ok(TransitionMatrix { horizon, p })
}

/// Row-major convenience wrapper around [`validate_transition_matrix`].
pub fn transition_matrix_from_rows(
    scale: RatingScale,
    horizon: f64,
    rows: &[Vec<f64>],
) -> Result<TransitionMatrix, RatingError> {
    let k = scale.k();
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        return Err(RatingError::Dimension { expected: k, rows: rows.len(), cols });
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    validate_transition_matrix(scale, horizon, DMatrix::from_row_slice(k, k, &flat))
}

/// An intensity matrix: nonnegative off-diagonals, zero row sums, in 1/year.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    a: DMatrix<f64>,
}

impl GeneratorMatrix {
    /// Validates `a` as a generator. Off-diagonals within `-1e-12` of zero
    /// are clamped and the diagonal is recomputed from the row.
    pub fn new(a: DMatrix<f64>) -> Result<Self, RatingError> {
        let n = a.nrows();
        if a.ncols() != n || n == 0 {
            return Err(RatingError::Dimension { expected: n, rows: n, cols: a.ncols() });
        }
        let mut a = a;
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = a[(i, j)];
                if !v.is_finite() || v < -1e-12 {
                    return Err(RatingError::InvalidGenerator(format!(
                        "off-diagonal ({}, {}) = {v}",
                        i + 1,
                        j + 1
                    )));
                }
                if v < 0.0 {
                    a[(i, j)] = 0.0;
                }
                off += a[(i, j)];
            }
            if (a[(i, i)] + off).abs() > GENERATOR_ROW_TOL * (1.0 + off) {
                return Err(RatingError::InvalidGenerator(format!(
                    "row {} sums to {}",
                    i + 1,
                    a[(i, i)] + off
                )));
            }
            a[(i, i)] = -off;
        }
        Ok(Self { a })
    }

    /// Builds a generator from off-diagonal intensities; the diagonal is set
    /// to minus the row sum.
    pub fn from_off_diagonal(mut a: DMatrix<f64>) -> Result<Self, RatingError> {
        for i in 0..a.nrows() {
            a[(i, i)] = 0.0;
            let off: f64 = a.row(i).iter().sum();
            a[(i, i)] = -off;
        }
        Self::new(a)
    }

    pub fn zero(n: usize) -> Self {
        Self { a: DMatrix::zeros(n, n) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.a[(from, to)]
    }

    /// `exp(A·t)`.
    pub fn transition(&self, t: f64) -> DMatrix<f64> {
        (&self.a * t).exp()
    }

    /// Removes every transition into the last state (the default of a
    /// marginal chain), making that party default-free.
    pub fn without_default(&self) -> Self {
        let n = self.dim();
        let mut a = self.a.clone();
        for i in 0..n {
            a[(i, n - 1)] = 0.0;
        }
        Self::from_off_diagonal(a).expect("removing intensities keeps a valid generator")
    }
}

/// A generator recovered from a transition matrix, with the entrywise
/// reproduction error of `exp(G·h)`.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub generator: GeneratorMatrix,
    pub reproduction_error: f64,
}

/// Principal logarithm of `m`, regularized by clamping negative
/// off-diagonals and resetting the diagonal (diagonal adjustment).
pub fn generator_from_annual_matrix(m: &TransitionMatrix) -> Result<Embedding, RatingError> {
    let k = m.k();
    let log = linalg::logm(m.matrix()).map_err(|e| match e {
        LogFailure::NoRealLog => RatingError::NoRealLogarithm,
        LogFailure::NotConverged => RatingError::LogDivergence,
    })?;
    let mut g = log / m.horizon();
    for i in 0..k {
        for j in 0..k {
            if i != j && g[(i, j)] < 0.0 {
                g[(i, j)] = 0.0;
            }
        }
    }
    // default row is exactly absorbing
    g.row_mut(k - 1).fill(0.0);
    let generator = GeneratorMatrix::from_off_diagonal(g)?;
    let reproduction_error = linalg::max_abs_diff(&generator.transition(m.horizon()), m.matrix());
    if reproduction_error > EMBEDDING_TOL {
        return Err(RatingError::EmbeddingFailure { error: reproduction_error });
    }
    Ok(Embedding { generator, reproduction_error })
}
