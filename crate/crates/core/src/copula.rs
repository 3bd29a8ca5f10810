//! Markov-copula joint generators for dependent rating chains.
//!
//! Product states are indexed row-major: for two components `(i, h)` maps
//! to `(i−1)·K + (h−1)`, for three `(i, h, l)` maps to
//! `((i−1)·K + (h−1))·K + (l−1)`. Categories are 1-based throughout the
//! public API.

use std::io::{self, Write};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::rating::{GeneratorMatrix, RatingError};

/// Largest `|α1|`, `|α2|` accepted by [`change_measure`].
pub const MAX_MEASURE_EXPONENT: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CopulaError {
    #[error("common-jump weight must lie in [0, 1], got {0}")]
    BadAlpha(f64),
    #[error("marginal generators must share one scale ({0} vs {1} categories)")]
    ScaleMismatch(usize, usize),
    #[error(
        "intensity for state {from:?} -> {to:?} is {value}: the copula system has no nonnegative solution"
    )]
    NegativeIntensity { from: Vec<usize>, to: Vec<usize>, value: f64 },
    #[error("measure-change exponents must be finite with magnitude <= {MAX_MEASURE_EXPONENT}")]
    MeasureChangeOverflow,
    #[error(transparent)]
    Generator(#[from] RatingError),
}

/// Weight of simultaneous migrations to a common category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaSpec {
    alpha: f64,
}

impl CopulaSpec {
    pub fn new(alpha: f64) -> Result<Self, CopulaError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(CopulaError::BadAlpha(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn independent() -> Self {
        Self { alpha: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Exponents of the state-price vector `h_{ij} = exp(α1·i + α2·j)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasureChangeSpec {
    pub alpha1: f64,
    pub alpha2: f64,
}

/// Generator of the joint `(counterparty, investor[, reference])` chain.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGenerator {
    k: usize,
    n_components: usize,
    generator: GeneratorMatrix,
}

impl JointGenerator {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn n_states(&self) -> usize {
        self.k.pow(self.n_components as u32)
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.generator.matrix()
    }

    /// Row-major index of a product state given 1-based categories.
    pub fn index(&self, categories: &[usize]) -> usize {
        encode(self.k, categories)
    }

    /// 1-based categories of a product-state index.
    pub fn categories(&self, index: usize) -> Vec<usize> {
        decode(self.k, self.n_components, index)
    }

    /// Dumps the generator as CSV: a header of state labels, then one row
    /// per product state in index order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let label = |idx: usize| {
            self.categories(idx)
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("-")
        };
        let n = self.n_states();
        write!(w, "state")?;
        for j in 0..n {
            write!(w, ",{}", label(j))?;
        }
        writeln!(w)?;
        for i in 0..n {
            write!(w, "{}", label(i))?;
            for j in 0..n {
                write!(w, ",{:e}", self.matrix()[(i, j)])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub(crate) fn encode(k: usize, categories: &[usize]) -> usize {
    categories.iter().fold(0, |acc, &c| acc * k + (c - 1))
}

pub(crate) fn decode(k: usize, n: usize, mut index: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % k + 1;
        index /= k;
    }
    out
}

/// Bivariate Markov-copula generator.
///
/// Off-diagonal entries of the joint generator `A^X`:
/// - both components move to different categories: `0`;
/// - both move to the same category `j`: `α·min(a¹_{ij}, a²_{hj})`;
/// - only one moves: its marginal intensity minus the common-jump mass
///   already allotted, so the marginal row sums reproduce `a¹`, `a²`.
pub fn build_joint_generator(
    g1: &GeneratorMatrix,
    g2: &GeneratorMatrix,
    spec: CopulaSpec,
) -> Result<JointGenerator, CopulaError> {
    let k = g1.dim();
    if g2.dim() != k {
        return Err(CopulaError::ScaleMismatch(k, g2.dim()));
    }
    let alpha = spec.alpha();
    let a1 = g1.matrix();
    let a2 = g2.matrix();
    let n = k * k;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let check = |value: f64, from: [usize; 2], to: [usize; 2]| -> Result<f64, CopulaError> {
        if value < -1e-12 {
            return Err(CopulaError::NegativeIntensity {
                from: from.iter().map(|c| c + 1).collect(),
                to: to.iter().map(|c| c + 1).collect(),
                value,
            });
        }
        Ok(value.max(0.0))
    };

    for i in 0..k {
        for h in 0..k {
            let row = i * k + h;
            for j in 0..k {
                for l in 0..k {
                    let col = j * k + l;
                    if col == row {
                        continue;
                    }
                    let value = match (i != j, h != l) {
                        (true, true) if j == l => alpha * a1[(i, j)].min(a2[(h, l)]),
                        (true, true) => 0.0,
                        (true, false) => {
                            let common = if j != h { alpha * a1[(i, j)].min(a2[(h, j)]) } else { 0.0 };
                            check(a1[(i, j)] - common, [i, h], [j, l])?
                        }
                        (false, true) => {
                            let common = if l != i { alpha * a1[(i, l)].min(a2[(h, l)]) } else { 0.0 };
                            check(a2[(h, l)] - common, [i, h], [j, l])?
                        }
                        (false, false) => unreachable!(),
                    };
                    a[(row, col)] = value;
                }
            }
        }
    }
    Ok(JointGenerator { k, n_components: 2, generator: GeneratorMatrix::from_off_diagonal(a)? })
}

/// Trivariate generator: the counterparty–investor pair is coupled as in
/// [`build_joint_generator`]; the reference entity migrates independently,
/// i.e. `A¹² ⊗ I + I ⊗ A³`.
pub fn build_joint_generator_3(
    g1: &GeneratorMatrix,
    g2: &GeneratorMatrix,
    g3: &GeneratorMatrix,
    spec: CopulaSpec,
) -> Result<JointGenerator, CopulaError> {
    let pair = build_joint_generator(g1, g2, spec)?;
    let k = pair.k;
    if g3.dim() != k {
        return Err(CopulaError::ScaleMismatch(k, g3.dim()));
    }
    let a12 = pair.matrix();
    let a3 = g3.matrix();
    let n12 = k * k;
    let n = n12 * k;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for p in 0..n12 {
        for l in 0..k {
            let row = p * k + l;
            for q in 0..n12 {
                if q != p {
                    a[(row, q * k + l)] = a12[(p, q)];
                }
            }
            for m in 0..k {
                if m != l {
                    a[(row, p * k + m)] = a3[(l, m)];
                }
            }
        }
    }
    Ok(JointGenerator { k, n_components: 3, generator: GeneratorMatrix::from_off_diagonal(a)? })
}

/// Markovian change of measure `a_{uv} ↦ a_{uv}·h_v/h_u` with
/// `h = exp(α1·i + α2·j)` on the first two components.
pub fn change_measure(
    g: &JointGenerator,
    spec: MeasureChangeSpec,
) -> Result<JointGenerator, CopulaError> {
    let ok = |x: f64| x.is_finite() && x.abs() <= MAX_MEASURE_EXPONENT;
    if !ok(spec.alpha1) || !ok(spec.alpha2) {
        return Err(CopulaError::MeasureChangeOverflow);
    }
    if spec.alpha1 == 0.0 && spec.alpha2 == 0.0 {
        return Ok(g.clone());
    }
    let n = g.n_states();
    let log_h: Vec<f64> = (0..n)
        .map(|u| {
            let c = g.categories(u);
            spec.alpha1 * c[0] as f64 + spec.alpha2 * c[1] as f64
        })
        .collect();
    let mut a = g.matrix().clone();
    for u in 0..n {
        for v in 0..n {
            if u != v && a[(u, v)] != 0.0 {
                a[(u, v)] *= (log_h[v] - log_h[u]).exp();
            }
        }
    }
    Ok(JointGenerator {
        k: g.k,
        n_components: g.n_components,
        generator: GeneratorMatrix::from_off_diagonal(a)?,
    })
}
