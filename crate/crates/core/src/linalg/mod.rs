//! Dense complex linear algebra primitives: tensor products, partial
//! transpose and partial trace, Hermitian eigendecomposition, singular
//! values, and trace inner products.
//!
//! Index convention: subsystem A is always the slow (left Kronecker) factor
//! and B the fast factor, so a bipartite basis index reads
//! `(i_A, k_B) -> i * dim_b + k`. Every operation in the crate assumes this.

mod eig;
mod haar;
mod svd;

pub use eig::{herm_eig, HermEig};
pub use haar::{gaussian_matrix, haar_unitary};
pub use svd::singular_values;

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex<f64>;

/// Default cap on matrix dimension; keeps two-copy scenarios tractable.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Active dimension cap. `HQMODEL_MAX_DIM` overrides the default; the value
/// is read once per process.
pub fn max_dim() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("HQMODEL_MAX_DIM")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_MAX_DIM)
    })
}

/// Dense square matrix of complex entries, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("matrix dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in addition");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in subtraction");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in multiplication");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in comparison");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Tolerance-based equality: max-abs entrywise difference at most `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim && self.max_abs_diff(other) <= tol
    }

    /// Max |x[i][j] - conj(x[j][i])|.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut res = 0.0f64;
        for i in 0..self.dim {
            for j in 0..=i {
                res = res.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        res
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::add(self, other)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::sub(self, other)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, other: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(other)
    }
}

/// Exchange format: `{ "dim": n, "re": [...], "im": [...] }`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            dim: self.dim,
            re: self.entries.iter().map(|z| z.re).collect(),
            im: self.entries.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        let n = repr.dim * repr.dim;
        if repr.re.len() != n || repr.im.len() != n {
            return Err(serde::de::Error::custom(format!(
                "matrix of dim {} needs {} entries, got re: {}, im: {}",
                repr.dim,
                n,
                repr.re.len(),
                repr.im.len()
            )));
        }
        let entries = repr
            .re
            .iter()
            .zip(&repr.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        ComplexMatrix::new(repr.dim, entries).map_err(serde::de::Error::custom)
    }
}

/// A|B split of a total dimension `dim_a * dim_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bipartition {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl Bipartition {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        Self { dim_a, dim_b }
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::BipartitionMismatch {
                dim_a: self.dim_a,
                dim_b: self.dim_b,
                dim,
            });
        }
        Ok(())
    }
}

/// Kronecker product, left factor on the slow index.
pub fn tensor(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = x
        .dim()
        .checked_mul(y.dim())
        .filter(|&d| d <= max_dim())
        .ok_or(Error::DimensionLimit {
            requested: x.dim().saturating_mul(y.dim()),
            max: max_dim(),
        })?;
    let (dx, dy) = (x.dim(), y.dim());
    let mut out = ComplexMatrix::zeros(dim);
    for i in 0..dx {
        for j in 0..dx {
            let xij = x.get(i, j);
            for k in 0..dy {
                for l in 0..dy {
                    out.set(i * dy + k, j * dy + l, xij * y.get(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Transpose on the B factor only: out[(i,k),(j,l)] = x[(i,l),(j,k)].
pub fn partial_transpose(x: &ComplexMatrix, part: Bipartition) -> Result<ComplexMatrix> {
    part.check(x.dim())?;
    let (da, db) = (part.dim_a, part.dim_b);
    let mut out = ComplexMatrix::zeros(x.dim());
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out.set(i * db + k, j * db + l, x.get(i * db + l, j * db + k));
                }
            }
        }
    }
    Ok(out)
}

/// Trace out the B factor: out[i,j] = sum_k x[(i,k),(j,k)].
pub fn partial_trace_b(x: &ComplexMatrix, part: Bipartition) -> Result<ComplexMatrix> {
    part.check(x.dim())?;
    let (da, db) = (part.dim_a, part.dim_b);
    let mut out = ComplexMatrix::zeros(da);
    for i in 0..da {
        for j in 0..da {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..db {
                acc += x.get(i * db + k, j * db + k);
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Tr(x * y) without materializing the product.
pub fn hs_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<C64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    let n = x.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += x.get(i, j) * y.get(j, i);
        }
    }
    Ok(acc)
}

/// Tr((x ⊗ y) * rho) without materializing the Kronecker product.
pub fn product_expectation(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    rho: &ComplexMatrix,
    part: Bipartition,
) -> Result<C64> {
    part.check(rho.dim())?;
    if x.dim() != part.dim_a {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: part.dim_a,
        });
    }
    if y.dim() != part.dim_b {
        return Err(Error::DimensionMismatch {
            left: y.dim(),
            right: part.dim_b,
        });
    }
    let (da, db) = (part.dim_a, part.dim_b);
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..da {
        for j in 0..da {
            let xij = x.get(i, j);
            let mut inner = C64::new(0.0, 0.0);
            for k in 0..db {
                for l in 0..db {
                    // rho[(j,l),(i,k)]
                    inner += y.get(k, l) * rho.get(j * db + l, i * db + k);
                }
            }
            acc += xij * inner;
        }
    }
    Ok(acc)
}

/// Singular values of the dim_a x dim_b matricization of `psi`, descending.
pub fn schmidt_coefficients(psi: &[C64], part: Bipartition) -> Result<Vec<f64>> {
    if psi.len() != part.total() {
        return Err(Error::BipartitionMismatch {
            dim_a: part.dim_a,
            dim_b: part.dim_b,
            dim: psi.len(),
        });
    }
    Ok(singular_values(psi, part.dim_a, part.dim_b))
}

pub(crate) fn min_eigenvalue(x: &ComplexMatrix) -> Result<f64> {
    let eig = herm_eig(x)?;
    Ok(*eig.eigenvalues.last().expect("dim is positive"))
}

/// Checks that `x` is PSD up to the shared eigenvalue floor; returns the
/// minimum eigenvalue for reporting.
pub fn check_psd(x: &ComplexMatrix, check: &str) -> Result<f64> {
    let min = min_eigenvalue(x)?;
    if min < tol::EIG_FLOOR {
        return Err(Error::invariant(format!("{check} positivity"), -min));
    }
    Ok(min)
}
