//! Truncated coefficient spaces and dense complex linear algebra.
//!
//! Vectors are Fourier coefficient tables over an integer [`IndexWindow`];
//! operators are dense complex matrices between two windows. Weighted spaces
//! are handled in orthonormalized coordinates: a coefficient `f(n)` of an
//! element of `L^2_omega` becomes the coordinate `f(n) * omega(n)`, after which
//! every inner product is the standard one on `C^k`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::weighted_shift::Weight;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Dimension up to which singular values come from a full dense SVD.
pub const DENSE_SVD_LIMIT: usize = 512;

const MAX_ITERATIONS: usize = 20_000;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Inclusive range of Fourier indices `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexWindow {
    lo: i64,
    hi: i64,
}

impl IndexWindow {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidWindow { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// `[0, d]`, the shape used for truncations of `H^2`.
    pub fn hardy(d: usize) -> Self {
        Self { lo: 0, hi: d as i64 }
    }

    /// `[-m, m]`.
    pub fn symmetric(m: usize) -> Self {
        Self {
            lo: -(m as i64),
            hi: m as i64,
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: i64) -> bool {
        self.lo <= n && n <= self.hi
    }

    /// Position of index `n` inside the coefficient array.
    pub fn offset(&self, n: i64) -> Option<usize> {
        self.contains(n).then(|| (n - self.lo) as usize)
    }

    pub fn index_at(&self, offset: usize) -> i64 {
        self.lo + offset as i64
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

impl fmt::Display for IndexWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Truncated element of `H^2`, `L^2` or `L^2_omega`: the coefficients
/// `f(n)` for `n` in the window, plus the weight of the ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierVector {
    window: IndexWindow,
    coeffs: Vec<C64>,
    weight: Option<Arc<Weight>>,
}

impl FourierVector {
    pub fn new(window: IndexWindow, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != window.len() {
            return Err(Error::DimensionMismatch {
                expected: window.len(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            window,
            coeffs,
            weight: None,
        })
    }

    pub fn from_real(window: IndexWindow, coeffs: &[f64]) -> Result<Self> {
        Self::new(window, coeffs.iter().map(|&x| c(x)).collect())
    }

    pub fn zeros(window: IndexWindow) -> Self {
        Self {
            window,
            coeffs: vec![C64::default(); window.len()],
            weight: None,
        }
    }

    /// The coordinate vector `e_n`.
    pub fn unit(window: IndexWindow, n: i64) -> Result<Self> {
        let k = window.offset(n).ok_or(Error::InvalidWindow { lo: n, hi: n })?;
        let mut v = Self::zeros(window);
        v.coeffs[k] = c(1.0);
        Ok(v)
    }

    /// Attaches the weight of the ambient `L^2_omega`.
    pub fn with_weight(mut self, weight: Arc<Weight>) -> Self {
        self.weight = Some(weight);
        self
    }

    /// Builds a vector from orthonormalized coordinates (`f(n) * omega(n)`).
    pub fn from_orthonormal(
        window: IndexWindow,
        coords: &[C64],
        weight: Option<Arc<Weight>>,
    ) -> Result<Self> {
        let coeffs = match &weight {
            Some(w) => coords
                .iter()
                .zip(window.indices())
                .map(|(z, n)| z / w.value(n))
                .collect(),
            None => coords.to_vec(),
        };
        let v = Self::new(window, coeffs)?;
        Ok(match weight {
            Some(w) => v.with_weight(w),
            None => v,
        })
    }

    pub fn window(&self) -> IndexWindow {
        self.window
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn weight(&self) -> Option<&Arc<Weight>> {
        self.weight.as_ref()
    }

    /// `f(n)`, zero outside the window.
    pub fn coeff(&self, n: i64) -> C64 {
        self.window
            .offset(n)
            .map(|k| self.coeffs[k])
            .unwrap_or_default()
    }

    /// Coordinates in the orthonormal basis `e_n / omega(n)`.
    pub fn orthonormal_coords(&self) -> Vec<C64> {
        match &self.weight {
            Some(w) => self
                .coeffs
                .iter()
                .zip(self.window.indices())
                .map(|(z, n)| z * w.value(n))
                .collect(),
            None => self.coeffs.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.orthonormal_coords()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            window: self.window,
            coeffs: self.coeffs.iter().map(|z| z * s).collect(),
            weight: self.weight.clone(),
        }
    }

    /// Multiplication by `z^k` inside the window; coefficients pushed past
    /// either end are dropped.
    pub fn shifted(&self, k: i64) -> Self {
        let mut out = vec![C64::default(); self.coeffs.len()];
        for (j, z) in self.coeffs.iter().enumerate() {
            let t = j as i64 + k;
            if t >= 0 && (t as usize) < out.len() {
                out[t as usize] = *z;
            }
        }
        Self {
            window: self.window,
            coeffs: out,
            weight: self.weight.clone(),
        }
    }
}

fn same_weight(a: Option<&Arc<Weight>>, b: Option<&Arc<Weight>>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => Arc::ptr_eq(x, y) || x == y,
        _ => false,
    }
}

/// `sum_n f(n) conj(g(n)) omega(n)^2` over the shared window.
pub fn weighted_inner(f: &FourierVector, g: &FourierVector) -> Result<C64> {
    if f.window != g.window {
        return Err(Error::WindowMismatch {
            left: f.window,
            right: g.window,
        });
    }
    if !same_weight(f.weight(), g.weight()) {
        return Err(Error::WeightMismatch);
    }
    let mut acc = C64::default();
    for (n, (a, b)) in f.window.indices().zip(f.coeffs.iter().zip(&g.coeffs)) {
        let w = f.weight.as_ref().map_or(1.0, |w| w.value(n));
        acc += a * b.conj() * (w * w);
    }
    Ok(acc)
}

/// Dense complex matrix acting from `domain` coordinates to `codomain`
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOperator {
    domain: IndexWindow,
    codomain: IndexWindow,
    entries: CMatrix,
}

impl MatrixOperator {
    pub fn new(domain: IndexWindow, codomain: IndexWindow, entries: CMatrix) -> Result<Self> {
        if entries.nrows() != codomain.len() {
            return Err(Error::DimensionMismatch {
                expected: codomain.len(),
                got: entries.nrows(),
            });
        }
        if entries.ncols() != domain.len() {
            return Err(Error::DimensionMismatch {
                expected: domain.len(),
                got: entries.ncols(),
            });
        }
        Ok(Self {
            domain,
            codomain,
            entries,
        })
    }

    pub fn square(window: IndexWindow, entries: CMatrix) -> Result<Self> {
        Self::new(window, window, entries)
    }

    pub fn identity(window: IndexWindow) -> Self {
        let n = window.len();
        Self {
            domain: window,
            codomain: window,
            entries: CMatrix::identity(n, n),
        }
    }

    pub fn diagonal(window: IndexWindow, diag: &[C64]) -> Result<Self> {
        let d = CVector::from_column_slice(diag);
        Self::square(window, CMatrix::from_diagonal(&d))
    }

    pub fn domain(&self) -> IndexWindow {
        self.domain
    }

    pub fn codomain(&self) -> IndexWindow {
        self.codomain
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn is_square(&self) -> bool {
        self.entries.nrows() == self.entries.ncols()
    }

    pub fn require_square(&self) -> Result<()> {
        if self.is_square() && self.domain == self.codomain {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.entries.nrows(),
                cols: self.entries.ncols(),
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Entry at Fourier indices `(row, col)`.
    pub fn at(&self, row: i64, col: i64) -> C64 {
        match (self.codomain.offset(row), self.domain.offset(col)) {
            (Some(i), Some(j)) => self.entries[(i, j)],
            _ => C64::default(),
        }
    }

    /// `self * rhs`, i.e. apply `rhs` first.
    pub fn compose(&self, rhs: &MatrixOperator) -> Result<MatrixOperator> {
        if rhs.codomain != self.domain {
            return Err(Error::WindowMismatch {
                left: self.domain,
                right: rhs.codomain,
            });
        }
        Ok(Self {
            domain: rhs.domain,
            codomain: self.codomain,
            entries: &self.entries * &rhs.entries,
        })
    }

    pub fn sub(&self, rhs: &MatrixOperator) -> Result<MatrixOperator> {
        if self.domain != rhs.domain {
            return Err(Error::WindowMismatch {
                left: self.domain,
                right: rhs.domain,
            });
        }
        if self.codomain != rhs.codomain {
            return Err(Error::WindowMismatch {
                left: self.codomain,
                right: rhs.codomain,
            });
        }
        Ok(Self {
            domain: self.domain,
            codomain: self.codomain,
            entries: &self.entries - &rhs.entries,
        })
    }

    pub fn scale(&self, s: C64) -> MatrixOperator {
        Self {
            domain: self.domain,
            codomain: self.codomain,
            entries: &self.entries * s,
        }
    }

    pub fn adjoint(&self) -> MatrixOperator {
        Self {
            domain: self.codomain,
            codomain: self.domain,
            entries: self.entries.adjoint(),
        }
    }

    /// `self^k` for square operators.
    pub fn pow(&self, k: usize) -> Result<MatrixOperator> {
        self.require_square()?;
        let mut acc = CMatrix::identity(self.entries.nrows(), self.entries.ncols());
        let mut base = self.entries.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(Self {
            domain: self.domain,
            codomain: self.codomain,
            entries: acc,
        })
    }

    /// Applies the operator to a vector in the domain window, in
    /// orthonormalized coordinates.
    pub fn apply(&self, v: &FourierVector) -> Result<CVector> {
        if v.window() != self.domain {
            return Err(Error::WindowMismatch {
                left: self.domain,
                right: v.window(),
            });
        }
        Ok(&self.entries * CVector::from_vec(v.orthonormal_coords()))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(tol))
    }
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// All singular values, descending, by dense SVD. NaN throughout when the
/// input is not finite or the iteration does not converge.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Vec::new();
    }
    if check_finite(m).is_err() {
        return vec![f64::NAN; k];
    }
    let Some(svd) = m.clone().try_svd(false, false, f64::EPSILON, 10_000) else {
        return vec![f64::NAN; k];
    };
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rel * sigma_max`.
pub fn numerical_rank(sv: &[f64], rel: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s > rel * top).count()
}

/// Gram matrix of the smaller side: `A^H A` for tall, `A A^H` for wide.
fn small_gram(m: &CMatrix) -> CMatrix {
    if m.ncols() <= m.nrows() {
        m.adjoint() * m
    } else {
        m * m.adjoint()
    }
}

fn start_vector(n: usize) -> CVector {
    CVector::from_fn(n, |i, _| C64::new(1.0 + 0.37 * (i as f64).sin(), 0.11 * (i as f64).cos()))
}

fn power_iteration_sigma_max(m: &CMatrix, tol: f64) -> f64 {
    let g = small_gram(m);
    let mut v = start_vector(g.nrows());
    v /= C64::from(v.norm());
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let w = &g * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dotc(&w).re;
        v = w / C64::from(norm);
        if (next - lambda).abs() <= tol * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

fn inverse_iteration_sigma_min(m: &CMatrix, tol: f64) -> f64 {
    let g = small_gram(m);
    let Some(chol) = g.clone().cholesky() else {
        return 0.0;
    };
    let mut v = start_vector(g.nrows());
    v /= C64::from(v.norm());
    let mut mu = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let w = chol.solve(&v);
        let norm = w.norm();
        if !norm.is_finite() {
            return 0.0;
        }
        let next = v.dotc(&w).re;
        v = w / C64::from(norm);
        if (next - mu).abs() <= tol * next.abs() {
            mu = next;
            break;
        }
        mu = next;
    }
    if mu <= 0.0 {
        0.0
    } else {
        (1.0 / mu).sqrt()
    }
}

/// Largest singular value of a raw matrix.
pub fn matrix_spectral_norm(m: &CMatrix, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    check_finite(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    if m.nrows().min(m.ncols()) <= DENSE_SVD_LIMIT {
        Ok(singular_values(m)[0])
    } else {
        Ok(power_iteration_sigma_max(m, tol))
    }
}

/// Smallest of the `min(rows, cols)` singular values of a raw matrix.
pub fn matrix_smallest_singular_value(m: &CMatrix, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    check_finite(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    if m.nrows().min(m.ncols()) <= DENSE_SVD_LIMIT {
        Ok(*singular_values(m).last().unwrap())
    } else {
        Ok(inverse_iteration_sigma_min(m, tol))
    }
}

pub fn spectral_norm(a: &MatrixOperator, tol: f64) -> Result<f64> {
    matrix_spectral_norm(a.entries(), tol)
}

pub fn smallest_singular_value(a: &MatrixOperator, tol: f64) -> Result<f64> {
    matrix_smallest_singular_value(a.entries(), tol)
}

/// The operator `z -> (z, y) x`.
pub fn rank_one(x: &FourierVector, y: &FourierVector) -> MatrixOperator {
    let xs = CVector::from_vec(x.orthonormal_coords());
    let ys = CVector::from_vec(y.orthonormal_coords());
    MatrixOperator {
        domain: y.window(),
        codomain: x.window(),
        entries: &xs * ys.adjoint(),
    }
}

/// Matrix whose columns are the orthonormalized coordinates of `family`.
pub fn column_matrix(family: &[FourierVector]) -> Result<CMatrix> {
    let first = family.first().ok_or(Error::EmptyBasis)?;
    let window = first.window();
    let mut m = CMatrix::zeros(window.len(), family.len());
    for (j, v) in family.iter().enumerate() {
        if v.window() != window {
            return Err(Error::WindowMismatch {
                left: window,
                right: v.window(),
            });
        }
        m.set_column(j, &CVector::from_vec(v.orthonormal_coords()));
    }
    Ok(m)
}

/// `G[i][j] = (x_i, x_j)` for the columns `x_i`.
pub fn gram_matrix(columns: &CMatrix) -> CMatrix {
    (columns.adjoint() * columns).transpose()
}

/// Orthonormal basis of the column span (thin QR factor).
pub fn orthonormal_columns(m: &CMatrix) -> CMatrix {
    m.clone().qr().q()
}

/// `max |a_ij - b_ij|`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Truncated unilateral shift `e_n -> e_(n+1)` on a window.
pub fn shift_matrix(window: IndexWindow) -> MatrixOperator {
    let n = window.len();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        m[(i + 1, i)] = c(1.0);
    }
    MatrixOperator::identity(window).with_entries(m)
}

impl MatrixOperator {
    fn with_entries(mut self, entries: CMatrix) -> Self {
        self.entries = entries;
        self
    }
}
