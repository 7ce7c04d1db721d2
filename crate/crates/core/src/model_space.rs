//! Model spaces `K_u = H^2 minus u H^2` for finite atomic Clark measures.
//!
//! A Clark measure `sum a_n delta_(zeta_n)` determines a rational inner
//! function through `1 / (1 - u(z)) = sum a_n / (1 - z conj(zeta_n))`. With
//! `Q = prod (1 - z conj(zeta_n))` and `P = sum a_n prod_(m != n) (1 - z conj(zeta_m))`
//! this gives `u = (P - Q) / P`, and `K_u` is the space of `p / P` with
//! `deg p < n`. Every element of `K_u` is kept as an exact rational function;
//! inner products use Taylor expansions long enough that the geometric tails
//! are below double precision, and only the reported [`FourierVector`]s are
//! truncated to `[0, D]`.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    c, gram_matrix, matrix_spectral_norm, numerical_rank, shift_matrix, singular_values, CMatrix,
    FourierVector, IndexWindow, MatrixOperator, C64,
};
use crate::poly::{Poly, Rational};
use crate::{par, tol};

/// Longest Taylor expansion used for inner products.
pub const MAX_EXPANSION: usize = 1 << 18;

/// Largest padding allowed beyond `D` when assembling the intertwiners.
pub const MAX_PAD: usize = 2048;

const ATOM_SEPARATION: f64 = 1e-12;

/// Largest condition number of the Gram of `z^k / P` for which the basis is
/// orthonormalized by Cholesky when a Clark measure is also available.
pub const MONOMIAL_GRAM_CONDITION: f64 = 1e8;

fn circle_point(k: usize, count: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * k as f64 / count as f64)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn l2(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClarkMeasure {
    atoms: Vec<(C64, f64)>,
}

impl ClarkMeasure {
    /// Validates the atoms and rescales the masses to sum to 1.
    pub fn new(atoms: Vec<(C64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let mut total = 0.0;
        for (k, &(z, a)) in atoms.iter().enumerate() {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidMeasure(format!("mass {a} of atom {k} is not positive")));
            }
            if !((z.norm() - 1.0).abs() <= 1e-12) {
                return Err(Error::InvalidMeasure(format!("atom {k} is not on the unit circle")));
            }
            total += a;
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if (atoms[i].0 - atoms[j].0).norm() <= ATOM_SEPARATION {
                    return Err(Error::AtomCollision { first: i, second: j });
                }
            }
        }
        Ok(Self {
            atoms: atoms
                .into_iter()
                .map(|(z, a)| (z / z.norm(), a / total))
                .collect(),
        })
    }

    /// Equal masses at the `n`-th roots of unity (the measure of `z^n`).
    pub fn roots_of_unity(n: usize) -> Result<Self> {
        Self::new((0..n).map(|k| (circle_point(k, n), 1.0)).collect())
    }

    pub fn atoms(&self) -> &[(C64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Whether both measures charge the same set of points.
    pub fn same_support(&self, other: &ClarkMeasure) -> bool {
        self.len() == other.len()
            && self.atoms.iter().all(|(z, _)| {
                other
                    .atoms
                    .iter()
                    .any(|(w, _)| (z - w).norm() <= ATOM_SEPARATION)
            })
    }

    /// `prod (1 - z conj(zeta_n))`.
    pub fn q_poly(&self) -> Poly {
        self.atoms
            .iter()
            .fold(Poly::one(), |acc, (z, _)| acc.mul(&Poly::reflection_factor(*z)))
    }

    /// `prod_(m != n) (1 - z conj(zeta_m))`.
    pub fn cofactor(&self, n: usize) -> Poly {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != n)
            .fold(Poly::one(), |acc, (_, (z, _))| acc.mul(&Poly::reflection_factor(*z)))
    }

    /// `sum a_n prod_(m != n) (1 - z conj(zeta_m))`.
    pub fn p_poly(&self) -> Poly {
        (0..self.len()).fold(Poly::zero(), |acc, n| {
            acc.add(&self.cofactor(n).scale(c(self.atoms[n].1)))
        })
    }

    /// `sum a_n / (1 - z conj(zeta_n))` for `|z| <= 1` off the atoms.
    pub fn cauchy_transform(&self, z: C64) -> C64 {
        self.atoms
            .iter()
            .map(|(w, a)| c(*a) / (c(1.0) - z * w.conj()))
            .sum()
    }

    fn atom_at(&self, z: C64) -> Option<usize> {
        self.atoms.iter().position(|(w, _)| (z - w).norm() <= ATOM_SEPARATION)
    }

    /// `1 - 1 / C(z)` with `C` the Cauchy transform; `1` on the atoms.
    ///
    /// On the circle `Re C = 1/2`, so this stays accurate where the
    /// polynomial form `(P - Q) / P` cancels badly near clustered atoms.
    pub fn inner_value(&self, z: C64) -> C64 {
        if self.atom_at(z).is_some() {
            return c(1.0);
        }
        c(1.0) - c(1.0) / self.cauchy_transform(z)
    }
}

/// Invariant measurements of a rational inner function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerDiagnostics {
    /// `max | |u(zeta)| - 1 |` over the circle samples.
    pub unimodularity: f64,
    /// `| |num / den| - 1 |` for the stored coefficients. Equal to
    /// `unimodularity` unless a Clark measure supplies the values.
    pub coefficient_unimodularity: f64,
    pub value_at_zero: f64,
    pub min_pole_modulus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalInner {
    num: Poly,
    den: Poly,
    measure: Option<ClarkMeasure>,
    diagnostics: InnerDiagnostics,
}

/// Tolerance for `| |u| - 1 |` on the circle samples.
pub const UNIMODULAR_TOL: f64 = 1e-9;
/// Tolerance for `|u(0)|`.
pub const ORIGIN_TOL: f64 = 1e-12;

impl RationalInner {
    /// Checks `|u| = 1` on the circle samples, `u(0) = 0` and poles outside
    /// the closed disk.
    pub fn new(num: Poly, den: Poly, measure: Option<ClarkMeasure>) -> Result<Self> {
        if den.coeff(0).norm() == 0.0 {
            return Err(Error::NotInner("denominator vanishes at 0".into()));
        }
        let r = Rational::new(num.clone(), den.clone());
        let deviation = |f: &dyn Fn(C64) -> C64| {
            (0..tol::CIRCLE_SAMPLES)
                .map(|k| (f(circle_point(k, tol::CIRCLE_SAMPLES)).norm() - 1.0).abs())
                .fold(0.0, f64::max)
        };
        let coefficient_unimodularity = deviation(&|z| r.eval(z));
        let unimodularity = match &measure {
            Some(m) => deviation(&|z| m.inner_value(z)),
            None => coefficient_unimodularity,
        };
        if !(unimodularity <= UNIMODULAR_TOL) {
            return Err(Error::NotInner(format!(
                "| |u| - 1 | = {unimodularity:e} on the circle"
            )));
        }
        let value_at_zero = r.eval(C64::default()).norm();
        if value_at_zero > ORIGIN_TOL {
            return Err(Error::NotInner(format!("|u(0)| = {value_at_zero:e}")));
        }
        let min_pole_modulus = r.min_pole_modulus();
        if !(min_pole_modulus > 1.0) {
            return Err(Error::NotInner(format!(
                "pole of modulus {min_pole_modulus} inside the closed disk"
            )));
        }
        Ok(Self {
            num,
            den,
            measure,
            diagnostics: InnerDiagnostics {
                unimodularity,
                coefficient_unimodularity,
                value_at_zero,
                min_pole_modulus,
            },
        })
    }

    /// `u(z) = z^n`, carrying its Clark measure.
    pub fn monomial(n: usize) -> Result<Self> {
        Self::new(Poly::monomial(n), Poly::one(), Some(ClarkMeasure::roots_of_unity(n)?))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn measure(&self) -> Option<&ClarkMeasure> {
        self.measure.as_ref()
    }

    pub fn diagnostics(&self) -> InnerDiagnostics {
        self.diagnostics
    }

    pub fn degree(&self) -> usize {
        self.num.degree()
    }

    pub fn rational(&self) -> Rational {
        Rational::new(self.num.clone(), self.den.clone())
    }

    /// Through the Clark measure when present, otherwise `num / den`.
    pub fn eval(&self, z: C64) -> C64 {
        match &self.measure {
            Some(m) => m.inner_value(z),
            None => self.num.eval(z) / self.den.eval(z),
        }
    }

    /// Numerator of `1 - u` over the same denominator, scaled so its value
    /// at 0 is 1.
    pub fn normalized_q(&self) -> Poly {
        let q = self.den.sub(&self.num);
        q.scale(c(1.0) / q.coeff(0))
    }

    /// Taylor length after which every expansion over this denominator has
    /// dropped below double precision.
    pub fn expansion_len(&self, at_least: usize) -> Result<usize> {
        expansion_len_for(self.diagnostics.min_pole_modulus, at_least + self.degree())
    }
}

fn expansion_len_for(rho: f64, at_least: usize) -> Result<usize> {
    let base = at_least + 64;
    if rho.is_infinite() {
        return Ok(base);
    }
    let need = (85.0 / rho.ln()).ceil();
    if !(need.is_finite() && need < MAX_EXPANSION as f64) {
        return Err(Error::TruncationTooSmall(format!(
            "pole modulus {rho} needs more than {MAX_EXPANSION} Taylor coefficients"
        )));
    }
    Ok(base + need as usize)
}

/// Inner function of a finite atomic Clark measure: `u = (P - Q) / P`.
pub fn clark_inner(sigma: &ClarkMeasure) -> Result<RationalInner> {
    let q = sigma.q_poly();
    let p = sigma.p_poly();
    let mut num = p.sub(&q).coeffs().to_vec();
    if let Some(first) = num.first_mut() {
        *first = C64::default();
    }
    let num = Poly::new(num).trimmed(1e-14);
    let den = p.trimmed(1e-14);
    RationalInner::new(num, den, Some(sigma.clone()))
}

/// Element `num / den` of a model space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFunction {
    pub rational: Rational,
    /// Taylor coefficients `0..expansion_len`.
    pub expansion: Vec<C64>,
}

impl ModelFunction {
    fn new(rational: Rational, len: usize) -> Self {
        let expansion = rational.taylor(len);
        Self { rational, expansion }
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.rational.eval(z)
    }

    pub fn truncated(&self, window: IndexWindow) -> FourierVector {
        let coeffs = (0..window.len())
            .map(|k| self.expansion.get(k).copied().unwrap_or_default())
            .collect();
        FourierVector::new(window, coeffs).expect("finite Taylor coefficients")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpaceRep {
    inner: RationalInner,
    window: IndexWindow,
    ortho: Vec<ModelFunction>,
    clark: Vec<ModelFunction>,
    ortho_basis: Vec<FourierVector>,
    clark_basis: Vec<FourierVector>,
    u_expansion: Vec<C64>,
    expansion_len: usize,
    gram_residual: f64,
    membership_residual: f64,
}

impl ModelSpaceRep {
    pub fn inner(&self) -> &RationalInner {
        &self.inner
    }

    pub fn dim(&self) -> usize {
        self.ortho.len()
    }

    pub fn window(&self) -> IndexWindow {
        self.window
    }

    /// Orthonormal basis truncated to `[0, D]`.
    pub fn ortho_basis(&self) -> &[FourierVector] {
        &self.ortho_basis
    }

    /// Images of the normalized atoms under the Clark unitary, truncated.
    pub fn clark_basis(&self) -> &[FourierVector] {
        &self.clark_basis
    }

    pub fn ortho_functions(&self) -> &[ModelFunction] {
        &self.ortho
    }

    pub fn clark_functions(&self) -> &[ModelFunction] {
        &self.clark
    }

    pub fn expansion_len(&self) -> usize {
        self.expansion_len
    }

    /// `max |(b_i, b_j) - delta_ij|` over the untruncated basis.
    pub fn gram_residual(&self) -> f64 {
        self.gram_residual
    }

    /// `max |(b_j, u z^k)|` for `k = 0..=D - deg u`.
    pub fn membership_residual(&self) -> f64 {
        self.membership_residual
    }

    /// `(f, u z^k)` for `k = 0..=top`, from Taylor expansions.
    fn u_pairings(&self, f: &[C64], top: usize) -> Vec<C64> {
        let u = &self.u_expansion;
        (0..=top)
            .map(|k| {
                f.iter()
                    .skip(k)
                    .zip(u.iter())
                    .map(|(a, b)| a * b.conj())
                    .sum()
            })
            .collect()
    }

    /// Coordinates of `f` in the orthonormal basis.
    pub fn coordinates(&self, f: &[C64]) -> Vec<C64> {
        self.ortho.iter().map(|b| dot(f, &b.expansion)).collect()
    }

    /// `f - P_K f`, from Taylor expansions.
    pub fn projection_defect(&self, f: &[C64]) -> Vec<C64> {
        let coords = self.coordinates(f);
        let mut r = f.to_vec();
        for (a, b) in coords.iter().zip(&self.ortho) {
            for (x, y) in r.iter_mut().zip(&b.expansion) {
                *x -= a * y;
            }
        }
        r
    }
}

/// Orthonormal basis of `K_u` from the Gram matrix of `z^k / P`, `k < deg u`.
pub fn model_space_basis(u: &RationalInner, d: usize) -> Result<ModelSpaceRep> {
    let n = u.degree();
    if d < 2 * n + 16 {
        return Err(Error::TruncationTooSmall(format!(
            "D = {d} is below 2 deg u + 16 = {}",
            2 * n + 16
        )));
    }
    let len = u.expansion_len(d + 1)?;
    let raw: Vec<Vec<C64>> = (0..n)
        .map(|k| Rational::new(Poly::monomial(k), u.den().clone()).taylor(len))
        .collect();
    let mut e = CMatrix::zeros(len, n);
    for (j, col) in raw.iter().enumerate() {
        e.set_column(j, &DVector::from_column_slice(col));
    }
    let g = e.adjoint() * &e;
    let sv = singular_values(&g);
    let rank = numerical_rank(&sv, 1e-13);
    let well_conditioned = numerical_rank(&sv, MONOMIAL_GRAM_CONDITION.recip()) == n;
    let window = IndexWindow::hardy(d);
    let ortho: Vec<ModelFunction> = match (well_conditioned || (rank == n && u.measure().is_none()), u.measure()) {
        (true, _) => {
            let l = g
                .cholesky()
                .ok_or(Error::DimensionMismatch { expected: n, got: rank })?
                .unpack();
            let linv_h = l
                .adjoint()
                .try_inverse()
                .ok_or(Error::DimensionMismatch { expected: n, got: rank })?;
            (0..n)
                .map(|j| {
                    let num = Poly::new((0..n).map(|k| linv_h[(k, j)]).collect());
                    ModelFunction::new(Rational::new(num, u.den().clone()), len)
                })
                .collect()
        }
        // Normalized reproducing kernels at the atoms.
        (false, Some(sigma)) => clark_functions(sigma, u.den(), len),
        (false, None) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rank,
            })
        }
    };
    let clark: Vec<ModelFunction> = match u.measure() {
        Some(sigma) => clark_functions(sigma, u.den(), len),
        None => Vec::new(),
    };
    let mut rep = ModelSpaceRep {
        inner: u.clone(),
        window,
        ortho_basis: ortho.iter().map(|f| f.truncated(window)).collect(),
        clark_basis: clark.iter().map(|f| f.truncated(window)).collect(),
        ortho,
        clark,
        u_expansion: u.rational().taylor(len),
        expansion_len: len,
        gram_residual: 0.0,
        membership_residual: 0.0,
    };
    let mut gram_residual = 0.0f64;
    for (i, a) in rep.ortho.iter().enumerate() {
        for (j, b) in rep.ortho.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((dot(&a.expansion, &b.expansion) - c(target)).norm());
        }
    }
    let top = d.saturating_sub(n);
    let membership_residual = rep
        .ortho
        .iter()
        .flat_map(|f| rep.u_pairings(&f.expansion, top))
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    rep.gram_residual = gram_residual;
    rep.membership_residual = membership_residual;
    Ok(rep)
}

/// `V_u (delta_n / sqrt(a_n)) = sqrt(a_n) prod_(m != n) (1 - z conj(zeta_m)) / P`.
/// `sqrt(a_n) prod_(m != n) (1 - z conj(zeta_m)) / P` over the stored
/// denominator of `u`.
fn clark_functions(sigma: &ClarkMeasure, den: &Poly, len: usize) -> Vec<ModelFunction> {
    (0..sigma.len())
        .map(|n| {
            let num = sigma.cofactor(n).scale(c(sigma.atoms()[n].1.sqrt()));
            ModelFunction::new(Rational::new(num, den.clone()), len)
        })
        .collect()
}

fn check_unimodular_point(zeta: C64) -> Result<()> {
    if (zeta.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::ParameterOutOfRange {
            name: "|zeta|",
            value: zeta.norm(),
        });
    }
    Ok(())
}

/// `k_(u,zeta) = (1 - conj(u(zeta)) u) / (1 - conj(zeta) z)` as a rational
/// function over the denominator of `u`.
pub fn kernel_rational(u: &RationalInner, zeta: C64) -> Result<Rational> {
    check_unimodular_point(zeta)?;
    let scale = u.den().coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if u.den().eval(zeta).norm() <= 1e-12 * scale {
        return Err(Error::BoundarySingularity(format!("{zeta}")));
    }
    let uz = u.eval(zeta);
    let numerator = u.den().sub(&u.num().scale(uz.conj()));
    let (quotient, _) = numerator.deflate_root(zeta);
    Ok(Rational::new(quotient.scale(-zeta), u.den().clone()))
}

/// Taylor coefficients of the reproducing kernel on `[0, D]`.
pub fn reproducing_kernel(u: &RationalInner, zeta: C64, d: usize) -> Result<FourierVector> {
    if d < 2 * u.degree() {
        return Err(Error::TruncationTooSmall(format!(
            "D = {d} is below 2 deg u = {}",
            2 * u.degree()
        )));
    }
    let k = kernel_rational(u, zeta)?;
    FourierVector::new(IndexWindow::hardy(d), k.taylor(d + 1))
}

/// `max |(f, k_zeta) - f(zeta)|` over the orthonormal basis and the points.
pub fn reproducing_residual(rep: &ModelSpaceRep, points: &[C64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &zeta in points {
        let k = kernel_rational(rep.inner(), zeta)?.taylor(rep.expansion_len());
        for f in rep.ortho_functions() {
            worst = worst.max((dot(&f.expansion, &k) - f.eval(zeta)).norm());
        }
    }
    Ok(worst)
}

/// Matrix of `P_K S` on `K_u` in the orthonormal basis: entries `(z b_j, b_i)`.
pub fn compressed_shift(rep: &ModelSpaceRep) -> Result<MatrixOperator> {
    let n = rep.dim();
    let w = IndexWindow::hardy(n.saturating_sub(1));
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut zf = vec![C64::default()];
        zf.extend_from_slice(&rep.ortho[j].expansion);
        for i in 0..n {
            m[(i, j)] = dot(&zf, &rep.ortho[i].expansion);
        }
    }
    MatrixOperator::square(w, m)
}

/// Largest deviation between [`compressed_shift`] and the closed form
/// `P_K (z f) = z f - (f, P_+(u conj z)) u`, including how far the closed
/// form lands outside `K_u`.
pub fn compressed_shift_formula_residual(rep: &ModelSpaceRep) -> Result<f64> {
    let m = compressed_shift(rep)?;
    let len = rep.expansion_len();
    let u = &rep.u_expansion;
    let u_down: Vec<C64> = u.iter().skip(1).copied().collect();
    let mut worst = 0.0f64;
    for (j, f) in rep.ortho.iter().enumerate() {
        let pairing = dot(&f.expansion, &u_down);
        let mut g = vec![C64::default(); len + 1];
        for (k, a) in f.expansion.iter().enumerate() {
            g[k + 1] += a;
        }
        for (k, b) in u.iter().enumerate() {
            g[k] -= pairing * b;
        }
        for i in 0..rep.dim() {
            worst = worst.max((dot(&g, &rep.ortho[i].expansion) - m.entries()[(i, j)]).norm());
        }
        g.truncate(len);
        worst = worst.max(l2(&rep.projection_defect(&g)));
    }
    Ok(worst)
}

/// `max |(1 - u(z))^(-1) - sum a_n / (1 - z conj(zeta_n))|` on `|z| = 1/2`.
pub fn measure_residual(u: &RationalInner, sigma: &ClarkMeasure) -> f64 {
    (0..64)
        .map(|k| {
            let z = circle_point(k, 64) * 0.5;
            (c(1.0) / (c(1.0) - u.eval(z)) - sigma.cauchy_transform(z)).norm()
        })
        .fold(0.0, f64::max)
}

/// Matrix of `V_u` from atom coordinates (`delta_n / sqrt(a_n)`) to the
/// orthonormal basis of `K_u`.
pub fn clark_unitary(rep: &ModelSpaceRep, sigma: &ClarkMeasure) -> Result<MatrixOperator> {
    let residual = measure_residual(rep.inner(), sigma);
    if !(residual <= tol::ITERATIVE) {
        return Err(Error::MeasureMismatch { residual });
    }
    if sigma.len() != rep.dim() {
        return Err(Error::DimensionMismatch {
            expected: rep.dim(),
            got: sigma.len(),
        });
    }
    let clark = clark_functions(sigma, rep.inner().den(), rep.expansion_len());
    let n = rep.dim();
    let mut v = CMatrix::zeros(n, n);
    for (j, f) in clark.iter().enumerate() {
        for (i, coord) in rep.coordinates(&f.expansion).into_iter().enumerate() {
            v[(i, j)] = coord;
        }
    }
    let w = IndexWindow::hardy(n - 1);
    MatrixOperator::square(w, v)
}

/// `max |(V^* V - I)_ij|`.
pub fn unitarity_residual(v: &MatrixOperator) -> f64 {
    let g = v.entries().adjoint() * v.entries();
    let n = g.nrows();
    crate::linalg::max_abs_diff(&g, &CMatrix::identity(n, n))
}

/// Recovers atom coordinates from `f = V_u gamma` by boundary evaluation
/// `f(zeta_n) = (f, k_(u,zeta_n))` and returns the largest error.
pub fn clark_round_trip_residual(
    rep: &ModelSpaceRep,
    sigma: &ClarkMeasure,
    gamma: &[C64],
) -> Result<f64> {
    let v = clark_unitary(rep, sigma)?;
    let coords = v.entries() * DVector::from_column_slice(gamma);
    let len = rep.expansion_len();
    let mut f = vec![C64::default(); len];
    for (a, b) in coords.iter().zip(rep.ortho_functions()) {
        for (x, y) in f.iter_mut().zip(&b.expansion) {
            *x += a * y;
        }
    }
    let mut worst = 0.0f64;
    for (&(zeta, a), g) in sigma.atoms().iter().zip(gamma) {
        let k = kernel_rational(rep.inner(), zeta)?.taylor(len);
        let value = dot(&f, &k);
        worst = worst.max((value * a.sqrt() - g).norm());
    }
    Ok(worst)
}

/// The multiplier `phi0 = (1 - v) / (1 - u)` with its checks at truncation scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi0 {
    pub phi0: Rational,
    /// `max_j ||(I - P_(K_v)) (phi0 b_j)||` over the orthonormal basis of `K_u`.
    pub containment_residual: f64,
    /// Singular values of multiplication by `phi0` from `K_u` to `K_v`.
    pub density_singular_values: Vec<f64>,
    pub density_rank: usize,
    pub dim_v: usize,
}

impl Phi0 {
    /// Smallest singular value among the first `dim K_v`.
    pub fn density_smallest(&self) -> f64 {
        self.density_singular_values
            .get(self.dim_v.saturating_sub(1))
            .copied()
            .unwrap_or(0.0)
    }
}

/// `phi0 = (1 - v) / (1 - u)`.
///
/// With a common atom set `1 - u = Q / P_u` and `1 - v = Q / P_v`, so
/// `phi0 = P_u / P_v`. Containment `phi0 K_u in K_v` and density of the
/// image are measured on model-space bases built at truncation `D`.
pub fn multiplier_phi0(u: &RationalInner, v: &RationalInner, d: usize) -> Result<Phi0> {
    if let (Some(su), Some(sv)) = (u.measure(), v.measure()) {
        if !su.same_support(sv) {
            return Err(Error::UnequalSupports);
        }
    }
    let qu = u.normalized_q();
    let qv = v.normalized_q();
    let gap = (0..qu.coeffs().len().max(qv.coeffs().len()))
        .map(|k| (qu.coeff(k) - qv.coeff(k)).norm())
        .fold(0.0, f64::max);
    if gap > 1e-9 {
        return Err(Error::UnequalSupports);
    }
    let s = v.den().coeff(0) / u.den().coeff(0);
    let phi0 = Rational::new(u.den().scale(s), v.den().clone());

    let rep_u = model_space_basis(u, d)?;
    let rep_v = model_space_basis(v, d)?;
    let len = rep_u.expansion_len().max(rep_v.expansion_len());
    let rep_v = if rep_v.expansion_len() < len {
        extend(&rep_v, len)?
    } else {
        rep_v
    };
    let mut containment = 0.0f64;
    let mut dens = CMatrix::zeros(rep_v.dim(), rep_u.dim());
    for (j, b) in rep_u.ortho_functions().iter().enumerate() {
        // b = num_b / P_u, so phi0 b = s num_b / P_v.
        debug_assert_eq!(&b.rational.den, u.den());
        let g = Rational::new(b.rational.num.scale(s), v.den().clone()).taylor(len);
        containment = containment.max(l2(&rep_v.projection_defect(&g)));
        for (i, coord) in rep_v.coordinates(&g).into_iter().enumerate() {
            dens[(i, j)] = coord;
        }
    }
    if !(containment.is_finite() && dens.iter().all(|z| z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite);
    }
    let sv = singular_values(&dens);
    Ok(Phi0 {
        phi0,
        containment_residual: containment,
        density_rank: numerical_rank(&sv, 1e-10),
        density_singular_values: sv,
        dim_v: rep_v.dim(),
    })
}

fn extend(rep: &ModelSpaceRep, len: usize) -> Result<ModelSpaceRep> {
    let mut out = rep.clone();
    for f in out.ortho.iter_mut().chain(out.clark.iter_mut()) {
        f.expansion = f.rational.taylor(len);
    }
    out.u_expansion = rep.inner.rational().taylor(len);
    out.expansion_len = len;
    Ok(out)
}

/// `sup |phi0|` over the circle samples and the given extra points.
pub fn sup_on_circle(r: &Rational, extra: &[C64]) -> f64 {
    (0..tol::CIRCLE_SAMPLES)
        .map(|k| circle_point(k, tol::CIRCLE_SAMPLES))
        .chain(extra.iter().copied())
        .map(|z| r.eval(z).norm())
        .fold(0.0, f64::max)
}

/// `sup |phi0|` over the circle samples and `extra`, evaluated as
/// `C_u / C_v` from the Cauchy transforms of the two measures and as the mass
/// ratio on a shared atom.
pub fn phi0_sup_from_measures(sigma_u: &ClarkMeasure, sigma_v: &ClarkMeasure, extra: &[C64]) -> f64 {
    (0..tol::CIRCLE_SAMPLES)
        .map(|k| circle_point(k, tol::CIRCLE_SAMPLES))
        .chain(extra.iter().copied())
        .map(|z| match (sigma_u.atom_at(z), sigma_v.atom_at(z)) {
            (Some(i), Some(j)) => sigma_u.atoms[i].1 / sigma_v.atoms[j].1,
            _ => (sigma_u.cauchy_transform(z) / sigma_v.cauchy_transform(z)).norm(),
        })
        .fold(0.0, f64::max)
}

/// Bound `2 C + sup h` on `||phi0||_inf` when the density `h` of `sigma_u`
/// against `sigma_v` is `C`-Lipschitz on the closed disk.
pub fn lipschitz_phi0_bound(lipschitz: f64, sup_h: f64) -> f64 {
    2.0 * lipschitz + sup_h
}

/// Truncated operators of the multiplier construction and their checks.
#[derive(Debug, Clone, PartialEq)]
pub struct TxyReport {
    pub t: MatrixOperator,
    pub x: MatrixOperator,
    pub y: MatrixOperator,
    pub c: C64,
    pub c_variance: f64,
    /// Largest index on which the identities are asserted.
    pub interior: usize,
    pub ys_ty_residual: f64,
    pub xt_sx_residual: f64,
    pub xy_phi_residual: f64,
    /// Numerical rank of `T - S` on `[0, D]`.
    pub defect_rank: usize,
    pub x_smallest_singular_value: f64,
    pub y_smallest_singular_value: f64,
    /// Padding beyond `D` used while assembling.
    pub pad: usize,
}

fn toeplitz(r: &Rational, len: usize) -> CMatrix {
    let t = r.taylor(len);
    CMatrix::from_fn(len, len, |i, j| if i >= j { t[i - j] } else { C64::default() })
}

fn projector(rep: &ModelSpaceRep, len: usize) -> CMatrix {
    let mut b = CMatrix::zeros(len, rep.dim());
    for (j, f) in rep.ortho_functions().iter().enumerate() {
        for i in 0..len {
            b[(i, j)] = f.expansion.get(i).copied().unwrap_or_default();
        }
    }
    &b * b.adjoint()
}

fn block_residual(m: &CMatrix, top: usize) -> f64 {
    m.view((0, 0), (top + 1, top + 1))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// The unimodular `c` with `phi0 = c v conj(u) conj(phi0)` on the circle:
/// sample mean and sample variance.
pub fn unimodular_constant(u: &RationalInner, v: &RationalInner, phi0: &Rational) -> (C64, f64) {
    let samples: Vec<C64> = (0..tol::CIRCLE_SAMPLES)
        .map(|k| {
            let z = circle_point(k, tol::CIRCLE_SAMPLES);
            let p = phi0.eval(z);
            p / (v.eval(z) * u.eval(z).conj() * p.conj())
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<C64>() / n;
    let var = samples.iter().map(|s| (s - mean).norm_sqr()).sum::<f64>() / n;
    (mean, var)
}

/// `Y(uh + f) = vh + phi0 f`, `X(vh + g) = u phi0 h + g` and
/// `T = S + (v - phi0 u) (x) P_+(v conj z) / (conj(c) phi0(0))`, truncated to
/// `[0, D]`, with the identities `YS = TY`, `XT = SX`, `XY = phi0(S)`
/// measured on indices `0..=D - deg u - deg v`.
pub fn build_txy(u: &RationalInner, v: &RationalInner, phi0: &Rational, d: usize) -> Result<TxyReport> {
    let phi_at_0 = phi0.eval(C64::default());
    if phi_at_0.norm() < 1e-14 {
        return Err(Error::ZeroPhi0);
    }
    let deg = u.degree() + v.degree();
    if d < deg + 1 {
        return Err(Error::TruncationTooSmall(format!(
            "D = {d} leaves no interior beyond deg u + deg v = {deg}"
        )));
    }
    let (cst, c_variance) = unimodular_constant(u, v, phi0);
    if !(c_variance < tol::ITERATIVE) {
        return Err(Error::NonconstantConstant { variance: c_variance });
    }
    let rho = u
        .diagnostics()
        .min_pole_modulus
        .min(v.diagnostics().min_pole_modulus)
        .min(phi0.min_pole_modulus());
    let pad = if rho.is_infinite() {
        32
    } else {
        let need = (85.0 / rho.ln()).ceil();
        if !(need <= MAX_PAD as f64) {
            return Err(Error::TruncationTooSmall(format!(
                "pole modulus {rho} needs padding beyond {MAX_PAD}"
            )));
        }
        (need as usize).max(32)
    };
    let big = d + pad;
    let len = big + 1;
    let rep_u = model_space_basis(u, big.max(2 * u.degree() + 16))?;
    let rep_v = model_space_basis(v, big.max(2 * v.degree() + 16))?;
    let mu = toeplitz(&u.rational(), len);
    let mv = toeplitz(&v.rational(), len);
    let mphi = toeplitz(phi0, len);
    let bu = projector(&rep_u, len);
    let bv = projector(&rep_v, len);
    let s = shift_matrix(IndexWindow::hardy(big)).into_entries();

    let y = &mv * mu.adjoint() + &mphi * &bu;
    let x = &mu * &mphi * mv.adjoint() + &bv;

    let v_coeffs = v.rational().taylor(len + 1);
    let scale = c(1.0) / (cst.conj() * phi_at_0);
    let w: DVector<C64> = DVector::from_fn(len, |k, _| v_coeffs[k + 1] * scale);
    let phi_u = phi0.mul(&u.rational()).taylor(len);
    let r: DVector<C64> = DVector::from_fn(len, |k, _| v_coeffs[k] - phi_u[k]);
    let t = &s + &r * w.adjoint();

    let interior = d - deg;
    let ys_ty = &y * &s - &t * &y;
    let xt_sx = &x * &t - &s * &x;
    let xy_phi = &x * &y - &mphi;

    let window = IndexWindow::hardy(d);
    let cut = |m: &CMatrix| m.view((0, 0), (d + 1, d + 1)).into_owned();
    let t_d = cut(&t);
    let x_d = cut(&x);
    let y_d = cut(&y);
    let defect = &t_d - cut(&s);
    let defect_rank = numerical_rank(&singular_values(&defect), 1e-10);
    let x_sv = singular_values(&x_d);
    let y_sv = singular_values(&y_d);

    Ok(TxyReport {
        t: MatrixOperator::square(window, t_d)?,
        x: MatrixOperator::square(window, x_d)?,
        y: MatrixOperator::square(window, y_d)?,
        c: cst,
        c_variance,
        interior,
        ys_ty_residual: block_residual(&ys_ty, interior),
        xt_sx_residual: block_residual(&xt_sx, interior),
        xy_phi_residual: block_residual(&xy_phi, interior),
        defect_rank,
        x_smallest_singular_value: *x_sv.last().unwrap(),
        y_smallest_singular_value: *y_sv.last().unwrap(),
        pad,
    })
}

/// `f -> u conj(z) conj(f)` applied to a Taylor expansion; the negative
/// frequencies (which vanish exactly when `f` lies in `K_u`) are dropped.
fn conjugation(u: &[C64], f: &[C64], len: usize) -> Vec<C64> {
    (0..len)
        .map(|k| {
            f.iter()
                .enumerate()
                .filter_map(|(j, a)| u.get(k + j + 1).map(|b| b * a.conj()))
                .sum()
        })
        .collect()
}

/// Largest of: distance of `u conj(z) conj(f)` from `K_u`, and the error of
/// applying the conjugation twice, over the orthonormal basis.
pub fn conjugation_residual(rep: &ModelSpaceRep) -> f64 {
    let len = rep.expansion_len();
    let u = rep.inner().rational().taylor(2 * len + 2);
    let mut worst = 0.0f64;
    for f in rep.ortho_functions() {
        let once = conjugation(&u, &f.expansion, len);
        worst = worst.max(l2(&rep.projection_defect(&once)));
        let twice = conjugation(&u, &once, len);
        let diff: Vec<C64> = twice.iter().zip(&f.expansion).map(|(a, b)| a - b).collect();
        worst = worst.max(l2(&diff));
    }
    worst
}

/// Norm of the reproducing kernel of `v` at a point of the circle or disk,
/// with the index of the level `C_n < ||k|| <= C_(n+1)` it falls in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelLevel {
    pub point: C64,
    pub norm: f64,
    pub level: Option<usize>,
}

/// Kernel norms over a set of points, sorted into the given increasing levels.
pub fn kernel_norm_levels(v: &RationalInner, points: &[C64], levels: &[f64]) -> Result<Vec<KernelLevel>> {
    if levels.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::LadderNotIncreasing);
    }
    let len = v.expansion_len(0)?;
    par::try_map(points, |&z| {
        let norm = if (z.norm() - 1.0).abs() <= 1e-12 {
            l2(&kernel_rational(v, z)?.taylor(len))
        } else if z.norm() < 1.0 {
            ((1.0 - v.eval(z).norm_sqr()) / (1.0 - z.norm_sqr())).sqrt()
        } else {
            return Err(Error::ParameterOutOfRange {
                name: "|z|",
                value: z.norm(),
            });
        };
        let level = levels.windows(2).position(|p| p[0] < norm && norm <= p[1]);
        Ok(KernelLevel { point: z, norm, level })
    })
}

/// `sigma_v = sum a_n delta_(zeta_n)` and `sigma_u` proportional to
/// `sum a_n h1(zeta_n) delta_(zeta_n)`.
pub fn dirac_example_pair(
    h1: impl Fn(C64) -> f64,
    zetas: &[C64],
    masses: &[f64],
) -> Result<(ClarkMeasure, ClarkMeasure)> {
    if zetas.len() != masses.len() {
        return Err(Error::DimensionMismatch {
            expected: zetas.len(),
            got: masses.len(),
        });
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidMeasure(format!("masses sum to {total}, not 1")));
    }
    let mut weighted = Vec::with_capacity(zetas.len());
    for (k, (&z, &a)) in zetas.iter().zip(masses).enumerate() {
        let h = h1(z);
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::ConstraintViolated(format!("h1 vanishes at atom {k}")));
        }
        weighted.push((z, a * h));
    }
    let sigma_v = ClarkMeasure::new(zetas.iter().copied().zip(masses.iter().copied()).collect())?;
    let sigma_u = ClarkMeasure::new(weighted)?;
    Ok((sigma_v, sigma_u))
}

/// `zeta_n = exp(i pi / (2n))` and `a_n = 1 / n^2` normalized, `n = 1..=count`.
pub fn accumulating_atoms(count: usize) -> (Vec<C64>, Vec<f64>) {
    let zetas = (1..=count)
        .map(|n| C64::from_polar(1.0, PI / (2.0 * n as f64)))
        .collect();
    let raw: Vec<f64> = (1..=count).map(|n| 1.0 / (n * n) as f64).collect();
    let total: f64 = raw.iter().sum();
    (zetas, raw.iter().map(|a| a / total).collect())
}

/// Partial sums of `sum a_n / h1(zeta_n)` with `a_n = (6 / pi^2) / n^2`, the
/// normalization of the full infinite sequence.
pub fn dirac_divergence_partial_sums(h1: impl Fn(C64) -> f64, count: usize) -> Vec<f64> {
    let (zetas, _) = accumulating_atoms(count);
    let norm = 6.0 / (PI * PI);
    let mut acc = 0.0;
    zetas
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let n = (k + 1) as f64;
            acc += norm / (n * n) / h1(z);
            acc
        })
        .collect()
}

/// `|1 - z|`.
pub fn distance_to_one(z: C64) -> f64 {
    (c(1.0) - z).norm()
}

/// Spectral norm of a model-space operator matrix.
pub fn operator_norm(m: &MatrixOperator) -> Result<f64> {
    matrix_spectral_norm(m.entries(), tol::ITERATIVE)
}

/// Gram matrix of a model-space basis restricted to the truncation window.
pub fn truncated_gram(basis: &[FourierVector]) -> Result<CMatrix> {
    Ok(gram_matrix(&crate::linalg::column_matrix(basis)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn measure(atoms: &[(f64, f64)]) -> ClarkMeasure {
        ClarkMeasure::new(atoms.iter().map(|&(t, a)| (C64::from_polar(1.0, t), a)).collect()).unwrap()
    }

    #[test]
    fn single_atom_is_identity_function() {
        let u = clark_inner(&measure(&[(0.0, 1.0)])).unwrap();
        assert!(u.num().sub(&Poly::monomial(1)).coeffs().iter().all(|z| z.norm() < 1e-12));
        assert_eq!(u.den(), &Poly::one());
    }

    #[test]
    fn symmetric_pair_is_z_squared() {
        let u = clark_inner(&measure(&[(0.0, 0.5), (PI, 0.5)])).unwrap();
        let diff = u.num().sub(&Poly::monomial(2));
        assert!(diff.coeffs().iter().all(|z| z.norm() < 1e-12));
        assert!(u.den().sub(&Poly::one()).coeffs().iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn collisions_and_bad_masses() {
        let z = C64::from_polar(1.0, 0.3);
        assert_eq!(
            ClarkMeasure::new(vec![(z, 0.5), (z, 0.5)]),
            Err(Error::AtomCollision { first: 0, second: 1 })
        );
        assert!(ClarkMeasure::new(vec![(z, -1.0)]).is_err());
        assert!(ClarkMeasure::new(vec![(z * 1.1, 1.0)]).is_err());
    }

    #[test]
    fn kernel_of_z_squared_at_one() {
        let u = RationalInner::monomial(2).unwrap();
        let k = reproducing_kernel(&u, c(1.0), 8).unwrap();
        assert_eq!(&k.coeffs()[..3], &[c(1.0), c(1.0), c(0.0)]);
    }

    #[test]
    fn kernel_of_monomial_is_geometric() {
        let n = 5;
        let u = RationalInner::monomial(n).unwrap();
        let zeta = C64::from_polar(1.0, 0.7);
        let k = reproducing_kernel(&u, zeta, 20).unwrap();
        for (j, z) in k.coeffs().iter().enumerate() {
            let expected = if j < n { zeta.conj().powu(j as u32) } else { C64::default() };
            assert!((z - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn z_squared_compressed_shift_is_jordan() {
        let rep = model_space_basis(&RationalInner::monomial(2).unwrap(), 20).unwrap();
        let m = compressed_shift(&rep).unwrap();
        // Basis {1, z} up to unimodular phases; check moduli.
        assert!((m.entries()[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(m.entries()[(0, 0)].norm() < 1e-12);
        assert!(m.entries()[(0, 1)].norm() < 1e-12);
        assert!(m.entries()[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn single_atom_clark_vector_is_constant() {
        let sigma = measure(&[(0.0, 1.0)]);
        let u = clark_inner(&sigma).unwrap();
        let rep = model_space_basis(&u, 20).unwrap();
        let f = &rep.clark_basis()[0];
        assert!((f.coeff(0) - c(1.0)).norm() < 1e-14);
        assert!(f.coeffs()[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn equal_measures_give_unit_multiplier() {
        let sigma = measure(&[(0.2, 0.3), (2.0, 0.7)]);
        let u = clark_inner(&sigma).unwrap();
        let p = multiplier_phi0(&u, &u, 20).unwrap();
        assert_relative_eq!(p.phi0.eval(C64::new(0.3, 0.1)).re, 1.0, epsilon = 1e-13);
        assert_eq!(p.density_rank, 2);
    }

    #[test]
    fn unequal_supports_rejected() {
        let u = clark_inner(&measure(&[(0.2, 0.3), (2.0, 0.7)])).unwrap();
        let v = clark_inner(&measure(&[(0.2, 0.3), (2.5, 0.7)])).unwrap();
        assert_eq!(multiplier_phi0(&u, &v, 20), Err(Error::UnequalSupports));
    }

    #[test]
    fn dirac_pair_with_constant_density() {
        let (zetas, masses) = accumulating_atoms(4);
        let (sv, su) = dirac_example_pair(|_| 1.0, &zetas, &masses).unwrap();
        assert_eq!(sv, su);
        assert!(dirac_example_pair(|_| 0.0, &zetas, &masses).is_err());
    }

    #[test]
    fn measure_values_agree_with_coefficients_for_separated_atoms() {
        let sigma = measure(&[(0.3, 0.2), (2.0, 0.5), (4.0, 0.3)]);
        let u = clark_inner(&sigma).unwrap();
        for k in 0..32 {
            let z = circle_point(k, 32) * 0.9;
            assert!((u.eval(z) - u.rational().eval(z)).norm() < 1e-12);
        }
        assert_eq!(sigma.inner_value(sigma.atoms()[1].0), c(1.0));
        let d = u.diagnostics();
        assert!((d.unimodularity - d.coefficient_unimodularity).abs() < 1e-12);
    }

    #[test]
    fn clustered_atoms_fall_back_to_kernel_basis() {
        let (zetas, masses) = accumulating_atoms(8);
        let sigma = ClarkMeasure::new(zetas.into_iter().zip(masses).collect()).unwrap();
        let u = clark_inner(&sigma).unwrap();
        assert!(u.diagnostics().unimodularity < 1e-12);
        assert!(u.diagnostics().coefficient_unimodularity > 1e-9);
        let rep = model_space_basis(&u, 48).unwrap();
        assert_eq!(rep.dim(), 8);
        assert!(rep.gram_residual() < 1e-4);
    }

    #[test]
    fn phi0_sup_matches_rational_form() {
        let sv = measure(&[(0.3, 0.25), (2.0, 0.5), (4.0, 0.25)]);
        let su = measure(&[(0.3, 0.5), (2.0, 0.25), (4.0, 0.25)]);
        let u = clark_inner(&su).unwrap();
        let v = clark_inner(&sv).unwrap();
        let p = multiplier_phi0(&u, &v, 24).unwrap();
        let extra: Vec<C64> = sv.atoms().iter().map(|a| a.0).collect();
        assert_relative_eq!(
            phi0_sup_from_measures(&su, &sv, &extra),
            sup_on_circle(&p.phi0, &extra),
            max_relative = 1e-10
        );
    }
}
