//! Biorthogonal systems and operators diagonal in a non-orthogonal basis.
//!
//! A system pairs a primal family `x_n` with a dual family `x'_n` such that
//! `(x'_n, x_k) = delta_nk`. From it come the skew projections
//! `Q_n = x_n (x) x'_n`, their partial sums `P_n`, and operators `T` with
//! `T x_n = lambda_n x_n`.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    c, column_matrix, gram_matrix, matrix_spectral_norm, numerical_rank, rank_one,
    singular_values, CMatrix, FourierVector, IndexWindow, MatrixOperator, C64,
};
use crate::{par, tol};

/// Largest biorthogonality residual accepted for explicitly supplied duals.
pub const BIORTHOGONALITY_TOL: f64 = 1e-9;

/// Extra degree beyond `2N` used for Helson-Szego families.
pub const HS_HEADROOM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalSystem {
    primal: Vec<FourierVector>,
    dual: Vec<FourierVector>,
    biorthogonality_residual: f64,
}

/// `max |(x'_n, x_k) - delta_nk|` from the column matrices.
fn biorthogonality(b: &CMatrix, bd: &CMatrix) -> f64 {
    let m = bd.adjoint() * b;
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - c(target)).norm());
        }
    }
    worst
}

impl BiorthogonalSystem {
    /// Pairs a primal family with closed-form duals, checking biorthogonality.
    pub fn from_explicit(primal: Vec<FourierVector>, dual: Vec<FourierVector>) -> Result<Self> {
        if primal.len() != dual.len() {
            return Err(Error::DimensionMismatch {
                expected: primal.len(),
                got: dual.len(),
            });
        }
        if primal.iter().chain(&dual).any(|v| v.norm() == 0.0) {
            return Err(Error::ConstraintViolated("zero vector in a biorthogonal family".into()));
        }
        let b = column_matrix(&primal)?;
        let bd = column_matrix(&dual)?;
        if b.nrows() != bd.nrows() || primal[0].window() != dual[0].window() {
            return Err(Error::WindowMismatch {
                left: primal[0].window(),
                right: dual[0].window(),
            });
        }
        let residual = biorthogonality(&b, &bd);
        if residual > BIORTHOGONALITY_TOL {
            return Err(Error::ConstraintViolated(format!(
                "biorthogonality residual {residual:e} exceeds {BIORTHOGONALITY_TOL:e}"
            )));
        }
        Ok(Self {
            primal,
            dual,
            biorthogonality_residual: residual,
        })
    }

    pub fn primal(&self) -> &[FourierVector] {
        &self.primal
    }

    pub fn dual(&self) -> &[FourierVector] {
        &self.dual
    }

    pub fn biorthogonality_residual(&self) -> f64 {
        self.biorthogonality_residual
    }

    pub fn len(&self) -> usize {
        self.primal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primal.is_empty()
    }

    pub fn window(&self) -> IndexWindow {
        self.primal[0].window()
    }

    pub fn primal_matrix(&self) -> CMatrix {
        column_matrix(&self.primal).expect("validated on construction")
    }

    pub fn dual_matrix(&self) -> CMatrix {
        column_matrix(&self.dual).expect("validated on construction")
    }

    /// `||Q_n|| = ||x_n|| ||x'_n||` for every `n`.
    pub fn projection_norms(&self) -> Vec<f64> {
        self.primal
            .iter()
            .zip(&self.dual)
            .map(|(x, y)| x.norm() * y.norm())
            .collect()
    }
}

/// Dual family on the span of `primal`: `B' = B (B^* B)^{-1}`.
pub fn dual_family(primal: Vec<FourierVector>) -> Result<BiorthogonalSystem> {
    let b = column_matrix(&primal)?;
    let size = primal.len();
    let sv = singular_values(&b);
    let top = sv.first().copied().unwrap_or(0.0);
    let bottom = if b.ncols() > b.nrows() {
        0.0
    } else {
        sv.last().copied().unwrap_or(0.0)
    };
    let condition = top / bottom;
    if !(bottom > tol::RANK * top) {
        return Err(Error::DependentFamily {
            rank: numerical_rank(&sv, tol::RANK),
            size,
            condition,
        });
    }
    let gram = b.adjoint() * &b;
    let chol = gram.cholesky().ok_or(Error::DependentFamily {
        rank: numerical_rank(&sv, tol::RANK),
        size,
        condition,
    })?;
    let bd = chol.solve(&b.adjoint()).adjoint();
    let window = primal[0].window();
    let weight = primal[0].weight().cloned();
    let dual = (0..size)
        .map(|j| {
            let coords: Vec<C64> = bd.column(j).iter().copied().collect();
            FourierVector::from_orthonormal(window, &coords, weight.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let residual = biorthogonality(&b, &bd);
    Ok(BiorthogonalSystem {
        primal,
        dual,
        biorthogonality_residual: residual,
    })
}

/// `Q_n = x_n (x) x'_n`.
pub fn skew_projections(system: &BiorthogonalSystem) -> Vec<MatrixOperator> {
    system
        .primal()
        .iter()
        .zip(system.dual())
        .map(|(x, y)| rank_one(x, y))
        .collect()
}

/// `||P_n||` for every `n` without forming the `P_n`.
///
/// With Cholesky factors `B^* B = L L^*` and `B'^* B' = L' L'^*`, the first
/// `n + 1` columns of `B` are an isometry times the leading block of `L^*`,
/// so `||P_n|| = ||L_n^* L'_n||` for the leading `(n+1)`-blocks.
pub fn partial_sum_norms(system: &BiorthogonalSystem) -> Result<Vec<f64>> {
    let b = system.primal_matrix();
    let bd = system.dual_matrix();
    let size = system.len();
    let dependent = || Error::DependentFamily {
        rank: size,
        size,
        condition: f64::INFINITY,
    };
    let l = (b.adjoint() * &b).cholesky().ok_or_else(dependent)?.unpack();
    let ld = (bd.adjoint() * &bd).cholesky().ok_or_else(dependent)?.unpack();
    let items: Vec<usize> = (0..size).collect();
    par::try_map(&items, |&n| {
        let k = n + 1;
        let block = l.view((0, 0), (k, k)).adjoint() * ld.view((0, 0), (k, k));
        matrix_spectral_norm(&block, tol::ITERATIVE)
    })
}

/// `P_n = Q_0 + ... + Q_n` with their spectral norms.
pub fn partial_sum_projections(system: &BiorthogonalSystem) -> Result<Vec<(MatrixOperator, f64)>> {
    let norms = partial_sum_norms(system)?;
    let mut out = Vec::with_capacity(system.len());
    let window = system.window();
    let mut acc = CMatrix::zeros(window.len(), window.len());
    for (q, n) in skew_projections(system).into_iter().zip(norms) {
        acc += q.entries();
        out.push((MatrixOperator::square(window, acc.clone())?, n));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    HelsonSzego { alpha: f64 },
    BlockPair { c: Vec<f64> },
    Explicit,
}

/// Eigenvalues `lambda_n = exp(i t_n)` stored through their angles.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystemSpec {
    angles: Vec<f64>,
    family_kind: FamilyKind,
}

/// Checks `0 < t_(n+1) < t_n <= 2 pi`.
pub fn validate_angles(angles: &[f64]) -> Result<()> {
    for (k, &t) in angles.iter().enumerate() {
        if !(t > 0.0 && t <= 2.0 * PI) {
            return Err(Error::AngleMonotonicity { index: k });
        }
        if k > 0 && !(t < angles[k - 1]) {
            return Err(Error::AngleMonotonicity { index: k });
        }
    }
    Ok(())
}

/// `t_n = 2 pi / (n + 1)`.
pub fn default_angles(count: usize) -> Vec<f64> {
    (0..count).map(|n| 2.0 * PI / (n as f64 + 1.0)).collect()
}

impl EigenSystemSpec {
    pub fn new(angles: Vec<f64>, family_kind: FamilyKind) -> Result<Self> {
        validate_angles(&angles)?;
        Ok(Self {
            angles,
            family_kind,
        })
    }

    pub fn with_default_angles(count: usize, family_kind: FamilyKind) -> Self {
        Self {
            angles: default_angles(count),
            family_kind,
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn family_kind(&self) -> &FamilyKind {
        &self.family_kind
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.angles.iter().map(|&t| C64::from_polar(1.0, t)).collect()
    }
}

fn check_distinct(lambdas: &[C64]) -> Result<()> {
    for i in 0..lambdas.len() {
        for j in i + 1..lambdas.len() {
            if (lambdas[i] - lambdas[j]).norm() == 0.0 {
                return Err(Error::EigenvaluesNotDistinct { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// `T = sum lambda_n Q_n`, i.e. `T x_n = lambda_n x_n` on the span.
pub fn diagonal_operator(spec: &EigenSystemSpec, system: &BiorthogonalSystem) -> Result<MatrixOperator> {
    validate_angles(&spec.angles)?;
    if spec.angles.len() < system.len() {
        return Err(Error::NotEnoughEigenvalues {
            eigenvalues: spec.angles.len(),
            family: system.len(),
        });
    }
    let lambdas = spec.eigenvalues();
    let b = system.primal_matrix();
    let mut bl = b.clone();
    for (j, mut col) in bl.column_iter_mut().enumerate() {
        col *= lambdas[j];
    }
    MatrixOperator::square(system.window(), bl * system.dual_matrix().adjoint())
}

/// Taylor coefficients of `(1 - z)^alpha` up to degree `d`.
pub fn binomial_series(alpha: f64, d: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(d + 1);
    let mut ck = 1.0;
    out.push(ck);
    for k in 0..d {
        ck *= (k as f64 - alpha) / (k as f64 + 1.0);
        out.push(ck);
    }
    out
}

/// `x_n = z^n (1 - z)^alpha` for `n < count`, truncated to `[0, degree]`.
pub fn helson_szego_family_with_degree(
    alpha: f64,
    count: usize,
    degree: usize,
) -> Result<Vec<FourierVector>> {
    if !(alpha.abs() < 0.5 && alpha != 0.0) {
        return Err(Error::ParameterOutOfRange { name: "alpha", value: alpha });
    }
    if count < 4 {
        return Err(Error::ParameterOutOfRange {
            name: "N",
            value: count as f64,
        });
    }
    if degree < count {
        return Err(Error::TruncationTooSmall(format!(
            "degree {degree} cannot hold {count} shifts"
        )));
    }
    let window = IndexWindow::hardy(degree);
    let psi = FourierVector::from_real(window, &binomial_series(alpha, degree))?;
    Ok((0..count as i64).map(|n| psi.shifted(n)).collect())
}

/// [`helson_szego_family_with_degree`] with degree `2N + 64`.
pub fn helson_szego_family(alpha: f64, count: usize) -> Result<Vec<FourierVector>> {
    helson_szego_family_with_degree(alpha, count, 2 * count + HS_HEADROOM)
}

/// Everything built from the two-by-two block system.
#[derive(Debug, Clone, PartialEq)]
pub struct NoestSystem {
    pub system: BiorthogonalSystem,
    pub t: MatrixOperator,
    /// `X x_n = alpha_n e_n`.
    pub x: MatrixOperator,
    /// `X_* x'_n = alpha'_n e_n`.
    pub x_star: MatrixOperator,
    pub alphas: Vec<f64>,
    pub alphas_star: Vec<f64>,
    pub c: Vec<f64>,
    pub eigenvalues: Vec<C64>,
}

/// Cap on the sup-type constraints at truncation scale.
pub const NOEST_SUP_CAP: f64 = 1e3;
/// Floor on the inf-type constraints at truncation scale.
pub const NOEST_INF_FLOOR: f64 = 1e-3;

/// Default schedule: `c_n = sqrt(n + 1)`.
pub fn noest_default_c(pairs: usize) -> Vec<f64> {
    (0..pairs).map(|n| (n as f64 + 1.0).sqrt()).collect()
}

/// Default angles: `t_(2n+1) = pi / sqrt(n + 1)` and
/// `t_(2n) = t_(2n+1) + 1 / ((n + 1) c_n)`.
pub fn noest_default_angles(c_seq: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * c_seq.len());
    for (n, &cn) in c_seq.iter().enumerate() {
        let k = n as f64 + 1.0;
        let odd = PI / k.sqrt();
        out.push(odd + 1.0 / (k * cn));
        out.push(odd);
    }
    out
}

/// `sup_n c_n |lambda_2n - lambda_(2n+1)|`.
pub fn noest_coupling(c_seq: &[f64], lambdas: &[C64]) -> f64 {
    c_seq
        .iter()
        .enumerate()
        .map(|(n, cn)| cn * (lambdas[2 * n] - lambdas[2 * n + 1]).norm())
        .fold(0.0, f64::max)
}

fn sup_check(name: &str, values: impl Iterator<Item = f64>) -> Result<()> {
    let sup = values.fold(0.0, f64::max);
    if sup > NOEST_SUP_CAP || !sup.is_finite() {
        return Err(Error::ConstraintViolated(format!("{name} = {sup:e} exceeds {NOEST_SUP_CAP:e}")));
    }
    Ok(())
}

fn inf_check(name: &str, values: impl Iterator<Item = f64>) -> Result<()> {
    let inf = values.fold(f64::INFINITY, f64::min);
    if !(inf >= NOEST_INF_FLOOR) {
        return Err(Error::ConstraintViolated(format!("{name} = {inf:e} is below {NOEST_INF_FLOOR:e}")));
    }
    Ok(())
}

/// Two-by-two block system on `[0, 2 * pairs - 1]`:
/// `x_2n = e_2n`, `x_(2n+1) = e_(2n+1) + c_n e_2n` with duals
/// `x'_2n = e_2n - c_n e_(2n+1)`, `x'_(2n+1) = e_(2n+1)`.
///
/// The canonical scales are `alpha_2n = (1 + c_n^2)^(-1/2)`,
/// `alpha_(2n+1) = 1`, `alpha'_2n = 1`, `alpha'_(2n+1) = (1 + c_n^2)^(-1/2)`.
pub fn example_noest_system(c_seq: &[f64], angle_seq: &[f64], pairs: usize) -> Result<NoestSystem> {
    if pairs == 0 {
        return Err(Error::ParameterOutOfRange { name: "N", value: 0.0 });
    }
    if c_seq.len() < pairs {
        return Err(Error::DimensionMismatch {
            expected: pairs,
            got: c_seq.len(),
        });
    }
    if angle_seq.len() < 2 * pairs {
        return Err(Error::NotEnoughEigenvalues {
            eigenvalues: angle_seq.len(),
            family: 2 * pairs,
        });
    }
    let cs = &c_seq[..pairs];
    let angles = &angle_seq[..2 * pairs];
    if let Some(k) = cs.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::ConstraintViolated(format!("c_{k} = {} is not positive", cs[k])));
    }
    if pairs > 1 && (cs.windows(2).any(|p| p[1] < p[0]) || cs[pairs - 1] <= cs[0]) {
        return Err(Error::ConstraintViolated(
            "c_n must be nondecreasing and grow over the range".into(),
        ));
    }
    validate_angles(angles)?;
    let lambdas: Vec<C64> = angles.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    check_distinct(&lambdas)?;
    let coupling = noest_coupling(cs, &lambdas);
    if coupling > NOEST_SUP_CAP {
        return Err(Error::ConstraintViolated(format!(
            "sup c_n |lambda_2n - lambda_2n+1| = {coupling:e} exceeds {NOEST_SUP_CAP:e}"
        )));
    }

    let dim = 2 * pairs;
    let window = IndexWindow::hardy(dim - 1);
    let unit = |k: usize| FourierVector::unit(window, k as i64).expect("index inside the window");
    let mut primal = Vec::with_capacity(dim);
    let mut dual = Vec::with_capacity(dim);
    for (n, &cn) in cs.iter().enumerate() {
        let (e0, e1) = (unit(2 * n), unit(2 * n + 1));
        primal.push(e0.clone());
        let mut x1 = e1.coeffs().to_vec();
        x1[2 * n] = c(cn);
        primal.push(FourierVector::new(window, x1)?);
        let mut d0 = e0.coeffs().to_vec();
        d0[2 * n + 1] = c(-cn);
        dual.push(FourierVector::new(window, d0)?);
        dual.push(e1);
    }
    let system = BiorthogonalSystem::from_explicit(primal, dual)?;

    let mut alphas = Vec::with_capacity(dim);
    let mut alphas_star = Vec::with_capacity(dim);
    for &cn in cs {
        let s = 1.0 / (1.0 + cn * cn).sqrt();
        alphas.extend([s, 1.0]);
        alphas_star.extend([1.0, s]);
    }
    let even = |v: &[f64]| v.iter().step_by(2).copied().collect::<Vec<_>>();
    let odd = |v: &[f64]| v.iter().skip(1).step_by(2).copied().collect::<Vec<_>>();
    let hyp = |x: f64| (1.0 + x * x).sqrt();
    sup_check("sup alpha_n", alphas.iter().copied())?;
    sup_check("sup alpha'_n", alphas_star.iter().copied())?;
    sup_check("sup c_n alpha_2n", cs.iter().zip(even(&alphas)).map(|(c, a)| c * a))?;
    sup_check("sup c_n alpha'_2n+1", cs.iter().zip(odd(&alphas_star)).map(|(c, a)| c * a))?;
    inf_check("inf alpha_2n+1", odd(&alphas).into_iter())?;
    inf_check("inf alpha'_2n", even(&alphas_star).into_iter())?;
    inf_check("inf (1+c_n^2)^(1/2) alpha_2n", cs.iter().zip(even(&alphas)).map(|(c, a)| hyp(*c) * a))?;
    inf_check(
        "inf (1+c_n^2)^(1/2) alpha'_2n+1",
        cs.iter().zip(odd(&alphas_star)).map(|(c, a)| hyp(*c) * a),
    )?;

    let spec = EigenSystemSpec::new(angles.to_vec(), FamilyKind::BlockPair { c: cs.to_vec() })?;
    let t = diagonal_operator(&spec, &system)?;
    let x = scaled_intertwiner(&system, &alphas)?;
    let x_star = scale_rows(&system.primal_matrix().adjoint(), &alphas_star, window)?;
    Ok(NoestSystem {
        system,
        t,
        x,
        x_star,
        alphas,
        alphas_star,
        c: cs.to_vec(),
        eigenvalues: lambdas,
    })
}

fn scale_rows(m: &CMatrix, scales: &[f64], window: IndexWindow) -> Result<MatrixOperator> {
    let mut out = m.clone();
    for (i, &s) in scales.iter().enumerate() {
        out.row_mut(i).scale_mut(s);
    }
    let codomain = IndexWindow::hardy(scales.len() - 1);
    MatrixOperator::new(window, codomain, out)
}

/// The map `x_n -> alpha_n e_n`, i.e. `diag(alpha) B'^*`.
pub fn scaled_intertwiner(system: &BiorthogonalSystem, scales: &[f64]) -> Result<MatrixOperator> {
    if scales.len() != system.len() {
        return Err(Error::DimensionMismatch {
            expected: system.len(),
            got: scales.len(),
        });
    }
    if let Some(k) = scales.iter().position(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::ParameterOutOfRange {
            name: "scale",
            value: scales[k],
        });
    }
    scale_rows(&system.dual_matrix().adjoint(), scales, system.window())
}

/// `(sum alpha_n^2 ||x'_n||^2)^(1/2)`, a bound for [`scaled_intertwiner`].
///
/// This is the series bound with the per-vector maps of norm `1 / ||x_n||`;
/// when every `||x_n|| >= 1` it is dominated by `(sum alpha_n^2 ||Q_n||^2)^(1/2)`.
pub fn intertwiner_norm_bound(system: &BiorthogonalSystem, scales: &[f64]) -> f64 {
    system
        .dual()
        .iter()
        .zip(scales)
        .map(|(d, a)| (a * d.norm()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `U_0 e_n = lambda_n e_n` on `[0, len - 1]`.
pub fn diagonal_unitary(lambdas: &[C64]) -> Result<MatrixOperator> {
    MatrixOperator::diagonal(IndexWindow::hardy(lambdas.len() - 1), lambdas)
}

/// `max_n || T x_n - lambda_n x_n ||`.
pub fn eigen_residual(t: &MatrixOperator, system: &BiorthogonalSystem, lambdas: &[C64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (x, &l) in system.primal().iter().zip(lambdas) {
        let v = DVector::from_vec(x.orthonormal_coords());
        worst = worst.max((t.apply(x)? - v * l).norm());
    }
    Ok(worst)
}

/// `max_n || T^* x'_n - conj(lambda_n) x'_n ||`.
pub fn adjoint_eigen_residual(
    t: &MatrixOperator,
    system: &BiorthogonalSystem,
    lambdas: &[C64],
) -> Result<f64> {
    let ta = t.adjoint();
    let mut worst = 0.0f64;
    for (x, &l) in system.dual().iter().zip(lambdas) {
        let v = DVector::from_vec(x.orthonormal_coords());
        worst = worst.max((ta.apply(x)? - v * l.conj()).norm());
    }
    Ok(worst)
}

/// The primal Gram matrix `(x_i, x_j)`.
pub fn primal_gram(system: &BiorthogonalSystem) -> CMatrix {
    gram_matrix(&system.primal_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use approx::assert_relative_eq;

    fn orthonormal(n: usize) -> Vec<FourierVector> {
        let w = IndexWindow::hardy(n - 1);
        (0..n as i64).map(|k| FourierVector::unit(w, k).unwrap()).collect()
    }

    #[test]
    fn orthonormal_dual_is_itself() {
        let fam = orthonormal(5);
        let s = dual_family(fam.clone()).unwrap();
        assert_eq!(s.biorthogonality_residual(), 0.0);
        for (a, b) in s.dual().iter().zip(&fam) {
            assert_eq!(a, b);
        }
        assert!(partial_sum_norms(&s).unwrap().iter().all(|n| (n - 1.0).abs() < 1e-12));
    }

    #[test]
    fn block_pair_duals_match_closed_form() {
        let cs = [0.5, 2.0];
        let angles = noest_default_angles(&cs);
        let ex = example_noest_system(&cs, &angles, 2).unwrap();
        let computed = dual_family(ex.system.primal().to_vec()).unwrap();
        assert!(max_abs_diff(&computed.dual_matrix(), &ex.system.dual_matrix()) < 1e-12);
    }

    #[test]
    fn binomial_leading_terms() {
        let s = binomial_series(0.3, 3);
        assert_eq!(s[0], 1.0);
        assert_relative_eq!(s[1], -0.3);
        assert_relative_eq!(s[2], -0.3 * 0.7 / 2.0);
        assert_eq!(binomial_series(0.0, 4), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn hs_family_shape() {
        let fam = helson_szego_family(-0.25, 8).unwrap();
        assert_eq!(fam[0].window(), IndexWindow::hardy(2 * 8 + HS_HEADROOM));
        assert_eq!(fam[1].coeff(0), c(0.0));
        assert_eq!(fam[1].coeff(5), fam[0].coeff(4));
        assert!(helson_szego_family(0.5, 8).is_err());
        assert!(helson_szego_family(0.0, 8).is_err());
        assert!(helson_szego_family(0.25, 3).is_err());
    }

    #[test]
    fn angle_validation() {
        assert!(validate_angles(&default_angles(10)).is_ok());
        assert_eq!(
            validate_angles(&[1.0, 2.0]),
            Err(Error::AngleMonotonicity { index: 1 })
        );
        assert_eq!(validate_angles(&[7.0]), Err(Error::AngleMonotonicity { index: 0 }));
    }

    #[test]
    fn diagonal_operator_on_orthonormal_is_unitary() {
        let s = dual_family(orthonormal(6)).unwrap();
        let spec = EigenSystemSpec::with_default_angles(6, FamilyKind::Explicit);
        let t = diagonal_operator(&spec, &s).unwrap();
        assert_relative_eq!(
            matrix_spectral_norm(t.entries(), 1e-12).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        let short = EigenSystemSpec::with_default_angles(3, FamilyKind::Explicit);
        assert!(matches!(
            diagonal_operator(&short, &s),
            Err(Error::NotEnoughEigenvalues { .. })
        ));
    }

    #[test]
    fn noest_constraints_are_checked() {
        let angles = noest_default_angles(&[1.0, 2.0]);
        assert!(example_noest_system(&[2.0, 1.0], &angles, 2).is_err());
        assert!(example_noest_system(&[-1.0, 2.0], &angles, 2).is_err());
        let bad = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            example_noest_system(&[1.0, 2.0], &bad, 2),
            Err(Error::AngleMonotonicity { .. })
        ));
    }

    #[test]
    fn intertwiner_identity_on_orthonormal() {
        let s = dual_family(orthonormal(4)).unwrap();
        let x = scaled_intertwiner(&s, &[1.0; 4]).unwrap();
        assert!(max_abs_diff(x.entries(), &CMatrix::identity(4, 4)) < 1e-15);
    }
}
