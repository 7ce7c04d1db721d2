//! Asymptotic diagnostics for power-bounded truncations.
//!
//! The Banach-limit Gram form `lim (T^n x, T^n y)` is estimated by Cesaro
//! means over dyadic blocks of powers; two consecutive block means give a
//! convergence certificate. Riesz bounds of a family are the extreme singular
//! values of its normalized column matrix, and a verdict on a ladder of
//! truncations is a log-log trend fit of the lower bounds.

use nalgebra::DVector;

use crate::eigenbasis::BiorthogonalSystem;
use crate::error::{Error, Result};
use crate::linalg::{
    column_matrix, gram_matrix, matrix_smallest_singular_value, matrix_spectral_norm, max_abs_diff,
    numerical_rank, orthonormal_columns, singular_values, spectral_norm, CMatrix, FourierVector,
    MatrixOperator, C64, DENSE_SVD_LIMIT,
};
use crate::weighted_shift::linear_fit;
use crate::{par, tol};

/// Minimum number of powers for a Cesaro estimate.
pub const MIN_CESARO_POWER: usize = 8;

/// Relative change between `n_max/2` and `n_max` under which an orbit norm
/// counts as settled.
const ORBIT_STABILITY: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct GramLimitReport {
    pub gram: CMatrix,
    pub iterations_used: usize,
    /// Largest entry change between the last two block means.
    pub residual: f64,
    pub converged: bool,
}

fn probe_matrix(t: &MatrixOperator, probes: &[FourierVector]) -> Result<CMatrix> {
    for p in probes {
        if p.window() != t.domain() {
            return Err(Error::WindowMismatch {
                left: t.domain(),
                right: p.window(),
            });
        }
    }
    column_matrix(probes)
}

/// Cesaro estimate of `lim_n (T^n x_i, T^n x_j)`.
///
/// Powers are grouped into blocks `[2^k, 2^(k+1))` with `2^(k+1) <= max_power`;
/// the reported Gram is the mean over the last block and the residual is its
/// largest entry difference from the previous block mean.
pub fn cesaro_gram_limit(
    t: &MatrixOperator,
    probes: &[FourierVector],
    max_power: usize,
    tol: f64,
) -> Result<GramLimitReport> {
    t.require_square()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidTolerance(tol));
    }
    if max_power < MIN_CESARO_POWER {
        return Err(Error::ParameterOutOfRange {
            name: "max_power",
            value: max_power as f64,
        });
    }
    let mut x = probe_matrix(t, probes)?;
    let start_norms: Vec<f64> = x.column_iter().map(|col| col.norm()).collect();
    let k = probes.len();
    let mut previous: Option<CMatrix> = None;
    let mut current = CMatrix::zeros(k, k);
    let mut residual = f64::INFINITY;
    let mut block_start = 1usize;
    let mut power = 0usize;
    while 2 * block_start <= max_power {
        let block_end = 2 * block_start;
        let mut acc = CMatrix::zeros(k, k);
        while power < block_end - 1 {
            x = t.entries() * &x;
            power += 1;
            for (col, &n0) in x.column_iter().zip(&start_norms) {
                let n = col.norm();
                if !n.is_finite() {
                    return Err(Error::NotPowerBounded {
                        power,
                        norm: f64::INFINITY,
                    });
                }
                let ratio = if n0 > 0.0 { n / n0 } else { n };
                if ratio > tol::GROWTH_CAP {
                    return Err(Error::NotPowerBounded { power, norm: ratio });
                }
            }
            if power >= block_start {
                acc += gram_matrix(&x);
            }
        }
        let mean = acc / C64::from((block_end - block_start) as f64);
        if let Some(prev) = &previous {
            residual = max_abs_diff(&mean, prev);
        }
        previous = Some(mean.clone());
        current = mean;
        block_start = block_end;
    }
    Ok(GramLimitReport {
        gram: current,
        iterations_used: power,
        residual,
        converged: residual < tol,
    })
}

/// `max_{1 <= k <= n_max} ||T^k||`.
pub fn power_bound(t: &MatrixOperator, n_max: usize) -> Result<f64> {
    t.require_square()?;
    if n_max == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "n_max",
            value: 0.0,
        });
    }
    let tol = tol::ITERATIVE;
    let mut powers = Vec::with_capacity(n_max);
    let mut p = t.entries().clone();
    for k in 1..=n_max {
        if p.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotPowerBounded {
                power: k,
                norm: f64::INFINITY,
            });
        }
        let frob = p.norm();
        if frob > tol::GROWTH_CAP * (p.nrows() as f64).sqrt() {
            return Err(Error::NotPowerBounded {
                power: k,
                norm: frob,
            });
        }
        powers.push(p.clone());
        if k < n_max {
            p = t.entries() * &p;
        }
    }
    let norms = par::try_map(&powers, |m| matrix_spectral_norm(m, tol))?;
    let mut best = 0.0f64;
    for (k, n) in norms.into_iter().enumerate() {
        if n > tol::GROWTH_CAP {
            return Err(Error::NotPowerBounded {
                power: k + 1,
                norm: n,
            });
        }
        best = best.max(n);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitClass {
    /// All probed orbits stay away from zero.
    C1Dot,
    /// All probed orbits vanish.
    C0Dot,
    Mixed,
}

impl OrbitClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::C1Dot => "C1.",
            Self::C0Dot => "C0.",
            Self::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CClassTag {
    pub forward: OrbitClass,
    pub backward: OrbitClass,
    /// `(label, ||T^n x|| / ||x||)` at the largest probed power.
    pub per_vector_limits: Vec<(String, f64)>,
    /// Probes whose orbit norm was still moving at the largest power.
    pub unsettled: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OrbitFate {
    Vanishes,
    Persists,
    Unsettled,
}

fn orbit_fates(
    m: &CMatrix,
    probes: &CMatrix,
    n_max: usize,
    tol: f64,
    prefix: &str,
) -> Result<Vec<(String, f64, OrbitFate)>> {
    let half = (n_max / 2).max(1);
    let mut out = Vec::with_capacity(probes.ncols());
    for (i, col) in probes.column_iter().enumerate() {
        let n0 = col.norm();
        let mut v: DVector<C64> = col.into_owned();
        let mut at_half = 0.0;
        for k in 1..=n_max {
            v = m * v;
            let r = if n0 > 0.0 { v.norm() / n0 } else { 0.0 };
            if !r.is_finite() || r > tol::GROWTH_CAP {
                return Err(Error::NotPowerBounded { power: k, norm: r });
            }
            if k == half {
                at_half = r;
            }
        }
        let last = if n0 > 0.0 { v.norm() / n0 } else { 0.0 };
        let fate = if last < tol {
            OrbitFate::Vanishes
        } else if (last - at_half).abs() <= ORBIT_STABILITY * last {
            OrbitFate::Persists
        } else {
            OrbitFate::Unsettled
        };
        out.push((format!("{prefix}{i}"), last, fate));
    }
    Ok(out)
}

fn class_of(fates: &[(String, f64, OrbitFate)]) -> OrbitClass {
    if fates.iter().all(|f| f.2 == OrbitFate::Persists) {
        OrbitClass::C1Dot
    } else if fates.iter().all(|f| f.2 == OrbitFate::Vanishes) {
        OrbitClass::C0Dot
    } else {
        OrbitClass::Mixed
    }
}

/// Orbit-class estimate from `||T^n x|| / ||x||` at `n = n_max`, for `T` and
/// for its adjoint.
///
/// An orbit below `tol` vanishes; an orbit above `tol` whose relative norm
/// moved by at most 1% since `n_max / 2` persists; anything else makes the
/// class `Mixed` and is listed in `unsettled`.
pub fn classify_c_class(
    t: &MatrixOperator,
    probes: &[FourierVector],
    n_max: usize,
    tol: f64,
) -> Result<CClassTag> {
    t.require_square()?;
    if n_max == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "n_max",
            value: 0.0,
        });
    }
    let x = probe_matrix(t, probes)?;
    let forward = orbit_fates(t.entries(), &x, n_max, tol, "x")?;
    let backward = orbit_fates(&t.entries().adjoint(), &x, n_max, tol, "adjoint x")?;
    let unsettled = forward
        .iter()
        .chain(&backward)
        .filter(|f| f.2 == OrbitFate::Unsettled)
        .map(|f| f.0.clone())
        .collect();
    Ok(CClassTag {
        forward: class_of(&forward),
        backward: class_of(&backward),
        per_vector_limits: forward
            .iter()
            .chain(&backward)
            .map(|f| (f.0.clone(), f.1))
            .collect(),
        unsettled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Extreme singular values of the matrix of normalized family members.
pub fn riesz_bounds(family: &[FourierVector]) -> Result<RieszBounds> {
    let mut b = column_matrix(family)?;
    for (j, v) in family.iter().enumerate() {
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::DependentFamily {
                rank: 0,
                size: family.len(),
                condition: f64::INFINITY,
            });
        }
        b.column_mut(j).unscale_mut(n);
    }
    let (lower, upper) = if b.nrows().min(b.ncols()) <= DENSE_SVD_LIMIT {
        let sv = singular_values(&b);
        let upper = sv[0];
        let lower = if b.ncols() > b.nrows() { 0.0 } else { *sv.last().unwrap() };
        if lower <= tol::RANK * upper {
            return Err(Error::DependentFamily {
                rank: numerical_rank(&sv, tol::RANK),
                size: family.len(),
                condition: upper / lower,
            });
        }
        (lower, upper)
    } else {
        let upper = matrix_spectral_norm(&b, tol::ITERATIVE)?;
        let lower = matrix_smallest_singular_value(&b, tol::ITERATIVE)?;
        if b.ncols() > b.nrows() || lower <= tol::RANK * upper {
            return Err(Error::DependentFamily {
                rank: b.ncols().min(b.nrows()),
                size: family.len(),
                condition: upper / lower,
            });
        }
        (lower, upper)
    };
    Ok(RieszBounds { lower, upper })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    LowerBoundHolds,
    LowerBoundDecays,
    Inconclusive,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LowerBoundHolds => "lower-bound-holds",
            Self::LowerBoundDecays => "lower-bound-decays",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoteVerdict {
    pub kind: VerdictKind,
    /// `(N, lower Riesz bound)` per rung.
    pub lower_bound_curve: Vec<(usize, f64)>,
    /// Least-squares slope of `log lower` against `log N`.
    pub trend_exponent: f64,
    pub fit_r2: f64,
}

/// Floor under which a plateau is not accepted as a lower bound.
const PLATEAU_FLOOR: f64 = 1e-8;

/// Trend verdict on the lower Riesz bounds of a ladder of families.
pub fn asymptote_verdict(ladder: &[(usize, Vec<FourierVector>)]) -> Result<AsymptoteVerdict> {
    if ladder.len() < 3 {
        return Err(Error::LadderTooShort {
            needed: 3,
            got: ladder.len(),
        });
    }
    if ladder.windows(2).any(|p| p[0].0 >= p[1].0) || ladder[0].0 == 0 {
        return Err(Error::LadderNotIncreasing);
    }
    let bounds = par::try_map(ladder, |(_, fam)| riesz_bounds(fam))?;
    let curve: Vec<(usize, f64)> = ladder
        .iter()
        .zip(&bounds)
        .map(|((n, _), b)| (*n, b.lower))
        .collect();
    let xs: Vec<f64> = curve.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = curve.iter().map(|(_, l)| l.ln()).collect();
    let (slope, _, r2) = linear_fit(&xs, &ys);
    let min_lower = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let kind = if slope < tol::DECAY_SLOPE && r2 >= tol::DECAY_FIT_R2 {
        VerdictKind::LowerBoundDecays
    } else if slope >= tol::DECAY_SLOPE && min_lower > PLATEAU_FLOOR {
        VerdictKind::LowerBoundHolds
    } else {
        VerdictKind::Inconclusive
    };
    Ok(AsymptoteVerdict {
        kind,
        lower_bound_curve: curve,
        trend_exponent: slope,
        fit_r2: r2,
    })
}

/// `inf ||X x||` over unit vectors `x` in the span of `basis`.
pub fn delta_lower_bound(x: &MatrixOperator, basis: &[FourierVector]) -> Result<f64> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    for v in basis {
        if v.window() != x.domain() {
            return Err(Error::WindowMismatch {
                left: x.domain(),
                right: v.window(),
            });
        }
    }
    let q = orthonormal_columns(&column_matrix(basis)?);
    matrix_smallest_singular_value(&(x.entries() * q), tol::ITERATIVE)
}

/// `delta_n ||Q_n||` for every member of the system, where `delta_n` is
/// [`delta_lower_bound`] on `span{x_n}` and `||Q_n|| = ||x_n|| ||x'_n||`.
pub fn check_delta_qn_product(x: &MatrixOperator, system: &BiorthogonalSystem) -> Result<Vec<f64>> {
    let items: Vec<usize> = (0..system.len()).collect();
    par::try_map(&items, |&n| {
        let delta = delta_lower_bound(x, std::slice::from_ref(&system.primal()[n]))?;
        Ok(delta * system.primal()[n].norm() * system.dual()[n].norm())
    })
}

/// Spectral norm of an operator with the iterative default tolerance.
pub fn norm(t: &MatrixOperator) -> Result<f64> {
    spectral_norm(t, tol::ITERATIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, shift_matrix, IndexWindow};
    use approx::assert_relative_eq;

    fn hardy(d: usize) -> IndexWindow {
        IndexWindow::hardy(d)
    }

    #[test]
    fn shift_preserves_gram() {
        let w = hardy(40);
        let s = shift_matrix(w);
        let probes = [
            FourierVector::unit(w, 0).unwrap(),
            FourierVector::unit(w, 1).unwrap(),
        ];
        let r = cesaro_gram_limit(&s, &probes, 32, 1e-10).unwrap();
        assert!(max_abs_diff(&r.gram, &CMatrix::identity(2, 2)) < 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn strict_contraction_gram_vanishes() {
        let w = hardy(1);
        let t = MatrixOperator::diagonal(w, &[c(0.5), c(0.9)]).unwrap();
        let probes = [
            FourierVector::unit(w, 0).unwrap(),
            FourierVector::unit(w, 1).unwrap(),
        ];
        let r = cesaro_gram_limit(&t, &probes, 256, 1e-8).unwrap();
        assert!(r.gram.iter().all(|z| z.norm() < 1e-10));
        // Brute force: the 200th power is already negligible.
        let p = t.pow(200).unwrap();
        assert!(p.max_abs() < 1e-9);
    }

    #[test]
    fn gram_rejects_growth_and_short_horizon() {
        let w = hardy(0);
        let t = MatrixOperator::diagonal(w, &[c(2.0)]).unwrap();
        let probes = [FourierVector::unit(w, 0).unwrap()];
        assert!(matches!(
            cesaro_gram_limit(&t, &probes, 64, 1e-8),
            Err(Error::NotPowerBounded { .. })
        ));
        assert!(cesaro_gram_limit(&t, &probes, 4, 1e-8).is_err());
    }

    #[test]
    fn jordan_block_grows_linearly() {
        let w = hardy(1);
        let mut m = CMatrix::identity(2, 2);
        m[(1, 0)] = c(1.0);
        let j = MatrixOperator::square(w, m).unwrap();
        // ||J^k|| for J^k = [[1,0],[k,1]] is (k + sqrt(k^2 + 4)) / 2.
        for n in [4usize, 16, 64] {
            let k = n as f64;
            assert_relative_eq!(
                power_bound(&j, n).unwrap(),
                (k + (k * k + 4.0).sqrt()) / 2.0,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn contraction_power_bound() {
        let w = hardy(10);
        let s = shift_matrix(w);
        assert!(power_bound(&s, 20).unwrap() <= 1.0 + 1e-10);
    }

    #[test]
    fn c_class_examples() {
        let w = hardy(80);
        let probes = [
            FourierVector::unit(w, 0).unwrap(),
            FourierVector::unit(w, 1).unwrap(),
        ];
        let s = shift_matrix(w);
        let tag = classify_c_class(&s, &probes, 64, 1e-3).unwrap();
        assert_eq!(tag.forward, OrbitClass::C1Dot);
        let half = MatrixOperator::identity(w).scale(c(0.5));
        let tag = classify_c_class(&half, &probes, 64, 1e-3).unwrap();
        assert_eq!(tag.forward, OrbitClass::C0Dot);
        assert_eq!(tag.backward, OrbitClass::C0Dot);
    }

    #[test]
    fn riesz_of_two_vectors_matches_closed_form() {
        let w = hardy(1);
        let e0 = FourierVector::unit(w, 0).unwrap();
        let v = FourierVector::from_real(w, &[1.0, 0.1]).unwrap();
        let b = riesz_bounds(&[e0, v]).unwrap();
        // Unit vectors at angle theta: singular values sqrt(1 +- cos theta).
        let cos = 1.0 / (1.01f64).sqrt();
        assert_relative_eq!(b.lower, (1.0 - cos).sqrt(), max_relative = 1e-10);
        assert_relative_eq!(b.upper, (1.0 + cos).sqrt(), max_relative = 1e-10);
        assert!(b.lower < 1.0 && b.upper > 1.0);
    }

    #[test]
    fn dependent_family_reports_rank() {
        let w = hardy(2);
        let a = FourierVector::from_real(w, &[1.0, 2.0, 0.0]).unwrap();
        let b = a.scaled(c(-3.0));
        match riesz_bounds(&[a, b]) {
            Err(Error::DependentFamily { rank, size, .. }) => {
                assert_eq!(rank, 1);
                assert_eq!(size, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orthonormal_ladder_holds() {
        let ladder: Vec<(usize, Vec<FourierVector>)> = [4usize, 8, 16]
            .iter()
            .map(|&n| {
                let w = hardy(n);
                (n, (0..n as i64).map(|k| FourierVector::unit(w, k).unwrap()).collect())
            })
            .collect();
        let v = asymptote_verdict(&ladder).unwrap();
        assert_eq!(v.kind, VerdictKind::LowerBoundHolds);
        assert!(v.lower_bound_curve.iter().all(|c| (c.1 - 1.0).abs() < 1e-12));
        assert!(asymptote_verdict(&ladder[..2]).is_err());
    }

    #[test]
    fn delta_examples() {
        let w = hardy(1);
        let id = MatrixOperator::identity(w);
        let v = FourierVector::from_real(w, &[0.3, -2.0]).unwrap();
        assert_relative_eq!(delta_lower_bound(&id, &[v]).unwrap(), 1.0, max_relative = 1e-12);
        let d = MatrixOperator::diagonal(w, &[c(1.0), c(0.5)]).unwrap();
        let e1 = FourierVector::unit(w, 1).unwrap();
        assert_relative_eq!(delta_lower_bound(&d, &[e1]).unwrap(), 0.5, max_relative = 1e-12);
        assert_eq!(delta_lower_bound(&d, &[]), Err(Error::EmptyBasis));
    }
}
