//! Bilateral weighted shifts and the spaces `L^2_omega`.
//!
//! A weight is nonincreasing on the integers and equal to 1 on `n >= 0`; only
//! the negative half `omega(-n)` is stored or generated. All matrices use the
//! orthonormalized coordinates described in [`crate::linalg`].

use std::sync::Arc;

use crate::asymptote::{cesaro_gram_limit, GramLimitReport};
use crate::error::{Error, Result};
use crate::linalg::{
    c, gram_matrix, max_abs_diff, matrix_smallest_singular_value, shift_matrix, CMatrix, FourierVector,
    IndexWindow, MatrixOperator, C64,
};
use crate::{par, tol};

/// Level above which a weight is flagged as growing without bound.
pub const UNBOUNDED_LEVEL: f64 = 1e3;

/// Ladder used when a caller needs a classifier verdict without naming one.
pub const DEFAULT_CLASSIFIER_LADDER: [usize; 4] = [10, 100, 1_000, 10_000];

/// Slope of the log-rate fit separating quasianalytic from regular trends.
const TREND_SLOPE_SPLIT: f64 = -0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// `omega(-n) = exp(beta * n)`.
    Exponential { beta: f64 },
    /// `omega(-n) = exp(n^alpha)`.
    Stretched { alpha: f64 },
    /// `omega(-1), omega(-2), ...`; the last value is repeated beyond the table.
    Table { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    kind: WeightKind,
    window: IndexWindow,
}

impl Weight {
    pub fn new(kind: WeightKind, window: IndexWindow) -> Result<Self> {
        match &kind {
            WeightKind::Exponential { beta } => {
                if !(beta.is_finite() && *beta >= 0.0) {
                    return Err(Error::ParameterOutOfRange {
                        name: "beta",
                        value: *beta,
                    });
                }
            }
            WeightKind::Stretched { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::ParameterOutOfRange {
                        name: "alpha",
                        value: *alpha,
                    });
                }
            }
            WeightKind::Table { values } => {
                let mut prev = 1.0;
                for (k, &v) in values.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::InvalidWeight(format!("omega({}) is not finite", -(k as i64) - 1)));
                    }
                    if v < prev {
                        return Err(Error::InvalidWeight(format!(
                            "omega({}) = {v} is below omega({}) = {prev}",
                            -(k as i64) - 1,
                            -(k as i64)
                        )));
                    }
                    prev = v;
                }
            }
        }
        Ok(Self { kind, window })
    }

    /// `omega = 1` everywhere.
    pub fn constant(window: IndexWindow) -> Self {
        Self {
            kind: WeightKind::Table { values: Vec::new() },
            window,
        }
    }

    pub fn exponential(window: IndexWindow, beta: f64) -> Result<Self> {
        Self::new(WeightKind::Exponential { beta }, window)
    }

    pub fn stretched(window: IndexWindow, alpha: f64) -> Result<Self> {
        Self::new(WeightKind::Stretched { alpha }, window)
    }

    pub fn table(window: IndexWindow, values: &[f64]) -> Result<Self> {
        Self::new(
            WeightKind::Table {
                values: values.to_vec(),
            },
            window,
        )
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn window(&self) -> IndexWindow {
        self.window
    }

    /// Same weight on another window.
    pub fn with_window(&self, window: IndexWindow) -> Self {
        Self {
            kind: self.kind.clone(),
            window,
        }
    }

    /// `log omega(n)`; finite even where `omega(n)` itself overflows.
    pub fn log_value(&self, n: i64) -> f64 {
        if n >= 0 {
            return 0.0;
        }
        let m = (-n) as f64;
        match &self.kind {
            WeightKind::Exponential { beta } => beta * m,
            WeightKind::Stretched { alpha } => m.powf(*alpha),
            WeightKind::Table { values } => {
                let k = (-n - 1) as usize;
                values
                    .get(k)
                    .or(values.last())
                    .map_or(0.0, |v| v.ln())
            }
        }
    }

    pub fn value(&self, n: i64) -> f64 {
        if n >= 0 {
            return 1.0;
        }
        if let WeightKind::Table { values } = &self.kind {
            let k = (-n - 1) as usize;
            return values.get(k).or(values.last()).copied().unwrap_or(1.0);
        }
        self.log_value(n).exp()
    }

    /// Whether the weight exceeds [`UNBOUNDED_LEVEL`] inside its window.
    pub fn unbounded_trend(&self) -> bool {
        self.log_value(self.window.lo()) > UNBOUNDED_LEVEL.ln()
    }
}

/// `S_omega`: subdiagonal entries `omega(n+1)/omega(n)`.
pub fn weighted_shift(w: &Weight) -> MatrixOperator {
    let window = w.window();
    let mut m = CMatrix::zeros(window.len(), window.len());
    for j in 0..window.len().saturating_sub(1) {
        let n = window.index_at(j);
        m[(j + 1, j)] = c((w.log_value(n + 1) - w.log_value(n)).exp());
    }
    MatrixOperator::square(window, m).expect("dimensions follow the window")
}

/// `max omega(n-1)/omega(n)` over the window.
pub fn invertibility_index(w: &Weight) -> f64 {
    let window = w.window();
    (window.lo() + 1..=window.hi())
        .map(|n| (w.log_value(n - 1) - w.log_value(n)).exp())
        .fold(1.0, f64::max)
}

/// The embedding `Y_omega` of `L^2_omega` into `L^2`: diagonal `1/omega(n)`.
pub fn embedding_y(w: &Weight) -> MatrixOperator {
    let diag: Vec<C64> = w
        .window()
        .indices()
        .map(|n| c((-w.log_value(n)).exp()))
        .collect();
    MatrixOperator::diagonal(w.window(), &diag).expect("dimensions follow the window")
}

/// The unweighted truncated bilateral shift `U` on the weight's window.
pub fn unweighted_shift(window: IndexWindow) -> MatrixOperator {
    shift_matrix(window)
}

/// The embedding `J` of `L^2_omega0` into `L^2_omega`: diagonal `omega/omega0`.
pub fn nested_embedding_j(w0: &Weight, w: &Weight) -> Result<MatrixOperator> {
    if w0.window() != w.window() {
        return Err(Error::WindowMismatch {
            left: w0.window(),
            right: w.window(),
        });
    }
    let mut diag = Vec::with_capacity(w.window().len());
    for n in w.window().indices() {
        let gap = w.log_value(n) - w0.log_value(n);
        if gap > 1e-12 * w.log_value(n).abs().max(1.0) {
            return Err(Error::WeightDomination { n });
        }
        diag.push(c(gap.min(0.0).exp()));
    }
    MatrixOperator::diagonal(w.window(), &diag)
}

/// Compression of `S_omega^{-1}` to the indices `-m..=0`.
pub fn inverse_shift_compression(w: &Weight, m: usize) -> Result<MatrixOperator> {
    let window = IndexWindow::new(-(m as i64), 0)?;
    let mut a = CMatrix::zeros(window.len(), window.len());
    for j in 1..window.len() {
        let n = window.index_at(j);
        a[(j - 1, j)] = c((w.log_value(n - 1) - w.log_value(n)).exp());
    }
    MatrixOperator::square(window, a)
}

/// Eigenvector of the adjoint of the compressed inverse shift on `[-m, 0]`:
/// `f(0) = 1`, `f(-n) = zeta^n / omega(-n)^2`.
///
/// Returns the vector and `|| A* f - zeta f ||` over the whole truncation.
/// The eigenvalue is `zeta` itself; the boundary row at `-m` carries the
/// only nonzero residual, `|zeta|^(m+1) / omega(-m)`.
pub fn inverse_compression_eigenvector(
    w: &Weight,
    zeta: C64,
    m: usize,
) -> Result<(FourierVector, f64)> {
    if !(zeta.norm() <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "|zeta|",
            value: zeta.norm(),
        });
    }
    if m == 0 {
        return Err(Error::TruncationTooSmall("eigenvector window needs m >= 1".into()));
    }
    let local = w.with_window(IndexWindow::new(-(m as i64), 0)?);
    if !local.unbounded_trend() {
        return Err(Error::WeightHypothesis(format!(
            "omega({}) = {:e} does not exceed {UNBOUNDED_LEVEL:e}, so sum 1/omega^2 shows no convergence",
            -(m as i64),
            local.value(-(m as i64))
        )));
    }
    let index = invertibility_index(&local);
    if !index.is_finite() || index > 1.0 / tol::RANK {
        return Err(Error::WeightHypothesis(format!(
            "invertibility index {index:e} is not finite at truncation scale"
        )));
    }
    let window = local.window();
    let weight = Arc::new(local);
    let mut coeffs = vec![C64::default(); window.len()];
    let mut power = c(1.0);
    for k in 0..=m {
        let n = -(k as i64);
        let slot = window.offset(n).expect("index inside the window");
        coeffs[slot] = power * (-2.0 * weight.log_value(n)).exp();
        power *= zeta;
    }
    let f = FourierVector::new(window, coeffs)?.with_weight(weight.clone());
    let a = inverse_shift_compression(&weight, m)?;
    let g = nalgebra::DVector::from_vec(f.orthonormal_coords());
    let lhs = a.adjoint().entries() * &g;
    let residual = (lhs - g * zeta).norm();
    Ok((f, residual))
}

/// Residuals of [`inverse_compression_eigenvector`] over the square grid of
/// spacing `spacing` restricted to `|zeta| <= radius`.
pub fn eigenvector_residual_grid(
    w: &Weight,
    m: usize,
    spacing: f64,
    radius: f64,
) -> Result<Vec<(C64, f64)>> {
    if !(spacing > 0.0) || !(radius >= 0.0) || radius > 1.0 {
        return Err(Error::ParameterOutOfRange {
            name: "grid",
            value: spacing,
        });
    }
    let steps = (radius / spacing + 1e-9).floor() as i64;
    let mut points = Vec::new();
    for i in -steps..=steps {
        for j in -steps..=steps {
            let z = C64::new(i as f64 * spacing, j as f64 * spacing);
            if z.norm() <= radius + 1e-12 {
                points.push(z);
            }
        }
    }
    par::try_map(&points, |&z| {
        inverse_compression_eigenvector(w, z, m).map(|(_, r)| (z, r))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightTrend {
    QuasianalyticTrend,
    RegularTrend,
    Inconclusive,
}

impl WeightTrend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::QuasianalyticTrend => "quasianalytic-trend",
            Self::RegularTrend => "regular-trend",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVerdict {
    pub invertibility_index: f64,
    /// `(N, sum_{n<=N} log omega(-n) / n^2)` per rung.
    pub quasi_partial_sums: Vec<(usize, f64)>,
    pub verdict: WeightTrend,
    /// Fitted exponent `p` of the growth rate `ds/dlog N ~ N^p`.
    pub trend_exponent: Option<f64>,
    /// Extrapolated remainder of the series past the last rung.
    pub tail_estimate: Option<f64>,
}

/// Partial sums `sum_{n=1}^{N} log omega(-n) / n^2` at each `N` of a ladder.
pub fn quasi_partial_sums(w: &Weight, ladder: &[usize]) -> Result<Vec<(usize, f64)>> {
    if ladder.is_empty() {
        return Err(Error::LadderTooShort { needed: 1, got: 0 });
    }
    if ladder[0] == 0 || ladder.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::LadderNotIncreasing);
    }
    let mut out = Vec::with_capacity(ladder.len());
    let mut sum = 0.0;
    let mut n = 0usize;
    for &top in ladder {
        while n < top {
            n += 1;
            let k = n as f64;
            sum += w.log_value(-(n as i64)) / (k * k);
        }
        out.push((top, sum));
    }
    Ok(out)
}

/// Least-squares line through `(x, y)`; returns slope, intercept and R^2.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Trend verdict on `sum log omega(-n) / n^2` along a ladder.
///
/// The growth rate of the partial sums per unit `log N` is estimated between
/// rungs and fitted as a power of `N`. A rate that does not decay (harmonic
/// growth has rate 1) is a quasianalytic trend; a decaying rate is a regular
/// trend, and the remainder is extrapolated by integrating the fitted rate.
pub fn quasianalytic_classifier(w: &Weight, ladder: &[usize]) -> Result<WeightVerdict> {
    let sums = quasi_partial_sums(w, ladder)?;
    let invertibility_index = invertibility_index(w);
    let mut verdict = WeightVerdict {
        invertibility_index,
        quasi_partial_sums: sums.clone(),
        verdict: WeightTrend::Inconclusive,
        trend_exponent: None,
        tail_estimate: None,
    };
    if sums.iter().all(|&(_, s)| s == 0.0) {
        verdict.verdict = WeightTrend::RegularTrend;
        verdict.tail_estimate = Some(0.0);
        return Ok(verdict);
    }
    if sums.len() < 3 {
        return Ok(verdict);
    }
    let mut mids = Vec::new();
    let mut rates = Vec::new();
    for p in sums.windows(2) {
        let (n0, s0) = (p[0].0 as f64, p[0].1);
        let (n1, s1) = (p[1].0 as f64, p[1].1);
        mids.push(0.5 * (n0.ln() + n1.ln()));
        rates.push((s1 - s0) / (n1 / n0).ln());
    }
    let last_rate = *rates.last().unwrap();
    if last_rate <= 0.0 {
        verdict.verdict = WeightTrend::RegularTrend;
        verdict.tail_estimate = Some(0.0);
        return Ok(verdict);
    }
    if rates.iter().any(|&r| r <= 0.0) {
        return Ok(verdict);
    }
    let logs: Vec<f64> = rates.iter().map(|r| r.ln()).collect();
    let (p, _, _) = linear_fit(&mids, &logs);
    verdict.trend_exponent = Some(p);
    if p > TREND_SLOPE_SPLIT {
        verdict.verdict = WeightTrend::QuasianalyticTrend;
    } else {
        let top = (ladder[ladder.len() - 1] as f64).ln();
        let rate_at_top = last_rate * (p * (top - mids[mids.len() - 1])).exp();
        verdict.verdict = WeightTrend::RegularTrend;
        verdict.tail_estimate = Some(rate_at_top / p.abs());
    }
    Ok(verdict)
}

/// Outcome of [`block_gram_components`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGramReport {
    /// Cesaro limit of `(T0^n x_i, T0^n x_j)` with `T0 = S_omega0`.
    pub gram_limit: GramLimitReport,
    /// `(Y J x_i, Y J x_j)` in `L^2`.
    pub pushforward_gram: CMatrix,
    pub component_a_residual: f64,
    /// Cesaro limit of `(X0 x_i, X0 x_j) + (T0^n x_i, T0^n x_j) - (R0^n X0 x_i, R0^n X0 x_j)`.
    pub recursion_limit: CMatrix,
    /// `(X0 x_i, X0 x_j) + (A Y J x_i, A Y J x_j)`.
    pub assembled_gram: CMatrix,
    pub component_b_residual: f64,
    /// Smallest of the `min(rows, cols)` singular values of `X0`.
    pub x0_smallest_singular_value: f64,
    pub max_power: usize,
}

fn support_top(v: &FourierVector) -> i64 {
    let window = v.window();
    v.coeffs()
        .iter()
        .enumerate()
        .rev()
        .find(|(_, z)| z.norm() > 0.0)
        .map_or(window.lo(), |(k, _)| window.index_at(k))
}

/// Truncation-scale check of the two Gram-limit components behind the block
/// contraction built from a quasianalytic weight `w0` dominating a regular
/// weight `w`.
///
/// `E` is the negative-index half of `L^2`, `M = Y^{-1} E`, `K0 = L^2_omega
/// minus M` is the nonnegative half, `R0` is `S_omega` restricted to `K0`
/// and `X0 = c P_K0 J`. The constant `||h||^2` term common to both sides of
/// component (b) is left out.
pub fn block_gram_components(
    w0: &Weight,
    w: &Weight,
    c_scale: f64,
    probes: &[FourierVector],
) -> Result<BlockGramReport> {
    if !(c_scale > 0.0 && c_scale <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "c",
            value: c_scale,
        });
    }
    let v0 = quasianalytic_classifier(w0, &DEFAULT_CLASSIFIER_LADDER)?;
    if v0.verdict != WeightTrend::QuasianalyticTrend {
        return Err(Error::ClassifierMismatch(format!(
            "omega0 classified {}, expected quasianalytic-trend",
            v0.verdict.as_str()
        )));
    }
    let v = quasianalytic_classifier(w, &DEFAULT_CLASSIFIER_LADDER)?;
    if v.verdict != WeightTrend::RegularTrend {
        return Err(Error::ClassifierMismatch(format!(
            "omega classified {}, expected regular-trend",
            v.verdict.as_str()
        )));
    }
    let j = nested_embedding_j(w0, w)?;
    let window = w.window();
    if probes.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let w0_arc = Arc::new(w0.clone());
    let mut probes_w0 = Vec::with_capacity(probes.len());
    for p in probes {
        if p.window() != window {
            return Err(Error::WindowMismatch {
                left: window,
                right: p.window(),
            });
        }
        match p.weight() {
            None => probes_w0.push(p.clone().with_weight(w0_arc.clone())),
            Some(pw) if **pw == *w0 => probes_w0.push(p.clone()),
            Some(_) => return Err(Error::WeightMismatch),
        }
    }
    let top = probes_w0.iter().map(support_top).max().unwrap();
    if top < 0 && window.hi() < 0 {
        return Err(Error::TruncationTooSmall("window has no nonnegative half".into()));
    }
    let headroom = (window.hi() - top.max(0)).max(0) as usize;
    if headroom < 8 {
        return Err(Error::TruncationTooSmall(format!(
            "{headroom} indices of headroom above the probe support; need at least 8"
        )));
    }
    let max_power = 1usize << (usize::BITS - 1 - headroom.leading_zeros());
    let iter_tol = tol::ITERATIVE;

    // Component (a).
    let t0 = weighted_shift(w0);
    let gram_limit = cesaro_gram_limit(&t0, &probes_w0, max_power, iter_tol)?;
    let x_cols = crate::linalg::column_matrix(&probes_w0)?;
    let yj = embedding_y(w).compose(&j)?;
    let pushed = yj.entries() * &x_cols;
    let pushforward_gram = gram_matrix(&pushed);
    let component_a_residual = max_abs_diff(&gram_limit.gram, &pushforward_gram);

    // Component (b).
    let k0 = IndexWindow::new(0, window.hi())?;
    let k0_offset = window.offset(0).expect("window contains 0");
    let mut x0 = CMatrix::zeros(k0.len(), window.len());
    for r in 0..k0.len() {
        x0[(r, r + k0_offset)] = j.entries()[(r + k0_offset, r + k0_offset)] * c_scale;
    }
    let x0_op = MatrixOperator::new(window, k0, x0.clone())?;
    let s = weighted_shift(w);
    let r0 = MatrixOperator::square(
        k0,
        s.entries()
            .view((k0_offset, k0_offset), (k0.len(), k0.len()))
            .into_owned(),
    )?;
    let x0x = &x0 * &x_cols;
    let x0_gram = gram_matrix(&x0x);
    let x0_probes: Vec<FourierVector> = (0..x0x.ncols())
        .map(|col| FourierVector::new(k0, x0x.column(col).iter().copied().collect()))
        .collect::<Result<_>>()?;
    let r0_limit = cesaro_gram_limit(&r0, &x0_probes, max_power, iter_tol)?;
    let recursion_limit = &x0_gram + &gram_limit.gram - &r0_limit.gram;

    let damp = (1.0 - c_scale * c_scale).sqrt();
    let a_diag: Vec<C64> = window
        .indices()
        .map(|n| if n >= 0 { c(damp) } else { c(1.0) })
        .collect();
    let a = MatrixOperator::diagonal(window, &a_diag)?;
    let assembled_gram = &x0_gram + gram_matrix(&(a.entries() * &pushed));
    let component_b_residual = max_abs_diff(&recursion_limit, &assembled_gram);
    let x0_smallest_singular_value = matrix_smallest_singular_value(x0_op.entries(), iter_tol)?;

    Ok(BlockGramReport {
        gram_limit,
        pushforward_gram,
        component_a_residual,
        recursion_limit,
        assembled_gram,
        component_b_residual,
        x0_smallest_singular_value,
        max_power,
    })
}
