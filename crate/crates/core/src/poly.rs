//! Complex polynomials and rational functions in ascending coefficient order.

use nalgebra::Schur;

use crate::linalg::{c, CMatrix, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = Self { coeffs };
        p.trim_exact();
        p
    }

    pub fn constant(a: C64) -> Self {
        Self::new(vec![a])
    }

    pub fn one() -> Self {
        Self::constant(c(1.0))
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    /// `z^n`.
    pub fn monomial(n: usize) -> Self {
        let mut v = vec![C64::default(); n + 1];
        v[n] = c(1.0);
        Self::new(v)
    }

    /// `1 - z conj(zeta)`.
    pub fn reflection_factor(zeta: C64) -> Self {
        Self::new(vec![c(1.0), -zeta.conj()])
    }

    fn trim_exact(&mut self) {
        while self.coeffs.last().is_some_and(|z| *z == C64::default()) {
            self.coeffs.pop();
        }
    }

    /// Drops trailing coefficients below `eps` times the largest one.
    pub fn trimmed(&self, eps: f64) -> Self {
        let top = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut v = self.coeffs.clone();
        while v.last().is_some_and(|z| z.norm() <= eps * top) {
            v.pop();
        }
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::default(), |acc, a| acc * z + a)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![C64::default(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly::new(self.coeffs.iter().map(|a| a * s).collect())
    }

    /// Multiplication by `z^k`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![C64::default(); k];
        v.extend_from_slice(&self.coeffs);
        Poly::new(v)
    }

    /// Synthetic division by `z - r`: returns the quotient and the remainder.
    pub fn deflate_root(&self, r: C64) -> (Poly, C64) {
        if self.coeffs.len() <= 1 {
            return (Poly::zero(), self.coeff(0));
        }
        let n = self.coeffs.len() - 1;
        let mut q = vec![C64::default(); n];
        let mut acc = C64::default();
        for k in (0..=n).rev() {
            acc = acc * r + self.coeffs[k];
            if k > 0 {
                q[k - 1] = acc;
            }
        }
        (Poly::new(q), acc)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, a)| a * k as f64)
                .collect(),
        )
    }

    /// Roots as eigenvalues of the companion matrix, polished by Newton steps.
    pub fn roots(&self) -> Vec<C64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = self.coeffs[n];
        let mut comp = CMatrix::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = c(1.0);
        }
        for i in 0..n {
            comp[(i, n - 1)] = -self.coeffs[i] / lead;
        }
        let (_, t) = Schur::new(comp).unpack();
        let d = self.derivative();
        (0..n)
            .map(|i| {
                let mut z = t[(i, i)];
                for _ in 0..3 {
                    let dv = d.eval(z);
                    if dv.norm() == 0.0 {
                        break;
                    }
                    let step = self.eval(z) / dv;
                    if !step.re.is_finite() || !step.im.is_finite() {
                        break;
                    }
                    z -= step;
                }
                z
            })
            .collect()
    }
}

/// `num / den` with `den(0) != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rational {
    pub num: Poly,
    pub den: Poly,
}

impl Rational {
    pub fn new(num: Poly, den: Poly) -> Self {
        Self { num, den }
    }

    pub fn polynomial(p: Poly) -> Self {
        Self::new(p, Poly::one())
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Taylor coefficients at 0 of degrees `0..len`, by series division.
    pub fn taylor(&self, len: usize) -> Vec<C64> {
        let d0 = self.den.coeff(0);
        let dc = self.den.coeffs();
        let mut out = vec![C64::default(); len];
        for k in 0..len {
            let mut acc = self.num.coeff(k);
            for (j, dj) in dc.iter().enumerate().skip(1).take(k) {
                acc -= dj * out[k - j];
            }
            out[k] = acc / d0;
        }
        out
    }

    pub fn mul(&self, other: &Rational) -> Rational {
        Rational::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    /// Smallest modulus among the poles (infinite for polynomials).
    pub fn min_pole_modulus(&self) -> f64 {
        self.den
            .roots()
            .iter()
            .map(|r| r.norm())
            .fold(f64::INFINITY, f64::min)
    }
}
