//! Default tolerances.
//!
//! Exact algebraic identities are held to [`EXACT`]; quantities that come out
//! of an iteration or a limit estimate are held to [`ITERATIVE`]. Every
//! operation that takes a tolerance accepts an explicit value, and
//! [`Tolerances`] collects the named defaults so a caller (the CLI's
//! `--tol name=value`) can override them in one place.

use std::collections::BTreeMap;

/// Algebraic identities: biorthogonality, projection algebra, intertwinings.
pub const EXACT: f64 = 1e-10;

/// Iterative quantities: singular values by iteration, Cesaro limits.
pub const ITERATIVE: f64 = 1e-8;

/// Relative singular-value floor below which a family counts as dependent.
pub const RANK: f64 = 1e-12;

/// Norm estimate above which powering stops with a non-power-bounded error.
pub const GROWTH_CAP: f64 = 1e6;

/// Log-log slope below which a lower-bound ladder counts as decaying.
pub const DECAY_SLOPE: f64 = -0.05;

/// Minimum coefficient of determination for a decay verdict.
pub const DECAY_FIT_R2: f64 = 0.9;

/// Circle samples used for unimodularity and the constant in `phi0 = c v conj(u) conj(phi0)`.
pub const CIRCLE_SAMPLES: usize = 256;

/// Relative orbit norm under which an orbit counts as vanished in suites.
pub const ORBIT: f64 = 1e-3;

/// Named tolerance table.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    values: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        let values = [
            ("exact", EXACT),
            ("iterative", ITERATIVE),
            ("orbit", ORBIT),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self { values }
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn exact(&self) -> f64 {
        self.values["exact"]
    }

    pub fn iterative(&self) -> f64 {
        self.values["iterative"]
    }

    pub fn orbit(&self) -> f64 {
        self.values["orbit"]
    }

    /// Overrides a known tolerance. Unknown names are rejected so typos in
    /// experiment configs surface instead of silently doing nothing.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance {name} must be positive and finite"));
        }
        match self.values.get_mut(name) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(format!("unknown tolerance name {name}")),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}
