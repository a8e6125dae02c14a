use serde::{Deserialize, Serialize};

use super::PropernessError;

/// Number of nodes in the fixed midpoint rule used for continuous beliefs.
pub const QUADRATURE_POINTS: usize = 10_001;

/// A forecaster's belief about an unknown quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BeliefDistribution {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Uniform in `ln x` on `[lo, hi]`, `lo > 0`.
    LogUniform { lo: f64, hi: f64 },
    /// Finitely many `(value, probability)` atoms.
    Discrete { atoms: Vec<(f64, f64)> },
}

impl BeliefDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, PropernessError> {
        let b = Self::Uniform { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn log_uniform(lo: f64, hi: f64) -> Result<Self, PropernessError> {
        let b = Self::LogUniform { lo, hi };
        b.validate()?;
        Ok(b)
    }

    /// Atoms are sorted by value; probabilities must sum to one.
    pub fn discrete(mut atoms: Vec<(f64, f64)>) -> Result<Self, PropernessError> {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let b = Self::Discrete { atoms };
        b.validate()?;
        Ok(b)
    }

    pub fn point_mass(value: f64) -> Result<Self, PropernessError> {
        Self::discrete(vec![(value, 1.0)])
    }

    pub fn validate(&self) -> Result<(), PropernessError> {
        let bad = |m: String| Err(PropernessError::InvalidBelief(m));
        match self {
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("uniform support [{lo}, {hi}] is degenerate"));
                }
            }
            Self::LogUniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && lo < hi) {
                    return bad(format!("log-uniform support [{lo}, {hi}] needs 0 < lo < hi"));
                }
            }
            Self::Discrete { atoms } => {
                if atoms.is_empty() {
                    return bad("no atoms".into());
                }
                if atoms.iter().any(|(v, p)| !v.is_finite() || !(0.0..=1.0).contains(p)) {
                    return bad("atoms need finite values and probabilities in [0, 1]".into());
                }
                if atoms.windows(2).any(|w| w[0].0 > w[1].0) {
                    return bad("atoms must be sorted by value".into());
                }
                let total: f64 = atoms.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("atom probabilities sum to {total}"));
                }
            }
        }
        Ok(())
    }

    /// Generalized inverse CDF: the smallest `x` with `F(x) ≥ u`.
    pub fn quantile(&self, u: f64) -> Result<f64, PropernessError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(PropernessError::InvalidLevel(u));
        }
        Ok(match self {
            Self::Uniform { lo, hi } => lo + u * (hi - lo),
            Self::LogUniform { lo, hi } => (lo.ln() + u * (hi.ln() - lo.ln())).exp(),
            Self::Discrete { atoms } => {
                let mut cumulative = 0.0;
                let mut value = atoms[atoms.len() - 1].0;
                for (v, p) in atoms {
                    cumulative += p;
                    if cumulative >= u - 1e-12 {
                        value = *v;
                        break;
                    }
                }
                value
            }
        })
    }

    /// Smallest and largest value the belief can produce.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Uniform { lo, hi } | Self::LogUniform { lo, hi } => (*lo, *hi),
            Self::Discrete { atoms } => (atoms[0].0, atoms[atoms.len() - 1].0),
        }
    }

    /// Quadrature nodes and weights with the default resolution.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        self.nodes_with(QUADRATURE_POINTS)
    }

    /// Midpoint rule with `n` cells for continuous beliefs (in `ln x` for the
    /// log-uniform case); exact atoms for discrete ones.
    pub fn nodes_with(&self, n: usize) -> Vec<(f64, f64)> {
        let w = 1.0 / n as f64;
        let mid = |i: usize| (i as f64 + 0.5) * w;
        match self {
            Self::Uniform { lo, hi } => (0..n).map(|i| (lo + mid(i) * (hi - lo), w)).collect(),
            Self::LogUniform { lo, hi } => {
                let (a, b) = (lo.ln(), hi.ln());
                (0..n).map(|i| ((a + mid(i) * (b - a)).exp(), w)).collect()
            }
            Self::Discrete { atoms } => atoms.clone(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::Discrete { .. })
    }
}
