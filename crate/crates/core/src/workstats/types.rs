use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the normalization and conjugate-symmetry invariants.
pub const CF_INVARIANT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkDefinition {
    Tpm,
    Fcs,
    Mh,
    Classical,
}

impl WorkDefinition {
    pub const QUANTUM: [WorkDefinition; 3] = [Self::Tpm, Self::Fcs, Self::Mh];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Tpm => "tpm",
            Self::Fcs => "fcs",
            Self::Mh => "mh",
            Self::Classical => "classical",
        }
    }
}

impl fmt::Display for WorkDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WorkDefinition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tpm" => Ok(Self::Tpm),
            "fcs" => Ok(Self::Fcs),
            "mh" => Ok(Self::Mh),
            "classical" => Ok(Self::Classical),
            other => Err(Error::InvalidArgument(format!(
                "unknown work definition '{other}' (expected tpm, fcs, mh or classical)"
            ))),
        }
    }
}

/// `points` uniform values on `[lo, hi]`. A grid symmetric about zero is
/// exactly antisymmetric and contains 0 when `points` is odd.
pub fn eta_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || points < 2 {
        return Err(Error::InvalidArgument(format!(
            "eta grid needs lo < hi and at least 2 points, got [{lo}, {hi}] with {points}"
        )));
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|i| (lo * (points - 1 - i) as f64 + hi * i as f64) / n)
        .collect())
}

/// 161 points on `[−4, 4]`.
pub fn default_eta_grid() -> Vec<f64> {
    eta_grid(-4.0, 4.0, 161).expect("static grid is valid")
}

/// Values of a work characteristic function on an η grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicSamples {
    pub definition: WorkDefinition,
    pub etas: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl CharacteristicSamples {
    /// Checks `Φ(0) = 1` and `Φ(−η) = conj Φ(η)` wherever the grid allows.
    pub fn new(definition: WorkDefinition, etas: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if etas.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: etas.len(),
                got: values.len(),
            });
        }
        let samples = Self {
            definition,
            etas,
            values,
        };
        let defect = samples.invariant_defect();
        if !(defect < CF_INVARIANT_TOL) {
            return Err(Error::Consistency(format!(
                "{definition} characteristic function violates Φ(0)=1 or conjugate symmetry by {defect:.3e}"
            )));
        }
        Ok(samples)
    }

    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }

    /// Largest violation of the normalization and symmetry invariants.
    pub fn invariant_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        let mut index: HashMap<u64, usize> = HashMap::new();
        for (i, &eta) in self.etas.iter().enumerate() {
            if eta == 0.0 {
                worst = worst.max((self.values[i] - Complex64::new(1.0, 0.0)).norm());
            }
            index.insert(eta.to_bits(), i);
        }
        for (i, &eta) in self.etas.iter().enumerate() {
            if eta > 0.0 {
                if let Some(&j) = index.get(&(-eta).to_bits()) {
                    worst = worst.max((self.values[i] - self.values[j].conj()).norm());
                }
            }
        }
        worst
    }

    pub fn value_at(&self, eta: f64) -> Option<Complex64> {
        self.etas
            .iter()
            .position(|&e| e == eta)
            .map(|i| self.values[i])
    }

    /// `max_i |Φ_i − Ψ_i|` against samples on the same grid.
    pub fn max_difference(&self, other: &CharacteristicSamples) -> Result<f64> {
        if self.etas != other.etas {
            return Err(Error::InvalidArgument(
                "characteristic functions sampled on different grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Real weights on a discrete work support; weights may be negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkQuasiDistribution {
    pub definition: WorkDefinition,
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
    pub merge_tol: f64,
    /// Largest imaginary part discarded when a merged weight was made real.
    pub max_imag_residual: f64,
}

impl WorkQuasiDistribution {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Total negative weight.
    pub fn negativity(&self) -> f64 {
        self.weights.iter().filter(|w| **w < 0.0).map(|w| -w).sum()
    }

    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(w, p)| p * f(*w))
            .sum()
    }

    pub fn moment(&self, order: i32) -> f64 {
        self.expectation(|w| w.powi(order))
    }

    /// `Σ weights · e^{iηW}`.
    pub fn resum(&self, eta: f64) -> Complex64 {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(w, p)| Complex64::from_polar(*p, eta * w))
            .sum()
    }

    pub fn characteristic(&self, etas: &[f64]) -> Vec<Complex64> {
        etas.iter().map(|&e| self.resum(e)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JarzynskiReport {
    pub definition: WorkDefinition,
    pub lhs: f64,
    pub rhs: f64,
    pub delta_f: f64,
    pub discrepancy: f64,
}

impl JarzynskiReport {
    pub fn new(definition: WorkDefinition, lhs: f64, rhs: f64, delta_f: f64) -> Self {
        Self {
            definition,
            lhs,
            rhs,
            delta_f,
            discrepancy: (lhs - rhs).abs(),
        }
    }
}
