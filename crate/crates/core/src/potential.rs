//! Radial potentials `P(|x|)`, `Q(|x|)` with `P(r) → 1` at infinity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1 + coeff / (1 + r^power)`. Behaves as `1 + coeff/r^power + O(r^{-2·power})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuiltinPotential {
    pub coeff: f64,
    pub power: f64,
}

/// Piecewise-linear table in `r`; constant extension past both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedPotential {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Builtin(BuiltinPotential),
    Tabulated(TabulatedPotential),
}

pub fn builtin_potential(coeff: f64, power: f64) -> Result<Potential> {
    if !(power > 1.0) {
        return Err(Error::InvalidArgument(format!("potential power must exceed 1, got {power}")));
    }
    if !(coeff > -1.0) {
        return Err(Error::InvalidArgument(format!(
            "potential coefficient must exceed -1 to stay positive, got {coeff}"
        )));
    }
    Ok(Potential::Builtin(BuiltinPotential { coeff, power }))
}

impl TabulatedPotential {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() < 2 || radii.len() != values.len() {
            return Err(Error::InvalidArgument("tabulated potential needs >= 2 matching points".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 {
            return Err(Error::InvalidArgument("radii must be nonnegative and increasing".into()));
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument("potential values must be positive".into()));
        }
        Ok(Self { radii, values })
    }

    fn value(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r >= self.radii[n - 1] {
            return self.values[n - 1];
        }
        let i = self.radii.partition_point(|x| *x <= r) - 1;
        let t = (r - self.radii[i]) / (self.radii[i + 1] - self.radii[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

impl Potential {
    pub fn constant() -> Self {
        Potential::Builtin(BuiltinPotential { coeff: 0.0, power: 2.0 })
    }

    /// `P(r) - 1`, evaluated without cancellation for the builtin form.
    #[inline]
    pub fn excess(&self, r: f64) -> f64 {
        match self {
            Potential::Builtin(b) => {
                if b.coeff == 0.0 {
                    0.0
                } else {
                    b.coeff / (1.0 + r.powf(b.power))
                }
            }
            Potential::Tabulated(t) => t.value(r) - 1.0,
        }
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        match self {
            Potential::Builtin(_) => 1.0 + self.excess(r),
            Potential::Tabulated(t) => t.value(r),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Potential::Builtin(b) if b.coeff == 0.0)
    }

    /// `(coeff, power)` of the leading `coeff / r^power` law, when known.
    pub fn leading_law(&self) -> Option<(f64, f64)> {
        match self {
            Potential::Builtin(b) => Some((b.coeff, b.power)),
            Potential::Tabulated(_) => None,
        }
    }
}
