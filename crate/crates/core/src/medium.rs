use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Bulk properties of the atomic slab. Index 0 is the probe (storage) field,
/// index 1 the echo (retrieval) field.
///
/// `beta` is the composite coupling `2 pi n0 S |g|^2 / v`; density, beam area
/// and single-atom coupling never appear separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub beta: [f64; 2],
    pub length: f64,
    #[serde(default = "unit_pair")]
    pub refractive_index: [f64; 2],
    #[serde(default = "fast_pair")]
    pub group_velocity: [f64; 2],
}

fn unit_pair() -> [f64; 2] {
    [1.0, 1.0]
}

fn fast_pair() -> [f64; 2] {
    [1e6, 1e6]
}

impl MediumSpec {
    pub fn new(beta: f64, length: f64) -> Result<Self> {
        let m = Self {
            beta: [beta, beta],
            length,
            refractive_index: unit_pair(),
            group_velocity: fast_pair(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(invalid("beta", "coupling must be positive and finite"));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(invalid("length", "medium length must be positive"));
        }
        if self.refractive_index.iter().any(|n| !(*n >= 1.0)) {
            return Err(invalid("refractive_index", "must be >= 1"));
        }
        if self.group_velocity.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid("group_velocity", "must be positive"));
        }
        Ok(())
    }

    /// On-resonance absorption coefficient `beta sqrt(pi/2) / width` for a
    /// Gaussian one-photon line of standard deviation `natural_width`.
    pub fn alpha0(&self, natural_width: f64) -> Result<f64> {
        if !(natural_width > 0.0) {
            return Err(Error::NonPositiveWidth(natural_width));
        }
        Ok(self.beta[0] * (std::f64::consts::PI / 2.0).sqrt() / natural_width)
    }

    /// Check a user-supplied `alpha0` against the derived value.
    pub fn check_alpha0(&self, alpha0: f64, natural_width: f64) -> Result<()> {
        let expected = self.alpha0(natural_width)?;
        if ((alpha0 - expected) / expected).abs() > 1e-12 {
            return Err(Error::InconsistentAlpha0 {
                given: alpha0,
                expected,
            });
        }
        Ok(())
    }
}
