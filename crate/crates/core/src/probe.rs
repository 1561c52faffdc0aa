use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Peak `|zeta| / |Omega|` (equivalently `|g A| / |Delta|`) at `amplitude_scale = 1`.
pub const WEAK_REFERENCE_RATIO: f64 = 1e-3;

/// Gaussian probe pulse entering the medium at `Z = 0`.
///
/// The envelope is expressed in the frame co-rotating with the Stark-shifted
/// Raman resonance. `spectral_width` is the rms width of the power spectrum,
/// and the nominal duration is its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub center: f64,
    pub spectral_width: f64,
    #[serde(default = "one")]
    pub amplitude_scale: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub carrier: f64,
}

fn one() -> f64 {
    1.0
}

impl ProbeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.spectral_width > 0.0) {
            return Err(invalid("spectral_width", "must be positive"));
        }
        if !(self.amplitude_scale >= 0.0) {
            return Err(invalid("amplitude_scale", "must be non-negative"));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        1.0 / self.spectral_width
    }

    /// Temporal standard deviation of the amplitude envelope.
    pub fn sigma_t(&self) -> f64 {
        1.0 / (self.spectral_width * std::f64::consts::SQRT_2)
    }

    /// Unit-peak envelope shape.
    pub fn shape(&self, tau: f64) -> Complex64 {
        let x = (tau - self.center) / self.sigma_t();
        Complex64::from_polar((-0.5 * x * x).exp(), self.phase)
    }

    /// Peak `|g A|` for a stage-1 one-photon detuning `detuning`.
    pub fn peak_amplitude(&self, detuning: f64) -> f64 {
        WEAK_REFERENCE_RATIO * self.amplitude_scale * detuning.abs()
    }

    /// Check that the envelope has decayed below `1e-6` of its peak at both
    /// ends of `[0, window]`.
    pub fn check_support(&self, window: f64) -> Result<()> {
        let edge = self.shape(0.0).norm().max(self.shape(window).norm());
        if edge > 1e-6 {
            return Err(invalid(
                "probe",
                format!("envelope not contained in the storage window [0, {window}] (edge value {edge:.2e})"),
            ));
        }
        Ok(())
    }

    /// Rms spectral width of the sampled envelope, from finite differences.
    pub fn sampled_rms_bandwidth(&self, window: f64, n: usize) -> f64 {
        let h = window / (n - 1) as f64;
        let samples: Vec<Complex64> = (0..n).map(|k| self.shape(h * k as f64)).collect();
        let energy: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * h;
        let slope: f64 = samples
            .windows(2)
            .map(|p| ((p[1] - p[0]) / h).norm_sqr())
            .sum::<f64>()
            * h;
        (slope / energy).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rms_bandwidth_consistent() {
        let p = ProbeSpec {
            center: 8.0,
            spectral_width: 0.5,
            amplitude_scale: 1.0,
            phase: 0.0,
            carrier: 0.0,
        };
        p.check_support(16.0).unwrap();
        let measured = p.sampled_rms_bandwidth(16.0, 2048);
        assert!((measured - 0.5).abs() / 0.5 < 0.05);
        assert!(p.check_support(10.0).is_err());
    }
}
