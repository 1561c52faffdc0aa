//! Classical control (writing / reading) fields.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Default ratio between the one-photon detuning and the probe bandwidth.
pub const OFF_RESONANCE_FACTOR: f64 = 10.0;

/// Plain parameters of a control pulse. `on` and `off` are the half-power
/// points of raised-cosine edges in the control parameter `f`, so the time
/// integral of `f` equals `f_peak * (off - on)` whenever both edges lie
/// inside the integration range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlParams {
    /// Peak Rabi frequency magnitude.
    pub rabi: f64,
    #[serde(default)]
    pub rabi_phase: f64,
    /// One-photon detuning from the 1-3 transition.
    pub detuning: f64,
    #[serde(default)]
    pub carrier: f64,
    #[serde(default)]
    pub wavevector: [f64; 3],
    pub on: f64,
    pub off: f64,
    #[serde(default)]
    pub rise: f64,
    #[serde(default)]
    pub fall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlProfile {
    params: ControlParams,
}

/// Integral of a raised-cosine ramp of duration `r` started at `u = 0`.
fn ramp_integral(u: f64, r: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= r {
        u - 0.5 * r
    } else {
        0.5 * (u - r / PI * (PI * u / r).sin())
    }
}

fn ramp(u: f64, r: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= r {
        1.0
    } else {
        0.5 * (1.0 - (PI * u / r).cos())
    }
}

impl ControlProfile {
    /// Build a control profile, enforcing `|detuning| >= factor * probe_bandwidth`.
    pub fn new(params: ControlParams, probe_bandwidth: f64, factor: f64) -> Result<Self> {
        let c = Self::unchecked(params)?;
        if params.detuning.abs() < factor * probe_bandwidth {
            return Err(Error::NotFarDetuned {
                detuning: params.detuning,
                bandwidth: probe_bandwidth,
                factor,
            });
        }
        Ok(c)
    }

    /// Build without the far-detuning guard (used for stage-2 profiles that
    /// are derived from an already validated stage 1, and in tests).
    pub fn unchecked(params: ControlParams) -> Result<Self> {
        if params.detuning == 0.0 || !params.detuning.is_finite() {
            return Err(invalid("detuning", "one-photon detuning must be non-zero"));
        }
        if !(params.rabi >= 0.0) {
            return Err(invalid("rabi", "must be non-negative"));
        }
        if params.rise < 0.0 || params.fall < 0.0 {
            return Err(invalid("rise/fall", "ramp durations must be non-negative"));
        }
        if params.off - params.on < 0.5 * (params.rise + params.fall) {
            return Err(invalid("on/off", "edges overlap"));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &ControlParams {
        &self.params
    }
    pub fn detuning(&self) -> f64 {
        self.params.detuning
    }
    pub fn carrier(&self) -> f64 {
        self.params.carrier
    }
    pub fn switch_times(&self) -> (f64, f64) {
        (self.params.on, self.params.off)
    }
    pub fn wavevector_z(&self) -> f64 {
        self.params.wavevector[2]
    }

    fn shape(&self, tau: f64) -> f64 {
        let p = &self.params;
        ramp(tau - (p.on - 0.5 * p.rise), p.rise) * (1.0 - ramp(tau - (p.off - 0.5 * p.fall), p.fall))
    }

    /// Complex Rabi frequency `Omega(tau)`.
    pub fn rabi(&self, tau: f64) -> Complex64 {
        Complex64::from_polar(self.params.rabi * self.shape(tau).sqrt(), self.params.rabi_phase)
    }

    pub fn f_peak(&self) -> f64 {
        (self.params.rabi / self.params.detuning).powi(2)
    }

    /// `f(tau) = |Omega(tau)|^2 / Delta^2`.
    pub fn f(&self, tau: f64) -> f64 {
        self.f_peak() * self.shape(tau)
    }

    /// `int_0^tau f(s) ds`, exact.
    pub fn f_integral(&self, tau: f64) -> f64 {
        let p = &self.params;
        let prim = |t: f64| {
            ramp_integral(t - (p.on - 0.5 * p.rise), p.rise) - ramp_integral(t - (p.off - 0.5 * p.fall), p.fall)
        };
        self.f_peak() * (prim(tau) - prim(0.0))
    }

    /// Control-induced Stark shift `Delta f(tau)`.
    pub fn stark_shift(&self, tau: f64) -> f64 {
        self.params.detuning * self.f(tau)
    }

    /// Accumulated Stark phase `psi(tau) = int_0^tau Delta f`.
    pub fn stark_phase(&self, tau: f64) -> f64 {
        self.params.detuning * self.f_integral(tau)
    }

    /// Mirror the profile in time over a window of length `span`.
    pub fn reversed(&self, span: f64) -> Self {
        let p = self.params;
        Self {
            params: ControlParams {
                on: span - p.off,
                off: span - p.on,
                rise: p.fall,
                fall: p.rise,
                ..p
            },
        }
    }

    pub fn with_params(&self, f: impl FnOnce(&mut ControlParams)) -> Result<Self> {
        let mut p = self.params;
        f(&mut p);
        Self::unchecked(p)
    }
}
