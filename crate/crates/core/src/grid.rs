//! Sampling grids and the Z-direction field stepper.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Moving frame of a stage: `tau1 = t - Z/v1` for the probe, `tau2 = t + Z/v2 - tau_e` for the echo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MovingFrame {
    Probe,
    Echo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n_tau: usize,
    pub n_z: usize,
    /// Duration of each stage window.
    pub tau_span: f64,
}

impl Grid {
    pub fn new(n_tau: usize, n_z: usize, tau_span: f64) -> Result<Self> {
        let g = Self { n_tau, n_z, tau_span };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tau < 2 || self.n_z < 2 {
            return Err(invalid("grid", "need at least 2 samples in tau and Z"));
        }
        if !(self.tau_span > 0.0) {
            return Err(invalid("tau_span", "must be positive"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.tau_span / (self.n_tau - 1) as f64
    }

    pub fn dz(&self, length: f64) -> f64 {
        length / (self.n_z - 1) as f64
    }

    pub fn tau(&self, k: usize) -> f64 {
        self.dt() * k as f64
    }

    pub fn z(&self, k: usize, length: f64) -> f64 {
        self.dz(length) * k as f64
    }

    /// Refine every axis by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_tau: (self.n_tau - 1) * factor + 1,
            n_z: (self.n_z - 1) * factor + 1,
            tau_span: self.tau_span,
        }
    }

    /// Phase-rotation resolution guard: `dt * max_detuning <= 0.5`.
    pub fn check_phase_resolution(&self, max_detuning: f64) -> Result<()> {
        let value = self.dt() * max_detuning;
        if value > 0.5 {
            return Err(Error::StepTooCoarse {
                what: "dt * max detuning",
                value,
            });
        }
        Ok(())
    }

    /// Z-step guard: `dz * beta f_max / 2 * max kernel <= 0.5`.
    pub fn check_z_resolution(&self, length: f64, beta: f64, f_max: f64, kernel_max: f64) -> Result<()> {
        let value = self.dz(length) * beta * f_max / 2.0 * kernel_max;
        if value > 0.5 {
            return Err(Error::StepTooCoarse {
                what: "dz * beta f / 2 * |B|",
                value,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// From `Z = 0` towards `Z = L`.
    Forward,
    /// From `Z = L` towards `Z = 0`.
    Backward,
}

/// Solve `d zeta / dZ = a(Z) zeta + b(Z)` on a uniform grid given samples of
/// `a` and `b`, with `zeta` fixed at the starting face of the sweep.
///
/// The linear part is removed with an integrating factor built from the
/// trapezoidal integral of `a`; the remaining source is integrated with a
/// four-point (cubic) rule per cell, so an oscillating phase in `b` that
/// matches `a` costs no accuracy.
pub fn integrate_z(a: &[Complex64], b: &[Complex64], boundary: Complex64, dz: f64, sweep: Sweep, out: &mut [Complex64]) {
    let n = b.len();
    debug_assert!(a.is_empty() || a.len() == n);
    debug_assert_eq!(out.len(), n);
    let idx = |k: usize| match sweep {
        Sweep::Forward => k,
        Sweep::Backward => n - 1 - k,
    };
    let sign = match sweep {
        Sweep::Forward => 1.0,
        Sweep::Backward => -1.0,
    };
    let h = dz * sign;
    let has_a = !a.is_empty();
    let mut big_a = vec![Complex64::new(0.0, 0.0); n];
    let mut g = vec![Complex64::new(0.0, 0.0); n];
    g[0] = b[idx(0)];
    for k in 1..n {
        if has_a {
            big_a[k] = big_a[k - 1] + 0.5 * h * (a[idx(k - 1)] + a[idx(k)]);
            g[k] = (-big_a[k]).exp() * b[idx(k)];
        } else {
            g[k] = b[idx(k)];
        }
    }
    let mut u = boundary;
    out[idx(0)] = boundary;
    for k in 0..n - 1 {
        let cell = if n < 4 {
            0.5 * (g[k] + g[k + 1])
        } else if k == 0 {
            (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]) / 24.0
        } else if k == n - 2 {
            (g[n - 4] - 5.0 * g[n - 3] + 19.0 * g[n - 2] + 9.0 * g[n - 1]) / 24.0
        } else {
            (-g[k - 1] + 13.0 * g[k] + 13.0 * g[k + 1] - g[k + 2]) / 24.0
        };
        u += h * cell;
        out[idx(k + 1)] = if has_a { big_a[k + 1].exp() * u } else { u };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fourth_order_source_integration() {
        let mut errs = vec![];
        for n in [17usize, 33, 65] {
            let dz = 1.0 / (n - 1) as f64;
            let b: Vec<Complex64> = (0..n).map(|k| c((3.0 * k as f64 * dz).cos(), 0.0)).collect();
            let mut out = vec![c(0.0, 0.0); n];
            integrate_z(&[], &b, c(0.0, 0.0), dz, Sweep::Forward, &mut out);
            errs.push((out[n - 1].re - 3.0f64.sin() / 3.0).abs());
        }
        assert!(errs[0] / errs[1] > 12.0 && errs[1] / errs[2] > 12.0, "{errs:?}");
    }

    #[test]
    fn pure_phase_is_unitary() {
        let n = 64;
        let dz = 1.0 / (n - 1) as f64;
        let a = vec![c(0.0, 7.5); n];
        let b = vec![c(0.0, 0.0); n];
        let mut out = vec![c(0.0, 0.0); n];
        integrate_z(&a, &b, c(0.6, 0.8), dz, Sweep::Forward, &mut out);
        assert!((out[n - 1].norm() - 1.0).abs() < 1e-14);
        assert!((out[n - 1] - c(0.6, 0.8) * c(0.0, 7.5).exp()).norm() < 1e-12);
    }

    #[test]
    fn backward_sweep() {
        let n = 33;
        let dz = 1.0 / (n - 1) as f64;
        let b = vec![c(2.0, 0.0); n];
        let mut out = vec![c(0.0, 0.0); n];
        integrate_z(&[], &b, c(0.0, 0.0), dz, Sweep::Backward, &mut out);
        // zeta(L) = 0 and d zeta / dZ = 2  =>  zeta(0) = -2.
        assert!((out[0] - c(-2.0, 0.0)).norm() < 1e-13);
        assert_eq!(out[n - 1], c(0.0, 0.0));
    }

    #[test]
    fn guards() {
        let g = Grid::new(11, 5, 10.0).unwrap();
        assert!(g.check_phase_resolution(0.5).is_ok());
        assert!(g.check_phase_resolution(0.6).is_err());
        assert!(g.check_z_resolution(1.0, 4.0, 1.0, 1.0).is_ok());
        assert!(g.check_z_resolution(1.0, 5.0, 1.0, 1.0).is_err());
    }
}
