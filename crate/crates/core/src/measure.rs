//! Echo records and the efficiency / fidelity measures.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Result of a storage–recall run. `input` and `echo` are rotating-frame
/// envelopes of the physical field amplitude on uniform grids starting at
/// the beginning of each stage window.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoRecord {
    pub protocol: String,
    pub dt_input: f64,
    pub input: Vec<Complex64>,
    pub dt_echo: f64,
    pub echo: Vec<Complex64>,
    pub efficiency: f64,
    pub fidelity: f64,
    /// Energy centroid of the echo, measured from the start of the recall window.
    pub echo_peak_time: f64,
    pub t1: f64,
    pub t2: f64,
    /// Effective on-resonance optical depth of the simulated ensemble.
    pub alpha_eff_l: f64,
    /// Irreversible (natural) Raman width.
    pub gamma: f64,
    /// Phase of the overlap with the reversed input.
    pub global_phase: f64,
}

impl EchoRecord {
    pub fn new(protocol: &str, dt_input: f64, input: Vec<Complex64>, dt_echo: f64, echo: Vec<Complex64>) -> Result<Self> {
        let (efficiency, fidelity) = measure_efficiency(&input, dt_input, &echo, dt_echo)?;
        let global_phase = overlap(&input, &echo).arg();
        let echo_peak_time = energy_centroid(&echo, dt_echo);
        Ok(Self {
            protocol: protocol.to_string(),
            dt_input,
            input,
            dt_echo,
            echo,
            efficiency,
            fidelity,
            echo_peak_time,
            t1: 0.0,
            t2: 0.0,
            alpha_eff_l: 0.0,
            gamma: 0.0,
            global_phase,
        })
    }

    /// `protocol,alpha0L,Gamma,t1,t2,efficiency,fidelity,echo_peak_time`
    pub fn summary_header() -> &'static str {
        "protocol,alpha0L,Gamma,t1,t2,efficiency,fidelity,echo_peak_time"
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.protocol,
            self.alpha_eff_l,
            self.gamma,
            self.t1,
            self.t2,
            self.efficiency,
            self.fidelity,
            self.echo_peak_time
        )
    }
}

fn overlap(input: &[Complex64], echo: &[Complex64]) -> Complex64 {
    echo.iter()
        .zip(input.iter().rev())
        .map(|(e, i)| e * i.conj())
        .sum()
}

pub fn energy(samples: &[Complex64], dt: f64) -> f64 {
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * dt
}

/// Centroid of `|echo|^2` in time, relative to the first sample.
pub fn energy_centroid(samples: &[Complex64], dt: f64) -> f64 {
    let (num, den) = samples
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(n, d), (k, s)| (n + k as f64 * dt * s.norm_sqr(), d + s.norm_sqr()));
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Efficiency `int |A2|^2 / int |A1|^2` and overlap fidelity of the echo with
/// the time-reversed input.
pub fn measure_efficiency(input: &[Complex64], dt_input: f64, echo: &[Complex64], dt_echo: f64) -> Result<(f64, f64)> {
    let e_in = energy(input, dt_input);
    if e_in <= 0.0 {
        return Err(Error::ZeroInputEnergy);
    }
    if input.len() != echo.len() || (dt_input - dt_echo).abs() > 1e-12 * dt_input.abs() {
        return Err(Error::IncompatibleGrids(format!(
            "{} samples at dt={} vs {} samples at dt={}",
            input.len(),
            dt_input,
            echo.len(),
            dt_echo
        )));
    }
    let e_out = energy(echo, dt_echo);
    let eps = e_out / e_in;
    let fid = if e_out > 0.0 {
        (overlap(input, echo) * dt_echo).norm_sqr() / (e_in * e_out)
    } else {
        0.0
    };
    Ok((eps, fid.min(1.0)))
}
