//! Closed-form single-mode efficiency
//! `eps = exp(-Gamma^2 (t1+t2)^2) |1 - exp(-alpha_eff L)|^2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    Recrib,
    Reafc,
}

impl Protocol {
    pub const BOTH: [Protocol; 2] = [Protocol::Recrib, Protocol::Reafc];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Recrib => "RECRIB",
            Protocol::Reafc => "REAFC",
        }
    }

    /// Storage plus recall time in the protocol's normalized units.
    pub fn default_total_time(self) -> f64 {
        match self {
            Protocol::Recrib => 8.0,
            Protocol::Reafc => 2.0 * PI,
        }
    }

    /// Effective depth per unit `alpha0 L` and unit `Gamma`.
    fn depth_factor(self) -> f64 {
        match self {
            Protocol::Recrib => 1.0,
            Protocol::Reafc => (2.0 * PI).sqrt(),
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RECRIB" => Ok(Protocol::Recrib),
            "REAFC" => Ok(Protocol::Reafc),
            _ => Err(invalid("protocol", format!("unknown protocol {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyModel {
    pub protocol: Protocol,
    pub alpha0_l: f64,
    pub gamma: f64,
    pub total_time: f64,
}

impl EfficiencyModel {
    pub fn new(protocol: Protocol, alpha0_l: f64, gamma: f64) -> Self {
        Self {
            protocol,
            alpha0_l,
            gamma,
            total_time: protocol.default_total_time(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0_l >= 0.0) || !self.alpha0_l.is_finite() {
            return Err(invalid("alpha0L", "must be finite and non-negative"));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma", "must be finite and non-negative"));
        }
        if !(self.total_time >= 0.0) || !self.total_time.is_finite() {
            return Err(invalid("total_time", "must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn alpha_eff_l(&self) -> f64 {
        self.alpha0_l * self.protocol.depth_factor() * self.gamma
    }
}

pub fn epsilon(model: &EfficiencyModel) -> f64 {
    let dephasing = (-(model.gamma * model.total_time).powi(2)).exp();
    let absorbed = -(-model.alpha_eff_l()).exp_m1();
    dephasing * absorbed * absorbed
}

/// `ratio` is `Delta_nat / Delta_cont` (RECRIB) or `gamma / delta_comb` (REAFC).
pub fn alpha_eff(protocol: Protocol, alpha0: f64, ratio: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::RatioOutOfRange(ratio));
    }
    Ok(alpha0 * protocol.depth_factor() * ratio)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub gamma: f64,
    pub epsilon: f64,
}

pub fn sweep_gamma(protocol: Protocol, alpha0_l: f64, gammas: &[f64]) -> Vec<SweepPoint> {
    gammas
        .iter()
        .map(|&gamma| SweepPoint {
            gamma,
            epsilon: epsilon(&EfficiencyModel::new(protocol, alpha0_l, gamma)),
        })
        .collect()
}

/// Uniform grid `start, start + step, ..., <= stop`.
pub fn gamma_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(invalid("gamma", "need start <= stop and step > 0"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + step * k as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub gamma: f64,
    pub epsilon: f64,
    /// The coarse maximum sits on the `Gamma = 1` boundary or its discrete
    /// second difference is not negative.
    pub no_interior_maximum: bool,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Maximizer over `(0, 1]`: coarse scan, then golden-section refinement of
/// the bracketing cell.
pub fn optimal_gamma(protocol: Protocol, alpha0_l: f64) -> Result<Optimum> {
    optimal_gamma_with(protocol, alpha0_l, protocol.default_total_time())
}

pub fn optimal_gamma_with(protocol: Protocol, alpha0_l: f64, total_time: f64) -> Result<Optimum> {
    if !(alpha0_l > 0.0) {
        return Err(invalid("alpha0L", "must be positive"));
    }
    let eps = |g: f64| {
        epsilon(&EfficiencyModel {
            total_time,
            ..EfficiencyModel::new(protocol, alpha0_l, g)
        })
    };
    const N: usize = 1000;
    let h = 1.0 / N as f64;
    let best = (1..=N)
        .max_by(|&a, &b| eps(a as f64 * h).total_cmp(&eps(b as f64 * h)))
        .unwrap_or(N);
    if best == N {
        return Ok(Optimum {
            gamma: 1.0,
            epsilon: eps(1.0),
            no_interior_maximum: true,
        });
    }
    let (mut a, mut b) = ((best - 1) as f64 * h, (best + 1) as f64 * h);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (eps(c), eps(d));
    while b - a > 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = eps(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = eps(d);
        }
    }
    let gamma = 0.5 * (a + b);
    // A maximum needs a negative discrete second difference around it.
    let g0 = best as f64 * h;
    let curvature = eps(g0 - h) - 2.0 * eps(g0) + eps(g0 + h);
    Ok(Optimum {
        gamma,
        epsilon: eps(gamma),
        no_interior_maximum: !(curvature < 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gamma_gives_zero() {
        for p in Protocol::BOTH {
            assert_eq!(epsilon(&EfficiencyModel::new(p, 123.0, 0.0)), 0.0);
        }
    }

    #[test]
    fn half_transmission_without_dephasing() {
        let m = EfficiencyModel {
            total_time: 0.0,
            ..EfficiencyModel::new(Protocol::Recrib, 1.0, std::f64::consts::LN_2)
        };
        assert!((epsilon(&m) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn recrib_reference_point() {
        let oracle = (-0.16f64).exp() * (1.0 - (-2.5f64).exp()).powi(2);
        let got = epsilon(&EfficiencyModel::new(Protocol::Recrib, 50.0, 0.05));
        assert!((got - oracle).abs() <= 1e-14 * oracle);
        assert!((got - 0.718).abs() < 1e-3);
    }

    #[test]
    fn alpha_eff_forms() {
        assert!((alpha_eff(Protocol::Recrib, 10.0, 0.1).unwrap() - 1.0).abs() < 1e-15);
        let r = 1.0 / (2.0 * PI).sqrt();
        assert!((alpha_eff(Protocol::Reafc, 10.0, r).unwrap() - 10.0).abs() < 1e-13);
        let a = alpha_eff(Protocol::Reafc, 3.0, 0.4).unwrap() / alpha_eff(Protocol::Recrib, 3.0, 0.4).unwrap();
        assert!((a - (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!(matches!(alpha_eff(Protocol::Recrib, 1.0, 1.5), Err(Error::RatioOutOfRange(_))));
        assert!(alpha_eff(Protocol::Recrib, 1.0, 0.0).is_err());
    }

    /// Independent fine-grid search at step 1e-4.
    fn grid_max(p: Protocol, a: f64) -> (f64, f64) {
        (1..=10000)
            .map(|k| {
                let g = k as f64 * 1e-4;
                (g, epsilon(&EfficiencyModel::new(p, a, g)))
            })
            .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
    }

    #[test]
    fn optimum_matches_grid_search() {
        for p in Protocol::BOTH {
            for a in [50.0, 200.0, 1000.0] {
                let opt = optimal_gamma(p, a).unwrap();
                let (g, e) = grid_max(p, a);
                assert!(!opt.no_interior_maximum);
                assert!(opt.epsilon >= e - 1e-8);
                assert!((opt.gamma - g).abs() < 2e-4);
            }
        }
        let (g, e) = grid_max(Protocol::Recrib, 50.0);
        assert!((e - 0.72).abs() < 0.01 && (g - 0.055).abs() < 0.005);
        let (g, e) = grid_max(Protocol::Reafc, 50.0);
        assert!((e - 0.93).abs() < 0.01 && (g - 0.036).abs() < 0.005);
    }

    #[test]
    fn shallow_medium_optimum_vanishes() {
        let opt = optimal_gamma(Protocol::Recrib, 1e-3).unwrap();
        assert!(opt.epsilon < 1e-6);
    }

    #[test]
    fn grid_spans_inclusive_range() {
        let g = gamma_grid(0.0, 1.0, 1e-3).unwrap();
        assert_eq!(g.len(), 1001);
        assert!((g[1000] - 1.0).abs() < 1e-12);
    }
}
