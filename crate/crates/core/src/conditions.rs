//! Reversibility conditions as residual-reporting predicates, and the
//! constructive stage-2 solver.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::control::ControlProfile;
use crate::ensemble::EnsembleSpec;
use crate::error::{invalid, Error, Result};
use crate::protocol::{ProtocolConfig, ProtocolKind};

/// Tolerance for algebraic conditions (i), (iv), (i'), (iii', k >= 1).
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-9;
/// Tolerance for sampled-envelope conditions (ii), (ii'), (iii), (iii', k = 0).
pub const SAMPLED_TOLERANCE: f64 = 1e-6;

/// Everything about one stage that the conditions refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSpec {
    pub control: ControlProfile,
    pub ensemble: EnsembleSpec,
    pub beta: f64,
    /// Probe (stage 1) or echo (stage 2) carrier.
    pub carrier: f64,
    /// z-projection of the combined wavevector `K_nu`.
    pub wavevector_z: f64,
    /// Transverse components of `K_nu`; must agree between stages.
    pub transverse: [f64; 2],
    pub refractive_index: f64,
}

/// Phase-matching data of a stage pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatching {
    pub k1z: f64,
    pub k2z: f64,
    pub n1: f64,
    pub n2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub alpha_phase: f64,
    /// Speed of light in the chosen units.
    pub c: f64,
}

impl PhaseMatching {
    pub fn from_stages(s1: &StageSpec, s2: &StageSpec, c: f64, alpha_phase: f64) -> Self {
        Self {
            k1z: s1.wavevector_z,
            k2z: s2.wavevector_z,
            n1: s1.refractive_index,
            n2: s2.refractive_index,
            omega1: s1.carrier,
            omega2: s2.carrier,
            alpha_phase,
            c,
        }
    }

    /// Wavenumber residual `(K1 - K2) - (n1 omega1 + n2 omega2) / c` of the
    /// strong-field matching condition.
    pub fn mismatch(&self) -> f64 {
        (self.k1z - self.k2z) - (self.n1 * self.omega1 + self.n2 * self.omega2) / self.c
    }

    fn scale(&self) -> f64 {
        let s = (self.n1 * self.omega1).abs();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// `|c(K1 - K2) - (n1 omega1 + n2 omega2)| / (n1 omega1)`.
    pub fn strong_residual(&self) -> f64 {
        (self.c * self.mismatch()).abs() / self.scale()
    }

    /// Weak-field form with the dispersive term `c (beta1/Delta1 + beta2/Delta2)`.
    pub fn weak_residual(&self, beta: [f64; 2], detuning: [f64; 2]) -> f64 {
        let disp = beta[0] / detuning[0] + beta[1] / detuning[1];
        (self.c * self.mismatch() - self.c * disp).abs() / self.scale()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Prerequisite conditions failed; the residual was not evaluated.
    Blocked,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Blocked => "blocked",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEntry {
    pub id: &'static str,
    pub status: Status,
    pub residual: f64,
    pub tolerance: f64,
}

impl ConditionEntry {
    fn judged(id: &'static str, residual: f64, tolerance: f64) -> Self {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        Self {
            id,
            status,
            residual,
            tolerance,
        }
    }

    pub fn satisfied(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    /// AND of the per-condition flags; a blocked condition is not satisfied.
    pub fn overall(&self) -> bool {
        self.entries.iter().all(ConditionEntry::satisfied)
    }

    pub fn get(&self, id: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn failed_ids(&self) -> Vec<&'static str> {
        self.entries.iter().filter(|e| !e.satisfied()).map(|e| e.id).collect()
    }

    /// Tighten every tolerance to `tol` (used for round-trip checks).
    pub fn with_tolerance(&self, tol: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|e| match e.status {
                    Status::Blocked => e.clone(),
                    _ => ConditionEntry::judged(e.id, e.residual, tol),
                })
                .collect(),
        }
    }
}

/// One line per condition: `id residual tolerance status`, then `overall`.
impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "{} residual={:.16e} tolerance={:.3e} status={}",
                e.id, e.residual, e.tolerance, e.status
            )?;
        }
        writeln!(f, "overall={}", if self.overall() { "pass" } else { "fail" })
    }
}

/// Sampling of the reversal window `[0, span]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub span: f64,
    pub samples: usize,
}

impl Window {
    fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.samples.max(2);
        (0..n).map(move |k| self.span * k as f64 / (n - 1) as f64)
    }
}

fn reversal_residual(win: &Window, a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64) -> f64 {
    let peak = win.points().map(|t| a(t).abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return win.points().map(|t| b(win.span - t).abs()).fold(0.0, f64::max);
    }
    win.points()
        .map(|t| (a(t) - b(win.span - t)).abs())
        .fold(0.0, f64::max)
        / peak
}

fn inversion_residual(e1: &EnsembleSpec, f1: f64, e2: &EnsembleSpec, f2: f64) -> f64 {
    if e1.len() != e2.len() {
        return f64::INFINITY;
    }
    let width = e1.raman_width(f1).max(f64::MIN_POSITIVE);
    e1.nodes()
        .iter()
        .zip(e2.nodes())
        .map(|(a, b)| (a.raman_detuning(f1) + b.raman_detuning(f2)).abs())
        .fold(0.0, f64::max)
        / width
}

fn transverse_residual(s1: &StageSpec, s2: &StageSpec) -> f64 {
    let scale = s1.wavevector_z.abs().max(1.0);
    (0..2)
        .map(|i| (s1.transverse[i] - s2.transverse[i]).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Strong-field conditions (i)-(iv). Condition (iii) is only evaluated
/// when (ii) and (iv) pass.
pub fn check_strong_conditions(s1: &StageSpec, s2: &StageSpec, pm: &PhaseMatching, win: &Window) -> ConditionReport {
    let (c1, c2) = (&s1.control, &s2.control);
    let i = pm.strong_residual().max(transverse_residual(s1, s2));
    let rabi = reversal_residual(win, |t| c1.rabi(t).norm(), |t| c2.rabi(t).norm());
    let f = reversal_residual(win, |t| c1.f(t), |t| c2.f(t));
    let beta = (s1.beta - s2.beta).abs() / s1.beta;
    let ii = rabi.max(f).max(beta);
    let (d1, d2) = (c1.detuning(), c2.detuning());
    let ratio = if s1.ensemble.len() == s2.ensemble.len() {
        s1.ensemble
            .nodes()
            .iter()
            .zip(s2.ensemble.nodes())
            .map(|(a, b)| (b.delta31 / d2 - a.delta31 / d1).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let iv = ((d2 + d1).abs() / d1.abs()).max(ratio);
    let e_i = ConditionEntry::judged("i", i, ALGEBRAIC_TOLERANCE);
    let e_ii = ConditionEntry::judged("ii", ii, SAMPLED_TOLERANCE);
    let e_iv = ConditionEntry::judged("iv", iv, ALGEBRAIC_TOLERANCE);
    let e_iii = if e_ii.satisfied() && e_iv.satisfied() {
        let r = inversion_residual(&s1.ensemble, c1.f_peak(), &s2.ensemble, c2.f_peak());
        ConditionEntry::judged("iii", r, SAMPLED_TOLERANCE)
    } else {
        ConditionEntry {
            id: "iii",
            status: Status::Blocked,
            residual: f64::NAN,
            tolerance: SAMPLED_TOLERANCE,
        }
    };
    ConditionReport {
        entries: vec![e_i, e_ii, e_iii, e_iv],
    }
}

/// Stage 2 satisfying (i)-(iv) by construction: `Delta2 = -Delta1`,
/// `omega2 = omega1 + 2 Delta1`, control mirrored over `span`, equal
/// coupling, matched wavevector, every controlled detuning inverted.
pub fn solve_strong_stage2(s1: &StageSpec, span: f64, c: f64) -> Result<StageSpec> {
    let d1 = s1.control.detuning();
    let control = s1.control.reversed(span).with_params(|p| {
        p.detuning = -d1;
        p.carrier += 2.0 * d1;
    })?;
    let carrier = s1.carrier + 2.0 * d1;
    let n2 = s1.refractive_index;
    let wavevector_z = s1.wavevector_z - (s1.refractive_index * s1.carrier + n2 * carrier) / c;
    Ok(StageSpec {
        control,
        ensemble: s1.ensemble.inverted(),
        beta: s1.beta,
        carrier,
        wavevector_z,
        transverse: s1.transverse,
        refractive_index: n2,
    })
}

/// Weak-field conditions (i')-(iii'). `timing = (t1, t2)` is required for
/// comb protocols.
pub fn check_weak_conditions(
    s1: &StageSpec,
    s2: &StageSpec,
    protocol: &ProtocolConfig,
    pm: &PhaseMatching,
    win: &Window,
    timing: Option<(f64, f64)>,
) -> ConditionReport {
    let (c1, c2) = (&s1.control, &s2.control);
    let i = pm
        .weak_residual([s1.beta, s2.beta], [c1.detuning(), c2.detuning()])
        .max(transverse_residual(s1, s2));
    let ii = reversal_residual(win, |t| s1.beta * c1.f(t), |t| s2.beta * c2.f(t));
    let (f1, f2) = (c1.f_peak(), c2.f_peak());
    let iii = match protocol.kind {
        ProtocolKind::Recrib => {
            ConditionEntry::judged("iii'", inversion_residual(&s1.ensemble, f1, &s2.ensemble, f2), SAMPLED_TOLERANCE)
        }
        ProtocolKind::Reafc { comb_spacing, order } => {
            let r = match timing {
                Some((t1, t2)) => afc_timing_residual(f1, f2, t1, t2, comb_spacing, order),
                None => f64::INFINITY,
            };
            ConditionEntry::judged("iii'", r, ALGEBRAIC_TOLERANCE)
        }
    };
    ConditionReport {
        entries: vec![
            ConditionEntry::judged("i'", i, ALGEBRAIC_TOLERANCE),
            ConditionEntry::judged("ii'", ii, SAMPLED_TOLERANCE),
            iii,
        ],
    }
}

/// `|f1 t1 + f2 t2 - 2 pi k / delta| delta / (2 pi)`.
pub fn afc_timing_residual(f1: f64, f2: f64, t1: f64, t2: f64, spacing: f64, order: u32) -> f64 {
    (f1 * t1 + f2 * t2 - 2.0 * PI * order as f64 / spacing).abs() * spacing / (2.0 * PI)
}

/// Echo carrier after weak-field recall, with the stage-1 resonance residual
/// `|omega1 - (omega1^c + omega21 - Delta1^s)|`.
pub fn echo_carrier_weak(omega1: f64, omega21: f64, control1: &ControlProfile, control2: &ControlProfile) -> (f64, f64) {
    let s1 = control1.detuning() * control1.f_peak();
    let s2 = control2.detuning() * control2.f_peak();
    let omega2 = omega1 + control2.carrier() - control1.carrier() + s1 - s2;
    let residual = (omega1 - (control1.carrier() + omega21 - s1)).abs();
    (omega2, residual)
}

/// Recall wait `t2 = (2 pi k / delta - f1 t1) / f2` of the comb protocol.
pub fn echo_time_afc(f1: f64, f2: f64, t1: f64, spacing: f64, order: u32) -> Result<f64> {
    if !(f2 > 0.0) {
        return Err(invalid("f2", "must be positive"));
    }
    if !(spacing > 0.0) {
        return Err(invalid("comb_spacing", "must be positive"));
    }
    if order == 0 {
        return Err(invalid("order", "comb rephasing order starts at 1"));
    }
    let t2 = (2.0 * PI * order as f64 / spacing - f1 * t1) / f2;
    if t2 <= 0.0 {
        return Err(Error::NonCausalEcho { t2 });
    }
    Ok(t2)
}
