//! Excited-state coherences slaved to the ground-state variables.

use num_complex::Complex64;

use crate::control::ControlProfile;
use crate::ensemble::DetuningNode;
use crate::error::{Error, Result};

/// Local ground-state variables of one atom class at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSnapshot {
    pub r12: Complex64,
    pub r11: f64,
    /// Probe amplitude `g A` in frequency units.
    pub field: Complex64,
}

/// Returns `(R13, R32)` from the adiabatic-elimination formulas. Diagnostic
/// only; the integrators never feed these back.
pub fn reconstruct_excited_coherences(
    atom: &AtomSnapshot,
    control: &ControlProfile,
    tau: f64,
    node: &DetuningNode,
) -> Result<(Complex64, Complex64)> {
    let delta = control.detuning();
    let denom = delta + node.delta31;
    if denom.abs() < 1e-6 * delta.abs() {
        return Err(Error::ResonantSingularity(denom.abs()));
    }
    let omega = control.rabi(tau);
    let r22 = 1.0 - atom.r11;
    let r13 = (atom.field * atom.r11 + omega * atom.r12) / denom;
    let r32 = (atom.field.conj() * atom.r12 + omega.conj() * r22) / denom;
    Ok((r13, r32))
}

/// Adiabaticity bound: both excited coherences stay below
/// `4 (max(|zeta|, |Omega|) / |Delta|)^2` in squared magnitude.
pub fn within_adiabatic_bound(r13: Complex64, r32: Complex64, zeta: f64, omega: f64, delta: f64) -> bool {
    let bound = 4.0 * (zeta.max(omega) / delta).powi(2);
    r13.norm_sqr() <= bound && r32.norm_sqr() <= bound
}
