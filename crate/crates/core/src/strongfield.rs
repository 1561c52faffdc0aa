//! Full nonlinear dynamics of the far-detuned Raman system.
//!
//! The field is propagated in the unscaled variable `a = g A`, related to the
//! scaled field by `zeta = -(-1)^nu (Omega* / Delta) a`; in that form
//!
//! ```text
//! da/dZ = (i beta / 2) [ -(-1)^nu / Delta * B11 a - (-1)^nu (Omega / Delta) B12 ]
//! ```
//!
//! is regular when the control vanishes. The probe Stark term
//! `Delta |zeta|^2 / |Omega|^2` is evaluated as `|a|^2 / Delta`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::conditions::ConditionReport;
use crate::control::ControlProfile;
use crate::ensemble::{EnsembleSpec, NEGLIGIBLE_WEIGHT};
use crate::error::{Error, Result};
use crate::grid::{integrate_z, Grid, Sweep};
use crate::measure::EchoRecord;
use crate::medium::MediumSpec;
use crate::probe::ProbeSpec;
use crate::protocol::{ProtocolConfig, Stage};
use crate::weakfield::{enforce, fill_record_metadata, input_envelope, quadrature_z, EnergyAudit};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Tolerance of the Bloch-vector bound `|r12|^2 <= r11 (1 - r11)`.
pub const BLOCH_TOLERANCE: f64 = 1e-8;

/// Transmitted fraction above which storage is flagged as incomplete.
pub const INCOMPLETE_ABSORPTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub stage: Stage,
    pub n_z: usize,
    /// Scaled field history, one row of `n_z` values per recorded time.
    pub zeta: Vec<C>,
    /// Unscaled field `g A` history, same layout as `zeta`.
    pub field: Vec<C>,
    /// Node-major coherences, `n_z` per node.
    pub r12: Vec<C>,
    /// Node-major populations of level 2, `r22 = 1 - r11`, `n_z` per node.
    /// Integrated directly so that small excitations keep full precision.
    pub r22: Vec<f64>,
    pub clock: f64,
}

impl SimulationState {
    /// All atoms in the initial ground state.
    pub fn ground(stage: Stage, n_nodes: usize, n_z: usize) -> Self {
        Self {
            stage,
            n_z,
            zeta: Vec::new(),
            field: Vec::new(),
            r12: vec![ZERO; n_nodes * n_z],
            r22: vec![0.0; n_nodes * n_z],
            clock: 0.0,
        }
    }

    /// Largest excess over the Bloch bound over all nodes.
    pub fn bloch_excess(&self) -> f64 {
        self.r12
            .iter()
            .zip(&self.r22)
            .map(|(r, &p)| r.norm_sqr() - p * (1.0 - p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Ground population `r11` at flat index `i`.
    pub fn r11(&self, i: usize) -> f64 {
        1.0 - self.r22[i]
    }

    /// Field row `zeta(tau_k, .)`.
    pub fn zeta_row(&self, k: usize) -> &[C] {
        &self.zeta[k * self.n_z..(k + 1) * self.n_z]
    }
}

/// Ensemble kernels `B11(Z)`, `B12(Z)` with the dispersive weights
/// `1 / (1 + Delta31 / Delta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelAccumulator {
    pub b11: Vec<C>,
    pub b12: Vec<C>,
}

impl KernelAccumulator {
    /// Each `Z` sums the nodes in a fixed order, so the result does not
    /// depend on the worker count.
    pub fn accumulate(weights: &[f64], r12: &[C], r22: &[f64], n_z: usize) -> Self {
        let total: f64 = weights.iter().sum();
        let (b11, b12) = (0..n_z)
            .into_par_iter()
            .map(|k| {
                let mut s22 = 0.0;
                let mut s12 = ZERO;
                for (j, w) in weights.iter().enumerate() {
                    s22 += w * r22[j * n_z + k];
                    s12 += w * r12[j * n_z + k];
                }
                (C::from(total - s22), s12)
            })
            .unzip();
        Self { b11, b12 }
    }
}

/// Everything a stage needs besides its state.
#[derive(Debug, Clone, Copy)]
pub struct StrongContext<'a> {
    pub stage: Stage,
    pub ensemble: &'a EnsembleSpec,
    pub medium: &'a MediumSpec,
    pub control: &'a ControlProfile,
    pub grid: &'a Grid,
}

impl StrongContext<'_> {
    fn sweep(&self) -> Sweep {
        match self.stage {
            Stage::Storage => Sweep::Forward,
            Stage::Retrieval => Sweep::Backward,
        }
    }

    fn beta(&self) -> f64 {
        self.medium.beta[self.stage.index()]
    }

    fn dispersive_weights(&self) -> Vec<f64> {
        let delta = self.control.detuning();
        self.ensemble
            .nodes()
            .iter()
            .map(|n| n.weight / (1.0 + n.delta31 / delta))
            .collect()
    }

    fn dispersion(&self) -> Vec<f64> {
        let delta = self.control.detuning();
        self.ensemble.nodes().iter().map(|n| 1.0 / (1.0 + n.delta31 / delta)).collect()
    }

    /// Phase of the exactly integrated rotation,
    /// `Delta21 tau + (Delta31 - Delta) int f`.
    fn phase(&self, tau: f64, delta21: f64, delta31: f64) -> f64 {
        delta21 * tau + (delta31 - self.control.detuning()) * self.control.f_integral(tau)
    }

    /// The remaining rotation rate is resolved by the step; the uniform
    /// control Stark shift is integrated exactly and excluded.
    fn check_grid(&self, peak_field: f64) -> Result<()> {
        let f = self.control.f_peak();
        let delta = self.control.detuning().abs();
        let max_det = self.ensemble.max_weighted(|n| n.delta21.abs() + n.delta31.abs() * f);
        self.grid.check_phase_resolution(max_det + peak_field * peak_field / delta)?;
        self.grid.check_z_resolution(self.medium.length, self.beta(), f, 1.0)
    }
}

/// Scaled field from the unscaled one.
pub fn scaled_field(stage: Stage, omega: C, delta: f64, a: C) -> C {
    -stage.sign() * omega.conj() / delta * a
}

/// Unscaled field from the scaled one; singular when the control vanishes.
pub fn physical_field(stage: Stage, omega: C, delta: f64, zeta: C, tau: f64) -> Result<C> {
    if zeta == ZERO {
        return Ok(ZERO);
    }
    if omega == ZERO {
        return Err(Error::ControlVanishes { tau });
    }
    Ok(-stage.sign() * delta / omega.conj() * zeta)
}

/// Solve the field across the slab at fixed `tau` for the given atoms.
pub fn advance_field(
    ctx: &StrongContext,
    weights: &[f64],
    r12: &[C],
    r22: &[f64],
    tau: f64,
    boundary: C,
    out: &mut [C],
) -> Result<()> {
    let n_z = ctx.grid.n_z;
    let kernels = KernelAccumulator::accumulate(weights, r12, r22, n_z);
    let s = ctx.stage.sign();
    let delta = ctx.control.detuning();
    let half = 0.5 * I * ctx.beta();
    let linear: Vec<C> = kernels.b11.iter().map(|b| half * (-s / delta) * b).collect();
    let src_scale = half * (-s) * ctx.control.rabi(tau) / delta;
    let source: Vec<C> = kernels.b12.iter().map(|b| src_scale * b).collect();
    integrate_z(&linear, &source, boundary, ctx.grid.dz(ctx.medium.length), ctx.sweep(), out);
    if out.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::NonFiniteField { tau });
    }
    Ok(())
}

/// Non-rotating part of the atomic equations for one node at one `Z`.
#[inline]
fn atom_rhs(s: f64, c: f64, zeta: C, a_sq_over_delta: f64, r12: C, r22: f64) -> (C, f64) {
    let d12 = -I * s * c * zeta * (1.0 - 2.0 * r22) - I * c * a_sq_over_delta * r12;
    let d22 = -2.0 * s * c * (zeta.conj() * r12).im;
    (d12, d22)
}

/// One Lawson RK4 step of the atoms with the field recomputed at every
/// stage time. Returns the field at the new time.
pub fn advance_atoms(
    state: &mut SimulationState,
    ctx: &StrongContext,
    boundary: &dyn Fn(f64) -> C,
    dt: f64,
) -> Result<Vec<C>> {
    let n_z = ctx.grid.n_z;
    let t0 = state.clock;
    let tm = t0 + 0.5 * dt;
    let t1 = t0 + dt;
    let s = ctx.stage.sign();
    let delta = ctx.control.detuning();
    let weights = ctx.dispersive_weights();
    let disp = ctx.dispersion();
    let nodes = ctx.ensemble.nodes();
    let rot: Vec<(C, C, C)> = nodes
        .iter()
        .map(|n| {
            let p0 = ctx.phase(t0, n.delta21, n.delta31);
            let pm = ctx.phase(tm, n.delta21, n.delta31);
            let p1 = ctx.phase(t1, n.delta21, n.delta31);
            (
                C::from_polar(1.0, -(pm - p0)),
                C::from_polar(1.0, -(p1 - pm)),
                C::from_polar(1.0, -(p1 - p0)),
            )
        })
        .collect();

    let len = state.r12.len();
    let eval = |tau: f64, r12: &[C], r22: &[f64]| -> Result<(Vec<C>, Vec<f64>)> {
        let mut a = vec![ZERO; n_z];
        advance_field(ctx, &weights, r12, r22, tau, boundary(tau), &mut a)?;
        let omega = ctx.control.rabi(tau);
        let zeta: Vec<C> = a.iter().map(|&x| scaled_field(ctx.stage, omega, delta, x)).collect();
        let stark: Vec<f64> = a.iter().map(|x| x.norm_sqr() / delta).collect();
        let mut d12 = vec![ZERO; len];
        let mut d11 = vec![0.0; len];
        d12.par_chunks_mut(n_z)
            .zip(d11.par_chunks_mut(n_z))
            .enumerate()
            .for_each(|(j, (o12, o11))| {
                for k in 0..n_z {
                    let (x, y) = atom_rhs(s, disp[j], zeta[k], stark[k], r12[j * n_z + k], r22[j * n_z + k]);
                    o12[k] = x;
                    o11[k] = y;
                }
            });
        Ok((d12, d11))
    };
    let combine = |out12: &mut Vec<C>, out11: &mut Vec<f64>, f: &(dyn Fn(usize, usize) -> (C, f64) + Sync)| {
        out12
            .par_chunks_mut(n_z)
            .zip(out11.par_chunks_mut(n_z))
            .enumerate()
            .for_each(|(j, (o12, o11))| {
                for k in 0..n_z {
                    let (x, y) = f(j, k);
                    o12[k] = x;
                    o11[k] = y;
                }
            });
    };

    let (r12, r22) = (&state.r12, &state.r22);
    let (k1, l1) = eval(t0, r12, r22)?;
    let mut s12 = vec![ZERO; len];
    let mut s11 = vec![0.0; len];
    combine(&mut s12, &mut s11, &|j, k| {
        let i = j * n_z + k;
        (rot[j].0 * (r12[i] + 0.5 * dt * k1[i]), r22[i] + 0.5 * dt * l1[i])
    });
    let (k2, l2) = eval(tm, &s12, &s11)?;
    combine(&mut s12, &mut s11, &|j, k| {
        let i = j * n_z + k;
        (rot[j].0 * r12[i] + 0.5 * dt * k2[i], r22[i] + 0.5 * dt * l2[i])
    });
    let (k3, l3) = eval(tm, &s12, &s11)?;
    combine(&mut s12, &mut s11, &|j, k| {
        let i = j * n_z + k;
        (rot[j].2 * r12[i] + dt * rot[j].1 * k3[i], r22[i] + dt * l3[i])
    });
    let (k4, l4) = eval(t1, &s12, &s11)?;
    combine(&mut s12, &mut s11, &|j, k| {
        let i = j * n_z + k;
        let (_, e2, e) = rot[j];
        (
            e * r12[i] + dt / 6.0 * (e * k1[i] + 2.0 * e2 * (k2[i] + k3[i]) + k4[i]),
            r22[i] + dt / 6.0 * (l1[i] + 2.0 * (l2[i] + l3[i]) + l4[i]),
        )
    });
    if s12.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) || s11.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteField { tau: t1 });
    }
    state.r12 = s12;
    state.r22 = s11;
    state.clock = t1;
    enforce_physicality(state, ctx.ensemble, t1)?;
    let mut a = vec![ZERO; n_z];
    advance_field(ctx, &weights, &state.r12, &state.r22, t1, boundary(t1), &mut a)?;
    Ok(a)
}

/// Population bounds and the Bloch bound on nodes with non-negligible
/// weight; excursions within tolerance are clamped.
fn enforce_physicality(state: &mut SimulationState, ensemble: &EnsembleSpec, tau: f64) -> Result<()> {
    let n_z = state.n_z;
    let wmax = ensemble.nodes().iter().map(|n| n.weight).fold(0.0, f64::max);
    for (j, node) in ensemble.nodes().iter().enumerate() {
        let checked = node.weight >= NEGLIGIBLE_WEIGHT * wmax;
        for i in j * n_z..(j + 1) * n_z {
            let p = state.r22[i];
            if checked {
                let excess = (p - 1.0).max(-p).max(state.r12[i].norm_sqr() - p * (1.0 - p));
                if excess > BLOCH_TOLERANCE {
                    return Err(Error::PhysicalityViolation { tau, excess });
                }
            }
            state.r22[i] = p.clamp(0.0, 1.0);
        }
    }
    Ok(())
}

fn push_row(state: &mut SimulationState, ctx: &StrongContext, tau: f64, a: &[C]) {
    let omega = ctx.control.rabi(tau);
    let delta = ctx.control.detuning();
    state.field.extend_from_slice(a);
    state
        .zeta
        .extend(a.iter().map(|&x| scaled_field(ctx.stage, omega, delta, x)));
}

/// Run a full stage from the state's current atoms, recording the field.
pub fn run_stage(
    state: &mut SimulationState,
    ctx: &StrongContext,
    boundary: &dyn Fn(f64) -> C,
    peak_field: f64,
) -> Result<()> {
    ctx.check_grid(peak_field)?;
    let n_z = ctx.grid.n_z;
    let dt = ctx.grid.dt();
    state.clock = 0.0;
    state.zeta = Vec::with_capacity(ctx.grid.n_tau * n_z);
    state.field = Vec::with_capacity(ctx.grid.n_tau * n_z);
    let mut a = vec![ZERO; n_z];
    advance_field(ctx, &ctx.dispersive_weights(), &state.r12, &state.r22, 0.0, boundary(0.0), &mut a)?;
    push_row(state, ctx, 0.0, &a);
    for k in 1..ctx.grid.n_tau {
        let a = advance_atoms(state, ctx, boundary, dt)?;
        state.clock = ctx.grid.tau(k);
        push_row(state, ctx, state.clock, &a);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StrongStorage {
    pub state: SimulationState,
    /// Unscaled field entering at `Z = 0`.
    pub input: Vec<C>,
    /// Unscaled field leaving at `Z = L`.
    pub output: Vec<C>,
    pub audit: EnergyAudit,
    pub amplitude: f64,
    /// Set when more than 5% of the input energy was transmitted.
    pub incomplete_absorption: bool,
}

fn column(history: &[C], n_z: usize, k: usize) -> Vec<C> {
    history.chunks(n_z).map(|row| row[k]).collect()
}

fn flux(samples: &[C], beta: f64, dt: f64) -> f64 {
    let n = samples.len();
    samples
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            w * 2.0 * a.norm_sqr() / beta
        })
        .sum::<f64>()
        * dt
}

/// Absorb the probe. The physical input is `a1 = amp u(tau) exp(i psi1)`,
/// resonant with the Stark-shifted Raman line.
pub fn run_storage(
    probe: &ProbeSpec,
    control: &ControlProfile,
    ensemble: &EnsembleSpec,
    medium: &MediumSpec,
    grid: &Grid,
) -> Result<StrongStorage> {
    probe.validate()?;
    let n_z = grid.n_z;
    let ctx = StrongContext {
        stage: Stage::Storage,
        ensemble,
        medium,
        control,
        grid,
    };
    let amp = probe.peak_amplitude(control.detuning());
    let boundary = |tau: f64| amp * probe.shape(tau) * C::from_polar(1.0, control.stark_phase(tau));
    let mut state = SimulationState::ground(Stage::Storage, ensemble.len(), n_z);
    run_stage(&mut state, &ctx, &boundary, amp)?;
    let input = column(&state.field, n_z, 0);
    let output = column(&state.field, n_z, n_z - 1);
    let beta = medium.beta[0];
    let dt = grid.dt();
    let excitation = (0..n_z).map(|k| {
        ensemble
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, n)| n.weight * state.r22[j * n_z + k])
            .sum::<f64>()
    });
    let audit = EnergyAudit {
        input: flux(&input, beta, dt),
        transmitted: flux(&output, beta, dt),
        stored: quadrature_z(excitation, n_z, grid.dz(medium.length)),
    };
    Ok(StrongStorage {
        incomplete_absorption: audit.transmitted_fraction() > INCOMPLETE_ABSORPTION,
        state,
        input,
        output,
        audit,
        amplitude: amp,
    })
}

/// Recall the stored excitation with the reading control.
#[allow(clippy::too_many_arguments)]
pub fn run_retrieval(
    stored: &StrongStorage,
    probe: &ProbeSpec,
    control1: &ControlProfile,
    control2: &ControlProfile,
    protocol: &ProtocolConfig,
    ensemble: &EnsembleSpec,
    medium: &MediumSpec,
    grid: &Grid,
    conditions: Option<&ConditionReport>,
) -> Result<(EchoRecord, SimulationState)> {
    enforce(protocol, conditions)?;
    let n_z = grid.n_z;
    let ensemble2 = protocol.stage2_ensemble(ensemble);
    let mut state = SimulationState::ground(Stage::Retrieval, ensemble2.len(), n_z);
    state.r12 = protocol.handover(ensemble.nodes(), &stored.state.r12, |_| 0.0, medium, grid);
    state.r22 = stored.state.r22.clone();
    let ctx = StrongContext {
        stage: Stage::Retrieval,
        ensemble: &ensemble2,
        medium,
        control: control2,
        grid,
    };
    run_stage(&mut state, &ctx, &|_| ZERO, stored.amplitude)?;
    let norm2 = (medium.beta[1] * medium.group_velocity[1]).sqrt();
    let echo: Vec<C> = state
        .field
        .chunks(n_z)
        .enumerate()
        .map(|(k, row)| row[0] * C::from_polar(1.0, -control2.stark_phase(grid.tau(k))) / norm2)
        .collect();
    let input = input_envelope(probe, stored.amplitude, medium, grid);
    let dt = grid.dt();
    let mut record = EchoRecord::new(protocol.name(), dt, input, dt, echo)?;
    fill_record_metadata(&mut record, probe, control1, control2, protocol, ensemble, medium);
    Ok((record, state))
}
