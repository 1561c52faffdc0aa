//! Linearized (weak-probe) dynamics in the Stark-rotating frame.
//!
//! Variables are the transformed field `zt` and coherences `rt`:
//!
//! ```text
//! d zt / dZ   = -(beta f / 2) sum_j w_j rt_j
//! d rt_j / dt = -i Delta_R,j(t) rt_j - (-1)^nu zt
//! ```
//!
//! The detuning rotation is integrated exactly (Lawson RK4 with the analytic
//! phase `Delta21 t + Delta31 int f`), so the step size is limited only by
//! the field–atom coupling.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::conditions::ConditionReport;
use crate::control::ControlProfile;
use crate::ensemble::EnsembleSpec;
use crate::error::{Error, Result};
use crate::grid::{integrate_z, Grid, Sweep};
use crate::measure::EchoRecord;
use crate::medium::MediumSpec;
use crate::probe::ProbeSpec;
use crate::protocol::{ProtocolConfig, Stage};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Transformed field history and current coherences of one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakState {
    pub stage: Stage,
    pub n_z: usize,
    /// Field `zt(tau_k, Z)`, one row of `n_z` values per recorded time.
    pub zeta_t: Vec<C>,
    /// Coherences, node-major with `n_z` values per node.
    pub r12_t: Vec<C>,
    /// Stark phase `psi = int Delta f` accumulated since the stage started.
    pub accumulated_psi: f64,
    pub clock: f64,
}

impl WeakState {
    pub fn new(stage: Stage, n_nodes: usize, n_z: usize) -> Self {
        Self {
            stage,
            n_z,
            zeta_t: Vec::new(),
            r12_t: vec![ZERO; n_nodes * n_z],
            accumulated_psi: 0.0,
            clock: 0.0,
        }
    }

    /// Ensemble kernel `B(Z) = sum_j w_j rt_j(Z)`.
    pub fn kernel(&self, ensemble: &EnsembleSpec) -> Vec<C> {
        kernel(ensemble, &self.r12_t, self.n_z)
    }

    /// Field at the last recorded time.
    pub fn last_field(&self) -> &[C] {
        &self.zeta_t[self.zeta_t.len() - self.n_z..]
    }

    /// Field history mapped back to the physical scaled field
    /// `zeta = -i zt exp(-i theta(Z) + i psi(tau))`, `theta = (-1)^nu beta Z / (2 Delta)`.
    pub fn physical_zeta(&self, medium: &MediumSpec, control: &ControlProfile, grid: &Grid) -> Vec<C> {
        let beta = medium.beta[self.stage.index()];
        let k = self.stage.sign() * beta / (2.0 * control.detuning());
        self.zeta_t
            .chunks(self.n_z)
            .enumerate()
            .flat_map(|(t, row)| {
                let psi = control.stark_phase(grid.tau(t));
                row.iter().enumerate().map(move |(j, x)| {
                    let theta = k * grid.z(j, medium.length);
                    -I * x * C::from_polar(1.0, psi - theta)
                })
            })
            .collect()
    }
}

fn kernel(ensemble: &EnsembleSpec, r: &[C], n_z: usize) -> Vec<C> {
    let mut b = vec![ZERO; n_z];
    for (node, row) in ensemble.nodes().iter().zip(r.chunks(n_z)) {
        for (acc, x) in b.iter_mut().zip(row) {
            *acc += node.weight * x;
        }
    }
    b
}

/// Everything a stage needs besides its state.
#[derive(Debug, Clone, Copy)]
pub struct WeakContext<'a> {
    pub stage: Stage,
    pub ensemble: &'a EnsembleSpec,
    pub medium: &'a MediumSpec,
    pub control: &'a ControlProfile,
    pub grid: &'a Grid,
    pub probe_bandwidth: f64,
}

impl WeakContext<'_> {
    fn sweep(&self) -> Sweep {
        match self.stage {
            Stage::Storage => Sweep::Forward,
            Stage::Retrieval => Sweep::Backward,
        }
    }

    fn beta(&self) -> f64 {
        self.medium.beta[self.stage.index()]
    }

    /// Validity of the linearization with respect to the one-photon line.
    pub fn check_validity(&self) -> Result<()> {
        let max31 = self.ensemble.max_abs_delta31();
        let delta = self.control.detuning().abs();
        if max31 > 0.1 * delta {
            return Err(Error::WeakFieldViolation(format!(
                "max |Delta31| = {max31} exceeds 0.1 |Delta| = {}",
                0.1 * delta
            )));
        }
        Ok(())
    }

    fn check_stark(&self, tau: f64, field: &[C]) -> Result<()> {
        let f = self.control.f(tau);
        if f <= 0.0 {
            return Ok(());
        }
        let peak = field.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let shift = peak / (f * self.control.detuning().abs());
        if shift > 0.01 * self.probe_bandwidth {
            return Err(Error::WeakFieldViolation(format!(
                "probe Stark shift {shift:.3e} at tau = {tau} exceeds 0.01 x bandwidth"
            )));
        }
        Ok(())
    }

    fn check_grid(&self) -> Result<()> {
        let f = self.control.f_peak();
        let max_det = self.ensemble.max_weighted(|n| n.delta21.abs() + n.delta31.abs() * f);
        self.grid.check_phase_resolution(max_det)?;
        self.grid.check_z_resolution(self.medium.length, self.beta(), f, 1.0)
    }

    fn field(&self, tau: f64, r: &[C], boundary: C, out: &mut [C]) {
        let n_z = self.grid.n_z;
        let scale = -0.5 * self.beta() * self.control.f(tau);
        let b: Vec<C> = kernel(self.ensemble, r, n_z).into_iter().map(|x| x * scale).collect();
        integrate_z(&[], &b, boundary, self.grid.dz(self.medium.length), self.sweep(), out);
    }

    fn phase(&self, tau: f64, delta21: f64, delta31: f64) -> f64 {
        delta21 * tau + delta31 * self.control.f_integral(tau)
    }
}

/// One Lawson RK4 step of length `dt`. Returns the field at the new time.
pub fn advance_weak(state: &mut WeakState, ctx: &WeakContext, boundary: &dyn Fn(f64) -> C, dt: f64) -> Result<Vec<C>> {
    let n_z = ctx.grid.n_z;
    let t0 = state.clock;
    let tm = t0 + 0.5 * dt;
    let t1 = t0 + dt;
    let s = ctx.stage.sign();
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

    let mut q1 = vec![ZERO; n_z];
    let mut q2 = vec![ZERO; n_z];
    let mut q3 = vec![ZERO; n_z];
    let mut q4 = vec![ZERO; n_z];
    let r0 = &state.r12_t;

    ctx.field(t0, r0, boundary(t0), &mut q1);
    let mut stage_r = vec![ZERO; r0.len()];
    let build = |dst: &mut [C], f: &(dyn Fn(usize, usize) -> C + Sync)| {
        dst.par_chunks_mut(n_z).enumerate().for_each(|(j, row)| {
            for (k, x) in row.iter_mut().enumerate() {
                *x = f(j, k);
            }
        });
    };
    build(&mut stage_r, &|j, k| rot[j].0 * (r0[j * n_z + k] - 0.5 * dt * s * q1[k]));
    ctx.field(tm, &stage_r, boundary(tm), &mut q2);
    build(&mut stage_r, &|j, k| rot[j].0 * r0[j * n_z + k] - 0.5 * dt * s * q2[k]);
    ctx.field(tm, &stage_r, boundary(tm), &mut q3);
    build(&mut stage_r, &|j, k| rot[j].2 * r0[j * n_z + k] - dt * s * rot[j].1 * q3[k]);
    ctx.field(t1, &stage_r, boundary(t1), &mut q4);

    let mut next = vec![ZERO; r0.len()];
    build(&mut next, &|j, k| {
        let (_, e2, e) = rot[j];
        e * r0[j * n_z + k] - dt / 6.0 * s * (e * q1[k] + 2.0 * e2 * (q2[k] + q3[k]) + q4[k])
    });
    if next.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::NonFiniteField { tau: t1 });
    }
    state.r12_t = next;
    state.clock = t1;
    state.accumulated_psi = ctx.control.stark_phase(t1);
    let mut out = vec![ZERO; n_z];
    ctx.field(t1, &state.r12_t, boundary(t1), &mut out);
    ctx.check_stark(t1, &out)?;
    Ok(out)
}

/// Run a full stage from the state's current coherences, recording the field.
pub fn run_stage(state: &mut WeakState, ctx: &WeakContext, boundary: &dyn Fn(f64) -> C) -> Result<()> {
    ctx.check_validity()?;
    ctx.check_grid()?;
    let n_z = ctx.grid.n_z;
    let dt = ctx.grid.dt();
    state.clock = 0.0;
    state.zeta_t = Vec::with_capacity(ctx.grid.n_tau * n_z);
    let mut first = vec![ZERO; n_z];
    ctx.field(0.0, &state.r12_t, boundary(0.0), &mut first);
    state.zeta_t.extend_from_slice(&first);
    for k in 1..ctx.grid.n_tau {
        let field = advance_weak(state, ctx, boundary, dt)?;
        // Pin the clock to the grid to avoid drift.
        state.clock = ctx.grid.tau(k);
        state.zeta_t.extend_from_slice(&field);
    }
    Ok(())
}

/// Excitation bookkeeping for a storage stage, in units of atomic excitation
/// per unit cross-section: the photon flux is `2 |zeta|^2 / (beta f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyAudit {
    pub input: f64,
    pub transmitted: f64,
    pub stored: f64,
}

impl EnergyAudit {
    pub fn imbalance(&self) -> f64 {
        if self.input > 0.0 {
            (self.input - self.transmitted - self.stored).abs() / self.input
        } else {
            (self.transmitted + self.stored).abs()
        }
    }

    pub fn transmitted_fraction(&self) -> f64 {
        if self.input > 0.0 {
            self.transmitted / self.input
        } else {
            0.0
        }
    }
}

/// Trapezoidal time integral of `2 |zeta|^2 / (beta f)`.
pub(crate) fn flux_integral(samples: &[C], control: &ControlProfile, beta: f64, dt: f64) -> f64 {
    let f_floor = 1e-14 * control.f_peak();
    let n = samples.len();
    samples
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let f = control.f(dt * k as f64);
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            if f > f_floor {
                w * 2.0 * z.norm_sqr() / (beta * f)
            } else {
                0.0
            }
        })
        .sum::<f64>()
        * dt
}

/// Fourth-order end-corrected trapezoid rule over `n_z` equispaced samples.
pub(crate) fn quadrature_z(values: impl Iterator<Item = f64>, n_z: usize, dz: f64) -> f64 {
    const ENDS: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    values
        .enumerate()
        .map(|(k, v)| {
            let edge = k.min(n_z - 1 - k);
            if n_z < 6 {
                if edge == 0 {
                    0.5 * v
                } else {
                    v
                }
            } else if edge < 3 {
                ENDS[edge] * v
            } else {
                v
            }
        })
        .sum::<f64>()
        * dz
}

/// Output of the weak-field storage stage.
#[derive(Debug, Clone)]
pub struct WeakStorage {
    pub state: WeakState,
    /// Transformed field entering at `Z = 0`.
    pub input: Vec<C>,
    /// Transformed field leaving at `Z = L`.
    pub output: Vec<C>,
    pub audit: EnergyAudit,
    pub amplitude: f64,
}

impl WeakStorage {
    pub fn transmitted_fraction(&self) -> f64 {
        self.audit.transmitted_fraction()
    }
}

fn column(history: &[C], n_z: usize, k: usize) -> Vec<C> {
    history.chunks(n_z).map(|row| row[k]).collect()
}

/// Absorb the probe with the writing control on.
pub fn run_weak_storage(
    probe: &ProbeSpec,
    control: &ControlProfile,
    ensemble: &EnsembleSpec,
    medium: &MediumSpec,
    grid: &Grid,
) -> Result<WeakStorage> {
    probe.validate()?;
    let n_z = grid.n_z;
    let ctx = WeakContext {
        stage: Stage::Storage,
        ensemble,
        medium,
        control,
        grid,
        probe_bandwidth: probe.spectral_width,
    };
    let amp = probe.peak_amplitude(control.detuning());
    let delta = control.detuning();
    let boundary = |tau: f64| I * (control.rabi(tau).conj() / delta) * amp * probe.shape(tau);
    let mut state = WeakState::new(Stage::Storage, ensemble.len(), n_z);
    run_stage(&mut state, &ctx, &boundary)?;
    let input = column(&state.zeta_t, n_z, 0);
    let output = column(&state.zeta_t, n_z, n_z - 1);
    let beta = medium.beta[0];
    let dt = grid.dt();
    let excitation: Vec<f64> = (0..n_z)
        .map(|k| {
            ensemble
                .nodes()
                .iter()
                .enumerate()
                .map(|(j, n)| n.weight * state.r12_t[j * n_z + k].norm_sqr())
                .sum()
        })
        .collect();
    let audit = EnergyAudit {
        input: flux_integral(&input, control, beta, dt),
        transmitted: flux_integral(&output, control, beta, dt),
        stored: quadrature_z(excitation.into_iter(), n_z, grid.dz(medium.length)),
    };
    Ok(WeakStorage {
        state,
        input,
        output,
        audit,
        amplitude: amp,
    })
}

/// Physical rotating-frame input envelope `A1 = g A1 / sqrt(beta1 v1)`.
pub(crate) fn input_envelope(probe: &ProbeSpec, amp: f64, medium: &MediumSpec, grid: &Grid) -> Vec<C> {
    let norm = (medium.beta[0] * medium.group_velocity[0]).sqrt();
    (0..grid.n_tau).map(|k| amp * probe.shape(grid.tau(k)) / norm).collect()
}

pub(crate) fn fill_record_metadata(
    record: &mut EchoRecord,
    probe: &ProbeSpec,
    control1: &ControlProfile,
    control2: &ControlProfile,
    protocol: &ProtocolConfig,
    ensemble: &EnsembleSpec,
    medium: &MediumSpec,
) {
    let f1 = control1.f_peak();
    record.t1 = protocol.t1.unwrap_or(control1.switch_times().1 - probe.center);
    record.t2 = protocol
        .t2
        .unwrap_or(record.echo_peak_time - control2.switch_times().0);
    let kernel = SusceptibilityKernel::new(ensemble, f1, None);
    record.alpha_eff_l = kernel.alpha_eff(medium.beta[0], f1) * medium.length;
    record.gamma = ensemble.natural_raman_width(f1);
}

pub(crate) fn enforce(protocol: &ProtocolConfig, conditions: Option<&ConditionReport>) -> Result<()> {
    if let (true, Some(report)) = (protocol.strict, conditions) {
        if !report.overall() {
            return Err(Error::ConditionsUnmet(report.failed_ids().join(",")));
        }
    }
    Ok(())
}

/// Recall the stored excitation as a backward echo.
#[allow(clippy::too_many_arguments)]
pub fn recall_weak(
    stored: &WeakStorage,
    probe: &ProbeSpec,
    control1: &ControlProfile,
    control2: &ControlProfile,
    protocol: &ProtocolConfig,
    ensemble: &EnsembleSpec,
    medium: &MediumSpec,
    grid: &Grid,
    conditions: Option<&ConditionReport>,
) -> Result<(EchoRecord, WeakState)> {
    enforce(protocol, conditions)?;
    let n_z = grid.n_z;
    let ensemble2 = protocol.stage2_ensemble(ensemble);
    // The transformed coherence carries the stage's Stark phase and the
    // dispersive wavenumber `(-1)^nu beta / (2 Delta)`.
    let psi1 = control1.stark_phase(grid.tau_span);
    let dk = 0.5 * (medium.beta[0] / control1.detuning() + medium.beta[1] / control2.detuning());
    let mut state = WeakState::new(Stage::Retrieval, ensemble2.len(), n_z);
    state.r12_t = protocol.handover(ensemble.nodes(), &stored.state.r12_t, |z| psi1 + dk * z, medium, grid);
    let ctx = WeakContext {
        stage: Stage::Retrieval,
        ensemble: &ensemble2,
        medium,
        control: control2,
        grid,
        probe_bandwidth: probe.spectral_width,
    };
    run_stage(&mut state, &ctx, &|_| ZERO)?;
    let delta2 = control2.detuning();
    let norm2 = (medium.beta[1] * medium.group_velocity[1]).sqrt();
    let omega_floor = 1e-7 * control2.params().rabi;
    let echo: Vec<C> = state
        .zeta_t
        .chunks(n_z)
        .enumerate()
        .map(|(k, row)| {
            let omega = control2.rabi(grid.tau(k));
            if omega.norm() > omega_floor {
                I * delta2 * row[0] / omega.conj() / norm2
            } else {
                ZERO
            }
        })
        .collect();
    let input = input_envelope(probe, stored.amplitude, medium, grid);
    let dt = grid.dt();
    let mut record = EchoRecord::new(protocol.name(), dt, input, dt, echo)?;
    fill_record_metadata(&mut record, probe, control1, control2, protocol, ensemble, medium);
    Ok((record, state))
}

/// Ensemble response `D(omega) = sum_j w_j (1 - exp(-i x_j T)) / (i x_j)`,
/// `x_j = Delta_R,j - omega`: the Fourier–Laplace transform of the discrete
/// free-induction kernel truncated at the memory time `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityKernel {
    detunings: Vec<f64>,
    weights: Vec<f64>,
    memory_time: f64,
    /// Raman-frequency comb spacing and central-tooth weight.
    comb: Option<(f64, f64)>,
}

/// `|exp(-s^2 t^2 / 2)| = 1e-10` at `s t = CUTOFF`.
const CUTOFF: f64 = 6.786_140_424_415_113;

impl SusceptibilityKernel {
    /// With `memory_time = None` the cut-off is the first time the
    /// free-induction kernel magnitude drops below `1e-10`, capped by the
    /// decay time of the narrowest Gaussian component.
    pub fn new(ensemble: &EnsembleSpec, f: f64, memory_time: Option<f64>) -> Self {
        let detunings: Vec<f64> = ensemble.nodes().iter().map(|n| n.raman_detuning(f)).collect();
        let weights: Vec<f64> = ensemble.nodes().iter().map(|n| n.weight).collect();
        let comb = ensemble.comb().map(|c| {
            let w0 = ensemble
                .tooth_weights()
                .into_iter()
                .find(|(i, _)| *i == 0)
                .map_or(0.0, |(_, w)| w);
            (f * c.spacing, w0)
        });
        let memory_time = memory_time.unwrap_or_else(|| {
            let spread = ensemble.raman_width(f).max(1e-300);
            let narrowest = [
                ensemble.comb().map_or(0.0, |c| f * c.tooth_width),
                ensemble.natural_raman_width(f),
                ensemble.controlled_width_31() * f,
                ensemble.controlled_width_21(),
            ]
            .into_iter()
            .filter(|w| *w > 0.0)
            .fold(spread, f64::min);
            let cap = CUTOFF / narrowest;
            let max_det = ensemble.max_weighted(|n| n.raman_detuning(f)).max(spread);
            let h = 0.05 / max_det;
            let mut t = 0.0;
            loop {
                t += h;
                if t >= cap || ensemble.free_induction(f, t).norm() < 1e-10 {
                    break t.min(cap);
                }
            }
        });
        Self {
            detunings,
            weights,
            memory_time,
            comb,
        }
    }

    pub fn memory_time(&self) -> f64 {
        self.memory_time
    }

    pub fn d(&self, omega: f64) -> C {
        let t = self.memory_time;
        self.detunings
            .iter()
            .zip(&self.weights)
            .map(|(&det, &w)| {
                let x = det - omega;
                if (x * t).abs() < 1e-8 {
                    C::new(w * t, -0.5 * w * x * t * t)
                } else {
                    w * (1.0 - C::from_polar(1.0, -x * t)) / (I * x)
                }
            })
            .sum()
    }

    /// Energy absorption coefficient seen by a probe centred on `omega = 0`:
    /// `beta f Re D(0)` for continuous lines, and the comb-averaged
    /// `beta f pi w0 / (f delta)` for a comb whose central tooth holds `w0`.
    pub fn alpha_eff(&self, beta: f64, f: f64) -> f64 {
        match self.comb {
            Some((spacing, w0)) => beta * f * std::f64::consts::PI * w0 / spacing,
            None => beta * f * self.d(0.0).re,
        }
    }

    /// `Re[beta f D / 2] >= 0` on the given frequencies, to within `1e-6 Re D(0)`
    /// of cut-off ringing and quadrature error.
    pub fn is_passive(&self, omegas: &[f64]) -> bool {
        let scale = self.d(0.0).re.abs();
        omegas.iter().all(|&w| self.d(w).re >= -1e-6 * scale)
    }
}

/// Frequency-domain propagation result, sampled from `start` with step `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub start: f64,
    pub dt: f64,
    pub input: Vec<C>,
    pub output: Vec<C>,
    pub energy_transmission: f64,
}

impl Transmission {
    /// Output over input energy, both restricted to `[t0, t1]`.
    pub fn windowed_transmission(&self, t0: f64, t1: f64) -> f64 {
        let inside = |k: usize| {
            let t = self.start + self.dt * k as f64;
            t >= t0 && t <= t1
        };
        let e = |v: &[C]| -> f64 { v.iter().enumerate().filter(|(k, _)| inside(*k)).map(|(_, x)| x.norm_sqr()).sum() };
        e(&self.output) / e(&self.input)
    }
}

/// Propagate the probe through the slab in the frequency domain,
/// `zt_out(omega) = zt_in(omega) exp(-(beta f / 2) D(omega) L)`, with `f`
/// held at the control's plateau value.
pub fn analytic_transmission(
    probe: &ProbeSpec,
    kernel: &SusceptibilityKernel,
    medium: &MediumSpec,
    control: &ControlProfile,
) -> Transmission {
    let f = control.f_peak();
    let sigma = probe.sigma_t();
    let dt = sigma / 16.0;
    let span = 20.0 * sigma + 2.0 * kernel.memory_time();
    let n = ((2.0 * span / dt).ceil() as usize).next_power_of_two();
    let start = probe.center - 10.0 * sigma;
    let input: Vec<C> = (0..n).map(|k| probe.shape(start + dt * k as f64)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let analysis = planner.plan_fft_inverse(n);
    let synthesis = planner.plan_fft_forward(n);
    let mut spec = input.clone();
    analysis.process(&mut spec);
    let factor = -0.5 * medium.beta[0] * f * medium.length;
    for (j, x) in spec.iter_mut().enumerate() {
        let jj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        let omega = 2.0 * std::f64::consts::PI * jj / (n as f64 * dt);
        *x *= (factor * kernel.d(omega)).exp();
    }
    synthesis.process(&mut spec);
    let output: Vec<C> = spec.into_iter().map(|x| x / n as f64).collect();
    let e_in: f64 = input.iter().map(|x| x.norm_sqr()).sum();
    let e_out: f64 = output.iter().map(|x| x.norm_sqr()).sum();
    Transmission {
        start,
        dt,
        input,
        output,
        energy_transmission: e_out / e_in,
    }
}
