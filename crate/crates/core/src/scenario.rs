//! Scenario files: a TOML description of one storage–recall run, its
//! resolution into stage specifications, and run orchestration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::conditions::{
    check_strong_conditions, check_weak_conditions, echo_carrier_weak, echo_time_afc, solve_strong_stage2,
    ConditionReport, PhaseMatching, StageSpec, Window,
};
use crate::control::{ControlParams, ControlProfile, OFF_RESONANCE_FACTOR};
use crate::ensemble::{build_comb_ensemble, EnsembleSpec, GaussianWidths, QuadratureRule};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io;
use crate::measure::EchoRecord;
use crate::medium::MediumSpec;
use crate::probe::ProbeSpec;
use crate::protocol::{ProtocolConfig, ProtocolKind, Stage};
use crate::strongfield;
use crate::weakfield::{self, EnergyAudit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Weak,
    Strong,
}

/// Inhomogeneous line shape. Gaussian widths are standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum EnsembleConfig {
    Gaussian {
        #[serde(default)]
        controlled_31: f64,
        #[serde(default)]
        natural_31: f64,
        #[serde(default)]
        controlled_21: f64,
        #[serde(default)]
        natural_21: f64,
        n_nodes: usize,
        #[serde(default = "three")]
        n_natural: usize,
        #[serde(default = "gauss_hermite")]
        rule: QuadratureRule,
    },
    Comb {
        spacing: f64,
        tooth_width: f64,
        n_lines: usize,
        nodes_per_tooth: usize,
        #[serde(default = "flat")]
        envelope_width: f64,
    },
}

fn three() -> usize {
    3
}

fn gauss_hermite() -> QuadratureRule {
    QuadratureRule::GaussHermite
}

fn flat() -> f64 {
    f64::INFINITY
}

impl EnsembleConfig {
    pub fn build(&self) -> Result<EnsembleSpec> {
        match *self {
            EnsembleConfig::Gaussian {
                controlled_31,
                natural_31,
                controlled_21,
                natural_21,
                n_nodes,
                n_natural,
                rule,
            } => EnsembleSpec::gaussian(
                GaussianWidths {
                    controlled_31,
                    natural_31,
                    controlled_21,
                    natural_21,
                },
                n_nodes,
                n_natural,
                rule,
            ),
            EnsembleConfig::Comb {
                spacing,
                tooth_width,
                n_lines,
                nodes_per_tooth,
                envelope_width,
            } => build_comb_ensemble(spacing, tooth_width, n_lines, nodes_per_tooth, envelope_width),
        }
    }
}

/// Geometry and carriers entering the phase-matching condition. The control
/// wavevectors live in the control sections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseMatchingConfig {
    #[serde(default = "unit")]
    pub speed_of_light: f64,
    /// Echo carrier; derived from the controls when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo_carrier: Option<f64>,
    /// Samples used for the envelope-reversal conditions.
    #[serde(default = "default_samples")]
    pub window_samples: usize,
}

fn unit() -> f64 {
    1.0
}

fn default_samples() -> usize {
    4097
}

impl Default for PhaseMatchingConfig {
    fn default() -> Self {
        Self {
            speed_of_light: 1.0,
            echo_carrier: None,
            window_samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub regime: Regime,
    /// Output directory for `simulate`.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub medium: MediumSpec,
    pub ensemble: EnsembleConfig,
    pub probe: ProbeSpec,
    /// Writing control, optionally followed by the reading control. A missing
    /// reading control is constructed to satisfy the reversibility conditions.
    pub controls: Vec<ControlParams>,
    pub protocol: ProtocolConfig,
    pub grid: Grid,
    #[serde(default)]
    pub phase_matching: PhaseMatchingConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// A scenario with both stages made explicit and its condition report.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub ensemble: EnsembleSpec,
    pub stage1: StageSpec,
    pub stage2: StageSpec,
    pub phase_matching: PhaseMatching,
    pub report: ConditionReport,
}

/// Everything a `simulate` run produces, with file contents keyed by name.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub resolved: Resolved,
    pub record: EchoRecord,
    pub audit: EnergyAudit,
    pub files: Vec<(String, String)>,
}

impl Scenario {
    /// Weak-field RECRIB storage of a Gaussian pulse in a Gaussian ensemble
    /// at effective depth 20.
    pub fn recrib_ideal() -> Self {
        let control = ControlParams {
            rabi: 100.0,
            rabi_phase: 0.0,
            detuning: 100.0,
            carrier: 0.0,
            wavevector: [0.0; 3],
            on: 0.5,
            off: 15.5,
            rise: 1.0,
            fall: 1.0,
        };
        Self {
            name: "recrib_ideal".into(),
            regime: Regime::Weak,
            output: PathBuf::from("out/recrib_ideal"),
            medium: MediumSpec {
                beta: [20.0 / (std::f64::consts::PI / 2.0).sqrt(); 2],
                length: 1.0,
                refractive_index: [1.0, 1.0],
                group_velocity: [1e6, 1e6],
            },
            ensemble: EnsembleConfig::Gaussian {
                controlled_31: 1.0,
                natural_31: 0.0,
                controlled_21: 0.0,
                natural_21: 0.0,
                n_nodes: 129,
                n_natural: 3,
                rule: QuadratureRule::GaussHermite,
            },
            probe: ProbeSpec {
                center: 8.0,
                spectral_width: 0.5,
                amplitude_scale: 1.0,
                phase: 0.0,
                carrier: 0.0,
            },
            controls: vec![control],
            protocol: ProtocolConfig::recrib(),
            grid: Grid {
                n_tau: 512,
                n_z: 128,
                tau_span: 16.0,
            },
            phase_matching: PhaseMatchingConfig::default(),
        }
    }

    /// Parse TOML text. Errors carry the line and column of the offending input.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are TOML-representable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.controls.is_empty() || self.controls.len() > 2 {
            return Err(Error::Validation(format!(
                "controls: expected 1 or 2 sections, got {}",
                self.controls.len()
            )));
        }
        if self.phase_matching.speed_of_light <= 0.0 {
            return Err(Error::Validation("phase_matching.speed_of_light must be positive".into()));
        }
        let named = |section: &str, e: Error| Error::Validation(format!("{section}: {e}"));
        self.medium.validate().map_err(|e| named("medium", e))?;
        self.probe.validate().map_err(|e| named("probe", e))?;
        self.grid.validate().map_err(|e| named("grid", e))?;
        self.probe
            .check_support(self.grid.tau_span)
            .map_err(|e| named("probe", e))?;
        if let ProtocolKind::Reafc { .. } = self.protocol.kind {
            if !matches!(self.ensemble, EnsembleConfig::Comb { .. }) {
                return Err(Error::Validation("protocol: REAFC needs a comb ensemble".into()));
            }
        }
        Ok(())
    }

    /// Build both stages, derive the reading control when absent and
    /// evaluate the reversibility conditions of the chosen regime.
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let ensemble = self.ensemble.build()?;
        let c = self.phase_matching.speed_of_light;
        let span = self.grid.tau_span;
        let control1 = ControlProfile::new(self.controls[0], self.probe.spectral_width, OFF_RESONANCE_FACTOR)?;
        let p1 = control1.params();
        let stage1 = StageSpec {
            control: control1,
            ensemble: ensemble.clone(),
            beta: self.medium.beta[0],
            carrier: self.probe.carrier,
            wavevector_z: p1.wavevector[2],
            transverse: [p1.wavevector[0], p1.wavevector[1]],
            refractive_index: self.medium.refractive_index[0],
        };
        let ensemble2 = self.protocol.stage2_ensemble(&ensemble);
        let explicit = self.controls.get(1);
        let mut control2 = match explicit {
            Some(p) => ControlProfile::new(*p, self.probe.spectral_width, OFF_RESONANCE_FACTOR)?,
            None => self.derive_control2(&stage1)?,
        };
        let carrier2 = self.phase_matching.echo_carrier.unwrap_or(match self.regime {
            Regime::Strong => self.probe.carrier + control2.carrier() - p1.carrier,
            Regime::Weak => echo_carrier_weak(self.probe.carrier, 0.0, &control1, &control2).0,
        });
        if explicit.is_none() {
            let n = self.medium.refractive_index;
            let mut k2 = p1.wavevector[2] - (n[0] * self.probe.carrier + n[1] * carrier2) / c;
            if self.regime == Regime::Weak {
                k2 -= self.medium.beta[0] / control1.detuning() + self.medium.beta[1] / control2.detuning();
            }
            control2 = control2.with_params(|p| {
                p.wavevector = [p1.wavevector[0], p1.wavevector[1], k2];
            })?;
        }
        let p2 = *control2.params();
        let stage2 = StageSpec {
            control: control2,
            ensemble: ensemble2,
            beta: self.medium.beta[1],
            carrier: carrier2,
            wavevector_z: p2.wavevector[2],
            transverse: [p2.wavevector[0], p2.wavevector[1]],
            refractive_index: self.medium.refractive_index[1],
        };
        let phase_matching = PhaseMatching::from_stages(&stage1, &stage2, c, self.protocol.alpha_phase);
        let window = Window {
            span,
            samples: self.phase_matching.window_samples,
        };
        let report = match self.regime {
            Regime::Strong => check_strong_conditions(&stage1, &stage2, &phase_matching, &window),
            Regime::Weak => {
                let timing = self.planned_timing(&control1, &control2)?;
                check_weak_conditions(&stage1, &stage2, &self.protocol, &phase_matching, &window, timing)
            }
        };
        Ok(Resolved {
            ensemble,
            stage1,
            stage2,
            phase_matching,
            report,
        })
    }

    /// Planned `(t1, t2)` for comb protocols; absent entries follow from the
    /// write-control switch-off and the rephasing period.
    fn planned_timing(&self, c1: &ControlProfile, c2: &ControlProfile) -> Result<Option<(f64, f64)>> {
        match self.protocol.kind {
            ProtocolKind::Recrib => Ok(None),
            ProtocolKind::Reafc { comb_spacing, order } => {
                let t1 = self.protocol.t1.unwrap_or(c1.switch_times().1 - self.probe.center);
                let t2 = match self.protocol.t2 {
                    Some(t2) => t2,
                    None => echo_time_afc(c1.f_peak(), c2.f_peak(), t1, comb_spacing, order)?,
                };
                Ok(Some((t1, t2)))
            }
        }
    }

    /// Reading control mirrored over the stage window. RECRIB also flips the
    /// one-photon detuning; the weak regime rescales the Rabi frequency so that
    /// `beta f` is mirrored when the couplings differ. The wavevector is set
    /// by the caller once the echo carrier is known.
    fn derive_control2(&self, stage1: &StageSpec) -> Result<ControlProfile> {
        let control = match self.protocol.kind {
            ProtocolKind::Recrib => solve_strong_stage2(stage1, self.grid.tau_span, self.phase_matching.speed_of_light)?.control,
            ProtocolKind::Reafc { .. } => stage1.control.reversed(self.grid.tau_span),
        };
        let [b1, b2] = self.medium.beta;
        match self.regime {
            Regime::Weak if b1 != b2 => control.with_params(|p| p.rabi *= (b1 / b2).sqrt()),
            _ => Ok(control),
        }
    }

    /// Resolve, enforce the conditions in strict mode, simulate both stages and
    /// render every output file.
    pub fn run(&self) -> Result<RunOutput> {
        let resolved = self.resolve()?;
        weakfield::enforce(&self.protocol, Some(&resolved.report))?;
        let (c1, c2) = (&resolved.stage1.control, &resolved.stage2.control);
        let e = &resolved.ensemble;
        let (m, g, probe) = (&self.medium, &self.grid, &self.probe);
        let report = Some(&resolved.report);
        let taus: Vec<f64> = (0..g.n_tau).map(|k| g.tau(k)).collect();
        let zs: Vec<f64> = (0..g.n_z).map(|k| g.z(k, m.length)).collect();
        let (record, audit, field1, field2, atoms) = match self.regime {
            Regime::Weak => {
                let st = weakfield::run_weak_storage(probe, c1, e, m, g)?;
                let (record, recall) = weakfield::recall_weak(&st, probe, c1, c2, &self.protocol, e, m, g, report)?;
                let r12 = weak_coherences(&st.state, m, c1, g);
                (
                    record,
                    st.audit,
                    st.state.physical_zeta(m, c1, g),
                    recall.physical_zeta(m, c2, g),
                    io::atoms_csv(g.tau_span, e.nodes(), &zs, &r12, None),
                )
            }
            Regime::Strong => {
                let st = strongfield::run_storage(probe, c1, e, m, g)?;
                let (record, recall) =
                    strongfield::run_retrieval(&st, probe, c1, c2, &self.protocol, e, m, g, report)?;
                let r11: Vec<f64> = st.state.r22.iter().map(|p| 1.0 - p).collect();
                let atoms = io::atoms_csv(g.tau_span, e.nodes(), &zs, &st.state.r12, Some(&r11));
                (record, st.audit, st.state.zeta, recall.zeta, atoms)
            }
        };
        let mut summary = String::new();
        let _ = writeln!(summary, "{}", EchoRecord::summary_header());
        let _ = writeln!(summary, "{}", record.summary_line());
        let audit_text = format!(
            "input={:.16e}\ntransmitted={:.16e}\nstored={:.16e}\nimbalance={:.16e}\n",
            audit.input,
            audit.transmitted,
            audit.stored,
            audit.imbalance()
        );
        let files = vec![
            ("summary.csv".to_string(), summary),
            ("conditions.txt".to_string(), format!("{}\n", resolved.report)),
            ("audit.txt".to_string(), audit_text),
            ("envelope.csv".to_string(), io::envelope_csv(record.dt_input, &record.input, &record.echo)),
            ("field_storage.csv".to_string(), io::field_csv(&taus, &zs, &field1)),
            ("field_recall.csv".to_string(), io::field_csv(&taus, &zs, &field2)),
            ("atoms_storage.csv".to_string(), atoms),
        ];
        Ok(RunOutput {
            resolved,
            record,
            audit,
            files,
        })
    }
}

/// Physical coherences `r12 = rt exp(-i theta(Z) + i psi)` at the end of storage.
fn weak_coherences(state: &weakfield::WeakState, medium: &MediumSpec, control: &ControlProfile, grid: &Grid) -> Vec<C> {
    let k = Stage::Storage.sign() * medium.beta[0] / (2.0 * control.detuning());
    let psi = control.stark_phase(grid.tau_span);
    state
        .r12_t
        .chunks(state.n_z)
        .flat_map(|row| {
            row.iter().enumerate().map(move |(j, r)| {
                let theta = k * grid.z(j, medium.length);
                r * C::from_polar(1.0, psi - theta)
            })
        })
        .collect()
}

impl RunOutput {
    /// Write every output file atomically into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            io::write_atomic(&dir.join(name), contents.as_bytes())?;
        }
        Ok(())
    }
}
