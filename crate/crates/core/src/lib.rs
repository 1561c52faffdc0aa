//! Raman echo quantum memory simulator.
//!
//! Widths are standard deviations throughout. Field and coherence operators
//! are replaced by complex c-number amplitudes.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod conditions;
pub mod control;
pub mod efficiency;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod io;
pub mod measure;
pub mod medium;
pub mod probe;
pub mod protocol;
pub mod quadrature;
pub mod scenario;
pub mod strongfield;
pub mod weakfield;

pub use conditions::{ConditionReport, PhaseMatching, StageSpec};
pub use control::{ControlParams, ControlProfile};
pub use efficiency::{epsilon, optimal_gamma, EfficiencyModel, Protocol};
pub use ensemble::{DetuningNode, EnsembleSpec, GaussianWidths, QuadratureRule};
pub use error::{Error, Result};
pub use grid::Grid;
pub use measure::EchoRecord;
pub use medium::MediumSpec;
pub use probe::ProbeSpec;
pub use protocol::{ProtocolConfig, ProtocolKind, Stage};
pub use scenario::{Regime, Scenario};
pub use num_complex::Complex64;
