//! Storage/recall protocol selection and the hand-over between stages.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{DetuningNode, EnsembleSpec};
use crate::grid::Grid;
use crate::medium::MediumSpec;

/// Storage (`nu = 1`) or retrieval (`nu = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Storage,
    Retrieval,
}

impl Stage {
    /// `(-1)^nu`.
    pub fn sign(self) -> f64 {
        match self {
            Stage::Storage => -1.0,
            Stage::Retrieval => 1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Stage::Storage => 0,
            Stage::Retrieval => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProtocolKind {
    /// Rephasing by inverting every controlled detuning (k = 0).
    Recrib,
    /// Passive rephasing on a comb of spacing `comb_spacing`; `order` is k >= 1.
    Reafc { comb_spacing: f64, order: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    #[serde(flatten)]
    pub kind: ProtocolKind,
    /// Dead time between the two stage windows, measured at `Z = L`.
    #[serde(default)]
    pub gap: f64,
    /// Global phase `alpha` of the mode-matching map.
    #[serde(default)]
    pub alpha_phase: f64,
    /// Residual wavenumber mismatch of the mode-matching map.
    #[serde(default)]
    pub mode_mismatch: f64,
    /// Planned storage time (probe centre to write-control off).
    #[serde(default)]
    pub t1: Option<f64>,
    /// Planned recall time (read-control on to echo).
    #[serde(default)]
    pub t2: Option<f64>,
    #[serde(default)]
    pub strict: bool,
}

impl ProtocolConfig {
    pub fn recrib() -> Self {
        Self {
            kind: ProtocolKind::Recrib,
            gap: 0.0,
            alpha_phase: 0.0,
            mode_mismatch: 0.0,
            t1: None,
            t2: None,
            strict: false,
        }
    }

    pub fn reafc(comb_spacing: f64, order: u32) -> Self {
        Self {
            kind: ProtocolKind::Reafc { comb_spacing, order },
            ..Self::recrib()
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProtocolKind::Recrib => "RECRIB",
            ProtocolKind::Reafc { .. } => "REAFC",
        }
    }

    /// Ensemble seen during retrieval.
    pub fn stage2_ensemble(&self, stage1: &EnsembleSpec) -> EnsembleSpec {
        match self.kind {
            ProtocolKind::Recrib => stage1.inverted(),
            ProtocolKind::Reafc { .. } => stage1.clone(),
        }
    }

    /// Raman detuning of a node while both controls are off. For RECRIB the
    /// inversion is applied at the middle of the dead time, so only the
    /// natural part survives on average.
    fn gap_rate(&self, node: &DetuningNode) -> f64 {
        match self.kind {
            ProtocolKind::Recrib => node.delta21_nat,
            ProtocolKind::Reafc { .. } => node.delta21,
        }
    }

    /// Map stage-1 coherences (node-major, `n_z` per node) at the end of
    /// storage onto stage-2 initial coherences: mode-matching phase, global
    /// phase `alpha`, and exact free evolution across the dead time, whose
    /// length varies across the slab because of the two moving frames.
    pub fn handover(
        &self,
        nodes: &[DetuningNode],
        r12: &[Complex64],
        extra_phase: impl Fn(f64) -> f64,
        medium: &MediumSpec,
        grid: &Grid,
    ) -> Vec<Complex64> {
        let n_z = grid.n_z;
        let length = medium.length;
        let skew = 1.0 / medium.group_velocity[0] + 1.0 / medium.group_velocity[1];
        let mut out = Vec::with_capacity(r12.len());
        for (j, node) in nodes.iter().enumerate() {
            let rate = self.gap_rate(node);
            for k in 0..n_z {
                let z = grid.z(k, length);
                let elapsed = self.gap + (length - z) * skew;
                let phase = -self.alpha_phase - self.mode_mismatch * z - rate * elapsed + extra_phase(z);
                out.push(r12[j * n_z + k] * Complex64::from_polar(1.0, phase));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{EnsembleSpec, GaussianWidths, QuadratureRule};

    #[test]
    fn handover_identity_for_ideal_recrib() {
        let e = EnsembleSpec::gaussian(
            GaussianWidths {
                controlled_31: 1.0,
                ..Default::default()
            },
            5,
            5,
            QuadratureRule::GaussHermite,
        )
        .unwrap();
        let grid = Grid::new(4, 3, 1.0).unwrap();
        let medium = MediumSpec::new(1.0, 1.0).unwrap();
        let r: Vec<Complex64> = (0..15).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let p = ProtocolConfig {
            gap: 3.0,
            ..ProtocolConfig::recrib()
        };
        assert_eq!(p.handover(e.nodes(), &r, |_| 0.0, &medium, &grid), r);
        let p = ProtocolConfig {
            alpha_phase: std::f64::consts::PI,
            ..p
        };
        let out = p.handover(e.nodes(), &r, |_| 0.0, &medium, &grid);
        for (a, b) in out.iter().zip(&r) {
            assert!((a + b).norm() < 1e-12);
        }
    }

    #[test]
    fn protocol_round_trips_through_toml() {
        let p = ProtocolConfig {
            t1: Some(std::f64::consts::PI),
            ..ProtocolConfig::reafc(1.0, 2)
        };
        let s = toml::to_string(&p).unwrap();
        assert_eq!(toml::from_str::<ProtocolConfig>(&s).unwrap(), p);
    }
}
