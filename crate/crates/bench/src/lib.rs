//! Benchmark fixtures: the built-in scenario on reduced grids.

use reqm::scenario::{EnsembleConfig, Resolved};
use reqm::{QuadratureRule, Regime, Scenario};

/// The built-in scenario with `n_nodes` Gauss-Hermite nodes on an
/// `n_tau x n_z` grid, resolved.
pub fn fixture(regime: Regime, n_nodes: usize, n_tau: usize, n_z: usize) -> (Scenario, Resolved) {
    let mut s = Scenario::recrib_ideal();
    s.regime = regime;
    s.grid.n_tau = n_tau;
    s.grid.n_z = n_z;
    s.ensemble = EnsembleConfig::Gaussian {
        controlled_31: 1.0,
        natural_31: 0.0,
        controlled_21: 0.0,
        natural_21: 0.0,
        n_nodes,
        n_natural: 3,
        rule: QuadratureRule::GaussHermite,
    };
    if regime == Regime::Strong {
        s.probe.amplitude_scale = 10.0;
    }
    let resolved = s.resolve().expect("fixture resolves");
    (s, resolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_resolve() {
        for regime in [Regime::Weak, Regime::Strong] {
            let (s, r) = fixture(regime, 33, 256, 32);
            assert_eq!(r.ensemble.len(), 33);
            assert_eq!(s.grid.n_z, 32);
        }
    }
}
