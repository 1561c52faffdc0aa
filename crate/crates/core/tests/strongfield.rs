use std::path::Path;

use reqm::scenario::Resolved;
use reqm::strongfield::{run_retrieval, run_stage, run_storage, SimulationState, StrongContext};
use reqm::*;

fn resonant_control(rabi: f64, detuning: f64) -> ControlProfile {
    ControlProfile::unchecked(ControlParams {
        rabi,
        rabi_phase: 0.0,
        detuning,
        carrier: 0.0,
        wavevector: [0.0; 3],
        on: -10.0,
        off: 100.0,
        rise: 0.0,
        fall: 0.0,
    })
    .unwrap()
}

fn single_node() -> EnsembleSpec {
    EnsembleSpec::gaussian(
        GaussianWidths {
            controlled_31: 1.0,
            ..Default::default()
        },
        1,
        1,
        QuadratureRule::Center,
    )
    .unwrap()
}

fn strong_linear(n_tau: usize, n_z: usize) -> (Scenario, Resolved) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/recrib_strong_linear.toml");
    let mut s = Scenario::load(&path).unwrap();
    s.grid.n_tau = n_tau;
    s.grid.n_z = n_z;
    s.ensemble = reqm::scenario::EnsembleConfig::Gaussian {
        controlled_31: 1.0,
        natural_31: 0.0,
        controlled_21: 0.0,
        natural_21: 0.0,
        n_nodes: 33,
        n_natural: 3,
        rule: QuadratureRule::GaussHermite,
    };
    let r = s.resolve().unwrap();
    (s, r)
}

#[test]
fn constant_field_drives_rabi_oscillation() {
    // Omega >> Delta keeps the probe Stark term negligible, so r11 = cos^2(zeta tau)
    // with zeta = (Omega / Delta) a.
    let e = single_node();
    let medium = MediumSpec::new(1e-14, 1.0).unwrap();
    let c = resonant_control(100.0, 10.0);
    let grid = Grid::new(2001, 4, 10.0).unwrap();
    let ctx = StrongContext {
        stage: Stage::Storage,
        ensemble: &e,
        medium: &medium,
        control: &c,
        grid: &grid,
    };
    let mut st = SimulationState::ground(Stage::Storage, 1, 4);
    let a0 = Complex64::new(0.03, 0.0);
    run_stage(&mut st, &ctx, &|t| a0 * Complex64::from_polar(1.0, c.stark_phase(t)), 0.03).unwrap();
    let zeta = 100.0 / 10.0 * 0.03;
    for k in 0..4 {
        let exact = (zeta * 10.0f64).cos().powi(2);
        assert!((st.r11(k) - exact).abs() < 1e-6, "r11 {} exact {exact}", st.r11(k));
    }
    assert!(st.bloch_excess() < 1e-10);
}

#[test]
fn zero_field_leaves_atoms_in_ground_state() {
    let e = single_node();
    let medium = MediumSpec::new(5.0, 1.0).unwrap();
    let c = resonant_control(1.0, 10.0);
    let grid = Grid::new(101, 8, 5.0).unwrap();
    let ctx = StrongContext {
        stage: Stage::Storage,
        ensemble: &e,
        medium: &medium,
        control: &c,
        grid: &grid,
    };
    let mut st = SimulationState::ground(Stage::Storage, 1, 8);
    run_stage(&mut st, &ctx, &|_| Complex64::new(0.0, 0.0), 0.0).unwrap();
    assert!(st.r12.iter().all(|x| x.norm() == 0.0));
    assert!(st.r22.iter().all(|&p| p == 0.0));
    assert!(st.zeta.iter().all(|x| x.norm() == 0.0));
}

#[test]
fn undriven_coherence_rotates_at_raman_detuning() {
    let e = EnsembleSpec::gaussian(
        GaussianWidths {
            controlled_31: 0.0,
            controlled_21: 0.4,
            ..Default::default()
        },
        5,
        1,
        QuadratureRule::GaussHermite,
    )
    .unwrap();
    let medium = MediumSpec::new(1e-14, 1.0).unwrap();
    let c = resonant_control(10.0, 100.0);
    let grid = Grid::new(401, 4, 4.0).unwrap();
    let ctx = StrongContext {
        stage: Stage::Storage,
        ensemble: &e,
        medium: &medium,
        control: &c,
        grid: &grid,
    };
    let mut st = SimulationState::ground(Stage::Storage, e.len(), 4);
    let r0 = Complex64::new(0.2, 0.1);
    st.r12.iter_mut().for_each(|x| *x = r0);
    st.r22.iter_mut().for_each(|p| *p = 0.1);
    run_stage(&mut st, &ctx, &|_| Complex64::new(0.0, 0.0), 0.0).unwrap();
    let t = grid.tau(grid.n_tau - 1);
    let f = c.f_peak();
    for (j, node) in e.nodes().iter().enumerate() {
        let phase = node.delta21 * t + (node.delta31 - c.detuning()) * f * t;
        let expected = r0 * Complex64::from_polar(1.0, -phase);
        for k in 0..4 {
            let r = st.r12[j * 4 + k];
            assert!((r - expected).norm() < 1e-9, "node {j}: {r} vs {expected}");
        }
    }
}

#[test]
fn vanishing_control_under_a_field_is_an_error() {
    let e = single_node();
    let medium = MediumSpec::new(1.0, 1.0).unwrap();
    let c = resonant_control(0.0, 10.0);
    let grid = Grid::new(11, 4, 1.0).unwrap();
    let ctx = StrongContext {
        stage: Stage::Storage,
        ensemble: &e,
        medium: &medium,
        control: &c,
        grid: &grid,
    };
    assert_eq!(
        reqm::strongfield::physical_field(Stage::Storage, Complex64::new(0.0, 0.0), 10.0, Complex64::new(0.1, 0.0), 0.5),
        Err(Error::ControlVanishes { tau: 0.5 })
    );
    let mut st = SimulationState::ground(Stage::Storage, 1, 4);
    let a0 = Complex64::new(0.1, 0.0);
    assert!(run_stage(&mut st, &ctx, &|_| a0, 0.1).is_ok());
    assert!(st.r12.iter().all(|x| x.norm() == 0.0));
}

#[test]
fn zero_probe_stores_nothing_and_transmits_nothing() {
    let (mut s, r) = strong_linear(256, 32);
    s.probe.amplitude_scale = 0.0;
    let st = run_storage(&s.probe, &r.stage1.control, &r.ensemble, &s.medium, &s.grid).unwrap();
    assert!(st.state.r12.iter().all(|x| x.norm() == 0.0));
    assert!(st.output.iter().all(|x| x.norm() == 0.0));
    assert_eq!(st.audit.transmitted, 0.0);
}

#[test]
fn empty_memory_gives_no_echo() {
    let (s, r) = strong_linear(256, 32);
    let mut st = run_storage(&s.probe, &r.stage1.control, &r.ensemble, &s.medium, &s.grid).unwrap();
    st.state.r12.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
    st.state.r22.iter_mut().for_each(|p| *p = 0.0);
    let (rec, _) = run_retrieval(
        &st,
        &s.probe,
        &r.stage1.control,
        &r.stage2.control,
        &s.protocol,
        &r.ensemble,
        &s.medium,
        &s.grid,
        None,
    )
    .unwrap();
    assert_eq!(rec.efficiency, 0.0);
}

#[test]
fn probe_phase_does_not_change_efficiency() {
    let (mut s, r) = strong_linear(2048, 32);
    s.probe.amplitude_scale = 10.0;
    let run = |s: &Scenario| {
        let st = run_storage(&s.probe, &r.stage1.control, &r.ensemble, &s.medium, &s.grid).unwrap();
        run_retrieval(
            &st,
            &s.probe,
            &r.stage1.control,
            &r.stage2.control,
            &s.protocol,
            &r.ensemble,
            &s.medium,
            &s.grid,
            None,
        )
        .unwrap()
        .0
    };
    let base = run(&s);
    s.probe.phase = 1.1;
    let shifted = run(&s);
    assert!((base.efficiency - shifted.efficiency).abs() < 1e-10);
    for (a, b) in base.echo.iter().zip(&shifted.echo) {
        assert!((a.norm() - b.norm()).abs() < 1e-10 * (1.0 + a.norm()));
    }
}

#[test]
fn strong_storage_stays_physical() {
    let (mut s, r) = strong_linear(2048, 32);
    s.probe.amplitude_scale = 10.0;
    let st = run_storage(&s.probe, &r.stage1.control, &r.ensemble, &s.medium, &s.grid).unwrap();
    assert!(st.state.bloch_excess() < 1e-8);
    assert!(st.state.r22.iter().all(|&p| (-1e-12..=1.0).contains(&p)));
    assert!(st.audit.imbalance() < 1e-3, "audit {}", st.audit.imbalance());
}
