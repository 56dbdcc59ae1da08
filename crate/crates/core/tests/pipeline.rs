//! End-to-end use of the public API: state, transforms, DH frame, qubit model.

use dhlab_core::qubit::{self, QubitOrder};
use dhlab_core::{
    build_entangled_transform, build_state, build_unentangled_transform, direction_grid, evolve, spin_correlation,
    spin_expectation, vacuum_state, OccupationDescriptor, Order, Region, SpinDirection, SpinFrame, SystemConfig,
};

const REGIONS: [Region; 3] = [Region::R1, Region::R2, Region::R3];

#[test]
fn both_transforms_send_their_states_to_the_vacuum() {
    let cfg = SystemConfig::standard().unwrap().with_kappa(0.1).unwrap();
    let vac = vacuum_state(cfg.registry());
    let psi = build_state(&cfg, &OccupationDescriptor::unentangled()).unwrap();
    let un = build_unentangled_transform(&cfg, [1, 1, -1]).unwrap();
    assert!(un.v().apply(&psi).unwrap().distance(&vac).unwrap() < 1e-10);

    let en = build_entangled_transform(&cfg, &un).unwrap();
    let psi_en = evolve(&cfg, &psi, Order::Exact).unwrap().state;
    assert!(en.v().apply(&psi_en).unwrap().distance(&vac).unwrap() < 1e-10);
}

#[test]
fn dh_frame_reproduces_fock_and_qubit_values() {
    let k = 0.1;
    let cfg = SystemConfig::standard().unwrap().with_kappa(k).unwrap();
    let psi = build_state(&cfg, &OccupationDescriptor::unentangled()).unwrap();
    let psi_en = evolve(&cfg, &psi, Order::Exact).unwrap().state;
    let en = build_entangled_transform(&cfg, &build_unentangled_transform(&cfg, [1, -1, 1]).unwrap()).unwrap();
    let frame = SpinFrame::conjugated(&cfg, &en).unwrap();
    let q = qubit::evolve_qubits(&qubit::unentangled(), k, QubitOrder::Exact).unwrap();

    let mut dirs = direction_grid(3, 4);
    dirs.push(SpinDirection::x1());
    for d in &dirs {
        for (i, &r) in REGIONS.iter().enumerate() {
            let usual = spin_expectation(&cfg, &psi_en, r, d).unwrap();
            assert!((frame.expectation(r, d).unwrap() - usual).abs() < 1e-10);
            assert!((qubit::pauli_expectation(&q, i + 1, d).unwrap() - usual).abs() < 1e-10);
        }
        let e = SpinDirection::new(1.1, 0.4).unwrap();
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let usual = spin_correlation(&cfg, &psi_en, REGIONS[i], d, REGIONS[j], &e).unwrap();
            assert!((frame.correlation(REGIONS[i], d, REGIONS[j], &e).unwrap() - usual).abs() < 1e-10);
            let qv = qubit::pauli_correlation(&q, i + 1, d, j + 1, &e).unwrap();
            assert!((qv - usual).abs() < 1e-10, "({i},{j}) {qv} vs {usual}");
        }
    }
}
