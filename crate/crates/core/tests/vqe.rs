use dynmit::hamiltonian::Model;
use dynmit::vqe::{optimize_params, TrainingOptions};

#[test]
fn two_spin_ising_without_field() {
    let r = optimize_params(Model::Tfim, 2, 0.0, 2, 5, &TrainingOptions::default()).unwrap();
    assert!((r.e_ideal + 1.0).abs() < 1e-6, "{}", r.e_ideal);
    assert_eq!(r.layers, 2);
    assert_eq!(r.params.len(), 12);
}

#[test]
fn two_spin_ising_reaches_the_ground_state() {
    let r = optimize_params(Model::Tfim, 2, 1.0, 2, 5, &TrainingOptions::default()).unwrap();
    assert!((r.e_ideal + 5f64.sqrt()).abs() < 1e-3, "{}", r.e_ideal);
    assert!(r.e_ideal >= -5f64.sqrt() - 1e-9);
}

#[test]
fn training_is_deterministic() {
    let opts = TrainingOptions {
        restarts: 3,
        max_evals: 300,
        ..Default::default()
    };
    let a = optimize_params(Model::Heisenberg, 3, 0.5, 1, 9, &opts).unwrap();
    let b = optimize_params(Model::Heisenberg, 3, 0.5, 1, 9, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a
        .trace
        .iter()
        .all(|t| t.evaluation <= 3 * 300 + 3 * a.params.len()));
}

#[test]
fn trained_energy_is_a_variational_bound() {
    use dynmit::builders::{hea_circuit, EntanglerKind};
    use dynmit::hamiltonian::exact_ground_energy;
    use dynmit::sim::statevector_expectation;

    let opts = TrainingOptions {
        restarts: 2,
        max_evals: 600,
        ..Default::default()
    };
    let h = Model::Tfim.hamiltonian(3, 0.5).unwrap();
    let r = optimize_params(Model::Tfim, 3, 0.5, 2, 1, &opts).unwrap();
    assert!(r.e_ideal >= exact_ground_energy(&h).unwrap() - 1e-9);
    for kind in [EntanglerKind::StaticLadder, EntanglerKind::Dynamic] {
        let e = statevector_expectation(&hea_circuit(&r.ansatz(3, kind)).unwrap(), &h).unwrap();
        assert!((e - r.e_ideal).abs() < 1e-9);
    }
}
