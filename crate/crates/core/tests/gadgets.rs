use dynmit::builders::{
    dynamic_entangler, fold_circuit, hea_circuit, inverse_entangler, rzz_gadget, static_ladder,
    trotter_circuit, AnsatzSpec, BuildTarget, EntanglerKind, FoldSpec, GadgetKind, TrotterSpec,
};
use dynmit::circuit::{schedule, DurationTable, Gate, GateKind, Instruction};
use dynmit::hamiltonian::{
    exact_evolve, heisenberg, tfim, to_dense, Model, Pauli, PauliString, PauliSum,
};
use dynmit::sim::{
    channel_on_data, circuit_unitary, enumerate_branches, gate_only_state, run_shots,
    statevector_expectation, StateVector,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `cos(θ/2)·I − i·sin(θ/2)·P⊗P` from the dense Pauli matrix.
fn pp_rotation(theta: f64, p: Pauli) -> DMatrix<C> {
    let pp = PauliSum::new(2, vec![(1.0, PauliString::with(2, &[(0, p), (1, p)]))]).unwrap();
    let m = to_dense(&pp);
    let id = DMatrix::<C>::identity(4, 4);
    id * C::new((theta / 2.0).cos(), 0.0) - m * C::new(0.0, (theta / 2.0).sin())
}

#[test]
fn entanglers_match_the_ladder() {
    for n in 2..=4 {
        let ladder = circuit_unitary(&static_ladder(n).unwrap()).unwrap();
        let fwd = channel_on_data(&dynamic_entangler(n).unwrap()).unwrap();
        assert!(fwd.is_cptp(1e-8));
        let d = fwd.distance_to_unitary(&ladder);
        assert!(d <= 1e-9, "entangler n = {n}: {d}");
        let inv = channel_on_data(&inverse_entangler(n).unwrap()).unwrap();
        let d = inv.distance_to_unitary(&ladder.adjoint());
        assert!(d <= 1e-9, "inverse entangler n = {n}: {d}");
        // the inverse is not accidentally the forward ladder
        assert!(inv.distance_to_unitary(&ladder) > 0.1 || n == 2);
    }
}

#[test]
fn gadgets_match_pauli_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for basis in [Pauli::Z, Pauli::X, Pauli::Y] {
        let mut thetas = vec![0.0, std::f64::consts::FRAC_PI_2];
        thetas.extend((0..10).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)));
        for theta in thetas {
            let ch = channel_on_data(&rzz_gadget(theta, basis).unwrap()).unwrap();
            let d = ch.distance_to_unitary(&pp_rotation(theta, basis));
            assert!(d <= 1e-9, "{basis:?} θ = {theta}: {d}");
        }
    }
}

#[test]
fn rzz_quarter_turn_is_diagonal() {
    let e = |s: f64| C::new(0.0, s * std::f64::consts::FRAC_PI_4).exp();
    let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        e(-1.0),
        e(1.0),
        e(1.0),
        e(-1.0),
    ]));
    let ch = channel_on_data(&rzz_gadget(std::f64::consts::FRAC_PI_2, Pauli::Z).unwrap()).unwrap();
    assert!(ch.distance_to_unitary(&want) <= 1e-9);
}

#[test]
fn entangler_on_plus_zero_gives_bell_state_in_every_branch() {
    let mut c = dynmit::circuit::DynamicCircuit::new(3, vec![0, 2]);
    c.gate(Gate::single(GateKind::H, 0));
    c.append(&dynamic_entangler(2).unwrap()).unwrap();
    let branches = enumerate_branches(&c).unwrap();
    assert_eq!(branches.len(), 2);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for b in branches {
        assert!((b.probability - 0.5).abs() < 1e-12);
        let a = b.state.amplitudes();
        // data on qubits 0 and 2, ancilla 1 reset to |0⟩
        assert!((a[0b000] - C::new(h, 0.0)).norm() < 1e-12);
        assert!((a[0b101] - C::new(h, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn ghz_via_dynamic_entangler() {
    let ent = dynamic_entangler(3).unwrap();
    let mut c = dynmit::circuit::DynamicCircuit::new(5, vec![0, 2, 4]);
    c.gate(Gate::single(GateKind::H, 0));
    c.append(&ent).unwrap();
    c.measure_data();
    let s = schedule(&c, &DurationTable::default()).unwrap();
    let hist = run_shots(&c, &s, None, 2000, 5).unwrap();
    assert_eq!(hist.len(), 2);
    assert!(hist.get("000") > 800 && hist.get("111") > 800);
}

#[test]
fn inverse_entangler_fixes_zero_in_every_branch() {
    for b in enumerate_branches(&inverse_entangler(3).unwrap()).unwrap() {
        assert!((b.state.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }
}

fn random_params(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..AnsatzSpec::num_params(n, 2))
        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

#[test]
fn dynamic_and_static_hea_agree() {
    let h = tfim(3, 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let params = random_params(&mut rng, 3);
        let stat = AnsatzSpec {
            n: 3,
            layers: 2,
            params: params.clone(),
            entangler: EntanglerKind::StaticLadder,
        };
        let dynm = AnsatzSpec {
            entangler: EntanglerKind::Dynamic,
            ..stat.clone()
        };
        let es = statevector_expectation(&hea_circuit(&stat).unwrap(), &h).unwrap();
        let ed = statevector_expectation(&hea_circuit(&dynm).unwrap(), &h).unwrap();
        assert!((es - ed).abs() < 1e-9, "{es} vs {ed}");
    }
}

#[test]
fn zero_parameters_give_zero_state() {
    let c = hea_circuit(&AnsatzSpec::zeros(4, 2, EntanglerKind::StaticLadder)).unwrap();
    let s = gate_only_state(&c).unwrap();
    assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
}

#[test]
fn folded_hea_energy_is_unchanged() {
    let h = tfim(3, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for entangler in [EntanglerKind::Dynamic, EntanglerKind::StaticLadder] {
        let spec = AnsatzSpec {
            n: 3,
            layers: 2,
            params: random_params(&mut rng, 3),
            entangler,
        };
        let target = BuildTarget::Hea(spec);
        let e0 = statevector_expectation(&fold_circuit(&target, FoldSpec { k: 0 }).unwrap(), &h)
            .unwrap();
        for k in 1..=2 {
            let folded = fold_circuit(&target, FoldSpec { k }).unwrap();
            let ek = statevector_expectation(&folded, &h).unwrap();
            assert!(
                (ek - e0).abs() < 1e-9,
                "{entangler:?} k = {k}: {ek} vs {e0}"
            );
        }
    }
}

fn trotter(model: Model, n: usize, h: f64, steps: usize, gadget: GadgetKind) -> TrotterSpec {
    TrotterSpec {
        model,
        n,
        h,
        t: 0.25,
        steps,
        gadget,
    }
}

#[test]
fn static_trotter_tracks_exact_evolution() {
    let h = tfim(3, 0.5).unwrap();
    let exact = exact_evolve(&h, 0.25, &StateVector::zero(3)).unwrap();
    let infidelity = |steps| {
        let c = trotter_circuit(&trotter(Model::Tfim, 3, 0.5, steps, GadgetKind::Static)).unwrap();
        1.0 - gate_only_state(&c).unwrap().fidelity(&exact)
    };
    let (i5, i10) = (infidelity(5), infidelity(10));
    assert!(i5 <= 1e-3, "infidelity {i5}");
    assert!(i10 < i5);
}

#[test]
fn dynamic_and_static_trotter_agree() {
    for (model, hm) in [
        (Model::Tfim, tfim(3, 0.5).unwrap()),
        (Model::Heisenberg, heisenberg(3, 0.5).unwrap()),
    ] {
        let es = statevector_expectation(
            &trotter_circuit(&trotter(model, 3, 0.5, 5, GadgetKind::Static)).unwrap(),
            &hm,
        )
        .unwrap();
        let ed = statevector_expectation(
            &trotter_circuit(&trotter(model, 3, 0.5, 5, GadgetKind::Dynamic)).unwrap(),
            &hm,
        )
        .unwrap();
        assert!((es - ed).abs() < 1e-9, "{model}: {es} vs {ed}");
    }
}

#[test]
fn dynamic_trotter_channel_matches_static_unitary() {
    for model in [Model::Tfim, Model::Heisenberg] {
        let stat = trotter_circuit(&trotter(model, 3, 0.8, 2, GadgetKind::Static)).unwrap();
        let dynm = trotter_circuit(&trotter(model, 3, 0.8, 2, GadgetKind::Dynamic)).unwrap();
        let d = channel_on_data(&dynm)
            .unwrap()
            .distance_to_unitary(&circuit_unitary(&stat).unwrap());
        assert!(d <= 1e-9, "{model}: {d}");
        let folded = fold_circuit(
            &BuildTarget::Trotter(trotter(model, 3, 0.8, 2, GadgetKind::Dynamic)),
            FoldSpec { k: 1 },
        )
        .unwrap();
        let d = channel_on_data(&folded)
            .unwrap()
            .distance_to_unitary(&circuit_unitary(&stat).unwrap());
        assert!(d <= 1e-9, "{model} folded: {d}");
    }
}

#[test]
fn diagonal_trotter_keeps_zero_state() {
    let c = trotter_circuit(&trotter(Model::Tfim, 4, 0.0, 3, GadgetKind::Static)).unwrap();
    let s = gate_only_state(&c).unwrap();
    assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
}

#[test]
fn fresh_bits_per_fold_segment() {
    let target = BuildTarget::Hea(AnsatzSpec::zeros(3, 2, EntanglerKind::Dynamic));
    let c = fold_circuit(&target, FoldSpec { k: 2 }).unwrap();
    let mut written = std::collections::HashSet::new();
    for ins in c.instructions() {
        if let Instruction::Measure { clbit, .. } = ins {
            assert!(written.insert(*clbit), "bit {clbit} written twice");
        }
    }
}
