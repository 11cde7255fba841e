use dynmit::circuit::{
    invert_gate_segment, schedule, DurationTable, DynamicCircuit, Gate, GateKind, Instruction,
};
use dynmit::mitigation::{
    improvement_percent, insert_dd, zne_extrapolate, DDPolicy, ZNEConfig, ZnePoint,
};
use dynmit::noise::NoiseModel;
use dynmit::sim::{circuit_unitary, dm_evolve};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use proptest::prelude::*;

const N: usize = 3;

#[derive(Debug, Clone)]
enum Op {
    One(GateKind, usize, f64),
    Two(GateKind, usize, usize),
    Measure(usize),
    /// X on the qubit, conditioned on the latest recorded bit.
    Cond(usize),
    Reset(usize),
    Barrier,
}

fn gate_op() -> impl Strategy<Value = Op> {
    let one = prop::sample::select(vec![
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::Sdg,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
    ]);
    prop_oneof![
        (one, 0..N, -3.0..3.0f64).prop_map(|(k, q, a)| Op::One(k, q, a)),
        (
            prop::sample::select(vec![GateKind::Cnot, GateKind::Cz]),
            0..N,
            1..N
        )
            .prop_map(|(k, a, d)| Op::Two(k, a, (a + d) % N)),
    ]
}

fn any_op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => gate_op(),
        1 => (0..N).prop_map(Op::Measure),
        1 => (0..N).prop_map(Op::Cond),
        1 => (0..N).prop_map(Op::Reset),
        1 => Just(Op::Barrier),
    ]
}

fn build(ops: &[Op]) -> DynamicCircuit {
    let mut c = DynamicCircuit::all_data(N);
    let mut last_bit = None;
    for op in ops {
        match *op {
            Op::One(k, q, a) => {
                let g = if k.num_params() == 1 {
                    Gate::new(k, vec![a], vec![q])
                } else {
                    Gate::single(k, q)
                };
                c.gate(g);
            }
            Op::Two(k, a, b) => {
                c.gate(Gate::new(k, vec![], vec![a, b]));
            }
            Op::Measure(q) => last_bit = Some(c.measure(q)),
            Op::Cond(q) => {
                if let Some(b) = last_bit {
                    c.conditional(Gate::single(GateKind::X, q), vec![b]);
                }
            }
            Op::Reset(q) => {
                c.reset(q);
            }
            Op::Barrier => {
                c.barrier_all();
            }
        }
    }
    c
}

fn identity_distance(u: &DMatrix<C>) -> f64 {
    // up to a global phase
    let phase = u[(0, 0)] / u[(0, 0)].norm();
    (u - DMatrix::<C>::identity(u.nrows(), u.ncols()) * phase).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedules_satisfy_their_invariants(ops in prop::collection::vec(any_op(), 0..30)) {
        let c = build(&ops);
        let d = DurationTable::default();
        let s = schedule(&c, &d).unwrap();
        s.verify(&c, &d).unwrap();
        let latest = s.timed().iter().map(|t| t.end).fold(0.0, f64::max);
        prop_assert!((s.makespan() - latest).abs() < 1e-9);
        prop_assert!(s.timed().iter().all(|t| t.start >= 0.0 && t.end >= t.start));
        for w in s.all_idle_windows() {
            prop_assert!(w.end > w.start);
            prop_assert_eq!(w.too_short_for_dd, w.len() < d.dd_threshold_ns());
        }
    }

    #[test]
    fn inverted_segment_undoes_it(ops in prop::collection::vec(gate_op(), 1..20)) {
        let c = build(&ops);
        let mut round = c.clone();
        round.extend(invert_gate_segment(c.instructions()).unwrap());
        prop_assert!(identity_distance(&circuit_unitary(&round).unwrap()) < 1e-9);
    }

    #[test]
    fn dd_leaves_the_noiseless_output_unchanged(ops in prop::collection::vec(any_op(), 1..16)) {
        let mut c = build(&ops);
        c.measure_data();
        let d = DurationTable::default();
        let s = schedule(&c, &d).unwrap();
        let out = insert_dd(&c, &s, &DDPolicy::default(), &d).unwrap();
        let s2 = schedule(&out.circuit, &d).unwrap();
        prop_assert!((s2.makespan() - s.makespan()).abs() < 1e-6);
        let a = dm_evolve(&c, &s, None).unwrap();
        let b = dm_evolve(&out.circuit, &s2, None).unwrap();
        for (k, p) in a.readout_distribution() {
            let q = b.readout_distribution().get(k).copied().unwrap_or(0.0);
            prop_assert!((p - q).abs() < 1e-9, "{k}: {p} vs {q}");
        }
    }

    #[test]
    fn noisy_density_matrix_stays_a_state(ops in prop::collection::vec(any_op(), 1..16)) {
        let mut c = build(&ops);
        c.measure_data();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let noise = NoiseModel { p1q: 0.01, p2q: 0.05, ..Default::default() };
        let r = dm_evolve(&c, &s, Some(&noise)).unwrap();
        prop_assert!((r.trace() - 1.0).abs() < 1e-9);
        let total: f64 = r.readout_distribution().values().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(r.readout_distribution().values().all(|&p| p >= -1e-12));
        let m = r.matrix();
        prop_assert!((&m - m.adjoint()).norm() < 1e-9);
    }

    #[test]
    fn improvement_is_affine_invariant(
        ideal in -10.0..10.0f64,
        base_gap in 0.01..5.0f64,
        ratio in -2.0..2.0f64,
        scale in 0.1..10.0f64,
        shift in -50.0..50.0f64,
    ) {
        let base = ideal + base_gap;
        let mitigated = ideal + ratio * base_gap;
        let a = improvement_percent(ideal, base, mitigated).unwrap().unwrap();
        let t = |e: f64| scale * e + shift;
        let b = improvement_percent(t(ideal), t(base), t(mitigated)).unwrap().unwrap();
        prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        prop_assert!((a - 100.0 * (1.0 - ratio.abs())).abs() < 1e-8);
    }

    #[test]
    fn linear_fit_recovers_the_intercept(a in -20.0..20.0f64, b in -5.0..5.0f64) {
        let points: Vec<ZnePoint> = [1.0, 3.0, 5.0]
            .iter()
            .map(|&lambda| ZnePoint { lambda, energy: a + b * lambda, stderr: None })
            .collect();
        let fit = zne_extrapolate(&points, &ZNEConfig::default()).unwrap();
        prop_assert!((fit.e0 - a).abs() <= 1e-12 * a.abs().max(1.0) * 10.0, "{} vs {a}", fit.e0);
    }
}

#[test]
fn scaled_noise_is_linear_in_the_rates() {
    let m = NoiseModel::default();
    assert_eq!(m.scaled(1.0), m);
    let double = m.scaled(2.0);
    assert_eq!(double.p2q, 2.0 * m.p2q);
    assert_eq!(double.idle_detuning, 2.0 * m.idle_detuning);
    assert_eq!(double.t1_ns, m.t1_ns.map(|t| t / 2.0));
    assert_eq!(m.scaled(1e9).p1q, 1.0);
    assert!(NoiseModel {
        p1q: 1.5,
        ..m.clone()
    }
    .validate()
    .is_err());
}

#[test]
fn no_noise_and_ideal_noise_agree() {
    let mut c = build(&[
        Op::One(GateKind::H, 0, 0.0),
        Op::Two(GateKind::Cnot, 0, 1),
        Op::Measure(1),
        Op::Cond(2),
        Op::One(GateKind::Ry, 2, 0.7),
    ]);
    c.measure_data();
    let s = schedule(&c, &DurationTable::default()).unwrap();
    let a = dm_evolve(&c, &s, None).unwrap();
    let b = dm_evolve(&c, &s, Some(&NoiseModel::ideal())).unwrap();
    assert_eq!(
        a.readout_distribution().len(),
        b.readout_distribution().len()
    );
    for (k, p) in a.readout_distribution() {
        assert!((p - b.readout_distribution()[k]).abs() < 1e-12);
    }
    assert!(c
        .instructions()
        .iter()
        .any(|i| matches!(i, Instruction::Conditional { .. })));
}
