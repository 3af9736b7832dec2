use modexp_core::builders::{build_adder, build_qrom_lookup, build_unary, build_unlookup, AdderMode};
use modexp_core::circuit_ir::*;
use modexp_core::numerics::{LookupTable, TableKind};
use num_bigint::BigUint;
use proptest::prelude::*;
use std::collections::HashSet;

fn q(i: u32) -> Qubit {
    Qubit(i)
}

fn circuit(gates: Vec<Gate>) -> Circuit {
    let mut c = Circuit::new();
    for g in gates {
        c.push(g).unwrap();
    }
    c
}

fn tof(a: u32, b: u32, t: u32) -> Gate {
    Gate::Toffoli {
        c1: q(a),
        c2: q(b),
        target: q(t),
    }
}

#[test]
fn toffoli_on_ones() {
    let mut s = SparseState::basis(0b011, 0);
    s.apply(&tof(0, 1, 2)).unwrap();
    assert_eq!(s.branches(), &[(0b111, 1)]);
}

#[test]
fn cswap_without_control() {
    let mut s = SparseState::basis(0b010, 0);
    s.apply(&Gate::CSwap {
        control: q(0),
        a: q(1),
        b: q(2),
    })
    .unwrap();
    assert_eq!(s.branches(), &[(0b010, 1)]);
}

#[test]
fn measure_zero_register_keeps_phases() {
    for s_val in 0..4u128 {
        let mut s = SparseState::from_branches(vec![(0b000, 1), (0b001, -1)], 3);
        s.measure_x_with(&[q(1), q(2)], 0, s_val).unwrap();
        assert_eq!(s.canonical(), vec![(0b000, 1), (0b001, -1)]);
    }
}

#[test]
fn measure_single_branch() {
    let mut a = SparseState::basis(0b110, 9);
    let before = SparseState::basis(0b000, 9);
    a.measure_x(&[q(1), q(2)], 0).unwrap();
    assert!(a.equal_up_to_global_phase(&before));
}

/// Dense oracle: branches `|0,00> + |1,11>` on (rest, r0, r1), Hadamard on
/// both register qubits, project onto `s`, report the relative sign of the
/// rest=1 branch.
fn dense_relative_sign(s: usize) -> f64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amp = [0.0f64; 8];
    amp[0b000] = 1.0;
    amp[0b111] = 1.0;
    for bit in [1usize, 2] {
        let mut next = [0.0f64; 8];
        for (k, &v) in amp.iter().enumerate() {
            let flipped = k ^ (1 << bit);
            let sign = if k & (1 << bit) != 0 { -1.0 } else { 1.0 };
            next[k] += sign * h * v;
            next[flipped] += h * v;
        }
        amp = next;
    }
    let reg = s << 1;
    amp[reg | 1] / amp[reg]
}

#[test]
fn measure_two_branch_matches_dense_oracle() {
    for s_val in 0..4u128 {
        let mut s = SparseState::from_branches(vec![(0b000, 1), (0b111, 1)], 0);
        s.measure_x_with(&[q(1), q(2)], 0, s_val).unwrap();
        let c = s.canonical();
        let rel = (c[1].1 * c[0].1) as f64;
        assert_eq!(rel, dense_relative_sign(s_val as usize), "s={s_val:02b}");
    }
}

#[test]
fn empty_and_disjoint_tallies() {
    let t = Circuit::new().tally();
    assert_eq!(
        (t.toffoli_count, t.toffoli_depth, t.qubit_highwater, t.measurement_depth),
        (0, 0, 0, 0)
    );
    let c = circuit((0..5).map(|k| tof(3 * k, 3 * k + 1, 3 * k + 2)).collect());
    let t = c.tally();
    assert_eq!((t.toffoli_count, t.toffoli_depth), (5, 1));
}

#[test]
fn chained_toffolis_serialize() {
    let c = circuit((0..6).map(|k| tof(0, k + 1, k + 2)).collect());
    let t = c.tally();
    assert_eq!((t.toffoli_count, t.toffoli_depth), (6, 6));
    // Staircase: a gate waits only for its own operands.
    let c = circuit(vec![tof(0, 1, 2), tof(3, 4, 5), tof(2, 5, 6), tof(7, 8, 9)]);
    assert_eq!(c.tally().toffoli_depth, 2);
}

#[test]
fn temp_and_uncompute_is_free() {
    let c = circuit(vec![
        Gate::Alloc(vec![q(2)]),
        Gate::TempAndCompute {
            c1: q(0),
            c2: q(1),
            target: q(2),
        },
        Gate::TempAndUncompute {
            c1: q(0),
            c2: q(1),
            target: q(2),
        },
        Gate::Free(vec![q(2)]),
    ]);
    assert_eq!(c.tally().toffoli_count, 1);
    for v in 0..4u128 {
        let mut s = SparseState::basis(v, 0);
        s.run(&c).unwrap();
        assert_eq!(s.branches(), &[(v, 1)]);
    }
}

#[test]
fn dirty_free_is_rejected() {
    let c = circuit(vec![Gate::Alloc(vec![q(1)]), Gate::X(q(1)), Gate::Free(vec![q(1)])]);
    let mut s = SparseState::basis(0, 0);
    assert!(s.run(&c).is_err());
}

#[test]
fn dump_round_trips_builder_output() {
    let table = LookupTable::new(
        TableKind::Multiply,
        3,
        3,
        (0..8u32).map(|v| BigUint::from((v * 5) % 8)).collect(),
    )
    .unwrap();
    let addr: Vec<Qubit> = (0..3).map(q).collect();
    let dest: Vec<Qubit> = (3..6).map(q).collect();
    let mut c = build_qrom_lookup(&addr, &table, &dest).unwrap();
    c.append(build_unlookup(&addr, &table, &dest, true).unwrap());
    c.append(build_adder(&dest, &addr, &AdderMode::ExactModular(BigUint::from(7u32)), true).unwrap());
    let parsed = Circuit::parse_dump(&c.dump()).unwrap();
    assert_eq!(parsed.gates, c.gates);
    assert_eq!(parsed.dump(), c.dump());
}

#[test]
fn parse_rejects_garbage() {
    assert!(Circuit::parse_dump("Toffoli 1 2").is_err());
    assert!(Circuit::parse_dump("Frobnicate 1").is_err());
    assert!(Circuit::parse_dump("Cnot 3 3").is_err());
}

/// Reversible builder circuits act as permutations on basis states.
#[test]
fn builders_permute_basis_states() {
    let addr: Vec<Qubit> = (0..3).map(q).collect();
    let out: Vec<Qubit> = (3..11).map(q).collect();
    let unary = build_unary(&addr, &out).unwrap();
    let table = LookupTable::new(
        TableKind::Multiply,
        2,
        3,
        [3u32, 6, 1, 4].iter().map(|&v| BigUint::from(v)).collect(),
    )
    .unwrap();
    let lookup = build_qrom_lookup(&[q(0), q(1)], &table, &[q(2), q(3), q(4)]).unwrap();
    let adder = build_adder(&[q(0), q(1), q(2)], &[q(3), q(4), q(5)], &AdderMode::Coset, false).unwrap();
    for (c, bits) in [(&unary, 11u32), (&lookup, 5), (&adder, 6)] {
        let mut seen = HashSet::new();
        for v in 0..(1u128 << bits) {
            let mut s = SparseState::basis(v, 0);
            s.run_reversible(c).unwrap();
            assert_eq!(s.branches().len(), 1);
            assert!(seen.insert(s.branches()[0].0));
        }
        assert_eq!(seen.len(), 1 << bits);
    }
}

fn gate_strategy() -> impl Strategy<Value = Gate> {
    let three = prop::sample::subsequence((0u32..6).collect::<Vec<_>>(), 3).prop_shuffle();
    prop_oneof![
        (0u32..6).prop_map(|a| Gate::X(q(a))),
        three.clone().prop_map(|v| Gate::Cnot {
            control: q(v[0]),
            target: q(v[1])
        }),
        three.clone().prop_map(|v| tof(v[0], v[1], v[2])),
        three.clone().prop_map(|v| Gate::CSwap {
            control: q(v[0]),
            a: q(v[1]),
            b: q(v[2])
        }),
        three.prop_map(|v| Gate::ClassicalPhaseZ {
            qubits: vec![q(v[0]), q(v[1])],
            cond: None
        }),
    ]
}

proptest! {
    #[test]
    fn circuit_then_inverse_is_identity(
        gates in prop::collection::vec(gate_strategy(), 0..40),
        keys in prop::collection::hash_set(0u128..64, 1..12),
        seed in any::<u64>(),
    ) {
        let c = circuit(gates);
        let branches: Vec<(u128, i8)> = keys.iter().enumerate()
            .map(|(i, &k)| (k, if i % 3 == 0 { -1 } else { 1 }))
            .collect();
        let start = SparseState::from_branches(branches, seed);
        let mut s = start.clone();
        s.run_reversible(&c).unwrap();
        s.run_reversible(&c.inverse().unwrap()).unwrap();
        prop_assert_eq!(s.canonical(), start.canonical());
    }

    #[test]
    fn gate_dump_round_trip(g in gate_strategy()) {
        let text = g.to_string();
        prop_assert_eq!(text.parse::<Gate>().unwrap(), g);
    }

    #[test]
    fn depth_never_exceeds_count(gates in prop::collection::vec(gate_strategy(), 0..60)) {
        let t = circuit(gates).tally();
        prop_assert!(t.toffoli_depth <= t.toffoli_count);
    }
}
