use modexp_core::numerics::*;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn naive_pow(b: u64, e: u64, n: u64) -> u64 {
    let mut acc = 1 % n;
    for _ in 0..e {
        acc = acc * b % n;
    }
    acc
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn mod_pow_examples() {
    assert_eq!(mod_pow(&big(7), &big(0), &big(15)), big(1));
    assert_eq!(mod_pow(&big(7), &big(10), &big(15)), big(naive_pow(7, 10, 15)));
    for k in 0..20 {
        assert_eq!(mod_pow(&big(1), &big(k), &big(97)), big(1));
    }
}

#[test]
fn mod_inverse_examples() {
    let x = mod_inverse(&big(7), &big(15)).unwrap();
    let oracle = (1..15u64).find(|x| 7 * x % 15 == 1).unwrap();
    assert_eq!(x, big(oracle));
    assert_eq!(mod_inverse(&big(1), &big(21)).unwrap(), big(1));
    assert!(matches!(
        mod_inverse(&big(5), &big(15)),
        Err(NumericsError::NotInvertible { .. })
    ));
}

#[test]
fn mul_table_examples() {
    let inst = ProblemInstance::small(15, 7, 4).unwrap();
    let wp = WindowParams::new(2, 2).unwrap();
    let t = build_mul_table(&inst, wp, 0, 0, &big(7)).unwrap();
    assert_eq!(t.len(), 16);
    // address = mult ‖ expn, expn low
    assert_eq!(t.get((1 << 2) | 1), &big(7));
    for expn in 0..4 {
        assert!(t.get(expn).is_zero());
    }
    let t1 = build_mul_table(&inst, wp, 1, 1, &big(7)).unwrap();
    for mult in 0..4u64 {
        assert_eq!(t1.get((mult as usize) << 2), &big(mult * 4 % 15));
    }
}

#[test]
fn pruned_table_examples() {
    let inst = ProblemInstance::small(21, 5, 4).unwrap();
    let wp = WindowParams::new(2, 3).unwrap();
    let p = build_pruned_table(&inst, wp, 1, 1, &big(5)).unwrap();
    // n = 5, so window 1 holds two bits. The copy equals the entry only while
    // `mult·2^{j·w_m}` needs no reduction.
    assert_eq!(p.len(), 16);
    for mult in 0..4usize {
        assert_eq!(p.get(mult << 2).is_zero(), mult * 8 < 21, "mult={mult}");
    }
    let p0 = build_pruned_table(&inst, WindowParams::new(2, 2).unwrap(), 0, 0, &big(5)).unwrap();
    for mult in 0..4usize {
        assert!(p0.get(mult << 2).is_zero());
    }
    for expn in 0..4usize {
        assert!(p.get(expn).is_zero(), "mult=0 column");
    }
}

#[test]
fn phase_fixup_examples() {
    let inst = ProblemInstance::small(15, 7, 4).unwrap();
    let wp = WindowParams::new(2, 2).unwrap();
    let t = build_mul_table(&inst, wp, 0, 0, &big(7)).unwrap();
    let f = build_phase_fixup_table(&t, &BigUint::zero(), 2).unwrap();
    assert!(f.is_zero());
    assert_eq!(f.len(), 4);
    let zero = LookupTable::new(TableKind::Multiply, 3, 4, vec![BigUint::zero(); 8]).unwrap();
    let f = build_phase_fixup_table(&zero, &big(0b1011), 1).unwrap();
    assert!(f.is_zero());
    assert_eq!(f.len(), 4);
}

#[test]
fn direct_exp_examples() {
    let inst = ProblemInstance::small(55, 13, 6).unwrap();
    let t = build_direct_exp_table(&inst, 5).unwrap();
    assert_eq!(t.get(0), &big(1));
    assert_eq!(t.get(1), &big(13));
    for e in 0..32u64 {
        assert_eq!(t.get(e as usize), &mod_pow(&big(13), &big(e), &big(55)));
    }
    assert!(build_direct_exp_table(&inst, 7).is_err());
}

#[test]
fn table_text_round_trip() {
    let zero = LookupTable::new(TableKind::PhaseFixup, 2, 5, vec![BigUint::zero(); 4]).unwrap();
    assert_eq!(LookupTable::from_text(&zero.to_text()).unwrap(), zero);
    let inst = ProblemInstance::small(63, 5, 6).unwrap();
    let t = build_mul_table(&inst, WindowParams::new(3, 2).unwrap(), 1, 2, &big(5)).unwrap();
    let text = format!("# header comment\n{}", t.to_text());
    assert_eq!(LookupTable::from_text(&text).unwrap(), t);
    assert!(LookupTable::from_text("table multiply 1 2\n7\n0\n").is_err());
    assert!(LookupTable::from_text("table nonsense 1 2\n0\n0\n").is_err());
}

#[test]
fn partial_windows() {
    assert_eq!(window_widths(7, 3), vec![3, 3, 1]);
    assert_eq!(window_widths(6, 3), vec![3, 3]);
    let inst = ProblemInstance::small(55, 7, 5).unwrap();
    // n = 6, w_m = 4: window 1 holds the top 2 bits.
    let t = build_mul_table(&inst, WindowParams::new(2, 4).unwrap(), 2, 1, &big(7)).unwrap();
    assert_eq!(t.addr_bits, 1 + 2);
}

fn instance() -> impl Strategy<Value = (u64, u64)> {
    (1u64..32)
        .prop_map(|k| 2 * k + 1)
        .prop_flat_map(|n| (Just(n), 2..n).prop_filter("coprime", |(n, b)| gcd(*n, *b) == 1))
}

proptest! {
    #[test]
    fn pow_matches_repeated_product(b in 0u64..200, e in 0u64..64, n in 2u64..500) {
        prop_assert_eq!(mod_pow(&big(b), &big(e), &big(n)), big(naive_pow(b, e, n)));
    }

    #[test]
    fn inverse_is_inverse(b in 1u64..1000, n in 2u64..1000) {
        match mod_inverse(&big(b), &big(n)) {
            Ok(x) => prop_assert_eq!(x * big(b) % big(n), BigUint::one() % big(n)),
            Err(_) => prop_assert!(gcd(b, n) != 1),
        }
    }

    #[test]
    fn pruned_xor_copy_is_plain(
        (n, b) in instance(), we in 1u32..4, wm in 1u32..4, i in 0u32..2, j in 0u32..2,
    ) {
        let inst = ProblemInstance::small(n, b, 6).unwrap();
        let wp = WindowParams::new(we, wm).unwrap();
        prop_assume!(j * wm < inst.n() && i * we < 6);
        let base = big(b);
        let plain = build_mul_table(&inst, wp, i, j, &base).unwrap();
        let pruned = build_pruned_table(&inst, wp, i, j, &base).unwrap();
        let e_bits = we.min(6 - i * we);
        for a in 0..plain.len() {
            let mult = (a >> e_bits) as u64;
            let copy = big(mult) << (j * wm);
            prop_assert_eq!(pruned.get(a) ^ &copy, plain.get(a).clone());
        }
    }

    #[test]
    fn mul_table_matches_formula(
        (n, b) in instance(), we in 1u32..4, wm in 1u32..4, i in 0u32..2, j in 0u32..2,
    ) {
        let inst = ProblemInstance::small(n, b, 6).unwrap();
        prop_assume!(j * wm < inst.n() && i * we < 6);
        let t = build_mul_table(&inst, WindowParams::new(we, wm).unwrap(), i, j, &big(b)).unwrap();
        let e_bits = we.min(6 - i * we);
        for a in 0..t.len() {
            let (mult, expn) = ((a >> e_bits) as u64, (a & ((1 << e_bits) - 1)) as u64);
            let f = naive_pow(b, expn << (i * we), n) * ((mult << (j * wm)) % n) % n;
            prop_assert_eq!(t.get(a), &big(f));
        }
    }

    #[test]
    fn fixup_matches_phase_enumeration(
        entries in prop::collection::vec(0u64..16, 4), s in 0u64..16, low in 0u32..3,
    ) {
        let t = LookupTable::new(TableKind::Multiply, 2, 4, entries.iter().map(|&e| big(e)).collect()).unwrap();
        let f = build_phase_fixup_table(&t, &big(s), low).unwrap();
        prop_assert_eq!(f.len(), 1 << (2 - low));
        for (a, &e) in entries.iter().enumerate() {
            let sign_bit = (s & e).count_ones() % 2 == 1;
            let (row, x) = (a >> low, a & ((1 << low) - 1));
            prop_assert_eq!(f.get(row).bit(x as u64), sign_bit);
        }
    }

    #[test]
    fn text_round_trip(entries in prop::collection::vec(0u64..256, 8)) {
        let t = LookupTable::new(TableKind::Pruned, 3, 8, entries.into_iter().map(big).collect()).unwrap();
        prop_assert_eq!(LookupTable::from_text(&t.to_text()).unwrap(), t);
    }
}
