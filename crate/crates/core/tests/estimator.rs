use modexp_core::cost_model::Variant;
use modexp_core::estimator::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn profile() -> HardwareProfile {
    HardwareProfile::default()
}

#[test]
fn reference_row_identities() {
    let d = derive(19.249, 5.046, 0.31, 1.2);
    assert!((d.expected_hours - 7.313).abs() < 5e-4);
    assert!((d.vol_per_run - 4.047).abs() < 5e-4);
    assert!((d.expected_vol - 5.865).abs() < 5e-4);
    assert!(rel(d.skewed_volume, 19.249f64.powf(1.2) * d.expected_hours) < 1e-12);
    let z = derive(19.249, 5.046, 0.0, 1.2);
    assert_eq!(z.expected_hours, 5.046);
    assert_eq!(z.expected_vol, z.vol_per_run);
}

#[test]
fn patch_size() {
    assert_eq!(patch_qubits(27), 1568.0);
}

#[test]
fn single_piece_layout() {
    let pt = LayoutPoint::new(15, 27, 4, 5, 5, 2048);
    let l = logical_layout(2048, 3029, &pt);
    assert_eq!(l.pieces, 1);
    // pad = ceil(log2(2048·3029)) + d_off = 23 + 4
    assert_eq!(l.pad, 27);
    assert_eq!(l.register, 2048 + 27);
    assert_eq!(l.logical_qubits, 3 * (2048 + 27) + 5 + 1);
    let two = logical_layout(2048, 3029, &LayoutPoint::new(15, 27, 4, 5, 5, 1024));
    assert_eq!(two.register, 2048 + 2 * 27);
}

#[test]
fn reference_point_neighbourhood() {
    let pt = LayoutPoint::new(15, 27, 4, 5, 5, 1024);
    let row = estimate_point(2048, 3029, &profile(), Variant::Original, &pt, 1.2).unwrap();
    assert!(rel(row.mqb, 19.249) < 0.15, "Mqb {}", row.mqb);
    assert!(rel(row.b_tofs, 2.698) < 0.05, "B Tofs {}", row.b_tofs);
    assert!(row.audit(1e-9));
    let e = row.errors;
    assert!(e.data >= 0.0 && e.factory >= 0.0 && e.coset_deviation >= 0.0 && e.runway >= 0.0);
    assert!(rel(e.total, e.data + e.factory + e.coset_deviation + e.runway) < 1e-12);
}

#[test]
fn small_distances_overflow_the_budget() {
    let pt = LayoutPoint::new(9, 11, 2, 5, 5, 1024);
    let r = estimate_point(2048, 3029, &profile(), Variant::Original, &pt, 1.2);
    assert!(matches!(r, Err(EstimateError::BudgetOverflow(t)) if t >= 1.0));
}

#[test]
fn grid_reproduces_reference_neighbourhood() {
    let g = grid_search(2048, 3029, &profile(), Variant::Original, 1.2, &REFERENCE_BUDGETS_MQB).unwrap();
    let m = g.minimizer.unwrap();
    assert!(rel(m.b_tofs, 2.698) < 0.05);
    assert!(rel(m.mqb, 19.249) < 0.15);
    assert!(rel(m.expected_hours, 7.313) < 0.25);
    assert!((15..=17).contains(&m.point.l1) && (25..=29).contains(&m.point.l2));
    assert_eq!((m.point.g_mul, m.point.g_exp, m.point.g_sep), (5, 5, 1024));
    assert!(g.rows.iter().all(|r| r.audit(1e-9)));
    assert!(g.rows.windows(2).all(|w| w[0].skewed_volume <= w[1].skewed_volume));
}

#[test]
fn matched_budget_reductions() {
    let p = profile();
    let a = grid_search(2048, 3029, &p, Variant::Original, 1.2, &REFERENCE_BUDGETS_MQB).unwrap();
    let b = grid_search(2048, 3029, &p, Variant::Combined, 1.2, &REFERENCE_BUDGETS_MQB).unwrap();
    for (x, y) in a.budgets.iter().zip(&b.budgets) {
        let (x, y) = (x.best.unwrap(), y.best.unwrap());
        let r = 100.0 * (1.0 - y.expected_hours / x.expected_hours);
        assert!((1.0..=8.0).contains(&r), "budget {}: {r}", x.mqb);
    }
}

#[test]
fn grid_is_deterministic() {
    let p = profile();
    let a = grid_search(1024, 1536, &p, Variant::Combined, 1.2, &[10.0, 20.0]).unwrap();
    let b = grid_search(1024, 1536, &p, Variant::Combined, 1.2, &[10.0, 20.0]).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.frontier, b.frontier);
}

#[test]
fn single_point_frontier() {
    let pt = LayoutPoint::new(17, 27, 5, 5, 5, 1024);
    let g = evaluate_points(2048, 3029, &profile(), Variant::Original, 1.2, &[pt], &[100.0, 1.0]).unwrap();
    assert_eq!(g.frontier.len(), 1);
    assert_eq!(g.frontier[0].point, pt);
    assert_eq!(g.minimizer.unwrap().point, pt);
    assert_eq!(g.budgets[0].best.unwrap().point, pt);
    assert!(g.budgets[1].best.is_none());
}

/// The combined variant never costs more Toffolis at near-balanced windows.
/// With `g_mul` well above `g_exp` the `2^{g_mul}` fixup outgrows the plain
/// unlookup and the ordering flips, so the claim is not pointwise in general.
#[test]
fn combined_saves_toffolis_at_balanced_points() {
    let p = profile();
    for n in [1024u64, 2048, 3072, 4096] {
        let n_e = 3 * n / 2;
        for pt in search_points(&p, n) {
            if pt.l1 != 15 || pt.l2 != 27 {
                continue;
            }
            let c = |v| point_cost(n, n_e, &pt, v, initial_bits_for(v, n, n_e, pt.g_exp, pt.g_mul)).unwrap();
            let (a, b) = (c(Variant::Original), c(Variant::Combined));
            if pt.g_mul.abs_diff(pt.g_exp) <= 1 {
                assert!(b.total_tofs < a.total_tofs, "n={n} {pt:?}");
            }
            if pt.g_mul == 7 && pt.g_exp == 3 {
                assert!(b.total_tofs > a.total_tofs);
            }
        }
    }
}

#[test]
fn shipped_profile_matches_defaults() {
    let text = include_str!("../../../config/default_profile.conf");
    let mut p = HardwareProfile::with_error_rate(1e-4);
    p.apply_config(text).unwrap();
    assert_eq!(p, HardwareProfile::default());
}

#[test]
fn factory_error_falls_with_distance() {
    let p = profile();
    assert!(p.ccz_error(17, 29) < p.ccz_error(15, 27));
    assert!(p.logical_error(27) < p.logical_error(25));
    assert!(rel(p.logical_error(9), 0.1 * 0.1f64.powi(5)) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frontier_is_undominated(
        picks in prop::collection::vec((0usize..5, 0usize..5, 0u32..9, 3u32..8, 3u32..8, 0usize..4), 1..40),
    ) {
        let l1s = [13u32, 15, 17, 19, 21];
        let p = profile();
        let points: Vec<LayoutPoint> = picks
            .into_iter()
            .map(|(a, b, d, gm, ge, s)| {
                let l1 = l1s[a];
                LayoutPoint::new(l1, l1 + 2 + 2 * b as u32, 2 + d, gm, ge, [256u64, 512, 1024, 2048][s])
            })
            .collect();
        let g = evaluate_points(2048, 3029, &p, Variant::Combined, 1.2, &points, &[]).unwrap();
        for f in &g.frontier {
            prop_assert!(f.audit(1e-9));
            for r in &g.rows {
                let dominates = r.mqb <= f.mqb
                    && r.expected_hours <= f.expected_hours
                    && (r.mqb < f.mqb || r.expected_hours < f.expected_hours);
                prop_assert!(!dominates);
            }
        }
        for r in &g.rows {
            let covered = g.frontier.iter().any(|f| f.mqb <= r.mqb && f.expected_hours <= r.expected_hours);
            prop_assert!(covered);
        }
    }

    #[test]
    fn derived_identities(mqb in 0.1f64..100.0, hours in 0.01f64..100.0, risk in 0.0f64..0.99, q in 1.0f64..2.0) {
        let d = derive(mqb, hours, risk, q);
        prop_assert!(rel(d.expected_hours * (1.0 - risk), hours) < 1e-12);
        prop_assert!(rel(d.vol_per_run * 24.0, mqb * hours) < 1e-12);
        prop_assert!(rel(d.expected_vol * (1.0 - risk), d.vol_per_run) < 1e-12);
    }
}
