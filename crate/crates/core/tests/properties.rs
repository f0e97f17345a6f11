use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stepcat::analysis::{gradient_bound, objective_bound};
use stepcat::dp;
use stepcat::gd::{
    self, huber_oracle, run_gd, standard_instances, sufficient_decrease_slack, trace_scale,
    HuberSpec, HuberVariant,
};
use stepcat::schedule::{
    certificate_dominant, certificate_primitive, con_pd, con_pp, phi, phi_residual, psi,
    psi_residual, reverse, Kind, Schedule,
};
use stepcat::sequences;

fn arb_primitive() -> impl Strategy<Value = Schedule> {
    // random ConPP trees from empty leaves
    let leaf = Just(Schedule::empty()).boxed();
    leaf.prop_recursive(4, 32, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| con_pp(&a, &b).unwrap())
    })
}

fn arb_dominant() -> impl Strategy<Value = Schedule> {
    (
        arb_primitive(),
        prop::collection::vec(arb_primitive(), 0..4),
    )
        .prop_map(|(last, heads)| {
            let mut d = last;
            for a in heads.iter().rev() {
                d = con_pd(a, &d).unwrap();
            }
            d
        })
}

fn direct_phi(x: f64, y: f64) -> f64 {
    let (s, p) = (x + y, x * y);
    (((s + 2.0).powi(2) + 4.0 * (p + s + 1.0)).sqrt() - s) / 2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn joint_steps_in_range(x in 0.0f64..1e6, y in 0.0f64..1e6) {
        let a = phi(x, y).unwrap();
        let b = psi(x, y).unwrap();
        prop_assert!(1.0 < a && a < y + 2.0 && a < x + 2.0);
        prop_assert!(1.0 < b && b < x + 2.0);
        prop_assert!(phi_residual(x, y) <= 1e-12);
        prop_assert!(psi_residual(x, y) <= 1e-12);
    }

    #[test]
    fn phi_is_symmetric(x in 0.0f64..1e4, y in 0.0f64..1e4) {
        prop_assert_eq!(phi(x, y).unwrap(), phi(y, x).unwrap());
    }

    #[test]
    fn phi_agrees_with_quadratic_root(x in 0.0f64..50.0, y in 0.0f64..50.0) {
        // textbook root, accurate enough for small inputs
        let a = phi(x, y).unwrap();
        prop_assert!((a - direct_phi(x, y)).abs() <= 1e-12 * a);
    }

    #[test]
    fn con_pp_sum_is_order_free(a in arb_primitive(), b in arb_primitive()) {
        let ab = con_pp(&a, &b).unwrap();
        let ba = con_pp(&b, &a).unwrap();
        prop_assert!((ab.sum() - ba.sum()).abs() <= 1e-12 * ab.sum().max(1.0));
        prop_assert_eq!(ab.len(), a.len() + b.len() + 1);
        prop_assert_eq!(ab.kind(), Kind::Primitive);
    }

    #[test]
    fn reverse_is_an_involution(d in arb_dominant()) {
        prop_assume!(d.kind() == Kind::Dominant);
        let r = reverse(&d);
        prop_assert_eq!(r.kind(), Kind::GBounded);
        let rr = reverse(&r);
        prop_assert_eq!(rr.steps(), d.steps());
        prop_assert_eq!(rr.kind(), d.kind());
        let f = objective_bound(&d).unwrap();
        let g = gradient_bound(&r).unwrap();
        prop_assert!((f - g).abs() <= 1e-14);
    }

    #[test]
    fn certificates_are_normalized(d in arb_dominant(), p in arb_primitive()) {
        let c = certificate_dominant(d.provenance().unwrap()).unwrap();
        prop_assert_eq!(c.u().len(), d.len() + 1);
        prop_assert!(c.u().iter().all(|v| *v >= 0.0));
        let want = 2.0 * d.sum() + 1.0;
        prop_assert!((c.total() - want).abs() <= 1e-10 * want);

        let c = certificate_primitive(&p).unwrap();
        prop_assert_eq!(c.u().len(), p.len() + 1);
        prop_assert_eq!(c.u()[p.len()], 0.0);
    }

    #[test]
    fn dominant_certificates_hold_on_test_functions(d in arb_dominant(), seed in 0u64..1000) {
        let c = certificate_dominant(d.provenance().unwrap()).unwrap();
        for inst in standard_instances(3, seed) {
            let t = run_gd(inst.oracle.as_ref(), &inst.x0, d.steps()).unwrap();
            let slack = gd::dominance_check(&t, &d, &c).unwrap();
            prop_assert!(slack >= -1e-9 * trace_scale(&t).unwrap(), "{} {slack}", inst.oracle.name());
        }
    }

    #[test]
    fn sufficient_decrease_for_any_prefix(
        prefix in prop::collection::vec(0.1f64..1.9, 0..5),
        b in arb_primitive(),
        t in 0.0f64..1.0,
        seed in 0u64..1000,
    ) {
        let alpha = 1.0 + t * (b.sum() + 1.0);
        let mut steps = prefix.clone();
        steps.push(alpha);
        steps.extend_from_slice(b.steps());
        for inst in standard_instances(3, seed) {
            let tr = run_gd(inst.oracle.as_ref(), &inst.x0, &steps).unwrap();
            let s = sufficient_decrease_slack(&tr, prefix.len(), alpha, b.sum()).unwrap();
            prop_assert!(s >= -1e-9 * trace_scale(&tr).unwrap(), "{} {s}", inst.oracle.name());
        }
    }

    #[test]
    fn huber_tightness_from_any_direction(
        dir in prop::collection::vec(-1.0f64..1.0, 2..6),
        n in 0usize..24,
    ) {
        let x = DVector::from_vec(dir);
        prop_assume!(x.norm() > 1e-3);
        let x0 = x.normalize();
        let dom = dp::dom_pp(24);
        let tri = dp::tri_family(24).unwrap();
        let a = gd::tightness_objective_from(&dom.schedule(n).unwrap(), &x0).unwrap();
        let b = gd::tightness_gradient_from(&tri.schedule(n).unwrap(), &x0).unwrap();
        prop_assert!(a.rel_gap <= 1e-10 && b.rel_gap <= 1e-10);
    }

    #[test]
    fn nearly_periodic_dynamic_pattern(k in 1usize..200, l in 0u32..4) {
        let block = sequences::silver(l);
        let e = Schedule::empty();
        let seq = sequences::dynamic_pp(&e, &block, k).unwrap();
        let m = block.len() + 1;
        prop_assert_eq!(seq.len(), k * m);
        for j in 0..k {
            prop_assert_eq!(&seq.steps()[j * m + 1..(j + 1) * m], block.steps());
        }
        let joints: Vec<f64> = (0..k).map(|j| seq.steps()[j * m]).collect();
        prop_assert!(joints.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(joints.iter().all(|a| *a < block.sum() + 2.0));
    }
}

#[test]
fn silver_schedules_are_palindromes() {
    for l in 0..=14 {
        let s = sequences::silver(l);
        assert_eq!(s.len(), (1usize << l) - 1);
        let r: Vec<f64> = s.steps().iter().rev().copied().collect();
        assert_eq!(r, s.steps(), "l={l}");
    }
}

#[test]
fn optimized_families_beat_baselines() {
    let dom = dp::dom_pp(511);
    let tv = sequences::teboulle_vaisbourd(511);
    for n in 1..=511 {
        let ours = objective_bound(&dom.schedule(n).unwrap()).unwrap();
        let t = Schedule::new(tv.steps()[..n].to_vec(), Kind::Primitive).unwrap();
        assert!(ours <= objective_bound(&t).unwrap() + 1e-15, "n={n}");
        if let Some(g) = sequences::grimmer_for_length(n) {
            assert!(ours <= objective_bound(&g).unwrap() + 1e-15, "n={n}");
        }
    }
}

#[test]
fn huber_spot_checks_in_several_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dom = dp::dom_pp(16);
    for d in [1, 2, 5, 10] {
        for n in [0, 1, 7, 16] {
            let h = dom.schedule(n).unwrap();
            let v = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let x0 = v.normalize();
            let a = gd::tightness_objective_from(&h, &x0).unwrap();
            assert!(a.rel_gap <= 1e-10, "d={d} n={n} {}", a.rel_gap);
        }
    }
    let spec = HuberSpec::for_sum(3.0, 2.0, HuberVariant::Objective);
    assert_eq!(huber_oracle(spec, 4).unwrap().w(), 7.0);
}
