use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use cplxdyn_core::model::roots_of;
use cplxdyn_core::poly::Poly;
use cplxdyn_core::scalar::wrap_angle;
use cplxdyn_core::{clit, C64};

fn from_roots(roots: &[C64]) -> Poly<f64> {
    let mut coeffs = vec![clit(1.0, 0.0)];
    for r in roots {
        let mut next = vec![clit(0.0, 0.0); coeffs.len() + 1];
        for (k, c) in coeffs.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * r;
        }
        coeffs = next;
    }
    Poly::new(coeffs)
}

fn point() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| clit(re, im))
}

proptest! {
    #[test]
    fn roots_are_recovered(roots in prop::collection::vec(point(), 1..7)) {
        // well separated roots only; clustering is exercised by the unit tests
        for (i, a) in roots.iter().enumerate() {
            for b in &roots[..i] {
                prop_assume!((a - b).norm() > 0.05);
            }
        }
        let found = from_roots(&roots).roots().unwrap();
        let total: usize = found.iter().map(|r| r.multiplicity).sum();
        prop_assert_eq!(total, roots.len());
        for r in &roots {
            let d = found.iter().map(|f| (f.value - r).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-8, "root {} missed by {}", r, d);
        }
    }

    #[test]
    fn branches_are_nth_roots(w in point(), n in 2usize..6) {
        prop_assume!(w.norm() > 1e-6);
        let b = roots_of(w, n);
        prop_assert_eq!(b.values.len(), n);
        for v in &b.values {
            prop_assert!((v.powu(n as u32) - w).norm() <= 1e-12 * w.norm().max(1.0));
        }
        for k in 1..n {
            let step = wrap_angle(b.values[k].arg() - b.values[k - 1].arg());
            prop_assert!((wrap_angle(step - TAU / n as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn wrapped_angles_stay_congruent(a in -100.0..100.0f64) {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI);
        let turns = (a - w) / TAU;
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }
}
