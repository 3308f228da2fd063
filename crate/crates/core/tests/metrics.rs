use std::collections::BTreeMap;

use proptest::prelude::*;
use rolebench_core::probing::{animacy_confidence, entropy, log_odds, student_t_two_sided, welch_t};
use rolebench_core::{MaskDistribution, NounInventory};
use statrs::distribution::{ContinuousCDF, StudentsT};

fn inventory() -> NounInventory {
    NounInventory {
        animate: ["dog", "king", "nurse"].map(String::from).to_vec(),
        inanimate: ["book", "apple", "box", "cup"].map(String::from).to_vec(),
    }
}

/// Normalized distribution over the inventory from positive weights.
fn dist(weights: &[f64], inv: &NounInventory) -> MaskDistribution {
    let total: f64 = weights.iter().sum();
    let log_probs: BTreeMap<String, f64> =
        inv.all().into_iter().zip(weights).map(|(w, &x)| (w, (x / total).ln())).collect();
    MaskDistribution { position: 0, log_probs, entropy: None, top_k: vec![], complete: true }
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..10.0, 7)
}

proptest! {
    #[test]
    fn swapping_inventories_negates_aconf(w in weights()) {
        let inv = inventory();
        let d = dist(&w, &inv);
        let a = animacy_confidence(&d, &inv).unwrap().value;
        let b = animacy_confidence(&d, &inv.swapped()).unwrap().value;
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn log_odds_ignores_a_common_scale(w in weights(), scale in 1e-3f64..1e3) {
        let inv = inventory();
        let d = dist(&w, &inv);
        let mut scaled = d.clone();
        for lp in scaled.log_probs.values_mut() {
            *lp += scale.ln();
        }
        scaled.complete = false;
        let (a, b) = ("dog", "book");
        let x = log_odds(&d, a, b).unwrap();
        let y = log_odds(&scaled, a, b).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        prop_assert_eq!(x > 0.0, y > 0.0);
        prop_assert_eq!(log_odds(&d, b, a).unwrap(), -x);
    }

    #[test]
    fn entropy_lies_between_zero_and_log_support(w in weights()) {
        let inv = inventory();
        let h = entropy(&dist(&w, &inv)).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (w.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn welch_is_antisymmetric(
        xs in prop::collection::vec(-50.0f64..50.0, 2..20),
        ys in prop::collection::vec(-50.0f64..50.0, 2..20),
    ) {
        let (Ok(a), Ok(b)) = (welch_t(&xs, &ys), welch_t(&ys, &xs)) else {
            return Ok(());
        };
        prop_assert_eq!(a.t, -b.t);
        prop_assert_eq!(a.df, b.df);
        prop_assert_eq!(a.p, b.p);
        prop_assert!(a.p > 0.0 && a.p <= 1.0);
    }

    #[test]
    fn t_distribution_agrees_with_statrs(t in -30.0f64..30.0, df in 0.5f64..300.0) {
        let ours = student_t_two_sided(t, df);
        let theirs = 2.0 * StudentsT::new(0.0, 1.0, df).unwrap().cdf(-t.abs());
        // statrs itself is accurate to roughly 1e-10 relative in this range;
        // very small tails are compared absolutely.
        prop_assert!(
            (ours - theirs).abs() <= 1e-8 * theirs.max(1e-6),
            "t={} df={}: {} vs {}", t, df, ours, theirs
        );
    }
}

#[test]
fn uniform_and_one_hot_reach_the_entropy_bounds() {
    let inv = inventory();
    let u = entropy(&dist(&[1.0; 7], &inv)).unwrap();
    assert!((u - 7f64.ln()).abs() < 1e-12);
    let mut one_hot = dist(&[1.0; 7], &inv);
    for (k, v) in one_hot.log_probs.iter_mut() {
        *v = if k == "dog" { 0.0 } else { f64::NEG_INFINITY };
    }
    assert_eq!(entropy(&one_hot).unwrap(), 0.0);
}
