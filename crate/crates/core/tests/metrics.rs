mod common;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use watsteer::data::{AssociationNorms, CultureId};
use watsteer::metrics::{metric_suite, pwr_from_lists, recall_from_lists, RankedPrediction};

use common::{metric_instance, oracle_pwr, oracle_recall, to_f64};

fn big(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn strings(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|s| s.to_string()).collect()
}

#[test]
fn matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..1000 {
        let (truth, pred, k) = metric_instance(&mut rng);
        let r_exact = oracle_recall(&truth, &pred, k);
        let p_exact = oracle_pwr(&truth, &pred, k);
        let r: f64 = recall_from_lists(&truth, &pred, k).unwrap().value;
        let p: f64 = pwr_from_lists(&truth, &pred, k).unwrap().value;
        assert!((r - to_f64(&r_exact)).abs() <= 1e-12);
        assert!((p - to_f64(&p_exact)).abs() <= 1e-12);
        let rq: Rational64 = recall_from_lists(&truth, &pred, k).unwrap().value;
        let pq: Rational64 = pwr_from_lists(&truth, &pred, k).unwrap().value;
        assert_eq!(big(rq), r_exact);
        assert_eq!(big(pq), p_exact);
    }
}

#[test]
fn worked_values() {
    let truth = strings(&["a", "b", "c", "d"]);
    let pred = strings(&["a", "x", "c"]);
    let r: Rational64 = recall_from_lists(&truth, &pred, 3).unwrap().value;
    let p: Rational64 = pwr_from_lists(&truth, &pred, 3).unwrap().value;
    assert_eq!(r, Rational64::new(1, 2));
    assert_eq!(p, Rational64::new(16, 25));
    let pf: f64 = pwr_from_lists(&truth, &pred, 3).unwrap().value;
    assert!((pf - 0.64).abs() < 1e-15);
}

#[test]
fn suite_at_one() {
    let entries = vec![("a".to_string(), 3), ("b".to_string(), 2), ("c".to_string(), 1)];
    let truth = AssociationNorms::from_entries(CultureId::new("UK").unwrap(), "cue", entries, None).unwrap();
    let pred = RankedPrediction::new(strings(&["a", "z"]), vec![0.6, 0.4]).unwrap();
    let out = metric_suite::<Rational64, f64>(&truth, &pred, &[1]).unwrap();
    assert_eq!(out[0].0.value, Rational64::new(1, 3));
    assert_eq!(out[0].1.value, Rational64::new(6, 11));
    assert!(metric_suite::<f64, f64>(&truth, &pred, &[]).unwrap().is_empty());
}

#[test]
fn duplicate_predictions_are_rejected() {
    assert!(RankedPrediction::new(strings(&["a", "a"]), vec![0.5, 0.5]).is_err());
}

fn arb_instance() -> impl Strategy<Value = (Vec<String>, Vec<String>)> {
    let alphabet: Vec<String> = (0..16).map(|i| format!("w{i}")).collect();
    (
        Just(alphabet.clone()).prop_shuffle(),
        1usize..=12,
        Just(alphabet).prop_shuffle(),
        0usize..=16,
    )
        .prop_map(|(a, n, b, m)| (a[..n].to_vec(), b[..m].to_vec()))
}

proptest! {
    #[test]
    fn both_counting_forms_agree((truth, pred) in arb_instance(), k in 1usize..=20) {
        // Truth words found in the top K versus top-K words found in truth.
        let top: Vec<&String> = pred.iter().take(k).collect();
        let a = truth.iter().filter(|t| top.contains(t)).count();
        let b = top.iter().filter(|p| truth.contains(p)).count();
        prop_assert_eq!(a, b);
        let r: Rational64 = recall_from_lists(&truth, &pred, k).unwrap().value;
        prop_assert_eq!(r, Rational64::new(a as i64, truth.len() as i64));
    }

    #[test]
    fn moving_a_hit_up_never_lowers_pwr(
        n in 2usize..=12,
        mask in prop::collection::vec(any::<bool>(), 12),
        a in 0usize..12,
        b in 0usize..12,
    ) {
        let truth: Vec<String> = (0..n).map(|x| format!("t{x}")).collect();
        let (i, j) = (a.min(b) % n, a.max(b) % n);
        prop_assume!(i < j);
        let mut hits = mask[..n].to_vec();
        hits[i] = false;
        hits[j] = true;
        let pred: Vec<String> = (0..n).filter(|&x| hits[x]).map(|x| truth[x].clone()).collect();
        let moved: Vec<String> = pred.iter().map(|w| if w == &truth[j] { truth[i].clone() } else { w.clone() }).collect();
        let k = pred.len();
        let before: Rational64 = pwr_from_lists(&truth, &pred, k).unwrap().value;
        let after: Rational64 = pwr_from_lists(&truth, &moved, k).unwrap().value;
        prop_assert!(after >= before);
    }

    #[test]
    fn monotone_and_bounded((truth, pred) in arb_instance()) {
        let n = truth.len();
        let mut prev = (Rational64::from_integer(0), Rational64::from_integer(0));
        for k in 1..=20 {
            let r: Rational64 = recall_from_lists(&truth, &pred, k).unwrap().value;
            let p: Rational64 = pwr_from_lists(&truth, &pred, k).unwrap().value;
            prop_assert!(r >= prev.0 && p >= prev.1);
            for v in [r, p] {
                prop_assert!(v >= Rational64::from_integer(0) && v <= Rational64::from_integer(1));
            }
            if k < n {
                prop_assert!(r <= Rational64::new(k as i64, n as i64));
            }
            prev = (r, p);
        }
    }
}
