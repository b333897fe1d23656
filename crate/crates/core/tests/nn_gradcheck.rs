mod common;

use dinerdash::nn::{softmax, softmax_cross_entropy, DenseNet};
use dinerdash::rng::Rng;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dense_gradients_match_finite_differences(seed in any::<u64>()) {
        prop_assert_eq!(common::dense_gradient_mismatches(&mut Rng::new(seed), seed), 0);
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences(
        logits in prop::collection::vec(-10.0f64..10.0, 2..12),
        pick in any::<prop::sample::Index>(),
    ) {
        let label = pick.index(logits.len());
        let (_, grad) = softmax_cross_entropy(&logits, label).unwrap();
        let h = 1e-6;
        for i in 0..logits.len() {
            let mut up = logits.clone();
            up[i] += h;
            let mut down = logits.clone();
            down[i] -= h;
            let numeric = (softmax_cross_entropy(&up, label).unwrap().0 - softmax_cross_entropy(&down, label).unwrap().0) / (2.0 * h);
            prop_assert!((grad[i] - numeric).abs() <= 1e-4 * grad[i].abs().max(numeric.abs()) + 1e-8, "{} vs {}", grad[i], numeric);
        }
        prop_assert!((softmax(&logits).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn evaluation_ignores_dropout_and_training_does_not() {
    let net = DenseNet::new(&[4, 32, 3], &[0.5], 1).unwrap();
    let x = [0.3, -1.0, 2.0, 0.5];
    assert_eq!(net.predict(&x).unwrap(), net.clone().forward(&x, false).unwrap().0);
    let mut a = net.clone();
    let first = a.forward(&x, true).unwrap().0;
    let second = a.forward(&x, true).unwrap().0;
    assert_ne!(first, second);
    assert_eq!(net.clone().forward(&x, true).unwrap().0, first);
}

#[test]
fn checkpoint_round_trips() {
    let net = DenseNet::new(&[5, 7, 2], &[0.2], 9).unwrap();
    let text = net.to_json();
    let back = DenseNet::from_json(&text).unwrap();
    assert_eq!(back, net);
    assert_eq!(back.to_json(), text);
}
