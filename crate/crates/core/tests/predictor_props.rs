mod common;

use knowledge_bottleneck::predictor::{
    argmax, gradients, loss_ce, loss_prior, loss_total, prior_gradient, train_head, LinearHead,
    PriorMatrix, TrainConfig,
};
use knowledge_bottleneck::probe::{probe, Featurizer};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn signs(n: usize, m: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(any::<bool>(), n * m).prop_map(move |v| {
        Array2::from_shape_fn((n, m), |(i, j)| if v[i * m + j] { 1.0 } else { -1.0 })
    })
}

fn head_batch() -> impl Strategy<Value = (LinearHead, Array2<f64>, Vec<usize>, PriorMatrix)> {
    (2usize..5, 1usize..7, 1usize..10).prop_flat_map(|(n, m, b)| {
        (
            prop::collection::vec(-2.0f64..2.0, n * m),
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, b * m),
            prop::collection::vec(0..n, b),
            signs(n, m),
        )
            .prop_map(move |(w, bias, x, y, p)| {
                let mut head = LinearHead::anonymous(n, m, true).unwrap();
                head.weights = Array2::from_shape_vec((n, m), w).unwrap();
                head.bias = Array1::from_vec(bias);
                (
                    head,
                    Array2::from_shape_vec((b, m), x).unwrap(),
                    y,
                    PriorMatrix::anonymous(p).unwrap(),
                )
            })
    })
}

fn with_theta(head: &LinearHead, t: &[f64]) -> LinearHead {
    let (n, m) = head.weights.dim();
    let mut h = head.clone();
    h.weights = Array2::from_shape_vec((n, m), t[..n * m].to_vec()).unwrap();
    h.bias = Array1::from_vec(t[n * m..].to_vec());
    h
}

fn flat(g: (Array2<f64>, Array1<f64>)) -> Vec<f64> {
    g.0.iter().chain(g.1.iter()).copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ce_gradient_matches_finite_differences((head, x, y, _p) in head_batch()) {
        let theta = flat((head.weights.clone(), head.bias.clone()));
        let numeric = common::numeric_gradient(&theta, 1e-6, |t| loss_ce(&with_theta(&head, t), x.view(), &y).unwrap());
        prop_assert!(common::relative_error(&flat(gradients(&head, x.view(), &y, None).unwrap()), &numeric) <= 1e-5);
    }

    #[test]
    fn prior_gradient_matches_finite_differences((head, _x, _y, p) in head_batch()) {
        let (n, m) = head.weights.dim();
        let w: Vec<f64> = head.weights.iter().copied().collect();
        let numeric = common::numeric_gradient(&w, 1e-6, |t| {
            loss_prior(&Array2::from_shape_vec((n, m), t.to_vec()).unwrap(), &p).unwrap()
        });
        let analytic: Vec<f64> = prior_gradient(&head.weights, &p).unwrap().iter().copied().collect();
        prop_assert!(common::relative_error(&analytic, &numeric) <= 1e-5);
    }

    #[test]
    fn total_gradient_matches_finite_differences((head, x, y, p) in head_batch()) {
        let theta = flat((head.weights.clone(), head.bias.clone()));
        let numeric = common::numeric_gradient(&theta, 1e-6, |t| loss_total(&with_theta(&head, t), x.view(), &y, Some(&p)).unwrap());
        prop_assert!(common::relative_error(&flat(gradients(&head, x.view(), &y, Some(&p)).unwrap()), &numeric) <= 1e-5);
    }

    #[test]
    fn prior_loss_is_bounded((head, _x, _y, p) in head_batch(), scale in 0.0f64..50.0) {
        let l = loss_prior(&(&head.weights * scale), &p).unwrap();
        prop_assert!((0.0..2.0).contains(&l));
    }

    #[test]
    fn raising_a_negative_prior_weight_never_lowers_the_loss(
        w in prop::collection::vec(-4.0f64..4.0, 6),
        entry in 0usize..6,
        step in 0.0f64..3.0,
    ) {
        let p = PriorMatrix::anonymous(Array2::from_elem((2, 3), -1.0)).unwrap();
        let w0 = Array2::from_shape_vec((2, 3), w).unwrap();
        let mut w1 = w0.clone();
        w1[[entry / 3, entry % 3]] += step;
        prop_assert!(loss_prior(&w1, &p).unwrap() >= loss_prior(&w0, &p).unwrap());
    }

    #[test]
    fn argmax_ignores_a_shared_offset(scores in prop::collection::vec(-100.0f64..100.0, 1..10), c in -1e3f64..1e3) {
        // Integer-valued offsets keep the shifted scores exact.
        let c = c.round();
        let shifted: Vec<f64> = scores.iter().map(|s| s.round() + c).collect();
        let rounded: Vec<f64> = scores.iter().map(|s| s.round()).collect();
        prop_assert_eq!(argmax(&rounded), argmax(&shifted));
    }

    #[test]
    fn head_predictions_ignore_a_shared_bias((head, x, _y, _p) in head_batch(), c in -5.0f64..5.0) {
        let mut shifted = head.clone();
        shifted.bias += c;
        let a = head.scores_matrix(x.view()).unwrap();
        let b = shifted.scores_matrix(x.view()).unwrap();
        for (ra, rb) in a.rows().into_iter().zip(b.rows()) {
            let (ra, rb) = (ra.to_vec(), rb.to_vec());
            let gap_a = ra.iter().cloned().fold(f64::MIN, f64::max) - ra.iter().cloned().filter(|&v| v < ra[argmax(&ra)]).fold(f64::MIN, f64::max);
            prop_assume!(gap_a > 1e-9);
            prop_assert_eq!(argmax(&ra), argmax(&rb));
        }
    }
}

#[test]
fn probe_and_plain_training_agree_bit_for_bit() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut sample = |n: usize| -> Vec<(Vec<f64>, usize)> {
        (0..n)
            .map(|i| {
                let class = i % 3;
                (
                    (0..784)
                        .map(|_| (rng.random_range(0.0..0.6) + 0.2 * class as f64).min(1.0))
                        .collect(),
                    class,
                )
            })
            .collect()
    };
    let train = sample(90);
    let test = sample(30);
    let cfg = TrainConfig {
        epochs: 15,
        ..TrainConfig::linear_probe(4)
    };
    let featurizer = Featurizer::pixel(768).unwrap();
    let via_probe = probe(&featurizer, &train, &test, 3, &cfg).unwrap();

    let matrix =
        |s: &[(Vec<f64>, usize)]| Array2::from_shape_fn((s.len(), 768), |(i, j)| s[i].0[j]);
    let ytr: Vec<usize> = train.iter().map(|e| e.1).collect();
    let yte: Vec<usize> = test.iter().map(|e| e.1).collect();
    let head = train_head(
        matrix(&train).view(),
        &ytr,
        None,
        (0..3).map(|c| format!("c{c}")).collect(),
        (0..768).map(|j| format!("f{j}")).collect(),
        &cfg,
        None,
    )
    .unwrap()
    .head;
    let direct =
        knowledge_bottleneck::predictor::evaluate_accuracy(&head, matrix(&test).view(), &yte)
            .unwrap();
    assert_eq!(via_probe.to_bits(), direct.to_bits());
}
