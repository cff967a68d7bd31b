mod common;

use knowledge_bottleneck::bench::{synth_generate, SyntheticConfig};
use knowledge_bottleneck::grounding::{
    bce_gradient, bce_loss, fit_logistic, ground, train_grounders, GroundingConfig, GroundingModel,
    PretrainSet,
};
use knowledge_bottleneck::oracle::KeywordAnnotator;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn problem() -> impl Strategy<Value = (Array2<f64>, Vec<f64>)> {
    (2usize..40, 1usize..6).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(-2.0f64..2.0, n * d)
                .prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap()),
            prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1.0 } else { 0.0 }), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bce_gradient_matches_finite_differences((x, y) in problem(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..=x.ncols()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let d = x.ncols();
        let (gw, gb) = bce_gradient(x.view(), &y, Array1::from_vec(theta[..d].to_vec()).view(), theta[d]);
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let numeric = common::numeric_gradient(&theta, 1e-6, |t| {
            bce_loss(x.view(), &y, Array1::from_vec(t[..d].to_vec()).view(), t[d])
        });
        prop_assert!(common::relative_error(&analytic, &numeric) <= 1e-5);
    }

    #[test]
    fn training_lowers_the_loss((x, y) in problem(), seed in any::<u64>()) {
        prop_assume!(y.contains(&1.0) && y.contains(&0.0));
        let cfg = GroundingConfig { epochs: 50, learning_rate: 0.05, batch_size: 8, ..GroundingConfig::default() };
        let fit = fit_logistic(x.view(), &y, &cfg, seed);
        prop_assert_eq!(fit.losses.len(), 51);
        prop_assert!(fit.losses.last().unwrap() < &fit.losses[0]);
    }

    #[test]
    fn activations_are_probabilities_monotone_in_margin(
        w in prop::collection::vec(-3.0f64..3.0, 4),
        b in -2.0f64..2.0,
        x in prop::collection::vec(-3.0f64..3.0, 4),
        step in 0.0f64..2.0,
    ) {
        let model = GroundingModel { weights: w.clone(), bias: b, ..GroundingModel::zeros("Is there x?", 4) };
        let a = ground(&x, std::slice::from_ref(&model)).unwrap()[0];
        prop_assert!(a > 0.0 && a < 1.0);
        // Moving along w raises the margin x·w.
        let norm2: f64 = w.iter().map(|v| v * v).sum();
        prop_assume!(norm2 > 1e-9);
        let x2: Vec<f64> = x.iter().zip(&w).map(|(xi, wi)| xi + step * wi / norm2.sqrt()).collect();
        let a2 = ground(&x2, std::slice::from_ref(&model)).unwrap()[0];
        prop_assert!(a2 >= a);
    }
}

#[test]
fn concept_order_does_not_change_models() {
    let world = synth_generate(&SyntheticConfig {
        n_pretrain: 400,
        n_per_cell: 200,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let set = PretrainSet::new(world.pretrain.clone()).unwrap();
    let cfg = GroundingConfig {
        epochs: 20,
        ..GroundingConfig::default()
    };
    let questions = world.questions();
    let forward = train_grounders(&questions, &set, &KeywordAnnotator::new(), &cfg).unwrap();
    let mut reversed_q = questions.clone();
    reversed_q.reverse();
    let mut backward = train_grounders(&reversed_q, &set, &KeywordAnnotator::new(), &cfg).unwrap();
    backward.reverse();
    assert_eq!(forward, backward);
}
