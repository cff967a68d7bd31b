use std::collections::HashSet;

use knowledge_bottleneck::bench::{
    compute_metrics, evaluate, make_confounded_splits, round_display, synth_generate, ConfoundSpec,
    LabeledExample, SyntheticConfig,
};
use proptest::prelude::*;

fn pool(per_cell: usize, extra_dims: usize) -> Vec<LabeledExample> {
    let mut out = Vec::new();
    for label in 0..2 {
        for group in 0..2 {
            for i in 0..per_cell {
                let mut features = vec![group as f64];
                features.extend((0..extra_dims).map(|j| ((i * 31 + j * 7 + label) % 13) as f64));
                out.push(LabeledExample {
                    id: format!("{label}{group}-{i}"),
                    features,
                    label,
                    group,
                    report_text: String::new(),
                });
            }
        }
    }
    out
}

fn spec(pairing: Vec<usize>, train: usize, val: usize, test: usize, unconf: usize) -> ConfoundSpec {
    ConfoundSpec {
        class_names: vec!["a".into(), "b".into()],
        group_names: vec!["g0".into(), "g1".into()],
        train_pairing: pairing,
        train_size: train,
        val_size: val,
        test_size: test,
        unconfounded_size: unconf,
        strength: 1.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn confound_only_classifiers_sum_to_one_hundred(
        flip in any::<bool>(),
        mapping in (0usize..2, 0usize..2),
        sizes in (1usize..30, 1usize..30, 1usize..30),
        seed in any::<u64>(),
    ) {
        let pairing = if flip { vec![1, 0] } else { vec![0, 1] };
        let (train, val, test) = (sizes.0 * 2, sizes.1 * 2, sizes.2 * 2);
        let splits = make_confounded_splits(&pool(100, 3), &spec(pairing, train, val, test, 0), seed).unwrap();
        let g = [mapping.0, mapping.1];
        let classify = |x: &[f64]| g[x[0] as usize];
        let id = evaluate(classify, &splits.val).unwrap();
        let ood = evaluate(classify, &splits.test).unwrap();
        prop_assert_eq!(id + ood, 100.0);
    }

    #[test]
    fn splits_are_balanced_and_disjoint(
        sizes in (1usize..40, 1usize..40, 1usize..40, 0usize..20),
        seed in any::<u64>(),
    ) {
        let (train, val, test, unconf) = (sizes.0 * 2, sizes.1 * 2, sizes.2 * 2, sizes.3 * 4);
        let splits = make_confounded_splits(&pool(100, 2), &spec(vec![1, 0], train, val, test, unconf), seed).unwrap();
        prop_assert_eq!(splits.train.len(), train);
        prop_assert_eq!(splits.unconfounded.len(), unconf);
        for split in [&splits.val, &splits.test] {
            let ones = split.iter().filter(|e| e.label == 1).count();
            prop_assert_eq!(ones * 2, split.len());
        }
        for e in splits.train.iter().chain(&splits.val) {
            prop_assert_eq!(e.group, if e.label == 0 { 1 } else { 0 });
        }
        for e in &splits.test {
            prop_assert_eq!(e.group, e.label);
        }
        let mut seen = HashSet::new();
        for e in splits.train.iter().chain(&splits.val).chain(&splits.test).chain(&splits.unconfounded) {
            prop_assert!(seen.insert(e.id.clone()), "{} appears twice", e.id);
        }
    }

    #[test]
    fn metric_identities(id in 0.0f64..=100.0, ood in 0.0f64..=100.0, unconf in prop::option::of(0.0f64..=100.0)) {
        let m = compute_metrics(id, ood, unconf);
        prop_assert_eq!(m.delta, (id - ood).abs());
        prop_assert!((0.0..=100.0).contains(&m.delta));
        prop_assert!((m.avg - (id + ood) / 2.0).abs() < 1e-12);
        prop_assert!(m.avg >= id.min(ood) && m.avg <= id.max(ood));
        match unconf {
            Some(u) => prop_assert!((m.overall.unwrap() - (m.avg + u) / 2.0).abs() < 1e-12),
            None => prop_assert!(m.overall.is_none()),
        }
        prop_assert!((round_display(id) - id).abs() <= 0.05 + 1e-9);
    }
}

#[test]
fn synthetic_confound_block_reverses_exactly() {
    let world = synth_generate(&SyntheticConfig::default()).unwrap();
    let splits = world.splits().unwrap();
    let k = world.config.n_true_concepts;
    // The confound block sits right after the true concept dims.
    let group_of = |x: &[f64]| -> usize {
        let block = &x[4 * k..4 * k + 8];
        usize::from(block.iter().sum::<f64>() > 0.0)
    };
    let pairing = &world.spec.train_pairing;
    let classify = |x: &[f64]| pairing.iter().position(|&g| g == group_of(x)).unwrap();
    let id = evaluate(classify, &splits.val).unwrap();
    let ood = evaluate(classify, &splits.test).unwrap();
    assert_eq!(id + ood, 100.0, "id {id} ood {ood}");
    assert_eq!(id, 100.0);
}
