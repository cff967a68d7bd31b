//! Confound reversal on synthetic data: a linear probe over raw features
//! against the grounded bottleneck with and without its prior, over three
//! seeds.

use knowledge_bottleneck::bench::{
    compute_metrics, format_table, split_matrix, synth_generate, Metrics, SyntheticConfig,
};
use knowledge_bottleneck::grounding::{
    ground_matrix, train_grounders, GroundingConfig, PretrainSet,
};
use knowledge_bottleneck::oracle::KeywordAnnotator;
use knowledge_bottleneck::predictor::{evaluate_accuracy, train_head, PriorMatrix, TrainConfig};

fn main() -> anyhow::Result<()> {
    let mut rows: Vec<(String, Metrics)> = Vec::new();
    for seed in 0..3 {
        let world = synth_generate(&SyntheticConfig {
            seed,
            ..SyntheticConfig::default()
        })?;
        let splits = world.splits()?;
        let (xtr, ytr) = split_matrix(&splits.train)?;
        let (xv, yv) = split_matrix(&splits.val)?;
        let (xt, yt) = split_matrix(&splits.test)?;
        let (xu, yu) = split_matrix(&splits.unconfounded)?;

        let raw: Vec<String> = (0..xtr.ncols()).map(|j| format!("x{j}")).collect();
        let probe = train_head(
            xtr.view(),
            &ytr,
            Some((xv.view(), &yv)),
            world.class_names.clone(),
            raw,
            &TrainConfig::linear_probe(seed),
            None,
        )?
        .head;
        rows.push((
            format!("probe/{seed}"),
            compute_metrics(
                evaluate_accuracy(&probe, xv.view(), &yv)?,
                evaluate_accuracy(&probe, xt.view(), &yt)?,
                Some(evaluate_accuracy(&probe, xu.view(), &yu)?),
            ),
        ));

        let questions = world.questions();
        let grounders = train_grounders(
            &questions,
            &PretrainSet::new(world.pretrain.clone())?,
            &KeywordAnnotator::new(),
            &GroundingConfig {
                seed,
                ..GroundingConfig::default()
            },
        )?;
        let act = |x: &ndarray::Array2<f64>| ground_matrix(x.view(), &grounders);
        let (atr, av, at, au) = (act(&xtr)?, act(&xv)?, act(&xt)?, act(&xu)?);
        let prior = PriorMatrix::from_oracle(&world.truth_prior, &world.class_names, &questions)?;
        for (name, enabled) in [("bottleneck+prior", true), ("bottleneck", false)] {
            let cfg = TrainConfig {
                seed,
                prior_enabled: enabled,
                ..TrainConfig::default()
            };
            let head = train_head(
                atr.view(),
                &ytr,
                Some((av.view(), &yv)),
                world.class_names.clone(),
                questions.clone(),
                &cfg,
                Some(&prior),
            )?
            .head;
            rows.push((
                format!("{name}/{seed}"),
                compute_metrics(
                    evaluate_accuracy(&head, av.view(), &yv)?,
                    evaluate_accuracy(&head, at.view(), &yt)?,
                    Some(evaluate_accuracy(&head, au.view(), &yu)?),
                ),
            ));
        }
    }
    print!("{}", format_table(&rows));
    Ok(())
}
