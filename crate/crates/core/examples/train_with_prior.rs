//! Train the bottleneck head with and without the sign prior on grounded
//! concept activations and compare the learned weights.

use knowledge_bottleneck::bench::{split_matrix, synth_generate, SyntheticConfig};
use knowledge_bottleneck::grounding::{
    ground_matrix, train_grounders, GroundingConfig, PretrainSet,
};
use knowledge_bottleneck::oracle::KeywordAnnotator;
use knowledge_bottleneck::predictor::{
    evaluate_accuracy, loss_prior, train_head, PriorMatrix, TrainConfig,
};

fn main() -> anyhow::Result<()> {
    let world = synth_generate(&SyntheticConfig::default())?;
    let splits = world.splits()?;
    let questions = world.questions();
    let models = train_grounders(
        &questions,
        &PretrainSet::new(world.pretrain.clone())?,
        &KeywordAnnotator::new(),
        &GroundingConfig::default(),
    )?;
    let activations = |split| -> anyhow::Result<_> {
        let (x, y) = split_matrix(split)?;
        Ok((ground_matrix(x.view(), &models)?, y))
    };
    let (xtr, ytr) = activations(&splits.train)?;
    let (xv, yv) = activations(&splits.val)?;
    let (xt, yt) = activations(&splits.test)?;
    let prior = PriorMatrix::from_oracle(&world.truth_prior, &world.class_names, &questions)?;

    for enabled in [true, false] {
        let cfg = TrainConfig {
            prior_enabled: enabled,
            ..TrainConfig::default()
        };
        let trained = train_head(
            xtr.view(),
            &ytr,
            Some((xv.view(), &yv)),
            world.class_names.clone(),
            questions.clone(),
            &cfg,
            Some(&prior),
        )?;
        let head = &trained.head;
        println!(
            "prior {:<3}  in-domain {:5.1}  out-of-domain {:5.1}  prior loss {:.3}  sign agreement {:.0}%",
            if enabled { "on" } else { "off" },
            evaluate_accuracy(head, xv.view(), &yv)?,
            evaluate_accuracy(head, xt.view(), &yt)?,
            loss_prior(&head.weights, &prior)?,
            100.0 * prior.agreement(&head.weights)
        );
        for (q, w) in questions.iter().zip(head.weights.row(1)) {
            println!("    {q:<32} {w:+.3}");
        }
    }
    Ok(())
}
