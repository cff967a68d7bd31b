//! Linear probes over raw pixels and over a frozen random network, on
//! synthetic grayscale images whose mean brightness encodes the class.
//!
//! The head is trained on unstandardized features, so the threshold between
//! two brightness levels has to come from the bias. A strong contrast is
//! separated within the default budget; a mild one is not.

use knowledge_bottleneck::predictor::TrainConfig;
use knowledge_bottleneck::probe::{parse_pgm, probe, thumbnail, write_pgm, Featurizer, GrayImage};
use rand::{Rng, SeedableRng};

fn images(
    seed: u64,
    n: usize,
    levels: (f64, f64),
    noise: f64,
) -> anyhow::Result<Vec<(Vec<f64>, usize)>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (40, 36);
    (0..n)
        .map(|i| {
            let class = i % 2;
            let base = if class == 1 { levels.1 } else { levels.0 };
            let pixels = (0..w * h)
                .map(|_| (base + rng.random_range(-noise..noise)).clamp(0.0, 255.0) as u8)
                .collect();
            // Round-trip through the PGM codec, as images would arrive from disk.
            let img = parse_pgm(&write_pgm(&GrayImage::new(w, h, pixels)?))?;
            Ok((thumbnail(&img), class))
        })
        .collect()
}

fn main() -> anyhow::Result<()> {
    let cfg = TrainConfig::linear_probe(0);
    for levels in [(20.0, 235.0), (64.0, 192.0)] {
        let train = images(1, 400, levels, 20.0)?;
        let test = images(2, 200, levels, 20.0)?;
        println!("class brightness {} vs {}", levels.0, levels.1);
        for featurizer in [Featurizer::pixel(768)?, Featurizer::random_net(0)] {
            let acc = probe(&featurizer, &train, &test, 2, &cfg)?;
            println!(
                "  {:?} ({} dims): {acc:.1}%",
                featurizer.kind(),
                featurizer.dim()
            );
        }
    }
    Ok(())
}
