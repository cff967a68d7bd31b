//! Diversity of a bottleneck: mean pairwise cosine distance between concept
//! embeddings.

use knowledge_bottleneck::concepts::{diversity_of, embed_concept};

fn main() -> anyhow::Result<()> {
    let sets: [&[&str]; 3] = [
        &[
            "Is there lung opacity?",
            "Is there a lung opacity?",
            "Is there lung opacities?",
        ],
        &[
            "Is there lung opacity?",
            "Is there pleural effusion?",
            "Is the heart enlarged?",
        ],
        &[
            "Is there lung opacity?",
            "Are the lesion borders irregular?",
            "Is a support device visible?",
            "Does the lesion show blue-white veil?",
        ],
    ];
    for set in sets {
        let embeddings: Vec<Vec<f64>> = set.iter().map(|q| embed_concept(q)).collect();
        println!("{:.4}  {:?}", diversity_of(&embeddings)?, set);
    }
    match diversity_of(&[embed_concept("Is there lung opacity?")]) {
        Ok(d) => println!("single concept: {d}"),
        Err(e) => println!("single concept: {e}"),
    }
    Ok(())
}
