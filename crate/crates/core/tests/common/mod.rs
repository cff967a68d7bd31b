//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls the code it checks.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use knowledge_bottleneck::bench::Metrics;
use knowledge_bottleneck::pipeline::{self, HeadKind, Oracles, PipelineConfig, Workspace};

/// Lowercased alphanumeric runs.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Scores every snippet with the textbook BM25 formula, one snippet at a
/// time, and returns the top `k` nonzero scores ordered by score then id.
pub fn bm25_brute(
    snippets: &[(String, String)],
    query: &str,
    k: usize,
    k1: f64,
    b: f64,
) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = snippets.iter().map(|(_, t)| words(t)).collect();
    let n = docs.len() as f64;
    if docs.is_empty() {
        return Vec::new();
    }
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut terms: Vec<String> = words(query);
    terms.sort();
    terms.dedup();
    let mut scored: Vec<(String, f64)> = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        let mut score = 0.0;
        for t in &terms {
            let tf = doc.iter().filter(|w| *w == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc.len() as f64 / avgdl));
        }
        if score > 0.0 {
            scored.push((snippets[i].0.clone(), score));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    // Scores within 1e-9 of their neighbour are ties, ordered by id.
    let mut start = 0;
    for i in 1..=scored.len() {
        if i == scored.len() || scored[i - 1].1 - scored[i].1 > 1e-9 {
            scored[start..i].sort_by(|a, b| a.0.cmp(&b.0));
            start = i;
        }
    }
    scored.truncate(k);
    scored
}

/// Mean over ordered pairs `i != j` of `1 - cos(e_i, e_j)`.
pub fn diversity_brute(embeddings: &[Vec<f64>]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n = embeddings.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let dot: f64 = embeddings[i]
                    .iter()
                    .zip(&embeddings[j])
                    .map(|(a, b)| a * b)
                    .sum();
                total += 1.0 - dot / (norm(&embeddings[i]) * norm(&embeddings[j]));
            }
        }
    }
    total / (n * (n - 1)) as f64
}

/// Bilinear resize of 8-bit pixels to `ow x oh`, sampling source coordinate
/// `(i + 0.5) * in / out - 0.5` clamped to the image, then dividing by 255.
pub fn bilinear_reference(pixels: &[u8], w: usize, h: usize, ow: usize, oh: usize) -> Vec<f64> {
    let px = |x: usize, y: usize| pixels[y * w + x] as f64;
    let mut out = Vec::with_capacity(ow * oh);
    for oy in 0..oh {
        let sy = ((oy as f64 + 0.5) * h as f64 / oh as f64 - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f64;
        for ox in 0..ow {
            let sx = ((ox as f64 + 0.5) * w as f64 / ow as f64 - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f64;
            let top = px(x0, y0) * (1.0 - fx) + px(x1, y0) * fx;
            let bottom = px(x0, y1) * (1.0 - fx) + px(x1, y1) * fx;
            out.push((top * (1.0 - fy) + bottom * fy) / 255.0);
        }
    }
    out
}

/// Central differences of `f` at `theta`.
pub fn numeric_gradient(theta: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let orig = t[i];
            t[i] = orig + h;
            let up = f(&t);
            t[i] = orig - h;
            let down = f(&t);
            t[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`, or the absolute difference when both
/// gradients are tiny.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale < 1e-8 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}

/// Outcome of one seed of the synthetic confound benchmark.
#[derive(Debug, Clone, Copy)]
pub struct BenchRun {
    pub seed: u64,
    pub probe: Metrics,
    pub with_prior: Metrics,
    pub without_prior: Metrics,
}

/// Runs synth, index, generate, ground and prior with the mock oracles in a
/// fresh workspace, then trains and evaluates the linear probe and the
/// bottleneck head with and without its prior.
pub fn run_synthetic_benchmark(seed: u64) -> BenchRun {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::new(dir.path());
    let cfg = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    }
    .resolve()
    .unwrap();
    pipeline::cmd_synth(&ws, &cfg).unwrap();
    pipeline::cmd_index(&ws, &ws.corpus(), &cfg).unwrap();
    let oracles = Oracles::mock(&ws.load_task().unwrap());
    pipeline::cmd_generate(&ws, &cfg, &oracles).unwrap();
    pipeline::cmd_ground(&ws, &cfg, &oracles).unwrap();
    pipeline::cmd_prior(&ws, &cfg, &oracles).unwrap();

    pipeline::cmd_train(&ws, &cfg, HeadKind::LinearProbe).unwrap();
    let probe = pipeline::cmd_eval(&ws, &cfg, HeadKind::LinearProbe)
        .unwrap()
        .metrics;
    pipeline::cmd_train(&ws, &cfg, HeadKind::Bottleneck).unwrap();
    let with_prior = pipeline::cmd_eval(&ws, &cfg, HeadKind::Bottleneck)
        .unwrap()
        .metrics;
    let mut off = cfg.clone();
    off.train.prior_enabled = false;
    pipeline::cmd_train(&ws, &off, HeadKind::Bottleneck).unwrap();
    let without_prior = pipeline::cmd_eval(&ws, &off, HeadKind::Bottleneck)
        .unwrap()
        .metrics;
    BenchRun {
        seed,
        probe,
        with_prior,
        without_prior,
    }
}

/// A corpus of `n_docs` documents describing `adjectives x nouns` findings,
/// two findings per sentence. Returns the documents as (id, text) and the
/// finding phrases.
pub fn findings_corpus(
    adjectives: &[&str],
    nouns: &[&str],
    n_docs: usize,
) -> (Vec<(String, String)>, Vec<String>) {
    let phrases: Vec<String> = nouns
        .iter()
        .flat_map(|n| adjectives.iter().map(move |a| format!("{a} {n}")))
        .collect();
    let mut docs: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, pair) in phrases.chunks(2).enumerate() {
        let sentence = match pair {
            [a, b] => format!("Abnormal studies may show {a} next to {b}."),
            [a] => format!("Abnormal studies may show {a}."),
            _ => unreachable!(),
        };
        docs.entry(i % n_docs).or_default().push(sentence);
    }
    let docs = docs
        .into_iter()
        .map(|(i, s)| {
            (
                format!("doc{i:03}"),
                format!("Normal studies are unremarkable. {}", s.join(" ")),
            )
        })
        .collect();
    (docs, phrases)
}

pub fn distinct<T: std::hash::Hash + Eq>(items: impl IntoIterator<Item = T>) -> usize {
    items.into_iter().collect::<HashSet<_>>().len()
}
