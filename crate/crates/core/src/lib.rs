//! Interpretable image classifiers built on a bottleneck of natural-language
//! concept questions mined from a text corpus.
//!
//! The pipeline has five stages, each usable on its own:
//!
//! * [`corpus`]: paragraph/window segmentation and a BM25 inverted index.
//! * [`concepts`]: iterative retrieve-propose-validate bottleneck generation.
//! * [`grounding`]: one logistic grounder per concept, trained from
//!   report-annotated pretraining pairs.
//! * [`predictor`]: a linear head over concept activations with a prior
//!   penalty on the sign of its weights.
//! * [`bench`]: confounded train/test splits, metrics and a synthetic world
//!   to exercise everything offline.
//!
//! Language-model decisions go through the traits in [`oracle`], which ship
//! with deterministic keyword mocks and HTTP adapters.

pub mod bench;
pub mod concepts;
pub mod corpus;
pub mod error;
pub mod fmat;
pub mod grounding;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod predictor;
pub mod probe;
pub mod rng;
pub mod text;

pub use error::{Error, Result};
