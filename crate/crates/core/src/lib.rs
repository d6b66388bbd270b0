//! Building blocks for offensive-language classification.
//!
//! The crate covers the full classical pipeline: corpus handling with
//! over/downsampling, normalization of adversarially obfuscated text,
//! two-tier blacklist matching, character n-gram language models with a
//! perplexity-gap feature, tf-idf and subword skip-gram embeddings (plus
//! SVD combination of embedding spaces), random forest / linear SVM /
//! logistic regression classifiers behind one probabilistic contract,
//! soft-voting ensembles, and evaluation metrics (macro F1, Fleiss' and
//! Cohen's kappa) together with an ablation-grid runner.
//!
//! Everything here is pure computation over in-memory data and works
//! without `std` (an allocator is required). File formats, the CLI, and
//! parallel execution live in the companion `offlang-cli` crate.
//!
//! All randomized procedures take an explicit `u64` seed and are
//! reproducible run-to-run at any parallelism degree: parallel units
//! (trees, folds, grid cells) derive their RNG streams from
//! `(seed, unit index)`, never from scheduling order.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod charlm;
pub mod corpus;
pub mod embed;
pub mod ensemble;
pub mod eval;
pub mod featurize;
pub mod lexicon;
pub mod linalg;
pub mod models;
pub mod normalize;
pub mod pipeline;
pub mod rng;

mod math;
