#![forbid(unsafe_code)]
//! Weekly entity co-occurrence graphs, fuzzy narrative communities, and
//! market-dislocation features from news corpora.
//!
//! The crate turns a corpus of articles — each carrying up to five ranked
//! entities with sentiment — into, per week:
//!
//! * a weighted co-occurrence graph over entities ([`graph`]),
//! * centrality measures and structural summaries ([`graph`]),
//! * hard (Louvain) and fuzzy (diffusion-kernel + NMF) community structure
//!   ([`community`]),
//! * narrative chains linking communities across weeks ([`narrative`]),
//! * node embeddings and an embedding-entropy signal ([`embedding`]),
//!
//! and combines those with rolling z-scores of four volatility indices
//! ([`market`]) into a feature matrix ([`feature`]) for SMOTE-balanced
//! logistic regressions on market dislocations ([`model`]). The [`report`]
//! module renders timelines, PCA projections, and term-frequency tables.
//!
//! The `newsweave` binary (separate crate) orchestrates these modules as a
//! cached, seeded pipeline; the book under `book/` walks through the concepts
//! chapter by chapter, and its code samples compile as doc-tests via the
//! [`guide`] module.

pub mod community;
pub mod embedding;
pub mod feature;
pub mod graph;
pub mod guide;
pub mod ingest;
pub mod market;
pub mod model;
pub mod narrative;
pub mod report;

pub(crate) mod linalg;
pub(crate) mod rng;
