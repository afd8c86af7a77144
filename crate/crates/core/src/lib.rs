//! Two-phase health search ranking.
//!
//! A BM25 first stage produces candidate lists per topic. Each candidate is
//! then re-ranked along three information-quality dimensions:
//!
//! * usefulness, ingested from externally produced TREC run files,
//! * supportiveness, aggregated from per-evidence claim-check judgments,
//! * credibility, predicted by a random forest over page features with an
//!   additive boost for a curated list of credible sites.
//!
//! The dimension rankings are combined with Reciprocal Rank Fusion, either
//! freely or through the [`fusion::Preset`] compositions, and scored against
//! helpful/harmful judgments with [`eval`].
//!
//! Data-parallel loops (per-document extraction, per-topic scoring, grid
//! points, forest trees) run on rayon when the `parallel` feature is enabled
//! and fall back to sequential iteration otherwise. Results are identical
//! either way.

pub mod corpus;
pub mod credibility;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod par;
pub mod retrieval;
pub mod scorer_io;
pub mod supportiveness;

pub use error::{Error, Result};
pub use scorer_io::{RankedRun, ScoredDoc};
