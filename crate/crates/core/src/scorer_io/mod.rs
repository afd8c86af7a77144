//! Interchange formats for externally produced model output.
//!
//! Neural usefulness rankers arrive as TREC run files; claim-check models
//! arrive as per-evidence JSONL judgments.

mod evidence;
mod run;

pub use evidence::{
    group_by_document, load_evidence, write_evidence, EvidenceJudgment, EvidenceLabel,
};
pub use run::{load_run, rank_by_score, write_run, RankedRun, ScoredDoc};
