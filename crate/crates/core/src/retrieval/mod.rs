//! BM25 retrieval over an in-memory inverted index, plus known-item
//! parameter tuning.

mod bm25;
mod index;
mod tune;

pub use bm25::{bm25_score, idf, search, search_topics, Bm25Params, DEFAULT_DEPTH};
pub use index::{build_index, InvertedIndex, Posting};
pub use tune::{default_grid, load_silver, tune_params, SilverTopic, TuneResult};
