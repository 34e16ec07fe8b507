//! Data-side tooling for studying how the attributive particle 的 ("DE")
//! affects Chinese-to-English machine translation.
//!
//! The crate is organised as a pipeline of small, independently testable
//! pieces:
//!
//! - [`lexicon`]: word/POS/frequency dictionary and the tagset it uses.
//! - [`segmenter`]: dictionary DAG segmentation plus POS tagging.
//! - [`de_inserter`]: attributive noun-noun detection and particle insertion.
//! - [`ablation`]: function-word deletion experiments.
//! - [`metrics`]: BLEU and chrF.
//! - [`mt_client`]: translation backends (HTTP JSON and a dictionary mock).
//! - [`corpus_io`]: escaped TSV parallel corpora and seeded splits.
//! - [`decisions`]: the append-only review decision log.
//! - [`pipeline`]: the end-to-end title experiment.

pub mod ablation;
pub mod corpus_io;
pub mod data;
pub mod de_inserter;
pub mod decisions;
pub mod error;
pub mod lexicon;
pub mod metrics;
pub mod mt_client;
pub mod pipeline;
pub mod segmenter;

pub use error::{Error, Result};
