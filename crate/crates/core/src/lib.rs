//! Dependency-graph sentence fusion for meeting-style transcripts.
//!
//! Given topic segments of dependency-parsed utterances, this crate merges
//! each segment's parse trees into a single graph, scores every edge with
//! corpus statistics, selects the best subtree with an exact 0-1 integer
//! linear program, and linearizes the result into a one-sentence summary.
//! ROUGE-2 / ROUGE-SU4 scoring is included for evaluating outputs against
//! reference summaries.

pub mod anaphora;
pub mod config;
pub mod conllu;
mod error;
pub mod fusion;
pub mod ilp;
pub mod linearize;
pub mod pipeline;
pub mod rouge;
pub mod stats;

pub use error::{Error, Result};
