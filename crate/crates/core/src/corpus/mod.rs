//! Corpus scanning, per-lemma score aggregation and the score file format.

pub mod aggregate;
pub mod pipeline;
pub mod reader;
pub mod score_file;

pub use aggregate::{aggregate, LemmaAggregate, ScoreAccumulator};
pub use pipeline::{
    scan_unseen, unseen_positions, CorpusScorer, Occurrence, ScanCheckpoint, ScanDiagnostics,
    ScanOutput, VerbFilter,
};
pub use reader::{CorpusReader, CorpusSentence, SentenceItem};
pub use score_file::{build_records, emit_score_file, ScoreFileRecord, ScoredClass, TOP_N};
