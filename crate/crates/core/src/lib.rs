//! Tools for extending a verb-class ontology with unseen lemmas: a multi-label
//! class scorer, corpus-wide lemma scoring, annotation sheets for a
//! two-annotator review, and the agreement and correlation statistics over
//! the returned judgments.

pub mod analytics;
pub mod corpus;
pub mod demo;
pub mod error;
pub mod fsutil;
pub mod ontology;
pub mod scorer;
pub mod sheets;

pub use error::{Error, Result};
