//! Scans a tagged corpus for verbs outside the ontology, scores every
//! occurrence with the trained model, and aggregates the scores per lemma.
//!
//! Sentences are processed in shards: occurrences inside a shard are scored
//! in parallel, then folded into the running sums in stream order, so the
//! result is bitwise identical to a sequential run. Progress can be
//! checkpointed and resumed.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{LemmaAggregate, ScoreAccumulator};
use super::reader::{CorpusReader, CorpusSentence, SentenceItem};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::scorer::{featurize, predict_scores, ModelParams};

/// Selects verb tokens by part-of-speech tag prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbFilter {
    pub tag_prefix: String,
}

impl Default for VerbFilter {
    fn default() -> Self {
        VerbFilter {
            tag_prefix: "V".into(),
        }
    }
}

impl VerbFilter {
    pub fn is_verb(&self, tag: &str) -> bool {
        tag.starts_with(&self.tag_prefix)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    pub sentence_id: u64,
    pub position: usize,
    pub lemma: String,
}

/// Positions of verbs in `sentence` whose lemma is not already known.
pub fn unseen_positions(
    sentence: &CorpusSentence,
    known: &BTreeSet<String>,
    filter: &VerbFilter,
) -> Vec<usize> {
    sentence
        .lemmas
        .iter()
        .zip(&sentence.tags)
        .enumerate()
        .filter(|(_, (lemma, tag))| filter.is_verb(tag) && !known.contains(*lemma))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanDiagnostics {
    pub sentences: u64,
    pub malformed: u64,
    pub occurrences: u64,
}

/// Streams unseen-verb occurrences in `(sentence_id, position)` order.
/// Malformed sentences are skipped, logged and counted in `diagnostics`.
pub fn scan_unseen<'a, R: BufRead + 'a>(
    reader: CorpusReader<R>,
    known: &'a BTreeSet<String>,
    filter: &'a VerbFilter,
    diagnostics: &'a mut ScanDiagnostics,
) -> impl Iterator<Item = Result<Occurrence>> + 'a {
    reader.flat_map(move |item| -> Vec<Result<Occurrence>> {
        match item {
            Err(e) => vec![Err(e)],
            Ok(SentenceItem::Malformed { sentence_id, line }) => {
                log::warn!("skipping malformed sentence {sentence_id} (line {line})");
                diagnostics.sentences += 1;
                diagnostics.malformed += 1;
                Vec::new()
            }
            Ok(SentenceItem::Sentence(s)) => {
                diagnostics.sentences += 1;
                let found: Vec<_> = unseen_positions(&s, known, filter)
                    .into_iter()
                    .map(|position| {
                        Ok(Occurrence {
                            sentence_id: s.sentence_id,
                            position,
                            lemma: s.lemmas[position].clone(),
                        })
                    })
                    .collect();
                diagnostics.occurrences += found.len() as u64;
                found
            }
        }
    })
}

pub const DEFAULT_CHECKPOINT_EVERY: u64 = 100_000;
const CHECKPOINT_VERSION: u32 = 1;

/// Resumable state: the last fully processed sentence and the partial sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCheckpoint {
    pub version: u32,
    pub num_classes: usize,
    pub dim: usize,
    pub high_water: Option<u64>,
    pub diagnostics: ScanDiagnostics,
    pub sums: BTreeMap<String, ScoreAccumulator>,
}

impl ScanCheckpoint {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fsutil::read_to_string(path)?;
        let ck: ScanCheckpoint =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported scan checkpoint version {}",
                ck.version
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        fsutil::write_atomic(path, &json)
    }
}

pub struct CorpusScorer<'m> {
    pub model: &'m ModelParams,
    pub known: BTreeSet<String>,
    pub filter: VerbFilter,
    pub shard_size: usize,
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_every: u64,
}

#[derive(Debug, Clone)]
pub struct ScanOutput {
    pub aggregates: Vec<LemmaAggregate>,
    pub diagnostics: ScanDiagnostics,
    /// Sums per lemma before averaging.
    pub sums: BTreeMap<String, ScoreAccumulator>,
}

impl<'m> CorpusScorer<'m> {
    pub fn new(model: &'m ModelParams, known: BTreeSet<String>) -> Self {
        CorpusScorer {
            model,
            known,
            filter: VerbFilter::default(),
            shard_size: 4096,
            checkpoint: None,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
        }
    }

    fn score_sentence(&self, s: &CorpusSentence) -> Result<Vec<(String, Vec<f64>)>> {
        unseen_positions(s, &self.known, &self.filter)
            .into_iter()
            .map(|pos| {
                let x = featurize(&s.tokens, pos, &s.lemmas[pos], self.model.dim)?;
                Ok((s.lemmas[pos].clone(), predict_scores(self.model, &x)?))
            })
            .collect()
    }

    fn fresh_state(&self) -> ScanCheckpoint {
        ScanCheckpoint {
            version: CHECKPOINT_VERSION,
            num_classes: self.model.num_classes,
            dim: self.model.dim,
            high_water: None,
            diagnostics: ScanDiagnostics::default(),
            sums: BTreeMap::new(),
        }
    }

    fn resume_state(&self) -> Result<ScanCheckpoint> {
        match &self.checkpoint {
            Some(path) if path.exists() => {
                let ck = ScanCheckpoint::load(path)?;
                if ck.num_classes != self.model.num_classes || ck.dim != self.model.dim {
                    return Err(Error::Checkpoint(format!(
                        "checkpoint {} was written for a different model shape",
                        path.display()
                    )));
                }
                log::info!("resuming corpus scan after sentence {:?}", ck.high_water);
                Ok(ck)
            }
            _ => Ok(self.fresh_state()),
        }
    }

    fn process_shard(&self, shard: &[CorpusSentence], state: &mut ScanCheckpoint) -> Result<()> {
        let scored: Vec<Vec<(String, Vec<f64>)>> = shard
            .par_iter()
            .map(|s| self.score_sentence(s))
            .collect::<Result<_>>()?;
        for (lemma, scores) in scored.into_iter().flatten() {
            state
                .sums
                .entry(lemma)
                .or_insert_with(|| ScoreAccumulator::new(self.model.num_classes))
                .add(&scores);
            state.diagnostics.occurrences += 1;
        }
        Ok(())
    }

    /// Runs the scan over `reader`, resuming from the checkpoint file when one exists.
    pub fn run<R: BufRead>(&self, reader: CorpusReader<R>) -> Result<ScanOutput> {
        let mut state = self.resume_state()?;
        let skip_through = state.high_water;
        let mut shard: Vec<CorpusSentence> = Vec::with_capacity(self.shard_size);
        let mut last_id: Option<u64> = None;
        let mut since_checkpoint = 0u64;

        for item in reader {
            let item = item?;
            let id = match &item {
                SentenceItem::Sentence(s) => s.sentence_id,
                SentenceItem::Malformed { sentence_id, .. } => *sentence_id,
            };
            if skip_through.is_some_and(|hw| id <= hw) {
                continue;
            }
            state.diagnostics.sentences += 1;
            last_id = Some(id);
            since_checkpoint += 1;
            match item {
                SentenceItem::Malformed { sentence_id, line } => {
                    log::warn!("skipping malformed sentence {sentence_id} (line {line})");
                    state.diagnostics.malformed += 1;
                }
                SentenceItem::Sentence(s) => shard.push(s),
            }
            if shard.len() >= self.shard_size
                || (self.checkpoint.is_some() && since_checkpoint >= self.checkpoint_every)
            {
                self.process_shard(&shard, &mut state)?;
                shard.clear();
                state.high_water = last_id;
                if let Some(path) = &self.checkpoint {
                    if since_checkpoint >= self.checkpoint_every {
                        state.save(path)?;
                        since_checkpoint = 0;
                    }
                }
            }
        }
        self.process_shard(&shard, &mut state)?;
        if last_id.is_some() {
            state.high_water = last_id;
        }
        if let Some(path) = &self.checkpoint {
            state.save(path)?;
        }

        let aggregates = state
            .sums
            .iter()
            .map(|(lemma, acc)| acc.finish(lemma.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScanOutput {
            aggregates,
            diagnostics: state.diagnostics,
            sums: state.sums,
        })
    }
}
