//! Streaming reader for tagged corpora.
//!
//! One token per line with at least three tab-separated columns
//! `token<TAB>lemma<TAB>pos` (extra columns ignored). Sentences are separated
//! by blank lines or delimited by `<s …>` / `</s>` tags as in vertical files;
//! other `<…>` structure tags and `#` comment lines are skipped.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSentence {
    /// Ordinal of the sentence in the stream, starting at 0.
    pub sentence_id: u64,
    pub tokens: Vec<String>,
    pub lemmas: Vec<String>,
    pub tags: Vec<String>,
}

impl CorpusSentence {
    pub fn is_well_formed(&self) -> bool {
        self.tokens.len() == self.lemmas.len() && self.tokens.len() == self.tags.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SentenceItem {
    Sentence(CorpusSentence),
    /// A sentence with a line lacking token/lemma/pos columns; `line` is the
    /// first offending line number (1-based).
    Malformed {
        sentence_id: u64,
        line: usize,
    },
}

pub struct CorpusReader<R> {
    input: R,
    source_name: String,
    line_no: usize,
    next_id: u64,
    buf: String,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(input: R, source_name: impl Into<String>) -> Self {
        CorpusReader {
            input,
            source_name: source_name.into(),
            line_no: 0,
            next_id: 0,
            buf: String::new(),
        }
    }

    fn read_sentence(&mut self) -> Result<Option<SentenceItem>> {
        let mut tokens = Vec::new();
        let mut lemmas = Vec::new();
        let mut tags = Vec::new();
        let mut bad_line: Option<usize> = None;
        let mut started = false;
        loop {
            self.buf.clear();
            let n = self
                .input
                .read_line(&mut self.buf)
                .map_err(|e| Error::io(&self.source_name, e))?;
            if n == 0 {
                break;
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() || line.starts_with("</s") {
                if started {
                    break;
                }
                continue;
            }
            if line.starts_with('<') || line.starts_with('#') {
                continue;
            }
            started = true;
            let mut cols = line.split('\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(t), Some(l), Some(p)) if !t.is_empty() && !l.is_empty() => {
                    tokens.push(t.to_string());
                    lemmas.push(l.to_string());
                    tags.push(p.to_string());
                }
                _ => {
                    bad_line.get_or_insert(self.line_no);
                }
            }
        }
        if !started {
            return Ok(None);
        }
        let sentence_id = self.next_id;
        self.next_id += 1;
        Ok(Some(match bad_line {
            Some(line) => SentenceItem::Malformed { sentence_id, line },
            None => SentenceItem::Sentence(CorpusSentence {
                sentence_id,
                tokens,
                lemmas,
                tags,
            }),
        }))
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<SentenceItem>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_sentence().transpose()
    }
}
