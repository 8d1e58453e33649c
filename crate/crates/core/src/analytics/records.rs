//! Decision records: one annotator's judgment on one lemma-class pair, joined
//! with the classifier score for that pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sheets::{Decision, SetId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub annotator_id: String,
    pub lemma: String,
    pub class_id: String,
    pub decision: Decision,
    pub classifier_score: f64,
    pub set_id: SetId,
    pub batch_number: u8,
    pub scores_shown: bool,
    pub elapsed_ms: Option<u64>,
    pub comment: Option<String>,
}

pub const HEADER: &str =
    "annotator\tset\tbatch\tscores_shown\tlemma\tclass_id\tdecision\tclassifier_score\telapsed_ms\tcomment";

impl DecisionRecord {
    pub fn tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{}\t{}",
            self.annotator_id,
            self.set_id,
            self.batch_number,
            self.scores_shown,
            self.lemma,
            self.class_id,
            self.decision,
            self.classifier_score,
            self.elapsed_ms.map(|v| v.to_string()).unwrap_or_default(),
            self.comment
                .as_deref()
                .unwrap_or("")
                .replace(['\t', '\n', '\r'], " "),
        )
    }
}

pub fn to_tsv(records: &[DecisionRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.tsv_line());
        out.push('\n');
    }
    out
}

pub fn parse_tsv(text: &str, source_name: &str) -> Result<Vec<DecisionRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(Error::parse(source_name, 1, "missing decision file header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::parse(source_name, i + 1, m);
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 10 {
            return Err(err(format!("expected 10 columns, found {}", f.len())));
        }
        let score: f64 = f[7]
            .parse()
            .map_err(|_| err(format!("bad score `{}`", f[7])))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(err(format!("score {score} outside [0, 1]")));
        }
        out.push(DecisionRecord {
            annotator_id: f[0].to_string(),
            set_id: f[1].parse().map_err(|e: Error| err(e.to_string()))?,
            batch_number: f[2]
                .parse()
                .map_err(|_| err(format!("bad batch `{}`", f[2])))?,
            scores_shown: f[3]
                .parse()
                .map_err(|_| err(format!("bad flag `{}`", f[3])))?,
            lemma: f[4].to_string(),
            class_id: f[5].to_string(),
            decision: f[6].parse().map_err(|e: Error| err(e.to_string()))?,
            classifier_score: score,
            elapsed_ms: if f[8].is_empty() {
                None
            } else {
                Some(
                    f[8].parse()
                        .map_err(|_| err(format!("bad elapsed `{}`", f[8])))?,
                )
            },
            comment: Some(f[9].to_string()).filter(|c| !c.is_empty()),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip() {
        let r = DecisionRecord {
            annotator_id: "A1".into(),
            lemma: "absolvovat".into(),
            class_id: "vec00591".into(),
            decision: Decision::RatherYes,
            classifier_score: 0.912345,
            set_id: SetId(1),
            batch_number: 1,
            scores_shown: false,
            elapsed_ms: Some(2100),
            comment: Some("hm".into()),
        };
        let mut r2 = r.clone();
        r2.elapsed_ms = None;
        r2.comment = None;
        let text = to_tsv(&[r.clone(), r2.clone()]);
        assert_eq!(parse_tsv(&text, "d").unwrap(), vec![r, r2]);
    }

    #[test]
    fn header_required() {
        assert!(parse_tsv("A1\tSet1\n", "d").is_err());
    }
}
