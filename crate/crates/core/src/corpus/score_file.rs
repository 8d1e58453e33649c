//! Per-lemma score file, one lemma per line:
//!
//! ```text
//! lemma freq-in-data max-score class-1 score-1 ... class-10 score-10
//! ```
//!
//! Whitespace separated, scores with six decimals, lines ordered by
//! descending max score. Inventories with fewer than ten classes list all of
//! them and announce the count in a leading `# top-n: N` comment.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::aggregate::LemmaAggregate;
use crate::error::{Error, Result};
use crate::ontology::ClassInventory;

pub const TOP_N: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredClass {
    /// Whitespace-free class token, `id/display_name`.
    pub class: String,
    pub score: f64,
}

impl ScoredClass {
    pub fn class_id(&self) -> &str {
        crate::ontology::id_from_token(&self.class)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFileRecord {
    pub lemma: String,
    pub freq: u64,
    pub max_score: f64,
    pub top: Vec<ScoredClass>,
}

/// Rounds to the six decimals the file carries.
pub fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

impl ScoreFileRecord {
    /// Best `min(10, K)` classes by score (rounded to six decimals), ties by ascending class id.
    pub fn from_aggregate(agg: &LemmaAggregate, inventory: &ClassInventory) -> Result<Self> {
        if agg.class_scores.len() != inventory.len() {
            return Err(Error::DimensionMismatch {
                expected: inventory.len(),
                actual: agg.class_scores.len(),
            });
        }
        let mut ranked: Vec<(f64, &crate::ontology::ClassId)> = agg
            .class_scores
            .iter()
            .zip(inventory.classes())
            .map(|(&s, c)| (round6(s), c))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
        ranked.truncate(TOP_N.min(inventory.len()));
        let top: Vec<ScoredClass> = ranked
            .into_iter()
            .map(|(score, c)| ScoredClass {
                class: c.token(),
                score,
            })
            .collect();
        Ok(ScoreFileRecord {
            lemma: agg.lemma.clone(),
            freq: agg.freq,
            max_score: top[0].score,
            top,
        })
    }

    pub fn line(&self) -> String {
        let mut s = format!("{} {} {:.6}", self.lemma, self.freq, self.max_score);
        for c in &self.top {
            s.push_str(&format!(" {} {:.6}", c.class, c.score));
        }
        s
    }

    fn check(&self, expected_pairs: usize) -> std::result::Result<(), String> {
        if self.top.len() != expected_pairs {
            return Err(format!(
                "expected {expected_pairs} class/score pairs, found {}",
                self.top.len()
            ));
        }
        if self.top.first().map(|c| c.score) != Some(self.max_score) {
            return Err("max-score differs from the first class score".into());
        }
        if self.top.windows(2).any(|w| w[1].score > w[0].score) {
            return Err("class scores are not in descending order".into());
        }
        if self.top.iter().any(|c| !(0.0..=1.0).contains(&c.score)) {
            return Err("score outside [0, 1]".into());
        }
        Ok(())
    }
}

/// Builds records for all lemmas, ordered by descending max score then lemma.
pub fn build_records(
    aggregates: &[LemmaAggregate],
    inventory: &ClassInventory,
) -> Result<Vec<ScoreFileRecord>> {
    for c in inventory.classes() {
        if c.display_name.chars().any(char::is_whitespace) {
            log::warn!(
                "class {} display name `{}` contains whitespace; joined with `_` in score file",
                c.id,
                c.display_name
            );
        }
    }
    let mut records = aggregates
        .iter()
        .map(|a| ScoreFileRecord::from_aggregate(a, inventory))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        b.max_score
            .total_cmp(&a.max_score)
            .then_with(|| a.lemma.cmp(&b.lemma))
    });
    Ok(records)
}

pub fn emit(records: &[ScoreFileRecord], num_classes: usize) -> String {
    let mut out = String::new();
    if num_classes < TOP_N {
        out.push_str(&format!("# top-n: {num_classes}\n"));
    }
    for r in records {
        out.push_str(&r.line());
        out.push('\n');
    }
    out
}

pub fn emit_score_file(
    aggregates: &[LemmaAggregate],
    inventory: &ClassInventory,
) -> Result<String> {
    Ok(emit(
        &build_records(aggregates, inventory)?,
        inventory.len(),
    ))
}

pub fn parse(text: &str, source_name: &str) -> Result<Vec<ScoreFileRecord>> {
    let mut pairs = TOP_N;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let err = |m: String| Error::parse(source_name, lineno, m);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("top-n:") {
                pairs = n
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad top-n header `{line}`")))?;
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 5 || !(fields.len() - 3).is_multiple_of(2) {
            return Err(err(format!("unexpected field count {}", fields.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| err(format!("bad score `{s}`")))
        };
        let record = ScoreFileRecord {
            lemma: fields[0].to_string(),
            freq: fields[1]
                .parse()
                .map_err(|_| err(format!("bad frequency `{}`", fields[1])))?,
            max_score: num(fields[2])?,
            top: fields[3..]
                .chunks(2)
                .map(|p| {
                    Ok(ScoredClass {
                        class: p[0].to_string(),
                        score: num(p[1])?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        };
        record.check(pairs).map_err(err)?;
        if !seen.insert(record.lemma.clone()) {
            return Err(err(format!("duplicate lemma `{}`", record.lemma)));
        }
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::ClassId;

    fn inventory(k: usize) -> ClassInventory {
        ClassInventory::new(
            (0..k)
                .map(|i| ClassId::new(format!("vec{:05}", 591 + i), format!("c{i}")).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn line_layout() {
        let inv = inventory(12);
        let mut scores = vec![0.01; 12];
        scores[0] = 0.912345;
        scores[3] = 0.5;
        let agg = LemmaAggregate {
            lemma: "absolvovat".into(),
            freq: 41,
            class_scores: scores,
        };
        let text = emit_score_file(&[agg], &inv).unwrap();
        assert!(text.starts_with(
            "absolvovat 41 0.912345 vec00591/c0 0.912345 vec00594/c3 0.500000 vec00592/c1 0.010000"
        ));
        assert_eq!(text.lines().next().unwrap().split_whitespace().count(), 23);
    }

    #[test]
    fn ties_by_ascending_id() {
        let inv = ClassInventory::new(vec![
            ClassId::new("vec2", "b").unwrap(),
            ClassId::new("vec1", "a").unwrap(),
            ClassId::new("vec3", "c").unwrap(),
        ])
        .unwrap();
        let agg = LemmaAggregate {
            lemma: "x".into(),
            freq: 1,
            class_scores: vec![0.4, 0.4, 0.9],
        };
        let r = ScoreFileRecord::from_aggregate(&agg, &inv).unwrap();
        let ids: Vec<&str> = r.top.iter().map(|c| c.class_id()).collect();
        assert_eq!(ids, vec!["vec3", "vec1", "vec2"]);
    }

    #[test]
    fn small_inventory_header() {
        let inv = inventory(3);
        let agg = LemmaAggregate {
            lemma: "x".into(),
            freq: 2,
            class_scores: vec![0.1, 0.2, 0.3],
        };
        let text = emit_score_file(&[agg], &inv).unwrap();
        assert!(text.starts_with("# top-n: 3\nx 2 0.300000 "));
        let parsed = parse(&text, "t").unwrap();
        assert_eq!(parsed[0].top.len(), 3);
        assert_eq!(emit(&parsed, 3), text);
    }

    #[test]
    fn lemmas_sorted_by_max_score() {
        let inv = inventory(10);
        let mk = |l: &str, s: f64| LemmaAggregate {
            lemma: l.into(),
            freq: 1,
            class_scores: vec![s; 10],
        };
        let recs = build_records(&[mk("a", 0.2), mk("b", 0.9), mk("c", 0.5)], &inv).unwrap();
        let order: Vec<&str> = recs.iter().map(|r| r.lemma.as_str()).collect();
        assert_eq!(order, vec!["b", "c", "a"]);
    }

    #[test]
    fn parse_rejects_bad_lines() {
        let good = "x 1 0.5 a 0.5 b 0.4 c 0.3 d 0.2 e 0.1 f 0.1 g 0.1 h 0.1 i 0.1 j 0.0\n";
        assert_eq!(parse(good, "t").unwrap().len(), 1);
        let unsorted = good.replace("b 0.4", "b 0.6");
        assert!(parse(&unsorted, "t")
            .unwrap_err()
            .to_string()
            .contains("descending"));
        let short = "x 1 0.5 a 0.5\n";
        assert!(parse(short, "t")
            .unwrap_err()
            .to_string()
            .starts_with("t:1:"));
    }
}
