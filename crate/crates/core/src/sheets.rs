//! Annotator-facing suggestion sheets and the two-set, two-batch design.
//!
//! A sheet is a TSV file with the header
//!
//! ```text
//! Lemma  Freq  C1?  Class1  [Scor1]  …  C5?  Class5  [Scor5]  AnnotatorComment
//! ```
//!
//! `Cn?` holds one of the decision tokens `y`, `r_y`, `r_n`, `n` (or is empty
//! before annotation), `Classn` holds the class link, and the `Scorn` columns
//! exist only in sheets that show classifier scores.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ScoreFileRecord;
use crate::error::{Error, Result};

pub const SUGGESTIONS_PER_ROW: usize = 5;
pub const DEFAULT_SET_SIZE: usize = 100;
pub const DEFAULT_URL_TEMPLATE: &str =
    "https://lindat.cz/services/SynSemClass40/SynSemClass40.html#{class}";
const PLACEHOLDER: &str = "{class}";

/// Four-way membership judgment, `no = 0` … `yes = 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Decision {
    No = 0,
    RatherNo = 1,
    RatherYes = 2,
    Yes = 3,
}

impl Decision {
    pub const ALL: [Decision; 4] = [
        Decision::Yes,
        Decision::RatherYes,
        Decision::RatherNo,
        Decision::No,
    ];
    pub const VOCABULARY: [&'static str; 4] = ["y", "r_y", "r_n", "n"];

    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: u8) -> Option<Self> {
        match v {
            0 => Some(Decision::No),
            1 => Some(Decision::RatherNo),
            2 => Some(Decision::RatherYes),
            3 => Some(Decision::Yes),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Decision::Yes => "y",
            Decision::RatherYes => "r_y",
            Decision::RatherNo => "r_n",
            Decision::No => "n",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "y" => Ok(Decision::Yes),
            "r_y" => Ok(Decision::RatherYes),
            "r_n" => Ok(Decision::RatherNo),
            "n" => Ok(Decision::No),
            other => Err(Error::Invalid(format!(
                "decision `{other}` not in vocabulary {}",
                Decision::VOCABULARY.join("/")
            ))),
        }
    }
}

impl TryFrom<String> for Decision {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Decision> for String {
    fn from(d: Decision) -> String {
        d.token().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub class_id: String,
    pub score: Option<f64>,
    pub decision: Option<Decision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionRow {
    pub lemma: String,
    pub freq: u64,
    pub suggestions: Vec<Suggestion>,
    pub comment: String,
}

/// Identifier of a lemma set, displayed as `Set1`, `Set2`, ….
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SetId(pub u32);

impl fmt::Display for SetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Set{}", self.0)
    }
}

impl FromStr for SetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix("Set")
            .and_then(|n| n.parse().ok())
            .map(SetId)
            .ok_or_else(|| Error::Invalid(format!("bad set id `{s}`")))
    }
}

impl TryFrom<String> for SetId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SetId> for String {
    fn from(s: SetId) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub set_id: SetId,
    pub rows: Vec<SuggestionRow>,
    pub sampling_seed: u64,
}

impl AnnotationSet {
    pub fn decision_cells(&self) -> usize {
        self.rows.iter().map(|r| r.suggestions.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchAssignment {
    pub annotator_id: String,
    pub batch_number: u8,
    pub set_id: SetId,
    pub show_scores: bool,
}

impl BatchAssignment {
    /// Sheet file name, `<annotator>-<batch>.tsv`.
    pub fn file_name(&self) -> String {
        format!("{}-{}.tsv", self.annotator_id, self.batch_number)
    }
}

/// First five suggestions of a score record, order preserved.
pub fn top5(record: &ScoreFileRecord) -> Result<Vec<Suggestion>> {
    if record.top.len() < SUGGESTIONS_PER_ROW {
        return Err(Error::Invalid(format!(
            "lemma `{}` has {} scored classes, {SUGGESTIONS_PER_ROW} needed",
            record.lemma,
            record.top.len()
        )));
    }
    Ok(record.top[..SUGGESTIONS_PER_ROW]
        .iter()
        .map(|c| Suggestion {
            class_id: c.class_id().to_string(),
            score: Some(c.score),
            decision: None,
        })
        .collect())
}

pub fn suggestion_row(record: &ScoreFileRecord) -> Result<SuggestionRow> {
    Ok(SuggestionRow {
        lemma: record.lemma.clone(),
        freq: record.freq,
        suggestions: top5(record)?,
        comment: String::new(),
    })
}

/// Draws `n_sets` pairwise disjoint sets of `size` lemmas, uniformly without
/// replacement. Rows keep the draw order.
pub fn sample_sets(
    pool: &[ScoreFileRecord],
    n_sets: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<AnnotationSet>> {
    let needed = n_sets * size;
    let distinct: HashSet<&str> = pool.iter().map(|r| r.lemma.as_str()).collect();
    if distinct.len() != pool.len() {
        return Err(Error::Invalid("lemma pool contains duplicates".into()));
    }
    if pool.len() < needed {
        return Err(Error::Invalid(format!(
            "lemma pool of {} too small for {n_sets} sets of {size}",
            pool.len()
        )));
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.partial_shuffle(&mut rng, needed);
    order
        .chunks(size)
        .take(n_sets)
        .enumerate()
        .map(|(i, idx)| {
            Ok(AnnotationSet {
                set_id: SetId(i as u32 + 1),
                rows: idx
                    .iter()
                    .map(|&j| suggestion_row(&pool[j]))
                    .collect::<Result<_>>()?,
                sampling_seed: seed,
            })
        })
        .collect()
}

/// Two annotators, two sets: each annotator sees one set without scores
/// first and the other set with scores second.
pub fn cross_assign(sets: &[SetId], annotators: &[String]) -> Result<Vec<BatchAssignment>> {
    if sets.len() != 2 || annotators.len() != 2 {
        return Err(Error::Invalid(format!(
            "cross assignment needs exactly two sets and two annotators, got {} and {}",
            sets.len(),
            annotators.len()
        )));
    }
    let mut out = Vec::with_capacity(4);
    for (a, annotator) in annotators.iter().enumerate() {
        for batch in 1..=2u8 {
            let set = sets[(a + batch as usize - 1) % 2];
            out.push(BatchAssignment {
                annotator_id: annotator.clone(),
                batch_number: batch,
                set_id: set,
                show_scores: batch == 2,
            });
        }
    }
    Ok(out)
}

/// Class link template containing a `{class}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct UrlTemplate {
    prefix: String,
    suffix: String,
}

impl UrlTemplate {
    pub fn new(template: &str) -> Result<Self> {
        let (prefix, suffix) = template.split_once(PLACEHOLDER).ok_or_else(|| {
            Error::Invalid(format!(
                "URL template `{template}` lacks the {PLACEHOLDER} placeholder"
            ))
        })?;
        if suffix.contains(PLACEHOLDER) {
            return Err(Error::Invalid(format!(
                "URL template `{template}` has more than one placeholder"
            )));
        }
        Ok(UrlTemplate {
            prefix: prefix.to_string(),
            suffix: suffix.to_string(),
        })
    }

    pub fn instantiate(&self, class_id: &str) -> String {
        format!("{}{}{}", self.prefix, class_id, self.suffix)
    }

    /// Recovers the class id from a link produced by [`UrlTemplate::instantiate`].
    pub fn extract<'a>(&self, url: &'a str) -> Option<&'a str> {
        url.strip_prefix(self.prefix.as_str())?
            .strip_suffix(self.suffix.as_str())
            .filter(|id| !id.is_empty())
    }
}

impl Default for UrlTemplate {
    fn default() -> Self {
        UrlTemplate::new(DEFAULT_URL_TEMPLATE).expect("default template")
    }
}

impl fmt::Display for UrlTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{PLACEHOLDER}{}", self.prefix, self.suffix)
    }
}

impl TryFrom<String> for UrlTemplate {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        UrlTemplate::new(&s)
    }
}

impl From<UrlTemplate> for String {
    fn from(t: UrlTemplate) -> String {
        t.to_string()
    }
}

pub fn header(show_scores: bool) -> Vec<String> {
    let mut cols = vec!["Lemma".to_string(), "Freq".to_string()];
    for n in 1..=SUGGESTIONS_PER_ROW {
        cols.push(format!("C{n}?"));
        cols.push(format!("Class{n}"));
        if show_scores {
            cols.push(format!("Scor{n}"));
        }
    }
    cols.push("AnnotatorComment".to_string());
    cols
}

fn clean_cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn render_rows(rows: &[SuggestionRow], show_scores: bool, url: &UrlTemplate) -> Result<String> {
    let mut out = header(show_scores).join("\t");
    out.push('\n');
    for row in rows {
        if row.suggestions.len() != SUGGESTIONS_PER_ROW {
            return Err(Error::Invalid(format!(
                "row `{}` has {} suggestions",
                row.lemma,
                row.suggestions.len()
            )));
        }
        let mut cells = vec![row.lemma.clone(), row.freq.to_string()];
        for s in &row.suggestions {
            cells.push(
                s.decision
                    .map(|d| d.token().to_string())
                    .unwrap_or_default(),
            );
            cells.push(url.instantiate(&s.class_id));
            if show_scores {
                let score = s.score.ok_or_else(|| {
                    Error::Invalid(format!("row `{}` lacks a score to show", row.lemma))
                })?;
                cells.push(format!("{score:.6}"));
            }
        }
        cells.push(clean_cell(&row.comment));
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    Ok(out)
}

pub fn render_sheet(set: &AnnotationSet, show_scores: bool, url: &UrlTemplate) -> Result<String> {
    render_rows(&set.rows, show_scores, url)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSheet {
    pub show_scores: bool,
    pub rows: Vec<SuggestionRow>,
}

pub fn parse_sheet(text: &str, url: &UrlTemplate, source_name: &str) -> Result<ParsedSheet> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines
        .next()
        .ok_or_else(|| Error::parse(source_name, 1, "empty sheet"))?;
    let head: Vec<&str> = head.split('\t').collect();
    let show_scores = if head == header(true) {
        true
    } else if head == header(false) {
        false
    } else {
        return Err(Error::parse(source_name, 1, "unrecognized sheet header"));
    };
    let width = head.len();
    let per = if show_scores { 3 } else { 2 };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::parse(source_name, lineno, m);
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != width {
            return Err(err(format!(
                "expected {width} cells, found {}",
                cells.len()
            )));
        }
        let mut suggestions = Vec::with_capacity(SUGGESTIONS_PER_ROW);
        for n in 0..SUGGESTIONS_PER_ROW {
            let base = 2 + n * per;
            let decision = match cells[base].trim() {
                "" => None,
                tok => Some(tok.parse::<Decision>().map_err(|e| err(e.to_string()))?),
            };
            let class_id = url.extract(cells[base + 1]).ok_or_else(|| {
                err(format!(
                    "class cell `{}` does not match the URL template",
                    cells[base + 1]
                ))
            })?;
            let score = if show_scores {
                Some(
                    cells[base + 2]
                        .parse::<f64>()
                        .map_err(|_| err(format!("bad score `{}`", cells[base + 2])))?,
                )
            } else {
                None
            };
            suggestions.push(Suggestion {
                class_id: class_id.to_string(),
                score,
                decision,
            });
        }
        rows.push(SuggestionRow {
            lemma: cells[0].to_string(),
            freq: cells[1]
                .parse()
                .map_err(|_| err(format!("bad frequency `{}`", cells[1])))?,
            suggestions,
            comment: cells[width - 1].to_string(),
        });
    }
    Ok(ParsedSheet { show_scores, rows })
}

/// Everything needed to render, serve and ingest one annotation round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub url_template: UrlTemplate,
    pub seed: u64,
    pub sets: Vec<AnnotationSet>,
    pub assignments: Vec<BatchAssignment>,
}

impl Design {
    /// Samples two sets from the scored pool and cross-assigns them.
    pub fn build(
        pool: &[ScoreFileRecord],
        annotators: &[String],
        set_size: usize,
        seed: u64,
        url_template: UrlTemplate,
    ) -> Result<Self> {
        let sets = sample_sets(pool, 2, set_size, seed)?;
        let ids: Vec<SetId> = sets.iter().map(|s| s.set_id).collect();
        let assignments = cross_assign(&ids, annotators)?;
        Ok(Design {
            url_template,
            seed,
            sets,
            assignments,
        })
    }

    pub fn set(&self, id: SetId) -> Option<&AnnotationSet> {
        self.sets.iter().find(|s| s.set_id == id)
    }

    pub fn assignment(&self, annotator_id: &str, batch_number: u8) -> Option<&BatchAssignment> {
        self.assignments
            .iter()
            .find(|a| a.annotator_id == annotator_id && a.batch_number == batch_number)
    }

    /// Checks that every assignment points at a known set and that no
    /// (annotator, batch) pair is assigned twice.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for a in &self.assignments {
            if self.set(a.set_id).is_none() {
                return Err(Error::Invalid(format!(
                    "assignment {}-{} names unknown {}",
                    a.annotator_id, a.batch_number, a.set_id
                )));
            }
            if !seen.insert((a.annotator_id.as_str(), a.batch_number)) {
                return Err(Error::Invalid(format!(
                    "{}-{} assigned twice",
                    a.annotator_id, a.batch_number
                )));
            }
        }
        for s in &self.sets {
            for r in &s.rows {
                if r.suggestions.len() != SUGGESTIONS_PER_ROW
                    || r.suggestions.iter().any(|x| x.score.is_none())
                {
                    return Err(Error::Invalid(format!(
                        "{} row `{}` needs {SUGGESTIONS_PER_ROW} scored suggestions",
                        s.set_id, r.lemma
                    )));
                }
            }
        }
        Ok(())
    }

    /// Blank sheet per assignment, as `(file name, contents)`.
    pub fn render_sheets(&self) -> Result<Vec<(String, String)>> {
        self.assignments
            .iter()
            .map(|a| {
                let set = self
                    .set(a.set_id)
                    .ok_or_else(|| Error::Invalid(format!("unknown {}", a.set_id)))?;
                Ok((
                    a.file_name(),
                    render_sheet(set, a.show_scores, &self.url_template)?,
                ))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("design serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, source_name: &str) -> Result<Self> {
        let d: Design = serde_json::from_str(text)
            .map_err(|e| Error::parse(source_name, e.line(), e.to_string()))?;
        d.validate()?;
        Ok(d)
    }
}
