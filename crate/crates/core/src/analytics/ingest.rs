//! Turns completed sheets into decision records.

use crate::error::{Error, Result};
use crate::sheets::{BatchAssignment, Design, ParsedSheet};

use super::records::DecisionRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SheetIngest {
    pub records: Vec<DecisionRecord>,
    /// Decision cells left empty by the annotator.
    pub blank_cells: usize,
}

/// Joins a completed sheet with its design rows. Lemma and class columns
/// must match the design exactly; the classifier score always comes from the
/// design, whether or not the sheet showed it.
pub fn ingest_sheet(
    design: &Design,
    assignment: &BatchAssignment,
    sheet: &ParsedSheet,
    source_name: &str,
) -> Result<SheetIngest> {
    let set = design
        .set(assignment.set_id)
        .ok_or_else(|| Error::Invalid(format!("{source_name}: unknown {}", assignment.set_id)))?;
    if sheet.show_scores != assignment.show_scores {
        return Err(Error::Invalid(format!(
            "{source_name}: score columns {} but the batch is assigned {}",
            if sheet.show_scores {
                "present"
            } else {
                "absent"
            },
            if assignment.show_scores {
                "with scores"
            } else {
                "without scores"
            }
        )));
    }
    if sheet.rows.len() != set.rows.len() {
        return Err(Error::Invalid(format!(
            "{source_name}: {} rows, {} expects {}",
            sheet.rows.len(),
            set.set_id,
            set.rows.len()
        )));
    }
    let mut records = Vec::new();
    let mut blank_cells = 0;
    for (i, (got, want)) in sheet.rows.iter().zip(&set.rows).enumerate() {
        if got.lemma != want.lemma {
            return Err(Error::parse(
                source_name,
                i + 2,
                format!("lemma `{}` where `{}` expected", got.lemma, want.lemma),
            ));
        }
        for (g, w) in got.suggestions.iter().zip(&want.suggestions) {
            if g.class_id != w.class_id {
                return Err(Error::parse(
                    source_name,
                    i + 2,
                    format!("class `{}` where `{}` expected", g.class_id, w.class_id),
                ));
            }
            let Some(decision) = g.decision else {
                blank_cells += 1;
                continue;
            };
            let score = w.score.ok_or_else(|| {
                Error::Invalid(format!(
                    "design lacks a score for {}/{}",
                    want.lemma, w.class_id
                ))
            })?;
            records.push(DecisionRecord {
                annotator_id: assignment.annotator_id.clone(),
                lemma: want.lemma.clone(),
                class_id: w.class_id.clone(),
                decision,
                classifier_score: score,
                set_id: set.set_id,
                batch_number: assignment.batch_number,
                scores_shown: assignment.show_scores,
                elapsed_ms: None,
                comment: (!got.comment.is_empty()).then(|| got.comment.clone()),
            });
        }
    }
    Ok(SheetIngest {
        records,
        blank_cells,
    })
}
