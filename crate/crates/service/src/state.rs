//! Task lookup, submission rules and export, independent of HTTP.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use lexext_core::analytics::DecisionRecord;
use lexext_core::sheets::{BatchAssignment, Decision, Design, SetId, SUGGESTIONS_PER_ROW};
use serde::{Deserialize, Serialize};

use crate::decision_log::{DecisionLog, LogEntry, NewDecision};
use crate::error::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSuggestion {
    pub index: u8,
    pub class_id: String,
    pub class_url: String,
    /// Absent for batches that hide scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    /// The annotator's latest decision, if any.
    pub decision: Option<Decision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskItem {
    pub task_id: String,
    pub lemma: String,
    pub freq: u64,
    pub set_id: SetId,
    pub batch_number: u8,
    pub suggestions: Vec<TaskSuggestion>,
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentView {
    pub annotator_id: String,
    pub batch_number: u8,
    pub set_id: SetId,
    pub show_scores: bool,
    pub tasks: usize,
    pub decided: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SubmitRequest {
    pub annotator_id: String,
    pub task_id: String,
    pub suggestion_index: u8,
    pub decision: String,
    #[serde(default)]
    pub elapsed_ms: Option<u64>,
    #[serde(default)]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub seq: u64,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct ExportFilter {
    pub annotator: Option<String>,
    pub set: Option<String>,
    pub batch: Option<u8>,
}

/// `Set1-001` for the first row of Set1.
pub fn task_id(set: SetId, row: usize) -> String {
    format!("{set}-{:03}", row + 1)
}

pub struct AppState {
    design: Design,
    log: DecisionLog,
    tasks: HashMap<String, (SetId, usize)>,
}

/// Latest entry per (annotator, task, suggestion index).
pub fn latest(entries: &[LogEntry]) -> BTreeMap<(String, String, u8), &LogEntry> {
    let mut out = BTreeMap::new();
    for e in entries {
        out.insert(
            (
                e.annotator_id.clone(),
                e.task_id.clone(),
                e.suggestion_index,
            ),
            e,
        );
    }
    out
}

impl AppState {
    pub fn new(design: Design, log: DecisionLog) -> Result<Self, ServiceError> {
        design.validate()?;
        let mut tasks = HashMap::new();
        for s in &design.sets {
            for i in 0..s.rows.len() {
                tasks.insert(task_id(s.set_id, i), (s.set_id, i));
            }
        }
        Ok(AppState { design, log, tasks })
    }

    pub fn open(design_path: &Path, log_path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(design_path)
            .map_err(|e| ServiceError::Io(format!("{}: {e}", design_path.display())))?;
        let design = Design::from_json(&text, &design_path.display().to_string())?;
        AppState::new(design, DecisionLog::open(log_path)?)
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn log(&self) -> &DecisionLog {
        &self.log
    }

    fn assignment(&self, annotator_id: &str, batch: u8) -> Result<&BatchAssignment, ServiceError> {
        self.design.assignment(annotator_id, batch).ok_or_else(|| {
            ServiceError::NotFound(format!("no batch {batch} for annotator `{annotator_id}`"))
        })
    }

    pub fn assignments(&self) -> Vec<AssignmentView> {
        let snapshot = self.log.snapshot();
        let latest = latest(&snapshot);
        self.design
            .assignments
            .iter()
            .map(|a| {
                let set = self.design.set(a.set_id).expect("validated design");
                let prefix = format!("{}-", a.set_id);
                AssignmentView {
                    annotator_id: a.annotator_id.clone(),
                    batch_number: a.batch_number,
                    set_id: a.set_id,
                    show_scores: a.show_scores,
                    tasks: set.rows.len(),
                    decided: latest
                        .keys()
                        .filter(|(ann, task, _)| {
                            ann == &a.annotator_id && task.starts_with(&prefix)
                        })
                        .count(),
                }
            })
            .collect()
    }

    /// Items of the assigned set in sheet order. Scores are dropped here, not
    /// in the client, when the batch hides them.
    pub fn list_tasks(&self, annotator_id: &str, batch: u8) -> Result<Vec<TaskItem>, ServiceError> {
        let a = self.assignment(annotator_id, batch)?;
        let set = self.design.set(a.set_id).expect("validated design");
        let snapshot = self.log.snapshot();
        let latest = latest(&snapshot);
        Ok(set
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let id = task_id(set.set_id, i);
                let mut comment = None;
                let suggestions = row
                    .suggestions
                    .iter()
                    .enumerate()
                    .map(|(j, s)| {
                        let index = j as u8 + 1;
                        let entry = latest.get(&(annotator_id.to_string(), id.clone(), index));
                        if let Some(c) = entry.and_then(|e| e.comment.clone()) {
                            comment = Some(c);
                        }
                        TaskSuggestion {
                            index,
                            class_id: s.class_id.clone(),
                            class_url: self.design.url_template.instantiate(&s.class_id),
                            score: if a.show_scores { s.score } else { None },
                            decision: entry.map(|e| e.decision),
                        }
                    })
                    .collect();
                TaskItem {
                    task_id: id,
                    lemma: row.lemma.clone(),
                    freq: row.freq,
                    set_id: set.set_id,
                    batch_number: a.batch_number,
                    suggestions,
                    comment,
                }
            })
            .collect())
    }

    /// Validates and durably records one decision.
    pub fn submit(&self, req: SubmitRequest) -> Result<SubmitResponse, ServiceError> {
        let decision: Decision = req.decision.parse().map_err(|_| ServiceError::BadRequest {
            message: format!(
                "decision `{}` is not one of {}",
                req.decision,
                Decision::VOCABULARY.join(", ")
            ),
            allowed: Some(Decision::VOCABULARY.to_vec()),
        })?;
        if req.suggestion_index == 0 || req.suggestion_index as usize > SUGGESTIONS_PER_ROW {
            return Err(ServiceError::bad_request(format!(
                "suggestion_index {} outside 1..={SUGGESTIONS_PER_ROW}",
                req.suggestion_index
            )));
        }
        let &(set, _) = self
            .tasks
            .get(&req.task_id)
            .ok_or_else(|| ServiceError::NotFound(format!("unknown task `{}`", req.task_id)))?;
        if !self
            .design
            .assignments
            .iter()
            .any(|a| a.annotator_id == req.annotator_id)
        {
            return Err(ServiceError::NotFound(format!(
                "unknown annotator `{}`",
                req.annotator_id
            )));
        }
        if !self
            .design
            .assignments
            .iter()
            .any(|a| a.annotator_id == req.annotator_id && a.set_id == set)
        {
            return Err(ServiceError::Forbidden(format!(
                "task `{}` is not assigned to `{}`",
                req.task_id, req.annotator_id
            )));
        }
        let entry = self.log.append(NewDecision {
            annotator_id: req.annotator_id,
            task_id: req.task_id,
            suggestion_index: req.suggestion_index,
            decision,
            elapsed_ms: req.elapsed_ms,
            comment: req.comment,
        })?;
        Ok(SubmitResponse {
            seq: entry.seq,
            timestamp_ms: entry.timestamp_ms,
        })
    }

    pub fn export(&self, filter: &ExportFilter) -> Result<Vec<DecisionRecord>, ServiceError> {
        export_records(&self.design, &self.log.snapshot(), filter)
    }
}

/// Latest decision per (annotator, task, suggestion) joined with the design's
/// classifier score, ordered by set, lemma, suggestion index and annotator.
pub fn export_records(
    design: &Design,
    entries: &[LogEntry],
    filter: &ExportFilter,
) -> Result<Vec<DecisionRecord>, ServiceError> {
    let set_filter = match &filter.set {
        Some(s) => Some(
            s.parse::<SetId>()
                .map_err(|e| ServiceError::bad_request(e.to_string()))?,
        ),
        None => None,
    };
    let mut keyed = Vec::new();
    for ((annotator, task, index), e) in latest(entries) {
        if filter.annotator.as_ref().is_some_and(|a| a != &annotator) {
            continue;
        }
        let (set_id, row_no) = parse_task_id(&task).ok_or_else(|| {
            ServiceError::Log(format!("entry {} names malformed task `{task}`", e.seq))
        })?;
        let set = design
            .set(set_id)
            .ok_or_else(|| ServiceError::Log(format!("entry {} names unknown {set_id}", e.seq)))?;
        let row = set.rows.get(row_no).ok_or_else(|| {
            ServiceError::Log(format!("entry {} names unknown task `{task}`", e.seq))
        })?;
        let suggestion = row.suggestions.get(index as usize - 1).ok_or_else(|| {
            ServiceError::Log(format!("entry {} has suggestion index {index}", e.seq))
        })?;
        let assignment = design
            .assignments
            .iter()
            .find(|a| a.annotator_id == annotator && a.set_id == set_id)
            .ok_or_else(|| {
                ServiceError::Log(format!(
                    "entry {}: `{annotator}` not assigned {set_id}",
                    e.seq
                ))
            })?;
        if set_filter.is_some_and(|s| s != set_id)
            || filter.batch.is_some_and(|b| b != assignment.batch_number)
        {
            continue;
        }
        let score = suggestion.score.ok_or_else(|| {
            ServiceError::Internal(format!(
                "design lacks score for {}/{}",
                row.lemma, suggestion.class_id
            ))
        })?;
        keyed.push((
            (set_id, row.lemma.clone(), index, annotator.clone()),
            DecisionRecord {
                annotator_id: annotator,
                lemma: row.lemma.clone(),
                class_id: suggestion.class_id.clone(),
                decision: e.decision,
                classifier_score: score,
                set_id,
                batch_number: assignment.batch_number,
                scores_shown: assignment.show_scores,
                elapsed_ms: e.elapsed_ms,
                comment: e.comment.clone(),
            },
        ));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

fn parse_task_id(task: &str) -> Option<(SetId, usize)> {
    let (set, row) = task.rsplit_once('-')?;
    let row: usize = row.parse().ok()?;
    Some((set.parse().ok()?, row.checked_sub(1)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_ids_round_trip() {
        assert_eq!(task_id(SetId(2), 0), "Set2-001");
        assert_eq!(parse_task_id("Set2-001"), Some((SetId(2), 0)));
        assert_eq!(parse_task_id("Set2-000"), None);
        assert_eq!(parse_task_id("Set2"), None);
    }
}
