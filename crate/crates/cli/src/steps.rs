//! One function per pipeline stage. Each validates its inputs before doing
//! any work and writes its outputs through [`Outputs`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lexext_core::analytics::{self, records, DecisionRecord, Report};
use lexext_core::corpus::{self, CorpusReader, CorpusScorer, ScanDiagnostics, VerbFilter};
use lexext_core::demo::{self, AnnotatorProfile, DemoConfig, Truth};
use lexext_core::fsutil::read_to_string;
use lexext_core::ontology::{
    known_lemmas, load_examples, stratified_split, ClassInventory, SplitAssignment, SplitRatios,
};
use lexext_core::scorer::{self, Checkpoint, EpochLog, TrainConfig};
use lexext_core::sheets::{parse_sheet, render_rows, Design, UrlTemplate};
use lexext_service::decision_log::read_log;
use lexext_service::state::{export_records, ExportFilter};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{input_dir, input_file, Outputs};

pub const MINUTES_FILE: &str = "batch_minutes.tsv";

pub fn demo_data(out_dir: &Path, config: &DemoConfig) -> Result<Vec<PathBuf>> {
    let world = demo::generate(config)?;
    let mut out = Outputs::new();
    out.write(&out_dir.join("inventory.tsv"), world.inventory.to_tsv())?;
    let mut examples = String::from("sentence\ttarget_position\ttarget_lemma\tgold_class\n");
    for e in &world.examples {
        examples.push_str(&e.tsv_line());
        examples.push('\n');
    }
    out.write(&out_dir.join("examples.tsv"), examples)?;
    out.write(&out_dir.join("corpus.vert"), &world.corpus)?;
    out.write(&out_dir.join("truth.tsv"), world.truth.to_tsv())?;
    let run = RunConfig {
        paths: crate::config::Paths {
            inventory: Some("inventory.tsv".into()),
            examples: Some("examples.tsv".into()),
            corpus: Some("corpus.vert".into()),
            truth: Some("truth.tsv".into()),
            out_dir: Some("out".into()),
            ..Default::default()
        },
        train: demo::demo_train_config(),
        ..Default::default()
    };
    out.write(&out_dir.join("lexext.toml"), run.to_toml())?;
    Ok(out.commit())
}

pub fn split(
    inventory: &Path,
    examples: &Path,
    ratios: SplitRatios,
    seed: u64,
    out_path: &Path,
) -> Result<SplitAssignment> {
    input_file(inventory)?;
    input_file(examples)?;
    let inv = ClassInventory::load(inventory)?;
    let ex = load_examples(examples, &inv)?;
    let assignment = stratified_split(&ex, &inv, ratios, seed)?;
    let mut out = Outputs::new();
    out.write(out_path, serde_json::to_string(&assignment)? + "\n")?;
    out.commit();
    Ok(assignment)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub epochs: Vec<EpochLog>,
    pub total_steps: u64,
    pub clamp_events: usize,
    pub test_accuracy: Option<f64>,
}

pub fn train(
    inventory: &Path,
    examples: &Path,
    split_path: &Path,
    config: &TrainConfig,
    model_out: &Path,
) -> Result<TrainSummary> {
    input_file(inventory)?;
    input_file(examples)?;
    input_file(split_path)?;
    config.validate()?;
    let inv = ClassInventory::load(inventory)?;
    let ex = load_examples(examples, &inv)?;
    let split: SplitAssignment = serde_json::from_str(&read_to_string(split_path)?)
        .with_context(|| format!("parsing split {}", split_path.display()))?;
    let outcome = scorer::train(&ex, &split, &inv, config)?;
    let test_accuracy = scorer::evaluate(&outcome.model, &ex, &split.test, &inv)?;
    let summary = TrainSummary {
        epochs: outcome.epochs,
        total_steps: outcome.total_steps,
        clamp_events: outcome.clamp_events,
        test_accuracy,
    };
    let ck = Checkpoint {
        model: outcome.model,
        config: config.clone(),
        class_ids: inv.classes().iter().map(|c| c.id.clone()).collect(),
    };
    let mut out = Outputs::new();
    ck.save(model_out)?;
    out.track(model_out);
    out.write(
        &model_out.with_extension("log.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    out.commit();
    Ok(summary)
}

pub struct ScoreCorpusArgs<'a> {
    pub inventory: &'a Path,
    pub examples: &'a Path,
    pub model: &'a Path,
    pub corpus: &'a Path,
    pub out: &'a Path,
    pub verb_prefix: &'a str,
    pub checkpoint: Option<&'a Path>,
}

pub fn score_corpus(a: &ScoreCorpusArgs) -> Result<ScanDiagnostics> {
    for p in [a.inventory, a.examples, a.model, a.corpus] {
        input_file(p)?;
    }
    let inv = ClassInventory::load(a.inventory)?;
    let known = known_lemmas(&load_examples(a.examples, &inv)?);
    let ck = Checkpoint::load(a.model)?;
    let ids: Vec<&str> = inv.classes().iter().map(|c| c.id.as_str()).collect();
    if ck.class_ids != ids {
        bail!(
            "model {} was trained on a different class inventory",
            a.model.display()
        );
    }
    let mut scorer = CorpusScorer::new(&ck.model, known);
    scorer.filter = VerbFilter {
        tag_prefix: a.verb_prefix.to_string(),
    };
    scorer.checkpoint = a.checkpoint.map(Path::to_path_buf);
    let file = File::open(a.corpus).with_context(|| format!("opening {}", a.corpus.display()))?;
    let reader = CorpusReader::new(BufReader::new(file), a.corpus.display().to_string());
    let scan = scorer.run(reader)?;
    let text = corpus::emit_score_file(&scan.aggregates, &inv)?;
    let mut out = Outputs::new();
    out.write(a.out, text)?;
    out.commit();
    if let Some(ck) = a.checkpoint {
        let _ = std::fs::remove_file(ck);
    }
    Ok(scan.diagnostics)
}

pub fn make_sheets(
    scores: &Path,
    out_dir: &Path,
    annotators: &[String],
    set_size: usize,
    seed: u64,
    url: UrlTemplate,
) -> Result<Design> {
    input_file(scores)?;
    let pool = corpus::score_file::parse(&read_to_string(scores)?, &scores.display().to_string())?;
    let design = Design::build(&pool, annotators, set_size, seed, url)?;
    let mut out = Outputs::new();
    out.write(&out_dir.join("design.json"), design.to_json())?;
    for (name, text) in design.render_sheets()? {
        out.write(&out_dir.join("sheets").join(name), text)?;
    }
    out.commit();
    Ok(design)
}

fn load_design(path: &Path) -> Result<Design> {
    input_file(path)?;
    Ok(Design::from_json(
        &read_to_string(path)?,
        &path.display().to_string(),
    )?)
}

/// Fills every sheet of the design with simulated judgments and writes the
/// completed sheets plus a batch-minutes file.
pub fn simulate_decisions(
    design_path: &Path,
    truth_path: &Path,
    out_dir: &Path,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    input_file(truth_path)?;
    let design = load_design(design_path)?;
    let truth = Truth::parse(
        &read_to_string(truth_path)?,
        &truth_path.display().to_string(),
    )?;
    let mut ids: Vec<String> = design
        .assignments
        .iter()
        .map(|a| a.annotator_id.clone())
        .collect();
    ids.dedup();
    let profiles = AnnotatorProfile::defaults(&ids);
    let mut out = Outputs::new();
    let mut minutes = String::from("annotator\tbatch\tminutes\n");
    for a in &design.assignments {
        let who = ids
            .iter()
            .position(|i| i == &a.annotator_id)
            .expect("listed");
        let set = design.set(a.set_id).expect("validated design");
        let batch_seed = seed
            .wrapping_mul(1_000_003)
            .wrapping_add(who as u64 * 16 + a.batch_number as u64);
        let done =
            demo::simulate_batch(&set.rows, a.show_scores, &truth, &profiles[who], batch_seed)?;
        out.write(
            &out_dir.join(a.file_name()),
            render_rows(&done.rows, a.show_scores, &design.url_template)?,
        )?;
        minutes.push_str(&format!(
            "{}\t{}\t{}\n",
            a.annotator_id, a.batch_number, done.minutes
        ));
    }
    out.write(&out_dir.join(MINUTES_FILE), minutes)?;
    Ok(out.commit())
}

pub enum DecisionSource<'a> {
    Sheets(&'a Path),
    Log(&'a Path),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub records: usize,
    pub blank_cells: usize,
}

fn sort_records(records: &mut [DecisionRecord], design: &Design) {
    let index = |r: &DecisionRecord| {
        design
            .set(r.set_id)
            .and_then(|s| s.rows.iter().find(|row| row.lemma == r.lemma))
            .and_then(|row| {
                row.suggestions
                    .iter()
                    .position(|s| s.class_id == r.class_id)
            })
            .unwrap_or(usize::MAX)
    };
    records.sort_by_cached_key(|r| (r.set_id, r.lemma.clone(), index(r), r.annotator_id.clone()));
}

pub fn ingest(
    design_path: &Path,
    source: DecisionSource,
    out_path: &Path,
) -> Result<IngestSummary> {
    let design = load_design(design_path)?;
    let (mut records, blank_cells) = match source {
        DecisionSource::Sheets(dir) => {
            input_dir(dir)?;
            for a in &design.assignments {
                input_file(&dir.join(a.file_name()))?;
            }
            let mut all = Vec::new();
            let mut blanks = 0;
            for a in &design.assignments {
                let path = dir.join(a.file_name());
                let name = path.display().to_string();
                let sheet = parse_sheet(&read_to_string(&path)?, &design.url_template, &name)?;
                let got = analytics::ingest_sheet(&design, a, &sheet, &name)?;
                if got.blank_cells > 0 {
                    log::warn!("{name}: {} decision cell(s) left blank", got.blank_cells);
                }
                blanks += got.blank_cells;
                all.extend(got.records);
            }
            (all, blanks)
        }
        DecisionSource::Log(path) => {
            input_file(path)?;
            let entries = read_log(path)?;
            (
                export_records(&design, &entries, &ExportFilter::default())?,
                0,
            )
        }
    };
    sort_records(&mut records, &design);
    let mut out = Outputs::new();
    out.write(out_path, records::to_tsv(&records))?;
    out.commit();
    Ok(IngestSummary {
        records: records.len(),
        blank_cells,
    })
}

/// Computes the report; writes `report.txt`, `summary.tsv` and
/// `buckets.tsv` when `out_dir` is given.
pub fn stats(decisions: &Path, minutes: Option<&Path>, out_dir: Option<&Path>) -> Result<Report> {
    input_file(decisions)?;
    if let Some(m) = minutes {
        input_file(m)?;
    }
    let recs = records::parse_tsv(
        &read_to_string(decisions)?,
        &decisions.display().to_string(),
    )?;
    let overrides = match minutes {
        Some(m) => analytics::parse_batch_minutes(&read_to_string(m)?, &m.display().to_string())?,
        None => BTreeMap::new(),
    };
    let report = analytics::analyze(&recs, &overrides)?;
    if let Some(dir) = out_dir {
        let mut out = Outputs::new();
        out.write(&dir.join("report.txt"), report.render_text())?;
        out.write(&dir.join("summary.tsv"), report.render_summary())?;
        out.write(&dir.join("buckets.tsv"), report.render_buckets())?;
        out.commit();
    }
    Ok(report)
}

#[derive(Debug)]
pub struct PipelineRun {
    pub train: TrainSummary,
    pub scan: ScanDiagnostics,
    pub ingest: IngestSummary,
    pub report: Report,
}

/// The whole demo: synthetic data, split, training, corpus scoring, sheets,
/// simulated annotation, ingestion and statistics, all under `out_dir`.
pub fn pipeline(out_dir: &Path, seed: u64) -> Result<PipelineRun> {
    let data = out_dir.join("data");
    demo_data(
        &data,
        &DemoConfig {
            seed,
            ..DemoConfig::default()
        },
    )?;
    let run = RunConfig::default();
    let inventory = data.join("inventory.tsv");
    let examples = data.join("examples.tsv");
    let split_path = out_dir.join("split.json");
    split(
        &inventory,
        &examples,
        SplitRatios::default(),
        run.seeds.split,
        &split_path,
    )?;
    let model = out_dir.join("model.bin");
    let train = train(
        &inventory,
        &examples,
        &split_path,
        &demo::demo_train_config(),
        &model,
    )?;
    let scores = out_dir.join("scores.txt");
    let scan = score_corpus(&ScoreCorpusArgs {
        inventory: &inventory,
        examples: &examples,
        model: &model,
        corpus: &data.join("corpus.vert"),
        out: &scores,
        verb_prefix: "V",
        checkpoint: None,
    })?;
    make_sheets(
        &scores,
        out_dir,
        &run.sheets.annotators,
        run.sheets.set_size,
        run.seeds.sheets,
        UrlTemplate::default(),
    )?;
    let completed = out_dir.join("completed");
    simulate_decisions(
        &out_dir.join("design.json"),
        &data.join("truth.tsv"),
        &completed,
        run.seeds.simulate,
    )?;
    let decisions = out_dir.join("decisions.tsv");
    let ingest = ingest(
        &out_dir.join("design.json"),
        DecisionSource::Sheets(&completed),
        &decisions,
    )?;
    let report = stats(
        &decisions,
        Some(&completed.join(MINUTES_FILE)),
        Some(&out_dir.join("stats")),
    )?;
    Ok(PipelineRun {
        train,
        scan,
        ingest,
        report,
    })
}
