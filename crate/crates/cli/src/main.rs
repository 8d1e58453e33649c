use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use lexext_cli::config::RunConfig;
use lexext_cli::steps::{self, DecisionSource, ScoreCorpusArgs};
use lexext_core::demo::DemoConfig;
use lexext_core::ontology::SplitRatios;
use lexext_core::sheets::UrlTemplate;
use lexext_service::ServiceConfig;

#[derive(Parser)]
#[command(
    name = "lexext",
    version,
    about = "Ontology extension pipeline: score unseen verbs, prepare annotation, analyse agreement"
)]
struct Cli {
    /// Run configuration (TOML). Flags and LEXEXT_* variables override it.
    #[arg(long, global = true, env = "LEXEXT_CONFIG")]
    config: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataPaths {
    #[arg(long, env = "LEXEXT_INVENTORY")]
    inventory: Option<PathBuf>,
    #[arg(long, env = "LEXEXT_EXAMPLES")]
    examples: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic demo dataset and a matching config file.
    DemoData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DemoConfig::default().seed)]
        seed: u64,
    },
    /// Stratified train/dev/test split of the labelled examples.
    Split {
        #[command(flatten)]
        data: DataPaths,
        #[arg(long, env = "LEXEXT_SPLIT")]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Train, dev and test shares, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        ratios: Option<Vec<f64>>,
    },
    /// Train the class scorer.
    Train {
        #[command(flatten)]
        data: DataPaths,
        #[arg(long, env = "LEXEXT_SPLIT")]
        split: Option<PathBuf>,
        #[arg(long, env = "LEXEXT_MODEL")]
        out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        peak_lr: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score every unseen verb lemma of a tagged corpus.
    ScoreCorpus {
        #[command(flatten)]
        data: DataPaths,
        #[arg(long, env = "LEXEXT_MODEL")]
        model: Option<PathBuf>,
        #[arg(long, env = "LEXEXT_CORPUS")]
        corpus: Option<PathBuf>,
        #[arg(long, env = "LEXEXT_SCORES")]
        out: Option<PathBuf>,
        /// POS tag prefix marking verbs.
        #[arg(long, default_value = "V")]
        verb_prefix: String,
        /// Resumable progress file for long corpora.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Sample two lemma sets and write the design plus one sheet per batch.
    MakeSheets {
        #[arg(long, env = "LEXEXT_SCORES")]
        scores: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        set_size: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        annotators: Option<Vec<String>>,
        /// Class link template with a `{class}` placeholder.
        #[arg(long)]
        url_template: Option<String>,
    },
    /// Fill the design's sheets with simulated annotators (demo only).
    SimulateDecisions {
        #[arg(long, env = "LEXEXT_DESIGN")]
        design: Option<PathBuf>,
        #[arg(long, env = "LEXEXT_TRUTH")]
        truth: Option<PathBuf>,
        /// Defaults to `<out_dir>/completed`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Collect decisions from completed sheets or the service log.
    Ingest {
        #[arg(long, env = "LEXEXT_DESIGN")]
        design: Option<PathBuf>,
        /// Completed sheets; defaults to `<out_dir>/completed` unless `--log` is given.
        #[arg(long, conflicts_with = "log")]
        sheets_dir: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, env = "LEXEXT_DECISIONS")]
        out: Option<PathBuf>,
    },
    /// Agreement, correlation, threshold and timing report.
    Stats {
        #[arg(long, env = "LEXEXT_DECISIONS")]
        decisions: Option<PathBuf>,
        /// Batch totals, `annotator<TAB>batch<TAB>minutes`. Defaults to the
        /// simulated totals under `<out_dir>/completed` when present.
        #[arg(long)]
        minutes: Option<PathBuf>,
        /// Report directory, `<out_dir>/stats` by default.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the annotation service.
    Serve {
        /// Service config (TOML); other flags override it.
        #[arg(long)]
        service_config: Option<PathBuf>,
        #[arg(long, env = "LEXEXT_DESIGN")]
        design: Option<PathBuf>,
        #[arg(long, env = "LEXEXT_LOG")]
        log: Option<PathBuf>,
        #[arg(long, env = "LEXEXT_UI_DIR")]
        ui_dir: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Run the whole demo end to end under one directory.
    Pipeline {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DemoConfig::default().seed)]
        seed: u64,
    },
}

fn pick(flag: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| anyhow!("no {what} path: pass --{what} or set it in the config file"))
}

/// Flag, then `LEXEXT_OUT_DIR`, then the config file, then the working directory.
fn out_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os("LEXEXT_OUT_DIR").map(PathBuf::from))
        .or_else(|| cfg.paths.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let p = &cfg.paths;
    match cli.command {
        Command::DemoData { out, seed } => {
            print_paths(&steps::demo_data(
                &out,
                &DemoConfig {
                    seed,
                    ..DemoConfig::default()
                },
            )?);
        }
        Command::Split {
            data,
            out,
            seed,
            ratios,
        } => {
            let ratios = match ratios.as_deref() {
                Some([train, dev, test]) => SplitRatios {
                    train: *train,
                    dev: *dev,
                    test: *test,
                },
                _ => SplitRatios::default(),
            };
            let out = out
                .or_else(|| p.split.clone())
                .unwrap_or_else(|| out_dir(None, &cfg).join("split.json"));
            let s = steps::split(
                &pick(data.inventory, &p.inventory, "inventory")?,
                &pick(data.examples, &p.examples, "examples")?,
                ratios,
                seed.unwrap_or(cfg.seeds.split),
                &out,
            )?;
            println!(
                "train {} / dev {} / test {} -> {}",
                s.train.len(),
                s.dev.len(),
                s.test.len(),
                out.display()
            );
        }
        Command::Train {
            data,
            split,
            out,
            epochs,
            peak_lr,
            dim,
            seed,
        } => {
            let mut tc = cfg.train.clone();
            tc.epochs = epochs.unwrap_or(tc.epochs);
            tc.peak_lr = peak_lr.unwrap_or(tc.peak_lr);
            tc.dim = dim.unwrap_or(tc.dim);
            tc.seed = seed.unwrap_or(tc.seed);
            let split = split
                .or_else(|| p.split.clone())
                .unwrap_or_else(|| out_dir(None, &cfg).join("split.json"));
            let out = out
                .or_else(|| p.model.clone())
                .unwrap_or_else(|| out_dir(None, &cfg).join("model.bin"));
            let s = steps::train(
                &pick(data.inventory, &p.inventory, "inventory")?,
                &pick(data.examples, &p.examples, "examples")?,
                &split,
                &tc,
                &out,
            )?;
            for e in &s.epochs {
                println!(
                    "epoch {:>2}  loss {:.6}  dev accuracy {}",
                    e.epoch,
                    e.mean_train_loss,
                    e.dev_accuracy.map_or("n/a".into(), |a| format!("{a:.4}"))
                );
            }
            if let Some(t) = s.test_accuracy {
                println!("test accuracy {t:.4}");
            }
            println!("model -> {}", out.display());
        }
        Command::ScoreCorpus {
            data,
            model,
            corpus,
            out,
            verb_prefix,
            checkpoint,
        } => {
            let model = model
                .or_else(|| p.model.clone())
                .unwrap_or_else(|| out_dir(None, &cfg).join("model.bin"));
            let out = out
                .or_else(|| p.scores.clone())
                .unwrap_or_else(|| out_dir(None, &cfg).join("scores.txt"));
            let d = steps::score_corpus(&ScoreCorpusArgs {
                inventory: &pick(data.inventory, &p.inventory, "inventory")?,
                examples: &pick(data.examples, &p.examples, "examples")?,
                model: &model,
                corpus: &pick(corpus, &p.corpus, "corpus")?,
                out: &out,
                verb_prefix: &verb_prefix,
                checkpoint: checkpoint.as_deref(),
            })?;
            println!(
                "{} sentences ({} malformed), {} unseen verb occurrences -> {}",
                d.sentences,
                d.malformed,
                d.occurrences,
                out.display()
            );
        }
        Command::MakeSheets {
            scores,
            out_dir: dir,
            seed,
            set_size,
            annotators,
            url_template,
        } => {
            let dir = out_dir(dir, &cfg);
            let scores = scores
                .or_else(|| p.scores.clone())
                .unwrap_or_else(|| dir.join("scores.txt"));
            let url = match url_template.or_else(|| cfg.sheets.url_template.clone()) {
                Some(t) => UrlTemplate::new(&t)?,
                None => UrlTemplate::default(),
            };
            let design = steps::make_sheets(
                &scores,
                &dir,
                &annotators.unwrap_or_else(|| cfg.sheets.annotators.clone()),
                set_size.unwrap_or(cfg.sheets.set_size),
                seed.unwrap_or(cfg.seeds.sheets),
                url,
            )?;
            for a in &design.assignments {
                println!(
                    "{}: batch {} {} {}",
                    a.file_name(),
                    a.batch_number,
                    a.set_id,
                    if a.show_scores {
                        "with scores"
                    } else {
                        "no scores"
                    }
                );
            }
            println!("design -> {}", dir.join("design.json").display());
        }
        Command::SimulateDecisions {
            design,
            truth,
            out_dir: dir,
            seed,
        } => {
            let design = design
                .or_else(|| p.design.clone())
                .unwrap_or_else(|| out_dir(None, &cfg).join("design.json"));
            let dir = dir.unwrap_or_else(|| out_dir(None, &cfg).join("completed"));
            print_paths(&steps::simulate_decisions(
                &design,
                &pick(truth, &p.truth, "truth")?,
                &dir,
                seed.unwrap_or(cfg.seeds.simulate),
            )?);
        }
        Command::Ingest {
            design,
            sheets_dir,
            log,
            out,
        } => {
            let design = design
                .or_else(|| p.design.clone())
                .unwrap_or_else(|| out_dir(None, &cfg).join("design.json"));
            let out = out
                .or_else(|| p.decisions.clone())
                .unwrap_or_else(|| out_dir(None, &cfg).join("decisions.tsv"));
            let completed = out_dir(None, &cfg).join("completed");
            let source = match (&sheets_dir, &log) {
                (Some(d), _) => DecisionSource::Sheets(d),
                (None, Some(l)) => DecisionSource::Log(l),
                (None, None) => DecisionSource::Sheets(&completed),
            };
            let s = steps::ingest(&design, source, &out)?;
            println!(
                "{} decisions ({} blank cells) -> {}",
                s.records,
                s.blank_cells,
                out.display()
            );
        }
        Command::Stats {
            decisions,
            minutes,
            out_dir: dir,
        } => {
            let decisions = decisions
                .or_else(|| p.decisions.clone())
                .unwrap_or_else(|| out_dir(None, &cfg).join("decisions.tsv"));
            let dir = dir.unwrap_or_else(|| out_dir(None, &cfg).join("stats"));
            let minutes = minutes.or_else(|| {
                let simulated = out_dir(None, &cfg)
                    .join("completed")
                    .join(steps::MINUTES_FILE);
                simulated.exists().then_some(simulated)
            });
            let report = steps::stats(&decisions, minutes.as_deref(), Some(&dir))?;
            print!("{}", report.render_text());
        }
        Command::Serve {
            service_config,
            design,
            log,
            ui_dir,
            bind,
            port,
        } => {
            let mut sc = match service_config {
                Some(path) => ServiceConfig::load(&path)?,
                None => {
                    let base = out_dir(None, &cfg);
                    let mut sc = ServiceConfig::new(
                        p.design.clone().unwrap_or_else(|| base.join("design.json")),
                        p.log.clone().unwrap_or_else(|| base.join("decisions.log")),
                    );
                    sc.bind = cfg.service.bind.clone();
                    sc.port = cfg.service.port;
                    sc
                }
            };
            if let Some(d) = design {
                sc.design = d;
            }
            if let Some(l) = log {
                sc.log = l;
            }
            sc.ui_dir = ui_dir.or(sc.ui_dir).or_else(|| p.ui_dir.clone());
            sc.bind = bind.unwrap_or(sc.bind);
            sc.port = port.unwrap_or(sc.port);
            lexext_cli::output::input_file(&sc.design)?;
            if let Some(ui) = &sc.ui_dir {
                lexext_cli::output::input_dir(ui)?;
            }
            let rt = tokio_runtime()?;
            rt.block_on(lexext_service::serve(sc))?;
        }
        Command::Pipeline { out, seed } => {
            let run = steps::pipeline(&out, seed)?;
            print!("{}", run.report.render_text());
            println!();
            println!("outputs under {}", display_dir(&out));
        }
    }
    Ok(())
}

fn display_dir(p: &Path) -> String {
    p.display().to_string()
}

fn tokio_runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
