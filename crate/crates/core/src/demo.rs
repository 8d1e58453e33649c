//! Deterministic synthetic world for running the whole pipeline offline.
//!
//! The generator builds a small class inventory, a separable labelled
//! example set (each class owns its lemmas and context vocabulary), a tagged
//! corpus of unseen verbs whose contexts mix class vocabularies, and a truth
//! table of how well each unseen lemma fits each class. Simulated annotators
//! read the truth table through noise to fill in sheets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{ClassId, ClassInventory, LabeledExample};
use crate::scorer::TrainConfig;
use crate::sheets::{Decision, SuggestionRow};

const CLASS_NAMES: [&str; 10] = [
    "Motion",
    "Communication",
    "Perception",
    "Possession",
    "Creation",
    "Consumption",
    "Contact",
    "Emotion",
    "Cognition",
    "Change",
];
const FILLERS: [&str; 8] = ["the", "a", "of", "to", "and", "in", "with", "it"];
const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sh",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoConfig {
    pub seed: u64,
    pub classes: usize,
    pub examples_per_class: usize,
    pub lemmas_per_class: usize,
    pub context_words_per_class: usize,
    pub unseen_lemmas: usize,
    /// Share of unseen lemmas whose contexts follow no single class.
    pub unrelated_share: f64,
    pub max_occurrences: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            seed: 7,
            classes: 10,
            examples_per_class: 200,
            lemmas_per_class: 5,
            context_words_per_class: 12,
            unseen_lemmas: 240,
            unrelated_share: 0.3,
            max_occurrences: 12,
        }
    }
}

/// How well an unseen lemma fits a class, in [0, 1], kept to six decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub lemma: String,
    pub class_id: String,
    pub fit: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Truth {
    fits: BTreeMap<(String, String), f64>,
}

/// Fit assumed for pairs the truth table does not list.
pub const BACKGROUND_FIT: f64 = 0.05;

impl Truth {
    pub fn from_rows(rows: impl IntoIterator<Item = TruthRow>) -> Self {
        Truth {
            fits: rows
                .into_iter()
                .map(|r| ((r.lemma, r.class_id), (r.fit * 1e6).round() / 1e6))
                .collect(),
        }
    }

    pub fn fit(&self, lemma: &str, class_id: &str) -> f64 {
        self.fits
            .get(&(lemma.to_string(), class_id.to_string()))
            .copied()
            .unwrap_or(BACKGROUND_FIT)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lemma\tclass_id\tfit\n");
        for ((l, c), f) in &self.fits {
            let _ = writeln!(out, "{l}\t{c}\t{f:.6}");
        }
        out
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut fits = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 && line.starts_with("lemma\t") || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(
                    source_name,
                    i + 1,
                    format!("expected 3 columns, found {}", f.len()),
                ));
            }
            let fit: f64 = f[2]
                .parse()
                .map_err(|_| Error::parse(source_name, i + 1, format!("bad fit `{}`", f[2])))?;
            fits.insert((f[0].to_string(), f[1].to_string()), fit);
        }
        Ok(Truth { fits })
    }
}

#[derive(Debug, Clone)]
pub struct DemoWorld {
    pub inventory: ClassInventory,
    pub examples: Vec<LabeledExample>,
    /// Tagged corpus, `token<TAB>lemma<TAB>pos`, blank line between sentences.
    pub corpus: String,
    pub truth: Truth,
    pub unseen: Vec<String>,
}

/// Training settings for the demo world. The linear scorer over a small
/// hashed feature space needs a far larger step than the transformer default.
pub fn demo_train_config() -> TrainConfig {
    TrainConfig {
        dim: 1 << 12,
        peak_lr: 0.01,
        ..TrainConfig::default()
    }
}

fn words(rng: &mut ChaCha8Rng, n: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).expect("non-empty"));
            w.push_str(VOWELS.choose(rng).expect("non-empty"));
        }
        if !FILLERS.contains(&w.as_str()) && taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

struct Lexicon {
    lemmas: Vec<Vec<String>>,
    context: Vec<Vec<String>>,
}

fn sentence_around(
    rng: &mut ChaCha8Rng,
    lex: &Lexicon,
    verb_form: &str,
    pick_class: &mut dyn FnMut(&mut ChaCha8Rng) -> Option<usize>,
) -> (Vec<(String, &'static str)>, usize) {
    let len = rng.random_range(7..=12);
    let target = rng.random_range(1..len - 1);
    let mut toks = Vec::with_capacity(len);
    for i in 0..len {
        if i == target {
            toks.push((verb_form.to_string(), "VB"));
        } else if rng.random::<f64>() < 0.35 {
            toks.push((FILLERS.choose(rng).expect("non-empty").to_string(), "DT"));
        } else {
            let c = pick_class(rng).unwrap_or_else(|| rng.random_range(0..lex.context.len()));
            toks.push((lex.context[c].choose(rng).expect("non-empty").clone(), "NN"));
        }
    }
    (toks, target)
}

/// Builds the synthetic world. Same config, same world.
pub fn generate(config: &DemoConfig) -> Result<DemoWorld> {
    if config.classes < 2 || config.classes > CLASS_NAMES.len() {
        return Err(Error::Invalid(format!(
            "demo supports 2..={} classes",
            CLASS_NAMES.len()
        )));
    }
    if config.lemmas_per_class == 0
        || config.context_words_per_class == 0
        || config.examples_per_class == 0
    {
        return Err(Error::Invalid(
            "demo vocabulary sizes must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let classes = (0..config.classes)
        .map(|c| ClassId::new(format!("vec{:05}", c + 1), CLASS_NAMES[c]))
        .collect::<Result<Vec<_>>>()?;
    let inventory = ClassInventory::new(classes)?;

    let mut taken = BTreeSet::new();
    let lex = Lexicon {
        lemmas: (0..config.classes)
            .map(|_| words(&mut rng, config.lemmas_per_class, &mut taken))
            .collect(),
        context: (0..config.classes)
            .map(|_| words(&mut rng, config.context_words_per_class, &mut taken))
            .collect(),
    };
    let unseen = words(&mut rng, config.unseen_lemmas, &mut taken);

    let mut examples = Vec::with_capacity(config.classes * config.examples_per_class);
    for c in 0..config.classes {
        for _ in 0..config.examples_per_class {
            let lemma = lex.lemmas[c].choose(&mut rng).expect("non-empty").clone();
            let form = format!("{lemma}s");
            let (toks, target) = sentence_around(&mut rng, &lex, &form, &mut |_| Some(c));
            examples.push(LabeledExample {
                sentence: toks.into_iter().map(|(t, _)| t).collect(),
                target_position: target,
                target_lemma: lemma,
                gold_class: inventory.get(c).expect("in range").id.clone(),
            });
        }
    }

    let mut truth_rows = Vec::new();
    let mut corpus = String::new();
    let mut sentences: Vec<String> = Vec::new();
    let mut emit = |toks: &[(String, &str)], lemmas: &[String]| {
        let mut s = String::new();
        for ((t, pos), l) in toks.iter().zip(lemmas) {
            let _ = writeln!(s, "{t}\t{l}\t{pos}");
        }
        sentences.push(s);
    };
    for lemma in &unseen {
        let related = rng.random::<f64>() >= config.unrelated_share;
        let primary = rng.random_range(0..config.classes);
        let secondary = (primary + rng.random_range(1..config.classes)) % config.classes;
        let strength: f64 = if related {
            rng.random_range(0.55..0.95)
        } else {
            0.0
        };
        let mix: f64 = rng.random_range(0.0..0.45);
        if related {
            truth_rows.push(TruthRow {
                lemma: lemma.clone(),
                class_id: inventory.get(primary).expect("in range").id.clone(),
                fit: strength,
            });
            truth_rows.push(TruthRow {
                lemma: lemma.clone(),
                class_id: inventory.get(secondary).expect("in range").id.clone(),
                fit: (strength * mix * 1.6).min(0.9),
            });
        }
        let occurrences = rng.random_range(1..=config.max_occurrences);
        let form = format!("{lemma}ed");
        for _ in 0..occurrences {
            let (toks, _) = sentence_around(&mut rng, &lex, &form, &mut |r| {
                if !related {
                    return None;
                }
                let u = r.random::<f64>();
                if u < strength * (1.0 - mix) {
                    Some(primary)
                } else if u < strength {
                    Some(secondary)
                } else {
                    None
                }
            });
            let lemmas: Vec<String> = toks
                .iter()
                .map(|(t, pos)| {
                    if *pos == "VB" {
                        lemma.clone()
                    } else {
                        t.clone()
                    }
                })
                .collect();
            emit(&toks, &lemmas);
        }
    }
    // Known verbs also occur in the corpus and must be skipped.
    for c in 0..config.classes {
        for lemma in &lex.lemmas[c] {
            let form = format!("{lemma}s");
            let (toks, _) = sentence_around(&mut rng, &lex, &form, &mut |_| Some(c));
            let lemmas: Vec<String> = toks
                .iter()
                .map(|(t, pos)| {
                    if *pos == "VB" {
                        lemma.clone()
                    } else {
                        t.clone()
                    }
                })
                .collect();
            emit(&toks, &lemmas);
        }
    }
    // Interleave sentences so a lemma's occurrences are spread over the stream.
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    for i in order {
        corpus.push_str(&sentences[i]);
        corpus.push('\n');
    }

    Ok(DemoWorld {
        inventory,
        examples,
        corpus,
        truth: Truth::from_rows(truth_rows),
        unseen,
    })
}

/// A simulated annotator: perceives the true fit through Gaussian noise and,
/// when scores are shown, leans toward the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProfile {
    pub annotator_id: String,
    pub noise: f64,
    pub score_trust: f64,
    pub seconds_per_decision: f64,
}

impl AnnotatorProfile {
    pub fn defaults(ids: &[String]) -> Vec<AnnotatorProfile> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| AnnotatorProfile {
                annotator_id: id.clone(),
                noise: 0.22 + 0.03 * i as f64,
                score_trust: 0.25,
                seconds_per_decision: 22.0 + 3.0 * i as f64,
            })
            .collect()
    }
}

fn decide(perceived: f64) -> Decision {
    if perceived >= 0.6 {
        Decision::Yes
    } else if perceived >= 0.42 {
        Decision::RatherYes
    } else if perceived >= 0.25 {
        Decision::RatherNo
    } else {
        Decision::No
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedBatch {
    pub rows: Vec<SuggestionRow>,
    pub minutes: f64,
}

/// Fills every decision cell of `rows`. `scores` are the classifier scores
/// for each cell, used only when `show_scores` is set.
pub fn simulate_batch(
    rows: &[SuggestionRow],
    show_scores: bool,
    truth: &Truth,
    profile: &AnnotatorProfile,
    seed: u64,
) -> Result<SimulatedBatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise =
        Normal::new(0.0, profile.noise).map_err(|e| Error::Invalid(format!("noise: {e}")))?;
    let pace = Normal::new(
        profile.seconds_per_decision,
        profile.seconds_per_decision * 0.3,
    )
    .map_err(|e| Error::Invalid(format!("pace: {e}")))?;
    let mut seconds = 0.0;
    let mut out = rows.to_vec();
    for row in &mut out {
        for s in &mut row.suggestions {
            let mut p = truth.fit(&row.lemma, &s.class_id);
            if show_scores {
                if let Some(score) = s.score {
                    p = (1.0 - profile.score_trust) * p + profile.score_trust * score;
                }
            }
            s.decision = Some(decide(p + noise.sample(&mut rng)));
            seconds += pace.sample(&mut rng).max(3.0);
        }
    }
    Ok(SimulatedBatch {
        rows: out,
        minutes: (seconds / 60.0).round(),
    })
}
