//! Class inventory, labeled example sentences, and stratified data splits.
//!
//! The inventory file order defines the dense head index of every class, so a
//! model trained against one inventory file can only be applied with the same
//! file.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;

/// One ontology class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassId {
    pub id: String,
    pub display_name: String,
    /// Value substituted into the class URL template. Defaults to `id`.
    pub url_slot: String,
}

impl ClassId {
    pub fn new(id: impl Into<String>, display_name: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::Invalid(format!(
                "class id `{id}` is empty or contains whitespace"
            )));
        }
        Ok(ClassId {
            url_slot: id.clone(),
            id,
            display_name: display_name.into(),
        })
    }

    /// Single whitespace-free token used in score files: `id/display_name`
    /// with internal whitespace runs replaced by `_`.
    pub fn token(&self) -> String {
        let name = self
            .display_name
            .split_whitespace()
            .collect::<Vec<_>>()
            .join("_");
        if name.len() != self.display_name.len() {
            log::debug!(
                "class {} display name contains whitespace, joined with `_`",
                self.id
            );
        }
        if name.is_empty() {
            self.id.clone()
        } else {
            format!("{}/{}", self.id, name)
        }
    }
}

/// Extracts the class id from a score-file class token (`id/name` or bare `id`).
pub fn id_from_token(token: &str) -> &str {
    token.split('/').next().unwrap_or(token)
}

/// The active class set. Dense positions `0..K` follow load order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassInventory {
    classes: Vec<ClassId>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl ClassInventory {
    pub fn new(classes: Vec<ClassId>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::EmptyInventory);
        }
        let mut index = HashMap::with_capacity(classes.len());
        for (i, c) in classes.iter().enumerate() {
            if index.insert(c.id.clone(), i).is_some() {
                return Err(Error::DuplicateClass(c.id.clone()));
            }
        }
        Ok(ClassInventory { classes, index })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fsutil::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses `<id><TAB><display_name>[<TAB><url_slot>]` lines. Lines without a
    /// tab are split at the first whitespace run. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut classes = Vec::new();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = if line.contains('\t') {
                line.split('\t').collect()
            } else {
                match line.trim().split_once(char::is_whitespace) {
                    Some((id, name)) => vec![id, name.trim()],
                    None => vec![line.trim()],
                }
            };
            let id = fields[0];
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return Err(Error::parse(
                    source_name,
                    lineno + 1,
                    format!("invalid class id `{id}`"),
                ));
            }
            let name = fields.get(1).map(|s| s.trim()).unwrap_or("");
            if name.is_empty() {
                return Err(Error::parse(
                    source_name,
                    lineno + 1,
                    format!("class `{id}` has no display name"),
                ));
            }
            if !seen.insert(id.to_string()) {
                return Err(Error::DuplicateClass(id.to_string()));
            }
            let mut class = ClassId::new(id, name)?;
            if let Some(slot) = fields.get(2).map(|s| s.trim()).filter(|s| !s.is_empty()) {
                class.url_slot = slot.to_string();
            }
            classes.push(class);
        }
        Self::new(classes)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, position: usize) -> Option<&ClassId> {
        self.classes.get(position)
    }

    pub fn by_id(&self, id: &str) -> Option<&ClassId> {
        self.index_of(id).map(|i| &self.classes[i])
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for c in &self.classes {
            out.push_str(&c.id);
            out.push('\t');
            out.push_str(&c.display_name);
            if c.url_slot != c.id {
                out.push('\t');
                out.push_str(&c.url_slot);
            }
            out.push('\n');
        }
        out
    }
}

/// One annotated sentence: the target verb at `target_position` belongs to `gold_class`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub sentence: Vec<String>,
    pub target_position: usize,
    pub target_lemma: String,
    pub gold_class: String,
}

impl LabeledExample {
    pub fn tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.sentence.join(" "),
            self.target_position,
            self.target_lemma,
            self.gold_class
        )
    }
}

/// Loads the examples TSV: `sentence<TAB>target_position<TAB>target_lemma<TAB>gold_class_id`.
/// An optional header line starting with `sentence` is skipped.
pub fn load_examples(path: &Path, inventory: &ClassInventory) -> Result<Vec<LabeledExample>> {
    let text = fsutil::read_to_string(path)?;
    parse_examples(&text, &path.display().to_string(), inventory)
}

pub fn parse_examples(
    text: &str,
    source_name: &str,
    inventory: &ClassInventory,
) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 0 && line.starts_with("sentence\t") {
            continue;
        }
        let err = |msg: String| Error::parse(source_name, lineno + 1, msg);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(format!(
                "expected 4 tab-separated columns, found {}",
                fields.len()
            )));
        }
        let sentence: Vec<String> = fields[0].split_whitespace().map(str::to_string).collect();
        let target_position: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad target position `{}`", fields[1])))?;
        if target_position >= sentence.len() {
            return Err(err(format!(
                "target position {target_position} outside sentence of {} tokens",
                sentence.len()
            )));
        }
        let gold_class = fields[3].trim().to_string();
        if inventory.index_of(&gold_class).is_none() {
            return Err(err(format!("unknown class id `{gold_class}`")));
        }
        out.push(LabeledExample {
            sentence,
            target_position,
            target_lemma: fields[2].trim().to_string(),
            gold_class,
        });
    }
    Ok(out)
}

/// Lemmas already placed in the ontology, i.e. every example's target lemma.
pub fn known_lemmas(examples: &[LabeledExample]) -> BTreeSet<String> {
    examples.iter().map(|e| e.target_lemma.clone()).collect()
}

/// Train/dev/test ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    fn as_array(&self) -> [f64; 3] {
        [self.train, self.dev, self.test]
    }
}

/// Disjoint index sets over an example collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitAssignment {
    pub fn parts(&self) -> [&[usize]; 3] {
        [&self.train, &self.dev, &self.test]
    }
}

/// Largest-remainder apportionment of `total` into `ratios`; ties go to the
/// earlier part.
fn apportion(total: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * total as f64).collect();
    let mut counts = [0usize; 3];
    for (c, q) in counts.iter_mut().zip(&quotas) {
        *c = q.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = total - counts.iter().sum::<usize>();
    for p in order.into_iter().cycle() {
        if left == 0 {
            break;
        }
        counts[p] += 1;
        left -= 1;
    }
    counts
}

/// Per-class allocation of leftover examples to parts.
///
/// Each class first receives `floor(n_c * r_p)` examples per part. The
/// leftovers (at most two per class) are placed so that every part reaches
/// its global largest-remainder target and no class receives more than one
/// extra example in any part. Placement is greedy by fractional remainder,
/// repaired with augmenting paths when the greedy pass gets stuck.
fn allocate(class_sizes: &[usize], ratios: &[f64; 3]) -> Result<Vec<[usize; 3]>> {
    let total: usize = class_sizes.iter().sum();
    let targets = apportion(total, ratios);

    let mut counts: Vec<[usize; 3]> = Vec::with_capacity(class_sizes.len());
    let mut frac: Vec<[f64; 3]> = Vec::with_capacity(class_sizes.len());
    let mut extra: Vec<[bool; 3]> = vec![[false; 3]; class_sizes.len()];
    let mut locked: Vec<[bool; 3]> = vec![[false; 3]; class_sizes.len()];
    for &n in class_sizes {
        let mut c = [0usize; 3];
        let mut f = [0f64; 3];
        for p in 0..3 {
            let q = ratios[p] * n as f64;
            c[p] = q.floor() as usize;
            f[p] = q - q.floor();
        }
        counts.push(c);
        frac.push(f);
    }
    let mut class_need: Vec<usize> = class_sizes
        .iter()
        .zip(&counts)
        .map(|(&n, c)| n - c.iter().sum::<usize>())
        .collect();
    let mut part_need = [0usize; 3];
    for p in 0..3 {
        let floors: usize = counts.iter().map(|c| c[p]).sum();
        part_need[p] = targets[p] - floors;
    }

    // A represented class always gets at least one training example.
    for c in 0..class_sizes.len() {
        if class_sizes[c] > 0 && counts[c][0] == 0 && class_need[c] > 0 {
            if part_need[0] == 0 {
                // Borrow train capacity from the other parts' targets.
                let donor = if part_need[1] >= part_need[2] { 1 } else { 2 };
                part_need[donor] = part_need[donor].saturating_sub(1);
                part_need[0] += 1;
            }
            extra[c][0] = true;
            locked[c][0] = true;
            class_need[c] -= 1;
            part_need[0] -= 1;
        }
    }

    let mut cells: Vec<(usize, usize)> = (0..class_sizes.len())
        .flat_map(|c| (0..3).map(move |p| (c, p)))
        .filter(|&(c, p)| !extra[c][p])
        .collect();
    cells.sort_by(|&(ca, pa), &(cb, pb)| {
        frac[cb][pb]
            .total_cmp(&frac[ca][pa])
            .then(pa.cmp(&pb))
            .then(ca.cmp(&cb))
    });
    for (c, p) in cells {
        if class_need[c] > 0 && part_need[p] > 0 {
            extra[c][p] = true;
            class_need[c] -= 1;
            part_need[p] -= 1;
        }
    }

    // Repair: move extras along alternating paths class -> free part.
    for c in 0..class_sizes.len() {
        while class_need[c] > 0 {
            if !augment(c, &mut extra, &locked, &mut part_need) {
                return Err(Error::Invalid(format!(
                    "cannot allocate class {c} within stratification bounds"
                )));
            }
            class_need[c] -= 1;
        }
    }

    for c in 0..class_sizes.len() {
        for p in 0..3 {
            if extra[c][p] {
                counts[c][p] += 1;
            }
        }
    }
    Ok(counts)
}

/// BFS over (class, part) alternating paths; on success flips the path so
/// that `start` gains one extra and some part with spare capacity loses one need.
fn augment(
    start: usize,
    extra: &mut [[bool; 3]],
    locked: &[[bool; 3]],
    part_need: &mut [usize; 3],
) -> bool {
    use std::collections::VecDeque;
    let n = extra.len();
    // parent[p] = class that reached part p; class_parent[c] = part that reached class c
    let mut part_from: [Option<usize>; 3] = [None; 3];
    let mut class_from: Vec<Option<usize>> = vec![None; n];
    let mut visited_class = vec![false; n];
    visited_class[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for p in 0..3 {
            if extra[c][p] || part_from[p].is_some() {
                continue;
            }
            part_from[p] = Some(c);
            if part_need[p] > 0 {
                // Flip the path back to start.
                let mut part = p;
                loop {
                    let cls = part_from[part].expect("path");
                    extra[cls][part] = true;
                    match class_from[cls] {
                        None => break,
                        Some(prev_part) => {
                            extra[cls][prev_part] = false;
                            part = prev_part;
                        }
                    }
                }
                part_need[p] -= 1;
                return true;
            }
            for c2 in 0..n {
                if !visited_class[c2] && extra[c2][p] && !locked[c2][p] {
                    visited_class[c2] = true;
                    class_from[c2] = Some(p);
                    queue.push_back(c2);
                }
            }
        }
    }
    false
}

/// Stratified train/dev/test split, deterministic in `seed`.
///
/// Every class's share of each part is within one example of the requested
/// ratio, part sizes follow the largest-remainder apportionment of the total,
/// and every class with at least one example has one in train.
pub fn stratified_split(
    examples: &[LabeledExample],
    inventory: &ClassInventory,
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitAssignment> {
    if examples.is_empty() {
        return Err(Error::Invalid("cannot split an empty example list".into()));
    }
    let r = ratios.as_array();
    if r.iter().any(|x| !(0.0..=1.0).contains(x)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "split ratios {r:?} must be in [0,1] and sum to 1"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); inventory.len()];
    for (i, e) in examples.iter().enumerate() {
        let c = inventory
            .index_of(&e.gold_class)
            .ok_or_else(|| Error::UnknownClass(e.gold_class.clone()))?;
        by_class[c].push(i);
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let counts = allocate(&sizes, &r)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = SplitAssignment {
        seed,
        ratios,
        train: Vec::new(),
        dev: Vec::new(),
        test: Vec::new(),
    };
    for (members, count) in by_class.iter_mut().zip(&counts) {
        members.shuffle(&mut rng);
        let (train, rest) = members.split_at(count[0]);
        let (dev, test) = rest.split_at(count[1]);
        split.train.extend_from_slice(train);
        split.dev.extend_from_slice(dev);
        split.test.extend_from_slice(test);
    }
    split.train.sort_unstable();
    split.dev.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
