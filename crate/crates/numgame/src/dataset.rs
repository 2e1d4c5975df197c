//! Dataset ingestion, generation, and persistence.
//!
//! Three artifact kinds move through this module:
//!
//! - example-set files: a JSON array of `{id?, examples, concept?}` records
//!   (a dataset manifest with an `example_sets` field is also accepted);
//! - response matrices: CSV with header `set_id,target,p_yes[,n_trials]`,
//!   densified to one vector per set;
//! - generated datasets: full concepts built by applying symbolic transforms
//!   to base number categories, then sampling example sets of length 1..=4
//!   from each concept with a seeded generator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::ExampleSet;
use crate::error::{Error, Result};
use crate::eval::ResponseMatrix;

/// How to fill (set, target) cells absent from a response-matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingCellPolicy {
    /// Fill with the set's mean observed p(yes).
    #[default]
    SetMean,
    /// Fill with 0.
    Zero,
    /// Drop the whole set.
    DropSet,
}

impl std::str::FromStr for MissingCellPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "set-mean" => Ok(MissingCellPolicy::SetMean),
            "zero" => Ok(MissingCellPolicy::Zero),
            "drop-set" => Ok(MissingCellPolicy::DropSet),
            other => Err(Error::validation(
                "missing-cell policy",
                format!("unknown policy '{other}' (expected set-mean, zero, or drop-set)"),
            )),
        }
    }
}

/// Example sets plus any non-fatal load warnings.
#[derive(Debug, Clone)]
pub struct LoadedSets {
    pub sets: Vec<ExampleSet>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct RawExampleSet {
    #[serde(default)]
    id: Option<String>,
    examples: Vec<u32>,
    #[serde(default)]
    concept: Option<String>,
}

/// Load and validate example sets from a JSON file.
///
/// Records without ids get the canonical `L<len>:<sorted members>` id.
/// Duplicate ids keep the first record and warn. An empty file yields an
/// empty list with a warning.
pub fn load_example_sets(path: impl AsRef<Path>, domain_max: u32) -> Result<LoadedSets> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_example_sets(&text, domain_max).map_err(|e| contextualize_parse(e, path))
}

fn contextualize_parse(e: Error, path: &Path) -> Error {
    match e {
        Error::Json(inner) => Error::Parse {
            path: path.display().to_string(),
            location: format!("line {}, column {}", inner.line(), inner.column()),
            message: inner.to_string(),
        },
        other => other,
    }
}

/// Parse example sets from a JSON string (see [`load_example_sets`]).
pub fn parse_example_sets(text: &str, domain_max: u32) -> Result<LoadedSets> {
    let mut warnings = Vec::new();
    if text.trim().is_empty() {
        warnings.push("input file is empty; loaded 0 example sets".to_string());
        return Ok(LoadedSets {
            sets: Vec::new(),
            warnings,
        });
    }
    let value: serde_json::Value = serde_json::from_str(text)?;
    let raw_array = match &value {
        serde_json::Value::Object(map) if map.contains_key("example_sets") => {
            map["example_sets"].clone()
        }
        other => other.clone(),
    };
    let raw: Vec<RawExampleSet> = serde_json::from_value(raw_array)?;

    let mut sets: Vec<ExampleSet> = Vec::with_capacity(raw.len());
    let mut seen = BTreeSet::new();
    for record in raw {
        let id = record
            .id
            .unwrap_or_else(|| ExampleSet::canonical_id(&record.examples));
        let set = ExampleSet {
            id: id.clone(),
            examples: record.examples,
            source_concept: record.concept,
        };
        set.validate(domain_max)?;
        if !seen.insert(id.clone()) {
            warnings.push(format!("duplicate example set id '{id}'; keeping the first"));
            continue;
        }
        sets.push(set);
    }
    if sets.is_empty() && warnings.is_empty() {
        warnings.push("input contained no example sets".to_string());
    }
    Ok(LoadedSets { sets, warnings })
}

/// Write example sets as a JSON array.
pub fn save_example_sets(sets: &[ExampleSet], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(sets)?;
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// A response matrix plus fill statistics and warnings.
#[derive(Debug, Clone)]
pub struct LoadedMatrix {
    pub matrix: ResponseMatrix,
    /// Cells absent from the file and filled per policy.
    pub filled_cells: usize,
    pub warnings: Vec<String>,
}

/// Load a response matrix from CSV (`set_id,target,p_yes[,n_trials]`).
pub fn load_response_matrix(
    path: impl AsRef<Path>,
    agent: &str,
    domain_max: u32,
    policy: MissingCellPolicy,
) -> Result<LoadedMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_response_matrix(&text, agent, domain_max, policy)
}

/// Parse a response matrix from CSV text (see [`load_response_matrix`]).
pub fn parse_response_matrix(
    text: &str,
    agent: &str,
    domain_max: u32,
    policy: MissingCellPolicy,
) -> Result<LoadedMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(set_col), Some(target_col), Some(p_col)) =
        (col("set_id"), col("target"), col("p_yes"))
    else {
        return Err(Error::validation(
            "response matrix",
            "header must contain set_id, target, p_yes",
        ));
    };
    let trials_col = col("n_trials");

    // sparse[set_id][target - 1] = (p_yes, n_trials)
    let mut sparse: BTreeMap<String, BTreeMap<u32, (f64, Option<u32>)>> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let ctx = format!("response matrix row {}", line + 2);
        let field = |idx: usize| -> Result<&str> {
            record
                .get(idx)
                .ok_or_else(|| Error::validation(ctx.clone(), "missing field"))
        };
        let set_id = field(set_col)?.to_string();
        let target: u32 = field(target_col)?
            .trim()
            .parse()
            .map_err(|e| Error::validation(ctx.clone(), format!("bad target: {e}")))?;
        if target < 1 || target > domain_max {
            return Err(Error::InvalidTarget {
                target: target as i64,
                domain_max,
            });
        }
        let p_yes: f64 = field(p_col)?
            .trim()
            .parse()
            .map_err(|e| Error::validation(ctx.clone(), format!("bad p_yes: {e}")))?;
        if !(0.0..=1.0).contains(&p_yes) || p_yes.is_nan() {
            return Err(Error::validation(
                ctx,
                format!("p_yes {p_yes} outside [0, 1] (set '{set_id}', target {target})"),
            ));
        }
        let n_trials = match trials_col {
            Some(idx) => match record.get(idx) {
                Some(raw) if !raw.trim().is_empty() => Some(raw.trim().parse().map_err(|e| {
                    Error::validation(format!("response matrix row {}", line + 2), format!("bad n_trials: {e}"))
                })?),
                _ => None,
            },
            None => None,
        };
        let row = sparse.entry(set_id.clone()).or_default();
        if row.insert(target, (p_yes, n_trials)).is_some() {
            return Err(Error::DuplicateCell { set_id, target });
        }
    }

    let mut matrix = ResponseMatrix::new(agent, domain_max);
    let mut counts: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    let mut any_counts = false;
    let mut filled_cells = 0usize;
    let mut warnings = Vec::new();
    for (set_id, cells) in sparse {
        let missing = domain_max as usize - cells.len();
        if missing > 0 && policy == MissingCellPolicy::DropSet {
            warnings.push(format!(
                "set '{set_id}' missing {missing} target(s); dropped per policy"
            ));
            continue;
        }
        let fill = match policy {
            MissingCellPolicy::SetMean => {
                cells.values().map(|(p, _)| p).sum::<f64>() / cells.len() as f64
            }
            _ => 0.0,
        };
        let mut values = vec![fill; domain_max as usize];
        let mut trial_row = vec![0u32; domain_max as usize];
        for (target, (p, n)) in &cells {
            values[(*target - 1) as usize] = *p;
            if let Some(n) = n {
                trial_row[(*target - 1) as usize] = *n;
                any_counts = true;
            }
        }
        if missing > 0 {
            filled_cells += missing;
            warnings.push(format!(
                "set '{set_id}' missing {missing} target(s); filled with {}",
                match policy {
                    MissingCellPolicy::SetMean => "the set mean",
                    MissingCellPolicy::Zero => "0",
                    MissingCellPolicy::DropSet => unreachable!(),
                }
            ));
        }
        matrix.insert_row(set_id.clone(), values)?;
        counts.insert(set_id, trial_row);
    }
    if any_counts {
        matrix.trial_counts = Some(counts);
    }
    Ok(LoadedMatrix {
        matrix,
        filled_cells,
        warnings,
    })
}

/// Write a response matrix as CSV, one row per (set, target).
pub fn save_response_matrix(matrix: &ResponseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_to_csv(matrix)).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Render a response matrix as CSV text.
pub fn matrix_to_csv(matrix: &ResponseMatrix) -> String {
    let with_counts = matrix.trial_counts.is_some();
    let mut out = String::from(if with_counts {
        "set_id,target,p_yes,n_trials\n"
    } else {
        "set_id,target,p_yes\n"
    });
    for (set_id, values) in &matrix.rows {
        for (i, v) in values.iter().enumerate() {
            if with_counts {
                let n = matrix
                    .trial_counts
                    .as_ref()
                    .and_then(|c| c.get(set_id))
                    .map(|row| row[i])
                    .unwrap_or(0);
                out.push_str(&format!("{set_id},{},{v},{n}\n", i + 1));
            } else {
                out.push_str(&format!("{set_id},{},{v}\n", i + 1));
            }
        }
    }
    out
}

/// Base number categories concepts are derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseCategory {
    All,
    Even,
    Odd,
    Square,
    Cube,
    Prime,
}

impl BaseCategory {
    pub const ALL_CATEGORIES: [BaseCategory; 6] = [
        BaseCategory::All,
        BaseCategory::Even,
        BaseCategory::Odd,
        BaseCategory::Square,
        BaseCategory::Cube,
        BaseCategory::Prime,
    ];

    fn members(self, domain_max: u32) -> Vec<u64> {
        let matches = |n: u32| match self {
            BaseCategory::All => true,
            BaseCategory::Even => n % 2 == 0,
            BaseCategory::Odd => n % 2 == 1,
            BaseCategory::Square => {
                (1..=n).any(|k| k.checked_mul(k) == Some(n))
            }
            BaseCategory::Cube => (1..=n).any(|k| {
                k.checked_mul(k).and_then(|kk| kk.checked_mul(k)) == Some(n)
            }),
            BaseCategory::Prime => {
                n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
            }
        };
        (1..=domain_max).filter(|&n| matches(n)).map(u64::from).collect()
    }

    fn name(self) -> &'static str {
        match self {
            BaseCategory::All => "all",
            BaseCategory::Even => "even",
            BaseCategory::Odd => "odd",
            BaseCategory::Square => "square",
            BaseCategory::Cube => "cube",
            BaseCategory::Prime => "prime",
        }
    }
}

/// Symbolic transform applied to every member of a base category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    Identity,
    /// n -> k * n
    Scale { k: u64 },
    /// n -> n + k (k may be negative)
    Offset { k: i64 },
    /// n -> n^2
    Square,
    /// n -> base^n
    Power { base: u64 },
    /// Two-step composition: `then(first(n))`.
    Compose {
        first: Box<Transform>,
        then: Box<Transform>,
    },
}

impl Transform {
    /// Apply with overflow checks; None means the value left the
    /// representable range (and so cannot land in the domain).
    pub fn apply(&self, n: u64) -> Option<u64> {
        match self {
            Transform::Identity => Some(n),
            Transform::Scale { k } => n.checked_mul(*k),
            Transform::Offset { k } => {
                let shifted = (n as i64).checked_add(*k)?;
                u64::try_from(shifted).ok()
            }
            Transform::Square => n.checked_mul(n),
            Transform::Power { base } => {
                let exp = u32::try_from(n).ok()?;
                base.checked_pow(exp)
            }
            Transform::Compose { first, then } => then.apply(first.apply(n)?),
        }
    }

    fn expr(&self, inner: &str) -> String {
        let wrap = |s: &str| {
            if s == "n" || s.chars().all(|c| c.is_ascii_alphanumeric()) {
                s.to_string()
            } else {
                format!("({s})")
            }
        };
        match self {
            Transform::Identity => inner.to_string(),
            Transform::Scale { k } => format!("{k}*{}", wrap(inner)),
            Transform::Offset { k } if *k >= 0 => format!("{inner}+{k}"),
            Transform::Offset { k } => format!("{inner}-{}", -k),
            Transform::Square => format!("{}^2", wrap(inner)),
            Transform::Power { base } => format!("{base}^{}", wrap(inner)),
            Transform::Compose { first, then } => then.expr(&first.expr(inner)),
        }
    }
}

impl fmt::Display for Transform {
    /// Human-readable function body, e.g. `2^n+1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr("n"))
    }
}

/// The default transform registry: identities, scalings, offsets, squares,
/// exponentials, and two-step compositions of those.
pub fn default_transforms() -> Vec<Transform> {
    fn compose(first: Transform, then: Transform) -> Transform {
        Transform::Compose {
            first: Box::new(first),
            then: Box::new(then),
        }
    }
    let mut out = vec![Transform::Identity];
    for k in [2, 3, 4, 5, 10] {
        out.push(Transform::Scale { k });
    }
    for k in [1, 2, 5, 10] {
        out.push(Transform::Offset { k });
    }
    out.push(Transform::Square);
    out.push(Transform::Power { base: 2 });
    out.push(Transform::Power { base: 3 });
    for k in [1, -1] {
        out.push(compose(Transform::Power { base: 2 }, Transform::Offset { k }));
        out.push(compose(Transform::Scale { k: 2 }, Transform::Offset { k }));
        out.push(compose(Transform::Square, Transform::Offset { k }));
    }
    out.push(compose(Transform::Scale { k: 3 }, Transform::Offset { k: 1 }));
    out.push(compose(Transform::Scale { k: 10 }, Transform::Offset { k: -1 }));
    out.push(compose(Transform::Offset { k: 1 }, Transform::Square));
    out
}

/// Load a transform registry from a JSON array.
pub fn load_transforms(path: impl AsRef<Path>) -> Result<Vec<Transform>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let transforms: Vec<Transform> =
        serde_json::from_str(&text).map_err(|e| contextualize_parse(Error::Json(e), path))?;
    if transforms.is_empty() {
        return Err(Error::validation("transform registry", "no transforms"));
    }
    Ok(transforms)
}

/// A full concept: base category, transform, and the resulting extension
/// clipped to the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSpec {
    pub id: String,
    pub label: String,
    pub base_category: BaseCategory,
    pub transform: Transform,
    pub full_extension: Vec<u32>,
}

/// A generated dataset: concepts, example sets, and length statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub domain_max: u32,
    pub seed: u64,
    pub concepts: Vec<ConceptSpec>,
    pub example_sets: Vec<ExampleSet>,
    pub counts_by_length: BTreeMap<usize, usize>,
}

impl DatasetManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| contextualize_parse(Error::Json(e), path))
    }
}

/// Knobs for dataset generation.
#[derive(Debug, Clone)]
pub struct GeneratorOptions {
    pub seed: u64,
    pub concepts: usize,
    pub sets: usize,
    pub domain_max: u32,
    pub bases: Vec<BaseCategory>,
    pub transforms: Vec<Transform>,
    pub max_set_len: usize,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            seed: 0,
            concepts: 79,
            sets: 255,
            domain_max: 100,
            bases: BaseCategory::ALL_CATEGORIES.to_vec(),
            transforms: default_transforms(),
            max_set_len: 4,
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - i) as u128 / (i + 1) as u128;
    }
    result
}

/// Generate a dataset: full concepts from (base, transform) pairs, then
/// example sets sampled without replacement within each set.
///
/// Deterministic: the same options (seed included) produce a byte-identical
/// manifest.
pub fn generate_dataset(options: &GeneratorOptions) -> Result<DatasetManifest> {
    if options.bases.is_empty() {
        return Err(Error::validation("generator", "at least one base category"));
    }
    if options.transforms.is_empty() {
        return Err(Error::validation("generator", "at least one transform"));
    }
    if options.domain_max < 1 {
        return Err(Error::InvalidDomain(options.domain_max as i64));
    }

    // Build the concept pool: transform(base) clipped to the domain,
    // dropping empties and extensional duplicates (first entry wins).
    let mut pool: Vec<ConceptSpec> = Vec::new();
    let mut seen_extensions: BTreeSet<Vec<u32>> = BTreeSet::new();
    for &base in &options.bases {
        let members = base.members(options.domain_max);
        for transform in &options.transforms {
            let mut extension: Vec<u32> = members
                .iter()
                .filter_map(|&n| transform.apply(n))
                .filter(|&v| v >= 1 && v <= options.domain_max as u64)
                .map(|v| v as u32)
                .collect();
            extension.sort_unstable();
            extension.dedup();
            if extension.is_empty() || !seen_extensions.insert(extension.clone()) {
                continue;
            }
            pool.push(ConceptSpec {
                id: format!("{}|{}", base.name(), transform),
                label: format!("f(n) = {} over {}", transform, base.name()),
                base_category: base,
                transform: transform.clone(),
                full_extension: extension,
            });
        }
    }
    if pool.len() < options.concepts {
        return Err(Error::Capacity(format!(
            "requested {} concepts but only {} distinct ones are available",
            options.concepts,
            pool.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let concepts: Vec<ConceptSpec> = if pool.len() == options.concepts {
        pool
    } else {
        let mut picked = sample_indices(&mut rng, pool.len(), options.concepts).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| pool[i].clone()).collect()
    };

    // Optimistic capacity bound: distinct subsets per concept, summed.
    let capacity: u128 = concepts
        .iter()
        .map(|c| {
            (1..=options.max_set_len.min(c.full_extension.len()))
                .map(|len| binomial(c.full_extension.len(), len))
                .sum::<u128>()
        })
        .sum();
    if (options.sets as u128) > capacity {
        return Err(Error::Capacity(format!(
            "requested {} example sets but at most {} distinct subsets exist",
            options.sets, capacity
        )));
    }

    let mut example_sets: Vec<ExampleSet> = Vec::with_capacity(options.sets);
    let mut used_ids = BTreeSet::new();
    let mut attempts = 0usize;
    let max_attempts = options.sets.saturating_mul(50).max(1000);
    while example_sets.len() < options.sets {
        if attempts >= max_attempts {
            return Err(Error::Capacity(format!(
                "could not sample {} unique example sets after {} attempts",
                options.sets, attempts
            )));
        }
        let concept = &concepts[attempts % concepts.len()];
        attempts += 1;
        let ext = &concept.full_extension;
        let max_len = options.max_set_len.min(ext.len());
        let len = rng.gen_range(1..=max_len);
        let mut examples: Vec<u32> = sample_indices(&mut rng, ext.len(), len)
            .into_iter()
            .map(|i| ext[i])
            .collect();
        examples.sort_unstable();
        let id = ExampleSet::canonical_id(&examples);
        if !used_ids.insert(id.clone()) {
            continue;
        }
        example_sets.push(ExampleSet {
            id,
            examples,
            source_concept: Some(concept.id.clone()),
        });
    }

    let mut counts_by_length = BTreeMap::new();
    for set in &example_sets {
        *counts_by_length.entry(set.examples.len()).or_insert(0) += 1;
    }

    Ok(DatasetManifest {
        domain_max: options.domain_max,
        seed: options.seed,
        concepts,
        example_sets,
        counts_by_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_plain_array() {
        let text = r#"[
            {"id": "L2:2-8", "examples": [2, 8]},
            {"examples": [16, 2, 4], "concept": "powers_of_2"}
        ]"#;
        let loaded = parse_example_sets(text, 100).unwrap();
        assert_eq!(loaded.sets.len(), 2);
        assert_eq!(loaded.sets[1].id, "L3:2-4-16");
        assert_eq!(loaded.sets[1].source_concept.as_deref(), Some("powers_of_2"));
    }

    #[test]
    fn out_of_domain_example_is_rejected() {
        let text = r#"[{"examples": [0]}]"#;
        assert!(parse_example_sets(text, 100).is_err());
        let text = r#"[{"examples": [101]}]"#;
        assert!(parse_example_sets(text, 100).is_err());
    }

    #[test]
    fn empty_file_warns() {
        let loaded = parse_example_sets("", 100).unwrap();
        assert!(loaded.sets.is_empty());
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn duplicate_ids_keep_first() {
        let text = r#"[
            {"id": "a", "examples": [1]},
            {"id": "a", "examples": [2]}
        ]"#;
        let loaded = parse_example_sets(text, 100).unwrap();
        assert_eq!(loaded.sets.len(), 1);
        assert_eq!(loaded.sets[0].examples, vec![1]);
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn manifest_object_is_accepted() {
        let text = r#"{"domain_max": 100, "example_sets": [{"examples": [3, 9]}]}"#;
        let loaded = parse_example_sets(text, 100).unwrap();
        assert_eq!(loaded.sets.len(), 1);
    }

    #[test]
    fn matrix_round_trip() {
        let mut matrix = ResponseMatrix::new("test", 5);
        matrix
            .insert_row("L1:3", vec![0.0, 0.25, 1.0, 0.5, 0.125])
            .unwrap();
        matrix
            .insert_row("L2:1-2", vec![1.0, 1.0, 0.0, 0.0, 0.75])
            .unwrap();
        let csv = matrix_to_csv(&matrix);
        let loaded = parse_response_matrix(&csv, "test", 5, MissingCellPolicy::SetMean).unwrap();
        assert_eq!(loaded.matrix.rows, matrix.rows);
        assert_eq!(loaded.filled_cells, 0);
    }

    #[test]
    fn missing_cells_fill_with_set_mean() {
        let csv = "set_id,target,p_yes\nA,1,0.4\nA,2,0.8\n";
        let loaded = parse_response_matrix(csv, "a", 3, MissingCellPolicy::SetMean).unwrap();
        let row = &loaded.matrix.rows["A"];
        assert_eq!(loaded.filled_cells, 1);
        assert!((row[2] - 0.6).abs() < 1e-12);
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn missing_cells_drop_policy() {
        let csv = "set_id,target,p_yes\nA,1,0.4\nB,1,0.2\nB,2,0.3\nB,3,0.9\n";
        let loaded = parse_response_matrix(csv, "a", 3, MissingCellPolicy::DropSet).unwrap();
        assert!(!loaded.matrix.rows.contains_key("A"));
        assert!(loaded.matrix.rows.contains_key("B"));
    }

    #[test]
    fn out_of_range_p_yes_is_rejected() {
        let csv = "set_id,target,p_yes\nA,1,1.3\n";
        assert!(parse_response_matrix(csv, "a", 3, MissingCellPolicy::SetMean).is_err());
    }

    #[test]
    fn duplicate_cell_is_a_conflict() {
        let csv = "set_id,target,p_yes\nA,1,0.4\nA,1,0.5\n";
        assert!(matches!(
            parse_response_matrix(csv, "a", 3, MissingCellPolicy::SetMean),
            Err(Error::DuplicateCell { .. })
        ));
    }

    #[test]
    fn trial_counts_round_trip() {
        let csv = "set_id,target,p_yes,n_trials\nA,1,0.5,10\nA,2,1,9\nA,3,0,10\n";
        let loaded = parse_response_matrix(csv, "a", 3, MissingCellPolicy::SetMean).unwrap();
        let counts = loaded.matrix.trial_counts.as_ref().unwrap();
        assert_eq!(counts["A"], vec![10, 9, 10]);
        let csv2 = matrix_to_csv(&loaded.matrix);
        let reloaded = parse_response_matrix(&csv2, "a", 3, MissingCellPolicy::SetMean).unwrap();
        assert_eq!(reloaded.matrix, loaded.matrix);
    }

    #[test]
    fn transform_examples() {
        let two_n_plus_one = Transform::Compose {
            first: Box::new(Transform::Power { base: 2 }),
            then: Box::new(Transform::Offset { k: 1 }),
        };
        let values: Vec<u64> = (1..=100)
            .filter_map(|n| two_n_plus_one.apply(n))
            .filter(|&v| v <= 100)
            .collect();
        assert_eq!(values, vec![3, 5, 9, 17, 33, 65]);
        assert_eq!(two_n_plus_one.to_string(), "2^n+1");
    }

    #[test]
    fn identity_on_evens() {
        let opts = GeneratorOptions {
            bases: vec![BaseCategory::Even],
            transforms: vec![Transform::Identity],
            concepts: 1,
            sets: 5,
            seed: 1,
            ..GeneratorOptions::default()
        };
        let manifest = generate_dataset(&opts).unwrap();
        assert_eq!(manifest.concepts.len(), 1);
        assert_eq!(
            manifest.concepts[0].full_extension,
            (1..=50).map(|i| 2 * i).collect::<Vec<u32>>()
        );
    }

    #[test]
    fn default_generation_hits_target_counts() {
        let manifest = generate_dataset(&GeneratorOptions {
            seed: 7,
            ..GeneratorOptions::default()
        })
        .unwrap();
        assert_eq!(manifest.concepts.len(), 79);
        assert_eq!(manifest.example_sets.len(), 255);
        assert!(manifest
            .example_sets
            .iter()
            .all(|s| (1..=4).contains(&s.examples.len())));
    }

    #[test]
    fn generated_sets_are_subsets_of_their_concepts() {
        let manifest = generate_dataset(&GeneratorOptions {
            seed: 3,
            ..GeneratorOptions::default()
        })
        .unwrap();
        for set in &manifest.example_sets {
            let concept_id = set.source_concept.as_ref().unwrap();
            let concept = manifest
                .concepts
                .iter()
                .find(|c| &c.id == concept_id)
                .unwrap();
            for x in &set.examples {
                assert!(concept.full_extension.contains(x));
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let opts = GeneratorOptions {
            seed: 42,
            ..GeneratorOptions::default()
        };
        let a = generate_dataset(&opts).unwrap().to_json();
        let b = generate_dataset(&opts).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_request_is_a_capacity_error() {
        let opts = GeneratorOptions {
            bases: vec![BaseCategory::Even],
            transforms: vec![Transform::Identity],
            concepts: 1,
            sets: 10_000_000,
            seed: 1,
            ..GeneratorOptions::default()
        };
        assert!(matches!(
            generate_dataset(&opts),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn manifest_save_load_round_trip() {
        let manifest = generate_dataset(&GeneratorOptions {
            seed: 5,
            concepts: 10,
            sets: 20,
            ..GeneratorOptions::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        let loaded = DatasetManifest::load(&path).unwrap();
        assert_eq!(manifest, loaded);
    }
}
