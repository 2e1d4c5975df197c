//! Jensen-Shannon divergence evaluation of response matrices.
//!
//! Agents (humans, LLM runs, model configurations) are compared through their
//! response matrices: one p(yes) vector over targets per example set. Each
//! vector is normalized to a distribution over targets and a single base-2
//! JSD is computed per set, so the divergence lands in [0, 1] with 0 meaning
//! identical response profiles and 1 meaning disjoint ones. Per-set values
//! are then averaged overall and per example-set length.
//!
//! An alternative convention treats every target as a Bernoulli variable and
//! averages the 2-point divergences across targets; it is exposed for
//! sensitivity analysis via [`JsdConvention::PerTargetMean`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{predict_all, ExampleSet, ModelConfig};
use crate::error::{Error, Result};
use crate::space::HypothesisSpace;

/// Which per-set divergence statistic to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum JsdConvention {
    /// Normalize each 100-vector to a distribution over targets and compute
    /// one JSD per set.
    #[default]
    Normalized,
    /// Mean over targets of the Bernoulli divergence between p(yes) values.
    PerTargetMean,
}

impl FromStr for JsdConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(JsdConvention::Normalized),
            "per-target-mean" => Ok(JsdConvention::PerTargetMean),
            other => Err(Error::validation(
                "jsd convention",
                format!("unknown convention '{other}' (expected 'normalized' or 'per-target-mean')"),
            )),
        }
    }
}

impl fmt::Display for JsdConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JsdConvention::Normalized => write!(f, "normalized"),
            JsdConvention::PerTargetMean => write!(f, "per-target-mean"),
        }
    }
}

/// Per-agent observed or predicted p(yes) vectors keyed by set id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMatrix {
    pub agent: String,
    pub domain_max: u32,
    /// set id -> p(yes) per target, indexed by target - 1.
    pub rows: BTreeMap<String, Vec<f64>>,
    /// Optional per-cell valid-trial counts, aligned with `rows`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trial_counts: Option<BTreeMap<String, Vec<u32>>>,
}

impl ResponseMatrix {
    pub fn new(agent: impl Into<String>, domain_max: u32) -> Self {
        ResponseMatrix {
            agent: agent.into(),
            domain_max,
            rows: BTreeMap::new(),
            trial_counts: None,
        }
    }

    /// Insert a row, validating length and probability bounds.
    pub fn insert_row(&mut self, set_id: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let set_id = set_id.into();
        if values.len() != self.domain_max as usize {
            return Err(Error::ShapeMismatch {
                left: values.len(),
                right: self.domain_max as usize,
            });
        }
        if let Some((i, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v) || v.is_nan())
        {
            return Err(Error::validation(
                format!("response matrix '{}', set '{set_id}'", self.agent),
                format!("p_yes {v} at target {} outside [0, 1]", i + 1),
            ));
        }
        self.rows.insert(set_id, values);
        Ok(())
    }

    /// Check that every row references a known example set.
    pub fn validate_against_sets(&self, sets: &[ExampleSet]) -> Result<()> {
        for set_id in self.rows.keys() {
            if !sets.iter().any(|s| &s.id == set_id) {
                return Err(Error::validation(
                    format!("response matrix '{}'", self.agent),
                    format!("row '{set_id}' references an unknown example set"),
                ));
            }
        }
        Ok(())
    }

    /// Build a matrix from model predictions over the given sets, tagged with
    /// the generating configuration.
    pub fn from_model(
        space: &HypothesisSpace,
        sets: &[ExampleSet],
        config: &ModelConfig,
    ) -> Result<Self> {
        let predictions = predict_all(space, sets, config)?;
        let mut matrix = ResponseMatrix::new(describe_config(config), space.domain_max());
        for pred in predictions {
            matrix.rows.insert(pred.set_id, pred.values);
        }
        Ok(matrix)
    }
}

/// Stable one-line description of a model configuration, used as agent name.
pub fn describe_config(config: &ModelConfig) -> String {
    let lik = match config.likelihood_mode {
        crate::engine::LikelihoodMode::SizePrinciple => "size",
        crate::engine::LikelihoodMode::Binary => "binary",
    };
    let mode = match config.inference_mode {
        crate::engine::InferenceMode::HypothesisAveraging => "avg",
        crate::engine::InferenceMode::Map => "map",
        crate::engine::InferenceMode::MaxLikelihood => "maxl",
    };
    format!(
        "bayes(lambda={},alpha={},lik={lik},mode={mode})",
        config.lambda, config.alpha
    )
}

/// Normalize a nonnegative vector to a distribution. Zero-sum vectors map to
/// the uniform distribution; the boolean reports that substitution.
fn normalize(v: &[f64]) -> Result<(Vec<f64>, bool)> {
    if let Some((i, &x)) = v.iter().enumerate().find(|(_, x)| **x < 0.0 || x.is_nan()) {
        return Err(Error::NegativeEntry { index: i, value: x });
    }
    let total: f64 = v.iter().sum();
    if total <= 0.0 {
        let n = v.len() as f64;
        return Ok((vec![1.0 / n; v.len()], true));
    }
    Ok((v.iter().map(|&x| x / total).collect(), false))
}

fn kl_base2(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .map(|(&pi, &mi)| if pi > 0.0 { pi * (pi / mi).log2() } else { 0.0 })
        .sum()
}

fn jsd_distributions(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(&a, &b)| 0.5 * (a + b)).collect();
    let d = 0.5 * kl_base2(p, &m) + 0.5 * kl_base2(q, &m);
    d.clamp(0.0, 1.0)
}

/// Jensen-Shannon divergence between two response vectors under the
/// normalized-distribution convention. Base-2 logs bound the result to
/// [0, 1]; the result is clamped against floating-point drift.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    let (d, _, _) = jsd_with_flags(p, q)?;
    Ok(d)
}

fn jsd_with_flags(p: &[f64], q: &[f64]) -> Result<(f64, bool, bool)> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let (pn, p_zero) = normalize(p)?;
    let (qn, q_zero) = normalize(q)?;
    Ok((jsd_distributions(&pn, &qn), p_zero, q_zero))
}

/// Mean over targets of the 2-point (Bernoulli) divergence between p(yes)
/// values. Also bounded to [0, 1], but a different statistic from [`jsd`].
pub fn jsd_per_target_mean(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        for (name, v) in [("first", a), ("second", b)] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(Error::validation(
                    "per-target jsd",
                    format!("{name} vector has p_yes {v} at target {} outside [0, 1]", i + 1),
                ));
            }
        }
        total += jsd_distributions(&[a, 1.0 - a], &[b, 1.0 - b]);
    }
    Ok((total / p.len() as f64).clamp(0.0, 1.0))
}

/// Summary statistics for one set-length group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthGroup {
    pub mean: f64,
    pub sem: f64,
    pub count: usize,
}

/// Pairwise divergence report between two agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub pair: (String, String),
    pub convention: JsdConvention,
    pub per_set: BTreeMap<String, f64>,
    pub mean: f64,
    /// Sample standard deviation over sqrt(count); 0 for fewer than 2 sets.
    pub sem: f64,
    pub by_set_length: BTreeMap<usize, LengthGroup>,
    /// How many vectors were zero-sum and replaced by the uniform
    /// distribution before normalization.
    pub zero_sum_fills: usize,
}

fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt() / (n as f64).sqrt())
}

/// Parse the length prefix of a canonical set id like `L2:2-8`.
pub fn length_from_canonical_id(set_id: &str) -> Option<usize> {
    let rest = set_id.strip_prefix('L')?;
    let (len, _) = rest.split_once(':')?;
    len.parse().ok()
}

/// Options for report construction.
#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub convention: JsdConvention,
    /// Explicit set-id -> example-count lookup. When absent, lengths are
    /// parsed from canonical ids; sets with unknown length are skipped in the
    /// by-length grouping (never in the overall mean).
    pub set_lengths: Option<BTreeMap<String, usize>>,
}

impl EvalOptions {
    pub fn with_sets(convention: JsdConvention, sets: &[ExampleSet]) -> Self {
        EvalOptions {
            convention,
            set_lengths: Some(
                sets.iter()
                    .map(|s| (s.id.clone(), s.examples.len()))
                    .collect(),
            ),
        }
    }

    fn length_of(&self, set_id: &str) -> Option<usize> {
        match &self.set_lengths {
            Some(map) => map.get(set_id).copied(),
            None => length_from_canonical_id(set_id),
        }
    }
}

/// Compare two matrices over the intersection of their set ids.
pub fn evaluate_pair(
    a: &ResponseMatrix,
    b: &ResponseMatrix,
    opts: &EvalOptions,
) -> Result<DivergenceReport> {
    let mut per_set = BTreeMap::new();
    let mut zero_sum_fills = 0usize;
    for (set_id, pa) in &a.rows {
        let Some(pb) = b.rows.get(set_id) else {
            continue;
        };
        let d = match opts.convention {
            JsdConvention::Normalized => {
                let (d, az, bz) = jsd_with_flags(pa, pb)?;
                zero_sum_fills += az as usize + bz as usize;
                d
            }
            JsdConvention::PerTargetMean => jsd_per_target_mean(pa, pb)?,
        };
        per_set.insert(set_id.clone(), d);
    }
    if per_set.is_empty() {
        return Err(Error::NoOverlap {
            a: a.agent.clone(),
            b: b.agent.clone(),
        });
    }

    let values: Vec<f64> = per_set.values().copied().collect();
    let (mean, sem) = mean_and_sem(&values);

    let mut grouped: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (set_id, &d) in &per_set {
        if let Some(len) = opts.length_of(set_id) {
            grouped.entry(len).or_default().push(d);
        }
    }
    let by_set_length = grouped
        .into_iter()
        .map(|(len, vals)| {
            let (mean, sem) = mean_and_sem(&vals);
            (
                len,
                LengthGroup {
                    mean,
                    sem,
                    count: vals.len(),
                },
            )
        })
        .collect();

    Ok(DivergenceReport {
        pair: (a.agent.clone(), b.agent.clone()),
        convention: opts.convention,
        per_set,
        mean,
        sem,
        by_set_length,
        zero_sum_fills,
    })
}

/// Predict with `config` on every set, then compare against `observed`.
pub fn evaluate_model(
    space: &HypothesisSpace,
    sets: &[ExampleSet],
    config: &ModelConfig,
    observed: &ResponseMatrix,
    convention: JsdConvention,
) -> Result<DivergenceReport> {
    let predicted = ResponseMatrix::from_model(space, sets, config)?;
    let opts = EvalOptions::with_sets(convention, sets);
    evaluate_pair(observed, &predicted, &opts)
}

impl DivergenceReport {
    /// Per-set rows as CSV: set_id, set_length, jsd. Unknown lengths render
    /// as an empty field.
    pub fn per_set_csv(&self, opts: &EvalOptions) -> String {
        let mut out = String::from("set_id,set_length,jsd\n");
        for (set_id, d) in &self.per_set {
            let len = opts
                .length_of(set_id)
                .map(|l| l.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{set_id},{len},{d}\n"));
        }
        out
    }

    /// Rows (length, mean, sem, count) for the set-length breakdown.
    pub fn by_set_length_csv(&self) -> String {
        let mut out = String::from("set_length,mean_jsd,sem,count\n");
        for (len, group) in &self.by_set_length {
            out.push_str(&format!(
                "{len},{},{},{}\n",
                group.mean, group.sem, group.count
            ));
        }
        out
    }
}
