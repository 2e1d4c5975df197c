//! Bayesian inference over the hypothesis space.
//!
//! Given an example set X, the engine combines a mixture prior with a
//! likelihood and turns the posterior into p(yes) ratings per target:
//!
//! - prior: rules share mass lambda uniformly, intervals share 1 - lambda;
//! - size-principle likelihood: P(X|h) = 1/|h|^n when every example falls in
//!   h, so smaller consistent concepts win, and the preference sharpens with
//!   more examples;
//! - noisy likelihood: each example is concept-generated with probability
//!   alpha and a uniform lapse with probability 1 - alpha, so
//!   p(x|h) = alpha/|h| + (1-alpha)/N for members and (1-alpha)/N otherwise;
//! - generalization: hypothesis averaging P(y|X) = sum over h containing y of
//!   P(h|X), softened by the same lapse kernel, or the MAP / maximum
//!   likelihood ablations that commit to a single hypothesis.
//!
//! Likelihood products run in log space with a single exponentiate-and-
//! normalize step, which keeps grid-search extremes (alpha near 0) safe.
//! Everything here is deterministic: identical inputs give bit-identical
//! outputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{HypothesisKind, HypothesisSpace};

/// How example likelihoods are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodMode {
    /// Size principle with lapse noise; alpha = 1 recovers the strict
    /// 1/|h|^n likelihood.
    SizePrinciple,
    /// Binary conformity: 1 if every example fits, 0 otherwise.
    Binary,
}

/// How the posterior (or likelihood) is turned into predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    /// Average the membership indicator over the posterior.
    HypothesisAveraging,
    /// Commit to the single maximum-posterior hypothesis.
    Map,
    /// Ignore the prior; commit to the maximum-likelihood hypothesis.
    MaxLikelihood,
}

/// Full model configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Rule bias: prior mass on rule concepts (1 = rules only).
    pub lambda: f64,
    /// Probability of structured generation; 1 - alpha is the lapse rate.
    pub alpha: f64,
    pub likelihood_mode: LikelihoodMode,
    pub inference_mode: InferenceMode,
    pub domain_max: u32,
}

impl ModelConfig {
    pub fn new(
        lambda: f64,
        alpha: f64,
        likelihood_mode: LikelihoodMode,
        inference_mode: InferenceMode,
        domain_max: u32,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
            return Err(Error::ParameterOutOfRange {
                name: "lambda",
                value: lambda,
            });
        }
        if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
            return Err(Error::ParameterOutOfRange {
                name: "alpha",
                value: alpha,
            });
        }
        if domain_max < 1 {
            return Err(Error::InvalidDomain(domain_max as i64));
        }
        Ok(ModelConfig {
            lambda,
            alpha,
            likelihood_mode,
            inference_mode,
            domain_max,
        })
    }

    /// The prior participates in inference for every mode except maximum
    /// likelihood.
    pub fn use_prior(&self) -> bool {
        self.inference_mode != InferenceMode::MaxLikelihood
    }

    /// Baseline model: lambda = 0.5, no lapse, size principle, averaging.
    pub fn baseline(domain_max: u32) -> Self {
        ModelConfig::new(
            0.5,
            1.0,
            LikelihoodMode::SizePrinciple,
            InferenceMode::HypothesisAveraging,
            domain_max,
        )
        .expect("baseline parameters are valid")
    }

    /// Best fit reported for human data: lambda = 0.9, lapse 0.15.
    pub fn human_best_fit(domain_max: u32) -> Self {
        ModelConfig::new(
            0.9,
            0.85,
            LikelihoodMode::SizePrinciple,
            InferenceMode::HypothesisAveraging,
            domain_max,
        )
        .expect("human best-fit parameters are valid")
    }

    /// Best fit reported for GPT data: lambda = 1, lapse 0.
    pub fn gpt_best_fit(domain_max: u32) -> Self {
        ModelConfig::new(
            1.0,
            1.0,
            LikelihoodMode::SizePrinciple,
            InferenceMode::HypothesisAveraging,
            domain_max,
        )
        .expect("gpt best-fit parameters are valid")
    }

    /// BinL ablation: binary likelihood, averaging retained.
    pub fn binl(lambda: f64, alpha: f64, domain_max: u32) -> Result<Self> {
        ModelConfig::new(
            lambda,
            alpha,
            LikelihoodMode::Binary,
            InferenceMode::HypothesisAveraging,
            domain_max,
        )
    }

    /// MAP ablation: single maximum-posterior hypothesis.
    pub fn map(lambda: f64, alpha: f64, domain_max: u32) -> Result<Self> {
        ModelConfig::new(
            lambda,
            alpha,
            LikelihoodMode::SizePrinciple,
            InferenceMode::Map,
            domain_max,
        )
    }

    /// MaxL ablation: prior removed, maximum-likelihood hypothesis.
    pub fn maxl(alpha: f64, domain_max: u32) -> Result<Self> {
        ModelConfig::new(
            0.5,
            alpha,
            LikelihoodMode::SizePrinciple,
            InferenceMode::MaxLikelihood,
            domain_max,
        )
    }
}

/// An observed example set X.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSet {
    pub id: String,
    /// Examples in presentation order; duplicates each contribute a
    /// likelihood factor (n counts them).
    pub examples: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source_concept: Option<String>,
}

impl ExampleSet {
    pub fn new(id: impl Into<String>, examples: Vec<u32>) -> Self {
        ExampleSet {
            id: id.into(),
            examples,
            source_concept: None,
        }
    }

    /// Canonical id: length prefix plus sorted members, e.g. `L2:2-8`.
    pub fn canonical_id(examples: &[u32]) -> String {
        let mut sorted = examples.to_vec();
        sorted.sort_unstable();
        let joined = sorted
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("-");
        format!("L{}:{}", examples.len(), joined)
    }

    /// Number of observed examples n, duplicates included.
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Check domain bounds and non-emptiness.
    pub fn validate(&self, domain_max: u32) -> Result<()> {
        if self.examples.is_empty() {
            return Err(Error::validation(
                format!("example set '{}'", self.id),
                "example list is empty",
            ));
        }
        for &x in &self.examples {
            if x < 1 || x > domain_max {
                return Err(Error::validation(
                    format!("example set '{}'", self.id),
                    format!("example {x} outside 1..={domain_max}"),
                ));
            }
        }
        Ok(())
    }
}

/// Posterior weights aligned with the space's hypothesis order.
#[derive(Debug, Clone)]
pub struct PosteriorDistribution {
    pub weights: Vec<f64>,
    /// Log of the normalizer sum over h of P(X|h) P(h).
    pub log_evidence: f64,
}

/// Per-target p(yes) predictions for one example set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionVector {
    pub set_id: String,
    /// values[y - 1] = P(y in concept | X) for y in 1..=domain_max.
    pub values: Vec<f64>,
}

/// Mixture prior over the space: every rule gets lambda/rule_count, every
/// interval gets (1 - lambda)/interval_count.
pub fn prior(space: &HypothesisSpace, lambda: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
        return Err(Error::ParameterOutOfRange {
            name: "lambda",
            value: lambda,
        });
    }
    if lambda > 0.0 && space.rule_count() == 0 {
        return Err(Error::EmptySupport(format!(
            "lambda = {lambda} puts mass on rules but the space has none"
        )));
    }
    if lambda < 1.0 && space.interval_count() == 0 {
        return Err(Error::EmptySupport(format!(
            "lambda = {lambda} puts mass on intervals but the space has none"
        )));
    }
    let rule_mass = if space.rule_count() > 0 {
        lambda / space.rule_count() as f64
    } else {
        0.0
    };
    let interval_mass = if space.interval_count() > 0 {
        (1.0 - lambda) / space.interval_count() as f64
    } else {
        0.0
    };
    Ok(space
        .hypotheses()
        .iter()
        .map(|h| match h.kind {
            HypothesisKind::Rule => rule_mass,
            HypothesisKind::Interval => interval_mass,
        })
        .collect())
}

/// Strict size-principle likelihood: |h|^(-n) when every example is in h,
/// else 0.
pub fn likelihood_strict(examples: &[u32], size: usize, contains: impl Fn(u32) -> bool) -> f64 {
    if examples.iter().all(|&x| contains(x)) {
        (size as f64).powi(-(examples.len() as i32))
    } else {
        0.0
    }
}

/// Noisy likelihood: per-example mixture of concept generation and a uniform
/// lapse over the domain, multiplied over examples. alpha = 1 recovers the
/// strict likelihood exactly.
pub fn likelihood_noisy(
    examples: &[u32],
    size: usize,
    contains: impl Fn(u32) -> bool,
    alpha: f64,
    domain_max: u32,
) -> f64 {
    let lapse = (1.0 - alpha) / domain_max as f64;
    let member = alpha / size as f64 + lapse;
    examples
        .iter()
        .map(|&x| if contains(x) { member } else { lapse })
        .product()
}

/// Binary conformity likelihood: 1 if every example is in h, else 0.
pub fn likelihood_binary(examples: &[u32], contains: impl Fn(u32) -> bool) -> f64 {
    if examples.iter().all(|&x| contains(x)) {
        1.0
    } else {
        0.0
    }
}

/// Log-likelihood of X under each hypothesis in space order.
pub fn log_likelihoods(
    space: &HypothesisSpace,
    set: &ExampleSet,
    mode: LikelihoodMode,
    alpha: f64,
) -> Result<Vec<f64>> {
    set.validate(space.domain_max())?;
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return Err(Error::ParameterOutOfRange {
            name: "alpha",
            value: alpha,
        });
    }
    let n = space.domain_max() as f64;
    Ok(space
        .hypotheses()
        .iter()
        .map(|h| match mode {
            LikelihoodMode::Binary => {
                if set.examples.iter().all(|&x| h.contains(x)) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            LikelihoodMode::SizePrinciple => {
                let lapse = (1.0 - alpha) / n;
                let member = alpha / h.size as f64 + lapse;
                set.examples
                    .iter()
                    .map(|&x| if h.contains(x) { member.ln() } else { lapse.ln() })
                    .sum()
            }
        })
        .collect())
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Posterior over hypotheses: normalized prior times likelihood.
pub fn posterior(
    space: &HypothesisSpace,
    set: &ExampleSet,
    config: &ModelConfig,
) -> Result<PosteriorDistribution> {
    let prior = prior(space, config.lambda)?;
    let loglik = log_likelihoods(space, set, config.likelihood_mode, config.alpha)?;
    let log_joint: Vec<f64> = prior
        .iter()
        .zip(&loglik)
        .map(|(&p, &ll)| if p > 0.0 { p.ln() + ll } else { f64::NEG_INFINITY })
        .collect();
    let log_evidence = log_sum_exp(&log_joint);
    if log_evidence == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidence);
    }
    let weights = log_joint
        .iter()
        .map(|&lj| (lj - log_evidence).exp())
        .collect();
    Ok(PosteriorDistribution {
        weights,
        log_evidence,
    })
}

/// Tie-break order for single-hypothesis selection: smaller extension first,
/// then rules before intervals, then space order. The scan below visits
/// hypotheses in space order, so index order falls out of only replacing on
/// strict improvement.
fn better_on_tie(space: &HypothesisSpace, candidate: usize, incumbent: usize) -> bool {
    let c = space.hypothesis(candidate);
    let i = space.hypothesis(incumbent);
    (c.size, c.kind) < (i.size, i.kind)
}

fn argmax_with_tiebreak(space: &HypothesisSpace, score: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (idx, &s) in score.iter().enumerate() {
        if s == f64::NEG_INFINITY {
            continue;
        }
        match best {
            None => best = Some(idx),
            Some(b) => {
                if s > score[b] || (s == score[b] && better_on_tie(space, idx, b)) {
                    best = Some(idx);
                }
            }
        }
    }
    best
}

fn committed_prediction(
    space: &HypothesisSpace,
    set_id: &str,
    chosen: usize,
    alpha: f64,
) -> PredictionVector {
    let h = space.hypothesis(chosen);
    let miss = 1.0 - alpha;
    let mut values = vec![miss; space.domain_max() as usize];
    for &y in &h.extension {
        values[(y - 1) as usize] = 1.0;
    }
    PredictionVector {
        set_id: set_id.to_string(),
        values,
    }
}

/// Hypothesis averaging: P(y|X) = (1 - alpha) + alpha * sum of posterior
/// weight over hypotheses containing y.
pub fn predict_averaging(
    space: &HypothesisSpace,
    set: &ExampleSet,
    config: &ModelConfig,
) -> Result<PredictionVector> {
    let post = posterior(space, set, config)?;
    let miss = 1.0 - config.alpha;
    let mut values = Vec::with_capacity(space.domain_max() as usize);
    for y in 1..=space.domain_max() {
        let mass: f64 = space
            .hypotheses_containing(y)?
            .iter()
            .map(|&i| post.weights[i as usize])
            .sum();
        values.push((miss + config.alpha * mass).clamp(0.0, 1.0));
    }
    Ok(PredictionVector {
        set_id: set.id.clone(),
        values,
    })
}

/// MAP: predict from the single maximum-posterior hypothesis.
pub fn predict_map(
    space: &HypothesisSpace,
    set: &ExampleSet,
    config: &ModelConfig,
) -> Result<PredictionVector> {
    let post = posterior(space, set, config)?;
    let chosen = argmax_with_tiebreak(
        space,
        &post
            .weights
            .iter()
            .map(|&w| if w > 0.0 { w } else { f64::NEG_INFINITY })
            .collect::<Vec<_>>(),
    )
    .ok_or(Error::ZeroEvidence)?;
    Ok(committed_prediction(space, &set.id, chosen, config.alpha))
}

/// MaxL: ignore the prior and predict from the maximum-likelihood hypothesis.
/// Under the strict likelihood this is a minimum-cardinality consistent
/// hypothesis.
pub fn predict_maxl(
    space: &HypothesisSpace,
    set: &ExampleSet,
    config: &ModelConfig,
) -> Result<PredictionVector> {
    let loglik = log_likelihoods(space, set, config.likelihood_mode, config.alpha)?;
    let chosen = argmax_with_tiebreak(space, &loglik).ok_or(Error::ZeroEvidence)?;
    Ok(committed_prediction(space, &set.id, chosen, config.alpha))
}

/// Dispatch on the configured inference mode.
pub fn predict(
    space: &HypothesisSpace,
    set: &ExampleSet,
    config: &ModelConfig,
) -> Result<PredictionVector> {
    match config.inference_mode {
        InferenceMode::HypothesisAveraging => predict_averaging(space, set, config),
        InferenceMode::Map => predict_map(space, set, config),
        InferenceMode::MaxLikelihood => predict_maxl(space, set, config),
    }
}

/// Predict every set in parallel, preserving input order in the result.
pub fn predict_all(
    space: &HypothesisSpace,
    sets: &[ExampleSet],
    config: &ModelConfig,
) -> Result<Vec<PredictionVector>> {
    sets.par_iter()
        .map(|set| predict(space, set, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_space, Hypothesis, RuleRegistry};

    fn even_and_powers_space() -> HypothesisSpace {
        let even = Hypothesis::new(
            "even",
            "even numbers",
            HypothesisKind::Rule,
            (1..=50).map(|i| 2 * i).collect(),
        )
        .unwrap();
        let powers = Hypothesis::new(
            "powers_of_2",
            "powers of 2",
            HypothesisKind::Rule,
            vec![2, 4, 8, 16, 32, 64],
        )
        .unwrap();
        HypothesisSpace::from_hypotheses(100, vec![even, powers]).unwrap()
    }

    fn uniform_rule_config(alpha: f64, likelihood: LikelihoodMode) -> ModelConfig {
        // Two rules, no intervals: lambda = 1 is the uniform prior over them.
        ModelConfig::new(
            1.0,
            alpha,
            likelihood,
            InferenceMode::HypothesisAveraging,
            100,
        )
        .unwrap()
    }

    #[test]
    fn prior_extremes_zero_out_components() {
        let space = build_space(100, &RuleRegistry::default_registry()).unwrap();
        let full_rule = prior(&space, 1.0).unwrap();
        for (h, p) in space.hypotheses().iter().zip(&full_rule) {
            match h.kind {
                HypothesisKind::Rule => assert!(*p > 0.0),
                HypothesisKind::Interval => assert_eq!(*p, 0.0),
            }
        }
        let full_interval = prior(&space, 0.0).unwrap();
        for (h, p) in space.hypotheses().iter().zip(&full_interval) {
            match h.kind {
                HypothesisKind::Rule => assert_eq!(*p, 0.0),
                HypothesisKind::Interval => assert!(*p > 0.0),
            }
        }
    }

    #[test]
    fn prior_halves_split_over_components() {
        let space = build_space(100, &RuleRegistry::default_registry()).unwrap();
        let p = prior(&space, 0.5).unwrap();
        let rule_prior = p[0];
        let interval_prior = p[space.rule_count()];
        assert!((rule_prior - 0.5 / 34.0).abs() < 1e-15);
        assert!((interval_prior - 0.5 / 5050.0).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prior_with_empty_component_errors() {
        let space = even_and_powers_space(); // rules only
        assert!(prior(&space, 0.5).is_err());
        assert!(prior(&space, 0.0).is_err());
        assert!(prior(&space, 1.0).is_ok());
    }

    #[test]
    fn strict_likelihood_examples() {
        let contains_even = |x: u32| x % 2 == 0;
        let l = likelihood_strict(&[2, 8], 6, |x| [2u32, 4, 8, 16, 32, 64].contains(&x));
        assert!((l - 1.0 / 36.0).abs() < 1e-15);
        let l = likelihood_strict(&[2, 8], 50, contains_even);
        assert!((l - 1.0 / 2500.0).abs() < 1e-15);
        assert_eq!(likelihood_strict(&[2, 7], 50, contains_even), 0.0);
    }

    #[test]
    fn noisy_likelihood_matches_hand_arithmetic() {
        let contains_even = |x: u32| x % 2 == 0;
        let l = likelihood_noisy(&[2, 7], 50, contains_even, 0.85, 100);
        assert!((l - 2.775e-5).abs() < 1e-12);
    }

    #[test]
    fn noisy_alpha_one_equals_strict() {
        let ext = [3u32, 9, 27, 81];
        let contains = |x: u32| ext.contains(&x);
        for examples in [vec![3], vec![3, 9], vec![3, 5], vec![27, 27, 81]] {
            let strict = likelihood_strict(&examples, ext.len(), contains);
            let noisy = likelihood_noisy(&examples, ext.len(), contains, 1.0, 100);
            assert!((strict - noisy).abs() <= 1e-12);
        }
    }

    #[test]
    fn noisy_alpha_zero_is_pure_lapse() {
        let l = likelihood_noisy(&[2, 8, 10], 6, |_| true, 0.0, 100);
        assert!((l - (0.01f64).powi(3)).abs() < 1e-18);
    }

    #[test]
    fn binary_likelihood_ignores_size() {
        let contains_even = |x: u32| x % 2 == 0;
        let powers = [2u32, 4, 8, 16, 32, 64];
        assert_eq!(likelihood_binary(&[2, 8], contains_even), 1.0);
        assert_eq!(likelihood_binary(&[2, 8], |x| powers.contains(&x)), 1.0);
        assert_eq!(likelihood_binary(&[2, 7], contains_even), 0.0);
    }

    #[test]
    fn posterior_hand_case() {
        let space = even_and_powers_space();
        let set = ExampleSet::new("L2:2-8", vec![2, 8]);
        let config = uniform_rule_config(1.0, LikelihoodMode::SizePrinciple);
        let post = posterior(&space, &set, &config).unwrap();
        // 1/36 vs 1/2500 under a uniform prior: 2500/2536 and 36/2536.
        assert!((post.weights[1] - 2500.0 / 2536.0).abs() < 1e-12);
        assert!((post.weights[0] - 36.0 / 2536.0).abs() < 1e-12);
        assert!((post.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn posterior_binary_splits_evenly() {
        let space = even_and_powers_space();
        let set = ExampleSet::new("L2:2-8", vec![2, 8]);
        let config = uniform_rule_config(1.0, LikelihoodMode::Binary);
        let post = posterior(&space, &set, &config).unwrap();
        assert!((post.weights[0] - 0.5).abs() < 1e-12);
        assert!((post.weights[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_evidence_is_an_error() {
        let space = even_and_powers_space();
        let set = ExampleSet::new("L1:7", vec![7]); // consistent with neither rule
        let config = uniform_rule_config(1.0, LikelihoodMode::SizePrinciple);
        assert!(matches!(
            posterior(&space, &set, &config),
            Err(Error::ZeroEvidence)
        ));
    }

    #[test]
    fn averaging_hand_case() {
        let space = even_and_powers_space();
        let set = ExampleSet::new("L2:2-8", vec![2, 8]);
        let config = uniform_rule_config(1.0, LikelihoodMode::SizePrinciple);
        let pred = predict_averaging(&space, &set, &config).unwrap();
        assert!((pred.values[15] - 1.0).abs() < 1e-12); // 16: in both
        assert!((pred.values[5] - 36.0 / 2536.0).abs() < 1e-12); // 6: even only
        assert_eq!(pred.values[6], 0.0); // 7: in neither
    }

    #[test]
    fn averaging_alpha_zero_predicts_one_everywhere() {
        let space = even_and_powers_space();
        let set = ExampleSet::new("L1:2", vec![2]);
        let config = uniform_rule_config(0.0, LikelihoodMode::SizePrinciple);
        let pred = predict_averaging(&space, &set, &config).unwrap();
        assert!(pred.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn averaging_examples_score_one_when_alpha_one() {
        let space = build_space(100, &RuleRegistry::default_registry()).unwrap();
        let set = ExampleSet::new("L2:3-9", vec![3, 9]);
        let config = ModelConfig::baseline(100);
        let pred = predict_averaging(&space, &set, &config).unwrap();
        for &x in &set.examples {
            assert!((pred.values[(x - 1) as usize] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn map_selects_powers_of_two() {
        let space = even_and_powers_space();
        let set = ExampleSet::new("L2:2-8", vec![2, 8]);
        let config = ModelConfig::new(1.0, 1.0, LikelihoodMode::SizePrinciple, InferenceMode::Map, 100)
            .unwrap();
        let pred = predict_map(&space, &set, &config).unwrap();
        assert_eq!(pred.values[15], 1.0); // 16 in powers_of_2
        assert_eq!(pred.values[5], 0.0); // 6 only even; alpha = 1 makes it 0
    }

    #[test]
    fn map_breaks_binary_ties_toward_smaller_hypothesis() {
        let space = even_and_powers_space();
        let set = ExampleSet::new("L2:2-8", vec![2, 8]);
        let config =
            ModelConfig::new(1.0, 0.9, LikelihoodMode::Binary, InferenceMode::Map, 100).unwrap();
        let pred = predict_map(&space, &set, &config).unwrap();
        // powers_of_2 (size 6) wins the tie against even (size 50).
        assert_eq!(pred.values[15], 1.0); // 16
        assert!((pred.values[5] - 0.1).abs() < 1e-12); // 6 gets 1 - alpha
    }

    #[test]
    fn maxl_anchors_on_single_example() {
        let space = build_space(100, &RuleRegistry::default_registry()).unwrap();
        let set = ExampleSet::new("L1:15", vec![15]);
        let config = ModelConfig::maxl(1.0, 100).unwrap();
        let pred = predict_maxl(&space, &set, &config).unwrap();
        assert_eq!(pred.values[14], 1.0);
        for (i, &v) in pred.values.iter().enumerate() {
            if i != 14 {
                assert_eq!(v, 0.0, "target {} should be 1 - alpha = 0", i + 1);
            }
        }
    }

    #[test]
    fn maxl_selects_global_minimum_cardinality() {
        let space = build_space(100, &RuleRegistry::default_registry()).unwrap();
        let set = ExampleSet::new("L2:2-8", vec![2, 8]);
        let config = ModelConfig::maxl(1.0, 100).unwrap();
        let pred = predict_maxl(&space, &set, &config).unwrap();
        // Brute-force: the smallest consistent hypothesis.
        let min_size = space
            .hypotheses()
            .iter()
            .filter(|h| set.examples.iter().all(|&x| h.contains(x)))
            .map(|h| h.size)
            .min()
            .unwrap();
        let powers = space
            .hypotheses()
            .iter()
            .find(|h| h.id == "powers_of_2")
            .unwrap();
        assert_eq!(min_size, powers.size);
        for &y in &powers.extension {
            assert_eq!(pred.values[(y - 1) as usize], 1.0);
        }
    }

    #[test]
    fn maxl_alpha_zero_ties_resolve_to_smallest_hypothesis() {
        let space = build_space(20, &RuleRegistry::default_registry()).unwrap();
        let set = ExampleSet::new("L1:15", vec![15]);
        let config = ModelConfig::maxl(0.0, 20).unwrap();
        let pred = predict_maxl(&space, &set, &config).unwrap();
        // Constant likelihood: the first size-1 hypothesis is interval:1-1.
        assert_eq!(pred.values[0], 1.0);
        assert_eq!(pred.values[1], 1.0 - 0.0);
    }

    #[test]
    fn predict_dispatch_matches_modes() {
        let space = even_and_powers_space();
        let set = ExampleSet::new("L2:2-8", vec![2, 8]);
        for (mode, f) in [
            (
                InferenceMode::HypothesisAveraging,
                predict_averaging as fn(&_, &_, &_) -> _,
            ),
            (InferenceMode::Map, predict_map as fn(&_, &_, &_) -> _),
            (
                InferenceMode::MaxLikelihood,
                predict_maxl as fn(&_, &_, &_) -> _,
            ),
        ] {
            let config =
                ModelConfig::new(1.0, 0.9, LikelihoodMode::SizePrinciple, mode, 100).unwrap();
            assert_eq!(
                predict(&space, &set, &config).unwrap(),
                f(&space, &set, &config).unwrap()
            );
        }
    }

    #[test]
    fn out_of_domain_example_is_rejected() {
        let space = even_and_powers_space();
        let set = ExampleSet::new("bad", vec![2, 101]);
        let config = uniform_rule_config(1.0, LikelihoodMode::SizePrinciple);
        assert!(posterior(&space, &set, &config).is_err());
    }
}
