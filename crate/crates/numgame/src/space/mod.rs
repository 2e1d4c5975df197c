//! Hypothesis space construction and membership indexing.
//!
//! The space holds two families of candidate concepts over the domain
//! `1..=domain_max`:
//!
//! - rule concepts declared in a [`RuleRegistry`] (even numbers, multiples,
//!   primes, powers, last digits, ...), and
//! - every contiguous interval `a..=b`, singletons included, so a 100-number
//!   domain contributes 100*101/2 = 5050 interval hypotheses.
//!
//! Rules come first in registry order, then intervals ordered by `(a, b)`.
//! Rules whose extensions collide with an earlier rule are dropped so the
//! uniform rule prior is spread over distinct concepts. A per-number
//! membership index answers "which hypotheses contain y" in one lookup, which
//! is the support query behind hypothesis averaging.

mod registry;

pub use registry::{Predicate, RuleKind, RuleRegistry, RuleSpec};

use serde::Serialize;

use crate::error::{Error, Result};

/// Whether a hypothesis is a registry rule or a contiguous interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisKind {
    Rule,
    Interval,
}

/// One candidate concept: a labeled subset of the domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub id: String,
    pub label: String,
    pub kind: HypothesisKind,
    /// Sorted, duplicate-free members.
    pub extension: Vec<u32>,
    /// Cardinality |h|; always equals `extension.len()`.
    pub size: usize,
}

impl Hypothesis {
    /// Build a hypothesis, normalizing the extension to sorted/deduplicated
    /// form. Interval hypotheses must be contiguous.
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        kind: HypothesisKind,
        mut extension: Vec<u32>,
    ) -> Result<Self> {
        let id = id.into();
        extension.sort_unstable();
        extension.dedup();
        if extension.is_empty() {
            return Err(Error::validation(
                format!("hypothesis '{id}'"),
                "extension is empty",
            ));
        }
        if kind == HypothesisKind::Interval {
            let contiguous = extension
                .windows(2)
                .all(|pair| pair[1] == pair[0] + 1);
            if !contiguous {
                return Err(Error::validation(
                    format!("hypothesis '{id}'"),
                    "interval extension is not contiguous",
                ));
            }
        }
        let size = extension.len();
        Ok(Hypothesis {
            id,
            label: label.into(),
            kind,
            extension,
            size,
        })
    }

    /// Membership test via binary search on the sorted extension.
    pub fn contains(&self, y: u32) -> bool {
        self.extension.binary_search(&y).is_ok()
    }
}

/// Immutable enumeration of all hypotheses plus a per-number membership index.
///
/// Safe to share across threads once built; construction is single-threaded.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisSpace {
    domain_max: u32,
    rule_count: usize,
    interval_count: usize,
    hypotheses: Vec<Hypothesis>,
    #[serde(skip)]
    membership_index: Vec<Vec<u32>>,
}

/// All interval hypotheses `{a..=b : 1 <= a <= b <= domain_max}` ordered by
/// `(a, b)`, with ids of the form `interval:a-b`.
pub fn build_interval_concepts(domain_max: u32) -> Result<Vec<Hypothesis>> {
    if domain_max < 1 {
        return Err(Error::InvalidDomain(domain_max as i64));
    }
    let mut out = Vec::with_capacity((domain_max as usize * (domain_max as usize + 1)) / 2);
    for a in 1..=domain_max {
        for b in a..=domain_max {
            out.push(Hypothesis {
                id: format!("interval:{a}-{b}"),
                label: format!("interval {a}-{b}"),
                kind: HypothesisKind::Interval,
                extension: (a..=b).collect(),
                size: (b - a + 1) as usize,
            });
        }
    }
    Ok(out)
}

/// Rule hypotheses from the registry, clipped to `1..=domain_max`.
///
/// Rules with empty clipped extensions are dropped; extensional duplicates
/// keep only the earliest registry entry (e.g. `ends_in_0` collapses into
/// `multiples_of_10` over 1..=100).
pub fn build_rule_concepts(domain_max: u32, registry: &RuleRegistry) -> Result<Vec<Hypothesis>> {
    if domain_max < 1 {
        return Err(Error::InvalidDomain(domain_max as i64));
    }
    if registry.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    let mut out: Vec<Hypothesis> = Vec::new();
    for spec in registry.rules() {
        let extension = spec.kind.extension(domain_max);
        if extension.is_empty() {
            continue;
        }
        if out.iter().any(|h| h.extension == extension) {
            continue;
        }
        out.push(Hypothesis {
            size: extension.len(),
            id: spec.id.clone(),
            label: spec.label.clone(),
            kind: HypothesisKind::Rule,
            extension,
        });
    }
    Ok(out)
}

/// Build the full space: registry rules followed by all intervals.
pub fn build_space(domain_max: u32, registry: &RuleRegistry) -> Result<HypothesisSpace> {
    let mut hypotheses = build_rule_concepts(domain_max, registry)?;
    let rule_count = hypotheses.len();
    hypotheses.extend(build_interval_concepts(domain_max)?);
    HypothesisSpace::assemble(domain_max, hypotheses, rule_count)
}

impl HypothesisSpace {
    /// Build a space from an explicit hypothesis list (rules must precede
    /// intervals). Used for restricted spaces in tests and oracles.
    pub fn from_hypotheses(domain_max: u32, hypotheses: Vec<Hypothesis>) -> Result<Self> {
        if domain_max < 1 {
            return Err(Error::InvalidDomain(domain_max as i64));
        }
        let rule_count = hypotheses
            .iter()
            .take_while(|h| h.kind == HypothesisKind::Rule)
            .count();
        if hypotheses[rule_count..]
            .iter()
            .any(|h| h.kind == HypothesisKind::Rule)
        {
            return Err(Error::validation(
                "hypothesis space",
                "rules must precede intervals",
            ));
        }
        Self::assemble(domain_max, hypotheses, rule_count)
    }

    fn assemble(
        domain_max: u32,
        hypotheses: Vec<Hypothesis>,
        rule_count: usize,
    ) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(Error::validation(
                "hypothesis space",
                "space must contain at least one hypothesis",
            ));
        }
        let mut membership_index = vec![Vec::new(); domain_max as usize];
        for (idx, h) in hypotheses.iter().enumerate() {
            if h.size != h.extension.len() {
                return Err(Error::validation(
                    format!("hypothesis '{}'", h.id),
                    "size field disagrees with extension length",
                ));
            }
            for &y in &h.extension {
                if y < 1 || y > domain_max {
                    return Err(Error::validation(
                        format!("hypothesis '{}'", h.id),
                        format!("member {y} outside 1..={domain_max}"),
                    ));
                }
                membership_index[(y - 1) as usize].push(idx as u32);
            }
        }
        let interval_count = hypotheses.len() - rule_count;
        Ok(HypothesisSpace {
            domain_max,
            rule_count,
            interval_count,
            hypotheses,
            membership_index,
        })
    }

    pub fn domain_max(&self) -> u32 {
        self.domain_max
    }

    pub fn rule_count(&self) -> usize {
        self.rule_count
    }

    pub fn interval_count(&self) -> usize {
        self.interval_count
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn hypothesis(&self, index: usize) -> &Hypothesis {
        &self.hypotheses[index]
    }

    /// Indices of all hypotheses whose extension contains `y`.
    ///
    /// This is the support query behind `P(y|X) = sum over h containing y of
    /// P(h|X)`.
    pub fn hypotheses_containing(&self, y: u32) -> Result<&[u32]> {
        if y < 1 || y > self.domain_max {
            return Err(Error::InvalidTarget {
                target: y as i64,
                domain_max: self.domain_max,
            });
        }
        Ok(&self.membership_index[(y - 1) as usize])
    }

    /// Serialize the space (ids, labels, kinds, sizes, extensions) to pretty
    /// JSON. Output is byte-identical across rebuilds from the same inputs.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_count_closed_form() {
        assert_eq!(build_interval_concepts(100).unwrap().len(), 5050);
    }

    #[test]
    fn degenerate_domain_has_single_interval() {
        let list = build_interval_concepts(1).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].extension, vec![1]);
        assert_eq!(list[0].size, 1);
    }

    #[test]
    fn domain_three_enumerates_six_intervals() {
        let list = build_interval_concepts(3).unwrap();
        let extensions: Vec<Vec<u32>> = list.iter().map(|h| h.extension.clone()).collect();
        assert_eq!(
            extensions,
            vec![
                vec![1],
                vec![1, 2],
                vec![1, 2, 3],
                vec![2],
                vec![2, 3],
                vec![3]
            ]
        );
    }

    #[test]
    fn invalid_domain_is_rejected() {
        assert!(matches!(
            build_interval_concepts(0),
            Err(Error::InvalidDomain(0))
        ));
    }

    #[test]
    fn rule_dedup_keeps_earlier_registry_entry() {
        let rules = build_rule_concepts(100, &RuleRegistry::default_registry()).unwrap();
        assert!(rules.iter().any(|h| h.id == "multiples_of_10"));
        assert!(!rules.iter().any(|h| h.id == "ends_in_0"));
    }

    #[test]
    fn default_space_counts() {
        let space = build_space(100, &RuleRegistry::default_registry()).unwrap();
        // 35 registry entries collapse to 34 rules: ends_in_0 == multiples_of_10.
        assert_eq!(space.rule_count(), 34);
        assert_eq!(space.interval_count(), 5050);
        assert_eq!(space.len(), 5084);
    }

    #[test]
    fn membership_index_matches_brute_force() {
        let space = build_space(30, &RuleRegistry::default_registry()).unwrap();
        for y in 1..=30 {
            let indexed: Vec<u32> = space.hypotheses_containing(y).unwrap().to_vec();
            let scanned: Vec<u32> = space
                .hypotheses()
                .iter()
                .enumerate()
                .filter(|(_, h)| h.contains(y))
                .map(|(i, _)| i as u32)
                .collect();
            assert_eq!(indexed, scanned, "membership mismatch at y={y}");
        }
    }

    #[test]
    fn singleton_interval_contains_itself() {
        let space = build_space(100, &RuleRegistry::default_registry()).unwrap();
        let indices = space.hypotheses_containing(7).unwrap();
        assert!(indices
            .iter()
            .any(|&i| space.hypothesis(i as usize).id == "interval:7-7"));
    }

    #[test]
    fn full_range_interval_contains_everything() {
        let space = build_space(100, &RuleRegistry::default_registry()).unwrap();
        let full = space
            .hypotheses()
            .iter()
            .position(|h| h.id == "interval:1-100")
            .unwrap() as u32;
        for y in 1..=100 {
            assert!(space.hypotheses_containing(y).unwrap().contains(&full));
        }
    }

    #[test]
    fn out_of_domain_target_is_an_error() {
        let space = build_space(100, &RuleRegistry::default_registry()).unwrap();
        assert!(matches!(
            space.hypotheses_containing(101),
            Err(Error::InvalidTarget { .. })
        ));
        assert!(space.hypotheses_containing(0).is_err());
    }

    #[test]
    fn rebuild_is_byte_identical() {
        let registry = RuleRegistry::default_registry();
        let a = build_space(100, &registry).unwrap().to_json();
        let b = build_space(100, &registry).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn no_two_rules_share_an_extension() {
        let space = build_space(100, &RuleRegistry::default_registry()).unwrap();
        let rules = &space.hypotheses()[..space.rule_count()];
        for (i, a) in rules.iter().enumerate() {
            for b in &rules[i + 1..] {
                assert_ne!(a.extension, b.extension, "{} duplicates {}", a.id, b.id);
            }
        }
    }

    #[test]
    fn interval_hypothesis_must_be_contiguous() {
        assert!(Hypothesis::new(
            "interval:bad",
            "bad",
            HypothesisKind::Interval,
            vec![1, 3]
        )
        .is_err());
    }
}
