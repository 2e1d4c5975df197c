//! Rule concept registry.
//!
//! Rule-based concepts are declared, not hard-coded: a registry entry names a
//! predicate family plus its parameters, and the space builder turns each
//! entry into a concrete extension over `1..=domain_max`. Registries load from
//! a JSON array of `{id, label, kind, ...params}` objects so the hypothesis
//! space is extensible without code changes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in predicate concepts with no parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    AllNumbers,
    Even,
    Odd,
    Square,
    Cube,
    Prime,
}

impl Predicate {
    fn matches(self, n: u32) -> bool {
        match self {
            Predicate::AllNumbers => true,
            Predicate::Even => n % 2 == 0,
            Predicate::Odd => n % 2 == 1,
            Predicate::Square => is_perfect_root(n, 2),
            Predicate::Cube => is_perfect_root(n, 3),
            Predicate::Prime => is_prime(n),
        }
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn is_perfect_root(n: u32, exp: u32) -> bool {
    let mut k = 1u32;
    loop {
        let p = match k.checked_pow(exp) {
            Some(p) => p,
            None => return false,
        };
        if p == n {
            return true;
        }
        if p > n {
            return false;
        }
        k += 1;
    }
}

/// One rule family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleKind {
    /// A named parameter-free predicate (even, odd, prime, ...).
    PredicateName { name: Predicate },
    /// Multiples of `k`: {k, 2k, 3k, ...}.
    Multiples { k: u32 },
    /// Powers of `base` with exponent >= 1: {base, base^2, ...}.
    /// `base^0 = 1` is deliberately excluded so power sets stay distinctive.
    Powers { base: u32 },
    /// Numbers whose last decimal digit is `digit`.
    EndsIn { digit: u32 },
}

impl RuleKind {
    /// Enumerate the extension of this rule clipped to `1..=domain_max`.
    pub fn extension(&self, domain_max: u32) -> Vec<u32> {
        match *self {
            RuleKind::PredicateName { name } => {
                (1..=domain_max).filter(|&n| name.matches(n)).collect()
            }
            RuleKind::Multiples { k } => (1..=domain_max / k).map(|i| i * k).collect(),
            RuleKind::Powers { base } => {
                let mut out = Vec::new();
                let mut p = base;
                while p <= domain_max {
                    out.push(p);
                    p = match p.checked_mul(base) {
                        Some(next) => next,
                        None => break,
                    };
                }
                out
            }
            RuleKind::EndsIn { digit } => (1..=domain_max).filter(|&n| n % 10 == digit).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RuleKind::PredicateName { .. } => Ok(()),
            RuleKind::Multiples { k } if k >= 1 => Ok(()),
            RuleKind::Multiples { k } => Err(Error::validation(
                "rule registry",
                format!("multiples rule requires k >= 1, got {k}"),
            )),
            RuleKind::Powers { base } if base >= 2 => Ok(()),
            RuleKind::Powers { base } => Err(Error::validation(
                "rule registry",
                format!("powers rule requires base >= 2, got {base}"),
            )),
            RuleKind::EndsIn { digit } if digit <= 9 => Ok(()),
            RuleKind::EndsIn { digit } => Err(Error::validation(
                "rule registry",
                format!("ends_in rule requires a decimal digit, got {digit}"),
            )),
        }
    }
}

/// A registry entry: stable id, display label, rule definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub id: String,
    pub label: String,
    #[serde(flatten)]
    pub kind: RuleKind,
}

/// Ordered collection of rule specs. Order matters: it fixes hypothesis
/// ordering in the built space and decides which entry survives extensional
/// deduplication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleRegistry {
    rules: Vec<RuleSpec>,
}

impl RuleRegistry {
    /// Wrap a list of rule specs, validating non-emptiness, parameter ranges,
    /// and id uniqueness.
    pub fn new(rules: Vec<RuleSpec>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::EmptyRegistry);
        }
        let mut seen = std::collections::BTreeSet::new();
        for rule in &rules {
            rule.kind.validate()?;
            if !seen.insert(rule.id.as_str()) {
                return Err(Error::validation(
                    "rule registry",
                    format!("duplicate rule id '{}'", rule.id),
                ));
            }
        }
        Ok(RuleRegistry { rules })
    }

    /// The default registry: the six base predicates, multiples of 3..=12,
    /// powers of 2..=10, and last-digit rules for 0..=9.
    pub fn default_registry() -> Self {
        let mut rules = Vec::new();
        let predicates = [
            (Predicate::AllNumbers, "all_numbers", "all numbers"),
            (Predicate::Even, "even", "even numbers"),
            (Predicate::Odd, "odd", "odd numbers"),
            (Predicate::Square, "square", "square numbers"),
            (Predicate::Cube, "cube", "cube numbers"),
            (Predicate::Prime, "prime", "prime numbers"),
        ];
        for (name, id, label) in predicates {
            rules.push(RuleSpec {
                id: id.to_string(),
                label: label.to_string(),
                kind: RuleKind::PredicateName { name },
            });
        }
        for k in 3..=12 {
            rules.push(RuleSpec {
                id: format!("multiples_of_{k}"),
                label: format!("multiples of {k}"),
                kind: RuleKind::Multiples { k },
            });
        }
        for base in 2..=10 {
            rules.push(RuleSpec {
                id: format!("powers_of_{base}"),
                label: format!("powers of {base}"),
                kind: RuleKind::Powers { base },
            });
        }
        for digit in 0..=9 {
            rules.push(RuleSpec {
                id: format!("ends_in_{digit}"),
                label: format!("numbers ending in {digit}"),
                kind: RuleKind::EndsIn { digit },
            });
        }
        RuleRegistry { rules }.into_validated()
    }

    fn into_validated(self) -> Self {
        // The default registry is constructed from literals; validation
        // failures here would be programming errors.
        RuleRegistry::new(self.rules).expect("default registry is valid")
    }

    /// Load a registry from a JSON file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(inner) => Error::Parse {
                path: path.display().to_string(),
                location: format!("line {}, column {}", inner.line(), inner.column()),
                message: inner.to_string(),
            },
            other => other,
        })
    }

    /// Parse a registry from a JSON string.
    pub fn from_json(text: &str) -> Result<Self> {
        let rules: Vec<RuleSpec> = serde_json::from_str(text)?;
        RuleRegistry::new(rules)
    }

    /// Serialize the registry to pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rules).expect("registry serializes")
    }

    pub fn rules(&self) -> &[RuleSpec] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}
