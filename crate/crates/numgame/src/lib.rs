//! Bayesian concept induction for the number game.
//!
//! In the number game an agent sees a few example numbers (say {2, 8}) and
//! rates, for every target 1..=100, whether it belongs to the same hidden
//! concept. This crate implements the classic Bayesian account of that task
//! and the tooling to compare it against observed behavior:
//!
//! - [`space`]: hypothesis spaces mixing rule concepts (even numbers,
//!   multiples, primes, powers, ...) with all 5050 contiguous intervals;
//! - [`engine`]: mixture priors with a rule bias lambda, the size-principle
//!   likelihood 1/|h|^n with an optional lapse rate 1 - alpha, and three
//!   generalization strategies (hypothesis averaging, MAP, maximum
//!   likelihood);
//! - [`eval`]: Jensen-Shannon divergence between response matrices, per set
//!   and grouped by example-set length;
//! - [`fit`]: grid search over (lambda, alpha) with local refinement;
//! - [`dataset`]: example-set / response-matrix file formats and a seeded
//!   synthetic dataset generator;
//! - [`harness`]: a batch yes/no query client for chat-completion endpoints,
//!   with retries, budgets, and a replayable trial log.
//!
//! # Quick start
//!
//! ```
//! use numgame::engine::{predict, ExampleSet, ModelConfig};
//! use numgame::space::{build_space, RuleRegistry};
//!
//! let space = build_space(100, &RuleRegistry::default_registry())?;
//! let set = ExampleSet::new("L2:2-8", vec![2, 8]);
//! let prediction = predict(&space, &set, &ModelConfig::baseline(100))?;
//!
//! // 16 fits both "powers of 2" and nearby intervals; 97 fits almost nothing.
//! assert!(prediction.values[15] > 0.5);
//! assert!(prediction.values[96] < 0.05);
//! # Ok::<(), numgame::Error>(())
//! ```

pub mod dataset;
pub mod engine;
pub mod error;
pub mod eval;
pub mod fit;
pub mod harness;
pub mod space;

pub use error::{Error, ErrorClass, Result};

// Book chapters double as doctests so the guide stays in sync with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/hypothesis-spaces.md")]
    mod hypothesis_spaces {}
    #[doc = include_str!("../../../book/src/inference.md")]
    mod inference {}
    #[doc = include_str!("../../../book/src/model-variants.md")]
    mod model_variants {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/llm-harness.md")]
    mod llm_harness {}
}
