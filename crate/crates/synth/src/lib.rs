//! Seeded synthetic scenarios and deliberately naive reference
//! implementations used to cross-check the production pipeline.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`, so a seed pins a scenario exactly.

pub mod fusion_ref;
mod oracle;
mod scenario;

pub use oracle::{oracle_aggregate, oracle_ap, oracle_map, ORACLE_MAX_FRAMES, ORACLE_MAX_PREDS};
pub use scenario::{gen_scenario, recovery_rate, to_records, Noise, Scenario, ScenarioParams, NOUNS, VERBS};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("{name} must lie in [0, 1), got {value}")]
    Rate { name: &'static str, value: f64 },
    #[error("invalid scenario parameters: {0}")]
    Params(String),
    #[error("instance too large for the reference evaluator: {0}")]
    TooLarge(String),
    #[error("unknown variant {0:?}")]
    UnknownVariant(String),
}
