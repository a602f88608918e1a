//! Build predictive state representations (PSRs) and reward-predictive
//! state representations (R-PSRs) from finite POMDP specifications, audit
//! whether the plain predictive form can carry the POMDP's rewards, solve
//! all three models with alpha-vector value iteration, and cross-evaluate
//! the resulting policies by simulation.
//!
//! Modules:
//!
//! * [`pomdp`]: the finite POMDP model, beliefs, tests, and rewards;
//! * [`parser`]: the Cassandra `.pomdp` text format;
//! * [`numerics`]: independence tests, pseudoinverse, projector;
//! * [`psr`]: predictive state representations and the reward-accuracy
//!   analysis;
//! * [`rpsr`]: reward-predictive state representations;
//! * [`value_iteration`]: exact alpha-vector solving with witness pruning;
//! * [`evaluation`]: Monte-Carlo policy evaluation and the cross-model
//!   scoring grid;
//! * [`cli`]: the command-line front end used by the `rpsr-kit` binary.
//!
//! The `examples/` directory has one runnable example per capability; start
//! with `parse_model` and `psr_case_study`.

pub mod cli;
pub mod evaluation;
pub mod numerics;
pub mod parser;
pub mod pomdp;
pub mod psr;
pub mod rpsr;
mod simplex;
pub mod value_iteration;

pub use parser::{parse_pomdp, serialize_pomdp, ParseError};
pub use pomdp::{Interaction, InteractionSeq, Pomdp};
pub use psr::{build_psr, discover_core_tests, PsrModel};
pub use rpsr::{
    build_rpsr, discover_core_intents_bfs, discover_core_intents_dfs, Intent, RpsrModel,
};
pub use value_iteration::{AlphaVector, StateSpace, ValueFunction, ViModel};

/// Version tag carried by every JSON report this crate emits.
pub const SCHEMA_VERSION: u32 = 1;
