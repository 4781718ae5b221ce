//! Fixed-parameter solvers for stable matching on typed instances.
//!
//! Agents are partitioned into `k` types that determine their preferences.
//! The solvers enumerate small per-type profiles (worst partner types,
//! signatures, exception profiles) and, for each, decide feasibility with
//! an exact integer program, a max-flow, or a general matching. Every
//! solver has a brute-force counterpart in [`oracle`].

// Type-indexed matrices read most clearly with explicit index loops.
#![allow(clippy::needless_range_loop)]

pub mod agents;
pub mod error;
pub mod exceptions;
pub mod gen;
pub mod graphalg;
pub mod hrc;
pub mod instance;
pub mod matching;
pub mod oracle;
pub mod par;
pub mod parse;
pub mod quality;
pub mod reductions;
pub mod refined;
pub mod smallip;
pub mod typed;

pub use agents::{derive_types, expand_to_agent_level, AgentInstance};
pub use instance::{
    CoupleType, ExceptionEntry, InstanceError, Placement, ProblemKind, Side, TypePreference,
    TypeSpec, TypedInstance, UNACCEPTABLE,
};
pub use error::SolveError;
pub use matching::{AgentMatching, MatchingError};
pub use parse::{parse_instance, write_instance};
