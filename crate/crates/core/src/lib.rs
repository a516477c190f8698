//! Safe composition of straight-line message-passing layers over reliable,
//! non-FIFO channels.
//!
//! A layer `S` *seals* a layer `P` when no communication after `P`, in `S`
//! or anything later, can be matched with `P`'s communication. This crate
//! builds program graphs and sealing signatures, decides sealing from
//! signatures, synthesizes seals of fewer than `3n` transmissions, and
//! checks all of it against brute-force enumeration of runs.

pub mod catalog;
pub mod dsl;
pub mod error;
pub mod generate;
pub mod graph;
pub mod model;
pub mod oracle;
mod reach;
pub mod sealing;
pub mod signature;

pub use dsl::{parse, print, ParseError, ParseErrorKind, SourceSpan};
pub use error::AnalysisError;
pub use graph::{build_program_graph, deadlock_free, transitive_closure, ClosedEdgeSet, GraphNode, ProgramGraph};
pub use model::{channel_traffic, is_balanced, Channel, EventKind, EventRef, ModelError, ProcessId, Program, Statement, Traffic};
pub use oracle::{
    enumerate_matchings, has_run, oracle_channel_open, oracle_seals, oracle_tcc, Causality, EventPos, EventWorld,
    Matching, OracleBudget, OracleError, Origin,
};
pub use sealing::{
    closed_channels, construct_seal, expand_plan, is_seal, is_sealable, ClosedChannelGraph, Phase, PlanError,
    SealError, SealPlan, Transmission,
};
pub use signature::{compute_signature, signature_compose, signature_equal, SigNode, Signature};
