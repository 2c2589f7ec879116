//! Membrane systems under maximally parallel semantics, their translation to
//! zero-safe nets, individual-token unfoldings, and event structures with
//! simultaneity.

pub mod compile;
pub mod ess;
pub mod fixtures;
pub mod multiset;
pub mod psystem;
pub mod random;
pub mod semantics;
pub mod unfold;
pub mod zsnet;

pub use multiset::{Count, CountOverflow, Multiset};
pub use psystem::{
    parse, parse_with, Diagnostic, Diagnostics, MembraneId, MembraneSystem, MembraneTree,
    ParseOptions, PsystemError, Rule, RuleName, Symbol, Target,
};
