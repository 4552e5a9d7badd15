//! Thompson automata: construction, a small DFA oracle and coverage.

mod classes;
mod compile;
mod coverage;
mod dfa;
mod nfa;

pub use classes::{class_ranges, dot_set, escape_set, posix_set, property_set, CharSet};
pub use compile::{
    compile, compile_program, compile_with, CompileError, CompileOptions, ANALYSIS_STATE_CAP,
    ENGINE_STATE_CAP,
};
pub use coverage::edge_coverage;
pub use dfa::{subset_construct, subset_construct_mode, Dfa, DfaError, DfaState, MatchMode};
pub use nfa::{assertion_holds, Label, Nfa, State, StateId, Transition};
