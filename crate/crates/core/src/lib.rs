//! A Constraint Handling Rules engine with rule priorities.
//!
//! The crate provides, in layers:
//!
//! - [`term`]: first-order terms, substitutions, matching and unification;
//! - [`lang`]: rules, programs, queries, their parser/printer, the
//!   declarative reading, and the body-scaling transform;
//! - [`store`]: the built-in constraint store (syntactic equations, integer
//!   comparisons, and the boolean/list helpers used by the regex solver);
//! - [`engine`]: the prioritized operational semantics over identified
//!   constraint stores with propagation histories;
//! - [`hybrid`]: the source-to-source translation that makes declared
//!   persistent constraints behave set-like and immortal while keeping
//!   every derivation finitely stratified;
//! - [`fixpoint`]: exhaustive state-space enumeration plus least- and
//!   greatest-fixpoint checkers (and their nesting) over it;
//! - [`coind`]: two self-referential end-to-end applications, automaton
//!   bisimulation and regular-expression equivalence.

pub mod coind;
pub mod engine;
pub mod fixpoint;
pub mod hybrid;
pub mod lang;
pub mod store;
pub mod term;
