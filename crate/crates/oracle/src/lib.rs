//! Slow, independent reference implementations used to check `osgi-core`.
//!
//! Nothing here shares code with the library under test beyond its plain data
//! types: the semantics is re-derived over id-free call trees, regular
//! expressions are matched with Brzozowski derivatives, automata are run as
//! sets of locations, and products are enumerated naively.

pub mod gen;
pub mod lang;
pub mod product;
pub mod tree;

pub use lang::{nfa_accepts, shortest_difference, shortlex_words, Lang, Re};
pub use product::{deadlock_search, replays_to_deadlock, OracleResource, ProductOutcome};
pub use tree::{explore, from_config, Child, Exploration, Frame, Move, State};
