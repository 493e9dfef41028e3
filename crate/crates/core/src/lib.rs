//! Executable model of dynamic component systems: bundles that come and go,
//! objects created and deleted inside them, and methods written as automata
//! whose edges call other methods or change the system structure.
//!
//! - [`model`]: system definitions, validation, runtime configurations
//! - [`semantics`]: the transition relation
//! - [`explorer`]: state-space search, simulation and interactive stepping
//! - [`protocol`]: call protocols, monitoring, inclusion and deadlock search
//! - [`invariants`]: propositional properties over configurations
//! - [`dsl`]: the text formats

pub mod dsl;
pub mod explorer;
pub mod invariants;
pub mod model;
pub mod protocol;
pub mod semantics;

pub use model::{Ident, InstanceId, RuntimeConfig, SystemDef};
