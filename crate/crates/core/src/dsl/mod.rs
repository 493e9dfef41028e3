//! Text formats: models, protocols, invariants and traces.
//!
//! Every parser reports problems as [`Diagnostic`](crate::model::Diagnostic)s
//! carrying a source position, and every printer emits text its parser reads
//! back to an equal value.

mod formula;
mod lexer;
mod model;
mod protocol;
mod trace;

pub use formula::parse_invariant;
pub use model::{check_model, parse_model, parse_model_syntax, print_model, ParsedModel};
pub use protocol::{parse_protocol, print_proto_expr, print_protocol, ProtoSpec};
pub use trace::{parse_trace, print_trace};

/// Formulas print through their `Display` impl.
pub fn print_invariant(f: &crate::invariants::Formula) -> String {
    f.to_string()
}
