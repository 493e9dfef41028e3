//! Protocol specifications over method-call events.
//!
//! Protocols are written either as regular expressions over [`Event`]s or as
//! finite automata. Both forms can be parameterized by a single variable and
//! instantiated over concrete resource instances. On top of that sit trace
//! monitoring, language inclusion, projection of client traces onto a
//! resource's alphabet and rendezvous composition for deadlock search.

mod automaton;
mod compose;
mod inclusion;
mod instantiate;
mod monitor;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::Ident;

pub use automaton::{determinize, to_nfa, Dfa};
pub use compose::{compose_deadlock, BlockedState, DeadlockVerdict, WitnessStep};
pub use inclusion::{included, project, project_automaton, Inclusion};
pub use instantiate::{instantiate, Style};
pub use monitor::{monitor, Monitor, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// Expected incoming call.
    Inc,
    /// Performed outgoing call.
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Inc => "INC",
            Direction::Out => "OUT",
        })
    }
}

/// Event or location parameter: a concrete value, or a reference to the
/// variable of a parameterized specification.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    Value(Ident),
    Var(Ident),
}

impl Param {
    pub fn name(&self) -> &Ident {
        match self {
            Param::Value(v) | Param::Var(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub direction: Direction,
    pub label: Ident,
    pub parameter: Option<Param>,
}

impl Event {
    pub fn inc(label: impl Into<Ident>) -> Self {
        Event { direction: Direction::Inc, label: label.into(), parameter: None }
    }

    pub fn out(label: impl Into<Ident>) -> Self {
        Event { direction: Direction::Out, label: label.into(), parameter: None }
    }

    pub fn with_value(mut self, value: impl Into<Ident>) -> Self {
        self.parameter = Some(Param::Value(value.into()));
        self
    }

    pub fn with_var(mut self, var: impl Into<Ident>) -> Self {
        self.parameter = Some(Param::Var(var.into()));
        self
    }

    pub fn is_concrete(&self) -> bool {
        !matches!(self.parameter, Some(Param::Var(_)))
    }
}

/// Trace-file rendering: `INC:Label` or `INC:Label(value)`.
impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.direction, self.label)?;
        match &self.parameter {
            Some(Param::Value(v)) => write!(f, "({v})"),
            Some(Param::Var(v)) => write!(f, "<{v}>"),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProtoExpr {
    Epsilon,
    Atom(Event),
    Concat(Box<ProtoExpr>, Box<ProtoExpr>),
    Alt(Box<ProtoExpr>, Box<ProtoExpr>),
    Star(Box<ProtoExpr>),
}

impl ProtoExpr {
    pub fn atom(e: Event) -> Self {
        ProtoExpr::Atom(e)
    }

    pub fn concat(a: ProtoExpr, b: ProtoExpr) -> Self {
        ProtoExpr::Concat(Box::new(a), Box::new(b))
    }

    pub fn alt(a: ProtoExpr, b: ProtoExpr) -> Self {
        ProtoExpr::Alt(Box::new(a), Box::new(b))
    }

    pub fn star(a: ProtoExpr) -> Self {
        ProtoExpr::Star(Box::new(a))
    }

    /// Left-nested concatenation of `parts`; `Epsilon` when empty.
    pub fn seq(parts: impl IntoIterator<Item = ProtoExpr>) -> Self {
        parts.into_iter().reduce(ProtoExpr::concat).unwrap_or(ProtoExpr::Epsilon)
    }

    /// Left-nested alternation of `parts`; `None` when empty.
    pub fn any(parts: impl IntoIterator<Item = ProtoExpr>) -> Option<Self> {
        parts.into_iter().reduce(ProtoExpr::alt)
    }

    pub fn events(&self) -> BTreeSet<Event> {
        let mut out = BTreeSet::new();
        self.collect_events(&mut out);
        out
    }

    fn collect_events(&self, out: &mut BTreeSet<Event>) {
        match self {
            ProtoExpr::Epsilon => {}
            ProtoExpr::Atom(e) => {
                out.insert(e.clone());
            }
            ProtoExpr::Concat(a, b) | ProtoExpr::Alt(a, b) => {
                a.collect_events(out);
                b.collect_events(out);
            }
            ProtoExpr::Star(a) => a.collect_events(out),
        }
    }

    pub fn is_concrete(&self) -> bool {
        self.events().iter().all(Event::is_concrete)
    }
}

/// Automaton location; `param` marks one copy of a parameterized location.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc {
    pub name: Ident,
    pub param: Option<Param>,
}

impl Loc {
    pub fn new(name: impl Into<Ident>) -> Self {
        Loc { name: name.into(), param: None }
    }

    pub fn with_param(name: impl Into<Ident>, param: Param) -> Self {
        Loc { name: name.into(), param: Some(param) }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if let Some(p) = &self.param {
            write!(f, "<{}>", p.name())?;
        }
        Ok(())
    }
}

/// Labelled transition; `event == None` is a silent move.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub source: Loc,
    pub event: Option<Event>,
    pub target: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProtoAutomaton {
    pub locations: BTreeSet<Loc>,
    pub initial: Loc,
    pub accepting: BTreeSet<Loc>,
    pub transitions: BTreeSet<Transition>,
}

impl ProtoAutomaton {
    pub fn alphabet(&self) -> BTreeSet<Event> {
        self.transitions.iter().filter_map(|t| t.event.clone()).collect()
    }

    pub fn is_concrete(&self) -> bool {
        let loc_ok = |l: &Loc| !matches!(l.param, Some(Param::Var(_)));
        self.locations.iter().all(loc_ok) && self.alphabet().iter().all(Event::is_concrete)
    }

    pub fn check(&self) -> Result<(), ProtocolError> {
        let known = |l: &Loc| self.locations.contains(l);
        if !known(&self.initial) {
            return Err(ProtocolError::UnknownLocation(self.initial.to_string()));
        }
        for l in self.accepting.iter().chain(self.transitions.iter().flat_map(|t| [&t.source, &t.target])) {
            if !known(l) {
                return Err(ProtocolError::UnknownLocation(l.to_string()));
            }
        }
        Ok(())
    }
}

/// A concrete protocol in either notation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Spec {
    Expr(ProtoExpr),
    Automaton(ProtoAutomaton),
}

impl Spec {
    pub fn is_concrete(&self) -> bool {
        match self {
            Spec::Expr(e) => e.is_concrete(),
            Spec::Automaton(a) => a.is_concrete(),
        }
    }

    /// The automaton form, converting expressions with [`to_nfa`].
    pub fn automaton(&self) -> Result<ProtoAutomaton, ProtocolError> {
        match self {
            Spec::Expr(e) => to_nfa(e),
            Spec::Automaton(a) => {
                if !a.is_concrete() {
                    return Err(ProtocolError::Parameterized);
                }
                a.check()?;
                Ok(a.clone())
            }
        }
    }

    pub fn alphabet(&self) -> BTreeSet<Event> {
        match self {
            Spec::Expr(e) => e.events(),
            Spec::Automaton(a) => a.alphabet(),
        }
    }
}

impl From<ProtoExpr> for Spec {
    fn from(e: ProtoExpr) -> Self {
        Spec::Expr(e)
    }
}

impl From<ProtoAutomaton> for Spec {
    fn from(a: ProtoAutomaton) -> Self {
        Spec::Automaton(a)
    }
}

/// A specification with one declared variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub variables: Vec<Ident>,
    pub body: Spec,
}

/// Where a client's outgoing label lands on a resource.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BindTarget {
    pub resource: Ident,
    pub label: Ident,
    pub parameter: Option<Ident>,
}

impl BindTarget {
    pub fn new(resource: impl Into<Ident>, label: impl Into<Ident>) -> Self {
        BindTarget { resource: resource.into(), label: label.into(), parameter: None }
    }

    /// The incoming event this target receives.
    pub fn event(&self) -> Event {
        Event {
            direction: Direction::Inc,
            label: self.label.clone(),
            parameter: self.parameter.clone().map(Param::Value),
        }
    }
}

/// Client OUT label -> resource instance and INC label.
pub type Binding = BTreeMap<Ident, BindTarget>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceDecl {
    pub automaton: ProtoAutomaton,
    pub acquire_labels: BTreeSet<Ident>,
    pub release_labels: BTreeSet<Ident>,
    pub exclusive: bool,
}

impl ResourceDecl {
    /// A resource with the default `Lock`/`Unlock` acquire and release labels.
    pub fn new(automaton: ProtoAutomaton, exclusive: bool) -> Self {
        ResourceDecl {
            automaton,
            acquire_labels: [Ident::new("Lock")].into(),
            release_labels: [Ident::new("Unlock")].into(),
            exclusive,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("specification is parameterized; instantiate it first")]
    Parameterized,
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("variable `{0}` is not declared")]
    UnboundVariable(Ident),
    #[error("initial location `{0}` cannot be parameterized when replicating")]
    ParameterizedInitial(String),
    #[error("exactly one parameter variable is supported, found {0}")]
    VariableCount(usize),
    #[error("instantiation needs at least one value")]
    NoValues,
    #[error("value `{0}` listed more than once")]
    DuplicateValue(Ident),
    #[error("client event `{0}` is not bound to any resource")]
    UnboundEvent(Event),
    #[error("binding refers to unknown resource `{0}`")]
    UnknownResource(Ident),
    #[error("resource `{resource}` does not use label `{label}`")]
    UnknownResourceLabel { resource: Ident, label: Ident },
}
