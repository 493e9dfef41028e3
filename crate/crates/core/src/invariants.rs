//! Propositional invariants over presence and active method locations.

use std::fmt;

use crate::explorer::{Bounds, StateSpace};
use crate::model::{Diagnostic, Ident, ModelError, RuntimeConfig, Site, SystemDef};
use crate::semantics::TransitionInstance;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    BundlePresent(Ident),
    /// `(object, bundle)`
    ObjectPresent(Ident, Ident),
    /// `(method, object, bundle)`
    MethodActive(Ident, Ident, Ident),
    /// `(method, object, bundle, location)`
    AtLocation(Ident, Ident, Ident, Ident),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Const(_) => {}
            Formula::Atom(a) => out.push(a),
            Formula::Not(f) => f.collect(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }
}

impl From<Atom> for Formula {
    fn from(a: Atom) -> Self {
        Formula::Atom(a)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::BundlePresent(b) => write!(f, "bundle({b})"),
            Atom::ObjectPresent(o, b) => write!(f, "object({o}, {b})"),
            Atom::MethodActive(m, o, b) => write!(f, "active({m}, {o}, {b})"),
            Atom::AtLocation(m, o, b, l) => write!(f, "at({m}, {o}, {b}, {l})"),
        }
    }
}

/// Rendering with the minimal parentheses the formula grammar needs.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn prec(f: &Formula) -> u8 {
            match f {
                Formula::Implies(..) => 0,
                Formula::Or(..) => 1,
                Formula::And(..) => 2,
                Formula::Not(_) => 3,
                Formula::Const(_) | Formula::Atom(_) => 4,
            }
        }
        fn side(out: &mut fmt::Formatter<'_>, f: &Formula, min: u8) -> fmt::Result {
            if prec(f) < min {
                write!(out, "({f})")
            } else {
                write!(out, "{f}")
            }
        }
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(inner) => {
                f.write_str("!")?;
                side(f, inner, 3)
            }
            // && and || associate to the left, -> to the right
            Formula::And(a, b) => {
                side(f, a, 2)?;
                f.write_str(" && ")?;
                side(f, b, 3)
            }
            Formula::Or(a, b) => {
                side(f, a, 1)?;
                f.write_str(" || ")?;
                side(f, b, 2)
            }
            Formula::Implies(a, b) => {
                side(f, a, 1)?;
                f.write_str(" -> ")?;
                side(f, b, 0)
            }
        }
    }
}

/// Name-resolution diagnostics for `f` against `def`.
pub fn validate_formula(f: &Formula, def: &SystemDef) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for atom in f.atoms() {
        let ok = match atom {
            Atom::BundlePresent(b) => def.bundle(b).is_some(),
            Atom::ObjectPresent(o, b) => def.object(b, o).is_some(),
            Atom::MethodActive(m, o, b) => def.method(b, o, m).is_some(),
            Atom::AtLocation(m, o, b, l) => def.method(b, o, m).is_some_and(|md| md.locations.contains(l)),
        };
        if !ok {
            diags.push(Diagnostic::error(Some(Site::System), format!("`{atom}` does not resolve against the model")));
        }
    }
    diags
}

pub fn eval_atom(atom: &Atom, cfg: &RuntimeConfig) -> bool {
    match atom {
        Atom::BundlePresent(b) => cfg.bundle_present(b),
        Atom::ObjectPresent(o, b) => cfg.object_present(b, o),
        Atom::MethodActive(m, o, b) => {
            cfg.statuses.values().any(|s| &s.method == m && &s.object == o && &s.bundle == b)
        }
        Atom::AtLocation(m, o, b, l) => cfg
            .statuses
            .values()
            .any(|s| &s.method == m && &s.object == o && &s.bundle == b && &s.location == l),
    }
}

/// Classical evaluation; atoms quantify existentially over instances.
pub fn eval(f: &Formula, cfg: &RuntimeConfig) -> bool {
    match f {
        Formula::Const(b) => *b,
        Formula::Atom(a) => eval_atom(a, cfg),
        Formula::Not(g) => !eval(g, cfg),
        Formula::And(a, b) => eval(a, cfg) && eval(b, cfg),
        Formula::Or(a, b) => eval(a, cfg) || eval(b, cfg),
        Formula::Implies(a, b) => !eval(a, cfg) || eval(b, cfg),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InvariantError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("formula does not resolve: {}", .0.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    Unresolved(Vec<Diagnostic>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReachCheck {
    Holds,
    /// Shortest path from the initial state to a violating configuration.
    Violated(Vec<TransitionInstance>),
    /// Exploration hit a bound before finding a violation.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preservation {
    Preserved,
    /// Canonical pre-configurations and the structural transition that broke the formula.
    Broken(Vec<(RuntimeConfig, TransitionInstance)>),
    Inconclusive,
}

fn prepare(def: &SystemDef, f: &Formula, bounds: Bounds) -> Result<StateSpace, InvariantError> {
    let diags = validate_formula(f, def);
    if !diags.is_empty() {
        return Err(InvariantError::Unresolved(diags));
    }
    Ok(StateSpace::build(def, bounds)?)
}

/// Checks `f` in every reachable configuration.
pub fn check_reachable(def: &SystemDef, f: &Formula, bounds: Bounds) -> Result<ReachCheck, InvariantError> {
    let space = prepare(def, f, bounds)?;
    // states are in breadth-first order, so the first failure is a closest one
    if let Some(i) = space.states.iter().position(|cfg| !eval(f, cfg)) {
        return Ok(ReachCheck::Violated(space.path_to(def, i)));
    }
    Ok(if space.truncated { ReachCheck::Inconclusive } else { ReachCheck::Holds })
}

/// Checks that every explored structural transition (add/remove bundle,
/// create/delete object, including environment steps) maps a state
/// satisfying `f` to one satisfying `f`.
pub fn check_structural_preservation(
    def: &SystemDef,
    f: &Formula,
    bounds: Bounds,
) -> Result<Preservation, InvariantError> {
    let space = prepare(def, f, bounds)?;
    let broken: Vec<_> = space
        .edges
        .iter()
        .filter(|(pre, t, _)| t.is_structural(def, &space.states[*pre]))
        .filter(|(pre, _, post)| eval(f, &space.states[*pre]) && !eval(f, &space.states[*post]))
        .map(|(pre, t, _)| (space.states[*pre].clone(), t.clone()))
        .collect();
    Ok(if !broken.is_empty() {
        Preservation::Broken(broken)
    } else if space.truncated {
        Preservation::Inconclusive
    } else {
        Preservation::Preserved
    })
}
