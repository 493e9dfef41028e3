use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::{Event, Loc, Param, ParamSpec, ProtoAutomaton, ProtoExpr, ProtocolError, Spec, Transition};
use crate::model::Ident;

/// How a parameterized specification is instantiated over several values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Style {
    /// Every value gets its own copy of the parameterized locations (or of
    /// the smallest subexpression containing every variable occurrence).
    Replicate,
    /// Parameterized locations stay single; each parameterized event becomes
    /// the alternation over all values.
    Collapse,
}

impl FromStr for Style {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "replicate" => Ok(Style::Replicate),
            "collapse" => Ok(Style::Collapse),
            other => Err(format!("unknown instantiation style `{other}` (expected replicate or collapse)")),
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Style::Replicate => "replicate",
            Style::Collapse => "collapse",
        })
    }
}

pub fn instantiate(p: &ParamSpec, values: &[Ident], style: Style) -> Result<Spec, ProtocolError> {
    let [var] = p.variables.as_slice() else {
        return Err(ProtocolError::VariableCount(p.variables.len()));
    };
    if values.is_empty() {
        return Err(ProtocolError::NoValues);
    }
    let mut seen = BTreeSet::new();
    for v in values {
        if !seen.insert(v) {
            return Err(ProtocolError::DuplicateValue(v.clone()));
        }
    }
    check_vars(p, var)?;

    Ok(match (&p.body, style) {
        (Spec::Expr(e), Style::Replicate) => Spec::Expr(replicate_expr(e, var, values)),
        (Spec::Expr(e), Style::Collapse) => Spec::Expr(collapse_expr(e, var, values)),
        (Spec::Automaton(a), Style::Replicate) => Spec::Automaton(replicate_automaton(a, var, values)?),
        (Spec::Automaton(a), Style::Collapse) => Spec::Automaton(collapse_automaton(a, var, values)),
    })
}

fn check_vars(p: &ParamSpec, var: &Ident) -> Result<(), ProtocolError> {
    let mut params: Vec<&Param> = Vec::new();
    let events = p.body.alphabet();
    params.extend(events.iter().filter_map(|e| e.parameter.as_ref()));
    if let Spec::Automaton(a) = &p.body {
        params.extend(a.locations.iter().filter_map(|l| l.param.as_ref()));
        a.check()?;
    }
    match params.into_iter().find(|p| matches!(p, Param::Var(v) if v != var)) {
        Some(p) => Err(ProtocolError::UnboundVariable(p.name().clone())),
        None => Ok(()),
    }
}

fn is_var(p: &Option<Param>, var: &Ident) -> bool {
    matches!(p, Some(Param::Var(v)) if v == var)
}

fn subst_event(e: &Event, var: &Ident, value: &Ident) -> Event {
    if is_var(&e.parameter, var) {
        Event { parameter: Some(Param::Value(value.clone())), ..e.clone() }
    } else {
        e.clone()
    }
}

fn subst_loc(l: &Loc, var: &Ident, value: &Ident) -> Loc {
    if is_var(&l.param, var) {
        Loc::with_param(l.name.clone(), Param::Value(value.clone()))
    } else {
        l.clone()
    }
}

fn subst_expr(e: &ProtoExpr, var: &Ident, value: &Ident) -> ProtoExpr {
    match e {
        ProtoExpr::Epsilon => ProtoExpr::Epsilon,
        ProtoExpr::Atom(ev) => ProtoExpr::Atom(subst_event(ev, var, value)),
        ProtoExpr::Concat(a, b) => ProtoExpr::concat(subst_expr(a, var, value), subst_expr(b, var, value)),
        ProtoExpr::Alt(a, b) => ProtoExpr::alt(subst_expr(a, var, value), subst_expr(b, var, value)),
        ProtoExpr::Star(a) => ProtoExpr::star(subst_expr(a, var, value)),
    }
}

fn mentions(e: &ProtoExpr, var: &Ident) -> bool {
    e.events().iter().any(|ev| is_var(&ev.parameter, var))
}

fn alternatives(e: &ProtoExpr, var: &Ident, values: &[Ident]) -> ProtoExpr {
    ProtoExpr::any(values.iter().map(|v| subst_expr(e, var, v))).expect("values nonempty")
}

/// Replaces the lowest subterm containing every occurrence of `var` by the
/// alternation of its per-value copies.
fn replicate_expr(e: &ProtoExpr, var: &Ident, values: &[Ident]) -> ProtoExpr {
    match e {
        ProtoExpr::Concat(a, b) | ProtoExpr::Alt(a, b) => {
            let rebuild = |a, b| match e {
                ProtoExpr::Concat(..) => ProtoExpr::concat(a, b),
                _ => ProtoExpr::alt(a, b),
            };
            match (mentions(a, var), mentions(b, var)) {
                (true, true) => alternatives(e, var, values),
                (true, false) => rebuild(replicate_expr(a, var, values), (**b).clone()),
                (false, true) => rebuild((**a).clone(), replicate_expr(b, var, values)),
                (false, false) => e.clone(),
            }
        }
        ProtoExpr::Star(a) if mentions(a, var) => ProtoExpr::star(replicate_expr(a, var, values)),
        ProtoExpr::Atom(_) if mentions(e, var) => alternatives(e, var, values),
        _ => e.clone(),
    }
}

fn collapse_expr(e: &ProtoExpr, var: &Ident, values: &[Ident]) -> ProtoExpr {
    match e {
        ProtoExpr::Epsilon => ProtoExpr::Epsilon,
        ProtoExpr::Atom(ev) if is_var(&ev.parameter, var) => alternatives(e, var, values),
        ProtoExpr::Atom(_) => e.clone(),
        ProtoExpr::Concat(a, b) => ProtoExpr::concat(collapse_expr(a, var, values), collapse_expr(b, var, values)),
        ProtoExpr::Alt(a, b) => ProtoExpr::alt(collapse_expr(a, var, values), collapse_expr(b, var, values)),
        ProtoExpr::Star(a) => ProtoExpr::star(collapse_expr(a, var, values)),
    }
}

fn replicate_automaton(a: &ProtoAutomaton, var: &Ident, values: &[Ident]) -> Result<ProtoAutomaton, ProtocolError> {
    if is_var(&a.initial.param, var) {
        return Err(ProtocolError::ParameterizedInitial(a.initial.to_string()));
    }
    let expand_loc = |l: &Loc| -> Vec<Loc> {
        if is_var(&l.param, var) {
            values.iter().map(|v| subst_loc(l, var, v)).collect()
        } else {
            vec![l.clone()]
        }
    };
    let mut transitions = BTreeSet::new();
    for t in &a.transitions {
        let parameterized = is_var(&t.source.param, var)
            || is_var(&t.target.param, var)
            || t.event.as_ref().is_some_and(|e| is_var(&e.parameter, var));
        if !parameterized {
            transitions.insert(t.clone());
            continue;
        }
        for v in values {
            transitions.insert(Transition {
                source: subst_loc(&t.source, var, v),
                event: t.event.as_ref().map(|e| subst_event(e, var, v)),
                target: subst_loc(&t.target, var, v),
            });
        }
    }
    Ok(ProtoAutomaton {
        locations: a.locations.iter().flat_map(expand_loc).collect(),
        initial: a.initial.clone(),
        accepting: a.accepting.iter().flat_map(expand_loc).collect(),
        transitions,
    })
}

fn collapse_automaton(a: &ProtoAutomaton, var: &Ident, values: &[Ident]) -> ProtoAutomaton {
    let strip = |l: &Loc| if is_var(&l.param, var) { Loc::new(l.name.clone()) } else { l.clone() };
    let mut transitions = BTreeSet::new();
    for t in &a.transitions {
        let (source, target) = (strip(&t.source), strip(&t.target));
        match &t.event {
            Some(e) if is_var(&e.parameter, var) => {
                for v in values {
                    transitions.insert(Transition {
                        source: source.clone(),
                        event: Some(subst_event(e, var, v)),
                        target: target.clone(),
                    });
                }
            }
            event => {
                transitions.insert(Transition { source, event: event.clone(), target });
            }
        }
    }
    ProtoAutomaton {
        locations: a.locations.iter().map(strip).collect(),
        initial: strip(&a.initial),
        accepting: a.accepting.iter().map(strip).collect(),
        transitions,
    }
}
