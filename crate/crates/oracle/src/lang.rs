//! Regular languages by Brzozowski derivatives, and automata run as location sets.

use std::collections::{BTreeSet, HashMap, VecDeque};

use osgi_core::protocol::{Event, Loc, ProtoAutomaton, ProtoExpr, Spec};

/// Regular expression kept in a normal form where `Empty` appears only at the top.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Re {
    Empty,
    Eps,
    Sym(Event),
    Cat(Box<Re>, Box<Re>),
    Alt(BTreeSet<Re>),
    Star(Box<Re>),
}

impl Re {
    pub fn cat(a: Re, b: Re) -> Re {
        match (a, b) {
            (Re::Empty, _) | (_, Re::Empty) => Re::Empty,
            (Re::Eps, x) | (x, Re::Eps) => x,
            (Re::Cat(x, y), z) => Re::cat(*x, Re::cat(*y, z)),
            (x, y) => Re::Cat(Box::new(x), Box::new(y)),
        }
    }

    pub fn alt(a: Re, b: Re) -> Re {
        let mut set = BTreeSet::new();
        for r in [a, b] {
            match r {
                Re::Empty => {}
                Re::Alt(inner) => set.extend(inner),
                other => {
                    set.insert(other);
                }
            }
        }
        match set.len() {
            0 => Re::Empty,
            1 => set.into_iter().next().expect("one element"),
            _ => Re::Alt(set),
        }
    }

    pub fn star(a: Re) -> Re {
        match a {
            Re::Empty | Re::Eps => Re::Eps,
            s @ Re::Star(_) => s,
            other => Re::Star(Box::new(other)),
        }
    }

    pub fn from_expr(e: &ProtoExpr) -> Re {
        match e {
            ProtoExpr::Epsilon => Re::Eps,
            ProtoExpr::Atom(ev) => Re::Sym(ev.clone()),
            ProtoExpr::Concat(a, b) => Re::cat(Re::from_expr(a), Re::from_expr(b)),
            ProtoExpr::Alt(a, b) => Re::alt(Re::from_expr(a), Re::from_expr(b)),
            ProtoExpr::Star(a) => Re::star(Re::from_expr(a)),
        }
    }

    pub fn nullable(&self) -> bool {
        match self {
            Re::Empty | Re::Sym(_) => false,
            Re::Eps | Re::Star(_) => true,
            Re::Cat(a, b) => a.nullable() && b.nullable(),
            Re::Alt(s) => s.iter().any(Re::nullable),
        }
    }

    pub fn deriv(&self, e: &Event) -> Re {
        match self {
            Re::Empty | Re::Eps => Re::Empty,
            Re::Sym(x) => {
                if x == e {
                    Re::Eps
                } else {
                    Re::Empty
                }
            }
            Re::Cat(a, b) => {
                let left = Re::cat(a.deriv(e), (**b).clone());
                if a.nullable() {
                    Re::alt(left, b.deriv(e))
                } else {
                    left
                }
            }
            Re::Alt(s) => s.iter().fold(Re::Empty, |acc, r| Re::alt(acc, r.deriv(e))),
            Re::Star(a) => Re::cat(a.deriv(e), self.clone()),
        }
    }

    pub fn matches(&self, trace: &[Event]) -> bool {
        trace.iter().fold(self.clone(), |r, e| r.deriv(e)).nullable()
    }
}

fn closure(a: &ProtoAutomaton, mut set: BTreeSet<Loc>) -> BTreeSet<Loc> {
    loop {
        let more: Vec<Loc> = a
            .transitions
            .iter()
            .filter(|t| t.event.is_none() && set.contains(&t.source) && !set.contains(&t.target))
            .map(|t| t.target.clone())
            .collect();
        if more.is_empty() {
            return set;
        }
        set.extend(more);
    }
}

fn nfa_step(a: &ProtoAutomaton, set: &BTreeSet<Loc>, e: &Event) -> BTreeSet<Loc> {
    let next = a
        .transitions
        .iter()
        .filter(|t| t.event.as_ref() == Some(e) && set.contains(&t.source))
        .map(|t| t.target.clone())
        .collect();
    closure(a, next)
}

pub fn nfa_accepts(a: &ProtoAutomaton, trace: &[Event]) -> bool {
    let start = closure(a, [a.initial.clone()].into());
    let end = trace.iter().fold(start, |s, e| nfa_step(a, &s, e));
    end.iter().any(|l| a.accepting.contains(l))
}

/// A residual language: what may still follow the events read so far.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Lang {
    Re(Re),
    Nfa(std::sync::Arc<ProtoAutomaton>, BTreeSet<Loc>),
}

impl Lang {
    pub fn of(spec: &Spec) -> Lang {
        match spec {
            Spec::Expr(e) => Lang::Re(Re::from_expr(e)),
            Spec::Automaton(a) => {
                let start = closure(a, [a.initial.clone()].into());
                Lang::Nfa(std::sync::Arc::new(a.clone()), start)
            }
        }
    }

    pub fn step(&self, e: &Event) -> Lang {
        match self {
            Lang::Re(r) => Lang::Re(r.deriv(e)),
            Lang::Nfa(a, s) => Lang::Nfa(a.clone(), nfa_step(a, s, e)),
        }
    }

    pub fn accepting(&self) -> bool {
        match self {
            Lang::Re(r) => r.nullable(),
            Lang::Nfa(a, s) => s.iter().any(|l| a.accepting.contains(l)),
        }
    }

    /// No continuation is possible at all.
    pub fn stuck(&self) -> bool {
        match self {
            Lang::Re(r) => *r == Re::Empty,
            Lang::Nfa(_, s) => s.is_empty(),
        }
    }

    pub fn accepts(&self, trace: &[Event]) -> bool {
        trace.iter().fold(self.clone(), |l, e| l.step(e)).accepting()
    }
}

/// Every word over `alphabet` up to `max_len`, shortest first, then in alphabet order.
pub fn shortlex_words(alphabet: &[Event], max_len: usize) -> Vec<Vec<Event>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for e in alphabet {
                let mut v: Vec<Event> = w.clone();
                v.push(e.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// The shortlex-least word in `L(a) \ L(b)` over the union alphabet, found by
/// exploring pairs of residuals. Terminates because both residual sets are finite.
pub fn shortest_difference(a: &Spec, b: &Spec) -> Option<Vec<Event>> {
    let alphabet: Vec<Event> = a.alphabet().union(&b.alphabet()).cloned().collect();
    let start = (Lang::of(a), Lang::of(b));
    let mut seen: HashMap<(Lang, Lang), ()> = HashMap::from([(start.clone(), ())]);
    let mut queue = VecDeque::from([(start, Vec::new())]);
    while let Some(((la, lb), word)) = queue.pop_front() {
        if la.accepting() && !lb.accepting() {
            return Some(word);
        }
        for e in &alphabet {
            let next = (la.step(e), lb.step(e));
            if seen.insert(next.clone(), ()).is_none() {
                let mut w = word.clone();
                w.push(e.clone());
                queue.push_back((next, w));
            }
        }
    }
    None
}
