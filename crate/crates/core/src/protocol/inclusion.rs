use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{Binding, Dfa, Direction, Event, ProtoAutomaton, ProtocolError, Spec, Transition};
use crate::model::Ident;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inclusion {
    Included,
    /// A shortest trace accepted by the left specification but not the right.
    NotIncluded(Vec<Event>),
}

/// Decides `L(a) ⊆ L(b)` by breadth-first search of the product of both
/// determinized automata over the union alphabet.
pub fn included(a: &Spec, b: &Spec) -> Result<Inclusion, ProtocolError> {
    let alphabet: BTreeSet<Event> = a.alphabet().union(&b.alphabet()).cloned().collect();
    let da = Dfa::from_spec(a, &alphabet)?;
    let db = Dfa::from_spec(b, &alphabet)?;
    debug_assert_eq!(da.alphabet, db.alphabet);

    let start = (da.initial, db.initial);
    let mut parent: HashMap<(usize, usize), Option<((usize, usize), usize)>> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    while let Some(pair @ (sa, sb)) = queue.pop_front() {
        if da.accepting[sa] && !db.accepting[sb] {
            let mut trace = Vec::new();
            let mut cur = pair;
            while let Some((prev, sym)) = parent[&cur] {
                trace.push(da.alphabet[sym].clone());
                cur = prev;
            }
            trace.reverse();
            return Ok(Inclusion::NotIncluded(trace));
        }
        // nothing in L(a) continues from a's dead state
        if sa == da.dead {
            continue;
        }
        for sym in 0..da.alphabet.len() {
            let next = (da.next[sa][sym], db.next[sb][sym]);
            if let std::collections::hash_map::Entry::Vacant(slot) = parent.entry(next) {
                slot.insert(Some((pair, sym)));
                queue.push_back(next);
            }
        }
    }
    Ok(Inclusion::Included)
}

fn bound_event(e: &Event, binding: &Binding, resource: &Ident) -> Option<Event> {
    if e.direction != Direction::Out {
        return None;
    }
    binding.get(&e.label).filter(|t| &t.resource == resource).map(|t| t.event())
}

/// Rewrites a client's outgoing events bound to `resource` into that
/// resource's incoming alphabet, dropping everything else.
pub fn project(trace: &[Event], binding: &Binding, resource: &Ident) -> Vec<Event> {
    trace.iter().filter_map(|e| bound_event(e, binding, resource)).collect()
}

/// Language-level [`project`]: events not bound to `resource` become silent moves.
pub fn project_automaton(a: &ProtoAutomaton, binding: &Binding, resource: &Ident) -> ProtoAutomaton {
    let transitions = a
        .transitions
        .iter()
        .map(|t| Transition {
            source: t.source.clone(),
            event: t.event.as_ref().and_then(|e| bound_event(e, binding, resource)),
            target: t.target.clone(),
        })
        .collect();
    ProtoAutomaton { transitions, ..a.clone() }
}
