//! Naive rendezvous product of clients and resources.

use std::collections::{HashMap, VecDeque};

use osgi_core::model::Ident;
use osgi_core::protocol::{Binding, Event};

use crate::lang::Lang;

pub struct OracleResource {
    pub name: Ident,
    pub lang: Lang,
    pub exclusive: bool,
    pub acquire: Vec<Ident>,
    pub release: Vec<Ident>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Node {
    clients: Vec<Lang>,
    resources: Vec<Lang>,
    holders: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProductOutcome {
    NoDeadlock { states: usize },
    /// A shortest path, as (client, event) pairs, and the holders at the end.
    Deadlock { path: Vec<(usize, Event)>, holders: Vec<Option<usize>>, states: usize },
}

fn moves(
    node: &Node,
    alphabets: &[Vec<Event>],
    resources: &[OracleResource],
    binding: &Binding,
) -> Vec<((usize, Event), Node)> {
    let mut out = Vec::new();
    for (c, lang) in node.clients.iter().enumerate() {
        for e in &alphabets[c] {
            let after = lang.step(e);
            if after.stuck() {
                continue;
            }
            let Some(target) = binding.get(&e.label) else { continue };
            let Some(r) = resources.iter().position(|x| x.name == target.resource) else { continue };
            let res_after = node.resources[r].step(&target.event());
            if res_after.stuck() {
                continue;
            }
            let decl = &resources[r];
            if decl.exclusive && node.holders[r].is_some_and(|h| h != c) {
                continue;
            }
            let mut next = node.clone();
            next.clients[c] = after;
            next.resources[r] = res_after;
            if decl.exclusive {
                if decl.acquire.contains(&target.label) {
                    next.holders[r] = Some(c);
                } else if decl.release.contains(&target.label) {
                    next.holders[r] = None;
                }
            }
            out.push(((c, e.clone()), next));
        }
    }
    out
}

/// Breadth-first search for a reachable node where nothing moves and some
/// client cannot stop.
pub fn deadlock_search(
    clients: &[(Lang, Vec<Event>)],
    resources: &[OracleResource],
    binding: &Binding,
) -> ProductOutcome {
    let alphabets: Vec<Vec<Event>> = clients.iter().map(|(_, a)| a.clone()).collect();
    let start = Node {
        clients: clients.iter().map(|(l, _)| l.clone()).collect(),
        resources: resources.iter().map(|r| r.lang.clone()).collect(),
        holders: vec![None; resources.len()],
    };
    let mut seen = HashMap::from([(start.clone(), ())]);
    let mut queue = VecDeque::from([(start, Vec::new())]);
    while let Some((node, path)) = queue.pop_front() {
        let next = moves(&node, &alphabets, resources, binding);
        if next.is_empty() && !node.clients.iter().all(Lang::accepting) {
            return ProductOutcome::Deadlock { path, holders: node.holders, states: seen.len() };
        }
        for (step, succ) in next {
            if seen.insert(succ.clone(), ()).is_none() {
                let mut p = path.clone();
                p.push(step);
                queue.push_back((succ, p));
            }
        }
    }
    ProductOutcome::NoDeadlock { states: seen.len() }
}

/// Replays `path` and reports whether it ends in a deadlocked node.
pub fn replays_to_deadlock(
    clients: &[(Lang, Vec<Event>)],
    resources: &[OracleResource],
    binding: &Binding,
    path: &[(usize, Event)],
) -> bool {
    let alphabets: Vec<Vec<Event>> = clients.iter().map(|(_, a)| a.clone()).collect();
    let mut node = Node {
        clients: clients.iter().map(|(l, _)| l.clone()).collect(),
        resources: resources.iter().map(|r| r.lang.clone()).collect(),
        holders: vec![None; resources.len()],
    };
    for step in path {
        match moves(&node, &alphabets, resources, binding).into_iter().find(|(s, _)| s == step) {
            Some((_, n)) => node = n,
            None => return false,
        }
    }
    moves(&node, &alphabets, resources, binding).is_empty() && !node.clients.iter().all(Lang::accepting)
}
