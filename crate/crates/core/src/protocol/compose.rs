//! Rendezvous product of client protocols with resource protocols.
//!
//! Each client step on an outgoing event synchronizes with the incoming
//! event it is bound to on exactly one resource; both move together. An
//! exclusive resource records the client that fired an acquire label as its
//! holder and refuses every other client until a release label fires.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use super::{Binding, Dfa, Event, ProtoAutomaton, ProtocolError, ResourceDecl};
use crate::model::Ident;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessStep {
    pub client: usize,
    pub event: Event,
    pub resource: Ident,
    pub resource_event: Event,
}

impl fmt::Display for WitnessStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "client {}: {} ~ {}.{}", self.client, self.event, self.resource, self.resource_event)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientState {
    /// Determinized location, `q<n>`.
    pub location: String,
    pub accepting: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceState {
    pub name: Ident,
    pub location: String,
    pub holder: Option<usize>,
}

/// The product state in which nothing can move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockedState {
    pub clients: Vec<ClientState>,
    pub resources: Vec<ResourceState>,
}

impl fmt::Display for BlockedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clients.iter().enumerate() {
            let status = if c.accepting { "finished" } else { "blocked" };
            writeln!(f, "client {i} at {} ({status})", c.location)?;
        }
        for r in &self.resources {
            match r.holder {
                Some(h) => writeln!(f, "resource {} at {} held by client {h}", r.name, r.location)?,
                None => writeln!(f, "resource {} at {}", r.name, r.location)?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeadlockVerdict {
    NoDeadlock { states: usize },
    Deadlock { witness: Vec<WitnessStep>, blocked: BlockedState, states: usize },
}

impl DeadlockVerdict {
    pub fn is_deadlock(&self) -> bool {
        matches!(self, DeadlockVerdict::Deadlock { .. })
    }

    /// Product states explored.
    pub fn states(&self) -> usize {
        match self {
            DeadlockVerdict::NoDeadlock { states } | DeadlockVerdict::Deadlock { states, .. } => *states,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Product {
    clients: Vec<usize>,
    resources: Vec<usize>,
    holders: Vec<Option<usize>>,
}

struct Sync {
    resource: usize,
    event: Event,
    acquire: bool,
    release: bool,
}

struct Composition<'a> {
    clients: Vec<Dfa>,
    resources: Vec<Dfa>,
    decls: &'a [(Ident, ResourceDecl)],
    /// Per client and symbol: the rendezvous partner.
    syncs: Vec<Vec<Sync>>,
}

impl Composition<'_> {
    fn successors(&self, s: &Product) -> Vec<(WitnessStep, Product)> {
        let mut out = Vec::new();
        for (i, client) in self.clients.iter().enumerate() {
            for (sym, sync) in self.syncs[i].iter().enumerate() {
                let next_client = client.next[s.clients[i]][sym];
                if next_client == client.dead {
                    continue;
                }
                let r = sync.resource;
                let res = &self.resources[r];
                let next_res = res.step(s.resources[r], &sync.event);
                if next_res == res.dead {
                    continue;
                }
                let exclusive = self.decls[r].1.exclusive;
                if exclusive && s.holders[r].is_some_and(|h| h != i) {
                    continue;
                }
                let mut next = s.clone();
                next.clients[i] = next_client;
                next.resources[r] = next_res;
                if exclusive {
                    if sync.acquire {
                        next.holders[r] = Some(i);
                    } else if sync.release {
                        next.holders[r] = None;
                    }
                }
                let step = WitnessStep {
                    client: i,
                    event: client.alphabet[sym].clone(),
                    resource: self.decls[r].0.clone(),
                    resource_event: sync.event.clone(),
                };
                out.push((step, next));
            }
        }
        out
    }

    fn is_finished(&self, s: &Product) -> bool {
        self.clients.iter().zip(&s.clients).all(|(d, &q)| d.accepting[q])
    }

    fn describe(&self, s: &Product) -> BlockedState {
        BlockedState {
            clients: self
                .clients
                .iter()
                .zip(&s.clients)
                .map(|(d, &q)| ClientState { location: format!("q{q}"), accepting: d.accepting[q] })
                .collect(),
            resources: self
                .decls
                .iter()
                .zip(&s.resources)
                .zip(&s.holders)
                .map(|(((name, _), &q), &holder)| ResourceState { name: name.clone(), location: format!("q{q}"), holder })
                .collect(),
        }
    }
}

/// Searches the interleaved product for a reachable state where nothing is
/// enabled and some client has not finished. The witness is a shortest path.
pub fn compose_deadlock(
    clients: &[ProtoAutomaton],
    resources: &[(Ident, ResourceDecl)],
    binding: &Binding,
) -> Result<DeadlockVerdict, ProtocolError> {
    let index: HashMap<&Ident, usize> = resources.iter().enumerate().map(|(i, (n, _))| (n, i)).collect();
    let mut resource_dfas = Vec::with_capacity(resources.len());
    for (name, decl) in resources {
        let a = super::Spec::Automaton(decl.automaton.clone()).automaton()?;
        let alphabet = a.alphabet();
        let labels: BTreeSet<&Ident> = alphabet.iter().map(|e| &e.label).collect();
        for label in decl.acquire_labels.iter().chain(&decl.release_labels) {
            if decl.exclusive && !labels.contains(label) {
                return Err(ProtocolError::UnknownResourceLabel { resource: name.clone(), label: label.clone() });
            }
        }
        resource_dfas.push(Dfa::from_automaton(&a, &BTreeSet::new()));
    }

    let mut client_dfas = Vec::with_capacity(clients.len());
    let mut syncs = Vec::with_capacity(clients.len());
    for client in clients {
        let dfa = Dfa::from_automaton(&super::Spec::Automaton(client.clone()).automaton()?, &BTreeSet::new());
        let mut row = Vec::with_capacity(dfa.alphabet.len());
        for e in &dfa.alphabet {
            let target = binding.get(&e.label).ok_or_else(|| ProtocolError::UnboundEvent(e.clone()))?;
            let &r = index.get(&target.resource).ok_or_else(|| ProtocolError::UnknownResource(target.resource.clone()))?;
            let event = target.event();
            if resource_dfas[r].symbol(&event).is_none() {
                return Err(ProtocolError::UnknownResourceLabel {
                    resource: target.resource.clone(),
                    label: target.label.clone(),
                });
            }
            let decl = &resources[r].1;
            row.push(Sync {
                resource: r,
                acquire: decl.acquire_labels.contains(&target.label),
                release: decl.release_labels.contains(&target.label),
                event,
            });
        }
        client_dfas.push(dfa);
        syncs.push(row);
    }

    let comp = Composition { clients: client_dfas, resources: resource_dfas, decls: resources, syncs };
    let start = Product {
        clients: comp.clients.iter().map(|d| d.initial).collect(),
        resources: comp.resources.iter().map(|d| d.initial).collect(),
        holders: vec![None; resources.len()],
    };
    let mut states = vec![start.clone()];
    let mut parent: Vec<Option<(usize, WitnessStep)>> = vec![None];
    let mut seen: HashMap<Product, usize> = HashMap::from([(start, 0)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let succ = comp.successors(&states[i]);
        if succ.is_empty() && !comp.is_finished(&states[i]) {
            let mut witness = Vec::new();
            let mut cur = i;
            while let Some((prev, step)) = &parent[cur] {
                witness.push(step.clone());
                cur = *prev;
            }
            witness.reverse();
            return Ok(DeadlockVerdict::Deadlock { witness, blocked: comp.describe(&states[i]), states: states.len() });
        }
        for (step, next) in succ {
            if !seen.contains_key(&next) {
                seen.insert(next.clone(), states.len());
                parent.push(Some((i, step)));
                states.push(next);
                queue.push_back(states.len() - 1);
            }
        }
    }
    Ok(DeadlockVerdict::NoDeadlock { states: states.len() })
}
