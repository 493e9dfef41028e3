//! The global transition relation: which steps are enabled in a
//! configuration, and what applying one does.
//!
//! Firing an edge moves the status to the edge target and performs the
//! edge's actions left to right. Each `call` allocates a fresh instance id,
//! records it in the caller's call state and spawns the callee at its
//! initial location. A status whose call state is nonempty is blocked: it
//! neither fires nor returns until every callee has returned.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::{Action, CallStateEntry, Ident, InstanceId, MethodStatus, RuntimeConfig, SystemDef};
use crate::protocol::Event;

/// One enabled step. The derived order is the canonical listing order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransitionInstance {
    FireEdge { status: InstanceId, edge: usize },
    Return { status: InstanceId },
    Environment(Action),
}

impl TransitionInstance {
    /// Whether applying this transition may change presence of bundles or objects.
    pub fn is_structural(&self, def: &SystemDef, cfg: &RuntimeConfig) -> bool {
        match self {
            TransitionInstance::Environment(_) => true,
            TransitionInstance::Return { .. } => false,
            TransitionInstance::FireEdge { status, edge } => cfg
                .statuses
                .get(status)
                .and_then(|s| def.method(&s.bundle, &s.object, &s.method))
                .and_then(|m| m.edges.get(*edge))
                .is_some_and(|e| e.actions.iter().any(Action::is_structural)),
        }
    }

    /// Human-readable description against the configuration it is enabled in.
    pub fn describe(&self, def: &SystemDef, cfg: &RuntimeConfig) -> String {
        match self {
            TransitionInstance::FireEdge { status, edge } => {
                let Some(s) = cfg.statuses.get(status) else { return self.to_string() };
                let Some(e) = def.method(&s.bundle, &s.object, &s.method).and_then(|m| m.edges.get(*edge)) else {
                    return self.to_string();
                };
                let mut out = format!("{} {}.{}@{}: {} -> {}", status, s.object, s.method, s.bundle, e.source, e.target);
                if !e.actions.is_empty() {
                    let acts: Vec<_> = e.actions.iter().map(Action::to_string).collect();
                    out.push_str(&format!(" [{}]", acts.join(", ")));
                }
                out
            }
            TransitionInstance::Return { status } => match cfg.statuses.get(status) {
                Some(s) => format!("{} {}.{}@{}: return", status, s.object, s.method, s.bundle),
                None => self.to_string(),
            },
            TransitionInstance::Environment(a) => format!("environment: {a}"),
        }
    }
}

impl fmt::Display for TransitionInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionInstance::FireEdge { status, edge } => write!(f, "fire {status} edge {edge}"),
            TransitionInstance::Return { status } => write!(f, "return {status}"),
            TransitionInstance::Environment(a) => write!(f, "env {a}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepResult {
    pub config: RuntimeConfig,
    pub events: Vec<Event>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Classification {
    Running,
    Quiescent,
    Deadlocked(BTreeSet<InstanceId>),
}

impl Classification {
    pub fn is_deadlock(&self) -> bool {
        matches!(self, Classification::Deadlocked(_))
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Running => f.write_str("running"),
            Classification::Quiescent => f.write_str("quiescent"),
            Classification::Deadlocked(ids) => {
                let ids: Vec<_> = ids.iter().map(InstanceId::to_string).collect();
                write!(f, "deadlocked ({})", ids.join(", "))
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("transition `{0}` is not enabled")]
    NotEnabled(TransitionInstance),
}

/// Label of the event recorded when a method returns; the parameter names the method.
pub const RETURN_LABEL: &str = "return";

/// Event recorded for one action. Calls are outgoing events labelled by the
/// callee method with the target object as parameter; structural actions use
/// fixed labels with the affected bundle or object as parameter.
pub fn action_event(action: &Action) -> Event {
    match action {
        Action::Call { method, object, .. } => Event::out(method.clone()).with_value(object.clone()),
        Action::AddBundle(b) => Event::out("add_bundle").with_value(b.clone()),
        Action::RemoveBundle(b) => Event::out("remove_bundle").with_value(b.clone()),
        Action::CreateObject { object, .. } => Event::out("create_object").with_value(object.clone()),
        Action::DeleteObject { object, .. } => Event::out("delete_object").with_value(object.clone()),
    }
}

fn return_event(method: &Ident) -> Event {
    Event::inc(RETURN_LABEL).with_value(method.clone())
}

/// Presence map evolving during a left-to-right dry run of an action list.
struct Overlay<'a> {
    def: &'a SystemDef,
    cfg: &'a RuntimeConfig,
    bundles: BTreeMap<Ident, bool>,
    objects: BTreeMap<(Ident, Ident), bool>,
}

impl<'a> Overlay<'a> {
    fn new(def: &'a SystemDef, cfg: &'a RuntimeConfig) -> Self {
        Overlay { def, cfg, bundles: BTreeMap::new(), objects: BTreeMap::new() }
    }

    fn bundle(&self, b: &Ident) -> bool {
        self.bundles.get(b).copied().unwrap_or_else(|| self.cfg.bundle_present(b))
    }

    fn object(&self, b: &Ident, o: &Ident) -> bool {
        self.objects.get(&(b.clone(), o.clone())).copied().unwrap_or_else(|| self.cfg.object_present(b, o))
    }

    /// Applies `action` if its precondition holds.
    fn step(&mut self, owner: Option<&Ident>, action: &Action) -> bool {
        match action {
            Action::Call { method, object, bundle } => {
                self.bundle(bundle)
                    && self.object(bundle, object)
                    && self.def.method(bundle, object, method).is_some()
            }
            Action::AddBundle(b) => {
                let Some(def) = self.def.bundle(b) else { return false };
                if self.bundle(b) || self.def.activator_start(b).is_none() {
                    return false;
                }
                self.bundles.insert(b.clone(), true);
                for o in def.objects.values().filter(|o| o.initially_present) {
                    self.objects.insert((b.clone(), o.name.clone()), true);
                }
                true
            }
            Action::RemoveBundle(b) => {
                let Some(def) = self.def.bundle(b) else { return false };
                if !self.bundle(b) {
                    return false;
                }
                self.bundles.insert(b.clone(), false);
                for o in def.objects.keys() {
                    self.objects.insert((b.clone(), o.clone()), false);
                }
                true
            }
            Action::CreateObject { object, bundle } => {
                if owner.is_some_and(|own| own != bundle)
                    || self.def.object(bundle, object).is_none()
                    || !self.bundle(bundle)
                    || self.object(bundle, object)
                {
                    return false;
                }
                self.objects.insert((bundle.clone(), object.clone()), true);
                true
            }
            Action::DeleteObject { object, bundle } => {
                if owner.is_some_and(|own| own != bundle) || !self.object(bundle, object) {
                    return false;
                }
                self.objects.insert((bundle.clone(), object.clone()), false);
                true
            }
        }
    }
}

fn actions_succeed(def: &SystemDef, cfg: &RuntimeConfig, owner: Option<&Ident>, actions: &[Action]) -> bool {
    let mut overlay = Overlay::new(def, cfg);
    actions.iter().all(|a| overlay.step(owner, a))
}

fn env_enabled(def: &SystemDef, cfg: &RuntimeConfig, action: &Action) -> bool {
    def.environment.contains(action)
        && matches!(action, Action::AddBundle(_) | Action::RemoveBundle(_))
        && actions_succeed(def, cfg, None, std::slice::from_ref(action))
}

/// All transitions enabled in `cfg`, in canonical order: edge firings, then
/// returns (each by status id, then edge index), then environment actions.
pub fn enabled(def: &SystemDef, cfg: &RuntimeConfig) -> Vec<TransitionInstance> {
    let mut out = Vec::new();
    let mut returns = Vec::new();
    for status in cfg.statuses.values() {
        if !status.call_state.is_empty() {
            continue;
        }
        let Some(method) = def.method(&status.bundle, &status.object, &status.method) else { continue };
        let mut has_outgoing = false;
        for (i, edge) in method.outgoing(&status.location) {
            has_outgoing = true;
            if actions_succeed(def, cfg, Some(&status.bundle), &edge.actions) {
                out.push(TransitionInstance::FireEdge { status: status.id, edge: i });
            }
        }
        if !has_outgoing {
            returns.push(TransitionInstance::Return { status: status.id });
        }
    }
    out.extend(returns);
    for action in &def.environment {
        if env_enabled(def, cfg, action) {
            out.push(TransitionInstance::Environment(action.clone()));
        }
    }
    out
}

pub fn is_enabled(def: &SystemDef, cfg: &RuntimeConfig, t: &TransitionInstance) -> bool {
    match t {
        TransitionInstance::FireEdge { status, edge } => {
            let Some(s) = cfg.statuses.get(status) else { return false };
            if !s.call_state.is_empty() {
                return false;
            }
            let Some(e) = def.method(&s.bundle, &s.object, &s.method).and_then(|m| m.edges.get(*edge)) else {
                return false;
            };
            e.source == s.location && actions_succeed(def, cfg, Some(&s.bundle), &e.actions)
        }
        TransitionInstance::Return { status } => {
            let Some(s) = cfg.statuses.get(status) else { return false };
            s.call_state.is_empty()
                && def.method(&s.bundle, &s.object, &s.method).is_some_and(|m| m.is_final(&s.location))
        }
        TransitionInstance::Environment(a) => env_enabled(def, cfg, a),
    }
}

struct Step<'a> {
    def: &'a SystemDef,
    cfg: RuntimeConfig,
    events: Vec<Event>,
}

impl Step<'_> {
    fn fresh(&mut self) -> InstanceId {
        let id = InstanceId(self.cfg.next_id);
        self.cfg.next_id += 1;
        id
    }

    fn spawn(&mut self, method: &Ident, object: &Ident, bundle: &Ident) -> InstanceId {
        let id = self.fresh();
        let initial = self.def.method(bundle, object, method).expect("validated call target").initial.clone();
        self.cfg.statuses.insert(
            id,
            MethodStatus {
                method: method.clone(),
                object: object.clone(),
                bundle: bundle.clone(),
                location: initial,
                id,
                call_state: BTreeSet::new(),
            },
        );
        id
    }

    fn kill_where(&mut self, pred: impl Fn(&MethodStatus) -> bool) {
        self.cfg.statuses.retain(|_, s| !pred(s));
    }

    /// Performs one action on behalf of `firer` (None for the environment).
    fn perform(&mut self, firer: Option<InstanceId>, action: &Action) {
        self.events.push(action_event(action));
        match action {
            Action::Call { method, object, bundle } => {
                let callee = self.spawn(method, object, bundle);
                // a firer killed earlier in the same edge leaves the callee un-awaited
                if let Some(caller) = firer.and_then(|id| self.cfg.statuses.get_mut(&id)) {
                    caller.call_state.insert(CallStateEntry {
                        method: method.clone(),
                        object: object.clone(),
                        bundle: bundle.clone(),
                        callee,
                    });
                }
            }
            Action::AddBundle(b) => {
                let def = self.def.bundle(b).expect("validated bundle");
                self.cfg.present_bundles.insert(b.clone());
                for o in def.objects.values().filter(|o| o.initially_present) {
                    self.cfg.present_objects.insert((b.clone(), o.name.clone()));
                }
                let (activator, start) = self.def.activator_start(b).expect("validated activator");
                let (activator, start) = (activator.clone(), start.name.clone());
                self.spawn(&start, &activator, b);
            }
            Action::RemoveBundle(b) => {
                self.cfg.present_bundles.remove(b);
                self.cfg.present_objects.retain(|(pb, _)| pb != b);
                self.kill_where(|s| &s.bundle == b);
            }
            Action::CreateObject { object, bundle } => {
                self.cfg.present_objects.insert((bundle.clone(), object.clone()));
            }
            Action::DeleteObject { object, bundle } => {
                self.cfg.present_objects.remove(&(bundle.clone(), object.clone()));
                self.kill_where(|s| &s.bundle == bundle && &s.object == object);
            }
        }
    }
}

/// Applies an enabled transition atomically.
pub fn apply(def: &SystemDef, cfg: &RuntimeConfig, t: &TransitionInstance) -> Result<StepResult, SemanticsError> {
    if !is_enabled(def, cfg, t) {
        return Err(SemanticsError::NotEnabled(t.clone()));
    }
    let mut step = Step { def, cfg: cfg.clone(), events: Vec::new() };
    match t {
        TransitionInstance::FireEdge { status, edge } => {
            let s = step.cfg.statuses.get_mut(status).expect("checked");
            let e = &def.method(&s.bundle, &s.object, &s.method).expect("checked").edges[*edge];
            s.location = e.target.clone();
            for action in &e.actions {
                step.perform(Some(*status), action);
            }
        }
        TransitionInstance::Return { status } => {
            let s = step.cfg.statuses.remove(status).expect("checked");
            step.events.push(return_event(&s.method));
            if let Some(caller) = step.cfg.statuses.values_mut().find(|c| c.call_state.iter().any(|e| e.callee == *status)) {
                caller.call_state.retain(|e| e.callee != *status);
            }
        }
        TransitionInstance::Environment(a) => step.perform(None, a),
    }
    Ok(StepResult { config: step.cfg, events: step.events })
}

pub fn classify(def: &SystemDef, cfg: &RuntimeConfig) -> Classification {
    if !enabled(def, cfg).is_empty() {
        Classification::Running
    } else if cfg.statuses.is_empty() {
        Classification::Quiescent
    } else {
        Classification::Deadlocked(cfg.statuses.keys().copied().collect())
    }
}
