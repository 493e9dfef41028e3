//! Breadth-first reachability over canonicalized configurations, random
//! simulation and interactive stepping.

mod canon;
mod session;

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{initial_state, InstanceId, ModelError, RuntimeConfig, SystemDef};
use crate::protocol::Event;
use crate::semantics::{apply, classify, enabled, Classification, SemanticsError, TransitionInstance};

pub use canon::{canonicalize, canonicalize_with_map};
pub use session::{StepError, StepSession};

pub const DEFAULT_MAX_DEPTH: usize = 10_000;
pub const DEFAULT_MAX_STATES: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub max_depth: Option<usize>,
    pub max_states: Option<usize>,
}

impl Bounds {
    pub fn unbounded() -> Self {
        Bounds { max_depth: None, max_states: None }
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_depth: Some(DEFAULT_MAX_DEPTH), max_states: Some(DEFAULT_MAX_STATES) }
    }
}

/// The explored fragment of the state graph. States are canonical and
/// stored in breadth-first discovery order, so parent chains are shortest
/// paths.
#[derive(Clone, Debug)]
pub struct StateSpace {
    pub states: Vec<RuntimeConfig>,
    pub depth: Vec<usize>,
    pub parent: Vec<Option<(usize, TransitionInstance)>>,
    /// `(source, transition, target)` for every transition taken.
    pub edges: Vec<(usize, TransitionInstance, usize)>,
    /// Expanded states with no enabled transition.
    pub terminals: Vec<usize>,
    pub truncated: bool,
}

impl StateSpace {
    /// Breadth-first search from the initial configuration.
    pub fn build(def: &SystemDef, bounds: Bounds) -> Result<Self, ModelError> {
        let init = canonicalize(&initial_state(def)?);
        let mut space = StateSpace {
            states: vec![init.clone()],
            depth: vec![0],
            parent: vec![None],
            edges: Vec::new(),
            terminals: Vec::new(),
            truncated: false,
        };
        let mut index: HashMap<RuntimeConfig, usize> = HashMap::from([(init, 0)]);
        let mut queue = VecDeque::from([0usize]);

        while let Some(i) = queue.pop_front() {
            let ts = enabled(def, &space.states[i]);
            if ts.is_empty() {
                space.terminals.push(i);
                continue;
            }
            if bounds.max_depth.is_some_and(|d| space.depth[i] >= d) {
                space.truncated = true;
                continue;
            }
            for t in ts {
                let post = apply(def, &space.states[i], &t).expect("enabled transition applies").config;
                let post = canonicalize(&post);
                let j = match index.get(&post) {
                    Some(&j) => j,
                    None => {
                        if bounds.max_states.is_some_and(|m| space.states.len() >= m) {
                            space.truncated = true;
                            continue;
                        }
                        let j = space.states.len();
                        index.insert(post.clone(), j);
                        space.states.push(post);
                        space.depth.push(space.depth[i] + 1);
                        space.parent.push(Some((i, t.clone())));
                        queue.push_back(j);
                        j
                    }
                };
                space.edges.push((i, t, j));
            }
        }
        Ok(space)
    }

    /// Shortest path to state `target`, expressed in the instance ids a
    /// plain replay from [`initial_state`] produces.
    pub fn path_to(&self, def: &SystemDef, target: usize) -> Vec<TransitionInstance> {
        let mut canon_path = Vec::new();
        let mut cur = target;
        while let Some((prev, t)) = &self.parent[cur] {
            canon_path.push(t.clone());
            cur = *prev;
        }
        canon_path.reverse();
        raw_path(def, &canon_path)
    }
}

/// Translates a path over canonical configurations into one over raw
/// configurations starting from the initial state.
fn raw_path(def: &SystemDef, canon_path: &[TransitionInstance]) -> Vec<TransitionInstance> {
    let mut raw = initial_state(def).expect("explored model is valid");
    let mut out = Vec::with_capacity(canon_path.len());
    for t in canon_path {
        let (_, map) = canonicalize_with_map(&raw);
        let back: HashMap<InstanceId, InstanceId> = map.into_iter().map(|(old, new)| (new, old)).collect();
        let rt = match t {
            TransitionInstance::FireEdge { status, edge } => {
                TransitionInstance::FireEdge { status: back[status], edge: *edge }
            }
            TransitionInstance::Return { status } => TransitionInstance::Return { status: back[status] },
            TransitionInstance::Environment(a) => TransitionInstance::Environment(a.clone()),
        };
        raw = apply(def, &raw, &rt).expect("path transition replays").config;
        out.push(rt);
    }
    out
}

/// Folds `apply` over `path` from the initial configuration.
pub fn replay(def: &SystemDef, path: &[TransitionInstance]) -> Result<RuntimeConfig, ReplayError> {
    let mut cfg = initial_state(def)?;
    for t in path {
        cfg = apply(def, &cfg, t)?.config;
    }
    Ok(cfg)
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Step(#[from] SemanticsError),
}

#[derive(Clone, Debug)]
pub struct ReachabilityReport {
    pub states_visited: usize,
    pub transitions_taken: usize,
    /// Canonical terminal configurations in discovery order.
    pub terminals: Vec<(RuntimeConfig, Classification)>,
    /// One shortest path per deadlocked terminal.
    pub deadlock_witnesses: Vec<Vec<TransitionInstance>>,
    pub truncated: bool,
}

impl ReachabilityReport {
    pub fn quiescent(&self) -> usize {
        self.terminals.iter().filter(|(_, c)| *c == Classification::Quiescent).count()
    }

    pub fn deadlocks(&self) -> usize {
        self.deadlock_witnesses.len()
    }
}

pub fn explore(def: &SystemDef, bounds: Bounds) -> Result<ReachabilityReport, ModelError> {
    let space = StateSpace::build(def, bounds)?;
    let mut terminals = Vec::new();
    let mut witnesses = Vec::new();
    for &i in &space.terminals {
        let class = classify(def, &space.states[i]);
        if class.is_deadlock() {
            witnesses.push(space.path_to(def, i));
        }
        terminals.push((space.states[i].clone(), class));
    }
    Ok(ReachabilityReport {
        states_visited: space.states.len(),
        transitions_taken: space.edges.len(),
        terminals,
        deadlock_witnesses: witnesses,
        truncated: space.truncated,
    })
}

pub type SimTrace = Vec<(TransitionInstance, Vec<Event>)>;

/// Random run choosing uniformly among enabled transitions; deterministic per seed.
pub fn simulate(def: &SystemDef, seed: u64, max_steps: usize) -> Result<SimTrace, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = initial_state(def)?;
    let mut trace = Vec::new();
    while trace.len() < max_steps {
        let ts = enabled(def, &cfg);
        if ts.is_empty() {
            break;
        }
        let t = ts[rng.gen_range(0..ts.len())].clone();
        let step = apply(def, &cfg, &t).expect("enabled transition applies");
        cfg = step.config;
        trace.push((t, step.events));
    }
    Ok(trace)
}
