//! Reachable configurations as forests of call frames.
//!
//! A frame's callees hang below it; a callee killed by a structural change
//! leaves a `Dead` marker that blocks its caller for good. Children and roots
//! are kept sorted, so two configurations that differ only in how instances
//! are numbered are the same value here.

use std::collections::{BTreeSet, HashMap, VecDeque};

use osgi_core::model::{Action, Ident, SystemDef};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frame {
    pub bundle: Ident,
    pub object: Ident,
    pub method: Ident,
    pub location: Ident,
    pub children: Vec<Child>,
    firing: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Child {
    Live(Frame),
    Dead { bundle: Ident, object: Ident, method: Ident },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    pub bundles: BTreeSet<Ident>,
    pub objects: BTreeSet<(Ident, Ident)>,
    pub roots: Vec<Frame>,
}

impl State {
    pub fn frames(&self) -> Vec<&Frame> {
        fn walk<'a>(f: &'a Frame, out: &mut Vec<&'a Frame>) {
            out.push(f);
            for c in &f.children {
                if let Child::Live(g) = c {
                    walk(g, out);
                }
            }
        }
        let mut out = Vec::new();
        for r in &self.roots {
            walk(r, &mut out);
        }
        out
    }

    pub fn active(&self, bundle: &str, object: &str, method: &str) -> bool {
        self.frames().iter().any(|f| f.bundle.as_str() == bundle && f.object.as_str() == object && f.method.as_str() == method)
    }

    pub fn at(&self, bundle: &str, object: &str, method: &str, location: &str) -> bool {
        self.frames().iter().any(|f| {
            f.bundle.as_str() == bundle
                && f.object.as_str() == object
                && f.method.as_str() == method
                && f.location.as_str() == location
        })
    }

    pub fn bundle_present(&self, bundle: &str) -> bool {
        self.bundles.contains(bundle)
    }

    pub fn object_present(&self, object: &str, bundle: &str) -> bool {
        self.objects.contains(&(Ident::new(bundle), Ident::new(object)))
    }
}

/// One edge of the reachability graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    pub target: usize,
    /// Whether the step came from an edge with a structural action or from the environment.
    pub structural: bool,
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub states: Vec<State>,
    pub depth: Vec<usize>,
    pub moves: Vec<Vec<Move>>,
}

impl Exploration {
    pub fn terminals(&self) -> Vec<usize> {
        (0..self.states.len()).filter(|&i| self.moves[i].is_empty()).collect()
    }

    pub fn quiescent(&self) -> Vec<usize> {
        self.terminals().into_iter().filter(|&i| self.states[i].roots.is_empty()).collect()
    }

    pub fn deadlocked(&self) -> Vec<usize> {
        self.terminals().into_iter().filter(|&i| !self.states[i].roots.is_empty()).collect()
    }

    /// Depth of the shallowest state satisfying `pred`.
    pub fn min_depth(&self, pred: impl Fn(&State) -> bool) -> Option<usize> {
        (0..self.states.len()).filter(|&i| pred(&self.states[i])).map(|i| self.depth[i]).min()
    }
}

fn new_frame(def: &SystemDef, bundle: &Ident, object: &Ident, method: &Ident) -> Frame {
    let m = &def.bundles[bundle].objects[object].methods[method];
    Frame {
        bundle: bundle.clone(),
        object: object.clone(),
        method: method.clone(),
        location: m.initial.clone(),
        children: Vec::new(),
        firing: false,
    }
}

fn start_frame(def: &SystemDef, bundle: &Ident) -> Frame {
    let activator = def.bundles[bundle].activator.clone();
    new_frame(def, bundle, &activator, &Ident::new("start"))
}

fn normalize(frames: &mut Vec<Frame>) {
    for f in frames.iter_mut() {
        normalize_frame(f);
    }
    frames.sort();
}

fn normalize_frame(f: &mut Frame) {
    for c in f.children.iter_mut() {
        if let Child::Live(g) = c {
            normalize_frame(g);
        }
    }
    f.children.sort();
}

pub fn initial(def: &SystemDef) -> State {
    let mut s = State { bundles: BTreeSet::new(), objects: BTreeSet::new(), roots: Vec::new() };
    for b in def.bundles.values() {
        if b.initially_present {
            s.bundles.insert(b.name.clone());
            for o in b.objects.values() {
                if o.initially_present {
                    s.objects.insert((b.name.clone(), o.name.clone()));
                }
            }
        }
    }
    s.roots.push(start_frame(def, &def.init_bundle));
    s
}

/// Checks and applies presence changes of `actions` in order; `None` if one fails.
fn presence_after(
    def: &SystemDef,
    s: &State,
    owner: Option<&Ident>,
    actions: &[Action],
) -> Option<(BTreeSet<Ident>, BTreeSet<(Ident, Ident)>)> {
    let mut bundles = s.bundles.clone();
    let mut objects = s.objects.clone();
    for a in actions {
        match a {
            Action::Call { method, object, bundle } => {
                let declared = def.bundles.get(bundle).and_then(|b| b.objects.get(object)).is_some_and(|o| o.methods.contains_key(method));
                if !declared || !bundles.contains(bundle) || !objects.contains(&(bundle.clone(), object.clone())) {
                    return None;
                }
            }
            Action::AddBundle(b) => {
                if bundles.contains(b) {
                    return None;
                }
                bundles.insert(b.clone());
                for o in def.bundles[b].objects.values().filter(|o| o.initially_present) {
                    objects.insert((b.clone(), o.name.clone()));
                }
            }
            Action::RemoveBundle(b) => {
                if !bundles.remove(b) {
                    return None;
                }
                objects.retain(|(ob, _)| ob != b);
            }
            Action::CreateObject { object, bundle } => {
                if owner.is_some_and(|o| o != bundle)
                    || !bundles.contains(bundle)
                    || !objects.insert((bundle.clone(), object.clone()))
                {
                    return None;
                }
            }
            Action::DeleteObject { object, bundle } => {
                if owner.is_some_and(|o| o != bundle) || !objects.remove(&(bundle.clone(), object.clone())) {
                    return None;
                }
            }
        }
    }
    Some((bundles, objects))
}

/// Removes frames matching `doomed`; their live callees become roots.
fn prune(f: Frame, doomed: &dyn Fn(&Frame) -> bool, orphans: &mut Vec<Frame>) -> Option<Frame> {
    let killed = doomed(&f);
    let mut children = Vec::new();
    for c in f.children {
        match c {
            Child::Live(g) => {
                let label = (g.bundle.clone(), g.object.clone(), g.method.clone());
                match prune(g, doomed, orphans) {
                    Some(g) if killed => orphans.push(g),
                    Some(g) => children.push(Child::Live(g)),
                    None if killed => {}
                    None => children.push(Child::Dead { bundle: label.0, object: label.1, method: label.2 }),
                }
            }
            dead if !killed => children.push(dead),
            _ => {}
        }
    }
    if killed {
        None
    } else {
        Some(Frame { children, ..f })
    }
}

fn kill(s: &mut State, doomed: &dyn Fn(&Frame) -> bool) {
    let mut orphans = Vec::new();
    let mut roots = Vec::new();
    for r in std::mem::take(&mut s.roots) {
        if let Some(r) = prune(r, doomed, &mut orphans) {
            roots.push(r);
        }
    }
    roots.extend(orphans);
    s.roots = roots;
}

/// Hands `callee` to the frame currently firing; gives it back if that frame is gone.
fn attach(f: &mut Frame, mut callee: Frame) -> Result<(), Frame> {
    if f.firing {
        f.children.push(Child::Live(callee));
        return Ok(());
    }
    for c in f.children.iter_mut() {
        if let Child::Live(g) = c {
            match attach(g, callee) {
                Ok(()) => return Ok(()),
                Err(back) => callee = back,
            }
        }
    }
    Err(callee)
}

fn perform(def: &SystemDef, s: &mut State, a: &Action) {
    match a {
        Action::Call { method, object, bundle } => {
            let mut callee = new_frame(def, bundle, object, method);
            for r in s.roots.iter_mut() {
                match attach(r, callee) {
                    Ok(()) => return,
                    Err(back) => callee = back,
                }
            }
            s.roots.push(callee);
        }
        Action::AddBundle(b) => {
            s.bundles.insert(b.clone());
            for o in def.bundles[b].objects.values().filter(|o| o.initially_present) {
                s.objects.insert((b.clone(), o.name.clone()));
            }
            s.roots.push(start_frame(def, b));
        }
        Action::RemoveBundle(b) => {
            s.bundles.remove(b);
            s.objects.retain(|(ob, _)| ob != b);
            kill(s, &|f: &Frame| &f.bundle == b);
        }
        Action::CreateObject { object, bundle } => {
            s.objects.insert((bundle.clone(), object.clone()));
        }
        Action::DeleteObject { object, bundle } => {
            s.objects.remove(&(bundle.clone(), object.clone()));
            kill(s, &|f: &Frame| &f.bundle == bundle && &f.object == object);
        }
    }
}

fn clear_firing(frames: &mut [Frame]) {
    for f in frames {
        f.firing = false;
        for c in f.children.iter_mut() {
            if let Child::Live(g) = c {
                clear_firing(std::slice::from_mut(g));
            }
        }
    }
}

/// Addresses of every frame: root index followed by child indices.
fn paths(s: &State) -> Vec<Vec<usize>> {
    fn walk(f: &Frame, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(path.clone());
        for (i, c) in f.children.iter().enumerate() {
            if let Child::Live(g) = c {
                path.push(i);
                walk(g, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for (i, r) in s.roots.iter().enumerate() {
        let mut p = vec![i];
        walk(r, &mut p, &mut out);
    }
    out
}

fn frame_mut<'a>(s: &'a mut State, path: &[usize]) -> &'a mut Frame {
    let mut f = &mut s.roots[path[0]];
    for &i in &path[1..] {
        f = match &mut f.children[i] {
            Child::Live(g) => g,
            Child::Dead { .. } => unreachable!("paths only address live frames"),
        };
    }
    f
}

/// All successor states with whether the step was structural.
pub fn successors(def: &SystemDef, s: &State) -> Vec<(State, bool)> {
    let mut out = Vec::new();
    for path in paths(s) {
        let mut probe = s.clone();
        let f = frame_mut(&mut probe, &path).clone();
        if !f.children.is_empty() {
            continue;
        }
        let m = &def.bundles[&f.bundle].objects[&f.object].methods[&f.method];
        let edges: Vec<_> = m.edges.iter().filter(|e| e.source == f.location).collect();
        if edges.is_empty() {
            let mut next = s.clone();
            if path.len() == 1 {
                next.roots.remove(path[0]);
            } else {
                let parent = frame_mut(&mut next, &path[..path.len() - 1]);
                parent.children.remove(path[path.len() - 1]);
            }
            normalize(&mut next.roots);
            out.push((next, false));
            continue;
        }
        for e in edges {
            if presence_after(def, s, Some(&f.bundle), &e.actions).is_none() {
                continue;
            }
            let mut next = s.clone();
            {
                let g = frame_mut(&mut next, &path);
                g.location = e.target.clone();
                g.firing = true;
            }
            for a in &e.actions {
                perform(def, &mut next, a);
            }
            clear_firing(&mut next.roots);
            normalize(&mut next.roots);
            out.push((next, e.actions.iter().any(|a| !matches!(a, Action::Call { .. }))));
        }
    }
    for a in &def.environment {
        if presence_after(def, s, None, std::slice::from_ref(a)).is_some() {
            let mut next = s.clone();
            perform(def, &mut next, a);
            normalize(&mut next.roots);
            out.push((next, true));
        }
    }
    out
}

/// Frame count past which [`explore`] gives up; deep recursion makes states huge.
pub const MAX_FRAMES: usize = 16;

/// Breadth-first enumeration of every reachable state; `None` past `limit`
/// states or once a state holds more than [`MAX_FRAMES`] frames.
pub fn explore(def: &SystemDef, limit: usize) -> Option<Exploration> {
    let mut start = initial(def);
    normalize(&mut start.roots);
    let mut index = HashMap::from([(start.clone(), 0usize)]);
    let mut ex = Exploration { states: vec![start], depth: vec![0], moves: vec![Vec::new()] };
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let mut moves = Vec::new();
        for (next, structural) in successors(def, &ex.states[i]) {
            let target = match index.get(&next) {
                Some(&t) => t,
                None => {
                    if ex.states.len() >= limit || next.frames().len() > MAX_FRAMES {
                        return None;
                    }
                    let t = ex.states.len();
                    index.insert(next.clone(), t);
                    ex.states.push(next);
                    ex.depth.push(ex.depth[i] + 1);
                    ex.moves.push(Vec::new());
                    queue.push_back(t);
                    t
                }
            };
            let mv = Move { target, structural };
            if !moves.contains(&mv) {
                moves.push(mv);
            }
        }
        ex.moves[i] = moves;
    }
    Some(ex)
}

/// Reads a configuration of the library under test as a forest.
pub fn from_config(cfg: &osgi_core::model::RuntimeConfig) -> State {
    use osgi_core::model::InstanceId;
    fn build(cfg: &osgi_core::model::RuntimeConfig, id: InstanceId) -> Frame {
        let s = &cfg.statuses[&id];
        let children = s
            .call_state
            .iter()
            .map(|e| {
                if cfg.statuses.contains_key(&e.callee) {
                    Child::Live(build(cfg, e.callee))
                } else {
                    Child::Dead { bundle: e.bundle.clone(), object: e.object.clone(), method: e.method.clone() }
                }
            })
            .collect();
        Frame {
            bundle: s.bundle.clone(),
            object: s.object.clone(),
            method: s.method.clone(),
            location: s.location.clone(),
            children,
            firing: false,
        }
    }
    let awaited: BTreeSet<InstanceId> =
        cfg.statuses.values().flat_map(|s| s.call_state.iter().map(|e| e.callee)).collect();
    let mut roots: Vec<Frame> = cfg.statuses.keys().filter(|id| !awaited.contains(id)).map(|&id| build(cfg, id)).collect();
    normalize(&mut roots);
    State { bundles: cfg.present_bundles.clone(), objects: cfg.present_objects.clone(), roots }
}
