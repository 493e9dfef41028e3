use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{Event, Loc, ProtoAutomaton, ProtoExpr, ProtocolError, Spec, Transition};

struct Builder {
    next: usize,
    locations: BTreeSet<Loc>,
    transitions: BTreeSet<Transition>,
}

impl Builder {
    fn fresh(&mut self) -> Loc {
        let l = Loc::new(format!("q{}", self.next));
        self.next += 1;
        self.locations.insert(l.clone());
        l
    }

    fn link(&mut self, from: &Loc, event: Option<&Event>, to: &Loc) {
        self.transitions.insert(Transition { source: from.clone(), event: event.cloned(), target: to.clone() });
    }

    /// Fragment with a single entry and a single exit location.
    fn fragment(&mut self, e: &ProtoExpr) -> (Loc, Loc) {
        match e {
            ProtoExpr::Epsilon => {
                let (s, t) = (self.fresh(), self.fresh());
                self.link(&s, None, &t);
                (s, t)
            }
            ProtoExpr::Atom(ev) => {
                let (s, t) = (self.fresh(), self.fresh());
                self.link(&s, Some(ev), &t);
                (s, t)
            }
            ProtoExpr::Concat(a, b) => {
                let (a0, a1) = self.fragment(a);
                let (b0, b1) = self.fragment(b);
                self.link(&a1, None, &b0);
                (a0, b1)
            }
            ProtoExpr::Alt(a, b) => {
                let s = self.fresh();
                let (a0, a1) = self.fragment(a);
                let (b0, b1) = self.fragment(b);
                let t = self.fresh();
                self.link(&s, None, &a0);
                self.link(&s, None, &b0);
                self.link(&a1, None, &t);
                self.link(&b1, None, &t);
                (s, t)
            }
            ProtoExpr::Star(a) => {
                let s = self.fresh();
                let (a0, a1) = self.fragment(a);
                let t = self.fresh();
                self.link(&s, None, &a0);
                self.link(&a1, None, &a0);
                self.link(&s, None, &t);
                self.link(&a1, None, &t);
                (s, t)
            }
        }
    }
}

/// Compositional (Thompson) construction; the result has silent moves and
/// exactly one accepting location.
pub fn to_nfa(e: &ProtoExpr) -> Result<ProtoAutomaton, ProtocolError> {
    if !e.is_concrete() {
        return Err(ProtocolError::Parameterized);
    }
    let mut b = Builder { next: 0, locations: BTreeSet::new(), transitions: BTreeSet::new() };
    let (initial, exit) = b.fragment(e);
    Ok(ProtoAutomaton {
        locations: b.locations,
        initial,
        accepting: [exit].into(),
        transitions: b.transitions,
    })
}

/// Complete deterministic automaton over an explicit, sorted alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    pub alphabet: Vec<Event>,
    pub initial: usize,
    pub accepting: Vec<bool>,
    /// `next[state][symbol]`
    pub next: Vec<Vec<usize>>,
    /// The state reached once no run of the source automaton survives.
    pub dead: usize,
}

impl Dfa {
    /// Subset construction over `extra` joined with the automaton's own alphabet.
    pub fn from_automaton(a: &ProtoAutomaton, extra: &BTreeSet<Event>) -> Dfa {
        let alphabet: Vec<Event> = a.alphabet().union(extra).cloned().collect();
        let sym: HashMap<&Event, usize> = alphabet.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let locs: Vec<&Loc> = a.locations.iter().collect();
        let idx: HashMap<&Loc, usize> = locs.iter().enumerate().map(|(i, l)| (*l, i)).collect();

        let mut silent = vec![Vec::new(); locs.len()];
        let mut moves: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for t in &a.transitions {
            let (s, d) = (idx[&t.source], idx[&t.target]);
            match &t.event {
                None => silent[s].push(d),
                Some(e) => moves.entry((s, sym[e])).or_default().push(d),
            }
        }
        let closure = |seed: BTreeSet<usize>| {
            let mut set = seed;
            let mut stack: Vec<usize> = set.iter().copied().collect();
            while let Some(s) = stack.pop() {
                for &d in &silent[s] {
                    if set.insert(d) {
                        stack.push(d);
                    }
                }
            }
            set
        };
        let accepting_locs: BTreeSet<usize> = a.accepting.iter().map(|l| idx[l]).collect();

        let start = closure([idx[&a.initial]].into());
        let mut ids: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::from([(start.clone(), 0)]);
        let mut subsets = vec![start];
        let mut next: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let mut row = Vec::with_capacity(alphabet.len());
            for s in 0..alphabet.len() {
                let step: BTreeSet<usize> = subsets[i]
                    .iter()
                    .flat_map(|&l| moves.get(&(l, s)).into_iter().flatten().copied())
                    .collect();
                let target = closure(step);
                let j = *ids.entry(target.clone()).or_insert_with(|| {
                    subsets.push(target);
                    queue.push_back(subsets.len() - 1);
                    subsets.len() - 1
                });
                row.push(j);
            }
            if next.len() <= i {
                next.resize(i + 1, Vec::new());
            }
            next[i] = row;
        }
        let dead = match ids.get(&BTreeSet::new()) {
            Some(&d) => d,
            None => {
                subsets.push(BTreeSet::new());
                next.push(vec![subsets.len() - 1; alphabet.len()]);
                subsets.len() - 1
            }
        };
        let accepting = subsets.iter().map(|s| !s.is_disjoint(&accepting_locs)).collect();
        Dfa { alphabet, initial: 0, accepting, next, dead }
    }

    pub fn from_spec(spec: &Spec, extra: &BTreeSet<Event>) -> Result<Dfa, ProtocolError> {
        Ok(Dfa::from_automaton(&spec.automaton()?, extra))
    }

    pub fn symbol(&self, e: &Event) -> Option<usize> {
        self.alphabet.binary_search(e).ok()
    }

    /// Events outside the alphabet lead to the dead state.
    pub fn step(&self, state: usize, e: &Event) -> usize {
        match self.symbol(e) {
            Some(s) => self.next[state][s],
            None => self.dead,
        }
    }

    pub fn run<'a>(&self, trace: impl IntoIterator<Item = &'a Event>) -> usize {
        trace.into_iter().fold(self.initial, |s, e| self.step(s, e))
    }

    pub fn accepts<'a>(&self, trace: impl IntoIterator<Item = &'a Event>) -> bool {
        self.accepting[self.run(trace)]
    }

    /// States reachable from the initial state, in breadth-first order.
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.next.len()];
        let mut order = vec![self.initial];
        seen[self.initial] = true;
        let mut i = 0;
        while i < order.len() {
            for &d in &self.next[order[i]] {
                if !seen[d] {
                    seen[d] = true;
                    order.push(d);
                }
            }
            i += 1;
        }
        order
    }

    /// Reachable part as a [`ProtoAutomaton`] with locations `q0, q1, ...`.
    pub fn to_automaton(&self) -> ProtoAutomaton {
        let order = self.reachable();
        let name: HashMap<usize, Loc> = order.iter().enumerate().map(|(i, &s)| (s, Loc::new(format!("q{i}")))).collect();
        let mut transitions = BTreeSet::new();
        for &s in &order {
            for (sym, &d) in self.next[s].iter().enumerate() {
                transitions.insert(Transition {
                    source: name[&s].clone(),
                    event: Some(self.alphabet[sym].clone()),
                    target: name[&d].clone(),
                });
            }
        }
        ProtoAutomaton {
            locations: name.values().cloned().collect(),
            initial: name[&self.initial].clone(),
            accepting: order.iter().filter(|&&s| self.accepting[s]).map(|s| name[s].clone()).collect(),
            transitions,
        }
    }
}

/// Language-equivalent deterministic automaton, complete over the input's alphabet.
pub fn determinize(a: &ProtoAutomaton) -> ProtoAutomaton {
    Dfa::from_automaton(a, &BTreeSet::new()).to_automaton()
}
