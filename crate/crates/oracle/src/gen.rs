//! Seeded generators for random models and configurations.

use std::collections::{BTreeMap, BTreeSet};

use osgi_core::model::{has_errors, initial_state, validate};
use osgi_core::model::{Action, BundleDef, CallStateEntry, Edge, Ident, InstanceId, MethodDef, MethodStatus};
use osgi_core::model::{ObjectDef, RuntimeConfig, SystemDef};
use osgi_core::semantics::{apply, enabled};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn id(s: &str) -> Ident {
    Ident::new(s)
}

const BUNDLES: [&str; 3] = ["b0", "b1", "b2"];

fn random_action(rng: &mut ChaCha8Rng, own: &str) -> Action {
    let b = if rng.gen_bool(0.5) { own } else { *BUNDLES.choose(rng).unwrap() };
    match rng.gen_range(0..10) {
        0..=4 => {
            let (object, method) = *[("o", "m"), ("o", "n"), ("act", "stop")].choose(rng).unwrap();
            Action::call(method, object, b)
        }
        5 => Action::AddBundle(id(b)),
        6 => Action::RemoveBundle(id(b)),
        7 | 8 => Action::create("o", own),
        _ => Action::delete("o", own),
    }
}

fn random_method(rng: &mut ChaCha8Rng, name: &str, own: &str) -> MethodDef {
    let n = rng.gen_range(1..=5);
    let locs: Vec<Ident> = (0..n).map(|i| Ident::new(format!("l{i}"))).collect();
    let actions = |rng: &mut ChaCha8Rng, most: usize| (0..rng.gen_range(0..=most)).map(|_| random_action(rng, own)).collect();
    let mut edges: Vec<Edge> = locs
        .windows(2)
        .map(|w| Edge { source: w[0].clone(), target: w[1].clone(), actions: actions(rng, 1) })
        .collect();
    for _ in 0..rng.gen_range(0..=2) {
        edges.push(Edge {
            source: locs.choose(rng).unwrap().clone(),
            target: locs.choose(rng).unwrap().clone(),
            actions: actions(rng, 2),
        });
    }
    MethodDef { name: id(name), locations: locs.iter().cloned().collect(), initial: locs[0].clone(), edges }
}

/// A small random model that passes validation. Deterministic per seed.
pub fn random_model(seed: u64) -> SystemDef {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut bundles = BTreeMap::new();
        for (i, b) in BUNDLES.iter().enumerate() {
            let act = ObjectDef {
                name: id("act"),
                methods: [random_method(&mut rng, "start", b), random_method(&mut rng, "stop", b)]
                    .into_iter()
                    .map(|m| (m.name.clone(), m))
                    .collect(),
                initially_present: true,
            };
            let o = ObjectDef {
                name: id("o"),
                methods: [random_method(&mut rng, "m", b), random_method(&mut rng, "n", b)]
                    .into_iter()
                    .map(|m| (m.name.clone(), m))
                    .collect(),
                initially_present: rng.gen_bool(0.8),
            };
            let bundle = BundleDef {
                name: id(b),
                activator: id("act"),
                objects: [(id("act"), act), (id("o"), o)].into(),
                initially_present: i == 0 || rng.gen_bool(0.5),
            };
            bundles.insert(id(b), bundle);
        }
        let mut environment = BTreeSet::new();
        for b in &BUNDLES[1..] {
            if rng.gen_bool(0.3) {
                environment.insert(Action::AddBundle(id(b)));
            }
            if rng.gen_bool(0.3) {
                environment.insert(Action::RemoveBundle(id(b)));
            }
        }
        let def = SystemDef { name: id("random"), bundles, init_bundle: id("b0"), environment };
        if !has_errors(&validate(&def)) {
            return def;
        }
    }
}

/// Configurations visited by a seeded random run of at most `steps` steps.
pub fn random_walk(def: &SystemDef, seed: u64, steps: usize) -> Vec<RuntimeConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = initial_state(def).unwrap();
    let mut out = vec![cfg.clone()];
    for _ in 0..steps {
        let ts = enabled(def, &cfg);
        let Some(t) = ts.choose(&mut rng) else { break };
        cfg = apply(def, &cfg, t).unwrap().config;
        out.push(cfg.clone());
    }
    out
}

/// Relabels every instance id, dangling references included, with fresh
/// random ids; `next_id` moves past the largest.
pub fn permute_ids(cfg: &RuntimeConfig, seed: u64) -> RuntimeConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: BTreeSet<InstanceId> = cfg.statuses.keys().copied().collect();
    ids.extend(cfg.statuses.values().flat_map(|s| s.call_state.iter().map(|e| e.callee)));
    let mut fresh = BTreeSet::new();
    while fresh.len() < ids.len() {
        fresh.insert(rng.gen_range(0..1_000_000u64));
    }
    let mut fresh: Vec<u64> = fresh.into_iter().collect();
    fresh.shuffle(&mut rng);
    let map: BTreeMap<InstanceId, InstanceId> = ids.into_iter().zip(fresh.iter().map(|&n| InstanceId(n))).collect();
    let statuses = cfg
        .statuses
        .values()
        .map(|s| {
            let id = map[&s.id];
            let call_state = s
                .call_state
                .iter()
                .map(|e| CallStateEntry { callee: map[&e.callee], ..e.clone() })
                .collect();
            (id, MethodStatus { id, call_state, ..s.clone() })
        })
        .collect();
    RuntimeConfig {
        statuses,
        next_id: fresh.iter().max().map_or(0, |m| m + 1),
        ..cfg.clone()
    }
}
