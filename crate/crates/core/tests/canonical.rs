//! Canonical relabeling: invariance under id permutation, idempotence, and
//! agreement with the id-free forest view.

mod common;

use std::collections::{BTreeSet, HashSet, VecDeque};

use osgi_core::explorer::{canonicalize, canonicalize_with_map, Bounds, StateSpace};
use osgi_core::model::{initial_state, InstanceId, RuntimeConfig};
use osgi_core::semantics::{apply, enabled};
use osgi_oracle::from_config;
use proptest::prelude::*;

fn configs(seed: u64) -> Vec<RuntimeConfig> {
    let def = common::random_model(seed);
    common::random_walk(&def, seed ^ 0x5eed, 60)
}

#[test]
fn a_thousand_permuted_configs() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 1000 {
        for (i, cfg) in configs(seed).into_iter().enumerate().step_by(7) {
            let shuffled = common::permute_ids(&cfg, seed * 1000 + i as u64);
            let canon = canonicalize(&cfg);
            assert_eq!(canonicalize(&shuffled), canon, "seed {seed} step {i}");
            assert_eq!(canonicalize(&canon), canon);
            checked += 1;
        }
        seed += 1;
    }
}

#[test]
fn dangling_references_survive_permutation() {
    let def = common::model("removal_hazard.osgi");
    let space = StateSpace::build(&def, Bounds::default()).unwrap();
    let stranded: Vec<&RuntimeConfig> = space
        .states
        .iter()
        .filter(|c| c.statuses.values().any(|s| s.call_state.iter().any(|e| !c.statuses.contains_key(&e.callee))))
        .collect();
    assert!(!stranded.is_empty());
    for (k, cfg) in stranded.into_iter().enumerate() {
        for seed in 0..20 {
            assert_eq!(canonicalize(&common::permute_ids(cfg, seed + 100 * k as u64)), *cfg);
        }
    }
}

/// Ids are dense: live statuses first, then dangling references.
fn dense(cfg: &RuntimeConfig) -> bool {
    let live = cfg.statuses.len() as u64;
    let dangling: BTreeSet<InstanceId> = cfg
        .statuses
        .values()
        .flat_map(|s| s.call_state.iter().map(|e| e.callee))
        .filter(|c| !cfg.statuses.contains_key(c))
        .collect();
    cfg.statuses.keys().copied().eq((0..live).map(InstanceId))
        && dangling.into_iter().eq((live..cfg.next_id).map(InstanceId))
}

/// Plain BFS over raw configurations with fresh ids, deduplicated by the
/// forest view only; never calls the canonicalizer.
fn raw_reachable(def: &osgi_core::SystemDef, limit: usize) -> Option<BTreeSet<osgi_oracle::State>> {
    let init = initial_state(def).unwrap();
    let mut seen = HashSet::from([from_config(&init)]);
    let mut queue = VecDeque::from([init]);
    while let Some(cfg) = queue.pop_front() {
        for t in enabled(def, &cfg) {
            let next = apply(def, &cfg, &t).unwrap().config;
            if seen.insert(from_config(&next)) {
                if seen.len() > limit {
                    return None;
                }
                queue.push_back(next);
            }
        }
    }
    Some(seen.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn permutation_invariant_and_idempotent(seed in any::<u64>(), perm in any::<u64>()) {
        for cfg in configs(seed) {
            let canon = canonicalize(&cfg);
            prop_assert!(dense(&canon));
            prop_assert_eq!(&canonicalize(&canon), &canon);
            prop_assert_eq!(&canonicalize(&common::permute_ids(&cfg, perm)), &canon);
        }
    }

    #[test]
    fn canonical_equality_is_forest_equality(seed in any::<u64>()) {
        let cs = configs(seed);
        for a in cs.iter().step_by(3) {
            for b in cs.iter().step_by(5) {
                prop_assert_eq!(canonicalize(a) == canonicalize(b), from_config(a) == from_config(b));
            }
        }
    }

    #[test]
    fn map_relabels_into_the_canonical_form(seed in any::<u64>()) {
        for cfg in configs(seed) {
            let (canon, map) = canonicalize_with_map(&cfg);
            for s in cfg.statuses.values() {
                let mapped = &canon.statuses[&map[&s.id]];
                prop_assert_eq!((&mapped.method, &mapped.location), (&s.method, &s.location));
                for e in &s.call_state {
                    prop_assert!(mapped.call_state.iter().any(|m| m.callee == map[&e.callee]));
                }
            }
        }
    }

    #[test]
    fn exploring_with_and_without_canonical_keys_agrees(seed in any::<u64>()) {
        let def = common::random_model(seed);
        if let Some(raw) = raw_reachable(&def, 400) {
            let space = StateSpace::build(&def, Bounds { max_depth: None, max_states: Some(401) }).unwrap();
            prop_assert!(!space.truncated);
            let canon: BTreeSet<_> = space.states.iter().map(from_config).collect();
            prop_assert_eq!(canon, raw);
        }
    }
}
