//! Structural properties of single steps, checked along random runs.

mod common;

use std::collections::BTreeSet;

use osgi_core::explorer::canonicalize;
use osgi_core::model::{initial_state, Action, Ident, RuntimeConfig, SystemDef};
use osgi_core::semantics::{apply, enabled, is_enabled, SemanticsError, TransitionInstance};
use proptest::prelude::*;

fn walk(seed: u64) -> (SystemDef, Vec<RuntimeConfig>) {
    let def = common::random_model(seed);
    let run = common::random_walk(&def, seed.rotate_left(17), 40);
    (def, run)
}

/// Sequential presence bookkeeping for an action list, written from the
/// action descriptions alone.
fn naive_dry_run(def: &SystemDef, cfg: &RuntimeConfig, owner: &Ident, actions: &[Action]) -> bool {
    let mut bundles = cfg.present_bundles.clone();
    let mut objects = cfg.present_objects.clone();
    for a in actions {
        let ok = match a {
            Action::Call { method, object, bundle } => {
                bundles.contains(bundle)
                    && objects.contains(&(bundle.clone(), object.clone()))
                    && def.method(bundle, object, method).is_some()
            }
            Action::AddBundle(b) => {
                let fresh = !bundles.contains(b);
                if fresh {
                    bundles.insert(b.clone());
                    for o in def.bundles[b].objects.values().filter(|o| o.initially_present) {
                        objects.insert((b.clone(), o.name.clone()));
                    }
                }
                fresh
            }
            Action::RemoveBundle(b) => {
                let there = bundles.remove(b);
                objects.retain(|(pb, _)| pb != b);
                there
            }
            Action::CreateObject { object, bundle } => {
                bundle == owner && bundles.contains(bundle) && objects.insert((bundle.clone(), object.clone()))
            }
            Action::DeleteObject { object, bundle } => bundle == owner && objects.remove(&(bundle.clone(), object.clone())),
        };
        if !ok {
            return false;
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn blocked_statuses_never_move(seed in any::<u64>()) {
        let (def, run) = walk(seed);
        for cfg in &run {
            for t in enabled(&def, cfg) {
                match t {
                    TransitionInstance::FireEdge { status, .. } | TransitionInstance::Return { status } => {
                        prop_assert!(cfg.statuses[&status].call_state.is_empty());
                    }
                    TransitionInstance::Environment(_) => {}
                }
            }
            for s in cfg.statuses.values().filter(|s| !s.call_state.is_empty()) {
                let m = def.method(&s.bundle, &s.object, &s.method).unwrap();
                for edge in 0..m.edges.len() {
                    let fire = TransitionInstance::FireEdge { status: s.id, edge };
                    prop_assert!(!is_enabled(&def, cfg, &fire));
                }
                let ret = TransitionInstance::Return { status: s.id };
                prop_assert!(!is_enabled(&def, cfg, &ret));
            }
        }
    }

    #[test]
    fn fresh_ids_are_never_reused(seed in any::<u64>()) {
        let (def, run) = walk(seed);
        for cfg in &run {
            for t in enabled(&def, cfg) {
                let post = apply(&def, cfg, &t).unwrap().config;
                prop_assert!(post.next_id >= cfg.next_id);
                for id in post.statuses.keys().filter(|id| !cfg.statuses.contains_key(id)) {
                    prop_assert!(id.0 >= cfg.next_id && id.0 < post.next_id);
                }
            }
        }
    }

    #[test]
    fn live_statuses_sit_on_present_objects(seed in any::<u64>()) {
        let (def, run) = walk(seed);
        for cfg in &run {
            for t in enabled(&def, cfg) {
                let post = apply(&def, cfg, &t).unwrap().config;
                for s in post.statuses.values() {
                    prop_assert!(post.bundle_present(&s.bundle));
                    prop_assert!(post.object_present(&s.bundle, &s.object));
                }
            }
        }
    }

    #[test]
    fn edges_fire_all_or_nothing(seed in any::<u64>()) {
        let (def, run) = walk(seed);
        for cfg in &run {
            for s in cfg.statuses.values().filter(|s| s.call_state.is_empty()) {
                let m = def.method(&s.bundle, &s.object, &s.method).unwrap();
                for (edge, e) in m.outgoing(&s.location) {
                    let t = TransitionInstance::FireEdge { status: s.id, edge };
                    let expect = naive_dry_run(&def, cfg, &s.bundle, &e.actions);
                    prop_assert_eq!(is_enabled(&def, cfg, &t), expect);
                    match apply(&def, cfg, &t) {
                        Ok(step) => {
                            prop_assert!(expect);
                            prop_assert_eq!(step.events.len(), e.actions.len());
                        }
                        Err(err) => {
                            prop_assert!(!expect);
                            prop_assert_eq!(err, SemanticsError::NotEnabled(t));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn steps_in_different_bundles_commute(seed in any::<u64>()) {
        let (def, run) = walk(seed);
        for cfg in &run {
            let local: Vec<(Ident, TransitionInstance)> = enabled(&def, cfg)
                .into_iter()
                .filter(|t| !t.is_structural(&def, cfg))
                .filter_map(|t| match &t {
                    TransitionInstance::FireEdge { status, .. } | TransitionInstance::Return { status } => {
                        Some((cfg.statuses[status].bundle.clone(), t))
                    }
                    TransitionInstance::Environment(_) => None,
                })
                .collect();
            for (b1, t1) in &local {
                for (b2, t2) in &local {
                    if b1 == b2 {
                        continue;
                    }
                    let after1 = apply(&def, cfg, t1).unwrap().config;
                    let after2 = apply(&def, cfg, t2).unwrap().config;
                    let one_two = apply(&def, &after1, t2).unwrap().config;
                    let two_one = apply(&def, &after2, t1).unwrap().config;
                    prop_assert_eq!(canonicalize(&one_two), canonicalize(&two_one));
                }
            }
        }
    }

    #[test]
    fn return_undoes_exactly_its_call(seed in any::<u64>()) {
        let (def, run) = walk(seed);
        for cfg in &run {
            for t in enabled(&def, cfg) {
                let post = apply(&def, cfg, &t).unwrap().config;
                match t {
                    TransitionInstance::Return { status } => {
                        prop_assert!(!post.statuses.contains_key(&status));
                        if let Some(caller) = cfg.caller_of(status) {
                            let mut expected = cfg.statuses[&caller].call_state.clone();
                            expected.retain(|e| e.callee != status);
                            prop_assert_eq!(&post.statuses[&caller].call_state, &expected);
                        }
                    }
                    TransitionInstance::FireEdge { status, edge } => {
                        let s = &cfg.statuses[&status];
                        let e = &def.method(&s.bundle, &s.object, &s.method).unwrap().edges[edge];
                        if let Some(after) = post.statuses.get(&status) {
                            let calls = e.actions.iter().filter(|a| matches!(a, Action::Call { .. })).count();
                            prop_assert_eq!(after.call_state.len(), calls);
                            prop_assert_eq!(&after.location, &e.target);
                        }
                    }
                    TransitionInstance::Environment(_) => {}
                }
            }
        }
    }
}

#[test]
fn straight_line_call_then_return_restores_caller() {
    let def = common::model("startup.osgi");
    let mut cfg = initial_state(&def).unwrap();
    let mut before = None;
    for _ in 0..20 {
        let Some(t) = enabled(&def, &cfg).into_iter().next() else { break };
        let post = apply(&def, &cfg, &t).unwrap().config;
        if let TransitionInstance::FireEdge { status, .. } = t {
            if post.statuses[&status].call_state.len() > cfg.statuses[&status].call_state.len() {
                before = Some((status, cfg.statuses[&status].call_state.clone()));
            }
        }
        if let (TransitionInstance::Return { .. }, Some((caller, cs))) = (&t, &before) {
            if let Some(c) = post.statuses.get(caller) {
                assert_eq!(&c.call_state, cs);
                assert!(cs.is_empty());
                return;
            }
        }
        cfg = post;
    }
    panic!("startup never returned to its caller");
}

#[test]
fn present_bundles_match_enabled_environment() {
    let def = common::model("env_remove.osgi");
    let cfg = initial_state(&def).unwrap();
    let env: BTreeSet<Action> = enabled(&def, &cfg)
        .into_iter()
        .filter_map(|t| match t {
            TransitionInstance::Environment(a) => Some(a),
            _ => None,
        })
        .collect();
    let b2 = Ident::new("b2");
    let expected = if cfg.bundle_present(&b2) { Action::RemoveBundle(b2) } else { Action::AddBundle(b2) };
    assert_eq!(env, BTreeSet::from([expected]));
}
