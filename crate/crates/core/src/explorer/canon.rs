use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{CallStateEntry, Ident, InstanceId, MethodStatus, RuntimeConfig};

/// Isomorphism class of the subtree below a status: its height in the wait
/// forest and its rank among the distinct shapes of that height.
type Class = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum ChildKey {
    Live([Ident; 3], Class),
    /// The callee was killed by a removal; the entry never clears.
    Dangling([Ident; 3]),
}

type Key = ([Ident; 4], Vec<ChildKey>);

fn coords(s: &MethodStatus) -> [Ident; 4] {
    [s.bundle.clone(), s.object.clone(), s.method.clone(), s.location.clone()]
}

fn entry_key(e: &CallStateEntry) -> [Ident; 3] {
    [e.method.clone(), e.object.clone(), e.bundle.clone()]
}

/// Heights of all statuses, computed without recursion so deep call chains are fine.
fn heights(cfg: &RuntimeConfig) -> HashMap<InstanceId, usize> {
    let mut height = HashMap::with_capacity(cfg.statuses.len());
    for &start in cfg.statuses.keys() {
        let mut stack = vec![(start, false)];
        while let Some((id, expanded)) = stack.pop() {
            if height.contains_key(&id) {
                continue;
            }
            let live = cfg.statuses[&id].call_state.iter().map(|e| e.callee).filter(|c| cfg.statuses.contains_key(c));
            if expanded {
                let h = live.map(|c| height[&c] + 1).max().unwrap_or(0);
                height.insert(id, h);
            } else {
                stack.push((id, true));
                stack.extend(live.filter(|c| !height.contains_key(c)).map(|c| (c, false)));
            }
        }
    }
    height
}

/// Assigns each status its isomorphism class, lowest height first.
fn classes(cfg: &RuntimeConfig) -> HashMap<InstanceId, Class> {
    let height = heights(cfg);
    let mut by_height: BTreeMap<usize, Vec<InstanceId>> = BTreeMap::new();
    for (&id, &h) in &height {
        by_height.entry(h).or_default().push(id);
    }
    let mut class = HashMap::with_capacity(cfg.statuses.len());
    for (h, ids) in by_height {
        let keys: Vec<(Key, InstanceId)> = ids.into_iter().map(|id| (key(cfg, &class, id), id)).collect();
        let distinct: BTreeSet<&Key> = keys.iter().map(|(k, _)| k).collect();
        let rank: BTreeMap<&Key, usize> = distinct.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
        let assigned: Vec<(InstanceId, Class)> = keys.iter().map(|(k, id)| (*id, (h, rank[k]))).collect();
        class.extend(assigned);
    }
    class
}

fn child_key(cfg: &RuntimeConfig, class: &HashMap<InstanceId, Class>, e: &CallStateEntry) -> ChildKey {
    if cfg.statuses.contains_key(&e.callee) {
        ChildKey::Live(entry_key(e), class[&e.callee])
    } else {
        ChildKey::Dangling(entry_key(e))
    }
}

fn key(cfg: &RuntimeConfig, class: &HashMap<InstanceId, Class>, id: InstanceId) -> Key {
    let status = &cfg.statuses[&id];
    let mut children: Vec<ChildKey> = status.call_state.iter().map(|e| child_key(cfg, class, e)).collect();
    children.sort();
    (coords(status), children)
}

/// Canonical form plus the relabeling applied (old id -> new id, including
/// dangling call-state references).
pub fn canonicalize_with_map(cfg: &RuntimeConfig) -> (RuntimeConfig, BTreeMap<InstanceId, InstanceId>) {
    let held: BTreeSet<InstanceId> =
        cfg.statuses.values().flat_map(|s| s.call_state.iter().map(|e| e.callee)).collect();
    let class = classes(cfg);
    let sort_key = |id: InstanceId| (coords(&cfg.statuses[&id]), class[&id]);

    let mut roots: Vec<InstanceId> = cfg.statuses.keys().copied().filter(|id| !held.contains(id)).collect();
    roots.sort_by_key(|&id| sort_key(id));

    // pre-order walk of the forest; siblings in class order
    let mut rank = Vec::with_capacity(cfg.statuses.len());
    let mut dangling = Vec::new();
    let mut stack: Vec<InstanceId> = roots.into_iter().rev().collect();
    while let Some(id) = stack.pop() {
        rank.push(id);
        let mut children: Vec<(ChildKey, InstanceId)> =
            cfg.statuses[&id].call_state.iter().map(|e| (child_key(cfg, &class, e), e.callee)).collect();
        children.sort();
        let mut live = Vec::new();
        for (k, callee) in children {
            match k {
                ChildKey::Live(..) => live.push(callee),
                ChildKey::Dangling(_) => dangling.push(callee),
            }
        }
        stack.extend(live.into_iter().rev());
    }
    debug_assert_eq!(rank.len(), cfg.statuses.len(), "wait structure must be a forest");

    let position: HashMap<InstanceId, usize> = rank.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut order: Vec<&MethodStatus> = cfg.statuses.values().collect();
    order.sort_by(|a, b| coords(a).cmp(&coords(b)).then(position[&a.id].cmp(&position[&b.id])));

    let mut map = BTreeMap::new();
    for (i, s) in order.iter().enumerate() {
        map.insert(s.id, InstanceId(i as u64));
    }
    let live = map.len() as u64;
    for (k, id) in dangling.iter().enumerate() {
        map.insert(*id, InstanceId(live + k as u64));
    }

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
    let canon = RuntimeConfig {
        present_bundles: cfg.present_bundles.clone(),
        present_objects: cfg.present_objects.clone(),
        statuses,
        next_id: map.len() as u64,
    };
    (canon, map)
}

/// Relabels instance ids deterministically so that configurations equal up
/// to id permutation become identical.
pub fn canonicalize(cfg: &RuntimeConfig) -> RuntimeConfig {
    canonicalize_with_map(cfg).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testing::ident;

    fn status(id: u64, m: &str, loc: &str, waits: &[(&str, u64)]) -> MethodStatus {
        MethodStatus {
            method: ident(m),
            object: ident("o"),
            bundle: ident("b"),
            location: ident(loc),
            id: InstanceId(id),
            call_state: waits
                .iter()
                .map(|(cm, c)| CallStateEntry {
                    method: ident(cm),
                    object: ident("o"),
                    bundle: ident("b"),
                    callee: InstanceId(*c),
                })
                .collect(),
        }
    }

    fn config(statuses: Vec<MethodStatus>, next_id: u64) -> RuntimeConfig {
        RuntimeConfig {
            present_bundles: [ident("b")].into(),
            present_objects: [(ident("b"), ident("o"))].into(),
            statuses: statuses.into_iter().map(|s| (s.id, s)).collect(),
            next_id,
        }
    }

    #[test]
    fn single_status_relabels_to_zero() {
        let c = canonicalize(&config(vec![status(7, "m", "l0", &[])], 8));
        assert_eq!(c.next_id, 1);
        assert_eq!(c.statuses.keys().copied().collect::<Vec<_>>(), vec![InstanceId(0)]);
        assert_eq!(c.statuses[&InstanceId(0)].id, InstanceId(0));
    }

    #[test]
    fn identical_callees_distinguished_by_caller() {
        // two callers at different locations each wait on an identical callee
        let a = config(
            vec![
                status(0, "caller", "x", &[("w", 5)]),
                status(1, "caller", "y", &[("w", 4)]),
                status(4, "w", "l0", &[]),
                status(5, "w", "l0", &[]),
            ],
            6,
        );
        let b = config(
            vec![
                status(10, "caller", "x", &[("w", 3)]),
                status(11, "caller", "y", &[("w", 2)]),
                status(3, "w", "l0", &[]),
                status(2, "w", "l0", &[]),
            ],
            12,
        );
        let mut swapped = b.clone();
        for s in swapped.statuses.values_mut() {
            for e in s.call_state.clone() {
                s.call_state.remove(&e);
                let callee = if e.callee == InstanceId(3) { InstanceId(2) } else { InstanceId(3) };
                s.call_state.insert(CallStateEntry { callee, ..e });
            }
        }
        assert_eq!(canonicalize(&a), canonicalize(&b));
        // after swapping which caller holds which callee, x and y still each wait on one `w`
        assert_eq!(canonicalize(&a), canonicalize(&swapped));
    }

    #[test]
    fn dangling_entries_get_ids_above_live() {
        let c = canonicalize(&config(vec![status(3, "caller", "x", &[("gone", 1), ("w", 9)]), status(9, "w", "l0", &[])], 10));
        assert_eq!(c.next_id, 3);
        let caller = &c.statuses[&InstanceId(0)];
        let callees: BTreeSet<_> = caller.call_state.iter().map(|e| e.callee).collect();
        assert_eq!(callees, [InstanceId(1), InstanceId(2)].into());
        assert!(c.statuses.contains_key(&InstanceId(1)));
        assert!(!c.statuses.contains_key(&InstanceId(2)));
    }

    #[test]
    fn idempotent() {
        let a = config(
            vec![status(5, "caller", "x", &[("w", 8), ("v", 2)]), status(8, "w", "l0", &[("u", 13)]), status(2, "v", "l1", &[]), status(13, "u", "l0", &[])],
            14,
        );
        let once = canonicalize(&a);
        assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 20_000u64;
        let statuses = (0..n)
            .map(|i| if i + 1 < n { status(i, "m", "l0", &[("m", i + 1)]) } else { status(i, "m", "l0", &[]) })
            .rev()
            .collect();
        let c = canonicalize(&config(statuses, n));
        assert_eq!(c.next_id, n);
        assert_eq!(canonicalize(&c), c);
    }
}
