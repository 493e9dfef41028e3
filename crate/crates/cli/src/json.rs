//! Structured reports. Keys come out sorted because `serde_json` maps are
//! ordered by key unless `preserve_order` is enabled, which it is not here.

use osgi_core::model::{RuntimeConfig, SystemDef};
use osgi_core::protocol::Event;
use osgi_core::semantics::{apply, Classification, TransitionInstance};
use serde_json::{json, Value};

pub fn config(cfg: &RuntimeConfig) -> Value {
    let statuses: Vec<Value> = cfg
        .statuses
        .values()
        .map(|s| {
            let waiting: Vec<Value> = s
                .call_state
                .iter()
                .map(|e| {
                    json!({
                        "bundle": e.bundle.as_str(),
                        "callee": e.callee.0,
                        "dangling": !cfg.statuses.contains_key(&e.callee),
                        "method": e.method.as_str(),
                        "object": e.object.as_str(),
                    })
                })
                .collect();
            json!({
                "bundle": s.bundle.as_str(),
                "id": s.id.0,
                "location": s.location.as_str(),
                "method": s.method.as_str(),
                "object": s.object.as_str(),
                "waiting_on": waiting,
            })
        })
        .collect();
    let objects: Vec<Value> =
        cfg.present_objects.iter().map(|(b, o)| json!({ "bundle": b.as_str(), "object": o.as_str() })).collect();
    json!({
        "bundles": cfg.present_bundles.iter().map(|b| b.as_str()).collect::<Vec<_>>(),
        "next_id": cfg.next_id,
        "objects": objects,
        "statuses": statuses,
    })
}

pub fn classification(c: &Classification) -> Value {
    match c {
        Classification::Running => json!({ "kind": "running" }),
        Classification::Quiescent => json!({ "kind": "quiescent" }),
        Classification::Deadlocked(ids) => {
            json!({ "kind": "deadlocked", "blocked": ids.iter().map(|i| i.0).collect::<Vec<_>>() })
        }
    }
}

pub fn events(events: &[Event]) -> Value {
    Value::from(events.iter().map(Event::to_string).collect::<Vec<_>>())
}

/// Steps of a path from `start`, each described in the configuration it fires in.
pub fn path(def: &SystemDef, start: &RuntimeConfig, path: &[TransitionInstance]) -> (Value, RuntimeConfig) {
    let mut cfg = start.clone();
    let mut steps = Vec::with_capacity(path.len());
    for t in path {
        let description = t.describe(def, &cfg);
        let step = apply(def, &cfg, t).expect("path replays");
        steps.push(json!({
            "description": description,
            "events": events(&step.events),
            "transition": t.to_string(),
        }));
        cfg = step.config;
    }
    (Value::from(steps), cfg)
}

pub fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}
