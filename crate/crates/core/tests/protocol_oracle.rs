//! Automata, monitors, inclusion, instantiation and composition against
//! derivative matching and naive product search.

mod common;

use std::collections::BTreeSet;

use osgi_core::dsl::parse_trace;
use osgi_core::model::Ident;
use osgi_core::protocol::{
    compose_deadlock, determinize, included, instantiate, monitor, project, project_automaton, to_nfa, BindTarget,
    Binding, DeadlockVerdict, Dfa, Event, Inclusion, ProtoExpr, ResourceDecl, Spec, Style, Verdict,
};
use osgi_oracle::{
    deadlock_search, nfa_accepts, replays_to_deadlock, shortest_difference, shortlex_words, Lang, OracleResource,
    ProductOutcome, Re,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn expr_of(spec: &Spec) -> &ProtoExpr {
    match spec {
        Spec::Expr(e) => e,
        Spec::Automaton(_) => panic!("expected an expression"),
    }
}

fn concrete(name: &str) -> Spec {
    common::proto(name).concrete().unwrap()
}

fn values(n: usize) -> Vec<Ident> {
    (0..n).map(|i| Ident::new(format!("f_{i}"))).collect()
}

/// A word of the language, drawn by unfolding the expression.
fn sample(e: &ProtoExpr, rng: &mut ChaCha8Rng, out: &mut Vec<Event>) {
    match e {
        ProtoExpr::Epsilon => {}
        ProtoExpr::Atom(ev) => out.push(ev.clone()),
        ProtoExpr::Concat(a, b) => {
            sample(a, rng, out);
            sample(b, rng, out);
        }
        ProtoExpr::Alt(a, b) => sample(if rng.gen_bool(0.5) { a } else { b }, rng, out),
        ProtoExpr::Star(a) => {
            for _ in 0..rng.gen_range(0..3) {
                sample(a, rng, out);
            }
        }
    }
}

/// Half language samples, half perturbed or arbitrary words, over the
/// spec's alphabet plus one foreign event.
fn random_trace(e: &ProtoExpr, alphabet: &[Event], rng: &mut ChaCha8Rng) -> Vec<Event> {
    let mut t = Vec::new();
    match rng.gen_range(0..4) {
        0 => sample(e, rng, &mut t),
        1 | 2 => {
            sample(e, rng, &mut t);
            for _ in 0..rng.gen_range(1..3) {
                let i = rng.gen_range(0..=t.len());
                match rng.gen_range(0..3) {
                    0 if i < t.len() => {
                        t.remove(i);
                    }
                    1 if i + 1 < t.len() => t.swap(i, i + 1),
                    _ => t.insert(i, alphabet.choose(rng).unwrap().clone()),
                }
            }
        }
        _ => {
            for _ in 0..rng.gen_range(0..10) {
                t.push(alphabet.choose(rng).unwrap().clone());
            }
        }
    }
    t
}

fn fixture_expressions() -> Vec<(String, ProtoExpr)> {
    let mut out: Vec<(String, ProtoExpr)> = ["file.proto", "action1.proto", "action2.proto", "action2_ordered.proto"]
        .into_iter()
        .map(|n| (n.to_string(), expr_of(&concrete(n)).clone()))
        .collect();
    let param = common::proto("file_param.proto").param_spec();
    for style in [Style::Replicate, Style::Collapse] {
        let spec = instantiate(&param, &values(2), style).unwrap();
        out.push((format!("file_param.proto/{style}"), expr_of(&spec).clone()));
    }
    out
}

#[test]
fn dfa_agrees_with_derivatives_on_random_traces() {
    for (name, e) in fixture_expressions() {
        let spec = Spec::Expr(e.clone());
        let dfa = Dfa::from_spec(&spec, &BTreeSet::new()).unwrap();
        let nfa = to_nfa(&e).unwrap();
        let det = determinize(&nfa);
        let re = Re::from_expr(&e);
        let mut alphabet: Vec<Event> = spec.alphabet().into_iter().collect();
        alphabet.push(Event::inc("Foreign"));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut accepted, mut rejected) = (0, 0);
        for _ in 0..1000 {
            let t = random_trace(&e, &alphabet, &mut rng);
            let expected = re.matches(&t);
            assert_eq!(dfa.accepts(&t), expected, "{name}: {t:?}");
            assert_eq!(nfa_accepts(&nfa, &t), expected, "{name} nfa: {t:?}");
            assert_eq!(nfa_accepts(&det, &t), expected, "{name} determinized: {t:?}");
            if expected {
                accepted += 1;
            } else {
                rejected += 1;
            }
        }
        assert!(accepted > 100 && rejected > 100, "{name}: {accepted} accepted, {rejected} rejected");
    }
}

#[test]
fn determinized_automaton_is_deterministic_and_complete() {
    for (name, e) in fixture_expressions() {
        let det = determinize(&to_nfa(&e).unwrap());
        let alphabet = det.alphabet();
        for loc in &det.locations {
            for ev in &alphabet {
                let n = det.transitions.iter().filter(|t| &t.source == loc && t.event.as_ref() == Some(ev)).count();
                assert_eq!(n, 1, "{name}");
            }
        }
        assert!(det.transitions.iter().all(|t| t.event.is_some()));
    }
}

/// Per-prefix verdicts read off the residual expression.
fn oracle_verdicts(re: &Re, trace: &[Event]) -> Vec<Verdict> {
    let mut r = re.clone();
    let mut out = Vec::new();
    for e in trace {
        r = r.deriv(e);
        out.push(if r == Re::Empty {
            Verdict::Violation
        } else if r.nullable() {
            Verdict::Accepting
        } else {
            Verdict::Ok
        });
    }
    out
}

fn inc(labels: &str) -> Vec<Event> {
    labels.split_whitespace().map(Event::inc).collect()
}

#[test]
fn monitor_on_hand_written_traces() {
    let spec = concrete("file.proto");
    let re = Re::from_expr(expr_of(&spec));
    let traces = [
        "Lock Read Write Unlock Lock Unlock",
        "Read",
        "Lock",
        "Lock Unlock",
        "Unlock",
        "Lock Lock",
        "Lock Read Read Read Unlock",
        "Lock Write Unlock Read",
        "Lock Unlock Unlock Lock",
        "Lock Read Foo Unlock",
        "Lock Write Write Unlock Lock Read Unlock",
        "",
    ];
    for t in traces {
        let trace = inc(t);
        let got = monitor(&spec, &trace).unwrap();
        assert_eq!(got, oracle_verdicts(&re, &trace), "{t}");
        assert_eq!(got.last() == Some(&Verdict::Accepting), !trace.is_empty() && re.matches(&trace));
    }
    use Verdict::*;
    assert_eq!(monitor(&spec, &inc(traces[0])).unwrap(), vec![Ok, Ok, Ok, Accepting, Ok, Accepting]);
    assert_eq!(monitor(&spec, &inc("Read")).unwrap(), vec![Violation]);
}

#[test]
fn monitor_on_trace_fixtures() {
    let spec = concrete("file.proto");
    let ok = parse_trace(&common::fixture("file_ok.trace")).unwrap();
    let bad = parse_trace(&common::fixture("file_bad.trace")).unwrap();
    assert_eq!(monitor(&spec, &ok).unwrap(), vec![Verdict::Ok, Verdict::Ok, Verdict::Accepting]);
    assert_eq!(monitor(&spec, &bad).unwrap(), vec![Verdict::Violation, Verdict::Violation]);
}

fn small_expr() -> impl Strategy<Value = ProtoExpr> {
    let leaf = prop_oneof![
        1 => Just(ProtoExpr::Epsilon),
        4 => prop::sample::select(vec!["a", "b", "c"]).prop_map(|l| ProtoExpr::atom(Event::inc(l))),
    ];
    leaf.prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ProtoExpr::concat(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ProtoExpr::alt(a, b)),
            inner.prop_map(ProtoExpr::star),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn monitor_final_verdict_is_membership(e in small_expr(), trace in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..8)) {
        let spec = Spec::Expr(e.clone());
        let trace: Vec<Event> = trace.into_iter().map(Event::inc).collect();
        let re = Re::from_expr(&e);
        let verdicts = monitor(&spec, &trace).unwrap();
        prop_assert_eq!(&verdicts, &oracle_verdicts(&re, &trace));
        if let Some(last) = verdicts.last() {
            prop_assert_eq!(*last == Verdict::Accepting, re.matches(&trace));
        }
    }

    #[test]
    fn inclusion_matches_residual_search(a in small_expr(), b in small_expr()) {
        let (sa, sb) = (Spec::Expr(a), Spec::Expr(b));
        let expected = shortest_difference(&sa, &sb);
        match included(&sa, &sb).unwrap() {
            Inclusion::Included => prop_assert_eq!(expected, None),
            Inclusion::NotIncluded(w) => prop_assert_eq!(Some(w), expected),
        }
    }

    #[test]
    fn inclusion_is_a_preorder(a in small_expr(), b in small_expr(), c in small_expr()) {
        let (sa, sb, sc) = (Spec::Expr(a), Spec::Expr(b), Spec::Expr(c));
        prop_assert_eq!(included(&sa, &sa).unwrap(), Inclusion::Included);
        let ab = included(&sa, &sb).unwrap() == Inclusion::Included;
        let bc = included(&sb, &sc).unwrap() == Inclusion::Included;
        if ab && bc {
            prop_assert_eq!(included(&sa, &sc).unwrap(), Inclusion::Included);
        }
    }

    #[test]
    fn nfa_language_is_expression_language(e in small_expr()) {
        let nfa = to_nfa(&e).unwrap();
        let re = Re::from_expr(&e);
        for w in shortlex_words(&inc("a b c"), 4) {
            prop_assert_eq!(nfa_accepts(&nfa, &w), re.matches(&w));
        }
    }
}

fn file_binding() -> Binding {
    let mut b = Binding::new();
    for f in ["F1", "F2"] {
        for op in ["Lock", "Unlock", "Read", "Write"] {
            b.insert(Ident::new(format!("{op}{f}")), BindTarget::new(f, op));
        }
    }
    b
}

#[test]
fn action1_projected_to_one_file_is_compatible() {
    let file = concrete("file.proto");
    let action1 = concrete("action1.proto").automaton().unwrap();
    for f in ["F1", "F2"] {
        let projected = Spec::Automaton(project_automaton(&action1, &file_binding(), &Ident::new(f)));
        assert_eq!(included(&projected, &file).unwrap(), Inclusion::Included);
        assert_eq!(shortest_difference(&projected, &file), None);
    }
}

#[test]
fn unlock_before_lock_is_caught_with_a_minimal_counterexample() {
    let file = concrete("file.proto");
    let mutated = osgi_core::dsl::parse_protocol(
        "protocol bad outgoing { UnlockF1 . LockF1 . LockF2 . (ReadF1 + WriteF2)* . UnlockF2 . UnlockF1 }",
    )
    .unwrap()
    .concrete()
    .unwrap();
    let projected = Spec::Automaton(project_automaton(&mutated.automaton().unwrap(), &file_binding(), &Ident::new("F1")));
    let Inclusion::NotIncluded(w) = included(&projected, &file).unwrap() else { panic!("mutant accepted") };
    assert_eq!(Some(w.clone()), shortest_difference(&projected, &file));
    assert_eq!(w, inc("Unlock Lock Unlock"));
    let Spec::Automaton(pa) = &projected else { unreachable!() };
    assert!(nfa_accepts(pa, &w));
    assert!(!Lang::of(&file).accepts(&w));
    let alphabet: Vec<Event> = pa.alphabet().union(&file.alphabet()).cloned().collect();
    for shorter in shortlex_words(&alphabet, w.len() - 1) {
        assert!(!nfa_accepts(pa, &shorter) || Lang::of(&file).accepts(&shorter));
    }
    let trace: Vec<Event> = ["UnlockF1", "LockF1", "LockF2", "UnlockF2", "UnlockF1"].into_iter().map(Event::out).collect();
    assert_eq!(project(&trace, &file_binding(), &Ident::new("F1")), w);
}

/// Every word is a sequence of lock blocks; `same` asks each block to stay on one value.
fn blocks_ok(word: &[Event], same: bool) -> bool {
    let mut held: Option<&Ident> = None;
    for e in word {
        let v = e.parameter.as_ref().unwrap().name();
        match (e.label.as_str(), held) {
            ("Lock", None) => held = Some(v),
            ("Read" | "Write" | "Unlock", Some(h)) => {
                if same && h != v {
                    return false;
                }
                if e.label.as_str() == "Unlock" {
                    held = None;
                }
            }
            _ => return false,
        }
    }
    held.is_none()
}

#[test]
fn instantiation_styles_against_block_predicates() {
    for fixture in ["file_param.proto", "file_param_automaton.proto"] {
        let param = common::proto(fixture).param_spec();
        for n in 1..=2 {
            let vals = values(n);
            let rep = instantiate(&param, &vals, Style::Replicate).unwrap();
            let col = instantiate(&param, &vals, Style::Collapse).unwrap();
            let (rep_lang, col_lang) = (Lang::of(&rep), Lang::of(&col));
            let alphabet: Vec<Event> = ["Lock", "Read", "Write", "Unlock"]
                .iter()
                .flat_map(|l| vals.iter().map(move |v| Event::inc(*l).with_value(v.clone())))
                .collect();
            for w in shortlex_words(&alphabet, 5) {
                assert_eq!(rep_lang.accepts(&w), blocks_ok(&w, true), "{fixture} replicate {w:?}");
                assert_eq!(col_lang.accepts(&w), blocks_ok(&w, false), "{fixture} collapse {w:?}");
            }
            assert_eq!(included(&rep, &col).unwrap(), Inclusion::Included);
            let reverse = included(&col, &rep).unwrap();
            if n == 1 {
                assert_eq!(reverse, Inclusion::Included);
            } else {
                let lock0_unlock1 = vec![Event::inc("Lock").with_value("f_0"), Event::inc("Unlock").with_value("f_1")];
                assert_eq!(reverse, Inclusion::NotIncluded(lock0_unlock1.clone()));
                assert!(col_lang.accepts(&lock0_unlock1) && !rep_lang.accepts(&lock0_unlock1));
            }
        }
    }
}

#[test]
fn replicated_automaton_has_one_lock_location_per_value() {
    let param = common::proto("file_param_automaton.proto").param_spec();
    for n in 1..=4 {
        let Spec::Automaton(rep) = instantiate(&param, &values(n), Style::Replicate).unwrap() else { panic!() };
        let Spec::Automaton(col) = instantiate(&param, &values(n), Style::Collapse).unwrap() else { panic!() };
        assert_eq!(rep.locations.len(), n + 1);
        assert_eq!(col.locations.len(), 2);
        assert_eq!(col.transitions.len(), 4 * n);
    }
}

struct Setup {
    clients: Vec<Spec>,
    exclusive: bool,
}

impl Setup {
    fn core(&self) -> DeadlockVerdict {
        let clients: Vec<_> = self.clients.iter().map(|c| c.automaton().unwrap()).collect();
        let file = concrete("file.proto").automaton().unwrap();
        let resources: Vec<(Ident, ResourceDecl)> =
            ["F1", "F2"].iter().map(|f| (Ident::new(*f), ResourceDecl::new(file.clone(), self.exclusive))).collect();
        compose_deadlock(&clients, &resources, &file_binding()).unwrap()
    }

    fn oracle_parts(&self) -> (Vec<(Lang, Vec<Event>)>, Vec<OracleResource>) {
        let clients = self.clients.iter().map(|c| (Lang::of(c), c.alphabet().into_iter().collect())).collect();
        let resources = ["F1", "F2"]
            .iter()
            .map(|f| OracleResource {
                name: Ident::new(*f),
                lang: Lang::of(&concrete("file.proto")),
                exclusive: self.exclusive,
                acquire: vec![Ident::new("Lock")],
                release: vec![Ident::new("Unlock")],
            })
            .collect();
        (clients, resources)
    }

    /// Core verdict and oracle verdict agree on existence, witness length
    /// and, for the core witness, that it replays to a blocked product state.
    fn check(&self) -> DeadlockVerdict {
        let verdict = self.core();
        let (clients, resources) = self.oracle_parts();
        let oracle = deadlock_search(&clients, &resources, &file_binding());
        match (&verdict, &oracle) {
            (DeadlockVerdict::NoDeadlock { .. }, ProductOutcome::NoDeadlock { .. }) => {}
            (DeadlockVerdict::Deadlock { witness, .. }, ProductOutcome::Deadlock { path, .. }) => {
                assert_eq!(witness.len(), path.len());
                let mine: Vec<(usize, Event)> = witness.iter().map(|s| (s.client, s.event.clone())).collect();
                assert!(replays_to_deadlock(&clients, &resources, &file_binding(), &mine));
            }
            _ => panic!("core {verdict:?} but oracle {oracle:?}"),
        }
        verdict
    }
}

#[test]
fn opposite_lock_order_deadlocks_with_one_lock_each() {
    let setup = Setup { clients: vec![concrete("action1.proto"), concrete("action2.proto")], exclusive: true };
    let DeadlockVerdict::Deadlock { witness, blocked, states } = setup.check() else { panic!("no deadlock") };
    let steps: Vec<(usize, &str)> = witness.iter().map(|s| (s.client, s.event.label.as_str())).collect();
    assert_eq!(steps, vec![(0, "LockF1"), (1, "LockF2")]);
    let holders: Vec<Option<usize>> = blocked.resources.iter().map(|r| r.holder).collect();
    assert_eq!(holders, vec![Some(0), Some(1)]);
    assert!(states <= 100, "{states} product states");
    let (clients, resources) = setup.oracle_parts();
    let ProductOutcome::Deadlock { holders, .. } = deadlock_search(&clients, &resources, &file_binding()) else {
        unreachable!()
    };
    assert_eq!(holders, vec![Some(0), Some(1)]);
}

#[test]
fn consistent_lock_order_is_deadlock_free() {
    let setup = Setup { clients: vec![concrete("action1.proto"), concrete("action2_ordered.proto")], exclusive: true };
    let verdict = setup.check();
    assert!(!verdict.is_deadlock());
    assert!(verdict.states() <= 100);
}

#[test]
fn without_exclusivity_the_file_protocol_alone_still_blocks() {
    // A second Lock on a locked file has no transition in the file protocol,
    // so the cross-order block survives without holder tracking.
    let crossed = Setup { clients: vec![concrete("action1.proto"), concrete("action2.proto")], exclusive: false };
    let DeadlockVerdict::Deadlock { witness, blocked, .. } = crossed.check() else { panic!("no deadlock") };
    assert_eq!(witness.len(), 2);
    assert!(blocked.resources.iter().all(|r| r.holder.is_none()));
    let ordered = Setup { clients: vec![concrete("action1.proto"), concrete("action2_ordered.proto")], exclusive: false };
    assert!(!ordered.check().is_deadlock());
}

fn client_expr() -> impl Strategy<Value = ProtoExpr> {
    let labels: Vec<&str> = vec!["LockF1", "UnlockF1", "LockF2", "UnlockF2", "ReadF1", "WriteF2"];
    let leaf = prop::sample::select(labels).prop_map(|l| ProtoExpr::atom(Event::out(l)));
    leaf.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| ProtoExpr::concat(a, b)),
            1 => (inner.clone(), inner.clone()).prop_map(|(a, b)| ProtoExpr::alt(a, b)),
            1 => inner.prop_map(ProtoExpr::star),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn composition_matches_naive_product(
        clients in prop::collection::vec(client_expr(), 1..=3),
        exclusive in any::<bool>(),
    ) {
        let setup = Setup { clients: clients.into_iter().map(Spec::Expr).collect(), exclusive };
        setup.check();
    }
}
