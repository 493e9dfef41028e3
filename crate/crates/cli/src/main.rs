//! `osgi-check`: explore, simulate and check abstract OSGi component models
//! and their protocol specifications.
//!
//! Exit status is 0 when the analysis ran and the property holds, 1 when it
//! ran and found a problem (deadlock, violation, non-inclusion, or a bounded
//! search that could not decide), and 2 for usage, parse or validation errors.

mod json;
mod load;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use osgi_core::dsl::{print_protocol, ProtoSpec};
use osgi_core::explorer::{explore, simulate, Bounds, StepSession, DEFAULT_MAX_DEPTH, DEFAULT_MAX_STATES};
use osgi_core::invariants::{check_reachable, check_structural_preservation, InvariantError, Preservation, ReachCheck};
use osgi_core::model::{initial_state, Ident};
use osgi_core::protocol::{
    compose_deadlock, included, instantiate, monitor, project_automaton, DeadlockVerdict, Inclusion, Monitor, Spec,
    Style, Verdict,
};
use osgi_core::semantics::{apply, classify, Classification};
use serde_json::json;

#[derive(Parser)]
#[command(name = "osgi-check", version, about = "Explore and check abstract OSGi component models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model
    Validate { model: PathBuf },
    /// Exhaustive breadth-first exploration of the reachable configurations
    Explore {
        model: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
        #[arg(long)]
        json: bool,
    },
    /// One random run, reproducible from its seed
    Simulate {
        model: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long)]
        json: bool,
    },
    /// Interactive stepping: pick transitions by number
    Step { model: PathBuf },
    /// Check a trace of events against a protocol
    Monitor {
        spec: PathBuf,
        trace: PathBuf,
        #[arg(long)]
        json: bool,
    },
    #[command(subcommand)]
    Protocol(ProtocolCommand),
    #[command(subcommand)]
    Invariant(InvariantCommand),
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    max_states: usize,
}

impl BoundArgs {
    fn bounds(&self) -> Bounds {
        Bounds { max_depth: Some(self.max_depth), max_states: Some(self.max_states) }
    }
}

#[derive(Subcommand)]
enum ProtocolCommand {
    /// Instantiate a parameterized protocol over concrete values
    Instantiate {
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        style: Style,
    },
    /// Check that every trace of A is a trace of B
    Include {
        a: PathBuf,
        b: PathBuf,
        /// Project A's outgoing events onto this resource first
        #[arg(long, requires = "bind")]
        project: Option<String>,
        /// OUT=RESOURCE:INC or OUT=RESOURCE:INC(VALUE)
        #[arg(long)]
        bind: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Search the product of clients and resources for a deadlock
    Deadlock {
        #[arg(long, required = true)]
        client: Vec<PathBuf>,
        /// NAME=FILE
        #[arg(long, required = true)]
        resource: Vec<String>,
        /// OUT=RESOURCE:INC or OUT=RESOURCE:INC(VALUE)
        #[arg(long, required = true)]
        bind: Vec<String>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum InvariantCommand {
    /// Check a formula over all reachable configurations, or its
    /// preservation across structural steps
    Check {
        model: PathBuf,
        formula: String,
        #[arg(long)]
        preservation: bool,
        #[command(flatten)]
        bounds: BoundArgs,
        #[arg(long)]
        json: bool,
    },
}

/// Whether the analysis found what it was looking for.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Holds,
    Fails,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(Outcome::Holds) => ExitCode::SUCCESS,
        Ok(Outcome::Fails) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Validate { model } => validate(&model),
        Command::Explore { model, bounds, json } => explore_cmd(&model, bounds.bounds(), json),
        Command::Simulate { model, seed, steps, json } => simulate_cmd(&model, seed, steps, json),
        Command::Step { model } => step_cmd(&model),
        Command::Monitor { spec, trace, json } => monitor_cmd(&spec, &trace, json),
        Command::Protocol(ProtocolCommand::Instantiate { spec, values, style }) => instantiate_cmd(&spec, &values, style),
        Command::Protocol(ProtocolCommand::Include { a, b, project, bind, json }) => {
            include_cmd(&a, &b, project.as_deref(), &bind, json)
        }
        Command::Protocol(ProtocolCommand::Deadlock { client, resource, bind, json }) => {
            deadlock_cmd(&client, &resource, &bind, json)
        }
        Command::Invariant(InvariantCommand::Check { model, formula, preservation, bounds, json }) => {
            invariant_cmd(&model, &formula, preservation, bounds.bounds(), json)
        }
    }
}

fn validate(path: &Path) -> Result<Outcome> {
    let (def, warnings) = load::model(path)?;
    load::report(&path.display().to_string(), &warnings);
    let methods: usize = def.bundles.values().flat_map(|b| b.objects.values()).map(|o| o.methods.len()).sum();
    println!("{}: ok ({} bundles, {methods} methods, {} warnings)", def.name, def.bundles.len(), warnings.len());
    Ok(Outcome::Holds)
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn explore_cmd(path: &Path, bounds: Bounds, as_json: bool) -> Result<Outcome> {
    let (def, _) = load::model(path)?;
    let report = explore(&def, bounds)?;
    let start = initial_state(&def)?;
    let quiescent = report.quiescent();
    let deadlocks = report.deadlocks();
    let outcome = if deadlocks > 0 || report.truncated { Outcome::Fails } else { Outcome::Holds };

    if as_json {
        let witnesses: Vec<_> = report
            .deadlock_witnesses
            .iter()
            .map(|w| {
                let (steps, end) = json::path(&def, &start, w);
                json!({ "end": json::config(&end), "outcome": json::classification(&classify(&def, &end)), "path": steps })
            })
            .collect();
        json::print(&json!({
            "deadlocks": witnesses,
            "model": def.name.as_str(),
            "states": report.states_visited,
            "terminals": { "deadlocked": deadlocks, "quiescent": quiescent, "total": report.terminals.len() },
            "transitions": report.transitions_taken,
            "truncated": report.truncated,
        }));
        return Ok(outcome);
    }

    println!("{}: {} states, {} transitions", def.name, report.states_visited, report.transitions_taken);
    let total = report.terminals.len();
    let kinds = match (quiescent, deadlocks) {
        (_, 0) if total > 0 => " (quiescent)".to_string(),
        (0, _) if total > 0 => " (deadlocked)".to_string(),
        (0, 0) => String::new(),
        (q, d) => format!(" ({q} quiescent, {d} deadlocked)"),
    };
    println!("{}{kinds}, {}", plural(total, "terminal"), plural(deadlocks, "deadlock"));
    if report.truncated {
        println!("search truncated by bounds: results are incomplete");
    }
    for (i, w) in report.deadlock_witnesses.iter().enumerate() {
        let mut cfg = start.clone();
        println!("\ndeadlock {} after {}:", i + 1, plural(w.len(), "step"));
        for (n, t) in w.iter().enumerate() {
            println!("  {:>3}. {}", n + 1, t.describe(&def, &cfg));
            cfg = apply(&def, &cfg, t)?.config;
        }
        println!("  => {}", classify(&def, &cfg));
        for line in cfg.to_string().lines() {
            println!("     {line}");
        }
    }
    Ok(outcome)
}

fn simulate_cmd(path: &Path, seed: u64, steps: usize, as_json: bool) -> Result<Outcome> {
    let (def, _) = load::model(path)?;
    let trace = simulate(&def, seed, steps)?;
    let start = initial_state(&def)?;
    let run: Vec<_> = trace.iter().map(|(t, _)| t.clone()).collect();
    let (steps_json, end) = json::path(&def, &start, &run);
    let class = classify(&def, &end);
    let outcome = if class.is_deadlock() { Outcome::Fails } else { Outcome::Holds };
    if as_json {
        json::print(&json!({
            "end": json::config(&end),
            "outcome": json::classification(&class),
            "seed": seed,
            "steps": steps_json,
        }));
        return Ok(outcome);
    }
    let mut cfg = start;
    for (n, (t, events)) in trace.iter().enumerate() {
        let events: Vec<String> = events.iter().map(ToString::to_string).collect();
        let suffix = if events.is_empty() { String::new() } else { format!("  {{{}}}", events.join(", ")) };
        println!("{:>4}. {}{suffix}", n + 1, t.describe(&def, &cfg));
        cfg = apply(&def, &cfg, t)?.config;
    }
    let how = if class == Classification::Running { "stopped after step limit" } else { "terminal" };
    println!("{} ({how}): {class}", plural(trace.len(), "step"));
    Ok(outcome)
}

fn step_cmd(path: &Path) -> Result<Outcome> {
    let (def, _) = load::model(path)?;
    let mut session = StepSession::new(def)?;
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    println!("{}", session.show_state());
    loop {
        let options = session.list();
        if options.is_empty() {
            println!("no enabled transitions: {}", session.classification());
        } else {
            print!("{options}");
        }
        print!("step> ");
        stdout.flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            println!();
            return Ok(Outcome::Holds);
        }
        match line.trim() {
            "" => continue,
            "q" | "quit" => return Ok(Outcome::Holds),
            "u" | "undo" => match session.undo() {
                Ok(()) => println!("{}", session.show_state()),
                Err(e) => println!("{e}"),
            },
            "s" | "state" => println!("{}", session.show_state()),
            "h" | "help" => println!("N apply option N, u undo, s show state, q quit"),
            other => match other.parse::<usize>() {
                Ok(n) => match session.apply(n) {
                    Ok(events) => {
                        for e in events {
                            println!("  event {e}");
                        }
                        println!("{}", session.show_state());
                    }
                    Err(e) => println!("{e}"),
                },
                Err(_) => println!("unknown command `{other}` (h for help)"),
            },
        }
    }
}

fn concrete(path: &Path, spec: &ProtoSpec) -> Result<Spec> {
    spec.concrete().with_context(|| format!("{}: protocol `{}`", path.display(), spec.name))
}

fn monitor_cmd(spec_path: &Path, trace_path: &Path, as_json: bool) -> Result<Outcome> {
    let spec = load::protocol(spec_path)?;
    let body = concrete(spec_path, &spec)?;
    let trace = load::trace(trace_path)?;
    let verdicts = monitor(&body, &trace)?;
    let first_violation = verdicts.iter().position(|v| *v == Verdict::Violation);
    let last = match verdicts.last() {
        Some(v) => *v,
        None => Monitor::new(&body)?.verdict(),
    };
    let outcome = if first_violation.is_some() { Outcome::Fails } else { Outcome::Holds };
    if as_json {
        let rows: Vec<_> = trace
            .iter()
            .zip(&verdicts)
            .enumerate()
            .map(|(i, (e, v))| json!({ "event": e.to_string(), "index": i, "verdict": v.to_string() }))
            .collect();
        json::print(&json!({
            "events": rows,
            "final": last.to_string(),
            "protocol": spec.name.as_str(),
            "violation_at": first_violation,
        }));
        return Ok(outcome);
    }
    for (i, (e, v)) in trace.iter().zip(&verdicts).enumerate() {
        println!("{i:>4}  {:<24} {v}", e.to_string());
    }
    match first_violation {
        Some(i) => println!("violation at event {i} ({})", trace[i]),
        None => println!("final verdict: {last}"),
    }
    Ok(outcome)
}

fn instantiate_cmd(path: &Path, values: &[String], style: Style) -> Result<Outcome> {
    let spec = load::protocol(path)?;
    let values: Vec<Ident> = values.iter().map(|v| load::ident(v)).collect::<Result<_>>()?;
    let body = instantiate(&spec.param_spec(), &values, style)?;
    let out = ProtoSpec { variable: None, body, ..spec };
    print!("{}", print_protocol(&out));
    Ok(Outcome::Holds)
}

fn include_cmd(a: &Path, b: &Path, project: Option<&str>, bind: &[String], as_json: bool) -> Result<Outcome> {
    let sa = load::protocol(a)?;
    let sb = load::protocol(b)?;
    let mut left = concrete(a, &sa)?;
    let right = concrete(b, &sb)?;
    if let Some(resource) = project {
        let binding = load::binding(bind)?;
        left = Spec::Automaton(project_automaton(&left.automaton()?, &binding, &load::ident(resource)?));
    } else if !bind.is_empty() {
        bail!("--bind only makes sense together with --project");
    }
    let result = included(&left, &right)?;
    let outcome = if result == Inclusion::Included { Outcome::Holds } else { Outcome::Fails };
    if as_json {
        let counterexample = match &result {
            Inclusion::Included => serde_json::Value::Null,
            Inclusion::NotIncluded(w) => json::events(w),
        };
        json::print(&json!({ "counterexample": counterexample, "included": outcome == Outcome::Holds }));
        return Ok(outcome);
    }
    match result {
        Inclusion::Included => println!("included: every trace of {} is a trace of {}", sa.name, sb.name),
        Inclusion::NotIncluded(w) => {
            let w: Vec<String> = w.iter().map(ToString::to_string).collect();
            let shown = if w.is_empty() { "(empty trace)".to_string() } else { w.join(" . ") };
            println!("not included; shortest counterexample: {shown}");
        }
    }
    Ok(outcome)
}

fn deadlock_cmd(clients: &[PathBuf], resources: &[String], bind: &[String], as_json: bool) -> Result<Outcome> {
    let mut names = Vec::new();
    let mut automata = Vec::new();
    for path in clients {
        let spec = load::protocol(path)?;
        automata.push(concrete(path, &spec)?.automaton()?);
        names.push(spec.name);
    }
    let mut decls = Vec::new();
    for arg in resources {
        let (name, path) = load::resource_arg(arg)?;
        let spec = load::protocol(path)?;
        let decl = spec.resource().with_context(|| format!("{}: protocol `{}`", path.display(), spec.name))?;
        decls.push((name, decl));
    }
    let binding = load::binding(bind)?;
    let verdict = compose_deadlock(&automata, &decls, &binding)?;

    if as_json {
        let v = match &verdict {
            DeadlockVerdict::NoDeadlock { states } => json!({ "deadlock": false, "product_states": states }),
            DeadlockVerdict::Deadlock { witness, blocked, states } => {
                let steps: Vec<_> = witness
                    .iter()
                    .map(|s| {
                        json!({
                            "client": s.client,
                            "client_name": names[s.client].as_str(),
                            "event": s.event.to_string(),
                            "resource": s.resource.as_str(),
                            "resource_event": s.resource_event.to_string(),
                        })
                    })
                    .collect();
                let cs: Vec<_> = blocked
                    .clients
                    .iter()
                    .zip(&names)
                    .map(|(c, n)| json!({ "accepting": c.accepting, "location": c.location, "name": n.as_str() }))
                    .collect();
                let rs: Vec<_> = blocked
                    .resources
                    .iter()
                    .map(|r| json!({ "holder": r.holder, "location": r.location, "name": r.name.as_str() }))
                    .collect();
                json!({
                    "blocked": { "clients": cs, "resources": rs },
                    "deadlock": true,
                    "product_states": states,
                    "witness": steps,
                })
            }
        };
        json::print(&v);
    } else {
        match &verdict {
            DeadlockVerdict::NoDeadlock { states } => println!("no deadlock ({states} product states)"),
            DeadlockVerdict::Deadlock { witness, blocked, states } => {
                println!("deadlock after {} ({states} product states):", plural(witness.len(), "step"));
                for (i, s) in witness.iter().enumerate() {
                    println!("  {:>3}. client {} ({}): {} ~ {}.{}", i + 1, s.client, names[s.client], s.event, s.resource, s.resource_event);
                }
                println!("blocked state:");
                for line in blocked.to_string().lines() {
                    println!("  {line}");
                }
            }
        }
    }
    Ok(if verdict.is_deadlock() { Outcome::Fails } else { Outcome::Holds })
}

fn invariant_cmd(path: &Path, text: &str, preservation: bool, bounds: Bounds, as_json: bool) -> Result<Outcome> {
    let (def, _) = load::model(path)?;
    let f = load::formula(text)?;
    let unresolved = |e: InvariantError| -> anyhow::Error {
        match e {
            InvariantError::Unresolved(diags) => {
                load::report("<formula>", &diags);
                anyhow::anyhow!("formula does not resolve against model `{}`", def.name)
            }
            other => other.into(),
        }
    };
    let start = initial_state(&def)?;
    if preservation {
        let result = check_structural_preservation(&def, &f, bounds).map_err(unresolved)?;
        let outcome = if result == Preservation::Preserved { Outcome::Holds } else { Outcome::Fails };
        if as_json {
            let (kind, broken) = match &result {
                Preservation::Preserved => ("preserved", vec![]),
                Preservation::Inconclusive => ("inconclusive", vec![]),
                Preservation::Broken(list) => (
                    "broken",
                    list.iter()
                        .map(|(pre, t)| json!({ "before": json::config(pre), "description": t.describe(&def, pre), "transition": t.to_string() }))
                        .collect(),
                ),
            };
            json::print(&json!({ "broken_by": broken, "formula": f.to_string(), "mode": "preservation", "result": kind }));
            return Ok(outcome);
        }
        match result {
            Preservation::Preserved => println!("preserved: every structural step keeps `{f}`"),
            Preservation::Inconclusive => println!("inconclusive: search truncated by bounds before a violation was found"),
            Preservation::Broken(list) => {
                println!("broken by {}:", plural(list.len(), "structural step"));
                let mut grouped: std::collections::BTreeMap<String, usize> = Default::default();
                for (pre, t) in &list {
                    *grouped.entry(t.describe(&def, pre)).or_default() += 1;
                }
                for (step, n) in grouped {
                    println!("  {step} (from {})", plural(n, "configuration"));
                }
            }
        }
        return Ok(outcome);
    }

    let result = check_reachable(&def, &f, bounds).map_err(unresolved)?;
    let outcome = if result == ReachCheck::Holds { Outcome::Holds } else { Outcome::Fails };
    if as_json {
        let (kind, path) = match &result {
            ReachCheck::Holds => ("holds", serde_json::Value::Null),
            ReachCheck::Inconclusive => ("inconclusive", serde_json::Value::Null),
            ReachCheck::Violated(p) => ("violated", json::path(&def, &start, p).0),
        };
        json::print(&json!({ "formula": f.to_string(), "mode": "reachable", "path": path, "result": kind }));
        return Ok(outcome);
    }
    match result {
        ReachCheck::Holds => println!("holds in every reachable configuration: {f}"),
        ReachCheck::Inconclusive => println!("inconclusive: search truncated by bounds before a violation was found"),
        ReachCheck::Violated(p) => {
            println!("violated after {}:", plural(p.len(), "step"));
            let mut cfg = start;
            for (i, t) in p.iter().enumerate() {
                println!("  {:>3}. {}", i + 1, t.describe(&def, &cfg));
                cfg = apply(&def, &cfg, t)?.config;
            }
            for line in cfg.to_string().lines() {
                println!("     {line}");
            }
        }
    }
    Ok(outcome)
}
