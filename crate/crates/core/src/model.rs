//! Static component-system definitions and runtime configurations.
//!
//! A [`SystemDef`] declares every bundle, object and method automaton that can
//! ever exist. Presence at runtime is tracked separately in a
//! [`RuntimeConfig`], so adding a bundle or creating an object toggles a flag
//! rather than inventing a new definition.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Name of the activator method run when a bundle is activated.
pub const START: &str = "start";
/// Name of the activator method run on deactivation.
pub const STOP: &str = "stop";

/// A nonempty name: bundle, object, method, location or parameter.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(Arc<str>);

impl Ident {
    /// Panics on an empty name; parsers never produce one.
    pub fn new(name: impl AsRef<str>) -> Self {
        let name = name.as_ref();
        assert!(!name.is_empty(), "identifiers must be nonempty");
        Ident(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `[A-Za-z_][A-Za-z0-9_]*`
    pub fn is_valid(name: &str) -> bool {
        let mut chars = name.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for Ident {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

impl From<String> for Ident {
    fn from(s: String) -> Self {
        Ident::new(s)
    }
}

/// One element of an edge's action list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Call { method: Ident, object: Ident, bundle: Ident },
    AddBundle(Ident),
    RemoveBundle(Ident),
    CreateObject { object: Ident, bundle: Ident },
    DeleteObject { object: Ident, bundle: Ident },
}

impl Action {
    pub fn call(method: impl Into<Ident>, object: impl Into<Ident>, bundle: impl Into<Ident>) -> Self {
        Action::Call { method: method.into(), object: object.into(), bundle: bundle.into() }
    }

    pub fn create(object: impl Into<Ident>, bundle: impl Into<Ident>) -> Self {
        Action::CreateObject { object: object.into(), bundle: bundle.into() }
    }

    pub fn delete(object: impl Into<Ident>, bundle: impl Into<Ident>) -> Self {
        Action::DeleteObject { object: object.into(), bundle: bundle.into() }
    }

    /// Whether the action changes the system structure rather than calling a method.
    pub fn is_structural(&self) -> bool {
        !matches!(self, Action::Call { .. })
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Call { method, object, bundle } => write!(f, "call {object}.{method} @ {bundle}"),
            Action::AddBundle(b) => write!(f, "add {b}"),
            Action::RemoveBundle(b) => write!(f, "remove {b}"),
            Action::CreateObject { object, bundle } => write!(f, "create {object} @ {bundle}"),
            Action::DeleteObject { object, bundle } => write!(f, "delete {object} @ {bundle}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: Ident,
    pub target: Ident,
    /// Processed left to right when the edge fires.
    pub actions: Vec<Action>,
}

/// A method's control automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDef {
    pub name: Ident,
    pub locations: BTreeSet<Ident>,
    pub initial: Ident,
    pub edges: Vec<Edge>,
}

impl MethodDef {
    /// Indices of the edges leaving `location`, in declaration order.
    pub fn outgoing<'a>(&'a self, location: &'a Ident) -> impl Iterator<Item = (usize, &'a Edge)> + 'a {
        self.edges.iter().enumerate().filter(move |(_, e)| &e.source == location)
    }

    pub fn is_final(&self, location: &Ident) -> bool {
        self.outgoing(location).next().is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectDef {
    pub name: Ident,
    pub methods: BTreeMap<Ident, MethodDef>,
    pub initially_present: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleDef {
    pub name: Ident,
    pub activator: Ident,
    pub objects: BTreeMap<Ident, ObjectDef>,
    pub initially_present: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemDef {
    pub name: Ident,
    pub bundles: BTreeMap<Ident, BundleDef>,
    pub init_bundle: Ident,
    /// Structural actions the environment may fire at any time.
    pub environment: BTreeSet<Action>,
}

impl SystemDef {
    pub fn bundle(&self, name: &Ident) -> Option<&BundleDef> {
        self.bundles.get(name)
    }

    pub fn object(&self, bundle: &Ident, object: &Ident) -> Option<&ObjectDef> {
        self.bundles.get(bundle)?.objects.get(object)
    }

    pub fn method(&self, bundle: &Ident, object: &Ident, method: &Ident) -> Option<&MethodDef> {
        self.object(bundle, object)?.methods.get(method)
    }

    /// Activator `start` method coordinates of `bundle`.
    pub fn activator_start(&self, bundle: &Ident) -> Option<(&Ident, &MethodDef)> {
        let b = self.bundles.get(bundle)?;
        let m = b.objects.get(&b.activator)?.methods.get(START)?;
        Some((&b.activator, m))
    }
}

/// Where in a model a diagnostic points.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    System,
    Bundle(Ident),
    Object(Ident, Ident),
    Method(Ident, Ident, Ident),
    Edge(Ident, Ident, Ident, usize),
    Environment(usize),
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::System => f.write_str("system"),
            Site::Bundle(b) => write!(f, "{b}"),
            Site::Object(b, o) => write!(f, "{b}/{o}"),
            Site::Method(b, o, m) => write!(f, "{b}/{o}/{m}"),
            Site::Edge(b, o, m, i) => write!(f, "{b}/{o}/{m}#edge{i}"),
            Site::Environment(i) => write!(f, "environment#{i}"),
        }
    }
}

/// 1-based position of a token in source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub site: Option<Site>,
    pub span: Option<SourceSpan>,
    pub message: String,
}

impl Diagnostic {
    pub fn error(site: Option<Site>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, site, span: None, message: message.into() }
    }

    pub fn warning(site: Option<Site>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, site, span: None, message: message.into() }
    }

    pub fn at(mut self, span: SourceSpan) -> Self {
        self.span = Some(span);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        f.write_str(level)?;
        if let Some(span) = self.span {
            write!(f, "[{span}]")?;
        }
        if let Some(site) = &self.site {
            write!(f, " {site}")?;
        }
        write!(f, ": {}", self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model has {} validation error(s)", .0.iter().filter(|d| d.is_error()).count())]
    Invalid(Vec<Diagnostic>),
}

/// Checks well-formedness of `def`. The model is usable iff no diagnostic is an error.
pub fn validate(def: &SystemDef) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    match def.bundles.get(&def.init_bundle) {
        None => diags.push(Diagnostic::error(
            Some(Site::System),
            format!("init bundle `{}` is not declared", def.init_bundle),
        )),
        Some(b) if !b.initially_present => diags.push(Diagnostic::error(
            Some(Site::Bundle(b.name.clone())),
            format!("init bundle `{}` is declared absent", b.name),
        )),
        Some(_) => {}
    }

    let mut addable = BTreeSet::new();
    for (key, bundle) in &def.bundles {
        if key != &bundle.name {
            diags.push(Diagnostic::error(
                Some(Site::Bundle(key.clone())),
                format!("bundle registered as `{key}` is named `{}`", bundle.name),
            ));
        }
        validate_bundle(def, bundle, &mut diags, &mut addable);
    }

    for (i, action) in def.environment.iter().enumerate() {
        let site = Some(Site::Environment(i));
        match action {
            Action::AddBundle(b) | Action::RemoveBundle(b) => {
                if !def.bundles.contains_key(b) {
                    diags.push(Diagnostic::error(site, format!("environment references unknown bundle `{b}`")));
                }
                if let Action::AddBundle(b) = action {
                    addable.insert(b.clone());
                }
            }
            other => diags.push(Diagnostic::error(
                site,
                format!("environment may only add or remove bundles, found `{other}`"),
            )),
        }
    }

    for bundle in def.bundles.values() {
        if !bundle.initially_present && !addable.contains(&bundle.name) {
            diags.push(Diagnostic::warning(
                Some(Site::Bundle(bundle.name.clone())),
                format!("bundle `{}` is absent and nothing ever adds it", bundle.name),
            ));
        }
    }

    diags
}

fn validate_bundle(
    def: &SystemDef,
    bundle: &BundleDef,
    diags: &mut Vec<Diagnostic>,
    addable: &mut BTreeSet<Ident>,
) {
    let bsite = Site::Bundle(bundle.name.clone());
    match bundle.objects.get(&bundle.activator) {
        None => diags.push(Diagnostic::error(
            Some(bsite.clone()),
            format!("activator object `{}` is not declared", bundle.activator),
        )),
        Some(act) => {
            if !act.initially_present {
                diags.push(Diagnostic::error(
                    Some(Site::Object(bundle.name.clone(), act.name.clone())),
                    "activator object must be present on activation",
                ));
            }
            for required in [START, STOP] {
                if !act.methods.contains_key(required) {
                    diags.push(Diagnostic::error(
                        Some(Site::Object(bundle.name.clone(), act.name.clone())),
                        format!("activator lacks a `{required}` method"),
                    ));
                }
            }
        }
    }

    for (okey, object) in &bundle.objects {
        let osite = Site::Object(bundle.name.clone(), okey.clone());
        if okey != &object.name {
            diags.push(Diagnostic::error(
                Some(osite.clone()),
                format!("object registered as `{okey}` is named `{}`", object.name),
            ));
        }
        for (mkey, method) in &object.methods {
            let msite = Site::Method(bundle.name.clone(), okey.clone(), mkey.clone());
            if mkey != &method.name {
                diags.push(Diagnostic::error(
                    Some(msite.clone()),
                    format!("method registered as `{mkey}` is named `{}`", method.name),
                ));
            }
            if !method.locations.contains(&method.initial) {
                diags.push(Diagnostic::error(
                    Some(msite.clone()),
                    format!("initial location `{}` is not declared", method.initial),
                ));
            }
            for (i, edge) in method.edges.iter().enumerate() {
                let esite = Site::Edge(bundle.name.clone(), okey.clone(), mkey.clone(), i);
                for end in [&edge.source, &edge.target] {
                    if !method.locations.contains(end) {
                        diags.push(Diagnostic::error(
                            Some(esite.clone()),
                            format!("edge endpoint `{end}` is not a declared location"),
                        ));
                    }
                }
                for action in &edge.actions {
                    if let Some(msg) = check_action(def, &bundle.name, action) {
                        diags.push(Diagnostic::error(Some(esite.clone()), msg));
                    }
                    if let Action::AddBundle(b) = action {
                        addable.insert(b.clone());
                    }
                }
            }
        }
    }
}

fn check_action(def: &SystemDef, owner: &Ident, action: &Action) -> Option<String> {
    match action {
        Action::Call { method, object, bundle } => {
            if def.method(bundle, object, method).is_none() {
                Some(format!("call target `{object}.{method} @ {bundle}` is not declared"))
            } else {
                None
            }
        }
        Action::AddBundle(b) | Action::RemoveBundle(b) => {
            (!def.bundles.contains_key(b)).then(|| format!("unknown bundle `{b}`"))
        }
        Action::CreateObject { object, bundle } | Action::DeleteObject { object, bundle } => {
            if bundle != owner {
                let verb = if matches!(action, Action::CreateObject { .. }) { "created" } else { "deleted" };
                Some(format!("object `{object}` can only be {verb} in the owning bundle `{owner}`, not `{bundle}`"))
            } else if def.object(bundle, object).is_none() {
                Some(format!("unknown object `{object}` in bundle `{bundle}`"))
            } else {
                None
            }
        }
    }
}

/// Runtime instance identifier; allocated strictly increasing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId(pub u64);

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A pending callee the owning status is blocked on.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallStateEntry {
    pub method: Ident,
    pub object: Ident,
    pub bundle: Ident,
    pub callee: InstanceId,
}

/// A live method instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodStatus {
    pub method: Ident,
    pub object: Ident,
    pub bundle: Ident,
    pub location: Ident,
    pub id: InstanceId,
    pub call_state: BTreeSet<CallStateEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RuntimeConfig {
    pub present_bundles: BTreeSet<Ident>,
    /// `(bundle, object)` pairs.
    pub present_objects: BTreeSet<(Ident, Ident)>,
    pub statuses: BTreeMap<InstanceId, MethodStatus>,
    pub next_id: u64,
}

impl RuntimeConfig {
    pub fn bundle_present(&self, bundle: &Ident) -> bool {
        self.present_bundles.contains(bundle)
    }

    pub fn object_present(&self, bundle: &Ident, object: &Ident) -> bool {
        self.present_objects.contains(&(bundle.clone(), object.clone()))
    }

    /// The status holding a call-state entry for `callee`, if any.
    pub fn caller_of(&self, callee: InstanceId) -> Option<InstanceId> {
        self.statuses
            .values()
            .find(|s| s.call_state.iter().any(|e| e.callee == callee))
            .map(|s| s.id)
    }
}

impl fmt::Display for RuntimeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bundles: Vec<_> = self.present_bundles.iter().map(Ident::as_str).collect();
        writeln!(f, "bundles: {{{}}}", bundles.join(", "))?;
        let objects: Vec<_> = self.present_objects.iter().map(|(b, o)| format!("{o}@{b}")).collect();
        writeln!(f, "objects: {{{}}}", objects.join(", "))?;
        if self.statuses.is_empty() {
            writeln!(f, "statuses: none")?;
        }
        for s in self.statuses.values() {
            write!(f, "  {} {}.{}@{} at {}", s.id, s.object, s.method, s.bundle, s.location)?;
            if !s.call_state.is_empty() {
                let waits: Vec<_> = s
                    .call_state
                    .iter()
                    .map(|e| format!("{}.{}@{} {}", e.object, e.method, e.bundle, e.callee))
                    .collect();
                write!(f, " waiting on [{}]", waits.join(", "))?;
            }
            writeln!(f)?;
        }
        write!(f, "next id: {}", self.next_id)
    }
}

/// Builds the start-up configuration: declared presence flags plus the
/// init bundle's activator `start` method at its initial location with id 0.
pub fn initial_state(def: &SystemDef) -> Result<RuntimeConfig, ModelError> {
    let diags = validate(def);
    if has_errors(&diags) {
        return Err(ModelError::Invalid(diags));
    }
    let mut cfg = RuntimeConfig {
        present_bundles: BTreeSet::new(),
        present_objects: BTreeSet::new(),
        statuses: BTreeMap::new(),
        next_id: 0,
    };
    for bundle in def.bundles.values().filter(|b| b.initially_present) {
        cfg.present_bundles.insert(bundle.name.clone());
        for object in bundle.objects.values().filter(|o| o.initially_present) {
            cfg.present_objects.insert((bundle.name.clone(), object.name.clone()));
        }
    }
    let (activator, start) = def.activator_start(&def.init_bundle).expect("validated");
    let id = InstanceId(0);
    cfg.statuses.insert(
        id,
        MethodStatus {
            method: start.name.clone(),
            object: activator.clone(),
            bundle: def.init_bundle.clone(),
            location: start.initial.clone(),
            id,
            call_state: BTreeSet::new(),
        },
    );
    cfg.next_id = 1;
    Ok(cfg)
}
