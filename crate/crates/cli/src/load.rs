use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use osgi_core::dsl::{check_model, parse_invariant, parse_protocol, parse_trace, ProtoSpec};
use osgi_core::invariants::Formula;
use osgi_core::model::{has_errors, Diagnostic, Ident, Severity, SystemDef};
use osgi_core::protocol::{BindTarget, Binding, Event};

/// A diagnostic rendered as `file:line:col: level: message`.
pub struct Located<'a> {
    pub source: &'a str,
    pub diag: &'a Diagnostic,
}

impl fmt::Display for Located<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)?;
        if let Some(span) = self.diag.span {
            write!(f, ":{}:{}", span.line, span.column)?;
        }
        let level = match self.diag.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, ": {level}: ")?;
        if let Some(site) = &self.diag.site {
            write!(f, "{site}: ")?;
        }
        f.write_str(&self.diag.message)
    }
}

pub fn report(source: &str, diags: &[Diagnostic]) {
    for diag in diags {
        eprintln!("{}", Located { source, diag });
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn rejected(path: &Path, diags: &[Diagnostic]) -> anyhow::Error {
    report(&path.display().to_string(), diags);
    let errors = diags.iter().filter(|d| d.is_error()).count();
    anyhow::anyhow!("{}: {errors} error(s)", path.display())
}

/// The model and its warnings; errors abort.
pub fn model(path: &Path) -> Result<(SystemDef, Vec<Diagnostic>)> {
    let text = read(path)?;
    let (def, diags) = check_model(&text);
    match def {
        Some(def) if !has_errors(&diags) => Ok((def, diags)),
        _ => Err(rejected(path, &diags)),
    }
}

pub fn protocol(path: &Path) -> Result<ProtoSpec> {
    parse_protocol(&read(path)?).map_err(|d| rejected(path, &d))
}

pub fn trace(path: &Path) -> Result<Vec<Event>> {
    parse_trace(&read(path)?).map_err(|d| rejected(path, &d))
}

pub fn formula(text: &str) -> Result<Formula> {
    parse_invariant(text).map_err(|d| {
        report("<formula>", &d);
        anyhow::anyhow!("invalid formula")
    })
}

pub fn ident(s: &str) -> Result<Ident> {
    if !Ident::is_valid(s) {
        bail!("`{s}` is not an identifier");
    }
    Ok(Ident::new(s))
}

/// `name=path`.
pub fn resource_arg(arg: &str) -> Result<(Ident, &Path)> {
    let Some((name, path)) = arg.split_once('=') else {
        bail!("resource `{arg}` must look like NAME=FILE");
    };
    Ok((ident(name)?, Path::new(path)))
}

/// `OUT=resource:INC` or `OUT=resource:INC(value)`.
pub fn binding(args: &[String]) -> Result<Binding> {
    let mut out = Binding::new();
    for arg in args {
        let malformed = || anyhow::anyhow!("binding `{arg}` must look like OUT=RESOURCE:INC or OUT=RESOURCE:INC(VALUE)");
        let (label, target) = arg.split_once('=').ok_or_else(malformed)?;
        let (resource, event) = target.split_once(':').ok_or_else(malformed)?;
        let (inc, parameter) = match event.strip_suffix(')').and_then(|e| e.split_once('(')) {
            Some((inc, value)) => (inc, Some(ident(value)?)),
            None => (event, None),
        };
        let mut t = BindTarget::new(ident(resource)?, ident(inc)?);
        t.parameter = parameter;
        if out.insert(ident(label)?, t).is_some() {
            bail!("label `{label}` is bound twice");
        }
    }
    Ok(out)
}
