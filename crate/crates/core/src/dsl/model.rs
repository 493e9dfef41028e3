use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use super::lexer::{Cursor, PResult, Tok};
use crate::model::{
    validate, Action, BundleDef, Diagnostic, Edge, Ident, MethodDef, ObjectDef, Site, SourceSpan, SystemDef,
};

/// A parsed model with the source position of each named element.
#[derive(Clone, Debug)]
pub struct ParsedModel {
    pub def: SystemDef,
    pub spans: HashMap<Site, SourceSpan>,
}

/// Parses and validates; `Err` carries every diagnostic when any is an error.
pub fn parse_model(text: &str) -> Result<SystemDef, Vec<Diagnostic>> {
    let (def, diags) = check_model(text);
    match def {
        Some(def) if !crate::model::has_errors(&diags) => Ok(def),
        _ => Err(diags),
    }
}

/// Parses and validates, returning warnings alongside the model. Validation
/// diagnostics get the span of the element they refer to.
pub fn check_model(text: &str) -> (Option<SystemDef>, Vec<Diagnostic>) {
    match parse_model_syntax(text) {
        Err(d) => (None, vec![d]),
        Ok(parsed) => {
            let diags = validate(&parsed.def)
                .into_iter()
                .map(|mut d| {
                    if d.span.is_none() {
                        d.span = d.site.as_ref().and_then(|s| parsed.spans.get(s)).copied();
                    }
                    d
                })
                .collect();
            (Some(parsed.def), diags)
        }
    }
}

/// Syntax-only parse; duplicate declarations are reported here as well.
pub fn parse_model_syntax(text: &str) -> Result<ParsedModel, Diagnostic> {
    let mut p = ModelParser { cur: Cursor::new(text)?, spans: HashMap::new() };
    let def = p.system()?;
    p.cur.expect_eof()?;
    Ok(ParsedModel { def, spans: p.spans })
}

struct ModelParser {
    cur: Cursor,
    spans: HashMap<Site, SourceSpan>,
}

fn duplicate(kind: &str, name: &str, span: SourceSpan) -> Diagnostic {
    Diagnostic::error(None, format!("duplicate {kind} `{name}`")).at(span)
}

impl ModelParser {
    fn name(&mut self, what: &str) -> PResult<(Ident, SourceSpan)> {
        let (s, span) = self.cur.ident(what)?;
        Ok((Ident::new(s), span))
    }

    fn system(&mut self) -> PResult<SystemDef> {
        self.cur.expect_keyword("system")?;
        let (name, span) = self.name("system name")?;
        self.spans.insert(Site::System, span);
        self.cur.expect(Tok::LBrace)?;
        self.cur.expect_keyword("init")?;
        let (init_bundle, _) = self.name("init bundle name")?;
        self.cur.expect(Tok::Semi)?;
        let mut bundles = BTreeMap::new();
        while self.cur.at_keyword("bundle") {
            let (b, span) = self.bundle()?;
            if bundles.contains_key(&b.name) {
                return Err(duplicate("bundle", b.name.as_str(), span));
            }
            bundles.insert(b.name.clone(), b);
        }
        let mut environment = BTreeSet::new();
        if self.cur.eat_keyword("environment") {
            self.cur.expect(Tok::LBrace)?;
            let mut op_spans = HashMap::new();
            while !self.cur.at(&Tok::RBrace) {
                let span = self.cur.span();
                let op = if self.cur.eat_hyphenated("may", "add").is_some() {
                    Action::AddBundle(self.name("bundle name")?.0)
                } else if self.cur.eat_hyphenated("may", "remove").is_some() {
                    Action::RemoveBundle(self.name("bundle name")?.0)
                } else {
                    return Err(self.cur.unexpected("`may-add`, `may-remove` or `}`"));
                };
                self.cur.expect(Tok::Semi)?;
                if !environment.insert(op.clone()) {
                    return Err(Diagnostic::error(None, format!("duplicate environment operation `{op}`")).at(span));
                }
                op_spans.insert(op, span);
            }
            self.cur.expect(Tok::RBrace)?;
            // sites index the environment in its sorted order
            for (i, op) in environment.iter().enumerate() {
                self.spans.insert(Site::Environment(i), op_spans[op]);
            }
        }
        self.cur.expect(Tok::RBrace)?;
        Ok(SystemDef { name, bundles, init_bundle, environment })
    }

    fn presence(&mut self) -> PResult<bool> {
        if self.cur.at(&Tok::LParen) {
            self.cur.bump();
            self.cur.expect_keyword("absent")?;
            self.cur.expect(Tok::RParen)?;
            Ok(false)
        } else {
            Ok(true)
        }
    }

    fn bundle(&mut self) -> PResult<(BundleDef, SourceSpan)> {
        self.cur.expect_keyword("bundle")?;
        let (name, span) = self.name("bundle name")?;
        self.spans.insert(Site::Bundle(name.clone()), span);
        let initially_present = self.presence()?;
        self.cur.expect(Tok::LBrace)?;
        self.cur.expect_keyword("activator")?;
        let (activator, _) = self.name("activator object name")?;
        self.cur.expect(Tok::Semi)?;
        let mut objects = BTreeMap::new();
        while self.cur.at_keyword("object") {
            let (o, ospan) = self.object(&name)?;
            if objects.contains_key(&o.name) {
                return Err(duplicate("object", o.name.as_str(), ospan));
            }
            objects.insert(o.name.clone(), o);
        }
        self.cur.expect(Tok::RBrace)?;
        Ok((BundleDef { name, activator, objects, initially_present }, span))
    }

    fn object(&mut self, bundle: &Ident) -> PResult<(ObjectDef, SourceSpan)> {
        self.cur.expect_keyword("object")?;
        let (name, span) = self.name("object name")?;
        self.spans.insert(Site::Object(bundle.clone(), name.clone()), span);
        let initially_present = self.presence()?;
        self.cur.expect(Tok::LBrace)?;
        let mut methods = BTreeMap::new();
        while self.cur.at_keyword("method") {
            let (m, mspan) = self.method(bundle, &name)?;
            if methods.contains_key(&m.name) {
                return Err(duplicate("method", m.name.as_str(), mspan));
            }
            methods.insert(m.name.clone(), m);
        }
        self.cur.expect(Tok::RBrace)?;
        Ok((ObjectDef { name, methods, initially_present }, span))
    }

    fn method(&mut self, bundle: &Ident, object: &Ident) -> PResult<(MethodDef, SourceSpan)> {
        self.cur.expect_keyword("method")?;
        let (name, span) = self.name("method name")?;
        self.spans.insert(Site::Method(bundle.clone(), object.clone(), name.clone()), span);
        self.cur.expect(Tok::LBrace)?;
        self.cur.expect_keyword("locations")?;
        let mut locations = BTreeSet::new();
        loop {
            let (l, lspan) = self.name("location name")?;
            if !locations.insert(l.clone()) {
                return Err(duplicate("location", l.as_str(), lspan));
            }
            if self.cur.eat(&Tok::Semi) {
                break;
            }
        }
        self.cur.expect_keyword("init")?;
        let (initial, ispan) = self.name("initial location")?;
        self.cur.expect(Tok::Semi)?;
        if !locations.contains(&initial) {
            return Err(Diagnostic::error(None, format!("initial location `{initial}` is not declared")).at(ispan));
        }
        let mut edges = Vec::new();
        while self.cur.at_keyword("edge") {
            let espan = self.cur.span();
            let site = Site::Edge(bundle.clone(), object.clone(), name.clone(), edges.len());
            self.spans.insert(site, espan);
            edges.push(self.edge(&locations)?);
        }
        self.cur.expect(Tok::RBrace)?;
        Ok((MethodDef { name, locations, initial, edges }, span))
    }

    fn edge(&mut self, locations: &BTreeSet<Ident>) -> PResult<Edge> {
        self.cur.expect_keyword("edge")?;
        let endpoint = |p: &mut Self| -> PResult<Ident> {
            let (l, span) = p.name("location name")?;
            if !locations.contains(&l) {
                return Err(Diagnostic::error(None, format!("location `{l}` is not declared")).at(span));
            }
            Ok(l)
        };
        let source = endpoint(self)?;
        self.cur.expect(Tok::Arrow)?;
        let target = endpoint(self)?;
        let mut actions = Vec::new();
        if self.cur.eat(&Tok::LBracket) {
            loop {
                actions.push(self.action()?);
                if !self.cur.eat(&Tok::Comma) {
                    break;
                }
            }
            self.cur.expect(Tok::RBracket)?;
        }
        self.cur.expect(Tok::Semi)?;
        Ok(Edge { source, target, actions })
    }

    fn action(&mut self) -> PResult<Action> {
        let (kw, span) = self.cur.ident("action")?;
        Ok(match kw.as_str() {
            "call" => {
                let (object, _) = self.name("object name")?;
                self.cur.expect(Tok::Dot)?;
                let (method, _) = self.name("method name")?;
                self.cur.expect(Tok::At)?;
                let (bundle, _) = self.name("bundle name")?;
                Action::Call { method, object, bundle }
            }
            "add" => Action::AddBundle(self.name("bundle name")?.0),
            "remove" => Action::RemoveBundle(self.name("bundle name")?.0),
            "create" | "delete" => {
                let (object, _) = self.name("object name")?;
                self.cur.expect(Tok::At)?;
                let (bundle, _) = self.name("bundle name")?;
                if kw == "create" {
                    Action::CreateObject { object, bundle }
                } else {
                    Action::DeleteObject { object, bundle }
                }
            }
            other => {
                return Err(Diagnostic::error(
                    None,
                    format!("unknown action `{other}`; expected call, add, remove, create or delete"),
                )
                .at(span))
            }
        })
    }
}

/// Pretty-prints `def` in the model grammar.
pub fn print_model(def: &SystemDef) -> String {
    let mut out = String::new();
    let absent = |present: bool| if present { "" } else { " (absent)" };
    let _ = writeln!(out, "system {} {{", def.name);
    let _ = writeln!(out, "  init {};", def.init_bundle);
    for b in def.bundles.values() {
        let _ = writeln!(out, "\n  bundle {}{} {{", b.name, absent(b.initially_present));
        let _ = writeln!(out, "    activator {};", b.activator);
        for o in b.objects.values() {
            let _ = writeln!(out, "    object {}{} {{", o.name, absent(o.initially_present));
            for m in o.methods.values() {
                let _ = writeln!(out, "      method {} {{", m.name);
                let locs: Vec<&str> = m.locations.iter().map(Ident::as_str).collect();
                let _ = writeln!(out, "        locations {};", locs.join(" "));
                let _ = writeln!(out, "        init {};", m.initial);
                for e in &m.edges {
                    let _ = write!(out, "        edge {} -> {}", e.source, e.target);
                    if !e.actions.is_empty() {
                        let acts: Vec<String> = e.actions.iter().map(ToString::to_string).collect();
                        let _ = write!(out, " [{}]", acts.join(", "));
                    }
                    out.push_str(";\n");
                }
                out.push_str("      }\n");
            }
            out.push_str("    }\n");
        }
        out.push_str("  }\n");
    }
    if !def.environment.is_empty() {
        out.push_str("\n  environment {\n");
        for op in &def.environment {
            match op {
                Action::AddBundle(b) => writeln!(out, "    may-add {b};"),
                Action::RemoveBundle(b) => writeln!(out, "    may-remove {b};"),
                other => writeln!(out, "    # unsupported environment operation: {other}"),
            }
            .ok();
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}
