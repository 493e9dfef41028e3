use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::lexer::{Cursor, PResult, Tok};
use crate::model::{Diagnostic, Ident, SourceSpan};
use crate::protocol::{
    Direction, Event, Loc, Param, ParamSpec, ProtoAutomaton, ProtoExpr, ProtocolError, ResourceDecl, Spec,
    Transition,
};

/// Contents of a protocol file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtoSpec {
    pub name: Ident,
    pub direction: Direction,
    pub variable: Option<Ident>,
    pub body: Spec,
    /// Empty means the default `Lock`.
    pub acquire: BTreeSet<Ident>,
    /// Empty means the default `Unlock`.
    pub release: BTreeSet<Ident>,
    pub exclusive: bool,
}

impl ProtoSpec {
    pub fn new(name: impl Into<Ident>, direction: Direction, body: Spec) -> Self {
        ProtoSpec {
            name: name.into(),
            direction,
            variable: None,
            body,
            acquire: BTreeSet::new(),
            release: BTreeSet::new(),
            exclusive: false,
        }
    }

    pub fn param_spec(&self) -> ParamSpec {
        ParamSpec { variables: self.variable.iter().cloned().collect(), body: self.body.clone() }
    }

    /// The body, provided it mentions no variable.
    pub fn concrete(&self) -> Result<Spec, ProtocolError> {
        if self.body.is_concrete() {
            Ok(self.body.clone())
        } else {
            Err(ProtocolError::Parameterized)
        }
    }

    /// The body as a resource for deadlock composition.
    pub fn resource(&self) -> Result<ResourceDecl, ProtocolError> {
        let mut decl = ResourceDecl::new(self.concrete()?.automaton()?, self.exclusive);
        if !self.acquire.is_empty() {
            decl.acquire_labels = self.acquire.clone();
        }
        if !self.release.is_empty() {
            decl.release_labels = self.release.clone();
        }
        Ok(decl)
    }
}

pub fn parse_protocol(text: &str) -> Result<ProtoSpec, Vec<Diagnostic>> {
    parse(text).map_err(|d| vec![d])
}

fn parse(text: &str) -> PResult<ProtoSpec> {
    let mut cur = Cursor::new(text)?;
    let is_automaton = if cur.eat_hyphenated("protocol", "automaton").is_some() {
        true
    } else {
        cur.expect_keyword("protocol")?;
        false
    };
    let (name, _) = cur.ident("protocol name")?;
    let variable = if cur.eat_keyword("param") { Some(Ident::new(cur.ident("variable name")?.0)) } else { None };
    let direction = if cur.eat_keyword("incoming") {
        Direction::Inc
    } else if cur.eat_keyword("outgoing") {
        Direction::Out
    } else if is_automaton {
        Direction::Inc
    } else {
        return Err(cur.unexpected("`incoming` or `outgoing`"));
    };
    cur.expect(Tok::LBrace)?;
    let mut p = ProtoParser { cur, direction, variable: variable.clone() };
    let body = if is_automaton {
        Spec::Automaton(p.automaton()?)
    } else {
        let e = p.expr()?;
        if !p.cur.at(&Tok::RBrace) {
            p.cur.expect(Tok::Semi)?;
        }
        Spec::Expr(e)
    };
    let mut spec = ProtoSpec { name: Ident::new(name), direction, variable, body, ..ProtoSpec::new("_", direction, Spec::Expr(ProtoExpr::Epsilon)) };
    p.resource_clauses(&mut spec)?;
    p.cur.expect(Tok::RBrace)?;
    p.cur.expect_eof()?;
    Ok(spec)
}

struct ProtoParser {
    cur: Cursor,
    direction: Direction,
    variable: Option<Ident>,
}

impl ProtoParser {
    fn param(&mut self) -> PResult<Option<Param>> {
        if !self.cur.eat(&Tok::Lt) {
            return Ok(None);
        }
        let name = Ident::new(self.cur.ident("parameter name")?.0);
        self.cur.expect(Tok::Gt)?;
        Ok(Some(if self.variable.as_ref() == Some(&name) { Param::Var(name) } else { Param::Value(name) }))
    }

    fn event(&mut self) -> PResult<Event> {
        let mut direction = self.direction;
        if self.cur.peek_at(1) == &Tok::Colon {
            if self.cur.eat_keyword("INC") {
                direction = Direction::Inc;
            } else if self.cur.eat_keyword("OUT") {
                direction = Direction::Out;
            } else {
                return Err(self.cur.unexpected("`INC` or `OUT`"));
            }
            self.cur.bump();
        }
        let label = Ident::new(self.cur.ident("event label")?.0);
        let parameter = self.param()?;
        Ok(Event { direction, label, parameter })
    }

    fn expr(&mut self) -> PResult<ProtoExpr> {
        let mut e = self.concat()?;
        while self.cur.eat(&Tok::Plus) {
            e = ProtoExpr::alt(e, self.concat()?);
        }
        Ok(e)
    }

    fn concat(&mut self) -> PResult<ProtoExpr> {
        let mut e = self.postfix()?;
        while self.cur.eat(&Tok::Dot) {
            e = ProtoExpr::concat(e, self.postfix()?);
        }
        Ok(e)
    }

    fn postfix(&mut self) -> PResult<ProtoExpr> {
        let mut e = self.primary()?;
        while self.cur.eat(&Tok::Star) {
            e = ProtoExpr::star(e);
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<ProtoExpr> {
        if self.cur.at(&Tok::LParen) {
            let open = self.cur.bump().span;
            if self.cur.eat(&Tok::RParen) {
                return Ok(ProtoExpr::Epsilon);
            }
            let e = self.expr()?;
            if !self.cur.eat(&Tok::RParen) {
                return Err(Diagnostic::error(
                    None,
                    format!("unbalanced parenthesis opened at {open}; found {}", self.cur.peek().describe()),
                )
                .at(self.cur.span()));
            }
            return Ok(e);
        }
        if !matches!(self.cur.peek(), Tok::Ident(_)) {
            return Err(self.cur.unexpected("event or `(`"));
        }
        Ok(ProtoExpr::Atom(self.event()?))
    }

    fn loc(&mut self) -> PResult<(Loc, SourceSpan)> {
        let (name, span) = self.cur.ident("location name")?;
        let param = self.param()?;
        Ok((Loc { name: Ident::new(name), param }, span))
    }

    fn known(&mut self, locations: &BTreeSet<Loc>) -> PResult<Loc> {
        let (l, span) = self.loc()?;
        if !locations.contains(&l) {
            return Err(Diagnostic::error(None, format!("location `{l}` is not declared")).at(span));
        }
        Ok(l)
    }

    fn automaton(&mut self) -> PResult<ProtoAutomaton> {
        self.cur.expect_keyword("locations")?;
        let mut locations = BTreeSet::new();
        while !self.cur.eat(&Tok::Semi) {
            let (l, span) = self.loc()?;
            if !locations.insert(l.clone()) {
                return Err(Diagnostic::error(None, format!("duplicate location `{l}`")).at(span));
            }
        }
        if locations.is_empty() {
            return Err(self.cur.error("an automaton needs at least one location"));
        }
        self.cur.expect_keyword("init")?;
        let initial = self.known(&locations)?;
        self.cur.expect(Tok::Semi)?;
        self.cur.expect_keyword("accepting")?;
        let mut accepting = BTreeSet::new();
        while !self.cur.eat(&Tok::Semi) {
            accepting.insert(self.known(&locations)?);
        }
        let mut transitions = BTreeSet::new();
        while self.cur.eat_keyword("trans") {
            let source = self.known(&locations)?;
            let event = if self.cur.eat(&Tok::Arrow) {
                None
            } else {
                self.cur.expect(Tok::Minus)?;
                let e = self.event()?;
                self.cur.expect(Tok::Arrow)?;
                Some(e)
            };
            let target = self.known(&locations)?;
            self.cur.expect(Tok::Semi)?;
            transitions.insert(Transition { source, event, target });
        }
        Ok(ProtoAutomaton { locations, initial, accepting, transitions })
    }

    fn resource_clauses(&mut self, spec: &mut ProtoSpec) -> PResult<()> {
        loop {
            let set = if self.cur.eat_keyword("acquire") {
                &mut spec.acquire
            } else if self.cur.eat_keyword("release") {
                &mut spec.release
            } else if self.cur.eat_keyword("exclusive") {
                spec.exclusive = true;
                self.cur.expect(Tok::Semi)?;
                continue;
            } else {
                return Ok(());
            };
            while !self.cur.eat(&Tok::Semi) {
                set.insert(Ident::new(self.cur.ident("label")?.0));
            }
        }
    }
}

fn print_param(out: &mut String, p: &Option<Param>) {
    if let Some(p) = p {
        let _ = write!(out, "<{}>", p.name());
    }
}

fn print_event(out: &mut String, e: &Event, direction: Direction) {
    if e.direction != direction {
        let _ = write!(out, "{}:", e.direction);
    }
    out.push_str(e.label.as_str());
    print_param(out, &e.parameter);
}

fn prec(e: &ProtoExpr) -> u8 {
    match e {
        ProtoExpr::Alt(..) => 0,
        ProtoExpr::Concat(..) => 1,
        ProtoExpr::Star(_) => 2,
        ProtoExpr::Epsilon | ProtoExpr::Atom(_) => 3,
    }
}

fn print_expr(out: &mut String, e: &ProtoExpr, min: u8, direction: Direction) {
    if prec(e) < min {
        out.push('(');
        print_expr(out, e, 0, direction);
        out.push(')');
        return;
    }
    match e {
        ProtoExpr::Epsilon => out.push_str("()"),
        ProtoExpr::Atom(ev) => print_event(out, ev, direction),
        // both operators associate to the left
        ProtoExpr::Alt(a, b) => {
            print_expr(out, a, 0, direction);
            out.push_str(" + ");
            print_expr(out, b, 1, direction);
        }
        ProtoExpr::Concat(a, b) => {
            print_expr(out, a, 1, direction);
            out.push_str(" . ");
            print_expr(out, b, 2, direction);
        }
        ProtoExpr::Star(a) => {
            print_expr(out, a, 2, direction);
            out.push('*');
        }
    }
}

/// Renders an expression in file syntax with `direction` as the default.
pub fn print_proto_expr(e: &ProtoExpr, direction: Direction) -> String {
    let mut out = String::new();
    print_expr(&mut out, e, 0, direction);
    out
}

fn print_loc(out: &mut String, l: &Loc) {
    out.push_str(l.name.as_str());
    print_param(out, &l.param);
}

pub fn print_protocol(spec: &ProtoSpec) -> String {
    let mut out = String::new();
    let keyword = match spec.body {
        Spec::Expr(_) => "protocol",
        Spec::Automaton(_) => "protocol-automaton",
    };
    let _ = write!(out, "{keyword} {}", spec.name);
    if let Some(v) = &spec.variable {
        let _ = write!(out, " param {v}");
    }
    let dir = match spec.direction {
        Direction::Inc => "incoming",
        Direction::Out => "outgoing",
    };
    let _ = writeln!(out, " {dir} {{");
    match &spec.body {
        Spec::Expr(e) => {
            out.push_str("  ");
            print_expr(&mut out, e, 0, spec.direction);
            out.push_str(";\n");
        }
        Spec::Automaton(a) => {
            out.push_str("  locations");
            for l in &a.locations {
                out.push(' ');
                print_loc(&mut out, l);
            }
            out.push_str(";\n  init ");
            print_loc(&mut out, &a.initial);
            out.push_str(";\n  accepting");
            for l in &a.accepting {
                out.push(' ');
                print_loc(&mut out, l);
            }
            out.push_str(";\n");
            for t in &a.transitions {
                out.push_str("  trans ");
                print_loc(&mut out, &t.source);
                match &t.event {
                    Some(e) => {
                        out.push_str(" -");
                        print_event(&mut out, e, spec.direction);
                        out.push_str("-> ");
                    }
                    None => out.push_str(" -> "),
                }
                print_loc(&mut out, &t.target);
                out.push_str(";\n");
            }
        }
    }
    for (kw, set) in [("acquire", &spec.acquire), ("release", &spec.release)] {
        if !set.is_empty() {
            let labels: Vec<&str> = set.iter().map(Ident::as_str).collect();
            let _ = writeln!(out, "  {kw} {};", labels.join(" "));
        }
    }
    if spec.exclusive {
        out.push_str("  exclusive;\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inc(l: &str) -> ProtoExpr {
        ProtoExpr::atom(Event::inc(l))
    }

    #[test]
    fn file_expression() {
        let spec = parse_protocol("protocol file incoming { (Lock . (Read + Write)* . Unlock)* }").unwrap();
        let expected = ProtoExpr::star(ProtoExpr::seq([
            inc("Lock"),
            ProtoExpr::star(ProtoExpr::alt(inc("Read"), inc("Write"))),
            inc("Unlock"),
        ]));
        assert_eq!(spec.body, Spec::Expr(expected));
        assert_eq!(spec.variable, None);
    }

    #[test]
    fn parameterized_expression() {
        let spec =
            parse_protocol("protocol file param F incoming { (Lock<F> . (Read<F> + Write<F>)* . Unlock<F>)* }")
                .unwrap();
        let ps = spec.param_spec();
        assert_eq!(ps.variables, vec![Ident::new("F")]);
        let Spec::Expr(e) = &ps.body else { panic!() };
        assert!(e.events().contains(&Event::inc("Lock").with_var("F")));
        assert!(spec.concrete().is_err());
    }

    #[test]
    fn unbalanced() {
        let d = parse_protocol("protocol p incoming { (Lock . Unlock }").unwrap_err();
        assert!(d[0].message.contains("unbalanced"));
        assert!(d[0].span.is_some());
    }

    #[test]
    fn precedence() {
        let spec = parse_protocol("protocol p outgoing { a . b* + c }").unwrap();
        let out = |l: &str| ProtoExpr::atom(Event::out(l));
        let expected = ProtoExpr::alt(ProtoExpr::concat(out("a"), ProtoExpr::star(out("b"))), out("c"));
        assert_eq!(spec.body, Spec::Expr(expected));
    }

    #[test]
    fn automaton_with_resource_clauses() {
        let text = "protocol-automaton file param F {
            locations idle busy<F>;
            init idle;
            accepting idle;
            trans idle -Lock<F>-> busy<F>;
            trans busy<F> -Unlock<F>-> idle;
            trans busy<F> -> busy<F>;
            acquire Lock; release Unlock; exclusive;
        }";
        let spec = parse_protocol(text).unwrap();
        let Spec::Automaton(a) = &spec.body else { panic!() };
        assert_eq!(a.locations.len(), 2);
        assert_eq!(a.transitions.len(), 3);
        assert!(spec.exclusive);
        assert_eq!(parse_protocol(&print_protocol(&spec)).unwrap(), spec);
    }

    #[test]
    fn undeclared_location() {
        let d = parse_protocol("protocol-automaton a { locations q; init q; accepting q; trans q -x-> r; }")
            .unwrap_err();
        assert!(d[0].message.contains("`r`"));
    }

    #[test]
    fn printing_keeps_right_nesting() {
        let e = ProtoExpr::concat(inc("a"), ProtoExpr::concat(inc("b"), inc("c")));
        let text = print_proto_expr(&e, Direction::Inc);
        assert_eq!(text, "a . (b . c)");
        let spec = ProtoSpec::new("p", Direction::Inc, Spec::Expr(e));
        assert_eq!(parse_protocol(&print_protocol(&spec)).unwrap(), spec);
    }

    #[test]
    fn mixed_direction_atoms() {
        let spec = parse_protocol("protocol p incoming { Lock . OUT:Done }").unwrap();
        assert!(spec.body.alphabet().contains(&Event::out("Done")));
        assert_eq!(parse_protocol(&print_protocol(&spec)).unwrap(), spec);
    }
}
