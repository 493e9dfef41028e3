use super::lexer::{Cursor, PResult, Tok};
use crate::invariants::{Atom, Formula};
use crate::model::{Diagnostic, Ident};

/// Parses an invariant; `->` is right-associative and binds loosest.
pub fn parse_invariant(text: &str) -> Result<Formula, Vec<Diagnostic>> {
    let run = || -> PResult<Formula> {
        let mut cur = Cursor::new(text)?;
        let f = implies(&mut cur)?;
        cur.expect_eof()?;
        Ok(f)
    };
    run().map_err(|d| vec![d])
}

fn implies(cur: &mut Cursor) -> PResult<Formula> {
    let lhs = or(cur)?;
    if cur.eat(&Tok::Arrow) {
        Ok(Formula::implies(lhs, implies(cur)?))
    } else {
        Ok(lhs)
    }
}

fn or(cur: &mut Cursor) -> PResult<Formula> {
    let mut f = and(cur)?;
    while cur.eat(&Tok::OrOr) {
        f = Formula::or(f, and(cur)?);
    }
    Ok(f)
}

fn and(cur: &mut Cursor) -> PResult<Formula> {
    let mut f = unary(cur)?;
    while cur.eat(&Tok::AndAnd) {
        f = Formula::and(f, unary(cur)?);
    }
    Ok(f)
}

fn unary(cur: &mut Cursor) -> PResult<Formula> {
    if cur.eat(&Tok::Bang) {
        return Ok(Formula::not(unary(cur)?));
    }
    if cur.eat(&Tok::LParen) {
        let f = implies(cur)?;
        cur.expect(Tok::RParen)?;
        return Ok(f);
    }
    let (name, span) = cur.ident("atom, `!` or `(`")?;
    let arity = match name.as_str() {
        "true" => return Ok(Formula::Const(true)),
        "false" => return Ok(Formula::Const(false)),
        "bundle" => 1,
        "object" => 2,
        "active" => 3,
        "at" => 4,
        other => {
            return Err(Diagnostic::error(
                None,
                format!("unknown atom `{other}`; expected bundle, object, active or at"),
            )
            .at(span))
        }
    };
    cur.expect(Tok::LParen)?;
    let mut args = Vec::new();
    if !cur.at(&Tok::RParen) {
        loop {
            args.push(Ident::new(cur.ident("identifier")?.0));
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
    }
    cur.expect(Tok::RParen)?;
    if args.len() != arity {
        let plural = if arity == 1 { "" } else { "s" };
        return Err(Diagnostic::error(
            None,
            format!("`{name}` takes {arity} argument{plural}, found {}", args.len()),
        )
        .at(span));
    }
    let mut a = args.into_iter();
    let mut next = || a.next().expect("arity checked");
    Ok(Formula::Atom(match arity {
        1 => Atom::BundlePresent(next()),
        2 => Atom::ObjectPresent(next(), next()),
        3 => Atom::MethodActive(next(), next(), next()),
        _ => Atom::AtLocation(next(), next(), next(), next()),
    }))
}
