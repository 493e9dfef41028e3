use crate::model::{Diagnostic, Ident, SourceSpan};
use crate::protocol::{Direction, Event};

/// One event per line; blank lines and `#` comments are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<Event>, Vec<Diagnostic>> {
    let mut events = Vec::new();
    let mut diags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let column = content.len() - content.trim_start().len() + 1;
        let span = SourceSpan { line: i + 1, column, length: trimmed.len() };
        match parse_event(trimmed) {
            Ok(e) => events.push(e),
            Err(msg) => diags.push(Diagnostic::error(None, format!("line {}: {msg}", i + 1)).at(span)),
        }
    }
    if diags.is_empty() {
        Ok(events)
    } else {
        Err(diags)
    }
}

fn parse_event(s: &str) -> Result<Event, String> {
    let Some((dir, rest)) = s.split_once(':') else {
        return Err(format!("expected `INC:Label` or `OUT:Label`, found `{s}`"));
    };
    let direction = match dir.trim() {
        "INC" => Direction::Inc,
        "OUT" => Direction::Out,
        other => return Err(format!("unknown direction `{other}`; expected INC or OUT")),
    };
    let rest = rest.trim();
    let (label, value) = match rest.split_once('(') {
        None => (rest, None),
        Some((label, tail)) => {
            let Some(value) = tail.strip_suffix(')') else {
                return Err(format!("missing `)` in `{s}`"));
            };
            (label.trim(), Some(value.trim()))
        }
    };
    let check = |name: &str, what: &str| {
        if Ident::is_valid(name) {
            Ok(Ident::new(name))
        } else {
            Err(format!("invalid {what} `{name}`"))
        }
    };
    let mut event = Event { direction, label: check(label, "label")?, parameter: None };
    if let Some(v) = value {
        event = event.with_value(check(v, "parameter value")?);
    }
    Ok(event)
}

/// Renders a trace in the format [`parse_trace`] reads.
pub fn print_trace(events: &[Event]) -> String {
    events.iter().map(|e| format!("{e}\n")).collect()
}
