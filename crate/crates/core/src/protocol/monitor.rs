use std::collections::BTreeSet;
use std::fmt;

use super::{Dfa, Event, ProtocolError, Spec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Ok,
    Accepting,
    /// Terminal: every later verdict is also a violation.
    Violation,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Ok => "ok",
            Verdict::Accepting => "accepting",
            Verdict::Violation => "violation",
        })
    }
}

/// Incremental checker over a determinized specification.
#[derive(Clone, Debug)]
pub struct Monitor {
    dfa: Dfa,
    state: usize,
}

impl Monitor {
    pub fn new(spec: &Spec) -> Result<Self, ProtocolError> {
        if !spec.is_concrete() {
            return Err(ProtocolError::Parameterized);
        }
        let dfa = Dfa::from_spec(spec, &BTreeSet::new())?;
        let state = dfa.initial;
        Ok(Monitor { dfa, state })
    }

    /// Whether the events seen so far form a word of the protocol.
    pub fn is_accepting(&self) -> bool {
        self.dfa.accepting[self.state]
    }

    pub fn is_violated(&self) -> bool {
        self.state == self.dfa.dead
    }

    pub fn step(&mut self, event: &Event) -> Verdict {
        if !self.is_violated() {
            self.state = self.dfa.step(self.state, event);
        }
        self.verdict()
    }

    pub fn verdict(&self) -> Verdict {
        if self.is_violated() {
            Verdict::Violation
        } else if self.is_accepting() {
            Verdict::Accepting
        } else {
            Verdict::Ok
        }
    }
}

/// One verdict per event of `trace`.
pub fn monitor(spec: &Spec, trace: &[Event]) -> Result<Vec<Verdict>, ProtocolError> {
    let mut m = Monitor::new(spec)?;
    Ok(trace.iter().map(|e| m.step(e)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ProtoExpr;

    fn file_spec() -> Spec {
        let rw = ProtoExpr::alt(ProtoExpr::atom(Event::inc("Read")), ProtoExpr::atom(Event::inc("Write")));
        Spec::Expr(ProtoExpr::star(ProtoExpr::seq([
            ProtoExpr::atom(Event::inc("Lock")),
            ProtoExpr::star(rw),
            ProtoExpr::atom(Event::inc("Unlock")),
        ])))
    }

    fn trace(labels: &[&str]) -> Vec<Event> {
        labels.iter().map(|l| Event::inc(*l)).collect()
    }

    #[test]
    fn verdicts_along_a_good_trace() {
        use Verdict::*;
        let v = monitor(&file_spec(), &trace(&["Lock", "Read", "Write", "Unlock", "Lock", "Unlock"])).unwrap();
        assert_eq!(v, vec![Ok, Ok, Ok, Accepting, Ok, Accepting]);
    }

    #[test]
    fn violation_is_terminal() {
        use Verdict::*;
        let v = monitor(&file_spec(), &trace(&["Read", "Lock", "Unlock"])).unwrap();
        assert_eq!(v, vec![Violation, Violation, Violation]);
    }

    #[test]
    fn empty_trace_on_star_spec() {
        assert!(monitor(&file_spec(), &[]).unwrap().is_empty());
        assert!(Monitor::new(&file_spec()).unwrap().is_accepting());
    }

    #[test]
    fn out_of_alphabet_event_violates() {
        let v = monitor(&file_spec(), &[Event::inc("Lock"), Event::out("Read")]).unwrap();
        assert_eq!(v, vec![Verdict::Ok, Verdict::Violation]);
    }

    #[test]
    fn parameterized_spec_rejected() {
        let spec = Spec::Expr(ProtoExpr::atom(Event::inc("Lock").with_var("F")));
        assert!(matches!(Monitor::new(&spec), Err(ProtocolError::Parameterized)));
    }
}
