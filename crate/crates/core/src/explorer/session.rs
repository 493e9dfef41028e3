use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{initial_state, ModelError, RuntimeConfig, SystemDef};
use crate::protocol::Event;
use crate::semantics::{apply, classify, enabled, Classification, TransitionInstance};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("no option {choice}; {available} available")]
    OutOfRange { choice: usize, available: usize },
    #[error("nothing to undo")]
    NothingToUndo,
}

/// Manual resolution of non-determinism, one transition at a time.
#[derive(Clone, Debug)]
pub struct StepSession {
    def: SystemDef,
    history: Vec<RuntimeConfig>,
    current: RuntimeConfig,
}

impl StepSession {
    pub fn new(def: SystemDef) -> Result<Self, ModelError> {
        let current = initial_state(&def)?;
        Ok(StepSession { def, history: Vec::new(), current })
    }

    pub fn current(&self) -> &RuntimeConfig {
        &self.current
    }

    pub fn options(&self) -> Vec<TransitionInstance> {
        enabled(&self.def, &self.current)
    }

    /// Numbered from 1, one option per line.
    pub fn list(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.options().iter().enumerate() {
            let _ = writeln!(out, "{}) {}", i + 1, t.describe(&self.def, &self.current));
        }
        out
    }

    /// Applies option `choice` (1-based). Out-of-range choices leave the state unchanged.
    pub fn apply(&mut self, choice: usize) -> Result<Vec<Event>, StepError> {
        let opts = self.options();
        let t = choice
            .checked_sub(1)
            .and_then(|i| opts.get(i))
            .ok_or(StepError::OutOfRange { choice, available: opts.len() })?;
        let step = apply(&self.def, &self.current, t).expect("listed transition is enabled");
        self.history.push(std::mem::replace(&mut self.current, step.config));
        Ok(step.events)
    }

    pub fn undo(&mut self) -> Result<(), StepError> {
        self.current = self.history.pop().ok_or(StepError::NothingToUndo)?;
        Ok(())
    }

    pub fn show_state(&self) -> String {
        self.current.to_string()
    }

    pub fn classification(&self) -> Classification {
        classify(&self.def, &self.current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testing::startup;

    #[test]
    fn list_apply_undo() {
        let mut s = StepSession::new(startup()).unwrap();
        assert_eq!(s.options().len(), 1);
        assert!(s.list().starts_with("1) #0 activator.start@servicebundle: l_0 -> l_1"));
        let before = s.current().clone();
        let events = s.apply(1).unwrap();
        assert_eq!(events.len(), 1);
        assert_ne!(s.current(), &before);
        s.undo().unwrap();
        assert_eq!(s.current(), &before);
        assert_eq!(s.undo(), Err(StepError::NothingToUndo));
    }

    #[test]
    fn out_of_range_keeps_state() {
        let mut s = StepSession::new(startup()).unwrap();
        let before = s.current().clone();
        assert_eq!(s.apply(2), Err(StepError::OutOfRange { choice: 2, available: 1 }));
        assert_eq!(s.apply(0), Err(StepError::OutOfRange { choice: 0, available: 1 }));
        assert_eq!(s.current(), &before);
    }

    #[test]
    fn quiescent_end() {
        let mut s = StepSession::new(startup()).unwrap();
        while !s.options().is_empty() {
            s.apply(1).unwrap();
        }
        assert!(s.list().is_empty());
        assert_eq!(s.classification(), Classification::Quiescent);
        assert!(s.show_state().contains("statuses: none"));
    }
}
