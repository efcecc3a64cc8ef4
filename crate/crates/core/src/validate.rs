use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::layout::GridLayout;

/// Every invariant violation found on an object. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidationReport {
    violations: Vec<String>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, violation: impl Into<String>) {
        self.violations.push(violation.into());
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    pub fn into_violations(self) -> Vec<String> {
        self.violations
    }

    pub(crate) fn require_text(&mut self, field: &str, value: &str) {
        if value.trim().is_empty() {
            self.push(alloc::format!("{field} empty"));
        }
    }
}

impl From<Vec<String>> for ValidationReport {
    fn from(violations: Vec<String>) -> Self {
        Self { violations }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            f.write_str(v)?;
        }
        Ok(())
    }
}

/// Outside information some invariants depend on.
#[derive(Debug, Clone, Copy, Default)]
pub struct Context<'a> {
    pub layout: Option<&'a GridLayout>,
}

impl<'a> Context<'a> {
    pub fn none() -> Self {
        Self { layout: None }
    }

    pub fn with_layout(layout: &'a GridLayout) -> Self {
        Self { layout: Some(layout) }
    }
}

/// Total invariant check: collects all violations, never fails.
pub trait Validate {
    fn check(&self, ctx: &Context<'_>, report: &mut ValidationReport);

    fn validate(&self, ctx: &Context<'_>) -> ValidationReport {
        let mut report = ValidationReport::new();
        self.check(ctx, &mut report);
        report
    }
}
