//! Pass/fail records shared by the verifiers.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    /// A falsification event; the record's detail carries the witness.
    Fail,
    /// The certified data cannot decide the check.
    Inconclusive,
    /// The check's hypothesis does not hold, so nothing is claimed.
    NotApplicable,
}

impl Status {
    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// Combines two statuses: any failure wins, then inconclusive.
    pub fn and(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            (Pass, _) | (_, Pass) => Pass,
            _ => NotApplicable,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    /// Numbers behind the verdict; for failures, enough to reproduce them.
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, status: Status, detail: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            status,
            detail: detail.into(),
        }
    }
}

/// Overall status of a list of checks.
pub fn summarize(checks: &[Check]) -> Status {
    checks
        .iter()
        .fold(Status::NotApplicable, |acc, c| acc.and(c.status))
}
