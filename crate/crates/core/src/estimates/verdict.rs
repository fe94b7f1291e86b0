use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::sampling::Resolution;

/// One checker outcome as emitted into run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub check: String,
    pub parameters: Value,
    pub constant: Option<f64>,
    pub margin: Option<f64>,
    pub resolution: Option<Resolution>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerdictRecord {
    pub fn new(check: impl Into<String>, pass: bool) -> Self {
        VerdictRecord {
            check: check.into(),
            parameters: Value::Null,
            constant: None,
            margin: None,
            resolution: None,
            pass,
            note: None,
        }
    }

    pub fn parameters(mut self, v: Value) -> Self {
        self.parameters = v;
        self
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant = Some(c);
        self
    }

    pub fn margin(mut self, m: f64) -> Self {
        self.margin = Some(m);
        self
    }

    pub fn resolution(mut self, r: Resolution) -> Self {
        self.resolution = Some(r);
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}
