use std::collections::BTreeMap;

use pinlab_core::{Bracketed, Estimate};
use serde::{Deserialize, Serialize};

/// One named scalar with whatever uncertainty it carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
}

impl Quantity {
    pub fn exact(value: f64) -> Self {
        Quantity { value, lower: None, upper: None, se: None }
    }

    pub fn bracket(b: Bracketed) -> Self {
        Quantity { value: b.value, lower: Some(b.lower), upper: Some(b.upper), se: None }
    }

    pub fn estimate(e: Estimate) -> Self {
        Quantity { value: e.mean, lower: None, upper: None, se: Some(e.std_error) }
    }
}

/// Output of one CLI invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub results: BTreeMap<String, Quantity>,
    /// Structured payload for commands whose output is more than scalars.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
    pub wall_ms: u64,
}

impl RunRecord {
    pub fn new(command: &str, params: serde_json::Value, seed: Option<u64>) -> Self {
        RunRecord {
            command: command.into(),
            params,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            results: BTreeMap::new(),
            details: None,
            wall_ms: 0,
        }
    }

    pub fn put(&mut self, name: &str, q: Quantity) {
        self.results.insert(name.into(), q);
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "value", "lower", "upper", "se"])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for (name, q) in &self.results {
            w.write_record([name.clone(), format!("{:?}", q.value), opt(q.lower), opt(q.upper), opt(q.se)])?;
        }
        Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8"))
    }
}
