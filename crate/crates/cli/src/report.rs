//! Deterministic command reports.

use serde::Serialize;
use serde_json::Value as Json;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Fail,
    Flagged,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Item {
    pub name: String,
    pub status: Status,
    pub value: Json,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Json>,
}

impl Item {
    pub fn ok(name: &str, value: impl Into<Json>) -> Item {
        Item {
            name: name.into(),
            status: Status::Ok,
            value: value.into(),
            witness: None,
        }
    }

    pub fn flagged(name: &str, value: impl Into<Json>) -> Item {
        Item {
            name: name.into(),
            status: Status::Flagged,
            value: value.into(),
            witness: None,
        }
    }

    pub fn fail(name: &str, value: impl Into<Json>, witness: impl Into<Json>) -> Item {
        Item {
            name: name.into(),
            status: Status::Fail,
            value: value.into(),
            witness: Some(witness.into()),
        }
    }

    pub fn error(name: &str, msg: impl ToString) -> Item {
        Item {
            name: name.into(),
            status: Status::Error,
            value: Json::String(msg.to_string()),
            witness: None,
        }
    }

    /// `ok` when true, `fail` with the given witness otherwise.
    pub fn verdict(name: &str, holds: bool, witness: impl FnOnce() -> Json) -> Item {
        if holds {
            Item::ok(name, true)
        } else {
            Item::fail(name, false, witness())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub results: Vec<Item>,
    /// Wall time; the only field that varies between identical runs.
    pub timing_ms: u64,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            command: command.into(),
            inputs: BTreeMap::new(),
            results: Vec::new(),
            timing_ms: 0,
        }
    }

    pub fn input(&mut self, name: &str, value: impl ToString) {
        self.inputs.insert(name.into(), value.to_string());
    }

    pub fn push(&mut self, item: Item) {
        self.results.push(item);
    }

    /// 0 when nothing failed, 1 on any failure, 2 on any error.
    pub fn exit_code(&self) -> i32 {
        if self.results.iter().any(|r| r.status == Status::Error) {
            2
        } else if self.results.iter().any(|r| r.status == Status::Fail) {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Everything except the timing, for byte comparisons.
    pub fn body_json(&self) -> String {
        let mut r = self.clone();
        r.timing_ms = 0;
        serde_json::to_string(&r).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.command);
        for (k, v) in &self.inputs {
            out.push_str(&format!("  {k} = {v}\n"));
        }
        for r in &self.results {
            let status = serde_json::to_value(r.status).unwrap();
            out.push_str(&format!("{:<8}{}: {}\n", status.as_str().unwrap(), r.name, text_value(&r.value)));
            if let Some(w) = &r.witness {
                out.push_str(&format!("        witness: {}\n", text_value(w)));
            }
        }
        out.push_str(&format!("({} ms)\n", self.timing_ms));
        out
    }
}

fn text_value(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_and_witnesses() {
        let mut r = Report::new("t");
        r.push(Item::ok("a", 1));
        assert_eq!(r.exit_code(), 0);
        r.push(Item::flagged("b", 0));
        assert_eq!(r.exit_code(), 0);
        r.push(Item::verdict("c", false, || "why".into()));
        assert_eq!(r.exit_code(), 1);
        assert!(r.results[2].witness.is_some() && r.results[0].witness.is_none());
        r.push(Item::error("d", "boom"));
        assert_eq!(r.exit_code(), 2);
        let j = r.to_json();
        assert!(j.find("\"command\"").unwrap() < j.find("\"timing_ms\"").unwrap());
    }
}
