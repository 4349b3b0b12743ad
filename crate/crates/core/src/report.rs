//! Machine-readable diagnostic reports shared by every check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexSet;

pub const SCHEMA: &str = "markovia-report/1";

/// Outcome of a check, ordered by severity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn worst(self, other: Verdict) -> Verdict {
        self.max(other)
    }

    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 2,
            Verdict::Inconclusive => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sets: BTreeMap<String, VertexSet>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
}

impl Witness {
    pub fn new(label: impl Into<String>) -> Self {
        Witness { label: label.into(), ..Default::default() }
    }

    pub fn set(mut self, name: &str, s: VertexSet) -> Self {
        self.sets.insert(name.to_string(), s);
        self
    }

    pub fn value(mut self, name: &str, v: f64) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }
}

/// One checked property inside a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub property: String,
    pub anchor: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Section {
    pub fn new(property: impl Into<String>, anchor: impl Into<String>, verdict: Verdict) -> Self {
        Section {
            property: property.into(),
            anchor: anchor.into(),
            verdict,
            tolerance: None,
            witnesses: vec![],
            metrics: BTreeMap::new(),
            notes: vec![],
        }
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn metric(mut self, name: &str, v: f64) -> Self {
        self.metrics.insert(name.to_string(), v);
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }

    pub fn witnesses(mut self, w: Vec<Witness>) -> Self {
        self.witnesses = w;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub schema: String,
    pub command: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    pub sections: Vec<Section>,
}

impl DiagnosticReport {
    pub fn new(command: impl Into<String>) -> Self {
        DiagnosticReport {
            schema: SCHEMA.to_string(),
            command: command.into(),
            verdict: Verdict::Pass,
            seed: None,
            tolerance: None,
            sections: vec![],
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    /// Appends a section and folds its verdict into the overall one.
    pub fn push(&mut self, s: Section) {
        self.verdict = self.verdict.worst(s.verdict);
        self.sections.push(s);
    }

    /// Appends a section without letting it affect the overall verdict.
    pub fn push_informational(&mut self, s: Section) {
        self.sections.push(s);
    }

    pub fn section(&self, property: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.property == property)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Domain(format!("report is not valid JSON: {e}")))?;
        let found = probe.get("schema").and_then(|s| s.as_str()).unwrap_or("<missing>");
        if found != SCHEMA {
            return Err(Error::SchemaMismatch { expected: SCHEMA.into(), found: found.into() });
        }
        serde_json::from_value(probe).map_err(|e| Error::Domain(format!("malformed report: {e}")))
    }

    /// Worst-verdict merge. Identical sections are kept once, so merging is
    /// idempotent.
    pub fn merge(reports: &[DiagnosticReport]) -> Result<DiagnosticReport> {
        let mut out = DiagnosticReport::new("merge");
        let mut seen = std::collections::BTreeSet::new();
        for r in reports {
            if r.schema != SCHEMA {
                return Err(Error::SchemaMismatch { expected: SCHEMA.into(), found: r.schema.clone() });
            }
            out.verdict = out.verdict.worst(r.verdict);
            for s in &r.sections {
                let key = serde_json::to_string(s).expect("section serializes");
                if seen.insert(key) {
                    out.sections.push(s.clone());
                }
            }
        }
        let seeds: std::collections::BTreeSet<_> = reports.iter().map(|r| r.seed).collect();
        if seeds.len() == 1 {
            out.seed = reports[0].seed;
        }
        let tols: Vec<_> = reports.iter().map(|r| r.tolerance).collect();
        if !tols.is_empty() && tols.iter().all(|t| *t == tols[0]) {
            out.tolerance = tols[0];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: Verdict, name: &str) -> DiagnosticReport {
        let mut r = DiagnosticReport::new("check").with_seed(3);
        r.push(Section::new(name, "anchor", v).metric("x", 1.5));
        r
    }

    #[test]
    fn merge_takes_worst_and_is_idempotent() {
        let a = sample(Verdict::Pass, "a");
        let b = sample(Verdict::Inconclusive, "b");
        let m = DiagnosticReport::merge(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(m.verdict, Verdict::Inconclusive);
        let again = DiagnosticReport::merge(&[m.clone()]).unwrap();
        assert_eq!(again, m);
        let twice = DiagnosticReport::merge(&[a.clone(), b.clone(), a, b]).unwrap();
        assert_eq!(twice, m);
    }

    #[test]
    fn schema_mismatch_rejected() {
        let mut r = sample(Verdict::Pass, "a");
        r.schema = "other/2".into();
        assert!(DiagnosticReport::merge(&[r.clone()]).is_err());
        assert!(matches!(
            DiagnosticReport::from_json(&r.to_json()),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let r = sample(Verdict::Fail, "a");
        assert_eq!(DiagnosticReport::from_json(&r.to_json()).unwrap(), r);
    }
}
