//! JSON scenarios: named spaces, maps, frames and decompositions plus one task,
//! run into a deterministic report.
//!
//! Sections refer to each other by name. A string in a space slot (`domain`,
//! `codomain`, `base`, `seq_space`, `ambient`) names an entry of `spaces`; a
//! string in a map slot (`children`, `functionals`, `synthesis`) names an
//! entry of `maps`. Tasks name maps, frames and decompositions directly.

mod demos;
mod tasks;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::atomic::{AtomicDecomposition, DecompositionDescriptor};
use crate::error::{Error, Result};
use crate::frames::{FrameDescriptor, MetricFrame};
use crate::maps::{MapDescriptor, MapHandle};
use crate::spaces::NormedSpace;

pub use demos::{demo, demo_catalog, DemoEntry};
pub use tasks::{Check, Task};

/// Accepted value of a scenario's `schema` field.
pub const SCENARIO_SCHEMA: &str = "lipperturb-scenario/1";
/// Value of the `schema` field of every report block.
pub const REPORT_SCHEMA: &str = "lipperturb-report/1";
/// Tolerance of expectations that carry none, unless overridden.
pub const DEFAULT_EXPECT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Identifier of the result the scenario exercises.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validates: Option<String>,
    pub seed: u64,
    #[serde(default)]
    pub spaces: BTreeMap<String, Value>,
    #[serde(default)]
    pub maps: BTreeMap<String, Value>,
    #[serde(default)]
    pub frames: BTreeMap<String, Value>,
    #[serde(default)]
    pub decompositions: BTreeMap<String, Value>,
    pub task: Value,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

/// Assertion on the task result: the value at a dotted `path` (array
/// elements by index) must equal `value`, within `tolerance` for numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub path: String,
    pub value: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Scenario {
    /// Parses scenario text; syntax and top-level field errors carry line and
    /// column.
    pub fn parse(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))?;
        if sc.schema != SCENARIO_SCHEMA {
            return Err(Error::Parse(format!(
                "schema: expected \"{SCENARIO_SCHEMA}\", found {:?}",
                sc.schema
            )));
        }
        if sc.name.trim().is_empty() {
            return Err(Error::Parse("name: must be nonempty".into()));
        }
        Ok(sc)
    }

    pub fn task_kind(&self) -> String {
        self.task
            .get("kind")
            .and_then(Value::as_str)
            .unwrap_or("?")
            .to_string()
    }
}

/// Resolved objects of a scenario, by name.
#[derive(Debug, Default)]
pub struct World {
    pub spaces: BTreeMap<String, NormedSpace>,
    pub maps: BTreeMap<String, MapHandle>,
    pub frames: BTreeMap<String, MetricFrame>,
    pub decompositions: BTreeMap<String, AtomicDecomposition>,
}

impl World {
    pub fn build(sc: &Scenario) -> Result<Self> {
        let mut inl = Inliner {
            spaces: &sc.spaces,
            maps: &sc.maps,
            stack: Vec::new(),
        };
        let mut w = World::default();
        for (name, raw) in &sc.spaces {
            let path = format!("spaces.{name}");
            let v = inl.value(raw, &path)?;
            w.spaces.insert(name.clone(), from_value(v, &path)?);
        }
        for (name, raw) in &sc.maps {
            let path = format!("maps.{name}");
            inl.stack.push(name.clone());
            let v = inl.value(raw, &path)?;
            inl.stack.pop();
            let d: MapDescriptor = from_value(v, &path)?;
            w.maps.insert(name.clone(), d.build().map_err(|e| context(e, &path))?);
        }
        for (name, raw) in &sc.frames {
            let path = format!("frames.{name}");
            let d: FrameDescriptor = from_value(inl.value(raw, &path)?, &path)?;
            w.frames.insert(name.clone(), d.build().map_err(|e| context(e, &path))?);
        }
        for (name, raw) in &sc.decompositions {
            let path = format!("decompositions.{name}");
            let d: DecompositionDescriptor = from_value(inl.value(raw, &path)?, &path)?;
            w.decompositions
                .insert(name.clone(), d.build().map_err(|e| context(e, &path))?);
        }
        Ok(w)
    }

    pub fn space(&self, name: &str) -> Result<&NormedSpace> {
        self.spaces
            .get(name)
            .ok_or_else(|| Error::UnknownReference(format!("space `{name}`")))
    }

    pub fn map(&self, name: &str) -> Result<&MapHandle> {
        self.maps
            .get(name)
            .ok_or_else(|| Error::UnknownReference(format!("map `{name}`")))
    }

    pub fn frame(&self, name: &str) -> Result<&MetricFrame> {
        self.frames
            .get(name)
            .ok_or_else(|| Error::UnknownReference(format!("frame `{name}`")))
    }

    pub fn decomposition(&self, name: &str) -> Result<&AtomicDecomposition> {
        self.decompositions
            .get(name)
            .ok_or_else(|| Error::UnknownReference(format!("decomposition `{name}`")))
    }
}

fn from_value<T: serde::de::DeserializeOwned>(v: Value, path: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Parse(format!("{path}: {e}")))
}

fn context(e: Error, path: &str) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{path}: {m}")),
        Error::Unsupported(m) => Error::Unsupported(format!("{path}: {m}")),
        Error::Precondition(m) => Error::Precondition(format!("{path}: {m}")),
        other => other,
    }
}

const SPACE_SLOTS: &[&str] = &["domain", "codomain", "base", "seq_space", "ambient"];
const MAP_SLOTS: &[&str] = &["children", "functionals", "synthesis"];

/// Replaces name strings in space and map slots by the named descriptors.
struct Inliner<'a> {
    spaces: &'a BTreeMap<String, Value>,
    maps: &'a BTreeMap<String, Value>,
    stack: Vec<String>,
}

impl Inliner<'_> {
    fn value(&mut self, v: &Value, path: &str) -> Result<Value> {
        match v {
            Value::Object(m) => {
                let mut out = Map::new();
                for (k, x) in m {
                    let p = format!("{path}.{k}");
                    let nx = match x {
                        Value::String(name) if SPACE_SLOTS.contains(&k.as_str()) => self.space(name, &p)?,
                        _ if MAP_SLOTS.contains(&k.as_str()) => self.map_slot(x, &p)?,
                        _ => self.value(x, &p)?,
                    };
                    out.insert(k.clone(), nx);
                }
                Ok(Value::Object(out))
            }
            Value::Array(items) => items
                .iter()
                .enumerate()
                .map(|(i, x)| self.value(x, &format!("{path}[{i}]")))
                .collect::<Result<Vec<_>>>()
                .map(Value::Array),
            other => Ok(other.clone()),
        }
    }

    fn space(&mut self, name: &str, path: &str) -> Result<Value> {
        let key = format!("space:{name}");
        if self.stack.contains(&key) {
            return Err(Error::Parse(format!("{path}: space `{name}` refers to itself")));
        }
        let raw = self
            .spaces
            .get(name)
            .ok_or_else(|| Error::UnknownReference(format!("space `{name}` (at {path})")))?;
        self.stack.push(key);
        let out = self.value(raw, &format!("spaces.{name}"));
        self.stack.pop();
        out
    }

    fn map_slot(&mut self, x: &Value, path: &str) -> Result<Value> {
        match x {
            Value::String(name) => self.map(name, path),
            Value::Array(items) => items
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    let p = format!("{path}[{i}]");
                    match item {
                        Value::String(name) => self.map(name, &p),
                        other => self.value(other, &p),
                    }
                })
                .collect::<Result<Vec<_>>>()
                .map(Value::Array),
            other => self.value(other, path),
        }
    }

    fn map(&mut self, name: &str, path: &str) -> Result<Value> {
        if self.stack.iter().any(|s| s == name) {
            return Err(Error::Parse(format!(
                "{path}: map `{name}` is part of a reference cycle"
            )));
        }
        let raw = self
            .maps
            .get(name)
            .ok_or_else(|| Error::UnknownReference(format!("map `{name}` (at {path})")))?;
        self.stack.push(name.to_string());
        let out = self.value(raw, &format!("maps.{name}"));
        self.stack.pop();
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Replaces the scenario seed.
    pub seed: Option<u64>,
    /// Tolerance of expectations without their own.
    pub tolerance: Option<f64>,
}

/// Deterministic part of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBlock {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validates: Option<String>,
    pub seed: u64,
    pub task: String,
    /// The scenario as run, seed override applied.
    pub scenario: Value,
    pub result: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBlock>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBlock {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub report: ReportBlock,
    pub timing: Timing,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }

    /// Serialized deterministic block.
    pub fn machine_block(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("report values serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values serialize")
    }
}

/// Exit status for an error: `1` mathematical failure, `2` input or domain
/// error, `3` internal or I/O failure.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. }
        | Error::NotVerifiable(_)
        | Error::Precondition(_)
        | Error::InconsistentPair { .. }
        | Error::DegenerateNorm { .. } => 1,
        Error::Parse(_)
        | Error::Domain { .. }
        | Error::UnknownReference(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidNorm(_)
        | Error::NonFinite { .. }
        | Error::Unsupported(_)
        | Error::DegenerateSample(_)
        | Error::Singular => 2,
        Error::Overflow(_) | Error::Io(_) => 3,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch { .. } => "dimension-mismatch",
        Error::InvalidNorm(_) => "invalid-norm",
        Error::NonFinite { .. } => "non-finite",
        Error::Domain { .. } => "domain",
        Error::DegenerateSample(_) => "degenerate-sample",
        Error::InconsistentPair { .. } => "inconsistent-pair",
        Error::NotVerifiable(_) => "not-verifiable",
        Error::Unsupported(_) => "unsupported",
        Error::Precondition(_) => "precondition",
        Error::NonConvergence { .. } => "non-convergence",
        Error::DegenerateNorm { .. } => "degenerate-norm",
        Error::Singular => "singular",
        Error::Overflow(_) => "overflow",
        Error::UnknownReference(_) => "unknown-reference",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

/// Parses and runs scenario text. Input errors (exit codes 2 and 3) are
/// returned as `Err`; mathematical failures produce a report with exit code 1.
pub fn run_text(text: &str, opts: &RunOptions) -> Result<Report> {
    run_scenario(Scenario::parse(text)?, opts)
}

pub fn run_scenario(mut sc: Scenario, opts: &RunOptions) -> Result<Report> {
    run_at_depth(&mut sc, opts, 0)
}

pub(crate) fn run_at_depth(sc: &mut Scenario, opts: &RunOptions, depth: usize) -> Result<Report> {
    let start = Instant::now();
    if let Some(seed) = opts.seed {
        sc.seed = seed;
    }
    let tolerance = opts.tolerance.unwrap_or(DEFAULT_EXPECT_TOLERANCE);
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::domain("tolerance", format!("{tolerance} must be finite and ≥ 0")));
    }
    let task: Task = from_value(sc.task.clone(), "task")?;
    for (i, e) in sc.expect.iter().enumerate() {
        if let Some(t) = e.tolerance {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::Parse(format!("expect[{i}].tolerance: {t} must be finite and ≥ 0")));
            }
        }
    }
    let world = World::build(sc)?;
    let ctx = tasks::Ctx {
        seed: sc.seed,
        world: &world,
        depth,
        options: opts,
    };
    let (result, mut checks, error) = match tasks::execute(&task, &ctx) {
        Ok(out) => (out.result, out.checks, None),
        Err(e) if exit_code_for(&e) == 1 => {
            let block = ErrorBlock {
                kind: error_kind(&e).to_string(),
                message: e.to_string(),
            };
            let result = match &e {
                Error::NonConvergence { best, .. } => serde_json::json!({ "best_certificate": best }),
                _ => Value::Null,
            };
            (result, Vec::new(), Some(block))
        }
        Err(e) => return Err(e),
    };
    for (i, e) in sc.expect.iter().enumerate() {
        checks.push(evaluate_expectation(&result, e, tolerance, i));
    }
    let pass = error.is_none() && checks.iter().all(|c| c.pass);
    let scenario = serde_json::to_value(&*sc).map_err(|e| Error::Parse(format!("scenario echo: {e}")))?;
    Ok(Report {
        report: ReportBlock {
            schema: REPORT_SCHEMA.to_string(),
            name: sc.name.clone(),
            validates: sc.validates.clone(),
            seed: sc.seed,
            task: sc.task_kind(),
            scenario,
            result,
            error,
            checks,
            pass,
            exit_code: if pass { 0 } else { 1 },
        },
        timing: Timing {
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// Looks up a dotted path such as `bounds.entries.3.alpha`.
pub fn lookup<'v>(root: &'v Value, path: &str) -> Option<&'v Value> {
    path.split('.').filter(|s| !s.is_empty()).try_fold(root, |v, seg| match v {
        Value::Object(m) => m.get(seg),
        Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get(i)),
        _ => None,
    })
}

fn evaluate_expectation(result: &Value, e: &Expectation, default_tol: f64, index: usize) -> Check {
    let name = format!("expect[{index}] {}", e.path);
    let Some(found) = lookup(result, &e.path) else {
        return Check::new(name, false, "path not found in result".to_string());
    };
    match (found.as_f64(), e.value.as_f64()) {
        (Some(x), Some(want)) => {
            let tol = e.tolerance.unwrap_or(default_tol);
            let diff = (x - want).abs();
            Check::new(name, diff <= tol, format!("{x} vs {want} (|diff| {diff:.3e} ≤ {tol:.1e})"))
        }
        _ => Check::new(name, found == &e.value, format!("{found} vs {}", e.value)),
    }
}

/// Aligned plain-text rendering of a report.
pub fn text_summary(r: &Report) -> String {
    let b = &r.report;
    let mut rows: Vec<(String, String)> = vec![
        ("scenario".into(), b.name.clone()),
        ("validates".into(), b.validates.clone().unwrap_or_else(|| "-".into())),
        ("task".into(), b.task.clone()),
        ("seed".into(), b.seed.to_string()),
    ];
    flatten("", &b.result, &mut rows);
    if let Some(e) = &b.error {
        rows.push(("error".into(), format!("{}: {}", e.kind, e.message)));
    }
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in &rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    for c in &b.checks {
        let _ = writeln!(out, "[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let _ = writeln!(
        out,
        "{} (exit {}) in {:.1} ms",
        if b.pass { "PASS" } else { "FAIL" },
        b.exit_code,
        r.timing.elapsed_ms
    );
    out
}

const MAX_INLINE_ARRAY: usize = 8;

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, rows);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object()) => {
            let text = if a.len() <= MAX_INLINE_ARRAY {
                serde_json::to_string(a).unwrap_or_default()
            } else {
                format!("[{} values]", a.len())
            };
            rows.push((prefix.to_string(), text));
        }
        Value::Array(a) => rows.push((prefix.to_string(), format!("[{} records]", a.len()))),
        Value::Null => {}
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds_scenario(lambda1: f64) -> String {
        format!(
            r#"{{"schema":"{SCENARIO_SCHEMA}","name":"t","seed":0,
               "task":{{"kind":"bounds","formula":"main","lambda1":{lambda1},"lambda2":0.0,"lip_s":1.0,"lip_sinv":1.0}},
               "expect":[{{"path":"lip_tinv_upper","value":2.0,"tolerance":1e-12}}]}}"#
        )
    }

    #[test]
    fn expectation_passes_and_report_round_trips() {
        let r = run_text(&bounds_scenario(0.5), &RunOptions::default()).unwrap();
        assert!(r.report.pass, "{}", text_summary(&r));
        assert_eq!(r.exit_code(), 0);
        let back: ReportBlock = serde_json::from_str(&r.machine_block()).unwrap();
        assert_eq!(back, r.report);
    }

    #[test]
    fn lambda_one_is_a_domain_error_naming_lambda1() {
        let e = run_text(&bounds_scenario(1.0), &RunOptions::default()).unwrap_err();
        assert_eq!(exit_code_for(&e), 2);
        assert!(e.to_string().contains("lambda1"), "{e}");
    }

    #[test]
    fn unknown_fields_are_rejected_with_location() {
        let text = format!(r#"{{"schema":"{SCENARIO_SCHEMA}","name":"t","seed":0,"task":{{}},"lamda1":0.3}}"#);
        let e = Scenario::parse(&text).unwrap_err().to_string();
        assert!(e.contains("lamda1") && e.contains("line 1"), "{e}");
        let text = format!(
            r#"{{"schema":"{SCENARIO_SCHEMA}","name":"t","seed":0,
                "task":{{"kind":"bounds","formula":"main","lambda1":0.1,"lamda2":0.0,"lip_s":1,"lip_sinv":1}}}}"#
        );
        let e = run_text(&text, &RunOptions::default()).unwrap_err();
        assert_eq!(exit_code_for(&e), 2);
        assert!(e.to_string().contains("lamda2"), "{e}");
    }

    #[test]
    fn seed_is_mandatory() {
        let text = format!(r#"{{"schema":"{SCENARIO_SCHEMA}","name":"t","task":{{}}}}"#);
        assert!(Scenario::parse(&text).unwrap_err().to_string().contains("seed"));
    }

    #[test]
    fn names_resolve_and_cycles_are_reported() {
        let text = format!(
            r#"{{"schema":"{SCENARIO_SCHEMA}","name":"t","seed":3,
                "spaces":{{"X":{{"dim":2,"p":1}}}},
                "maps":{{"A":{{"kind":"affine","domain":"X","codomain":"X","matrix":[[2,0],[0,1]]}},
                         "B":{{"kind":"composite","children":["A","A"]}}}},
                "task":{{"kind":"estimate-lip","map":"B"}}}}"#
        );
        let r = run_text(&text, &RunOptions::default()).unwrap();
        // A∘A = diag(4, 1) under ℓ¹; composites carry no exact constant
        let lower = lookup(&r.report.result, "estimate.lower").and_then(Value::as_f64).unwrap();
        assert!(lower > 1.0 && lower <= 4.0, "{lower}");
        assert_eq!(lookup(&r.report.result, "exact"), Some(&Value::Null));
        let cyc = text.replace(r#"["A","A"]"#, r#"["A","B"]"#);
        let e = run_text(&cyc, &RunOptions::default()).unwrap_err();
        assert!(e.to_string().contains("cycle"), "{e}");
        let missing = text.replace(r#""map":"B""#, r#""map":"C""#);
        let e = run_text(&missing, &RunOptions::default()).unwrap_err();
        assert!(matches!(e, Error::UnknownReference(_)));
    }

    #[test]
    fn lookup_handles_indices() {
        let v = serde_json::json!({"a": [{"b": 1.5}]});
        assert_eq!(lookup(&v, "a.0.b"), Some(&serde_json::json!(1.5)));
        assert_eq!(lookup(&v, "a.1.b"), None);
    }
}
