//! Built-in scenario gallery.

use serde::Serialize;

use super::Scenario;
use crate::error::{Error, Result};

macro_rules! gallery {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../demos/", $name, ".json")))),*]
    };
}

const GALLERY: &[(&str, &str)] = gallery![
    "hilding-identity",
    "casazza-kalton-main",
    "guo-epsilon-sweep",
    "p-combined",
    "lambda2-one",
    "soderlind",
    "barbagallo",
    "resolvent-scan",
    "certified-inversion",
    "lipschitz-estimate",
    "stability-frame",
    "frame-atomic-equivalence",
    "lippel-dilation",
    "atomic-perturbation",
    "lipschitz-lift",
    "schauder-check",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoEntry {
    pub name: String,
    pub validates: String,
    pub task: String,
    pub description: String,
}

pub fn demo(name: &str) -> Result<Scenario> {
    let (_, text) = GALLERY
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownReference(format!("demo `{name}`; run `lipperturb demos` for the list")))?;
    Scenario::parse(text)
}

pub fn demo_catalog() -> Vec<DemoEntry> {
    GALLERY
        .iter()
        .map(|(name, text)| {
            let sc = Scenario::parse(text).expect("built-in demos parse");
            DemoEntry {
                name: name.to_string(),
                validates: sc.validates.clone().unwrap_or_default(),
                task: sc.task_kind(),
                description: sc.description,
            }
        })
        .collect()
}
