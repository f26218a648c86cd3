//! Reference instances shipped with the crate, each with the values it is
//! expected to reproduce and a note on where those values come from.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::CliError;
use crate::instance::{parse_instance, InstanceFile};

const FILES: &[(&str, &str)] = &[
    ("example3", include_str!("../fixtures/example3.json")),
    ("symmetric4", include_str!("../fixtures/symmetric4.json")),
    ("example1-line11", include_str!("../fixtures/example1-line11.json")),
    ("example1-line101", include_str!("../fixtures/example1-line101.json")),
    ("example2-parabola11", include_str!("../fixtures/example2-parabola11.json")),
    ("example2-parabola101", include_str!("../fixtures/example2-parabola101.json")),
    ("figure1-binary", include_str!("../fixtures/figure1-binary.json")),
    ("constrained-binary", include_str!("../fixtures/constrained-binary.json")),
];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExpectedAtom {
    pub weight: f64,
    pub posterior: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Relaxed {
    pub c: f64,
    pub value: f64,
    pub multipliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub value: f64,
    #[serde(default)]
    pub means: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub price: Option<Vec<f64>>,
    #[serde(default)]
    pub atoms: Option<Vec<ExpectedAtom>>,
    #[serde(default)]
    pub line_support: Option<bool>,
    #[serde(default)]
    pub multipliers: Option<Vec<f64>>,
    #[serde(default)]
    pub relaxed: Option<Relaxed>,
    /// Subcommand (or check) name to verdict.
    pub verdicts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub instance: InstanceFile,
    pub expected: Expected,
    pub provenance: String,
    /// The file as shipped.
    pub source: &'static str,
}

pub fn fixture_names() -> impl Iterator<Item = &'static str> {
    FILES.iter().map(|(n, _)| *n)
}

pub fn load_fixture(name: &str) -> Result<Fixture, CliError> {
    let (name, source) = FILES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::UnknownFixture(name.to_string()))?;
    let mut instance = parse_instance(source)?;
    let expected = instance
        .expected
        .take()
        .ok_or_else(|| CliError::Schema(format!("fixture {name} has no expected block")))?;
    let expected: Expected =
        serde_json::from_value(expected).map_err(|e| CliError::Schema(format!("fixture {name}: expected: {e}")))?;
    let provenance = instance
        .provenance
        .take()
        .ok_or_else(|| CliError::Schema(format!("fixture {name} has no provenance note")))?;
    Ok(Fixture { name, instance, expected, provenance, source })
}
