//! The instance file format and its translation into solver types.
//!
//! Field names here are the stable interface of the command-line tool.

use serde::{Deserialize, Serialize};

use persuasion_core::constrained::SideConstraint;
use persuasion_core::metrics::GroundMetric;
use persuasion_core::{AffinePiece, Belief, MomentMap, MomentObjective, ObjectiveSpec, Prior, StateSpace};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    pub prior: Vec<f64>,
    pub objective: ObjectiveJson,
    /// m(ω) per state; defaults to `coords` for moment objectives.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_map: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_objective: Option<MomentObjectiveJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintJson>,
    /// Ground metric for `kr`; defaults to Euclidean distance between
    /// `coords`, or the discrete metric without coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub options: OptionsJson,
    /// Reference results, present in shipped fixtures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveJson {
    VertexTable { entries: Vec<TableEntry> },
    PiecewiseLinearMax { pieces: Vec<PieceJson> },
    ActionChoice { receiver: Vec<Vec<f64>>, sender: Vec<Vec<f64>> },
    /// v(E_μ[m]) with `moment_map` and `moment_objective` from the file.
    MomentComposed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub belief: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceJson {
    pub slope: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentObjectiveJson {
    Product,
    PwlMax { pieces: Vec<PieceJson> },
    PwlMin { pieces: Vec<PieceJson> },
    Table { points: Vec<Vec<f64>>, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintJson {
    pub g: ObjectiveJson,
    pub c: f64,
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Grid,
    CuttingPlane,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsJson {
    pub mesh_k: Option<usize>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub rs_a: Option<f64>,
    pub method: Option<Method>,
    pub random_probes: Option<usize>,
}

/// Resolved run options: file values overridden by command-line flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub mesh_k: usize,
    /// Duality-gap target; also the cut threshold for cutting planes.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub rs_a: f64,
    pub method: Method,
    /// Random beliefs drawn (from `seed`) for the off-grid audit.
    pub random_probes: usize,
    pub jobs: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            mesh_k: 4,
            tol: 1e-6,
            max_iters: 500,
            seed: 0,
            rs_a: 1.0,
            method: Method::Grid,
            random_probes: 64,
            jobs: 1,
        }
    }
}

impl Options {
    pub fn from_file(o: &OptionsJson) -> Self {
        let d = Options::default();
        Options {
            mesh_k: o.mesh_k.unwrap_or(d.mesh_k),
            tol: o.tol.unwrap_or(d.tol),
            max_iters: o.max_iters.unwrap_or(d.max_iters),
            seed: o.seed.unwrap_or(d.seed),
            rs_a: o.rs_a.unwrap_or(d.rs_a),
            method: o.method.unwrap_or(d.method),
            random_probes: o.random_probes.unwrap_or(d.random_probes),
            jobs: d.jobs,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.mesh_k == 0 {
            return Err(CliError::Schema("options.mesh_k must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Schema("options.tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(CliError::Schema("options.max_iters must be at least 1".into()));
        }
        if !(self.rs_a > 0.0 && self.rs_a.is_finite()) {
            return Err(CliError::Schema("options.rs_a must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(CliError::Schema("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

/// A validated instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub states: StateSpace,
    pub prior: Prior,
    pub objective: ObjectiveSpec,
    pub moment: Option<(MomentMap, MomentObjective)>,
    pub constraints: Vec<SideConstraint>,
    pub options: Options,
    pub file: InstanceFile,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.prior.len()
    }

    pub fn label(&self, state: usize) -> &str {
        &self.states.labels()[state]
    }

    /// The metric for `kr`.
    pub fn metric(&self) -> Result<GroundMetric, CliError> {
        let n = self.n();
        let rho = match (&self.file.metric, self.states.coords()) {
            (Some(m), _) => m.clone(),
            (None, Some(c)) => c.iter().map(|a| c.iter().map(|b| euclid(a, b)).collect()).collect(),
            (None, None) => (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect(),
        };
        GroundMetric::new(rho).map_err(|e| CliError::Schema(format!("metric: {e}")))
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn parse_instance(text: &str) -> Result<InstanceFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Schema(format!("instance: {e}")))
}

fn schema<T>(what: &str, r: persuasion_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Schema(format!("{what}: {e}")))
}

fn pieces(p: &[PieceJson], dim: usize, what: &str) -> Result<Vec<AffinePiece>, CliError> {
    if p.is_empty() {
        return Err(CliError::Schema(format!("{what}: no pieces")));
    }
    p.iter()
        .map(|q| {
            if q.slope.len() != dim {
                return Err(CliError::Schema(format!("{what}: slope has length {}, expected {dim}", q.slope.len())));
            }
            Ok(AffinePiece { slope: q.slope.clone(), intercept: q.intercept })
        })
        .collect()
}

fn check_rows(rows: &[Vec<f64>], n: usize, what: &str) -> Result<(), CliError> {
    match rows.iter().find(|r| r.len() != n) {
        Some(r) => Err(CliError::Schema(format!("{what}: row of length {}, expected {n}", r.len()))),
        None => Ok(()),
    }
}

fn build_objective(
    o: &ObjectiveJson,
    n: usize,
    moment: &Option<(MomentMap, MomentObjective)>,
    what: &str,
) -> Result<ObjectiveSpec, CliError> {
    Ok(match o {
        ObjectiveJson::VertexTable { entries } => {
            if entries.is_empty() {
                return Err(CliError::Schema(format!("{what}: empty table")));
            }
            let rows = entries
                .iter()
                .map(|e| {
                    if e.belief.len() != n {
                        return Err(CliError::Schema(format!("{what}: table belief of length {}", e.belief.len())));
                    }
                    Ok((schema(what, Belief::new(e.belief.clone()))?, e.value))
                })
                .collect::<Result<_, _>>()?;
            ObjectiveSpec::VertexTable(rows)
        }
        ObjectiveJson::PiecewiseLinearMax { pieces: p } => ObjectiveSpec::PiecewiseLinearMax(pieces(p, n, what)?),
        ObjectiveJson::ActionChoice { receiver, sender } => {
            if receiver.is_empty() || receiver.len() != sender.len() {
                return Err(CliError::Schema(format!("{what}: receiver and sender need the same non-zero number of actions")));
            }
            check_rows(receiver, n, what)?;
            check_rows(sender, n, what)?;
            ObjectiveSpec::ActionChoice { receiver: receiver.clone(), sender: sender.clone() }
        }
        ObjectiveJson::MomentComposed => match moment {
            Some((map, v)) => ObjectiveSpec::MomentComposed { map: map.clone(), v: v.clone() },
            None => return Err(CliError::Schema(format!("{what}: moment_composed needs a moment map and moment_objective"))),
        },
    })
}

fn moment_objective(o: &MomentObjectiveJson, dim: usize) -> Result<MomentObjective, CliError> {
    Ok(match o {
        MomentObjectiveJson::Product => MomentObjective::Product,
        MomentObjectiveJson::PwlMax { pieces: p } => MomentObjective::PiecewiseLinearMax(pieces(p, dim, "moment_objective")?),
        MomentObjectiveJson::PwlMin { pieces: p } => MomentObjective::PiecewiseLinearMin(pieces(p, dim, "moment_objective")?),
        MomentObjectiveJson::Table { points, values } => {
            if points.len() != values.len() || points.is_empty() {
                return Err(CliError::Schema("moment_objective: points and values must match and be non-empty".into()));
            }
            check_rows(points, dim, "moment_objective")?;
            MomentObjective::Table { points: points.clone(), values: values.clone() }
        }
    })
}

impl InstanceFile {
    /// Validates the file and applies the file options.
    pub fn resolve(&self) -> Result<Instance, CliError> {
        self.resolve_with(Options::from_file(&self.options))
    }

    pub fn resolve_with(&self, options: Options) -> Result<Instance, CliError> {
        options.validate()?;
        let states = schema("states", StateSpace::new(self.states.clone(), self.coords.clone()))?;
        let n = states.len();
        if self.prior.len() != n {
            return Err(CliError::Schema(format!("prior has {} entries for {n} states", self.prior.len())));
        }
        let prior = schema("prior", Prior::from_probs(self.prior.clone()))?;
        let moment = match (&self.moment_map, &self.coords, &self.moment_objective) {
            (_, _, None) => None,
            (Some(m), _, Some(v)) | (None, Some(m), Some(v)) => {
                let map = schema("moment_map", MomentMap::new(m.clone()))?;
                if map.states() != n {
                    return Err(CliError::Schema(format!("moment_map has {} rows for {n} states", map.states())));
                }
                let v = moment_objective(v, map.dim())?;
                Some((map, v))
            }
            (None, None, Some(_)) => {
                return Err(CliError::Schema("moment_objective given without moment_map or coords".into()));
            }
        };
        let objective = build_objective(&self.objective, n, &moment, "objective")?;
        let mut constraints = Vec::new();
        for (i, k) in self.constraints.iter().enumerate() {
            if !k.c.is_finite() {
                return Err(CliError::Schema(format!("constraints[{i}].c must be finite")));
            }
            let g = build_objective(&k.g, n, &moment, &format!("constraints[{i}].g"))?;
            match k.kind {
                ConstraintKind::Le => constraints.push(SideConstraint::le(g, k.c)),
                ConstraintKind::Ge => constraints.push(SideConstraint::ge(g, k.c)),
                ConstraintKind::Eq => constraints.extend(SideConstraint::eq(g, k.c)),
            }
        }
        Ok(Instance { states, prior, objective, moment, constraints, options, file: self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "states": ["lo", "hi"],
        "prior": [0.5, 0.5],
        "objective": {"type": "piecewise_linear_max", "pieces": [{"slope": [1, 0], "intercept": 0}]}
    }"#;

    #[test]
    fn minimal_file_resolves_with_defaults() {
        let inst = parse_instance(MINIMAL).unwrap().resolve().unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.options, Options::default());
        assert_eq!(inst.label(1), "hi");
    }

    #[test]
    fn schema_errors() {
        let bad = [
            MINIMAL.replace("[0.5, 0.5]", "[0.5, 0.4]"),
            MINIMAL.replace("[0.5, 0.5]", "[1.0]"),
            MINIMAL.replace("[1, 0]", "[1, 0, 0]"),
            MINIMAL.replace("piecewise_linear_max", "moment_composed"),
            MINIMAL.replace("\"prior\"", "\"priors\""),
            MINIMAL.replace("}]}", "}]}, \"options\": {\"mesh_k\": 0}"),
        ];
        for b in &bad {
            let r = parse_instance(b).and_then(|f| f.resolve());
            assert!(matches!(r, Err(CliError::Schema(_))), "{b}");
        }
    }

    #[test]
    fn moment_map_defaults_to_coords() {
        let text = r#"{
            "states": ["a", "b"], "coords": [[0, 1], [1, 0]], "prior": [0.5, 0.5],
            "objective": {"type": "moment_composed"}, "moment_objective": {"type": "product"}
        }"#;
        let inst = parse_instance(text).unwrap().resolve().unwrap();
        let v = inst.objective.eval(&Belief::uniform(2)).unwrap();
        assert_eq!(v, 0.25);
        let rho = inst.metric().unwrap();
        assert!((rho.get(0, 1) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn equality_constraint_becomes_two_rows() {
        let text = MINIMAL.replace(
            "}]}",
            "}]}, \"constraints\": [{\"g\": {\"type\": \"piecewise_linear_max\", \"pieces\": [{\"slope\": [0, 1], \"intercept\": 0}]}, \"c\": 0.5, \"kind\": \"eq\"}]",
        );
        let inst = parse_instance(&text).unwrap().resolve().unwrap();
        assert_eq!(inst.constraints.len(), 2);
    }
}
