//! JSON documents written by the command-line tool.
//!
//! One `Report` type serves every certificate-producing subcommand; fields
//! that a subcommand does not compute are omitted from its output.

use serde::{Deserialize, Serialize};

use persuasion_core::moment::MomentDistribution;
use persuasion_core::two_dim::{LineFit, ThetaAtom};
use persuasion_core::{Atom, Belief, Certificate, PriceFunction, Signal, Verdict};

use crate::error::CliError;
use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub weight: f64,
    pub posterior: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// ⟨P, μ⟩ − V(μ); zero on the support of an optimal pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityJson {
    /// max over probes of V(μ) − ⟨P, μ⟩.
    pub max_violation: f64,
    pub worst: Option<Vec<f64>>,
    /// Labels of states whose Dirac belief is violated.
    pub violated_states: Vec<String>,
    pub probes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlacknessJson {
    pub passes: bool,
    pub max_residual: f64,
    pub flagged: Vec<usize>,
}

/// Dual feasibility at random beliefs off the candidate grid. Reported
/// only; the verdict refers to the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditJson {
    pub seed: u64,
    pub probes: usize,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentAtomJson {
    pub weight: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaAtomJson {
    pub theta: f64,
    pub weight: f64,
    pub mean: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFitJson {
    pub a: f64,
    pub is_line: bool,
    pub b: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevelationJson {
    pub verdict: String,
    pub value: f64,
    pub om_residual: f64,
    pub line_fit: LineFitJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub verdict: String,
    pub value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub plausibility_residual: f64,
    pub atoms: Vec<AtomJson>,
    pub price: Vec<f64>,
    pub feasibility: FeasibilityJson,
    pub slackness: SlacknessJson,
    /// Why the verdict is not Optimal; empty otherwise.
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_atoms: Option<Vec<MomentAtomJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convex_order: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_fit: Option<LineFitJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revelation: Option<RevelationJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_atoms: Option<Vec<ThetaAtomJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub om_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hessian: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hessian_det: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_slack: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier_slackness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primal_violation: Option<f64>,
}

impl Report {
    pub fn from_certificate(command: &str, cert: &Certificate, inst: &Instance, gap_target: f64) -> Self {
        Report {
            command: command.into(),
            verdict: cert.verdict.as_str().into(),
            value: cert.primal_value,
            dual_value: cert.dual_value,
            gap: cert.gap,
            plausibility_residual: cert.plausibility_residual,
            atoms: cert
                .slackness
                .atoms
                .iter()
                .map(|a| AtomJson {
                    weight: a.weight,
                    posterior: a.posterior.probs().to_vec(),
                    value: Some(a.value),
                    slack: Some(a.residual),
                })
                .collect(),
            price: cert.price.prices().to_vec(),
            feasibility: FeasibilityJson {
                max_violation: cert.feasibility.max_violation,
                worst: cert.feasibility.worst.as_ref().map(|b| b.probs().to_vec()),
                violated_states: cert.feasibility.violated_states.iter().map(|&s| inst.label(s).to_string()).collect(),
                probes: cert.feasibility.probes.clone(),
            },
            slackness: SlacknessJson {
                passes: cert.slackness.passes,
                max_residual: cert.slackness.max_residual(),
                flagged: cert.slackness.flagged.clone(),
            },
            failures: failures(cert, inst, gap_target),
            iterations: None,
            audit: None,
            moment_atoms: None,
            convex_order: None,
            line_fit: None,
            revelation: None,
            theta_atoms: None,
            om_residual: None,
            hessian: None,
            hessian_det: None,
            multipliers: None,
            constraint_slack: None,
            multiplier_slackness: None,
            primal_violation: None,
        }
    }

    pub fn is_invalid(&self) -> bool {
        self.verdict == Verdict::Invalid.as_str()
    }

    pub fn is_optimal(&self) -> bool {
        self.verdict == Verdict::Optimal.as_str()
    }
}

fn failures(cert: &Certificate, inst: &Instance, gap_target: f64) -> Vec<String> {
    let tol = persuasion_core::Tolerances::DEFAULT;
    let mut out = Vec::new();
    if cert.plausibility_residual > tol.plausibility {
        out.push(format!(
            "signal is not Bayes plausible: residual {:e} exceeds {:e}",
            cert.plausibility_residual, tol.plausibility
        ));
    }
    let f = &cert.feasibility;
    if f.max_violation > tol.cut {
        if f.violated_states.is_empty() {
            let at = f.worst.as_ref().map(|b| format!("{:?}", b.probs())).unwrap_or_default();
            out.push(format!("price is below V by {:e} at belief {at}", f.max_violation));
        } else {
            let names: Vec<&str> = f.violated_states.iter().map(|&s| inst.label(s)).collect();
            out.push(format!(
                "price is below V at state {} (worst violation {:e})",
                names.join(", "),
                f.max_violation
            ));
        }
    }
    if cert.gap.abs() > gap_target {
        out.push(format!("duality gap {:e} exceeds {:e}", cert.gap, gap_target));
    }
    if !cert.slackness.passes {
        out.push(format!(
            "complementary slackness fails on atoms {:?} (max residual {:e})",
            cert.slackness.flagged,
            cert.slackness.max_residual()
        ));
    }
    out
}

pub fn moment_atoms(g: &MomentDistribution) -> Vec<MomentAtomJson> {
    g.atoms().iter().map(|a| MomentAtomJson { weight: a.weight, x: a.x.clone() }).collect()
}

pub fn theta_atoms(t: &[ThetaAtom]) -> Vec<ThetaAtomJson> {
    t.iter().map(|a| ThetaAtomJson { theta: a.theta, weight: a.weight, mean: a.mean }).collect()
}

pub fn line_fit(a: f64, f: &LineFit) -> LineFitJson {
    LineFitJson { a, is_line: f.is_line, b: f.b, residual: f.residual }
}

/// A signal file: any JSON object with an `atoms` array of
/// `{weight, posterior}`, such as a report written by `solve`.
#[derive(Debug, Clone, Deserialize)]
pub struct SignalFile {
    pub atoms: Vec<SignalAtom>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SignalAtom {
    pub weight: f64,
    pub posterior: Vec<f64>,
}

impl SignalFile {
    pub fn parse(text: &str) -> Result<Signal, CliError> {
        let f: SignalFile = serde_json::from_str(text).map_err(|e| CliError::Schema(format!("signal: {e}")))?;
        let atoms = f
            .atoms
            .into_iter()
            .map(|a| Ok(Atom { weight: a.weight, posterior: Belief::new(a.posterior)? }))
            .collect::<persuasion_core::Result<Vec<_>>>()
            .map_err(|e| CliError::Schema(format!("signal: {e}")))?;
        Signal::new(atoms).map_err(|e| CliError::Schema(format!("signal: {e}")))
    }
}

/// A price file: a bare array, or an object with a `price` array.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PriceFile {
    Bare(Vec<f64>),
    Wrapped { price: Vec<f64> },
}

impl PriceFile {
    pub fn parse(text: &str) -> Result<PriceFunction, CliError> {
        let f: PriceFile = serde_json::from_str(text).map_err(|e| CliError::Schema(format!("price: {e}")))?;
        let v = match f {
            PriceFile::Bare(v) | PriceFile::Wrapped { price: v } => v,
        };
        PriceFunction::new(v).map_err(|e| CliError::Schema(format!("price: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteepnessJson {
    pub ratio: f64,
    pub base_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrReport {
    pub command: String,
    pub distance: f64,
    /// f attaining the supremum, per state.
    pub potential: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steepness: Option<SteepnessJson>,
}

pub fn to_json<T: Serialize>(t: &T) -> String {
    let mut s = serde_json::to_string_pretty(t).expect("reports serialize");
    s.push('\n');
    s
}
