//! Checking (signal, price) pairs against the persuasion dual.
//!
//! A pair is optimal exactly when the signal is Bayes-plausible, the price
//! hyperplane dominates V, and every posterior in the support lies on it.
//! Domination is only ever checked on a finite probe set, so every
//! certificate is relative to the probes it names.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::belief::{bayes_plausibility_residual, Belief, PriceFunction, Prior, Signal};
use crate::concavify::{CandidateSet, Provenance};
use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Optimal,
    /// Plausible and dual-feasible, but the gap or slackness test fails.
    FeasibleOnly,
    Invalid,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Optimal => "Optimal",
            Verdict::FeasibleOnly => "FeasibleOnly",
            Verdict::Invalid => "Invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSlack {
    pub weight: f64,
    pub posterior: Belief,
    pub value: f64,
    /// ⟨P, μ⟩ − V(μ).
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlacknessReport {
    pub atoms: Vec<AtomSlack>,
    /// Support atoms with residual above the tolerance.
    pub flagged: Vec<usize>,
    pub passes: bool,
}

impl SlacknessReport {
    pub fn max_residual(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.weight > Tolerances::DEFAULT.support)
            .map(|a| a.residual)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// max over probes of V(μ) − ⟨P, μ⟩.
    pub max_violation: f64,
    pub worst: Option<Belief>,
    /// States whose Dirac belief violates the price by more than the tolerance.
    pub violated_states: Vec<usize>,
    pub probes: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub signal: Signal,
    pub price: PriceFunction,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub plausibility_residual: f64,
    pub slackness: SlacknessReport,
    pub feasibility: FeasibilityReport,
    pub verdict: Verdict,
}

fn check_n(n: usize, found: usize) -> Result<()> {
    if n != found {
        return Err(Error::DimensionMismatch { expected: n, found });
    }
    Ok(())
}

/// max over probes of V(μ) − ⟨P, μ⟩; non-positive means feasible on the probes.
pub fn check_dual_feasible(price: &PriceFunction, obj: &ObjectiveSpec, probes: &CandidateSet) -> Result<f64> {
    Ok(feasibility_report(price, obj, probes, Tolerances::DEFAULT.cut)?.max_violation)
}

fn describe(probes: &CandidateSet) -> String {
    match probes.provenance() {
        Provenance::UserGrid => format!("user grid ({} beliefs)", probes.len()),
        Provenance::SimplexMesh(k) => format!("simplex mesh k={} ({} beliefs)", k, probes.len()),
        Provenance::Adaptive => format!("adaptive mesh ({} beliefs)", probes.len()),
    }
}

pub fn feasibility_report(
    price: &PriceFunction,
    obj: &ObjectiveSpec,
    probes: &CandidateSet,
    tol: f64,
) -> Result<FeasibilityReport> {
    check_n(price.len(), probes.state_count())?;
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst = None;
    let mut violated_states = Vec::new();
    for mu in probes.beliefs() {
        let viol = obj.eval(mu)? - price.cost(mu);
        if viol > max_violation {
            max_violation = viol;
            worst = Some(mu.clone());
        }
        if viol > tol {
            if let Some(s) = mu.dirac_state() {
                violated_states.push(s);
            }
        }
    }
    violated_states.sort_unstable();
    Ok(FeasibilityReport { max_violation, worst, violated_states, probes: describe(probes) })
}

/// ⟨P, μ₀⟩ − Σ wᵢV(μᵢ). Rejects signals whose barycenter is off the prior.
pub fn weak_duality_gap(signal: &Signal, price: &PriceFunction, prior: &Prior, obj: &ObjectiveSpec) -> Result<f64> {
    check_n(prior.len(), price.len())?;
    signal.check_plausible(prior, Tolerances::DEFAULT.plausibility)?;
    let primal: f64 = signal.atoms().iter().map(|a| Ok(a.weight * obj.eval(&a.posterior)?)).sum::<Result<f64>>()?;
    Ok(price.cost(prior.belief()) - primal)
}

/// Per-atom residual ⟨P, μᵢ⟩ − V(μᵢ). Atoms with weight at most the support
/// tolerance are reported but never flagged.
pub fn check_complementary_slackness(
    signal: &Signal,
    price: &PriceFunction,
    obj: &ObjectiveSpec,
    tol: f64,
) -> Result<SlacknessReport> {
    check_n(price.len(), signal.state_count())?;
    let mut atoms = Vec::with_capacity(signal.len());
    let mut flagged = Vec::new();
    for (i, a) in signal.atoms().iter().enumerate() {
        let value = obj.eval(&a.posterior)?;
        let residual = price.cost(&a.posterior) - value;
        if a.weight > Tolerances::DEFAULT.support && residual > tol {
            flagged.push(i);
        }
        atoms.push(AtomSlack { weight: a.weight, posterior: a.posterior.clone(), value, residual });
    }
    Ok(SlacknessReport { passes: flagged.is_empty(), atoms, flagged })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullDisclosureReport {
    pub is_optimal: bool,
    pub worst_violation: f64,
    pub worst: Option<Belief>,
    /// P(ω) = V(δ_ω).
    pub price: PriceFunction,
    /// E_{μ₀}[V(δ_ω)].
    pub value: f64,
}

/// Full disclosure is optimal iff Σ μ(ω)V(δ_ω) ≥ V(μ) on every probe.
pub fn full_disclosure_certificate(
    prior: &Prior,
    obj: &ObjectiveSpec,
    probes: &CandidateSet,
    tol: f64,
) -> Result<FullDisclosureReport> {
    let n = prior.len();
    check_n(n, probes.state_count())?;
    let vertex: Vec<f64> = (0..n).map(|i| obj.eval(&Belief::dirac(n, i))).collect::<Result<_>>()?;
    let price = PriceFunction::new(vertex)?;
    let rep = feasibility_report(&price, obj, probes, tol)?;
    Ok(FullDisclosureReport {
        is_optimal: rep.max_violation <= tol,
        worst_violation: rep.max_violation,
        worst: rep.worst,
        value: price.cost(prior.belief()),
        price,
    })
}

/// Runs plausibility, feasibility on `probes` plus the signal's own support,
/// the gap, and slackness, and combines them into a verdict.
pub fn certify(
    signal: &Signal,
    price: &PriceFunction,
    prior: &Prior,
    obj: &ObjectiveSpec,
    probes: &CandidateSet,
    tol: &Tolerances,
) -> Result<Certificate> {
    let n = prior.len();
    check_n(n, price.len())?;
    check_n(n, signal.state_count())?;
    let plausibility_residual = bayes_plausibility_residual(signal, prior)?;
    let slackness = check_complementary_slackness(signal, price, obj, tol.cut)?;
    let mut feasibility = feasibility_report(price, obj, probes, tol.cut)?;
    for a in &slackness.atoms {
        if -a.residual > feasibility.max_violation {
            feasibility.max_violation = -a.residual;
            feasibility.worst = Some(a.posterior.clone());
        }
    }
    let primal_value: f64 = slackness.atoms.iter().map(|a| a.weight * a.value).sum();
    let dual_value = price.cost(prior.belief());
    let gap = dual_value - primal_value;
    let verdict = if plausibility_residual > tol.plausibility || feasibility.max_violation > tol.cut {
        Verdict::Invalid
    } else if gap.abs() <= tol.gap_target && slackness.passes {
        Verdict::Optimal
    } else {
        Verdict::FeasibleOnly
    };
    Ok(Certificate {
        signal: signal.clone(),
        price: price.clone(),
        primal_value,
        dual_value,
        gap,
        plausibility_residual,
        slackness,
        feasibility,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Atom;
    use crate::concavify::{concavify_grid, simplex_mesh};
    use crate::objective::{AffinePiece, MomentMap, MomentObjective};
    use alloc::vec;

    fn concave() -> ObjectiveSpec {
        ObjectiveSpec::oracle(|mu| Ok(mu.probs()[0] * mu.probs()[1]))
    }

    fn example3() -> (Prior, ObjectiveSpec) {
        let map = MomentMap::new(vec![
            vec![0.1, 0.3],
            vec![0.3, 0.1],
            vec![0.4, 0.6],
            vec![0.6, 0.4],
            vec![0.8, 0.9],
            vec![1.0, 0.7],
        ])
        .unwrap();
        (Prior::new(Belief::uniform(6)), ObjectiveSpec::MomentComposed { map, v: MomentObjective::Product })
    }

    #[test]
    fn dual_feasible_examples() {
        // V = max(μ₁, μ₂) + 1 is convex; its vertex price plus one clears it by at least 1.
        let obj = ObjectiveSpec::PiecewiseLinearMax(vec![
            AffinePiece { slope: vec![1.0, 0.0], intercept: 1.0 },
            AffinePiece { slope: vec![0.0, 1.0], intercept: 1.0 },
        ]);
        let mesh = simplex_mesh(2, 10).unwrap();
        let v = check_dual_feasible(&PriceFunction::new(vec![3.0, 3.0]).unwrap(), &obj, &mesh).unwrap();
        assert!(v <= -1.0 + 1e-12);

        let one = ObjectiveSpec::affine(vec![0.0, 0.0], 1.0);
        assert_eq!(check_dual_feasible(&PriceFunction::constant(2, 0.0), &one, &mesh).unwrap(), 1.0);

        let (prior, obj) = example3();
        let mesh = simplex_mesh(6, 2).unwrap();
        let r = concavify_grid(&prior, &obj, &mesh).unwrap();
        assert!(check_dual_feasible(&r.price, &obj, &mesh).unwrap() <= 1e-7);
    }

    #[test]
    fn gap_examples() {
        let (prior, obj) = example3();
        let mesh = simplex_mesh(6, 2).unwrap();
        let r = concavify_grid(&prior, &obj, &mesh).unwrap();
        let g = weak_duality_gap(&r.signal, &r.price, &prior, &obj).unwrap();
        assert!(g.abs() <= 1e-6);
        let raised = weak_duality_gap(&r.signal, &r.price.shifted(0.25), &prior, &obj).unwrap();
        assert!((raised - g - 0.25).abs() < 1e-12);

        let full = Signal::full_disclosure(&prior);
        let p = PriceFunction::new((0..6).map(|i| obj.eval(&Belief::dirac(6, i)).unwrap()).collect()).unwrap();
        assert_eq!(weak_duality_gap(&full, &p, &prior, &obj).unwrap(), 0.0);

        let off = Signal::no_disclosure(&Prior::new(Belief::dirac(6, 0)));
        assert!(weak_duality_gap(&off, &p, &prior, &obj).is_err());
    }

    #[test]
    fn slackness_examples() {
        let (prior, obj) = example3();
        let r = concavify_grid(&prior, &obj, &simplex_mesh(6, 2).unwrap()).unwrap();
        assert!(check_complementary_slackness(&r.signal, &r.price, &obj, 1e-7).unwrap().passes);

        let full = Signal::full_disclosure(&prior);
        let p = PriceFunction::new((0..6).map(|i| obj.eval(&Belief::dirac(6, i)).unwrap()).collect()).unwrap();
        let rep = check_complementary_slackness(&full, &p, &obj, 0.0).unwrap();
        assert!(rep.atoms.iter().all(|a| a.residual == 0.0));

        // Same price, but the prior itself strictly below the hyperplane.
        let mixed = Signal::new(vec![
            Atom { weight: 0.5, posterior: Belief::dirac(2, 0) },
            Atom { weight: 0.5, posterior: Belief::uniform(2) },
        ])
        .unwrap();
        let line = ObjectiveSpec::oracle(|mu| Ok(if mu.dirac_state().is_some() { 1.0 } else { 0.0 }));
        let rep = check_complementary_slackness(&mixed, &PriceFunction::constant(2, 1.0), &line, 1e-7).unwrap();
        assert!(!rep.passes);
        assert_eq!(rep.flagged, vec![1]);
    }

    #[test]
    fn full_disclosure_examples() {
        let map = |pts: Vec<Vec<f64>>| ObjectiveSpec::MomentComposed { map: MomentMap::new(pts).unwrap(), v: MomentObjective::Product };
        let line = map((0..=10).map(|i| vec![i as f64 / 10.0, i as f64 / 10.0]).collect());
        let parabola = map((0..=10).map(|i| {
            let t = i as f64 / 10.0;
            vec![t, t * t]
        }).collect());
        let prior = Prior::new(Belief::uniform(11));
        // Probes: every pair midpoint plus a few random-looking triples.
        let mut probes = Vec::new();
        for i in 0..11 {
            for j in i + 1..11 {
                let mut p = vec![0.0; 11];
                p[i] = 0.5;
                p[j] = 0.5;
                probes.push(Belief::new(p).unwrap());
            }
        }
        let probes = CandidateSet::new(probes, Provenance::UserGrid).unwrap();
        for obj in [line, parabola] {
            let rep = full_disclosure_certificate(&prior, &obj, &probes, 1e-9).unwrap();
            assert!(rep.is_optimal, "{}", rep.worst_violation);
        }

        let prior = Prior::from_probs(vec![0.5, 0.5]).unwrap();
        let rep = full_disclosure_certificate(&prior, &concave(), &simplex_mesh(2, 4).unwrap(), 1e-9).unwrap();
        assert!(!rep.is_optimal);
        assert_eq!(rep.worst.unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn certify_verdicts() {
        let (prior, obj) = example3();
        let mesh = simplex_mesh(6, 2).unwrap();
        let r = concavify_grid(&prior, &obj, &mesh).unwrap();
        let tol = Tolerances::DEFAULT;
        let c = certify(&r.signal, &r.price, &prior, &obj, &mesh, &tol).unwrap();
        assert_eq!(c.verdict, Verdict::Optimal);

        let c = certify(&Signal::no_disclosure(&prior), &r.price, &prior, &obj, &mesh, &tol).unwrap();
        assert_eq!(c.verdict, Verdict::FeasibleOnly);

        let mut lowered = r.price.prices().to_vec();
        lowered[4] -= 0.1;
        let c = certify(&r.signal, &PriceFunction::new(lowered).unwrap(), &prior, &obj, &mesh, &tol).unwrap();
        assert_eq!(c.verdict, Verdict::Invalid);
        assert!(c.feasibility.violated_states.contains(&4));
    }
}
