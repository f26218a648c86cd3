//! Persuasion with side constraints E_τ[g_k(μ)] ≤ c_k.
//!
//! The dual adds one non-negative multiplier per constraint:
//! ⟨P, μ⟩ + Σ P_k g_k(μ) ≥ V(μ), with value ⟨P, μ₀⟩ + Σ P_k c_k.

use alloc::vec;
use alloc::vec::Vec;

use crate::belief::{bayes_plausibility_residual, PriceFunction, Prior, Signal};
use crate::cert::Verdict;
use crate::concavify::CandidateSet;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::objective::{evaluate_all, ObjectiveSpec};
use crate::tol::Tolerances;

/// `scale · E_τ[g] ≤ c` with `scale = ±1`.
#[derive(Clone, Debug)]
pub struct SideConstraint {
    pub g: ObjectiveSpec,
    pub scale: f64,
    pub c: f64,
}

impl SideConstraint {
    pub fn le(g: ObjectiveSpec, c: f64) -> Self {
        SideConstraint { g, scale: 1.0, c }
    }

    pub fn ge(g: ObjectiveSpec, c: f64) -> Self {
        SideConstraint { g, scale: -1.0, c: -c }
    }

    /// E_τ[g] = c as a pair of inequalities.
    pub fn eq(g: ObjectiveSpec, c: f64) -> [Self; 2] {
        [Self::le(g.clone(), c), Self::ge(g, c)]
    }

    fn eval_scaled(&self, cands: &CandidateSet) -> Result<Vec<f64>> {
        Ok(evaluate_all(&self.g, cands.beliefs())?.into_iter().map(|v| self.scale * v).collect())
    }

    /// scale · E_τ[g].
    pub fn expectation(&self, signal: &Signal) -> Result<f64> {
        signal.atoms().iter().map(|a| Ok(self.scale * a.weight * self.g.eval(&a.posterior)?)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSolution {
    pub signal: Signal,
    pub value: f64,
    pub price: PriceFunction,
    /// P_k ≥ 0.
    pub multipliers: Vec<f64>,
    /// c_k − scale·E_τ[g_k].
    pub slack: Vec<f64>,
}

fn grid_lp(prior: &Prior, cands: &CandidateSet, objective: Vec<f64>, rows: &[Vec<f64>], constraints: &[SideConstraint]) -> LinearProgram {
    let beliefs = cands.beliefs();
    let mut lp = LinearProgram::new(objective);
    for (omega, &p0) in prior.probs().iter().enumerate() {
        lp.add_eq(beliefs.iter().map(|b| b.probs()[omega]).collect(), p0);
    }
    lp.add_eq(vec![1.0; beliefs.len()], 1.0);
    for (row, k) in rows.iter().zip(constraints) {
        lp.add_le(row.clone(), k.c);
    }
    lp
}

/// Grid LP with the side constraints as extra inequality rows, after a
/// feasibility pass on the same rows.
pub fn solve_constrained_primal(
    prior: &Prior,
    obj: &ObjectiveSpec,
    constraints: &[SideConstraint],
    cands: &CandidateSet,
) -> Result<ConstrainedSolution> {
    let n = cands.state_count();
    if prior.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: prior.len() });
    }
    let values = evaluate_all(obj, cands.beliefs())?;
    let rows: Vec<Vec<f64>> = constraints.iter().map(|k| k.eval_scaled(cands)).collect::<Result<_>>()?;

    let phase1 = solve_lp(&grid_lp(prior, cands, vec![0.0; cands.len()], &rows, constraints))?;
    if phase1.status != LpStatus::Optimal {
        return Err(Error::Infeasible("no signal on this grid satisfies the side constraints".into()));
    }

    let sol = solve_lp(&grid_lp(prior, cands, values.iter().map(|v| -v).collect(), &rows, constraints))?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::NumericFailure("constrained LP infeasible after feasibility pass".into())),
        LpStatus::Unbounded => return Err(Error::Unbounded("constrained grid LP".into())),
    }
    let intercept = sol.dual_eq[n];
    let price = PriceFunction::new(sol.dual_eq[..n].iter().map(|y| -(y + intercept)).collect())?;
    let multipliers: Vec<f64> = sol.dual_ub.iter().map(|y| (-y).max(0.0)).collect();
    let support = Tolerances::DEFAULT.support;
    let signal = Signal::from_weights(&sol.x, cands.beliefs(), support)?;
    let value = values.iter().zip(&sol.x).filter(|(_, w)| **w > support).map(|(v, w)| v * w).sum::<f64>()
        / sol.x.iter().filter(|w| **w > support).sum::<f64>();
    let slack = constraints.iter().map(|k| Ok(k.c - k.expectation(&signal)?)).collect::<Result<_>>()?;
    Ok(ConstrainedSolution { signal, value, price, multipliers, slack })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedReport {
    /// (⟨P, μ₀⟩ + Σ P_k c_k) − Σ wᵢV(μᵢ).
    pub gap: f64,
    /// max over probes of V − ⟨P, μ⟩ − Σ P_k g_k.
    pub max_violation: f64,
    /// P_k (c_k − scale·E_τ[g_k]).
    pub multiplier_slackness: Vec<f64>,
    /// Largest scale·E_τ[g_k] − c_k.
    pub primal_violation: f64,
    pub verdict: Verdict,
}

/// Checks a (signal, price, multipliers) triple: primal feasibility,
/// dual feasibility on `probes`, and the value identity.
#[allow(clippy::too_many_arguments)]
pub fn check_constrained_optimality(
    signal: &Signal,
    price: &PriceFunction,
    multipliers: &[f64],
    constraints: &[SideConstraint],
    prior: &Prior,
    obj: &ObjectiveSpec,
    probes: &CandidateSet,
    tol: f64,
) -> Result<ConstrainedReport> {
    if multipliers.len() != constraints.len() {
        return Err(Error::DimensionMismatch { expected: constraints.len(), found: multipliers.len() });
    }
    if let Some(m) = multipliers.iter().find(|m| !(**m >= -1e-9)) {
        return Err(Error::InvalidInput(alloc::format!("multiplier {m} is negative")));
    }
    if price.len() != prior.len() || probes.state_count() != prior.len() {
        return Err(Error::DimensionMismatch { expected: prior.len(), found: price.len() });
    }
    let plaus = bayes_plausibility_residual(signal, prior)?;

    let values = evaluate_all(obj, probes.beliefs())?;
    let rows: Vec<Vec<f64>> = constraints.iter().map(|k| k.eval_scaled(probes)).collect::<Result<_>>()?;
    let max_violation = probes
        .beliefs()
        .iter()
        .enumerate()
        .map(|(i, mu)| {
            let pen: f64 = rows.iter().zip(multipliers).map(|(r, m)| m * r[i]).sum();
            values[i] - price.cost(mu) - pen
        })
        .fold(f64::NEG_INFINITY, f64::max);

    let primal: f64 = signal.atoms().iter().map(|a| Ok(a.weight * obj.eval(&a.posterior)?)).sum::<Result<f64>>()?;
    let exps: Vec<f64> = constraints.iter().map(|k| k.expectation(signal)).collect::<Result<_>>()?;
    let dual = price.cost(prior.belief()) + constraints.iter().zip(multipliers).map(|(k, m)| m * k.c).sum::<f64>();
    let multiplier_slackness = constraints.iter().zip(multipliers).zip(&exps).map(|((k, m), e)| m * (k.c - e)).collect();
    let primal_violation = constraints.iter().zip(&exps).map(|(k, e)| e - k.c).fold(f64::NEG_INFINITY, f64::max);
    let gap = dual - primal;

    let feasible = plaus <= Tolerances::DEFAULT.plausibility && max_violation <= tol && !(primal_violation > tol);
    let verdict = if !feasible {
        Verdict::Invalid
    } else if gap.abs() <= tol {
        Verdict::Optimal
    } else {
        Verdict::FeasibleOnly
    };
    Ok(ConstrainedReport { gap, max_violation, multiplier_slackness, primal_violation, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::weak_duality_gap;
    use crate::concavify::{concavify_grid, simplex_mesh};
    use crate::objective::AffinePiece;

    fn vmax() -> ObjectiveSpec {
        ObjectiveSpec::PiecewiseLinearMax(vec![
            AffinePiece { slope: vec![1.0, 0.0], intercept: 0.0 },
            AffinePiece { slope: vec![0.0, 1.0], intercept: 0.0 },
        ])
    }

    fn spread() -> ObjectiveSpec {
        ObjectiveSpec::PiecewiseLinearMax(vec![
            AffinePiece { slope: vec![1.0, -1.0], intercept: 0.0 },
            AffinePiece { slope: vec![-1.0, 1.0], intercept: 0.0 },
        ])
    }

    #[test]
    fn no_constraints_is_concavify() {
        let prior = Prior::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
        let obj = ObjectiveSpec::oracle(|mu| Ok(mu.probs()[0] * mu.probs()[1] - mu.probs()[2] * mu.probs()[2]));
        let mesh = simplex_mesh(3, 6).unwrap();
        let c = solve_constrained_primal(&prior, &obj, &[], &mesh).unwrap();
        let g = concavify_grid(&prior, &obj, &mesh).unwrap();
        assert!((c.value - g.value).abs() < 1e-9);
        let rep = check_constrained_optimality(&c.signal, &c.price, &[], &[], &prior, &obj, &mesh, 1e-7).unwrap();
        let wd = weak_duality_gap(&c.signal, &c.price, &prior, &obj).unwrap();
        assert!((rep.gap - wd).abs() < 1e-12);
    }

    #[test]
    fn binding_constraint() {
        let prior = Prior::from_probs(vec![0.5, 0.5]).unwrap();
        let mesh = simplex_mesh(2, 2).unwrap();
        let k = [SideConstraint::le(spread(), 0.5)];
        let s = solve_constrained_primal(&prior, &vmax(), &k, &mesh).unwrap();
        assert!((s.value - 0.75).abs() < 1e-12);
        assert!((s.multipliers[0] - 0.5).abs() < 1e-9);
        for p in s.price.prices() {
            assert!((p - 0.5).abs() < 1e-9);
        }
        let rep = check_constrained_optimality(&s.signal, &s.price, &s.multipliers, &k, &prior, &vmax(), &mesh, 1e-7).unwrap();
        assert_eq!(rep.verdict, Verdict::Optimal);
        assert!(rep.multiplier_slackness[0].abs() < 1e-9);

        let bumped = [s.multipliers[0] + 0.1];
        let rep = check_constrained_optimality(&s.signal, &s.price, &bumped, &k, &prior, &vmax(), &mesh, 1e-7).unwrap();
        assert!((rep.gap - 0.05).abs() < 1e-9);
        assert!(check_constrained_optimality(&s.signal, &s.price, &[-0.5], &k, &prior, &vmax(), &mesh, 1e-7).is_err());
    }

    #[test]
    fn slack_constraint_and_infeasible() {
        let prior = Prior::from_probs(vec![0.5, 0.5]).unwrap();
        let mesh = simplex_mesh(2, 4).unwrap();
        let s = solve_constrained_primal(&prior, &vmax(), &[SideConstraint::le(spread(), 10.0)], &mesh).unwrap();
        assert_eq!(s.multipliers[0], 0.0);
        assert!((s.value - 1.0).abs() < 1e-12);

        let err = solve_constrained_primal(&prior, &vmax(), &[SideConstraint::le(spread(), -0.1)], &mesh);
        assert!(matches!(err, Err(Error::Infeasible(_))));

        let [lo, hi] = SideConstraint::eq(spread(), 0.25);
        let s = solve_constrained_primal(&prior, &vmax(), &[lo, hi], &mesh).unwrap();
        let e = SideConstraint::le(spread(), 0.0).expectation(&s.signal).unwrap();
        assert!((e - 0.25).abs() < 1e-9);
        assert!(s.signal.atoms().iter().all(|a| a.posterior.len() == 2));
    }
}
