//! Kantorovich–Rubinstein distance on a finite metric space, and the
//! steepness of V̂ at the prior measured in it.

use alloc::vec;
use alloc::vec::Vec;

use crate::belief::{dot, Belief, Prior};
use crate::concavify::{concavify_values, CandidateSet};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::objective::{evaluate_all, ObjectiveSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct GroundMetric {
    rho: Vec<Vec<f64>>,
}

impl GroundMetric {
    /// Validates symmetry, zero diagonal, positivity off the diagonal and
    /// the triangle inequality (within 1e-12).
    pub fn new(rho: Vec<Vec<f64>>) -> Result<Self> {
        let n = rho.len();
        if n == 0 {
            return Err(Error::InvalidInput("metric over no states".into()));
        }
        for (i, row) in rho.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidInput(alloc::format!("ρ({i},{i}) = {} is not zero", row[i])));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 || (i != j && d == 0.0) {
                    return Err(Error::InvalidInput(alloc::format!("ρ({i},{j}) = {d} is not a positive distance")));
                }
                if d != rho[j][i] {
                    return Err(Error::InvalidInput(alloc::format!("ρ is not symmetric at ({i},{j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if rho[i][k] > rho[i][j] + rho[j][k] + 1e-12 {
                        return Err(Error::InvalidInput(alloc::format!("triangle inequality fails at ({i},{j},{k})")));
                    }
                }
            }
        }
        Ok(GroundMetric { rho })
    }

    /// |s − t| between points on the line.
    pub fn from_points_1d(points: &[f64]) -> Result<Self> {
        Self::new(points.iter().map(|s| points.iter().map(|t| (s - t).abs()).collect()).collect())
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rho[i][j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrDistance {
    pub distance: f64,
    /// A maximizing f: 1-Lipschitz under ρ and bounded by 1.
    pub potential: Vec<f64>,
}

/// sup Σ f·(μ − η) over f with |f(ω) − f(ω′)| ≤ ρ(ω, ω′) and |f| ≤ 1.
///
/// Solved as its dual: move mass along edges at cost ρ, or create or
/// destroy it at unit cost. The potential is read off the balance-row
/// multipliers and checked against both constraint families. Inputs may be
/// signed and need not have unit mass.
pub fn kr_distance(mu: &[f64], eta: &[f64], rho: &GroundMetric) -> Result<KrDistance> {
    let n = rho.len();
    for v in [mu, eta] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("measure weights must be finite".into()));
        }
    }
    // Solve one canonical orientation so that d(μ, η) and d(η, μ) are
    // bitwise equal; f for the other orientation is −f.
    let swap = mu.iter().zip(eta).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()) == Some(core::cmp::Ordering::Greater);
    let (mu, eta) = if swap { (eta, mu) } else { (mu, eta) };
    let diff: Vec<f64> = mu.iter().zip(eta).map(|(a, b)| a - b).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let m = pairs.len();
    let mut cost: Vec<f64> = pairs.iter().map(|&(i, j)| rho.get(i, j)).collect();
    cost.extend(core::iter::repeat_n(1.0, 2 * n));
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (e, &(i, j)) in pairs.iter().enumerate() {
        rows[i].push((e, 1.0));
        rows[j].push((e, -1.0));
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row.push((m + i, 1.0));
        row.push((m + n + i, -1.0));
    }
    let mut lp = LinearProgram::new(cost);
    for (row, &d) in rows.iter().zip(&diff) {
        lp.add_eq_sparse(row, d);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericFailure("transport LP did not reach an optimum".into()));
    }
    let potential = sol.dual_eq;
    let tol = 1e-8;
    let lip = pairs.iter().map(|&(i, j)| potential[i] - potential[j] - rho.get(i, j)).fold(0.0, f64::max);
    let bound = potential.iter().map(|f| f.abs() - 1.0).fold(0.0, f64::max);
    if lip > tol || bound > tol {
        return Err(Error::NumericFailure(alloc::format!(
            "recovered potential violates Lipschitz ({lip:e}) or bound ({bound:e})"
        )));
    }
    let distance = dot(&potential, &diff);
    if (distance - sol.objective_value).abs() > 1e-7 {
        return Err(Error::NumericFailure(alloc::format!(
            "potential value {distance} disagrees with transport cost {}",
            sol.objective_value
        )));
    }
    let potential = if swap { potential.into_iter().map(|f| -f).collect() } else { potential };
    Ok(KrDistance { distance: sol.objective_value, potential })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteepnessReport {
    /// (V̂(μ) − V̂(μ₀)) / d(μ, μ₀) per probe.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub base_value: f64,
}

/// Ratios of V̂ increase to KR distance from the prior, with V̂ computed by
/// the grid LP on the shared candidate set `cands`.
pub fn steepness_estimate(
    prior: &Prior,
    obj: &ObjectiveSpec,
    probes: &[Belief],
    rho: &GroundMetric,
    cands: &CandidateSet,
) -> Result<SteepnessReport> {
    if probes.is_empty() {
        return Err(Error::InvalidInput("steepness needs at least one probe".into()));
    }
    let values = evaluate_all(obj, cands.beliefs())?;
    let base_value = concavify_values(prior, cands, &values)?.value;
    let mut ratios = Vec::with_capacity(probes.len());
    for probe in probes {
        let d = kr_distance(probe.probs(), prior.probs(), rho)?.distance;
        if d <= 1e-12 {
            return Err(Error::InvalidInput("probe coincides with the prior".into()));
        }
        let v = concavify_values(&Prior::new(probe.clone()), cands, &values)?.value;
        ratios.push((v - base_value) / d);
    }
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SteepnessReport { ratios, max_ratio, base_value })
}
