//! Moment persuasion: objectives that depend on the posterior only through
//! E_μ[m(ω)].
//!
//! Signals reduce to distributions G of moments that are contractions of
//! the prior moment distribution F₀ in the convex order. Prices move
//! between the two spaces by lifting (P(ω) = p(m(ω))) and pushing down
//! (p(x) = cheapest ⟨P, μ⟩ with E_μ[m] = x).

use alloc::vec;
use alloc::vec::Vec;

use crate::belief::{dot, sup_distance, Belief, PriceFunction, Prior, Signal};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::objective::{MomentMap, MomentObjective};
use crate::tol::Tolerances;

/// Merge distance for moment atoms.
pub const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentAtom {
    pub weight: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentDistribution {
    atoms: Vec<MomentAtom>,
}

impl MomentDistribution {
    pub fn new(atoms: Vec<MomentAtom>) -> Result<Self> {
        let first = atoms.first().ok_or_else(|| Error::InvalidInput("moment distribution has no atoms".into()))?;
        let dim = first.x.len();
        let mut total = 0.0;
        for a in &atoms {
            if a.x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: a.x.len() });
            }
            if !a.weight.is_finite() || a.weight < 0.0 || a.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("moment atom weight must be finite and non-negative".into()));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > Tolerances::DEFAULT.simplex {
            return Err(Error::InvalidInput(alloc::format!("moment weights sum to {total}")));
        }
        Ok(MomentDistribution { atoms })
    }

    /// Groups atoms whose points lie within [`MERGE_TOL`] of an earlier one.
    pub fn merged(atoms: Vec<MomentAtom>) -> Result<Self> {
        let mut out: Vec<MomentAtom> = Vec::new();
        for a in atoms {
            match out.iter_mut().find(|b| sup_distance(&b.x, &a.x) <= MERGE_TOL) {
                Some(b) => b.weight += a.weight,
                None => out.push(a),
            }
        }
        Self::new(out)
    }

    /// F₀: the law of m(ω) under the prior.
    pub fn pushforward(prior: &Prior, map: &MomentMap) -> Result<Self> {
        check_states(map, prior.len())?;
        Self::merged(
            prior
                .probs()
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(i, &p)| MomentAtom { weight: p, x: map.state(i).to_vec() })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[MomentAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].x.len()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for a in &self.atoms {
            for (mi, xi) in m.iter_mut().zip(&a.x) {
                *mi += a.weight * xi;
            }
        }
        m
    }

    /// E_G[v].
    pub fn expect(&self, v: &MomentObjective) -> Result<f64> {
        self.atoms.iter().map(|a| Ok(a.weight * v.eval(&a.x)?)).sum()
    }
}

fn check_states(map: &MomentMap, n: usize) -> Result<()> {
    if map.states() != n {
        return Err(Error::DimensionMismatch { expected: map.states(), found: n });
    }
    Ok(())
}

fn check_dim(map: &MomentMap, x: &[f64]) -> Result<()> {
    if x.len() != map.dim() {
        return Err(Error::DimensionMismatch { expected: map.dim(), found: x.len() });
    }
    Ok(())
}

/// The distribution of posterior moments a signal induces.
pub fn induce_moment_distribution(signal: &Signal, map: &MomentMap) -> Result<MomentDistribution> {
    check_states(map, signal.state_count())?;
    MomentDistribution::merged(
        signal.atoms().iter().map(|a| MomentAtom { weight: a.weight, x: map.mean(&a.posterior) }).collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexOrderResult {
    pub holds: bool,
    /// π[i][j]: mass moved from G-atom i to F₀-atom j.
    pub coupling: Option<Vec<Vec<f64>>>,
}

/// Strassen test for G ≤cx F₀: is there a coupling with marginals G and F₀
/// whose conditional means given each G-atom are that atom?
pub fn check_convex_order(g: &MomentDistribution, f0: &MomentDistribution) -> Result<ConvexOrderResult> {
    if g.dim() != f0.dim() {
        return Err(Error::DimensionMismatch { expected: f0.dim(), found: g.dim() });
    }
    let (k, m, dim) = (g.len(), f0.len(), g.dim());
    let idx = |i: usize, j: usize| i * m + j;
    let mut lp = LinearProgram::new(vec![0.0; k * m]);
    for (i, a) in g.atoms().iter().enumerate() {
        lp.add_eq_sparse(&(0..m).map(|j| (idx(i, j), 1.0)).collect::<Vec<_>>(), a.weight);
        for d in 0..dim {
            let row: Vec<(usize, f64)> = f0.atoms().iter().enumerate().map(|(j, b)| (idx(i, j), b.x[d] - a.x[d])).collect();
            lp.add_eq_sparse(&row, 0.0);
        }
    }
    for (j, b) in f0.atoms().iter().enumerate() {
        lp.add_eq_sparse(&(0..k).map(|i| (idx(i, j), 1.0)).collect::<Vec<_>>(), b.weight);
    }
    let sol = solve_lp(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => ConvexOrderResult {
            holds: true,
            coupling: Some((0..k).map(|i| sol.x[i * m..(i + 1) * m].to_vec()).collect()),
        },
        _ => ConvexOrderResult { holds: false, coupling: None },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSolution {
    pub g: MomentDistribution,
    pub value: f64,
    /// Posterior signal in state space: each used moment point with its
    /// conditional belief μ_x(ω) = π(x, ω)/w(x).
    pub signal: Signal,
    /// State-row multipliers; a dual-feasible price in state space.
    pub price: PriceFunction,
    /// Per candidate point, the multiplier on its barycenter rows.
    pub slopes: Vec<Vec<f64>>,
}

/// Maximizes Σ v(x)·w(x) over couplings π(x, ω) ≥ 0 with state marginal μ₀
/// and Σ_ω π(x, ω)(m(ω) − x) = 0 for every candidate x.
pub fn solve_moment_primal(
    prior: &Prior,
    map: &MomentMap,
    v: &MomentObjective,
    candidate_xs: &[Vec<f64>],
) -> Result<MomentSolution> {
    let n = prior.len();
    check_states(map, n)?;
    if candidate_xs.is_empty() {
        return Err(Error::InvalidInput("no candidate moments".into()));
    }
    for x in candidate_xs {
        check_dim(map, x)?;
    }
    let (k, dim) = (candidate_xs.len(), map.dim());
    let vals: Vec<f64> = candidate_xs.iter().map(|x| v.eval(x)).collect::<Result<_>>()?;
    let idx = |i: usize, w: usize| i * n + w;
    let mut c = vec![0.0; k * n];
    for i in 0..k {
        for w in 0..n {
            c[idx(i, w)] = -vals[i];
        }
    }
    let mut lp = LinearProgram::new(c);
    for (w, &p) in prior.probs().iter().enumerate() {
        lp.add_eq_sparse(&(0..k).map(|i| (idx(i, w), 1.0)).collect::<Vec<_>>(), p);
    }
    for (i, x) in candidate_xs.iter().enumerate() {
        for d in 0..dim {
            let row: Vec<(usize, f64)> = (0..n).map(|w| (idx(i, w), map.state(w)[d] - x[d])).collect();
            lp.add_eq_sparse(&row, 0.0);
        }
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible("prior moments are not reachable from the candidate points".into()))
        }
        LpStatus::Unbounded => return Err(Error::Unbounded("moment LP".into())),
    }
    let price = PriceFunction::new(sol.dual_eq[..n].iter().map(|y| -y).collect())?;
    let slopes = (0..k).map(|i| sol.dual_eq[n + i * dim..n + (i + 1) * dim].iter().map(|y| -y).collect()).collect();

    let support = Tolerances::DEFAULT.support;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    let mut posteriors = Vec::new();
    for (i, x) in candidate_xs.iter().enumerate() {
        let row = &sol.x[i * n..(i + 1) * n];
        let w: f64 = row.iter().sum();
        if w > support {
            atoms.push(MomentAtom { weight: w, x: x.clone() });
            weights.push(w);
            posteriors.push(Belief::normalized(row.to_vec())?);
        }
    }
    let total: f64 = weights.iter().sum();
    for a in &mut atoms {
        a.weight /= total;
    }
    let g = MomentDistribution::merged(atoms)?;
    let signal = Signal::from_weights(&weights, &posteriors, support)?;
    let target = MomentDistribution::pushforward(prior, map)?.mean();
    let drift = sup_distance(&g.mean(), &target);
    if drift > Tolerances::DEFAULT.plausibility {
        return Err(Error::NumericFailure(alloc::format!("moment solution mean drifted by {drift:e}")));
    }
    Ok(MomentSolution { value: g.expect(v)?, g, signal, price, slopes })
}

/// Anything usable as a price on moment space.
pub trait ConvexPrice {
    fn value(&self, x: &[f64]) -> f64;
    /// Some subgradient at `x`.
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSample {
    pub x: Vec<f64>,
    pub p: f64,
    pub subgradient: Vec<f64>,
    /// A belief attaining p(x), when the sample came from the pricing LP.
    pub argmin: Option<Belief>,
}

/// Sampled convex price: values and subgradients at query points, extended
/// off-sample by the maximum of the tangent planes.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPrice {
    samples: Vec<PriceSample>,
}

impl MomentPrice {
    pub fn new(samples: Vec<PriceSample>) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::InvalidInput("moment price has no samples".into()))?;
        let dim = first.x.len();
        for s in &samples {
            if s.x.len() != dim || s.subgradient.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.x.len().max(s.subgradient.len()) });
            }
        }
        Ok(MomentPrice { samples })
    }

    pub fn samples(&self) -> &[PriceSample] {
        &self.samples
    }

    /// Largest failure of p(xⱼ) ≥ p(xᵢ) + gᵢ·(xⱼ − xᵢ) over sample pairs.
    pub fn convexity_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.samples {
            for b in &self.samples {
                let diff: Vec<f64> = b.x.iter().zip(&a.x).map(|(u, v)| u - v).collect();
                worst = worst.max(a.p + dot(&a.subgradient, &diff) - b.p);
            }
        }
        worst
    }

    /// Largest v(x) − p(x) over samples.
    pub fn domination_deficit(&self, v: &MomentObjective) -> Result<f64> {
        self.samples.iter().map(|s| Ok(v.eval(&s.x)? - s.p)).try_fold(f64::NEG_INFINITY, |m, d: Result<f64>| Ok(m.max(d?)))
    }

    fn best(&self, x: &[f64]) -> &PriceSample {
        let at = |s: &PriceSample| s.p + dot(&s.subgradient, &x.iter().zip(&s.x).map(|(u, v)| u - v).collect::<Vec<_>>());
        let mut best = &self.samples[0];
        let mut val = at(best);
        for s in &self.samples[1..] {
            let t = at(s);
            if t > val {
                best = s;
                val = t;
            }
        }
        best
    }
}

impl ConvexPrice for MomentPrice {
    fn value(&self, x: &[f64]) -> f64 {
        let s = self.best(x);
        s.p + dot(&s.subgradient, &x.iter().zip(&s.x).map(|(u, v)| u - v).collect::<Vec<_>>())
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.best(x).subgradient.clone()
    }
}

/// p(x) = min ⟨P, μ⟩ over beliefs with E_μ[m] = x, with a minimizer and the
/// rhs sensitivity (a subgradient of p at x).
pub fn moment_price(price: &PriceFunction, map: &MomentMap, x: &[f64]) -> Result<PriceSample> {
    let n = map.states();
    if price.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: price.len() });
    }
    check_dim(map, x)?;
    let mut lp = LinearProgram::new(price.prices().to_vec());
    for (d, &xd) in x.iter().enumerate() {
        lp.add_eq((0..n).map(|w| map.state(w)[d]).collect(), xd);
    }
    lp.add_eq(vec![1.0; n], 1.0);
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::OutOfHull),
        LpStatus::Unbounded => return Err(Error::Unbounded("pricing LP".into())),
    }
    let dim = map.dim();
    // p(x) = ⟨y, x⟩ + y₀ in the dual; y is the slope.
    Ok(PriceSample {
        x: x.to_vec(),
        p: sol.objective_value,
        subgradient: sol.dual_eq[..dim].to_vec(),
        argmin: Some(Belief::normalized(sol.x)?),
    })
}

/// P(ω) = p(m(ω)).
pub fn lift_price(p: &dyn ConvexPrice, map: &MomentMap) -> Result<PriceFunction> {
    PriceFunction::new((0..map.states()).map(|w| p.value(map.state(w))).collect())
}

/// Samples p at `query_xs`, and checks p(m(ω)) ≤ P(ω) at every state.
pub fn push_down_price(price: &PriceFunction, map: &MomentMap, query_xs: &[Vec<f64>]) -> Result<MomentPrice> {
    let tol = Tolerances::DEFAULT.plausibility;
    for w in 0..map.states() {
        let s = moment_price(price, map, map.state(w))?;
        if s.p > price.prices()[w] + tol {
            return Err(Error::NumericFailure(alloc::format!(
                "pushed-down price exceeds P at state {w}: {} > {}",
                s.p,
                price.prices()[w]
            )));
        }
    }
    MomentPrice::new(query_xs.iter().map(|x| moment_price(price, map, x)).collect::<Result<_>>()?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObedienceReport {
    /// q at each probe point.
    pub q: Vec<f64>,
    /// r(a) at each query point.
    pub r: Vec<Vec<f64>>,
    /// Largest v(a) − q(w) − r(a)·(a − w) over (a, w) pairs.
    pub max_violation: f64,
    /// (query index, probe index) pairs above the tolerance.
    pub violations: Vec<(usize, usize)>,
}

/// q = p and r = ∂p, checked against q(w) + r(a)·(a − w) ≥ v(a) for every
/// query a and probe w.
pub fn obedience_multipliers(
    p: &dyn ConvexPrice,
    v: &MomentObjective,
    query_as: &[Vec<f64>],
    probes: &[Vec<f64>],
    tol: f64,
) -> Result<ObedienceReport> {
    let q: Vec<f64> = probes.iter().map(|w| p.value(w)).collect();
    let r: Vec<Vec<f64>> = query_as.iter().map(|a| p.subgradient(a)).collect();
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for (i, a) in query_as.iter().enumerate() {
        let va = v.eval(a)?;
        for (j, w) in probes.iter().enumerate() {
            if w.len() != a.len() {
                return Err(Error::DimensionMismatch { expected: a.len(), found: w.len() });
            }
            let diff: Vec<f64> = a.iter().zip(w).map(|(x, y)| x - y).collect();
            let viol = va - q[j] - dot(&r[i], &diff);
            max_violation = max_violation.max(viol);
            if viol > tol {
                violations.push((i, j));
            }
        }
    }
    Ok(ObedienceReport { q, r, max_violation, violations })
}
