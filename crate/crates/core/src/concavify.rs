//! Concave closure of V at the prior, with an optimal signal and price.
//!
//! The primal side is the grid LP
//!
//! ```text
//! maximize Σ wᵢ V(μᵢ)  s.t.  Σ wᵢ μᵢ = μ₀,  Σ wᵢ = 1,  w ≥ 0
//! ```
//!
//! over a finite candidate set. The price is read off the duals of the
//! barycenter rows with the normalization dual folded in, so that
//! ⟨P, μ₀⟩ equals the optimal value and ⟨P, μ⟩ ≥ V(μ) on every candidate.
//! The dual side is a cutting-plane loop over the same semi-infinite
//! constraint family.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::belief::{dot, Atom, Belief, PriceFunction, Prior, Signal};
use crate::error::{Error, Result};
use crate::linalg::null_vector;
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::objective::{evaluate_all, ObjectiveSpec};
use crate::tol::Tolerances;

/// Largest mesh `simplex_mesh` builds unless told otherwise.
pub const DEFAULT_MESH_LIMIT: usize = 250_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    UserGrid,
    SimplexMesh(usize),
    Adaptive,
}

/// Posteriors the primal LP may use. Always contains every Dirac belief,
/// so full disclosure is available and the LP is feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    beliefs: Vec<Belief>,
    provenance: Provenance,
}

impl CandidateSet {
    /// Deduplicates `beliefs` and appends any missing Dirac beliefs.
    pub fn new(beliefs: Vec<Belief>, provenance: Provenance) -> Result<Self> {
        let Some(first) = beliefs.first() else {
            return Err(Error::InvalidInput("candidate set is empty".into()));
        };
        let n = first.len();
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(beliefs.len() + n);
        for b in beliefs {
            if b.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: b.len() });
            }
            if seen.insert(belief_key(&b)) {
                out.push(b);
            }
        }
        for i in 0..n {
            let d = Belief::dirac(n, i);
            if seen.insert(belief_key(&d)) {
                out.push(d);
            }
        }
        Ok(Self { beliefs: out, provenance })
    }

    /// The n Dirac beliefs.
    pub fn vertices(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("candidate set is empty".into()));
        }
        Ok(Self { beliefs: (0..n).map(|i| Belief::dirac(n, i)).collect(), provenance: Provenance::UserGrid })
    }

    pub fn beliefs(&self) -> &[Belief] {
        &self.beliefs
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn state_count(&self) -> usize {
        self.beliefs[0].len()
    }

    /// This set plus `extra`, keeping provenance.
    pub fn extended(&self, extra: impl IntoIterator<Item = Belief>) -> Result<Self> {
        let mut all = self.beliefs.clone();
        all.extend(extra);
        Self::new(all, self.provenance)
    }
}

/// Quantized key for deduplicating beliefs.
pub(crate) fn belief_key(b: &Belief) -> Vec<i64> {
    b.probs().iter().map(|p| libm::round(p * (1u64 << 40) as f64) as i64).collect()
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Every belief with coordinates in {0, 1/k, …, 1}, in lexicographically
/// decreasing order of the count vector.
pub fn simplex_mesh(n: usize, k: usize) -> Result<CandidateSet> {
    simplex_mesh_limited(n, k, DEFAULT_MESH_LIMIT)
}

pub fn simplex_mesh_limited(n: usize, k: usize, limit: usize) -> Result<CandidateSet> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput("mesh needs n >= 1 states and resolution k >= 1".into()));
    }
    let count = binomial((n + k - 1) as u128, k as u128);
    if count > limit as u128 {
        return Err(Error::MeshTooLarge { count, limit });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut counts = vec![0usize; n];
    fill_mesh(&mut counts, 0, k, k, &mut out);
    Ok(CandidateSet { beliefs: out, provenance: Provenance::SimplexMesh(k) })
}

fn fill_mesh(counts: &mut [usize], idx: usize, left: usize, k: usize, out: &mut Vec<Belief>) {
    let n = counts.len();
    if idx == n - 1 {
        counts[idx] = left;
        out.push(mesh_belief(counts, k));
        return;
    }
    for c in (0..=left).rev() {
        counts[idx] = c;
        fill_mesh(counts, idx + 1, left - c, k, out);
    }
    counts[idx] = 0;
}

fn mesh_belief(counts: &[usize], k: usize) -> Belief {
    if let Some(i) = counts.iter().position(|&c| c == k) {
        return Belief::dirac(counts.len(), i);
    }
    let probs = counts.iter().map(|&c| c as f64 / k as f64).collect();
    Belief::normalized(probs).expect("mesh counts sum to k")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavifyResult {
    /// V̂(μ₀) as attained by `signal`.
    pub value: f64,
    pub signal: Signal,
    pub price: PriceFunction,
    /// ⟨P, μ₀⟩.
    pub dual_value: f64,
    /// `dual_value − value`; non-negative up to rounding by weak duality.
    pub gap: f64,
    /// max over the search set of V(μ) − ⟨P, μ⟩.
    pub max_violation: f64,
    /// LP solves performed.
    pub iterations: usize,
}

fn check_dims(prior: &Prior, n: usize) -> Result<()> {
    if prior.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: prior.len() });
    }
    Ok(())
}

/// Grid LP over `cands`.
pub fn concavify_grid(prior: &Prior, obj: &ObjectiveSpec, cands: &CandidateSet) -> Result<ConcavifyResult> {
    let values = evaluate_all(obj, cands.beliefs())?;
    concavify_values(prior, cands, &values)
}

/// Grid LP with V already evaluated on `cands` (`values[i] = V(cands[i])`).
pub fn concavify_values(prior: &Prior, cands: &CandidateSet, values: &[f64]) -> Result<ConcavifyResult> {
    let n = cands.state_count();
    check_dims(prior, n)?;
    if values.len() != cands.len() {
        return Err(Error::DimensionMismatch { expected: cands.len(), found: values.len() });
    }
    let beliefs = cands.beliefs();
    let mut lp = LinearProgram::new(values.iter().map(|v| -v).collect());
    for (omega, &p0) in prior.probs().iter().enumerate() {
        lp.add_eq(beliefs.iter().map(|b| b.probs()[omega]).collect(), p0);
    }
    lp.add_eq(vec![1.0; beliefs.len()], 1.0);
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible("prior is not a mixture of the candidate beliefs".into()))
        }
        LpStatus::Unbounded => return Err(Error::Unbounded("grid LP".into())),
    }
    let intercept = sol.dual_eq[n];
    let price = PriceFunction::new(sol.dual_eq[..n].iter().map(|y| -(y + intercept)).collect())?;
    let tol = Tolerances::DEFAULT;
    let signal = Signal::from_weights(&sol.x, beliefs, tol.support)?;
    let atom_values: Vec<f64> = beliefs
        .iter()
        .zip(values)
        .zip(&sol.x)
        .filter(|(_, w)| **w > tol.support)
        .map(|((_, v), _)| *v)
        .collect();
    let signal = reduce_support_valued(&signal, prior, &atom_values)?;
    let value = signal_value(&signal, beliefs, values);
    let dual_value = price.cost(prior.belief());
    let max_violation = beliefs
        .iter()
        .zip(values)
        .map(|(b, v)| v - price.cost(b))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ConcavifyResult {
        value,
        signal,
        price,
        dual_value,
        gap: dual_value - value,
        max_violation,
        iterations: 1,
    })
}

/// Σ wᵢV(μᵢ) with V looked up among candidate values.
fn signal_value(signal: &Signal, beliefs: &[Belief], values: &[f64]) -> f64 {
    signal
        .atoms()
        .iter()
        .map(|a| {
            let key = belief_key(&a.posterior);
            let v = beliefs
                .iter()
                .position(|b| belief_key(b) == key)
                .map(|i| values[i])
                .expect("signal atoms come from the candidate set");
            a.weight * v
        })
        .sum()
}

/// Σ wᵢV(μᵢ).
pub fn signal_value_of(signal: &Signal, obj: &ObjectiveSpec) -> Result<f64> {
    signal.atoms().iter().map(|a| Ok(a.weight * obj.eval(&a.posterior)?)).sum()
}

/// A most violated dual constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub belief: Belief,
    /// V(μ) − ⟨P, μ⟩; negative when the price is strictly feasible on the set.
    pub violation: f64,
}

/// Maximizes V(μ) − ⟨P, μ⟩ over `search`. Ties go to the lexicographically
/// smallest belief. For a piecewise-linear-max V the maximum over the whole
/// simplex sits at a vertex, which every candidate set contains, so the
/// answer is exact for that variant.
pub fn separation_oracle(price: &PriceFunction, obj: &ObjectiveSpec, search: &CandidateSet) -> Result<Separation> {
    let values = evaluate_all(obj, search.beliefs())?;
    Ok(separate_values(price, search.beliefs(), &values))
}

fn separate_values(price: &PriceFunction, beliefs: &[Belief], values: &[f64]) -> Separation {
    let mut best: Option<(usize, f64)> = None;
    for (i, (b, v)) in beliefs.iter().zip(values).enumerate() {
        let viol = v - price.cost(b);
        best = match best {
            None => Some((i, viol)),
            Some((j, bv)) => {
                if viol > bv || (viol == bv && b.lex_cmp(&beliefs[j]).is_lt()) {
                    Some((i, viol))
                } else {
                    Some((j, bv))
                }
            }
        };
    }
    let (i, violation) = best.expect("search set is non-empty");
    Separation { belief: beliefs[i].clone(), violation }
}

/// Where the cutting-plane loop looks for violated constraints.
#[derive(Debug, Clone, PartialEq)]
pub enum Refiner {
    Fixed(CandidateSet),
    /// Start from the mesh of resolution `initial_k`; when no cut is found,
    /// double the resolution locally around the current support, up to
    /// `max_k` and at most `budget` search points.
    Adaptive { initial_k: usize, max_k: usize, budget: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuttingPlaneOptions {
    /// A cut is added only when violated by more than this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for CuttingPlaneOptions {
    fn default() -> Self {
        Self { tol: Tolerances::DEFAULT.cut, max_iters: 500 }
    }
}

struct SearchState {
    beliefs: Vec<Belief>,
    values: Vec<f64>,
    keys: BTreeSet<Vec<i64>>,
}

impl SearchState {
    fn add(&mut self, obj: &ObjectiveSpec, b: Belief) -> Result<()> {
        if self.keys.insert(belief_key(&b)) {
            self.values.push(obj.eval(&b)?);
            self.beliefs.push(b);
        }
        Ok(())
    }
}

/// Solves the dual by cutting planes: minimize ⟨P, μ₀⟩ subject to
/// ⟨P, μ⟩ ≥ V(μ) for accumulated cut beliefs, starting from the Dirac cuts.
pub fn solve_dual_cutting_plane(
    prior: &Prior,
    obj: &ObjectiveSpec,
    refiner: &Refiner,
    opts: &CuttingPlaneOptions,
) -> Result<ConcavifyResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("cutting-plane tolerance must be positive".into()));
    }
    let n = prior.len();
    let (search, mut adaptive_k) = match refiner {
        Refiner::Fixed(c) => {
            check_dims(prior, c.state_count())?;
            (c.beliefs().to_vec(), None)
        }
        Refiner::Adaptive { initial_k, .. } => (simplex_mesh(n, *initial_k)?.beliefs, Some(*initial_k)),
    };
    let mut state = SearchState {
        values: evaluate_all(obj, &search)?,
        keys: search.iter().map(belief_key).collect(),
        beliefs: search,
    };

    let mut cuts: Vec<Belief> = (0..n).map(|i| Belief::dirac(n, i)).collect();
    let mut cut_values: Vec<f64> = evaluate_all(obj, &cuts)?;
    let mut cut_keys: BTreeSet<Vec<i64>> = cuts.iter().map(belief_key).collect();
    let mut best: Option<ConcavifyResult> = None;

    for iteration in 1..=opts.max_iters {
        let (price, weights) = restricted_dual(prior, &cuts, &cut_values)?;
        let signal = Signal::from_weights(&weights, &cuts, Tolerances::DEFAULT.support)?;
        let value: f64 = weights.iter().zip(&cut_values).map(|(w, v)| w.max(0.0) * v).sum::<f64>()
            / weights.iter().map(|w| w.max(0.0)).sum::<f64>();
        let dual_value = price.cost(prior.belief());
        let sep = separate_values(&price, &state.beliefs, &state.values);
        let result = ConcavifyResult {
            value,
            signal,
            price,
            dual_value,
            gap: dual_value - value,
            max_violation: sep.violation,
            iterations: iteration,
        };
        log::debug!("cutting plane {iteration}: value {} violation {:e}", result.value, sep.violation);

        if sep.violation > opts.tol {
            if !cut_keys.insert(belief_key(&sep.belief)) {
                log::warn!("separating belief is already a cut; stopping");
                return Ok(result);
            }
            cut_values.push(obj.eval(&sep.belief)?);
            cuts.push(sep.belief);
            best = Some(result);
            continue;
        }
        match (refiner, adaptive_k) {
            (Refiner::Adaptive { max_k, budget, .. }, Some(k)) if k * 2 <= *max_k && state.beliefs.len() < *budget => {
                let k2 = k * 2;
                adaptive_k = Some(k2);
                let centers: Vec<Belief> = result.signal.atoms().iter().map(|a| a.posterior.clone()).collect();
                for c in centers {
                    for b in local_patch(&c, k2) {
                        if state.beliefs.len() >= *budget {
                            break;
                        }
                        state.add(obj, b)?;
                    }
                }
                best = Some(result);
            }
            _ => return Ok(result),
        }
    }
    Err(Error::IterationLimit(Box::new(best.expect("at least one iteration ran"))))
}

/// Restricted dual: min ⟨P, μ₀⟩ s.t. ⟨P, μ_c⟩ ≥ V_c. Returns the price and
/// the primal weights on the cuts read off the row multipliers.
fn restricted_dual(prior: &Prior, cuts: &[Belief], values: &[f64]) -> Result<(PriceFunction, Vec<f64>)> {
    let n = prior.len();
    let mut lp = LinearProgram::new(prior.probs().to_vec());
    for j in 0..n {
        lp.set_free(j);
    }
    for (b, v) in cuts.iter().zip(values) {
        lp.add_ge(b.probs().to_vec(), *v);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericFailure("restricted dual is not bounded".into()));
    }
    let weights = sol.dual_ub.iter().map(|y| -y).collect();
    Ok((PriceFunction::new(sol.x)?, weights))
}

/// Mesh points of resolution `k` near `center`: its rounding and moves of
/// one or two grid steps between any two coordinates.
fn local_patch(center: &Belief, k: usize) -> Vec<Belief> {
    let n = center.len();
    let counts = round_to_grid(center.probs(), k);
    let mut out = vec![mesh_belief(&counts, k)];
    for step in 1..=2usize {
        for i in 0..n {
            for j in 0..n {
                if i == j || counts[j] < step {
                    continue;
                }
                let mut c = counts.clone();
                c[i] += step;
                c[j] -= step;
                out.push(mesh_belief(&c, k));
            }
        }
    }
    out
}

/// Largest-remainder rounding of a probability vector to counts summing to `k`.
fn round_to_grid(p: &[f64], k: usize) -> Vec<usize> {
    let scaled: Vec<f64> = p.iter().map(|x| x * k as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|x| libm::floor(*x).max(0.0) as usize).collect();
    let mut left = k.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - counts[a] as f64;
        let rb = scaled[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for i in order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Merges duplicate posteriors and removes atoms until the posteriors are
/// affinely independent (at most n atoms). Barycenter is preserved; the
/// value Σ wᵢV(μᵢ) is preserved when V is affine on the atoms.
pub fn reduce_support(signal: &Signal, prior: &Prior) -> Result<Signal> {
    let zeros = vec![0.0; signal.len()];
    reduce_support_valued(signal, prior, &zeros)
}

/// As [`reduce_support`], moving only in directions that do not lower
/// Σ wᵢ values[i]; at an optimal signal the value is unchanged.
pub fn reduce_support_valued(signal: &Signal, prior: &Prior, values: &[f64]) -> Result<Signal> {
    let tol = Tolerances::DEFAULT;
    if values.len() != signal.len() {
        return Err(Error::DimensionMismatch { expected: signal.len(), found: values.len() });
    }
    signal.check_plausible(prior, tol.plausibility)?;

    let mut atoms: Vec<(f64, Belief, f64)> = Vec::new();
    for (a, v) in signal.atoms().iter().zip(values) {
        if let Some(existing) = atoms.iter_mut().find(|(_, b, _)| b.sup_distance(&a.posterior) <= 1e-12) {
            existing.0 += a.weight;
        } else {
            atoms.push((a.weight, a.posterior.clone(), *v));
        }
    }
    atoms.retain(|(w, _, _)| *w > 0.0);

    loop {
        let cols: Vec<Vec<f64>> = atoms
            .iter()
            .map(|(_, b, _)| {
                let mut c = b.probs().to_vec();
                c.push(1.0);
                c
            })
            .collect();
        let Some(mut d) = null_vector(&cols, 1e-10) else { break };
        let gain: f64 = d.iter().zip(&atoms).map(|(d, a)| d * a.2).sum();
        if gain < 0.0 {
            d.iter_mut().for_each(|x| *x = -*x);
        }
        let (drop, step) = d
            .iter()
            .zip(&atoms)
            .enumerate()
            .filter(|(_, (d, _))| **d < 0.0)
            .map(|(i, (d, a))| (i, a.0 / -d))
            .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if drop == usize::MAX {
            break;
        }
        for (a, di) in atoms.iter_mut().zip(&d) {
            a.0 += step * di;
        }
        atoms.remove(drop);
        atoms.retain(|(w, _, _)| *w > tol.support);
    }
    let total: f64 = atoms.iter().map(|a| a.0).sum();
    Signal::new(atoms.into_iter().map(|(w, b, _)| Atom { weight: w / total, posterior: b }).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeCheck {
    pub probe: Belief,
    /// V̂(μ) − V̂(μ₀) − ⟨P, μ − μ₀⟩; positive means the inequality fails.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupergradientReport {
    pub checks: Vec<ProbeCheck>,
    /// Indices into `checks` with excess above the tolerance.
    pub violators: Vec<usize>,
    pub passes: bool,
}

/// Checks that μ ↦ V̂(μ₀) + ⟨P, μ − μ₀⟩ supports V̂ at every probe, with V̂
/// computed by the grid LP on `cands`.
pub fn check_supergradient(
    price: &PriceFunction,
    prior: &Prior,
    obj: &ObjectiveSpec,
    probes: &[Belief],
    cands: &CandidateSet,
    tol: f64,
) -> Result<SupergradientReport> {
    if probes.is_empty() {
        return Err(Error::InvalidInput("supergradient check needs at least one probe".into()));
    }
    let values = evaluate_all(obj, cands.beliefs())?;
    let base = concavify_values(prior, cands, &values)?.value;
    let mut checks = Vec::with_capacity(probes.len());
    let mut violators = Vec::new();
    for (i, probe) in probes.iter().enumerate() {
        let at = concavify_values(&Prior::new(probe.clone()), cands, &values)?.value;
        let shift: Vec<f64> = probe.probs().iter().zip(prior.probs()).map(|(a, b)| a - b).collect();
        let excess = at - base - dot(price.prices(), &shift);
        if excess > tol {
            violators.push(i);
        }
        checks.push(ProbeCheck { probe: probe.clone(), excess });
    }
    Ok(SupergradientReport { passes: violators.is_empty(), checks, violators })
}
