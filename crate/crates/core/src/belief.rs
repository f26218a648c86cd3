//! States, beliefs, priors, signals and prices.
//!
//! A belief is a dense probability vector over a finite state space. A
//! signal is a finitely supported distribution over beliefs; it is feasible
//! for a prior when its atoms average back to that prior.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    labels: Vec<String>,
    coords: Option<Vec<Vec<f64>>>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>, coords: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("state space must be non-empty".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidInput(format!("duplicate state label {l:?}")));
            }
        }
        if let Some(c) = &coords {
            if c.len() != labels.len() {
                return Err(Error::DimensionMismatch { expected: labels.len(), found: c.len() });
            }
            let dim = c[0].len();
            if dim == 0 {
                return Err(Error::InvalidInput("state coordinates must have dimension >= 1".into()));
            }
            if let Some(bad) = c.iter().find(|v| v.len() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
            }
        }
        Ok(Self { labels, coords })
    }

    /// States named `0..n` with no coordinates.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("{i}")).collect(), None)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }
}

/// A point of the probability simplex over the states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, Tolerances::DEFAULT.simplex)
    }

    pub fn with_tolerance(probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidBelief("empty probability vector".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < -tol) {
            return Err(Error::InvalidBelief(format!("entry {i} is {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidBelief(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Clamps tiny negatives to zero and rescales to unit sum. Meant for LP
    /// output that is already a belief up to rounding.
    pub fn normalized(mut probs: Vec<f64>) -> Result<Self> {
        for p in probs.iter_mut() {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidBelief("cannot normalize a zero vector".into()));
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        Ok(Self { probs })
    }

    /// The point mass on state `state`, built exactly.
    pub fn dirac(n: usize, state: usize) -> Self {
        assert!(state < n, "state {state} out of range for {n} states");
        let mut probs = alloc::vec![0.0; n];
        probs[state] = 1.0;
        Self { probs }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        Self { probs: alloc::vec![1.0 / n as f64; n] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// The state this belief puts all mass on, if it is a Dirac belief.
    pub fn dirac_state(&self) -> Option<usize> {
        let mut hit = None;
        for (i, &p) in self.probs.iter().enumerate() {
            if p == 1.0 {
                hit = Some(i);
            } else if p != 0.0 {
                return None;
            }
        }
        hit
    }

    pub fn sup_distance(&self, other: &Belief) -> f64 {
        sup_distance(&self.probs, &other.probs)
    }

    /// Lexicographic comparison of probability vectors.
    pub fn lex_cmp(&self, other: &Belief) -> core::cmp::Ordering {
        for (a, b) in self.probs.iter().zip(&other.probs) {
            match a.partial_cmp(b) {
                Some(core::cmp::Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        self.probs.len().cmp(&other.probs.len())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Prior belief; full support is recorded, not required.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    belief: Belief,
    full_support: bool,
}

impl Prior {
    pub fn new(belief: Belief) -> Self {
        let full_support = belief.probs().iter().all(|&p| p > 0.0);
        if !full_support {
            log::warn!("prior lacks full support; prices on null states are not pinned down");
        }
        Self { belief, full_support }
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Ok(Self::new(Belief::new(probs)?))
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    pub fn probs(&self) -> &[f64] {
        self.belief.probs()
    }

    pub fn len(&self) -> usize {
        self.belief.len()
    }

    pub fn is_empty(&self) -> bool {
        self.belief.is_empty()
    }

    pub fn full_support(&self) -> bool {
        self.full_support
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub posterior: Belief,
}

/// A distribution of posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    atoms: Vec<Atom>,
}

impl Signal {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let tol = Tolerances::DEFAULT.simplex;
        let Some(first) = atoms.first() else {
            return Err(Error::InvalidSignal("signal has no atoms".into()));
        };
        let n = first.posterior.len();
        for a in &atoms {
            if a.posterior.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: a.posterior.len() });
            }
            if !a.weight.is_finite() || a.weight < -tol {
                return Err(Error::InvalidSignal(format!("negative weight {}", a.weight)));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidSignal(format!("weights sum to {total}")));
        }
        Ok(Self { atoms })
    }

    /// Builds a signal from raw LP weights: clamps dust, drops atoms at or
    /// below `support_tol`, renormalizes.
    pub fn from_weights(weights: &[f64], posteriors: &[Belief], support_tol: f64) -> Result<Self> {
        let mut atoms: Vec<Atom> = weights
            .iter()
            .zip(posteriors)
            .filter(|(w, _)| **w > support_tol)
            .map(|(w, p)| Atom { weight: *w, posterior: p.clone() })
            .collect();
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidSignal("no atom carries positive weight".into()));
        }
        atoms.iter_mut().for_each(|a| a.weight /= total);
        Self::new(atoms)
    }

    /// Signal revealing nothing: the prior with probability one.
    pub fn no_disclosure(prior: &Prior) -> Self {
        Self { atoms: alloc::vec![Atom { weight: 1.0, posterior: prior.belief().clone() }] }
    }

    /// Signal revealing the state: Dirac posteriors weighted by the prior.
    pub fn full_disclosure(prior: &Prior) -> Self {
        let n = prior.len();
        let atoms = prior
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, p)| Atom { weight: *p, posterior: Belief::dirac(n, i) })
            .collect();
        Self { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn state_count(&self) -> usize {
        self.atoms[0].posterior.len()
    }

    /// Atoms with weight above `tol`.
    pub fn support(&self, tol: f64) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(move |a| a.weight > tol)
    }

    pub fn barycenter(&self) -> Vec<f64> {
        let mut bar = alloc::vec![0.0; self.state_count()];
        for a in &self.atoms {
            for (b, p) in bar.iter_mut().zip(a.posterior.probs()) {
                *b += a.weight * p;
            }
        }
        bar
    }

    /// Errors unless the signal is Bayes-plausible for `prior`.
    pub fn check_plausible(&self, prior: &Prior, tol: f64) -> Result<()> {
        let r = bayes_plausibility_residual(self, prior)?;
        if r > tol {
            return Err(Error::InvalidSignal(format!("Bayes plausibility residual {r:e}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceFunction {
    prices: Vec<f64>,
}

impl PriceFunction {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if let Some(p) = prices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite price {p}")));
        }
        Ok(Self { prices })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { prices: alloc::vec![c; n] }
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// ⟨P, μ⟩, the cost of belief `mu` at these prices.
    pub fn cost(&self, mu: &Belief) -> f64 {
        dot(&self.prices, mu.probs())
    }

    /// Adds `delta` to every state price.
    pub fn shifted(&self, delta: f64) -> Self {
        Self { prices: self.prices.iter().map(|p| p + delta).collect() }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.prices
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Σ μ[i]·f[i].
pub fn expectation(mu: &Belief, f: &[f64]) -> Result<f64> {
    if f.len() != mu.len() {
        return Err(Error::DimensionMismatch { expected: mu.len(), found: f.len() });
    }
    Ok(dot(mu.probs(), f))
}

/// ‖Σ wᵢμᵢ − μ₀‖∞.
pub fn bayes_plausibility_residual(sig: &Signal, prior: &Prior) -> Result<f64> {
    if sig.state_count() != prior.len() {
        return Err(Error::DimensionMismatch { expected: prior.len(), found: sig.state_count() });
    }
    Ok(sup_distance(&sig.barycenter(), prior.probs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn expectation_examples() {
        let d = Belief::dirac(3, 1);
        assert_eq!(expectation(&d, &[7.0, -2.5, 9.0]).unwrap(), -2.5);
        assert_eq!(expectation(&Belief::uniform(2), &[0.0, 1.0]).unwrap(), 0.5);
        let mu = Belief::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(expectation(&mu, &[4.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            expectation(&mu, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn plausibility_residual_examples() {
        let prior = Prior::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(bayes_plausibility_residual(&Signal::no_disclosure(&prior), &prior).unwrap(), 0.0);
        assert!(bayes_plausibility_residual(&Signal::full_disclosure(&prior), &prior).unwrap() <= 1e-12);

        let binary = Prior::from_probs(vec![0.5, 0.5]).unwrap();
        let sig = Signal::new(vec![Atom { weight: 1.0, posterior: Belief::dirac(2, 1) }]).unwrap();
        assert_eq!(bayes_plausibility_residual(&sig, &binary).unwrap(), 0.5);
    }

    #[test]
    fn belief_validation() {
        assert!(Belief::new(vec![0.5, 0.6]).is_err());
        assert!(Belief::new(vec![-0.1, 1.1]).is_err());
        assert!(Belief::new(vec![]).is_err());
        assert!(Belief::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        let d = Belief::dirac(4, 2);
        assert_eq!(d.probs(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(d.dirac_state(), Some(2));
        assert_eq!(Belief::uniform(2).dirac_state(), None);
    }

    #[test]
    fn signal_validation() {
        let a = |w: f64, p: Vec<f64>| Atom { weight: w, posterior: Belief::new(p).unwrap() };
        assert!(Signal::new(vec![a(0.5, vec![1.0, 0.0]), a(0.4, vec![0.0, 1.0])]).is_err());
        assert!(Signal::new(vec![a(-0.5, vec![1.0, 0.0]), a(1.5, vec![0.0, 1.0])]).is_err());
        assert!(Signal::new(vec![]).is_err());
        let prior = Prior::from_probs(vec![0.5, 0.5]).unwrap();
        let s = Signal::new(vec![a(0.5, vec![1.0, 0.0]), a(0.5, vec![0.0, 1.0])]).unwrap();
        assert!(s.check_plausible(&prior, 1e-8).is_ok());
        let skew = Signal::new(vec![a(0.6, vec![1.0, 0.0]), a(0.4, vec![0.0, 1.0])]).unwrap();
        assert!(skew.check_plausible(&prior, 1e-8).is_err());
    }

    #[test]
    fn state_space_validation() {
        let labels = |v: &[&str]| v.iter().map(|s| String::from(*s)).collect::<Vec<_>>();
        assert!(StateSpace::new(labels(&["a", "a"]), None).is_err());
        assert!(StateSpace::new(labels(&[]), None).is_err());
        assert!(StateSpace::new(labels(&["a", "b"]), Some(vec![vec![0.0], vec![1.0, 2.0]])).is_err());
        let s = StateSpace::new(labels(&["a", "b"]), Some(vec![vec![0.0, 1.0], vec![1.0, 2.0]])).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn prior_records_support() {
        assert!(Prior::from_probs(vec![0.5, 0.5]).unwrap().full_support());
        assert!(!Prior::from_probs(vec![1.0, 0.0]).unwrap().full_support());
    }
}
