//! Product objective v(x₁, x₂) = x₁x₂ on two-dimensional moments.
//!
//! Revealing the score θ = ω₂ + aω₁ is optimal whenever the induced
//! posterior means lie on one line x₂ = ax₁ + b; the price
//! p(x) = x₁x₂ + (x₂ − ax₁ − b)²/(4a) certifies it.

use alloc::vec;
use alloc::vec::Vec;

use crate::belief::{Atom, Belief, PriceFunction, Prior, Signal};
use crate::cert::{check_complementary_slackness, feasibility_report, Certificate, Verdict};
use crate::concavify::CandidateSet;
use crate::error::{Error, Result};
use crate::moment::{lift_price, ConvexPrice, MomentAtom, MomentDistribution};
use crate::objective::{MomentMap, MomentObjective, ObjectiveSpec};
use crate::tol::Tolerances;

/// Default θ grouping tolerance.
pub const THETA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaAtom {
    pub theta: f64,
    pub weight: f64,
    /// E[ω | θ].
    pub mean: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub is_line: bool,
    pub b: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRevelation {
    pub a: f64,
    pub theta_atoms: Vec<ThetaAtom>,
    pub signal: Signal,
    pub g: MomentDistribution,
    pub line_fit: LineFit,
}

fn check_map(map: &MomentMap, prior: &Prior) -> Result<()> {
    if map.dim() != 2 {
        return Err(Error::InvalidInput(alloc::format!("need two-dimensional states, got {}", map.dim())));
    }
    if map.states() != prior.len() {
        return Err(Error::DimensionMismatch { expected: map.states(), found: prior.len() });
    }
    Ok(())
}

fn check_slope(a: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!("slope must be positive, got {a}")));
    }
    Ok(())
}

pub fn linear_revelation_signal(prior: &Prior, map: &MomentMap, a: f64) -> Result<LinearRevelation> {
    linear_revelation_signal_with(prior, map, a, THETA_TOL)
}

/// Groups states by θ = ω₂ + aω₁ (values within `group_tol` of a group's
/// first θ join it), in increasing θ order.
pub fn linear_revelation_signal_with(prior: &Prior, map: &MomentMap, a: f64, group_tol: f64) -> Result<LinearRevelation> {
    check_slope(a)?;
    check_map(map, prior)?;
    let n = prior.len();
    let mut order: Vec<(f64, usize)> = (0..n)
        .filter(|&w| prior.probs()[w] > 0.0)
        .map(|w| (map.state(w)[1] + a * map.state(w)[0], w))
        .collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (theta, w) in order {
        match groups.last_mut() {
            Some((t, members)) if theta - *t <= group_tol => members.push(w),
            _ => groups.push((theta, vec![w])),
        }
    }
    let mut theta_atoms = Vec::with_capacity(groups.len());
    let mut atoms = Vec::with_capacity(groups.len());
    for (theta, members) in groups {
        let weight: f64 = members.iter().map(|&w| prior.probs()[w]).sum();
        let mut post = vec![0.0; n];
        for &w in &members {
            post[w] = prior.probs()[w] / weight;
        }
        let posterior = Belief::normalized(post)?;
        let m = map.mean(&posterior);
        theta_atoms.push(ThetaAtom { theta, weight, mean: [m[0], m[1]] });
        atoms.push(Atom { weight, posterior });
    }
    let signal = Signal::new(atoms)?;
    let g = MomentDistribution::new(
        theta_atoms.iter().map(|t| MomentAtom { weight: t.weight, x: t.mean.to_vec() }).collect(),
    )?;
    let line_fit = check_line_support(&g, a, Tolerances::DEFAULT.plausibility)?;
    Ok(LinearRevelation { a, theta_atoms, signal, g, line_fit })
}

/// Fits x₂ = ax₁ + b with b the G-weighted mean of x₂ − ax₁.
pub fn check_line_support(g: &MomentDistribution, a: f64, tol: f64) -> Result<LineFit> {
    if g.dim() != 2 {
        return Err(Error::InvalidInput("line support needs two-dimensional moments".into()));
    }
    let offset = |x: &[f64]| x[1] - a * x[0];
    let b: f64 = g.atoms().iter().map(|at| at.weight * offset(&at.x)).sum();
    let residual = g.atoms().iter().map(|at| (offset(&at.x) - b).abs()).fold(0.0, f64::max);
    Ok(LineFit { is_line: residual <= tol, b, residual })
}

/// p(x) = x₁x₂ + (x₂ − ax₁ − b)²/(4a).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormPrice {
    pub a: f64,
    pub b: f64,
}

impl ClosedFormPrice {
    pub fn hessian(&self) -> [[f64; 2]; 2] {
        [[self.a / 2.0, 0.5], [0.5, 1.0 / (2.0 * self.a)]]
    }

    pub fn hessian_det(&self) -> f64 {
        let h = self.hessian();
        h[0][0] * h[1][1] - h[0][1] * h[1][0]
    }

    pub fn hessian_trace(&self) -> f64 {
        let h = self.hessian();
        h[0][0] + h[1][1]
    }
}

impl ConvexPrice for ClosedFormPrice {
    fn value(&self, x: &[f64]) -> f64 {
        let r = x[1] - self.a * x[0] - self.b;
        x[0] * x[1] + r * r / (4.0 * self.a)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let r = x[1] - self.a * x[0] - self.b;
        vec![x[1] - r / 2.0, x[0] + r / (2.0 * self.a)]
    }
}

pub fn closed_form_price(a: f64, b: f64) -> Result<ClosedFormPrice> {
    check_slope(a)?;
    if !b.is_finite() {
        return Err(Error::InvalidInput("intercept must be finite".into()));
    }
    Ok(ClosedFormPrice { a, b })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevelationCertificate {
    pub revelation: LinearRevelation,
    pub price: ClosedFormPrice,
    /// |E_{F₀}[p] − E_G[x₁x₂]|.
    pub om_residual: f64,
    pub certificate: Certificate,
}

/// Certifies θ-revelation with the closed-form price. Optimal needs the
/// means on a line and a vanishing gap; otherwise the sufficient condition
/// does not apply and the verdict is FeasibleOnly (the price still
/// dominates v, so the certificate is a valid upper bound).
pub fn certify_linear_revelation(
    prior: &Prior,
    map: &MomentMap,
    a: f64,
    probes: &CandidateSet,
    tol: &Tolerances,
) -> Result<RevelationCertificate> {
    let revelation = linear_revelation_signal(prior, map, a)?;
    let price = closed_form_price(a, revelation.line_fit.b)?;
    let lifted: PriceFunction = lift_price(&price, map)?;
    let obj = ObjectiveSpec::MomentComposed { map: map.clone(), v: MomentObjective::Product };
    let primal_value = revelation.g.expect(&MomentObjective::Product)?;
    let dual_value = lifted.cost(prior.belief());
    let gap = dual_value - primal_value;
    let slackness = check_complementary_slackness(&revelation.signal, &lifted, &obj, tol.cut)?;
    let feasibility = feasibility_report(&lifted, &obj, probes, tol.cut)?;
    let verdict = if feasibility.max_violation > tol.cut {
        Verdict::Invalid
    } else if revelation.line_fit.is_line && gap.abs() <= tol.gap_target && slackness.passes {
        Verdict::Optimal
    } else {
        Verdict::FeasibleOnly
    };
    let certificate = Certificate {
        signal: revelation.signal.clone(),
        price: lifted,
        primal_value,
        dual_value,
        gap,
        plausibility_residual: crate::belief::bayes_plausibility_residual(&revelation.signal, prior)?,
        slackness,
        feasibility,
        verdict,
    };
    Ok(RevelationCertificate { om_residual: gap.abs(), revelation, price, certificate })
}

/// Change in E[x₁x₂] from merging atoms (β, x) and (β′, x′) at their barycenter.
pub fn pooling_gain(beta: f64, x: [f64; 2], beta2: f64, x2: [f64; 2]) -> Result<f64> {
    if !(beta > 0.0 && beta2 > 0.0) {
        return Err(Error::InvalidInput("pooled weights must be positive".into()));
    }
    Ok(-(beta * beta2) / (beta + beta2) * (x2[0] - x[0]) * (x2[1] - x[1]))
}

/// Every pair of atoms is componentwise comparable.
pub fn check_ordered_support(g: &MomentDistribution) -> bool {
    let tol = 1e-9;
    let atoms = g.atoms();
    atoms.iter().enumerate().all(|(i, p)| {
        atoms[i + 1..].iter().all(|q| {
            let le = p.x.iter().zip(&q.x).all(|(u, v)| *u <= v + tol);
            let ge = p.x.iter().zip(&q.x).all(|(u, v)| *u + tol >= *v);
            le || ge
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::sup_distance;
    use crate::concavify::simplex_mesh;

    fn ex3() -> (Prior, MomentMap) {
        let map = MomentMap::new(vec![
            vec![0.1, 0.3],
            vec![0.3, 0.1],
            vec![0.4, 0.6],
            vec![0.6, 0.4],
            vec![0.8, 0.9],
            vec![1.0, 0.7],
        ])
        .unwrap();
        (Prior::new(Belief::uniform(6)), map)
    }

    fn sym4() -> (Prior, MomentMap) {
        let map = MomentMap::new(vec![vec![0.0, 0.5], vec![0.5, 0.0], vec![0.5, 1.0], vec![1.0, 0.5]]).unwrap();
        (Prior::new(Belief::uniform(4)), map)
    }

    #[test]
    fn revelation_examples() {
        let (prior, map) = ex3();
        let r = linear_revelation_signal(&prior, &map, 1.0).unwrap();
        let thetas: Vec<f64> = r.theta_atoms.iter().map(|t| t.theta).collect();
        for (t, w) in thetas.iter().zip([0.4, 1.0, 1.7]) {
            assert!((t - w).abs() < 1e-12);
        }
        for (t, w) in r.theta_atoms.iter().zip([[0.2, 0.2], [0.5, 0.5], [0.9, 0.8]]) {
            assert!(sup_distance(&t.mean, &w) < 1e-12);
        }
        assert!(!r.line_fit.is_line);

        let (prior, map) = sym4();
        let r = linear_revelation_signal(&prior, &map, 1.0).unwrap();
        assert_eq!(r.theta_atoms.len(), 2);
        assert!((r.theta_atoms[0].theta - 0.5).abs() < 1e-15 && (r.theta_atoms[1].theta - 1.5).abs() < 1e-15);
        assert!(sup_distance(&r.theta_atoms[0].mean, &[0.25, 0.25]) < 1e-15);
        assert!(sup_distance(&r.theta_atoms[1].mean, &[0.75, 0.75]) < 1e-15);
        assert!(r.line_fit.is_line && r.line_fit.b.abs() < 1e-15);

        let one = MomentMap::new(vec![vec![0.3, 0.4]]).unwrap();
        let r = linear_revelation_signal(&Prior::new(Belief::dirac(1, 0)), &one, 2.0).unwrap();
        assert_eq!(r.theta_atoms.len(), 1);
        assert_eq!(r.theta_atoms[0].mean, [0.3, 0.4]);
        assert!(linear_revelation_signal(&prior, &map, 0.0).is_err());
        assert!(linear_revelation_signal(&prior, &map, -1.0).is_err());
    }

    #[test]
    fn line_fit_examples() {
        let (_, map) = ex3();
        let g = MomentDistribution::new(
            [[0.2, 0.2], [0.5, 0.5], [0.9, 0.8]].iter().map(|x| MomentAtom { weight: 1.0 / 3.0, x: x.to_vec() }).collect(),
        )
        .unwrap();
        let fit = check_line_support(&g, 1.0, 1e-8).unwrap();
        assert!(!fit.is_line);
        assert!((fit.b + 0.1 / 3.0).abs() < 1e-12);
        assert!((fit.residual - 0.2 / 3.0).abs() < 1e-12);
        let single = MomentDistribution::new(vec![MomentAtom { weight: 1.0, x: map.state(4).to_vec() }]).unwrap();
        let fit = check_line_support(&single, 3.0, 0.0).unwrap();
        assert!(fit.is_line && fit.residual == 0.0);
    }

    #[test]
    fn closed_form_examples() {
        let p = closed_form_price(1.0, 0.0).unwrap();
        assert_eq!(p.value(&[0.5, 0.5]), 0.25);
        assert_eq!(p.value(&[0.0, 1.0]), 0.25);
        assert_eq!(closed_form_price(2.0, 0.0).unwrap().value(&[0.0, 1.0]), 0.125);
        assert_eq!(p.hessian_det(), 0.0);
        assert!(p.hessian_trace() > 0.0);
        assert!(closed_form_price(0.0, 0.0).is_err());
        // Gradient against central differences.
        let q = closed_form_price(1.7, -0.3).unwrap();
        let x = [0.37, 0.81];
        let g = q.subgradient(&x);
        let h = 1e-6;
        let d0 = (q.value(&[x[0] + h, x[1]]) - q.value(&[x[0] - h, x[1]])) / (2.0 * h);
        let d1 = (q.value(&[x[0], x[1] + h]) - q.value(&[x[0], x[1] - h])) / (2.0 * h);
        assert!((g[0] - d0).abs() < 1e-8 && (g[1] - d1).abs() < 1e-8);
    }

    #[test]
    fn certificate_examples() {
        let tol = Tolerances::DEFAULT;
        let (prior, map) = sym4();
        let c = certify_linear_revelation(&prior, &map, 1.0, &simplex_mesh(4, 6).unwrap(), &tol).unwrap();
        assert_eq!(c.certificate.verdict, Verdict::Optimal);
        assert!((c.certificate.primal_value - 0.3125).abs() < 1e-15);
        assert!(c.om_residual <= 1e-9);
        let want = [0.0625, 0.0625, 0.5625, 0.5625];
        for (p, w) in c.certificate.price.prices().iter().zip(want) {
            assert!((p - w).abs() < 1e-15);
        }
        // P(ω) = ω₁ω₂ + a(x₁(θ) − ω₁)² on each state.
        for w in 0..4 {
            let s = map.state(w);
            let t = c.revelation.theta_atoms.iter().find(|t| (t.theta - (s[1] + s[0])).abs() < 1e-9).unwrap();
            let id = s[0] * s[1] + (t.mean[0] - s[0]).powi(2);
            assert!((c.certificate.price.prices()[w] - id).abs() < 1e-9);
        }

        let (prior, map) = ex3();
        let c = certify_linear_revelation(&prior, &map, 1.0, &simplex_mesh(6, 2).unwrap(), &tol).unwrap();
        assert_eq!(c.certificate.verdict, Verdict::FeasibleOnly);
        assert!((c.certificate.primal_value - 101.0 / 300.0).abs() < 1e-12);
    }

    #[test]
    fn pooling_examples() {
        let g = pooling_gain(1.0 / 6.0, [0.1, 0.3], 1.0 / 6.0, [0.3, 0.1]).unwrap();
        assert!((g - 1.0 / 300.0).abs() < 1e-15);
        assert!(pooling_gain(0.2, [0.1, 0.1], 0.5, [0.4, 0.9]).unwrap() <= 0.0);
        assert_eq!(pooling_gain(0.2, [0.3, 0.3], 0.4, [0.3, 0.3]).unwrap(), 0.0);
        assert!(pooling_gain(0.0, [0.0, 0.0], 1.0, [1.0, 1.0]).is_err());
    }

    #[test]
    fn ordered_examples() {
        let g = |pts: &[[f64; 2]]| {
            MomentDistribution::new(
                pts.iter().map(|x| MomentAtom { weight: 1.0 / pts.len() as f64, x: x.to_vec() }).collect(),
            )
            .unwrap()
        };
        assert!(check_ordered_support(&g(&[[0.2, 0.2], [0.5, 0.5], [0.9, 0.8]])));
        assert!(!check_ordered_support(&g(&[[0.2, 0.8], [0.8, 0.2]])));
        assert!(check_ordered_support(&g(&[[0.4, 0.1]])));
    }
}
