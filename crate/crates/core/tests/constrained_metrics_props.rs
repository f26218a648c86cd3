//! Side-constrained persuasion and the KR metric.

mod common;

use common::*;
use persuasion_core::cert::Verdict;
use persuasion_core::constrained::{check_constrained_optimality, solve_constrained_primal, SideConstraint};
use persuasion_core::metrics::{kr_distance, steepness_estimate, GroundMetric};
use persuasion_core::objective::AffinePiece;
use persuasion_core::{simplex_mesh, Belief, CandidateSet, ObjectiveSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Distance of the posterior from the prior in sup norm, as a PL max.
fn spread(prior: &[f64]) -> ObjectiveSpec {
    let n = prior.len();
    let mut pieces = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut slope = vec![0.0; n];
            slope[i] = s;
            pieces.push(AffinePiece { slope, intercept: -s * prior[i] });
        }
    }
    ObjectiveSpec::PiecewiseLinearMax(pieces)
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> GroundMetric {
    let mut pts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    GroundMetric::from_points_1d(&pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(40) })]

    #[test]
    fn constrained_slackness_monotone_concave(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=3);
        let obj = random_pl_objective(&mut rng, n, 4);
        let prior = random_prior(&mut rng, n);
        // The prior itself is a candidate, so c = 0 (no disclosure) is feasible.
        let mesh = simplex_mesh(n, 6).unwrap().extended([prior.belief().clone()]).unwrap();
        let g = spread(prior.probs());
        let solve = |c: f64| solve_constrained_primal(&prior, &obj, &[SideConstraint::le(g.clone(), c)], &mesh).unwrap();
        let cs = [0.0, 0.1, 0.2, 0.3, 0.4, 0.6];
        let sols: Vec<_> = cs.iter().map(|&c| solve(c)).collect();
        for (s, &c) in sols.iter().zip(&cs) {
            let k = [SideConstraint::le(g.clone(), c)];
            let rep = check_constrained_optimality(&s.signal, &s.price, &s.multipliers, &k, &prior, &obj, &mesh, 1e-6).unwrap();
            prop_assert_eq!(rep.verdict, Verdict::Optimal);
            prop_assert!(rep.gap.abs() <= 1e-6);
            prop_assert!(rep.multiplier_slackness[0].abs() <= 1e-6);
            prop_assert!(s.multipliers[0] >= 0.0);
        }
        for w in sols.windows(2) {
            prop_assert!(w[1].value >= w[0].value - 1e-9);
        }
        // Midpoint concavity in c on a few segments.
        for (a, b) in [(0usize, 2usize), (1, 3), (2, 4), (0, 4)] {
            let mid = solve((cs[a] + cs[b]) / 2.0).value;
            prop_assert!(mid >= (sols[a].value + sols[b].value) / 2.0 - 1e-9);
        }
    }

    #[test]
    fn kr_is_a_metric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=6);
        let rho = random_points(&mut rng, n);
        let n = rho.len();
        let m: Vec<Vec<f64>> = (0..3).map(|_| random_belief(&mut rng, n).into_vec()).collect();
        let d = |a: &[f64], b: &[f64]| kr_distance(a, b, &rho).unwrap().distance;
        prop_assert_eq!(d(&m[0], &m[1]), d(&m[1], &m[0]));
        prop_assert!(d(&m[0], &m[2]) <= d(&m[0], &m[1]) + d(&m[1], &m[2]) + 1e-7);
        prop_assert!(d(&m[0], &m[0]).abs() <= 1e-9);
        if m[0].iter().zip(&m[1]).any(|(a, b)| (a - b).abs() > 1e-6) {
            prop_assert!(d(&m[0], &m[1]) > 0.0);
        }
    }

    #[test]
    fn scaling_lower_bound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=6);
        let rho = random_points(&mut rng, n);
        let n = rho.len();
        let mu = random_belief(&mut rng, n).into_vec();
        let eta = random_belief(&mut rng, n).into_vec();
        let lam: f64 = rng.gen_range(0.0..2.0);
        let scaled: Vec<f64> = eta.iter().map(|x| lam * x).collect();
        let full = kr_distance(&mu, &eta, &rho).unwrap().distance;
        prop_assert!(kr_distance(&mu, &scaled, &rho).unwrap().distance >= 0.5 * full - 1e-7);
    }

    #[test]
    fn lipschitz_objectives_have_bounded_steepness(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(3..=8);
        let pts: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let rho = GroundMetric::from_points_1d(&pts).unwrap();
        let l: f64 = rng.gen_range(0.1..3.0);
        let pieces: Vec<AffinePiece> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-0.5..0.5);
                AffinePiece { slope: pts.iter().map(|t| l * (a * t + b)).collect(), intercept: 0.0 }
            })
            .collect();
        let obj = ObjectiveSpec::PiecewiseLinearMax(pieces);
        let prior = random_prior(&mut rng, m);
        let probes: Vec<Belief> = (0..10).map(|_| random_belief(&mut rng, m)).collect();
        let cands = CandidateSet::vertices(m).unwrap();
        let rep = steepness_estimate(&prior, &obj, &probes, &rho, &cands).unwrap();
        prop_assert!(rep.max_ratio <= l + 1e-6, "{} > {}", rep.max_ratio, l);
    }
}
