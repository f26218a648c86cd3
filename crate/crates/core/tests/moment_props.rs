//! Moment-space reductions against state-space solves and 1D oracles.

mod common;

use common::*;
use persuasion_core::moment::{
    check_convex_order, induce_moment_distribution, lift_price, moment_price, push_down_price, solve_moment_primal,
    ConvexPrice, MomentAtom, MomentDistribution,
};
use persuasion_core::two_dim::{check_ordered_support, pooling_gain};
use persuasion_core::{concavify_grid, simplex_mesh, ObjectiveSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Convex order on the line: equal means and E_G[(x − t)⁺] ≤ E_F[(x − t)⁺]
/// at every atom t of either distribution (both sides are piecewise linear
/// in t with kinks only there).
fn cx_oracle_1d(g: &[(f64, f64)], f: &[(f64, f64)]) -> bool {
    let mean = |d: &[(f64, f64)]| d.iter().map(|(w, x)| w * x).sum::<f64>();
    if (mean(g) - mean(f)).abs() > 1e-9 {
        return false;
    }
    let call = |d: &[(f64, f64)], t: f64| d.iter().map(|(w, x)| w * (x - t).max(0.0)).sum::<f64>();
    g.iter().chain(f).all(|&(_, t)| call(g, t) <= call(f, t) + 1e-9)
}

fn to_dist(d: &[(f64, f64)]) -> MomentDistribution {
    MomentDistribution::merged(d.iter().map(|&(w, x)| MomentAtom { weight: w, x: vec![x] }).collect()).unwrap()
}

fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / s).collect()
}

/// A random pair: half the time G is a garbling of F (so G ≤cx F), half
/// the time an unrelated distribution shifted to F's mean.
type Dist1 = Vec<(f64, f64)>;

fn random_pair(rng: &mut ChaCha8Rng) -> (Dist1, Dist1) {
    let m = rng.gen_range(2..=5);
    let fw = random_weights(rng, m);
    let f: Vec<(f64, f64)> = fw.iter().map(|&w| (w, rng.gen_range(0.0..1.0))).collect();
    let k = rng.gen_range(1..=4);
    if rng.gen_bool(0.5) {
        // Row-stochastic garbling: π(j → i) ∝ random.
        let mut g = vec![(0.0, 0.0); k];
        for &(w, x) in &f {
            for (i, r) in random_weights(rng, k).into_iter().enumerate() {
                g[i].0 += w * r;
                g[i].1 += w * r * x;
            }
        }
        (g.into_iter().map(|(w, s)| (w, s / w)).collect(), f)
    } else {
        let gw = random_weights(rng, k);
        let mut g: Vec<(f64, f64)> = gw.iter().map(|&w| (w, rng.gen_range(-0.2..1.2))).collect();
        let shift = f.iter().map(|(w, x)| w * x).sum::<f64>() - g.iter().map(|(w, x)| w * x).sum::<f64>();
        for a in &mut g {
            a.1 += shift;
        }
        (g, f)
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(200) })]

    #[test]
    fn strassen_matches_integrated_cdf(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, f) = random_pair(&mut rng);
        let lp = check_convex_order(&to_dist(&g), &to_dist(&f)).unwrap();
        prop_assert_eq!(lp.holds, cx_oracle_1d(&g, &f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(50) })]

    #[test]
    fn moment_and_state_space_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        let dim = rng.gen_range(1..=2);
        let map = random_moment_map(&mut rng, n, dim);
        let prior = random_prior(&mut rng, n);
        let v = if dim == 2 {
            product()
        } else {
            persuasion_core::MomentObjective::PiecewiseLinearMin(vec![
                persuasion_core::AffinePiece { slope: vec![rng.gen_range(-1.0..1.0)], intercept: 0.0 },
                persuasion_core::AffinePiece { slope: vec![rng.gen_range(-1.0..1.0)], intercept: rng.gen_range(-0.3..0.3) },
            ])
        };
        let obj = ObjectiveSpec::MomentComposed { map: map.clone(), v: v.clone() };
        let mesh = simplex_mesh(n, 3).unwrap();
        let xs: Vec<Vec<f64>> = mesh.beliefs().iter().map(|b| map.mean(b)).collect();
        let sol = solve_moment_primal(&prior, &map, &v, &xs).unwrap();

        let f0 = MomentDistribution::pushforward(&prior, &map).unwrap();
        let drift = sol.g.mean().iter().zip(f0.mean()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(drift <= 1e-8);
        prop_assert!(check_convex_order(&sol.g, &f0).unwrap().holds);
        prop_assert_eq!(induce_moment_distribution(&sol.signal, &map).unwrap().len(), sol.g.len());

        let with = mesh.extended(sol.signal.atoms().iter().map(|a| a.posterior.clone())).unwrap();
        let grid = concavify_grid(&prior, &obj, &with).unwrap();
        prop_assert!((grid.value - sol.value).abs() <= 1e-6, "{} vs {}", grid.value, sol.value);

        // (O_m) with p pushed down from the moment LP's own state price.
        let om: f64 = f0.atoms().iter().map(|a| a.weight * moment_price(&sol.price, &map, &a.x).unwrap().p).sum();
        prop_assert!((om - sol.g.expect(&v).unwrap()).abs() <= 1e-6);

        // Sandwich: lift(push_down(P)) ≤ P, and push_down(lift(p)) = p at state moments.
        let p = push_down_price(&grid.price, &map, &xs).unwrap();
        let lifted = lift_price(&p, &map).unwrap();
        for (l, big) in lifted.prices().iter().zip(grid.price.prices()) {
            prop_assert!(*l <= big + 1e-8);
        }
        let states: Vec<Vec<f64>> = map.values().to_vec();
        let round = push_down_price(&lifted, &map, &states).unwrap();
        for s in round.samples() {
            prop_assert!((s.p - p.value(&s.x)).abs() <= 1e-7);
        }
        prop_assert!(p.convexity_violation() <= 1e-7);
    }
}

/// On a finite candidate set the LP can only pool into points it is
/// offered, so each round adds the barycenters of any incomparable support
/// pairs and re-solves. Every added pool must strictly gain, and the loop
/// must end at an ordered support.
#[test]
fn ordered_support_on_random_2d_priors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let n = rng.gen_range(2..=8);
        let map = random_moment_map(&mut rng, n, 2);
        let prior = random_prior(&mut rng, n);
        let mut xs: Vec<Vec<f64>> = simplex_mesh(n, 2).unwrap().beliefs().iter().map(|b| map.mean(b)).collect();
        let mut last = f64::NEG_INFINITY;
        let mut ordered = false;
        for _ in 0..30 {
            let sol = solve_moment_primal(&prior, &map, &product(), &xs).unwrap();
            assert!(sol.value >= last - 1e-12);
            last = sol.value;
            let a = sol.g.atoms();
            let mut pools = Vec::new();
            for i in 0..a.len() {
                for j in i + 1..a.len() {
                    let (p, q) = (&a[i], &a[j]);
                    if (q.x[0] - p.x[0]) * (q.x[1] - p.x[1]) < 0.0 {
                        let gain = pooling_gain(p.weight, [p.x[0], p.x[1]], q.weight, [q.x[0], q.x[1]]).unwrap();
                        assert!(gain > 0.0);
                        let w = p.weight + q.weight;
                        pools.push((0..2).map(|d| (p.weight * p.x[d] + q.weight * q.x[d]) / w).collect());
                    }
                }
            }
            if pools.is_empty() {
                ordered = check_ordered_support(&sol.g);
                break;
            }
            xs.extend(pools);
        }
        assert!(ordered, "case {case} did not reach an ordered support");
    }
}
