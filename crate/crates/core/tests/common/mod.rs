#![allow(dead_code)]

use persuasion_core::objective::AffinePiece;
use persuasion_core::{Belief, MomentMap, MomentObjective, ObjectiveSpec, Prior};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_belief(rng: &mut ChaCha8Rng, n: usize) -> Belief {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    Belief::normalized(raw).unwrap()
}

/// Full-support prior with every coordinate at least 0.02.
pub fn random_prior(rng: &mut ChaCha8Rng, n: usize) -> Prior {
    let raw: Vec<f64> = (0..n).map(|_| 0.02 * n as f64 + rng.gen::<f64>()).collect();
    Prior::from_probs(Belief::normalized(raw).unwrap().into_vec()).unwrap()
}

fn piece(rng: &mut ChaCha8Rng, n: usize) -> AffinePiece {
    AffinePiece { slope: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), intercept: rng.gen_range(-0.5..0.5) }
}

/// A piecewise-linear objective with at most `max_pieces` pieces, drawn
/// from convex (max), concave (min) and receiver-choice shapes.
pub fn random_pl_objective(rng: &mut ChaCha8Rng, n: usize, max_pieces: usize) -> ObjectiveSpec {
    let k = rng.gen_range(1..=max_pieces);
    match rng.gen_range(0..3) {
        0 => ObjectiveSpec::PiecewiseLinearMax((0..k).map(|_| piece(rng, n)).collect()),
        1 => ObjectiveSpec::oracle({
            let pieces: Vec<AffinePiece> = (0..k).map(|_| piece(rng, n)).collect();
            move |mu| Ok(pieces.iter().map(|p| p.eval(mu.probs())).fold(f64::INFINITY, f64::min))
        }),
        _ => ObjectiveSpec::ActionChoice {
            receiver: (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
            sender: (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
        },
    }
}

pub fn random_moment_map(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> MomentMap {
    MomentMap::new((0..n).map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()).collect()).unwrap()
}

pub fn product() -> MomentObjective {
    MomentObjective::Product
}
