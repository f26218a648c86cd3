//! Sender objectives over beliefs.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::belief::{dot, sup_distance, Belief};
use crate::error::{Error, Result};

/// Callback objective. Must be safe to call from several threads at once.
pub type OracleFn = dyn Fn(&Belief) -> core::result::Result<f64, String> + Send + Sync;

/// Callback moment objective.
pub type MomentFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// x ↦ ⟨slope, x⟩ + intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    pub slope: Vec<f64>,
    pub intercept: f64,
}

impl AffinePiece {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.slope, x) + self.intercept
    }
}

/// Per-state moment vectors m(ω) ∈ ℝᴺ.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMap {
    values: Vec<Vec<f64>>,
}

impl MomentMap {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = values.first() else {
            return Err(Error::InvalidInput("moment map has no states".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidInput("moment dimension must be >= 1".into()));
        }
        if let Some(v) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        if values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite moment value".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn states(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// E_μ[m].
    pub fn mean(&self, mu: &Belief) -> Vec<f64> {
        let mut x = alloc::vec![0.0; self.dim()];
        for (p, m) in mu.probs().iter().zip(&self.values) {
            for (xi, mi) in x.iter_mut().zip(m) {
                *xi += p * mi;
            }
        }
        x
    }
}

/// v on the moment space.
#[derive(Clone)]
pub enum MomentObjective {
    /// Product of all coordinates, x₁x₂ in two dimensions.
    Product,
    /// Max of affine functions of x (convex).
    PiecewiseLinearMax(Vec<AffinePiece>),
    /// Min of affine functions of x (concave).
    PiecewiseLinearMin(Vec<AffinePiece>),
    /// Values at listed points; evaluation elsewhere is an error.
    Table { points: Vec<Vec<f64>>, values: Vec<f64> },
    Custom(Arc<MomentFn>),
}

impl fmt::Debug for MomentObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Product => f.write_str("Product"),
            Self::PiecewiseLinearMax(p) => f.debug_tuple("PiecewiseLinearMax").field(p).finish(),
            Self::PiecewiseLinearMin(p) => f.debug_tuple("PiecewiseLinearMin").field(p).finish(),
            Self::Table { points, values } => {
                f.debug_struct("Table").field("points", points).field("values", values).finish()
            }
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

const TABLE_MATCH: f64 = 1e-9;

impl MomentObjective {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::Product => Ok(x.iter().product()),
            Self::PiecewiseLinearMax(pieces) => max_pieces(pieces, x),
            Self::PiecewiseLinearMin(pieces) => {
                let neg: Vec<AffinePiece> = pieces
                    .iter()
                    .map(|p| AffinePiece {
                        slope: p.slope.iter().map(|s| -s).collect(),
                        intercept: -p.intercept,
                    })
                    .collect();
                max_pieces(&neg, x).map(|v| -v)
            }
            Self::Table { points, values } => points
                .iter()
                .position(|p| p.len() == x.len() && sup_distance(p, x) <= TABLE_MATCH)
                .map(|i| values[i])
                .ok_or_else(|| Error::Evaluation(format!("no table entry at {x:?}"))),
            Self::Custom(f) => Ok(f(x)),
        }
    }
}

fn max_pieces(pieces: &[AffinePiece], x: &[f64]) -> Result<f64> {
    if pieces.is_empty() {
        return Err(Error::Evaluation("piecewise-linear objective has no pieces".into()));
    }
    if let Some(p) = pieces.iter().find(|p| p.slope.len() != x.len()) {
        return Err(Error::DimensionMismatch { expected: x.len(), found: p.slope.len() });
    }
    Ok(pieces.iter().map(|p| p.eval(x)).fold(f64::NEG_INFINITY, f64::max))
}

/// The sender's value V(μ) of inducing posterior μ.
#[derive(Clone)]
pub enum ObjectiveSpec {
    /// Values at listed beliefs; meant for a fixed candidate set.
    VertexTable(Vec<(Belief, f64)>),
    /// V(μ) = max_k ⟨slopeₖ, μ⟩ + interceptₖ.
    PiecewiseLinearMax(Vec<AffinePiece>),
    /// Receiver picks the action maximizing ⟨receiver[a], μ⟩; the sender
    /// gets ⟨sender[a], μ⟩. Receiver ties go to the sender's favourite
    /// action, which makes V upper semi-continuous.
    ActionChoice { receiver: Vec<Vec<f64>>, sender: Vec<Vec<f64>> },
    /// V(μ) = v(E_μ[m]).
    MomentComposed { map: MomentMap, v: MomentObjective },
    Oracle(Arc<OracleFn>),
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::VertexTable(t) => f.debug_tuple("VertexTable").field(t).finish(),
            Self::PiecewiseLinearMax(p) => f.debug_tuple("PiecewiseLinearMax").field(p).finish(),
            Self::ActionChoice { receiver, sender } => f
                .debug_struct("ActionChoice")
                .field("receiver", receiver)
                .field("sender", sender)
                .finish(),
            Self::MomentComposed { map, v } => {
                f.debug_struct("MomentComposed").field("map", map).field("v", v).finish()
            }
            Self::Oracle(_) => f.write_str("Oracle(..)"),
        }
    }
}

const ACTION_TIE: f64 = 1e-12;

impl ObjectiveSpec {
    pub fn oracle<F>(f: F) -> Self
    where
        F: Fn(&Belief) -> core::result::Result<f64, String> + Send + Sync + 'static,
    {
        Self::Oracle(Arc::new(f))
    }

    /// Affine objective μ ↦ ⟨slope, μ⟩ + intercept, as a one-piece max.
    pub fn affine(slope: Vec<f64>, intercept: f64) -> Self {
        Self::PiecewiseLinearMax(alloc::vec![AffinePiece { slope, intercept }])
    }

    pub fn moment_map(&self) -> Option<&MomentMap> {
        match self {
            Self::MomentComposed { map, .. } => Some(map),
            _ => None,
        }
    }

    pub fn eval(&self, mu: &Belief) -> Result<f64> {
        let v = match self {
            Self::VertexTable(table) => table
                .iter()
                .find(|(b, _)| b.len() == mu.len() && b.sup_distance(mu) <= TABLE_MATCH)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Evaluation(format!("no table entry for {:?}", mu.probs())))?,
            Self::PiecewiseLinearMax(pieces) => max_pieces(pieces, mu.probs())?,
            Self::ActionChoice { receiver, sender } => action_value(receiver, sender, mu)?,
            Self::MomentComposed { map, v } => {
                if map.states() != mu.len() {
                    return Err(Error::DimensionMismatch { expected: map.states(), found: mu.len() });
                }
                v.eval(&map.mean(mu))?
            }
            Self::Oracle(f) => f(mu).map_err(Error::Evaluation)?,
        };
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("objective returned {v}")));
        }
        Ok(v)
    }
}

fn action_value(receiver: &[Vec<f64>], sender: &[Vec<f64>], mu: &Belief) -> Result<f64> {
    if receiver.is_empty() || receiver.len() != sender.len() {
        return Err(Error::Evaluation("action tables must be non-empty and of equal length".into()));
    }
    if let Some(r) = receiver.iter().chain(sender).find(|r| r.len() != mu.len()) {
        return Err(Error::DimensionMismatch { expected: mu.len(), found: r.len() });
    }
    let utilities: Vec<f64> = receiver.iter().map(|u| dot(u, mu.probs())).collect();
    let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(utilities
        .iter()
        .zip(sender)
        .filter(|(u, _)| **u >= best - ACTION_TIE)
        .map(|(_, w)| dot(w, mu.probs()))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// V(μ) for `obj`.
pub fn evaluate_objective(obj: &ObjectiveSpec, mu: &Belief) -> Result<f64> {
    obj.eval(mu)
}

/// Evaluates `obj` at each belief in order.
pub fn evaluate_all(obj: &ObjectiveSpec, beliefs: &[Belief]) -> Result<Vec<f64>> {
    beliefs.iter().map(|b| obj.eval(b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn example3_map() -> MomentMap {
        MomentMap::new(vec![
            vec![0.1, 0.3],
            vec![0.3, 0.1],
            vec![0.4, 0.6],
            vec![0.6, 0.4],
            vec![0.8, 0.9],
            vec![1.0, 0.7],
        ])
        .unwrap()
    }

    #[test]
    fn product_at_dirac() {
        let obj = ObjectiveSpec::MomentComposed {
            map: MomentMap::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap(),
            v: MomentObjective::Product,
        };
        assert_eq!(obj.eval(&Belief::dirac(2, 0)).unwrap(), 0.25);
    }

    #[test]
    fn max_of_coordinates() {
        let obj = ObjectiveSpec::PiecewiseLinearMax(vec![
            AffinePiece { slope: vec![0.0, 1.0], intercept: 0.0 },
            AffinePiece { slope: vec![1.0, 0.0], intercept: 0.0 },
        ]);
        assert_eq!(obj.eval(&Belief::new(vec![0.3, 0.7]).unwrap()).unwrap(), 0.7);
    }

    #[test]
    fn pooled_example3_pair() {
        let obj = ObjectiveSpec::MomentComposed { map: example3_map(), v: MomentObjective::Product };
        let mu = Belief::new(vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((obj.eval(&mu).unwrap() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn oracle_errors_propagate() {
        let obj = ObjectiveSpec::oracle(|_| Err("boom".into()));
        assert!(matches!(obj.eval(&Belief::uniform(2)), Err(Error::Evaluation(m)) if m == "boom"));
        let nan = ObjectiveSpec::oracle(|_| Ok(f64::NAN));
        assert!(nan.eval(&Belief::uniform(2)).is_err());
    }

    #[test]
    fn table_lookup() {
        let obj = ObjectiveSpec::VertexTable(vec![(Belief::dirac(2, 0), 1.0), (Belief::uniform(2), 3.0)]);
        assert_eq!(obj.eval(&Belief::uniform(2)).unwrap(), 3.0);
        assert!(obj.eval(&Belief::dirac(2, 1)).is_err());
    }

    #[test]
    fn action_choice_breaks_ties_for_sender() {
        // Receiver acts (action 1) once the belief in state 1 reaches one half.
        let obj = ObjectiveSpec::ActionChoice {
            receiver: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            sender: vec![vec![0.0, 0.0], vec![1.0, 1.0]],
        };
        assert_eq!(obj.eval(&Belief::uniform(2)).unwrap(), 1.0);
        assert_eq!(obj.eval(&Belief::new(vec![0.6, 0.4]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn concave_and_convex_moment_pieces() {
        let pieces = vec![
            AffinePiece { slope: vec![1.0], intercept: 0.0 },
            AffinePiece { slope: vec![-1.0], intercept: 1.0 },
        ];
        assert_eq!(MomentObjective::PiecewiseLinearMax(pieces.clone()).eval(&[0.25]).unwrap(), 0.75);
        assert_eq!(MomentObjective::PiecewiseLinearMin(pieces).eval(&[0.25]).unwrap(), 0.25);
    }
}
