/// All numeric thresholds in one place so callers can tighten them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Simplex membership of a belief (unit sum, non-negativity).
    pub simplex: f64,
    /// Bayes plausibility, sup-norm of barycenter minus prior.
    pub plausibility: f64,
    /// LP primal and dual feasibility residuals.
    pub lp_feas: f64,
    /// LP primal/dual objective agreement.
    pub lp_gap: f64,
    /// A cut is accepted only when it is violated by more than this.
    pub cut: f64,
    /// Reported duality-gap target for solved instances.
    pub gap_target: f64,
    /// Atoms lighter than this are not part of a signal's support.
    pub support: f64,
    /// Moment atoms closer than this (sup-norm) are merged.
    pub merge: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        simplex: 1e-9,
        plausibility: 1e-8,
        lp_feas: 1e-8,
        lp_gap: 1e-7,
        cut: 1e-7,
        gap_target: 1e-6,
        support: 1e-9,
        merge: 1e-9,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
