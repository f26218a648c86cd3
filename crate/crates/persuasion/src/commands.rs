//! Subcommand implementations. Each returns the text for standard output,
//! diagnostics for standard error, and the exit status, so the binary only
//! does argument parsing and printing.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use persuasion_core::cert::certify;
use persuasion_core::concavify::{
    concavify_values, solve_dual_cutting_plane, CuttingPlaneOptions, Provenance, Refiner,
};
use persuasion_core::constrained::{check_constrained_optimality, solve_constrained_primal};
use persuasion_core::metrics::{kr_distance, steepness_estimate};
use persuasion_core::moment::{check_convex_order, induce_moment_distribution, solve_moment_primal, MomentDistribution};
use persuasion_core::two_dim::{certify_linear_revelation, check_line_support};
use persuasion_core::{
    simplex_mesh, Belief, CandidateSet, ConcavifyResult, Error, MomentObjective, ObjectiveSpec, PriceFunction, Prior,
    Signal, Tolerances, Verdict,
};

use crate::error::{CliError, EXIT_CERT, EXIT_OK};
use crate::instance::{Instance, Method};
use crate::parallel;
use crate::report::{self, AuditJson, KrReport, Report, RevelationJson, SteepnessJson};

/// Line-fit tolerance for reported moment supports.
const LINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: Vec<String>,
    pub exit: i32,
}

impl Outcome {
    fn report(r: &Report, exit: i32) -> Self {
        Outcome { stdout: report::to_json(r), stderr: r.failures.clone(), exit }
    }
}

pub fn tolerances(inst: &Instance) -> Tolerances {
    Tolerances { gap_target: inst.options.tol, ..Tolerances::DEFAULT }
}

/// The candidate posteriors: the table beliefs for tabulated objectives,
/// otherwise the simplex mesh of resolution `mesh_k` plus the prior.
pub fn candidates(inst: &Instance) -> Result<CandidateSet, CliError> {
    match &inst.objective {
        ObjectiveSpec::VertexTable(rows) => {
            Ok(CandidateSet::new(rows.iter().map(|(b, _)| b.clone()).collect(), Provenance::UserGrid)?)
        }
        _ => Ok(simplex_mesh(inst.n(), inst.options.mesh_k)?.extended([inst.prior.belief().clone()])?),
    }
}

/// `count` beliefs drawn uniformly from the simplex.
pub fn random_beliefs(n: usize, count: usize, seed: u64) -> Vec<Belief> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let w: Vec<f64> = (0..n).map(|_| -rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln()).collect();
            Belief::normalized(w).expect("positive weights normalize")
        })
        .collect()
}

fn audit(inst: &Instance, price: &PriceFunction) -> Result<Option<AuditJson>, CliError> {
    let o = &inst.options;
    if o.random_probes == 0 || matches!(inst.objective, ObjectiveSpec::VertexTable(_)) {
        return Ok(None);
    }
    let probes = random_beliefs(inst.n(), o.random_probes, o.seed);
    let values = parallel::evaluate(&inst.objective, &probes, o.jobs)?;
    let max_violation = probes.iter().zip(&values).map(|(b, v)| v - price.cost(b)).fold(f64::NEG_INFINITY, f64::max);
    Ok(Some(AuditJson { seed: o.seed, probes: o.random_probes, max_violation }))
}

fn audit_note(a: &Option<AuditJson>, out: &mut Vec<String>) {
    if let Some(a) = a {
        if a.max_violation > Tolerances::DEFAULT.cut {
            out.push(format!(
                "note: price is below V by {:e} at a random belief off the candidate grid; a finer --mesh-k may raise the value",
                a.max_violation
            ));
        }
    }
}

fn concavify(inst: &Instance, cands: &CandidateSet) -> Result<(ConcavifyResult, Option<String>), CliError> {
    let o = &inst.options;
    match o.method {
        Method::Grid => {
            let values = parallel::evaluate(&inst.objective, cands.beliefs(), o.jobs)?;
            Ok((concavify_values(&inst.prior, cands, &values)?, None))
        }
        Method::CuttingPlane => {
            let opts = CuttingPlaneOptions { tol: o.tol.min(Tolerances::DEFAULT.cut), max_iters: o.max_iters };
            match solve_dual_cutting_plane(&inst.prior, &inst.objective, &Refiner::Fixed(cands.clone()), &opts) {
                Ok(r) => Ok((r, None)),
                Err(Error::IterationLimit(best)) => {
                    let note = format!(
                        "iteration limit {} reached; reporting the best iterate (violation {:e})",
                        o.max_iters, best.max_violation
                    );
                    Ok((*best, Some(note)))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Moment-space extras for 2-D product objectives: induced means and the
/// line fit at slope `rs_a`.
fn moment_extras(inst: &Instance, signal: &Signal, r: &mut Report) -> Result<(), CliError> {
    if let Some((map, _)) = &inst.moment {
        let g = induce_moment_distribution(signal, map)?;
        if map.dim() == 2 {
            let fit = check_line_support(&g, inst.options.rs_a, LINE_TOL)?;
            r.line_fit = Some(report::line_fit(inst.options.rs_a, &fit));
        }
        r.moment_atoms = Some(report::moment_atoms(&g));
    }
    Ok(())
}

pub fn solve(inst: &Instance) -> Result<Outcome, CliError> {
    let tol = tolerances(inst);
    let cands = candidates(inst)?;
    let (res, limit_note) = concavify(inst, &cands)?;
    let cert = certify(&res.signal, &res.price, &inst.prior, &inst.objective, &cands, &tol)?;
    let mut r = Report::from_certificate("solve", &cert, inst, tol.gap_target);
    r.iterations = Some(res.iterations);
    r.audit = audit(inst, &res.price)?;
    moment_extras(inst, &res.signal, &mut r)?;
    if let Some((map, MomentObjective::Product)) = &inst.moment {
        if map.dim() == 2 {
            let rc = certify_linear_revelation(&inst.prior, map, inst.options.rs_a, &cands, &tol)?;
            r.revelation = Some(RevelationJson {
                verdict: rc.certificate.verdict.as_str().into(),
                value: rc.certificate.primal_value,
                om_residual: rc.om_residual,
                line_fit: report::line_fit(inst.options.rs_a, &rc.revelation.line_fit),
            });
        }
    }
    let mut exit = if r.is_invalid() { EXIT_CERT } else { EXIT_OK };
    let mut out = Outcome::report(&r, exit);
    if let Some(note) = limit_note {
        exit = EXIT_CERT;
        out.stderr.insert(0, note);
        out.exit = exit;
    }
    audit_note(&r.audit, &mut out.stderr);
    Ok(out)
}

/// Checks an external (signal, price) pair against the instance. Anything
/// short of Optimal exits with status 2.
pub fn certify_pair(inst: &Instance, signal: &Signal, price: &PriceFunction) -> Result<Outcome, CliError> {
    let n = inst.n();
    if signal.state_count() != n || price.len() != n {
        return Err(CliError::Schema(format!(
            "signal has {} states and price {} entries; the instance has {n} states",
            signal.state_count(),
            price.len()
        )));
    }
    let tol = tolerances(inst);
    let cands = candidates(inst)?;
    let cert = certify(signal, price, &inst.prior, &inst.objective, &cands, &tol)?;
    let r = Report::from_certificate("certify", &cert, inst, tol.gap_target);
    let exit = if r.is_optimal() { EXIT_OK } else { EXIT_CERT };
    Ok(Outcome::report(&r, exit))
}

fn require_moment(inst: &Instance, cmd: &str) -> Result<(), CliError> {
    if inst.moment.is_none() {
        return Err(CliError::Schema(format!(
            "{cmd} needs `moment_objective` and a moment map (`moment_map` or `coords`)"
        )));
    }
    Ok(())
}

/// Candidate moments: the images of the candidate beliefs, deduplicated.
pub fn candidate_moments(inst: &Instance, cands: &CandidateSet) -> Vec<Vec<f64>> {
    let (map, _) = inst.moment.as_ref().expect("checked by caller");
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for b in cands.beliefs() {
        let x = map.mean(b);
        let key: Vec<i64> = x.iter().map(|v| (v * 1e12).round() as i64).collect();
        if seen.insert(key) {
            out.push(x);
        }
    }
    out
}

pub fn moment_solve(inst: &Instance) -> Result<Outcome, CliError> {
    require_moment(inst, "moment-solve")?;
    let (map, v) = inst.moment.as_ref().expect("checked");
    let tol = tolerances(inst);
    let cands = candidates(inst)?;
    let xs = candidate_moments(inst, &cands);
    let sol = solve_moment_primal(&inst.prior, map, v, &xs)?;
    let obj = ObjectiveSpec::MomentComposed { map: map.clone(), v: v.clone() };
    let cert = certify(&sol.signal, &sol.price, &inst.prior, &obj, &cands, &tol)?;
    let mut r = Report::from_certificate("moment-solve", &cert, inst, tol.gap_target);
    let f0 = MomentDistribution::pushforward(&inst.prior, map)?;
    r.convex_order = Some(check_convex_order(&sol.g, &f0)?.holds);
    if map.dim() == 2 {
        let fit = check_line_support(&sol.g, inst.options.rs_a, LINE_TOL)?;
        r.line_fit = Some(report::line_fit(inst.options.rs_a, &fit));
    }
    r.moment_atoms = Some(report::moment_atoms(&sol.g));
    r.audit = audit(inst, &sol.price)?;
    let exit = if r.is_invalid() || r.convex_order == Some(false) { EXIT_CERT } else { EXIT_OK };
    let mut out = Outcome::report(&r, exit);
    if r.convex_order == Some(false) {
        out.stderr.push("induced moment distribution is not a mean-preserving contraction of the prior's".into());
    }
    audit_note(&r.audit, &mut out.stderr);
    Ok(out)
}

pub fn rs_certify(inst: &Instance) -> Result<Outcome, CliError> {
    require_moment(inst, "rs-certify")?;
    let (map, v) = inst.moment.as_ref().expect("checked");
    if map.dim() != 2 || !matches!(v, MomentObjective::Product) {
        return Err(CliError::Schema("rs-certify needs a two-dimensional moment map and the product objective".into()));
    }
    let tol = tolerances(inst);
    let cands = candidates(inst)?;
    let a = inst.options.rs_a;
    let rc = certify_linear_revelation(&inst.prior, map, a, &cands, &tol)?;
    let mut r = Report::from_certificate("rs-certify", &rc.certificate, inst, tol.gap_target);
    r.theta_atoms = Some(report::theta_atoms(&rc.revelation.theta_atoms));
    r.moment_atoms = Some(report::moment_atoms(&rc.revelation.g));
    r.line_fit = Some(report::line_fit(a, &rc.revelation.line_fit));
    r.om_residual = Some(rc.om_residual);
    r.hessian = Some(rc.price.hessian());
    r.hessian_det = Some(rc.price.hessian_det());
    if !rc.revelation.line_fit.is_line {
        r.failures.push(format!(
            "induced means are off the line x2 = {a}·x1 + b (residual {:e}); the sufficient condition does not apply",
            rc.revelation.line_fit.residual
        ));
    }
    let exit = if r.is_invalid() { EXIT_CERT } else { EXIT_OK };
    Ok(Outcome::report(&r, exit))
}

pub fn constrained_solve(inst: &Instance) -> Result<Outcome, CliError> {
    if inst.constraints.is_empty() {
        return Err(CliError::Schema("constrained-solve needs at least one entry in `constraints`".into()));
    }
    let tol = tolerances(inst);
    let cands = candidates(inst)?;
    let sol = solve_constrained_primal(&inst.prior, &inst.objective, &inst.constraints, &cands)?;
    let rep = check_constrained_optimality(
        &sol.signal,
        &sol.price,
        &sol.multipliers,
        &inst.constraints,
        &inst.prior,
        &inst.objective,
        &cands,
        tol.gap_target,
    )?;
    // The unconstrained certificate supplies the per-atom detail; the
    // verdict and gap come from the Lagrangian check.
    let cert = certify(&sol.signal, &sol.price, &inst.prior, &inst.objective, &cands, &tol)?;
    let mut r = Report::from_certificate("constrained-solve", &cert, inst, tol.gap_target);
    r.verdict = rep.verdict.as_str().into();
    r.value = sol.value;
    r.gap = rep.gap;
    r.dual_value = sol.value + rep.gap;
    r.feasibility.max_violation = rep.max_violation;
    r.feasibility.violated_states.clear();
    r.failures.clear();
    if rep.verdict != Verdict::Optimal {
        r.failures.push(format!(
            "constrained certificate: gap {:e}, dual violation {:e}, primal violation {:e}",
            rep.gap, rep.max_violation, rep.primal_violation
        ));
    }
    r.multipliers = Some(sol.multipliers.clone());
    r.constraint_slack = Some(sol.slack.clone());
    r.multiplier_slackness = Some(rep.multiplier_slackness.clone());
    r.primal_violation = Some(rep.primal_violation);
    let exit = if r.is_invalid() { EXIT_CERT } else { EXIT_OK };
    Ok(Outcome::report(&r, exit))
}

/// KR distance from the prior to `target`, with the steepness ratio of V̂
/// along that direction when it is defined.
pub fn kr(inst: &Instance, target: &Belief) -> Result<Outcome, CliError> {
    if target.len() != inst.n() {
        return Err(CliError::Schema(format!("target has {} entries for {} states", target.len(), inst.n())));
    }
    let rho = inst.metric()?;
    let d = kr_distance(inst.prior.probs(), target.probs(), &rho)?;
    let steepness = if d.distance > 1e-12 && !matches!(inst.objective, ObjectiveSpec::VertexTable(_)) {
        let cands = candidates(inst)?.extended([target.clone()])?;
        let s = steepness_estimate(&inst.prior, &inst.objective, std::slice::from_ref(target), &rho, &cands)?;
        Some(SteepnessJson { ratio: s.max_ratio, base_value: s.base_value })
    } else {
        None
    };
    let r = KrReport { command: "kr".into(), distance: d.distance, potential: d.potential, steepness };
    Ok(Outcome { stdout: report::to_json(&r), stderr: Vec::new(), exit: EXIT_OK })
}

/// Points per plot: t = i/PLOT_STEPS.
pub const PLOT_STEPS: usize = 100;

/// CSV with columns t, V, V_hat, price_line for a binary state, where t is
/// the probability of the second state.
pub fn plot_data(inst: &Instance) -> Result<Outcome, CliError> {
    if inst.n() != 2 {
        return Err(CliError::Schema(format!("plot-data needs exactly 2 states, the instance has {}", inst.n())));
    }
    let ts: Vec<f64> = (0..=PLOT_STEPS).map(|i| i as f64 / PLOT_STEPS as f64).collect();
    let rows: Vec<Belief> = ts.iter().map(|&t| Belief::new(vec![1.0 - t, t])).collect::<Result<_, _>>()?;
    let cands = candidates(inst)?.extended(rows.iter().cloned())?;
    let values = parallel::evaluate(&inst.objective, cands.beliefs(), inst.options.jobs)?;
    let at_prior = concavify_values(&inst.prior, &cands, &values)?;
    let hat = parallel::par_map(&rows, inst.options.jobs, |b| {
        concavify_values(&Prior::new(b.clone()), &cands, &values).map(|r| r.value)
    });
    let mut csv = String::from("t,V,V_hat,price_line\n");
    for ((t, b), h) in ts.iter().zip(&rows).zip(hat) {
        let v = inst.objective.eval(b)?;
        writeln!(csv, "{t},{v},{},{}", h?, at_prior.price.cost(b)).expect("writing to a string");
    }
    Ok(Outcome { stdout: csv, stderr: Vec::new(), exit: EXIT_OK })
}
