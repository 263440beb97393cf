//! Conic relaxation of the speed-planning problem and the planning pipeline.
//!
//! The nonconvex planning problem fixes each stage pace at `1/sqrt(w_i)`.
//! Relaxing that equality to `t_i >= 1/sqrt(w_i)` makes the problem a
//! second-order cone program: the pace bound splits into three rotated-cone
//! constraints per stage,
//!
//! ```text
//! 1 <= zt_i * tt_i,   tt_i^2 <= t_i,   zt_i^2 <= t_i * w_i,
//! ```
//!
//! which together force `t_i^2 * w_i >= 1` and are tight at the optimum of
//! the true problem. The relaxation can be loose only by leaving some
//! `t_i > 1/sqrt(w_i)`; [`verify_exactness`] measures exactly that residual,
//! and [`plan`] optionally tightens the per-position speed windows with the
//! envelopes of [`crate::tightening`] first, which provably removes the
//! slack for instances satisfying the sufficient conditions of
//! [`crate::model::check_assumptions`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::model::{
    check_assumptions, force_profile, objective, AssumptionReport, BoundaryMode,
    ObjectiveBreakdown, TrackInstance,
};
use crate::socp::{self, Cone, ProblemData, SolveStatus, SolverSettings, SparseMatrix};
use crate::tightening::{
    compute_zy, tightened_lower_bounds, BoundsVectors, FeasibilityVerdict, LowerBoundsOutcome,
};
use crate::{Error, Result};

/// Default one-sided exactness tolerance on `t_i * sqrt(w_i) - 1`.
pub const DEFAULT_EXACTNESS_TOL: f64 = 1e-6;

/// Variable layout of the assembled program (all indices 0-based).
///
/// Order: speeds `w` (one per position), paces `t` (one per stage), forces
/// `f` (one per stage), energy epigraphs `e` (one per stage, only when the
/// energy weight is positive), then the two cone auxiliaries per stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    n: usize,
    has_energy: bool,
}

impl VarLayout {
    fn new(n: usize, has_energy: bool) -> Self {
        VarLayout { n, has_energy }
    }

    #[inline]
    pub fn stages(&self) -> usize {
        self.n - 1
    }

    #[inline]
    pub fn w(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        i
    }

    #[inline]
    pub fn t(&self, i: usize) -> usize {
        debug_assert!(i < self.stages());
        self.n + i
    }

    #[inline]
    pub fn f(&self, i: usize) -> usize {
        debug_assert!(i < self.stages());
        self.n + self.stages() + i
    }

    /// Energy epigraph variable; only present when the objective has one.
    #[inline]
    pub fn e(&self, i: usize) -> usize {
        debug_assert!(self.has_energy && i < self.stages());
        self.n + 2 * self.stages() + i
    }

    /// Auxiliary bounding `aux_tw_i^2 <= t_i * w_i`.
    #[inline]
    pub fn aux_tw(&self, i: usize) -> usize {
        let base = self.n + (2 + usize::from(self.has_energy)) * self.stages();
        base + i
    }

    /// Auxiliary bounding `aux_t_i^2 <= t_i`.
    #[inline]
    pub fn aux_t(&self, i: usize) -> usize {
        self.aux_tw(i) + self.stages()
    }

    #[inline]
    pub fn total(&self) -> usize {
        self.n + (4 + usize::from(self.has_energy)) * self.stages()
    }
}

/// The assembled conic program together with its variable layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledProgram {
    pub problem: ProblemData,
    pub layout: VarLayout,
    /// Number of equality rows (leading zero-cone block).
    pub equality_rows: usize,
    /// Number of one-dimensional inequality rows.
    pub inequality_rows: usize,
    /// Number of second-order cone blocks.
    pub soc_blocks: usize,
}

/// Builds the second-order cone program for the instance over the given
/// per-position speed windows. The first position is pinned to the initial
/// speed; the final position is pinned to the demanded speed exactly when
/// `mode` fixes it. Interior window rows are emitted only where they bind
/// (caps always, floors only if positive); a collapsed window becomes an
/// equality row.
pub fn assemble(
    inst: &TrackInstance,
    mode: BoundaryMode,
    bounds: &BoundsVectors,
) -> Result<AssembledProgram> {
    let n = inst.n();
    let stages = inst.stages();
    if bounds.lower.len() != n || bounds.upper.len() != n {
        return Err(Error::LengthMismatch {
            what: "bounds vectors",
            expected: n,
            got: usize::min(bounds.lower.len(), bounds.upper.len()),
        });
    }
    let v = &inst.vehicle;
    let has_energy = inst.lambda > 0.0;
    let layout = VarLayout::new(n, has_energy);

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut row = 0usize;

    // Equality block: force definitions, boundary pins, collapsed windows.
    for i in 0..stages {
        // f_i - w_{i+1}/h + (1/h - gamma) w_i = grade_i.
        triplets.push((row, layout.f(i), 1.0));
        triplets.push((row, layout.w(i), 1.0 / inst.h - v.gamma));
        triplets.push((row, layout.w(i + 1), -1.0 / inst.h));
        b.push(inst.grade_resistance(i));
        row += 1;
    }
    triplets.push((row, layout.w(0), 1.0));
    b.push(inst.w_init);
    row += 1;
    if mode == BoundaryMode::FixedFinal {
        triplets.push((row, layout.w(n - 1), 1.0));
        b.push(inst.w_fin);
        row += 1;
    }
    // Positions with window rows: interior always, final when free.
    let boxed: Vec<usize> = (1..n)
        .filter(|&i| i < n - 1 || mode == BoundaryMode::FreeFinal)
        .collect();
    let mut collapsed = vec![false; n];
    for &i in &boxed {
        let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
        if hi < lo {
            return Err(Error::InvalidParameter {
                name: "bounds",
                requirement: "upper >= lower at every position",
                value: hi - lo,
            });
        }
        if hi - lo <= 1e-12 * f64::max(1.0, math::abs(hi)) {
            collapsed[i] = true;
            triplets.push((row, layout.w(i), 1.0));
            b.push(0.5 * (lo + hi));
            row += 1;
        }
    }
    let equality_rows = row;

    // Inequality block.
    let friction = v.friction_bound();
    for i in 0..stages {
        // Pace covers the engine-power time: t_i >= (mass/p_max) f_i.
        triplets.push((row, layout.f(i), v.mass / v.p_max));
        triplets.push((row, layout.t(i), -1.0));
        b.push(0.0);
        row += 1;
        // Friction: -g*mu <= f_i <= g*mu.
        triplets.push((row, layout.f(i), 1.0));
        b.push(friction);
        row += 1;
        triplets.push((row, layout.f(i), -1.0));
        b.push(friction);
        row += 1;
        if has_energy {
            // Epigraph of max(f_i, eta f_i).
            triplets.push((row, layout.f(i), 1.0));
            triplets.push((row, layout.e(i), -1.0));
            b.push(0.0);
            row += 1;
            // At eta == 1 the second face coincides with the first; emitting
            // it twice makes the dual degenerate and destabilizes the solver.
            if inst.eta < 1.0 {
                triplets.push((row, layout.f(i), inst.eta));
                triplets.push((row, layout.e(i), -1.0));
                b.push(0.0);
                row += 1;
            }
        }
    }
    for &i in &boxed {
        if collapsed[i] {
            continue;
        }
        triplets.push((row, layout.w(i), 1.0));
        b.push(bounds.upper[i]);
        row += 1;
        // A zero lower bound is already implied by the stage cone
        // `zt_i^2 <= t_i * w_i` at every position that starts a stage; the
        // final position starts none, so its floor must be kept explicit or
        // regenerative braking drives the last speed negative.
        if bounds.lower[i] > 0.0 || i == n - 1 {
            triplets.push((row, layout.w(i), -1.0));
            b.push(-bounds.lower[i]);
            row += 1;
        }
    }
    let inequality_rows = row - equality_rows;

    // Second-order cone block: three rotated cones per stage, each encoded
    // as (sum, 2*linear, difference) in SOC(3).
    let mut soc_blocks = 0usize;
    for i in 0..stages {
        // 1 <= aux_tw_i * aux_t_i.
        triplets.push((row, layout.aux_tw(i), -1.0));
        triplets.push((row, layout.aux_t(i), -1.0));
        b.push(0.0);
        b.push(2.0);
        triplets.push((row + 2, layout.aux_tw(i), -1.0));
        triplets.push((row + 2, layout.aux_t(i), 1.0));
        b.push(0.0);
        row += 3;
        // aux_t_i^2 <= t_i.
        triplets.push((row, layout.t(i), -1.0));
        b.push(1.0);
        triplets.push((row + 1, layout.aux_t(i), -2.0));
        b.push(0.0);
        triplets.push((row + 2, layout.t(i), -1.0));
        b.push(-1.0);
        row += 3;
        // aux_tw_i^2 <= t_i * w_i.
        triplets.push((row, layout.t(i), -1.0));
        triplets.push((row, layout.w(i), -1.0));
        b.push(0.0);
        triplets.push((row + 1, layout.aux_tw(i), -2.0));
        b.push(0.0);
        triplets.push((row + 2, layout.t(i), -1.0));
        triplets.push((row + 2, layout.w(i), 1.0));
        b.push(0.0);
        row += 3;
        soc_blocks += 3;
    }

    let mut c = vec![0.0; layout.total()];
    for i in 0..stages {
        c[layout.t(i)] = inst.h;
        if has_energy {
            c[layout.e(i)] = inst.h * inst.lambda * v.mass;
        }
    }

    let mut cones = Vec::with_capacity(2 + soc_blocks);
    cones.push(Cone::Zero(equality_rows));
    if inequality_rows > 0 {
        cones.push(Cone::NonNeg(inequality_rows));
    }
    for _ in 0..soc_blocks {
        cones.push(Cone::Soc(3));
    }

    let problem = ProblemData {
        a: SparseMatrix::from_triplets(row, layout.total(), &triplets)?,
        b,
        c,
        cones,
    };
    problem.validate()?;
    Ok(AssembledProgram {
        problem,
        layout,
        equality_rows,
        inequality_rows,
        soc_blocks,
    })
}

/// Physical variables extracted from a solved program.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub w: Vec<f64>,
    /// Stage paces `t_i` (seconds per meter surrogate; stage time is `h*t_i`).
    pub pace: Vec<f64>,
    pub f: Vec<f64>,
    /// Optimal value of the assembled program.
    pub objective: f64,
    pub iterations: usize,
    pub gap: f64,
    pub primal_res: f64,
    pub dual_res: f64,
}

/// Outcome of one relaxation solve.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Solved(RelaxedSolution),
    /// The window constraints are conically infeasible (solver certificate).
    Infeasible,
    /// The solver could not conclude.
    Failed { status: SolveStatus, iterations: usize },
}

/// Solves an assembled program and re-checks the returned point against the
/// physical constraints it is supposed to satisfy; a point that fails the
/// recheck is reported as a failure, never as a solution.
pub fn solve_program(
    inst: &TrackInstance,
    mode: BoundaryMode,
    bounds: &BoundsVectors,
    program: &AssembledProgram,
    settings: &SolverSettings,
) -> Result<SolveOutcome> {
    let sol = socp::solve(&program.problem, settings)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::PrimalInfeasible => return Ok(SolveOutcome::Infeasible),
        status => {
            return Ok(SolveOutcome::Failed {
                status,
                iterations: sol.iterations,
            })
        }
    }
    let layout = &program.layout;
    let n = layout.n;
    let mut w: Vec<f64> = (0..n).map(|i| sol.x[layout.w(i)]).collect();
    let mut pace: Vec<f64> = (0..layout.stages()).map(|i| sol.x[layout.t(i)]).collect();
    let mut f: Vec<f64> = (0..layout.stages()).map(|i| sol.x[layout.f(i)]).collect();

    // Complementarity noise can leave a stage's force a hair above the
    // power cap at its speed: where the pace cone and the power row are
    // simultaneously active their slacks are independent, and the
    // difference lands in `f`. When every overdraw sits at noise scale,
    // clamp the profile to forward power reachability (each node's speed
    // capped by what the capped force reaches from the repaired previous
    // node, the same recursion the feasibility check uses). Speeds only
    // decrease, so upper windows survive; the repair is discarded if it
    // disturbs a pin, a lower window, or the braking bound. A genuinely
    // loose stage overdraws by orders of magnitude more than the gate and
    // is reported as loose, never patched.
    const OVERDRAW_NOISE: f64 = 1e-5;
    let vehicle = &inst.vehicle;
    let friction_cap = vehicle.g * vehicle.mu;
    let power_force = |wi: f64| vehicle.p_max / (vehicle.mass * math::sqrt(wi));
    let mut max_overdraw = 0.0f64;
    for i in 0..layout.stages() {
        if w[i] > 0.0 {
            let cap = f64::min(friction_cap, power_force(w[i]));
            let over = (f[i] - cap) / (1.0 + cap);
            max_overdraw = f64::max(max_overdraw, over);
        }
    }
    if max_overdraw > 0.0 && max_overdraw <= OVERDRAW_NOISE {
        let mut repaired = w.clone();
        let mut usable = true;
        for i in 0..layout.stages() {
            if repaired[i] <= 0.0 {
                usable = false;
                break;
            }
            let cap = f64::min(friction_cap, power_force(repaired[i]));
            let reach = repaired[i]
                + inst.h * (cap - vehicle.gamma * repaired[i] - inst.grade_resistance(i));
            repaired[i + 1] = f64::min(w[i + 1], reach);
        }
        const REPAIR_TOL: f64 = 1e-9;
        if usable {
            for i in 0..n {
                if repaired[i] < bounds.lower[i] - REPAIR_TOL * (1.0 + bounds.lower[i]) {
                    usable = false;
                    break;
                }
            }
        }
        if usable && mode == BoundaryMode::FixedFinal {
            usable = w[n - 1] - repaired[n - 1] <= REPAIR_TOL * (1.0 + w[n - 1]);
        }
        if usable {
            if let Ok(rf) = force_profile(&repaired, inst) {
                if rf
                    .iter()
                    .all(|fi| *fi >= -friction_cap - REPAIR_TOL * (1.0 + friction_cap))
                {
                    w = repaired;
                    f = rf;
                }
            }
        }
    }

    // At any optimum the pace equals the larger of its two lower bounds
    // exactly: the objective is strictly increasing in it, and nothing else
    // constrains it. The solver's free variable carries complementarity
    // slack (worst where both bounds coincide and neither multiplier pins
    // it), so replace it with the value the speeds and forces imply. Whether
    // a stage is relaxed loosely is a property of `(w, f)` alone: a loose
    // stage keeps `M f / P > 1/sqrt(w)` through this substitution.
    for i in 0..layout.stages() {
        if w[i] > 0.0 {
            pace[i] = f64::max(
                1.0 / math::sqrt(w[i]),
                inst.vehicle.mass / inst.vehicle.p_max * f[i],
            );
        }
    }

    let rejected = physics_violations(inst, mode, bounds, &w, &pace, &f, 10.0 * settings.feas_tol);
    if !rejected.is_empty() {
        #[cfg(feature = "std")]
        if std::env::var_os("SPEEDPLAN_IPM_TRACE").is_some() {
            for r in &rejected {
                std::eprintln!("recheck rejected solve: {r}");
            }
        }
        return Ok(SolveOutcome::Failed {
            status: SolveStatus::NumericalFailure,
            iterations: sol.iterations,
        });
    }

    // Report the objective of the profile actually returned, not the
    // solver's raw value: the snap lowered the pace term, so this stays at
    // or below the solver objective and `objective - gap` remains a valid
    // lower bound on the relaxed optimum.
    let mut profile_obj = 0.0;
    for i in 0..layout.stages() {
        profile_obj += inst.h
            * (inst.lambda * vehicle.mass * f64::max(inst.eta * f[i], f[i]) + pace[i]);
    }

    Ok(SolveOutcome::Solved(RelaxedSolution {
        w,
        pace,
        f,
        objective: profile_obj,
        iterations: sol.iterations,
        gap: sol.gap,
        primal_res: sol.primal_res,
        dual_res: sol.dual_res,
    }))
}

/// Independent feasibility recheck of a claimed solution, in the original
/// variables rather than the solver's. Returns human-readable violations;
/// empty means the point passes at the given absolute-relative tolerance.
fn physics_violations(
    inst: &TrackInstance,
    mode: BoundaryMode,
    bounds: &BoundsVectors,
    w: &[f64],
    pace: &[f64],
    f: &[f64],
    tol: f64,
) -> Vec<String> {
    let v = &inst.vehicle;
    let n = inst.n();
    let mut bad = Vec::new();
    let ok = |residual: f64, scale: f64| residual <= tol * (1.0 + math::abs(scale));

    if !ok(math::abs(w[0] - inst.w_init), inst.w_init) {
        bad.push(format!("initial speed pin violated by {}", w[0] - inst.w_init));
    }
    if mode == BoundaryMode::FixedFinal && !ok(math::abs(w[n - 1] - inst.w_fin), inst.w_fin) {
        bad.push(format!(
            "final speed pin violated by {}",
            w[n - 1] - inst.w_fin
        ));
    }
    for i in 0..inst.stages() {
        if w[i] <= 0.0 {
            bad.push(format!("nonpositive speed {} at position {}", w[i], i + 1));
            continue;
        }
        let fi = (w[i + 1] - w[i]) / inst.h + v.gamma * w[i] + inst.grade_resistance(i);
        if !ok(math::abs(f[i] - fi), fi) {
            bad.push(format!("force definition off by {} at stage {}", f[i] - fi, i + 1));
        }
        if !ok(math::abs(f[i]) - v.friction_bound(), v.friction_bound()) {
            bad.push(format!("friction bound exceeded at stage {}", i + 1));
        }
        if !ok(v.mass / v.p_max * f[i] - pace[i], pace[i]) {
            bad.push(format!("power bound exceeded at stage {}", i + 1));
        }
        if !ok(1.0 - pace[i] * math::sqrt(w[i]), 1.0) {
            bad.push(format!("pace below the speed bound at stage {}", i + 1));
        }
    }
    for i in 0..n {
        if !ok(bounds.lower[i] - w[i], bounds.lower[i])
            || !ok(w[i] - bounds.upper[i], bounds.upper[i])
        {
            bad.push(format!(
                "window violated at position {}: w={} outside [{}, {}]",
                i + 1,
                w[i],
                bounds.lower[i],
                bounds.upper[i]
            ));
        }
    }
    bad
}

/// Exactness audit of a relaxation solution: per-stage residuals
/// `t_i * sqrt(w_i) - 1`, which are nonnegative (up to solver accuracy) and
/// zero exactly where the relaxation is tight.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// 1-based stages whose residual exceeds the tolerance.
    pub violations: Vec<usize>,
    /// Length of the trailing run of violating stages.
    pub tail_length: usize,
    /// True when the violations are exactly a (possibly empty) suffix of the
    /// stage range, the structure the theory predicts for loose solutions.
    pub violations_are_suffix: bool,
    pub is_exact: bool,
}

/// Measures relaxation exactness for a solved profile.
pub fn verify_exactness(w: &[f64], pace: &[f64], tol: f64) -> ExactnessReport {
    let stages = pace.len();
    debug_assert_eq!(w.len(), stages + 1);
    let mut residuals = Vec::with_capacity(stages);
    let mut violations = Vec::new();
    let mut max_residual = 0.0f64;
    for i in 0..stages {
        let r = pace[i] * math::sqrt(f64::max(w[i], 0.0)) - 1.0;
        if r > max_residual {
            max_residual = r;
        }
        if r > tol {
            violations.push(i + 1);
        }
        residuals.push(r);
    }
    let mut tail_length = 0usize;
    for i in (0..stages).rev() {
        if residuals[i] > tol {
            tail_length += 1;
        } else {
            break;
        }
    }
    let violations_are_suffix = violations.len() == tail_length;
    ExactnessReport {
        residuals,
        max_residual,
        violations,
        tail_length,
        violations_are_suffix,
        is_exact: max_residual <= tol,
    }
}

/// Options for the planning pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    /// Contract the speed windows with the feasibility envelopes before
    /// solving (on by default; this is what makes the relaxation exact on
    /// instances with a demanded final speed).
    pub tighten: bool,
    /// One-sided exactness tolerance on the pace residuals.
    pub exactness_tol: f64,
    /// Termination threshold of the envelope iteration.
    pub envelope_eps: f64,
    pub solver: SolverSettings,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            tighten: true,
            exactness_tol: DEFAULT_EXACTNESS_TOL,
            envelope_eps: crate::tightening::DEFAULT_ENVELOPE_EPS,
            solver: SolverSettings::default(),
        }
    }
}

/// Why an instance has no feasible profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InfeasibilityKind {
    /// The backward reachability bound exceeds the speed cap at this
    /// 1-based position (smallest such).
    UnreachableFloor { position: usize },
    /// The envelope iteration emptied a window at this 1-based position.
    EmptyWindow { iteration: usize, position: usize },
    /// The conic solver produced an infeasibility certificate.
    SolverCertificate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityReport {
    pub kind: InfeasibilityKind,
    pub warnings: Vec<String>,
}

/// A finished plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    /// Kinetic energies per position.
    pub w: Vec<f64>,
    /// Stage forces per unit mass.
    pub f: Vec<f64>,
    /// Stage paces `t_i`; stage travel time is `h * t_i`.
    pub pace: Vec<f64>,
    /// Objective of the profile evaluated by the model (energy/time split).
    pub objective: ObjectiveBreakdown,
    /// Optimal value reported by the conic solver.
    pub solver_objective: f64,
    /// Certified duality gap at the solver's final iterate. The true optimum
    /// of the relaxed program lies in `[solver_objective - solver_gap,
    /// solver_objective]` up to residual noise.
    pub solver_gap: f64,
    pub exactness: ExactnessReport,
    /// Whether envelope tightening was applied.
    pub tightened: bool,
    /// The speed windows the program was solved over.
    pub bounds: BoundsVectors,
    pub assumptions: AssumptionReport,
    pub warnings: Vec<String>,
    pub solver_iterations: usize,
    pub envelope_iterations: usize,
}

/// Outcome of the planning pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutcome {
    Planned(PlanReport),
    Infeasible(InfeasibilityReport),
    SolverFailure {
        status: SolveStatus,
        iterations: usize,
        warnings: Vec<String>,
    },
}

/// Full planning pipeline: assumption audit, optional window tightening with
/// eager infeasibility detection, conic solve, physical recheck, and
/// exactness verification.
pub fn plan(inst: &TrackInstance, mode: BoundaryMode, opts: &PlanOptions) -> Result<PlanOutcome> {
    let assumptions = check_assumptions(inst);
    let mut warnings = Vec::new();
    if !assumptions.a1_holds {
        warnings.push(String::from(
            "step-size condition 1 fails; exactness of the relaxation is not guaranteed",
        ));
    }
    if !assumptions.a2_holds {
        warnings.push(String::from(
            "power-margin condition 2 fails; exactness of the relaxation is not guaranteed",
        ));
    }

    let mut tightened = false;
    let mut envelope_iterations = 0usize;
    let bounds = if opts.tighten && !assumptions.a3_holds {
        warnings.push(String::from(
            "step condition 3 fails, the one-step map is not monotone; solving without window tightening",
        ));
        untightened_bounds(inst, mode)
    } else if opts.tighten {
        match tightened_lower_bounds(inst, mode)? {
            LowerBoundsOutcome::InfeasibleAt { index } => {
                return Ok(PlanOutcome::Infeasible(InfeasibilityReport {
                    kind: InfeasibilityKind::UnreachableFloor { position: index },
                    warnings,
                }));
            }
            LowerBoundsOutcome::Feasible { .. } => {}
        }
        match compute_zy(inst, mode, opts.envelope_eps)? {
            FeasibilityVerdict::Infeasible {
                iteration,
                witness_index,
            } => {
                return Ok(PlanOutcome::Infeasible(InfeasibilityReport {
                    kind: InfeasibilityKind::EmptyWindow {
                        iteration,
                        position: witness_index,
                    },
                    warnings,
                }));
            }
            FeasibilityVerdict::Feasible { z, y, iterations } => {
                tightened = true;
                envelope_iterations = iterations;
                BoundsVectors { lower: y, upper: z }
            }
        }
    } else {
        untightened_bounds(inst, mode)
    };

    let program = assemble(inst, mode, &bounds)?;
    match solve_program(inst, mode, &bounds, &program, &opts.solver)? {
        SolveOutcome::Infeasible => Ok(PlanOutcome::Infeasible(InfeasibilityReport {
            kind: InfeasibilityKind::SolverCertificate,
            warnings,
        })),
        SolveOutcome::Failed { status, iterations } => Ok(PlanOutcome::SolverFailure {
            status,
            iterations,
            warnings,
        }),
        SolveOutcome::Solved(sol) => {
            let exactness = verify_exactness(&sol.w, &sol.pace, opts.exactness_tol);
            if !exactness.is_exact {
                warnings.push(format!(
                    "relaxation is loose on {} stage(s); the profile is a lower-bound certificate, not an optimal plan",
                    exactness.violations.len()
                ));
            }
            let f = force_profile(&sol.w, inst)?;
            let objective = objective(&sol.w, &f, inst)?;
            Ok(PlanOutcome::Planned(PlanReport {
                w: sol.w,
                f,
                pace: sol.pace,
                objective,
                solver_objective: sol.objective,
                solver_gap: sol.gap,
                exactness,
                tightened,
                bounds,
                assumptions,
                warnings,
                solver_iterations: sol.iterations,
                envelope_iterations,
            }))
        }
    }
}

/// The raw per-position windows: boundary pins and the speed caps, no
/// dynamics information.
pub fn untightened_bounds(inst: &TrackInstance, mode: BoundaryMode) -> BoundsVectors {
    BoundsVectors {
        lower: inst.effective_w_min(mode),
        upper: inst.effective_w_max(mode),
    }
}
