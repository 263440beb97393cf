//! Independent oracles for cross-checking the planner: forward reachability,
//! pointwise feasibility, lattice operations, a grid dynamic program, and a
//! seeded instance generator.
//!
//! The envelope iteration of [`crate::tightening`] and the conic pipeline of
//! [`crate::relaxation`] share a lot of machinery; everything here is built
//! on the raw one-step dynamics instead, so agreement between the two sides
//! is evidence rather than tautology. The dynamic program restricts speeds
//! to grids and admits only transitions that satisfy the force bounds
//! outright, which makes every path it returns a genuinely feasible profile
//! whose objective upper-bounds the optimum.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::model::{
    check_assumptions, force_profile, objective, step_condition_slack, BoundaryMode,
    ObjectiveBreakdown, TrackInstance, VehicleParams,
};
use crate::tightening::{compute_zy, sweep, FeasibilityVerdict, SweepKind, MAX_ENVELOPE_ITERATIONS};
use crate::{Error, Result};

/// The mid-size passenger-car parameter set used across examples and tests.
pub fn reference_vehicle() -> VehicleParams {
    VehicleParams::new(1200.0, 60_000.0, 0.8, 0.01, 4.0e-4)
        .expect("reference parameters are valid")
}

/// Per-position reachable kinetic-energy windows from a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub enum Reachability {
    Reachable { intervals: Vec<(f64, f64)> },
    /// The window emptied at this 1-based position.
    EmptyAt { position: usize },
}

impl Reachability {
    /// The final position's window, if every window is nonempty.
    pub fn final_window(&self) -> Option<(f64, f64)> {
        match self {
            Reachability::Reachable { intervals } => intervals.last().copied(),
            Reachability::EmptyAt { .. } => None,
        }
    }
}

/// Least next-position speed: full braking over the stage.
#[inline]
fn brake_reach(w: f64, alpha: f64, inst: &TrackInstance) -> f64 {
    let v = &inst.vehicle;
    (1.0 - inst.h * v.gamma) * w
        - inst.h * v.g * (math::sin(alpha) + v.c_roll + v.mu)
}

/// Greatest next-position speed: full traction over the stage.
#[inline]
fn thrust_reach(w: f64, alpha: f64, inst: &TrackInstance) -> f64 {
    crate::tightening::ell_extended(w, inst)
        - inst.h * inst.vehicle.g * (math::sin(alpha) + inst.vehicle.c_roll)
}

/// Propagates `[min, max]` reachable kinetic energies forward from the
/// initial speed, intersecting each position's cap. Interval arithmetic is
/// exact here because both one-step extremes are nondecreasing in the
/// current speed; that monotonicity needs the step condition, so instances
/// violating it are rejected.
pub fn reachable_intervals(inst: &TrackInstance) -> Result<Reachability> {
    if step_condition_slack(inst.h, &inst.vehicle) < 0.0 {
        return Err(Error::AssumptionViolated {
            what: "reachability propagation needs a monotone one-step map",
        });
    }
    let n = inst.n();
    let mut intervals = Vec::with_capacity(n);
    intervals.push((inst.w_init, inst.w_init));
    for i in 0..n - 1 {
        let (a, b) = intervals[i];
        let lo = f64::max(0.0, brake_reach(a, inst.alpha[i], inst));
        let hi = f64::min(inst.w_max[i + 1], thrust_reach(b, inst.alpha[i], inst));
        if lo > hi {
            return Ok(Reachability::EmptyAt { position: i + 2 });
        }
        intervals.push((lo, hi));
    }
    Ok(Reachability::Reachable { intervals })
}

/// Whether the instance admits any feasible profile: every reachable window
/// must be nonempty, and with a demanded final speed that speed must lie in
/// the final window.
pub fn is_instance_feasible(inst: &TrackInstance, mode: BoundaryMode) -> Result<bool> {
    Ok(match reachable_intervals(inst)? {
        Reachability::EmptyAt { .. } => false,
        Reachability::Reachable { intervals } => match mode {
            BoundaryMode::FreeFinal => true,
            BoundaryMode::FixedFinal => {
                let (lo, hi) = intervals[inst.n() - 1];
                lo <= inst.w_fin && inst.w_fin <= hi
            }
        },
    })
}

/// Componentwise minimum and maximum of two profiles.
pub fn meet_join(p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(p.len(), q.len());
    let meet = p.iter().zip(q).map(|(&a, &b)| f64::min(a, b)).collect();
    let join = p.iter().zip(q).map(|(&a, &b)| f64::max(a, b)).collect();
    (meet, join)
}

/// Checks one profile against every constraint of the instance, with an
/// absolute-plus-relative slack of `tol * (1 + |bound|)` per comparison.
pub fn is_feasible_point(inst: &TrackInstance, mode: BoundaryMode, w: &[f64], tol: f64) -> bool {
    let n = inst.n();
    if w.len() != n {
        return false;
    }
    let v = &inst.vehicle;
    let ok = |violation: f64, scale: f64| violation <= tol * (1.0 + math::abs(scale));
    if !ok(math::abs(w[0] - inst.w_init), inst.w_init) {
        return false;
    }
    if mode == BoundaryMode::FixedFinal && !ok(math::abs(w[n - 1] - inst.w_fin), inst.w_fin) {
        return false;
    }
    for i in 0..n {
        if !ok(-w[i], 0.0) || !ok(w[i] - inst.w_max[i], inst.w_max[i]) {
            return false;
        }
    }
    for i in 0..n - 1 {
        // Stage positions need strictly positive speed for the time term.
        if w[i] <= 0.0 {
            return false;
        }
        let f = (w[i + 1] - w[i]) / inst.h + v.gamma * w[i] + inst.grade_resistance(i);
        let friction = v.friction_bound();
        if !ok(math::abs(f) - friction, friction) {
            return false;
        }
        let power_bound = v.p_max / (v.mass * math::sqrt(w[i]));
        if !ok(f - power_bound, power_bound) {
            return false;
        }
    }
    true
}

/// Iterates the two cap-lowering passes (forward thrust, backward brake) to
/// a fixed point. Entries only decrease; the fixed point satisfies every
/// stage's force bounds, so a start above a feasible profile lands on a
/// feasible one (boundary pins excepted: the caller must check those, since
/// lowering can in principle undercut a pinned speed).
pub fn project_to_feasible(inst: &TrackInstance, start: &[f64], eps: f64) -> Result<Vec<f64>> {
    let mut u = start.to_vec();
    for _ in 0..MAX_ENVELOPE_ITERATIONS {
        let next = sweep(
            SweepKind::BackwardBrakeCap,
            &sweep(SweepKind::ForwardThrustCap, &u, inst)?,
            inst,
        )?;
        let delta = math::max_abs_diff(&next, &u);
        u = next;
        if delta <= eps {
            return Ok(u);
        }
    }
    Err(Error::IterationLimit {
        what: "feasibility projection",
        limit: MAX_ENVELOPE_ITERATIONS,
    })
}

/// A feasible profile found by the grid dynamic program.
#[derive(Debug, Clone, PartialEq)]
pub struct DpSolution {
    pub w: Vec<f64>,
    pub objective: ObjectiveBreakdown,
    /// First-order discretization allowance: how far the grid optimum may sit
    /// above the continuous optimum. Per position the path may miss the ideal
    /// speed by up to two grid steps (one from rounding, one from restoring
    /// admissibility of the neighboring transitions); the factor in brackets
    /// bounds the objective gradient in that coordinate along the window.
    pub grid_error_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DpOutcome {
    Solved(DpSolution),
    /// The instance itself is infeasible (envelope verdict).
    Infeasible,
    /// The grids are too coarse to connect the boundary speeds.
    NoGridPath,
}

/// Discretizes each position's envelope window into `grid_points` speeds and
/// minimizes the stage-summed objective over grid profiles whose transitions
/// satisfy the force bounds outright. The result is feasible by
/// construction, hence an upper bound on the optimal value; the relaxation
/// value is a lower bound, and the two sandwich the optimum.
pub fn dp_optimize(
    inst: &TrackInstance,
    mode: BoundaryMode,
    grid_points: usize,
) -> Result<DpOutcome> {
    if grid_points < 2 {
        return Err(Error::InvalidParameter {
            name: "grid_points",
            requirement: "at least two",
            value: grid_points as f64,
        });
    }
    let (z, y) = match compute_zy(inst, mode, 1e-9)? {
        FeasibilityVerdict::Infeasible { .. } => return Ok(DpOutcome::Infeasible),
        FeasibilityVerdict::Feasible { z, y, .. } => (z, y),
    };
    let n = inst.n();
    let v = &inst.vehicle;

    let grids: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let width = z[i] - y[i];
            if width <= 1e-12 * f64::max(1.0, math::abs(z[i])) {
                vec![0.5 * (y[i] + z[i])]
            } else {
                let step = width / (grid_points - 1) as f64;
                (0..grid_points).map(|k| y[i] + step * k as f64).collect()
            }
        })
        .collect();

    let friction = v.friction_bound();
    // Admissibility slack: purely to keep boundary transitions from being
    // dropped to rounding; far below the feasibility tolerances used on the
    // result.
    let tiny = 1e-12;

    let mut cost = vec![0.0f64];
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let cur = &grids[i];
        let next = &grids[i + 1];
        let mut next_cost = vec![f64::INFINITY; next.len()];
        let mut parent = vec![u32::MAX; next.len()];
        let (next_lo, next_step) = (next[0], if next.len() > 1 { next[1] - next[0] } else { 1.0 });
        for (ai, (&a, &ca)) in cur.iter().zip(&cost).enumerate() {
            if !ca.is_finite() || a <= 1e-12 {
                continue;
            }
            let stage_time = inst.h / math::sqrt(a);
            let power_bound = v.p_max / (v.mass * math::sqrt(a));
            let reach_lo = f64::max(next[0], brake_reach(a, inst.alpha[i], inst));
            let reach_hi = f64::min(next[next.len() - 1], thrust_reach(a, inst.alpha[i], inst));
            if reach_lo > reach_hi + tiny {
                continue;
            }
            let k_lo = math::ceil((reach_lo - next_lo) / next_step - 1e-9).max(0.0) as usize;
            let k_hi = usize::min(
                next.len() - 1,
                math::floor((reach_hi - next_lo) / next_step + 1e-9).max(0.0) as usize,
            );
            for k in k_lo..=k_hi {
                let b = next[k];
                let f = (b - a) / inst.h + v.gamma * a + inst.grade_resistance(i);
                if f > friction + tiny * (1.0 + friction)
                    || f < -friction - tiny * (1.0 + friction)
                    || f > power_bound + tiny * (1.0 + power_bound)
                {
                    continue;
                }
                let stage = inst.h * inst.lambda * v.mass * f64::max(inst.eta * f, f) + stage_time;
                let c = ca + stage;
                if c < next_cost[k] {
                    next_cost[k] = c;
                    parent[k] = ai as u32;
                }
            }
        }
        parents.push(parent);
        cost = next_cost;
    }

    // Pinned final grids are a single node, so FixedFinal needs no special
    // casing: the argmin ranges over exactly the demanded speed.
    let (mut k_best, mut best) = (usize::MAX, f64::INFINITY);
    for (k, &c) in cost.iter().enumerate() {
        if c < best {
            best = c;
            k_best = k;
        }
    }
    if !best.is_finite() {
        return Ok(DpOutcome::NoGridPath);
    }

    let mut w = vec![0.0; n];
    let mut k = k_best;
    for i in (0..n).rev() {
        w[i] = grids[i][k];
        if i > 0 {
            k = parents[i - 1][k] as usize;
        }
    }
    let f = force_profile(&w, inst)?;
    let breakdown = objective(&w, &f, inst)?;

    // Discretization allowance, evaluated along the returned path. A speed
    // perturbation of size d changes the pace term by at most
    // 0.5 * h * w^{-3/2} * d and, through the two adjacent stage forces, the
    // energy term by at most 2 * lambda * mass * d.
    let mut grid_error_bound = 0.0;
    for i in 0..n {
        let step = if grids[i].len() > 1 {
            grids[i][1] - grids[i][0]
        } else {
            0.0
        };
        if step == 0.0 {
            continue;
        }
        let deviation = 2.0 * step;
        let w_lo = f64::max(1e-6, f64::max(y[i], w[i] - deviation));
        let time_sens = if i < n - 1 {
            0.5 * inst.h / (w_lo * math::sqrt(w_lo))
        } else {
            0.0
        };
        let energy_sens = 2.0 * inst.lambda * v.mass;
        grid_error_bound += (time_sens + energy_sens) * deviation;
    }

    Ok(DpOutcome::Solved(DpSolution {
        w,
        objective: breakdown,
        grid_error_bound,
    }))
}

/// Seeded random instance factory. All draws come from one stream, so a
/// fixed seed reproduces the exact instance sequence.
pub struct InstanceGenerator {
    rng: ChaCha8Rng,
}

const GENERATION_ATTEMPTS: usize = 200;

impl InstanceGenerator {
    pub fn new(seed: u64) -> Self {
        InstanceGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A random valid instance near the reference vehicle, without any
    /// feasibility guarantee; boundary speeds still to be chosen.
    fn draft(&mut self, n: usize) -> Result<TrackInstance> {
        assert!(n >= 2, "instances need at least two positions");
        let r = &mut self.rng;
        let vehicle = VehicleParams::new(
            r.random_range(1100.0..=1350.0),
            r.random_range(55_000.0..=70_000.0),
            r.random_range(0.75..=0.85),
            r.random_range(0.006..=0.012),
            r.random_range(3.0e-4..=5.0e-4),
        )?;
        let h = r.random_range(0.5..=2.0);
        let alpha: Vec<f64> = (0..n - 1).map(|_| r.random_range(-0.06..=0.06)).collect();
        let w_init = r.random_range(6.0..=60.0);
        let mut cap: f64 = r.random_range(60.0..=200.0);
        let w_max: Vec<f64> = (0..n)
            .map(|i| {
                cap = (cap + r.random_range(-15.0..=15.0)).clamp(30.0, 400.0);
                if i == 0 {
                    f64::max(cap, w_init)
                } else {
                    cap
                }
            })
            .collect();
        let lambda = if r.random_bool(0.5) {
            0.0
        } else {
            r.random_range(1.0e-6..=2.0e-4)
        };
        let eta = r.random_range(0.3..=1.0);
        TrackInstance::new(vehicle, h, alpha, w_max, w_init, 0.0, lambda, eta)
    }

    /// An instance that satisfies all three exactness conditions and has its
    /// demanded final speed strictly inside the reachable window.
    pub fn feasible(&mut self, n: usize) -> Result<TrackInstance> {
        for _ in 0..GENERATION_ATTEMPTS {
            let mut inst = self.draft(n)?;
            if !check_assumptions(&inst).all_hold() {
                continue;
            }
            let Some((lo, hi)) = reachable_intervals(&inst)?.final_window() else {
                continue;
            };
            if hi - lo <= 1e-6 {
                continue;
            }
            inst.w_fin = lo + self.rng.random_range(0.05..=0.95) * (hi - lo);
            return Ok(inst);
        }
        Err(Error::IterationLimit {
            what: "feasible instance generation",
            limit: GENERATION_ATTEMPTS,
        })
    }

    /// An instance that provably admits no profile: either the demanded
    /// final speed exceeds the reachable maximum, or a mid-track cap cliff
    /// empties a window. Every candidate is re-verified before it is
    /// returned.
    pub fn infeasible(&mut self, n: usize) -> Result<TrackInstance> {
        for _ in 0..GENERATION_ATTEMPTS {
            let mut inst = self.draft(n)?;
            // Un-cap the final position first: choosing the demanded speed
            // against a still-binding cap would let the raise itself re-open
            // feasibility.
            inst.w_max[n - 1] = 1.0e4;
            if !check_assumptions(&inst).all_hold() {
                continue;
            }
            let intervals = match reachable_intervals(&inst)? {
                Reachability::Reachable { intervals } => intervals,
                Reachability::EmptyAt { .. } => continue,
            };
            let hi = intervals[n - 1].1;
            if self.rng.random_bool(0.5) && n >= 4 {
                // Cap cliff: choke a middle position far below its forward
                // reach and demand the unchoked maximum at the end.
                let j = n / 2;
                let mut choked = inst.clone();
                choked.w_max[j] = f64::max(1e-3, 0.05 * intervals[j].1);
                choked.w_fin = hi;
                if check_assumptions(&choked).all_hold()
                    && !is_instance_feasible(&choked, BoundaryMode::FixedFinal)?
                {
                    return Ok(choked);
                }
            }
            // Demanded final speed strictly beyond the thrust-reachable
            // maximum, which the floor-of-30 interior caps keep below 1e4.
            inst.w_fin = 1.3 * hi + 1.0;
            if inst.w_fin < inst.w_max[n - 1]
                && !is_instance_feasible(&inst, BoundaryMode::FixedFinal)?
            {
                return Ok(inst);
            }
        }
        Err(Error::IterationLimit {
            what: "infeasible instance generation",
            limit: GENERATION_ATTEMPTS,
        })
    }

    /// A feasible or infeasible instance with equal probability, labeled.
    pub fn mixed(&mut self, n: usize) -> Result<(TrackInstance, bool)> {
        if self.rng.random_bool(0.5) {
            Ok((self.feasible(n)?, true))
        } else {
            Ok((self.infeasible(n)?, false))
        }
    }

    /// A flat, uncapped, pure-time instance whose demanded final speed sits
    /// close to the thrust-reachable maximum. Without window tightening the
    /// relaxation goes loose on a trailing run of stages on this family.
    pub fn gap_instance(&mut self, n: usize) -> Result<TrackInstance> {
        let w_init = self.rng.random_range(4.0..=10.0);
        let frac = self.rng.random_range(0.85..=0.98);
        let mut inst = TrackInstance::new(
            reference_vehicle(),
            1.0,
            vec![0.0; n - 1],
            vec![400.0; n],
            w_init,
            0.0,
            0.0,
            1.0,
        )?;
        let (_, hi) = reachable_intervals(&inst)?
            .final_window()
            .expect("uncapped flat track is reachable");
        inst.w_fin = frac * hi;
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxation::{plan, PlanOptions, PlanOutcome};
    use approx::assert_abs_diff_eq;

    fn reference_n3(lambda: f64) -> TrackInstance {
        TrackInstance::new(
            reference_vehicle(),
            1.0,
            vec![0.0, 0.0],
            vec![16.0, 100.0, 16.0],
            16.0,
            16.0,
            lambda,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn reachable_windows_reference_fixture() {
        let inst = reference_n3(0.0);
        let Reachability::Reachable { intervals } = reachable_intervals(&inst).unwrap() else {
            panic!("reference instance is reachable");
        };
        assert_eq!(intervals.len(), 3);
        assert_abs_diff_eq!(intervals[0].0, 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(intervals[0].1, 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(intervals[1].0, 8.0475, epsilon = 1e-4);
        assert_abs_diff_eq!(intervals[1].1, 23.7435, epsilon = 1e-4);
        assert_abs_diff_eq!(intervals[2].0, 0.0982, epsilon = 1e-4);
        assert_abs_diff_eq!(intervals[2].1, 16.0, epsilon = 1e-12);
        assert!(is_instance_feasible(&inst, BoundaryMode::FixedFinal).unwrap());
        assert!(is_instance_feasible(&inst, BoundaryMode::FreeFinal).unwrap());
    }

    #[test]
    fn unreachable_final_speed_detected() {
        let inst = TrackInstance::new(
            reference_vehicle(),
            1.0,
            vec![0.0],
            vec![1.0, 100.0],
            1.0,
            100.0,
            0.0,
            1.0,
        )
        .unwrap();
        let window = reachable_intervals(&inst).unwrap().final_window().unwrap();
        assert_abs_diff_eq!(window.1, 8.7495, epsilon = 1e-4);
        assert!(!is_instance_feasible(&inst, BoundaryMode::FixedFinal).unwrap());
        assert!(is_instance_feasible(&inst, BoundaryMode::FreeFinal).unwrap());
    }

    #[test]
    fn meet_join_componentwise() {
        let (meet, join) = meet_join(&[1.0, 5.0, 2.0], &[3.0, 4.0, 2.0]);
        assert_eq!(meet, vec![1.0, 4.0, 2.0]);
        assert_eq!(join, vec![3.0, 5.0, 2.0]);
    }

    #[test]
    fn point_checker_accepts_and_rejects() {
        let inst = reference_n3(0.0);
        assert!(is_feasible_point(
            &inst,
            BoundaryMode::FixedFinal,
            &[16.0, 20.0, 16.0],
            1e-9
        ));
        // Cap violation.
        assert!(!is_feasible_point(
            &inst,
            BoundaryMode::FixedFinal,
            &[16.0, 101.0, 16.0],
            1e-9
        ));
        // Thrust beyond the friction bound.
        assert!(!is_feasible_point(
            &inst,
            BoundaryMode::FixedFinal,
            &[16.0, 24.5, 16.0],
            1e-9
        ));
        // Broken initial pin.
        assert!(!is_feasible_point(
            &inst,
            BoundaryMode::FixedFinal,
            &[17.0, 20.0, 16.0],
            1e-9
        ));
        // Free-final mode drops the final pin.
        assert!(is_feasible_point(
            &inst,
            BoundaryMode::FreeFinal,
            &[16.0, 20.0, 14.0],
            1e-9
        ));
    }

    #[test]
    fn projection_lands_on_feasible_profiles() {
        let inst = reference_n3(0.0);
        let projected = project_to_feasible(&inst, &[16.0, 50.0, 16.0], 1e-12).unwrap();
        assert!(is_feasible_point(
            &inst,
            BoundaryMode::FixedFinal,
            &projected,
            1e-9
        ));
        assert_abs_diff_eq!(projected[0], 16.0, epsilon = 1e-9);
        assert_abs_diff_eq!(projected[2], 16.0, epsilon = 1e-9);
        assert!(projected[1] <= 50.0);

        // The upper envelope is already feasible, hence a fixed point.
        let FeasibilityVerdict::Feasible { z, .. } =
            compute_zy(&inst, BoundaryMode::FixedFinal, 1e-9).unwrap()
        else {
            panic!("reference instance is feasible");
        };
        let again = project_to_feasible(&inst, &z, 1e-12).unwrap();
        for (a, b) in again.iter().zip(&z) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn dp_sandwiches_the_relaxed_optimum() {
        let inst = reference_n3(0.0);
        let PlanOutcome::Planned(report) =
            plan(&inst, BoundaryMode::FixedFinal, &PlanOptions::default()).unwrap()
        else {
            panic!("reference instance plans");
        };
        let DpOutcome::Solved(dp) = dp_optimize(&inst, BoundaryMode::FixedFinal, 400).unwrap()
        else {
            panic!("grid path exists");
        };
        assert!(is_feasible_point(&inst, BoundaryMode::FixedFinal, &dp.w, 1e-9));
        // Lower bound from the relaxation (certified through the duality
        // gap: the reported objective can overshoot the optimum by about
        // that much), upper bound from the grid.
        assert!(dp.objective.total >= report.solver_objective - report.solver_gap - 1e-9);
        assert!(dp.objective.total - report.solver_objective <= dp.grid_error_bound);
        assert!(dp.objective.total - report.solver_objective <= 0.01 * report.solver_objective);
        assert_abs_diff_eq!(dp.w[1], 23.7435, epsilon = 0.1);
    }

    #[test]
    fn dp_with_energy_weight_stays_sandwiched() {
        let inst = reference_n3(2.0e-4);
        let PlanOutcome::Planned(report) =
            plan(&inst, BoundaryMode::FixedFinal, &PlanOptions::default()).unwrap()
        else {
            panic!("reference instance plans");
        };
        let DpOutcome::Solved(dp) = dp_optimize(&inst, BoundaryMode::FixedFinal, 400).unwrap()
        else {
            panic!("grid path exists");
        };
        assert!(dp.objective.total >= report.solver_objective - report.solver_gap - 1e-9);
        assert!(dp.objective.total - report.solver_objective <= dp.grid_error_bound);
        assert!(dp.objective.total - report.solver_objective <= 0.01 * report.solver_objective);
    }

    #[test]
    fn dp_reports_infeasible_instances() {
        let inst = TrackInstance::new(
            reference_vehicle(),
            1.0,
            vec![0.0],
            vec![1.0, 100.0],
            1.0,
            100.0,
            0.0,
            1.0,
        )
        .unwrap();
        assert_eq!(
            dp_optimize(&inst, BoundaryMode::FixedFinal, 100).unwrap(),
            DpOutcome::Infeasible
        );
    }

    #[test]
    fn generator_feasible_instances_pass_both_oracles() {
        let mut g = InstanceGenerator::new(7);
        for n in [5usize, 10, 17] {
            let inst = g.feasible(n).unwrap();
            assert!(check_assumptions(&inst).all_hold());
            assert!(is_instance_feasible(&inst, BoundaryMode::FixedFinal).unwrap());
            assert!(matches!(
                compute_zy(&inst, BoundaryMode::FixedFinal, 1e-9).unwrap(),
                FeasibilityVerdict::Feasible { .. }
            ));
        }
    }

    #[test]
    fn generator_infeasible_instances_flagged_by_both_oracles() {
        let mut g = InstanceGenerator::new(11);
        for n in [4usize, 9, 14] {
            let inst = g.infeasible(n).unwrap();
            assert!(!is_instance_feasible(&inst, BoundaryMode::FixedFinal).unwrap());
            assert!(matches!(
                compute_zy(&inst, BoundaryMode::FixedFinal, 1e-9).unwrap(),
                FeasibilityVerdict::Infeasible { .. }
            ));
        }
    }

    #[test]
    fn generator_is_deterministic_per_seed() {
        let a = InstanceGenerator::new(42).feasible(8).unwrap();
        let b = InstanceGenerator::new(42).feasible(8).unwrap();
        assert_eq!(a, b);
        let c = InstanceGenerator::new(43).feasible(8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gap_family_needs_tightening() {
        let mut g = InstanceGenerator::new(3);
        let inst = g.gap_instance(8).unwrap();
        assert!(check_assumptions(&inst).all_hold());

        let loose_opts = PlanOptions {
            tighten: false,
            ..PlanOptions::default()
        };
        let PlanOutcome::Planned(loose) =
            plan(&inst, BoundaryMode::FixedFinal, &loose_opts).unwrap()
        else {
            panic!("gap instance is feasible");
        };
        assert!(!loose.exactness.is_exact, "untightened solve must go loose");
        assert!(loose.exactness.tail_length >= 1);
        assert!(loose.exactness.violations_are_suffix);

        let PlanOutcome::Planned(tight) =
            plan(&inst, BoundaryMode::FixedFinal, &PlanOptions::default()).unwrap()
        else {
            panic!("gap instance is feasible");
        };
        assert!(tight.exactness.is_exact, "tightening must restore exactness");
        assert!(tight.solver_objective - loose.solver_objective > 1e-4);
        assert_abs_diff_eq!(
            tight.objective.total,
            tight.solver_objective,
            epsilon = 1e-7
        );
    }
}
