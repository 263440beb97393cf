//! Feasibility-window tightening.
//!
//! The one-step dynamics bound how kinetic energy can change between
//! adjacent positions. With the forward map
//!
//! ```text
//! l(w) = (1 - h*gamma) * w + h * min(p_max / (mass * sqrt(w)), g * mu)
//! ```
//!
//! a step leaving position `i` admits `w_{i+1}` iff
//! `(1 - h*gamma)*w_i - h*g*(sin a_i + c + mu) <= w_{i+1}` (braking limit)
//! and `w_{i+1} <= l(w_i) - h*g*(sin a_i + c)` (power/friction limit). Both
//! maps are monotone when the step condition of
//! [`crate::model::check_assumptions`] (condition 3) holds, so per-position
//! windows can be contracted by four alternating sweeps until they reach the
//! componentwise extremes of the feasible set: the upper envelope `z` and
//! lower envelope `y`. An empty window proves infeasibility; the envelopes
//! otherwise certify it and tighten the relaxation into exactness.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::model::{BoundaryMode, TrackInstance};
use crate::{Error, Result};

/// Iteration cap for the envelope fixed-point loop.
pub const MAX_ENVELOPE_ITERATIONS: usize = 10_000;

/// Default max-norm termination threshold for the envelope iteration.
pub const DEFAULT_ENVELOPE_EPS: f64 = 1e-9;

/// Convergence tolerance scale for the one-step map inversion.
const INVERSE_TOL: f64 = 1e-12;
const INVERSE_MAX_ITER: usize = 200;

/// Lower/upper bound vectors attached to a relaxation box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsVectors {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Verdict of the envelope iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityVerdict {
    /// Windows converged; `z`/`y` are the per-position upper/lower envelopes
    /// of the feasible set.
    Feasible {
        z: Vec<f64>,
        y: Vec<f64>,
        iterations: usize,
    },
    /// A window emptied: at `witness_index` (1-based position) the running
    /// cap fell below the running floor during iteration `iteration`.
    Infeasible {
        iteration: usize,
        witness_index: usize,
    },
}

/// Instrumentation record for the envelope iteration (exact comparisons).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeTrace {
    pub iterations: usize,
    /// Caps never increased at any half-sweep.
    pub caps_nonincreasing: bool,
    /// Floors never decreased at any half-sweep.
    pub floors_nondecreasing: bool,
}

/// Outcome of the backward lower-bound recursion.
#[derive(Debug, Clone, PartialEq)]
pub enum LowerBoundsOutcome {
    Feasible { lower: Vec<f64> },
    /// Smallest 1-based position whose recursed lower bound exceeds its cap.
    InfeasibleAt { index: usize },
}

/// One-step forward map `l(w)`: kinetic energy reachable from `w` over one
/// step at full traction, before grade and rolling terms are applied.
///
/// Strictly positive `w` required; below the critical kinetic energy the
/// friction branch `(1-h*gamma)*w + h*g*mu` applies, above it the power
/// branch `(1-h*gamma)*w + h*p_max/(mass*sqrt(w))`.
pub fn ell(w: f64, inst: &TrackInstance) -> Result<f64> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Domain {
            what: "ell argument (must be strictly positive)",
            value: w,
        });
    }
    Ok(ell_extended(w, inst))
}

/// `ell` extended continuously to the whole line: `hat l(0) = h*g*mu` and an
/// affine continuation below zero. Sweeps may legitimately drive caps through
/// zero on the way to an infeasibility witness, so the internal maps never
/// reject arguments.
#[inline]
pub(crate) fn ell_extended(w: f64, inst: &TrackInstance) -> f64 {
    let v = &inst.vehicle;
    let fb = v.friction_bound();
    let traction = if w <= 0.0 {
        fb
    } else {
        f64::min(v.p_max / (v.mass * math::sqrt(w)), fb)
    };
    (1.0 - inst.h * v.gamma) * w + inst.h * traction
}

/// Inverse of the one-step forward map: the unique `w >= 0` with
/// `l(w) = target`.
///
/// Requires the monotone-map condition (condition 3) so the inverse is
/// well-defined, and `target >= h*g*mu` (the infimum of `l` on `w > 0`);
/// smaller targets have no nonnegative preimage. The friction branch is
/// closed-form; the power branch uses bisection-safeguarded Newton.
pub fn ell_inverse(target: f64, inst: &TrackInstance) -> Result<f64> {
    let v = &inst.vehicle;
    if crate::model::step_condition_slack(inst.h, v) < 0.0 {
        return Err(Error::AssumptionViolated {
            what: "one-step map monotonicity (step condition 3)",
        });
    }
    if !target.is_finite() {
        return Err(Error::Domain {
            what: "ell_inverse target",
            value: target,
        });
    }
    let one_m_hg = 1.0 - inst.h * v.gamma;
    let floor_value = inst.h * v.friction_bound();
    if target < floor_value {
        return Err(Error::Domain {
            what: "ell_inverse target (below the map infimum h*g*mu)",
            value: target,
        });
    }
    if target == floor_value {
        return Ok(0.0);
    }
    let w_bar = crate::model::critical_speed(v);
    let at_branch = ell_extended(w_bar, inst);
    if target <= at_branch {
        // Friction branch: (1 - h*gamma) * w + h*g*mu = target.
        return Ok((target - floor_value) / one_m_hg);
    }
    // Power branch: phi(w) = (1-h*gamma)*w + h*p_max/(mass*sqrt(w)) - target.
    let tol = INVERSE_TOL * f64::max(1.0, math::abs(target));
    let phi = |w: f64| ell_extended(w, inst) - target;
    let mut lo = w_bar;
    let mut hi = target / one_m_hg + 1.0;
    debug_assert!(phi(lo) <= 0.0);
    debug_assert!(phi(hi) >= 0.0);
    let mut w = 0.5 * (lo + hi);
    for _ in 0..INVERSE_MAX_ITER {
        let val = phi(w);
        if math::abs(val) <= tol {
            return Ok(w);
        }
        if val > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        // Newton step, falling back to bisection when it leaves the bracket
        // or the derivative degenerates (slack ~ 0 near the branch point).
        let dphi = one_m_hg - inst.h * v.p_max / (2.0 * v.mass * math::powf(w, 1.5));
        let newton = if dphi > 0.0 { w - val / dphi } else { f64::NAN };
        w = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::IterationLimit {
        what: "ell_inverse",
        limit: INVERSE_MAX_ITER,
    })
}

/// Backward floor propagation: the smallest `w_i >= floor` from which
/// `w_next` stays reachable under full traction on a stage with slope
/// `alpha`, i.e. `l(w_i) >= w_next + h*g*(sin alpha + c)`.
pub fn xi1(w_next: f64, floor: f64, alpha: f64, inst: &TrackInstance) -> Result<f64> {
    let needed = w_next + inst.h * grade(alpha, inst);
    if ell_extended(f64::max(floor, 0.0), inst) >= needed {
        Ok(floor)
    } else {
        // needed > l(max(floor,0)) >= h*g*mu, so the inverse is defined and
        // exceeds the floor by monotonicity.
        ell_inverse(needed, inst)
    }
}

/// Forward cap propagation: the largest `w_{i+1} <= cap` reachable from
/// `w_prev` under full traction on a stage with slope `alpha`.
pub fn xi2(w_prev: f64, cap: f64, alpha: f64, inst: &TrackInstance) -> Result<f64> {
    Ok(f64::min(
        cap,
        ell_extended(w_prev, inst) - inst.h * grade(alpha, inst),
    ))
}

/// Forward floor propagation: the smallest `w_{i+1} >= floor` reachable from
/// `w_prev` under the braking limit.
pub fn xi3(w_prev: f64, floor: f64, alpha: f64, inst: &TrackInstance) -> f64 {
    let v = &inst.vehicle;
    f64::max(
        floor,
        (1.0 - inst.h * v.gamma) * w_prev - inst.h * (grade(alpha, inst) + v.friction_bound()),
    )
}

/// Backward cap propagation: the largest `w_i <= cap` from which `w_next`
/// remains attainable under the braking limit.
pub fn xi4(w_next: f64, cap: f64, alpha: f64, inst: &TrackInstance) -> Result<f64> {
    let v = &inst.vehicle;
    let one_m_hg = 1.0 - inst.h * v.gamma;
    if one_m_hg <= 0.0 {
        return Err(Error::AssumptionViolated {
            what: "1 - h*gamma > 0 (backward cap propagation)",
        });
    }
    Ok(f64::min(
        cap,
        (w_next + inst.h * (grade(alpha, inst) + v.friction_bound())) / one_m_hg,
    ))
}

#[inline]
fn grade(alpha: f64, inst: &TrackInstance) -> f64 {
    inst.vehicle.g * (math::sin(alpha) + inst.vehicle.c_roll)
}

/// The four window-contraction passes. Each consumes a single running vector
/// whose entries are read in the pass's own sense (floors for floor-raising
/// passes, caps for cap-lowering ones).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Backward over [`xi1`]: raise floors so every next-position floor stays
    /// reachable at full traction.
    BackwardReachFloor,
    /// Forward over [`xi2`]: lower caps to what full traction can reach from
    /// the previous cap.
    ForwardThrustCap,
    /// Forward over [`xi3`]: raise floors to what the braking limit forces
    /// from the previous floor.
    ForwardBrakeFloor,
    /// Backward over [`xi4`]: lower caps to what still lets the next cap be
    /// reached without overrunning the braking limit.
    BackwardBrakeCap,
}

/// Runs one contraction pass over `running` (length `n`).
pub fn sweep(kind: SweepKind, running: &[f64], inst: &TrackInstance) -> Result<Vec<f64>> {
    let n = inst.n();
    if running.len() != n {
        return Err(Error::LengthMismatch {
            what: "sweep vector",
            expected: n,
            got: running.len(),
        });
    }
    let mut out = running.to_vec();
    match kind {
        SweepKind::BackwardReachFloor => {
            for j in (0..n - 1).rev() {
                out[j] = xi1(out[j + 1], running[j], inst.alpha[j], inst)?;
            }
        }
        SweepKind::ForwardThrustCap => {
            for i in 0..n - 1 {
                out[i + 1] = xi2(out[i], running[i + 1], inst.alpha[i], inst)?;
            }
        }
        SweepKind::ForwardBrakeFloor => {
            for i in 0..n - 1 {
                out[i + 1] = xi3(out[i], running[i + 1], inst.alpha[i], inst);
            }
        }
        SweepKind::BackwardBrakeCap => {
            for j in (0..n - 1).rev() {
                out[j] = xi4(out[j + 1], running[j], inst.alpha[j], inst)?;
            }
        }
    }
    Ok(out)
}

/// Backward lower-bound recursion: starting from the final boundary value,
/// propagates the smallest kinetic energy at each position from which the
/// rest of the track remains completable at full traction. Declares
/// infeasibility at the smallest position whose bound exceeds its cap.
pub fn tightened_lower_bounds(
    inst: &TrackInstance,
    mode: BoundaryMode,
) -> Result<LowerBoundsOutcome> {
    let n = inst.n();
    let w_min = inst.effective_w_min(mode);
    let w_max = inst.effective_w_max(mode);
    let mut lower = vec![0.0; n];
    lower[n - 1] = w_min[n - 1];
    for j in (0..n - 1).rev() {
        lower[j] = xi1(lower[j + 1], w_min[j], inst.alpha[j], inst)?;
    }
    for (j, (&l, &u)) in lower.iter().zip(&w_max).enumerate() {
        if l > u {
            return Ok(LowerBoundsOutcome::InfeasibleAt { index: j + 1 });
        }
    }
    Ok(LowerBoundsOutcome::Feasible { lower })
}

/// Envelope iteration: alternately contracts the cap vector (forward thrust,
/// backward brake) and the floor vector (backward reach, forward brake) until
/// both move less than `eps` in max-norm. Stops with an infeasibility witness
/// as soon as any cap falls below the matching floor (checked after every
/// half-sweep).
pub fn compute_zy(inst: &TrackInstance, mode: BoundaryMode, eps: f64) -> Result<FeasibilityVerdict> {
    compute_zy_traced(inst, mode, eps).map(|(v, _)| v)
}

/// [`compute_zy`] with an instrumentation record (used by the test suites to
/// assert monotone convergence with exact comparisons).
pub fn compute_zy_traced(
    inst: &TrackInstance,
    mode: BoundaryMode,
    eps: f64,
) -> Result<(FeasibilityVerdict, EnvelopeTrace)> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Domain {
            what: "envelope termination threshold",
            value: eps,
        });
    }
    if crate::model::step_condition_slack(inst.h, &inst.vehicle) < 0.0 {
        return Err(Error::AssumptionViolated {
            what: "one-step map monotonicity (step condition 3)",
        });
    }

    let mut caps = inst.effective_w_max(mode);
    let mut floors = inst.effective_w_min(mode);
    let mut caps_nonincreasing = true;
    let mut floors_nondecreasing = true;

    for iteration in 1..=MAX_ENVELOPE_ITERATIONS {
        let mut new_caps = sweep(SweepKind::ForwardThrustCap, &caps, inst)?;
        caps_nonincreasing &= dominated(&new_caps, &caps);
        if let Some(witness) = first_crossing(&new_caps, &floors) {
            return Ok((
                FeasibilityVerdict::Infeasible {
                    iteration,
                    witness_index: witness,
                },
                trace(iteration, caps_nonincreasing, floors_nondecreasing),
            ));
        }
        let tmp = sweep(SweepKind::BackwardBrakeCap, &new_caps, inst)?;
        caps_nonincreasing &= dominated(&tmp, &new_caps);
        new_caps = tmp;
        if let Some(witness) = first_crossing(&new_caps, &floors) {
            return Ok((
                FeasibilityVerdict::Infeasible {
                    iteration,
                    witness_index: witness,
                },
                trace(iteration, caps_nonincreasing, floors_nondecreasing),
            ));
        }

        let mut new_floors = sweep(SweepKind::BackwardReachFloor, &floors, inst)?;
        floors_nondecreasing &= dominated(&floors, &new_floors);
        if let Some(witness) = first_crossing(&new_caps, &new_floors) {
            return Ok((
                FeasibilityVerdict::Infeasible {
                    iteration,
                    witness_index: witness,
                },
                trace(iteration, caps_nonincreasing, floors_nondecreasing),
            ));
        }
        let tmp = sweep(SweepKind::ForwardBrakeFloor, &new_floors, inst)?;
        floors_nondecreasing &= dominated(&new_floors, &tmp);
        new_floors = tmp;
        if let Some(witness) = first_crossing(&new_caps, &new_floors) {
            return Ok((
                FeasibilityVerdict::Infeasible {
                    iteration,
                    witness_index: witness,
                },
                trace(iteration, caps_nonincreasing, floors_nondecreasing),
            ));
        }

        let cap_delta = math::max_abs_diff(&new_caps, &caps);
        let floor_delta = math::max_abs_diff(&new_floors, &floors);
        caps = new_caps;
        floors = new_floors;
        if cap_delta <= eps && floor_delta <= eps {
            return Ok((
                FeasibilityVerdict::Feasible {
                    z: caps,
                    y: floors,
                    iterations: iteration,
                },
                trace(iteration, caps_nonincreasing, floors_nondecreasing),
            ));
        }
    }
    Err(Error::IterationLimit {
        what: "envelope iteration",
        limit: MAX_ENVELOPE_ITERATIONS,
    })
}

fn trace(iterations: usize, caps: bool, floors: bool) -> EnvelopeTrace {
    EnvelopeTrace {
        iterations,
        caps_nonincreasing: caps,
        floors_nondecreasing: floors,
    }
}

/// `a <= b` componentwise.
fn dominated(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// First 1-based position where the cap falls strictly below the floor.
fn first_crossing(caps: &[f64], floors: &[f64]) -> Option<usize> {
    caps.iter()
        .zip(floors)
        .position(|(c, f)| c < f)
        .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VehicleParams;
    use approx::assert_abs_diff_eq;

    fn reference_vehicle() -> VehicleParams {
        VehicleParams::new(1200.0, 60_000.0, 0.8, 0.01, 4.0e-4).unwrap()
    }

    fn reference_n3() -> TrackInstance {
        TrackInstance::new(
            reference_vehicle(),
            1.0,
            vec![0.0, 0.0],
            vec![16.0, 100.0, 16.0],
            16.0,
            16.0,
            0.0,
            1.0,
        )
        .unwrap()
    }

    fn two_point(w_init: f64, w_fin: f64) -> TrackInstance {
        TrackInstance::new(
            reference_vehicle(),
            1.0,
            vec![0.0],
            vec![f64::max(w_init, 1.0), f64::max(w_fin, 100.0)],
            w_init,
            w_fin,
            0.0,
            1.0,
        )
        .unwrap()
    }

    /// Brute-force inversion of the one-step map by plain bisection on a wide
    /// bracket; independent of the production Newton path.
    fn ell_inverse_bisect(target: f64, inst: &TrackInstance) -> f64 {
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        while ell_extended(hi, inst) < target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ell_extended(mid, inst) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn forward_map_friction_branch() {
        let inst = reference_n3();
        assert_abs_diff_eq!(ell(10.0, &inst).unwrap(), 17.844, epsilon = 1e-9);
    }

    #[test]
    fn forward_map_power_branch() {
        let inst = reference_n3();
        assert_abs_diff_eq!(ell(100.0, &inst).unwrap(), 104.96, epsilon = 1e-9);
    }

    #[test]
    fn forward_map_rejects_nonpositive() {
        let inst = reference_n3();
        assert!(ell(0.0, &inst).is_err());
        assert!(ell(-3.0, &inst).is_err());
    }

    #[test]
    fn forward_map_identity_at_zero_step() {
        let inst = TrackInstance::new_unchecked(
            reference_vehicle(),
            0.0,
            vec![0.0, 0.0],
            vec![16.0, 100.0, 16.0],
            16.0,
            16.0,
            0.0,
            1.0,
        );
        for w in [1.0, 10.0, 40.0, 250.0] {
            assert_abs_diff_eq!(ell(w, &inst).unwrap(), w, epsilon = 1e-12);
        }
    }

    #[test]
    fn forward_map_continuous_at_branch_point() {
        let inst = reference_n3();
        let w_bar = crate::model::critical_speed(&inst.vehicle);
        let below = ell(w_bar * (1.0 - 1e-9), &inst).unwrap();
        let above = ell(w_bar * (1.0 + 1e-9), &inst).unwrap();
        assert!((below - above).abs() <= 1e-6 * w_bar);
    }

    #[test]
    fn inverse_recovers_friction_branch() {
        let inst = reference_n3();
        let w = ell_inverse(17.844, &inst).unwrap();
        assert_abs_diff_eq!(w, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn inverse_recovers_power_branch() {
        let inst = reference_n3();
        let w = ell_inverse(104.96, &inst).unwrap();
        assert_abs_diff_eq!(w, 100.0, epsilon = 1e-8);
    }

    #[test]
    fn inverse_matches_bisection_oracle() {
        let inst = reference_n3();
        for target in [7.9, 10.0, 17.844, 41.0, 70.0, 104.96, 500.0, 2.0e4] {
            let got = ell_inverse(target, &inst).unwrap();
            let want = ell_inverse_bisect(target, &inst);
            assert_abs_diff_eq!(got, want, epsilon = 1e-7 * target.max(1.0));
        }
    }

    #[test]
    fn inverse_rejects_target_below_infimum() {
        let inst = reference_n3();
        // The map infimum is h*g*mu = 7.848.
        let floor = inst.h * inst.vehicle.friction_bound();
        assert_abs_diff_eq!(floor, 7.848, epsilon = 1e-12);
        assert!(ell_inverse(7.0, &inst).is_err());
        assert!(ell_inverse(floor - 1e-9, &inst).is_err());
        assert_eq!(ell_inverse(floor, &inst).unwrap(), 0.0);
    }

    #[test]
    fn backward_floor_from_next_solves_map() {
        let inst = reference_n3();
        // Floor inactive: target below the map at the floor.
        let w = xi1(16.0, 0.0, 0.0, &inst).unwrap();
        assert_abs_diff_eq!(w, 8.2534, epsilon = 1e-4);
        // Floor active.
        let w = xi1(8.2534, 16.0, 0.0, &inst).unwrap();
        assert_eq!(w, 16.0);
    }

    #[test]
    fn forward_thrust_cap_values() {
        let inst = reference_n3();
        let w = xi2(16.0, 100.0, 0.0, &inst).unwrap();
        assert_abs_diff_eq!(w, 23.7435, epsilon = 1e-4);
        // Cap active.
        let w = xi2(23.7435, 16.0, 0.0, &inst).unwrap();
        assert_eq!(w, 16.0);
    }

    #[test]
    fn forward_brake_floor_values() {
        let inst = reference_n3();
        let w = xi3(20.0, 0.0, 0.0, &inst);
        assert_abs_diff_eq!(w, 12.0459, epsilon = 1e-4);
        let w = xi3(16.0, 8.2534, 0.0, &inst);
        assert_abs_diff_eq!(w, 8.2534, epsilon = 1e-12);
    }

    #[test]
    fn backward_brake_cap_values() {
        let inst = reference_n3();
        let w = xi4(20.0, 100.0, 0.0, &inst).unwrap();
        assert_abs_diff_eq!(w, 27.9573, epsilon = 1e-4);
        let w = xi4(23.7435, 16.0, 0.0, &inst).unwrap();
        assert_eq!(w, 16.0);
    }

    #[test]
    fn sweeps_match_manual_passes() {
        let inst = reference_n3();
        let floors = sweep(
            SweepKind::BackwardReachFloor,
            &[16.0, 0.0, 16.0],
            &inst,
        )
        .unwrap();
        assert_eq!(floors[2], 16.0);
        assert_abs_diff_eq!(floors[1], 8.2534, epsilon = 1e-4);
        assert_eq!(floors[0], 16.0);

        let caps = sweep(SweepKind::ForwardThrustCap, &[16.0, 100.0, 16.0], &inst).unwrap();
        assert_eq!(caps[0], 16.0);
        assert_abs_diff_eq!(caps[1], 23.7435, epsilon = 1e-4);
        assert_eq!(caps[2], 16.0);

        let floors2 = sweep(SweepKind::ForwardBrakeFloor, &floors, &inst).unwrap();
        // 0.9996*16 - 7.9461 = 8.0475 < 8.2534, so the floor stays.
        assert_abs_diff_eq!(floors2[1], floors[1], epsilon = 1e-12);

        let caps2 = sweep(SweepKind::BackwardBrakeCap, &caps, &inst).unwrap();
        assert_abs_diff_eq!(caps2[1], caps[1], epsilon = 1e-12);
        assert_eq!(caps2[0], 16.0);
    }

    #[test]
    fn lower_bounds_feasible_reference() {
        let inst = reference_n3();
        match tightened_lower_bounds(&inst, BoundaryMode::FixedFinal).unwrap() {
            LowerBoundsOutcome::Feasible { lower } => {
                assert_eq!(lower[0], 16.0);
                assert_abs_diff_eq!(lower[1], 8.2534, epsilon = 1e-4);
                assert_eq!(lower[2], 16.0);
            }
            other => panic!("expected feasible bounds, got {other:?}"),
        }
    }

    #[test]
    fn lower_bounds_detect_unreachable_final_speed() {
        // Demanding 100 after one step from 1: the recursed bound at the
        // first position lands on the power branch of the map inverse
        // (~95.006, not the friction-branch closed form) and exceeds the cap.
        let inst = two_point(1.0, 100.0);
        match tightened_lower_bounds(&inst, BoundaryMode::FixedFinal).unwrap() {
            LowerBoundsOutcome::InfeasibleAt { index } => assert_eq!(index, 1),
            other => panic!("expected infeasibility, got {other:?}"),
        }
        let needed = 100.0 + 9.81 * 0.01;
        let root = ell_inverse(needed, &inst).unwrap();
        let oracle = ell_inverse_bisect(needed, &inst);
        assert_abs_diff_eq!(root, oracle, epsilon = 1e-6);
        assert_abs_diff_eq!(root, 95.006, epsilon = 1e-2);
    }

    #[test]
    fn lower_bounds_zero_final_speed_are_trivial() {
        let inst = TrackInstance::new(
            reference_vehicle(),
            1.0,
            vec![0.0, 0.0],
            vec![16.0, 100.0, 16.0],
            16.0,
            0.0,
            0.0,
            1.0,
        )
        .unwrap();
        match tightened_lower_bounds(&inst, BoundaryMode::FixedFinal).unwrap() {
            LowerBoundsOutcome::Feasible { lower } => {
                assert_eq!(lower[1], 0.0);
                assert_eq!(lower[2], 0.0);
            }
            other => panic!("expected feasible bounds, got {other:?}"),
        }
    }

    #[test]
    fn envelope_reference_fixture() {
        let inst = reference_n3();
        let (verdict, trace) =
            compute_zy_traced(&inst, BoundaryMode::FixedFinal, DEFAULT_ENVELOPE_EPS).unwrap();
        match verdict {
            FeasibilityVerdict::Feasible { z, y, iterations } => {
                assert_eq!(iterations, 2);
                assert_eq!(z[0], 16.0);
                assert_abs_diff_eq!(z[1], 23.7435, epsilon = 1e-4);
                assert_eq!(z[2], 16.0);
                assert_eq!(y[0], 16.0);
                assert_abs_diff_eq!(y[1], 8.2534, epsilon = 1e-4);
                assert_eq!(y[2], 16.0);
            }
            other => panic!("expected feasible verdict, got {other:?}"),
        }
        assert!(trace.caps_nonincreasing);
        assert!(trace.floors_nondecreasing);
    }

    #[test]
    fn envelope_detects_infeasibility_with_witness() {
        let inst = two_point(1.0, 100.0);
        match compute_zy(&inst, BoundaryMode::FixedFinal, DEFAULT_ENVELOPE_EPS).unwrap() {
            FeasibilityVerdict::Infeasible {
                iteration,
                witness_index,
            } => {
                assert_eq!(iteration, 1);
                assert_eq!(witness_index, 2);
            }
            other => panic!("expected infeasible verdict, got {other:?}"),
        }
    }

    #[test]
    fn envelope_cruise_caps_bind_floors_dip() {
        // Constant caps at the boundary speed: the upper envelope is pinned
        // at the cap everywhere, while the lower envelope still dips at the
        // interior position to the coasting/braking limit.
        let inst = TrackInstance::new(
            reference_vehicle(),
            1.0,
            vec![0.0, 0.0],
            vec![16.0, 16.0, 16.0],
            16.0,
            16.0,
            0.0,
            1.0,
        )
        .unwrap();
        match compute_zy(&inst, BoundaryMode::FixedFinal, DEFAULT_ENVELOPE_EPS).unwrap() {
            FeasibilityVerdict::Feasible { z, y, iterations } => {
                assert_eq!(iterations, 2);
                assert_eq!(z, vec![16.0, 16.0, 16.0]);
                assert_eq!(y[0], 16.0);
                assert_abs_diff_eq!(y[1], 8.2534, epsilon = 1e-4);
                assert_eq!(y[2], 16.0);
            }
            other => panic!("expected feasible verdict, got {other:?}"),
        }
    }

    #[test]
    fn envelope_free_final_relaxes_last_position() {
        let inst = reference_n3();
        match compute_zy(&inst, BoundaryMode::FreeFinal, DEFAULT_ENVELOPE_EPS).unwrap() {
            FeasibilityVerdict::Feasible { z, y, .. } => {
                // Upper envelope still limited by the raw final cap; lower
                // envelope free to coast down. Without a final floor the
                // interior floor is the pure brake limit from the start.
                assert_eq!(z[0], 16.0);
                assert_abs_diff_eq!(z[1], 23.7435, epsilon = 1e-4);
                assert_eq!(z[2], 16.0);
                assert_abs_diff_eq!(y[1], 8.0475, epsilon = 1e-4);
                assert_abs_diff_eq!(y[2], 0.0982, epsilon = 1e-4);
            }
            other => panic!("expected feasible verdict, got {other:?}"),
        }
    }

    #[test]
    fn envelope_requires_monotone_map() {
        // Large step breaks condition 3.
        let inst = TrackInstance::new(
            reference_vehicle(),
            20.0,
            vec![0.0, 0.0],
            vec![16.0, 100.0, 16.0],
            16.0,
            16.0,
            0.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            compute_zy(&inst, BoundaryMode::FixedFinal, 1e-9),
            Err(Error::AssumptionViolated { .. })
        ));
    }
}
