//! Vehicle and track data model.
//!
//! The planning state is the kinetic energy per unit mass `w_i = v_i^2 / 2`
//! at uniformly spaced positions `i = 1..n` along the track (step `h`). The
//! per-stage traction force (per unit mass, stage `i = 1..n-1`) is the affine
//! map
//!
//! ```text
//! f_i = (w_{i+1} - w_i)/h + gamma * w_i + g * (sin(alpha_i) + c)
//! ```
//!
//! bounded by tyre friction `|f_i| <= g*mu` and by engine power
//! `f_i <= p_max / (mass * sqrt(w_i))`. The cost of a profile is
//! `sum_i h * (lambda * mass * max(eta*f_i, f_i) + 1/sqrt(w_i))`: a traction
//! energy term (recuperation discounted by `eta`) weighted against the
//! travel-time surrogate `1/sqrt(w_i)`.
//!
//! This module holds the data types, their validation, the sufficient
//! conditions under which the relaxation in [`crate::relaxation`] is exact,
//! and the force/cost evaluators shared by every other module.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Standard gravitational acceleration (m/s^2).
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Vehicle parameters. Units are SI throughout: kg, W, m/s^2; `gamma` (1/m)
/// is the drag force per unit mass per unit kinetic energy; `c_roll` and `mu`
/// are dimensionless.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// Vehicle mass (kg).
    pub mass: f64,
    /// Maximum traction power (W).
    pub p_max: f64,
    /// Tyre friction coefficient bounding |force|/(mass*g).
    pub mu: f64,
    /// Rolling-resistance coefficient.
    pub c_roll: f64,
    /// Aerodynamic drag per unit mass and kinetic energy (1/m).
    pub gamma: f64,
    /// Gravitational acceleration (m/s^2).
    pub g: f64,
}

impl VehicleParams {
    /// Validated constructor with standard gravity.
    pub fn new(mass: f64, p_max: f64, mu: f64, c_roll: f64, gamma: f64) -> Result<Self> {
        let v = VehicleParams {
            mass,
            p_max,
            mu,
            c_roll,
            gamma,
            g: STANDARD_GRAVITY,
        };
        v.validate()?;
        Ok(v)
    }

    /// Same, with an explicit gravitational acceleration.
    pub fn with_gravity(
        mass: f64,
        p_max: f64,
        mu: f64,
        c_roll: f64,
        gamma: f64,
        g: f64,
    ) -> Result<Self> {
        let v = VehicleParams {
            mass,
            p_max,
            mu,
            c_roll,
            gamma,
            g,
        };
        v.validate()?;
        Ok(v)
    }

    fn validate(&self) -> Result<()> {
        check_param("mass", self.mass, 0.0, true)?;
        check_param("p_max", self.p_max, 0.0, true)?;
        check_param("mu", self.mu, 0.0, true)?;
        check_param("c_roll", self.c_roll, 0.0, false)?;
        check_param("gamma", self.gamma, 0.0, false)?;
        check_param("g", self.g, 0.0, true)?;
        Ok(())
    }

    /// Friction force bound per unit mass, `g * mu` (m/s^2).
    #[inline]
    pub fn friction_bound(&self) -> f64 {
        self.g * self.mu
    }
}

fn check_param(name: &'static str, value: f64, floor: f64, strict: bool) -> Result<()> {
    let ok = value.is_finite() && if strict { value > floor } else { value >= floor };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            requirement: if strict {
                "finite and strictly positive"
            } else {
                "finite and nonnegative"
            },
            value,
        })
    }
}

/// Derives the drag coefficient `gamma = rho * frontal_area * c_drag / (2 * mass)`
/// from air density (kg/m^3), frontal area (m^2), aerodynamic drag
/// coefficient, and vehicle mass (kg).
pub fn derive_gamma(rho: f64, frontal_area: f64, c_drag: f64, mass: f64) -> Result<f64> {
    check_param("rho", rho, 0.0, true)?;
    check_param("frontal_area", frontal_area, 0.0, true)?;
    check_param("c_drag", c_drag, 0.0, true)?;
    check_param("mass", mass, 0.0, true)?;
    Ok(rho * frontal_area * c_drag / (2.0 * mass))
}

/// Whether the final kinetic energy is pinned to `w_fin` or left free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Final position must reach exactly `w_fin`.
    FixedFinal,
    /// Final position is only bounded by `[0, w_max_n]`.
    FreeFinal,
}

/// A planning instance: track geometry, vehicle, boundary conditions, and
/// objective weights.
///
/// Arrays are position-indexed: `w_max` has one entry per position (`n`
/// entries), `alpha` one entry per dynamics stage (`n - 1` entries, the slope
/// of the step leaving position `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct TrackInstance {
    pub vehicle: VehicleParams,
    /// Uniform position step (m).
    pub h: f64,
    /// Stage slopes (radians), length `n - 1`.
    pub alpha: Vec<f64>,
    /// Per-position kinetic-energy caps (m^2/s^2), length `n`.
    pub w_max: Vec<f64>,
    /// Initial kinetic energy (m^2/s^2), strictly positive.
    pub w_init: f64,
    /// Final kinetic energy (m^2/s^2), nonnegative.
    pub w_fin: f64,
    /// Energy weight (s/J): cost units are seconds.
    pub lambda: f64,
    /// Recuperation efficiency in `[0, 1]`.
    pub eta: f64,
}

impl TrackInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        vehicle: VehicleParams,
        h: f64,
        alpha: Vec<f64>,
        w_max: Vec<f64>,
        w_init: f64,
        w_fin: f64,
        lambda: f64,
        eta: f64,
    ) -> Result<Self> {
        let inst = TrackInstance {
            vehicle,
            h,
            alpha,
            w_max,
            w_init,
            w_fin,
            lambda,
            eta,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Test-only constructor that skips validation (used to probe operations
    /// outside the validated domain, e.g. the `h = 0` identity of the
    /// one-step map).
    #[cfg(test)]
    pub(crate) fn new_unchecked(
        vehicle: VehicleParams,
        h: f64,
        alpha: Vec<f64>,
        w_max: Vec<f64>,
        w_init: f64,
        w_fin: f64,
        lambda: f64,
        eta: f64,
    ) -> Self {
        TrackInstance {
            vehicle,
            h,
            alpha,
            w_max,
            w_init,
            w_fin,
            lambda,
            eta,
        }
    }

    fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        check_param("h", self.h, 0.0, true)?;
        let n = self.w_max.len();
        if n < 2 {
            return Err(Error::LengthMismatch {
                what: "w_max (need at least two positions)",
                expected: 2,
                got: n,
            });
        }
        if self.alpha.len() != n - 1 {
            return Err(Error::LengthMismatch {
                what: "alpha",
                expected: n - 1,
                got: self.alpha.len(),
            });
        }
        for &a in &self.alpha {
            if !a.is_finite() || math::abs(a) >= core::f64::consts::FRAC_PI_2 {
                return Err(Error::InvalidParameter {
                    name: "alpha",
                    requirement: "finite slope in (-pi/2, pi/2)",
                    value: a,
                });
            }
        }
        for &m in &self.w_max {
            check_param("w_max", m, 0.0, true)?;
        }
        check_param("w_init", self.w_init, 0.0, true)?;
        check_param("w_fin", self.w_fin, 0.0, false)?;
        if self.w_init > self.w_max[0] {
            return Err(Error::InvalidParameter {
                name: "w_init",
                requirement: "at most w_max at the first position",
                value: self.w_init,
            });
        }
        if self.w_fin > self.w_max[n - 1] {
            return Err(Error::InvalidParameter {
                name: "w_fin",
                requirement: "at most w_max at the last position",
                value: self.w_fin,
            });
        }
        check_param("lambda", self.lambda, 0.0, false)?;
        if !(self.eta.is_finite() && (0.0..=1.0).contains(&self.eta)) {
            return Err(Error::InvalidParameter {
                name: "eta",
                requirement: "in [0, 1]",
                value: self.eta,
            });
        }
        Ok(())
    }

    /// Number of positions `n`.
    #[inline]
    pub fn n(&self) -> usize {
        self.w_max.len()
    }

    /// Number of dynamics stages `n - 1`.
    #[inline]
    pub fn stages(&self) -> usize {
        self.w_max.len() - 1
    }

    /// Gravity times slope-plus-rolling term `g * (sin(alpha_i) + c)` for
    /// 0-based stage `i`.
    #[inline]
    pub fn grade_resistance(&self, stage: usize) -> f64 {
        self.vehicle.g * (math::sin(self.alpha[stage]) + self.vehicle.c_roll)
    }

    /// Per-position lower bounds implied by the boundary conditions:
    /// `w_init` at the first position, `w_fin` at the last in
    /// [`BoundaryMode::FixedFinal`], zero elsewhere.
    pub fn effective_w_min(&self, mode: BoundaryMode) -> Vec<f64> {
        let n = self.n();
        let mut lo = vec![0.0; n];
        lo[0] = self.w_init;
        if mode == BoundaryMode::FixedFinal {
            lo[n - 1] = self.w_fin;
        }
        lo
    }

    /// Per-position upper bounds with boundary pins applied.
    pub fn effective_w_max(&self, mode: BoundaryMode) -> Vec<f64> {
        let mut hi = self.w_max.clone();
        hi[0] = self.w_init;
        if mode == BoundaryMode::FixedFinal {
            let n = self.n();
            hi[n - 1] = self.w_fin;
        }
        hi
    }
}

/// Critical kinetic energy `(p_max / (mass * g * mu))^2` where the power
/// bound crosses the friction bound: below it friction limits traction,
/// above it power does.
pub fn critical_speed(vehicle: &VehicleParams) -> f64 {
    let r = vehicle.p_max / (vehicle.mass * vehicle.g * vehicle.mu);
    r * r
}

/// Condition 3 slack alone: `1 - h*gamma - h*p_max/(2*mass*w_bar^1.5)`.
/// Cheap enough for hot paths that must gate on map monotonicity.
#[inline]
pub(crate) fn step_condition_slack(h: f64, vehicle: &VehicleParams) -> f64 {
    let w_bar = critical_speed(vehicle);
    1.0 - h * vehicle.gamma - h * vehicle.p_max / (2.0 * vehicle.mass * math::powf(w_bar, 1.5))
}

/// Report of the three sufficient conditions for relaxation exactness.
///
/// Each condition is summarized by a slack (`holds` iff `slack >= 0`).
/// `a1_denominator_positive` is false when the first condition's denominator
/// `lambda*gamma*p_max*h + 1 - lambda` is nonpositive; the condition is then
/// reported as failed without dividing (slack is `-inf`).
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub critical_speed: f64,
    pub a1_holds: bool,
    pub a1_slack: f64,
    pub a1_denominator_positive: bool,
    pub a2_holds: bool,
    pub a2_slack: f64,
    /// 1-based positions whose cap exceeds the critical kinetic energy.
    pub index_set: Vec<usize>,
    pub a3_holds: bool,
    pub a3_slack: f64,
}

impl AssumptionReport {
    /// All three conditions hold.
    pub fn all_hold(&self) -> bool {
        self.a1_holds && self.a2_holds && self.a3_holds
    }
}

/// Evaluates the three sufficient exactness conditions for an instance.
///
/// * Condition 1 bounds the step size against the weighted objective:
///   `(1-h*gamma)*w_bar - h*g*(1+c) > (p_max*h / (2*mass*den))^(2/3)` with
///   `den = lambda*gamma*p_max*h + 1 - lambda`.
/// * Condition 2 requires, at every position whose cap exceeds the critical
///   kinetic energy, that maximum power can still hold the critical energy
///   against drag, rolling, and grade on the adjacent stage.
/// * Condition 3 makes the one-step forward map monotone:
///   `1 - h*gamma - h*p_max/(2*mass*w_bar^1.5) >= 0`.
pub fn check_assumptions(inst: &TrackInstance) -> AssumptionReport {
    let v = &inst.vehicle;
    let h = inst.h;
    let w_bar = critical_speed(v);
    let one_m_hg = 1.0 - h * v.gamma;

    // Condition 1.
    let den = inst.lambda * v.gamma * v.p_max * h + 1.0 - inst.lambda;
    let (a1_slack, a1_denominator_positive) = if den > 0.0 {
        let rhs = math::powf(v.p_max * h / (2.0 * v.mass * den), 2.0 / 3.0);
        let lhs = one_m_hg * w_bar - h * v.g * (1.0 + v.c_roll);
        (lhs - rhs, true)
    } else {
        (f64::NEG_INFINITY, false)
    };

    // Condition 2: minimum of the power-margin bracket over positions above
    // the critical energy. The bracket needs the adjacent stage slope, so
    // only positions with a dynamics stage (1..n-1) contribute to the
    // minimum; the reported index set covers all positions.
    let mut index_set = Vec::new();
    for (i, &cap) in inst.w_max.iter().enumerate() {
        if cap > w_bar {
            index_set.push(i + 1);
        }
    }
    let mut a2_slack = f64::INFINITY;
    if one_m_hg > 0.0 {
        for &pos in &index_set {
            let stage = pos - 1;
            if stage >= inst.stages() {
                continue;
            }
            let shifted = w_bar + h * inst.grade_resistance(stage);
            let bracket = if shifted > 0.0 {
                v.p_max / v.mass * math::sqrt(one_m_hg / shifted)
                    - v.gamma / one_m_hg * shifted
                    - inst.grade_resistance(stage)
            } else {
                f64::NEG_INFINITY
            };
            if bracket < a2_slack {
                a2_slack = bracket;
            }
        }
    } else {
        a2_slack = f64::NEG_INFINITY;
    }

    // Condition 3.
    let a3_slack = step_condition_slack(h, v);

    AssumptionReport {
        critical_speed: w_bar,
        a1_holds: a1_slack >= 0.0,
        a1_slack,
        a1_denominator_positive,
        a2_holds: a2_slack >= 0.0,
        a2_slack,
        index_set,
        a3_holds: a3_slack >= 0.0,
        a3_slack,
    }
}

/// Stage forces implied by a kinetic-energy profile:
/// `f_i = (w_{i+1} - w_i)/h + gamma*w_i + g*(sin(alpha_i) + c)`.
///
/// Affine in `w`; no positivity requirement on the entries of `w`.
pub fn force_profile(w: &[f64], inst: &TrackInstance) -> Result<Vec<f64>> {
    if w.len() != inst.n() {
        return Err(Error::LengthMismatch {
            what: "w",
            expected: inst.n(),
            got: w.len(),
        });
    }
    let v = &inst.vehicle;
    let mut f = Vec::with_capacity(inst.stages());
    for i in 0..inst.stages() {
        f.push((w[i + 1] - w[i]) / inst.h + v.gamma * w[i] + inst.grade_resistance(i));
    }
    Ok(f)
}

/// Objective value split into its energy and time terms (both in seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBreakdown {
    /// `sum_i h * lambda * mass * max(eta*f_i, f_i)`.
    pub energy_term: f64,
    /// `sum_i h / sqrt(w_i)`.
    pub time_term: f64,
    pub total: f64,
}

/// Evaluates the planning objective for a profile and its stage forces.
///
/// Positions `1..n-1` must have strictly positive kinetic energy (the time
/// term divides by `sqrt(w_i)`); the final position may be zero.
pub fn objective(w: &[f64], f: &[f64], inst: &TrackInstance) -> Result<ObjectiveBreakdown> {
    if w.len() != inst.n() {
        return Err(Error::LengthMismatch {
            what: "w",
            expected: inst.n(),
            got: w.len(),
        });
    }
    if f.len() != inst.stages() {
        return Err(Error::LengthMismatch {
            what: "f",
            expected: inst.stages(),
            got: f.len(),
        });
    }
    let v = &inst.vehicle;
    let mut energy = 0.0;
    let mut time = 0.0;
    for i in 0..inst.stages() {
        if !(w[i] > 0.0) {
            return Err(Error::Domain {
                what: "w (interior positions must be strictly positive)",
                value: w[i],
            });
        }
        let fi = f[i];
        energy += inst.h * inst.lambda * v.mass * f64::max(inst.eta * fi, fi);
        time += inst.h / math::sqrt(w[i]);
    }
    Ok(ObjectiveBreakdown {
        energy_term: energy,
        time_term: time,
        total: energy + time,
    })
}

/// Linearly interpolates samples `(s, value)` at the query points, clamping
/// beyond the sampled range. `s` must be strictly increasing and finite.
///
/// Used by ingestion to resample irregular track surveys onto the uniform
/// grid.
pub fn resample_linear(s: &[f64], values: &[f64], queries: &[f64]) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::LengthMismatch {
            what: "resample samples",
            expected: 1,
            got: 0,
        });
    }
    if s.len() != values.len() {
        return Err(Error::LengthMismatch {
            what: "resample values",
            expected: s.len(),
            got: values.len(),
        });
    }
    for pair in s.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::Domain {
                what: "resample abscissae (must be strictly increasing)",
                value: pair[1],
            });
        }
    }
    let mut out = Vec::with_capacity(queries.len());
    for &q in queries {
        if !q.is_finite() {
            return Err(Error::Domain {
                what: "resample query",
                value: q,
            });
        }
        let val = if q <= s[0] {
            values[0]
        } else if q >= s[s.len() - 1] {
            values[values.len() - 1]
        } else {
            // Binary search for the bracketing segment.
            let mut lo = 0usize;
            let mut hi = s.len() - 1;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if s[mid] <= q {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = (q - s[lo]) / (s[hi] - s[lo]);
            values[lo] + t * (values[hi] - values[lo])
        };
        out.push(val);
    }
    Ok(out)
}
