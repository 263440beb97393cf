//! Predictor-corrector interior-point iteration on the homogeneous
//! self-dual embedding.
//!
//! The embedding augments the primal-dual pair with scalars `tau, kappa`;
//! optimal points have `tau > 0, kappa = 0` and scale back to a solution,
//! while infeasible problems drive `tau -> 0` and leave a certificate in the
//! unscaled iterate. Search directions come from two solves against one
//! factorization of the reduced KKT matrix; step sizes keep the slack and
//! multiplier inside their cones with a 0.99 back-off; the centering weight
//! follows Mehrotra's heuristic `sigma = (1 - alpha_affine)^3`.

use alloc::vec;
use alloc::vec::Vec;

use super::cones::{self, Scaling};
use super::equilibrate::Equilibration;
use super::kkt::KktSystem;
use super::{Cone, ProblemData, Solution, SolveStatus, SolverSettings};
use crate::math;
use crate::Result;

/// Steps smaller than this indicate a numerically exhausted iteration.
const MIN_STEP: f64 = 1e-8;
/// Centering rescues allowed per solve before a stall is final.
const MAX_RESCUES: usize = 4;
/// Smallest centering step worth taking; below this the rescue is judged to
/// have failed and the stalled iterate stands.
const RESCUE_MIN_STEP: f64 = 1e-4;

#[cfg(feature = "std")]
macro_rules! trace {
    ($($t:tt)*) => {
        if std::env::var_os("SPEEDPLAN_IPM_TRACE").is_some() {
            std::eprintln!($($t)*);
        }
    };
}
#[cfg(not(feature = "std"))]
macro_rules! trace {
    ($($t:tt)*) => {};
}

#[derive(Clone)]
pub(super) struct Iterate {
    pub(super) x: Vec<f64>,
    pub(super) z: Vec<f64>,
    pub(super) s: Vec<f64>,
    pub(super) tau: f64,
    pub(super) kappa: f64,
}

pub(super) struct Direction {
    pub(super) dx: Vec<f64>,
    pub(super) dz: Vec<f64>,
    pub(super) ds: Vec<f64>,
    pub(super) dtau: f64,
    pub(super) dkappa: f64,
    /// Scaled slack direction `W^{-1} ds` (step-length space).
    pub(super) ds_scaled: Vec<f64>,
    /// Scaled multiplier direction `W dz`.
    pub(super) dz_scaled: Vec<f64>,
    /// Relative residual of the inner KKT solve that produced the direction.
    pub(super) rel_res: f64,
}

pub(super) fn solve(
    prob: &ProblemData,
    settings: &SolverSettings,
    eq: &Equilibration,
) -> Result<Solution> {
    let n = prob.a.ncols();
    let m = prob.a.nrows();
    let deg = cones::degree(&prob.cones);
    let obj_unscale = eq.obj_unscale();
    let norm_b = f64::max(1.0, math::max_abs(&prob.b));
    let norm_c = f64::max(1.0, math::max_abs(&prob.c));
    // Complementarity products cannot be driven below the rounding noise of
    // the data they are computed from; mu is normalized to one at the
    // initial point, so this is an absolute floor for meaningful progress.
    let mu_floor = {
        let mut data_inf = f64::max(math::max_abs(&prob.b), math::max_abs(&prob.c));
        prob.a.for_each(|_, _, v| data_inf = f64::max(data_inf, math::abs(v)));
        50.0 * f64::EPSILON * f64::max(1.0, data_inf)
    };

    let mut kkt = KktSystem::new(&prob.a, &prob.cones)?;

    let mut it = Iterate {
        x: vec![0.0; n],
        z: vec![0.0; m],
        s: vec![0.0; m],
        tau: 1.0,
        kappa: 1.0,
    };
    cones::identity(&prob.cones, &mut it.s);
    cones::identity(&prob.cones, &mut it.z);

    let mut rx = vec![0.0; n];
    let mut rz = vec![0.0; m];
    // Most accurate iterate seen, by worst tolerance ratio; endgame steps
    // can regress, so failures report this point rather than the last one.
    let mut best: Option<(Iterate, Diagnostics)> = None;
    let mut rescues = 0usize;

    // One trailing pass (without a step) so the final iterate is judged too.
    for iter in 0..=settings.max_iter {
        // Residuals of the embedding.
        rx.copy_from_slice(&prob.c);
        for v in rx.iter_mut() {
            *v *= it.tau;
        }
        prob.a.matvec_t_add(&it.z, &mut rx);

        for i in 0..m {
            rz[i] = it.s[i] - prob.b[i] * it.tau;
        }
        prob.a.matvec_add(&it.x, &mut rz);

        let cx = dot(&prob.c, &it.x);
        let bz = dot(&prob.b, &it.z);
        let rtau = cx + bz + it.kappa;
        let mu = (dot(&it.s, &it.z) + it.tau * it.kappa) / (deg as f64 + 1.0);

        // Convergence tests on the descaled candidate. All diagnostics are
        // in problem units (before equilibration): what downstream rechecks
        // of the recovered point will see must be what converged here.
        let diag = Diagnostics {
            pcost: obj_unscale * cx / it.tau,
            pres: eq.primal_res(&rz) / it.tau,
            dcost: obj_unscale * -bz / it.tau,
            dres: eq.dual_res(&rx) / it.tau,
            gap: obj_unscale * math::abs(cx + bz) / it.tau,
            iterations: iter,
        };
        if diag.converged(settings) {
            return Ok(solution_from(SolveStatus::Optimal, &it, &diag));
        }
        if best.as_ref().is_none_or(|(_, d)| diag.score(settings) < d.score(settings)) {
            best = Some((it.clone(), diag));
        }

        // Infeasibility certificates (homogeneous, independent of tau).
        if bz < 0.0 {
            let mut atz = vec![0.0; n];
            prob.a.matvec_t_add(&it.z, &mut atz);
            if math::max_abs(&atz) * norm_b / (-bz) <= settings.feas_tol {
                let mut sol = solution_from(SolveStatus::PrimalInfeasible, &it, &diag);
                sol.z = scaled(&it.z, 1.0 / -bz);
                sol.primal_obj = f64::NAN;
                sol.dual_obj = f64::NAN;
                return Ok(sol);
            }
        }
        if cx < 0.0 {
            let mut axs = it.s.clone();
            prob.a.matvec_add(&it.x, &mut axs);
            if math::max_abs(&axs) * norm_c / (-cx) <= settings.feas_tol {
                let mut sol = solution_from(SolveStatus::DualInfeasible, &it, &diag);
                sol.x = scaled(&it.x, 1.0 / -cx);
                sol.s = scaled(&it.s, 1.0 / -cx);
                sol.primal_obj = f64::NAN;
                sol.dual_obj = f64::NAN;
                return Ok(sol);
            }
        }
        if iter == settings.max_iter {
            break;
        }
        // Below the floor the products are rounding noise; further steps
        // only corrupt the iterate.
        if mu < mu_floor {
            trace!("iter {iter:3} stop: mu={mu:e} under the arithmetic floor {mu_floor:e}");
            break;
        }

        // Nesterov-Todd scaling at the current iterate.
        let Some(scaling) = Scaling::compute(&prob.cones, &it.s, &it.z) else {
            trace!("iter {iter:3} breakdown: scaling not interior");
            break;
        };
        if kkt.factor(&prob.a, &scaling, settings.static_reg).is_err() {
            trace!("iter {iter:3} breakdown: factorization failed");
            break;
        }

        // Constant second solve: K [x2; z2] = [-c; b].
        let mut x2 = vec![0.0; n];
        let mut z2 = vec![0.0; m];
        let neg_c: Vec<f64> = prob.c.iter().map(|v| -v).collect();
        // Inexact inner solves are tolerable: the direction still makes
        // progress and the convergence tests judge true residuals, so the
        // solve quality is only traced, never a stopping condition.
        let const_res = kkt.solve(&neg_c, &prob.b, settings.refine_rounds, &mut x2, &mut z2);
        // The recovery denominator is c'x2 + b'z2 - kappa/tau, but those two
        // dot products cancel catastrophically near convergence. For any
        // (x2, z2) satisfying the reduced system the sum equals -|W z2|^2
        // identically (the bilinear terms cancel), so compute that instead:
        // it is exact up to the refinement residual and strictly negative.
        let mut wz2 = vec![0.0; m];
        scaling.apply_w(&z2, &mut wz2);
        let denom = -dot(&wz2, &wz2) - it.kappa / it.tau;
        if !(denom.is_finite() && denom < 0.0) {
            trace!("iter {iter:3} breakdown: denom = {denom:e}");
            break;
        }

        // Affine (predictor) direction: aim at zero residuals and zero
        // complementarity.
        let mut lambda_sq = vec![0.0; m];
        cones::jordan_product(&prob.cones, &scaling.lambda, &scaling.lambda, &mut lambda_sq);
        let mut ds_target: Vec<f64> = lambda_sq.iter().map(|v| -v).collect();
        let affine = newton_direction(
            prob, &mut kkt, settings, &scaling, &it, &rx, &rz, rtau, 1.0, &ds_target,
            -it.tau * it.kappa, &x2, &z2, denom,
        );
        let alpha_aff = f64::min(1.0, max_step(&prob.cones, &scaling, &it, &affine));
        let sigma = {
            let s = (1.0 - alpha_aff) * (1.0 - alpha_aff) * (1.0 - alpha_aff);
            s.clamp(0.0, 1.0)
        };

        // Combined (corrector) direction.
        let mut e = vec![0.0; m];
        cones::identity(&prob.cones, &mut e);
        let mut corr = vec![0.0; m];
        cones::jordan_product(&prob.cones, &affine.ds_scaled, &affine.dz_scaled, &mut corr);
        for i in 0..m {
            // sigma*mu*e - lambda o lambda - correction; ds_target still
            // holds -(lambda o lambda).
            ds_target[i] += sigma * mu * e[i] - corr[i];
        }
        let dkappa_target = sigma * mu - it.tau * it.kappa - affine.dtau * affine.dkappa;
        let combined = newton_direction(
            prob, &mut kkt, settings, &scaling, &it, &rx, &rz, rtau, 1.0 - sigma, &ds_target,
            dkappa_target, &x2, &z2, denom,
        );

        let mut alpha = f64::min(1.0, 0.99 * max_step(&prob.cones, &scaling, &it, &combined));
        // In the endgame a nearly pure affine step can park one cone product
        // on the numerical boundary, after which no direction can move; trim
        // the step so every product keeps a small fraction of the average.
        if mu < 1e-6 {
            alpha = centered_step(&prob.cones, &it, &combined, alpha, deg);
        }
        trace!(
            "iter {iter:3} mu={mu:9.2e} pres={pres:9.2e} dres={dres:9.2e} gap={gap:9.2e} \
             tau={tau:9.2e} kappa={kappa:9.2e} a_aff={alpha_aff:7.4} sigma={sigma:7.4} a={alpha:9.2e} \
             kk={const_res:8.1e}/{aff_res:8.1e}/{com_res:8.1e}",
            pres = diag.pres,
            dres = diag.dres,
            gap = diag.gap,
            tau = it.tau,
            kappa = it.kappa,
            aff_res = affine.rel_res,
            com_res = combined.rel_res,
        );

        // A collapsed step does not have to end the iteration: a pure
        // centering step (full weight on the central path, residuals carried
        // along) is solved from the same factorization and backs the iterate
        // away from the boundary, often reopening room for further progress.
        let mut rescue = None;
        if alpha < MIN_STEP || !alpha.is_finite() {
            if rescues >= MAX_RESCUES {
                trace!("iter {iter:3} breakdown: step {alpha:e} with rescues exhausted");
                break;
            }
            rescues += 1;
            for i in 0..m {
                ds_target[i] = mu * e[i] - lambda_sq[i];
            }
            let centering = newton_direction(
                prob, &mut kkt, settings, &scaling, &it, &rx, &rz, rtau, 0.0, &ds_target,
                mu - it.tau * it.kappa, &x2, &z2, denom,
            );
            let a_c = f64::min(1.0, 0.9 * max_step(&prob.cones, &scaling, &it, &centering));
            // A rescue that can barely move is the factorization failing, not
            // the iterate crowding the boundary; stepping anyway only smears
            // noise over an otherwise good iterate.
            if a_c < RESCUE_MIN_STEP || !a_c.is_finite() {
                trace!("iter {iter:3} breakdown: centering rescue failed (a={a_c:e})");
                #[cfg(feature = "std")]
                if std::env::var_os("SPEEDPLAN_IPM_TRACE").is_some() {
                    dump_blocks(&prob.cones, &scaling.lambda, &combined.ds_scaled, &combined.dz_scaled);
                }
                break;
            }
            trace!("iter {iter:3} rescue: centering step a={a_c:9.2e}");
            alpha = a_c;
            rescue = Some(centering);
        }
        let step_dir = rescue.as_ref().unwrap_or(&combined);

        for i in 0..n {
            it.x[i] += alpha * step_dir.dx[i];
        }
        for i in 0..m {
            it.z[i] += alpha * step_dir.dz[i];
            it.s[i] += alpha * step_dir.ds[i];
        }
        it.tau += alpha * step_dir.dtau;
        it.kappa += alpha * step_dir.dkappa;
        if !(it.tau > 0.0 && it.kappa > 0.0) {
            trace!("iter {iter:3} breakdown: tau={} kappa={}", it.tau, it.kappa);
            break;
        }
    }

    let (best_it, diag) = best.expect("at least the initial iterate is recorded");
    // A stalled endgame (step collapse, boundary-pinned scaling, exhausted
    // iteration budget) is routine for a floating-point interior-point
    // method. The best iterate is still returned as solved when it sits
    // within a modest factor of the target tolerances; the diagnostics
    // report its true accuracy and callers recheck feasibility either way.
    let reduced = SolverSettings {
        feas_tol: 100.0 * settings.feas_tol,
        gap_abs_tol: 50.0 * settings.gap_abs_tol,
        gap_rel_tol: 100.0 * settings.gap_rel_tol,
        ..*settings
    };
    if diag.converged(&reduced) {
        trace!(
            "accepting stalled iterate at reduced tolerance: pres={:.2e} dres={:.2e} gap={:.2e}",
            diag.pres,
            diag.dres,
            diag.gap
        );
        return Ok(solution_from(SolveStatus::Optimal, &best_it, &diag));
    }
    Ok(solution_from(SolveStatus::NumericalFailure, &best_it, &diag))
}

/// Residuals and objective values of a descaled candidate.
#[derive(Clone, Copy)]
struct Diagnostics {
    pcost: f64,
    dcost: f64,
    pres: f64,
    dres: f64,
    gap: f64,
    iterations: usize,
}

impl Diagnostics {
    fn gap_threshold(&self, settings: &SolverSettings) -> f64 {
        f64::max(
            settings.gap_abs_tol,
            settings.gap_rel_tol
                * f64::max(1.0, f64::max(math::abs(self.pcost), math::abs(self.dcost))),
        )
    }

    fn converged(&self, settings: &SolverSettings) -> bool {
        self.pres <= settings.feas_tol
            && self.dres <= settings.feas_tol
            && self.gap <= self.gap_threshold(settings)
    }

    /// Worst tolerance ratio; below one means converged.
    fn score(&self, settings: &SolverSettings) -> f64 {
        let mut s = f64::max(self.pres, self.dres) / settings.feas_tol;
        s = f64::max(s, self.gap / self.gap_threshold(settings));
        if !s.is_finite() {
            return f64::INFINITY;
        }
        s
    }
}

/// Largest step not exceeding `alpha` at which every cone product (and
/// `tau*kappa`) retains at least a fixed fraction of the average
/// complementarity, found by geometric shrinking. When even tiny steps fail
/// the test the current point is already off-center and the measure conveys
/// nothing; the unmodified step is returned.
fn centered_step(
    cones: &[Cone],
    it: &Iterate,
    dir: &Direction,
    alpha: f64,
    deg: usize,
) -> f64 {
    const CENTRALITY: f64 = 1e-3;
    let m = it.s.len();
    let mut s = vec![0.0; m];
    let mut z = vec![0.0; m];
    let mut q = vec![0.0; m];
    let mut a = alpha;
    while a >= MIN_STEP {
        for i in 0..m {
            s[i] = it.s[i] + a * dir.ds[i];
            z[i] = it.z[i] + a * dir.dz[i];
        }
        let tau = it.tau + a * dir.dtau;
        let kappa = it.kappa + a * dir.dkappa;
        cones::jordan_product(cones, &s, &z, &mut q);
        let mu = (dot(&s, &z) + tau * kappa) / (deg as f64 + 1.0);
        let worst = f64::min(cones::min_eigenvalue(cones, &q), tau * kappa);
        if mu > 0.0 && worst >= CENTRALITY * mu {
            return a;
        }
        a *= 0.8;
    }
    alpha
}

fn solution_from(status: SolveStatus, it: &Iterate, diag: &Diagnostics) -> Solution {
    let inv_tau = 1.0 / it.tau;
    Solution {
        status,
        x: scaled(&it.x, inv_tau),
        s: scaled(&it.s, inv_tau),
        z: scaled(&it.z, inv_tau),
        primal_obj: diag.pcost,
        dual_obj: diag.dcost,
        primal_res: diag.pres,
        dual_res: diag.dres,
        gap: diag.gap,
        iterations: diag.iterations,
    }
}

/// Solves the Newton system for given residual weights and complementarity
/// targets, reusing the factorization and the constant `[-c; b]` solve.
///
/// The system, with `r1 = -weight*rx`, `r2 = -weight*rz`,
/// `r3 = -weight*rtau`:
///
/// ```text
/// A'dz + c dtau                  = r1
/// A dx + ds - b dtau             = r2
/// c'dx + b'dz + dkappa           = r3
/// lambda o (W dz + W^{-1} ds)    = ds_target
/// kappa dtau + tau dkappa        = dkappa_target
/// ```
///
/// Eliminating `ds = W(xi - W dz)` with `xi = lambda \ ds_target` and
/// `dkappa` leaves a 2x2-block solve plus a scalar recovery for `dtau`.
#[allow(clippy::too_many_arguments)]
pub(super) fn newton_direction(
    prob: &ProblemData,
    kkt: &mut KktSystem,
    settings: &SolverSettings,
    scaling: &Scaling,
    it: &Iterate,
    rx: &[f64],
    rz: &[f64],
    rtau: f64,
    weight: f64,
    ds_target: &[f64],
    dkappa_target: f64,
    x2: &[f64],
    z2: &[f64],
    denom: f64,
) -> Direction {
    let n = prob.a.ncols();
    let m = prob.a.nrows();

    let mut xi = vec![0.0; m];
    cones::jordan_div(&prob.cones, &scaling.lambda, ds_target, &mut xi);
    let mut w_xi = vec![0.0; m];
    scaling.apply_w(&xi, &mut w_xi);

    let r1: Vec<f64> = rx.iter().map(|v| -weight * v).collect();
    let r2: Vec<f64> = rz
        .iter()
        .zip(&w_xi)
        .map(|(v, w)| -weight * v - w)
        .collect();
    let mut x1 = vec![0.0; n];
    let mut z1 = vec![0.0; m];
    let rel_res = kkt.solve(&r1, &r2, settings.refine_rounds, &mut x1, &mut z1);

    let numer = -weight * rtau - dkappa_target / it.tau - dot(&prob.c, &x1) - dot(&prob.b, &z1);
    let dtau = numer / denom;

    let dx: Vec<f64> = x1.iter().zip(x2).map(|(u, v)| u + dtau * v).collect();
    let dz: Vec<f64> = z1.iter().zip(z2).map(|(u, v)| u + dtau * v).collect();

    // ds = W(xi - W dz); track the scaled copies for the step-length rule.
    let mut w_dz = vec![0.0; m];
    scaling.apply_w(&dz, &mut w_dz);
    let ds_scaled: Vec<f64> = xi.iter().zip(&w_dz).map(|(a, b)| a - b).collect();
    let mut ds = vec![0.0; m];
    scaling.apply_w(&ds_scaled, &mut ds);

    let dkappa = (dkappa_target - it.kappa * dtau) / it.tau;

    Direction {
        dx,
        dz,
        ds,
        dtau,
        dkappa,
        ds_scaled,
        dz_scaled: w_dz,
        rel_res,
    }
}

/// Largest step keeping slack, multiplier, tau, and kappa admissible.
fn max_step(cones_list: &[cones::Cone], scaling: &Scaling, it: &Iterate, dir: &Direction) -> f64 {
    let mut alpha = cones::step_to_boundary(cones_list, &scaling.lambda, &dir.ds_scaled);
    alpha = alpha.min(cones::step_to_boundary(
        cones_list,
        &scaling.lambda,
        &dir.dz_scaled,
    ));
    if dir.dtau < 0.0 {
        alpha = alpha.min(-it.tau / dir.dtau);
    }
    if dir.dkappa < 0.0 {
        alpha = alpha.min(-it.kappa / dir.dkappa);
    }
    alpha
}

#[cfg(feature = "std")]
fn dump_blocks(cones_list: &[Cone], lambda: &[f64], ds: &[f64], dz: &[f64]) {
    let mut offset = 0usize;
    for (bi, k) in cones_list.iter().enumerate() {
        let dim = k.dim();
        let at = offset;
        offset += dim;
        match *k {
            Cone::Zero(_) => {}
            Cone::NonNeg(d) => {
                for i in at..at + d {
                    let a_s = if ds[i] < 0.0 { -lambda[i] / ds[i] } else { f64::INFINITY };
                    let a_z = if dz[i] < 0.0 { -lambda[i] / dz[i] } else { f64::INFINITY };
                    if a_s.min(a_z) < 1e-4 {
                        std::eprintln!(
                            "  block {bi} nonneg row {i}: lam={:.3e} ds={:.3e} dz={:.3e} -> a={:.3e}",
                            lambda[i], ds[i], dz[i], a_s.min(a_z)
                        );
                    }
                }
            }
            Cone::Soc(d) => {
                let mut nrm = 0.0;
                for i in at + 1..at + d {
                    nrm += lambda[i] * lambda[i];
                }
                let nrm = math::sqrt(nrm);
                let a_s = cones::step_to_boundary(&[Cone::Soc(d)], &lambda[at..at + d], &ds[at..at + d]);
                let a_z = cones::step_to_boundary(&[Cone::Soc(d)], &lambda[at..at + d], &dz[at..at + d]);
                if a_s.min(a_z) < 1e-4 {
                    std::eprintln!(
                        "  block {bi} soc: lam0={:.6e} |bar|={:.6e} lam_min={:.3e} a_s={:.3e} a_z={:.3e}",
                        lambda[at], nrm, lambda[at] - nrm, a_s, a_z
                    );
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

fn scaled(v: &[f64], by: f64) -> Vec<f64> {
    v.iter().map(|x| x * by).collect()
}
