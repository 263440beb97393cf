//! Ruiz equilibration of the problem data.
//!
//! The planning programs mix kinetic energies in the hundreds with paces
//! near a few hundredths, and the homogeneous embedding amplifies that
//! spread: `tau` settles near the reciprocal of the solution norm, and the
//! duality gap of the descaled candidate is the embedding gap divided by
//! `tau^2`, so badly scaled data exhausts double precision well before the
//! requested tolerances. The classic cure is iterated row/column inf-norm
//! scaling, with one shared factor per second-order cone block so scaled
//! slacks stay in the same cones, followed by scalar normalizations of the
//! right-hand side and the cost.

use alloc::vec;
use alloc::vec::Vec;

use super::{Cone, ProblemData, Solution, SolveStatus};
use crate::math;

/// Inf-norm scaling rounds; the row/col norms contract toward one
/// quadratically, so a handful suffices.
const RUIZ_ROUNDS: usize = 10;

/// Diagonal and scalar factors mapping the equilibrated solution back.
pub(super) struct Equilibration {
    /// Column factors `D`: scaled matrix is `E A D`.
    col: Vec<f64>,
    /// Row factors `E`, constant across each second-order cone block.
    row: Vec<f64>,
    /// Scalar on `E b`.
    sigma_b: f64,
    /// Scalar on `D c`.
    sigma_c: f64,
    /// `max(1, |b|_inf)` of the original data.
    norm_b: f64,
    /// `max(1, |c|_inf)` of the original data.
    norm_c: f64,
}

impl Equilibration {
    /// Multiplies equilibrated objective values back into problem units.
    pub(super) fn obj_unscale(&self) -> f64 {
        1.0 / (self.sigma_b * self.sigma_c)
    }

    /// Inf-norm of the primal residual in problem units, relative to the
    /// problem-unit right-hand side, given the equilibrated residual vector.
    pub(super) fn primal_res(&self, rz: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, e) in rz.iter().zip(&self.row) {
            worst = f64::max(worst, math::abs(v / e));
        }
        worst / (self.sigma_b * self.norm_b)
    }

    /// Inf-norm of the dual residual in problem units, relative to the
    /// problem-unit cost, given the equilibrated residual vector.
    pub(super) fn dual_res(&self, rx: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, d) in rx.iter().zip(&self.col) {
            worst = f64::max(worst, math::abs(v / d));
        }
        worst / (self.sigma_c * self.norm_c)
    }

    /// Maps the solver's vectors back to problem units in place. Objective
    /// and gap fields are already in problem units (the interior-point loop
    /// descales them for its convergence tests).
    pub(super) fn unscale_solution(&self, sol: &mut Solution) {
        // x = D x~ / sigma_b, s = E^{-1} s~ / sigma_b, z = E z~ / sigma_c.
        for (v, d) in sol.x.iter_mut().zip(&self.col) {
            *v *= d / self.sigma_b;
        }
        for (v, e) in sol.s.iter_mut().zip(&self.row) {
            *v /= e * self.sigma_b;
        }
        for (v, e) in sol.z.iter_mut().zip(&self.row) {
            *v *= e / self.sigma_c;
        }
        // Certificates keep their defining identities under the diagonal
        // maps but lose the unit normalization of the scalar products
        // `b'z = -1` / `c'x = -1`; restore it.
        match sol.status {
            SolveStatus::PrimalInfeasible => {
                for v in sol.z.iter_mut() {
                    *v *= self.sigma_b * self.sigma_c;
                }
            }
            SolveStatus::DualInfeasible => {
                for v in sol.x.iter_mut() {
                    *v *= self.sigma_b * self.sigma_c;
                }
                for v in sol.s.iter_mut() {
                    *v *= self.sigma_b * self.sigma_c;
                }
            }
            SolveStatus::Optimal | SolveStatus::NumericalFailure => {}
        }
    }
}

/// Computes the scaling and returns the equilibrated copy of the program.
pub(super) fn equilibrate(prob: &ProblemData) -> (ProblemData, Equilibration) {
    let m = prob.a.nrows();
    let n = prob.a.ncols();
    let mut row = vec![1.0f64; m];
    let mut col = vec![1.0f64; n];

    let mut row_max = vec![0.0f64; m];
    let mut col_max = vec![0.0f64; n];
    for _ in 0..RUIZ_ROUNDS {
        row_max.iter_mut().for_each(|v| *v = 0.0);
        col_max.iter_mut().for_each(|v| *v = 0.0);
        prob.a.for_each(|r, c, v| {
            let a = math::abs(row[r] * v * col[c]);
            row_max[r] = f64::max(row_max[r], a);
            col_max[c] = f64::max(col_max[c], a);
        });
        // A second-order cone admits only one dilation, so its rows share
        // the block's largest norm.
        let mut offset = 0usize;
        for cone in &prob.cones {
            let dim = cone.dim();
            if matches!(cone, Cone::Soc(_)) {
                let mut block = 0.0f64;
                for r in offset..offset + dim {
                    block = f64::max(block, row_max[r]);
                }
                for r in offset..offset + dim {
                    row_max[r] = block;
                }
            }
            offset += dim;
        }
        for (s, &mx) in row.iter_mut().zip(&row_max) {
            if mx > 0.0 {
                *s /= math::sqrt(mx);
            }
        }
        for (s, &mx) in col.iter_mut().zip(&col_max) {
            if mx > 0.0 {
                *s /= math::sqrt(mx);
            }
        }
    }

    let a = prob.a.diag_scaled(&row, &col);
    let mut b: Vec<f64> = prob.b.iter().zip(&row).map(|(v, e)| v * e).collect();
    let mut c: Vec<f64> = prob.c.iter().zip(&col).map(|(v, d)| v * d).collect();
    let sigma_b = 1.0 / f64::max(1.0, math::max_abs(&b));
    let sigma_c = 1.0 / f64::max(1.0, math::max_abs(&c));
    for v in b.iter_mut() {
        *v *= sigma_b;
    }
    for v in c.iter_mut() {
        *v *= sigma_c;
    }

    (
        ProblemData {
            a,
            b,
            c,
            cones: prob.cones.clone(),
        },
        Equilibration {
            norm_b: f64::max(1.0, math::max_abs(&prob.b)),
            norm_c: f64::max(1.0, math::max_abs(&prob.c)),
            col,
            row,
            sigma_b,
            sigma_c,
        },
    )
}
