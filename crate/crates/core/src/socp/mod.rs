//! Self-contained second-order cone programming solver.
//!
//! Solves
//!
//! ```text
//! minimize    c'x
//! subject to  A x + s = b,   s in K
//! ```
//!
//! where `K` is a product of zero cones (equality rows), nonnegative cones,
//! and second-order cones `{(t, u) : |u|_2 <= t}`, listed in row order. The
//! algorithm is a primal-dual predictor-corrector interior-point method on
//! the homogeneous self-dual embedding with Nesterov-Todd scaling, so it
//! detects infeasibility via a certificate instead of diverging. The KKT
//! systems are solved with a banded LDL^T factorization after a reverse
//! Cuthill-McKee reordering; the planning programs assembled by
//! [`crate::relaxation`] are chains of stage-local blocks, which the
//! reordering compresses to a narrow band.

mod cones;
mod equilibrate;
mod ipm;
mod kkt;

pub use cones::Cone;

use alloc::vec::Vec;

use crate::{Error, Result};

/// Sparse matrix in compressed sparse column form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicate coordinates are
    /// summed. Entries must be finite and in range.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::LengthMismatch {
                    what: "sparse matrix triplet out of range",
                    expected: nrows * ncols,
                    got: r * ncols + c,
                });
            }
            if !v.is_finite() {
                return Err(Error::Domain {
                    what: "sparse matrix entry",
                    value: v,
                });
            }
            entries.push((c, r, v));
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        col_ptr.push(0);
        let mut col = 0usize;
        for (c, r, v) in entries {
            while col < c {
                col_ptr.push(row_idx.len());
                col += 1;
            }
            if let (Some(&last_r), true) = (row_idx.last(), col_ptr.len() == col + 1) {
                if last_r == r && row_idx.len() > *col_ptr.last().unwrap() {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            row_idx.push(r);
            values.push(v);
        }
        while col < ncols {
            col_ptr.push(row_idx.len());
            col += 1;
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored entries.
    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y += A x`.
    pub fn matvec_add(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for c in 0..self.ncols {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
    }

    /// `y += A' x`.
    pub fn matvec_t_add(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for c in 0..self.ncols {
            let mut acc = 0.0;
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                acc += self.values[k] * x[self.row_idx[k]];
            }
            y[c] += acc;
        }
    }

    /// Visits every stored entry as `(row, col, value)`.
    pub fn for_each(&self, mut f: impl FnMut(usize, usize, f64)) {
        for c in 0..self.ncols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                f(self.row_idx[k], c, self.values[k]);
            }
        }
    }

    /// Returns a copy with entry `(i, j)` multiplied by `row[i] * col[j]`.
    pub fn diag_scaled(&self, row: &[f64], col: &[f64]) -> SparseMatrix {
        debug_assert_eq!(row.len(), self.nrows);
        debug_assert_eq!(col.len(), self.ncols);
        let mut out = self.clone();
        for c in 0..out.ncols {
            for k in out.col_ptr[c]..out.col_ptr[c + 1] {
                out.values[k] *= row[out.row_idx[k]] * col[c];
            }
        }
        out
    }
}

/// Conic program data in standard form.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ProblemData {
    /// Checks dimensional consistency.
    pub fn validate(&self) -> Result<()> {
        if self.b.len() != self.a.nrows() {
            return Err(Error::LengthMismatch {
                what: "b",
                expected: self.a.nrows(),
                got: self.b.len(),
            });
        }
        if self.c.len() != self.a.ncols() {
            return Err(Error::LengthMismatch {
                what: "c",
                expected: self.a.ncols(),
                got: self.c.len(),
            });
        }
        let cone_dim: usize = self.cones.iter().map(|k| k.dim()).sum();
        if cone_dim != self.a.nrows() {
            return Err(Error::LengthMismatch {
                what: "cone dimensions",
                expected: self.a.nrows(),
                got: cone_dim,
            });
        }
        for k in &self.cones {
            if k.dim() == 0 || (matches!(k, Cone::Soc(_)) && k.dim() < 2) {
                return Err(Error::InvalidParameter {
                    name: "cone",
                    requirement: "nonempty (second-order cones need dimension >= 2)",
                    value: k.dim() as f64,
                });
            }
        }
        if self.a.ncols() == 0 || self.a.nrows() == 0 {
            return Err(Error::LengthMismatch {
                what: "program (needs at least one variable and one row)",
                expected: 1,
                got: 0,
            });
        }
        Ok(())
    }
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative primal/dual feasibility tolerance.
    pub feas_tol: f64,
    /// Absolute duality-gap tolerance.
    pub gap_abs_tol: f64,
    /// Relative duality-gap tolerance.
    pub gap_rel_tol: f64,
    /// Interior-point iteration cap.
    pub max_iter: usize,
    /// Static regularization added to the KKT diagonal.
    pub static_reg: f64,
    /// Iterative refinement rounds per KKT solve.
    pub refine_rounds: usize,
}

impl Default for SolverSettings {
    /// Tolerances a double-precision banded factorization reaches reliably
    /// on the equilibrated data. The embedding rescales the duality gap by
    /// `1/tau^2` and complementarity products carry absolute rounding noise,
    /// which bounds the reachable gap from below; the absolute tolerance
    /// sits safely above that floor for the planning programs. The relative
    /// tolerance is kept much tighter because downstream exactness checks
    /// compare residuals against an absolute 1e-6 even when the objective is
    /// large, and a relative stop on a large objective would leave
    /// individual cone slacks above that bar. The static regularization is
    /// sized against unit-scale data; iterative refinement absorbs it.
    fn default() -> Self {
        SolverSettings {
            feas_tol: 1e-8,
            gap_abs_tol: 1.5e-7,
            gap_rel_tol: 3e-9,
            max_iter: 200,
            static_reg: 1e-10,
            refine_rounds: 10,
        }
    }
}

/// Termination status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Converged to the requested tolerances; `x`, `s`, `z` are the scaled
    /// primal-dual solution.
    Optimal,
    /// The constraints admit no point: `z` holds a certificate with
    /// `A'z = 0`, `z in K*`, `b'z = -1`.
    PrimalInfeasible,
    /// The objective is unbounded below: `x` holds a ray with
    /// `Ax + s = 0`, `s in K`, `c'x = -1`.
    DualInfeasible,
    /// No conclusion within the iteration budget or numerical limits.
    NumericalFailure,
}

/// Solver output. Interpretation of the vectors depends on `status`; see
/// [`SolveStatus`].
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Relative primal residual at termination.
    pub primal_res: f64,
    /// Relative dual residual at termination.
    pub dual_res: f64,
    /// Absolute duality gap at termination.
    pub gap: f64,
    pub iterations: usize,
}

/// Solves the conic program. The data is Ruiz-equilibrated before the
/// interior-point iteration, residuals and objective values are judged and
/// reported in problem units, and the solution is mapped back, so callers
/// see problem-unit values throughout.
pub fn solve(prob: &ProblemData, settings: &SolverSettings) -> Result<Solution> {
    prob.validate()?;
    let (scaled, eq) = equilibrate::equilibrate(prob);
    let mut sol = ipm::solve(&scaled, settings, &eq)?;
    eq.unscale_solution(&mut sol);
    Ok(sol)
}
