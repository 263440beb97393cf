//! Quasi-definite KKT solves for the interior-point iteration.
//!
//! The reduced Newton system is
//!
//! ```text
//! [ delta*I    A'          ] [dx]   [r1]
//! [ A          -W^2 - delta*I ] [dz] = [r2]
//! ```
//!
//! whose sparsity is fixed across iterations (only the `W^2` values change).
//! The matrix graph is reordered once with reverse Cuthill-McKee, giving a
//! narrow band for the stage-chained planning programs; each iteration
//! refills the band and runs an LDL^T factorization without pivoting, which
//! is stable here because the regularized matrix is symmetric quasi-definite.
//! Solves are polished with iterative refinement against the unregularized
//! matrix, so the static regularization does not limit the achievable
//! accuracy.

use alloc::vec;
use alloc::vec::Vec;

use super::cones::{Cone, Scaling};
use super::SparseMatrix;
use crate::math;
use crate::{Error, Result};

/// Pivots smaller in magnitude than this (relatively) are bumped to keep the
/// factorization running; refinement absorbs the perturbation.
const PIVOT_FLOOR: f64 = 1e-13;

pub struct KktSystem {
    /// Constraint matrix (borrowed copies of the pattern are kept below).
    n_vars: usize,
    n_rows: usize,
    /// Permutation: `perm[new] = old`.
    perm: Vec<usize>,
    /// Inverse permutation: `inv_perm[old] = new`.
    inv_perm: Vec<usize>,
    bandwidth: usize,
    /// Expected diagonal sign per permuted index (+1 variables, -1 rows).
    diag_sign: Vec<f64>,
    /// Factored band (regularized), overwritten each `factor` call.
    band: Vec<f64>,
    /// Unregularized band kept for refinement.
    band_exact: Vec<f64>,
    /// Scratch buffers.
    work: Vec<f64>,
    work2: Vec<f64>,
}

impl KktSystem {
    /// Builds the ordering and band layout from the constraint pattern.
    pub fn new(a: &SparseMatrix, cones: &[Cone]) -> Result<KktSystem> {
        let n_vars = a.ncols();
        let n_rows = a.nrows();
        let n = n_vars + n_rows;

        // Adjacency of the KKT graph: A entries couple variable c to row r;
        // second-order scaling blocks couple their rows pairwise.
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        a.for_each(|r, c, _| {
            adj[c].push(n_vars + r);
            adj[n_vars + r].push(c);
        });
        let mut at = 0;
        for k in cones {
            if let Cone::Soc(d) = *k {
                for i in 0..d {
                    for j in 0..d {
                        if i != j {
                            adj[n_vars + at + i].push(n_vars + at + j);
                        }
                    }
                }
            }
            at += k.dim();
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }

        let perm = reverse_cuthill_mckee(&adj);
        let mut inv_perm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }
        let mut bandwidth = 0usize;
        for (node, list) in adj.iter().enumerate() {
            for &nb in list {
                let d = inv_perm[node].abs_diff(inv_perm[nb]);
                if d > bandwidth {
                    bandwidth = d;
                }
            }
        }

        let mut diag_sign = vec![0.0; n];
        for old in 0..n {
            diag_sign[inv_perm[old]] = if old < n_vars { 1.0 } else { -1.0 };
        }

        Ok(KktSystem {
            n_vars,
            n_rows,
            perm,
            inv_perm,
            bandwidth,
            diag_sign,
            band: vec![0.0; n * (bandwidth + 1)],
            band_exact: vec![0.0; n * (bandwidth + 1)],
            work: vec![0.0; n],
            work2: vec![0.0; n],
        })
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Refills the band with the current scaling and factors it in place.
    pub fn factor(&mut self, a: &SparseMatrix, scaling: &Scaling, delta: f64) -> Result<()> {
        let n = self.n_vars + self.n_rows;
        let stride = self.bandwidth + 1;
        self.band_exact.fill(0.0);

        {
            let band = &mut self.band_exact;
            let inv = &self.inv_perm;
            let nv = self.n_vars;
            let mut put = |i_old: usize, j_old: usize, v: f64| {
                let (pi, pj) = (inv[i_old], inv[j_old]);
                let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
                band[c * stride + (r - c)] += v;
            };
            a.for_each(|r, c, v| put(nv + r, c, v));
            scaling.for_each_neg_wsq_entry(|r, c, v| put(nv + r, nv + c, v));
        }

        // Regularized copy: +delta on variable diagonals, -delta on rows.
        self.band.copy_from_slice(&self.band_exact);
        for j in 0..n {
            self.band[j * stride] += delta * self.diag_sign[j];
        }

        // In-place band LDL^T: L below the diagonal, D on it.
        let bw = self.bandwidth;
        let band = &mut self.band;
        // The regularized matrix is quasi-definite, so in exact arithmetic
        // every pivot has magnitude at least delta with its block's sign.
        // Clamp rounding-degraded pivots back to that bound. The floor must
        // not scale with the largest diagonal: near convergence the scaling
        // block spans many orders of magnitude, and a global floor would
        // override legitimate delta-sized pivots and poison the directions.
        let pivot_floor = f64::max(0.5 * delta, PIVOT_FLOOR);
        for j in 0..n {
            let k_lo = j.saturating_sub(bw);
            let mut dj = band[j * stride];
            for k in k_lo..j {
                let ljk = band[k * stride + (j - k)];
                let dk = band[k * stride];
                dj -= ljk * ljk * dk;
            }
            // Bump degenerate pivots toward their quasi-definite sign.
            if self.diag_sign[j] > 0.0 {
                if dj < pivot_floor {
                    dj = pivot_floor;
                }
            } else if dj > -pivot_floor {
                dj = -pivot_floor;
            }
            if !dj.is_finite() {
                return Err(Error::Numerical {
                    what: "kkt factorization",
                    detail: "non-finite pivot",
                });
            }
            band[j * stride] = dj;
            let i_hi = usize::min(j + bw, n - 1);
            for i in j + 1..=i_hi {
                let mut v = band[j * stride + (i - j)];
                let k_lo_i = i.saturating_sub(bw);
                let k_start = usize::max(k_lo, k_lo_i);
                for k in k_start..j {
                    v -= band[k * stride + (i - k)] * band[k * stride + (j - k)] * band[k * stride];
                }
                band[j * stride + (i - j)] = v / dj;
            }
        }
        Ok(())
    }

    /// Solves the reduced system for `(dx, dz)` given the two right-hand
    /// side blocks, with refinement against the unregularized matrix.
    /// Returns the componentwise backward error of the final solution, so
    /// callers can tell a direction solved from a nearby system (however
    /// ill-conditioned) from one that is numerically lost.
    pub fn solve(
        &mut self,
        r1: &[f64],
        r2: &[f64],
        refine_rounds: usize,
        dx: &mut [f64],
        dz: &mut [f64],
    ) -> f64 {
        let n = self.n_vars + self.n_rows;
        debug_assert_eq!(r1.len(), self.n_vars);
        debug_assert_eq!(r2.len(), self.n_rows);

        // Permute the right-hand side in.
        let mut rhs = vec![0.0; n];
        for new in 0..n {
            let old = self.perm[new];
            rhs[new] = if old < self.n_vars {
                r1[old]
            } else {
                r2[old - self.n_vars]
            };
        }

        let mut sol = rhs.clone();
        self.solve_banded_in_place(&mut sol);

        let scale = 1.0 + math::max_abs(&rhs);
        for round in 0..=refine_rounds {
            // Residual against the exact (unregularized) matrix.
            self.band_matvec(&sol);
            let mut worst = 0.0f64;
            for i in 0..n {
                self.work2[i] = rhs[i] - self.work[i];
                let a = math::abs(self.work2[i]);
                if a > worst {
                    worst = a;
                }
            }
            if worst <= 1e-14 * scale || round == refine_rounds {
                break;
            }
            let mut corr = self.work2.clone();
            self.solve_banded_in_place(&mut corr);
            for i in 0..n {
                sol[i] += corr[i];
            }
        }

        // work2 holds the final residual; judge it against the magnitudes
        // actually combined on each row.
        self.band_matvec_abs(&sol);
        let mut backward = 0.0f64;
        for i in 0..n {
            let be = math::abs(self.work2[i]) / (1.0 + self.work[i] + math::abs(rhs[i]));
            if be > backward {
                backward = be;
            }
        }

        for new in 0..n {
            let old = self.perm[new];
            if old < self.n_vars {
                dx[old] = sol[new];
            } else {
                dz[old - self.n_vars] = sol[new];
            }
        }
        backward
    }

    /// `work = |band_exact| * |v|` (symmetric matvec on magnitudes).
    fn band_matvec_abs(&mut self, v: &[f64]) {
        let n = self.n_vars + self.n_rows;
        let bw = self.bandwidth;
        let stride = bw + 1;
        self.work.fill(0.0);
        for j in 0..n {
            let vj = math::abs(v[j]);
            self.work[j] += math::abs(self.band_exact[j * stride]) * vj;
            let i_hi = usize::min(j + bw, n - 1);
            for i in j + 1..=i_hi {
                let e = math::abs(self.band_exact[j * stride + (i - j)]);
                if e != 0.0 {
                    self.work[i] += e * vj;
                    self.work[j] += e * math::abs(v[i]);
                }
            }
        }
    }

    /// `work = band_exact * v` (symmetric matvec from the lower band).
    fn band_matvec(&mut self, v: &[f64]) {
        let n = self.n_vars + self.n_rows;
        let bw = self.bandwidth;
        let stride = bw + 1;
        self.work.fill(0.0);
        for j in 0..n {
            let vj = v[j];
            self.work[j] += self.band_exact[j * stride] * vj;
            let i_hi = usize::min(j + bw, n - 1);
            for i in j + 1..=i_hi {
                let e = self.band_exact[j * stride + (i - j)];
                if e != 0.0 {
                    self.work[i] += e * vj;
                    self.work[j] += e * v[i];
                }
            }
        }
    }

    /// Forward/diagonal/backward substitution with the factored band.
    fn solve_banded_in_place(&self, v: &mut [f64]) {
        let n = self.n_vars + self.n_rows;
        let bw = self.bandwidth;
        let stride = bw + 1;
        for j in 0..n {
            let k_lo = j.saturating_sub(bw);
            let mut acc = v[j];
            for k in k_lo..j {
                acc -= self.band[k * stride + (j - k)] * v[k];
            }
            v[j] = acc;
        }
        for j in 0..n {
            v[j] /= self.band[j * stride];
        }
        for j in (0..n).rev() {
            let i_hi = usize::min(j + bw, n - 1);
            let mut acc = v[j];
            for i in j + 1..=i_hi {
                acc -= self.band[j * stride + (i - j)] * v[i];
            }
            v[j] = acc;
        }
    }
}

/// Reverse Cuthill-McKee ordering of an undirected graph given as sorted
/// adjacency lists. Returns `perm` with `perm[new] = old`.
fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue: Vec<usize> = Vec::new();

    loop {
        // Seed: unvisited node of minimum degree.
        let mut seed = None;
        let mut best = usize::MAX;
        for (i, list) in adj.iter().enumerate() {
            if !visited[i] && list.len() < best {
                best = list.len();
                seed = Some(i);
            }
        }
        let Some(seed) = seed else { break };
        visited[seed] = true;
        queue.push(seed);
        let mut head = 0;
        while head < queue.len() {
            let node = queue[head];
            head += 1;
            order.push(node);
            let mut nbrs: Vec<usize> = adj[node]
                .iter()
                .copied()
                .filter(|&nb| !visited[nb])
                .collect();
            nbrs.sort_unstable_by_key(|&nb| adj[nb].len());
            for nb in nbrs {
                visited[nb] = true;
                queue.push(nb);
            }
        }
        queue.clear();
    }
    order.reverse();
    order
}
