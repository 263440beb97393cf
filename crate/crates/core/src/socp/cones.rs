//! Cone descriptions, Jordan-algebra operations, and Nesterov-Todd scalings.
//!
//! Every vector here lives in the row space of the constraint matrix and is
//! processed block by block. The zero cone carries no scaling (its slack is
//! identically zero and its multiplier free); the nonnegative cone scales
//! coordinatewise; second-order cone blocks use the rank-one-plus-reflection
//! structure of their scaling matrix so every product is linear in the block
//! size.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// One factor of the product cone, in row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// Equality rows: slack pinned to zero, multiplier free.
    Zero(usize),
    /// Coordinatewise nonnegative rows.
    NonNeg(usize),
    /// Second-order cone `{(t, u) : |u|_2 <= t}` of the given total
    /// dimension (`t` plus the vector part).
    Soc(usize),
}

impl Cone {
    #[inline]
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::NonNeg(d) | Cone::Soc(d) => d,
        }
    }
}

/// Barrier degree of the product cone: one per nonnegative coordinate, one
/// per second-order block, nothing for equalities.
pub fn degree(cones: &[Cone]) -> usize {
    cones
        .iter()
        .map(|k| match *k {
            Cone::Zero(_) => 0,
            Cone::NonNeg(d) => d,
            Cone::Soc(_) => 1,
        })
        .sum()
}

pub fn total_dim(cones: &[Cone]) -> usize {
    cones.iter().map(Cone::dim).sum()
}

/// Visits `(offset, cone)` pairs.
fn blocks(cones: &[Cone]) -> impl Iterator<Item = (usize, Cone)> + '_ {
    let mut offset = 0;
    cones.iter().map(move |&k| {
        let at = offset;
        offset += k.dim();
        (at, k)
    })
}

/// Writes the cone identity element into `out` (zeros on equality rows).
pub fn identity(cones: &[Cone], out: &mut [f64]) {
    out.fill(0.0);
    for (at, k) in blocks(cones) {
        match k {
            Cone::Zero(_) => {}
            Cone::NonNeg(d) => out[at..at + d].fill(1.0),
            Cone::Soc(_) => out[at] = 1.0,
        }
    }
}

/// Jordan product `u o v` blockwise (zero on equality rows).
pub fn jordan_product(cones: &[Cone], u: &[f64], v: &[f64], out: &mut [f64]) {
    for (at, k) in blocks(cones) {
        match k {
            Cone::Zero(d) => out[at..at + d].fill(0.0),
            Cone::NonNeg(d) => {
                for i in at..at + d {
                    out[i] = u[i] * v[i];
                }
            }
            Cone::Soc(d) => {
                let mut dot = 0.0;
                for i in at..at + d {
                    dot += u[i] * v[i];
                }
                for i in at + 1..at + d {
                    out[i] = u[at] * v[i] + v[at] * u[i];
                }
                out[at] = dot;
            }
        }
    }
}

/// Jordan division: solves `u o w = v` for `w` blockwise. `u` must be
/// invertible in each block (guaranteed interior). Equality rows yield zero.
pub fn jordan_div(cones: &[Cone], u: &[f64], v: &[f64], out: &mut [f64]) {
    for (at, k) in blocks(cones) {
        match k {
            Cone::Zero(d) => out[at..at + d].fill(0.0),
            Cone::NonNeg(d) => {
                for i in at..at + d {
                    out[i] = v[i] / u[i];
                }
            }
            Cone::Soc(d) => {
                // Arrow-matrix inverse: w0 = (u0 v0 - u1'v1)/det,
                // w1 = (v1 - w0 u1)/u0 with det = u0^2 - |u1|^2.
                let u0 = u[at];
                let mut u1v1 = 0.0;
                let mut u1sq = 0.0;
                for i in at + 1..at + d {
                    u1v1 += u[i] * v[i];
                    u1sq += u[i] * u[i];
                }
                let det = u0 * u0 - u1sq;
                let w0 = (u0 * v[at] - u1v1) / det;
                for i in at + 1..at + d {
                    out[i] = (v[i] - w0 * u[i]) / u0;
                }
                out[at] = w0;
            }
        }
    }
}

/// Largest `alpha >= 0` with `p + alpha * d` in the cone for every block,
/// given `p` strictly interior; `f64::INFINITY` when the ray never exits.
/// Equality rows do not constrain the step.
pub fn step_to_boundary(cones: &[Cone], p: &[f64], d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (at, k) in blocks(cones) {
        match k {
            Cone::Zero(_) => {}
            Cone::NonNeg(dim) => {
                for i in at..at + dim {
                    if d[i] < 0.0 {
                        alpha = alpha.min(-p[i] / d[i]);
                    }
                }
            }
            Cone::Soc(dim) => {
                // First positive root of |p0 + a*d0|^2 - |p1 + a*d1|^2 = 0,
                // a quadratic qa*a^2 + 2*qb*a + qc with qc > 0 at an interior
                // point.
                let mut qa = d[at] * d[at];
                let mut qb = p[at] * d[at];
                let mut qc = p[at] * p[at];
                for i in at + 1..at + dim {
                    qa -= d[i] * d[i];
                    qb -= p[i] * d[i];
                    qc -= p[i] * p[i];
                }
                alpha = alpha.min(first_positive_root(qa, qb, qc));
            }
        }
    }
    alpha
}

/// First positive root of `qa*a^2 + 2*qb*a + qc = 0` given `qc >= 0`, or
/// infinity when the polynomial stays positive for all `a >= 0`.
fn first_positive_root(qa: f64, qb: f64, qc: f64) -> f64 {
    let qc = f64::max(qc, 0.0);
    if math::abs(qa) < 1e-300 {
        // Effectively linear.
        return if qb < 0.0 { qc / (-2.0 * qb) } else { f64::INFINITY };
    }
    let disc = qb * qb - qa * qc;
    if disc < 0.0 {
        // No real roots; qa > 0 here since qa < 0 forces disc >= 0.
        return f64::INFINITY;
    }
    let sq = math::sqrt(disc);
    // Stable quadratic roots: q = -(qb + sign(qb)*sq).
    let q = if qb >= 0.0 { -(qb + sq) } else { -(qb - sq) };
    let (r1, r2) = (q / qa, if q != 0.0 { qc / q } else { f64::INFINITY });
    let mut best = f64::INFINITY;
    for r in [r1, r2] {
        if r > 0.0 && r < best {
            best = r;
        }
    }
    best
}

/// Smallest cone-algebra eigenvalue of `v`, used to test strict interiority.
pub fn min_eigenvalue(cones: &[Cone], v: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for (at, k) in blocks(cones) {
        match k {
            Cone::Zero(_) => {}
            Cone::NonNeg(d) => {
                for i in at..at + d {
                    m = m.min(v[i]);
                }
            }
            Cone::Soc(d) => {
                let mut norm_sq = 0.0;
                for i in at + 1..at + d {
                    norm_sq += v[i] * v[i];
                }
                m = m.min(v[at] - math::sqrt(norm_sq));
            }
        }
    }
    m
}

/// Nesterov-Todd scaling for one block.
#[derive(Debug, Clone)]
pub enum BlockScaling {
    Zero {
        dim: usize,
    },
    NonNeg {
        /// `w_i = sqrt(s_i / z_i)`.
        w: Vec<f64>,
    },
    Soc {
        eta: f64,
        /// Unit vector in the hyperbolic norm: `wb0^2 - |wb1|^2 = 1`.
        wbar: Vec<f64>,
    },
}

/// Full Nesterov-Todd scaling `W` with the scaled point
/// `lambda = W z = W^{-1} s`.
#[derive(Debug, Clone)]
pub struct Scaling {
    pub blocks: Vec<BlockScaling>,
    pub lambda: Vec<f64>,
}

impl Scaling {
    /// Computes the scaling at a strictly interior primal-dual pair.
    /// Returns `None` when either point has drifted out of the cone
    /// numerically.
    pub fn compute(cones: &[Cone], s: &[f64], z: &[f64]) -> Option<Scaling> {
        let m = total_dim(cones);
        let mut out = Scaling {
            blocks: Vec::with_capacity(cones.len()),
            lambda: vec![0.0; m],
        };
        for (at, k) in blocks(cones) {
            match k {
                Cone::Zero(d) => out.blocks.push(BlockScaling::Zero { dim: d }),
                Cone::NonNeg(d) => {
                    let mut w = Vec::with_capacity(d);
                    for i in at..at + d {
                        if !(s[i] > 0.0 && z[i] > 0.0) {
                            return None;
                        }
                        w.push(math::sqrt(s[i] / z[i]));
                        out.lambda[i] = math::sqrt(s[i] * z[i]);
                    }
                    out.blocks.push(BlockScaling::NonNeg { w });
                }
                Cone::Soc(d) => {
                    let sj = hyper_norm_sq(&s[at..at + d]);
                    let zj = hyper_norm_sq(&z[at..at + d]);
                    if !(sj > 0.0 && zj > 0.0 && s[at] > 0.0 && z[at] > 0.0) {
                        return None;
                    }
                    let (rs, rz) = (math::sqrt(sj), math::sqrt(zj));
                    // gamma^2 = (1 + sbar'zbar)/2 with the J-normalized
                    // points; always >= 1/2 inside the cone.
                    let mut dot = 0.0;
                    for i in at..at + d {
                        dot += (s[i] / rs) * (z[i] / rz);
                    }
                    let gamma = math::sqrt(0.5 * (1.0 + dot));
                    let mut wbar = Vec::with_capacity(d);
                    wbar.push((s[at] / rs + z[at] / rz) / (2.0 * gamma));
                    for i in at + 1..at + d {
                        wbar.push((s[i] / rs - z[i] / rz) / (2.0 * gamma));
                    }
                    let eta = math::sqrt(rs / rz);
                    let block = BlockScaling::Soc { eta, wbar };
                    apply_block(&block, &z[at..at + d], &mut out.lambda[at..at + d], Dir::W);
                    out.blocks.push(block);
                }
            }
        }
        Some(out)
    }

    /// `out = W v`.
    pub fn apply_w(&self, v: &[f64], out: &mut [f64]) {
        self.apply(v, out, Dir::W);
    }

    /// `out = W^{-1} v`.
    pub fn apply_w_inv(&self, v: &[f64], out: &mut [f64]) {
        self.apply(v, out, Dir::WInv);
    }

    /// `out = W^2 v`.
    pub fn apply_w_sq(&self, v: &[f64], out: &mut [f64]) {
        self.apply(v, out, Dir::WSq);
    }

    fn apply(&self, v: &[f64], out: &mut [f64], dir: Dir) {
        let mut at = 0;
        for block in &self.blocks {
            let d = block_dim(block);
            apply_block(block, &v[at..at + d], &mut out[at..at + d], dir);
            at += d;
        }
    }

    /// Emits the `-W^2` entries of each scaled block (lower triangle, each
    /// unordered pair exactly once), used by the KKT assembly. Zero blocks
    /// produce nothing.
    pub fn for_each_neg_wsq_entry(&self, mut emit: impl FnMut(usize, usize, f64)) {
        let mut at = 0;
        for block in &self.blocks {
            match block {
                BlockScaling::Zero { dim } => at += dim,
                BlockScaling::NonNeg { w } => {
                    for (i, wi) in w.iter().enumerate() {
                        emit(at + i, at + i, -wi * wi);
                    }
                    at += w.len();
                }
                BlockScaling::Soc { eta, wbar } => {
                    // W^2 = eta^2 (2 wbar wbar' - J), J = diag(1, -I).
                    let e2 = eta * eta;
                    let d = wbar.len();
                    for r in 0..d {
                        for c in 0..=r {
                            let mut v = 2.0 * wbar[r] * wbar[c];
                            if r == c {
                                v -= if r == 0 { 1.0 } else { -1.0 };
                            }
                            emit(at + r, at + c, -e2 * v);
                        }
                    }
                    at += d;
                }
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Dir {
    W,
    WInv,
    WSq,
}

fn block_dim(block: &BlockScaling) -> usize {
    match block {
        BlockScaling::Zero { dim } => *dim,
        BlockScaling::NonNeg { w } => w.len(),
        BlockScaling::Soc { wbar, .. } => wbar.len(),
    }
}

fn apply_block(block: &BlockScaling, v: &[f64], out: &mut [f64], dir: Dir) {
    match block {
        BlockScaling::Zero { .. } => out.fill(0.0),
        BlockScaling::NonNeg { w } => {
            for i in 0..w.len() {
                out[i] = match dir {
                    Dir::W => w[i] * v[i],
                    Dir::WInv => v[i] / w[i],
                    Dir::WSq => w[i] * w[i] * v[i],
                };
            }
        }
        BlockScaling::Soc { eta, wbar } => {
            let d = wbar.len();
            let a = wbar[0];
            let mut qv = 0.0;
            for i in 1..d {
                qv += wbar[i] * v[i];
            }
            match dir {
                // W v = eta * (a v0 + q'v1, v1 + (v0 + q'v1/(1+a)) q).
                Dir::W => {
                    let head = a * v[0] + qv;
                    let coef = v[0] + qv / (1.0 + a);
                    out[0] = eta * head;
                    for i in 1..d {
                        out[i] = eta * (v[i] + coef * wbar[i]);
                    }
                }
                // W^{-1} v = (1/eta) * (a v0 - q'v1, v1 + (-v0 + q'v1/(1+a)) q).
                Dir::WInv => {
                    let head = a * v[0] - qv;
                    let coef = -v[0] + qv / (1.0 + a);
                    out[0] = head / eta;
                    for i in 1..d {
                        out[i] = (v[i] + coef * wbar[i]) / eta;
                    }
                }
                // W^2 v = eta^2 (2 wbar (wbar'v) - J v).
                Dir::WSq => {
                    let dot = a * v[0] + qv;
                    let e2 = eta * eta;
                    out[0] = e2 * (2.0 * a * dot - v[0]);
                    for i in 1..d {
                        out[i] = e2 * (2.0 * wbar[i] * dot + v[i]);
                    }
                }
            }
        }
    }
}

/// `v0^2 - |v1|^2` for a second-order block.
fn hyper_norm_sq(v: &[f64]) -> f64 {
    let mut out = v[0] * v[0];
    for &x in &v[1..] {
        out -= x * x;
    }
    out
}
