//! Small dense SDP solver for block-diagonal Hermitian variables:
//!
//! ```text
//! minimize    Σ_b tr(C_b X_b)
//! subject to  Σ_b tr(B_{c,b} X_b) ≤ d_c    for every constraint c
//!             X_b ⪰ 0                      for every block b
//! ```
//!
//! Each Hermitian block is parametrized by its `n²` real degrees of freedom
//! and the problem is solved by a primal log-barrier method with damped
//! Newton steps. A phase-I problem finds a strictly feasible start or
//! certifies infeasibility. The barrier parameter `θ = Σ n_b + m` bounds the
//! suboptimality by `θ/t` on the central path, which serves as the
//! convergence certificate.

use crate::linalg::{cholesky_upper, solve_spd, solve_upper, solve_upper_adjoint, CMatrix, CVector, C64};

/// One linear constraint `Σ_b tr(B_b X_b) ≤ rhs`; blocks not listed have
/// zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, CMatrix)>,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSdp {
    pub block_sizes: Vec<usize>,
    /// Objective matrix per block.
    pub objective: Vec<CMatrix>,
    pub constraints: Vec<LinearConstraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpOptions {
    /// Target for the certified relative suboptimality `θ/(t·max(1, |obj|))`.
    pub rel_tol: f64,
    pub max_newton: usize,
    /// Barrier parameter growth per outer step.
    pub mu: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            rel_tol: 1e-7,
            max_newton: 2000,
            mu: 8.0,
        }
    }
}

/// Largest phase-I trace cap; infeasibility is reported relative to it.
pub const MAX_TRACE_CAP: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSdpSolution {
    pub status: SdpStatus,
    pub blocks: Vec<CMatrix>,
    pub objective: f64,
    /// Certified bound on `objective − optimum` (∞ unless optimal).
    pub gap_bound: f64,
    pub newton_steps: usize,
}

/// Real parametrization of one Hermitian block: diagonal entries, then the
/// real and imaginary parts of each strictly upper entry.
#[derive(Clone, Debug)]
struct Layout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
}

impl Layout {
    fn new(sizes: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut dim = 0;
        for &n in sizes {
            offsets.push(dim);
            dim += n * n;
        }
        Layout {
            sizes: sizes.to_vec(),
            offsets,
            dim,
        }
    }

    /// Coefficients `a` with `tr(M X) = a · x_block` for Hermitian `M`.
    fn coeffs(m: &CMatrix, out: &mut [f64]) {
        let n = m.rows();
        let mut p = 0;
        for k in 0..n {
            out[p] = m[(k, k)].re;
            p += 1;
        }
        for k in 0..n {
            for l in (k + 1)..n {
                out[p] = 2.0 * m[(k, l)].re;
                out[p + 1] = 2.0 * m[(k, l)].im;
                p += 2;
            }
        }
    }

    fn block(&self, x: &[f64], b: usize) -> CMatrix {
        let n = self.sizes[b];
        let v = &x[self.offsets[b]..self.offsets[b] + n * n];
        let mut m = CMatrix::zeros(n, n);
        let mut p = 0;
        for k in 0..n {
            m[(k, k)] = C64::new(v[p], 0.0);
            p += 1;
        }
        for k in 0..n {
            for l in (k + 1)..n {
                m[(k, l)] = C64::new(v[p], v[p + 1]);
                m[(l, k)] = C64::new(v[p], -v[p + 1]);
                p += 2;
            }
        }
        m
    }

    fn identity(&self, scale: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for (b, &n) in self.sizes.iter().enumerate() {
            for k in 0..n {
                x[self.offsets[b] + k] = scale;
            }
        }
        x
    }

    /// Dense coefficient row for a constraint or objective.
    fn row(&self, terms: &[(usize, CMatrix)]) -> Vec<f64> {
        let mut a = vec![0.0; self.dim];
        for (b, m) in terms {
            let n = self.sizes[*b];
            let mut tmp = vec![0.0; n * n];
            Layout::coeffs(m, &mut tmp);
            for (k, v) in tmp.into_iter().enumerate() {
                a[self.offsets[*b] + k] += v;
            }
        }
        a
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Basis matrix `E_p` of one block for parameter `p`.
fn basis(n: usize, p: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    if p < n {
        e[(p, p)] = C64::new(1.0, 0.0);
        return e;
    }
    let mut q = n;
    for k in 0..n {
        for l in (k + 1)..n {
            if p == q {
                e[(k, l)] = C64::new(1.0, 0.0);
                e[(l, k)] = C64::new(1.0, 0.0);
                return e;
            }
            if p == q + 1 {
                e[(k, l)] = C64::new(0.0, 1.0);
                e[(l, k)] = C64::new(0.0, -1.0);
                return e;
            }
            q += 2;
        }
    }
    unreachable!("parameter index out of range")
}

/// Inverse of a Hermitian PD matrix from its upper Cholesky factor.
fn inverse_from_cholesky(u: &CMatrix) -> CMatrix {
    let n = u.rows();
    let mut inv = CMatrix::zeros(n, n);
    for c in 0..n {
        let mut e = CVector::zeros(n);
        e[c] = C64::new(1.0, 0.0);
        let y = solve_upper_adjoint(u, &e);
        let x = solve_upper(u, &y);
        for r in 0..n {
            inv[(r, c)] = x[r];
        }
    }
    inv
}

/// Smooth part of the barrier problem shared by both phases: the linear
/// rows `a_c · x (− s) ≤ d_c` and the log-det terms.
struct Barrier<'a> {
    layout: &'a Layout,
    rows: &'a [Vec<f64>],
    rhs: &'a [f64],
    /// Phase I carries an extra variable `s` subtracted from the first
    /// `shifted` rows.
    with_s: bool,
    shifted: usize,
}

impl Barrier<'_> {
    fn nvars(&self) -> usize {
        self.layout.dim + usize::from(self.with_s)
    }

    fn slacks(&self, z: &[f64]) -> Vec<f64> {
        let s = if self.with_s { z[self.layout.dim] } else { 0.0 };
        self.rows
            .iter()
            .zip(self.rhs)
            .enumerate()
            .map(|(c, (a, d))| d + if c < self.shifted { s } else { 0.0 } - dot(a, &z[..self.layout.dim]))
            .collect()
    }

    /// `−Σ log det X_b − Σ log slack_c`, or `None` outside the domain.
    fn value(&self, z: &[f64]) -> Option<f64> {
        let mut v = 0.0;
        for b in 0..self.layout.sizes.len() {
            let u = cholesky_upper(&self.layout.block(z, b)).ok()?;
            for k in 0..u.rows() {
                v -= 2.0 * u[(k, k)].re.ln();
            }
        }
        for sl in self.slacks(z) {
            if !(sl > 0.0) {
                return None;
            }
            v -= sl.ln();
        }
        Some(v)
    }

    /// Gradient and Hessian of the barrier at an interior point.
    fn derivatives(&self, z: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let nv = self.nvars();
        let mut grad = vec![0.0; nv];
        let mut hess = vec![0.0; nv * nv];
        for (b, &n) in self.layout.sizes.iter().enumerate() {
            let off = self.layout.offsets[b];
            let u = cholesky_upper(&self.layout.block(z, b)).ok()?;
            let xinv = inverse_from_cholesky(&u);
            let mut tmp = vec![0.0; n * n];
            Layout::coeffs(&xinv, &mut tmp);
            for (k, v) in tmp.iter().enumerate() {
                grad[off + k] -= v;
            }
            for p in 0..n * n {
                let m = xinv.matmul(&basis(n, p)).and_then(|m| m.matmul(&xinv)).ok()?;
                Layout::coeffs(&m, &mut tmp);
                for (q, v) in tmp.iter().enumerate() {
                    hess[(off + p) * nv + off + q] += v;
                }
            }
        }
        let slacks = self.slacks(z);
        for (c, (a, sl)) in self.rows.iter().zip(&slacks).enumerate() {
            if !(*sl > 0.0) {
                return None;
            }
            // Row gradient in z: (a, −1 for s).
            let inv = 1.0 / sl;
            let inv2 = inv * inv;
            let nz: Vec<(usize, f64)> = a
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, v)| (k, *v))
                .chain((self.with_s && c < self.shifted).then_some((self.layout.dim, -1.0)))
                .collect();
            for &(k, v) in &nz {
                grad[k] += v * inv;
                for &(l, w) in &nz {
                    hess[k * nv + l] += v * w * inv2;
                }
            }
        }
        Some((grad, hess))
    }
}

/// Outcome of one barrier run.
struct PathResult {
    z: Vec<f64>,
    t: f64,
    steps: usize,
    converged: bool,
}

/// Follows the central path for `min cᵀz + barrier/t`, stopping when
/// `stop(z, t)` holds after a centering step.
#[allow(clippy::too_many_arguments)]
fn follow_path(
    barrier: &Barrier<'_>,
    cost: &[f64],
    mut z: Vec<f64>,
    t0: f64,
    opts: &SdpOptions,
    budget: usize,
    early: impl Fn(&[f64]) -> bool,
    mut stop: impl FnMut(&[f64], f64) -> bool,
) -> PathResult {
    let nv = barrier.nvars();
    let mut t = t0;
    let mut steps = 0;
    loop {
        // Centering by damped Newton.
        let mut centered = false;
        let mut inner = 0;
        while steps < budget {
            let Some((g, mut h)) = barrier.derivatives(&z) else {
                break;
            };
            let grad: Vec<f64> = (0..nv).map(|k| t * cost[k] + g[k]).collect();
            let neg: Vec<f64> = grad.iter().map(|v| -v).collect();
            let dz = match solve_spd(&h, &neg) {
                Some(d) => d,
                None => {
                    // Regularize a numerically singular Hessian.
                    let scale = (0..nv).map(|k| h[k * nv + k].abs()).fold(0.0, f64::max).max(1e-300);
                    for k in 0..nv {
                        h[k * nv + k] += 1e-12 * scale;
                    }
                    match solve_spd(&h, &neg) {
                        Some(d) => d,
                        None => break,
                    }
                }
            };
            steps += 1;
            let decrement = -dot(&grad, &dz);
            if decrement / 2.0 <= 1e-10 {
                centered = true;
                break;
            }
            // Compare differences so a large t·cᵀz does not swamp the decrease.
            let b0 = barrier.value(&z).unwrap_or(f64::INFINITY);
            let slope = t * dot(cost, &dz);
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand: Vec<f64> = z.iter().zip(&dz).map(|(a, d)| a + step * d).collect();
                if let Some(bv) = barrier.value(&cand) {
                    let change = step * slope + (bv - b0);
                    if change <= -0.25 * step * decrement {
                        z = cand;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            inner += 1;
            if !moved || (inner >= 100 && decrement < 1e-4) {
                // Centered as well as the arithmetic allows.
                centered = true;
                break;
            }
            if moved && early(&z) {
                return PathResult {
                    z,
                    t,
                    steps,
                    converged: true,
                };
            }
        }
        if !centered {
            return PathResult {
                z,
                t,
                steps,
                converged: false,
            };
        }
        if stop(&z, t) {
            return PathResult {
                z,
                t,
                steps,
                converged: true,
            };
        }
        if t > 1e16 {
            return PathResult {
                z,
                t,
                steps,
                converged: false,
            };
        }
        t *= opts.mu;
    }
}

impl BlockSdp {
    fn theta(&self) -> f64 {
        (self.block_sizes.iter().sum::<usize>() + self.constraints.len()) as f64
    }

    /// Objective value at the given blocks.
    pub fn objective_value(&self, blocks: &[CMatrix]) -> f64 {
        self.objective.iter().zip(blocks).map(|(c, x)| c.trace_product(x)).sum()
    }

    /// Largest constraint violation `max_c (lhs_c − rhs_c)` at the given blocks.
    pub fn max_violation(&self, blocks: &[CMatrix]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.terms.iter().map(|(b, m)| m.trace_product(&blocks[*b])).sum::<f64>() - c.rhs)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn solve(&self, opts: &SdpOptions) -> BlockSdpSolution {
        let layout = Layout::new(&self.block_sizes);
        let rows: Vec<Vec<f64>> = self.constraints.iter().map(|c| layout.row(&c.terms)).collect();
        let rhs: Vec<f64> = self.constraints.iter().map(|c| c.rhs).collect();
        let obj_terms: Vec<(usize, CMatrix)> = self.objective.iter().cloned().enumerate().collect();
        let cost = layout.row(&obj_terms);
        let theta = self.theta();
        let mut steps = 0;

        // Phase I: minimize s subject to a·x − s ≤ d, starting from X = I.
        // Without a bound the phase-I region is unbounded in directions that
        // only help the constraints, its barrier has no center and the path
        // runs off towards huge X. A cap Σ tr X_b ≤ R keeps it bounded; R
        // grows while infeasibility is only certified against the cap.
        let x0 = layout.identity(1.0);
        let worst = rows
            .iter()
            .zip(&rhs)
            .map(|(a, d)| dot(a, &x0) - d)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut x = x0;
        if worst >= 0.0 {
            let n_total = self.block_sizes.iter().sum::<usize>() as f64;
            let trace_row = layout.row(
                &(0..self.block_sizes.len())
                    .map(|b| (b, CMatrix::identity(self.block_sizes[b])))
                    .collect::<Vec<_>>(),
            );
            let scale = rhs.iter().fold(1.0_f64, |m, d| m.max(d.abs()));
            let mut cap = 100.0 * n_total * scale;
            loop {
                let mut capped_rows = rows.clone();
                capped_rows.push(trace_row.clone());
                let mut capped_rhs = rhs.clone();
                capped_rhs.push(cap);
                let barrier = Barrier {
                    layout: &layout,
                    rows: &capped_rows,
                    rhs: &capped_rhs,
                    with_s: true,
                    shifted: rows.len(),
                };
                let mut z = x.clone();
                z.push(worst + 1.0);
                let mut cost1 = vec![0.0; layout.dim];
                cost1.push(1.0);
                let mut certified_infeasible = false;
                let dim = layout.dim;
                let early = move |z: &[f64]| z[dim] < 0.0;
                let budget = opts.max_newton.saturating_sub(steps);
                let path = follow_path(&barrier, &cost1, z, 1.0, opts, budget, early, |z, t| {
                    let s = z[layout.dim];
                    if s < 0.0 {
                        return true;
                    }
                    // On the central path s − θ/t lower-bounds the optimal s.
                    if s - (theta + 2.0) / t > 1e-9 * scale {
                        certified_infeasible = true;
                        return true;
                    }
                    false
                });
                steps += path.steps;
                let s = path.z[layout.dim];
                if s < 0.0 {
                    x = path.z[..layout.dim].to_vec();
                    break;
                }
                if certified_infeasible && cap < MAX_TRACE_CAP && steps < opts.max_newton {
                    cap *= 100.0;
                    continue;
                }
                let status = if certified_infeasible || path.t > 1e12 {
                    SdpStatus::Infeasible
                } else {
                    SdpStatus::MaxIter
                };
                return BlockSdpSolution {
                    status,
                    blocks: (0..self.block_sizes.len()).map(|b| layout.block(&path.z, b)).collect(),
                    objective: f64::INFINITY,
                    gap_bound: f64::INFINITY,
                    newton_steps: steps,
                };
            }
        }

        // Phase II from the strictly feasible point.
        let barrier = Barrier {
            layout: &layout,
            rows: &rows,
            rhs: &rhs,
            with_s: false,
            shifted: 0,
        };
        let obj0 = dot(&cost, &x).abs().max(1e-12);
        let t0 = theta / obj0;
        let budget = opts.max_newton.saturating_sub(steps);
        let path = follow_path(&barrier, &cost, x, t0, opts, budget, |_| false, |z, t| {
            let obj = dot(&cost, z);
            theta / t <= opts.rel_tol * obj.abs().max(1.0)
        });
        steps += path.steps;
        let blocks: Vec<CMatrix> = (0..self.block_sizes.len()).map(|b| layout.block(&path.z, b)).collect();
        let objective = dot(&cost, &path.z);
        BlockSdpSolution {
            status: if path.converged { SdpStatus::Optimal } else { SdpStatus::MaxIter },
            blocks,
            objective,
            gap_bound: if path.converged { theta / path.t } else { f64::INFINITY },
            newton_steps: steps,
        }
    }
}
