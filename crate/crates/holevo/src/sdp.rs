//! Self-contained dense semidefinite programming.
//!
//! Solves the standard primal-dual pair
//!
//! ```text
//!   min <C, X>   s.t.  <A_i, X> = b_i,  X >= 0        (primal)
//!   max b^T y    s.t.  Z = C - sum_i y_i A_i >= 0     (dual)
//! ```
//!
//! over block-diagonal real symmetric matrices, with a path-following
//! primal-dual interior-point method using the Nesterov-Todd symmetric
//! scaling and a Mehrotra predictor-corrector. Everything is dense; the
//! intended problem sizes (total block dimension up to ~200, a few hundred
//! constraints) sit comfortably inside that regime.
//!
//! Minimization problems posed as linear matrix inequalities (minimize c^T v
//! subject to H0 + sum_m v_m H_m >= 0) are handled by encoding them as the
//! dual side: with b = -c and A_m = -H_m the dual constraint reads
//! H0 + sum v_m H_m >= 0 and the decision variables come back in `y`.

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, RMatrix, RVector};

/// Relative duality-gap tolerance: converged when
/// |primal - dual| <= gap_tol * (1 + |primal|).
pub const DEFAULT_GAP_TOL: f64 = 1e-8;

/// Relative primal/dual feasibility tolerance.
pub const DEFAULT_FEAS_TOL: f64 = 1e-9;

/// Iteration cap.
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug)]
pub struct SdpOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            gap_tol: DEFAULT_GAP_TOL,
            feas_tol: DEFAULT_FEAS_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Block-diagonal real symmetric matrix: one dense block per entry.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    pub blocks: Vec<RMatrix>,
}

impl BlockMatrix {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&d| RMatrix::zeros(d, d)).collect(),
        }
    }

    pub fn identity(dims: &[usize], scale: f64) -> Self {
        Self {
            blocks: dims
                .iter()
                .map(|&d| RMatrix::identity(d, d) * scale)
                .collect(),
        }
    }

    /// Single-block constructor.
    pub fn from_single(m: RMatrix) -> Self {
        Self { blocks: vec![m] }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    /// Trace inner product <A, B> = sum_b tr(A_b B_b) for symmetric blocks.
    pub fn dot(&self, other: &BlockMatrix) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    pub fn scale_mut(&mut self, s: f64) {
        for b in &mut self.blocks {
            *b *= s;
        }
    }

    /// self += alpha * other.
    pub fn axpy(&mut self, alpha: f64, other: &BlockMatrix) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b * alpha;
        }
    }

    /// Exact symmetrization, applied after every update to stop roundoff
    /// drift from accumulating.
    pub fn symmetrize(&mut self) {
        for b in &mut self.blocks {
            let t = b.transpose();
            *b += t;
            *b *= 0.5;
        }
    }

    /// Smallest eigenvalue across blocks.
    pub fn min_eig(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                if b.nrows() == 0 {
                    f64::INFINITY
                } else {
                    b.clone()
                        .symmetric_eigen()
                        .eigenvalues
                        .iter()
                        .copied()
                        .fold(f64::INFINITY, f64::min)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// A standard-form SDP. Constraint matrices are symmetrized on construction.
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub c: BlockMatrix,
    pub constraints: Vec<(BlockMatrix, f64)>,
}

impl SdpProblem {
    pub fn new(
        block_dims: Vec<usize>,
        c: BlockMatrix,
        constraints: Vec<(BlockMatrix, f64)>,
    ) -> Result<Self> {
        let check_dims = |m: &BlockMatrix, what: &'static str| -> Result<()> {
            if m.dims() != block_dims {
                return Err(Error::DimensionMismatch {
                    context: what,
                    expected: block_dims.iter().sum(),
                    got: m.total_dim(),
                });
            }
            Ok(())
        };
        check_dims(&c, "objective block structure")?;
        for (a, _) in &constraints {
            check_dims(a, "constraint block structure")?;
        }
        if constraints.is_empty() {
            return Err(Error::Domain("SDP needs at least one constraint".into()));
        }
        let mut c = c;
        c.symmetrize();
        let constraints = constraints
            .into_iter()
            .map(|(mut a, b)| {
                a.symmetrize();
                (a, b)
            })
            .collect();
        Ok(Self {
            block_dims,
            c,
            constraints,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    InfeasibleDetected,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: BlockMatrix,
    pub y: RVector,
    pub z: BlockMatrix,
    pub primal_value: f64,
    pub dual_value: f64,
    /// Relative duality gap |primal - dual| / (1 + |primal|).
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

impl SdpSolution {
    /// Errors unless the solver reached its tolerances.
    pub fn require_optimal(&self) -> Result<&Self> {
        match self.status {
            SdpStatus::Optimal => Ok(self),
            SdpStatus::MaxIterations => Err(Error::SolverStalled {
                iterations: self.iterations,
                gap: self.gap,
                primal_res: self.primal_residual,
                dual_res: self.dual_residual,
            }),
            SdpStatus::InfeasibleDetected => Err(Error::SolverInfeasible(format!(
                "after {} iterations (gap {:.3e})",
                self.iterations, self.gap
            ))),
        }
    }
}

/// Per-block Cholesky factors of a positive-definite block matrix.
struct BlockChol {
    factors: Vec<Cholesky<f64, Dyn>>,
}

fn block_cholesky(m: &BlockMatrix) -> Option<BlockChol> {
    let mut factors = Vec::with_capacity(m.blocks.len());
    for b in &m.blocks {
        factors.push(Cholesky::new(b.clone())?);
    }
    Some(BlockChol { factors })
}

/// Largest alpha with M + alpha*D still positive semidefinite, given the
/// Cholesky factor of M: -1/lambda_min(L^-1 D L^-T) when that eigenvalue is
/// negative, else effectively unbounded (returned capped at 1e6). The caller
/// applies its own damping fraction.
fn max_step(chol: &BlockChol, d: &BlockMatrix) -> f64 {
    let mut min_lambda = f64::INFINITY;
    for (f, db) in chol.factors.iter().zip(&d.blocks) {
        if db.nrows() == 0 {
            continue;
        }
        let l = f.l();
        // T = L^-1 D L^-T, via two triangular solves.
        let s1 = l
            .solve_lower_triangular(db)
            .expect("cholesky factor is nonsingular");
        let s2 = l
            .solve_lower_triangular(&s1.transpose())
            .expect("cholesky factor is nonsingular");
        let t = (&s2 + s2.transpose()) * 0.5;
        let lmin = t
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        min_lambda = min_lambda.min(lmin);
    }
    if min_lambda >= -1e-6 {
        1e6
    } else {
        -1.0 / min_lambda
    }
}

/// W A W per block.
fn scale_both_sides(w: &BlockMatrix, a: &BlockMatrix) -> BlockMatrix {
    BlockMatrix {
        blocks: w
            .blocks
            .iter()
            .zip(&a.blocks)
            .map(|(wb, ab)| wb * ab * wb)
            .collect(),
    }
}

struct NtScaling {
    w: BlockMatrix,
    z_inv: BlockMatrix,
    /// Non-symmetric square root of W: W = G G^T, and G^T Z G = G^-1 X G^-T
    /// equals the diagonal of singular values `d`. One factor per block.
    g: Vec<RMatrix>,
    g_inv: Vec<RMatrix>,
    d: Vec<Vec<f64>>,
}

/// Nesterov-Todd scaling point W (W Z W = X) and Z^{-1}, both per block.
/// Built from Cholesky factors via the SVD of Lz^T Lx = U S V^T: the factor
/// G = Lx V S^{-1/2} maps both X and Z to the same diagonal S, which is where
/// the corrector's Lyapunov solve happens.
fn nt_scaling(x_chol: &BlockChol, z_chol: &BlockChol) -> NtScaling {
    let nb = x_chol.factors.len();
    let mut w_blocks = Vec::with_capacity(nb);
    let mut zinv_blocks = Vec::with_capacity(nb);
    let mut g_blocks = Vec::with_capacity(nb);
    let mut ginv_blocks = Vec::with_capacity(nb);
    let mut d_blocks = Vec::with_capacity(nb);
    for (fx, fz) in x_chol.factors.iter().zip(&z_chol.factors) {
        let lx = fx.l();
        let lz = fz.l();
        let svd = (lz.transpose() * &lx).svd(false, true);
        let vt = svd.v_t.as_ref().expect("svd requested");
        let s_inv_sqrt =
            RMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / s.sqrt()));
        let s_sqrt = RMatrix::from_diagonal(&svd.singular_values.map(|s| s.sqrt()));
        let g = &lx * vt.transpose() * &s_inv_sqrt;
        let n = lx.nrows();
        let id = RMatrix::identity(n, n);
        let lx_inv = lx
            .solve_lower_triangular(&id)
            .expect("cholesky factor is nonsingular");
        let g_inv = &s_sqrt * vt * &lx_inv;
        let w = &g * g.transpose();
        w_blocks.push((&w + w.transpose()) * 0.5);
        // Z^-1 = Lz^-T Lz^-1 from the factor directly.
        let lz_inv = lz
            .solve_lower_triangular(&id)
            .expect("cholesky factor is nonsingular");
        let zinv = lz_inv.transpose() * &lz_inv;
        zinv_blocks.push((&zinv + zinv.transpose()) * 0.5);
        g_blocks.push(g);
        ginv_blocks.push(g_inv);
        d_blocks.push(svd.singular_values.iter().copied().collect());
    }
    NtScaling {
        w: BlockMatrix { blocks: w_blocks },
        z_inv: BlockMatrix {
            blocks: zinv_blocks,
        },
        g: g_blocks,
        g_inv: ginv_blocks,
        d: d_blocks,
    }
}

/// Solves the SDP. Always returns the final iterate; check `status` (or call
/// `require_optimal`) before trusting it. Non-convergence is reported in the
/// status, never silently.
pub fn solve(problem: &SdpProblem, options: &SdpOptions) -> Result<SdpSolution> {
    let dims = &problem.block_dims;
    let n_total: usize = dims.iter().sum();
    if n_total == 0 {
        return Err(Error::Domain("SDP with empty block structure".into()));
    }
    let m = problem.constraints.len();
    let nf = n_total as f64;

    let b_vec = RVector::from_iterator(m, problem.constraints.iter().map(|(_, b)| *b));
    let b_norm = b_vec.norm();
    let c_norm = problem.c.norm();
    let a_norm_max = problem
        .constraints
        .iter()
        .map(|(a, _)| a.norm())
        .fold(0.0f64, f64::max);

    // Interior start: identities scaled to the problem's data magnitudes.
    let xi = problem
        .constraints
        .iter()
        .map(|(a, b)| (1.0 + b.abs()) / (1.0 + a.norm()))
        .fold(1.0f64, f64::max)
        * nf.sqrt();
    let eta = (1.0 + c_norm.max(a_norm_max)) * nf.sqrt();
    let mut x = BlockMatrix::identity(dims, xi);
    let mut z = BlockMatrix::identity(dims, eta);
    let mut y = RVector::zeros(m);

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = options.max_iter;
    let mut final_measures = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

    // Factors are carried between iterations; every accepted step is
    // validated by refactorization, so these are always in sync with x and z.
    let mut x_chol = block_cholesky(&x).expect("scaled identity is positive definite");
    let mut z_chol = block_cholesky(&z).expect("scaled identity is positive definite");

    // One round of iterative refinement keeps Schur solves accurate even when
    // the system turns ill-conditioned near the central path's end.
    let refined_solve = |chol: &Cholesky<f64, Dyn>, mat: &RMatrix, rhs: &RVector| -> RVector {
        let mut sol = chol.solve(rhs);
        let resid = rhs - mat * &sol;
        sol += chol.solve(&resid);
        sol
    };

    for iter in 0..options.max_iter {
        // Residuals and convergence measures.
        let primal = problem.c.dot(&x);
        let dual = b_vec.dot(&y);
        let mut rd = problem.c.clone();
        rd.axpy(-1.0, &z);
        for (i, (a, _)) in problem.constraints.iter().enumerate() {
            rd.axpy(-y[i], a);
        }
        let rp = RVector::from_iterator(
            m,
            problem.constraints.iter().map(|(a, b)| b - a.dot(&x)),
        );
        let gap = (primal - dual).abs() / (1.0 + primal.abs());
        let p_res = rp.norm() / (1.0 + b_norm);
        let d_res = rd.norm() / (1.0 + c_norm);
        final_measures = (gap, p_res, d_res);

        let trace = std::env::var_os("HOLEVO_SDP_TRACE").is_some();

        if gap <= options.gap_tol && p_res <= options.feas_tol && d_res <= options.feas_tol {
            status = SdpStatus::Optimal;
            iterations = iter;
            break;
        }

        let mu = x.dot(&z) / nf;
        // Divergence heuristics: unbounded dual multipliers with stubborn
        // primal infeasibility, or a collapsing/exploding complementarity.
        if y.norm() > 1e12 * (1.0 + b_norm) || mu > 1e16 || (mu < 1e-14 && gap > 1e-4) {
            status = SdpStatus::InfeasibleDetected;
            iterations = iter;
            break;
        }

        let nt = nt_scaling(&x_chol, &z_chol);

        // Schur complement M_ij = <A_i, W A_j W>, symmetric positive definite.
        let waw: Vec<BlockMatrix> = problem
            .constraints
            .iter()
            .map(|(a, _)| scale_both_sides(&nt.w, a))
            .collect();
        let mut schur = RMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = problem.constraints[i].0.dot(&waw[j]);
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let schur_chol = match Cholesky::new(schur.clone()) {
            Some(c) => c,
            None => {
                // Ridge fallback for numerically semidefinite Schur systems.
                let ridge = 1e-12 * (1.0 + schur.diagonal().amax());
                let ridged = &schur + RMatrix::identity(m, m) * ridge;
                match Cholesky::new(ridged) {
                    Some(c) => c,
                    None => {
                        iterations = iter;
                        break;
                    }
                }
            }
        };

        let w_rd_w = scale_both_sides(&nt.w, &rd);
        let a_dot = |mat: &BlockMatrix| -> RVector {
            RVector::from_iterator(m, problem.constraints.iter().map(|(a, _)| a.dot(mat)))
        };
        let a_wrdw = a_dot(&w_rd_w);
        let a_zinv = a_dot(&nt.z_inv);

        // Predictor: sigma = 0.
        let rhs_aff = &b_vec + &a_wrdw;
        let dy_aff = refined_solve(&schur_chol, &schur, &rhs_aff);
        let mut dz_aff = rd.clone();
        for (i, (a, _)) in problem.constraints.iter().enumerate() {
            dz_aff.axpy(-dy_aff[i], a);
        }
        let mut dx_aff = scale_both_sides(&nt.w, &dz_aff);
        dx_aff.scale_mut(-1.0);
        dx_aff.axpy(-1.0, &x);
        dx_aff.symmetrize();

        let ap_aff = max_step(&x_chol, &dx_aff).min(1.0);
        let ad_aff = max_step(&z_chol, &dz_aff).min(1.0);
        let mut x_aff = x.clone();
        x_aff.axpy(ap_aff, &dx_aff);
        let mut z_aff = z.clone();
        z_aff.axpy(ad_aff, &dz_aff);
        let mu_aff = (x_aff.dot(&z_aff) / nf).max(0.0);
        let sigma = ((mu_aff / mu).powi(3)).clamp(1e-8, 1.0);

        // Mehrotra corrector, formed in the scaled space where X and Z are
        // both the diagonal D: symmetrize G^-1 dX_aff dZ_aff G, divide by
        // d_i + d_j (the Lyapunov solve against D), map back with G . G^T.
        let corr = {
            let mut blocks = Vec::with_capacity(dims.len());
            for (k, (dxb, dzb)) in dx_aff.blocks.iter().zip(&dz_aff.blocks).enumerate() {
                let n = dxb.nrows();
                if n == 0 {
                    blocks.push(RMatrix::zeros(0, 0));
                    continue;
                }
                let dxh = &nt.g_inv[k] * dxb * nt.g_inv[k].transpose();
                let dzh = nt.g[k].transpose() * dzb * &nt.g[k];
                let prod = &dxh * &dzh;
                let mut y = (&prod + prod.transpose()) * 0.5;
                let d = &nt.d[k];
                for i in 0..n {
                    for j in 0..n {
                        y[(i, j)] *= 2.0 / (d[i] + d[j]);
                    }
                }
                let back = &nt.g[k] * y * nt.g[k].transpose();
                blocks.push((&back + back.transpose()) * 0.5);
            }
            BlockMatrix { blocks }
        };
        let a_corr = a_dot(&corr);

        let rhs = &b_vec + &a_wrdw - &a_zinv * (sigma * mu) + &a_corr;
        let dy = refined_solve(&schur_chol, &schur, &rhs);
        let mut dz = rd.clone();
        for (i, (a, _)) in problem.constraints.iter().enumerate() {
            dz.axpy(-dy[i], a);
        }
        let mut dx = scale_both_sides(&nt.w, &dz);
        dx.scale_mut(-1.0);
        dx.axpy(-1.0, &x);
        let mut zinv_scaled = nt.z_inv.clone();
        zinv_scaled.scale_mut(sigma * mu);
        dx.axpy(1.0, &zinv_scaled);
        dx.axpy(-1.0, &corr);
        dx.symmetrize();

        // Damping fraction grows as steps get long, taking nearly full steps
        // in the endgame where feasibility must contract to tolerance.
        let damping = 0.9 + 0.09 * ap_aff.min(ad_aff);
        let mut ap = (damping * max_step(&x_chol, &dx)).min(1.0);
        let mut ad = (damping * max_step(&z_chol, &dz)).min(1.0);

        // Accept steps only if the updated iterate factors; halve otherwise.
        let mut accepted = false;
        for _ in 0..30 {
            let mut x_try = x.clone();
            x_try.axpy(ap, &dx);
            x_try.symmetrize();
            let mut z_try = z.clone();
            z_try.axpy(ad, &dz);
            z_try.symmetrize();
            match (block_cholesky(&x_try), block_cholesky(&z_try)) {
                (Some(fx), Some(fz)) => {
                    x = x_try;
                    z = z_try;
                    x_chol = fx;
                    z_chol = fz;
                    y += &dy * ad;
                    accepted = true;
                    break;
                }
                _ => {
                    ap *= 0.5;
                    ad *= 0.5;
                }
            }
        }
        if trace {
            eprintln!(
                "iter {iter:3}: gap {gap:9.3e} p {p_res:9.3e} d {d_res:9.3e} \
                 a_aff {:7.1e}/{:7.1e} sigma {sigma:7.1e} a {ap:7.1e}/{ad:7.1e} acc {accepted}",
                ap_aff, ad_aff
            );
        }
        if !accepted {
            iterations = iter;
            break;
        }
    }

    let primal_value = problem.c.dot(&x);
    let dual_value = b_vec.dot(&y);
    Ok(SdpSolution {
        x,
        y,
        z,
        primal_value,
        dual_value,
        gap: final_measures.0,
        primal_residual: final_measures.1,
        dual_residual: final_measures.2,
        iterations,
        status,
    })
}

/// Real symmetric embedding of a complex Hermitian matrix:
/// H -> [[Re H, -Im H], [Im H, Re H]]. PSD is preserved both ways; each
/// complex eigenvalue appears twice.
pub fn complex_psd_embed(h: &CMatrix) -> RMatrix {
    let n = h.nrows();
    let mut out = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Result of an LMI minimization solved through the dual-side encoding.
pub struct LmiSolution {
    /// Decision variables v.
    pub vars: RVector,
    /// c^T v at the returned (LMI-feasible) point.
    pub value: f64,
    pub sdp: SdpSolution,
}

/// Minimizes c^T v subject to H0 + sum_m v_m H_m >= 0 (complex Hermitian
/// LMI), by solving the standard-form SDP whose dual is exactly that
/// constraint. The returned variables are dual-feasible up to the solver's
/// residual, so `value` upper-bounds the true minimum by at most the gap.
pub fn solve_lmi_min(
    h0: &CMatrix,
    h_terms: &[CMatrix],
    cost: &[f64],
    options: &SdpOptions,
) -> Result<LmiSolution> {
    if h_terms.len() != cost.len() {
        return Err(Error::DimensionMismatch {
            context: "LMI terms vs cost length",
            expected: cost.len(),
            got: h_terms.len(),
        });
    }
    let dim = 2 * h0.nrows();
    let c_block = BlockMatrix::from_single(complex_psd_embed(h0));
    let constraints = h_terms
        .iter()
        .zip(cost)
        .map(|(h, &ci)| {
            (
                BlockMatrix::from_single(-complex_psd_embed(h)),
                -ci,
            )
        })
        .collect();
    let problem = SdpProblem::new(vec![dim], c_block, constraints)?;
    let sol = solve(&problem, options)?;
    sol.require_optimal()?;
    let vars = sol.y.clone();
    let value = vars
        .iter()
        .zip(cost)
        .map(|(v, c)| v * c)
        .sum();
    Ok(LmiSolution {
        vars,
        value,
        sdp: sol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c64;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// min tr(Y) over Y >= M, Y >= 0 with M = diag(-1, 3): the positive part
    /// of M has trace 3. Encoded with a slack block: Y - S = M entrywise.
    #[test]
    fn positive_part_via_slack_block() {
        let dims = vec![2usize, 2usize];
        let mut c = BlockMatrix::zeros(&dims);
        c.blocks[0] = RMatrix::identity(2, 2);
        let m_target = RMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 3.0]);
        let mut constraints = Vec::new();
        for i in 0..2 {
            for j in i..2 {
                let mut a = BlockMatrix::zeros(&dims);
                let w = if i == j { 1.0 } else { 0.5 };
                a.blocks[0][(i, j)] = w;
                a.blocks[0][(j, i)] = w;
                a.blocks[1][(i, j)] = -w;
                a.blocks[1][(j, i)] = -w;
                constraints.push((a, m_target[(i, j)]));
            }
        }
        let problem = SdpProblem::new(dims, c, constraints).unwrap();
        let sol = solve(&problem, &SdpOptions::default()).unwrap();
        sol.require_optimal().unwrap();
        assert_relative_eq!(sol.primal_value, 3.0, epsilon = 1e-6);
        // Y itself converges to diag(0, 3).
        assert_relative_eq!(sol.x.blocks[0][(1, 1)], 3.0, epsilon = 1e-5);
        assert!(sol.x.blocks[0][(0, 0)].abs() < 1e-5);
    }

    fn random_sym(rng: &mut impl Rng, n: usize) -> RMatrix {
        let m = RMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&m + m.transpose()) * 0.5
    }

    fn random_psd(rng: &mut impl Rng, n: usize, ridge: f64) -> RMatrix {
        let g = RMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &g * g.transpose() + RMatrix::identity(n, n) * ridge
    }

    /// Random problems built around a known strictly feasible primal-dual
    /// pair; checks convergence, weak duality, and complementarity.
    #[test]
    fn random_problems_kkt() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for case in 0..200 {
            let nblocks = 1 + (case % 2);
            let dims: Vec<usize> = (0..nblocks).map(|_| rng.gen_range(2..9)).collect();
            let m = rng.gen_range(2..13);
            let x0 = BlockMatrix {
                blocks: dims.iter().map(|&d| random_psd(&mut rng, d, 0.3)).collect(),
            };
            let z0 = BlockMatrix {
                blocks: dims.iter().map(|&d| random_psd(&mut rng, d, 0.3)).collect(),
            };
            let a_list: Vec<BlockMatrix> = (0..m)
                .map(|_| BlockMatrix {
                    blocks: dims.iter().map(|&d| random_sym(&mut rng, d)).collect(),
                })
                .collect();
            let y0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut c = z0.clone();
            for (a, &yi) in a_list.iter().zip(&y0) {
                c.axpy(yi, a);
            }
            let constraints: Vec<(BlockMatrix, f64)> = a_list
                .iter()
                .map(|a| (a.clone(), a.dot(&x0)))
                .collect();
            let problem = SdpProblem::new(dims, c, constraints).unwrap();
            let sol = solve(&problem, &SdpOptions::default()).unwrap();
            sol.require_optimal()
                .unwrap_or_else(|e| panic!("case {case}: {e}"));

            // Weak duality around the known feasible pair.
            let primal_at_x0 = problem.c.dot(&x0);
            assert!(sol.primal_value <= primal_at_x0 + 1e-6 * (1.0 + primal_at_x0.abs()));
            assert!(sol.dual_value <= sol.primal_value + 1e-6 * (1.0 + sol.primal_value.abs()));
            // Complementarity at the returned point.
            let comp = sol.x.dot(&sol.z).abs();
            assert!(
                comp <= 1e-5 * (1.0 + sol.primal_value.abs()),
                "case {case}: complementarity {comp}"
            );
            // Returned iterates stay PSD.
            assert!(sol.x.min_eig() > -1e-9);
            assert!(sol.z.min_eig() > -1e-9);
        }
    }

    #[test]
    fn embed_preserves_spectrum() {
        let h = CMatrix::from_row_slice(
            2,
            2,
            &[c64(1., 0.), c64(0., 1.), c64(0., -1.), c64(1., 0.)],
        );
        let e = complex_psd_embed(&h);
        let mut eigs: Vec<f64> = e.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        // {0, 2} doubled.
        assert_relative_eq!(eigs[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[2], 2.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[3], 2.0, epsilon = 1e-12);
    }

    /// LMI encoding check on a problem with a hand-computable answer:
    /// minimize v subject to v*I >= H for Hermitian H, so v* = lambda_max(H).
    #[test]
    fn lmi_min_eigenvalue_bound() {
        let h = CMatrix::from_row_slice(
            2,
            2,
            &[c64(1., 0.), c64(0.5, 0.5), c64(0.5, -0.5), c64(-0.3, 0.)],
        );
        // H0 + v * I >= 0 with H0 = -H: feasible iff v >= lambda_max(H).
        let h0 = -h.clone();
        let id = CMatrix::identity(2, 2);
        let sol = solve_lmi_min(&h0, &[id], &[1.0], &SdpOptions::default()).unwrap();
        let lmax = crate::matrix::HermMatrix::new(h)
            .unwrap()
            .eig()
            .values[1];
        assert_relative_eq!(sol.value, lmax, epsilon = 1e-7);
    }
}
