//! The Holevo bound as a semidefinite program.
//!
//! For a model point with gradients d_i rho and a cost C, the bound is
//!
//! ```text
//!   min over Hermitian X_i, real symmetric V:
//!     trace(C V)   s.t.  V >= Z[X],  tr(d_i rho X_j) = delta_ij,
//! ```
//!
//! with Z[X]_{ij} = tr(rho X_i X_j). Expanding each X_i over an orthonormal
//! Hermitian operator basis turns Z into a Gram form x^T S x with
//! S_ab = tr(rho Lambda_a Lambda_b), so V >= Z[X] becomes the linear matrix
//! inequality [[V, (RX)^dag], [RX, I]] >= 0 for any factorization S = R^dag R.
//! The equality constraints are eliminated by parametrizing X over the
//! affine solution space, which leaves a pure LMI minimization.
//!
//! A rank-deficient cost makes the direct program degenerate (V is free
//! along the cost kernel, so the optimal face is unbounded and interior
//! point iterations stall). The objective only depends on X through
//! Y = sqrt(C) X, so those cases are solved exactly in the reduced
//! coordinates: an identity-cost program over rank(C) operator components
//! whose unbiasedness right-hand sides are the scaled cost eigenvectors.

use nalgebra::Cholesky;
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::matrix::{
    c64, real_psd_sqrt, real_sym_eig, CMatrix, HermMatrix, RMatrix, RVector,
};
use crate::model::{CostMatrix, ModelPoint, ParametricModel};
use crate::sdp::{solve_lmi_min, BlockMatrix, SdpOptions, SdpSolution, SdpStatus};

/// Relative eigenvalue cutoff when factoring the basis Gram matrix
/// S_ab = tr(rho Lambda_a Lambda_b); S is singular whenever rho is
/// rank-deficient, so an eigen square-root with clipping is used instead of
/// a Cholesky factorization.
pub const GRAM_CLIP_REL_TOL: f64 = 1e-12;

/// Relative cutoff below which a cost eigenvalue is treated as an exact zero
/// and its direction is removed from the program.
pub const COST_RANK_REL_TOL: f64 = 1e-12;

/// Largest multi-copy Hilbert-space dimension accepted by
/// [`hcr_multicopy_check`]; beyond this the SDP grows past the sizes this
/// dense solver is built for.
pub const MULTICOPY_DIM_CAP: usize = 8;

/// Local-unbiasedness residual (max |tr(d_i rho X_j) - delta_ij|) above which
/// [`evaluate_candidate`] rejects its input.
pub const LU_RESIDUAL_TOL: f64 = 1e-6;

/// Solved Holevo bound: the value together with the optimizers and solver
/// diagnostics.
pub struct HcrSolution {
    pub value: f64,
    /// Optimal estimator observables, re-centered to tr(rho X_i) = 0.
    pub x_ops: Vec<HermMatrix>,
    /// Matrix upper bound with V >= Z at the optimum. For a full-rank cost
    /// this is the SDP optimizer and trace(C V) = value; for a singular cost
    /// it is the minimal-trace completion Re Z + |Im Z|.
    pub v_matrix: RMatrix,
    /// Z[X]_{ij} = tr(rho X_i X_j) at the optimum; Hermitian.
    pub z_matrix: CMatrix,
    pub sdp_diag: SdpSolution,
}

/// Orthonormal Hermitian basis of d x d matrices for the Hilbert-Schmidt
/// inner product: generalized Gell-Mann matrices plus I/sqrt(d). Real linear
/// combinations of these span exactly the Hermitian matrices.
pub fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let mut sym = CMatrix::zeros(d, d);
            sym[(i, j)] = c64(inv_sqrt2, 0.0);
            sym[(j, i)] = c64(inv_sqrt2, 0.0);
            basis.push(sym);
            let mut asym = CMatrix::zeros(d, d);
            asym[(i, j)] = c64(0.0, -inv_sqrt2);
            asym[(j, i)] = c64(0.0, inv_sqrt2);
            basis.push(asym);
        }
    }
    for k in 1..d {
        // diag(1, ..., 1, -k, 0, ..., 0) / sqrt(k (k+1)) with k ones.
        let norm = 1.0 / ((k * (k + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..k {
            m[(i, i)] = c64(norm, 0.0);
        }
        m[(k, k)] = c64(-(k as f64) * norm, 0.0);
        basis.push(m);
    }
    let mut id = CMatrix::zeros(d, d);
    for i in 0..d {
        id[(i, i)] = c64(1.0 / (d as f64).sqrt(), 0.0);
    }
    basis.push(id);
    basis
}

/// The affine space of locally unbiased coefficient vectors: solutions of
/// T x = rhs with T_ia = tr(d_i rho Lambda_a), plus an orthonormal basis of
/// the kernel of T.
struct UnbiasedSpace {
    t: RMatrix,
    chol: Cholesky<f64, Dyn>,
    kernel: RMatrix,
}

impl UnbiasedSpace {
    /// Least-norm solution of T x = rhs.
    fn least_norm(&self, rhs: &RVector) -> RVector {
        self.t.transpose() * self.chol.solve(rhs)
    }
}

fn unbiased_space(t: &RMatrix) -> Result<UnbiasedSpace> {
    let p = t.nrows();
    let big_d = t.ncols();
    // Rank and kernel through the Gram matrix T^T T (D x D, PSD).
    let gram = t.transpose() * t;
    let (values, vectors) = real_sym_eig(&gram);
    let max = values.last().copied().unwrap_or(0.0).max(0.0);
    let cut = GRAM_CLIP_REL_TOL * max.max(1e-300);
    let rank = values.iter().filter(|&&l| l > cut).count();
    if rank < p {
        let smallest_row = values
            .iter()
            .rev()
            .take(p)
            .next_back()
            .copied()
            .unwrap_or(0.0);
        return Err(Error::Unidentifiable {
            weight: smallest_row.max(0.0),
        });
    }
    let mut kernel = RMatrix::zeros(big_d, big_d - p);
    for k in 0..(big_d - p) {
        kernel.set_column(k, &vectors.column(k));
    }
    let tt = t * t.transpose();
    let chol = Cholesky::new(tt).ok_or(Error::Unidentifiable {
        weight: values[big_d - p].max(0.0),
    })?;
    Ok(UnbiasedSpace {
        t: t.clone(),
        chol,
        kernel,
    })
}

/// Clipped eigen square-root factor R with R^dag R = S (k x D, k = rank S).
fn gram_factor(s: &CMatrix) -> CMatrix {
    let h = HermMatrix::new_unchecked(s.clone());
    let eig = h.eig();
    let max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cut = GRAM_CLIP_REL_TOL * max.max(1e-300);
    let kept: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > cut)
        .collect();
    let big_d = s.nrows();
    let mut r = CMatrix::zeros(kept.len(), big_d);
    for (row, &i) in kept.iter().enumerate() {
        let scale = eig.values[i].sqrt();
        for col in 0..big_d {
            r[(row, col)] = eig.vectors[(col, i)].conj() * c64(scale, 0.0);
        }
    }
    r
}

/// Outcome of one LMI minimization over a tuple of q operator components:
/// the optimal q x q bound block and the D x q basis coefficients.
struct TupleRun {
    v: RMatrix,
    coeffs: RMatrix,
    sdp: SdpSolution,
}

/// Minimizes trace(cost . V) subject to [[V, (R Y)^dag], [R Y, I]] >= 0 with
/// Y ranging over y0 + kernel(T) columnwise.
fn solve_tuple_lmi(
    r: &CMatrix,
    space: &UnbiasedSpace,
    y0: &RMatrix,
    cost: &RMatrix,
    options: &SdpOptions,
) -> Result<TupleRun> {
    let big_d = y0.nrows();
    let q = y0.ncols();
    let k = r.nrows();
    let n_null = space.kernel.ncols();
    let side = q + k;
    let ry0 = r * y0.map(|v| c64(v, 0.0));
    let mut h0 = CMatrix::zeros(side, side);
    for row in 0..k {
        h0[(q + row, q + row)] = c64(1.0, 0.0);
        for col in 0..q {
            h0[(q + row, col)] = ry0[(row, col)];
            h0[(col, q + row)] = ry0[(row, col)].conj();
        }
    }
    let n_v = q * (q + 1) / 2;
    let n_vars = n_v + q * n_null;
    let mut h_terms = Vec::with_capacity(n_vars);
    let mut cost_vec = Vec::with_capacity(n_vars);
    for i in 0..q {
        for j in i..q {
            let mut h = CMatrix::zeros(side, side);
            h[(i, j)] = c64(1.0, 0.0);
            h[(j, i)] = c64(1.0, 0.0);
            cost_vec.push(if i == j {
                cost[(i, i)]
            } else {
                2.0 * cost[(i, j)]
            });
            h_terms.push(h);
        }
    }
    let rn = r * space.kernel.map(|v| c64(v, 0.0));
    for j in 0..q {
        for m in 0..n_null {
            let mut h = CMatrix::zeros(side, side);
            for row in 0..k {
                h[(q + row, j)] = rn[(row, m)];
                h[(j, q + row)] = rn[(row, m)].conj();
            }
            h_terms.push(h);
            cost_vec.push(0.0);
        }
    }
    let lmi = solve_lmi_min(&h0, &h_terms, &cost_vec, options)?;
    let mut v = RMatrix::zeros(q, q);
    let mut idx = 0;
    for i in 0..q {
        for j in i..q {
            v[(i, j)] = lmi.vars[idx];
            v[(j, i)] = lmi.vars[idx];
            idx += 1;
        }
    }
    let mut coeffs = y0.clone();
    for j in 0..q {
        for m in 0..n_null {
            let u = lmi.vars[n_v + j * n_null + m];
            for a in 0..big_d {
                coeffs[(a, j)] += u * space.kernel[(a, m)];
            }
        }
    }
    Ok(TupleRun {
        v,
        coeffs,
        sdp: lmi.sdp,
    })
}

/// Expands coefficient columns into operators and re-centers each one to
/// tr(rho X) = 0 (dropping that constraint from the program does not change
/// the optimum, and centering restores it for reporting).
fn ops_from_coeffs(basis: &[CMatrix], coeffs: &RMatrix, pt: &ModelPoint) -> Vec<HermMatrix> {
    let d = pt.dim();
    let mut out = Vec::with_capacity(coeffs.ncols());
    for j in 0..coeffs.ncols() {
        let mut op = CMatrix::zeros(d, d);
        for (a, b) in basis.iter().enumerate() {
            op += b * c64(coeffs[(a, j)], 0.0);
        }
        let mean = (pt.rho.matrix() * &op).trace().re;
        for i in 0..d {
            op[(i, i)] -= c64(mean, 0.0);
        }
        out.push(HermMatrix::new_unchecked(op));
    }
    out
}

/// Minimal-trace real symmetric upper bound on a Hermitian matrix:
/// Re Z + (B^T B)^{1/2} with B = Im Z. The polar factor dominates both +iB
/// and -iB, so the result dominates Z exactly.
fn psd_upper_bound(z: &CMatrix) -> RMatrix {
    let pdim = z.nrows();
    let mut re = RMatrix::zeros(pdim, pdim);
    let mut im = RMatrix::zeros(pdim, pdim);
    for i in 0..pdim {
        for j in 0..pdim {
            re[(i, j)] = z[(i, j)].re;
            im[(i, j)] = z[(i, j)].im;
        }
    }
    &re + real_psd_sqrt(&(im.transpose() * &im))
}

/// Diagnostics placeholder for the no-op program (cost identically zero).
fn trivial_solution() -> SdpSolution {
    SdpSolution {
        x: BlockMatrix::zeros(&[1]),
        y: RVector::zeros(0),
        z: BlockMatrix::zeros(&[1]),
        primal_value: 0.0,
        dual_value: 0.0,
        gap: 0.0,
        primal_residual: 0.0,
        dual_residual: 0.0,
        iterations: 0,
        status: SdpStatus::Optimal,
    }
}

/// Assembles and solves the Holevo-bound SDP at a model point.
pub fn hcr_bound(pt: &ModelPoint, c: &CostMatrix) -> Result<HcrSolution> {
    hcr_bound_with(pt, c, &SdpOptions::default())
}

pub fn hcr_bound_with(
    pt: &ModelPoint,
    c: &CostMatrix,
    options: &SdpOptions,
) -> Result<HcrSolution> {
    let p = pt.param_count();
    if c.dim() != p {
        return Err(Error::DimensionMismatch {
            context: "cost matrix vs parameter count",
            expected: p,
            got: c.dim(),
        });
    }
    let d = pt.dim();
    let big_d = d * d;
    let basis = hermitian_basis(d);

    // T_ia = tr(d_i rho Lambda_a): real because both factors are Hermitian.
    let mut t = RMatrix::zeros(p, big_d);
    for i in 0..p {
        for a in 0..big_d {
            t[(i, a)] = (pt.grads[i].matrix() * &basis[a]).trace().re;
        }
    }
    let space = unbiased_space(&t)?;

    // Gram matrix S_ab = tr(rho Lambda_a Lambda_b) and its factor.
    let mut s = CMatrix::zeros(big_d, big_d);
    for a in 0..big_d {
        let rl = pt.rho.matrix() * &basis[a];
        for b in 0..big_d {
            s[(a, b)] = (&rl * &basis[b]).trace();
        }
    }
    let r = gram_factor(&s);

    let (cvals, cvecs) = real_sym_eig(c.matrix());
    let cmax = cvals.last().copied().unwrap_or(0.0).max(0.0);
    let kept: Vec<usize> = (0..p)
        .filter(|&i| cvals[i] > COST_RANK_REL_TOL * cmax.max(1e-300))
        .collect();
    let q = kept.len();

    if q == p {
        // Full-rank cost: direct encoding in the original coordinates.
        let mut x0 = RMatrix::zeros(big_d, p);
        for j in 0..p {
            let mut e = RVector::zeros(p);
            e[j] = 1.0;
            x0.set_column(j, &space.least_norm(&e));
        }
        let run = solve_tuple_lmi(&r, &space, &x0, c.matrix(), options)?;
        let x_ops = ops_from_coeffs(&basis, &run.coeffs, pt);
        let z = z_of(pt, &x_ops);
        let value = (c.matrix() * &run.v).trace();
        return Ok(HcrSolution {
            value,
            x_ops,
            v_matrix: run.v,
            z_matrix: z,
            sdp_diag: run.sdp,
        });
    }

    // Singular cost: solve over Y = sqrt(C) X, whose components along cost
    // eigenvectors u_k with eigenvalue l_k > 0 obey tr(d_i rho Y_k) =
    // sqrt(l_k) (u_k)_i under an identity cost block. Directions in the cost
    // kernel drop out of the objective entirely; they rejoin X through
    // least-norm completions W_m with tr(d_i rho W_m) = (u_m)_i, which keeps
    // the returned tuple exactly locally unbiased.
    let (value, y_part, sdp) = if q == 0 {
        (0.0, RMatrix::zeros(big_d, 0), trivial_solution())
    } else {
        let mut y0 = RMatrix::zeros(big_d, q);
        for (col, &k) in kept.iter().enumerate() {
            let rhs =
                RVector::from_iterator(p, (0..p).map(|i| cvals[k].sqrt() * cvecs[(i, k)]));
            y0.set_column(col, &space.least_norm(&rhs));
        }
        let run = solve_tuple_lmi(&r, &space, &y0, &RMatrix::identity(q, q), options)?;
        (run.v.trace(), run.coeffs, run.sdp)
    };

    let dropped: Vec<usize> = (0..p).filter(|i| !kept.contains(i)).collect();
    let completions: Vec<RVector> = dropped
        .iter()
        .map(|&m| {
            let rhs = RVector::from_iterator(p, (0..p).map(|i| cvecs[(i, m)]));
            space.least_norm(&rhs)
        })
        .collect();
    let mut x_coeffs = RMatrix::zeros(big_d, p);
    for j in 0..p {
        let mut col = RVector::zeros(big_d);
        for (cidx, &k) in kept.iter().enumerate() {
            col += y_part.column(cidx) * (cvecs[(j, k)] / cvals[k].sqrt());
        }
        for (w, &m) in completions.iter().zip(&dropped) {
            col += w * cvecs[(j, m)];
        }
        x_coeffs.set_column(j, &col);
    }
    let x_ops = ops_from_coeffs(&basis, &x_coeffs, pt);
    let z = z_of(pt, &x_ops);
    let v_matrix = psd_upper_bound(&z);
    Ok(HcrSolution {
        value,
        x_ops,
        v_matrix,
        z_matrix: z,
        sdp_diag: sdp,
    })
}

fn z_of(pt: &ModelPoint, x_ops: &[HermMatrix]) -> CMatrix {
    let p = x_ops.len();
    let mut z = CMatrix::zeros(p, p);
    let rho_x: Vec<CMatrix> = x_ops.iter().map(|x| pt.rho.matrix() * x.matrix()).collect();
    for i in 0..p {
        for j in 0..p {
            z[(i, j)] = (&rho_x[i] * x_ops[j].matrix()).trace();
        }
    }
    z
}

/// trace(C Re Z) + ||sqrt(C) Im Z sqrt(C)||_1.
fn trace_norm_objective(z: &CMatrix, c: &CostMatrix) -> f64 {
    let p = z.nrows();
    let mut re = RMatrix::zeros(p, p);
    let mut im = RMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            re[(i, j)] = z[(i, j)].re;
            im[(i, j)] = z[(i, j)].im;
        }
    }
    let term1 = (c.matrix() * &re).trace();
    let sqrt_c = real_psd_sqrt(c.matrix());
    let b = &sqrt_c * im * &sqrt_c;
    let h = CMatrix::from_fn(p, p, |i, j| c64(0.0, 1.0) * c64(b[(i, j)], 0.0));
    term1 + HermMatrix::new_unchecked(h).trace_norm()
}

/// Evaluates the trace-norm form of the Holevo objective for an explicit
/// candidate tuple, after checking local unbiasedness.
pub fn evaluate_candidate(
    pt: &ModelPoint,
    x_ops: &[HermMatrix],
    c: &CostMatrix,
) -> Result<f64> {
    let p = pt.param_count();
    if x_ops.len() != p {
        return Err(Error::DimensionMismatch {
            context: "candidate tuple length vs parameter count",
            expected: p,
            got: x_ops.len(),
        });
    }
    if c.dim() != p {
        return Err(Error::DimensionMismatch {
            context: "cost matrix vs parameter count",
            expected: p,
            got: c.dim(),
        });
    }
    let mut residuals = Vec::with_capacity(p * p);
    let mut max_resid = 0.0f64;
    for i in 0..p {
        for (j, x) in x_ops.iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            let r = (pt.grads[i].matrix() * x.matrix()).trace().re - delta;
            residuals.push(r);
            max_resid = max_resid.max(r.abs());
        }
    }
    if max_resid > LU_RESIDUAL_TOL {
        return Err(Error::ConstraintViolation {
            context: "local unbiasedness tr(d_i rho X_j) = delta_ij".into(),
            residuals,
        });
    }
    Ok(trace_norm_objective(&z_of(pt, x_ops), c))
}

/// Holevo bound for one copy and for the n-copy product model at the same
/// parameter point and cost. Returned as (single, multi).
pub fn hcr_multicopy_check(
    model: &ParametricModel,
    theta: &[f64],
    c: &CostMatrix,
    n: usize,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Domain("copy count must be at least 1".into()));
    }
    let dim_n = model.dim().checked_pow(n as u32).unwrap_or(usize::MAX);
    if dim_n > MULTICOPY_DIM_CAP {
        return Err(Error::Domain(format!(
            "multi-copy dimension {dim_n} exceeds the SDP cap {MULTICOPY_DIM_CAP}"
        )));
    }
    let single = hcr_bound(&model.evaluate(theta)?, c)?.value;
    let multi_model = crate::model::multi_copy(model, n)?;
    let multi = hcr_bound(&multi_model.evaluate(theta)?, c)?.value;
    Ok((single, multi))
}
