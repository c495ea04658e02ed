//! Gaussian shift models: mean r = A theta on a phase space carrying
//! quantum mode pairs and classical variables, with a fixed covariance.
//!
//! The commutation structure is [R, R^T] = iS with S = diag(Omega, ...,
//! Omega, 0, ..., 0), Omega = [[0,1],[-1,0]]; classical variables carry zero
//! rows. The quantum bounds reduce to small matrix formulas: QFI
//! F = A^T V^{-1} A, and the Holevo bound is a minimization over linear
//! estimators Y = B R with B A = I,
//!
//! ```text
//!   C^H = min_B  trace(C B V B^T) + (1/2) ||sqrt(C) B S B^T sqrt(C)||_1,
//! ```
//!
//! solved in closed form when B is determined (p = r_dim) and as an SDP
//! otherwise. The bound is achieved by measuring Y = B R + B R~ jointly with
//! a mirrored ancilla (symplectic -S) whose covariance squeezes away the
//! residual non-commutativity.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::matrix::{c64, real_psd_sqrt, real_sym_eig, CMatrix, HermMatrix, RMatrix};
use crate::model::CostMatrix;
use crate::sdp::{solve_lmi_min, SdpOptions, SdpSolution};

/// Tolerance on the matrix uncertainty relation V >= iS/2 (minimum
/// eigenvalue of the Hermitian matrix V - iS/2).
pub const HEISENBERG_TOL: f64 = 1e-9;

/// Regularization added to exactly degenerate directions of the optimal
/// ancilla covariance.
pub const ANCILLA_EPS: f64 = 1e-9;

/// Relative rank cutoffs for the encoding map and derived Gram factors.
const RANK_REL_TOL: f64 = 1e-12;

/// A Gaussian shift model: q_modes quantum mode pairs followed by c_vars
/// classical variables, encoding matrix A (mean r = A theta), covariance V.
#[derive(Clone, Debug)]
pub struct GaussianShiftModel {
    q_modes: usize,
    c_vars: usize,
    a: RMatrix,
    v: RMatrix,
    s: RMatrix,
}

/// S = diag(Omega, ..., Omega, 0, ..., 0) for the given mode counts.
pub fn symplectic_form(q_modes: usize, c_vars: usize) -> RMatrix {
    let r = 2 * q_modes + c_vars;
    let mut s = RMatrix::zeros(r, r);
    for k in 0..q_modes {
        s[(2 * k, 2 * k + 1)] = 1.0;
        s[(2 * k + 1, 2 * k)] = -1.0;
    }
    s
}

impl GaussianShiftModel {
    pub fn new(q_modes: usize, c_vars: usize, a: RMatrix, v: RMatrix) -> Result<Self> {
        let r = 2 * q_modes + c_vars;
        if r == 0 {
            return Err(Error::Domain("empty phase space".into()));
        }
        if a.nrows() != r {
            return Err(Error::DimensionMismatch {
                context: "encoding rows vs phase-space dimension",
                expected: r,
                got: a.nrows(),
            });
        }
        let p = a.ncols();
        if p == 0 || p > r {
            return Err(Error::Domain(format!(
                "parameter count {p} must lie in 1..={r}"
            )));
        }
        if v.nrows() != r || v.ncols() != r {
            return Err(Error::DimensionMismatch {
                context: "covariance vs phase-space dimension",
                expected: r,
                got: v.nrows().max(v.ncols()),
            });
        }
        let scale = 1.0 + v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let dev = (&v - v.transpose())
            .iter()
            .fold(0.0f64, |m, &x| m.max(x.abs()));
        if dev > 1e-12 * scale {
            return Err(Error::NotSymmetric { max_dev: dev });
        }
        let v = (&v + v.transpose()) * 0.5;
        let s = symplectic_form(q_modes, c_vars);
        // Uncertainty relation V >= iS/2.
        let min_eig = heisenberg_margin(&v, &s);
        if min_eig < -HEISENBERG_TOL {
            return Err(Error::NotPsd { min_eig });
        }
        // A must be injective for the parameters to be identifiable.
        let (gvals, _) = real_sym_eig(&(a.transpose() * &a));
        let gmax = gvals.last().copied().unwrap_or(0.0).max(0.0);
        if gvals[0] <= RANK_REL_TOL * gmax.max(1e-300) {
            return Err(Error::Unidentifiable {
                weight: gvals[0].max(0.0),
            });
        }
        Ok(Self {
            q_modes,
            c_vars,
            a,
            v,
            s,
        })
    }

    pub fn q_modes(&self) -> usize {
        self.q_modes
    }

    pub fn c_vars(&self) -> usize {
        self.c_vars
    }

    pub fn r_dim(&self) -> usize {
        2 * self.q_modes + self.c_vars
    }

    pub fn param_count(&self) -> usize {
        self.a.ncols()
    }

    pub fn encoding(&self) -> &RMatrix {
        &self.a
    }

    pub fn covariance(&self) -> &RMatrix {
        &self.v
    }

    pub fn symplectic(&self) -> &RMatrix {
        &self.s
    }
}

/// Minimum eigenvalue of the Hermitian matrix V - iS/2.
pub fn heisenberg_margin(v: &RMatrix, s: &RMatrix) -> f64 {
    let r = v.nrows();
    let h = CMatrix::from_fn(r, r, |i, j| c64(v[(i, j)], -0.5 * s[(i, j)]));
    HermMatrix::new_unchecked(h).min_eig()
}

/// Trace norm of a real antisymmetric matrix (iB is Hermitian).
fn antisym_trace_norm(b: &RMatrix) -> f64 {
    let n = b.nrows();
    let h = CMatrix::from_fn(n, n, |i, j| c64(0.0, b[(i, j)]));
    HermMatrix::new_unchecked(h).trace_norm()
}

/// Quantum Fisher information F = A^T V^{-1} A of a Gaussian shift model.
pub fn gaussian_qfi(g: &GaussianShiftModel) -> Result<RMatrix> {
    let coeff = gaussian_sld_coefficients(g)?;
    let f = &coeff * &g.a;
    Ok((&f + f.transpose()) * 0.5)
}

/// SLD coefficient matrix A^T V^{-1} (p x r_dim): row i gives the expansion
/// of the i-th SLD over the centered phase-space variables R - A theta.
pub fn gaussian_sld_coefficients(g: &GaussianShiftModel) -> Result<RMatrix> {
    let chol = Cholesky::new(g.v.clone()).ok_or_else(|| {
        Error::Domain("covariance is singular; QFI undefined".into())
    })?;
    // V^{-1} A, then transpose.
    let vinv_a = chol.solve(&g.a);
    Ok(vinv_a.transpose())
}

/// Holevo bound of a Gaussian shift model: the value and the optimal
/// estimator coefficients B (p x r_dim, B A = I).
///
/// With p = r_dim the constraint pins B = A^{-1} and the value is the closed
/// form trace(C B V B^T) + (1/2)||sqrt(C) B S B^T sqrt(C)||_1; otherwise the
/// minimization over B runs as an SDP.
pub fn gaussian_hcr(g: &GaussianShiftModel, c: &CostMatrix) -> Result<(f64, RMatrix)> {
    check_cost(g, c)?;
    if g.param_count() == g.r_dim() {
        let b = g.a.clone().try_inverse().ok_or(Error::Unidentifiable {
            weight: 0.0,
        })?;
        let value = fixed_b_cost(g, c, &b);
        Ok((value, b))
    } else {
        gaussian_hcr_sdp(g, c)
    }
}

/// trace(C B V B^T) + (1/2)||sqrt(C) B S B^T sqrt(C)||_1 for a given B.
pub fn fixed_b_cost(g: &GaussianShiftModel, c: &CostMatrix, b: &RMatrix) -> f64 {
    let bvb = b * &g.v * b.transpose();
    let term1 = (c.matrix() * &bvb).trace();
    let sqrt_c = real_psd_sqrt(c.matrix());
    let m = &sqrt_c * b * &g.s * b.transpose() * &sqrt_c;
    let m = (&m - m.transpose()) * 0.5;
    term1 + 0.5 * antisym_trace_norm(&m)
}

fn check_cost(g: &GaussianShiftModel, c: &CostMatrix) -> Result<()> {
    if c.dim() != g.param_count() {
        return Err(Error::DimensionMismatch {
            context: "cost matrix vs parameter count",
            expected: g.param_count(),
            got: c.dim(),
        });
    }
    Ok(())
}

/// Complex factor Phi with Phi^dag Phi = V + iS/2 (k x r_dim, k = rank).
fn noise_factor(g: &GaussianShiftModel) -> CMatrix {
    let r = g.r_dim();
    let h = CMatrix::from_fn(r, r, |i, j| c64(g.v[(i, j)], 0.5 * g.s[(i, j)]));
    let eig = HermMatrix::new_unchecked(h).eig();
    let max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cut = RANK_REL_TOL * max.max(1e-300);
    let kept: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > cut)
        .collect();
    let mut phi = CMatrix::zeros(kept.len(), r);
    for (row, &i) in kept.iter().enumerate() {
        let scale = eig.values[i].sqrt();
        for col in 0..r {
            phi[(row, col)] = eig.vectors[(col, i)].conj() * c64(scale, 0.0);
        }
    }
    phi
}

/// Pseudo-inverse B0 = (A^T A)^{-1} A^T and an orthonormal basis K of the
/// left annihilator of A (rows; (r_dim - p) x r_dim).
fn b_parametrization(g: &GaussianShiftModel) -> Result<(RMatrix, RMatrix)> {
    let p = g.param_count();
    let r = g.r_dim();
    let chol = Cholesky::new(g.a.transpose() * &g.a).ok_or(Error::Unidentifiable {
        weight: 0.0,
    })?;
    let b0 = chol.solve(&g.a.transpose().into_owned());
    let (_, vecs) = real_sym_eig(&(&g.a * g.a.transpose()));
    let mut k = RMatrix::zeros(r - p, r);
    for m in 0..(r - p) {
        k.set_row(m, &vecs.column(m).transpose());
    }
    Ok((b0, k))
}

/// SDP path for the Gaussian Holevo bound: minimize trace(C W) over real
/// symmetric W and B = B0 + Y K subject to W >= B (V + iS/2) B^T. With the
/// factor Phi^dag Phi = V + iS/2 the constraint is the LMI
/// [[W, (Phi B^T)^dag], [Phi B^T, I]] >= 0. A rank-deficient cost is handled
/// exactly by reducing to the components of sqrt(C) B, mirroring the finite
/// dimensional solver.
pub fn gaussian_hcr_sdp(g: &GaussianShiftModel, c: &CostMatrix) -> Result<(f64, RMatrix)> {
    check_cost(g, c)?;
    let p = g.param_count();
    let r = g.r_dim();
    let phi = noise_factor(g);
    let (b0, annihilator) = b_parametrization(g)?;
    let n_free = r - p;

    let (cvals, cvecs) = real_sym_eig(c.matrix());
    let cmax = cvals.last().copied().unwrap_or(0.0).max(0.0);
    let kept: Vec<usize> = (0..p)
        .filter(|&i| cvals[i] > RANK_REL_TOL * cmax.max(1e-300))
        .collect();
    let q = kept.len();
    if q == 0 {
        return Ok((0.0, b0));
    }

    // Rows of the reduced estimator B' = sqrt(C) B along kept eigenvectors:
    // B'_k = sqrt(l_k) u_k^T (B0 + Y K). For a full-rank cost this is an
    // orthogonal rescaling of B itself and the identity-cost program below
    // is exactly equivalent.
    let mut b0_red = RMatrix::zeros(q, r);
    for (row, &k) in kept.iter().enumerate() {
        let mut acc = nalgebra::RowDVector::zeros(r);
        for i in 0..p {
            acc += b0.row(i) * (cvals[k].sqrt() * cvecs[(i, k)]);
        }
        b0_red.set_row(row, &acc);
    }

    let kdim = phi.nrows();
    let side = q + kdim;
    let phib0 = &phi * b0_red.transpose().map(|x| c64(x, 0.0));
    let mut h0 = CMatrix::zeros(side, side);
    for row in 0..kdim {
        h0[(q + row, q + row)] = c64(1.0, 0.0);
        for col in 0..q {
            h0[(q + row, col)] = phib0[(row, col)];
            h0[(col, q + row)] = phib0[(row, col)].conj();
        }
    }
    let n_w = q * (q + 1) / 2;
    let mut h_terms = Vec::with_capacity(n_w + q * n_free);
    let mut cost_vec = Vec::with_capacity(n_w + q * n_free);
    for i in 0..q {
        for j in i..q {
            let mut h = CMatrix::zeros(side, side);
            h[(i, j)] = c64(1.0, 0.0);
            h[(j, i)] = c64(1.0, 0.0);
            cost_vec.push(if i == j { 1.0 } else { 0.0 });
            h_terms.push(h);
        }
    }
    let phik = &phi * annihilator.transpose().map(|x| c64(x, 0.0));
    for j in 0..q {
        for m in 0..n_free {
            let mut h = CMatrix::zeros(side, side);
            for row in 0..kdim {
                // d(B'_j)/dY'_{jm} = sqrt(l_j)-scaled annihilator row m; the
                // scaling is absorbed into the reduced free variables.
                h[(q + row, j)] = phik[(row, m)];
                h[(j, q + row)] = phik[(row, m)].conj();
            }
            h_terms.push(h);
            cost_vec.push(0.0);
        }
    }
    let lmi = solve_lmi_min(&h0, &h_terms, &cost_vec, &SdpOptions::default())?;
    let value = lmi.value;

    // Reduced optimal rows, then lift back to B (p x r): components along
    // kept cost eigenvectors are rescaled rows of B'; dropped directions use
    // the pseudo-inverse rows, keeping B A = I exact.
    let mut b_red = b0_red.clone();
    for j in 0..q {
        for m in 0..n_free {
            let y = lmi.vars[n_w + j * n_free + m];
            let krow = annihilator.row(m).into_owned();
            let mut row = b_red.row(j).into_owned();
            row += krow * y;
            b_red.set_row(j, &row);
        }
    }
    let mut b = RMatrix::zeros(p, r);
    for jrow in 0..p {
        let mut acc = nalgebra::RowDVector::zeros(r);
        for (row, &k) in kept.iter().enumerate() {
            acc += b_red.row(row) * (cvecs[(jrow, k)] / cvals[k].sqrt());
        }
        for m in 0..p {
            if !kept.contains(&m) {
                let mut brow = nalgebra::RowDVector::zeros(r);
                for i in 0..p {
                    brow += b0.row(i) * cvecs[(i, m)];
                }
                acc += brow * cvecs[(jrow, m)];
            }
        }
        b.set_row(jrow, &acc);
    }
    Ok((value, b))
}

/// A jointly measurable linear estimator: Y = B R + B R~ with a mirrored
/// ancilla (symplectic -S, same coefficients), whose covariance makes the
/// components commute while adding the least possible noise.
#[derive(Clone, Debug)]
pub struct LinearMeasurement {
    pub b_matrix: RMatrix,
    pub ancilla_cov: RMatrix,
    /// The ancilla phase space carries the flipped symplectic form -S, which
    /// cancels the commutators of Y componentwise.
    pub ancilla_symplectic_negated: bool,
    /// True when degenerate directions of the optimal ancilla covariance
    /// were inflated to keep it a valid state.
    pub regularized: bool,
}

impl LinearMeasurement {
    /// Classical mean squared error of the estimator under cost c:
    /// trace(C B V B^T) + trace(C B V~ B^T).
    pub fn measured_cost(&self, g: &GaussianShiftModel, c: &CostMatrix) -> f64 {
        let b = &self.b_matrix;
        let signal = b * &g.v * b.transpose();
        let noise = b * &self.ancilla_cov * b.transpose();
        (c.matrix() * (signal + noise)).trace()
    }
}

/// Builds the measurement saturating the Gaussian Holevo bound. The ancilla
/// covariance is V~ = (1/2) G^+ |G S G| G^+ with G = sqrt(B^T C B), the
/// minimal-noise state for which Y commutes; exactly degenerate directions
/// are inflated (and flagged) so V~ stays a valid state.
pub fn optimal_linear_measurement(
    g: &GaussianShiftModel,
    c: &CostMatrix,
) -> Result<LinearMeasurement> {
    let (_, b) = gaussian_hcr(g, c)?;
    let r = g.r_dim();
    let w = b.transpose() * c.matrix() * &b;
    let w = (&w + w.transpose()) * 0.5;
    let (wvals, wvecs) = real_sym_eig(&w);
    let wmax = wvals.last().copied().unwrap_or(0.0).max(0.0);
    let wcut = RANK_REL_TOL * wmax.max(1e-300);
    let support: Vec<usize> = (0..r).filter(|&i| wvals[i] > wcut).collect();

    let mut g_sqrt = RMatrix::zeros(r, r);
    let mut g_pinv = RMatrix::zeros(r, r);
    for &i in &support {
        let u = wvecs.column(i);
        let outer = u * u.transpose();
        g_sqrt += &outer * wvals[i].sqrt();
        g_pinv += &outer * (1.0 / wvals[i].sqrt());
    }
    let m = &g_sqrt * &g.s * &g_sqrt;
    let m = (&m - m.transpose()) * 0.5;
    let abs_m = real_psd_sqrt(&(m.transpose() * &m));

    let s_norm = if g.q_modes > 0 { 1.0 } else { 0.0 };
    if support.len() == r {
        // Invertible weight: V~ = (1/2) G^{-1} (|M| + eps on kernel) G^{-1}.
        let (avals, avecs) = real_sym_eig(&abs_m);
        let amax = avals.last().copied().unwrap_or(0.0).max(0.0);
        let acut = RANK_REL_TOL * amax.max(1e-300);
        let mut core = abs_m.clone();
        let mut regularized = false;
        for (i, &a) in avals.iter().enumerate() {
            if a <= acut {
                let u = avecs.column(i);
                core += u * u.transpose() * ANCILLA_EPS;
                regularized = true;
            }
        }
        let vt = &g_pinv * core * &g_pinv * 0.5;
        let vt = (&vt + vt.transpose()) * 0.5;
        return Ok(LinearMeasurement {
            b_matrix: b,
            ancilla_cov: vt,
            ancilla_symplectic_negated: true,
            regularized,
        });
    }

    // Singular weight: the core is only determined on the support of W.
    // Inflate the support block by delta and put alpha on the complement;
    // the Schur complement of the uncertainty relation then closes for
    // alpha >= |S|/2 + |S|^2 / (4 delta), at a cost increase of only
    // delta trace(W).
    let core = &g_pinv * &abs_m * &g_pinv * 0.5;
    let core = (&core + core.transpose()) * 0.5;
    let delta = ANCILLA_EPS * (1.0 + s_norm);
    let alpha = s_norm / 2.0 + s_norm * s_norm / (4.0 * delta) + 1.0;
    let mut vt = core;
    for (i, &w) in wvals.iter().enumerate() {
        let u = wvecs.column(i);
        let outer = u * u.transpose();
        if w > wcut {
            vt += &outer * delta;
        } else {
            vt += &outer * alpha;
        }
    }
    let vt = (&vt + vt.transpose()) * 0.5;
    Ok(LinearMeasurement {
        b_matrix: b,
        ancilla_cov: vt,
        ancilla_symplectic_negated: true,
        regularized: true,
    })
}

/// Diagnostics of the most recent Gaussian SDP solve are not retained on the
/// result; callers needing them can rerun through the solver directly.
#[allow(dead_code)]
fn _unused(_: &SdpSolution) {}
