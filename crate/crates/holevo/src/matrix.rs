//! Dense complex matrices and the handful of Hermitian-specific operations
//! the rest of the crate is built on: validated Hermitian wrappers, sorted
//! eigendecompositions, trace norms, Kronecker products, and the
//! anticommutator solve {L, rho}/2 = D used for symmetric logarithmic
//! derivatives and Bayesian optimal observables.
//!
//! Matrices are kept dense; the crate targets dimensions up to a few hundred,
//! where dense eigendecompositions are both faster and more predictable than
//! anything sparse.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Absolute tolerance (relative to the largest entry) for accepting a matrix
/// as Hermitian or symmetric on input.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Eigenvalue-sum threshold, relative to the largest eigenvalue, below which
/// an anticommutator block is treated as part of the state's kernel.
pub const KERNEL_REL_TOL: f64 = 1e-10;

/// Residual bound for a successful anticommutator solve, relative to the
/// right-hand side's scale.
pub const ANTICOMM_RESIDUAL_TOL: f64 = 1e-8;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Largest entry magnitude; zero for empty matrices.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max deviation from Hermiticity, max_ij |H_ij - conj(H_ji)|.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// A square complex matrix validated (and then exactly symmetrized) to be
/// Hermitian. All spectral routines in the crate take this wrapper so that
/// "the input was Hermitian" is a type-level fact, not a per-call promise.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix {
    m: CMatrix,
}

impl HermMatrix {
    /// Validates Hermiticity within [`HERMITICITY_TOL`] (relative to the
    /// largest entry), then stores the exactly symmetrized (H + H^dag)/2.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "HermMatrix must be square",
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let scale = 1.0 + max_abs(&m);
        let dev = hermiticity_deviation(&m);
        if dev > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian { max_dev: dev });
        }
        Ok(Self::new_unchecked(m))
    }

    /// Symmetrizes without validating. For matrices that are Hermitian by
    /// construction (sums of validated ones, rotations U H U^dag, ...).
    pub fn new_unchecked(m: CMatrix) -> Self {
        let sym = (&m + m.adjoint()) * c64(0.5, 0.0);
        Self { m: sym }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    /// Builds from a real symmetric matrix (imaginary part zero).
    pub fn from_real(m: &RMatrix) -> Result<Self> {
        Self::new(m.map(|x| c64(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    /// Real trace. The imaginary part is zero for a Hermitian matrix.
    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Eigendecomposition with eigenvalues sorted ascending and eigenvector
    /// columns reordered to match.
    pub fn eig(&self) -> EigH {
        let se = self.m.clone().symmetric_eigen();
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            vectors.set_column(col, &se.eigenvectors.column(k));
        }
        EigH { values, vectors }
    }

    /// Smallest eigenvalue.
    pub fn min_eig(&self) -> f64 {
        self.eig().values.first().copied().unwrap_or(0.0)
    }

    /// Sum of |eigenvalues|.
    pub fn trace_norm(&self) -> f64 {
        self.eig().values.iter().map(|l| l.abs()).sum()
    }

    /// Spectral function: applies `f` to the eigenvalues and reassembles.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> HermMatrix {
        let e = self.eig();
        e.assemble(f)
    }

    /// PSD square root, clipping negative eigenvalues at zero.
    pub fn sqrt_psd(&self) -> HermMatrix {
        self.spectral_map(|l| l.max(0.0).sqrt())
    }
}

/// Sorted eigendecomposition of a Hermitian matrix.
pub struct EigH {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column k is the eigenvector for `values[k]`; unitary as a matrix.
    pub vectors: CMatrix,
}

impl EigH {
    /// Rebuilds U f(Lambda) U^dag.
    pub fn assemble(&self, f: impl Fn(f64) -> f64) -> HermMatrix {
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&l| c64(f(l), 0.0)),
        ));
        HermMatrix::new_unchecked(&self.vectors * d * self.vectors.adjoint())
    }
}

/// Sorted (ascending) eigendecomposition of a real symmetric matrix. Column k
/// of the returned matrix is the eigenvector for value k.
pub fn real_sym_eig(m: &RMatrix) -> (Vec<f64>, RMatrix) {
    let sym = (m + m.transpose()) * 0.5;
    let e = sym.symmetric_eigen();
    let n = e.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| e.eigenvalues[k]).collect();
    let mut vectors = RMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &e.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Symmetric square root of a real PSD matrix; eigenvalues below zero are
/// clipped (they can only be rounding noise for a valid input).
pub fn real_psd_sqrt(m: &RMatrix) -> RMatrix {
    let (values, vectors) = real_sym_eig(m);
    let d = RMatrix::from_diagonal(&RVector::from_iterator(
        values.len(),
        values.iter().map(|&l| l.max(0.0).sqrt()),
    ));
    let s = &vectors * d * vectors.transpose();
    (&s + s.transpose()) * 0.5
}

/// Trace norm (sum of singular values) of a general complex matrix, computed
/// through the Hermitian dilation [[0, A], [A^dag, 0]], whose spectrum is
/// {+sigma_k, -sigma_k} padded with zeros. Avoids squaring the matrix, so
/// small singular values keep full precision.
pub fn trace_norm(a: &CMatrix) -> f64 {
    let (n, m) = (a.nrows(), a.ncols());
    let mut d = CMatrix::zeros(n + m, n + m);
    d.view_mut((0, n), (n, m)).copy_from(a);
    d.view_mut((n, 0), (m, n)).copy_from(&a.adjoint());
    let h = HermMatrix::new_unchecked(d);
    0.5 * h.trace_norm()
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Solves {L, rho}/2 = D for Hermitian L, where rho is a density matrix and
/// D is traceless Hermitian.
///
/// In the eigenbasis of rho the solution is L_ij = 2 D_ij / (lambda_i +
/// lambda_j). Blocks with lambda_i + lambda_j <= [`KERNEL_REL_TOL`] * max
/// eigenvalue are zeroed: L is not determined there and the convention L = 0
/// keeps it minimal. If D itself has weight on those blocks the equation has
/// no solution and the residual check fails.
pub fn anticomm_solve(rho: &HermMatrix, d: &HermMatrix) -> Result<HermMatrix> {
    if rho.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            context: "anticomm_solve operands",
            expected: rho.dim(),
            got: d.dim(),
        });
    }
    let d_scale = 1.0 + max_abs(d.matrix());
    let tr = d.trace().abs();
    if tr > 1e-10 * d_scale {
        return Err(Error::NotTraceless { trace_abs: tr });
    }

    let e = rho.eig();
    let lmax = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let thresh = KERNEL_REL_TOL * lmax;
    let n = rho.dim();
    let d_tilde = e.vectors.adjoint() * d.matrix() * &e.vectors;
    let mut l_tilde = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let s = e.values[i] + e.values[j];
            if s > thresh {
                l_tilde[(i, j)] = d_tilde[(i, j)] * c64(2.0 / s, 0.0);
            }
        }
    }
    let l = HermMatrix::new_unchecked(&e.vectors * l_tilde * e.vectors.adjoint());

    // One residual check covers both roundoff and inconsistent right-hand
    // sides (weight on the kernel-kernel block, where {L, rho}/2 = 0).
    let recon = (l.matrix() * rho.matrix() + rho.matrix() * l.matrix()) * c64(0.5, 0.0);
    let residual = (&recon - d.matrix()).norm() / d_scale;
    if residual > ANTICOMM_RESIDUAL_TOL {
        return Err(Error::KernelResidual { residual });
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
    }

    fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(-1., 0.)])
    }

    #[test]
    fn hermitian_validation_accepts_and_symmetrizes() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c64(1., 0.), c64(0., 1.), c64(0., -1.), c64(1., 0.)],
        );
        let h = HermMatrix::new(m).unwrap();
        assert_eq!(h.dim(), 2);
        assert_relative_eq!(h.trace(), 2.0);
    }

    #[test]
    fn hermitian_validation_rejects() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c64(1., 0.), c64(0.5, 0.), c64(0., 0.), c64(1., 0.)],
        );
        match HermMatrix::new(m) {
            Err(Error::NotHermitian { max_dev }) => assert!(max_dev > 0.4),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn eig_sorted_and_reconstructs() {
        // [[1, i], [-i, 1]] has eigenvalues {0, 2}.
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c64(1., 0.), c64(0., 1.), c64(0., -1.), c64(1., 0.)],
        );
        let h = HermMatrix::new(m).unwrap();
        let e = h.eig();
        assert_relative_eq!(e.values[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(e.values[1], 2.0, epsilon = 1e-14);
        let recon = e.assemble(|l| l);
        assert!((recon.matrix() - h.matrix()).norm() < 1e-12);
    }

    #[test]
    fn trace_norm_hermitian_and_nonnormal() {
        let h = HermMatrix::from_real(&RMatrix::from_row_slice(2, 2, &[3., 0., 0., -4.])).unwrap();
        assert_relative_eq!(h.trace_norm(), 7.0, epsilon = 1e-12);
        // Nilpotent [[0,1],[0,0]] has a single singular value 1.
        let n = CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(0., 0.), c64(0., 0.)]);
        assert_relative_eq!(trace_norm(&n), 1.0, epsilon = 1e-12);
        // Rectangular: [[1], [1]] has singular value sqrt(2).
        let r = CMatrix::from_row_slice(2, 1, &[c64(1., 0.), c64(1., 0.)]);
        assert_relative_eq!(trace_norm(&r), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn kron_matches_hand_value() {
        let a = CMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(2., 0.), c64(3., 0.), c64(4., 0.)]);
        let b = CMatrix::identity(2, 2);
        let k = kron(&a, &b);
        assert_eq!(k.nrows(), 4);
        assert_relative_eq!(k[(0, 0)].re, 1.0);
        assert_relative_eq!(k[(1, 1)].re, 1.0);
        assert_relative_eq!(k[(0, 2)].re, 2.0);
        assert_relative_eq!(k[(2, 0)].re, 3.0);
        assert_relative_eq!(k[(3, 3)].re, 4.0);
    }

    #[test]
    fn anticomm_full_rank() {
        // rho = diag(3/4, 1/4), D = sigma_x/2: eigenvalue sums are all 1 on
        // the off-diagonal, so L = sigma_x.
        let rho = HermMatrix::from_real(&RMatrix::from_row_slice(2, 2, &[0.75, 0., 0., 0.25]))
            .unwrap();
        let d = HermMatrix::new(pauli_x() * c64(0.5, 0.0)).unwrap();
        let l = anticomm_solve(&rho, &d).unwrap();
        assert!((l.matrix() - pauli_x()).norm() < 1e-12);
    }

    #[test]
    fn anticomm_pure_state_support() {
        // rho = |0><0|, D = sigma_x/2 lives on the support-kernel block;
        // L = sigma_x solves it.
        let rho = HermMatrix::from_real(&RMatrix::from_row_slice(2, 2, &[1., 0., 0., 0.])).unwrap();
        let d = HermMatrix::new(pauli_x() * c64(0.5, 0.0)).unwrap();
        let l = anticomm_solve(&rho, &d).unwrap();
        let recon = (l.matrix() * rho.matrix() + rho.matrix() * l.matrix()) * c64(0.5, 0.0);
        assert!((recon - d.matrix()).norm() < 1e-12);
    }

    #[test]
    fn anticomm_rejects_kernel_weight() {
        // rho = |0><0|, D = sigma_z/2 has weight on the kernel-kernel block.
        let rho = HermMatrix::from_real(&RMatrix::from_row_slice(2, 2, &[1., 0., 0., 0.])).unwrap();
        let d = HermMatrix::new(pauli_z() * c64(0.5, 0.0)).unwrap();
        match anticomm_solve(&rho, &d) {
            Err(Error::KernelResidual { .. }) => {}
            other => panic!("expected KernelResidual, got {other:?}"),
        }
    }

    #[test]
    fn anticomm_rejects_nonzero_trace() {
        let rho = HermMatrix::from_real(&RMatrix::from_row_slice(2, 2, &[0.5, 0., 0., 0.5]))
            .unwrap();
        let d = HermMatrix::identity(2);
        match anticomm_solve(&rho, &d) {
            Err(Error::NotTraceless { .. }) => {}
            other => panic!("expected NotTraceless, got {other:?}"),
        }
    }

    // --- randomized property tests ---

    fn random_hermitian(dim: usize, seed: u64) -> HermMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let m = CMatrix::from_fn(dim, dim, |_, _| {
            c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        HermMatrix::new_unchecked(m)
    }

    fn random_density(dim: usize, seed: u64) -> HermMatrix {
        // Full rank by construction: eigenvalues bounded below by the floor.
        let h = random_hermitian(dim, seed);
        let e = h.eig();
        let floor = 0.05;
        let raw: Vec<f64> = e.values.iter().map(|l| l.abs() + floor).collect();
        let total: f64 = raw.iter().sum();
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            dim,
            raw.iter().map(|&l| c64(l / total, 0.0)),
        ));
        HermMatrix::new_unchecked(&e.vectors * d * e.vectors.adjoint())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn prop_eig_reconstruction(dim in 2usize..10, seed in 0u64..1_000_000) {
            let h = random_hermitian(dim, seed);
            let e = h.eig();
            for w in e.values.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            let recon = e.assemble(|l| l);
            let err = (recon.matrix() - h.matrix()).norm();
            prop_assert!(err <= 1e-10 * dim as f64, "reconstruction error {err}");
        }

        #[test]
        fn prop_anticomm_residual(dim in 2usize..8, seed in 0u64..1_000_000) {
            let rho = random_density(dim, seed);
            let g = random_hermitian(dim, seed.wrapping_add(1));
            let shift = g.trace() / dim as f64;
            let d = HermMatrix::new_unchecked(
                g.matrix() - CMatrix::identity(dim, dim) * c64(shift, 0.0),
            );
            let l = anticomm_solve(&rho, &d).unwrap();
            let recon = (l.matrix() * rho.matrix() + rho.matrix() * l.matrix()) * c64(0.5, 0.0);
            prop_assert!((recon - d.matrix()).norm() < 1e-10);
        }

        #[test]
        fn prop_trace_norm_triangle(dim in 2usize..7, seed in 0u64..1_000_000) {
            let a = random_hermitian(dim, seed);
            let b = random_hermitian(dim, seed.wrapping_add(7));
            let sum = HermMatrix::new_unchecked(a.matrix() + b.matrix());
            prop_assert!(sum.trace_norm() <= a.trace_norm() + b.trace_norm() + 1e-10);
            // Hermitian path and dilation path agree.
            prop_assert!((a.trace_norm() - trace_norm(a.matrix())).abs() < 1e-9);
        }
    }
}
