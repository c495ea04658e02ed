//! Pointwise estimation bounds and diagnostics: SLD operators with the
//! quantum Fisher information, the SLD and RLD scalar bounds, measurement
//! compatibility flags, D-invariance detection, and the Hayashi-Gill-Massar
//! qubit bound.

use crate::error::{Error, Result};
use crate::matrix::{c64, real_psd_sqrt, real_sym_eig, CMatrix, HermMatrix, RMatrix};
use crate::model::{CostMatrix, ModelPoint};

/// Relative eigenvalue threshold below which the QFI (or the RLD information
/// matrix) is treated as singular. Cost weight on that kernel means the
/// parameter combination is unidentifiable and must surface as an error, not
/// as a huge finite bound.
pub const QFI_KERNEL_REL_TOL: f64 = 1e-12;

/// Relative rank tolerance for the D-closure iteration.
pub const D_CLOSURE_RANK_TOL: f64 = 1e-9;

/// Relative eigenvalue threshold below which a state counts as rank-deficient
/// for operations that need the inverse (RLD, D superoperator).
const FULL_RANK_REL_TOL: f64 = 1e-12;

/// SLD operators at a model point together with the two p x p summaries the
/// bounds need: the quantum Fisher information and the mean commutators.
pub struct SldSet {
    /// L_i solves (L_i rho + rho L_i)/2 = d_i rho on the support of rho.
    pub slds: Vec<HermMatrix>,
    /// qfi_ij = Re tr(rho L_i L_j), symmetric PSD.
    pub qfi: RMatrix,
    /// Entries tr(rho [L_i, L_j]); antisymmetric and purely imaginary.
    pub mean_commutators: CMatrix,
}

pub fn sld_set(pt: &ModelPoint) -> Result<SldSet> {
    let p = pt.param_count();
    let slds: Vec<HermMatrix> = pt
        .grads
        .iter()
        .map(|g| crate::matrix::anticomm_solve(&pt.rho, g))
        .collect::<Result<_>>()?;
    // m_ij = tr(rho L_i L_j) is Hermitian as a p x p matrix; its real part is
    // the QFI and m - m^T the mean-commutator table.
    let rho_l: Vec<CMatrix> = slds.iter().map(|l| pt.rho.matrix() * l.matrix()).collect();
    let mut m = CMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] = (&rho_l[i] * slds[j].matrix()).trace();
        }
    }
    let mut qfi = RMatrix::zeros(p, p);
    let mut comm = CMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            qfi[(i, j)] = 0.5 * (m[(i, j)].re + m[(j, i)].re);
            comm[(i, j)] = m[(i, j)] - m[(j, i)];
        }
    }
    Ok(SldSet {
        slds,
        qfi,
        mean_commutators: comm,
    })
}

/// trace(C F_Q^{-1}), through the pseudo-inverse when the QFI is singular but
/// the cost puts no weight on its kernel.
pub fn sld_cr_bound(s: &SldSet, c: &CostMatrix) -> Result<f64> {
    let p = s.qfi.nrows();
    if c.dim() != p {
        return Err(Error::DimensionMismatch {
            context: "cost matrix vs parameter count",
            expected: p,
            got: c.dim(),
        });
    }
    let (values, vectors) = real_sym_eig(&s.qfi);
    let max = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cut = QFI_KERNEL_REL_TOL * max.max(1e-300);
    let mut bound = 0.0;
    let mut kernel_weight = 0.0;
    for (k, &lambda) in values.iter().enumerate() {
        let v = vectors.column(k);
        let w = (v.transpose() * c.matrix() * v)[(0, 0)];
        if lambda <= cut {
            kernel_weight += w.abs();
        } else {
            bound += w / lambda;
        }
    }
    let scale = 1.0 + c.matrix().trace().abs();
    if kernel_weight > 1e-10 * scale {
        return Err(Error::Unidentifiable {
            weight: kernel_weight,
        });
    }
    Ok(bound)
}

/// The RLD scalar bound trace(C Re F_R^{-1}) + ||sqrt(C) Im F_R^{-1}
/// sqrt(C)||_1, with F_R,ij = tr(d_i rho d_j rho rho^{-1}). Needs a
/// full-rank state.
pub fn rld_bound(pt: &ModelPoint, c: &CostMatrix) -> Result<f64> {
    let p = pt.param_count();
    if c.dim() != p {
        return Err(Error::DimensionMismatch {
            context: "cost matrix vs parameter count",
            expected: p,
            got: c.dim(),
        });
    }
    let eig = pt.rho.eig();
    let max = eig.values.last().copied().unwrap_or(0.0);
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min <= FULL_RANK_REL_TOL * max {
        return Err(Error::RldUndefined { min_eig: min });
    }
    let d = pt.dim();
    // Gradients in the eigenbasis; F_R contracted against 1/lambda directly.
    let tilted: Vec<CMatrix> = pt
        .grads
        .iter()
        .map(|g| eig.vectors.adjoint() * g.matrix() * &eig.vectors)
        .collect();
    let mut f_r = CMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            let mut acc = c64(0.0, 0.0);
            for a in 0..d {
                for b in 0..d {
                    acc += tilted[i][(a, b)] * tilted[j][(b, a)] / eig.values[a];
                }
            }
            f_r[(i, j)] = acc;
        }
    }
    let f_r = HermMatrix::new_unchecked(f_r);
    let feig = f_r.eig();
    let fmax = feig.values.last().copied().unwrap_or(0.0);
    if feig.values[0] <= QFI_KERNEL_REL_TOL * fmax {
        return Err(Error::Unidentifiable {
            weight: feig.values[0],
        });
    }
    let f_inv = feig.assemble(|l| 1.0 / l);
    let mut re = RMatrix::zeros(p, p);
    let mut im = RMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            re[(i, j)] = f_inv.matrix()[(i, j)].re;
            im[(i, j)] = f_inv.matrix()[(i, j)].im;
        }
    }
    let term1 = (c.matrix() * &re).trace();
    let sqrt_c = real_psd_sqrt(c.matrix());
    let b = &sqrt_c * im * &sqrt_c;
    // i*B is Hermitian for real antisymmetric B; its trace norm is the one
    // in the bound.
    let h = CMatrix::from_fn(p, p, |i, j| c64(0.0, 1.0) * c64(b[(i, j)], 0.0));
    let term2 = HermMatrix::new_unchecked(h).trace_norm();
    Ok(term1 + term2)
}

/// Structural predictors for when the Holevo bound collapses onto the SLD
/// bound: all mean commutators vanishing (sufficient and, for full-rank
/// costs, necessary), or a rank-1 cost.
pub struct CompatibilityReport {
    pub max_mean_commutator: f64,
    pub commutators_vanish: bool,
    pub rank_one_cost: bool,
    pub predicts_hcr_equals_sld: bool,
}

pub fn compatibility_report(s: &SldSet, c: &CostMatrix) -> CompatibilityReport {
    let max_comm = crate::matrix::max_abs(&s.mean_commutators);
    let scale = 1.0 + s.qfi.amax();
    let vanish = max_comm <= 1e-9 * scale;
    let (cvals, _) = real_sym_eig(c.matrix());
    let p = cvals.len();
    let rank_one = if p < 2 {
        true
    } else {
        cvals[p - 2].abs() <= 1e-10 * cvals[p - 1].max(1e-300)
    };
    CompatibilityReport {
        max_mean_commutator: max_comm,
        commutators_vanish: vanish,
        rank_one_cost: rank_one,
        predicts_hcr_equals_sld: vanish || rank_one,
    }
}

/// Result of closing the SLD span under the commutation superoperator
/// D(X)_{ij} = i (l_i - l_j)/(l_i + l_j) X_{ij} (rho eigenbasis entries).
pub struct DInvarianceReport {
    /// Whether the closure added nothing, i.e. span{L_i} is D-invariant.
    pub invariant: bool,
    pub sld_span_dim: usize,
    pub closure_dim: usize,
    /// Orthonormal (Hilbert-Schmidt) basis of the closed span.
    pub closure_basis: Vec<HermMatrix>,
}

pub fn d_invariance_check(pt: &ModelPoint) -> Result<DInvarianceReport> {
    let eig = pt.rho.eig();
    let max = eig.values.last().copied().unwrap_or(0.0);
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min <= FULL_RANK_REL_TOL * max {
        return Err(Error::Domain(
            "D-invariance closure needs a full-rank state".into(),
        ));
    }
    let d = pt.dim();
    let p = pt.param_count();
    let slds = sld_set(pt)?.slds;

    // Hermitian operators as real vectors of length d^2 in the rho eigenbasis:
    // [diag | sqrt(2) Re upper | sqrt(2) Im upper], an isometry for the
    // Hilbert-Schmidt inner product.
    let n_off = d * (d - 1) / 2;
    let vec_len = d + 2 * n_off;
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
        .collect();
    let sqrt2 = std::f64::consts::SQRT_2;
    let to_vec = |m: &CMatrix| -> Vec<f64> {
        let mut v = vec![0.0; vec_len];
        for i in 0..d {
            v[i] = m[(i, i)].re;
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            v[d + k] = sqrt2 * m[(i, j)].re;
            v[d + n_off + k] = sqrt2 * m[(i, j)].im;
        }
        v
    };
    let from_vec = |v: &[f64]| -> CMatrix {
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = c64(v[i], 0.0);
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let re = v[d + k] / sqrt2;
            let im = v[d + n_off + k] / sqrt2;
            m[(i, j)] = c64(re, im);
            m[(j, i)] = c64(re, -im);
        }
        m
    };
    // D in these coordinates: diagonal part dies, each off-diagonal pair
    // rotates by 90 degrees scaled with c_ij.
    let coeff: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| (eig.values[i] - eig.values[j]) / (eig.values[i] + eig.values[j]))
        .collect();
    let apply_d = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; vec_len];
        for k in 0..n_off {
            let re = v[d + k];
            let im = v[d + n_off + k];
            out[d + k] = -coeff[k] * im;
            out[d + n_off + k] = coeff[k] * re;
        }
        out
    };

    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let orthonormalize = |basis: &mut Vec<Vec<f64>>, mut v: Vec<f64>| -> bool {
        let n0 = norm(&v);
        if n0 <= 1e-14 {
            return false;
        }
        // Two projection passes keep the basis orthogonal to working
        // precision even for nearly dependent inputs.
        for _ in 0..2 {
            for b in basis.iter() {
                let dot: f64 = b.iter().zip(&v).map(|(a, c)| a * c).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
        }
        let n1 = norm(&v);
        if n1 <= D_CLOSURE_RANK_TOL * n0 {
            return false;
        }
        for x in v.iter_mut() {
            *x /= n1;
        }
        basis.push(v);
        true
    };

    for l in &slds {
        let tilted = eig.vectors.adjoint() * l.matrix() * &eig.vectors;
        orthonormalize(&mut basis, to_vec(&tilted));
    }
    let sld_span_dim = basis.len();

    let mut cursor = 0;
    let cap = p * d * d;
    let mut steps = 0;
    while cursor < basis.len() && steps < cap {
        let img = apply_d(&basis[cursor].clone());
        orthonormalize(&mut basis, img);
        cursor += 1;
        steps += 1;
    }
    let closure_dim = basis.len();
    let closure_basis = basis
        .iter()
        .map(|v| {
            let m = from_vec(v);
            HermMatrix::new_unchecked(&eig.vectors * m * eig.vectors.adjoint())
        })
        .collect();
    Ok(DInvarianceReport {
        invariant: closure_dim == sld_span_dim,
        sld_span_dim,
        closure_dim,
        closure_basis,
    })
}

/// The Hayashi-Gill-Massar bound (trace sqrt(F_Q^{-1/2} C F_Q^{-1/2}))^2,
/// valid for qubit models only.
pub fn hgm_bound(s: &SldSet, c: &CostMatrix) -> Result<f64> {
    let dim = s.slds.first().map(|l| l.dim()).unwrap_or(0);
    if dim != 2 {
        return Err(Error::Domain(format!(
            "the Hayashi-Gill-Massar bound applies to qubit models; got dimension {dim}"
        )));
    }
    let p = s.qfi.nrows();
    if c.dim() != p {
        return Err(Error::DimensionMismatch {
            context: "cost matrix vs parameter count",
            expected: p,
            got: c.dim(),
        });
    }
    let (values, vectors) = real_sym_eig(&s.qfi);
    let max = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if values[0] <= QFI_KERNEL_REL_TOL * max.max(1e-300) {
        return Err(Error::Unidentifiable {
            weight: values[0],
        });
    }
    let inv_sqrt = RMatrix::from_diagonal(&crate::matrix::RVector::from_iterator(
        p,
        values.iter().map(|&l| 1.0 / l.sqrt()),
    ));
    let s_half = &vectors * inv_sqrt * vectors.transpose();
    let m = &s_half * c.matrix() * &s_half;
    let (mvals, _) = real_sym_eig(&m);
    let root_sum: f64 = mvals.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok(root_sum * root_sum)
}

/// Named scalar bounds at one model point, with solver diagnostics. The
/// RLD entry is absent when the state is rank-deficient and the HGM entry
/// when the model is not a qubit.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub sld: f64,
    pub rld: Option<f64>,
    pub hgm: Option<f64>,
    pub hcr: f64,
    pub max_mean_commutator: f64,
    /// None when the state is rank-deficient (the closure needs rho > 0).
    pub d_invariant: Option<bool>,
    pub sdp_gap: f64,
    pub sdp_iterations: usize,
}

impl BoundReport {
    /// Stable line-oriented serialization: `name = value`, one scalar per
    /// line, inapplicable bounds spelled `undefined`.
    pub fn structured(&self) -> String {
        let opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.12}"),
            None => "undefined".to_string(),
        };
        let dinv = match self.d_invariant {
            Some(b) => b.to_string(),
            None => "undefined".to_string(),
        };
        format!(
            "sld = {:.12}\nrld = {}\nhgm = {}\nhcr = {:.12}\n\
             max_mean_commutator = {:.3e}\nd_invariant = {dinv}\n\
             sdp_gap = {:.3e}\nsdp_iterations = {}\n",
            self.sld,
            opt(self.rld),
            opt(self.hgm),
            self.hcr,
            self.max_mean_commutator,
            self.sdp_gap,
            self.sdp_iterations,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        pure_qubit, qubit_bloch_cartesian, qubit_r_theta, CostMatrix, Derivatives,
        ParametricModel, NUMERIC_GRAD_STEP,
    };
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::sync::Arc;

    /// rho = (I + t sigma_z)/2: a commuting single-parameter line.
    fn z_line_model() -> ParametricModel {
        ParametricModel::new(
            "z-line",
            2,
            1,
            Arc::new(|t: &[f64]| Ok(crate::model::bloch_state([0.0, 0.0, t[0]]))),
            Derivatives::Numeric {
                step: NUMERIC_GRAD_STEP,
            },
            Arc::new(|t: &[f64]| {
                if t[0].abs() < 0.999 {
                    Ok(())
                } else {
                    Err(Error::Domain("radius outside the open ball".into()))
                }
            }),
        )
        .unwrap()
    }

    /// Rotation of a fixed-radius state about sigma_y.
    fn rotation_model(r: f64) -> ParametricModel {
        ParametricModel::new(
            "theta-line",
            2,
            1,
            Arc::new(move |t: &[f64]| {
                Ok(crate::model::bloch_state([
                    r * t[0].sin(),
                    0.0,
                    r * t[0].cos(),
                ]))
            }),
            Derivatives::Numeric {
                step: NUMERIC_GRAD_STEP,
            },
            Arc::new(|_: &[f64]| Ok(())),
        )
        .unwrap()
    }

    #[test]
    fn qfi_reference_values() {
        let pt = pure_qubit().evaluate(&[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        let s = sld_set(&pt).unwrap();
        assert_relative_eq!(s.qfi[(0, 0)], 1.0, epsilon = 1e-9);
        assert_relative_eq!(s.qfi[(1, 1)], 1.0, epsilon = 1e-9);
        assert!(s.qfi[(0, 1)].abs() < 1e-9);

        let pt = qubit_r_theta().evaluate(&[0.5, 0.7]).unwrap();
        let s = sld_set(&pt).unwrap();
        assert_relative_eq!(s.qfi[(0, 0)], 1.0 / 0.75, epsilon = 1e-9);
        assert_relative_eq!(s.qfi[(1, 1)], 0.25, epsilon = 1e-9);
        assert!(s.qfi[(0, 1)].abs() < 1e-9);

        let pt = qubit_bloch_cartesian().evaluate(&[0.0, 0.0, 0.6]).unwrap();
        let s = sld_set(&pt).unwrap();
        assert_relative_eq!(s.qfi[(0, 0)], 1.0, epsilon = 1e-9);
        assert_relative_eq!(s.qfi[(1, 1)], 1.0, epsilon = 1e-9);
        assert_relative_eq!(s.qfi[(2, 2)], 1.0 / 0.64, epsilon = 1e-9);
    }

    #[test]
    fn mean_commutators_cartesian() {
        let pt = qubit_bloch_cartesian().evaluate(&[0.0, 0.0, 0.6]).unwrap();
        let s = sld_set(&pt).unwrap();
        // tr(rho [L_x, L_y]) = 2 i r here; the (y,z) pair commutes in mean.
        let xy = s.mean_commutators[(0, 1)];
        assert!(xy.re.abs() < 1e-9);
        assert_relative_eq!(xy.im, 1.2, epsilon = 1e-9);
        assert!(s.mean_commutators[(1, 2)].norm() < 1e-9);
        // Antisymmetric, purely imaginary table.
        let sum = &s.mean_commutators + s.mean_commutators.transpose();
        assert!(crate::matrix::max_abs(&sum) < 1e-9);
        for v in s.mean_commutators.iter() {
            assert!(v.re.abs() < 1e-9);
        }
    }

    #[test]
    fn sld_bound_reference_values() {
        let pt = pure_qubit().evaluate(&[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        let s = sld_set(&pt).unwrap();
        let c = CostMatrix::from_diagonal(&[1.0, 1.0]).unwrap();
        assert_relative_eq!(sld_cr_bound(&s, &c).unwrap(), 2.0, epsilon = 1e-9);

        let pt = qubit_r_theta().evaluate(&[0.5, 0.0]).unwrap();
        let s = sld_set(&pt).unwrap();
        let c = CostMatrix::from_diagonal(&[1.0, 0.25]).unwrap();
        assert_relative_eq!(sld_cr_bound(&s, &c).unwrap(), 1.75, epsilon = 1e-9);

        let pt = qubit_bloch_cartesian().evaluate(&[0.0, 0.0, 0.0]).unwrap();
        let s = sld_set(&pt).unwrap();
        let c = CostMatrix::identity(3);
        assert_relative_eq!(sld_cr_bound(&s, &c).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn sld_bound_kernel_handling() {
        // At the pole the azimuth carries no information: F_Q = diag(1, 0).
        let pt = pure_qubit().evaluate(&[0.0, 0.3]).unwrap();
        let s = sld_set(&pt).unwrap();
        assert!(s.qfi[(1, 1)].abs() < 1e-12);
        let full = CostMatrix::identity(2);
        assert!(matches!(
            sld_cr_bound(&s, &full),
            Err(Error::Unidentifiable { .. })
        ));
        let supported = CostMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(sld_cr_bound(&s, &supported).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn rld_reference_values() {
        let pt = qubit_bloch_cartesian().evaluate(&[0.0, 0.0, 0.5]).unwrap();
        let c = CostMatrix::identity(3);
        // 2 + (1 - r^2) + 2r at r = 0.5.
        assert_relative_eq!(rld_bound(&pt, &c).unwrap(), 3.75, epsilon = 1e-9);

        let pt = pure_qubit().evaluate(&[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        assert!(matches!(
            rld_bound(&pt, &CostMatrix::identity(2)),
            Err(Error::RldUndefined { .. })
        ));
    }

    /// One-parameter families: the imaginary term vanishes, so the bound is
    /// 1/F_R. For a commuting family F_R = F_Q; for a rotation family
    /// F_R = r^2/(1-r^2) while F_Q = r^2.
    #[test]
    fn rld_single_parameter() {
        let pt = z_line_model().evaluate(&[0.6]).unwrap();
        let c = CostMatrix::identity(1);
        let s = sld_set(&pt).unwrap();
        let sld = sld_cr_bound(&s, &c).unwrap();
        let rld = rld_bound(&pt, &c).unwrap();
        assert_relative_eq!(sld, 1.0 - 0.36, epsilon = 1e-7);
        assert_relative_eq!(rld, sld, epsilon = 1e-7);

        let r = 0.6;
        let pt = rotation_model(r).evaluate(&[0.0]).unwrap();
        let rld = rld_bound(&pt, &c).unwrap();
        assert_relative_eq!(rld, (1.0 - r * r) / (r * r), epsilon = 1e-7);
        let s = sld_set(&pt).unwrap();
        assert_relative_eq!(sld_cr_bound(&s, &c).unwrap(), 1.0 / (r * r), epsilon = 1e-7);
    }

    #[test]
    fn compatibility_flags() {
        let pt = qubit_r_theta().evaluate(&[0.5, 0.3]).unwrap();
        let s = sld_set(&pt).unwrap();
        let rep = compatibility_report(&s, &CostMatrix::identity(2));
        assert!(rep.commutators_vanish);
        assert!(rep.predicts_hcr_equals_sld);

        let pt = pure_qubit().evaluate(&[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        let s = sld_set(&pt).unwrap();
        let rep = compatibility_report(&s, &CostMatrix::identity(2));
        assert!(!rep.commutators_vanish);
        assert!(!rep.predicts_hcr_equals_sld);

        let c = CostMatrix::new(RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])).unwrap();
        let rep = compatibility_report(&s, &c);
        assert!(rep.rank_one_cost);
        assert!(rep.predicts_hcr_equals_sld);
    }

    #[test]
    fn d_invariance_cases() {
        let pt = qubit_bloch_cartesian().evaluate(&[0.0, 0.0, 0.5]).unwrap();
        let rep = d_invariance_check(&pt).unwrap();
        assert!(rep.invariant);
        assert_eq!(rep.sld_span_dim, 3);

        let pt = qubit_r_theta().evaluate(&[0.5, 0.3]).unwrap();
        let rep = d_invariance_check(&pt).unwrap();
        assert!(!rep.invariant);
        assert_eq!(rep.sld_span_dim, 2);
        assert!(rep.closure_dim > 2);

        let pt = z_line_model().evaluate(&[0.4]).unwrap();
        let rep = d_invariance_check(&pt).unwrap();
        assert!(rep.invariant);
        assert_eq!(rep.closure_dim, 1);

        let pt = pure_qubit().evaluate(&[0.5, 0.5]).unwrap();
        assert!(d_invariance_check(&pt).is_err());
    }

    #[test]
    fn hgm_reference_values() {
        let pt = qubit_r_theta().evaluate(&[0.6, 0.2]).unwrap();
        let s = sld_set(&pt).unwrap();
        let c = CostMatrix::from_diagonal(&[1.0, 0.36]).unwrap();
        assert_relative_eq!(hgm_bound(&s, &c).unwrap(), 3.24, epsilon = 1e-9);

        let r = 0.5;
        let pt = qubit_bloch_cartesian().evaluate(&[0.0, 0.0, r]).unwrap();
        let s = sld_set(&pt).unwrap();
        let bures = 1.0 / (1.0 - r * r);
        let c = CostMatrix::from_diagonal(&[1.0, 1.0, bures]).unwrap();
        assert_relative_eq!(hgm_bound(&s, &c).unwrap(), 9.0, epsilon = 1e-9);
    }

    #[test]
    fn hgm_rejects_non_qubit() {
        let model = crate::model::multi_copy(&qubit_r_theta(), 2).unwrap();
        let pt = model.evaluate(&[0.5, 0.3]).unwrap();
        let s = sld_set(&pt).unwrap();
        let c = CostMatrix::identity(2);
        assert!(matches!(hgm_bound(&s, &c), Err(Error::Domain(_))));
    }

    /// 200 random points across the built-in families: defining-equation
    /// residual, QFI consistency, PSD, antihermitian commutator table.
    #[test]
    fn sld_residuals_random_points() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for k in 0..200 {
            let (model, theta): (ParametricModel, Vec<f64>) = match k % 4 {
                0 => (
                    qubit_bloch_cartesian(),
                    {
                        let r: f64 = rng.gen_range(0.05..0.9);
                        let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                        let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        vec![r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()]
                    },
                ),
                1 => (
                    crate::model::qubit_bloch_spherical(),
                    vec![
                        rng.gen_range(0.05..0.95),
                        rng.gen_range(0.1..3.0),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    ],
                ),
                2 => (
                    pure_qubit(),
                    vec![rng.gen_range(0.1..3.0), rng.gen_range(0.0..std::f64::consts::TAU)],
                ),
                _ => (
                    qubit_r_theta(),
                    vec![rng.gen_range(0.05..0.95), rng.gen_range(0.1..3.0)],
                ),
            };
            let pt = model.evaluate(&theta).unwrap();
            let s = sld_set(&pt).unwrap();
            let p = pt.param_count();
            for (l, g) in s.slds.iter().zip(&pt.grads) {
                let resid = (l.matrix() * pt.rho.matrix() + pt.rho.matrix() * l.matrix())
                    .scale(0.5)
                    - g.matrix();
                let scale = 1.0 + crate::matrix::max_abs(g.matrix());
                assert!(
                    crate::matrix::max_abs(&resid) <= 1e-9 * scale,
                    "model {} point {:?}",
                    model.name(),
                    pt.theta
                );
            }
            for i in 0..p {
                for j in 0..p {
                    let direct = (pt.rho.matrix() * s.slds[i].matrix() * s.slds[j].matrix())
                        .trace()
                        .re;
                    assert!((s.qfi[(i, j)] - direct).abs() < 1e-9 * (1.0 + direct.abs()));
                }
            }
            let (vals, _) = real_sym_eig(&s.qfi);
            assert!(vals[0] > -1e-9);
        }
    }
}
