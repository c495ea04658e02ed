//! Local asymptotic normality for full-rank qudit models: the i.i.d. model
//! around a fixed spectrum converges to a Gaussian limit consisting of a
//! (d-1)-dimensional classical Gaussian for the eigenvalue fluctuations and
//! one displaced thermal mode per eigenvalue pair for the off-diagonal
//! (rotation) directions. Optimal asymptotic costs for the full tomography
//! problem then come out in closed form.

use crate::error::{Error, Result};
use crate::matrix::RMatrix;

/// Spectral gaps below this are treated as degenerate; the limit model is
/// undefined there.
pub const DEGENERACY_TOL: f64 = 1e-10;

const SPECTRUM_SUM_TOL: f64 = 1e-9;

/// One displaced thermal mode of the limit model, attached to an eigenvalue
/// pair i < j.
#[derive(Clone, Copy, Debug)]
pub struct LimitMode {
    pub pair: (usize, usize),
    /// Local rotation parameters enter the mode mean scaled by
    /// sqrt(2/(mu_i - mu_j)).
    pub shift_scale: f64,
    /// Symmetric quadrature variance (mu_i + mu_j) / (2 (mu_i - mu_j)),
    /// always >= 1/2.
    pub thermal_cov: f64,
}

/// Gaussian limit of an i.i.d. full-rank qudit model with non-degenerate
/// spectrum.
#[derive(Clone, Debug)]
pub struct QuditLimitModel {
    spectrum: Vec<f64>,
    classical_cov: RMatrix,
    modes: Vec<LimitMode>,
}

impl QuditLimitModel {
    pub fn dim(&self) -> usize {
        self.spectrum.len()
    }

    /// Eigenvalues, strictly descending.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Multinomial covariance of the first d-1 eigenvalue estimates:
    /// (V_c)_ij = delta_ij mu_i - mu_i mu_j.
    pub fn classical_cov(&self) -> &RMatrix {
        &self.classical_cov
    }

    pub fn modes(&self) -> &[LimitMode] {
        &self.modes
    }
}

fn validate_spectrum(mu: &[f64]) -> Result<Vec<f64>> {
    let d = mu.len();
    if d < 2 {
        return Err(Error::Domain("spectrum needs at least two levels".into()));
    }
    let sum: f64 = mu.iter().sum();
    if (sum - 1.0).abs() > SPECTRUM_SUM_TOL {
        return Err(Error::Domain(format!(
            "spectrum sums to {sum}, expected 1"
        )));
    }
    if mu.iter().any(|&x| x <= 0.0) {
        return Err(Error::Domain(
            "spectrum must be strictly positive (full-rank state required)".into(),
        ));
    }
    let mut sorted = mu.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if sorted != mu {
        log::warn!("spectrum not descending; sorting (formulas index by rank)");
    }
    for w in sorted.windows(2) {
        let gap = w[0] - w[1];
        if gap < DEGENERACY_TOL {
            return Err(Error::Degenerate { gap });
        }
    }
    Ok(sorted)
}

/// Builds the Gaussian limit model of the i.i.d. qudit family with the given
/// spectrum. Ascending input is sorted with a warning; degenerate spectra
/// are rejected.
pub fn limit_model(mu: &[f64]) -> Result<QuditLimitModel> {
    let mu = validate_spectrum(mu)?;
    let d = mu.len();
    let classical_cov = RMatrix::from_fn(d - 1, d - 1, |i, j| {
        if i == j {
            mu[i] - mu[i] * mu[j]
        } else {
            -mu[i] * mu[j]
        }
    });
    let mut modes = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            let gap = mu[i] - mu[j];
            modes.push(LimitMode {
                pair: (i, j),
                shift_scale: (2.0 / gap).sqrt(),
                thermal_cov: (mu[i] + mu[j]) / (2.0 * gap),
            });
        }
    }
    Ok(QuditLimitModel {
        spectrum: mu,
        classical_cov,
        modes,
    })
}

/// Asymptotic minimax cost of full tomography under squared Frobenius
/// distance: sum_i mu_i (1 - mu_i) + 2 sum_i (d - i) mu_i with 1-based rank
/// index i.
pub fn lam_frobenius(mu: &[f64]) -> Result<f64> {
    let mu = validate_spectrum(mu)?;
    let d = mu.len();
    let classical: f64 = mu.iter().map(|&x| x * (1.0 - x)).sum();
    let quantum: f64 = mu
        .iter()
        .enumerate()
        .map(|(i, &x)| ((d - (i + 1)) as f64) * x)
        .sum();
    Ok(classical + 2.0 * quantum)
}

/// Asymptotic minimax cost of full tomography under squared Bures distance:
/// (d - 1) + 4 sum_{i<j} mu_i / (mu_i + mu_j).
pub fn lam_bures(mu: &[f64]) -> Result<f64> {
    let mu = validate_spectrum(mu)?;
    let d = mu.len();
    let mut quantum = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            quantum += mu[i] / (mu[i] + mu[j]);
        }
    }
    Ok((d - 1) as f64 + 4.0 * quantum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hcr::hcr_bound;
    use crate::model::{qubit_bloch_cartesian, CostMatrix};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn qubit_spectrum(r: f64) -> [f64; 2] {
        [(1.0 + r) / 2.0, (1.0 - r) / 2.0]
    }

    #[test]
    fn d2_limit_examples() {
        let m = limit_model(&qubit_spectrum(0.5)).unwrap();
        assert_eq!(m.modes().len(), 1);
        assert_relative_eq!(m.modes()[0].thermal_cov, 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.modes()[0].shift_scale, 2.0, epsilon = 1e-12);
        // Classical variance in the Bloch-radius coordinate r = 2 mu_1 - 1
        // carries the Jacobian factor 4: 4 Var(mu_1) = 1 - r^2.
        assert_relative_eq!(4.0 * m.classical_cov()[(0, 0)], 0.75, epsilon = 1e-12);

        assert!(limit_model(&qubit_spectrum(0.999)).is_ok());
        assert!(matches!(
            limit_model(&[0.5, 0.5]),
            Err(Error::Degenerate { .. })
        ));
        assert!(matches!(
            limit_model(&qubit_spectrum(1e-11)),
            Err(Error::Degenerate { .. })
        ));
        // Boundary (rank-deficient) spectra are outside the domain.
        assert!(limit_model(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn d3_classical_cov() {
        let m = limit_model(&[0.5, 0.3, 0.2]).unwrap();
        let expect = RMatrix::from_row_slice(2, 2, &[0.25, -0.15, -0.15, 0.21]);
        assert!((m.classical_cov() - expect).amax() < 1e-14);
        // Thermal covariances: pairs (1,2), (1,3), (2,3).
        let tc: Vec<f64> = m.modes().iter().map(|md| md.thermal_cov).collect();
        assert_relative_eq!(tc[0], 0.8 / 0.4, epsilon = 1e-12);
        assert_relative_eq!(tc[1], 0.7 / 0.6, epsilon = 1e-12);
        assert_relative_eq!(tc[2], 0.5 / 0.2, epsilon = 1e-12);
        assert!(m.modes().iter().all(|md| md.thermal_cov >= 0.5));
    }

    #[test]
    fn ascending_input_is_sorted() {
        let asc = limit_model(&[0.2, 0.3, 0.5]).unwrap();
        let desc = limit_model(&[0.5, 0.3, 0.2]).unwrap();
        assert_eq!(asc.spectrum(), desc.spectrum());
        assert!((asc.classical_cov() - desc.classical_cov()).amax() == 0.0);
    }

    #[test]
    fn d2_cost_formulas() {
        for &r in &[0.2, 0.5, 0.8] {
            let mu = qubit_spectrum(r);
            let b = lam_bures(&mu).unwrap();
            assert_relative_eq!(b, 3.0 + 2.0 * r, epsilon = 1e-10);
            let f = lam_frobenius(&mu).unwrap();
            assert_relative_eq!(f, (1.0 - r * r) / 2.0 + (1.0 + r), epsilon = 1e-12);
        }
    }

    #[test]
    fn d2_frobenius_is_half_euclidean_hcr() {
        // || Delta r ||^2 = 2 || Delta rho ||_F^2 on qubits, so the
        // Frobenius LAM cost is half the Euclidean Bloch-coordinate HCR.
        let model = qubit_bloch_cartesian();
        for &r in &[0.3, 0.6, 0.9] {
            let pt = model.evaluate(&[0.0, 0.0, r]).unwrap();
            let sol = hcr_bound(&pt, &CostMatrix::identity(3)).unwrap();
            let f = lam_frobenius(&qubit_spectrum(r)).unwrap();
            assert_relative_eq!(2.0 * f, sol.value, epsilon = 1e-8);
        }
    }

    #[test]
    fn d2_bures_matches_qubit_hcr() {
        // Squared Bures distance to nearby states has Hessian
        // diag(1, 1, 1/(1-r^2))/4 in Bloch coordinates at (0, 0, r).
        let model = qubit_bloch_cartesian();
        for &r in &[0.2, 0.5, 0.8] {
            let c = CostMatrix::new(RMatrix::from_diagonal(
                &nalgebra::DVector::from_column_slice(&[1.0, 1.0, 1.0 / (1.0 - r * r)]),
            ))
            .unwrap();
            let pt = model.evaluate(&[0.0, 0.0, r]).unwrap();
            let sol = hcr_bound(&pt, &c).unwrap();
            let b = lam_bures(&qubit_spectrum(r)).unwrap();
            assert_relative_eq!(b, sol.value, epsilon = 1e-8);
        }
    }

    #[test]
    fn sandwich_on_random_spectra() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let mut tested = 0;
        while tested < 100 {
            let d = rng.gen_range(2..=6usize);
            let mut mu: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = mu.iter().sum();
            mu.iter_mut().for_each(|x| *x /= s);
            mu.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if mu.windows(2).any(|w| w[0] - w[1] < 1e-6) {
                continue;
            }
            tested += 1;
            let b = lam_bures(&mu).unwrap();
            let dd = d as f64;
            assert!(b >= dd * dd - 1.0 - 1e-12, "d={d} bures {b}");
            assert!(b <= (dd - 1.0) * (2.0 * dd + 1.0) + 1e-12, "d={d} bures {b}");
            let f = lam_frobenius(&mu).unwrap();
            assert!(f <= 2.0 * dd - 1.0 + 1e-12, "d={d} frobenius {f}");
        }
    }
}
