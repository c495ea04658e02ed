//! Bayesian estimation costs: the exact single-parameter quadratic-cost
//! optimum, a multi-parameter lower bound, the Van Trees inequality, the
//! asymptotic Bayesian-Holevo constant, and closed forms for covariant
//! qubit estimation under the fidelity cost.
//!
//! All prior integrals run over fixed Gauss-Legendre grids, so every result
//! is deterministic in the node count.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::matrix::{anticomm_solve, c64, CMatrix, HermMatrix, RMatrix};
use crate::model::{CostMatrix, ParametricModel};

/// Default quadrature node count for prior integrals.
pub const DEFAULT_QUAD_NODES: usize = 128;

/// Minimum node count accepted for the covariant qubit quadrature.
pub const MIN_QUAD_NODES: usize = 64;

/// Copy-count cap for the covariant qubit sums.
pub const MAX_COPIES: usize = 10_000;

const PRIOR_MASS_TOL: f64 = 1e-6;

// --- Gauss-Legendre quadrature ---

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
/// Newton iteration on the Legendre recurrence; exact for polynomials of
/// degree 2n - 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&v| v * half).collect(),
    )
}

// --- Priors ---

/// A prior over parameter space, held as a quadrature grid: nodes theta_k,
/// quadrature weights w_k, and density values p(theta_k). Expectations are
/// sums of w p f(theta).
#[derive(Clone, Debug)]
pub struct Prior {
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    density: Vec<f64>,
    /// Density gradients at the nodes, needed only by the Van Trees bound.
    density_grad: Option<Vec<Vec<f64>>>,
    boundary_vanishing: bool,
}

impl Prior {
    pub fn new(
        nodes: Vec<Vec<f64>>,
        weights: Vec<f64>,
        density: Vec<f64>,
        boundary_vanishing: bool,
    ) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() || nodes.len() != density.len() {
            return Err(Error::Domain(
                "prior grid needs equal nonzero node, weight, and density counts".into(),
            ));
        }
        let dim = nodes[0].len();
        if dim == 0 || nodes.iter().any(|t| t.len() != dim) {
            return Err(Error::Domain("prior nodes must share a nonzero length".into()));
        }
        if density.iter().any(|&p| p < 0.0) {
            return Err(Error::Domain("prior density must be nonnegative".into()));
        }
        let mass: f64 = weights.iter().zip(&density).map(|(w, p)| w * p).sum();
        if (mass - 1.0).abs() > PRIOR_MASS_TOL {
            return Err(Error::Domain(format!(
                "prior mass {mass} deviates from 1 beyond {PRIOR_MASS_TOL:.0e}"
            )));
        }
        Ok(Self {
            nodes,
            weights,
            density,
            density_grad: None,
            boundary_vanishing,
        })
    }

    /// Attaches density gradients (one vector per node), enabling Van Trees.
    pub fn with_gradients(mut self, grads: Vec<Vec<f64>>) -> Result<Self> {
        if grads.len() != self.nodes.len()
            || grads.iter().any(|g| g.len() != self.param_dim())
        {
            return Err(Error::Domain(
                "gradient grid must match the prior nodes in shape".into(),
            ));
        }
        self.density_grad = Some(grads);
        Ok(self)
    }

    /// Gaussian prior on one parameter, truncated at 8 sigma (mass defect
    /// ~1e-15), with analytic gradients; vanishes at the support boundary.
    pub fn gaussian_1d(mean: f64, sigma: f64, quad_nodes: usize) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::Domain("prior sigma must be positive".into()));
        }
        let (x, w) = gauss_legendre_on(quad_nodes, mean - 8.0 * sigma, mean + 8.0 * sigma);
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let density: Vec<f64> = x
            .iter()
            .map(|&t| norm * (-0.5 * ((t - mean) / sigma).powi(2)).exp())
            .collect();
        let grads: Vec<Vec<f64>> = x
            .iter()
            .zip(&density)
            .map(|(&t, &p)| vec![-(t - mean) / (sigma * sigma) * p])
            .collect();
        let nodes = x.into_iter().map(|t| vec![t]).collect();
        Prior::new(nodes, w, density, true)?.with_gradients(grads)
    }

    /// Uniform prior on [a, b]; does not vanish at the boundary.
    pub fn uniform_1d(a: f64, b: f64, quad_nodes: usize) -> Result<Self> {
        if b <= a {
            return Err(Error::Domain("uniform prior needs a < b".into()));
        }
        let (x, w) = gauss_legendre_on(quad_nodes, a, b);
        let p = 1.0 / (b - a);
        let n = x.len();
        let prior = Prior::new(
            x.into_iter().map(|t| vec![t]).collect(),
            w,
            vec![p; n],
            false,
        )?;
        prior.with_gradients(vec![vec![0.0]; n])
    }

    /// Two-point prior at +-delta with equal mass.
    pub fn two_point(delta: f64) -> Result<Self> {
        Prior::new(
            vec![vec![-delta], vec![delta]],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
            false,
        )
    }

    pub fn param_dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn boundary_vanishing(&self) -> bool {
        self.boundary_vanishing
    }

    /// E[theta] under the prior.
    pub fn mean(&self) -> Vec<f64> {
        let p = self.param_dim();
        let mut mu = vec![0.0; p];
        for ((t, &w), &pd) in self.nodes.iter().zip(&self.weights).zip(&self.density) {
            for i in 0..p {
                mu[i] += w * pd * t[i];
            }
        }
        mu
    }

    /// E[(theta - mu)^T C (theta - mu)] under the prior.
    pub fn quadratic_moment(&self, c: &CostMatrix) -> f64 {
        let mu = self.mean();
        let p = self.param_dim();
        let mut acc = 0.0;
        for ((t, &w), &pd) in self.nodes.iter().zip(&self.weights).zip(&self.density) {
            let d = DVector::from_iterator(p, (0..p).map(|i| t[i] - mu[i]));
            acc += w * pd * (c.matrix() * &d).dot(&d);
        }
        acc
    }
}

// --- Bayesian bounds ---

/// Result of the exact single-parameter quadratic-cost optimization.
#[derive(Clone, Debug)]
pub struct BayesSingleSolution {
    /// Minimal Bayesian mean squared error.
    pub cost: f64,
    /// Seed operator solving Lambda rho_bar + rho_bar Lambda = 2 rho_bar',
    /// for the prior re-centered to zero mean.
    pub lambda: HermMatrix,
    /// Optimal estimates: eigenvalues of Lambda shifted back by the prior
    /// mean. Measuring in `basis` and reporting these is optimal.
    pub estimates: Vec<f64>,
    /// Eigenbasis of Lambda (columns), the optimal projective measurement.
    pub basis: CMatrix,
}

fn averaged_state(
    model: &ParametricModel,
    prior: &Prior,
    weight_fn: impl Fn(&[f64]) -> f64,
) -> Result<CMatrix> {
    let d = model.dim();
    let mut acc = CMatrix::zeros(d, d);
    for ((t, &w), &p) in prior
        .nodes()
        .iter()
        .zip(prior.weights())
        .zip(prior.density())
    {
        let pt = model.evaluate(t)?;
        acc += pt.rho.matrix() * c64(w * p * weight_fn(t), 0.0);
    }
    Ok(acc)
}

fn hermitian_part(m: CMatrix) -> HermMatrix {
    HermMatrix::new_unchecked(m)
}

/// Exact minimal Bayesian cost for one parameter under squared error: the
/// optimum over all measurements and estimators, achieved by a projective
/// measurement in the eigenbasis of the seed operator.
pub fn bayes_optimal_single(
    model: &ParametricModel,
    prior: &Prior,
) -> Result<BayesSingleSolution> {
    if model.param_count() != 1 || prior.param_dim() != 1 {
        return Err(Error::Domain(
            "bayes_optimal_single needs a scalar parameter".into(),
        ));
    }
    let mu = prior.mean()[0];
    let rho_bar = hermitian_part(averaged_state(model, prior, |_| 1.0)?);
    let rho_prime = hermitian_part(averaged_state(model, prior, |t| t[0] - mu)?);
    let lambda = anticomm_solve(&rho_bar, &rho_prime)?;
    let prior_var = prior.quadratic_moment(&CostMatrix::identity(1));
    let l2 = lambda.matrix() * lambda.matrix();
    let gain = (rho_bar.matrix() * l2).trace().re;
    let eig = lambda.eig();
    Ok(BayesSingleSolution {
        cost: prior_var - gain,
        estimates: eig.values.iter().map(|&v| v + mu).collect(),
        basis: eig.vectors,
        lambda,
    })
}

/// Multi-parameter Bayesian lower bound: prior cost minus the seed-operator
/// gain, with the seed equations solved componentwise. Coincides with the
/// exact optimum for one parameter; generally not tight for several.
pub fn bayes_lower_multi(
    model: &ParametricModel,
    prior: &Prior,
    c: &CostMatrix,
) -> Result<f64> {
    let p = model.param_count();
    if prior.param_dim() != p || c.dim() != p {
        return Err(Error::DimensionMismatch {
            context: "prior/cost vs model parameter count",
            expected: p,
            got: prior.param_dim().min(c.dim()),
        });
    }
    let mu = prior.mean();
    let rho_bar = hermitian_part(averaged_state(model, prior, |_| 1.0)?);
    let mut lambdas = Vec::with_capacity(p);
    for i in 0..p {
        let rho_prime = hermitian_part(averaged_state(model, prior, |t| t[i] - mu[i])?);
        lambdas.push(anticomm_solve(&rho_bar, &rho_prime)?);
    }
    let mut gain = 0.0;
    for i in 0..p {
        for j in 0..p {
            let prod = (rho_bar.matrix() * lambdas[i].matrix() * lambdas[j].matrix())
                .trace()
                .re;
            gain += c.matrix()[(i, j)] * prod;
        }
    }
    Ok(prior.quadratic_moment(c) - gain)
}

/// Van Trees (Bayesian Cramer-Rao) bound trace[C (F_bar + I_prior)^{-1}],
/// with F_bar the prior-averaged QFI and I_prior the prior information by
/// quadrature of grad p grad p^T / p. Requires a boundary-vanishing prior.
pub fn van_trees_bound(model: &ParametricModel, prior: &Prior, c: &CostMatrix) -> Result<f64> {
    let p = model.param_count();
    if prior.param_dim() != p || c.dim() != p {
        return Err(Error::DimensionMismatch {
            context: "prior/cost vs model parameter count",
            expected: p,
            got: prior.param_dim().min(c.dim()),
        });
    }
    if !prior.boundary_vanishing() {
        return Err(Error::Domain(
            "Van Trees requires a prior vanishing at the support boundary".into(),
        ));
    }
    let grads = prior.density_grad.as_ref().ok_or_else(|| {
        Error::Domain("Van Trees requires prior density gradients on the grid".into())
    })?;
    let mut f_bar = RMatrix::zeros(p, p);
    let mut info = RMatrix::zeros(p, p);
    for (k, (t, &w)) in prior.nodes().iter().zip(prior.weights()).enumerate() {
        let pd = prior.density()[k];
        if pd > 1e-300 {
            let g = &grads[k];
            for i in 0..p {
                for j in 0..p {
                    info[(i, j)] += w * g[i] * g[j] / pd;
                }
            }
        }
        let pt = model.evaluate(t)?;
        let s = crate::bounds::sld_set(&pt)?;
        f_bar += s.qfi * (w * pd);
    }
    let total = f_bar + info;
    let inv = total.clone().try_inverse().ok_or(Error::Unidentifiable {
        weight: 0.0,
    })?;
    Ok((c.matrix() * inv).trace())
}

/// Asymptotic Bayesian-Holevo constant: the prior average of the Holevo
/// bound, E[C^H(theta)], with a possibly theta-dependent cost matrix.
pub fn bayes_holevo_asymptotic(
    model: &ParametricModel,
    prior: &Prior,
    cost_at: impl Fn(&[f64]) -> Result<CostMatrix>,
) -> Result<f64> {
    let mut acc = 0.0;
    for ((t, &w), &p) in prior
        .nodes()
        .iter()
        .zip(prior.weights())
        .zip(prior.density())
    {
        if w * p == 0.0 {
            continue;
        }
        let pt = model.evaluate(t)?;
        let c = cost_at(t)?;
        let sol = crate::hcr::hcr_bound(&pt, &c)?;
        acc += w * p * sol.value;
    }
    Ok(acc)
}

// --- Covariant qubit estimation ---

/// Exact optimal Bayesian cost for n copies of a pure qubit state uniform
/// over the sphere, under the fidelity cost 4(1 - |<psi|psi_est>|^2):
/// 4 (1 - (n+1)/(n+2)) = 4/(n+2).
pub fn covariant_pure_qubit_cost(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("covariant cost needs n >= 1".into()));
    }
    Ok(4.0 / (n as f64 + 2.0))
}

/// log(k!) table: lnf[k] = ln k!.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 1..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// ln of the SU(2) multiplicity m_j of total spin j in n qubits:
/// m_j = binom(n, n/2 - j) (2j + 1) / (n/2 + j + 1), with two_j = 2j.
pub fn su2_ln_multiplicity(n: usize, two_j: usize, lnf: &[f64]) -> f64 {
    debug_assert!(two_j <= n && (n - two_j).is_multiple_of(2));
    let k = (n - two_j) / 2;
    let ln_binom = lnf[n] - lnf[k] - lnf[n - k];
    ln_binom + ((two_j + 1) as f64).ln() - ((n + two_j) as f64 / 2.0 + 1.0).ln()
}

/// Total-spin values of n qubits as 2j, descending from n to 0 or 1.
pub fn two_j_values(n: usize) -> Vec<usize> {
    (0..=n).rev().filter(|j| (n - j).is_multiple_of(2)).collect()
}

/// Covariant mixed-qubit estimation with an isotropic prior w(r) dr dOmega
/// on the Bloch ball and n copies, under the fidelity cost.
#[derive(Clone, Debug)]
pub struct CovariantQubitSpec {
    n: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    w_values: Vec<f64>,
}

impl CovariantQubitSpec {
    /// Samples the radial density on a Gauss-Legendre grid over [0, 1],
    /// mapped through r = sin(phi) so integrands carrying sqrt(1 - r^2)
    /// stay analytic up to the pure-state boundary. The density must
    /// integrate to 1 within 1e-6.
    pub fn new(n: usize, quad_nodes: usize, w: impl Fn(f64) -> f64) -> Result<Self> {
        if !(1..=MAX_COPIES).contains(&n) {
            return Err(Error::Domain(format!(
                "copy count {n} outside 1..={MAX_COPIES}"
            )));
        }
        if quad_nodes < MIN_QUAD_NODES {
            return Err(Error::Domain(format!(
                "quadrature needs at least {MIN_QUAD_NODES} nodes"
            )));
        }
        let (phi, pw) = gauss_legendre_on(quad_nodes, 0.0, std::f64::consts::FRAC_PI_2);
        let nodes: Vec<f64> = phi.iter().map(|&p| p.sin()).collect();
        let weights: Vec<f64> = phi.iter().zip(&pw).map(|(&p, &v)| v * p.cos()).collect();
        let w_values: Vec<f64> = nodes.iter().map(|&r| w(r)).collect();
        if w_values.iter().any(|&v| v < 0.0) {
            return Err(Error::Domain("radial density must be nonnegative".into()));
        }
        let mass: f64 = weights.iter().zip(&w_values).map(|(q, v)| q * v).sum();
        if (mass - 1.0).abs() > PRIOR_MASS_TOL {
            return Err(Error::Domain(format!(
                "radial density integrates to {mass}, expected 1"
            )));
        }
        Ok(Self {
            n,
            nodes,
            weights,
            w_values,
        })
    }

    /// Same, but rescales the density to unit mass first.
    pub fn normalized(n: usize, quad_nodes: usize, w: impl Fn(f64) -> f64) -> Result<Self> {
        let (phi, pw) = gauss_legendre_on(quad_nodes, 0.0, std::f64::consts::FRAC_PI_2);
        let mass: f64 = phi
            .iter()
            .zip(&pw)
            .map(|(&p, &v)| v * p.cos() * w(p.sin()))
            .sum();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain("radial density has no positive mass".into()));
        }
        Self::new(n, quad_nodes, |r| w(r) / mass)
    }

    pub fn copies(&self) -> usize {
        self.n
    }

    pub fn radial_grid(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.nodes, &self.weights, &self.w_values)
    }
}

/// Spin sums Sum_{m=-j}^{j} e^{mt} and Sum_{m=-j}^{j} m e^{mt} in the scaled
/// form (f0, f1) = e^{-jt} (Sum e^{mt}, Sum m e^{mt}), stable for all t >= 0.
fn scaled_spin_sums(two_j: usize, t: f64) -> (f64, f64) {
    let j = two_j as f64 / 2.0;
    if t * (j + 1.0) < 1e-4 {
        // Series around t = 0, returned with the e^{-jt} scaling applied.
        let s2 = j * (j + 1.0) * (two_j as f64 + 1.0) / 3.0;
        let s4 = (two_j as f64 + 1.0) * j * (j + 1.0) * (3.0 * j * j + 3.0 * j - 1.0) / 15.0;
        let f0 = (two_j as f64 + 1.0) + 0.5 * t * t * s2;
        let f1 = t * s2 + t * t * t * s4 / 6.0;
        let damp = (-j * t).exp();
        return (f0 * damp, f1 * damp);
    }
    let em = (-t).exp();
    let ea = (-(two_j as f64 + 1.0) * t).exp();
    let denom = 1.0 - em;
    let g0 = (1.0 - ea) / denom;
    let g1 = ((j + 0.5) * (1.0 + ea) * denom - 0.5 * (1.0 - ea) * (1.0 + em)) / (denom * denom);
    (g0, g1)
}

/// Exact and asymptotic optimal covariant costs: the closed-form j-sum over
/// the radial integrals, and the prior average of (3 + 2r)/n. The spin sums
/// combine with the multiplicities in the log domain so no intermediate
/// overflows; any non-finite term is reported as a precision error.
pub fn covariant_mixed_qubit_cost(spec: &CovariantQubitSpec) -> Result<(f64, f64)> {
    let n = spec.n;
    let lnf = ln_factorials(n);
    let half_n = n as f64 / 2.0;
    let mut total = 0.0;
    for two_j in two_j_values(n) {
        let j = two_j as f64 / 2.0;
        let ln_m = su2_ln_multiplicity(n, two_j, &lnf);
        let mut v0 = 0.0;
        let mut vz = 0.0;
        for ((&r, &qw), &wv) in spec
            .nodes
            .iter()
            .zip(&spec.weights)
            .zip(&spec.w_values)
        {
            if wv == 0.0 {
                continue;
            }
            let lp = (1.0 + r) / 2.0;
            let lm = (1.0 - r) / 2.0;
            let t = (lp / lm).ln();
            // ln[m_j lp^{n/2+j} lm^{n/2-j}]; the scaled sums carry the rest.
            let expo = ln_m + (half_n + j) * lp.ln() + (half_n - j) * lm.ln();
            let scale = expo.exp();
            let (f0, f1) = scaled_spin_sums(two_j, t);
            v0 += qw * wv * (1.0 - r * r).sqrt() * scale * f0;
            vz += qw * wv * r / (j + 1.0) * scale * f1;
        }
        let term = (v0 * v0 + vz * vz).sqrt();
        if !term.is_finite() {
            return Err(Error::Precision(format!(
                "covariant j-sum lost precision at 2j = {two_j}"
            )));
        }
        total += term;
    }
    let exact = 2.0 * (1.0 - total);
    let asym: f64 = spec
        .weights
        .iter()
        .zip(&spec.nodes)
        .zip(&spec.w_values)
        .map(|((&qw, &r), &wv)| qw * wv * (3.0 + 2.0 * r))
        .sum::<f64>()
        / n as f64;
    Ok((exact, asym))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::sld_set;
    use crate::model::{bloch_state, pauli, qubit_bloch_cartesian, qubit_r_theta, Derivatives};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    /// Phase rotation of a fixed Bloch-x state: rho(theta) = e^{-i theta
    /// sigma_z / 2} rho0 e^{+...}; QFI = b^2.
    fn phase_family(b: f64) -> ParametricModel {
        ParametricModel::new(
            "qubit-phase",
            2,
            1,
            Arc::new(move |t: &[f64]| {
                Ok(bloch_state([b * t[0].cos(), b * t[0].sin(), 0.0]))
            }),
            Derivatives::Analytic(Arc::new(move |t: &[f64]| {
                let g = pauli(1) * c64(-b * t[0].sin() * 0.5, 0.0)
                    + pauli(2) * c64(b * t[0].cos() * 0.5, 0.0);
                Ok(vec![g])
            })),
            Arc::new(|_| Ok(())),
        )
        .unwrap()
    }

    fn constant_family() -> ParametricModel {
        ParametricModel::new(
            "constant",
            2,
            1,
            Arc::new(|_t: &[f64]| Ok(bloch_state([0.3, 0.1, 0.2]))),
            Derivatives::Analytic(Arc::new(|_t: &[f64]| Ok(vec![CMatrix::zeros(2, 2)]))),
            Arc::new(|_| Ok(())),
        )
        .unwrap()
    }

    #[test]
    fn quadrature_is_exact_on_polynomials() {
        let (x, w) = gauss_legendre_on(8, 0.0, 1.0);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
        // Degree 15 monomial: exact value 1/16.
        let m15: f64 = x.iter().zip(&w).map(|(&t, &v)| v * t.powi(15)).sum();
        assert_relative_eq!(m15, 1.0 / 16.0, epsilon = 1e-13);
        let (x, w) = gauss_legendre(64);
        let m: f64 = x.iter().zip(&w).map(|(&t, &v)| v * t * t).sum();
        assert_relative_eq!(m, 2.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn prior_validation() {
        assert!(Prior::new(
            vec![vec![0.0], vec![1.0]],
            vec![1.0, 1.0],
            vec![0.4, 0.4],
            false
        )
        .is_err());
        let p = Prior::gaussian_1d(0.3, 0.2, 128).unwrap();
        assert!(p.boundary_vanishing());
        assert_relative_eq!(p.mean()[0], 0.3, epsilon = 1e-12);
        assert_relative_eq!(
            p.quadratic_moment(&CostMatrix::identity(1)),
            0.04,
            epsilon = 1e-12
        );
        let u = Prior::uniform_1d(-1.0, 1.0, 64).unwrap();
        assert_relative_eq!(
            u.quadratic_moment(&CostMatrix::identity(1)),
            1.0 / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn constant_family_returns_prior_variance() {
        let model = constant_family();
        let prior = Prior::uniform_1d(-0.5, 0.5, 64).unwrap();
        let sol = bayes_optimal_single(&model, &prior).unwrap();
        assert!(sol.lambda.matrix().norm() < 1e-12);
        assert_relative_eq!(sol.cost, 1.0 / 12.0, epsilon = 1e-12);
        // Multi-parameter form reduces to the same number.
        let b = bayes_lower_multi(&model, &prior, &CostMatrix::identity(1)).unwrap();
        assert_relative_eq!(b, sol.cost, epsilon = 1e-12);
    }

    #[test]
    fn two_point_prior_expansion() {
        let b = 0.8;
        let model = phase_family(b);
        let delta = 0.05;
        let prior = Prior::two_point(delta).unwrap();
        let sol = bayes_optimal_single(&model, &prior).unwrap();
        // Exact value delta^2 (1 - b^2 sin^2 delta); the quoted expansion
        // delta^2 (1 - delta^2 F) differs by b^2 delta^6 / 3.
        let fq = b * b;
        let leading = delta * delta * (1.0 - delta * delta * fq);
        assert!((sol.cost - leading).abs() < 0.4 * fq * delta.powi(6));
        // Estimates must bracket the prior support.
        assert_eq!(sol.estimates.len(), 2);
    }

    #[test]
    fn gaussian_prior_matches_averaged_family_qfi() {
        let b = 0.8;
        let model = phase_family(b);
        let (theta0, sigma) = (0.3, 0.2);
        let prior = Prior::gaussian_1d(theta0, sigma, 160).unwrap();
        let sol = bayes_optimal_single(&model, &prior).unwrap();

        // Averaged family theta0 -> integral of N(u; 0, sigma^2) rho(theta0
        // + u) du, differentiated numerically; its QFI closes the identity
        // cost = sigma^2 [1 - sigma^2 F_Q(rho_bar)].
        let (u, w) = gauss_legendre_on(160, -8.0 * sigma, 8.0 * sigma);
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let inner = phase_family(b);
        let averaged = ParametricModel::new(
            "averaged-phase",
            2,
            1,
            Arc::new(move |t: &[f64]| {
                let mut acc = CMatrix::zeros(2, 2);
                for (&uk, &wk) in u.iter().zip(&w) {
                    let g = norm * (-0.5 * (uk / sigma).powi(2)).exp();
                    let pt = inner.evaluate(&[t[0] + uk])?;
                    acc += pt.rho.matrix() * c64(wk * g, 0.0);
                }
                Ok(acc)
            }),
            Derivatives::Numeric { step: 1e-5 },
            Arc::new(|_| Ok(())),
        )
        .unwrap();
        let pt = averaged.evaluate(&[theta0]).unwrap();
        let f = sld_set(&pt).unwrap().qfi[(0, 0)];
        let s2 = sigma * sigma;
        assert!(
            (sol.cost - s2 * (1.0 - s2 * f)).abs() < 1e-8,
            "cost {} vs identity {}",
            sol.cost,
            s2 * (1.0 - s2 * f)
        );
        // Second computation path agrees.
        let multi = bayes_lower_multi(&model, &prior, &CostMatrix::identity(1)).unwrap();
        assert_relative_eq!(multi, sol.cost, epsilon = 1e-12);
    }

    #[test]
    fn van_trees_examples() {
        let b = 0.8;
        let model = phase_family(b);
        // Wide prior: bound approaches 1/F with the exact 1/(F + 1/sigma^2).
        let wide = Prior::gaussian_1d(0.0, 50.0, 256).unwrap();
        let vt = van_trees_bound(&model, &wide, &CostMatrix::identity(1)).unwrap();
        assert_relative_eq!(vt, 1.0 / (b * b + 1.0 / 2500.0), epsilon = 1e-9);

        // Uniform prior does not vanish at the boundary: refused.
        let uniform = Prior::uniform_1d(-1.0, 1.0, 64).unwrap();
        assert!(van_trees_bound(&model, &uniform, &CostMatrix::identity(1)).is_err());

        // Tightness chain: Van Trees never exceeds the exact optimum.
        let prior = Prior::gaussian_1d(0.3, 0.2, 160).unwrap();
        let vt = van_trees_bound(&model, &prior, &CostMatrix::identity(1)).unwrap();
        let opt = bayes_optimal_single(&model, &prior).unwrap().cost;
        assert!(vt <= opt + 1e-8, "van trees {vt} > optimal {opt}");
    }

    #[test]
    fn holevo_asymptotic_two_param_bures_is_two() {
        // (r, theta) family with the Bures cost diag(1/(1-r^2), r^2) has
        // C^H = 2 identically, so any radial prior averages to 2.
        let model = qubit_r_theta();
        let (r_nodes, r_w) = gauss_legendre_on(24, 0.3, 0.7);
        let nodes: Vec<Vec<f64>> = r_nodes.iter().map(|&r| vec![r, 0.9]).collect();
        let density = vec![1.0 / 0.4; nodes.len()];
        let prior = Prior::new(nodes, r_w, density, false).unwrap();
        let val = bayes_holevo_asymptotic(&model, &prior, |t| {
            CostMatrix::new(RMatrix::from_diagonal(&DVector::from_column_slice(&[
                1.0 / (1.0 - t[0] * t[0]),
                t[0] * t[0],
            ])))
        })
        .unwrap();
        assert_relative_eq!(val, 2.0, epsilon = 1e-7);
    }

    #[test]
    fn holevo_asymptotic_three_param_bures() {
        // Cartesian 3-parameter qubit along z with the Bures cost
        // diag(1, 1, 1/(1-r^2)): C^H(r) = 3 + 2r, so a uniform radial prior
        // on [a, b] gives 3 + a + b.
        let model = qubit_bloch_cartesian();
        let (a, b) = (0.2, 0.8);
        let (r_nodes, r_w) = gauss_legendre_on(16, a, b);
        let nodes: Vec<Vec<f64>> = r_nodes.iter().map(|&r| vec![0.0, 0.0, r]).collect();
        let density = vec![1.0 / (b - a); nodes.len()];
        let prior = Prior::new(nodes, r_w, density, false).unwrap();
        let val = bayes_holevo_asymptotic(&model, &prior, |t| {
            let r = t[2];
            CostMatrix::new(RMatrix::from_diagonal(&DVector::from_column_slice(&[
                1.0,
                1.0,
                1.0 / (1.0 - r * r),
            ])))
        })
        .unwrap();
        assert_relative_eq!(val, 3.0 + a + b, epsilon = 1e-6);
    }

    #[test]
    fn pure_qubit_closed_form() {
        assert!(covariant_pure_qubit_cost(0).is_err());
        assert_relative_eq!(covariant_pure_qubit_cost(2).unwrap(), 1.0, epsilon = 1e-15);
        let n = 1_000_000;
        assert!((n as f64 * covariant_pure_qubit_cost(n).unwrap() - 4.0).abs() < 1e-5);
    }

    #[test]
    fn multiplicities_sum_to_dimension() {
        for n in [1usize, 2, 3, 4, 7, 12, 25, 51] {
            let lnf = ln_factorials(n);
            let total: f64 = two_j_values(n)
                .into_iter()
                .map(|two_j| {
                    su2_ln_multiplicity(n, two_j, &lnf).exp() * (two_j as f64 + 1.0)
                })
                .sum();
            assert_relative_eq!(total, (2.0f64).powi(n as i32), max_relative = 1e-12);
        }
    }

    #[test]
    fn covariant_mixed_n1_closed_form() {
        // n = 1, uniform w: v0 = E[sqrt(1-r^2)] = pi/4, vz = E[r^2]/3 = 1/9,
        // cost = 2 (1 - sqrt(pi^2/16 + 1/81)).
        let spec = CovariantQubitSpec::new(1, 128, |_| 1.0).unwrap();
        let (exact, asym) = covariant_mixed_qubit_cost(&spec).unwrap();
        let expect = 2.0
            * (1.0
                - (std::f64::consts::PI.powi(2) / 16.0 + 1.0 / 81.0).sqrt());
        assert_relative_eq!(exact, expect, epsilon = 1e-10);
        assert_relative_eq!(asym, 4.0, epsilon = 1e-12);

        // Density concentrated at the pure boundary recovers the pure-state
        // single-copy cost 4/3.
        let bump = CovariantQubitSpec::normalized(1, 256, |r| {
            (-(r - 0.99999).powi(2) / (2.0 * 1e-12)).exp()
        })
        .unwrap();
        let (pure_limit, _) = covariant_mixed_qubit_cost(&bump).unwrap();
        assert!((pure_limit - 4.0 / 3.0).abs() < 1e-3);
    }

    /// Direct n = 2 oracle: the two spin blocks measured with the covariant
    /// coherent-state POVM, outcome distribution integrated numerically and
    /// the length estimate optimized per block, with no use of the v_j
    /// formulas.
    #[test]
    fn covariant_mixed_n2_brute_force() {
        let quad = 160;
        let spec = CovariantQubitSpec::new(2, quad, |_| 1.0).unwrap();
        let (exact, _) = covariant_mixed_qubit_cost(&spec).unwrap();

        let (r_nodes, r_w, _) = spec.radial_grid();
        let (c_nodes, c_w) = gauss_legendre_on(32, -1.0, 1.0);
        // Per block j: cost = sum_r w P_j [2 - 2 r rt E[c] - 2 sqrt(1-r^2)
        // sqrt(1-rt^2)], minimized over rt analytically via its (a, b) form.
        let mut a1 = 0.0;
        let mut b1 = 0.0;
        let mut b0 = 0.0;
        for (&r, &qw) in r_nodes.iter().zip(r_w) {
            let lp = (1.0 + r) / 2.0;
            let lm = (1.0 - r) / 2.0;
            let z1 = lp * lp + lp * lm + lm * lm;
            let p1 = z1;
            let p0 = lp * lm;
            // Spin-1 block in the J_z basis, m = 1, 0, -1.
            let q = [lp * lp / z1, lp * lm / z1, lm * lm / z1];
            // Outcome density over c = cos(beta) for the POVM
            // 3 |psi_beta><psi_beta| with rotated |1,1>.
            let mut mean_c = 0.0;
            for (&c, &cw) in c_nodes.iter().zip(&c_w) {
                let d = [
                    (1.0 + c) * (1.0 + c) / 4.0,
                    (1.0 - c * c) / 2.0,
                    (1.0 - c) * (1.0 - c) / 4.0,
                ];
                let prob = 3.0 * (q[0] * d[0] + q[1] * d[1] + q[2] * d[2]);
                mean_c += 0.5 * cw * prob * c;
            }
            a1 += qw * p1 * r * mean_c;
            b1 += qw * p1 * (1.0 - r * r).sqrt();
            b0 += qw * p0 * (1.0 - r * r).sqrt();
        }
        let brute = 2.0 - 2.0 * ((a1 * a1 + b1 * b1).sqrt() + b0);
        assert!(
            (brute - exact).abs() < 1e-9,
            "brute {brute} vs formula {exact}"
        );
    }

    #[test]
    fn covariant_mixed_asymptotics() {
        // Uniform radial density: per-copy cost decreases in n while the
        // rescaled cost n * exact climbs toward the limit integral 4 from
        // below. The approach is slow, ~n^{-1/2}: the spectrum degenerates
        // at r = 0 and the uniform density keeps O(n^{-1/2}) mass in the
        // region the collective measurement cannot resolve.
        let mut prev_cost = f64::INFINITY;
        let mut prev_scaled = 0.0;
        for n in 1..=50 {
            let spec = CovariantQubitSpec::new(n, 96, |_| 1.0).unwrap();
            let (exact, asym) = covariant_mixed_qubit_cost(&spec).unwrap();
            assert!(exact <= prev_cost + 1e-12, "cost not monotone at n = {n}");
            let scaled = n as f64 * exact;
            assert!(scaled <= n as f64 * asym + 1e-9, "limit crossed at n = {n}");
            assert!(scaled >= prev_scaled - 1e-12, "n*cost fell at n = {n}");
            prev_cost = exact;
            prev_scaled = scaled;
        }
        let spec = CovariantQubitSpec::new(100, 128, |_| 1.0).unwrap();
        let (exact, asym) = covariant_mixed_qubit_cost(&spec).unwrap();
        assert_relative_eq!(asym * 100.0, 4.0, epsilon = 1e-12);
        // Regression pin, cross-checked against a 40-digit evaluation of
        // the same closed form: the relative gap to the limit is 12.77%
        // at n = 100 and falls under 5% only near n = 500.
        assert_relative_eq!(100.0 * exact, 3.4893194762157, epsilon = 1e-8);

        // Narrow radial bump, wide enough for the grid to resolve: the
        // asymptotic component reproduces the local constant (3 + 2 r0)/n,
        // and the exact cost stays below it.
        let r0 = 0.6;
        let width = 0.02;
        let bump = CovariantQubitSpec::normalized(400, 256, |r| {
            (-(r - r0).powi(2) / (2.0 * width * width)).exp()
        })
        .unwrap();
        let (exact, asym) = covariant_mixed_qubit_cost(&bump).unwrap();
        assert_relative_eq!(asym * 400.0, 3.0 + 2.0 * r0, epsilon = 1e-3);
        assert!(exact < asym);
    }

    /// Direct n = 3 oracle over the half-integer blocks j = 3/2, 1/2 with
    /// the same machinery as the n = 2 test: covariant POVM outcome
    /// densities from binomial Wigner weights, per-block analytic radius
    /// optimization, no use of the closed-form radial integrals.
    #[test]
    fn covariant_mixed_n3_brute_force() {
        let spec = CovariantQubitSpec::new(3, 160, |_| 1.0).unwrap();
        let (exact, _) = covariant_mixed_qubit_cost(&spec).unwrap();

        let (r_nodes, r_w, _) = spec.radial_grid();
        let (c_nodes, c_w) = gauss_legendre_on(16, -1.0, 1.0);
        let binom = |n: i64, k: i64| -> f64 {
            if k < 0 || k > n {
                return 0.0;
            }
            let mut v = 1.0;
            for i in 0..k {
                v = v * (n - i) as f64 / (i + 1) as f64;
            }
            v
        };
        let mut total = 0.0;
        for (two_j, mult) in [(3i64, 1.0), (1i64, 2.0)] {
            let j = two_j as f64 / 2.0;
            let mut a = 0.0;
            let mut b = 0.0;
            for (&r, &qw) in r_nodes.iter().zip(r_w) {
                let lp = (1.0 + r) / 2.0;
                let lm = (1.0 - r) / 2.0;
                // Unnormalized block weights q_m = lp^{3/2+m} lm^{3/2-m}.
                let q: Vec<f64> = (0..=two_j)
                    .map(|k| lp.powf(1.5 + (k as f64 - j)) * lm.powf(1.5 - (k as f64 - j)))
                    .collect();
                let z: f64 = q.iter().sum();
                let p_block = mult * z;
                // E[cos beta] under the covariant POVM (2j+1) |jj><jj|_Omega:
                // outcome weights |<j,m|R_y|j,j>|^2 are binomial in cos beta.
                let mut mean_c = 0.0;
                for (&c, &cw) in c_nodes.iter().zip(&c_w) {
                    let mut prob = 0.0;
                    for k in 0..=two_j {
                        let m = k as f64 - j;
                        let d = binom(two_j, k)
                            * ((1.0 + c) / 2.0).powf(j + m)
                            * ((1.0 - c) / 2.0).powf(j - m);
                        prob += q[k as usize] / z * d;
                    }
                    mean_c += 0.5 * cw * (two_j as f64 + 1.0) * prob * c;
                }
                a += qw * p_block * r * mean_c;
                b += qw * p_block * (1.0 - r * r).sqrt();
            }
            total += (a * a + b * b).sqrt();
        }
        let brute = 2.0 - 2.0 * total;
        assert!(
            (brute - exact).abs() < 1e-9,
            "brute {brute} vs formula {exact}"
        );
    }
}
