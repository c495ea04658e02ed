//! Monte-Carlo validation: POVM samplers, classical Fisher information,
//! weighted local qubit strategies, the spin-block decomposition of n
//! qubit copies, and the collective estimation protocol whose rescaled
//! cost approaches the Holevo bound.
//!
//! Randomness is counter-based (ChaCha12) with one stream per trial, so
//! results are identical for a given seed regardless of execution order
//! or thread count.

use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::bayes::{ln_factorials, su2_ln_multiplicity, two_j_values};
use crate::error::{Error, Result};
use crate::matrix::{c64, CMatrix, HermMatrix, RMatrix};
use crate::model::{pauli, CostMatrix, ModelPoint};

/// Completeness tolerance: POVM elements must sum to I within this.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// PSD slack for POVM elements.
pub const ELEMENT_PSD_TOL: f64 = -1e-10;

/// Outcomes below this probability are dropped from Fisher sums when
/// their gradients vanish too.
pub const OUTCOME_FLOOR: f64 = 1e-12;

// --- POVMs ---

/// A discrete measurement: PSD elements summing to the identity.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<HermMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>, labels: Option<Vec<String>>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Domain("POVM needs at least one element".into()));
        }
        let d = elements[0].nrows();
        let mut herm = Vec::with_capacity(elements.len());
        let mut total = CMatrix::zeros(d, d);
        for e in elements {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "POVM element dimensions",
                    expected: d,
                    got: e.nrows(),
                });
            }
            total += &e;
            let h = HermMatrix::new(e)?;
            let min = h.min_eig();
            if min < ELEMENT_PSD_TOL {
                return Err(Error::NotPsd { min_eig: min });
            }
            herm.push(h);
        }
        let dev = (total - CMatrix::identity(d, d))
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()));
        if dev > COMPLETENESS_TOL {
            return Err(Error::ConstraintViolation {
                context: "POVM completeness".into(),
                residuals: vec![dev],
            });
        }
        let labels = labels.unwrap_or_else(|| (0..herm.len()).map(|k| k.to_string()).collect());
        if labels.len() != herm.len() {
            return Err(Error::DimensionMismatch {
                context: "POVM label count",
                expected: herm.len(),
                got: labels.len(),
            });
        }
        Ok(Self {
            elements: herm,
            labels,
        })
    }

    /// Projective two-outcome measurement of a Pauli axis (1=x, 2=y, 3=z).
    pub fn pauli_axis(k: usize) -> Self {
        let id = pauli(0);
        let plus = (&id + pauli(k)) * c64(0.5, 0.0);
        let minus = (&id - pauli(k)) * c64(0.5, 0.0);
        let axis = ["x", "y", "z"][k - 1];
        Povm::new(
            vec![plus, minus],
            Some(vec![format!("+{axis}"), format!("-{axis}")]),
        )
        .expect("Pauli projectors form a POVM")
    }

    /// Projective measurement in the given orthonormal basis (columns).
    pub fn projective(basis: &CMatrix) -> Result<Self> {
        let d = basis.nrows();
        let dev = (basis.adjoint() * basis - CMatrix::identity(d, d))
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()));
        if dev > 1e-9 {
            return Err(Error::Domain(format!(
                "projective basis is not orthonormal (deviation {dev:.2e})"
            )));
        }
        let elements = (0..basis.ncols())
            .map(|k| {
                let v = basis.column(k).clone_owned();
                &v * v.adjoint()
            })
            .collect();
        Povm::new(elements, None)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn elements(&self) -> &[HermMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Born probabilities tr(rho M_m), clamped at zero.
    pub fn probabilities(&self, rho: &HermMatrix) -> Vec<f64> {
        self.elements
            .iter()
            .map(|m| (rho.matrix() * m.matrix()).trace().re.max(0.0))
            .collect()
    }
}

// --- Classical Fisher information ---

/// Fisher information of the outcome distribution p_theta(m) = tr(rho M_m).
/// Zero-probability outcomes are dropped when their gradient rows vanish
/// too; a nonvanishing gradient at zero probability is a singular model.
pub fn classical_fisher(povm: &Povm, pt: &ModelPoint) -> Result<RMatrix> {
    if povm.dim() != pt.dim() {
        return Err(Error::DimensionMismatch {
            context: "POVM vs state dimension",
            expected: pt.dim(),
            got: povm.dim(),
        });
    }
    let p = pt.param_count();
    let mut fisher = RMatrix::zeros(p, p);
    for (m, elem) in povm.elements.iter().enumerate() {
        let prob = (pt.rho.matrix() * elem.matrix()).trace().re;
        let grad: Vec<f64> = pt
            .grads
            .iter()
            .map(|g| (g.matrix() * elem.matrix()).trace().re)
            .collect();
        if prob < OUTCOME_FLOOR {
            let gmax = grad.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if gmax > 1e-9 {
                return Err(Error::Domain(format!(
                    "outcome {} has probability {prob:.2e} but gradient {gmax:.2e}: \
                     classical Fisher information diverges",
                    povm.labels[m]
                )));
            }
            log::warn!(
                "dropping zero-probability outcome {} from the Fisher sum",
                povm.labels[m]
            );
            continue;
        }
        for i in 0..p {
            for j in 0..p {
                fisher[(i, j)] += grad[i] * grad[j] / prob;
            }
        }
    }
    Ok(fisher)
}

/// trace(C F^+) with kernel directions rejected if C weights them.
fn weighted_inverse_cost(fisher: &RMatrix, c: &CostMatrix) -> Result<f64> {
    let se = fisher.clone().symmetric_eigen();
    let scale = se.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let tol = 1e-12 * (1.0 + scale);
    let mut cost = 0.0;
    for (k, &l) in se.eigenvalues.iter().enumerate() {
        let v = se.eigenvectors.column(k);
        let weight = (c.matrix() * v).dot(&v);
        if l > tol {
            cost += weight / l;
        } else if weight.abs() > 1e-9 * (1.0 + c.matrix().norm()) {
            return Err(Error::Domain(
                "measurement gives no information on a direction the cost weights".into(),
            ));
        }
    }
    Ok(cost)
}

/// A split of copies across the three Pauli axis measurements.
#[derive(Clone, Debug)]
pub struct LocalStrategy {
    /// Fisher information at the requested weights.
    pub fisher: RMatrix,
    /// trace(C F^{-1}) at the requested weights.
    pub cost: f64,
    /// Weights minimizing the cost, by the square-root allocation rule.
    pub optimal_weights: [f64; 3],
    /// Minimal cost over weights; equals the qubit HGM bound when the
    /// model axes align with the measurement axes.
    pub optimal_cost: f64,
}

/// Evaluates and optimizes the axis-weighted local qubit strategy: a
/// fraction weight_k of copies is measured along Pauli axis k, the Fisher
/// information adds, and the separable cost sum_k a_k / w_k is minimized
/// by weights proportional to sqrt(a_k).
pub fn weighted_local_strategy(
    pt: &ModelPoint,
    c: &CostMatrix,
    weights: &[f64],
) -> Result<LocalStrategy> {
    if pt.dim() != 2 {
        return Err(Error::Domain(
            "the axis-weighted strategy is defined for qubit models".into(),
        ));
    }
    if weights.len() != 3 {
        return Err(Error::DimensionMismatch {
            context: "axis weight count",
            expected: 3,
            got: weights.len(),
        });
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Domain("axis weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "axis weights sum to {total}, expected 1"
        )));
    }
    let p = pt.param_count();
    let per_axis: Vec<RMatrix> = (1..=3)
        .map(|k| classical_fisher(&Povm::pauli_axis(k), pt))
        .collect::<Result<_>>()?;

    let mut fisher = RMatrix::zeros(p, p);
    for (k, f) in per_axis.iter().enumerate() {
        fisher += f * weights[k];
    }
    let cost = weighted_inverse_cost(&fisher, c)?;

    // Per-axis cost coefficients a_k = trace(C F_k^+), kernel directions
    // ignored (they are other axes' job); informationless axes get weight
    // zero.
    let pinv_trace = |f: &RMatrix| -> f64 {
        let se = f.clone().symmetric_eigen();
        let scale = se.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let tol = 1e-12 * (1.0 + scale);
        let mut acc = 0.0;
        for (k, &l) in se.eigenvalues.iter().enumerate() {
            if l > tol {
                let v = se.eigenvectors.column(k);
                acc += (c.matrix() * v).dot(&v) / l;
            }
        }
        acc
    };
    let mut coeff = [0.0f64; 3];
    for (k, f) in per_axis.iter().enumerate() {
        if f.norm() > 1e-14 {
            coeff[k] = pinv_trace(f);
        }
    }
    let mut optimal_weights = [0.0f64; 3];
    let root_sum: f64 = coeff
        .iter()
        .filter(|a| a.is_finite() && **a > 0.0)
        .map(|a| a.sqrt())
        .sum();
    for k in 0..3 {
        if coeff[k].is_finite() && coeff[k] > 0.0 {
            optimal_weights[k] = coeff[k].sqrt() / root_sum;
        }
    }
    let optimal_cost = root_sum * root_sum;
    Ok(LocalStrategy {
        fisher,
        cost,
        optimal_weights,
        optimal_cost,
    })
}

// --- Spin-block decomposition ---

/// One total-spin block of n qubit copies.
#[derive(Clone, Debug)]
pub struct SpinBlockState {
    pub n: usize,
    /// Twice the total spin (integer for all n).
    pub two_j: usize,
    /// Normalized (2j+1)-dimensional block state, J_z basis m = j..-j.
    pub block: HermMatrix,
    /// Probability of the block, m_j-fold multiplicity included.
    pub weight: f64,
}

impl SpinBlockState {
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }
}

/// Sum_{k=0}^{two_j} e^{-k t} for t >= 0, accurate for all t.
fn geometric_decay_sum(two_j: usize, t: f64) -> f64 {
    if t == 0.0 {
        return two_j as f64 + 1.0;
    }
    (-((two_j as f64 + 1.0) * t)).exp_m1() / (-t).exp_m1()
}

/// Spin operators J_x, J_y for dimension 2j+1, basis ordered m = j..-j.
fn spin_xy(two_j: usize) -> (CMatrix, CMatrix) {
    let d = two_j + 1;
    let j = two_j as f64 / 2.0;
    let mut jx = CMatrix::zeros(d, d);
    let mut jy = CMatrix::zeros(d, d);
    for k in 1..d {
        // Raising from m = j - k to m + 1 couples rows k and k - 1.
        let m = j - k as f64;
        let c = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
        jx[(k - 1, k)] = c64(0.5 * c, 0.0);
        jx[(k, k - 1)] = c64(0.5 * c, 0.0);
        jy[(k - 1, k)] = c64(0.0, -0.5 * c);
        jy[(k, k - 1)] = c64(0.0, 0.5 * c);
    }
    (jx, jy)
}

/// exp(-i theta J_y) through the eigendecomposition of J_y.
fn rotation_about_y(jy: &CMatrix, theta: f64) -> CMatrix {
    let eig = HermMatrix::new_unchecked(jy.clone()).eig();
    let phases = CMatrix::from_diagonal(&DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&l| c64(0.0, -theta * l).exp()),
    ));
    &eig.vectors * phases * eig.vectors.adjoint()
}

/// Block-diagonal form of n copies of the Bloch state (r sin(theta), 0,
/// r cos(theta)): per total spin j, the rotated Gibbs-like block and its
/// weight p_{n,j}, computed in the log domain.
pub fn spin_blocks(n: usize, r: f64, theta: f64) -> Result<Vec<SpinBlockState>> {
    if !(1..=crate::bayes::MAX_COPIES).contains(&n) {
        return Err(Error::Domain(format!(
            "copy count {n} outside 1..={}",
            crate::bayes::MAX_COPIES
        )));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("radius {r} outside [0, 1)")));
    }
    let lp = (1.0 + r) / 2.0;
    let lm = (1.0 - r) / 2.0;
    let t = (lp / lm).ln();
    let lnf = ln_factorials(n);
    let half_n = n as f64 / 2.0;
    let mut blocks = Vec::new();
    let mut total_weight = 0.0;
    for two_j in two_j_values(n) {
        let j = two_j as f64 / 2.0;
        let s = geometric_decay_sum(two_j, t);
        let ln_pref = su2_ln_multiplicity(n, two_j, &lnf)
            + (half_n + j) * lp.ln()
            + (half_n - j) * lm.ln();
        let weight = ln_pref.exp() * s;
        if !weight.is_finite() {
            return Err(Error::Precision(format!(
                "spin-block weight lost precision at 2j = {two_j}"
            )));
        }
        // Diagonal Gibbs block q_k = e^{-k t} / S in the J_z basis.
        let d = two_j + 1;
        let diag = CMatrix::from_diagonal(&DVector::from_iterator(
            d,
            (0..d).map(|k| c64((-(k as f64) * t).exp() / s, 0.0)),
        ));
        let (_, jy) = spin_xy(two_j);
        let u = rotation_about_y(&jy, theta);
        let block = HermMatrix::new_unchecked(&u * diag * u.adjoint());
        total_weight += weight;
        blocks.push(SpinBlockState {
            n,
            two_j,
            block,
            weight,
        });
    }
    if (total_weight - 1.0).abs() > 1e-10 {
        return Err(Error::Precision(format!(
            "spin-block weights sum to {total_weight}"
        )));
    }
    Ok(blocks)
}

// --- Collective estimation protocol ---

/// Outcome of a Monte-Carlo run: the rescaled empirical Bayes-free cost
/// n * E[c (r_hat - r)^2 + r^2 (theta_hat - theta)^2] and its standard
/// error, both already multiplied by n.
#[derive(Clone, Copy, Debug)]
pub struct RunSummary {
    pub scaled_cost: f64,
    pub scaled_stderr: f64,
    pub trials: usize,
}

struct BlockSampler {
    weight: f64,
    r_hat: f64,
    probs: Vec<f64>,
    estimates: Vec<f64>,
}

/// Collective protocol on n copies at (r, theta) with radial cost weight
/// c: sample the total spin j (estimating r as 2j/n), then measure J_x in
/// the block and apply the one-step theta estimator normalized by the
/// measurement's total classical Fisher information. The spin weights
/// carry no theta dependence, so dividing the per-outcome score by the
/// block-averaged Fisher information is what keeps the estimator locally
/// unbiased; per-block normalization would not be. Deterministic per
/// seed; one RNG stream per trial, so the result is independent of
/// thread count.
pub fn collective_estimation_run(
    n: usize,
    r: f64,
    theta: f64,
    c: f64,
    trials: usize,
    seed: u64,
) -> Result<RunSummary> {
    if trials < 1000 {
        return Err(Error::Domain(format!(
            "need at least 1000 trials, got {trials}"
        )));
    }
    if c <= 0.0 {
        return Err(Error::Domain("radial cost weight must be positive".into()));
    }
    let blocks = spin_blocks(n, r, theta)?;
    let mut prepared = Vec::with_capacity(blocks.len());
    let mut f_total = 0.0;
    for b in &blocks {
        let (jx, jy) = spin_xy(b.two_j);
        let basis = HermMatrix::new_unchecked(jx).eig().vectors;
        let rho_w = basis.adjoint() * b.block.matrix() * &basis;
        // d rho / d theta = -i [J_y, rho] in the same outcome basis.
        let drho = (&jy * b.block.matrix() - b.block.matrix() * &jy) * c64(0.0, -1.0);
        let drho_w = basis.adjoint() * drho * &basis;
        let dim = b.two_j + 1;
        let probs: Vec<f64> = (0..dim).map(|k| rho_w[(k, k)].re.max(0.0)).collect();
        let dprobs: Vec<f64> = (0..dim).map(|k| drho_w[(k, k)].re).collect();
        let fisher: f64 = probs
            .iter()
            .zip(&dprobs)
            .filter(|(p, _)| **p > OUTCOME_FLOOR)
            .map(|(p, dp)| dp * dp / p)
            .sum();
        f_total += b.weight * fisher;
        prepared.push((b.weight, b.two_j, probs, dprobs));
    }
    if f_total <= 1e-12 {
        return Err(Error::Domain(
            "measurement carries no phase information at this point".into(),
        ));
    }
    let samplers: Vec<BlockSampler> = prepared
        .into_iter()
        .map(|(weight, two_j, probs, dprobs)| {
            let estimates: Vec<f64> = probs
                .iter()
                .zip(&dprobs)
                .map(|(p, dp)| {
                    if *p > OUTCOME_FLOOR {
                        theta + dp / (p * f_total)
                    } else {
                        theta
                    }
                })
                .collect();
            BlockSampler {
                weight,
                r_hat: (two_j as f64 / n as f64).clamp(0.0, 1.0),
                probs,
                estimates,
            }
        })
        .collect();

    let costs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = samplers.last().expect("n >= 1 gives a block");
            for s in &samplers {
                acc += s.weight;
                if u < acc {
                    chosen = s;
                    break;
                }
            }
            let v: f64 = rng.gen();
            let total: f64 = chosen.probs.iter().sum();
            let mut cum = 0.0;
            let mut theta_hat = theta;
            for (k, p) in chosen.probs.iter().enumerate() {
                cum += p / total;
                if v < cum {
                    theta_hat = chosen.estimates[k];
                    break;
                }
            }
            let dr = chosen.r_hat - r;
            let dth = theta_hat - theta;
            c * dr * dr + r * r * dth * dth
        })
        .collect();

    let tf = trials as f64;
    let mean: f64 = costs.iter().sum::<f64>() / tf;
    let var: f64 = costs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (tf - 1.0);
    Ok(RunSummary {
        scaled_cost: n as f64 * mean,
        scaled_stderr: n as f64 * (var / tf).sqrt(),
        trials,
    })
}

/// Multinomial Born-rule sampler: outcome counts for `trials` independent
/// measurements of rho, deterministic in the seed.
pub fn sample_povm(rho: &HermMatrix, povm: &Povm, trials: usize, seed: u64) -> Result<Vec<u64>> {
    if povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "POVM vs state dimension",
            expected: rho.dim(),
            got: povm.dim(),
        });
    }
    let probs = povm.probabilities(rho);
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Domain(format!(
            "Born probabilities sum to {total}; state or POVM invalid"
        )));
    }
    let mut counts = vec![0u64; povm.len()];
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let u: f64 = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = povm.len() - 1;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = k;
                break;
            }
        }
        counts[pick] += 1;
    }
    Ok(counts)
}

// --- Curve output ---

/// One row of curve data for plotting tools.
#[derive(Clone, Debug)]
pub struct CurveRow {
    pub n: Option<usize>,
    pub r: f64,
    pub bound: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Writes rows as CSV with columns (n, r, bound_name, value, stderr).
pub fn write_curves_csv(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io_like)?;
    w.write_record(["n", "r", "bound_name", "value", "stderr"])
        .map_err(io_like)?;
    for row in rows {
        w.write_record([
            row.n.map(|n| n.to_string()).unwrap_or_default(),
            format!("{:.12}", row.r),
            row.bound.clone(),
            format!("{:.12}", row.value),
            row.stderr.map(|s| format!("{s:.12}")).unwrap_or_default(),
        ])
        .map_err(io_like)?;
    }
    w.flush()?;
    Ok(())
}

fn io_like(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("csv: {other:?}")),
    }
}
