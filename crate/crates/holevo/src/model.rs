//! Parametric families of density matrices and the validated per-point data
//! (state, gradients, cost matrix) every bound computation consumes.
//!
//! A family is a map theta -> rho(theta) on an open parameter domain, with
//! gradients supplied either analytically or by central differences. Points
//! are validated on evaluation: the state must be a density matrix and each
//! gradient Hermitian and traceless. Gradients are always symmetrized and
//! trace-projected after numeric differentiation so that downstream solvers
//! can rely on exact structure.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::matrix::{c64, kron, max_abs, CMatrix, HermMatrix, RMatrix};

/// Central-difference step for numeric gradients. Error is O(step^2) from
/// truncation plus O(eps/step) from roundoff; 1e-5 balances both near 1e-10.
pub const NUMERIC_GRAD_STEP: f64 = 1e-5;

/// PSD slack allowed when validating states and cost matrices.
pub const PSD_SLACK: f64 = -1e-10;

/// Largest Hilbert-space dimension the dense routines accept.
pub const MAX_DIM: usize = 256;

type StateFn = dyn Fn(&[f64]) -> Result<CMatrix> + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Result<Vec<CMatrix>> + Send + Sync;
type DomainFn = dyn Fn(&[f64]) -> Result<()> + Send + Sync;

/// How a family's gradients are produced.
#[derive(Clone)]
pub enum Derivatives {
    /// Central differences with the given step.
    Numeric { step: f64 },
    /// Closure returning all p gradients at once.
    Analytic(Arc<GradFn>),
}

/// A parametric family theta -> rho(theta).
#[derive(Clone)]
pub struct ParametricModel {
    name: String,
    dim: usize,
    param_count: usize,
    state: Arc<StateFn>,
    derivatives: Derivatives,
    domain: Arc<DomainFn>,
}

impl ParametricModel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        param_count: usize,
        state: Arc<StateFn>,
        derivatives: Derivatives,
        domain: Arc<DomainFn>,
    ) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Domain(format!(
                "Hilbert-space dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if param_count == 0 {
            return Err(Error::Domain("model needs at least one parameter".into()));
        }
        Ok(Self {
            name: name.into(),
            dim,
            param_count,
            state,
            derivatives,
            domain,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Same family with gradients forced through central differences.
    /// Used to cross-check analytic gradients.
    pub fn with_numeric_derivatives(&self) -> Self {
        let mut m = self.clone();
        m.derivatives = Derivatives::Numeric {
            step: NUMERIC_GRAD_STEP,
        };
        m
    }

    /// Evaluates and validates the family at a parameter point.
    pub fn evaluate(&self, theta: &[f64]) -> Result<ModelPoint> {
        if theta.len() != self.param_count {
            return Err(Error::DimensionMismatch {
                context: "parameter point length",
                expected: self.param_count,
                got: theta.len(),
            });
        }
        (self.domain)(theta)?;
        let raw = (self.state)(theta)?;
        let rho = validate_density(raw)?;

        let raw_grads = match &self.derivatives {
            Derivatives::Analytic(f) => {
                let grads = f(theta)?;
                if grads.len() != self.param_count {
                    return Err(Error::DimensionMismatch {
                        context: "gradient count",
                        expected: self.param_count,
                        got: grads.len(),
                    });
                }
                for g in &grads {
                    check_gradient_structure(g)?;
                }
                grads
            }
            Derivatives::Numeric { step } => {
                let mut grads = Vec::with_capacity(self.param_count);
                for i in 0..self.param_count {
                    let mut plus = theta.to_vec();
                    let mut minus = theta.to_vec();
                    plus[i] += step;
                    minus[i] -= step;
                    (self.domain)(&plus)?;
                    (self.domain)(&minus)?;
                    let d = ((self.state)(&plus)? - (self.state)(&minus)?)
                        * c64(1.0 / (2.0 * step), 0.0);
                    grads.push(d);
                }
                grads
            }
        };

        let grads = raw_grads
            .into_iter()
            .map(|g| clean_gradient(g, self.dim))
            .collect();
        Ok(ModelPoint {
            theta: theta.to_vec(),
            rho,
            grads,
        })
    }
}

/// Symmetrize and project out the trace so the gradient is exactly a
/// traceless Hermitian matrix.
fn clean_gradient(g: CMatrix, dim: usize) -> HermMatrix {
    let h = HermMatrix::new_unchecked(g);
    let shift = h.trace() / dim as f64;
    HermMatrix::new_unchecked(h.into_matrix() - CMatrix::identity(dim, dim) * c64(shift, 0.0))
}

/// Analytic gradients must already be Hermitian and traceless to 1e-9.
fn check_gradient_structure(g: &CMatrix) -> Result<()> {
    let scale = 1.0 + max_abs(g);
    let dev = crate::matrix::hermiticity_deviation(g);
    if dev > 1e-9 * scale {
        return Err(Error::NotHermitian { max_dev: dev });
    }
    let tr = g.trace().norm();
    if tr > 1e-9 * scale {
        return Err(Error::NotTraceless { trace_abs: tr });
    }
    Ok(())
}

fn validate_density(raw: CMatrix) -> Result<HermMatrix> {
    let rho = HermMatrix::new(raw).map_err(|e| Error::NotDensity {
        reason: e.to_string(),
    })?;
    let tr = rho.trace();
    if (tr - 1.0).abs() > 1e-10 {
        return Err(Error::NotDensity {
            reason: format!("trace is {tr}, expected 1"),
        });
    }
    let min_eig = rho.min_eig();
    if min_eig < PSD_SLACK {
        return Err(Error::NotDensity {
            reason: format!("min eigenvalue {min_eig:.3e}"),
        });
    }
    Ok(rho)
}

/// A validated evaluation of a family: state, gradients, and the point.
#[derive(Clone)]
pub struct ModelPoint {
    pub theta: Vec<f64>,
    pub rho: HermMatrix,
    pub grads: Vec<HermMatrix>,
}

impl ModelPoint {
    /// Builds a point from explicit matrices (e.g. parsed from a file),
    /// running the same validation as `ParametricModel::evaluate`.
    pub fn from_parts(theta: Vec<f64>, rho: CMatrix, grads: Vec<CMatrix>) -> Result<Self> {
        let rho = validate_density(rho)?;
        let dim = rho.dim();
        let grads = grads
            .into_iter()
            .map(|g| {
                if g.nrows() != dim || g.ncols() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "gradient dimension",
                        expected: dim,
                        got: g.nrows(),
                    });
                }
                check_gradient_structure(&g)?;
                Ok(clean_gradient(g, dim))
            })
            .collect::<Result<Vec<_>>>()?;
        if grads.is_empty() {
            return Err(Error::Domain("a model point needs at least one gradient".into()));
        }
        Ok(Self { theta, rho, grads })
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn param_count(&self) -> usize {
        self.grads.len()
    }

    /// Linear reparametrization theta' = J theta: gradients transform with
    /// (J^T)^{-1}. J must be square and well-conditioned enough to invert.
    pub fn reparametrize(&self, j: &RMatrix) -> Result<ModelPoint> {
        let p = self.param_count();
        if j.nrows() != p || j.ncols() != p {
            return Err(Error::DimensionMismatch {
                context: "Jacobian shape",
                expected: p,
                got: j.nrows(),
            });
        }
        let det = j.clone().lu().determinant();
        if det.abs() < 1e-12 {
            return Err(Error::Domain(format!(
                "Jacobian is singular (det {det:.3e})"
            )));
        }
        let jt_inv = j
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::Domain("Jacobian transpose not invertible".into()))?;
        let mut new_grads = Vec::with_capacity(p);
        for i in 0..p {
            let mut acc = CMatrix::zeros(self.dim(), self.dim());
            for (k, g) in self.grads.iter().enumerate() {
                acc += g.matrix() * c64(jt_inv[(i, k)], 0.0);
            }
            new_grads.push(HermMatrix::new_unchecked(acc));
        }
        let theta_vec = DVector::from_column_slice(&self.theta);
        let new_theta = j * theta_vec;
        Ok(ModelPoint {
            theta: new_theta.iter().copied().collect(),
            rho: self.rho.clone(),
            grads: new_grads,
        })
    }
}

/// A validated symmetric PSD cost (weight) matrix.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    m: RMatrix,
}

impl CostMatrix {
    pub fn new(m: RMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "cost matrix must be square",
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let scale = 1.0 + m.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        let dev = (&m - m.transpose()).iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        if dev > 1e-12 * scale {
            return Err(Error::NotSymmetric { max_dev: dev });
        }
        let sym = (&m + m.transpose()) * 0.5;
        let herm = HermMatrix::from_real(&sym)?;
        let min_eig = herm.min_eig();
        if min_eig < PSD_SLACK * scale {
            return Err(Error::NotPsd { min_eig });
        }
        Ok(Self { m: sym })
    }

    pub fn identity(p: usize) -> Self {
        Self {
            m: RMatrix::identity(p, p),
        }
    }

    pub fn from_diagonal(weights: &[f64]) -> Result<Self> {
        Self::new(RMatrix::from_diagonal(&DVector::from_column_slice(weights)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.m
    }

    /// Pull-back through a linear reparametrization theta' = J theta:
    /// a cost C' on theta' corresponds to C = J^T C' J on theta.
    pub fn pull_back(&self, j: &RMatrix) -> Result<CostMatrix> {
        if j.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "Jacobian rows must match cost dimension",
                expected: self.dim(),
                got: j.nrows(),
            });
        }
        CostMatrix::new(j.transpose() * &self.m * j)
    }
}

// --- Pauli helpers used by the qubit builders ---

pub fn pauli(k: usize) -> CMatrix {
    match k {
        0 => CMatrix::identity(2, 2),
        1 => CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)]),
        2 => CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)]),
        3 => CMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(-1., 0.)]),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// rho = (I + v . sigma)/2 for a Bloch vector v.
pub fn bloch_state(v: [f64; 3]) -> CMatrix {
    let mut m = pauli(0);
    for k in 0..3 {
        m += pauli(k + 1) * c64(v[k], 0.0);
    }
    m * c64(0.5, 0.0)
}

const DOMAIN_SLACK: f64 = 1e-12;

/// Qubit family over the full Bloch ball, parameters (rx, ry, rz).
/// Gradients are sigma_k / 2.
pub fn qubit_bloch_cartesian() -> ParametricModel {
    ParametricModel::new(
        "qubit-bloch-cartesian",
        2,
        3,
        Arc::new(|t: &[f64]| Ok(bloch_state([t[0], t[1], t[2]]))),
        Derivatives::Analytic(Arc::new(|_t: &[f64]| {
            Ok((1..=3).map(|k| pauli(k) * c64(0.5, 0.0)).collect())
        })),
        Arc::new(|t: &[f64]| {
            let norm = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
            if norm > 1.0 + DOMAIN_SLACK {
                return Err(Error::Domain(format!(
                    "Bloch vector norm {norm} exceeds 1"
                )));
            }
            Ok(())
        }),
    )
    .expect("static builder")
}

fn spherical_direction(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// Qubit family in spherical Bloch coordinates (r, theta, phi).
pub fn qubit_bloch_spherical() -> ParametricModel {
    ParametricModel::new(
        "qubit-bloch-spherical",
        2,
        3,
        Arc::new(|t: &[f64]| {
            let (r, th, ph) = (t[0], t[1], t[2]);
            let n = spherical_direction(th, ph);
            Ok(bloch_state([r * n[0], r * n[1], r * n[2]]))
        }),
        Derivatives::Analytic(Arc::new(|t: &[f64]| {
            let (r, th, ph) = (t[0], t[1], t[2]);
            let n = spherical_direction(th, ph);
            let dth = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
            let dph = [-th.sin() * ph.sin(), th.sin() * ph.cos(), 0.0];
            let dir = |v: [f64; 3], scale: f64| {
                let mut m = CMatrix::zeros(2, 2);
                for k in 0..3 {
                    m += pauli(k + 1) * c64(0.5 * scale * v[k], 0.0);
                }
                m
            };
            Ok(vec![dir(n, 1.0), dir(dth, r), dir(dph, r)])
        })),
        Arc::new(|t: &[f64]| {
            if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&t[0]) {
                return Err(Error::Domain(format!("radius {} outside [0, 1]", t[0])));
            }
            if !(-DOMAIN_SLACK..=std::f64::consts::PI + DOMAIN_SLACK).contains(&t[1]) {
                return Err(Error::Domain(format!(
                    "polar angle {} outside [0, pi]",
                    t[1]
                )));
            }
            Ok(())
        }),
    )
    .expect("static builder")
}

/// Pure qubit family |psi(theta, phi)> = (cos(theta/2), e^{i phi} sin(theta/2)).
pub fn pure_qubit() -> ParametricModel {
    ParametricModel::new(
        "pure-qubit",
        2,
        2,
        Arc::new(|t: &[f64]| {
            let n = spherical_direction(t[0], t[1]);
            Ok(bloch_state(n))
        }),
        Derivatives::Analytic(Arc::new(|t: &[f64]| {
            let (th, ph) = (t[0], t[1]);
            let dth = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
            let dph = [-th.sin() * ph.sin(), th.sin() * ph.cos(), 0.0];
            let dir = |v: [f64; 3]| {
                let mut m = CMatrix::zeros(2, 2);
                for k in 0..3 {
                    m += pauli(k + 1) * c64(0.5 * v[k], 0.0);
                }
                m
            };
            Ok(vec![dir(dth), dir(dph)])
        })),
        Arc::new(|t: &[f64]| {
            if !(-DOMAIN_SLACK..=std::f64::consts::PI + DOMAIN_SLACK).contains(&t[0]) {
                return Err(Error::Domain(format!(
                    "polar angle {} outside [0, pi]",
                    t[0]
                )));
            }
            Ok(())
        }),
    )
    .expect("static builder")
}

/// Two-parameter qubit family (r, theta) in the x-z plane:
/// rho = (I + r (sin theta, 0, cos theta) . sigma)/2.
pub fn qubit_r_theta() -> ParametricModel {
    ParametricModel::new(
        "qubit-r-theta",
        2,
        2,
        Arc::new(|t: &[f64]| {
            let (r, th) = (t[0], t[1]);
            Ok(bloch_state([r * th.sin(), 0.0, r * th.cos()]))
        }),
        Derivatives::Analytic(Arc::new(|t: &[f64]| {
            let (r, th) = (t[0], t[1]);
            let dir = |x: f64, z: f64| pauli(1) * c64(0.5 * x, 0.0) + pauli(3) * c64(0.5 * z, 0.0);
            Ok(vec![
                dir(th.sin(), th.cos()),
                dir(r * th.cos(), -r * th.sin()),
            ])
        })),
        Arc::new(|t: &[f64]| {
            if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&t[0]) {
                return Err(Error::Domain(format!("radius {} outside [0, 1]", t[0])));
            }
            if !(-DOMAIN_SLACK..=std::f64::consts::PI + DOMAIN_SLACK).contains(&t[1]) {
                return Err(Error::Domain(format!(
                    "angle {} outside [0, pi]",
                    t[1]
                )));
            }
            Ok(())
        }),
    )
    .expect("static builder")
}

/// Single-parameter equatorial phase family at fixed Bloch radius b:
/// rho = (I + b (cos t, sin t, 0) . sigma)/2, with quantum Fisher
/// information b^2 everywhere.
pub fn qubit_phase(b: f64) -> Result<ParametricModel> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(Error::Domain(format!("bloch radius {b} outside (0, 1]")));
    }
    ParametricModel::new(
        format!("qubit-phase({b})"),
        2,
        1,
        Arc::new(move |t: &[f64]| Ok(bloch_state([b * t[0].cos(), b * t[0].sin(), 0.0]))),
        Derivatives::Analytic(Arc::new(move |t: &[f64]| {
            Ok(vec![
                pauli(1) * c64(-0.5 * b * t[0].sin(), 0.0)
                    + pauli(2) * c64(0.5 * b * t[0].cos(), 0.0),
            ])
        })),
        Arc::new(|_: &[f64]| Ok(())),
    )
}

/// Resolves a builtin family name to the model and its default point.
/// Names: pure-qubit, qubit-bloch, qubit-spherical, qubit-r-theta, and
/// phase:B for the fixed-radius phase family.
pub fn builtin_family(name: &str) -> Result<(ParametricModel, Vec<f64>)> {
    use std::f64::consts::FRAC_PI_2;
    if let Some(arg) = name.strip_prefix("phase:") {
        let b: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("phase radius {arg:?} is not a number")))?;
        return Ok((qubit_phase(b)?, vec![0.0]));
    }
    match name {
        "pure-qubit" => Ok((pure_qubit(), vec![FRAC_PI_2, 0.0])),
        "qubit-bloch" => Ok((qubit_bloch_cartesian(), vec![0.0, 0.0, 0.5])),
        "qubit-spherical" => Ok((qubit_bloch_spherical(), vec![0.5, FRAC_PI_2, 0.0])),
        "qubit-r-theta" => Ok((qubit_r_theta(), vec![0.5, FRAC_PI_2])),
        other => Err(Error::Parse(format!(
            "unknown model {other:?}; builtins are pure-qubit, qubit-bloch, \
             qubit-spherical, qubit-r-theta, phase:B"
        ))),
    }
}

/// n independent copies: rho^(n) = rho tensor ... tensor rho, with gradients
/// by the Leibniz rule. The composite dimension dim^n must stay within
/// [`MAX_DIM`].
pub fn multi_copy(inner: &ParametricModel, n: usize) -> Result<ParametricModel> {
    if n == 0 {
        return Err(Error::Domain("copy count must be at least 1".into()));
    }
    let mut total: usize = 1;
    for _ in 0..n {
        total = total
            .checked_mul(inner.dim())
            .filter(|&d| d <= MAX_DIM)
            .ok_or_else(|| {
                Error::Domain(format!(
                    "dim^n = {}^{} exceeds the dense cap {}",
                    inner.dim(),
                    n,
                    MAX_DIM
                ))
            })?;
    }

    let m_state = inner.clone();
    let m_grad = inner.clone();
    let m_domain = inner.clone();
    ParametricModel::new(
        format!("{}^(x{})", inner.name(), n),
        total,
        inner.param_count(),
        Arc::new(move |t: &[f64]| {
            let pt = m_state.evaluate(t)?;
            let mut acc = pt.rho.matrix().clone();
            for _ in 1..n {
                acc = kron(&acc, pt.rho.matrix());
            }
            Ok(acc)
        }),
        Derivatives::Analytic(Arc::new(move |t: &[f64]| {
            let pt = m_grad.evaluate(t)?;
            let mut grads = Vec::with_capacity(pt.param_count());
            for g in &pt.grads {
                let mut total_grad: Option<CMatrix> = None;
                for k in 0..n {
                    let mut term = if k == 0 {
                        g.matrix().clone()
                    } else {
                        pt.rho.matrix().clone()
                    };
                    for pos in 1..n {
                        let factor = if pos == k { g.matrix() } else { pt.rho.matrix() };
                        term = kron(&term, factor);
                    }
                    total_grad = Some(match total_grad {
                        None => term,
                        Some(acc) => acc + term,
                    });
                }
                grads.push(total_grad.expect("n >= 1"));
            }
            Ok(grads)
        })),
        Arc::new(move |t: &[f64]| m_domain.evaluate(t).map(|_| ())),
    )
}
