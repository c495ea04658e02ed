//! Estimation-theoretic bounds for multi-parameter quantum statistical models.
//!
//! The crate computes, for a finite-dimensional parametric family of density
//! matrices, the classic quantum Cramér-Rao bounds (SLD and RLD), the
//! Hayashi-Gill-Massar bound for separable qubit measurements, and the Holevo
//! Cramér-Rao bound via a self-contained dense semidefinite solver. It also
//! covers Gaussian shift models with their optimal linear measurements, the
//! Gaussian limit models arising from local asymptotic normality of qudit
//! ensembles, Bayesian single- and multi-parameter costs (including covariant
//! qubit estimation at finite copy number), and a seed-deterministic
//! Monte-Carlo validator for collective spin measurements.
//!
//! Conventions used throughout: hbar = 1, canonical pairs satisfy [Q, P] = i,
//! qubit states are written rho = (I + r . sigma)/2 with |r| <= 1, and cost
//! matrices contract mean-square errors as tr(C Sigma).

pub mod bayes;
pub mod bounds;
pub mod cli;
pub mod gaussian;
pub mod hcr;
pub mod matrix;
pub mod model;
pub mod qlan;
pub mod sdp;
pub mod sim;

mod error;

pub use error::{Error, Result};
