//! Closed-form Gaussian reference solutions and functional values used as
//! ground truth by the tests and the acceptance suite.

use crate::error::{Error, Result};
use crate::field::LogWeight;

/// Product Gaussian N(mean, diag(var)).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl GaussianState {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.len() != var.len() || mean.is_empty() {
            return Err(Error::Config("mean/variance length mismatch".into()));
        }
        if var.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("variances must be positive".into()));
        }
        Ok(GaussianState { mean, var })
    }

    pub fn standard(dim: usize) -> Self {
        GaussianState {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for i in 0..self.dim() {
            let z = x[i] - self.mean[i];
            v *= (-z * z / (2.0 * self.var[i])).exp()
                / (2.0 * std::f64::consts::PI * self.var[i]).sqrt();
        }
        v
    }

    /// entropy = integral of rho ln rho = -sum_i (1/2) ln(2 pi e var_i).
    pub fn entropy(&self) -> f64 {
        let tau = 2.0 * std::f64::consts::PI * std::f64::consts::E;
        -self.var.iter().map(|v| 0.5 * (tau * v).ln()).sum::<f64>()
    }

    /// integral of |grad rho|^2 / rho = sum_i 1/var_i.
    pub fn fisher(&self) -> f64 {
        self.var.iter().map(|v| 1.0 / v).sum()
    }

    /// L^p norm of the density, closed Gaussian product formula.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0);
        let mut v = 1.0;
        for &s in &self.var {
            let tau = 2.0 * std::f64::consts::PI * s;
            v *= p.powf(-0.5 / p) * tau.powf((1.0 - p) / (2.0 * p));
        }
        v
    }

    /// E[x_i^2] summed: second moment about the origin.
    pub fn second_moment(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.var[i] + self.mean[i] * self.mean[i])
            .sum()
    }
}

/// d = 1, b = 0, a = 1/2: the solution at time t is N(0, sigma0^2 + t).
pub fn heat_solution(sigma0_sq: f64, t: f64) -> GaussianState {
    GaussianState::new(vec![0.0], vec![sigma0_sq + t]).unwrap()
}

/// d = 1, b = 0, constant diffusion a: N(0, sigma0^2 + 2 a t).
pub fn diffusion_solution(sigma0_sq: f64, a: f64, t: f64) -> GaussianState {
    GaussianState::new(vec![0.0], vec![sigma0_sq + 2.0 * a * t]).unwrap()
}

/// d = 1, a = 1, b = -x: mean m0 e^{-t}, variance 1 + (sigma0^2 - 1) e^{-2t}
/// (the variance solves var' = 2 - 2 var).
pub fn ou_solution(m0: f64, sigma0_sq: f64, t: f64) -> GaussianState {
    let mean = m0 * (-t).exp();
    let var = 1.0 + (sigma0_sq - 1.0) * (-2.0 * t).exp();
    GaussianState::new(vec![mean], vec![var]).unwrap()
}

/// Closed-form functional bundle for a Gaussian state (log moments by
/// high-resolution quadrature, d = 1 only).
#[derive(Debug, Clone)]
pub struct GaussianFunctionals {
    pub entropy: f64,
    pub fisher: f64,
    /// integral of (ln max(|x|,1))^2 rho.
    pub log_moment2: f64,
    /// integral of (ln max(|x|,1))^4 rho.
    pub log_moment4: f64,
    /// integral of (ln(1+|x|))^4 rho.
    pub log1p_moment4: f64,
    /// L^2 norm of the density (closed Gaussian product formula).
    pub l2_norm: f64,
}

pub fn gaussian_functionals(state: &GaussianState) -> GaussianFunctionals {
    GaussianFunctionals {
        entropy: state.entropy(),
        fisher: state.fisher(),
        log_moment2: log_moment_quadrature(state, 2, LogWeight::MaxLog),
        log_moment4: log_moment_quadrature(state, 4, LogWeight::MaxLog),
        log1p_moment4: log_moment_quadrature(state, 4, LogWeight::Log1p),
        l2_norm: state.lp_norm(2.0),
    }
}

/// High-resolution 1-d trapezoid quadrature of W(x)^k rho(x), on
/// [-12 sigma, 12 sigma] around the mean with 10^6 points. Independent of the
/// production grid quadrature; only d = 1 states are supported.
pub fn log_moment_quadrature(state: &GaussianState, k: u32, weight: LogWeight) -> f64 {
    assert_eq!(state.dim(), 1, "oracle log moments are 1-d");
    let sigma = state.var[0].sqrt();
    let (lo, hi) = (state.mean[0] - 12.0 * sigma, state.mean[0] + 12.0 * sigma);
    let n = 1_000_000usize;
    let h = (hi - lo) / n as f64;
    let f = |x: f64| weight.eval(&[x], 1).powi(k as i32) * state.density(&[x]);
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..n {
        acc += f(lo + i as f64 * h);
    }
    acc * h
}

/// Frozen quadrature constants for N(0,1), d = 1 (stated error < 1e-14):
/// integrals of (ln max(|x|,1))^k and (ln(1+|x|))^k against the density.
pub mod std_normal {
    pub const MAXLOG_MOMENT_1: f64 = 0.12205043635709779;
    pub const MAXLOG_MOMENT_2: f64 = 0.06943390065481026;
    pub const MAXLOG_MOMENT_4: f64 = 0.03745350978858784;
    pub const LOG1P_MOMENT_1: f64 = 0.5348222957178954;
    pub const LOG1P_MOMENT_2: f64 = 0.386843601374649;
    pub const LOG1P_MOMENT_4: f64 = 0.30029980461471765;
    pub const ENTROPY: f64 = -1.4189385332046727;
}
