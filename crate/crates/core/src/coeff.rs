//! Coefficient fields of the parabolic operator
//! `L u = d_t u + a^{ij} d_i d_j u + b^i d_i u`, derived quantities
//! (row divergence of A, reduced drift), and empirical checks of the
//! structural hypotheses (ellipticity, Lipschitz bounds, local
//! integrability on balls).

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Point;
use crate::linalg::SmallMat;
use crate::testfn::TestFunction;

pub type MatFn = Arc<dyn Fn(f64, &[f64]) -> SmallMat + Send + Sync>;
pub type VecFn = Arc<dyn Fn(f64, &[f64]) -> Point + Send + Sync>;
/// deriv[i] = elementwise d/dx_i of A.
pub type MatDerivFn = Arc<dyn Fn(f64, &[f64]) -> [SmallMat; 3] + Send + Sync>;

const ASYMMETRY_TOL: f64 = 1e-9;

pub struct CoefficientField {
    dim: usize,
    a: MatFn,
    b: VecFn,
    da: Option<MatDerivFn>,
    /// Declared ellipticity lower bound (A >= alpha I).
    pub alpha: Option<f64>,
    /// Declared spatial Lipschitz constant of A.
    pub lambda: Option<f64>,
    /// Declared sup of the operator norm of A.
    pub m_bound: Option<f64>,
    domain: Option<(Vec<f64>, Vec<f64>)>,
    fd_step: f64,
    name: String,
    asymmetry_warned: AtomicBool,
}

impl std::fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("alpha", &self.alpha)
            .field("lambda", &self.lambda)
            .field("m_bound", &self.m_bound)
            .finish()
    }
}

impl CoefficientField {
    pub fn new(dim: usize, a: MatFn, b: VecFn) -> Self {
        assert!(dim >= 1 && dim <= 3);
        CoefficientField {
            dim,
            a,
            b,
            da: None,
            alpha: None,
            lambda: None,
            m_bound: None,
            domain: None,
            fd_step: 1e-5,
            name: "custom".into(),
            asymmetry_warned: AtomicBool::new(false),
        }
    }

    pub fn with_analytic_derivative(mut self, da: MatDerivFn) -> Self {
        self.da = Some(da);
        self
    }

    pub fn with_metadata(mut self, alpha: f64, lambda: f64, m_bound: f64) -> Self {
        self.alpha = Some(alpha);
        self.lambda = Some(lambda);
        self.m_bound = Some(m_bound);
        self
    }

    /// Restrict evaluation to a box; also ties the finite-difference step to
    /// the box width (width * 1e-5).
    pub fn with_domain(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let width = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| h - l)
            .fold(0.0f64, f64::max);
        self.fd_step = width * 1e-5;
        self.domain = Some((lo, hi));
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        assert!(h > 0.0);
        self.fd_step = h;
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    fn check_domain(&self, t: f64, x: &[f64]) -> Result<()> {
        if !(-1e-12..=1.0 + 1e-12).contains(&t) {
            return Err(Error::Domain(format!("time {t} outside [0, 1]")));
        }
        if let Some((lo, hi)) = &self.domain {
            for i in 0..self.dim {
                let pad = 1e-9 * (hi[i] - lo[i]);
                if x[i] < lo[i] - pad || x[i] > hi[i] + pad {
                    return Err(Error::Domain(format!(
                        "x[{i}] = {} outside coefficient domain [{}, {}]",
                        x[i], lo[i], hi[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// A(t,x), symmetrized. Warns once per field if the user closure carries
    /// asymmetry beyond 1e-9.
    pub fn a(&self, t: f64, x: &[f64]) -> Result<SmallMat> {
        self.check_domain(t, x)?;
        let raw = (self.a)(t, x);
        if raw.asymmetry() > ASYMMETRY_TOL && !self.asymmetry_warned.swap(true, Ordering::Relaxed) {
            log::warn!(
                "coefficient field '{}': A asymmetric by {:.3e} at t={t}, x={:?}; symmetrizing",
                self.name,
                raw.asymmetry(),
                &x[..self.dim]
            );
        }
        Ok(raw.symmetrized())
    }

    pub fn b(&self, t: f64, x: &[f64]) -> Result<Point> {
        self.check_domain(t, x)?;
        Ok((self.b)(t, x))
    }

    /// d/dx_i of A, analytic when supplied, otherwise central differences
    /// with the field's finite-difference step.
    pub fn da(&self, t: f64, x: &[f64]) -> Result<[SmallMat; 3]> {
        self.check_domain(t, x)?;
        if let Some(da) = &self.da {
            return Ok(da(t, x));
        }
        let h = self.fd_step;
        let mut out = [SmallMat::zeros(self.dim); 3];
        let mut xp = [0.0f64; 3];
        let mut xm = [0.0f64; 3];
        xp[..self.dim].copy_from_slice(&x[..self.dim]);
        xm[..self.dim].copy_from_slice(&x[..self.dim]);
        for axis in 0..self.dim {
            xp[axis] += h;
            xm[axis] -= h;
            let ap = (self.a)(t, &xp[..self.dim]).symmetrized();
            let am = (self.a)(t, &xm[..self.dim]).symmetrized();
            out[axis] = ap.sub(&am).scale(0.5 / h);
            xp[axis] = x[axis];
            xm[axis] = x[axis];
        }
        Ok(out)
    }

    /// Theta_A(t,x) = sum_j | sum_i d_i a^{ij} |.
    pub fn theta_a(&self, t: f64, x: &[f64]) -> Result<f64> {
        let da = self.da(t, x)?;
        let mut total = 0.0;
        for j in 0..self.dim {
            let mut s = 0.0;
            for (i, dai) in da.iter().enumerate().take(self.dim) {
                s += dai.get(i, j);
            }
            total += s.abs();
        }
        Ok(total)
    }

    /// Reduced drift b0^j = b^j - sum_i d_i a^{ij}.
    pub fn reduced_drift(&self, t: f64, x: &[f64]) -> Result<Point> {
        let da = self.da(t, x)?;
        let b = self.b(t, x)?;
        let mut out = [0.0; 3];
        for j in 0..self.dim {
            let mut div = 0.0;
            for (i, dai) in da.iter().enumerate().take(self.dim) {
                div += dai.get(i, j);
            }
            out[j] = b[j] - div;
        }
        Ok(out)
    }

    /// L u = d_t u + a^{ij} d_i d_j u + b^i d_i u, exact derivatives of u.
    pub fn eval_l(&self, u: &TestFunction, t: f64, x: &[f64]) -> Result<f64> {
        let a = self.a(t, x)?;
        let b = self.b(t, x)?;
        let hess = u.hess(t, x);
        let grad = u.grad(t, x);
        let mut second = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                second += a.get(i, j) * hess.get(i, j);
            }
        }
        let drift: f64 = (0..self.dim).map(|i| b[i] * grad[i]).sum();
        Ok(u.dt(t, x) + second + drift)
    }

    /// [`Self::estimate_alpha_lambda`] at the default sampling density:
    /// 64 points per axis, 16 time slices.
    pub fn estimate_alpha_lambda_default(
        &self,
        lo: &[f64],
        hi: &[f64],
    ) -> Result<CoefficientEstimates> {
        self.estimate_alpha_lambda(lo, hi, 64, 16)
    }

    /// Dense-sampling estimates of (alpha, lambda, M) over a box:
    /// min sampled eigenvalue, max sampled Lipschitz quotient along axis
    /// neighbours (plus a strided offset), max sampled operator norm.
    /// These bound the true constants from the optimistic side only;
    /// declared metadata always wins for the bound evaluators.
    pub fn estimate_alpha_lambda(
        &self,
        lo: &[f64],
        hi: &[f64],
        samples_per_axis: usize,
        time_samples: usize,
    ) -> Result<CoefficientEstimates> {
        if samples_per_axis < 2 {
            return Err(Error::Config("need at least 2 samples per axis".into()));
        }
        let n = samples_per_axis;
        let nt = time_samples.max(1);
        let dim = self.dim;
        let mut counts = [1usize; 3];
        counts[..dim].fill(n);
        let total: usize = counts[..dim].iter().product();
        let mut alpha = f64::INFINITY;
        let mut m = 0.0f64;
        let mut lambda = 0.0f64;

        let coord =
            |axis: usize, i: usize| lo[axis] + (hi[axis] - lo[axis]) * i as f64 / (n - 1) as f64;
        let point_of = |flat: usize| {
            let mut p = [0.0f64; 3];
            let mut rest = flat;
            for (axis, pa) in p.iter_mut().enumerate().take(dim) {
                *pa = coord(axis, rest % n);
                rest /= n;
            }
            p
        };

        for kt in 0..nt {
            let t = if nt == 1 {
                0.0
            } else {
                kt as f64 / (nt - 1) as f64
            };
            let mats: Vec<SmallMat> = (0..total)
                .map(|f| self.a(t, &point_of(f)[..dim]))
                .collect::<Result<_>>()?;
            for (flat, mat) in mats.iter().enumerate() {
                alpha = alpha.min(mat.min_eigenvalue());
                m = m.max(mat.operator_norm());
                // difference quotients along each axis at strides 1 and 7
                let mut rest = flat;
                let mut stride = 1usize;
                for axis in 0..dim {
                    let i = rest % n;
                    rest /= n;
                    for offset in [1usize, 7] {
                        if i + offset < n {
                            let other = &mats[flat + offset * stride];
                            let dx = coord(axis, i + offset) - coord(axis, i);
                            lambda = lambda.max(mat.sub(other).operator_norm() / dx.abs());
                        }
                    }
                    stride *= n;
                }
            }
        }

        let est = CoefficientEstimates {
            alpha,
            lambda,
            m,
            degenerate: !(alpha > 0.0),
        };
        if let Some(decl) = self.alpha {
            if est.alpha < decl - 1e-9 * decl.abs().max(1.0) {
                log::warn!(
                    "field '{}': sampled ellipticity {:.6e} below declared alpha {:.6e}",
                    self.name,
                    est.alpha,
                    decl
                );
            }
        }
        if let Some(decl) = self.lambda {
            if est.lambda > decl + 1e-9 * decl.abs().max(1.0) {
                log::warn!(
                    "field '{}': sampled Lipschitz quotient {:.6e} above declared lambda {:.6e}",
                    self.name,
                    est.lambda,
                    decl
                );
            }
        }
        Ok(est)
    }

    /// Local integrability predicates on a ball B:
    /// (C1) inf det A >= M1 > 0 and sup_t ||a^{ij}(t,.)||_{W^{p,1}(B)} <= M2,
    /// (C2) sup_t ||b^i(t,.)||_{L^p(B)} <= M3, with p > d + 2.
    pub fn check_c1_c2(
        &self,
        center: &[f64],
        radius: f64,
        p: f64,
        resolution: usize,
        time_samples: usize,
    ) -> Result<C1C2Report> {
        let d = self.dim;
        if p <= (d + 2) as f64 {
            return Err(Error::Refused(format!(
                "C1/C2 check requires p > d + 2 = {}, got {p}",
                d + 2
            )));
        }
        if resolution < 4 {
            return Err(Error::Config("ball resolution must be >= 4".into()));
        }
        let n = resolution;
        let h = 2.0 * radius / n as f64;
        let nt = time_samples.max(1);

        // tensor nodes of the bounding box; keep only those inside the ball,
        // trapezoid weights of the box (indicator quadrature)
        let mut counts = [1usize; 3];
        counts[..d].fill(n + 1);
        let total: usize = counts[..d].iter().product();
        let mut nodes: Vec<(Point, f64)> = Vec::new();
        for flat in 0..total {
            let mut rest = flat;
            let mut x = [0.0f64; 3];
            let mut w = 1.0;
            for dimi in 0..d {
                let i = rest % (n + 1);
                rest /= n + 1;
                x[dimi] = center[dimi] - radius + i as f64 * h;
                w *= h * if i == 0 || i == n { 0.5 } else { 1.0 };
            }
            let r2: f64 = (0..d).map(|i| (x[i] - center[i]).powi(2)).sum();
            if r2 <= radius * radius + 1e-14 {
                nodes.push((x, w));
            }
        }

        let mut m1 = f64::INFINITY;
        let mut m2 = 0.0f64;
        let mut m3 = 0.0f64;
        let mut failure_point = None;

        for kt in 0..nt {
            let t = if nt == 1 {
                0.0
            } else {
                kt as f64 / (nt - 1) as f64
            };
            // per-(i,j) L^p integrals of a and grad a, per-i of b
            let mut a_p = vec![0.0f64; d * d];
            let mut da_p = vec![0.0f64; d * d];
            let mut b_p = vec![0.0f64; d];
            for (x, w) in &nodes {
                let a = self.a(t, &x[..d])?;
                let da = self.da(t, &x[..d])?;
                let b = self.b(t, &x[..d])?;
                let det = a.det();
                if det < m1 {
                    m1 = det;
                    if det <= 0.0 && failure_point.is_none() {
                        failure_point = Some((t, *x));
                    }
                }
                for i in 0..d {
                    for j in 0..d {
                        a_p[i * d + j] += w * a.get(i, j).abs().powf(p);
                        let grad_norm: f64 =
                            (0..d).map(|k| da[k].get(i, j).powi(2)).sum::<f64>().sqrt();
                        da_p[i * d + j] += w * grad_norm.powf(p);
                    }
                    b_p[i] += w * b[i].abs().powf(p);
                }
            }
            for i in 0..d * d {
                m2 = m2.max(a_p[i].powf(1.0 / p) + da_p[i].powf(1.0 / p));
            }
            for bi in &b_p {
                m3 = m3.max(bi.powf(1.0 / p));
            }
        }

        Ok(C1C2Report {
            m1,
            m2,
            m3,
            c1_pass: m1 > 0.0 && m2.is_finite(),
            c2_pass: m3.is_finite(),
            failure_point,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CoefficientEstimates {
    pub alpha: f64,
    pub lambda: f64,
    pub m: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct C1C2Report {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub c1_pass: bool,
    pub c2_pass: bool,
    pub failure_point: Option<(f64, Point)>,
}

// ---------------------------------------------------------------------------
// named builtins

/// Constant diagonal diffusion with constant drift.
pub fn constant(dim: usize, a_diag: Vec<f64>, b_const: Vec<f64>) -> CoefficientField {
    assert_eq!(a_diag.len(), dim);
    assert_eq!(b_const.len(), dim);
    let alpha = a_diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let m = a_diag.iter().cloned().fold(0.0f64, f64::max);
    let diag = a_diag.clone();
    let bc = b_const.clone();
    let mut bvec = [0.0; 3];
    bvec[..dim].copy_from_slice(&bc);
    CoefficientField::new(
        dim,
        Arc::new(move |_t, _x| {
            let mut m = SmallMat::zeros(dim);
            for (i, v) in diag.iter().enumerate() {
                m.set(i, i, *v);
            }
            m
        }),
        Arc::new(move |_t, _x| bvec),
    )
    .with_analytic_derivative(Arc::new(move |_t, _x| [SmallMat::zeros(dim); 3]))
    .with_metadata(alpha, 0.0, m)
    .with_name("constant")
}

/// d = 1 heat benchmark: a = 1/2, b = 0.
pub fn heat(dim: usize) -> CoefficientField {
    constant(dim, vec![0.5; dim], vec![0.0; dim]).with_name("heat")
}

/// A = I, b = -x.
pub fn ornstein_uhlenbeck(dim: usize) -> CoefficientField {
    CoefficientField::new(
        dim,
        Arc::new(move |_t, _x| SmallMat::identity(dim)),
        Arc::new(move |_t, x| {
            let mut b = [0.0; 3];
            for i in 0..dim {
                b[i] = -x[i];
            }
            b
        }),
    )
    .with_analytic_derivative(Arc::new(move |_t, _x| [SmallMat::zeros(dim); 3]))
    .with_metadata(1.0, 0.0, 1.0)
    .with_name("ornstein_uhlenbeck")
}

/// A = a I, b(x) = c1 x + c3 |x|^2 x.
pub fn polynomial_drift(dim: usize, a: f64, c1: f64, c3: f64) -> CoefficientField {
    CoefficientField::new(
        dim,
        Arc::new(move |_t, _x| SmallMat::scaled_identity(dim, a)),
        Arc::new(move |_t, x| {
            let r2: f64 = x[..dim].iter().map(|v| v * v).sum();
            let mut b = [0.0; 3];
            for i in 0..dim {
                b[i] = c1 * x[i] + c3 * r2 * x[i];
            }
            b
        }),
    )
    .with_analytic_derivative(Arc::new(move |_t, _x| [SmallMat::zeros(dim); 3]))
    .with_metadata(a, 0.0, a)
    .with_name("polynomial_drift")
}

/// A(x) = (1 + eta sin(omega x_1)) I, b = 0; requires |eta| < 1.
/// alpha = 1 - |eta|, lambda = |eta| omega, M = 1 + |eta|.
pub fn perturbed_identity(dim: usize, eta: f64, omega: f64) -> CoefficientField {
    assert!(eta.abs() < 1.0, "perturbed_identity needs |eta| < 1");
    CoefficientField::new(
        dim,
        Arc::new(move |_t, x| SmallMat::scaled_identity(dim, 1.0 + eta * (omega * x[0]).sin())),
        Arc::new(move |_t, _x| [0.0; 3]),
    )
    .with_analytic_derivative(Arc::new(move |_t, x| {
        let mut out = [SmallMat::zeros(dim); 3];
        out[0] = SmallMat::scaled_identity(dim, eta * omega * (omega * x[0]).cos());
        out
    }))
    .with_metadata(1.0 - eta.abs(), eta.abs() * omega, 1.0 + eta.abs())
    .with_name("perturbed_identity")
}

pub use crate::coeff_table::from_table;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::TestFunction;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn one_d(
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> CoefficientField {
        CoefficientField::new(
            1,
            Arc::new(move |_t, x| SmallMat::from_rows(1, &[a(x[0])])),
            Arc::new(move |_t, x| [b(x[0]), 0.0, 0.0]),
        )
    }

    #[test]
    fn eval_l_examples() {
        // a = 1/2, b = 0, u = x^2 -> 1 everywhere
        let c = heat(1);
        let u = TestFunction::monomial_x2(0);
        assert_relative_eq!(c.eval_l(&u, 0.2, &[1.7]).unwrap(), 1.0);
        assert_relative_eq!(c.eval_l(&u, 0.9, &[-3.0]).unwrap(), 1.0);
        // u = t -> 1 (only the time term survives)
        let ut = TestFunction::time_coordinate();
        assert_relative_eq!(c.eval_l(&ut, 0.3, &[0.4]).unwrap(), 1.0);
        // a = 1, b = -x, u = x^2 at x = 1: 2a + b * 2x = 0
        let ou = ornstein_uhlenbeck(1);
        assert_relative_eq!(ou.eval_l(&u, 0.5, &[1.0]).unwrap(), 0.0);
        assert_relative_eq!(ou.eval_l(&u, 0.5, &[2.0]).unwrap(), 2.0 - 8.0);
    }

    #[test]
    fn eval_l_linearity() {
        let ou = ornstein_uhlenbeck(1);
        let u1 = TestFunction::bump(0.2, 0.8, [0.0, 0.0, 0.0], 2.0, 1);
        let u2 = TestFunction::monomial_x2(0);
        let combo = TestFunction::linear_combination(vec![(1.3, u1.clone()), (-0.7, u2.clone())]);
        for (t, x) in [(0.4, 0.3), (0.5, -1.2), (0.6, 1.9)] {
            let lhs = ou.eval_l(&combo, t, &[x]).unwrap();
            let rhs =
                1.3 * ou.eval_l(&u1, t, &[x]).unwrap() - 0.7 * ou.eval_l(&u2, t, &[x]).unwrap();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn theta_a_examples() {
        let c = constant(2, vec![1.0, 3.0], vec![0.0, 0.0]);
        assert_relative_eq!(c.theta_a(0.1, &[0.4, -0.2]).unwrap(), 0.0);

        // d=1, a = 1 + x^2 at x = 2 -> |2x| = 4
        let f = one_d(|x| 1.0 + x * x, |_| 0.0);
        assert_abs_diff_eq!(f.theta_a(0.0, &[2.0]).unwrap(), 4.0, epsilon = 1e-6);

        // d=2, a11 = a22 = 1 + x1, off-diagonal 0 -> 1
        let g = CoefficientField::new(
            2,
            Arc::new(|_t, x: &[f64]| SmallMat::from_rows(2, &[1.0 + x[0], 0.0, 0.0, 1.0 + x[0]])),
            Arc::new(|_t, _x| [0.0; 3]),
        );
        assert_abs_diff_eq!(g.theta_a(0.0, &[0.3, 0.8]).unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn reduced_drift_examples() {
        let c = constant(1, vec![2.0], vec![0.7]);
        assert_relative_eq!(c.reduced_drift(0.0, &[1.1]).unwrap()[0], 0.7);

        let f = one_d(|x| 1.0 + x * x, |_| 0.0);
        assert_abs_diff_eq!(
            f.reduced_drift(0.0, &[1.0]).unwrap()[0],
            -2.0,
            epsilon = 1e-6
        );

        let ou = ornstein_uhlenbeck(1);
        assert_relative_eq!(ou.reduced_drift(0.0, &[0.5]).unwrap()[0], -0.5);
    }

    #[test]
    fn fd_derivative_second_order() {
        // halving h must cut the error by >= 3.5x on smooth coefficients
        let f = |h: f64| {
            one_d(|x| (1.5 + x.sin()).powi(2), |_| 0.0)
                .with_fd_step(h)
                .da(0.0, &[0.7])
                .unwrap()[0]
                .get(0, 0)
        };
        let exact = 2.0 * (1.5 + 0.7f64.sin()) * 0.7f64.cos();
        let e1 = (f(1e-2) - exact).abs();
        let e2 = (f(5e-3) - exact).abs();
        assert!(e1 / e2 >= 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn estimate_examples() {
        let id = constant(1, vec![1.0], vec![0.0]);
        let est = id.estimate_alpha_lambda(&[-3.0], &[3.0], 64, 4).unwrap();
        assert_relative_eq!(est.alpha, 1.0);
        assert_relative_eq!(est.m, 1.0);
        assert_relative_eq!(est.lambda, 0.0);
        assert!(!est.degenerate);

        // a(x) = 2 + sin x: analytic alpha = 1, lambda = 1, M = 3;
        // independent oracle: dense 1e5-point scan of values and quotients
        let f = one_d(|x| 2.0 + x.sin(), |_| 0.0);
        let est = f.estimate_alpha_lambda(&[-10.0], &[10.0], 256, 4).unwrap();
        let (mut scan_min, mut scan_max, mut scan_lip) = (f64::INFINITY, 0.0f64, 0.0f64);
        let n = 100_000;
        let at = |i: usize| -10.0 + 20.0 * i as f64 / n as f64;
        let mut prev = 2.0 + at(0).sin();
        scan_min = scan_min.min(prev);
        scan_max = scan_max.max(prev);
        for i in 1..=n {
            let v = 2.0 + at(i).sin();
            scan_lip = scan_lip.max((v - prev).abs() / (at(i) - at(i - 1)));
            scan_min = scan_min.min(v);
            scan_max = scan_max.max(v);
            prev = v;
        }
        assert!((scan_min - 1.0).abs() < 1e-6 && (scan_max - 3.0).abs() < 1e-6);
        assert!(scan_lip <= 1.0 + 1e-6 && scan_lip > 0.999);
        // production estimates stay within the analytic/oracle ranges
        assert!(est.alpha >= scan_min - 1e-9 && est.alpha <= 1.01);
        assert!(est.lambda <= scan_lip + 1e-9);
        assert!(est.lambda > 0.9, "dense scan should approach sup |cos|");
        assert!(est.m <= scan_max + 1e-12 && est.m > 2.99);

        let diag = constant(2, vec![1.0, 3.0], vec![0.0, 0.0]);
        let est = diag
            .estimate_alpha_lambda(&[-2.0, -2.0], &[2.0, 2.0], 16, 2)
            .unwrap();
        assert_relative_eq!(est.alpha, 1.0);
        assert_relative_eq!(est.m, 3.0);
        assert_relative_eq!(est.lambda, 0.0);
    }

    #[test]
    fn degenerate_flagged() {
        let f = one_d(|x| x * x, |_| 0.0);
        let est = f.estimate_alpha_lambda(&[-1.0], &[1.0], 65, 2).unwrap();
        assert!(est.degenerate);
    }

    #[test]
    fn c1_c2_examples() {
        let id = constant(1, vec![1.0], vec![0.0]);
        let rep = id.check_c1_c2(&[0.0], 1.0, 4.0, 256, 3).unwrap();
        assert_relative_eq!(rep.m1, 1.0);
        assert_abs_diff_eq!(rep.m3, 0.0);
        assert!(rep.c1_pass && rep.c2_pass);

        // d=1, a=1, b(x)=x on B(0,1), p=4: M3 = (2/5)^{1/4}
        let f = one_d(|_| 1.0, |x| x);
        let rep = f.check_c1_c2(&[0.0], 1.0, 4.0, 2048, 1).unwrap();
        assert_relative_eq!(rep.m3, 0.4f64.powf(0.25), epsilon = 1e-5);

        // A = diag(x1^2, 1) on a ball containing x1 = 0: C1 fails
        let g = CoefficientField::new(
            2,
            Arc::new(|_t, x: &[f64]| SmallMat::from_rows(2, &[x[0] * x[0], 0.0, 0.0, 1.0])),
            Arc::new(|_t, _x| [0.0; 3]),
        );
        let rep = g.check_c1_c2(&[0.0, 0.0], 1.0, 5.0, 32, 1).unwrap();
        assert!(!rep.c1_pass);
        assert!(rep.failure_point.is_some());
    }

    #[test]
    fn c1_c2_requires_large_p() {
        let id = constant(1, vec![1.0], vec![0.0]);
        assert!(id.check_c1_c2(&[0.0], 1.0, 3.0, 16, 1).is_err());
    }

    #[test]
    fn domain_error_outside_box() {
        let f = one_d(|_| 1.0, |_| 0.0).with_domain(vec![-1.0], vec![1.0]);
        assert!(f.a(0.5, &[0.5]).is_ok());
        assert!(f.a(0.5, &[2.0]).is_err());
        assert!(f.a(1.5, &[0.5]).is_err());
    }
}
