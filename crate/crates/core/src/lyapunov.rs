//! Lyapunov-function machinery: `LV <= c1 V + c2` checks, drift
//! inner-product conditions, the pointwise upper-bound apparatus via a
//! weight `Phi` (the reweighted measure `Phi * mu`), and the combined
//! exponential-weight audit with its strict constant inequality in exact
//! arithmetic.

use std::sync::Arc;

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::grid::Point;
use crate::ladder::strict_constant_check;
use crate::linalg::SmallMat;

type SpatialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type SpatialGradFn = Arc<dyn Fn(&[f64]) -> Point + Send + Sync>;
type SpatialHessFn = Arc<dyn Fn(&[f64]) -> SmallMat + Send + Sync>;

/// Smoothed exponential profile: exp(K rho^r) for rho >= 1, and the C^2
/// polynomial a + b rho^2 + c rho^4 matching value and first two derivatives
/// at rho = 1 (smooth through the origin since it is a polynomial in |x|^2).
#[derive(Debug, Clone, Copy)]
pub struct SmoothedExpPower {
    pub k: f64,
    pub r: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl SmoothedExpPower {
    pub fn new(k: f64, r: f64) -> Result<Self> {
        if !(k > 0.0 && r > 0.0) {
            return Err(Error::Config("exp-power profile needs K > 0, r > 0".into()));
        }
        let e = k.exp();
        let c = e * k * r * (r - 2.0 + k * r) / 8.0;
        let b = (e * k * r - 4.0 * c) / 2.0;
        let a = e - b - c;
        Ok(SmoothedExpPower { k, r, a, b, c })
    }

    pub fn value(&self, rho: f64) -> f64 {
        if rho >= 1.0 {
            (self.k * rho.powf(self.r)).exp()
        } else {
            let r2 = rho * rho;
            self.a + self.b * r2 + self.c * r2 * r2
        }
    }

    /// f'(rho)/rho, finite through rho = 0.
    fn d1_over_rho(&self, rho: f64) -> f64 {
        if rho >= 1.0 {
            self.value(rho) * self.k * self.r * rho.powf(self.r - 2.0)
        } else {
            2.0 * self.b + 4.0 * self.c * rho * rho
        }
    }

    fn d2(&self, rho: f64) -> f64 {
        if rho >= 1.0 {
            let v = self.value(rho);
            let kr = self.k * self.r;
            v * (kr * (self.r - 1.0) * rho.powf(self.r - 2.0)
                + (kr * rho.powf(self.r - 1.0)).powi(2))
        } else {
            2.0 * self.b + 12.0 * self.c * rho * rho
        }
    }

    fn grad(&self, x: &[f64]) -> Point {
        let rho = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let g1 = self.d1_over_rho(rho);
        let mut g = [0.0; 3];
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi = g1 * xi;
        }
        g
    }

    fn hess(&self, x: &[f64]) -> SmallMat {
        let dim = x.len();
        let rho2: f64 = x.iter().map(|v| v * v).sum();
        let rho = rho2.sqrt();
        let g1 = self.d1_over_rho(rho);
        let d2 = self.d2(rho);
        let mut h = SmallMat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let radial = if rho2 > 1e-300 {
                    (d2 - g1) * x[i] * x[j] / rho2
                } else {
                    0.0
                };
                h.set(i, j, radial + if i == j { g1 } else { 0.0 });
            }
        }
        h
    }

    /// Minimum of the profile over [0, max_rho] (dense scan; the profile is
    /// increasing beyond 1 for positive K, r).
    pub fn min_value(&self, max_rho: f64) -> f64 {
        let mut min = f64::INFINITY;
        let n = 4096;
        let top = max_rho.min(1.0);
        for i in 0..=n {
            min = min.min(self.value(top * i as f64 / n as f64));
        }
        if max_rho > 1.0 {
            min = min.min(self.value(1.0));
        }
        min
    }
}

// ---------------------------------------------------------------------------
// Lyapunov functions

#[derive(Clone)]
pub struct LyapunovFunction {
    pub dim: usize,
    v: SpatialFn,
    grad: SpatialGradFn,
    hess: SpatialHessFn,
    pub family: String,
}

impl LyapunovFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.v)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Point {
        (self.grad)(x)
    }

    pub fn hess(&self, x: &[f64]) -> SmallMat {
        (self.hess)(x)
    }

    /// V = ln(|x|^2 + 1).
    pub fn log_sq(dim: usize) -> Self {
        LyapunovFunction {
            dim,
            v: Arc::new(move |x| (x.iter().map(|v| v * v).sum::<f64>() + 1.0).ln()),
            grad: Arc::new(move |x| {
                let s = x.iter().map(|v| v * v).sum::<f64>() + 1.0;
                let mut g = [0.0; 3];
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi = 2.0 * xi / s;
                }
                g
            }),
            hess: Arc::new(move |x| {
                let s = x.iter().map(|v| v * v).sum::<f64>() + 1.0;
                let mut h = SmallMat::zeros(dim);
                for i in 0..dim {
                    for j in 0..dim {
                        let v = -4.0 * x[i] * x[j] / (s * s) + if i == j { 2.0 / s } else { 0.0 };
                        h.set(i, j, v);
                    }
                }
                h
            }),
            family: "log_sq".into(),
        }
    }

    /// V = (ln(|x|^2 + 1))^2.
    pub fn log_sq_squared(dim: usize) -> Self {
        let base = Self::log_sq(dim);
        let b1 = base.clone();
        let b2 = base.clone();
        let b3 = base;
        LyapunovFunction {
            dim,
            v: Arc::new(move |x| b1.eval(x).powi(2)),
            grad: Arc::new(move |x| {
                let v = b2.eval(x);
                let g = b2.grad(x);
                let mut out = [0.0; 3];
                for (o, gi) in out.iter_mut().zip(g.iter()) {
                    *o = 2.0 * v * gi;
                }
                out
            }),
            hess: Arc::new(move |x| {
                let v = b3.eval(x);
                let g = b3.grad(x);
                let hv = b3.hess(x);
                let mut h = SmallMat::zeros(dim);
                for i in 0..dim {
                    for j in 0..dim {
                        h.set(i, j, 2.0 * g[i] * g[j] + 2.0 * v * hv.get(i, j));
                    }
                }
                h
            }),
            family: "log_sq_squared".into(),
        }
    }

    /// V = smoothed exp(K |x|^r).
    pub fn exp_power(dim: usize, k: f64, r: f64) -> Result<Self> {
        let prof = SmoothedExpPower::new(k, r)?;
        Ok(LyapunovFunction {
            dim,
            v: Arc::new(move |x| prof.value(x.iter().map(|v| v * v).sum::<f64>().sqrt())),
            grad: Arc::new(move |x| prof.grad(x)),
            hess: Arc::new(move |x| prof.hess(x)),
            family: format!("exp_power(K={k},r={r})"),
        })
    }

    /// V = |x|^2 (custom family used in tests).
    pub fn quadratic(dim: usize) -> Self {
        LyapunovFunction {
            dim,
            v: Arc::new(move |x| x.iter().map(|v| v * v).sum()),
            grad: Arc::new(move |x| {
                let mut g = [0.0; 3];
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi = 2.0 * xi;
                }
                g
            }),
            hess: Arc::new(move |_x| SmallMat::scaled_identity(dim, 2.0)),
            family: "quadratic".into(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let v = self.v.clone();
        let g = self.grad.clone();
        let h = self.hess.clone();
        let dim = self.dim;
        LyapunovFunction {
            dim,
            v: Arc::new(move |x| c * v(x)),
            grad: Arc::new(move |x| {
                let mut out = g(x);
                for o in &mut out {
                    *o *= c;
                }
                out
            }),
            hess: Arc::new(move |x| h(x).scale(c)),
            family: format!("{} (scaled)", self.family),
        }
    }

    /// Coercivity probe: V at the box corners exceeds V at the center.
    pub fn grows_on_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        let dim = self.dim;
        let mut center = [0.0; 3];
        for i in 0..dim {
            center[i] = 0.5 * (lo[i] + hi[i]);
        }
        let vc = self.eval(&center[..dim]);
        let corners = 1usize << dim;
        (0..corners).all(|mask| {
            let mut p = [0.0; 3];
            for i in 0..dim {
                p[i] = if mask & (1 << i) != 0 { hi[i] } else { lo[i] };
            }
            self.eval(&p[..dim]) > vc
        })
    }
}

/// L V = a^{ij} d_i d_j V + b . grad V for time-independent V.
pub fn l_of_v(coeffs: &CoefficientField, v: &LyapunovFunction, t: f64, x: &[f64]) -> Result<f64> {
    let a = coeffs.a(t, x)?;
    let b = coeffs.b(t, x)?;
    let h = v.hess(x);
    let g = v.grad(x);
    let dim = coeffs.dim();
    let mut acc = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            acc += a.get(i, j) * h.get(i, j);
        }
    }
    for i in 0..dim {
        acc += b[i] * g[i];
    }
    Ok(acc)
}

fn sample_points(lo: &[f64], hi: &[f64], dim: usize, samples: usize) -> Vec<Point> {
    // samples = intervals per axis; points include both ends (and 0 on
    // symmetric boxes when samples is even)
    let n = samples.max(2);
    let mut counts = [1usize; 3];
    counts[..dim].fill(n + 1);
    let total: usize = counts[..dim].iter().product();
    (0..total)
        .map(|flat| {
            let mut rest = flat;
            let mut p = [0.0; 3];
            for (axis, pa) in p.iter_mut().enumerate().take(dim) {
                let i = rest % (n + 1);
                rest /= n + 1;
                *pa = lo[axis] + (hi[axis] - lo[axis]) * i as f64 / n as f64;
            }
            p
        })
        .collect()
}

const TIME_SAMPLES: [f64; 3] = [0.0, 0.5, 1.0];

#[derive(Debug, Clone)]
pub struct LyapunovReport {
    /// max over samples of LV - c1 V - c2.
    pub max_violation: f64,
    /// Minimal c2 making the inequality hold on the sample set for this c1.
    pub minimal_c2: f64,
    pub pass: bool,
    pub samples: usize,
}

/// Sampled check of LV <= c1 V + c2 over a box.
pub fn lyapunov_check(
    v: &LyapunovFunction,
    coeffs: &CoefficientField,
    c1: f64,
    c2: f64,
    lo: &[f64],
    hi: &[f64],
    samples: usize,
) -> Result<LyapunovReport> {
    let dim = coeffs.dim();
    let pts = sample_points(lo, hi, dim, samples);
    let mut worst = f64::NEG_INFINITY;
    let mut minimal = f64::NEG_INFINITY;
    for t in TIME_SAMPLES {
        for p in &pts {
            let lv = l_of_v(coeffs, v, t, &p[..dim])?;
            let vv = v.eval(&p[..dim]);
            minimal = minimal.max(lv - c1 * vv);
            worst = worst.max(lv - c1 * vv - c2);
        }
    }
    Ok(LyapunovReport {
        max_violation: worst,
        minimal_c2: minimal,
        pass: worst <= 0.0,
        samples: pts.len() * TIME_SAMPLES.len(),
    })
}

#[derive(Debug, Clone, Copy)]
pub enum DriftForm {
    /// <b, x> <= k1 |x|^2 + k2.
    Quadratic { k1: f64, k2: f64 },
    /// <b, x> <= k1 |x|^2 ln(|x|+1) + k2.
    QuadLog { k1: f64, k2: f64 },
    /// <b, x> <= c1 - c2 |x|^r.
    Power { c1: f64, c2: f64, r: f64 },
}

#[derive(Debug, Clone)]
pub struct DriftReport {
    pub max_violation: f64,
    pub pass: bool,
    /// For the power form: the strict constant inequality
    /// c2 > 2 r K sup ||A||, decided in exact rational arithmetic
    /// (None when no K was supplied or the form is not Power).
    pub constant_strict: Option<bool>,
    pub samples: usize,
}

/// Sampled drift inner-product condition; for the power form optionally
/// decides c2 > 2 r K M with M = declared sup ||A||.
pub fn drift_condition(
    coeffs: &CoefficientField,
    form: DriftForm,
    k_exp: Option<f64>,
    lo: &[f64],
    hi: &[f64],
    samples: usize,
) -> Result<DriftReport> {
    let dim = coeffs.dim();
    let pts = sample_points(lo, hi, dim, samples);
    let mut worst = f64::NEG_INFINITY;
    for t in TIME_SAMPLES {
        for p in &pts {
            let b = coeffs.b(t, &p[..dim])?;
            let bx: f64 = (0..dim).map(|i| b[i] * p[i]).sum();
            let r2: f64 = p[..dim].iter().map(|v| v * v).sum();
            let bound = match form {
                DriftForm::Quadratic { k1, k2 } => k1 * r2 + k2,
                DriftForm::QuadLog { k1, k2 } => k1 * r2 * (r2.sqrt() + 1.0).ln() + k2,
                DriftForm::Power { c1, c2, r } => c1 - c2 * r2.sqrt().powf(r),
            };
            worst = worst.max(bx - bound);
        }
    }
    let constant_strict = match (form, k_exp) {
        (DriftForm::Power { c2, r, .. }, Some(k)) => {
            let m = coeffs.m_bound.ok_or_else(|| {
                Error::Refused("power drift constant check needs a declared sup ||A||".into())
            })?;
            Some(strict_constant_check(c2, r, k, m)?)
        }
        _ => None,
    };
    Ok(DriftReport {
        max_violation: worst,
        pass: worst <= 1e-9,
        constant_strict,
        samples: pts.len() * TIME_SAMPLES.len(),
    })
}

// ---------------------------------------------------------------------------
// weight functions and the pointwise bound

#[derive(Clone)]
pub struct WeightFunction {
    pub dim: usize,
    phi: SpatialFn,
    grad: SpatialGradFn,
    hess: SpatialHessFn,
    /// Declared strictly positive lower bound.
    pub lower_bound: f64,
    pub label: String,
}

impl WeightFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.phi)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Point {
        (self.grad)(x)
    }

    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Config("constant weight must be positive".into()));
        }
        Ok(WeightFunction {
            dim,
            phi: Arc::new(move |_x| c),
            grad: Arc::new(|_x| [0.0; 3]),
            hess: Arc::new(move |_x| SmallMat::zeros(dim)),
            lower_bound: c,
            label: format!("constant({c})"),
        })
    }

    /// Phi = smoothed exp(K |x|^r); the lower bound is the scanned minimum
    /// of the radial profile.
    pub fn exp_power(dim: usize, k: f64, r: f64) -> Result<Self> {
        let prof = SmoothedExpPower::new(k, r)?;
        let lower = prof.min_value(1.0);
        if !(lower > 0.0) {
            return Err(Error::Config(
                "smoothed exponential weight is not bounded below by a positive constant".into(),
            ));
        }
        Ok(WeightFunction {
            dim,
            phi: Arc::new(move |x| prof.value(x.iter().map(|v| v * v).sum::<f64>().sqrt())),
            grad: Arc::new(move |x| prof.grad(x)),
            hess: Arc::new(move |x| prof.hess(x)),
            lower_bound: lower,
            label: format!("exp_power(K={k},r={r})"),
        })
    }

    /// L Phi = a^{ij} d_i d_j Phi + b . grad Phi.
    pub fn l_phi(&self, coeffs: &CoefficientField, t: f64, x: &[f64]) -> Result<f64> {
        let a = coeffs.a(t, x)?;
        let b = coeffs.b(t, x)?;
        let h = (self.hess)(x);
        let g = (self.grad)(x);
        let dim = coeffs.dim();
        let mut acc = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                acc += a.get(i, j) * h.get(i, j);
            }
        }
        for i in 0..dim {
            acc += b[i] * g[i];
        }
        Ok(acc)
    }
}

/// A space-time integral together with its desk-scale finiteness evidence:
/// stable under shrinking the box by 1.25 (within 1%) and under halving the
/// resolution (within 5%).
#[derive(Debug, Clone, Copy)]
pub struct StableIntegral {
    pub value: f64,
    pub inner_value: f64,
    pub coarse_value: f64,
    pub box_stable: bool,
    pub refine_stable: bool,
}

pub const BOX_STABLE_REL: f64 = 0.01;
pub const REFINE_STABLE_REL: f64 = 0.05;

impl StableIntegral {
    pub fn finite(&self) -> bool {
        self.value.is_finite() && self.box_stable && self.refine_stable
    }
}

enum TimeAggregate {
    Integral,
    Sup,
}

fn stable_weighted_integral(
    mu: &DensityField,
    tau: f64,
    weight: &dyn Fn(f64, &[f64]) -> Result<f64>,
    aggregate: TimeAggregate,
) -> Result<StableIntegral> {
    let eval = |rho: &DensityField, shrink: f64| -> Result<f64> {
        let grid = rho.grid();
        let dim = grid.dim();
        let k_tau = grid.slice_at(tau)?;
        let w = grid.node_weights();
        let dt = grid.dt();
        let inside = |p: &Point| {
            (0..dim).all(|i| {
                p[i] >= grid.lo()[i] / shrink - 1e-12 && p[i] <= grid.hi()[i] / shrink + 1e-12
            })
        };
        let mut total = 0.0;
        let mut sup = 0.0f64;
        for k in 0..=k_tau {
            let t = grid.times()[k];
            let slice = rho.slice(k);
            let mut acc = 0.0;
            for (i, &v) in slice.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let p = grid.node_point(i);
                if !inside(&p) {
                    continue;
                }
                acc += w[i] * weight(t, &p[..dim])? * v;
            }
            let tw = if k == 0 || k == k_tau { 0.5 } else { 1.0 };
            total += tw * dt * acc;
            sup = sup.max(acc);
        }
        Ok(match aggregate {
            TimeAggregate::Integral => total,
            TimeAggregate::Sup => sup,
        })
    };
    let value = eval(mu, 1.0)?;
    let inner_value = eval(mu, 1.25)?;
    let coarse_value = match mu.coarsened() {
        Some(c) => eval(&c, 1.0)?,
        None => value,
    };
    let scale = value.abs().max(1e-300);
    Ok(StableIntegral {
        value,
        inner_value,
        coarse_value,
        box_stable: (value - inner_value).abs() <= BOX_STABLE_REL * scale,
        refine_stable: (value - coarse_value).abs() <= REFINE_STABLE_REL * scale,
    })
}

#[derive(Debug, Clone)]
pub struct PointwiseBoundReport {
    /// int Phi^{1+eps} dmu.
    pub h_weight: StableIntegral,
    /// int |L Phi|^{beta/2} Phi^{1-beta/2} dmu.
    pub h_lphi: StableIntegral,
    /// int |A grad Phi|^beta Phi^{1-beta} dmu.
    pub h_agrad: StableIntegral,
    /// sup_t int Phi rho dx.
    pub h_sup: StableIntegral,
    /// sup over [0,tau] x box of Phi(x) rho(t,x).
    pub c_emp: f64,
    /// Resolution sensitivity of c_emp: |c_emp - (same sup on the
    /// half-resolution subsample)|. The grid sup only samples the essential
    /// sup, so the constant is reported with this error bar.
    pub c_emp_error: f64,
    /// sup of Phi rho at t = 0 (initial domination constant).
    pub c_initial: f64,
    pub boundary_mass: f64,
    pub pass: bool,
}

/// Hypothesis functionals and the empirical pointwise constant for the
/// upper bound rho <= C_tau / Phi.
pub fn pointwise_bound_check(
    mu: &DensityField,
    phi: &WeightFunction,
    coeffs: &CoefficientField,
    tau: f64,
    beta: f64,
    epsilon: f64,
) -> Result<PointwiseBoundReport> {
    let grid = mu.grid();
    let dim = grid.dim();
    if beta <= (dim + 2) as f64 {
        return Err(Error::Refused(format!(
            "pointwise bound needs beta > d + 2 = {}, got {beta}",
            dim + 2
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Refused("epsilon must be positive".into()));
    }
    // Phi >= c on every cell
    for i in 0..grid.node_count() {
        let p = grid.node_point(i);
        let v = phi.eval(&p[..dim]);
        if v < phi.lower_bound - 1e-12 * phi.lower_bound.abs() {
            return Err(Error::Refused(format!(
                "weight below its declared lower bound at node {i}: {v} < {}",
                phi.lower_bound
            )));
        }
    }

    let h_weight = stable_weighted_integral(
        mu,
        tau,
        &|_t, x| Ok(phi.eval(x).powf(1.0 + epsilon)),
        TimeAggregate::Integral,
    )?;
    let h_lphi = stable_weighted_integral(
        mu,
        tau,
        &|t, x| {
            let lphi = phi.l_phi(coeffs, t, x)?;
            Ok(lphi.abs().powf(beta / 2.0) * phi.eval(x).powf(1.0 - beta / 2.0))
        },
        TimeAggregate::Integral,
    )?;
    let h_agrad = stable_weighted_integral(
        mu,
        tau,
        &|t, x| {
            let a = coeffs.a(t, x)?;
            let g = phi.grad(x);
            let ag = a.mul_vec(&g[..dim]);
            let mag = ag[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(mag.powf(beta) * phi.eval(x).powf(1.0 - beta))
        },
        TimeAggregate::Integral,
    )?;
    let h_sup = stable_weighted_integral(mu, tau, &|_t, x| Ok(phi.eval(x)), TimeAggregate::Sup)?;

    let sup_phi_rho = |rho: &DensityField| -> Result<f64> {
        let g = rho.grid();
        let kt = g.slice_at(tau)?;
        let mut c = 0.0f64;
        for k in 0..=kt {
            let slice = rho.slice(k);
            for (i, &v) in slice.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let p = g.node_point(i);
                c = c.max(phi.eval(&p[..g.dim()]) * v);
            }
        }
        Ok(c)
    };
    let c_emp = sup_phi_rho(mu)?;
    let c_emp_error = match mu.coarsened() {
        Some(coarse) => (c_emp - sup_phi_rho(&coarse)?).abs(),
        None => 0.0,
    };
    let c_initial = {
        let slice = mu.slice(0);
        let mut c = 0.0f64;
        for (i, &v) in slice.iter().enumerate() {
            let p = grid.node_point(i);
            c = c.max(phi.eval(&p[..dim]) * v);
        }
        c
    };
    let boundary_mass = mu.max_boundary_mass();
    let pass = h_weight.finite()
        && h_lphi.finite()
        && h_agrad.finite()
        && h_sup.finite()
        && c_emp.is_finite()
        && boundary_mass <= crate::bounds::BOUNDARY_MASS_LIMIT;
    Ok(PointwiseBoundReport {
        h_weight,
        h_lphi,
        h_agrad,
        h_sup,
        c_emp,
        c_emp_error,
        c_initial,
        boundary_mass,
        pass,
    })
}

#[derive(Debug, Clone)]
pub struct Example31Report {
    pub drift: DriftReport,
    /// int |b|^beta dmu.
    pub b_moment: StableIntegral,
    /// int exp((2K + eps)|x|^r) dmu.
    pub exp_moment: StableIntegral,
    /// sup_t int exp(K |x|^r) rho dx.
    pub sup_weight: StableIntegral,
    /// Minimal envelope constant: sup |b| exp(-2K|x|^r / beta) over the box.
    pub envelope_c: f64,
    /// sup of exp(K|x|^r) rho(0, .).
    pub initial_sup: f64,
    pub pass: bool,
    /// Present when the audit passed: the pointwise check with
    /// Phi = smoothed exp(K |x|^r).
    pub pointwise: Option<PointwiseBoundReport>,
}

/// Sufficient-condition audit for the exponential pointwise bound
/// rho(t,x) <= C(tau) exp(-K |x|^r): the power drift condition with its
/// strict constant inequality, the three integral conditions, the drift
/// envelope, and (on pass) the pointwise bound itself.
#[allow(clippy::too_many_arguments)]
pub fn example31_audit(
    coeffs: &CoefficientField,
    mu: &DensityField,
    k_exp: f64,
    r: f64,
    beta: f64,
    drift_c1: f64,
    drift_c2: f64,
    eps: f64,
    tau: f64,
) -> Result<Example31Report> {
    let grid = mu.grid();
    let dim = grid.dim();
    if beta <= (dim + 2) as f64 {
        return Err(Error::Refused(format!(
            "audit needs beta > d + 2 = {}, got {beta}",
            dim + 2
        )));
    }
    let drift = drift_condition(
        coeffs,
        DriftForm::Power {
            c1: drift_c1,
            c2: drift_c2,
            r,
        },
        Some(k_exp),
        grid.lo(),
        grid.hi(),
        64,
    )?;
    let b_moment = stable_weighted_integral(
        mu,
        tau,
        &|t, x| {
            let b = coeffs.b(t, x)?;
            Ok(b[..dim]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
                .powf(beta))
        },
        TimeAggregate::Integral,
    )?;
    let exp_moment = stable_weighted_integral(
        mu,
        tau,
        &|_t, x| {
            let rho = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(((2.0 * k_exp + eps) * rho.powf(r)).exp())
        },
        TimeAggregate::Integral,
    )?;
    let sup_weight = stable_weighted_integral(
        mu,
        tau,
        &|_t, x| {
            let rho = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok((k_exp * rho.powf(r)).exp())
        },
        TimeAggregate::Sup,
    )?;

    // envelope |b| <= C exp(2K/beta |x|^r): minimal C over grid and times
    let mut envelope_c = 0.0f64;
    for t in TIME_SAMPLES {
        for i in 0..grid.node_count() {
            let p = grid.node_point(i);
            let b = coeffs.b(t, &p[..dim])?;
            let mag = b[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            let rho = p[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            envelope_c = envelope_c.max(mag * (-2.0 * k_exp / beta * rho.powf(r)).exp());
        }
    }
    let initial_sup = {
        let slice = mu.slice(0);
        let mut c = 0.0f64;
        for (i, &v) in slice.iter().enumerate() {
            let p = grid.node_point(i);
            let rho = p[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            c = c.max((k_exp * rho.powf(r)).exp() * v);
        }
        c
    };

    let pass = drift.pass
        && drift.constant_strict == Some(true)
        && b_moment.finite()
        && exp_moment.finite()
        && sup_weight.finite()
        && envelope_c.is_finite()
        && initial_sup.is_finite();

    let pointwise = if pass {
        let phi = WeightFunction::exp_power(dim, k_exp, r)?;
        Some(pointwise_bound_check(mu, &phi, coeffs, tau, beta, 0.1)?)
    } else {
        None
    };

    Ok(Example31Report {
        drift,
        b_moment,
        exp_moment,
        sup_weight,
        envelope_c,
        initial_sup,
        pass,
        pointwise,
    })
}
