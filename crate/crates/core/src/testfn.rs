//! Smooth test functions with exact derivatives.
//!
//! Weak-residual checks integrate `L u` against the density, so every member
//! carries closed-form time derivative, gradient and Hessian. Bump profiles
//! are built from `exp(1 - 1/(1 - r))` and a logistic smoothstep
//! `s(th) = 1/(1 + exp(1/th - 1/(1-th)))`, both of which glue to zero with
//! all derivatives vanishing at the support boundary.

use std::sync::Arc;

use crate::grid::Point;
use crate::linalg::SmallMat;

type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(f64, &[f64]) -> Point + Send + Sync>;
type HessFn = Arc<dyn Fn(f64, &[f64]) -> SmallMat + Send + Sync>;

#[derive(Clone, Debug)]
pub enum Support {
    /// Time interval (t0, t1) times the closed spatial ball B(center, radius).
    Compact {
        t0: f64,
        t1: f64,
        center: Point,
        radius: f64,
    },
    /// Unbounded test helpers (monomials); refused by weak-residual checks.
    Global,
}

#[derive(Clone)]
pub struct TestFunction {
    dim: usize,
    u: ScalarFn,
    du_t: ScalarFn,
    grad: GradFn,
    hess: HessFn,
    pub support: Support,
    pub label: String,
}

impl TestFunction {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        (self.u)(t, x)
    }

    pub fn dt(&self, t: f64, x: &[f64]) -> f64 {
        (self.du_t)(t, x)
    }

    pub fn grad(&self, t: f64, x: &[f64]) -> Point {
        (self.grad)(t, x)
    }

    pub fn hess(&self, t: f64, x: &[f64]) -> SmallMat {
        (self.hess)(t, x)
    }

    /// True if the declared support lies strictly inside (0, horizon) x box.
    pub fn supported_inside(&self, horizon: f64, lo: &[f64], hi: &[f64]) -> bool {
        match &self.support {
            Support::Global => false,
            Support::Compact {
                t0,
                t1,
                center,
                radius,
            } => {
                let time_ok = *t0 > 0.0 && *t1 < horizon && t0 < t1;
                let space_ok =
                    (0..self.dim).all(|i| center[i] - radius > lo[i] && center[i] + radius < hi[i]);
                time_ok && space_ok
            }
        }
    }

    /// Product bump phi(t) psi(x), sup-normalized to 1 at the center.
    /// phi uses the 1-d profile on (t0, t1), psi the radial profile on
    /// B(center, radius).
    pub fn bump(t0: f64, t1: f64, center: Point, radius: f64, dim: usize) -> TestFunction {
        assert!(t1 > t0 && radius > 0.0);
        let tm = 0.5 * (t0 + t1);
        let th = 0.5 * (t1 - t0);
        let phi = move |t: f64| bump_profile(((t - tm) / th).powi(2));
        let dphi = move |t: f64| {
            let s = (t - tm) / th;
            bump_profile_d(s * s) * 2.0 * s / th
        };
        let rho = move |x: &[f64]| -> f64 {
            (0..dim).map(|i| (x[i] - center[i]).powi(2)).sum::<f64>() / (radius * radius)
        };
        let psi = move |x: &[f64]| bump_profile(rho(x));
        let u = move |t: f64, x: &[f64]| phi(t) * psi(x);
        let du_t = move |t: f64, x: &[f64]| dphi(t) * bump_profile(rho(x));
        let grad = move |t: f64, x: &[f64]| {
            let mut g = [0.0; 3];
            let d1 = bump_profile_d(rho(x));
            let c = phi(t) * d1 * 2.0 / (radius * radius);
            for i in 0..dim {
                g[i] = c * (x[i] - center[i]);
            }
            g
        };
        let hess = move |t: f64, x: &[f64]| {
            let r = rho(x);
            let (d1, d2) = (bump_profile_d(r), bump_profile_dd(r));
            let s = 2.0 / (radius * radius);
            let mut h = SmallMat::zeros(dim);
            for i in 0..dim {
                for j in 0..dim {
                    let outer = d2 * s * s * (x[i] - center[i]) * (x[j] - center[j]);
                    let diag = if i == j { d1 * s } else { 0.0 };
                    h.set(i, j, phi(t) * (outer + diag));
                }
            }
            h
        };
        TestFunction {
            dim,
            u: Arc::new(u),
            du_t: Arc::new(du_t),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
            support: Support::Compact {
                t0,
                t1,
                center,
                radius,
            },
            label: format!("bump(c={:.2},r={:.2})", center[0], radius),
        }
    }

    /// Time ramp (up on [r0,r1], down on [f0,f1]) times a radial plateau
    /// (identically 1 for |x-c| <= r_in, 0 outside r_out). The steep time
    /// slope makes this member sensitive to spurious mass injected during
    /// the ramp window.
    pub fn ramp_plateau(
        rise: (f64, f64),
        fall: (f64, f64),
        center: Point,
        r_in: f64,
        r_out: f64,
        dim: usize,
    ) -> TestFunction {
        assert!(rise.0 < rise.1 && rise.1 <= fall.0 && fall.0 < fall.1);
        assert!(0.0 < r_in && r_in < r_out);
        let sca = move |t: f64| smoothstep((t - rise.0) / (rise.1 - rise.0));
        let scb = move |t: f64| smoothstep((fall.1 - t) / (fall.1 - fall.0));
        let s_t = move |t: f64| sca(t) * scb(t);
        let ds_t = move |t: f64| {
            smoothstep_d((t - rise.0) / (rise.1 - rise.0)) / (rise.1 - rise.0) * scb(t)
                - sca(t) * smoothstep_d((fall.1 - t) / (fall.1 - fall.0)) / (fall.1 - fall.0)
        };
        // sigma(x) = (r_out^2 - |x-c|^2) / (r_out^2 - r_in^2)
        let denom = r_out * r_out - r_in * r_in;
        let sigma = move |x: &[f64]| {
            (r_out * r_out - (0..dim).map(|i| (x[i] - center[i]).powi(2)).sum::<f64>()) / denom
        };
        let chi = move |x: &[f64]| smoothstep(sigma(x));
        let u = move |t: f64, x: &[f64]| s_t(t) * chi(x);
        let du_t = move |t: f64, x: &[f64]| ds_t(t) * chi(x);
        let grad = move |t: f64, x: &[f64]| {
            let mut g = [0.0; 3];
            let c = s_t(t) * smoothstep_d(sigma(x)) * (-2.0 / denom);
            for i in 0..dim {
                g[i] = c * (x[i] - center[i]);
            }
            g
        };
        let hess = move |t: f64, x: &[f64]| {
            let sg = sigma(x);
            let (d1, d2) = (smoothstep_d(sg), smoothstep_dd(sg));
            let mut h = SmallMat::zeros(dim);
            for i in 0..dim {
                for j in 0..dim {
                    let outer =
                        d2 * (4.0 / (denom * denom)) * (x[i] - center[i]) * (x[j] - center[j]);
                    let diag = if i == j { d1 * (-2.0 / denom) } else { 0.0 };
                    h.set(i, j, s_t(t) * (outer + diag));
                }
            }
            h
        };
        TestFunction {
            dim,
            u: Arc::new(u),
            du_t: Arc::new(du_t),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
            support: Support::Compact {
                t0: rise.0,
                t1: fall.1,
                center,
                radius: r_out,
            },
            label: "ramp_plateau".into(),
        }
    }

    /// u = x_axis^2 (global support; test helper).
    pub fn monomial_x2(axis: usize) -> TestFunction {
        TestFunction {
            dim: axis + 1,
            u: Arc::new(move |_t, x: &[f64]| x[axis] * x[axis]),
            du_t: Arc::new(|_t, _x| 0.0),
            grad: Arc::new(move |_t, x: &[f64]| {
                let mut g = [0.0; 3];
                g[axis] = 2.0 * x[axis];
                g
            }),
            hess: Arc::new(move |_t, _x| {
                let mut h = SmallMat::zeros(axis + 1);
                h.set(axis, axis, 2.0);
                h
            }),
            support: Support::Global,
            label: "x^2".into(),
        }
    }

    /// u = t (global support; test helper).
    pub fn time_coordinate() -> TestFunction {
        TestFunction {
            dim: 1,
            u: Arc::new(|t, _x| t),
            du_t: Arc::new(|_t, _x| 1.0),
            grad: Arc::new(|_t, _x| [0.0; 3]),
            hess: Arc::new(|_t, _x| SmallMat::zeros(1)),
            support: Support::Global,
            label: "t".into(),
        }
    }

    pub fn linear_combination(terms: Vec<(f64, TestFunction)>) -> TestFunction {
        assert!(!terms.is_empty());
        let dim = terms.iter().map(|(_, f)| f.dim).max().unwrap();
        let t1 = terms.clone();
        let t2 = terms.clone();
        let t3 = terms.clone();
        let t4 = terms.clone();
        TestFunction {
            dim,
            u: Arc::new(move |t, x| t1.iter().map(|(c, f)| c * f.eval(t, x)).sum()),
            du_t: Arc::new(move |t, x| t2.iter().map(|(c, f)| c * f.dt(t, x)).sum()),
            grad: Arc::new(move |t, x| {
                let mut g = [0.0; 3];
                for (c, f) in &t3 {
                    let fg = f.grad(t, x);
                    for (gi, fgi) in g.iter_mut().zip(fg.iter()) {
                        *gi += c * fgi;
                    }
                }
                g
            }),
            hess: Arc::new(move |t, x| {
                let mut h = SmallMat::zeros(dim);
                for (c, f) in &t4 {
                    let fh = f.hess(t, x);
                    for i in 0..f.dim.min(dim) {
                        for j in 0..f.dim.min(dim) {
                            h.set(i, j, h.get(i, j) + c * fh.get(i, j));
                        }
                    }
                }
                h
            }),
            support: Support::Global,
            label: "combination".into(),
        }
    }
}

/// Standard 5-member family for the weak-residual check on a solve over
/// [0, horizon] x box: four classic bumps of varied widths/centers plus one
/// ramp-plateau detector.
pub fn standard_bump_family(
    n: usize,
    horizon: f64,
    lo: &[f64],
    hi: &[f64],
    dim: usize,
) -> Vec<TestFunction> {
    assert!(n >= 2);
    let t0 = 0.12 * horizon;
    let t1 = 0.88 * horizon;
    let half_span = (0..dim)
        .map(|i| 0.5 * (hi[i] - lo[i]))
        .fold(f64::INFINITY, f64::min);
    let mid: Point = {
        let mut m = [0.0; 3];
        for i in 0..dim {
            m[i] = 0.5 * (lo[i] + hi[i]);
        }
        m
    };
    let offsets = [0.0, 0.25, -0.25, 0.45, -0.45, 0.6, -0.6];
    let mut family = Vec::new();
    for k in 0..n - 1 {
        let radius = (0.15 + 0.07 * k as f64) * half_span;
        let mut center = mid;
        center[0] += offsets[k % offsets.len()] * half_span;
        family.push(TestFunction::bump(t0, t1, center, radius, dim));
    }
    family.push(TestFunction::ramp_plateau(
        (0.10 * horizon, 0.40 * horizon),
        (0.60 * horizon, 0.90 * horizon),
        mid,
        0.45 * half_span,
        0.80 * half_span,
        dim,
    ));
    family
}

/// Spatial-only bump with exact gradient, for initial-condition tests.
#[derive(Clone, Debug)]
pub struct SpatialBump {
    pub center: Point,
    pub radius: f64,
    pub dim: usize,
}

impl SpatialBump {
    pub fn new(center: Point, radius: f64, dim: usize) -> Self {
        SpatialBump {
            center,
            radius,
            dim,
        }
    }

    fn rho(&self, x: &[f64]) -> f64 {
        (0..self.dim)
            .map(|i| (x[i] - self.center[i]).powi(2))
            .sum::<f64>()
            / (self.radius * self.radius)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        bump_profile(self.rho(x))
    }

    pub fn grad(&self, x: &[f64]) -> Point {
        let c = bump_profile_d(self.rho(x)) * 2.0 / (self.radius * self.radius);
        let mut g = [0.0; 3];
        for i in 0..self.dim {
            g[i] = c * (x[i] - self.center[i]);
        }
        g
    }
}

/// Spatial bump family spread over the central part of the box.
pub fn zeta_family(n: usize, lo: &[f64], hi: &[f64], dim: usize) -> Vec<SpatialBump> {
    let half_span = (0..dim)
        .map(|i| 0.5 * (hi[i] - lo[i]))
        .fold(f64::INFINITY, f64::min);
    let mut mid = [0.0; 3];
    for i in 0..dim {
        mid[i] = 0.5 * (lo[i] + hi[i]);
    }
    (0..n)
        .map(|k| {
            let mut center = mid;
            center[0] += (k as f64 - (n - 1) as f64 / 2.0) * 0.3 * half_span / n as f64 * 2.0;
            SpatialBump::new(center, (0.2 + 0.08 * (k % 3) as f64) * half_span, dim)
        })
        .collect()
}

// profile exp(1 - 1/(1 - r)) on r < 1, and its first two derivatives in r
#[inline]
pub fn bump_profile(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r)).exp()
    }
}

#[inline]
fn bump_profile_d(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        let inv = 1.0 / (1.0 - r);
        -bump_profile(r) * inv * inv
    }
}

#[inline]
fn bump_profile_dd(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        let inv = 1.0 / (1.0 - r);
        bump_profile(r) * (inv.powi(4) - 2.0 * inv.powi(3))
    }
}

// logistic smoothstep: 0 for th <= 0, 1 for th >= 1, C-infinity in between
#[inline]
pub fn smoothstep(th: f64) -> f64 {
    if th <= 0.0 {
        0.0
    } else if th >= 1.0 {
        1.0
    } else {
        let z = 1.0 / (1.0 - th) - 1.0 / th;
        1.0 / (1.0 + (-z).exp())
    }
}

#[inline]
fn smoothstep_d(th: f64) -> f64 {
    if th <= 0.0 || th >= 1.0 {
        0.0
    } else {
        let s = smoothstep(th);
        let zp = 1.0 / ((1.0 - th) * (1.0 - th)) + 1.0 / (th * th);
        s * (1.0 - s) * zp
    }
}

#[inline]
fn smoothstep_dd(th: f64) -> f64 {
    if th <= 0.0 || th >= 1.0 {
        0.0
    } else {
        let s = smoothstep(th);
        let zp = 1.0 / ((1.0 - th) * (1.0 - th)) + 1.0 / (th * th);
        let zpp = 2.0 / (1.0 - th).powi(3) - 2.0 / th.powi(3);
        s * (1.0 - s) * ((1.0 - 2.0 * s) * zp * zp + zpp)
    }
}
