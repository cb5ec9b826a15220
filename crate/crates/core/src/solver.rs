//! Forward-in-time solution of `d/dt rho = d_i d_j (a^{ij} rho) - d_i (b^i rho)`
//! on the truncated box, in conservative flux form with zero total flux at the
//! box faces, plus residual checkers for the weak equation and the initial
//! condition.
//!
//! Interface fluxes along each axis: `F = ((a rho)_{k+1} - (a rho)_k)/h -
//! b_{k+1/2} (rho_k + rho_{k+1})/2`; boundary nodes own half cells so the
//! trapezoid mass telescopes exactly. Cross-derivative terms (off-diagonal A)
//! use centered mixed differences and stay explicit in time even under
//! Crank-Nicolson, which keeps the implicit operator per-axis tridiagonal.

use std::sync::Arc;

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::field::{DensityField, MassMode, ScalarField};
use crate::grid::SpaceTimeGrid;
use crate::linalg::SmallMat;
use crate::report::Verdict;
use crate::testfn::{SpatialBump, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Positivity {
    ClipRenormalize,
    Off,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub positivity: Positivity,
    pub cfl_safety: f64,
    pub mass_mode: MassMode,
}

impl SolverConfig {
    /// Time weight of the implicit side: 0 for explicit, 1/2 for
    /// Crank-Nicolson.
    pub fn theta(&self) -> f64 {
        match self.scheme {
            Scheme::Explicit => 0.0,
            Scheme::CrankNicolson => 0.5,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::CrankNicolson,
            positivity: Positivity::ClipRenormalize,
            cfl_safety: 0.9,
            mass_mode: MassMode::Probability { tol: 1e-3 },
        }
    }
}

/// Per-step solver diagnostics (emitted as a CSV stream by the CLI).
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostic {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub min_density: f64,
    pub clipped_mass: f64,
}

#[derive(Debug)]
pub struct SolveOutput {
    pub field: DensityField,
    pub steps: Vec<StepDiagnostic>,
}

/// Abort threshold: clipped mass per step beyond this fraction of the slice
/// mass means the scheme has lost positivity.
const CLIP_BUDGET: f64 = 1e-6;
const LINSOLVE_TOL: f64 = 1e-10;
const LINSOLVE_MAX_ITER: usize = 10_000;

fn axis_stride(grid: &SpaceTimeGrid, axis: usize) -> usize {
    (0..axis).map(|a| grid.nodes(a)).product()
}

/// Tridiagonal coefficients of the flux divergence restricted to one grid
/// line along `axis` (zero flux at both ends, half control volumes there).
struct LineOperator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

fn line_operator(
    coeffs: &CoefficientField,
    grid: &SpaceTimeGrid,
    axis: usize,
    t: f64,
    base: usize,
    a_nodes: &[SmallMat],
    scratch: &mut LineOperator,
) -> Result<()> {
    let n = grid.nodes(axis);
    let h = grid.h(axis);
    let stride = axis_stride(grid, axis);
    let dim = grid.dim();
    scratch.lower.resize(n, 0.0);
    scratch.diag.resize(n, 0.0);
    scratch.upper.resize(n, 0.0);

    // interface drifts b^axis at k+1/2, k = 0..n-2
    let mut point = grid.node_point(base);
    let mut b_if = vec![0.0; n - 1];
    for (k, b) in b_if.iter_mut().enumerate() {
        point[axis] = grid.coord(axis, k) + 0.5 * h;
        *b = coeffs.b(t, &point[..dim])?[axis];
    }
    let aa = |k: usize| a_nodes[base + k * stride].get(axis, axis);

    for k in 0..n {
        let cv = h * if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let mut lower = 0.0;
        let mut diag = 0.0;
        let mut upper = 0.0;
        if k + 1 < n {
            // contribution of F_{k+1/2}
            diag += -aa(k) / h - 0.5 * b_if[k];
            upper += aa(k + 1) / h - 0.5 * b_if[k];
        }
        if k > 0 {
            // contribution of -F_{k-1/2}
            diag += -aa(k) / h + 0.5 * b_if[k - 1];
            lower += aa(k - 1) / h + 0.5 * b_if[k - 1];
        }
        scratch.lower[k] = lower / cv;
        scratch.diag[k] = diag / cv;
        scratch.upper[k] = upper / cv;
    }
    Ok(())
}

fn for_each_line_base(
    grid: &SpaceTimeGrid,
    axis: usize,
    mut f: impl FnMut(usize) -> Result<()>,
) -> Result<()> {
    for flat in 0..grid.node_count() {
        if grid.axis_indices(flat)[axis] == 0 {
            f(flat)?;
        }
    }
    Ok(())
}

fn eval_a_nodes(
    coeffs: &CoefficientField,
    grid: &SpaceTimeGrid,
    t: f64,
    buf: &mut Vec<SmallMat>,
) -> Result<()> {
    let dim = grid.dim();
    buf.clear();
    buf.reserve(grid.node_count());
    for i in 0..grid.node_count() {
        let p = grid.node_point(i);
        buf.push(coeffs.a(t, &p[..dim])?);
    }
    Ok(())
}

/// out += divergence of the per-axis (diagonal diffusion + drift) fluxes.
fn add_axis_divergence(
    coeffs: &CoefficientField,
    grid: &SpaceTimeGrid,
    t: f64,
    a_nodes: &[SmallMat],
    v: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let mut line = LineOperator {
        lower: Vec::new(),
        diag: Vec::new(),
        upper: Vec::new(),
    };
    for axis in 0..grid.dim() {
        let n = grid.nodes(axis);
        let stride = axis_stride(grid, axis);
        for_each_line_base(grid, axis, |base| {
            line_operator(coeffs, grid, axis, t, base, a_nodes, &mut line)?;
            for k in 0..n {
                let i = base + k * stride;
                let mut acc = line.diag[k] * v[i];
                if k > 0 {
                    acc += line.lower[k] * v[i - stride];
                }
                if k + 1 < n {
                    acc += line.upper[k] * v[i + stride];
                }
                out[i] += acc;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// out += divergence of the cross-derivative fluxes (off-diagonal A),
/// centered mixed differences in conservative form. No-op for d = 1.
fn add_cross_divergence(
    grid: &SpaceTimeGrid,
    a_nodes: &[SmallMat],
    v: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let dim = grid.dim();
    if dim == 1 {
        return Ok(());
    }
    let nnodes = grid.node_count();
    let mut gbar = vec![0.0; nnodes];
    for axis in 0..dim {
        // Gbar_i = sum_{j != axis} centered d_j (a^{axis j} v) at node i
        gbar.iter_mut().for_each(|g| *g = 0.0);
        for j in 0..dim {
            if j == axis {
                continue;
            }
            let sj = axis_stride(grid, j);
            let nj = grid.nodes(j);
            let hj = grid.h(j);
            for i in 0..nnodes {
                let idx_j = grid.axis_indices(i)[j];
                let prod = |flat: usize| a_nodes[flat].get(axis, j) * v[flat];
                let deriv = if idx_j == 0 {
                    (-3.0 * prod(i) + 4.0 * prod(i + sj) - prod(i + 2 * sj)) / (2.0 * hj)
                } else if idx_j == nj - 1 {
                    (3.0 * prod(i) - 4.0 * prod(i - sj) + prod(i - 2 * sj)) / (2.0 * hj)
                } else {
                    (prod(i + sj) - prod(i - sj)) / (2.0 * hj)
                };
                gbar[i] += deriv;
            }
        }
        // telescoped interface average along `axis`
        let n = grid.nodes(axis);
        let h = grid.h(axis);
        let stride = axis_stride(grid, axis);
        for_each_line_base(grid, axis, |base| {
            for k in 0..n {
                let i = base + k * stride;
                let cv = h * if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                let f_plus = if k + 1 < n {
                    0.5 * (gbar[i] + gbar[i + stride])
                } else {
                    0.0
                };
                let f_minus = if k > 0 {
                    0.5 * (gbar[i - stride] + gbar[i])
                } else {
                    0.0
                };
                out[i] += (f_plus - f_minus) / cv;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// Full discrete flux-form operator (axis + cross); the right-hand side of
/// the semi-discrete system d rho / dt = (this).
pub fn apply_fp_operator(
    coeffs: &CoefficientField,
    grid: &SpaceTimeGrid,
    t: f64,
    v: &[f64],
) -> Result<Vec<f64>> {
    let mut a_nodes = Vec::new();
    eval_a_nodes(coeffs, grid, t, &mut a_nodes)?;
    let mut out = vec![0.0; v.len()];
    add_axis_divergence(coeffs, grid, t, &a_nodes, v, &mut out)?;
    add_cross_divergence(grid, &a_nodes, v, &mut out)?;
    Ok(out)
}

/// Discrete generator `a^{ij} D_i D_j u + b^i D_i u` built to be the exact
/// summation-by-parts adjoint of [`apply_fp_operator`] on interior-supported
/// u (centered second differences, interface-averaged drift). Face nodes get
/// zero contributions from stencils that would leave the grid.
pub fn apply_generator(
    coeffs: &CoefficientField,
    grid: &SpaceTimeGrid,
    t: f64,
    u: &[f64],
) -> Result<Vec<f64>> {
    let dim = grid.dim();
    let mut a_nodes = Vec::new();
    eval_a_nodes(coeffs, grid, t, &mut a_nodes)?;
    let mut out = vec![0.0; u.len()];
    for i in 0..u.len() {
        let idx = grid.axis_indices(i);
        let mut acc = 0.0;
        let mut point = grid.node_point(i);
        for a in 0..dim {
            let sa = axis_stride(grid, a);
            let na = grid.nodes(a);
            let ha = grid.h(a);
            let interior_a = idx[a] > 0 && idx[a] + 1 < na;
            if interior_a {
                // diagonal diffusion
                acc += a_nodes[i].get(a, a) * (u[i + sa] - 2.0 * u[i] + u[i - sa]) / (ha * ha);
                // interface-averaged drift
                let xa = point[a];
                point[a] = xa + 0.5 * ha;
                let b_plus = coeffs.b(t, &point[..dim])?[a];
                point[a] = xa - 0.5 * ha;
                let b_minus = coeffs.b(t, &point[..dim])?[a];
                point[a] = xa;
                acc += 0.5 * (b_plus * (u[i + sa] - u[i]) / ha + b_minus * (u[i] - u[i - sa]) / ha);
                // mixed terms
                for j in 0..dim {
                    if j == a {
                        continue;
                    }
                    let sj = axis_stride(grid, j);
                    let nj = grid.nodes(j);
                    if idx[j] == 0 || idx[j] + 1 >= nj {
                        continue;
                    }
                    let hj = grid.h(j);
                    let mixed = (u[i + sa + sj] - u[i + sa - sj] - u[i - sa + sj] + u[i - sa - sj])
                        / (4.0 * ha * hj);
                    acc += a_nodes[i].get(a, j) * mixed;
                }
            }
        }
        out[i] = acc;
    }
    Ok(out)
}

/// Thomas algorithm for (I - c * D) x = rhs on one line, D tridiagonal.
fn thomas_solve(
    line: &LineOperator,
    c: f64,
    rhs: &[f64],
    x: &mut [f64],
    work: &mut (Vec<f64>, Vec<f64>),
) {
    let n = rhs.len();
    let (cp, dp) = work;
    cp.resize(n, 0.0);
    dp.resize(n, 0.0);
    let diag = |k: usize| 1.0 - c * line.diag[k];
    let upper = |k: usize| -c * line.upper[k];
    let lower = |k: usize| -c * line.lower[k];
    cp[0] = upper(0) / diag(0);
    dp[0] = rhs[0] / diag(0);
    for k in 1..n {
        let m = diag(k) - lower(k) * cp[k - 1];
        cp[k] = if k + 1 < n { upper(k) / m } else { 0.0 };
        dp[k] = (rhs[k] - lower(k) * dp[k - 1]) / m;
    }
    x[n - 1] = dp[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = dp[k] - cp[k] * x[k + 1];
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Unpreconditioned BiCGStab on a matrix-free operator; relative residual
/// below LINSOLVE_TOL or error.
fn bicgstab(
    apply: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    rhs: &[f64],
    x0: &[f64],
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut x = x0.to_vec();
    let ax = apply(&x)?;
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let rhs_norm = norm_inf(rhs).max(1e-300);
    if norm_inf(&r) / rhs_norm < LINSOLVE_TOL {
        return Ok(x);
    }
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for _iter in 0..LINSOLVE_MAX_ITER {
        let rho_new: f64 = r0.iter().zip(&r).map(|(a, b)| a * b).sum();
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = apply(&p)?;
        let r0v: f64 = r0.iter().zip(&v).map(|(a, b)| a * b).sum();
        alpha = rho / r0v;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm_inf(&s) / rhs_norm < LINSOLVE_TOL {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return Ok(x);
        }
        let t = apply(&s)?;
        let tt: f64 = t.iter().map(|a| a * a).sum();
        let ts: f64 = t.iter().zip(&s).map(|(a, b)| a * b).sum();
        omega = ts / tt.max(1e-300);
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm_inf(&r) / rhs_norm < LINSOLVE_TOL {
            return Ok(x);
        }
    }
    Err(Error::Solver(format!(
        "nonconvergent linear solve: residual {:.3e} after {LINSOLVE_MAX_ITER} iterations",
        norm_inf(&r) / rhs_norm
    )))
}

/// Explicit stability bound: dt <= 1 / max_nodes sum_a (2 a^{aa}/h_a^2 + |b_a|/h_a).
fn explicit_stable_dt(coeffs: &CoefficientField, grid: &SpaceTimeGrid) -> Result<f64> {
    let dim = grid.dim();
    let mut worst = 0.0f64;
    for &t in [0.0, 0.5 * grid.t_end(), grid.t_end()].iter() {
        for i in 0..grid.node_count() {
            let p = grid.node_point(i);
            let a = coeffs.a(t, &p[..dim])?;
            let b = coeffs.b(t, &p[..dim])?;
            let mut rate = 0.0;
            for axis in 0..dim {
                let h = grid.h(axis);
                rate += 2.0 * a.get(axis, axis).abs() / (h * h) + b[axis].abs() / h;
            }
            worst = worst.max(rate);
        }
    }
    Ok(1.0 / worst.max(1e-300))
}

/// Solve the Fokker-Planck equation forward from `rho0` over the grid's time
/// range. Zero-flux boundaries conserve the trapezoid mass exactly (up to the
/// linear-solve residual); negative cells are clipped and the slice mass
/// renormalized, aborting if the clipped mass per step exceeds 1e-6.
pub fn solve_fp(
    coeffs: &CoefficientField,
    rho0: &[f64],
    grid: Arc<SpaceTimeGrid>,
    cfg: &SolverConfig,
) -> Result<SolveOutput> {
    let dim = grid.dim();
    if coeffs.dim() != dim {
        return Err(Error::Config("coefficient/grid dimension mismatch".into()));
    }
    if rho0.len() != grid.node_count() {
        return Err(Error::Config("initial slice length mismatch".into()));
    }
    if rho0.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::Config("initial density must be nonnegative".into()));
    }
    let mass0 = grid.integrate(rho0);
    match cfg.mass_mode {
        MassMode::Probability { tol } => {
            if (mass0 - 1.0).abs() > tol {
                return Err(Error::Config(format!(
                    "initial mass {mass0} outside probability tolerance {tol}"
                )));
            }
        }
        MassMode::Bounded { cap } => {
            if mass0 > cap {
                return Err(Error::Config(format!("initial mass {mass0} above {cap}")));
            }
        }
    }
    let alpha = match coeffs.alpha {
        Some(a) => a,
        None => {
            coeffs
                .estimate_alpha_lambda(grid.lo(), grid.hi(), 17, 3)?
                .alpha
        }
    };
    if !(alpha > 0.0) {
        return Err(Error::Refused(format!(
            "degenerate diffusion (alpha = {alpha}); solver requires alpha > 0"
        )));
    }

    let dt = grid.dt();
    let theta = cfg.theta();
    if matches!(cfg.scheme, Scheme::Explicit) {
        let stable = explicit_stable_dt(coeffs, &grid)?;
        if dt > cfg.cfl_safety * stable {
            return Err(Error::Solver(format!(
                "CFL violation: dt = {dt:.3e} exceeds {:.3e} (= safety {} x stability bound {:.3e})",
                cfg.cfl_safety * stable,
                cfg.cfl_safety,
                stable
            )));
        }
    }

    let n = grid.node_count();
    let steps = grid.steps();
    let mut slices: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    slices.push(rho0.to_vec());
    let mut diags = Vec::with_capacity(steps + 1);
    diags.push(StepDiagnostic {
        step: 0,
        t: 0.0,
        mass: mass0,
        min_density: rho0.iter().cloned().fold(f64::INFINITY, f64::min),
        clipped_mass: 0.0,
    });

    let mut a_now = Vec::new();
    let mut a_next = Vec::new();
    let mut line = LineOperator {
        lower: Vec::new(),
        diag: Vec::new(),
        upper: Vec::new(),
    };
    let mut thomas_work = (Vec::new(), Vec::new());

    for step in 0..steps {
        let t_now = grid.times()[step];
        let t_next = grid.times()[step + 1];
        let prev = slices.last().unwrap().clone();
        let mass_prev = grid.integrate(&prev);

        eval_a_nodes(coeffs, &grid, t_now, &mut a_now)?;
        // explicit side: prev + (1-theta) dt * axis + dt * cross
        let mut rhs = prev.clone();
        let mut expl = vec![0.0; n];
        add_axis_divergence(coeffs, &grid, t_now, &a_now, &prev, &mut expl)?;
        for i in 0..n {
            rhs[i] += (1.0 - theta) * dt * expl[i];
        }
        if dim > 1 {
            let mut cross = vec![0.0; n];
            add_cross_divergence(&grid, &a_now, &prev, &mut cross)?;
            for i in 0..n {
                rhs[i] += dt * cross[i];
            }
        }

        let mut next = if theta == 0.0 {
            rhs
        } else if dim == 1 {
            eval_a_nodes(coeffs, &grid, t_next, &mut a_next)?;
            line_operator(coeffs, &grid, 0, t_next, 0, &a_next, &mut line)?;
            let mut x = vec![0.0; n];
            thomas_solve(&line, theta * dt, &rhs, &mut x, &mut thomas_work);
            // direct solve; verify the residual contract anyway
            let mut dx = vec![0.0; n];
            add_axis_divergence(coeffs, &grid, t_next, &a_next, &x, &mut dx)?;
            let res: f64 = (0..n)
                .map(|i| (x[i] - theta * dt * dx[i] - rhs[i]).abs())
                .fold(0.0, f64::max);
            if res / norm_inf(&rhs).max(1e-300) > LINSOLVE_TOL {
                return Err(Error::Solver(format!(
                    "nonconvergent linear solve: tridiagonal residual {res:.3e}"
                )));
            }
            x
        } else {
            eval_a_nodes(coeffs, &grid, t_next, &mut a_next)?;
            let grid_ref = &grid;
            let coeffs_ref = coeffs;
            let a_ref = &a_next;
            let apply = move |v: &[f64]| -> Result<Vec<f64>> {
                let mut dv = vec![0.0; v.len()];
                add_axis_divergence(coeffs_ref, grid_ref, t_next, a_ref, v, &mut dv)?;
                Ok(v.iter()
                    .zip(&dv)
                    .map(|(vi, di)| vi - theta * dt * di)
                    .collect())
            };
            bicgstab(&apply, &rhs, &prev)?
        };

        // positivity handling
        let min_density = next.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut clipped_mass = 0.0;
        match cfg.positivity {
            Positivity::ClipRenormalize => {
                let w = grid.node_weights();
                for (i, v) in next.iter_mut().enumerate() {
                    if *v < 0.0 {
                        clipped_mass += w[i] * (-*v);
                        *v = 0.0;
                    }
                }
                if clipped_mass > CLIP_BUDGET * mass_prev.max(1e-300) {
                    return Err(Error::Solver(format!(
                        "positivity loss at step {}: clipped mass {clipped_mass:.3e} exceeds budget {:.3e} (min density {min_density:.3e})",
                        step + 1,
                        CLIP_BUDGET * mass_prev
                    )));
                }
                if clipped_mass > 0.0 {
                    let m = grid.integrate(&next);
                    if m > 0.0 {
                        let scale = mass_prev / m;
                        next.iter_mut().for_each(|v| *v *= scale);
                    }
                }
            }
            Positivity::Off => {
                let floor = -1e-12 * norm_inf(&next).max(1e-300);
                if min_density < floor {
                    return Err(Error::Solver(format!(
                        "negative density {min_density:.3e} at step {} with positivity off",
                        step + 1
                    )));
                }
                next.iter_mut().for_each(|v| {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                });
            }
        }

        diags.push(StepDiagnostic {
            step: step + 1,
            t: t_next,
            mass: grid.integrate(&next),
            min_density,
            clipped_mass,
        });
        slices.push(next);
    }

    let field = DensityField::new(ScalarField::new(grid, slices)?, cfg.mass_mode)?;
    Ok(SolveOutput {
        field,
        steps: diags,
    })
}

// ---------------------------------------------------------------------------
// residual checkers

#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// Space-time quadrature of L u against the density.
    pub value: f64,
    /// Normalizer max(1, sup |L u|) over the support.
    pub scale: f64,
    /// Richardson quadrature error estimate for `value`.
    pub error: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl ResidualReport {
    pub fn normalized(&self) -> f64 {
        self.value.abs() / self.scale
    }
}

/// Quadrature of the weak-equation integrand: the residual
/// `int L u dmu` must vanish for solutions, for every admissible u.
pub fn weak_residual(
    mu: &DensityField,
    coeffs: &CoefficientField,
    u: &TestFunction,
    tolerance: f64,
) -> Result<ResidualReport> {
    let grid = mu.grid();
    if !u.supported_inside(grid.t_end(), grid.lo(), grid.hi()) {
        return Err(Error::Refused(
            "test function support must lie strictly inside (0, horizon) x box".into(),
        ));
    }
    let (value, error) =
        crate::field::with_error_density(mu, |rho| integrate_lu_mu(rho, coeffs, u))?;
    let scale = sup_lu(mu.grid(), coeffs, u)?.max(1.0);
    let verdict = if value.abs() <= tolerance * scale {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    Ok(ResidualReport {
        value,
        scale,
        error,
        tolerance,
        verdict,
    })
}

fn support_window(u: &TestFunction, grid: &SpaceTimeGrid) -> (f64, f64) {
    match u.support {
        crate::testfn::Support::Compact { t0, t1, .. } => (t0, t1),
        crate::testfn::Support::Global => (0.0, grid.t_end()),
    }
}

/// Nodes inside the spatial support ball (every node for global support).
fn support_nodes(u: &TestFunction, grid: &SpaceTimeGrid) -> Vec<usize> {
    let dim = grid.dim();
    match u.support {
        crate::testfn::Support::Global => (0..grid.node_count()).collect(),
        crate::testfn::Support::Compact { center, radius, .. } => (0..grid.node_count())
            .filter(|&i| {
                let p = grid.node_point(i);
                (0..dim).map(|a| (p[a] - center[a]).powi(2)).sum::<f64>() <= radius * radius
            })
            .collect(),
    }
}

fn integrate_lu_mu(mu: &DensityField, coeffs: &CoefficientField, u: &TestFunction) -> Result<f64> {
    let grid = mu.grid();
    let dim = grid.dim();
    let w = grid.node_weights();
    let (t0, t1) = support_window(u, grid);
    let nodes = support_nodes(u, grid);
    let dt = grid.dt();
    let mut total = 0.0;
    for (k, &t) in grid.times().iter().enumerate() {
        if t < t0 - dt || t > t1 + dt {
            continue;
        }
        let slice = mu.slice(k);
        let mut acc = 0.0;
        for &i in &nodes {
            if slice[i] == 0.0 {
                continue;
            }
            let p = grid.node_point(i);
            let lu = coeffs.eval_l(u, t, &p[..dim])?;
            if lu != 0.0 {
                acc += w[i] * lu * slice[i];
            }
        }
        let time_w = if k == 0 || k == grid.steps() {
            0.5
        } else {
            1.0
        };
        total += time_w * dt * acc;
    }
    Ok(total)
}

fn sup_lu(grid: &SpaceTimeGrid, coeffs: &CoefficientField, u: &TestFunction) -> Result<f64> {
    let dim = grid.dim();
    let (t0, t1) = support_window(u, grid);
    let nodes = support_nodes(u, grid);
    let dt = grid.dt();
    let mut sup = 0.0f64;
    for &t in grid.times().iter() {
        if t < t0 - dt || t > t1 + dt {
            continue;
        }
        for &i in &nodes {
            let p = grid.node_point(i);
            sup = sup.max(coeffs.eval_l(u, t, &p[..dim])?.abs());
        }
    }
    Ok(sup)
}

#[derive(Debug, Clone)]
pub struct InitialConditionReport {
    /// max over the zeta family of |int zeta rho(t1) - int zeta dnu|.
    pub deviation: f64,
    /// Same comparison at t = 0 (0 when slice 0 equals nu).
    pub deviation_at_zero: f64,
    pub t1: f64,
    pub dt: f64,
}

/// Initial-condition residual against a family of spatial bumps, evaluated at
/// the first positive grid time.
pub fn initial_condition_residual(
    mu: &DensityField,
    nu: &[f64],
    zetas: &[SpatialBump],
) -> Result<InitialConditionReport> {
    if zetas.len() < 3 {
        return Err(Error::Config("need at least 3 test bumps".into()));
    }
    let grid = mu.grid();
    if nu.len() != grid.node_count() {
        return Err(Error::Config("nu slice length mismatch".into()));
    }
    let dim = grid.dim();
    let w = grid.node_weights();
    let pair = |slice: &[f64], zeta: &SpatialBump| -> f64 {
        slice
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let p = grid.node_point(i);
                w[i] * v * zeta.eval(&p[..dim])
            })
            .sum()
    };
    let mut deviation = 0.0f64;
    let mut deviation_at_zero = 0.0f64;
    for zeta in zetas {
        let znu = pair(nu, zeta);
        deviation = deviation.max((pair(mu.slice(1), zeta) - znu).abs());
        deviation_at_zero = deviation_at_zero.max((pair(mu.slice(0), zeta) - znu).abs());
    }
    Ok(InitialConditionReport {
        deviation,
        deviation_at_zero,
        t1: grid.times()[1],
        dt: grid.dt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff;
    use crate::field::MassMode;
    use crate::oracle::{self, GaussianState};
    use crate::testfn::zeta_family;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn sample_initial(grid: &SpaceTimeGrid, state: &GaussianState) -> Vec<f64> {
        (0..grid.node_count())
            .map(|i| {
                let p = grid.node_point(i);
                state.density(&p[..grid.dim()])
            })
            .collect()
    }

    fn l1_error(grid: &SpaceTimeGrid, slice: &[f64], state: &GaussianState) -> f64 {
        let w = grid.node_weights();
        slice
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let p = grid.node_point(i);
                w[i] * (v - state.density(&p[..grid.dim()])).abs()
            })
            .sum()
    }

    #[test]
    fn heat_small_benchmark() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 256, 2e-3, 100).unwrap());
        let c = coeff::heat(1);
        let rho0 = sample_initial(&grid, &GaussianState::standard(1));
        let out = solve_fp(&c, &rho0, grid.clone(), &SolverConfig::default()).unwrap();
        let err = l1_error(
            &grid,
            out.field.slice(100),
            &oracle::heat_solution(1.0, 0.2),
        );
        assert!(err < 5e-4, "L1 error {err}");
    }

    #[test]
    fn heat_order_of_accuracy() {
        let run = |cells: usize, dt: f64, steps: usize| -> f64 {
            let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, cells, dt, steps).unwrap());
            let c = coeff::heat(1);
            let rho0 = sample_initial(&grid, &GaussianState::standard(1));
            let out = solve_fp(&c, &rho0, grid.clone(), &SolverConfig::default()).unwrap();
            l1_error(
                &grid,
                out.field.slice(steps),
                &oracle::heat_solution(1.0, 0.2),
            )
        };
        let coarse = run(64, 8e-3, 25);
        let fine = run(128, 4e-3, 50);
        assert!(
            coarse / fine >= 3.5,
            "halving h and dt only improved {coarse} -> {fine}"
        );
    }

    #[test]
    fn ou_stationary_small() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 256, 2e-3, 100).unwrap());
        let c = coeff::ornstein_uhlenbeck(1);
        let rho0 = sample_initial(&grid, &GaussianState::standard(1));
        let out = solve_fp(&c, &rho0, grid.clone(), &SolverConfig::default()).unwrap();
        for k in [25, 50, 100] {
            let err = l1_error(&grid, out.field.slice(k), &GaussianState::standard(1));
            assert!(err < 5e-4, "slice {k}: L1 drift {err}");
        }
    }

    #[test]
    fn ou_variance_relaxation_small() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 10.0, 512, 1e-3, 250).unwrap());
        let c = coeff::ornstein_uhlenbeck(1);
        let rho0 = sample_initial(&grid, &GaussianState::new(vec![0.0], vec![4.0]).unwrap());
        let out = solve_fp(&c, &rho0, grid.clone(), &SolverConfig::default()).unwrap();
        let variance = |slice: &[f64]| -> f64 {
            let w = grid.node_weights();
            slice
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let x = grid.coord(0, i);
                    w[i] * v * x * x
                })
                .sum()
        };
        let got = variance(out.field.slice(250));
        let expect = oracle::ou_solution(0.0, 4.0, 0.25).var[0];
        assert_abs_diff_eq!(got, expect, epsilon = 2e-3);
    }

    #[test]
    fn time_marching_composes() {
        // solving to 0.1 and restarting from that slice matches one solve
        // to 0.2 (the scheme is a fixed-step map)
        let c = coeff::ornstein_uhlenbeck(1);
        let full = {
            let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 128, 2e-3, 100).unwrap());
            let rho0 = sample_initial(&grid, &GaussianState::new(vec![0.0], vec![2.0]).unwrap());
            solve_fp(&c, &rho0, grid, &SolverConfig::default()).unwrap()
        };
        let first = {
            let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 128, 2e-3, 50).unwrap());
            let rho0 = sample_initial(&grid, &GaussianState::new(vec![0.0], vec![2.0]).unwrap());
            solve_fp(&c, &rho0, grid, &SolverConfig::default()).unwrap()
        };
        // restart: same dt, initial = slice 50; coefficients are autonomous
        let second = {
            let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 128, 2e-3, 50).unwrap());
            solve_fp(&c, first.field.slice(50), grid, &SolverConfig::default()).unwrap()
        };
        for (a, b) in full.field.slice(100).iter().zip(second.field.slice(50)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn mass_conserved_per_step() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 128, 2e-3, 200).unwrap());
        let c = coeff::ornstein_uhlenbeck(1);
        let rho0 = sample_initial(&grid, &GaussianState::standard(1));
        let out = solve_fp(&c, &rho0, grid, &SolverConfig::default()).unwrap();
        let m0 = out.steps[0].mass;
        for d in &out.steps {
            assert!(
                (d.mass - m0).abs() <= 1e-8 * (d.step as f64).max(1.0),
                "step {}: mass drift {}",
                d.step,
                (d.mass - m0).abs()
            );
        }
    }

    #[test]
    fn no_deep_negatives_before_clipping() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 256, 2e-3, 100).unwrap());
        let c = coeff::heat(1);
        let rho0 = sample_initial(&grid, &GaussianState::standard(1));
        let out = solve_fp(&c, &rho0, grid, &SolverConfig::default()).unwrap();
        for d in &out.steps {
            assert!(d.min_density > -1e-14, "step {}: {}", d.step, d.min_density);
            assert!(d.clipped_mass <= 1e-6);
        }
    }

    #[test]
    fn explicit_requires_cfl() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 256, 2e-3, 10).unwrap());
        let c = coeff::heat(1);
        let rho0 = sample_initial(&grid, &GaussianState::standard(1));
        let cfg = SolverConfig {
            scheme: Scheme::Explicit,
            ..Default::default()
        };
        // dt = 2e-3 > h^2 = 3.9e-3... stability bound ~ h^2/(2a) = 3.9e-3;
        // 2e-3 lies above safety * bound only for small safety; force violation
        let tight = SolverConfig {
            cfl_safety: 0.1,
            ..cfg
        };
        match solve_fp(&c, &rho0, grid.clone(), &tight) {
            Err(Error::Solver(msg)) => assert!(msg.contains("CFL")),
            other => panic!("expected CFL abort, got {other:?}"),
        }
        // and a compliant explicit run works
        let grid2 = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 128, 1e-3, 50).unwrap());
        let rho0 = sample_initial(&grid2, &GaussianState::standard(1));
        let out = solve_fp(&c, &rho0, grid2.clone(), &cfg).unwrap();
        let err = l1_error(
            &grid2,
            out.field.slice(50),
            &oracle::heat_solution(1.0, 0.05),
        );
        assert!(err < 2e-3, "explicit error {err}");
    }

    #[test]
    fn positivity_abort_on_unresolvable_spike() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 4.0, 64, 0.05, 8).unwrap());
        let c = coeff::heat(1);
        let mut rho0 = vec![0.0; grid.node_count()];
        let mid = grid.node_count() / 2;
        rho0[mid] = 1.0 / grid.node_weights()[mid];
        match solve_fp(&c, &rho0, grid, &SolverConfig::default()) {
            Err(Error::Solver(msg)) => assert!(msg.contains("positivity"), "{msg}"),
            other => panic!("expected positivity abort, got {other:?}"),
        }
    }

    #[test]
    fn bounded_mass_mode_solves_subprobability_data() {
        // uniformly-bounded (non-probability) slices are admissible
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 128, 2e-3, 50).unwrap());
        let c = coeff::heat(1);
        let rho0: Vec<f64> = sample_initial(&grid, &GaussianState::standard(1))
            .iter()
            .map(|v| 0.5 * v)
            .collect();
        let cfg = SolverConfig {
            mass_mode: MassMode::Bounded { cap: 1.0 },
            ..Default::default()
        };
        let out = solve_fp(&c, &rho0, grid.clone(), &cfg).unwrap();
        assert_abs_diff_eq!(out.field.mass(50), 0.5, epsilon = 1e-10);
        // but the probability mode rejects the same data
        assert!(solve_fp(&c, &rho0, grid, &SolverConfig::default()).is_err());
    }

    #[test]
    fn degenerate_alpha_refused() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 4.0, 64, 0.01, 4).unwrap());
        let c = coeff::constant(1, vec![0.0], vec![0.0]);
        let rho0 = sample_initial(&grid, &GaussianState::standard(1));
        assert!(matches!(
            solve_fp(&c, &rho0, grid, &SolverConfig::default()),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn duality_summation_by_parts_1d() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 6.0, 96, 0.01, 2).unwrap());
        let c = coeff::polynomial_drift(1, 0.8, -1.0, -0.1);
        let rho: Vec<f64> = sample_initial(&grid, &GaussianState::standard(1));
        // interior-supported u
        let bump = TestFunction::bump(0.1, 0.9, [0.5, 0.0, 0.0], 3.0, 1);
        let u: Vec<f64> = (0..grid.node_count())
            .map(|i| bump.eval(0.5, &[grid.coord(0, i)]))
            .collect();
        let t = 0.3;
        let drho = apply_fp_operator(&c, &grid, t, &rho).unwrap();
        let au = apply_generator(&c, &grid, t, &u).unwrap();
        let w = grid.node_weights();
        let lhs: f64 = (0..u.len()).map(|i| w[i] * u[i] * drho[i]).sum();
        let rhs: f64 = (0..u.len()).map(|i| w[i] * au[i] * rho[i]).sum();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn duality_summation_by_parts_2d_with_cross_terms() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(2, 4.0, 24, 0.01, 2).unwrap());
        let c = crate::coeff::CoefficientField::new(
            2,
            std::sync::Arc::new(|_t, x: &[f64]| {
                SmallMat::from_rows(2, &[1.0 + 0.1 * x[1], 0.3, 0.3, 1.2 - 0.05 * x[0]])
            }),
            std::sync::Arc::new(|_t, x: &[f64]| [-x[0], -0.5 * x[1], 0.0]),
        )
        .with_metadata(0.5, 0.2, 2.0);
        let st = GaussianState::standard(2);
        let rho: Vec<f64> = (0..grid.node_count())
            .map(|i| {
                let p = grid.node_point(i);
                st.density(&p[..2])
            })
            .collect();
        let bump = TestFunction::bump(0.1, 0.9, [0.3, -0.2, 0.0], 2.0, 2);
        let u: Vec<f64> = (0..grid.node_count())
            .map(|i| {
                let p = grid.node_point(i);
                bump.eval(0.5, &p[..2])
            })
            .collect();
        let t = 0.4;
        let drho = apply_fp_operator(&c, &grid, t, &rho).unwrap();
        let au = apply_generator(&c, &grid, t, &u).unwrap();
        let w = grid.node_weights();
        let lhs: f64 = (0..u.len()).map(|i| w[i] * u[i] * drho[i]).sum();
        let rhs: f64 = (0..u.len()).map(|i| w[i] * au[i] * rho[i]).sum();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12, max_relative = 1e-11);
    }

    #[test]
    fn heat_3d_small_matches_oracle_variances() {
        // exercise the full 3-d path (BiCGStab implicit solve) on a short
        // isotropic diffusion run
        let grid = Arc::new(SpaceTimeGrid::symmetric(3, 5.0, 20, 2e-3, 10).unwrap());
        let c = coeff::heat(3);
        let st = GaussianState::standard(3);
        let rho0: Vec<f64> = (0..grid.node_count())
            .map(|i| {
                let p = grid.node_point(i);
                st.density(&p[..3])
            })
            .collect();
        let out = solve_fp(&c, &rho0, grid.clone(), &SolverConfig::default()).unwrap();
        // variance grows by 2 a t = 0.02 per axis
        let w = grid.node_weights();
        for axis in 0..3 {
            let got: f64 = out
                .field
                .slice(10)
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let p = grid.node_point(i);
                    w[i] * v * p[axis] * p[axis]
                })
                .sum();
            assert_abs_diff_eq!(got, 1.02, epsilon = 5e-3);
        }
        assert_abs_diff_eq!(out.field.mass(10), out.field.mass(0), epsilon = 1e-10);
    }

    #[test]
    fn heat_2d_with_cross_terms_matches_oracle() {
        // constant A with off-diagonal entries: solution N(0, S0 + 2At)
        let grid = Arc::new(SpaceTimeGrid::symmetric(2, 6.0, 72, 1e-3, 50).unwrap());
        let c = crate::coeff::CoefficientField::new(
            2,
            std::sync::Arc::new(|_t, _x: &[f64]| SmallMat::from_rows(2, &[1.0, 0.3, 0.3, 1.0])),
            std::sync::Arc::new(|_t, _x: &[f64]| [0.0; 3]),
        )
        .with_analytic_derivative(std::sync::Arc::new(|_t, _x| [SmallMat::zeros(2); 3]))
        .with_metadata(0.7, 0.0, 1.3);
        let st = GaussianState::standard(2);
        let rho0: Vec<f64> = (0..grid.node_count())
            .map(|i| {
                let p = grid.node_point(i);
                st.density(&p[..2])
            })
            .collect();
        let out = solve_fp(&c, &rho0, grid.clone(), &SolverConfig::default()).unwrap();
        // target covariance S = I + 2At at t = 0.05
        let t = 0.05;
        let sxx = 1.0 + 2.0 * t;
        let sxy = 0.6 * t;
        let det = sxx * sxx - sxy * sxy;
        let w = grid.node_weights();
        let err: f64 = (0..grid.node_count())
            .map(|i| {
                let p = grid.node_point(i);
                let q = (sxx * p[0] * p[0] - 2.0 * sxy * p[0] * p[1] + sxx * p[1] * p[1]) / det;
                let target = (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt());
                w[i] * (out.field.slice(50)[i] - target).abs()
            })
            .sum();
        assert!(err < 5e-3, "2d cross-term L1 error {err}");
    }

    #[test]
    fn weak_residual_stationary_ou_oracle_field() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 512, 2.5e-3, 200).unwrap());
        let st = GaussianState::standard(1);
        let mu = DensityField::sample(
            grid.clone(),
            MassMode::Probability { tol: 1e-6 },
            move |_t, x| st.density(x),
        )
        .unwrap();
        let c = coeff::ornstein_uhlenbeck(1);
        let u = TestFunction::bump(0.1, 0.4, [0.0; 3], 3.0, 1);
        let rep = weak_residual(&mu, &c, &u, 1e-4).unwrap();
        assert_eq!(rep.verdict, Verdict::Holds);
        assert!(rep.normalized() < 1e-5, "normalized {}", rep.normalized());
    }

    #[test]
    fn weak_residual_refuses_escaping_support() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 4.0, 64, 0.01, 50).unwrap());
        let st = GaussianState::standard(1);
        let mu = DensityField::sample(grid, MassMode::Probability { tol: 1e-2 }, move |_t, x| {
            st.density(x)
        })
        .unwrap();
        let c = coeff::heat(1);
        let escaping = TestFunction::bump(0.1, 0.4, [3.5, 0.0, 0.0], 1.0, 1);
        assert!(weak_residual(&mu, &c, &escaping, 1e-4).is_err());
        let global = TestFunction::monomial_x2(0);
        assert!(weak_residual(&mu, &c, &global, 1e-4).is_err());
    }

    #[test]
    fn weak_residual_on_heat_solve() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 512, 1e-3, 300).unwrap());
        let c = coeff::heat(1);
        let rho0 = sample_initial(&grid, &GaussianState::standard(1));
        let out = solve_fp(&c, &rho0, grid.clone(), &SolverConfig::default()).unwrap();
        let family = crate::testfn::standard_bump_family(5, grid.t_end(), grid.lo(), grid.hi(), 1);
        for u in &family {
            let rep = weak_residual(&out.field, &c, u, 1e-4).unwrap();
            assert_eq!(
                rep.verdict,
                Verdict::Holds,
                "{}: normalized residual {:.3e}",
                u.label,
                rep.normalized()
            );
        }
    }

    #[test]
    fn initial_condition_examples() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 256, 1e-3, 20).unwrap());
        let st = GaussianState::standard(1);
        let nu = sample_initial(&grid, &st);
        let mu = DensityField::sample(
            grid.clone(),
            MassMode::Probability { tol: 1e-6 },
            move |_t, x| st.density(x),
        )
        .unwrap();
        let zetas = zeta_family(4, grid.lo(), grid.hi(), 1);
        let rep = initial_condition_residual(&mu, &nu, &zetas).unwrap();
        assert_eq!(rep.deviation_at_zero, 0.0);

        // too few bumps refused
        assert!(initial_condition_residual(&mu, &nu, &zetas[..2]).is_err());
    }

    #[test]
    fn initial_condition_deviation_linear_in_t1() {
        // heat flow: deviation at t1 shrinks ~linearly as dt halves
        let run = |dt: f64| -> f64 {
            let steps = (0.02 / dt) as usize;
            let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 512, dt, steps).unwrap());
            let c = coeff::heat(1);
            let rho0 = sample_initial(&grid, &GaussianState::standard(1));
            let out = solve_fp(&c, &rho0, grid.clone(), &SolverConfig::default()).unwrap();
            let zetas = zeta_family(3, grid.lo(), grid.hi(), 1);
            initial_condition_residual(&out.field, &rho0, &zetas)
                .unwrap()
                .deviation
        };
        let a = run(2e-3);
        let b = run(1e-3);
        let ratio = a / b;
        assert!(
            (1.5..3.0).contains(&ratio),
            "expected ~2x shrink, got {a} / {b} = {ratio}"
        );
    }

    #[test]
    fn initial_condition_shifted_nu_taylor() {
        let grid = Arc::new(SpaceTimeGrid::symmetric(1, 8.0, 1024, 1e-3, 4).unwrap());
        let h = grid.h(0);
        let narrow = GaussianState::new(vec![0.5], vec![0.04]).unwrap();
        let nu = sample_initial(&grid, &narrow);
        // mu slice shifted by one cell
        let shifted = GaussianState::new(vec![0.5 + h], vec![0.04]).unwrap();
        let mu = DensityField::sample(
            grid.clone(),
            MassMode::Probability { tol: 1e-3 },
            move |_t, x| shifted.density(x),
        )
        .unwrap();
        let zetas = zeta_family(3, grid.lo(), grid.hi(), 1);
        let rep = initial_condition_residual(&mu, &nu, &zetas).unwrap();
        // expected ~ h * max |int zeta' dnu|
        let expect = zetas
            .iter()
            .map(|z| {
                let w = grid.node_weights();
                let v: f64 = (0..grid.node_count())
                    .map(|i| {
                        let x = [grid.coord(0, i)];
                        w[i] * z.grad(&x)[0] * narrow.density(&x)
                    })
                    .sum();
                v.abs() * h
            })
            .fold(0.0f64, f64::max);
        assert_relative_eq!(rep.deviation, expect, max_relative = 0.25);
    }
}
