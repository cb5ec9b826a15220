//! Discrete space-time scalar fields and the functional toolkit: mixed
//! L^{p,q} norms, entropy, Fisher information, log-moments and W^{p,1}-type
//! norms, all by composite trapezoidal quadrature with a paired
//! half-resolution evaluation for error estimates.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::grid::{Point, SpaceTimeGrid};

/// Relative floor under which a density cell contributes zero to
/// Fisher-type integrands (the `grad rho / rho := 0 where rho = 0`
/// convention, robust to roundoff).
pub const RHO_FLOOR_REL: f64 = 1e-12;

/// Weight for log-moments: ln max(|x|,1) or ln(1+|x|).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogWeight {
    MaxLog,
    Log1p,
}

impl LogWeight {
    pub fn eval(&self, x: &[f64], dim: usize) -> f64 {
        let r = x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
        match self {
            LogWeight::MaxLog => r.max(1.0).ln(),
            LogWeight::Log1p => (1.0 + r).ln(),
        }
    }
}

// ---------------------------------------------------------------------------
// fields

/// Arbitrary scalar field on a space-time grid (one value vector per slice).
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<SpaceTimeGrid>,
    values: Vec<Vec<f64>>,
}

impl ScalarField {
    pub fn new(grid: Arc<SpaceTimeGrid>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != grid.times().len() {
            return Err(Error::Config(format!(
                "field has {} slices, grid has {} times",
                values.len(),
                grid.times().len()
            )));
        }
        let n = grid.node_count();
        if values.iter().any(|s| s.len() != n) {
            return Err(Error::Config("slice length does not match the grid".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn sample(grid: Arc<SpaceTimeGrid>, f: impl Fn(f64, &[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = grid
            .times()
            .iter()
            .map(|&t| {
                (0..grid.node_count())
                    .map(|i| {
                        let p = grid.node_point(i);
                        f(t, &p[..dim])
                    })
                    .collect()
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<SpaceTimeGrid> {
        self.grid.clone()
    }

    pub fn slices(&self) -> usize {
        self.values.len()
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .map(|s| s.iter().map(|&v| f(v)).collect())
                .collect(),
        }
    }

    /// Half-resolution subsample for Richardson error estimates; None when
    /// the cell counts cannot be halved.
    pub fn coarsened(&self) -> Option<ScalarField> {
        let (coarse, map) = self.grid.coarsened()?;
        let values = self
            .values
            .iter()
            .step_by(map.time_stride)
            .map(|s| map.node_map.iter().map(|&i| s[i]).collect())
            .collect();
        Some(ScalarField {
            grid: Arc::new(coarse),
            values,
        })
    }
}

/// How per-slice mass is validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassMode {
    /// Each slice integrates to 1 within tol.
    Probability { tol: f64 },
    /// Slice integrals merely uniformly bounded by cap.
    Bounded { cap: f64 },
}

impl Default for MassMode {
    fn default() -> Self {
        MassMode::Probability { tol: 1e-3 }
    }
}

/// Nonnegative density field rho(t, x), the discrete realization of
/// mu = rho dt dx, with per-slice mass tracking.
#[derive(Debug, Clone)]
pub struct DensityField {
    field: ScalarField,
    mode: MassMode,
    mass: Vec<f64>,
}

impl DensityField {
    pub fn new(field: ScalarField, mode: MassMode) -> Result<Self> {
        for (k, s) in field.values.iter().enumerate() {
            if let Some(v) = s.iter().find(|v| **v < 0.0 || !v.is_finite()) {
                return Err(Error::Config(format!(
                    "slice {k}: negative or non-finite density {v}"
                )));
            }
        }
        let mass: Vec<f64> = field
            .values
            .iter()
            .map(|s| field.grid.integrate(s))
            .collect();
        for (k, &m) in mass.iter().enumerate() {
            match mode {
                MassMode::Probability { tol } => {
                    if (m - 1.0).abs() > tol {
                        return Err(Error::Config(format!(
                            "slice {k}: mass {m} outside probability tolerance {tol}"
                        )));
                    }
                }
                MassMode::Bounded { cap } => {
                    if m > cap {
                        return Err(Error::Config(format!(
                            "slice {k}: mass {m} exceeds bound {cap}"
                        )));
                    }
                }
            }
        }
        Ok(DensityField { field, mode, mass })
    }

    /// Skips validation; for internal construction from already-checked data.
    pub(crate) fn from_parts_unchecked(field: ScalarField, mode: MassMode) -> Self {
        let mass = field
            .values
            .iter()
            .map(|s| field.grid.integrate(s))
            .collect();
        DensityField { field, mode, mass }
    }

    pub fn as_scalar(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        self.field.grid()
    }

    pub fn grid_arc(&self) -> Arc<SpaceTimeGrid> {
        self.field.grid_arc()
    }

    pub fn mode(&self) -> MassMode {
        self.mode
    }

    pub fn slices(&self) -> usize {
        self.field.slices()
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        self.field.slice(k)
    }

    pub fn mass(&self, k: usize) -> f64 {
        self.mass[k]
    }

    /// Trapezoid mass carried by nodes on the box faces at slice k; the
    /// truncation-health indicator folded into report error bars.
    pub fn boundary_mass(&self, k: usize) -> f64 {
        let g = self.grid();
        let w = g.node_weights();
        self.slice(k)
            .iter()
            .enumerate()
            .filter(|(i, _)| g.is_boundary_node(*i))
            .map(|(i, v)| v * w[i])
            .sum()
    }

    pub fn max_boundary_mass(&self) -> f64 {
        (0..self.slices())
            .map(|k| self.boundary_mass(k))
            .fold(0.0, f64::max)
    }

    /// Mass missing from the box relative to a probability solution,
    /// max over slices of |1 - mass_k| (0 in bounded mode).
    pub fn mass_deficit(&self) -> f64 {
        match self.mode {
            MassMode::Probability { .. } => self
                .mass
                .iter()
                .map(|m| (m - 1.0).abs())
                .fold(0.0, f64::max),
            MassMode::Bounded { .. } => 0.0,
        }
    }

    pub fn coarsened(&self) -> Option<DensityField> {
        Some(DensityField::from_parts_unchecked(
            self.field.coarsened()?,
            self.mode,
        ))
    }

    /// Sample a time-indexed family of closed-form densities.
    pub fn sample(
        grid: Arc<SpaceTimeGrid>,
        mode: MassMode,
        f: impl Fn(f64, &[f64]) -> f64,
    ) -> Result<Self> {
        DensityField::new(ScalarField::sample(grid, f), mode)
    }
}

// ---------------------------------------------------------------------------
// gradients

fn strides(grid: &SpaceTimeGrid) -> [usize; 3] {
    let mut s = [1usize; 3];
    for axis in 1..grid.dim() {
        s[axis] = s[axis - 1] * grid.nodes(axis - 1);
    }
    s
}

/// Spatial gradient at a node: centered second-order differences inside,
/// one-sided second-order at box faces.
pub fn gradient_at(grid: &SpaceTimeGrid, slice: &[f64], flat: usize) -> Point {
    let idx = grid.axis_indices(flat);
    let st = strides(grid);
    let mut g = [0.0; 3];
    for axis in 0..grid.dim() {
        let h = grid.h(axis);
        let n = grid.nodes(axis);
        let i = idx[axis];
        g[axis] = if i == 0 {
            (-3.0 * slice[flat] + 4.0 * slice[flat + st[axis]] - slice[flat + 2 * st[axis]])
                / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * slice[flat] - 4.0 * slice[flat - st[axis]] + slice[flat - 2 * st[axis]])
                / (2.0 * h)
        } else {
            (slice[flat + st[axis]] - slice[flat - st[axis]]) / (2.0 * h)
        };
    }
    g
}

// ---------------------------------------------------------------------------
// norms

/// Time exponent of a mixed norm: finite q or the essential sup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeExponent {
    Finite(f64),
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub p: f64,
    pub q: TimeExponent,
    pub tau: f64,
}

impl NormSpec {
    pub fn new(p: f64, q: TimeExponent, tau: f64) -> Result<Self> {
        if p < 1.0 {
            return Err(Error::Config(format!("norm exponent p = {p} < 1")));
        }
        if let TimeExponent::Finite(q) = q {
            if q < 1.0 {
                return Err(Error::Config(format!("norm exponent q = {q} < 1")));
            }
        }
        if !(tau > 0.0) {
            return Err(Error::Config("norm horizon tau must be positive".into()));
        }
        Ok(NormSpec { p, q, tau })
    }
}

/// L^p norm of one slice over the box.
pub fn lp_norm_slice(grid: &SpaceTimeGrid, slice: &[f64], p: f64) -> f64 {
    grid.node_weights()
        .iter()
        .zip(slice)
        .map(|(w, v)| w * v.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Trapezoid integral in time of per-slice values s_k over [0, tau].
fn time_trapezoid(grid: &SpaceTimeGrid, per_slice: &[f64], k_tau: usize) -> f64 {
    if k_tau == 0 {
        return 0.0;
    }
    let dt = grid.dt();
    let mut acc = 0.5 * (per_slice[0] + per_slice[k_tau]);
    for v in &per_slice[1..k_tau] {
        acc += v;
    }
    acc * dt
}

/// Mixed norm ||f||_{p,q,tau}: L^p in space, then L^q (or sup) in time.
pub fn mixed_norm(f: &ScalarField, spec: &NormSpec) -> Result<f64> {
    let grid = f.grid();
    let k_tau = grid.slice_at(spec.tau)?;
    let slice_norms: Vec<f64> = (0..=k_tau)
        .map(|k| lp_norm_slice(grid, f.slice(k), spec.p))
        .collect();
    Ok(match spec.q {
        TimeExponent::Infinity => slice_norms.iter().cloned().fold(0.0, f64::max),
        TimeExponent::Finite(q) => {
            let powered: Vec<f64> = slice_norms.iter().map(|s| s.powf(q)).collect();
            time_trapezoid(grid, &powered, k_tau).powf(1.0 / q)
        }
    })
}

/// ||f||_{H^{p,q}} with per-slice W^{p,1} norm ||f||_p + ||grad f||_p.
pub fn h_pq_norm(f: &ScalarField, p: f64, q: f64, tau: f64) -> Result<f64> {
    let grid = f.grid();
    let k_tau = grid.slice_at(tau)?;
    let w = grid.node_weights();
    let per_slice: Vec<f64> = (0..=k_tau)
        .map(|k| {
            let slice = f.slice(k);
            let lp = lp_norm_slice(grid, slice, p);
            let grad_p = (0..slice.len())
                .map(|i| {
                    let g = gradient_at(grid, slice, i);
                    let mag = g[..grid.dim()].iter().map(|v| v * v).sum::<f64>().sqrt();
                    w[i] * mag.powf(p)
                })
                .sum::<f64>()
                .powf(1.0 / p);
            (lp + grad_p).powf(q)
        })
        .collect();
    Ok(time_trapezoid(grid, &per_slice, k_tau).powf(1.0 / q))
}

// ---------------------------------------------------------------------------
// entropy / Fisher functionals

/// integral of rho ln rho with 0 ln 0 := 0.
pub fn entropy_slice(grid: &SpaceTimeGrid, slice: &[f64]) -> f64 {
    grid.node_weights()
        .iter()
        .zip(slice)
        .map(|(w, &v)| if v > 0.0 { w * v * v.ln() } else { 0.0 })
        .sum()
}

/// integral of rho max(0, ln rho): the upper entropy part that actually
/// enters the Fisher bound (negative entropy can only help).
pub fn positive_entropy_slice(grid: &SpaceTimeGrid, slice: &[f64]) -> f64 {
    grid.node_weights()
        .iter()
        .zip(slice)
        .map(|(w, &v)| if v > 1.0 { w * v * v.ln() } else { 0.0 })
        .sum()
}

/// integral of |grad rho|^2 / rho over one slice; cells below the relative
/// floor contribute zero.
pub fn fisher_slice(grid: &SpaceTimeGrid, slice: &[f64]) -> f64 {
    let floor = RHO_FLOOR_REL * slice.iter().cloned().fold(0.0, f64::max);
    let w = grid.node_weights();
    slice
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v <= floor {
                0.0
            } else {
                let g = gradient_at(grid, slice, i);
                let g2: f64 = g[..grid.dim()].iter().map(|x| x * x).sum();
                w[i] * g2 / v
            }
        })
        .sum()
}

/// Fisher time integral over [0, tau] (trapezoid over slices).
pub fn fisher_time_integral(rho: &DensityField, tau: f64) -> Result<f64> {
    let grid = rho.grid();
    let k_tau = grid.slice_at(tau)?;
    let per: Vec<f64> = (0..=k_tau)
        .map(|k| fisher_slice(grid, rho.slice(k)))
        .collect();
    Ok(time_trapezoid(grid, &per, k_tau))
}

/// integral over [0,tau] x box of <A grad rho, grad rho> / rho.
/// Fails naming the first cell where A is not positive definite.
pub fn weighted_fisher(rho: &DensityField, coeffs: &CoefficientField, tau: f64) -> Result<f64> {
    let grid = rho.grid();
    let k_tau = grid.slice_at(tau)?;
    let w = grid.node_weights();
    let dim = grid.dim();
    let mut per = Vec::with_capacity(k_tau + 1);
    for k in 0..=k_tau {
        let t = grid.times()[k];
        let slice = rho.slice(k);
        let floor = RHO_FLOOR_REL * slice.iter().cloned().fold(0.0, f64::max);
        let mut acc = 0.0;
        for (i, &v) in slice.iter().enumerate() {
            if v <= floor {
                continue;
            }
            let p = grid.node_point(i);
            let a = coeffs.a(t, &p[..dim])?;
            if !(a.min_eigenvalue() > 0.0) {
                return Err(Error::Refused(format!(
                    "A not positive definite at t={t}, node {i} ({:?})",
                    &p[..dim]
                )));
            }
            let g = gradient_at(grid, slice, i);
            acc += w[i] * a.quad_form(&g[..dim]) / v;
        }
        per.push(acc);
    }
    Ok(time_trapezoid(grid, &per, k_tau))
}

/// integral of W(x)^k rho over one slice, W the selected log weight.
pub fn log_moment(grid: &SpaceTimeGrid, slice: &[f64], k: u32, weight: LogWeight) -> f64 {
    let dim = grid.dim();
    grid.node_weights()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let p = grid.node_point(i);
            w * weight.eval(&p[..dim], dim).powi(k as i32) * slice[i]
        })
        .sum()
}

/// Space-time integral of W(x)^k rho over [0, tau].
pub fn log_moment_time_integral(
    rho: &DensityField,
    k: u32,
    weight: LogWeight,
    tau: f64,
) -> Result<f64> {
    let grid = rho.grid();
    let k_tau = grid.slice_at(tau)?;
    let per: Vec<f64> = (0..=k_tau)
        .map(|s| log_moment(grid, rho.slice(s), k, weight))
        .collect();
    Ok(time_trapezoid(grid, &per, k_tau))
}

/// Richardson error estimate: evaluate a functional on the field and its
/// half-resolution subsample; the O(h^2) model gives |fine - coarse| / 3 as
/// an estimate of the fine-grid error. Falls back to a zero estimate when
/// the grid cannot be coarsened.
pub fn with_error<F>(f: &ScalarField, functional: F) -> Result<(f64, f64)>
where
    F: Fn(&ScalarField) -> Result<f64>,
{
    let fine = functional(f)?;
    match f.coarsened() {
        Some(c) => {
            let coarse = functional(&c)?;
            Ok((fine, (fine - coarse).abs() / 3.0))
        }
        None => Ok((fine, 0.0)),
    }
}

/// Richardson pairing for density functionals.
pub fn with_error_density<F>(rho: &DensityField, functional: F) -> Result<(f64, f64)>
where
    F: Fn(&DensityField) -> Result<f64>,
{
    let fine = functional(rho)?;
    match rho.coarsened() {
        Some(c) => {
            let coarse = functional(&c)?;
            Ok((fine, (fine - coarse).abs() / 3.0))
        }
        None => Ok((fine, 0.0)),
    }
}

// ---------------------------------------------------------------------------
// serialization

const BIN_MAGIC: &[u8; 4] = b"FBDF";

impl DensityField {
    /// CSV rows `slice,t,x1[,x2[,x3]],value`.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let grid = self.grid();
        let dim = grid.dim();
        let mut header = String::from("slice,t");
        for i in 1..=dim {
            header.push_str(&format!(",x{i}"));
        }
        header.push_str(",value");
        writeln!(out, "{header}")?;
        for (k, &t) in grid.times().iter().enumerate() {
            for i in 0..grid.node_count() {
                let p = grid.node_point(i);
                let mut row = format!("{k},{}", fmt17(t));
                for c in &p[..dim] {
                    row.push(',');
                    row.push_str(&fmt17(*c));
                }
                row.push(',');
                row.push_str(&fmt17(self.slice(k)[i]));
                writeln!(out, "{row}")?;
            }
        }
        Ok(())
    }

    /// Rebuild a field from the CSV table format written by
    /// [`Self::write_csv`] (rows may be reordered; the lattice must be
    /// complete and uniform).
    pub fn read_csv(input: &mut dyn Read, mode: MassMode) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty density table".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 4
            || cols[0] != "slice"
            || cols[1] != "t"
            || *cols.last().unwrap() != "value"
        {
            return Err(Error::Config(format!(
                "unrecognized density header '{header}'"
            )));
        }
        let dim = cols.len() - 3;
        if dim == 0 || dim > 3 {
            return Err(Error::Config(format!("unsupported dimension {dim}")));
        }

        struct Row {
            k: usize,
            t: f64,
            x: [f64; 3],
            value: f64,
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != cols.len() {
                return Err(Error::Config(format!("row {}: wrong column count", n + 2)));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::Config(format!("row {}: bad number '{s}'", n + 2)))
            };
            let mut x = [0.0; 3];
            for (a, xa) in x.iter_mut().enumerate().take(dim) {
                *xa = parse(parts[2 + a])?;
            }
            rows.push(Row {
                k: parts[0]
                    .parse()
                    .map_err(|_| Error::Config(format!("row {}: bad slice index", n + 2)))?,
                t: parse(parts[1])?,
                x,
                value: parse(parts[cols.len() - 1])?,
            });
        }
        if rows.is_empty() {
            return Err(Error::Config("density table has no rows".into()));
        }

        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); dim];
        let mut slices = 0usize;
        for r in &rows {
            slices = slices.max(r.k + 1);
            for a in 0..dim {
                axes[a].push(r.x[a]);
            }
        }
        for ax in &mut axes {
            ax.sort_by(|p, q| p.partial_cmp(q).unwrap());
            ax.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
        }
        let mut times = vec![f64::NAN; slices];
        for r in &rows {
            times[r.k] = r.t;
        }
        if times.iter().any(|t| t.is_nan()) {
            return Err(Error::Config("missing time slices in density table".into()));
        }
        let dt = if slices > 1 {
            times[1] - times[0]
        } else {
            1e-3
        };
        for k in 1..slices {
            if ((times[k] - times[k - 1]) - dt).abs() > 1e-9 * dt.abs().max(1e-12) {
                return Err(Error::Config("density table times are not uniform".into()));
            }
        }
        let lo: Vec<f64> = axes.iter().map(|a| a[0]).collect();
        let hi: Vec<f64> = axes.iter().map(|a| *a.last().unwrap()).collect();
        let cells: Vec<usize> = axes.iter().map(|a| a.len() - 1).collect();
        let grid = SpaceTimeGrid::new(lo, hi, cells, dt, slices - 1)?;
        for a in 0..dim {
            for (i, &c) in axes[a].iter().enumerate() {
                if (grid.coord(a, i) - c).abs() > 1e-9 * grid.h(a) {
                    return Err(Error::Config(format!("axis {a} is not uniform")));
                }
            }
        }
        let n = grid.node_count();
        let mut values = vec![vec![f64::NAN; n]; slices];
        for r in &rows {
            let mut idx = [0usize; 3];
            for a in 0..dim {
                idx[a] = ((r.x[a] - grid.lo()[a]) / grid.h(a)).round() as usize;
            }
            values[r.k][grid.flat_index(&idx[..dim])] = r.value;
        }
        if values.iter().any(|s| s.iter().any(|v| v.is_nan())) {
            return Err(Error::Config(
                "density table does not cover the lattice".into(),
            ));
        }
        DensityField::new(ScalarField::new(Arc::new(grid), values)?, mode)
    }

    /// Compact dump: magic "FBDF", u32 version, u32 dim, u64 slices,
    /// u8 mass-mode tag + f64 parameter, per axis (f64 lo, f64 hi, u64
    /// cells), f64 dt, then slice-major node values; all little-endian.
    pub fn write_binary(&self, out: &mut dyn Write) -> Result<()> {
        let grid = self.grid();
        out.write_all(BIN_MAGIC)?;
        out.write_all(&1u32.to_le_bytes())?;
        out.write_all(&(grid.dim() as u32).to_le_bytes())?;
        out.write_all(&(self.slices() as u64).to_le_bytes())?;
        let (tag, param) = match self.mode {
            MassMode::Probability { tol } => (0u8, tol),
            MassMode::Bounded { cap } => (1u8, cap),
        };
        out.write_all(&[tag])?;
        out.write_all(&param.to_le_bytes())?;
        for i in 0..grid.dim() {
            out.write_all(&grid.lo()[i].to_le_bytes())?;
            out.write_all(&grid.hi()[i].to_le_bytes())?;
            out.write_all(&(grid.cells()[i] as u64).to_le_bytes())?;
        }
        out.write_all(&grid.dt().to_le_bytes())?;
        for k in 0..self.slices() {
            for v in self.slice(k) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(input: &mut dyn Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != BIN_MAGIC {
            return Err(Error::Config("not a density dump (bad magic)".into()));
        }
        let version = read_u32(input)?;
        if version != 1 {
            return Err(Error::Config(format!("unsupported dump version {version}")));
        }
        let dim = read_u32(input)? as usize;
        let slices = read_u64(input)? as usize;
        let mut tag = [0u8; 1];
        input.read_exact(&mut tag)?;
        let param = read_f64(input)?;
        let mode = match tag[0] {
            0 => MassMode::Probability { tol: param },
            1 => MassMode::Bounded { cap: param },
            t => return Err(Error::Config(format!("bad mass-mode tag {t}"))),
        };
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut cells = Vec::new();
        for _ in 0..dim {
            lo.push(read_f64(input)?);
            hi.push(read_f64(input)?);
            cells.push(read_u64(input)? as usize);
        }
        let dt = read_f64(input)?;
        let grid = SpaceTimeGrid::new(lo, hi, cells, dt, slices - 1)?;
        let n = grid.node_count();
        let mut values = Vec::with_capacity(slices);
        for _ in 0..slices {
            let mut slice = Vec::with_capacity(n);
            for _ in 0..n {
                slice.push(read_f64(input)?);
            }
            values.push(slice);
        }
        DensityField::new(ScalarField::new(Arc::new(grid), values)?, mode)
    }
}

fn read_u32(r: &mut dyn Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut dyn Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut dyn Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// 17 significant digits, enough to round-trip any f64 bit pattern.
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}
