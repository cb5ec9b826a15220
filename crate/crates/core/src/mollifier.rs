//! Gaussian mollification of density slices and the convolution inequality.
//!
//! The kernel is the scaled standard Gaussian `e^{-d} g(x/e)`, truncated at
//! `trunc_radius * e` (default 8, tail below 1e-15) and renormalized to unit
//! discrete mass, so constants are reproduced exactly on interior cells.
//! Convolution uses zero extension beyond the box; the escaped mass is
//! reported, and is exactly zero for interior-supported slices.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::SpaceTimeGrid;

#[derive(Debug, Clone, Copy)]
pub struct MollifierSpec {
    pub epsilon: f64,
    /// Kernel truncation radius in units of epsilon.
    pub trunc_radius: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64) -> Self {
        MollifierSpec {
            epsilon,
            trunc_radius: 8.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MollifiedSlice {
    pub values: Vec<f64>,
    /// Mass lost through the box faces (zero-extension leakage).
    pub leaked_mass: f64,
}

/// Per-axis kernel weights at node offsets -m..=m, normalized so that
/// h * sum = 1 exactly.
fn kernel_1d(h: f64, spec: &MollifierSpec) -> Vec<f64> {
    let m = (spec.trunc_radius * spec.epsilon / h).ceil() as i64;
    let mut w: Vec<f64> = (-m..=m)
        .map(|k| {
            let x = k as f64 * h / spec.epsilon;
            (-0.5 * x * x).exp() / (spec.epsilon * (2.0 * std::f64::consts::PI).sqrt())
        })
        .collect();
    let mass: f64 = w.iter().sum::<f64>() * h;
    for v in &mut w {
        *v /= mass;
    }
    w
}

fn axis_stride(grid: &SpaceTimeGrid, axis: usize) -> usize {
    (0..axis).map(|a| grid.nodes(a)).product()
}

/// 1-d convolution along one axis with zero extension.
fn convolve_axis(grid: &SpaceTimeGrid, values: &[f64], axis: usize, kernel: &[f64]) -> Vec<f64> {
    let n = grid.nodes(axis);
    let stride = axis_stride(grid, axis);
    let h = grid.h(axis);
    let m = (kernel.len() - 1) / 2;
    let mut out = vec![0.0; values.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let i = grid.axis_indices(flat)[axis] as i64;
        let mut acc = 0.0;
        for (kk, wk) in kernel.iter().enumerate() {
            let j = i + (kk as i64 - m as i64);
            if j >= 0 && (j as usize) < n {
                let src = (flat as i64 + (j - i) * stride as i64) as usize;
                acc += wk * values[src];
            }
        }
        *o = acc * h;
    }
    out
}

/// Discrete convolution of a slice with the truncated, renormalized Gaussian
/// kernel (separable across axes). Refused when epsilon is below two cell
/// widths, where the discrete kernel aliases.
pub fn mollify(
    grid: &SpaceTimeGrid,
    slice: &[f64],
    spec: &MollifierSpec,
) -> Result<MollifiedSlice> {
    if !(spec.epsilon > 0.0) {
        return Err(Error::Refused("mollifier scale must be positive".into()));
    }
    let h_max = grid.max_h();
    if spec.epsilon < 2.0 * h_max {
        return Err(Error::Refused(format!(
            "mollifier scale {} unresolvable: below two cell widths (2h = {})",
            spec.epsilon,
            2.0 * h_max
        )));
    }
    let mut values = slice.to_vec();
    for axis in 0..grid.dim() {
        let kernel = kernel_1d(grid.h(axis), spec);
        values = convolve_axis(grid, &values, axis, &kernel);
    }
    let leaked_mass = grid.integrate(slice) - grid.integrate(&values);
    Ok(MollifiedSlice {
        values,
        leaked_mass,
    })
}

/// f_e = mollified slice + e max(1,|x|)^{-d-1}: strictly positive everywhere.
pub fn f_epsilon(grid: &SpaceTimeGrid, slice: &[f64], spec: &MollifierSpec) -> Result<Vec<f64>> {
    let mut out = mollify(grid, slice, spec)?.values;
    let d = grid.dim() as i32;
    for (i, v) in out.iter_mut().enumerate() {
        let p = grid.node_point(i);
        let r = p[..grid.dim()].iter().map(|x| x * x).sum::<f64>().sqrt();
        *v += spec.epsilon * r.max(1.0).powi(-d - 1);
    }
    Ok(out)
}

/// Lower bound on f_e over the box: e max(1, R_corner)^{-d-1}.
pub fn f_epsilon_floor(grid: &SpaceTimeGrid, spec: &MollifierSpec) -> f64 {
    spec.epsilon * grid.corner_radius().max(1.0).powi(-(grid.dim() as i32) - 1)
}

/// Direct discrete convolution of two node fields on the same grid (uniform
/// cell-volume weights, zero extension). Needs the box origin to sit on the
/// lattice so coordinate differences are again lattice points.
pub fn discrete_convolution(grid: &SpaceTimeGrid, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    let dim = grid.dim();
    let mut shift = [0i64; 3];
    for axis in 0..dim {
        let s = -grid.lo()[axis] / grid.h(axis);
        if (s - s.round()).abs() > 1e-9 {
            return Err(Error::Refused(
                "convolution grid must contain the origin on its lattice".into(),
            ));
        }
        shift[axis] = s.round() as i64;
    }
    let cv = grid.cell_volume();
    let n = grid.node_count();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let ii = grid.axis_indices(i);
        let mut acc = 0.0;
        for (j, fj) in f.iter().enumerate() {
            if *fj == 0.0 {
                continue;
            }
            let jj = grid.axis_indices(j);
            // index of x_i - x_j on the lattice
            let mut idx = [0usize; 3];
            let mut inside = true;
            for axis in 0..dim {
                let k = ii[axis] as i64 - jj[axis] as i64 + shift[axis];
                if k < 0 || k as usize >= grid.nodes(axis) {
                    inside = false;
                    break;
                }
                idx[axis] = k as usize;
            }
            if inside {
                acc += fj * g[grid.flat_index(&idx[..dim])];
            }
        }
        *o = acc * cv;
    }
    Ok(out)
}

/// Both sides of the convolution inequality
/// `int |(psi f1)*f2|^2 / (f1*f2) <= int psi^2 f1 * int f2`
/// by uniform-weight quadrature (the discrete version is exact Cauchy-Schwarz
/// for sums, so the gap can only be negative through roundoff).
pub fn convolution_inequality_gap(
    grid: &SpaceTimeGrid,
    f1: &[f64],
    f2: &[f64],
    psi: &[f64],
) -> Result<(f64, f64)> {
    if f1.iter().chain(f2.iter()).any(|v| *v < 0.0) {
        return Err(Error::Config("f1, f2 must be nonnegative".into()));
    }
    let cv = grid.cell_volume();
    let psi_f1: Vec<f64> = psi.iter().zip(f1).map(|(p, v)| p * v).collect();
    let num = discrete_convolution(grid, &psi_f1, f2)?;
    let den = discrete_convolution(grid, f1, f2)?;
    let lhs = num
        .iter()
        .zip(&den)
        .map(|(n, d)| if *d > 0.0 { n * n / d } else { 0.0 })
        .sum::<f64>()
        * cv;
    let int_psi2_f1: f64 = psi.iter().zip(f1).map(|(p, v)| p * p * v).sum::<f64>() * cv;
    let int_f2: f64 = f2.iter().sum::<f64>() * cv;
    Ok((lhs, int_psi2_f1 * int_f2))
}

/// Random piecewise-constant nonnegative field supported on the middle half
/// of the box (for inequality property tests).
pub fn random_interior_field(grid: &SpaceTimeGrid, rng: &mut impl Rng, signed: bool) -> Vec<f64> {
    (0..grid.node_count())
        .map(|i| {
            let idx = grid.axis_indices(i);
            let interior = (0..grid.dim()).all(|a| {
                let n = grid.nodes(a);
                idx[a] > n / 4 && idx[a] < 3 * n / 4
            });
            if interior {
                if signed {
                    rng.gen_range(-2.0..2.0)
                } else {
                    rng.gen_range(0.0..1.0)
                }
            } else {
                0.0
            }
        })
        .collect()
}
