//! Uniform space-time grids on a truncated box.
//!
//! Values live on the nodes of a tensor grid with `cells[i]` cells
//! (`cells[i] + 1` nodes) per axis; spatial quadrature is the composite
//! trapezoidal rule, so boundary nodes carry half weights. Time slices are
//! uniformly spaced, `times[0] = 0`.

use crate::error::{Error, Result};
use crate::linalg::MAX_DIM;

pub type Point = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cells: Vec<usize>,
    times: Vec<f64>,
    weights: Vec<f64>,
}

impl SpaceTimeGrid {
    pub fn new(
        lo: Vec<f64>,
        hi: Vec<f64>,
        cells: Vec<usize>,
        dt: f64,
        steps: usize,
    ) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Config(format!("grid dimension {dim} not in 1..=3")));
        }
        if hi.len() != dim || cells.len() != dim {
            return Err(Error::Config("grid axis arrays disagree in length".into()));
        }
        for i in 0..dim {
            if cells[i] < 4 {
                return Err(Error::Config(format!(
                    "axis {i}: need at least 4 cells, got {}",
                    cells[i]
                )));
            }
            if !(hi[i] > lo[i]) {
                return Err(Error::Config(format!("axis {i}: empty interval")));
            }
        }
        if !(dt > 0.0) {
            return Err(Error::Config("time step must be positive".into()));
        }
        let t_end = dt * steps as f64;
        if t_end > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "final time {t_end} exceeds the unit horizon"
            )));
        }
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let mut grid = SpaceTimeGrid {
            dim,
            lo,
            hi,
            cells,
            times,
            weights: Vec::new(),
        };
        grid.weights = grid.build_weights();
        Ok(grid)
    }

    /// Symmetric box [-radius, radius]^d with `cells` cells per axis.
    pub fn symmetric(dim: usize, radius: f64, cells: usize, dt: f64, steps: usize) -> Result<Self> {
        Self::new(
            vec![-radius; dim],
            vec![radius; dim],
            vec![cells; dim],
            dt,
            steps,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.cells[axis] + 1
    }

    pub fn node_count(&self) -> usize {
        (0..self.dim).map(|i| self.nodes(i)).product()
    }

    pub fn h(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.cells[axis] as f64
    }

    pub fn max_h(&self) -> f64 {
        (0..self.dim).map(|i| self.h(i)).fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|i| self.h(i)).product()
    }

    pub fn box_volume(&self) -> f64 {
        (0..self.dim).map(|i| self.hi[i] - self.lo[i]).product()
    }

    /// Radius of the box corner, max_x |x|.
    pub fn corner_radius(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.lo[i].abs().max(self.hi[i].abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Largest slice index k with times[k] <= tau (within roundoff).
    pub fn slice_at(&self, tau: f64) -> Result<usize> {
        let eps = 1e-9 * self.dt().max(1e-30);
        if tau < -eps || tau > self.t_end() + eps {
            return Err(Error::Domain(format!(
                "time {tau} outside grid range [0, {}]",
                self.t_end()
            )));
        }
        let k = ((tau + eps) / self.dt()).floor() as usize;
        Ok(k.min(self.steps()))
    }

    pub fn coord(&self, axis: usize, idx: usize) -> f64 {
        self.lo[axis] + idx as f64 * self.h(axis)
    }

    #[inline]
    pub fn axis_indices(&self, flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rest = flat;
        for axis in 0..self.dim {
            let n = self.nodes(axis);
            out[axis] = rest % n;
            rest /= n;
        }
        out
    }

    #[inline]
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0usize;
        for axis in (0..self.dim).rev() {
            flat = flat * self.nodes(axis) + idx[axis];
        }
        flat
    }

    #[inline]
    pub fn node_point(&self, flat: usize) -> Point {
        let idx = self.axis_indices(flat);
        let mut p = [0.0; 3];
        for axis in 0..self.dim {
            p[axis] = self.coord(axis, idx[axis]);
        }
        p
    }

    fn build_weights(&self) -> Vec<f64> {
        let n = self.node_count();
        let mut w = vec![0.0; n];
        for flat in 0..n {
            let idx = self.axis_indices(flat);
            let mut v = 1.0;
            for axis in 0..self.dim {
                let edge = idx[axis] == 0 || idx[axis] == self.cells[axis];
                v *= self.h(axis) * if edge { 0.5 } else { 1.0 };
            }
            w[flat] = v;
        }
        w
    }

    /// Trapezoidal quadrature weights per node (product rule over axes).
    pub fn node_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trapezoid quadrature of node samples over the box.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.node_count());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// True if the node lies on a box face.
    pub fn is_boundary_node(&self, flat: usize) -> bool {
        let idx = self.axis_indices(flat);
        (0..self.dim).any(|a| idx[a] == 0 || idx[a] == self.cells[a])
    }

    /// Half-resolution companion (every other node, every other slice when the
    /// counts are even); used for Richardson error estimates.
    pub fn coarsened(&self) -> Option<(SpaceTimeGrid, CoarseMap)> {
        if self.cells.iter().any(|&n| n % 2 != 0 || n / 2 < 4) {
            return None;
        }
        let time_stride = if self.steps() >= 2 && self.steps() % 2 == 0 {
            2
        } else {
            1
        };
        let coarse = SpaceTimeGrid::new(
            self.lo.clone(),
            self.hi.clone(),
            self.cells.iter().map(|&n| n / 2).collect(),
            self.dt() * time_stride as f64,
            self.steps() / time_stride,
        )
        .ok()?;
        let mut node_map = Vec::with_capacity(coarse.node_count());
        for flat in 0..coarse.node_count() {
            let idx = coarse.axis_indices(flat);
            let fine: Vec<usize> = (0..self.dim).map(|a| idx[a] * 2).collect();
            node_map.push(self.flat_index(&fine));
        }
        Some((
            coarse,
            CoarseMap {
                node_map,
                time_stride,
            },
        ))
    }
}

/// Maps coarse nodes/slices onto the fine grid they were sampled from.
#[derive(Debug, Clone)]
pub struct CoarseMap {
    pub node_map: Vec<usize>,
    pub time_stride: usize,
}
