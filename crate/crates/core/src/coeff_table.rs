//! Time-independent coefficient tables on regular lattices, multilinearly
//! interpolated. CSV layout: a header row naming the columns, then one row
//! per lattice point. Supported headers:
//!
//! d = 1: `x1,a11,b1`
//! d = 2: `x1,x2,a11,a12,a22,b1,b2`
//!
//! Rows may appear in any order but must fill the full tensor lattice.
//! Evaluation outside the table box is a domain error.

use std::path::Path;
use std::sync::Arc;

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::linalg::SmallMat;

struct Table {
    dim: usize,
    coords: Vec<Vec<f64>>, // sorted axis coordinates
    a: Vec<Vec<f64>>,      // per symmetric entry (a11[,a12,a22]) flattened x1-fastest
    b: Vec<Vec<f64>>,      // per component
}

impl Table {
    fn flat(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for axis in (0..self.dim).rev() {
            f = f * self.coords[axis].len() + idx[axis];
        }
        f
    }

    /// Multilinear interpolation of one stored channel.
    fn interp(&self, channel: &[f64], x: &[f64]) -> f64 {
        let mut base = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for axis in 0..self.dim {
            let c = &self.coords[axis];
            let pos = x[axis];
            let i = match c.binary_search_by(|v| v.partial_cmp(&pos).unwrap()) {
                Ok(i) => i.min(c.len() - 2),
                Err(i) => i.saturating_sub(1).min(c.len() - 2),
            };
            base[axis] = i;
            frac[axis] = (pos - c[i]) / (c[i + 1] - c[i]);
        }
        match self.dim {
            1 => {
                let v0 = channel[self.flat(&[base[0]])];
                let v1 = channel[self.flat(&[base[0] + 1])];
                v0 + frac[0] * (v1 - v0)
            }
            2 => {
                let mut acc = 0.0;
                for (di, wi) in [(0, 1.0 - frac[0]), (1, frac[0])] {
                    for (dj, wj) in [(0, 1.0 - frac[1]), (1, frac[1])] {
                        acc += wi * wj * channel[self.flat(&[base[0] + di, base[1] + dj])];
                    }
                }
                acc
            }
            _ => unreachable!(),
        }
    }
}

pub fn from_table(path: &Path) -> Result<CoefficientField> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty coefficient table".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let (dim, expected): (usize, Vec<&str>) = if cols == ["x1", "a11", "b1"] {
        (1, cols.clone())
    } else if cols == ["x1", "x2", "a11", "a12", "a22", "b1", "b2"] {
        (2, cols.clone())
    } else {
        return Err(Error::Config(format!(
            "unrecognized coefficient table header '{header}'"
        )));
    };
    let ncol = expected.len();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("table row {}: bad number '{v}'", lineno + 2))
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != ncol {
            return Err(Error::Config(format!(
                "table row {}: expected {ncol} columns",
                lineno + 2
            )));
        }
        rows.push(vals);
    }

    let mut coords: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for row in &rows {
        for axis in 0..dim {
            coords[axis].push(row[axis]);
        }
    }
    for c in &mut coords {
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        c.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        if c.len() < 2 {
            return Err(Error::Config(
                "table needs at least 2 points per axis".into(),
            ));
        }
    }
    let lattice: usize = coords.iter().map(Vec::len).product();
    if rows.len() != lattice {
        return Err(Error::Config(format!(
            "table has {} rows, lattice needs {lattice}",
            rows.len()
        )));
    }

    let n_a = if dim == 1 { 1 } else { 3 };
    let mut table = Table {
        dim,
        coords,
        a: vec![vec![f64::NAN; lattice]; n_a],
        b: vec![vec![f64::NAN; lattice]; dim],
    };
    for row in &rows {
        let mut idx = [0usize; 2];
        for axis in 0..dim {
            idx[axis] = table.coords[axis]
                .iter()
                .position(|c| (c - row[axis]).abs() < 1e-12)
                .unwrap();
        }
        let f = table.flat(&idx[..dim]);
        for k in 0..n_a {
            table.a[k][f] = row[dim + k];
        }
        for k in 0..dim {
            table.b[k][f] = row[dim + n_a + k];
        }
    }
    if table
        .a
        .iter()
        .chain(table.b.iter())
        .any(|ch| ch.iter().any(|v| v.is_nan()))
    {
        return Err(Error::Config("table rows do not cover the lattice".into()));
    }

    let lo: Vec<f64> = table.coords.iter().map(|c| c[0]).collect();
    let hi: Vec<f64> = table.coords.iter().map(|c| *c.last().unwrap()).collect();
    let t1 = Arc::new(table);
    let t2 = t1.clone();
    let field = CoefficientField::new(
        dim,
        Arc::new(move |_t, x: &[f64]| {
            let mut m = SmallMat::zeros(dim);
            if dim == 1 {
                m.set(0, 0, t1.interp(&t1.a[0], x));
            } else {
                let (a11, a12, a22) = (
                    t1.interp(&t1.a[0], x),
                    t1.interp(&t1.a[1], x),
                    t1.interp(&t1.a[2], x),
                );
                m.set(0, 0, a11);
                m.set(0, 1, a12);
                m.set(1, 0, a12);
                m.set(1, 1, a22);
            }
            m
        }),
        Arc::new(move |_t, x: &[f64]| {
            let mut b = [0.0; 3];
            for k in 0..dim {
                b[k] = t2.interp(&t2.b[k], x);
            }
            b
        }),
    )
    .with_domain(lo, hi)
    .with_name("table");
    Ok(field)
}
