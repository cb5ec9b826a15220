//! Dense symmetric-matrix helpers for spatial dimensions 1..=3.
//!
//! Everything the coefficient fields need (eigenvalue bounds, determinants,
//! small solves, quadratic forms) has a closed form at these sizes, so no
//! external linear-algebra crate is pulled in.

/// Row-major d x d matrix, d <= 3, stored inline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallMat {
    pub dim: usize,
    a: [f64; 9],
}

pub const MAX_DIM: usize = 3;

impl SmallMat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "dimension must be 1..=3");
        SmallMat { dim, a: [0.0; 9] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, c);
        }
        m
    }

    pub fn from_rows(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, rows[i * dim + j]);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * 3 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * 3 + j] = v;
    }

    /// Largest absolute off-diagonal asymmetry |a_ij - a_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// (A + A^T)/2.
    pub fn symmetrized(&self) -> SmallMat {
        let mut m = *self;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    pub fn scale(&self, c: f64) -> SmallMat {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.set(i, j, c * self.get(i, j));
            }
        }
        m
    }

    pub fn sub(&self, other: &SmallMat) -> SmallMat {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.set(i, j, self.get(i, j) - other.get(i, j));
            }
        }
        m
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            3 => {
                let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(0, 2));
                let (d, e, f) = (self.get(1, 0), self.get(1, 1), self.get(1, 2));
                let (g, h, i) = (self.get(2, 0), self.get(2, 1), self.get(2, 2));
                a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
            }
            _ => unreachable!(),
        }
    }

    /// Eigenvalues of the symmetric part, ascending. Closed form for d <= 3
    /// (trigonometric method at d = 3).
    pub fn sym_eigenvalues(&self) -> [f64; 3] {
        let m = self.symmetrized();
        match m.dim {
            1 => [m.get(0, 0), 0.0, 0.0],
            2 => {
                let (a, b, c) = (m.get(0, 0), m.get(0, 1), m.get(1, 1));
                let mid = 0.5 * (a + c);
                let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                [mid - rad, mid + rad, 0.0]
            }
            3 => {
                let p1 = m.get(0, 1).powi(2) + m.get(0, 2).powi(2) + m.get(1, 2).powi(2);
                let tr = m.get(0, 0) + m.get(1, 1) + m.get(2, 2);
                if p1 == 0.0 {
                    let mut d = [m.get(0, 0), m.get(1, 1), m.get(2, 2)];
                    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
                    return d;
                }
                let q = tr / 3.0;
                let p2 = (m.get(0, 0) - q).powi(2)
                    + (m.get(1, 1) - q).powi(2)
                    + (m.get(2, 2) - q).powi(2)
                    + 2.0 * p1;
                let p = (p2 / 6.0).sqrt();
                let mut b = SmallMat::zeros(3);
                for i in 0..3 {
                    for j in 0..3 {
                        let shift = if i == j { q } else { 0.0 };
                        b.set(i, j, (m.get(i, j) - shift) / p);
                    }
                }
                let r = (b.det() / 2.0).clamp(-1.0, 1.0);
                let phi = r.acos() / 3.0;
                let e1 = q + 2.0 * p * phi.cos();
                let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
                let e2 = tr - e1 - e3;
                let mut d = [e3, e2, e1];
                d.sort_by(|x, y| x.partial_cmp(y).unwrap());
                d
            }
            _ => unreachable!(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.sym_eigenvalues()[0]
    }

    /// Spectral operator norm (max |eigenvalue| of the symmetric part).
    pub fn operator_norm(&self) -> f64 {
        let e = self.sym_eigenvalues();
        e[..self.dim.max(1)]
            .iter()
            .take(self.dim)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..self.dim {
                s += self.get(i, j) * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// <A v, v>.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let av = self.mul_vec(v);
        (0..self.dim).map(|i| av[i] * v[i]).sum()
    }

    /// Solve A x = b by Cramer's rule. None if |det| is zero.
    pub fn solve(&self, b: &[f64]) -> Option<[f64; 3]> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let mut x = [0.0; 3];
        for k in 0..self.dim {
            let mut mk = *self;
            for i in 0..self.dim {
                mk.set(i, k, b[i]);
            }
            x[k] = mk.det() / det;
        }
        Some(x)
    }

    /// <A^{-1} v, v>. None for singular A.
    pub fn inv_quad_form(&self, v: &[f64]) -> Option<f64> {
        let x = self.solve(v)?;
        Some((0..self.dim).map(|i| x[i] * v[i]).sum())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
