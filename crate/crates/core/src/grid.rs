//! Scalar fields sampled at the nodes of a uniform 3D grid, read as
//! trilinear (Q1) finite-element functions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    origin: [f64; 3],
    h: f64,
    /// Cells per axis; there are `cells + 1` nodes per axis.
    cells: [usize; 3],
    values: Vec<f64>,
}

impl GridField {
    pub fn new(origin: [f64; 3], h: f64, cells: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || cells.contains(&0) {
            return Err(invalid("grid needs positive spacing and at least one cell per axis"));
        }
        let len = cells.iter().map(|c| c + 1).product();
        if values.len() != len {
            return Err(Error::Mismatch { expected: len, got: values.len() });
        }
        Ok(Self { origin, h, cells, values })
    }

    /// Cube `[lo, lo + side]³` split into `cells` cells per axis.
    pub fn from_fn(lo: [f64; 3], side: f64, cells: usize, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let h = side / cells as f64;
        let n = cells + 1;
        let mut values = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    values.push(f([
                        lo[0] + i as f64 * h,
                        lo[1] + j as f64 * h,
                        lo[2] + k as f64 * h,
                    ]));
                }
            }
        }
        Self::new(lo, h, [cells; 3], values)
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn nodes(&self) -> [usize; 3] {
        self.cells.map(|c| c + 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.nodes();
        (i * n[1] + j) * n[2] + k
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
            self.origin[2] + k as f64 * self.h,
        ]
    }

    /// Values at the 8 corners of cell `(i, j, k)`, corner bit order `xyz`.
    pub fn cell_values(&self, i: usize, j: usize, k: usize) -> [f64; 8] {
        std::array::from_fn(|c| self.at(i + (c >> 2 & 1), j + (c >> 1 & 1), k + (c & 1)))
    }

    /// Exact `∫|∇f|²` of the trilinear interpolant.
    pub fn gradient_energy(&self) -> f64 {
        let ke = element_stiffness(self.h);
        self.element_sum(|u| quad_form(&ke, u))
    }

    /// Exact `∫f²` of the trilinear interpolant.
    pub fn l2_norm_sq(&self) -> f64 {
        let me = element_mass(self.h);
        self.element_sum(|u| quad_form(&me, u))
    }

    fn element_sum(&self, f: impl Fn(&[f64; 8]) -> f64) -> f64 {
        let c = self.cells;
        let mut s = 0.0;
        for i in 0..c[0] {
            for j in 0..c[1] {
                for k in 0..c[2] {
                    s += f(&self.cell_values(i, j, k));
                }
            }
        }
        s
    }
}

fn quad_form(m: &[[f64; 8]; 8], u: &[f64; 8]) -> f64 {
    (0..8).map(|a| u[a] * (0..8).map(|b| m[a][b] * u[b]).sum::<f64>()).sum()
}

fn one_d(h: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let k = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
    let m = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
    (k, m)
}

/// Q1 stiffness on a cube cell of side `h`, corner bit order `xyz`.
pub fn element_stiffness(h: f64) -> [[f64; 8]; 8] {
    let (k, m) = one_d(h);
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let (ax, ay, az) = (a >> 2 & 1, a >> 1 & 1, a & 1);
            let (bx, by, bz) = (b >> 2 & 1, b >> 1 & 1, b & 1);
            k[ax][bx] * m[ay][by] * m[az][bz] + m[ax][bx] * k[ay][by] * m[az][bz] + m[ax][bx] * m[ay][by] * k[az][bz]
        })
    })
}

/// Q1 mass on a cube cell of side `h`.
pub fn element_mass(h: f64) -> [[f64; 8]; 8] {
    let (_, m) = one_d(h);
    std::array::from_fn(|a| {
        std::array::from_fn(|b| m[a >> 2 & 1][b >> 2 & 1] * m[a >> 1 & 1][b >> 1 & 1] * m[a & 1][b & 1])
    })
}
