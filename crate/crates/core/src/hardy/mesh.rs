//! Structured hexahedral meshes on a cube or a masked ball, with Q1
//! assembly into a 27-point stencil.

use crate::grid::{element_mass, element_stiffness};
use crate::linalg::CsrMatrix;
use crate::par;

use super::quadrature::{ElementMatrix, WeightedQuadrature};

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct Mesh {
    pub lo: [f64; 3],
    pub h: f64,
    pub cells: usize,
    active: Vec<bool>,
    /// Grid node → unknown, or `ABSENT`.
    dof: Vec<u32>,
    dofs: usize,
}

/// The three matrices of a Rayleigh problem on a common sparsity pattern.
pub struct Assembled {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub weighted: CsrMatrix,
}

impl Mesh {
    /// `cells³` cells of side `h` from `lo`; `keep` decides on cell centres.
    pub fn new(lo: [f64; 3], h: f64, cells: usize, keep: impl Fn([f64; 3]) -> bool, clamp_boundary: bool) -> Self {
        let n = cells;
        let mut active = vec![false; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = [
                        lo[0] + (i as f64 + 0.5) * h,
                        lo[1] + (j as f64 + 0.5) * h,
                        lo[2] + (k as f64 + 0.5) * h,
                    ];
                    active[(i * n + j) * n + k] = keep(c);
                }
            }
        }
        let nn = n + 1;
        // count active cells around every node
        let mut touching = vec![0u8; nn * nn * nn];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if active[(i * n + j) * n + k] {
                        for c in 0..8 {
                            touching[node_index(nn, i + (c >> 2 & 1), j + (c >> 1 & 1), k + (c & 1))] += 1;
                        }
                    }
                }
            }
        }
        let mut dof = vec![ABSENT; nn * nn * nn];
        let mut dofs = 0usize;
        for (d, &t) in dof.iter_mut().zip(&touching) {
            let free = if clamp_boundary { t == 8 } else { t > 0 };
            if free {
                *d = dofs as u32;
                dofs += 1;
            }
        }
        Self { lo, h, cells, active, dof, dofs }
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    pub fn active_cells(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Coordinates of every unknown.
    pub fn dof_points(&self) -> Vec<[f64; 3]> {
        let nn = self.cells + 1;
        let mut pts = vec![[0.0; 3]; self.dofs];
        for i in 0..nn {
            for j in 0..nn {
                for k in 0..nn {
                    let d = self.dof[node_index(nn, i, j, k)];
                    if d != ABSENT {
                        pts[d as usize] = [
                            self.lo[0] + i as f64 * self.h,
                            self.lo[1] + j as f64 * self.h,
                            self.lo[2] + k as f64 * self.h,
                        ];
                    }
                }
            }
        }
        pts
    }

    /// Stiffness, mass and `1/(4|x−y|²)`-weighted mass.
    pub fn assemble(&self, y: [f64; 3]) -> Assembled {
        let n = self.cells;
        let nn = n + 1;
        let ke = element_stiffness(self.h);
        let me = element_mass(self.h);
        let quad = WeightedQuadrature::default();
        let mut k_st = vec![[0.0f64; 27]; self.dofs];
        let mut m_st = vec![[0.0f64; 27]; self.dofs];
        let mut w_st = vec![[0.0f64; 27]; self.dofs];
        let mut touched = vec![0u32; self.dofs];
        for i in 0..n {
            // weighted element matrices of one slab in parallel
            let slab: Vec<Option<ElementMatrix>> = par::map_range(n * n, |jk| {
                let (j, k) = (jk / n, jk % n);
                self.active[(i * n + j) * n + k].then(|| {
                    let lo = [
                        self.lo[0] + i as f64 * self.h,
                        self.lo[1] + j as f64 * self.h,
                        self.lo[2] + k as f64 * self.h,
                    ];
                    quad.element(lo, self.h, y)
                })
            });
            for (jk, we) in slab.into_iter().enumerate() {
                let Some(we) = we else { continue };
                let (j, k) = (jk / n, jk % n);
                let nodes: [u32; 8] =
                    std::array::from_fn(|c| self.dof[node_index(nn, i + (c >> 2 & 1), j + (c >> 1 & 1), k + (c & 1))]);
                for a in 0..8 {
                    let da = nodes[a];
                    if da == ABSENT {
                        continue;
                    }
                    for b in 0..8 {
                        if nodes[b] == ABSENT {
                            continue;
                        }
                        let s = slot(a, b);
                        let r = da as usize;
                        k_st[r][s] += ke[a][b];
                        m_st[r][s] += me[a][b];
                        w_st[r][s] += we[a][b];
                        touched[r] |= 1 << s;
                    }
                }
            }
        }
        let neighbours = self.neighbour_table();
        let build = |st: &[[f64; 27]]| {
            CsrMatrix::from_rows(
                (0..self.dofs)
                    .map(|r| {
                        (0..27)
                            .filter(|s| touched[r] >> s & 1 == 1)
                            .map(|s| (neighbours[r][s], st[r][s]))
                            .collect()
                    })
                    .collect(),
            )
        };
        Assembled { stiffness: build(&k_st), mass: build(&m_st), weighted: build(&w_st) }
    }

    fn neighbour_table(&self) -> Vec<[u32; 27]> {
        let nn = self.cells + 1;
        let mut table = vec![[ABSENT; 27]; self.dofs];
        for i in 0..nn {
            for j in 0..nn {
                for k in 0..nn {
                    let d = self.dof[node_index(nn, i, j, k)];
                    if d == ABSENT {
                        continue;
                    }
                    for s in 0..27 {
                        let o = [s / 9, s / 3 % 3, s % 3];
                        let (a, b, c) = (i + o[0], j + o[1], k + o[2]);
                        if a >= 1 && b >= 1 && c >= 1 && a <= nn && b <= nn && c <= nn {
                            table[d as usize][s] = self.dof[node_index(nn, a - 1, b - 1, c - 1)];
                        }
                    }
                }
            }
        }
        table
    }
}

fn node_index(nn: usize, i: usize, j: usize, k: usize) -> usize {
    (i * nn + j) * nn + k
}

/// Stencil slot of local node `b` as seen from local node `a`.
fn slot(a: usize, b: usize) -> usize {
    let off = |bit: usize| ((b >> bit & 1) as isize - (a >> bit & 1) as isize + 1) as usize;
    off(2) * 9 + off(1) * 3 + off(0)
}
