//! `∫_cell w φ_a φ_b` for trilinear shape functions and the singular weight
//! `w(x) = 1/(4|x − y|²)`.
//!
//! Cells containing `y` are split at `y` into boxes having `y` as a corner;
//! each such box is the union of three pyramids with apex `y`, and the
//! Duffy map `x = y + t·(a, u, v)` removes the `1/r²` singularity. Cells near
//! `y` are bisected until they are well separated, then tensor Gauss applies.

use crate::quad::GaussRule;

pub type ElementMatrix = [[f64; 8]; 8];

pub struct WeightedQuadrature {
    g3: GaussRule,
    g4: GaussRule,
    g6: GaussRule,
    g8: GaussRule,
    g10: GaussRule,
}

impl Default for WeightedQuadrature {
    fn default() -> Self {
        Self { g3: GaussRule::new(3), g4: GaussRule::new(4), g6: GaussRule::new(6), g8: GaussRule::new(8), g10: GaussRule::new(10) }
    }
}

fn dist_to_box(y: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        let d = (lo[a] - y[a]).max(y[a] - hi[a]).max(0.0);
        s += d * d;
    }
    s.sqrt()
}

struct Cell {
    lo: [f64; 3],
    h: f64,
}

impl Cell {
    fn shapes(&self, x: [f64; 3]) -> [f64; 8] {
        let xi: [f64; 3] = std::array::from_fn(|a| (x[a] - self.lo[a]) / self.h);
        std::array::from_fn(|c| {
            let f = |bit: usize, t: f64| if bit == 1 { t } else { 1.0 - t };
            f(c >> 2 & 1, xi[0]) * f(c >> 1 & 1, xi[1]) * f(c & 1, xi[2])
        })
    }

    fn accumulate(&self, out: &mut ElementMatrix, x: [f64; 3], weight: f64) {
        let p = self.shapes(x);
        for a in 0..8 {
            let wa = weight * p[a];
            for b in a..8 {
                out[a][b] += wa * p[b];
            }
        }
    }
}

impl WeightedQuadrature {
    /// Element matrix of `w φ_a φ_b` on the cube cell `[lo, lo + h]`.
    pub fn element(&self, lo: [f64; 3], h: f64, y: [f64; 3]) -> ElementMatrix {
        let cell = Cell { lo, h };
        let mut out = [[0.0; 8]; 8];
        let hi = lo.map(|v| v + h);
        self.sub_box(&cell, &mut out, lo, hi, y, 0);
        for a in 0..8 {
            for b in 0..a {
                out[a][b] = out[b][a];
            }
        }
        out
    }

    fn sub_box(&self, cell: &Cell, out: &mut ElementMatrix, lo: [f64; 3], hi: [f64; 3], y: [f64; 3], depth: u32) {
        let size = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
        let inside = (0..3).all(|a| lo[a] <= y[a] && y[a] <= hi[a]);
        if inside {
            self.split_at(cell, out, lo, hi, y);
            return;
        }
        let d = dist_to_box(y, lo, hi);
        let rule = if d >= 8.0 * size {
            Some(&self.g3)
        } else if d >= 4.0 * size {
            Some(&self.g4)
        } else if d >= 2.0 * size {
            Some(&self.g6)
        } else if depth >= 24 {
            Some(&self.g8)
        } else {
            None
        };
        match rule {
            Some(r) => self.tensor(cell, out, lo, hi, y, r),
            None => {
                let mid: [f64; 3] = std::array::from_fn(|a| 0.5 * (lo[a] + hi[a]));
                for c in 0..8 {
                    let bit = |a: usize| c >> (2 - a) & 1 == 1;
                    let l = std::array::from_fn(|a| if bit(a) { mid[a] } else { lo[a] });
                    let u = std::array::from_fn(|a| if bit(a) { hi[a] } else { mid[a] });
                    self.sub_box(cell, out, l, u, y, depth + 1);
                }
            }
        }
    }

    fn tensor(&self, cell: &Cell, out: &mut ElementMatrix, lo: [f64; 3], hi: [f64; 3], y: [f64; 3], r: &GaussRule) {
        for (x0, w0) in r.on(lo[0], hi[0]) {
            for (x1, w1) in r.on(lo[1], hi[1]) {
                for (x2, w2) in r.on(lo[2], hi[2]) {
                    let r2 = (x0 - y[0]).powi(2) + (x1 - y[1]).powi(2) + (x2 - y[2]).powi(2);
                    cell.accumulate(out, [x0, x1, x2], w0 * w1 * w2 / (4.0 * r2));
                }
            }
        }
    }

    /// Split a box containing `y` into up to eight boxes with `y` at a corner.
    fn split_at(&self, cell: &Cell, out: &mut ElementMatrix, lo: [f64; 3], hi: [f64; 3], y: [f64; 3]) {
        let scale = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
        for c in 0..8 {
            // far corner of this piece, seen from y
            let far: [f64; 3] = std::array::from_fn(|a| if c >> (2 - a) & 1 == 1 { hi[a] } else { lo[a] });
            let ext: [f64; 3] = std::array::from_fn(|a| far[a] - y[a]);
            if ext.iter().any(|e| e.abs() <= 1e-15 * scale) {
                continue;
            }
            self.corner_box(cell, out, y, ext);
        }
    }

    /// Box spanned by `y` and `y + ext` (signed extents).
    fn corner_box(&self, cell: &Cell, out: &mut ElementMatrix, y: [f64; 3], ext: [f64; 3]) {
        let len = ext.map(f64::abs);
        let sgn = ext.map(f64::signum);
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let a = len[k];
            let us = graded(a, len[i]);
            let vs = graded(a, len[j]);
            for wu in us.windows(2) {
                for (u, w_u) in self.g10.on(wu[0], wu[1]) {
                    for wv in vs.windows(2) {
                        for (v, w_v) in self.g10.on(wv[0], wv[1]) {
                            let base = w_u * w_v * a / (4.0 * (a * a + u * u + v * v));
                            for (t, w_t) in self.g4.on(0.0, 1.0) {
                                let mut x = y;
                                x[k] += sgn[k] * t * a;
                                x[i] += sgn[i] * t * u;
                                x[j] += sgn[j] * t * v;
                                cell.accumulate(out, x, base * w_t);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Breakpoints `0, a, 2a, 4a, …, b` resolving the `a/(a² + u²)` peak.
fn graded(a: f64, b: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut x = a;
    while x < b {
        pts.push(x);
        x *= 2.0;
    }
    pts.push(b);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_adaptive;

    /// `∫_{[0,a]×[0,b]×[0,c]} |x|⁻² dx` via its one-dimensional face form.
    fn corner_box_oracle(a: f64, b: f64, c: f64) -> f64 {
        let face = |a: f64, b: f64, c: f64| {
            integrate_adaptive(
                |u| {
                    let s = (a * a + u * u).sqrt();
                    a / s * (c / s).atan()
                },
                0.0,
                b,
                &[],
                0.0,
                1e-13,
                500,
            )
            .unwrap()
            .value
        };
        face(a, b, c) + face(b, c, a) + face(c, a, b)
    }

    fn total(m: &ElementMatrix) -> f64 {
        m.iter().flatten().sum()
    }

    #[test]
    fn corner_singularity() {
        let q = WeightedQuadrature::default();
        let m = q.element([0.0; 3], 1.0, [0.0; 3]);
        let want = corner_box_oracle(1.0, 1.0, 1.0) / 4.0;
        assert!((total(&m) - want).abs() < 1e-11 * want, "{} {want}", total(&m));
    }

    #[test]
    fn interior_point() {
        let q = WeightedQuadrature::default();
        let y = [0.3, 0.71, 0.05];
        let m = q.element([0.0; 3], 1.0, y);
        let mut want = 0.0;
        for c in 0..8 {
            let e: [f64; 3] = std::array::from_fn(|a| if c >> a & 1 == 1 { 1.0 - y[a] } else { y[a] });
            want += corner_box_oracle(e[0], e[1], e[2]);
        }
        want /= 4.0;
        assert!((total(&m) - want).abs() < 1e-10 * want);
    }

    #[test]
    fn nearby_exterior_point() {
        // y just outside: compare against the difference of two boxes containing y
        let q = WeightedQuadrature::default();
        let y = [1.02, 0.5, 0.5];
        let m = q.element([0.0; 3], 1.0, y);
        let half = |dx: f64| 4.0 * corner_box_oracle(dx, 0.5, 0.5);
        let want = (half(1.02) - half(0.02)) / 4.0;
        assert!((total(&m) - want).abs() < 1e-7 * want, "{} {want}", total(&m));
    }

    #[test]
    fn linear_moment_matches_split_oracle() {
        // ∫ φ_a summed against x-linear combinations: Σ_b M_ab = ∫ w φ_a
        let q = WeightedQuadrature::default();
        let m = q.element([0.0; 3], 2.0, [2.0, 2.0, 2.0]);
        // φ at the corner (1,1,1) dominates near y
        let row: f64 = m[7].iter().sum();
        let other: f64 = m[0].iter().sum();
        assert!(row > other && other > 0.0);
        assert_eq!(m[3][5], m[5][3]);
    }
}
