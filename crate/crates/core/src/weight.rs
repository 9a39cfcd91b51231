//! The interaction weight `g(x) = Σ_{i<j} (1/|x_i − x_j| − a⁻¹)` and its
//! localization bounds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{BoxPartition, LocalizationStats, OccupationVector, TWO_SQRT3};

pub type Point = [f64; 3];

/// Positions of `N ≥ 2` particles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    positions: Vec<Point>,
}

impl Configuration {
    pub fn new(positions: Vec<Point>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(invalid(format!("need at least two particles, got {}", positions.len())));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { positions: self.positions.iter().map(|p| p.map(|v| v * lambda)).collect() }
    }

    pub fn with_particle(&self, x: Point) -> Self {
        let mut positions = self.positions.clone();
        positions.push(x);
        Self { positions }
    }

    /// `1/|x_i − x_j|`, or an error at coincident points.
    pub fn inverse_distance(&self, i: usize, j: usize) -> Result<f64> {
        let r = dist(self.positions[i], self.positions[j]);
        if r == 0.0 {
            Err(Error::SingularConfiguration(i, j))
        } else {
            Ok(1.0 / r)
        }
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn check_a_inv(a_inv: f64) -> Result<()> {
    if a_inv > 0.0 || !a_inv.is_finite() {
        Err(invalid(format!("a_inv must be finite and <= 0, got {a_inv}")))
    } else {
        Ok(())
    }
}

/// `g(x) = Σ_{i<j} (1/|x_i − x_j| − a_inv)`; `a_inv = 0` is the unitary model.
pub fn g_eval(c: &Configuration, a_inv: f64) -> Result<f64> {
    check_a_inv(a_inv)?;
    let n = c.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += c.inverse_distance(i, j)? - a_inv;
        }
    }
    Ok(s)
}

/// `K₋ + V/(4√3ℓ)`, valid on `B(n)`.
pub fn g_lower_bound(stats: &LocalizationStats, ell: f64) -> f64 {
    stats.k_minus + stats.v as f64 / (2.0 * TWO_SQRT3 * ell)
}

/// `K₊ + ½ Σ_i Σ_{j ∈ N[i]} 1/|x_i − x_j|` where `N[i]` are the other
/// particles in the same or a touching box. `boxes[i]` is the box of
/// particle `i`.
pub fn g_upper_bound(
    c: &Configuration,
    p: &BoxPartition,
    boxes: &[usize],
    stats: &LocalizationStats,
) -> Result<f64> {
    if boxes.len() != c.len() {
        return Err(Error::Mismatch { expected: c.len(), got: boxes.len() });
    }
    let mut near = 0.0;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            if boxes[i] == boxes[j] || p.adjacent(boxes[i], boxes[j]) {
                near += c.inverse_distance(i, j)?;
            }
        }
    }
    // each unordered near pair appears twice in the double sum
    Ok(stats.k_plus + near)
}

/// Effective scattering length seen by the pair `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScatteringLength {
    /// `a⁻¹ = 0`: no other particles contribute.
    Unitary,
    Finite(f64),
}

/// `−1/a_eff = Σ_{{k,l} ≠ {i,j}} 1/|x_k − x_l|`.
pub fn effective_scattering_length(c: &Configuration, i: usize, j: usize) -> Result<ScatteringLength> {
    effective_scattering_length_with(c, i, j, 0.0)
}

/// As [`effective_scattering_length`] for the weight with `a_inv ≤ 0`, where the
/// pair's own `−a_inv` and every other pair term enter: `1/a_eff = a_inv − Σ_{other} (1/r − a_inv)`.
pub fn effective_scattering_length_with(
    c: &Configuration,
    i: usize,
    j: usize,
    a_inv: f64,
) -> Result<ScatteringLength> {
    check_a_inv(a_inv)?;
    let n = c.len();
    for &k in &[i, j] {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, len: n });
        }
    }
    if i == j {
        return Err(invalid("pair indices must differ"));
    }
    if n == 2 {
        return if a_inv == 0.0 {
            Ok(ScatteringLength::Unitary)
        } else {
            Ok(ScatteringLength::Finite(1.0 / a_inv))
        };
    }
    let mut s = -a_inv;
    for k in 0..n {
        for l in k + 1..n {
            if (k, l) != (i.min(j), i.max(j)) {
                s += c.inverse_distance(k, l)? - a_inv;
            }
        }
    }
    Ok(ScatteringLength::Finite(-1.0 / s))
}

/// Uniform sample from `B(n)`: the first `n_1` particles in box 1, and so on.
pub fn sample_in_boxes<R: Rng + ?Sized>(
    p: &BoxPartition,
    n: &OccupationVector,
    rng: &mut R,
) -> Result<(Configuration, Vec<usize>)> {
    let boxes = n.assignment();
    let positions = boxes
        .iter()
        .map(|&b| {
            let (lo, hi) = p.bounds(b);
            std::array::from_fn(|a| rng.random_range(lo[a]..hi[a]))
        })
        .collect();
    Ok((Configuration::new(positions)?, boxes))
}
