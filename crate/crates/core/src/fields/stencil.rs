use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{Error, Result};
use crate::numeric::smoothstep;

/// How grid points near the sphere `|y| = r` count toward a discrete ball.
///
/// `Indicator` keeps the points with `|y| < r` at unit weight. `SmoothEdge`
/// ramps the weight from 1 at `|y| = r − h` to 0 at `|y| = r + h`, which
/// removes most of the lattice-counting noise at small `r/h`. `Calibrated`
/// uses the smooth-edge weights and rescales mean oscillations so that
/// affine data, averaged over directions, give exactly `c₀ r |∇f|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallWeighting {
    Indicator,
    SmoothEdge,
    #[default]
    Calibrated,
}

impl BallWeighting {
    /// Weight of a lattice point at distance `d` (in cells) from the center of
    /// a ball of radius `rc` cells.
    pub fn weight(self, d: f64, rc: f64) -> f64 {
        match self {
            BallWeighting::Indicator => (d < rc) as u8 as f64,
            BallWeighting::SmoothEdge | BallWeighting::Calibrated => smoothstep(0.5 * (rc - d) + 0.5),
        }
    }

    /// Largest distance (in cells) with nonzero weight.
    pub fn outer(self, rc: f64) -> f64 {
        match self {
            BallWeighting::Indicator => rc,
            BallWeighting::SmoothEdge | BallWeighting::Calibrated => rc + 1.0,
        }
    }
}

/// A contiguous run of stencil points along the last axis.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Run {
    /// flat offset of the first point, relative to the center
    pub offset: isize,
    pub start: usize,
    pub len: usize,
}

/// Weighted discrete ball `B(0, r)` on a lattice of spacing `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallStencil {
    pub dim: usize,
    pub radius: f64,
    pub spacing: f64,
    pub weighting: BallWeighting,
    pub offsets: Vec<[i32; 3]>,
    pub weights: Vec<f64>,
    pub total_weight: f64,
    /// largest |offset| along any axis, in cells
    pub reach: usize,
    /// factor applied to mean oscillations; 1 unless calibrated
    pub sharp_scale: f64,
}

impl BallStencil {
    /// Smallest radius accepted, in cells.
    pub const MIN_CELLS: f64 = 2.0;

    pub fn new(dim: usize, radius: f64, spacing: f64, weighting: BallWeighting) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(spacing > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("radius {radius}, spacing {spacing}")));
        }
        if radius < Self::MIN_CELLS * spacing * (1.0 - 1e-12) {
            return Err(Error::UnderResolved { radius, min: Self::MIN_CELLS * spacing });
        }
        let rc = radius / spacing;
        let m = weighting.outer(rc).ceil() as i32;
        let span = |a: usize| if a < dim { -m..=m } else { 0..=0 };
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        for i in span(0) {
            for j in span(1) {
                for k in span(2) {
                    let d = ((i * i + j * j + k * k) as f64).sqrt();
                    let w = weighting.weight(d, rc);
                    if w > 0.0 {
                        offsets.push([i, j, k]);
                        weights.push(w);
                    }
                }
            }
        }
        let reach = offsets
            .iter()
            .flat_map(|o| o.iter().map(|c| c.unsigned_abs() as usize))
            .max()
            .unwrap_or(0);
        let total_weight = weights.iter().sum();
        let sharp_scale = match weighting {
            BallWeighting::Calibrated => affine_calibration(dim, rc, &offsets, &weights)?,
            _ => 1.0,
        };
        Ok(BallStencil { dim, radius, spacing, weighting, offsets, weights, total_weight, reach, sharp_scale })
    }

    pub fn count(&self) -> usize {
        self.offsets.len()
    }

    /// Discrete ball measure `Σ w · h^n`.
    pub fn measure(&self) -> f64 {
        self.total_weight * self.spacing.powi(self.dim as i32)
    }

    /// Flat offsets on `grid`, one per stencil point.
    pub fn flat_offsets(&self, grid: &Grid) -> Vec<isize> {
        let s = grid.strides();
        self.offsets
            .iter()
            .map(|o| (0..self.dim).map(|a| o[a] as isize * s[a] as isize).sum())
            .collect()
    }

    /// Groups the points (which are generated in lexicographic order) into
    /// runs that are contiguous in memory.
    pub(crate) fn runs(&self, grid: &Grid) -> Vec<Run> {
        let flat = self.flat_offsets(grid);
        let mut runs: Vec<Run> = Vec::new();
        for (k, &off) in flat.iter().enumerate() {
            match runs.last_mut() {
                Some(r) if r.offset + r.len as isize == off => r.len += 1,
                _ => runs.push(Run { offset: off, start: k, len: 1 }),
            }
        }
        runs
    }

    /// Whether the stencil centered at `center` stays inside `grid`.
    pub fn fits(&self, grid: &Grid, center: usize) -> bool {
        let idx = grid.multi_index(center);
        (0..grid.dim).all(|a| idx[a] >= self.reach && idx[a] + self.reach < grid.points)
    }
}

/// Unit directions covering the fundamental sector of the lattice symmetry
/// group, equally weighted with respect to surface measure.
fn sector_directions(dim: usize) -> Vec<[f64; 3]> {
    const K: usize = 16;
    match dim {
        1 => vec![[1.0, 0.0, 0.0]],
        2 => (0..K)
            .map(|k| {
                let t = (k as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / K as f64;
                [t.cos(), t.sin(), 0.0]
            })
            .collect(),
        _ => (0..K)
            .flat_map(|i| {
                (0..K).map(move |k| {
                    // uniform in cos φ and θ is uniform on the sphere
                    let z = (i as f64 + 0.5) / K as f64;
                    let t = (k as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / K as f64;
                    let s = (1.0 - z * z).sqrt();
                    [s * t.cos(), s * t.sin(), z]
                })
            })
            .collect(),
    }
}

/// `c₀ r` divided by the direction-averaged mean oscillation of `y ↦ ν·y`.
fn affine_calibration(dim: usize, rc: f64, offsets: &[[i32; 3]], weights: &[f64]) -> Result<f64> {
    let c0 = crate::convergence::c0_analytic(dim)?;
    let total: f64 = weights.iter().sum();
    let dirs = sector_directions(dim);
    let mut acc = 0.0;
    for nu in &dirs {
        let lin: Vec<f64> =
            offsets.iter().map(|o| (0..dim).map(|a| nu[a] * o[a] as f64).sum()).collect();
        let mean = lin.iter().zip(weights).map(|(l, w)| w * l).sum::<f64>() / total;
        acc += lin.iter().zip(weights).map(|(l, w)| w * (l - mean).abs()).sum::<f64>() / total;
    }
    Ok(c0 * rc / (acc / dirs.len() as f64))
}

/// Discrete standard mollifier `G_δ(y) ∝ exp(−1 / (1 − |y/δ|²))` normalized
/// so that its weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Mollifier {
    pub dim: usize,
    pub delta: f64,
    pub spacing: f64,
    pub offsets: Vec<[i32; 3]>,
    pub weights: Vec<f64>,
    pub reach: usize,
    /// normalizing constant of the unit-scale continuum profile implied by
    /// the discrete sum
    pub c1: f64,
}

impl Mollifier {
    pub fn new(dim: usize, delta: f64, spacing: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(delta >= 2.0 * spacing && spacing > 0.0) {
            return Err(Error::UnderResolved { radius: delta, min: 2.0 * spacing });
        }
        let dc = delta / spacing;
        let m = dc.ceil() as i32;
        let span = |a: usize| if a < dim { -m..=m } else { 0..=0 };
        let mut offsets = Vec::new();
        let mut raw = Vec::new();
        for i in span(0) {
            for j in span(1) {
                for k in span(2) {
                    let u = (i * i + j * j + k * k) as f64 / (dc * dc);
                    if u < 1.0 {
                        let w = (-1.0 / (1.0 - u)).exp();
                        if w > 0.0 {
                            offsets.push([i, j, k]);
                            raw.push(w);
                        }
                    }
                }
            }
        }
        let sum: f64 = raw.iter().sum();
        let c1 = dc.powi(dim as i32) / sum;
        let weights = raw.iter().map(|w| w / sum).collect();
        let reach = offsets
            .iter()
            .flat_map(|o| o.iter().map(|c| c.unsigned_abs() as usize))
            .max()
            .unwrap_or(0);
        Ok(Mollifier { dim, delta, spacing, offsets, weights, reach, c1 })
    }

    pub fn flat_offsets(&self, grid: &Grid) -> Vec<isize> {
        let s = grid.strides();
        self.offsets
            .iter()
            .map(|o| (0..self.dim).map(|a| o[a] as isize * s[a] as isize).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_counts_lattice_points() {
        let s = BallStencil::new(1, 4.0, 1.0, BallWeighting::Indicator).unwrap();
        assert_eq!(s.count(), 7);
        assert_eq!(s.reach, 3);
        let s2 = BallStencil::new(2, 2.5, 1.0, BallWeighting::Indicator).unwrap();
        // lattice points strictly inside the circle of radius 2.5
        let brute = (-3..=3i32)
            .flat_map(|i| (-3..=3i32).map(move |j| (i, j)))
            .filter(|(i, j)| ((i * i + j * j) as f64).sqrt() < 2.5)
            .count();
        assert_eq!(s2.count(), brute);
    }

    #[test]
    fn smooth_edge_measure_is_exact_in_1d() {
        for r in [2.0, 3.0, 7.0, 16.0] {
            let s = BallStencil::new(1, r * 0.125, 0.125, BallWeighting::SmoothEdge).unwrap();
            assert!((s.measure() - 2.0 * r * 0.125).abs() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn smooth_edge_measure_converges_in_2d() {
        let h = 1.0 / 64.0;
        let s = BallStencil::new(2, 0.5, h, BallWeighting::SmoothEdge).unwrap();
        let exact = std::f64::consts::PI * 0.25;
        assert!((s.measure() / exact - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_small_radius() {
        assert!(matches!(
            BallStencil::new(1, 0.15, 0.1, BallWeighting::SmoothEdge),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn runs_cover_stencil() {
        let g = Grid::new(2, 1.0, 33).unwrap();
        let s = BallStencil::new(2, 0.25, g.spacing(), BallWeighting::SmoothEdge).unwrap();
        let runs = s.runs(&g);
        assert_eq!(runs.iter().map(|r| r.len).sum::<usize>(), s.count());
        assert!(runs.len() <= 2 * s.reach + 1);
    }

    #[test]
    fn mollifier_normalization() {
        let m = Mollifier::new(1, 0.5, 1.0 / 512.0).unwrap();
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // continuum constant of exp(-1/(1-y^2)) on (-1, 1)
        assert!((m.c1 - 2.252_283_8).abs() < 1e-4, "{}", m.c1);
    }
}
