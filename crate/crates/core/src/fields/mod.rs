//! Scalar fields sampled on uniform Cartesian grids, ball stencils and the
//! averaging operators built on them.

mod io;
mod ops;
mod stencil;
mod testfn;

pub use io::{read_binary, read_csv, write_binary, write_csv};
pub use ops::{
    ap_constant, ball_mean, ball_mean_with, gradient, maximal_function, maximal_uncentered_1d,
    mollify, sharp_average_field, sharp_average_field_with, sharp_ball_average,
    sharp_ball_average_with, ApOptions, ApReport, Ball, MaximalField, MaximalMode,
};
pub use stencil::{BallStencil, BallWeighting, Mollifier};
pub use testfn::{build_field, Carrier, Envelope, TestFunction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid over the cube `[-L, L]^n` with the same number of points per
/// axis. Flat indices are row-major with axis 0 slowest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 9;

    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!("half-width {half_width} must be positive")));
        }
        if points < Self::MIN_POINTS {
            return Err(Error::InvalidArgument(format!(
                "{points} points per axis; at least {} required",
                Self::MIN_POINTS
            )));
        }
        Ok(Grid { dim, half_width, points })
    }

    /// Grid whose spacing is exactly `h`; `2L/h` must be an integer.
    pub fn with_spacing(dim: usize, half_width: f64, h: f64) -> Result<Self> {
        let cells = 2.0 * half_width / h;
        let rounded = cells.round();
        if !(h > 0.0) || (cells - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "spacing {h} does not divide the box [-{half_width}, {half_width}]"
            )));
        }
        Self::new(dim, half_width, rounded as usize + 1)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Flat-index stride of each axis.
    pub fn strides(&self) -> [usize; 3] {
        let mut s = [0; 3];
        let mut acc = 1;
        for axis in (0..self.dim).rev() {
            s[axis] = acc;
            acc *= self.points;
        }
        s
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rem % self.points;
            rem /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let s = self.strides();
        (0..self.dim).map(|a| idx[a] * s[a]).sum()
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Coordinates of a grid point; unused trailing entries are zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coord(idx[axis]);
        }
        x
    }

    /// Index of the grid point closest to `x`, or `None` outside the box.
    pub fn nearest_index(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        let h = self.spacing();
        let mut idx = [0; 3];
        for axis in 0..self.dim {
            let i = ((x[axis] + self.half_width) / h).round();
            if i < 0.0 || i > (self.points - 1) as f64 {
                return None;
            }
            idx[axis] = i as usize;
        }
        Some(self.flat_index(idx))
    }

    /// Index of the point at the origin, when the origin is a grid point.
    pub fn center_index(&self) -> Option<usize> {
        (self.points % 2 == 1).then(|| self.flat_index([self.points / 2; 3]))
    }

    /// The sub-grid of every `stride`-th point.
    pub fn coarsen(&self, stride: usize) -> Result<Grid> {
        if stride == 0 || (self.points - 1) % stride != 0 {
            return Err(Error::InvalidArgument(format!(
                "stride {stride} does not divide {} cells",
                self.points - 1
            )));
        }
        Grid::new(self.dim, self.half_width, (self.points - 1) / stride + 1)
    }
}

/// A scalar field on a grid together with its compact-support certificate:
/// `support_margin` is the width of the all-zero band at the box boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    grid: Grid,
    values: Vec<f64>,
    support_margin: f64,
}

impl SampledField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        let support_margin = compute_margin(&grid, &values);
        Ok(SampledField { grid, values, support_margin })
    }

    pub fn zeros(grid: Grid) -> Self {
        SampledField { values: vec![0.0; grid.len()], support_margin: grid.half_width, grid }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..grid.dim])).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn support_margin(&self) -> f64 {
        self.support_margin
    }

    pub fn require_margin(&self, needed: f64) -> Result<()> {
        // half a cell of slack absorbs rounding in the margin arithmetic
        if self.support_margin + 0.5 * self.grid.spacing() < needed {
            return Err(Error::MarginViolation { needed, available: self.support_margin });
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> SampledField {
        let values: Vec<f64> = self.values.iter().map(|v| v * factor).collect();
        let support_margin = if factor == 0.0 { self.grid.half_width } else { self.support_margin };
        SampledField { grid: self.grid, values, support_margin }
    }

    /// Pointwise `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SampledField, b: f64) -> Result<SampledField> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        SampledField::new(self.grid, values)
    }

    /// Injection onto the sub-grid of every `stride`-th point.
    pub fn coarsen(&self, stride: usize) -> Result<SampledField> {
        if stride == 1 {
            return Ok(self.clone());
        }
        let coarse = self.grid.coarsen(stride)?;
        let values = (0..coarse.len())
            .map(|i| {
                let mut idx = coarse.multi_index(i);
                for a in idx.iter_mut().take(coarse.dim) {
                    *a *= stride;
                }
                self.values[self.grid.flat_index(idx)]
            })
            .collect();
        SampledField::new(coarse, values)
    }

    /// Per-axis index range `[lo, hi]` of the nonzero values.
    pub fn support_box(&self) -> Option<[(usize, usize); 3]> {
        let mut b = [(usize::MAX, 0usize); 3];
        let mut any = false;
        for (i, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                any = true;
                let idx = self.grid.multi_index(i);
                for a in 0..self.grid.dim {
                    b[a].0 = b[a].0.min(idx[a]);
                    b[a].1 = b[a].1.max(idx[a]);
                }
            }
        }
        any.then_some(b)
    }
}

fn compute_margin(grid: &Grid, values: &[f64]) -> f64 {
    let mut margin = grid.half_width;
    for (i, &v) in values.iter().enumerate() {
        if v != 0.0 {
            let x = grid.point(i);
            let far = x[..grid.dim].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            margin = margin.min(grid.half_width - far);
        }
    }
    margin.max(0.0)
}

/// One component array per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.components.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = Grid::with_spacing(2, 2.0, 0.25).unwrap();
        assert_eq!(g.points, 17);
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.len(), 289);
        let c = g.center_index().unwrap();
        assert_eq!(g.point(c), [0.0, 0.0, 0.0]);
        assert_eq!(g.nearest_index(&[0.1, -0.1]), Some(c));
        assert_eq!(g.nearest_index(&[3.0, 0.0]), None);
        assert_eq!(g.multi_index(g.flat_index([3, 5, 0])), [3, 5, 0]);
        assert!(Grid::new(1, 1.0, 8).is_err());
        assert!(Grid::with_spacing(1, 1.0, 0.3).is_err());
        assert!(Grid::new(4, 1.0, 9).is_err());
    }

    #[test]
    fn margin_certificate() {
        let g = Grid::with_spacing(1, 2.0, 0.125).unwrap();
        let f = SampledField::from_fn(g, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 }).unwrap();
        assert!((f.support_margin() - 1.125).abs() < 1e-12);
        assert!(f.require_margin(1.0).is_ok());
        assert!(matches!(f.require_margin(1.5), Err(Error::MarginViolation { .. })));
        assert_eq!(SampledField::zeros(g).support_margin(), 2.0);
    }

    #[test]
    fn coarsen_injects() {
        let g = Grid::with_spacing(2, 1.0, 1.0 / 32.0).unwrap();
        let f = SampledField::from_fn(g, |x| x[0] + 10.0 * x[1]).unwrap();
        let c = f.coarsen(4).unwrap();
        assert_eq!(c.grid().spacing(), 0.125);
        for i in 0..c.grid().len() {
            let x = c.grid().point(i);
            assert!((c.values()[i] - (x[0] + 10.0 * x[1])).abs() < 1e-12);
        }
        assert!(f.coarsen(3).is_err());
        assert!(f.coarsen(16).is_err());
    }
}
