use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stencil::Run;
use super::{BallStencil, BallWeighting, Grid, Mollifier, SampledField, VectorField};
use crate::error::{Error, Result};
use crate::phi::Weight;

/// Central-difference gradient; boundary points get zero.
pub fn gradient(f: &SampledField) -> VectorField {
    let grid = *f.grid();
    let h = grid.spacing();
    let s = grid.strides();
    let v = f.values();
    let components = (0..grid.dim)
        .map(|a| {
            (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let idx = grid.multi_index(i);
                    if (0..grid.dim).any(|b| idx[b] == 0 || idx[b] + 1 == grid.points) {
                        0.0
                    } else {
                        (v[i + s[a]] - v[i - s[a]]) / (2.0 * h)
                    }
                })
                .collect()
        })
        .collect();
    VectorField { grid, components }
}

/// Weighted stencil compiled into memory-contiguous runs.
struct Kernel<'a> {
    runs: Vec<Run>,
    weights: &'a [f64],
    total: f64,
    sharp_scale: f64,
}

impl<'a> Kernel<'a> {
    fn new(grid: &Grid, stencil: &'a BallStencil) -> Self {
        Kernel {
            runs: stencil.runs(grid),
            weights: &stencil.weights,
            total: stencil.total_weight,
            sharp_scale: stencil.sharp_scale,
        }
    }

    #[inline]
    fn fold<F: Fn(f64) -> f64>(&self, v: &[f64], c: usize, g: F) -> f64 {
        let mut s = 0.0;
        for r in &self.runs {
            let base = (c as isize + r.offset) as usize;
            let vs = &v[base..base + r.len];
            let ws = &self.weights[r.start..r.start + r.len];
            for (a, w) in vs.iter().zip(ws) {
                s += w * g(*a);
            }
        }
        s / self.total
    }

    fn mean(&self, v: &[f64], c: usize) -> f64 {
        self.fold(v, c, |a| a)
    }

    fn mean_abs(&self, v: &[f64], c: usize) -> f64 {
        self.fold(v, c, f64::abs)
    }

    fn sharp(&self, v: &[f64], c: usize) -> f64 {
        let m = self.mean(v, c);
        self.sharp_scale * self.fold(v, c, |a| (a - m).abs())
    }
}

fn check_spacing(grid: &Grid, spacing: f64) -> Result<()> {
    if (grid.spacing() / spacing - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "stencil spacing {spacing} differs from grid spacing {}",
            grid.spacing()
        )));
    }
    Ok(())
}

pub fn ball_mean(f: &SampledField, center: usize, radius: f64) -> Result<f64> {
    let st = BallStencil::new(f.grid().dim, radius, f.grid().spacing(), BallWeighting::default())?;
    ball_mean_with(f, center, &st)
}

/// Weighted mean of `f` over the discrete ball at grid index `center`.
pub fn ball_mean_with(f: &SampledField, center: usize, stencil: &BallStencil) -> Result<f64> {
    check_spacing(f.grid(), stencil.spacing)?;
    if center >= f.grid().len() || !stencil.fits(f.grid(), center) {
        return Err(Error::StencilOverflow { index: center });
    }
    Ok(Kernel::new(f.grid(), stencil).mean(f.values(), center))
}

pub fn sharp_ball_average(f: &SampledField, center: usize, radius: f64) -> Result<f64> {
    let st = BallStencil::new(f.grid().dim, radius, f.grid().spacing(), BallWeighting::default())?;
    sharp_ball_average_with(f, center, &st)
}

/// `M♯_r f(x) = ⨍_B |f − f_B|` over the discrete ball at `center`.
pub fn sharp_ball_average_with(f: &SampledField, center: usize, stencil: &BallStencil) -> Result<f64> {
    check_spacing(f.grid(), stencil.spacing)?;
    if center >= f.grid().len() || !stencil.fits(f.grid(), center) {
        return Err(Error::StencilOverflow { index: center });
    }
    Ok(Kernel::new(f.grid(), stencil).sharp(f.values(), center))
}

type IndexBox = [(usize, usize); 3];

/// Points within `reach` cells (per axis) of the support. Every stencil of
/// that reach centered in the box must fit the grid, which needs a support
/// margin of `2·reach` cells.
fn active_box(f: &SampledField, reach: usize) -> Result<Option<IndexBox>> {
    let grid = f.grid();
    let Some(sb) = f.support_box() else { return Ok(None) };
    let mut b = [(0, 0); 3];
    for a in 0..grid.dim {
        let (lo, hi) = sb[a];
        if lo < 2 * reach || hi + 2 * reach >= grid.points {
            return Err(Error::MarginViolation {
                needed: 2.0 * reach as f64 * grid.spacing(),
                available: f.support_margin(),
            });
        }
        b[a] = (lo - reach, hi + reach);
    }
    Ok(Some(b))
}

/// Evaluates `op` at every point of the box, in parallel over lines of the
/// last axis, and scatters into a zero field.
fn map_box<F>(grid: &Grid, b: &IndexBox, op: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync,
{
    let last = grid.dim - 1;
    let s = grid.strides();
    let mut starts = vec![0usize];
    for a in 0..last {
        starts = starts
            .into_iter()
            .flat_map(|base| (b[a].0..=b[a].1).map(move |i| base + i * s[a]))
            .collect();
    }
    let (lo, hi) = b[last];
    let lines: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&base| (lo..=hi).map(|i| op(base + i)).collect())
        .collect();
    let mut out = vec![0.0; grid.len()];
    for (&base, line) in starts.iter().zip(lines) {
        out[base + lo..=base + hi].copy_from_slice(&line);
    }
    out
}

pub fn sharp_average_field(f: &SampledField, radius: f64) -> Result<SampledField> {
    let st = BallStencil::new(f.grid().dim, radius, f.grid().spacing(), BallWeighting::default())?;
    sharp_average_field_with(f, &st)
}

/// `M♯_r f` at every grid point. Points farther than the stencil reach from
/// the support are exactly zero and are not visited.
pub fn sharp_average_field_with(f: &SampledField, stencil: &BallStencil) -> Result<SampledField> {
    check_spacing(f.grid(), stencil.spacing)?;
    let grid = *f.grid();
    let Some(b) = active_box(f, stencil.reach)? else { return Ok(SampledField::zeros(grid)) };
    let kernel = Kernel::new(&grid, stencil);
    let v = f.values();
    let out = map_box(&grid, &b, |c| kernel.sharp(v, c));
    SampledField::new(grid, out)
}

/// Discrete convolution with the standard mollifier of radius `delta`.
pub fn mollify(f: &SampledField, delta: f64) -> Result<SampledField> {
    let grid = *f.grid();
    let m = Mollifier::new(grid.dim, delta, grid.spacing())?;
    let Some(b) = active_box(f, m.reach)? else { return Ok(SampledField::zeros(grid)) };
    let offs = m.flat_offsets(&grid);
    let v = f.values();
    let out = map_box(&grid, &b, |c| {
        offs.iter().zip(&m.weights).fold(0.0, |acc, (&o, &w)| acc + w * v[(c as isize + o) as usize])
    });
    SampledField::new(grid, out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalMode {
    /// sup over centered balls from the radius ladder
    Centered,
    /// sup over windows of the ladder lengths that contain the point; 1-D only
    Uncentered1d,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaximalField {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// false where no ladder ball fits inside the grid
    pub valid: Vec<bool>,
}

/// Discrete Hardy–Littlewood maximal function of `|f|` over a radius ladder.
pub fn maximal_function(f: &SampledField, radii: &[f64], mode: MaximalMode) -> Result<MaximalField> {
    if radii.is_empty() {
        return Err(Error::Empty("radius ladder"));
    }
    let grid = *f.grid();
    let h = grid.spacing();
    let v = f.values();
    let pairs: Vec<(f64, bool)> = match mode {
        MaximalMode::Centered => {
            let stencils = radii
                .iter()
                .map(|&r| BallStencil::new(grid.dim, r, h, BallWeighting::default()))
                .collect::<Result<Vec<_>>>()?;
            let kernels: Vec<_> = stencils.iter().map(|s| (s, Kernel::new(&grid, s))).collect();
            (0..grid.len())
                .into_par_iter()
                .map(|c| {
                    kernels.iter().filter(|(s, _)| s.fits(&grid, c)).fold((0.0, false), |(m, _), (_, k)| {
                        (f64::max(m, k.mean_abs(v, c)), true)
                    })
                })
                .collect()
        }
        MaximalMode::Uncentered1d => {
            if grid.dim != 1 {
                return Err(Error::UnsupportedDimension(grid.dim));
            }
            for &r in radii {
                if r < BallStencil::MIN_CELLS * h * (1.0 - 1e-12) {
                    return Err(Error::UnderResolved { radius: r, min: BallStencil::MIN_CELLS * h });
                }
            }
            let prefix = abs_prefix(v);
            let n = grid.points;
            (0..n)
                .into_par_iter()
                .map(|c| {
                    let mut best = (0.0, false);
                    for &r in radii {
                        let m = (2.0 * r / h).round() as usize;
                        if m + 1 > n {
                            continue;
                        }
                        let first = c.saturating_sub(m);
                        let last = c.min(n - 1 - m);
                        for i in first..=last {
                            let mean = (prefix[i + m + 1] - prefix[i]) / (m + 1) as f64;
                            best = (f64::max(best.0, mean), true);
                        }
                    }
                    best
                })
                .collect()
        }
    };
    let (values, valid) = pairs.into_iter().unzip();
    Ok(MaximalField { grid, values, valid })
}

fn abs_prefix(v: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(v.len() + 1);
    p.push(0.0);
    for x in v {
        p.push(p.last().unwrap() + x.abs());
    }
    p
}

/// Exhaustive uncentered maximal function at one point of a 1-D field: the
/// sup of the sample mean of `|f|` over every window of at least two samples
/// containing `center`.
pub fn maximal_uncentered_1d(f: &SampledField, center: usize) -> Result<f64> {
    let grid = f.grid();
    if grid.dim != 1 {
        return Err(Error::UnsupportedDimension(grid.dim));
    }
    if center >= grid.points {
        return Err(Error::StencilOverflow { index: center });
    }
    let prefix = abs_prefix(f.values());
    let mut best = 0.0f64;
    for i in 0..=center {
        for j in center.max(i + 1)..grid.points {
            best = best.max((prefix[j + 1] - prefix[i]) / (j - i + 1) as f64);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApOptions {
    /// quadrature cells across the smallest sampled radius
    pub cells_per_min_radius: usize,
}

impl Default for ApOptions {
    fn default() -> Self {
        ApOptions { cells_per_min_radius: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub constant: f64,
    pub worst_ball: usize,
    pub per_ball: Vec<f64>,
    /// absolute spacing of the quadrature lattice
    pub spacing: f64,
    pub skipped_cells: usize,
}

/// Empirical Muckenhoupt constant `sup_B (⨍_B ω)(⨍_B ω^{−1/(p−1)})^{p−1}`
/// over the sampled balls (`p = 1` uses `⨍_B ω / ess inf_B ω`).
///
/// All balls share one lattice of cell centers `(k + ½)h`, with `h` fixed by
/// the smallest radius. Cells where `ω` is infinite or zero are skipped.
pub fn ap_constant(weight: &Weight, p: f64, balls: &[Ball], opts: ApOptions) -> Result<ApReport> {
    if balls.is_empty() {
        return Err(Error::Empty("ball sample"));
    }
    if !(p >= 1.0) || opts.cells_per_min_radius == 0 {
        return Err(Error::InvalidArgument(format!("p = {p} must be at least 1")));
    }
    let dim = balls[0].center.len();
    if !(1..=3).contains(&dim) || balls.iter().any(|b| b.center.len() != dim || !(b.radius > 0.0)) {
        return Err(Error::InvalidArgument("balls need positive radii and a common dimension 1..=3".into()));
    }
    let r_min = balls.iter().map(|b| b.radius).fold(f64::INFINITY, f64::min);
    let h = r_min / opts.cells_per_min_radius as f64;
    let results: Vec<(f64, usize)> = balls
        .par_iter()
        .enumerate()
        .map(|(bi, b)| ball_ap(weight, p, b, h).map_err(|_| Error::EntirelySingular { index: bi }))
        .collect::<Result<_>>()?;
    let per_ball: Vec<f64> = results.iter().map(|r| r.0).collect();
    let skipped_cells = results.iter().map(|r| r.1).sum();
    let (worst_ball, constant) = per_ball
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, c)| if c > best.1 { (i, c) } else { best });
    Ok(ApReport { constant, worst_ball, per_ball, spacing: h, skipped_cells })
}

fn ball_ap(weight: &Weight, p: f64, ball: &Ball, h: f64) -> std::result::Result<(f64, usize), ()> {
    let dim = ball.center.len();
    let range = |a: usize| -> std::ops::RangeInclusive<i64> {
        if a >= dim {
            return 0..=0;
        }
        let lo = ((ball.center[a] - ball.radius) / h - 0.5).floor() as i64;
        let hi = ((ball.center[a] + ball.radius) / h - 0.5).ceil() as i64;
        lo..=hi
    };
    let (mut n, mut sw, mut sdual, mut wmin, mut skipped) = (0usize, 0.0, 0.0, f64::INFINITY, 0usize);
    let mut x = [0.0; 3];
    for i in range(0) {
        for j in range(1) {
            for k in range(2) {
                let ks = [i, j, k];
                let mut d2 = 0.0;
                for a in 0..dim {
                    x[a] = (ks[a] as f64 + 0.5) * h;
                    d2 += (x[a] - ball.center[a]).powi(2);
                }
                if d2 >= ball.radius * ball.radius {
                    continue;
                }
                let w = weight.value(&x[..dim]);
                if !w.is_finite() || w <= 0.0 {
                    skipped += 1;
                    continue;
                }
                n += 1;
                sw += w;
                if p > 1.0 {
                    sdual += w.powf(-1.0 / (p - 1.0));
                }
                wmin = wmin.min(w);
            }
        }
    }
    if n == 0 {
        return Err(());
    }
    let mean_w = sw / n as f64;
    let c = if p > 1.0 { mean_w * (sdual / n as f64).powf(p - 1.0) } else { mean_w / wmin };
    Ok((c, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{build_field, TestFunction};

    fn line(h: f64, l: f64) -> Grid {
        Grid::with_spacing(1, l, h).unwrap()
    }

    #[test]
    fn sharp_of_constant_is_zero_and_affine_exact_in_1d() {
        let g = line(1.0 / 64.0, 2.0);
        let c = g.center_index().unwrap();
        let f = SampledField::from_fn(g, |_| 3.5).unwrap();
        assert_eq!(sharp_ball_average(&f, c, 0.25).unwrap(), 0.0);
        assert!((ball_mean(&f, c, 0.25).unwrap() - 3.5).abs() < 1e-14);
        // ⨍_{(-r, r)} |x| = r/2 for an affine function with unit slope
        let a = SampledField::from_fn(g, |x| 1.0 + x[0]).unwrap();
        for r in [2.0 / 64.0, 0.25, 0.5] {
            let m = sharp_ball_average(&a, c, r).unwrap();
            assert!((m - r / 2.0).abs() < 1e-12, "r={r} got {m}");
        }
    }

    #[test]
    fn overflow_and_resolution_errors() {
        let g = line(1.0 / 16.0, 1.0);
        let f = SampledField::zeros(g);
        assert!(matches!(sharp_ball_average(&f, 0, 0.25), Err(Error::StencilOverflow { .. })));
        assert!(matches!(ball_mean(&f, 16, 0.1), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn field_matches_pointwise() {
        let g = Grid::with_spacing(2, 2.0, 1.0 / 16.0).unwrap();
        let (f, _) = build_field(&g, &TestFunction::radial_bump(0.75), 0.0).unwrap();
        let st = BallStencil::new(2, 0.25, g.spacing(), BallWeighting::SmoothEdge).unwrap();
        let field = sharp_average_field_with(&f, &st).unwrap();
        for i in (0..g.len()).step_by(37) {
            let expect = if st.fits(&g, i) { sharp_ball_average_with(&f, i, &st).unwrap() } else { 0.0 };
            assert!((field.values()[i] - expect).abs() < 1e-15, "index {i}");
        }
    }

    #[test]
    fn field_requires_margin() {
        let g = line(1.0 / 32.0, 1.0);
        let (f, _) = build_field(&g, &TestFunction::radial_bump(0.75), 0.0).unwrap();
        assert!(matches!(sharp_average_field(&f, 0.25), Err(Error::MarginViolation { .. })));
    }

    #[test]
    fn gradient_of_quadratic() {
        let g = line(1.0 / 32.0, 1.0);
        let f = SampledField::from_fn(g, |x| x[0] * x[0]).unwrap();
        let grad = gradient(&f);
        for i in 1..g.points - 1 {
            assert!((grad.components[0][i] - 2.0 * g.coord(i)).abs() < 1e-12);
        }
        assert_eq!(grad.components[0][0], 0.0);
    }

    #[test]
    fn mollifier_preserves_mass_and_constants() {
        let g = line(1.0 / 128.0, 3.0);
        let (f, _) = build_field(&g, &TestFunction::radial_bump(1.0), 0.0).unwrap();
        let m = mollify(&f, 0.25).unwrap();
        let s0: f64 = f.values().iter().sum();
        let s1: f64 = m.values().iter().sum();
        assert!((s0 - s1).abs() < 1e-12 * s0);
    }

    #[test]
    fn maximal_of_constant() {
        let g = line(1.0 / 32.0, 2.0);
        let f = SampledField::from_fn(g, |_| -2.0).unwrap();
        let mf = maximal_function(&f, &[0.125, 0.5], MaximalMode::Centered).unwrap();
        let c = g.center_index().unwrap();
        assert!(mf.valid[c] && !mf.valid[0]);
        assert!((mf.values[c] - 2.0).abs() < 1e-14);
        let mu = maximal_function(&f, &[0.125, 0.5], MaximalMode::Uncentered1d).unwrap();
        assert!(mu.valid.iter().all(|&v| v));
        assert!(mu.values.iter().all(|v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn uncentered_indicator() {
        let h = 1.0 / 256.0;
        let g = line(h, 2.0);
        let f = SampledField::from_fn(g, |x| if (0.0..=1.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
        let idx = g.nearest_index(&[1.5]).unwrap();
        let m = maximal_uncentered_1d(&f, idx).unwrap();
        assert!((m - 2.0 / 3.0).abs() < 2.0 * h, "{m}");
    }

    #[test]
    fn ap_constant_of_constant_weight_is_one() {
        let balls = vec![Ball { center: vec![0.2, 0.1], radius: 0.3 }, Ball { center: vec![0.0, 0.0], radius: 1.0 }];
        for p in [1.0, 1.5, 2.0, 4.0] {
            let r = ap_constant(&Weight::Constant { value: 1.0 }, p, &balls, ApOptions::default()).unwrap();
            assert_eq!(r.constant, 1.0);
        }
        let r = ap_constant(&Weight::Constant { value: 3.0 }, 2.0, &balls, ApOptions::default()).unwrap();
        assert!((r.constant - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ap_constant_of_sqrt_weight() {
        // ⨍_{(0,b)} x^{1/2} · ⨍_{(0,b)} x^{-1/2} = (2/3)·2 on centered balls
        let w = Weight::RadialPower { alpha: 0.5, scale: 1.0 };
        let balls: Vec<Ball> = [0.125, 0.5, 1.0].iter().map(|&r| Ball { center: vec![0.0], radius: r }).collect();
        let r = ap_constant(&w, 2.0, &balls, ApOptions { cells_per_min_radius: 4096 }).unwrap();
        assert!((r.constant - 4.0 / 3.0).abs() < 5e-3, "{}", r.constant);
    }
}
