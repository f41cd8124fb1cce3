//! Modulars, Luxemburg norms and their sharp-maximal counterparts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{sharp_average_field_with, BallStencil, BallWeighting, Grid, SampledField};
use crate::numeric::det_sum;
use crate::phi::MusielakOrlicz;

fn check_compatible(phi: &MusielakOrlicz, grid: &Grid) -> Result<()> {
    if phi.dimension != grid.dim {
        return Err(Error::InvalidArgument(format!(
            "phi is {}-dimensional, field is {}-dimensional",
            phi.dimension, grid.dim
        )));
    }
    if let Some(half_width) = phi.domain {
        if grid.half_width > half_width {
            return Err(Error::DomainViolation { point: vec![grid.half_width; grid.dim], half_width });
        }
    }
    Ok(())
}

/// `Σ_k Φ(x_k, scale·|v_k|)·h^n` over the listed grid indices. Singular cells
/// are skipped; an infinite term makes the sum infinite.
fn modular_sparse(phi: &MusielakOrlicz, grid: &Grid, idx: &[usize], vals: &[f64], scale: f64) -> Result<f64> {
    let dim = grid.dim;
    let sum = det_sum(idx.len(), |k| {
        let t = scale * vals[k].abs();
        if t == 0.0 {
            return 0.0;
        }
        let x = grid.point(idx[k]);
        if phi.is_singular(&x[..dim]) {
            return 0.0;
        }
        phi.eval_unchecked(&x[..dim], t)
    });
    if sum.is_nan() {
        return Err(Error::InvalidArgument("phi is undefined at some grid point".into()));
    }
    Ok(sum * grid.cell_measure())
}

/// Nonzero entries of a field, in index order.
fn nonzero(values: &[f64]) -> (Vec<usize>, Vec<f64>) {
    values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).unzip()
}

/// `ρ_Φ(f) = Σ_x Φ(x, |f(x)|)·h^n`.
pub fn modular(phi: &MusielakOrlicz, f: &SampledField) -> Result<f64> {
    modular_of_values(phi, f.grid(), f.values())
}

/// The modular of raw grid values, e.g. a gradient magnitude.
pub fn modular_of_values(phi: &MusielakOrlicz, grid: &Grid, values: &[f64]) -> Result<f64> {
    check_compatible(phi, grid)?;
    if values.len() != grid.len() {
        return Err(Error::InvalidArgument("value count does not match the grid".into()));
    }
    let (idx, vals) = nonzero(values);
    modular_sparse(phi, grid, &idx, &vals, 1.0)
}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_EXPANSIONS: usize = 200;

/// `inf{λ > 0 : ρ(λ) ≤ 1}` for a nonincreasing `λ ↦ ρ(λ)`.
///
/// The bracket starts at `lambda0` and is doubled or halved until it
/// straddles the unit level; bisection then runs until the bracket width is
/// at most `tol·λ`. The upper end is returned, so `ρ(result) ≤ 1` holds.
/// Infinite modular values count as above the level.
pub fn invert_modular<F>(mut rho: F, lambda0: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let mut seen: Vec<(f64, f64)> = Vec::new();
    let mut eval = |lambda: f64| -> Result<f64> {
        let r = rho(lambda)?;
        if r.is_nan() {
            return Err(Error::InvalidArgument(format!("modular undefined at lambda = {lambda}")));
        }
        for &(l, v) in &seen {
            let (small, large) = if l < lambda { ((l, v), (lambda, r)) } else { ((lambda, r), (l, v)) };
            if small.1 < large.1 && large.1 - small.1 > 1e-12 * large.1.abs() {
                return Err(Error::NonMonotone {
                    lambda_small: small.0,
                    rho_small: small.1,
                    lambda_large: large.0,
                    rho_large: large.1,
                });
            }
        }
        seen.push((lambda, r));
        Ok(r)
    };
    let start = if lambda0.is_finite() && lambda0 > 0.0 { lambda0 } else { 1.0 };
    let (mut lo, mut hi);
    if eval(start)? <= 1.0 {
        hi = start;
        lo = start / 2.0;
        let mut steps = 0;
        while eval(lo)? <= 1.0 {
            steps += 1;
            if steps >= MAX_EXPANSIONS || lo == 0.0 {
                return Err(Error::BracketNotFound(steps));
            }
            hi = lo;
            lo /= 2.0;
        }
    } else {
        lo = start;
        hi = 2.0 * start;
        let mut steps = 0;
        while eval(hi)? > 1.0 {
            steps += 1;
            if steps >= MAX_EXPANSIONS || hi.is_infinite() {
                return Err(Error::BracketNotFound(steps));
            }
            lo = hi;
            hi *= 2.0;
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid)? <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Luxemburg norm `inf{λ > 0 : ρ_Φ(f/λ) ≤ 1}`.
pub fn luxemburg_norm(phi: &MusielakOrlicz, f: &SampledField, tol: f64) -> Result<f64> {
    luxemburg_norm_of_values(phi, f.grid(), f.values(), tol)
}

pub fn luxemburg_norm_of_values(phi: &MusielakOrlicz, grid: &Grid, values: &[f64], tol: f64) -> Result<f64> {
    check_compatible(phi, grid)?;
    let (idx, vals) = nonzero(values);
    if idx.is_empty() {
        return Ok(0.0);
    }
    let rho = |lambda: f64| modular_sparse(phi, grid, &idx, &vals, 1.0 / lambda);
    let lambda0 = rho(1.0)?;
    invert_modular(rho, lambda0, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind {
    /// `ψ_ε(r) = ε r^{ε−1}`
    PowerKernel,
    /// `ψ_ε(r) = (1/ε)·1_{(0,ε)}(r)`
    BoxKernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiFamily {
    pub kind: PsiKind,
    pub epsilon: f64,
}

impl PsiFamily {
    pub fn new(kind: PsiKind, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
        }
        Ok(PsiFamily { kind, epsilon })
    }

    pub fn density(&self, r: f64) -> f64 {
        let e = self.epsilon;
        if !(r > 0.0 && r <= 1.0) {
            return 0.0;
        }
        match self.kind {
            PsiKind::PowerKernel => e * r.powf(e - 1.0),
            PsiKind::BoxKernel => {
                if r < e {
                    1.0 / e
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact mass of `(a, b)`, `0 ≤ a < b ≤ 1`.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::InvalidArgument(format!("interval ({a}, {b}) is not inside [0, 1]")));
        }
        let e = self.epsilon;
        Ok(match self.kind {
            PsiKind::PowerKernel => {
                if a == 0.0 {
                    b.powf(e)
                } else {
                    // a^ε·(exp(ε ln(b/a)) − 1) avoids cancellation for small ε
                    a.powf(e) * (e * (b / a).ln()).exp_m1()
                }
            }
            PsiKind::BoxKernel => ((b.min(e) - a.min(e)) / e).max(0.0).min(1.0),
        })
    }
}

pub fn psi_mass(family: &PsiFamily, a: f64, b: f64) -> Result<f64> {
    family.mass(a, b)
}

/// What to do with the ψ-mass below the smallest node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    /// hold the smallest node's integrand constant on `(0, r_min)`
    #[default]
    Extend,
    /// drop `(0, r_min)` entirely
    Omit,
}

/// Discretization of the `dr` integral: node `j` carries the exact ψ-mass
/// of `[r_j, r_{j+1})`, the last interval ending at 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RQuadrature {
    pub family: PsiFamily,
    pub r_min: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// ψ-mass of `(0, r_min)`
    pub truncated_mass: f64,
}

impl RQuadrature {
    /// Geometric ladder `r_min·2^j < 1`. Nodes with zero mass are dropped.
    pub fn geometric(family: PsiFamily, r_min: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min < 1.0) {
            return Err(Error::InvalidArgument(format!("r_min {r_min} must lie in (0, 1)")));
        }
        let mut nodes = Vec::new();
        let mut r = r_min;
        while r < 1.0 {
            nodes.push(r);
            r *= 2.0;
        }
        Self::from_nodes(family, nodes)
    }

    pub fn from_nodes(family: PsiFamily, mut nodes: Vec<f64>) -> Result<Self> {
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        if nodes.is_empty() {
            return Err(Error::Empty("r-quadrature node set"));
        }
        if nodes[0] <= 0.0 || *nodes.last().unwrap() >= 1.0 {
            return Err(Error::InvalidArgument("r nodes must lie in (0, 1)".into()));
        }
        let r_min = nodes[0];
        let truncated_mass = family.mass(0.0, r_min)?;
        let mut kept = Vec::new();
        let mut weights = Vec::new();
        for (j, &r) in nodes.iter().enumerate() {
            let next = nodes.get(j + 1).copied().unwrap_or(1.0);
            let w = family.mass(r, next)?;
            if w > 0.0 {
                kept.push(r);
                weights.push(w);
            }
        }
        Ok(RQuadrature { family, r_min, nodes: kept, weights, truncated_mass })
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.truncated_mass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpOptions {
    pub weighting: BallWeighting,
    pub tail: TailPolicy,
    /// When set, each node works on the coarsest dyadic sub-grid that still
    /// resolves its radius with at least this many cells.
    pub min_cells_per_radius: Option<usize>,
}

impl Default for SharpOptions {
    fn default() -> Self {
        SharpOptions { weighting: BallWeighting::default(), tail: TailPolicy::default(), min_cells_per_radius: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpModular {
    /// the quadrature value, including the tail when it is extended
    pub value: f64,
    pub truncated_mass: f64,
    /// contribution assigned to `(0, r_min)`
    pub tail: f64,
    /// inner integrand `Σ_x Φ(x, M♯/r)·h^n` at each node
    pub node_integrands: Vec<f64>,
}

struct NodeField {
    r: f64,
    weight: f64,
    grid: Grid,
    idx: Vec<usize>,
    vals: Vec<f64>,
}

/// `M♯` fields of `f` at every quadrature node, kept in sparse form. Because
/// `M♯(f/λ) = M♯(f)/λ`, one cache serves every λ.
pub struct SharpCache {
    nodes: Vec<NodeField>,
    truncated_mass: f64,
    tail: TailPolicy,
}

fn stride_for(grid: &Grid, r: f64, min_cells: Option<usize>) -> usize {
    let Some(m) = min_cells else { return 1 };
    let m = (m as f64).max(BallStencil::MIN_CELLS);
    let h = grid.spacing();
    let mut s = 1;
    loop {
        let next = 2 * s;
        let cells = r / (next as f64 * h);
        let coarse_points = (grid.points - 1) / next + 1;
        if cells < m || (grid.points - 1) % next != 0 || coarse_points < Grid::MIN_POINTS {
            return s;
        }
        s = next;
    }
}

impl SharpCache {
    pub fn build(phi: &MusielakOrlicz, f: &SampledField, rq: &RQuadrature, opts: &SharpOptions) -> Result<Self> {
        check_compatible(phi, f.grid())?;
        if rq.nodes.is_empty() {
            return Err(Error::Empty("r-quadrature node set"));
        }
        let mut nodes = Vec::with_capacity(rq.nodes.len());
        for (&r, &weight) in rq.nodes.iter().zip(&rq.weights) {
            let stride = stride_for(f.grid(), r, opts.min_cells_per_radius);
            let g = f.coarsen(stride)?;
            let grid = *g.grid();
            let stencil = BallStencil::new(grid.dim, r, grid.spacing(), opts.weighting)?;
            let m = sharp_average_field_with(&g, &stencil)?;
            let (idx, vals) = nonzero(m.values());
            nodes.push(NodeField { r, weight, grid, idx, vals });
        }
        Ok(SharpCache { nodes, truncated_mass: rq.truncated_mass, tail: opts.tail })
    }

    /// `ρ^ε_♯(f/λ)` with `scale = 1/λ`.
    pub fn evaluate(&self, phi: &MusielakOrlicz, scale: f64) -> Result<SharpModular> {
        let mut node_integrands = Vec::with_capacity(self.nodes.len());
        let mut value = 0.0;
        for n in &self.nodes {
            let inner = modular_sparse(phi, &n.grid, &n.idx, &n.vals, scale / n.r)?;
            node_integrands.push(inner);
            value += n.weight * inner;
        }
        let tail = match self.tail {
            TailPolicy::Extend => self.truncated_mass * node_integrands[0],
            TailPolicy::Omit => 0.0,
        };
        Ok(SharpModular { value: value + tail, truncated_mass: self.truncated_mass, tail, node_integrands })
    }

    pub fn is_zero(&self) -> bool {
        self.nodes.iter().all(|n| n.idx.is_empty())
    }
}

/// `ρ^ε_♯(f) = ∫_0^1 [Σ_x Φ(x, M♯_{B(x,r)}f / r)·h^n] ψ_ε(r) dr`.
pub fn sharp_modular(phi: &MusielakOrlicz, f: &SampledField, rq: &RQuadrature) -> Result<SharpModular> {
    sharp_modular_with(phi, f, rq, &SharpOptions::default())
}

pub fn sharp_modular_with(
    phi: &MusielakOrlicz,
    f: &SampledField,
    rq: &RQuadrature,
    opts: &SharpOptions,
) -> Result<SharpModular> {
    SharpCache::build(phi, f, rq, opts)?.evaluate(phi, 1.0)
}

/// `‖f‖^ε_{Φ,♯} = inf{λ > 0 : ρ^ε_♯(f/λ) ≤ 1}`.
pub fn sharp_norm(phi: &MusielakOrlicz, f: &SampledField, rq: &RQuadrature, tol: f64) -> Result<f64> {
    sharp_norm_with(phi, f, rq, tol, &SharpOptions::default())
}

pub fn sharp_norm_with(
    phi: &MusielakOrlicz,
    f: &SampledField,
    rq: &RQuadrature,
    tol: f64,
    opts: &SharpOptions,
) -> Result<f64> {
    let cache = SharpCache::build(phi, f, rq, opts)?;
    sharp_norm_cached(phi, &cache, tol)
}

pub fn sharp_norm_cached(phi: &MusielakOrlicz, cache: &SharpCache, tol: f64) -> Result<f64> {
    if cache.is_zero() {
        return Ok(0.0);
    }
    let rho = |lambda: f64| cache.evaluate(phi, 1.0 / lambda).map(|s| s.value);
    let lambda0 = rho(1.0)?;
    invert_modular(rho, lambda0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{build_field, TestFunction};
    use crate::phi::Weight;

    fn indicator(h: f64, height: f64) -> SampledField {
        let g = Grid::with_spacing(1, 2.0, h).unwrap();
        // cells centered on [0, 1): the Riemann sum sees exactly 1/h cells
        SampledField::from_fn(g, |x| if x[0] >= 0.0 && x[0] < 1.0 - 0.5 * h { height } else { 0.0 }).unwrap()
    }

    #[test]
    fn modular_of_indicators() {
        let phi = MusielakOrlicz::power(2.0, 1).unwrap();
        let h = 1.0 / 64.0;
        assert!((modular(&phi, &indicator(h, 1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((modular(&phi, &indicator(h, 2.0)).unwrap() - 4.0).abs() < 1e-12);
        let g = Grid::with_spacing(1, 2.0, h).unwrap();
        assert_eq!(modular(&phi, &SampledField::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn luxemburg_examples() {
        let h = 1.0 / 64.0;
        let p2 = MusielakOrlicz::power(2.0, 1).unwrap();
        let n = luxemburg_norm(&p2, &indicator(h, 2.0), DEFAULT_TOL).unwrap();
        assert!((n - 2.0).abs() < 1e-7);
        let w4 = MusielakOrlicz::weighted_power(Weight::Constant { value: 4.0 }, 2.0, 1).unwrap();
        let n = luxemburg_norm(&w4, &indicator(h, 1.0), DEFAULT_TOL).unwrap();
        assert!((n - 2.0).abs() < 1e-7);
        let g = Grid::with_spacing(1, 2.0, h).unwrap();
        assert_eq!(luxemburg_norm(&p2, &SampledField::zeros(g), DEFAULT_TOL).unwrap(), 0.0);
    }

    #[test]
    fn luxemburg_upper_end_is_certified() {
        let phi = MusielakOrlicz::power(3.0, 1).unwrap();
        let f = indicator(1.0 / 32.0, 5.0);
        let n = luxemburg_norm(&phi, &f, DEFAULT_TOL).unwrap();
        assert!(modular(&phi, &f.scaled(1.0 / n)).unwrap() <= 1.0);
    }

    #[test]
    fn non_monotone_modular_is_rejected() {
        // ρ(λ) increasing in λ
        let err = invert_modular(|l| Ok(l), 1.0, 1e-8).unwrap_err();
        assert!(matches!(err, Error::NonMonotone { .. }), "{err}");
        let err = invert_modular(|_| Ok(0.5), 1.0, 1e-8).unwrap_err();
        assert!(matches!(err, Error::BracketNotFound(_)));
    }

    #[test]
    fn psi_masses() {
        let p = PsiFamily::new(PsiKind::PowerKernel, 0.5).unwrap();
        assert!((p.mass(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((p.mass(0.25, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let b = PsiFamily::new(PsiKind::BoxKernel, 0.1).unwrap();
        assert_eq!(b.mass(0.5, 1.0).unwrap(), 0.0);
        assert!((b.mass(0.0, 0.05).unwrap() - 0.5).abs() < 1e-15);
        assert!(p.mass(0.5, 0.25).is_err());
        assert!(p.mass(0.0, 1.5).is_err());
    }

    #[test]
    fn quadrature_mass_adds_up() {
        for kind in [PsiKind::PowerKernel, PsiKind::BoxKernel] {
            for eps in [0.5, 1.0 / 32.0, 1e-4] {
                let fam = PsiFamily::new(kind, eps).unwrap();
                let rq = RQuadrature::geometric(fam, 2.0 / 4096.0).unwrap();
                assert!((rq.total_mass() - 1.0).abs() < 1e-12, "{kind:?} {eps}");
                assert!(rq.nodes.iter().all(|&r| r >= rq.r_min));
            }
        }
        let fam = PsiFamily::new(PsiKind::BoxKernel, 1.0 / 16.0).unwrap();
        let rq = RQuadrature::geometric(fam, 1.0 / 128.0).unwrap();
        assert_eq!(rq.nodes.len(), 3);
    }

    fn bump_setup(h: f64) -> SampledField {
        let g = Grid::with_spacing(1, 3.25, h).unwrap();
        build_field(&g, &TestFunction::radial_bump(1.0), 2.0).unwrap().0
    }

    #[test]
    fn sharp_modular_zero_and_scaling() {
        let h = 1.0 / 128.0;
        let phi = MusielakOrlicz::power(2.0, 1).unwrap();
        let fam = PsiFamily::new(PsiKind::PowerKernel, 0.25).unwrap();
        let rq = RQuadrature::geometric(fam, 2.0 * h).unwrap();
        let g = Grid::with_spacing(1, 3.25, h).unwrap();
        let z = sharp_modular(&phi, &SampledField::zeros(g), &rq).unwrap();
        assert_eq!(z.value, 0.0);
        let f = bump_setup(h);
        let a = sharp_modular(&phi, &f, &rq).unwrap();
        let b = sharp_modular(&phi, &f.scaled(3.0), &rq).unwrap();
        assert!((b.value - 9.0 * a.value).abs() <= 1e-12 * b.value);
        let n = sharp_norm(&phi, &f, &rq, DEFAULT_TOL).unwrap();
        assert!((n - a.value.sqrt()).abs() < 1e-7 * n);
    }

    #[test]
    fn tail_policy() {
        let h = 1.0 / 128.0;
        let phi = MusielakOrlicz::power(2.0, 1).unwrap();
        let fam = PsiFamily::new(PsiKind::PowerKernel, 0.25).unwrap();
        let rq = RQuadrature::geometric(fam, 2.0 * h).unwrap();
        let f = bump_setup(h);
        let ext = sharp_modular(&phi, &f, &rq).unwrap();
        let omit = sharp_modular_with(&phi, &f, &rq, &SharpOptions { tail: TailPolicy::Omit, ..Default::default() }).unwrap();
        assert_eq!(omit.tail, 0.0);
        assert!((ext.value - omit.value - rq.truncated_mass * ext.node_integrands[0]).abs() < 1e-12 * ext.value);
    }

    #[test]
    fn margin_is_enforced() {
        let h = 1.0 / 64.0;
        let g = Grid::with_spacing(1, 1.5, h).unwrap();
        let f = build_field(&g, &TestFunction::radial_bump(1.0), 0.0).unwrap().0;
        let phi = MusielakOrlicz::power(2.0, 1).unwrap();
        let rq = RQuadrature::geometric(PsiFamily::new(PsiKind::PowerKernel, 0.5).unwrap(), 2.0 * h).unwrap();
        assert!(matches!(sharp_modular(&phi, &f, &rq), Err(Error::MarginViolation { .. })));
    }

    #[test]
    fn integrand_vanishes_on_outer_ring() {
        let h = 1.0 / 64.0;
        let f = bump_setup(h);
        let m = crate::fields::sharp_average_field(&f, 0.5).unwrap();
        let g = m.grid();
        for i in 0..g.len() {
            let x = g.point(i)[0];
            if x.abs() > g.half_width - 1.0 {
                assert_eq!(m.values()[i], 0.0);
            }
        }
    }
}
