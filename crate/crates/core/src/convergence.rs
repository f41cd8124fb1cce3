//! The constant `c₀`, ε-sweeps of the sharp modular and norm against their
//! gradient limits, and probes of the intermediate estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    ball_mean_with, build_field, gradient, mollify, sharp_ball_average_with, BallStencil, BallWeighting, Grid,
    SampledField, TestFunction,
};
use crate::modular::{
    luxemburg_norm_of_values, modular_of_values, sharp_modular_with, sharp_norm_cached, PsiFamily, PsiKind,
    RQuadrature, SharpCache, SharpOptions, DEFAULT_TOL,
};
use crate::numeric::log_space;
use crate::phi::{check_a1, check_conjugate_delta2, check_delta2, A1Options, A1Report, Delta2Report, MusielakOrlicz, KAPPA_CAP};

/// `c₀ = ⨍_{B(0,1)} |x·e₁| dx`.
pub fn c0_analytic(n: usize) -> Result<f64> {
    match n {
        1 => Ok(0.5),
        2 => Ok(4.0 / (3.0 * std::f64::consts::PI)),
        3 => Ok(0.375),
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

/// `c₀` from the weighted unit-ball stencil at spacing `h`.
pub fn c0_grid(n: usize, h: f64) -> Result<f64> {
    if !(1..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::InvalidArgument(format!("resolution {h} must lie in (0, 1/2]")));
    }
    let weighting = BallWeighting::default();
    let rc = 1.0 / h;
    let m = weighting.outer(rc).ceil() as i64;
    let span = |a: usize| if a < n { -m..=m } else { 0..=0 };
    // one partial per first-axis slab, combined in slab order
    let slabs: Vec<(f64, f64)> = span(0)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|i| {
            let (mut num, mut den) = (0.0, 0.0);
            for j in span(1) {
                for k in span(2) {
                    let d = ((i * i + j * j + k * k) as f64).sqrt();
                    let w = weighting.weight(d, rc);
                    if w > 0.0 {
                        num += w * (i.unsigned_abs() as f64);
                        den += w;
                    }
                }
            }
            (num, den)
        })
        .collect();
    let (num, den) = slabs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    Ok(num / den * h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C0Value {
    pub dimension: usize,
    pub analytic: f64,
    pub cross_check: f64,
    pub discrepancy: f64,
    pub resolution: f64,
}

pub fn default_c0_resolution(n: usize) -> f64 {
    if n >= 3 {
        2f64.powi(-7)
    } else {
        2f64.powi(-10)
    }
}

pub fn c0(n: usize) -> Result<C0Value> {
    c0_at(n, default_c0_resolution(n))
}

pub fn c0_at(n: usize, h: f64) -> Result<C0Value> {
    let analytic = c0_analytic(n)?;
    let cross_check = c0_grid(n, h)?;
    Ok(C0Value { dimension: n, analytic, cross_check, discrepancy: (cross_check - analytic).abs(), resolution: h })
}

/// Assumption checks run before any sweep.
#[derive(Clone, Debug, Serialize)]
pub struct Preflight {
    pub delta2: Delta2Report,
    pub conjugate_delta2: Option<Delta2Report>,
    pub a1: A1Report,
}

impl Preflight {
    pub fn passed(&self) -> bool {
        self.delta2.passed && self.conjugate_delta2.as_ref().is_none_or(|r| r.passed) && self.a1.passed
    }
}

/// Tensor grid of `per_axis` equispaced points per axis on `[−L, L]^n`.
pub fn box_samples(dim: usize, half_width: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let coords: Vec<f64> =
        (0..per_axis).map(|i| -half_width + 2.0 * half_width * i as f64 / (per_axis - 1) as f64).collect();
    let mut pts = vec![Vec::new()];
    for _ in 0..dim {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                coords.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    pts
}

/// Δ₂ for `Φ` and, where a closed form exists, for `Φ*`; A1 on the box.
pub fn preflight_report(phi: &MusielakOrlicz, half_width: f64) -> Result<Preflight> {
    let n = phi.dimension;
    let xs = box_samples(n, half_width, if n == 1 { 33 } else { 9 });
    let s_grid = log_space(1e-3, 1e3, 25);
    let delta2 = check_delta2(phi, &xs, &s_grid, KAPPA_CAP)?;
    let conjugate_delta2 = check_conjugate_delta2(phi, &xs, &s_grid, KAPPA_CAP)?;
    let a1 = check_a1(phi, &vec![0.0; n], half_width, &[0.5, 1.0, 2.0], A1Options::for_dimension(n))?;
    Ok(Preflight { delta2, conjugate_delta2, a1 })
}

/// Like [`preflight_report`] but fails with the violated assumption named.
pub fn preflight(phi: &MusielakOrlicz, half_width: f64) -> Result<Preflight> {
    let p = preflight_report(phi, half_width)?;
    if !p.a1.passed {
        let bad = p.a1.entries.iter().find(|e| !e.converged).map(|e| e.c).unwrap_or(f64::NAN);
        return Err(Error::AssumptionFailed {
            assumption: "A1".into(),
            detail: format!("integral of phi(., {bad}) over the box does not converge under refinement"),
        });
    }
    if !p.delta2.passed {
        return Err(Error::AssumptionFailed {
            assumption: "delta2".into(),
            detail: format!("doubling ratio {} exceeds {}", p.delta2.kappa_hat, p.delta2.cap),
        });
    }
    if let Some(c) = p.conjugate_delta2.as_ref().filter(|c| !c.passed) {
        return Err(Error::AssumptionFailed {
            assumption: "conjugate delta2".into(),
            detail: format!("doubling ratio {} exceeds {}", c.kappa_hat, c.cap),
        });
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub epsilon: f64,
    pub h: f64,
    /// defaults to `2h`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
}

/// `ε` and `h` halving together, `r_min = 2h`.
pub fn coupled_schedule(epsilon0: f64, h0: f64, rows: usize) -> Vec<ScheduleRow> {
    (0..rows)
        .map(|k| {
            let s = 2f64.powi(-(k as i32));
            ScheduleRow { epsilon: epsilon0 * s, h: h0 * s, r_min: None }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub half_width: f64,
    pub psi: PsiKind,
    pub sharp: SharpOptions,
    /// bound on the final relative error
    pub final_bound: f64,
    /// number of trailing rows over which the error must not increase
    pub window: usize,
    pub run_preflight: bool,
    pub tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            half_width: 3.25,
            psi: PsiKind::PowerKernel,
            sharp: SharpOptions::default(),
            final_bound: 0.05,
            window: 3,
            run_preflight: true,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Modular,
    Norm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub h: f64,
    pub r_min: f64,
    /// sharp modular, or sharp norm in a norm sweep
    pub value: f64,
    /// the sharp modular itself
    pub modular: f64,
    pub truncated_mass: f64,
    /// part of the modular assigned to `(0, r_min)`
    pub tail: f64,
    pub target: f64,
    pub rel_error: f64,
    pub node_integrands: Vec<f64>,
}

impl SweepRow {
    pub fn max_integrand(&self) -> f64 {
        self.node_integrands.iter().copied().fold(0.0, f64::max)
    }

    /// `truncated_mass · |I(r₀) − I(r₁)|`: how far the tail value could move
    /// if the integrand kept its trend between the two smallest nodes.
    pub fn tail_uncertainty(&self) -> f64 {
        match self.node_integrands.as_slice() {
            [a, b, ..] => self.truncated_mass * (a - b).abs(),
            _ => self.truncated_mass * self.max_integrand(),
        }
    }
}

pub const REL_ERROR_FLOOR: f64 = 1e-30;

pub fn relative_error(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.max(REL_ERROR_FLOOR)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub rows: Vec<SweepRow>,
    pub final_bound: f64,
    pub window: usize,
    pub verdict: bool,
}

/// Error weakly decreasing over the last `window` rows and the final error
/// within `bound`.
pub fn sweep_verdict(errors: &[f64], window: usize, bound: f64) -> bool {
    let Some(&last) = errors.last() else { return false };
    let tail = &errors[errors.len().saturating_sub(window.max(1))..];
    tail.windows(2).all(|w| w[1] <= w[0]) && last <= bound
}

fn validate_schedule(schedule: &[ScheduleRow]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::Empty("epsilon schedule"));
    }
    if schedule.windows(2).any(|w| w[1].epsilon >= w[0].epsilon) {
        return Err(Error::InvalidArgument("epsilon schedule must be strictly decreasing".into()));
    }
    for row in schedule {
        let min = BallStencil::MIN_CELLS * row.h;
        if let Some(r) = row.r_min {
            if r < min * (1.0 - 1e-12) {
                return Err(Error::UnderResolved { radius: r, min });
            }
        }
    }
    Ok(())
}

struct RowSetup {
    field: SampledField,
    grad_c0: Vec<f64>,
    rq: RQuadrature,
    r_min: f64,
}

fn setup_row(tf: &TestFunction, dim: usize, row: &ScheduleRow, opts: &SweepOptions) -> Result<RowSetup> {
    let grid = Grid::with_spacing(dim, opts.half_width, row.h)?;
    let r_min = row.r_min.unwrap_or(BallStencil::MIN_CELLS * row.h);
    let rq = RQuadrature::geometric(PsiFamily::new(opts.psi, row.epsilon)?, r_min)?;
    let r_max = rq.nodes.last().copied().unwrap_or(r_min);
    // stencils of the largest node, centered anywhere within its reach of the support
    let (field, grad) = build_field(&grid, tf, 2.0 * (r_max + 2.0 * row.h))?;
    let c0 = c0_analytic(dim)?;
    let grad_c0 = grad.magnitude().into_iter().map(|g| c0 * g).collect();
    Ok(RowSetup { field, grad_c0, rq, r_min })
}

/// Sharp modular against `ρ_Φ(c₀|∇f|)` along a coupled `(ε, h)` schedule.
/// The target uses the analytic gradient.
pub fn theorem_sweep(
    phi: &MusielakOrlicz,
    tf: &TestFunction,
    schedule: &[ScheduleRow],
    opts: &SweepOptions,
) -> Result<SweepReport> {
    run_sweep(phi, tf, schedule, opts, SweepKind::Modular)
}

/// Sharp norm against `c₀‖|∇f|‖_{L^Φ}`.
pub fn norm_sweep(
    phi: &MusielakOrlicz,
    tf: &TestFunction,
    schedule: &[ScheduleRow],
    opts: &SweepOptions,
) -> Result<SweepReport> {
    run_sweep(phi, tf, schedule, opts, SweepKind::Norm)
}

fn run_sweep(
    phi: &MusielakOrlicz,
    tf: &TestFunction,
    schedule: &[ScheduleRow],
    opts: &SweepOptions,
    kind: SweepKind,
) -> Result<SweepReport> {
    validate_schedule(schedule)?;
    if opts.run_preflight {
        preflight(phi, opts.half_width)?;
    }
    let dim = phi.dimension;
    let mut rows = Vec::with_capacity(schedule.len());
    for row in schedule {
        let s = setup_row(tf, dim, row, opts)?;
        let grid = *s.field.grid();
        let cache = SharpCache::build(phi, &s.field, &s.rq, &opts.sharp)?;
        let m = cache.evaluate(phi, 1.0)?;
        let (value, target) = match kind {
            SweepKind::Modular => (m.value, modular_of_values(phi, &grid, &s.grad_c0)?),
            SweepKind::Norm => (
                sharp_norm_cached(phi, &cache, opts.tol)?,
                luxemburg_norm_of_values(phi, &grid, &s.grad_c0, opts.tol)?,
            ),
        };
        rows.push(SweepRow {
            epsilon: row.epsilon,
            h: row.h,
            r_min: s.r_min,
            value,
            modular: m.value,
            truncated_mass: m.truncated_mass,
            tail: m.tail,
            target,
            rel_error: relative_error(value, target),
            node_integrands: m.node_integrands,
        });
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.rel_error).collect();
    let verdict = sweep_verdict(&errors, opts.window, opts.final_bound);
    Ok(SweepReport { kind, rows, final_bound: opts.final_bound, window: opts.window, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderProbe {
    pub index: usize,
    pub radius: f64,
    /// `|M♯_{B(x,r)}f − c₀ r|∇f(x)||`
    pub lhs: f64,
    /// `2⨍|R| + |M♯(linear part) − c₀ r|∇f(x)||`
    pub rhs: f64,
    /// the same bound with `|R(x,y)| ≤ ½‖∇²f‖|y−x|²` in place of `|R|`
    pub rhs_hessian: f64,
    /// `|M♯(linear part) − c₀ r|∇f(x)||`: discrete-ball bias for affine data
    pub linear_bias: f64,
}

impl RemainderProbe {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Splits `f(y) = f(x) + ∇f(x)·(y−x) + R(x,y)` on the ball stencil at
/// `index` and bounds the deviation of `M♯f` from `c₀ r|∇f(x)|`.
pub fn remainder_probe(f: &SampledField, tf: &TestFunction, index: usize, radius: f64) -> Result<RemainderProbe> {
    let grid = f.grid();
    let n = grid.dim;
    let h = grid.spacing();
    let st = BallStencil::new(n, radius, h, BallWeighting::default())?;
    let sharp = sharp_ball_average_with(f, index, &st)?;
    let x = grid.point(index);
    let g = tf.gradient(&x[..n]);
    let gnorm = g[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
    let c0 = c0_analytic(n)?;
    let offs = st.flat_offsets(grid);
    let fx = f.values()[index];
    let w_total = st.total_weight;
    let (mut mean_lin, mut mean_abs_r, mut mean_d2, mut hmax) = (0.0, 0.0, 0.0, 0.0f64);
    let mut lin = Vec::with_capacity(st.count());
    for ((o, &w), &fo) in st.offsets.iter().zip(&st.weights).zip(&offs) {
        let mut y = [0.0; 3];
        let mut l = 0.0;
        let mut d2 = 0.0;
        for a in 0..n {
            let dy = o[a] as f64 * h;
            y[a] = x[a] + dy;
            l += g[a] * dy;
            d2 += dy * dy;
        }
        let fy = f.values()[(index as isize + fo) as usize];
        let r = fy - fx - l;
        lin.push(l);
        mean_lin += w * l;
        mean_abs_r += w * r.abs();
        mean_d2 += w * d2;
        let hs = tf.hessian(&y[..n]);
        let frob = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| hs[i][j] * hs[i][j]).sum::<f64>();
        hmax = hmax.max(frob.sqrt());
    }
    mean_lin /= w_total;
    mean_abs_r /= w_total;
    mean_d2 /= w_total;
    let k = st.sharp_scale;
    let sharp_lin = k * lin.iter().zip(&st.weights).map(|(l, w)| w * (l - mean_lin).abs()).sum::<f64>() / w_total;
    let exact = c0 * radius * gnorm;
    let linear_bias = (sharp_lin - exact).abs();
    Ok(RemainderProbe {
        index,
        radius,
        lhs: (sharp - exact).abs(),
        rhs: 2.0 * k * mean_abs_r + linear_bias,
        rhs_hessian: k * hmax * mean_d2 + linear_bias,
        linear_bias,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub max_ratio: f64,
    pub worst_index: usize,
    pub worst_radius: f64,
    pub samples: usize,
}

/// Largest `M♯_{B(x,r)}f / (r·⨍_{B(x,r)}|∇f|)` over the points where the
/// ball fits and the gradient mean is not negligible. The gradient is the
/// central-difference one.
pub fn poincare_probe(f: &SampledField, radii: &[f64]) -> Result<PoincareReport> {
    if radii.is_empty() {
        return Err(Error::Empty("radius ladder"));
    }
    let grid = *f.grid();
    let gmag = SampledField::new(grid, gradient(f).magnitude())?;
    let gmax = gmag.values().iter().copied().fold(0.0, f64::max);
    let mut best = PoincareReport { max_ratio: 0.0, worst_index: 0, worst_radius: radii[0], samples: 0 };
    for &r in radii {
        let st = BallStencil::new(grid.dim, r, grid.spacing(), BallWeighting::default())?;
        let found: Vec<(usize, f64)> = (0..grid.len())
            .into_par_iter()
            .filter(|&i| st.fits(&grid, i))
            .filter_map(|i| {
                let den = r * ball_mean_with(&gmag, i, &st).ok()?;
                if den <= 1e-8 * r * gmax {
                    return None;
                }
                Some((i, sharp_ball_average_with(f, i, &st).ok()? / den))
            })
            .collect();
        best.samples += found.len();
        for (i, ratio) in found {
            if ratio > best.max_ratio {
                best.max_ratio = ratio;
                best.worst_index = i;
                best.worst_radius = r;
            }
        }
    }
    Ok(best)
}

/// Frozen constant of the mollified-energy bound `K·(ρ^ε_♯(f) + 1)^γ̂`.
pub const ENERGY_BOUND_K: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    /// `(δ, ρ_Φ(c₀|∇(G_δ*f)|))` over the fixed probe box
    pub rows: Vec<(f64, f64)>,
    pub sharp_modular: f64,
    pub gamma: f64,
    pub k: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Energies of the mollified field across a δ ladder, compared with the
/// frozen bound. The probe box is the support grown by the largest δ.
pub fn mollified_energy_probe(
    phi: &MusielakOrlicz,
    f: &SampledField,
    deltas: &[f64],
    rq: &RQuadrature,
    gamma: f64,
) -> Result<EnergyTable> {
    if deltas.is_empty() {
        return Err(Error::Empty("delta ladder"));
    }
    let grid = *f.grid();
    let h = grid.spacing();
    let c0 = c0_analytic(grid.dim)?;
    let sharp = sharp_modular_with(phi, f, rq, &SharpOptions::default())?.value;
    let grow = (deltas.iter().copied().fold(0.0, f64::max) / h).ceil() as usize + 1;
    let probe_box = f.support_box().map(|b| {
        let mut out = b;
        for a in out.iter_mut().take(grid.dim) {
            *a = (a.0.saturating_sub(grow), (a.1 + grow).min(grid.points - 1));
        }
        out
    });
    let mut rows = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let energy = match probe_box {
            None => 0.0,
            Some(b) => {
                let m = mollify(f, d)?;
                let mag = gradient(&m).magnitude();
                let masked: Vec<f64> = mag
                    .iter()
                    .enumerate()
                    .map(|(i, g)| {
                        let idx = grid.multi_index(i);
                        if (0..grid.dim).all(|a| idx[a] >= b[a].0 && idx[a] <= b[a].1) {
                            c0 * g
                        } else {
                            0.0
                        }
                    })
                    .collect();
                modular_of_values(phi, &grid, &masked)?
            }
        };
        rows.push((d, energy));
    }
    let bound = ENERGY_BOUND_K * (sharp + 1.0).powf(gamma);
    let passed = rows.iter().all(|&(_, e)| e <= bound);
    Ok(EnergyTable { rows, sharp_modular: sharp, gamma, k: ENERGY_BOUND_K, bound, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Carrier, Envelope};

    #[test]
    fn c0_table() {
        assert_eq!(c0_analytic(1).unwrap(), 0.5);
        assert!((c0_analytic(2).unwrap() - 0.424_413_181_578_387_6).abs() < 1e-15);
        assert_eq!(c0_analytic(3).unwrap(), 0.375);
        assert!(matches!(c0_analytic(7), Err(Error::UnsupportedDimension(7))));
    }

    #[test]
    fn c0_cross_check_1d_is_exact() {
        for k in 3..8 {
            let v = c0_grid(1, 2f64.powi(-k)).unwrap();
            assert!((v - 0.5).abs() < 1e-14, "k={k}: {v}");
        }
    }

    #[test]
    fn c0_cross_check_2d_converges() {
        let e: Vec<f64> = (4..8).map(|k| c0_at(2, 2f64.powi(-k)).unwrap().discrepancy).collect();
        for w in e.windows(2) {
            assert!(w[1] <= 0.5 * w[0], "{e:?}");
        }
    }

    #[test]
    fn verdict_rule() {
        assert!(sweep_verdict(&[0.3, 0.1, 0.04, 0.04], 3, 0.05));
        assert!(!sweep_verdict(&[0.3, 0.02, 0.04], 3, 0.05));
        assert!(!sweep_verdict(&[0.3, 0.2, 0.1], 3, 0.05));
        assert!(sweep_verdict(&[0.0, 0.0], 3, 0.05));
        assert!(!sweep_verdict(&[], 3, 0.05));
    }

    #[test]
    fn schedule_validation() {
        let s = coupled_schedule(0.5, 1.0 / 64.0, 3);
        assert_eq!(s[2].epsilon, 0.125);
        assert_eq!(s[2].h, 1.0 / 256.0);
        let bad = [ScheduleRow { epsilon: 0.5, h: 1.0 / 64.0, r_min: Some(1.0 / 64.0) }];
        assert!(matches!(validate_schedule(&bad), Err(Error::UnderResolved { .. })));
        let unordered = [ScheduleRow { epsilon: 0.25, h: 0.1, r_min: None }, ScheduleRow { epsilon: 0.5, h: 0.1, r_min: None }];
        assert!(validate_schedule(&unordered).is_err());
    }

    #[test]
    fn zero_field_sweep() {
        let phi = MusielakOrlicz::power(2.0, 1).unwrap();
        let sched = coupled_schedule(0.5, 1.0 / 64.0, 2);
        let r = theorem_sweep(&phi, &TestFunction::zero(), &sched, &SweepOptions::default()).unwrap();
        assert!(r.verdict);
        for row in &r.rows {
            assert_eq!((row.value, row.target, row.rel_error), (0.0, 0.0, 0.0));
        }
        let n = norm_sweep(&phi, &TestFunction::zero(), &sched, &SweepOptions::default()).unwrap();
        assert!(n.rows.iter().all(|r| r.value == 0.0 && r.target == 0.0));
    }

    #[test]
    fn preflight_names_assumption() {
        let exp = MusielakOrlicz::orlicz(crate::phi::OrliczKind::Exponential, 1).unwrap();
        match preflight(&exp, 3.25) {
            Err(Error::AssumptionFailed { assumption, .. }) => assert_eq!(assumption, "delta2"),
            other => panic!("{other:?}"),
        }
        let w = MusielakOrlicz::weighted_power(crate::phi::Weight::RadialPower { alpha: -2.0, scale: 1.0 }, 2.0, 1).unwrap();
        match preflight(&w, 3.25) {
            Err(Error::AssumptionFailed { assumption, .. }) => assert_eq!(assumption, "A1"),
            other => panic!("{other:?}"),
        }
        assert!(preflight(&MusielakOrlicz::power(2.0, 1).unwrap(), 3.25).unwrap().passed());
    }

    #[test]
    fn remainder_of_affine_and_constant() {
        let g = Grid::with_spacing(1, 3.0, 1.0 / 128.0).unwrap();
        let tf = TestFunction {
            carrier: Carrier::Affine { offset: 0.3, slope: vec![2.0] },
            envelope: Envelope::Plateau { inner: 1.0, outer: 2.0 },
        };
        let (f, _) = build_field(&g, &tf, 0.5).unwrap();
        let i = g.nearest_index(&[0.2]).unwrap();
        let p = remainder_probe(&f, &tf, i, 0.25).unwrap();
        assert!(p.lhs < 1e-12, "{p:?}");
        let one = TestFunction { carrier: Carrier::One, envelope: Envelope::Plateau { inner: 1.0, outer: 2.0 } };
        let (c, _) = build_field(&g, &one, 0.5).unwrap();
        let p = remainder_probe(&c, &one, i, 0.25).unwrap();
        assert_eq!(p.lhs, 0.0);
    }

    #[test]
    fn remainder_of_quadratic_scales_like_r_squared() {
        let g = Grid::with_spacing(1, 3.0, 1.0 / 512.0).unwrap();
        let tf = TestFunction {
            carrier: Carrier::Polynomial { coeffs: vec![0.0, 0.0, 1.0] },
            envelope: Envelope::Plateau { inner: 1.0, outer: 2.0 },
        };
        let (f, _) = build_field(&g, &tf, 0.5).unwrap();
        let i = g.nearest_index(&[0.3]).unwrap();
        for r in [0.4, 0.2, 0.1, 0.05] {
            let p = remainder_probe(&f, &tf, i, r).unwrap();
            assert!(p.lhs <= p.rhs + 1e-12);
            assert!(p.lhs <= p.rhs_hessian + 1e-12);
            // |R| = (y−x)², so lhs/r ≤ 2⨍(y−x)²/r ≤ 2r/3·(1 + O(h/r))
            assert!(p.lhs / r <= 0.7 * r, "r={r} {p:?}");
        }
    }
}
