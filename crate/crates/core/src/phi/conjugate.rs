use serde::{Deserialize, Serialize};

use super::MusielakOrlicz;
use crate::error::{Error, Result};
use crate::numeric::{golden_max, log_space};

/// Log-spaced t-grid for the numeric Legendre transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendreGrid {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl Default for LegendreGrid {
    fn default() -> Self {
        LegendreGrid { lo: 1e-6, hi: 1e6, nodes: 4096 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConjugateMode {
    ClosedForm,
    NumericLegendre(LegendreGrid),
}

const WINDOW_SHIFT: f64 = 1e6;
const T_FLOOR: f64 = 1e-300;
const T_CEIL: f64 = 1e300;

/// `Φ*(x, s) = sup_{t ≥ 0} { s t − Φ(x, t) }`.
///
/// The numeric mode maximizes over the log grid, slides the window when the
/// maximum sits on an end node, and polishes the bracketing cell by golden
/// section. Every value it returns is attained at some `t`, so it never
/// exceeds the true supremum.
pub fn complementary(phi: &MusielakOrlicz, x: &[f64], s: f64, mode: ConjugateMode) -> Result<f64> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::NegativeArgument(s));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    match mode {
        ConjugateMode::ClosedForm => phi.closed_form_conjugate(x, s).ok_or_else(|| {
            Error::InvalidArgument("no closed-form complementary function for this family".into())
        }),
        ConjugateMode::NumericLegendre(grid) => numeric_legendre(phi, x, s, grid),
    }
}

fn numeric_legendre(phi: &MusielakOrlicz, x: &[f64], s: f64, grid: LegendreGrid) -> Result<f64> {
    if !(grid.lo > 0.0 && grid.hi > grid.lo && grid.nodes >= 3) {
        return Err(Error::DegenerateGrid(format!("{grid:?}")));
    }
    let g = |t: f64| -> Result<f64> {
        let v = phi.eval(x, t)?;
        Ok(if v.is_finite() { s * t - v } else { f64::NEG_INFINITY })
    };
    let (mut lo, mut hi) = (grid.lo, grid.hi);
    loop {
        let ts = log_space(lo, hi, grid.nodes);
        let mut vals = Vec::with_capacity(ts.len());
        for &t in &ts {
            vals.push(g(t)?);
        }
        let (imax, &vmax) = vals
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, (i, v)| if *v > *best.1 { (i, v) } else { best });
        let last = ts.len() - 1;
        if imax == last && vals[last] > vals[last - 1] {
            if hi >= T_CEIL {
                return Err(Error::UnboundedConjugate { s });
            }
            lo = ts[last - 1];
            hi = (hi * WINDOW_SHIFT).min(T_CEIL);
            continue;
        }
        if imax == 0 {
            if lo <= T_FLOOR {
                return Ok(vmax.max(0.0));
            }
            hi = ts[1];
            lo = (lo / WINDOW_SHIFT).max(T_FLOOR);
            continue;
        }
        let (a, b) = (ts[imax - 1], ts[imax + 1]);
        let (_, polished) = golden_max(|t| g(t).unwrap_or(f64::NEG_INFINITY), a, b, 200);
        return Ok(vmax.max(polished).max(0.0));
    }
}
