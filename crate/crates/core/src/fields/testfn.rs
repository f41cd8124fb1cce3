use serde::{Deserialize, Serialize};

use super::{Grid, SampledField, VectorField};
use crate::error::{Error, Result};
use crate::numeric::norm;

/// Smooth part of a test function, multiplied by an [`Envelope`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Carrier {
    Zero,
    One,
    /// `offset + slope · x`
    Affine { offset: f64, slope: Vec<f64> },
    /// polynomial in `x₁` with coefficients from degree 0 up
    Polynomial { coeffs: Vec<f64> },
    /// `exp(−|x|² / 2σ²)`
    Gaussian { sigma: f64 },
    /// `sin(ω x₁)`
    Sine { frequency: f64 },
}

/// Radial cutoff that makes a test function compactly supported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// `exp(−1 / (1 − |x/R|²))` on `|x| < R`
    Bump { radius: f64 },
    /// 1 on `|x| ≤ inner`, 0 on `|x| ≥ outer`, smooth in between
    Plateau { inner: f64, outer: f64 },
    /// `max(0, 1 − |x|/R)`; Lipschitz only
    Tent { radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub carrier: Carrier,
    pub envelope: Envelope,
}

type Mat = [[f64; 3]; 3];

impl TestFunction {
    pub fn radial_bump(radius: f64) -> Self {
        TestFunction { carrier: Carrier::One, envelope: Envelope::Bump { radius } }
    }

    pub fn zero() -> Self {
        TestFunction { carrier: Carrier::Zero, envelope: Envelope::Bump { radius: 1.0 } }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match &self.envelope {
            Envelope::Bump { radius } | Envelope::Tent { radius } if !(*radius > 0.0) => {
                return bad("envelope radius must be positive")
            }
            Envelope::Plateau { inner, outer } if !(*inner >= 0.0 && outer > inner) => {
                return bad("plateau needs 0 <= inner < outer")
            }
            _ => {}
        }
        match &self.carrier {
            Carrier::Affine { slope, .. } if slope.len() != dim => bad("affine slope length must match the dimension"),
            Carrier::Gaussian { sigma } if !(*sigma > 0.0) => bad("gaussian sigma must be positive"),
            _ => Ok(()),
        }
    }

    pub fn support_radius(&self) -> f64 {
        match &self.envelope {
            Envelope::Bump { radius } | Envelope::Tent { radius } => *radius,
            Envelope::Plateau { outer, .. } => *outer,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let rho = norm(x);
        let (e, _, _) = self.envelope.profile(rho);
        if e == 0.0 {
            return 0.0;
        }
        self.carrier.jet(x).0 * e
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 3] {
        let (c, cg, _) = self.carrier.jet(x);
        let (e, eg, _) = self.envelope.jet(x);
        let mut g = [0.0; 3];
        for a in 0..x.len() {
            g[a] = cg[a] * e + c * eg[a];
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> Mat {
        let (c, cg, ch) = self.carrier.jet(x);
        let (e, eg, eh) = self.envelope.jet(x);
        let mut h = [[0.0; 3]; 3];
        for i in 0..x.len() {
            for j in 0..x.len() {
                h[i][j] = ch[i][j] * e + cg[i] * eg[j] + cg[j] * eg[i] + c * eh[i][j];
            }
        }
        h
    }
}

impl Carrier {
    fn jet(&self, x: &[f64]) -> (f64, [f64; 3], Mat) {
        let n = x.len();
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        let v = match self {
            Carrier::Zero => 0.0,
            Carrier::One => 1.0,
            Carrier::Affine { offset, slope } => {
                g[..n].copy_from_slice(&slope[..n]);
                offset + slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            }
            Carrier::Polynomial { coeffs } => {
                let t = x[0];
                let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    ddp = ddp * t + 2.0 * dp;
                    dp = dp * t + p;
                    p = p * t + c;
                }
                g[0] = dp;
                h[0][0] = ddp;
                p
            }
            Carrier::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                let v = (-x.iter().map(|c| c * c).sum::<f64>() / (2.0 * s2)).exp();
                for i in 0..n {
                    g[i] = -x[i] / s2 * v;
                    for j in 0..n {
                        let d = if i == j { 1.0 / s2 } else { 0.0 };
                        h[i][j] = v * (x[i] * x[j] / (s2 * s2) - d);
                    }
                }
                v
            }
            Carrier::Sine { frequency: w } => {
                g[0] = w * (w * x[0]).cos();
                h[0][0] = -w * w * (w * x[0]).sin();
                (w * x[0]).sin()
            }
        };
        (v, g, h)
    }
}

/// `exp(−1/s)` for `s > 0` and its first two derivatives.
fn e_jet(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let e = (-1.0 / s).exp();
    (e, e / (s * s), e * (1.0 / s.powi(4) - 2.0 / s.powi(3)))
}

impl Envelope {
    /// Radial profile `F(ρ)` with `F'` and `F''`.
    fn profile(&self, rho: f64) -> (f64, f64, f64) {
        match *self {
            Envelope::Bump { radius } => {
                let u = (rho / radius).powi(2);
                if u >= 1.0 {
                    return (0.0, 0.0, 0.0);
                }
                // F = exp(−1/(1−u)), u = ρ²/R²
                let f = (-1.0 / (1.0 - u)).exp();
                let du = 2.0 * rho / (radius * radius);
                let ddu = 2.0 / (radius * radius);
                let g = -1.0 / (1.0 - u).powi(2);
                let dg = -2.0 / (1.0 - u).powi(3);
                let f1 = f * g * du;
                let f2 = f * (g * g + dg) * du * du + f * g * ddu;
                (f, f1, f2)
            }
            Envelope::Plateau { inner, outer } => {
                if rho <= inner {
                    return (1.0, 0.0, 0.0);
                }
                if rho >= outer {
                    return (0.0, 0.0, 0.0);
                }
                let w = outer - inner;
                let s = (rho - inner) / w;
                let (a, a1, a2) = e_jet(s);
                let (b, b1, b2) = e_jet(1.0 - s);
                let (b1, b2) = (-b1, b2);
                let d = a + b;
                let d1 = a1 + b1;
                let num = a1 * b - a * b1;
                let num1 = a2 * b - a * b2;
                let t = a / d;
                let t1 = num / (d * d);
                let t2 = (num1 * d - 2.0 * num * d1) / (d * d * d);
                (1.0 - t, -t1 / w, -t2 / (w * w))
            }
            Envelope::Tent { radius } => {
                if rho >= radius {
                    (0.0, 0.0, 0.0)
                } else {
                    (1.0 - rho / radius, -1.0 / radius, 0.0)
                }
            }
        }
    }

    fn jet(&self, x: &[f64]) -> (f64, [f64; 3], Mat) {
        let n = x.len();
        let rho = norm(x);
        let (f, f1, f2) = self.profile(rho);
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        if rho == 0.0 {
            // radial profiles here are flat or smooth at the origin, except the tent
            if let Envelope::Bump { radius } = *self {
                let c = -2.0 * f / (radius * radius);
                for (i, row) in h.iter_mut().enumerate().take(n) {
                    row[i] = c;
                }
            }
            return (f, g, h);
        }
        for i in 0..n {
            let ui = x[i] / rho;
            g[i] = f1 * ui;
            for j in 0..n {
                let uj = x[j] / rho;
                let d = if i == j { 1.0 } else { 0.0 };
                h[i][j] = f2 * ui * uj + f1 / rho * (d - ui * uj);
            }
        }
        (f, g, h)
    }
}

/// Samples `tf` on `grid` and checks the compact-support certificate: the
/// all-zero band at the box boundary must be at least `required_margin` wide.
pub fn build_field(grid: &Grid, tf: &TestFunction, required_margin: f64) -> Result<(SampledField, VectorField)> {
    tf.validate(grid.dim)?;
    let analytic_margin = grid.half_width - tf.support_radius();
    if analytic_margin < required_margin {
        return Err(Error::MarginViolation { needed: required_margin, available: analytic_margin.max(0.0) });
    }
    let field = SampledField::from_fn(*grid, |x| tf.value(x))?;
    field.require_margin(required_margin)?;
    let mut components = vec![Vec::with_capacity(grid.len()); grid.dim];
    for i in 0..grid.len() {
        let x = grid.point(i);
        let g = tf.gradient(&x[..grid.dim]);
        for (a, c) in components.iter_mut().enumerate() {
            c.push(g[a]);
        }
    }
    Ok((field, VectorField { grid: *grid, components }))
}
