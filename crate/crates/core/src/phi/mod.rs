//! Musielak–Orlicz functions `Φ(x, t)`: builtin families, pointwise
//! evaluation, complementary functions and numeric assumption checkers.

mod checks;
mod conjugate;
mod table;

pub use checks::{
    check_a1, check_conjugate_delta2, check_delta2, check_lemma_i, check_lemma_iii, check_log_holder,
    check_orlicz_axioms, check_young, estimate_gamma, find_conjugate_doubling_witness,
    growth_report, lemma_iii_constant, A1Entry, A1Options, A1Report, AxiomCheck, AxiomOptions,
    AxiomReport, Delta2Report, GrowthReport, GrowthSuite, InequalityReport, LogHolderOptions,
    LogHolderReport, Violation, YoungReport, KAPPA_CAP,
};
pub use conjugate::{complementary, ConjugateMode, LegendreGrid};
pub use table::{Column, TabulatedPhi};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{norm, smoothstep};

/// Variable exponent `p(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExponentField {
    Constant { p: f64 },
    /// `low + (high - low) * smoothstep((|x| - from) / (to - from))`.
    RadialSmoothStep { low: f64, high: f64, from: f64, to: f64 },
    /// `base + amplitude / ln(e + |x|)`.
    LogDecay { base: f64, amplitude: f64 },
    /// `base + x_1` on `[0, 1]`, `base` elsewhere. Jumps at `x_1 = 1`.
    UnitRamp { base: f64 },
}

impl ExponentField {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            ExponentField::Constant { p } => p,
            ExponentField::RadialSmoothStep { low, high, from, to } => {
                low + (high - low) * smoothstep((norm(x) - from) / (to - from))
            }
            ExponentField::LogDecay { base, amplitude } => {
                base + amplitude / (std::f64::consts::E + norm(x)).ln()
            }
            ExponentField::UnitRamp { base } => {
                let x1 = x[0];
                if (0.0..=1.0).contains(&x1) {
                    base + x1
                } else {
                    base
                }
            }
        }
    }

    /// Limit of `p(x)` as `|x| → ∞`.
    pub fn p_infinity(&self) -> f64 {
        match *self {
            ExponentField::Constant { p } => p,
            ExponentField::RadialSmoothStep { high, .. } => high,
            ExponentField::LogDecay { base, .. } => base,
            ExponentField::UnitRamp { base } => base,
        }
    }
}

/// A variable exponent together with its sample-essential bounds.
///
/// `p_minus`/`p_plus` are min/max over the supplied samples, standing in for
/// the essential infimum/supremum.
#[derive(Clone, Debug)]
pub struct VariableExponent {
    pub field: ExponentField,
    pub p_minus: f64,
    pub p_plus: f64,
    pub p_infty: f64,
}

impl VariableExponent {
    pub fn sampled<'a, I>(field: ExponentField, samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in samples {
            let p = field.value(x);
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if !lo.is_finite() {
            return Err(Error::Empty("exponent sample set"));
        }
        if lo < 1.0 || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "exponent bounds [{lo}, {hi}] violate 1 <= p- <= p+ < inf"
            )));
        }
        Ok(VariableExponent { p_infty: field.p_infinity(), field, p_minus: lo, p_plus: hi })
    }
}

/// Weight `ω(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    Constant { value: f64 },
    /// `scale * |x|^alpha`; the origin is singular when `alpha < 0`.
    RadialPower {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Weight {
    /// `ω(x)`; `+∞` on the singular set.
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Weight::Constant { value } => value,
            Weight::RadialPower { alpha, scale } => {
                let r = norm(x);
                if r == 0.0 {
                    if alpha < 0.0 {
                        f64::INFINITY
                    } else if alpha == 0.0 {
                        scale
                    } else {
                        0.0
                    }
                } else {
                    scale * r.powf(alpha)
                }
            }
        }
    }

    /// Explicit finite singular set (points where `ω = ∞`).
    pub fn singular_points(&self, dim: usize) -> Vec<Vec<f64>> {
        match *self {
            Weight::RadialPower { alpha, .. } if alpha < 0.0 => vec![vec![0.0; dim]],
            _ => Vec::new(),
        }
    }

    pub fn is_singular(&self, x: &[f64]) -> bool {
        matches!(*self, Weight::RadialPower { alpha, .. } if alpha < 0.0 && norm(x) == 0.0)
    }
}

/// x-independent Orlicz functions `φ(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrliczKind {
    /// `t^p`
    Power { p: f64 },
    /// `t^p + t^q`
    PowerSum { p: f64, q: f64 },
    /// `t^p (|log t| + 1)`
    LogPower { p: f64 },
    /// `e^t - 1`
    Exponential,
}

impl OrliczKind {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            OrliczKind::Power { p } => t.powf(p),
            OrliczKind::PowerSum { p, q } => t.powf(p) + t.powf(q),
            OrliczKind::LogPower { p } => t.powf(p) * (t.ln().abs() + 1.0),
            OrliczKind::Exponential => t.exp_m1(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Family {
    /// `t^{p(x)}`
    VariableExponent(ExponentField),
    /// `φ(t)`
    Orlicz(OrliczKind),
    /// `ω(x) t^p`
    WeightedPower { weight: Weight, p: f64 },
    /// `t^p + ω(x) t^q`
    DoublePhase { p: f64, q: f64, weight: Weight },
    Tabulated(TabulatedPhi),
}

/// A pointwise-evaluable Musielak–Orlicz function.
#[derive(Clone, Debug)]
pub struct MusielakOrlicz {
    pub family: Family,
    pub dimension: usize,
    /// Half-width of the cubic domain box; `None` means all of `R^n`.
    pub domain: Option<f64>,
}

impl MusielakOrlicz {
    pub fn new(family: Family, dimension: usize) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::UnsupportedDimension(dimension));
        }
        Ok(MusielakOrlicz { family, dimension, domain: None })
    }

    pub fn with_domain(mut self, half_width: f64) -> Self {
        self.domain = Some(half_width);
        self
    }

    pub fn power(p: f64, dimension: usize) -> Result<Self> {
        Self::new(Family::Orlicz(OrliczKind::Power { p }), dimension)
    }

    pub fn orlicz(kind: OrliczKind, dimension: usize) -> Result<Self> {
        Self::new(Family::Orlicz(kind), dimension)
    }

    pub fn variable_exponent(field: ExponentField, dimension: usize) -> Result<Self> {
        Self::new(Family::VariableExponent(field), dimension)
    }

    pub fn weighted_power(weight: Weight, p: f64, dimension: usize) -> Result<Self> {
        Self::new(Family::WeightedPower { weight, p }, dimension)
    }

    pub fn double_phase(p: f64, q: f64, weight: Weight, dimension: usize) -> Result<Self> {
        Self::new(Family::DoublePhase { p, q, weight }, dimension)
    }

    /// `Φ(x, t)`. Returns `+∞` when `t > 0` at a singular point of the weight.
    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.dimension
            )));
        }
        if let Some(half_width) = self.domain {
            if x.iter().any(|c| c.abs() > half_width) {
                return Err(Error::DomainViolation { point: x.to_vec(), half_width });
            }
        }
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeArgument(t));
        }
        Ok(self.eval_unchecked(x, t))
    }

    /// Evaluation without argument validation, for inner loops whose inputs
    /// are nonnegative by construction.
    pub fn eval_unchecked(&self, x: &[f64], t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::VariableExponent(p) => t.powf(p.value(x)),
            Family::Orlicz(kind) => kind.value(t),
            Family::WeightedPower { weight, p } => {
                let w = weight.value(x);
                if w.is_infinite() {
                    f64::INFINITY
                } else {
                    w * t.powf(*p)
                }
            }
            Family::DoublePhase { p, q, weight } => {
                let w = weight.value(x);
                if w.is_infinite() {
                    f64::INFINITY
                } else {
                    t.powf(*p) + w * t.powf(*q)
                }
            }
            Family::Tabulated(table) => table.value(x, t),
        }
    }

    /// Finite set of points where the weight is singular.
    pub fn singular_points(&self) -> Vec<Vec<f64>> {
        match &self.family {
            Family::WeightedPower { weight, .. } | Family::DoublePhase { weight, .. } => {
                weight.singular_points(self.dimension)
            }
            _ => Vec::new(),
        }
    }

    pub fn is_singular(&self, x: &[f64]) -> bool {
        match &self.family {
            Family::WeightedPower { weight, .. } | Family::DoublePhase { weight, .. } => {
                weight.is_singular(x)
            }
            _ => false,
        }
    }

    /// Whether `Φ(x,·)` is a pure power `c(x) t^{p(x)}`, in which case the
    /// Luxemburg norm is `ρ^{1/p}`.
    pub fn power_exponent(&self) -> Option<f64> {
        match &self.family {
            Family::VariableExponent(ExponentField::Constant { p }) => Some(*p),
            Family::Orlicz(OrliczKind::Power { p }) => Some(*p),
            Family::WeightedPower { p, .. } => Some(*p),
            _ => None,
        }
    }

    /// Closed-form complementary function where one is known: power-type
    /// families `c t^{p(x)}` with `p(x) > 1`.
    pub fn closed_form_conjugate(&self, x: &[f64], s: f64) -> Option<f64> {
        let (coef, p) = match &self.family {
            Family::VariableExponent(field) => (1.0, field.value(x)),
            Family::Orlicz(OrliczKind::Power { p }) => (1.0, *p),
            Family::WeightedPower { weight, p } => (weight.value(x), *p),
            _ => return None,
        };
        if p <= 1.0 {
            return None;
        }
        Some(power_conjugate(coef, p, s))
    }

    pub fn has_closed_form_conjugate(&self) -> bool {
        let origin = vec![0.5; self.dimension];
        self.closed_form_conjugate(&origin, 1.0).is_some()
    }
}

/// Conjugate of `c t^p`:
/// `(1/q) p^{-q/p} c^{-q/p} s^q` with `1/p + 1/q = 1`.
pub fn power_conjugate(coef: f64, p: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if coef.is_infinite() {
        return 0.0;
    }
    if coef == 0.0 {
        return f64::INFINITY;
    }
    let q = p / (p - 1.0);
    s.powf(q) / (q * p.powf(q / p) * coef.powf(q / p))
}
