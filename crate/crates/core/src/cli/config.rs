use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::convergence::{coupled_schedule, ScheduleRow, SweepOptions};
use crate::error::{Error, Result};
use crate::fields::{BallStencil, Grid, TestFunction};
use crate::modular::{PsiKind, SharpOptions, DEFAULT_TOL};
use crate::phi::{ExponentField, Family, MusielakOrlicz, OrliczKind, TabulatedPhi, Weight};

/// Φ as written in a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Power { p: f64 },
    PowerSum { p: f64, q: f64 },
    LogPower { p: f64 },
    Exponential,
    VariableExponent { exponent: ExponentField },
    WeightedPower { p: f64, weight: Weight },
    DoublePhase { p: f64, q: f64, weight: Weight },
    /// CSV of `x_index,t,value`, relative to the config file
    Tabulated { path: String },
}

impl PhiSpec {
    pub fn build(&self, dim: usize, base_dir: &Path, grid: Option<Grid>) -> Result<MusielakOrlicz> {
        let family = match self {
            PhiSpec::Power { p } => Family::Orlicz(OrliczKind::Power { p: *p }),
            PhiSpec::PowerSum { p, q } => Family::Orlicz(OrliczKind::PowerSum { p: *p, q: *q }),
            PhiSpec::LogPower { p } => Family::Orlicz(OrliczKind::LogPower { p: *p }),
            PhiSpec::Exponential => Family::Orlicz(OrliczKind::Exponential),
            PhiSpec::VariableExponent { exponent } => Family::VariableExponent(exponent.clone()),
            PhiSpec::WeightedPower { p, weight } => Family::WeightedPower { weight: weight.clone(), p: *p },
            PhiSpec::DoublePhase { p, q, weight } => Family::DoublePhase { p: *p, q: *q, weight: weight.clone() },
            PhiSpec::Tabulated { path } => {
                let file = File::open(base_dir.join(path))?;
                Family::Tabulated(TabulatedPhi::from_csv(file, grid)?)
            }
        };
        MusielakOrlicz::new(family, dim)
    }

    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let exp = |name: &'static str, v: f64| {
            if v >= 1.0 && v.is_finite() {
                Ok(())
            } else {
                Err((name, format!("exponent {v} must be finite and at least 1")))
            }
        };
        match self {
            PhiSpec::Power { p } | PhiSpec::LogPower { p } | PhiSpec::WeightedPower { p, .. } => exp("p", *p),
            PhiSpec::PowerSum { p, q } | PhiSpec::DoublePhase { p, q, .. } => {
                exp("p", *p)?;
                exp("q", *q)
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPolicy {
    /// half-width `L` of the box `[−L, L]^n`
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    /// spacing of the first schedule row
    pub base_h: f64,
    /// number of halvings of `(ε, h)` after the first row
    pub refinements: usize,
    /// smallest radius in cells; `2` when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min_cells: Option<f64>,
}

fn default_half_width() -> f64 {
    3.25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSpec {
    pub kind: PsiKind,
    /// `ε` of the first schedule row
    pub epsilon0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub final_bound: f64,
    pub window: usize,
    /// relative tolerance of the Luxemburg bisection
    pub bisection: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { final_bound: 0.05, window: 3, bisection: DEFAULT_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSpec {
    /// ball radii of the remainder and Poincaré probes
    pub radii: Vec<f64>,
    /// probe points along the first axis, from the origin outward
    pub points: usize,
    /// mollification scales
    pub deltas: Vec<f64>,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec { radii: vec![0.05, 0.1, 0.2], points: 10, deltas: vec![0.2, 0.1, 0.05] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// result directory; `--out` takes precedence
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// One experiment, as read from a JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub dimension: usize,
    pub phi: PhiSpec,
    pub test_function: TestFunction,
    pub grid: GridPolicy,
    pub psi: PsiSpec,
    /// explicit rows; replaces the coupled schedule built from `grid` and `psi`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<ScheduleRow>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sharp: SharpOptions,
    #[serde(default = "yes")]
    pub preflight: bool,
    #[serde(default)]
    pub probe: ProbeSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn yes() -> bool {
    true
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

impl RunConfig {
    /// Parses a JSON document; schema violations carry the field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(if path == "." { "<root>".to_string() } else { path }, e.inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Semantic checks beyond the schema.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(config_err("name", "must be a nonempty file stem"));
        }
        if !(1..=3).contains(&self.dimension) {
            return Err(config_err("dimension", Error::UnsupportedDimension(self.dimension).to_string()));
        }
        self.phi.check().map_err(|(field, m)| config_err(format!("phi.{field}"), m))?;
        self.test_function.validate(self.dimension).map_err(|e| config_err("test_function", e.to_string()))?;
        let g = &self.grid;
        if !(g.half_width > 0.0 && g.half_width.is_finite()) {
            return Err(config_err("grid.half_width", "must be positive"));
        }
        if !(g.base_h > 0.0 && g.base_h <= g.half_width / 4.0) {
            return Err(config_err("grid.base_h", format!("must lie in (0, {}]", g.half_width / 4.0)));
        }
        if g.refinements > 16 {
            return Err(config_err("grid.refinements", "at most 16 halvings"));
        }
        if let Some(c) = g.r_min_cells {
            if !(c >= BallStencil::MIN_CELLS) {
                let e = Error::UnderResolved { radius: c * g.base_h, min: BallStencil::MIN_CELLS * g.base_h };
                return Err(config_err("grid.r_min_cells", e.to_string()));
            }
        }
        if !(self.psi.epsilon0 > 0.0 && self.psi.epsilon0 <= 1.0) {
            return Err(config_err("psi.epsilon0", "must lie in (0, 1]"));
        }
        if let Some(rows) = &self.schedule {
            if rows.is_empty() {
                return Err(config_err("schedule", "must not be empty"));
            }
            for (i, row) in rows.iter().enumerate() {
                if !(row.h > 0.0 && row.h <= g.half_width / 4.0) {
                    return Err(config_err(format!("schedule[{i}].h"), "must lie in (0, L/4]"));
                }
                if !(row.epsilon > 0.0 && row.epsilon <= 1.0) {
                    return Err(config_err(format!("schedule[{i}].epsilon"), "must lie in (0, 1]"));
                }
                if i > 0 && row.epsilon >= rows[i - 1].epsilon {
                    return Err(config_err(format!("schedule[{i}].epsilon"), "epsilon must strictly decrease"));
                }
                let min = BallStencil::MIN_CELLS * row.h;
                if let Some(r) = row.r_min {
                    if r < min * (1.0 - 1e-12) {
                        let e = Error::UnderResolved { radius: r, min };
                        return Err(config_err(format!("schedule[{i}].r_min"), e.to_string()));
                    }
                }
            }
        }
        let t = &self.tolerances;
        if !(t.final_bound > 0.0) {
            return Err(config_err("tolerances.final_bound", "must be positive"));
        }
        if t.window == 0 {
            return Err(config_err("tolerances.window", "must be at least 1"));
        }
        if !(t.bisection > 0.0 && t.bisection < 0.1) {
            return Err(config_err("tolerances.bisection", "must lie in (0, 0.1)"));
        }
        if self.sharp.min_cells_per_radius == Some(0) {
            return Err(config_err("sharp.min_cells_per_radius", "must be positive"));
        }
        let p = &self.probe;
        if p.radii.iter().any(|r| !(*r > 0.0 && *r < g.half_width)) {
            return Err(config_err("probe.radii", "radii must lie in (0, L)"));
        }
        if p.deltas.iter().any(|d| !(*d > 0.0 && *d < g.half_width)) {
            return Err(config_err("probe.deltas", "deltas must lie in (0, L)"));
        }
        Ok(())
    }

    /// Canonical bytes: the parsed config re-serialized with sorted keys and
    /// no whitespace, so that formatting and key order do not matter.
    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_vec(&value)?)
    }

    /// Hex SHA-256 of [`Self::canonical_bytes`].
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical_bytes()?)))
    }

    pub fn base_grid(&self) -> Result<Grid> {
        Grid::with_spacing(self.dimension, self.grid.half_width, self.grid.base_h)
    }

    pub fn build_phi(&self, base_dir: &Path) -> Result<MusielakOrlicz> {
        let grid = self.base_grid()?;
        self.phi.build(self.dimension, base_dir, Some(grid))
    }

    pub fn schedule_rows(&self) -> Vec<ScheduleRow> {
        if let Some(rows) = &self.schedule {
            return rows.clone();
        }
        let mut rows = coupled_schedule(self.psi.epsilon0, self.grid.base_h, self.grid.refinements + 1);
        if let Some(c) = self.grid.r_min_cells {
            for row in &mut rows {
                row.r_min = Some(c * row.h);
            }
        }
        rows
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            half_width: self.grid.half_width,
            psi: self.psi.kind,
            sharp: self.sharp,
            final_bound: self.tolerances.final_bound,
            window: self.tolerances.window,
            run_preflight: self.preflight,
            tol: self.tolerances.bisection,
        }
    }
}

/// A config together with its hash and the directory relative paths
/// resolve against.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
    pub base_dir: PathBuf,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err("<file>", format!("cannot read {}: {e}", path.display())))?;
    let config = RunConfig::from_json(&text)?;
    let hash = config.hash()?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, hash, base_dir })
}
