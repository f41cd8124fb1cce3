//! The `orlicz-sharp` experiment runner: JSON run configurations in, CSV
//! tables and JSON reports out, with a manifest per run.

mod config;

pub use config::{
    load_config, GridPolicy, LoadedConfig, OutputSpec, PhiSpec, ProbeSpec, PsiSpec, RunConfig, Tolerances,
};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::convergence::{
    box_samples, c0_at, default_c0_resolution, mollified_energy_probe, norm_sweep, poincare_probe, preflight,
    remainder_probe, theorem_sweep, EnergyTable, PoincareReport, RemainderProbe, SweepKind, SweepReport,
};
use crate::error::{Error, Result};
use crate::fields::{build_field, ap_constant, ApOptions, ApReport, Ball};
use crate::modular::{PsiFamily, RQuadrature};
use crate::numeric::log_space;
use crate::phi::{
    check_a1, check_conjugate_delta2, check_delta2, check_log_holder, check_orlicz_axioms, estimate_gamma,
    A1Options, A1Report, AxiomOptions, AxiomReport, Delta2Report, Family, LogHolderOptions, LogHolderReport,
    MusielakOrlicz, KAPPA_CAP,
};

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "ORLICZ_SHARP_WORKERS";

/// Slack allowed in the remainder inequality.
pub const REMAINDER_SLACK: f64 = 1e-8;

pub mod exit {
    pub const PASS: i32 = 0;
    /// I/O and other runtime failures
    pub const FAILURE: i32 = 1;
    pub const VERDICT_FAIL: i32 = 2;
    pub const PRECONDITION_FAIL: i32 = 3;
    pub const CONFIG_ERROR: i32 = 4;
}

#[derive(Parser, Debug)]
#[command(name = "orlicz-sharp", version, about = "Sharp-modular convergence experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// output directory (default: the config's `output.dir`, else `out`)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// worker threads (default: $ORLICZ_SHARP_WORKERS, else all cores)
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Assumption checks on Φ; writes `<name>.check.json`
    Check(RunArgs),
    /// Sharp modular against ρ_Φ(c₀|∇f|); writes `<name>.sweep.csv`
    Sweep(RunArgs),
    /// Sharp norm against c₀‖∇f‖; writes `<name>.norm-sweep.csv`
    NormSweep(RunArgs),
    /// Analytic c₀ and its grid cross-check
    C0 {
        #[arg(long = "dim")]
        dimension: usize,
        /// stencil spacing of the cross-check
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Remainder, Poincaré and mollified-energy probes
    Probe(RunArgs),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Operation {
    pub name: String,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
}

/// Written next to the results of every config-driven run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_name: String,
    pub config_hash: String,
    pub workers: usize,
    pub operations: Vec<Operation>,
    pub outputs: Vec<String>,
    pub verdict: bool,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::AssumptionFailed { .. } => exit::PRECONDITION_FAIL,
        Error::Config { .. }
        | Error::UnderResolved { .. }
        | Error::MarginViolation { .. }
        | Error::UnsupportedDimension(_) => exit::CONFIG_ERROR,
        _ => exit::FAILURE,
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG_ERROR } else { exit::PASS };
        }
    };
    match cli.command {
        Command::C0 { dimension, resolution, workers } => {
            match with_pool(workers, |_| cmd_c0(dimension, resolution)) {
                Ok(line) => {
                    println!("{line}");
                    exit::PASS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Check(a) => run_config_command("check", &a),
        Command::Sweep(a) => run_config_command("sweep", &a),
        Command::NormSweep(a) => run_config_command("norm-sweep", &a),
        Command::Probe(a) => run_config_command("probe", &a),
    }
}

fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config { path: WORKERS_ENV.into(), message: format!("not a worker count: {v:?}") }),
        Err(_) => Ok(0),
    }
}

/// Runs `f` on a dedicated pool; `0` workers means one per core.
fn with_pool<R: Send>(workers: Option<usize>, f: impl FnOnce(usize) -> Result<R> + Send) -> Result<R> {
    let n = resolve_workers(workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    pool.install(|| f(threads))
}

pub fn cmd_c0(dimension: usize, resolution: Option<f64>) -> Result<String> {
    let h = resolution.unwrap_or_else(|| default_c0_resolution(dimension));
    let v = c0_at(dimension, h)?;
    Ok(format!(
        "dimension={} analytic={:?} grid={:?} discrepancy={:?} resolution={:?}",
        v.dimension, v.analytic, v.cross_check, v.discrepancy, v.resolution
    ))
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Recorder {
    operations: Vec<Operation>,
    outputs: Vec<String>,
    out_dir: PathBuf,
}

impl Recorder {
    fn time<R>(&mut self, name: &str, f: impl FnOnce() -> Result<R>) -> Result<R> {
        let t = Instant::now();
        let r = f();
        self.operations.push(Operation { name: name.into(), wall_seconds: t.elapsed().as_secs_f64(), verdict: None });
        r
    }

    fn verdict(&mut self, v: bool) {
        if let Some(op) = self.operations.last_mut() {
            op.verdict = Some(v);
        }
    }

    fn write(&mut self, file: String, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.out_dir.join(&file), bytes)?;
        self.outputs.push(file);
        Ok(())
    }
}

fn run_config_command(command: &str, args: &RunArgs) -> i32 {
    let loaded = match load_config(&args.config) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cfg = &loaded.config;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(|d| loaded.base_dir.join(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return exit::FAILURE;
    }
    let mut rec = Recorder { operations: Vec::new(), outputs: Vec::new(), out_dir };
    let mut threads = 0;
    let outcome = with_pool(args.workers, |n| {
        threads = n;
        match command {
            "check" => cmd_check(&loaded, &mut rec),
            "sweep" => cmd_sweep(&loaded, SweepKind::Modular, &mut rec),
            "norm-sweep" => cmd_sweep(&loaded, SweepKind::Norm, &mut rec),
            _ => cmd_probe(&loaded, &mut rec),
        }
    });
    let (verdict, code, error) = match &outcome {
        Ok(true) => (true, exit::PASS, None),
        Ok(false) => (false, if command == "check" { exit::PRECONDITION_FAIL } else { exit::VERDICT_FAIL }, None),
        Err(e) => (false, exit_code(e), Some(e.to_string())),
    };
    if let Some(e) = &error {
        eprintln!("error: {e}");
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config_name: cfg.name.clone(),
        config_hash: loaded.hash.clone(),
        workers: threads,
        operations: rec.operations.clone(),
        outputs: rec.outputs.clone(),
        verdict,
        exit_code: code,
        error,
    };
    let path = rec.out_dir.join(format!("{}.{command}.manifest.json", cfg.name));
    let written = serde_json::to_vec_pretty(&manifest).map_err(Error::from).and_then(|b| write_atomic(&path, &b));
    if let Err(e) = written {
        eprintln!("error: manifest: {e}");
        return exit::FAILURE;
    }
    println!("{command} {}: verdict={verdict} exit={code} config_hash={}", cfg.name, loaded.hash);
    code
}

/// Cell midpoints, `per_axis` per axis, on `[−L, L]^n`. Unlike
/// [`box_samples`] these avoid the origin, a null set on which a vanishing
/// weight would fail the pointwise axioms.
fn midpoint_samples(dim: usize, half_width: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let h = 2.0 * half_width / per_axis as f64;
    box_samples(dim, half_width - 0.5 * h, per_axis)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub config_name: String,
    pub config_hash: String,
    pub axioms: AxiomReport,
    pub delta2: Delta2Report,
    pub conjugate_delta2: Option<Delta2Report>,
    pub a1: A1Report,
    pub log_holder: Option<LogHolderReport>,
    /// sampled Muckenhoupt constant of the weight; informational
    pub ap: Option<ApReport>,
    pub passed: bool,
}

pub fn check_report(phi: &MusielakOrlicz, half_width: f64) -> Result<(AxiomReport, Option<LogHolderReport>, Option<ApReport>)> {
    let n = phi.dimension;
    let per_axis = if n == 1 { 32 } else { 8 };
    let xs = midpoint_samples(n, half_width, per_axis);
    let axioms = check_orlicz_axioms(phi, &xs, &log_space(1e-4, 1e4, 33), AxiomOptions::default())?;
    let log_holder = match &phi.family {
        Family::VariableExponent(field) => {
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = xs
                .iter()
                .flat_map(|x| {
                    [1e-3, 1e-1].map(|d| {
                        let mut y = x.clone();
                        y[0] += d;
                        (x.clone(), y)
                    })
                })
                .collect();
            let far: Vec<Vec<f64>> = [10.0, 1e2, 1e3, 1e4]
                .iter()
                .map(|&r| {
                    let mut x = vec![0.0; n];
                    x[0] = r;
                    x
                })
                .collect();
            Some(check_log_holder(field, &pairs, &far, LogHolderOptions::default()))
        }
        _ => None,
    };
    let ap = match &phi.family {
        Family::WeightedPower { weight, p } => {
            let balls: Vec<Ball> = [vec![0.0; n], {
                let mut c = vec![0.0; n];
                c[0] = 0.5;
                c
            }]
            .into_iter()
            .flat_map(|c| [1.0, 0.5, 0.25].map(|r| Ball { center: c.clone(), radius: r }))
            .collect();
            let opts = ApOptions { cells_per_min_radius: if n == 1 { 64 } else { 16 } };
            Some(ap_constant(weight, *p, &balls, opts)?)
        }
        _ => None,
    };
    Ok((axioms, log_holder, ap))
}

fn cmd_check(loaded: &LoadedConfig, rec: &mut Recorder) -> Result<bool> {
    let cfg = &loaded.config;
    let phi = cfg.build_phi(&loaded.base_dir)?;
    let n = cfg.dimension;
    let l = cfg.grid.half_width;
    let report = rec.time("check", || {
        let (axioms, log_holder, ap) = check_report(&phi, l)?;
        let xs = box_samples(n, l, if n == 1 { 33 } else { 9 });
        let s_grid = log_space(1e-3, 1e3, 25);
        let delta2 = check_delta2(&phi, &xs, &s_grid, KAPPA_CAP)?;
        let conjugate_delta2 = check_conjugate_delta2(&phi, &xs, &s_grid, KAPPA_CAP)?;
        let a1 = check_a1(&phi, &vec![0.0; n], l, &[0.5, 1.0, 2.0], A1Options::for_dimension(n))?;
        let passed = axioms.passed()
            && delta2.passed
            && conjugate_delta2.as_ref().is_none_or(|r| r.passed)
            && a1.passed
            && log_holder.as_ref().is_none_or(|r| r.passed);
        Ok(CheckReport {
            config_name: cfg.name.clone(),
            config_hash: loaded.hash.clone(),
            axioms,
            delta2,
            conjugate_delta2,
            a1,
            log_holder,
            ap,
            passed,
        })
    })?;
    rec.verdict(report.passed);
    rec.write(format!("{}.check.json", cfg.name), &serde_json::to_vec_pretty(&report)?)?;
    Ok(report.passed)
}

/// Round-trip formatting for reals.
fn real(v: f64) -> String {
    format!("{v:?}")
}

/// CSV of a sweep: one row per schedule row, the report verdict repeated on
/// each row, and the producing config's hash in the last column.
pub fn sweep_csv(report: &SweepReport, config_hash: &str) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["epsilon", "h", "r_min", "sharp_modular"];
    if report.kind == SweepKind::Norm {
        header.push("sharp_norm");
    }
    header.extend(["truncated_mass", "target", "rel_error", "verdict", "config_hash"]);
    w.write_record(&header)?;
    for r in &report.rows {
        let mut rec = vec![real(r.epsilon), real(r.h), real(r.r_min), real(r.modular)];
        if report.kind == SweepKind::Norm {
            rec.push(real(r.value));
        }
        rec.extend([
            real(r.truncated_mass),
            real(r.target),
            real(r.rel_error),
            report.verdict.to_string(),
            config_hash.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn cmd_sweep(loaded: &LoadedConfig, kind: SweepKind, rec: &mut Recorder) -> Result<bool> {
    let cfg = &loaded.config;
    let phi = cfg.build_phi(&loaded.base_dir)?;
    let mut opts = cfg.sweep_options();
    if opts.run_preflight {
        let r = rec.time("preflight", || preflight(&phi, opts.half_width));
        rec.verdict(r.is_ok());
        r?;
        opts.run_preflight = false;
    }
    let schedule = cfg.schedule_rows();
    let name = match kind {
        SweepKind::Modular => "sweep",
        SweepKind::Norm => "norm-sweep",
    };
    let report = rec.time(name, || match kind {
        SweepKind::Modular => theorem_sweep(&phi, &cfg.test_function, &schedule, &opts),
        SweepKind::Norm => norm_sweep(&phi, &cfg.test_function, &schedule, &opts),
    })?;
    rec.verdict(report.verdict);
    rec.write(format!("{}.{name}.csv", cfg.name), &sweep_csv(&report, &loaded.hash)?)?;
    Ok(report.verdict)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeResults {
    pub remainder: Vec<(Vec<f64>, RemainderProbe)>,
    pub poincare: PoincareReport,
    pub energy: EnergyTable,
}

impl ProbeResults {
    pub fn passed(&self) -> bool {
        self.remainder.iter().all(|(_, p)| p.slack() >= -REMAINDER_SLACK)
            && self.poincare.max_ratio.is_finite()
            && self.energy.passed
    }
}

/// Runs the probes of `cfg` on its base grid, with the ψ family at the
/// first schedule row.
pub fn run_probes(cfg: &RunConfig, phi: &MusielakOrlicz) -> Result<ProbeResults> {
    let grid = cfg.base_grid()?;
    let n = cfg.dimension;
    let h = grid.spacing();
    let row = cfg.schedule_rows()[0];
    let r_min = row.r_min.unwrap_or(2.0 * h);
    let rq = RQuadrature::geometric(PsiFamily::new(cfg.psi.kind, row.epsilon)?, r_min)?;
    let r_max = rq.nodes.last().copied().unwrap_or(r_min);
    let probe = &cfg.probe;
    let reach = probe.radii.iter().chain(&probe.deltas).copied().fold(r_max, f64::max);
    let (field, _) = build_field(&grid, &cfg.test_function, 2.0 * (reach + 2.0 * h))?;
    let support = cfg.test_function.support_radius();
    let mut remainder = Vec::new();
    for k in 0..probe.points {
        let mut x = vec![0.0; n];
        x[0] = 0.9 * support * k as f64 / probe.points.max(1) as f64;
        let idx = grid.nearest_index(&x).ok_or_else(|| Error::InvalidArgument("probe point off grid".into()))?;
        let at = grid.point(idx)[..n].to_vec();
        for &r in &probe.radii {
            remainder.push((at.clone(), remainder_probe(&field, &cfg.test_function, idx, r)?));
        }
    }
    let poincare = poincare_probe(&field, &probe.radii)?;
    let xs = midpoint_samples(n, cfg.grid.half_width, if n == 1 { 32 } else { 8 });
    let gamma = estimate_gamma(phi, &xs, &log_space(1e-3, 1e3, 25), &[1.5, 2.0, 4.0])?.gamma_hat;
    let energy = mollified_energy_probe(phi, &field, &probe.deltas, &rq, gamma)?;
    Ok(ProbeResults { remainder, poincare, energy })
}

fn cmd_probe(loaded: &LoadedConfig, rec: &mut Recorder) -> Result<bool> {
    let cfg = &loaded.config;
    let phi = cfg.build_phi(&loaded.base_dir)?;
    let res = rec.time("probe", || run_probes(cfg, &phi))?;
    let passed = res.passed();
    rec.verdict(passed);
    let hash = loaded.hash.as_str();

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..cfg.dimension).map(|a| format!("x{a}")).collect();
    header.extend(["radius", "lhs", "rhs", "rhs_hessian", "linear_bias", "slack", "config_hash"].map(String::from));
    w.write_record(&header)?;
    for (x, p) in &res.remainder {
        let mut row: Vec<String> = x.iter().map(|&c| real(c)).collect();
        row.extend([real(p.radius), real(p.lhs), real(p.rhs), real(p.rhs_hessian), real(p.linear_bias), real(p.slack())]);
        row.push(hash.into());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    rec.write(format!("{}.remainder.csv", cfg.name), &bytes)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["delta", "energy", "bound", "sharp_modular", "gamma", "config_hash"])?;
    for &(d, e) in &res.energy.rows {
        w.write_record([
            real(d),
            real(e),
            real(res.energy.bound),
            real(res.energy.sharp_modular),
            real(res.energy.gamma),
            hash.into(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    rec.write(format!("{}.energy.csv", cfg.name), &bytes)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["max_ratio", "worst_index", "worst_radius", "samples", "config_hash"])?;
    let p = &res.poincare;
    w.write_record([real(p.max_ratio), p.worst_index.to_string(), real(p.worst_radius), p.samples.to_string(), hash.into()])?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    rec.write(format!("{}.poincare.csv", cfg.name), &bytes)?;
    Ok(passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c0_line() {
        let line = cmd_c0(1, None).unwrap();
        assert!(line.starts_with("dimension=1 analytic=0.5 "), "{line}");
        assert!(matches!(cmd_c0(7, None), Err(Error::UnsupportedDimension(7))));
    }

    #[test]
    fn exit_codes() {
        let a = Error::AssumptionFailed { assumption: "delta2".into(), detail: String::new() };
        assert_eq!(exit_code(&a), exit::PRECONDITION_FAIL);
        assert_eq!(exit_code(&Error::UnderResolved { radius: 1.0, min: 2.0 }), exit::CONFIG_ERROR);
        assert_eq!(exit_code(&Error::AllZero), exit::FAILURE);
        assert_eq!(run(["orlicz-sharp", "c0", "--dim", "7"]), exit::CONFIG_ERROR);
        assert_eq!(run(["orlicz-sharp", "frobnicate"]), exit::CONFIG_ERROR);
    }

    #[test]
    fn midpoints_avoid_origin() {
        let xs = midpoint_samples(2, 1.0, 4);
        assert_eq!(xs.len(), 16);
        assert!(xs.iter().all(|x| x.iter().all(|c| c.abs() > 0.0)));
        assert_eq!(xs[0], vec![-0.75, -0.75]);
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = std::env::temp_dir().join(format!("orlicz-sharp-atomic-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("a.json");
        write_atomic(&p, b"{}").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"{}");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
