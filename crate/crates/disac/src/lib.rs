//! Experiment runner for robust distributed ISAC beamforming.
//!
//! [`spec::ExperimentSpec`] describes a sweep, [`experiments::run`]
//! evaluates it into CSV [`output::Table`]s and [`execute`] writes those
//! plus a JSON [`output::Manifest`] to the output directory.

pub mod error;
pub mod experiments;
pub mod output;
pub mod spec;

use std::path::{Path, PathBuf};

use disac_core::optimizer::{initialize_z, p3_at};
use disac_core::RobustProblem;

pub use error::{DisacError, Result};
pub use experiments::{run, RunResult};
pub use spec::{ExperimentKind, ExperimentSpec};

use output::{sha256_hex, write_manifest, write_tables, Manifest};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "DISAC_OUT";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub workers: Option<usize>,
    pub full_scale: bool,
}

/// Output directory: `--out`, then the spec's `out`, then
/// `$DISAC_OUT/<kind>`, then `results/<kind>`.
pub fn output_dir(spec: &ExperimentSpec, cli_out: Option<&Path>) -> PathBuf {
    if let Some(o) = cli_out {
        return o.to_path_buf();
    }
    if let Some(o) = &spec.out {
        return o.clone();
    }
    let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"));
    root.join(spec.kind.label())
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn prepare(text: &str, origin: &Path, base_dir: &Path, opts: &RunOptions) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::parse(text, origin, base_dir)?;
    if let Some(seeds) = &opts.seeds {
        if seeds.is_empty() {
            return Err(DisacError::spec(origin, "empty seed list"));
        }
        spec.seeds = seeds.clone();
    }
    if opts.full_scale {
        spec.set_full_scale();
    }
    Ok(spec)
}

/// Runs a spec given as text and writes the CSVs and manifest. Returns the
/// result and the output directory.
pub fn execute(text: &str, origin: &Path, base_dir: &Path, opts: &RunOptions) -> Result<(RunResult, PathBuf)> {
    let spec = prepare(text, origin, base_dir, opts)?;
    let dir = output_dir(&spec, opts.out.as_deref());
    output::ensure_writable(&dir)?;
    let workers = opts.workers.unwrap_or_else(default_workers);
    let result = run(&spec, workers)?;
    let outputs = write_tables(&dir, &result.tables)?;
    let manifest = Manifest {
        kind: spec.kind.label().to_string(),
        spec_sha256: sha256_hex(text.as_bytes()),
        spec: text.to_string(),
        spec_dir: base_dir.to_path_buf(),
        config_hash: result.config_hash.clone(),
        seeds: spec.seeds.clone(),
        points: result.points,
        full_scale: spec.full_scale,
        workers,
        revision: output::revision(),
        wall_time_s: result.wall_time_s,
        infeasible_points: result.infeasible_points,
        solver_trouble_points: result.solver_trouble_points,
        outputs,
    };
    write_manifest(&dir, &manifest)?;
    Ok((result, dir))
}

/// Spec file or a previous run's `manifest.json`.
pub fn execute_path(path: &Path, opts: &RunOptions) -> Result<(RunResult, PathBuf)> {
    if path.extension().is_some_and(|e| e == "json") {
        let m = Manifest::load(path)?;
        let mut opts = opts.clone();
        opts.seeds.get_or_insert(m.seeds);
        opts.full_scale |= m.full_scale;
        return execute(&m.spec, path, &m.spec_dir, &opts);
    }
    let text = std::fs::read_to_string(path).map_err(|e| DisacError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let base = std::fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
    execute(&text, path, &base, opts)
}

/// Checks that every sweep point resolves to a valid scenario and that the
/// output directory is writable. Returns the number of points.
pub fn validate(spec: &ExperimentSpec, out: &Path) -> Result<usize> {
    let points = spec.points();
    for p in &points {
        let cfg = spec.config(p)?;
        cfg.validate()?;
        if matches!(spec.kind, ExperimentKind::Detection | ExperimentKind::PowerModes) {
            experiments::detection_experiment(spec, &cfg).validate(cfg.num_nodes())?;
        }
    }
    output::ensure_writable(out)?;
    Ok(points.len())
}

/// Conic text dump of the first sweep point's surrogate at the SCA
/// starting point.
pub fn dump_program(spec: &ExperimentSpec) -> Result<String> {
    let first = spec.points()[0];
    let problem = RobustProblem::build(spec.config(&first)?)?;
    let init = initialize_z(&problem.cfg, &problem.r0, &problem.worst_case);
    let p3 = p3_at(&problem, &init)?;
    Ok(disac_conic::dump::program_to_string(&p3.program))
}
