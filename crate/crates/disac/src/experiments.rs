//! Experiment runners. Each sweep point is evaluated independently on the
//! worker pool; results are assembled in sweep order so the CSV bytes do
//! not depend on the number of workers.

use std::time::Instant;

use disac_core::archive::config_hash;
use disac_core::detection::{detection_probability, sampled_kld_report, DetectionCurve, DetectionExperiment};
use disac_core::linalg::CVec;
use disac_core::optimizer::{initialize_z, optimize, sca_optimize, verify_beamformers, BeamformerSolution};
use disac_core::rcs::emit_polar_pattern;
use disac_core::scenario::{PowerMode, ScenarioConfig};
use disac_core::zf::{default_rho_grid, zf_grid_search, ZfOutcome};
use disac_core::{CoreError, RobustProblem};
use rayon::prelude::*;

use crate::error::{DisacError, Result};
use crate::output::{num, opt, sha256_hex, Table};
use crate::spec::{ExperimentKind, ExperimentSpec, SweepPoint};

pub const DETECTION_HEADER: [&str; 8] = ["scnr_db", "pd", "ci_low", "ci_high", "gamma_db", "delta", "model", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    Infeasible,
    SolverTrouble,
}

impl PointStatus {
    pub fn label(&self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Infeasible => "infeasible",
            PointStatus::SolverTrouble => "solver_trouble",
        }
    }
}

/// Splits recoverable optimization outcomes from hard errors.
fn classify<T>(r: disac_core::Result<T>) -> Result<std::result::Result<T, PointStatus>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(CoreError::Infeasible { .. }) => Ok(Err(PointStatus::Infeasible)),
        Err(CoreError::SolverTrouble(_)) | Err(CoreError::Conic(_)) => Ok(Err(PointStatus::SolverTrouble)),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone)]
struct PointOutput {
    config_hash: String,
    status: PointStatus,
    /// `(table index, row)` pairs.
    rows: Vec<(usize, Vec<String>)>,
}

impl PointOutput {
    fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            config_hash: config_hash(cfg),
            status: PointStatus::Ok,
            rows: Vec::new(),
        }
    }

    fn row(&mut self, table: usize, row: Vec<String>) {
        self.rows.push((table, row));
    }

    fn worsen(&mut self, status: PointStatus) {
        let rank = |s: PointStatus| match s {
            PointStatus::Ok => 0,
            PointStatus::Infeasible => 1,
            PointStatus::SolverTrouble => 2,
        };
        if rank(status) > rank(self.status) {
            self.status = status;
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub tables: Vec<Table>,
    pub config_hash: String,
    pub points: usize,
    pub infeasible_points: usize,
    pub solver_trouble_points: usize,
    pub wall_time_s: f64,
}

impl RunResult {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// 0 on success, 3 if any point hit solver trouble, else 2 if any point
    /// was infeasible.
    pub fn exit_code(&self) -> i32 {
        if self.solver_trouble_points > 0 {
            3
        } else if self.infeasible_points > 0 {
            2
        } else {
            0
        }
    }
}

fn empty_tables(kind: ExperimentKind) -> Vec<Table> {
    match kind {
        ExperimentKind::Convergence => vec![Table::new(
            "convergence",
            &[
                "nodes",
                "antennas",
                "aoa_half_width_deg",
                "gamma_db",
                "seed",
                "iteration",
                "objective_nats",
                "stop_reason",
            ],
        )],
        ExperimentKind::Tradeoff => vec![
            Table::new(
                "tradeoff",
                &[
                    "nodes",
                    "antennas",
                    "delta",
                    "gamma_db",
                    "seed",
                    "method",
                    "kld_nats",
                    "lifted_kld_nats",
                    "total_power_w",
                    "sinr_margin",
                    "status",
                ],
            ),
            Table::new(
                "tradeoff_mean",
                &["nodes", "antennas", "delta", "gamma_db", "method", "mean_kld_nats", "feasible_seeds"],
            ),
        ],
        ExperimentKind::Detection => vec![
            Table::new("detection", &DETECTION_HEADER),
            Table::new("detection_pd50", &["model", "gamma_db", "delta", "seed", "pd50_scnr_db", "status"]),
        ],
        ExperimentKind::PowerModes => vec![
            Table::new("power_modes", &DETECTION_HEADER),
            Table::new(
                "power_modes_summary",
                &[
                    "model",
                    "gamma_db",
                    "seed",
                    "lifted_kld_nats",
                    "kld_nats",
                    "total_power_w",
                    "power_excess_w",
                    "sinr_margin",
                    "pd50_scnr_db",
                    "status",
                ],
            ),
        ],
        ExperimentKind::RcsModels => vec![Table::new(
            "rcs_models",
            &[
                "model",
                "gamma_db",
                "seed",
                "samples",
                "lower_bound_nats",
                "mean_kld_nats",
                "p10_kld_nats",
                "p90_kld_nats",
                "band_width_nats",
                "status",
            ],
        )],
        ExperimentKind::PolarPattern => vec![Table::new("polar_pattern", &["model", "seed", "angle_deg", "rcs_m2"])],
    }
}

pub fn run(spec: &ExperimentSpec, workers: usize) -> Result<RunResult> {
    let start = Instant::now();
    let points = spec.points();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let outputs: Vec<PointOutput> = pool.install(|| {
        points
            .par_iter()
            .map(|p| evaluate(spec, p))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut tables = empty_tables(spec.kind);
    for out in &outputs {
        for (t, row) in &out.rows {
            tables[*t].push(row.clone());
        }
    }
    if spec.kind == ExperimentKind::Tradeoff {
        let mean = tradeoff_means(&tables[0]);
        tables[1] = mean;
    }
    let joined: String = outputs.iter().map(|o| o.config_hash.as_str()).collect::<Vec<_>>().join("\n");
    Ok(RunResult {
        tables,
        config_hash: sha256_hex(joined.as_bytes()),
        points: points.len(),
        infeasible_points: outputs.iter().filter(|o| o.status == PointStatus::Infeasible).count(),
        solver_trouble_points: outputs.iter().filter(|o| o.status == PointStatus::SolverTrouble).count(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn evaluate(spec: &ExperimentSpec, p: &SweepPoint) -> Result<PointOutput> {
    let cfg = spec.config(p)?;
    match spec.kind {
        ExperimentKind::Convergence => convergence_point(cfg, p),
        ExperimentKind::Tradeoff => tradeoff_point(cfg, p),
        ExperimentKind::Detection => detection_point(spec, cfg, p),
        ExperimentKind::PowerModes => power_mode_point(spec, cfg, p),
        ExperimentKind::RcsModels => rcs_point(spec, cfg, p),
        ExperimentKind::PolarPattern => polar_point(spec, cfg, p),
    }
}

fn convergence_point(cfg: ScenarioConfig, p: &SweepPoint) -> Result<PointOutput> {
    let mut out = PointOutput::new(&cfg);
    let head = vec![
        cfg.num_nodes().to_string(),
        cfg.tx_antennas.to_string(),
        num(cfg.aoa_half_width[0].to_degrees()),
        num(p.gamma_db),
        p.seed.to_string(),
    ];
    let problem = RobustProblem::build(cfg)?;
    let init = initialize_z(&problem.cfg, &problem.r0, &problem.worst_case);
    match classify(sca_optimize(&problem, &init))? {
        Ok(sca) => {
            let reason = format!("{:?}", sca.stop_reason).to_lowercase();
            for (i, v) in sca.trace.iter().enumerate() {
                let mut row = head.clone();
                row.extend([(i + 1).to_string(), num(*v), reason.clone()]);
                out.row(0, row);
            }
        }
        Err(status) => {
            let mut row = head;
            row.extend(["0".into(), String::new(), status.label().into()]);
            out.row(0, row);
            out.worsen(status);
        }
    }
    Ok(out)
}

fn solve_proposed(problem: &RobustProblem) -> Result<std::result::Result<BeamformerSolution, PointStatus>> {
    classify(optimize(problem))
}

fn tradeoff_point(cfg: ScenarioConfig, p: &SweepPoint) -> Result<PointOutput> {
    let mut out = PointOutput::new(&cfg);
    let head = vec![
        cfg.num_nodes().to_string(),
        cfg.tx_antennas.to_string(),
        num(cfg.sync_error_bound),
        num(p.gamma_db),
        p.seed.to_string(),
    ];
    let problem = RobustProblem::build(cfg)?;
    let mut row = head.clone();
    row.push("proposed".into());
    match solve_proposed(&problem)? {
        Ok(sol) => {
            let check = verify_beamformers(&problem, &sol.comm, &sol.sensing)?;
            row.extend([
                num(sol.recovered_objective),
                num(sol.lifted_objective()),
                num(check.total_power),
                num(check.sinr_margin),
                "ok".into(),
            ]);
        }
        Err(status) => {
            row.extend([String::new(), String::new(), String::new(), String::new(), status.label().into()]);
            out.worsen(status);
        }
    }
    out.row(0, row);

    let mut row = head;
    row.push("zf".into());
    match zf_grid_search(&problem, &default_rho_grid())? {
        ZfOutcome::Feasible(s) => {
            let check = verify_beamformers(&problem, &s.comm, &s.sensing)?;
            row.extend([
                num(s.objective),
                num(s.objective),
                num(check.total_power),
                num(check.sinr_margin),
                "ok".into(),
            ]);
        }
        ZfOutcome::Infeasible { best_margin } => {
            row.extend([String::new(), String::new(), String::new(), num(best_margin), "infeasible".into()]);
        }
    }
    out.row(0, row);
    Ok(out)
}

/// Seed average per (nodes, antennas, delta, gamma, method) over feasible
/// seeds, in first-appearance order.
fn tradeoff_means(t: &Table) -> Table {
    let mut mean = empty_tables(ExperimentKind::Tradeoff).remove(1);
    let key_cols = [0, 1, 2, 3, 5];
    let kld = t.column("kld_nats").expect("kld column");
    let mut keys: Vec<Vec<String>> = Vec::new();
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for r in &t.rows {
        let key: Vec<String> = key_cols.iter().map(|&c| r[c].clone()).collect();
        let i = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                sums.push((0.0, 0));
                keys.len() - 1
            }
        };
        if let Ok(v) = r[kld].parse::<f64>() {
            sums[i].0 += v;
            sums[i].1 += 1;
        }
    }
    for (k, (s, c)) in keys.into_iter().zip(sums) {
        let mut row = k;
        row.push(if c > 0 { num(s / c as f64) } else { String::new() });
        row.push(c.to_string());
        mean.push(row);
    }
    mean
}

pub fn detection_experiment(spec: &ExperimentSpec, cfg: &ScenarioConfig) -> DetectionExperiment {
    DetectionExperiment {
        trials: spec.trials,
        input_scnr_db: spec.scnr_db.clone(),
        threshold_db: spec.threshold_db,
        snapshots: cfg.snapshots,
        ..DetectionExperiment::default()
    }
}

fn curve_rows(curve: &DetectionCurve, p: &SweepPoint, delta: f64, model: &str) -> Vec<Vec<String>> {
    curve
        .points
        .iter()
        .map(|q| {
            vec![
                num(q.scnr_db),
                num(q.pd),
                num(q.ci_low),
                num(q.ci_high),
                num(p.gamma_db),
                num(delta),
                model.to_string(),
                p.seed.to_string(),
            ]
        })
        .collect()
}

fn detection_point(spec: &ExperimentSpec, cfg: ScenarioConfig, p: &SweepPoint) -> Result<PointOutput> {
    let mut out = PointOutput::new(&cfg);
    let exp = detection_experiment(spec, &cfg);
    let delta = cfg.sync_error_bound;
    let problem = RobustProblem::build(cfg)?;
    let mut beams: Vec<(&str, std::result::Result<Vec<CVec>, PointStatus>)> = Vec::new();
    match solve_proposed(&problem)? {
        Ok(sol) => beams.push(("proposed", Ok(sol.sensing))),
        Err(status) => {
            out.worsen(status);
            beams.push(("proposed", Err(status)));
        }
    }
    if spec.compare_zf {
        match zf_grid_search(&problem, &default_rho_grid())? {
            ZfOutcome::Feasible(s) => beams.push(("zf", Ok(s.sensing))),
            ZfOutcome::Infeasible { .. } => beams.push(("zf", Err(PointStatus::Infeasible))),
        }
    }
    for (model, b) in beams {
        let summary = |pd50: Option<f64>, status: PointStatus| {
            vec![
                model.to_string(),
                num(p.gamma_db),
                num(delta),
                p.seed.to_string(),
                opt(pd50),
                status.label().to_string(),
            ]
        };
        match b {
            Ok(sensing) => {
                let curve = detection_probability(&problem, &sensing, &exp)?;
                for r in curve_rows(&curve, p, delta, model) {
                    out.row(0, r);
                }
                out.row(1, summary(curve.scnr_at_pd(0.5), PointStatus::Ok));
            }
            Err(status) => out.row(1, summary(None, status)),
        }
    }
    Ok(out)
}

fn power_mode_point(spec: &ExperimentSpec, cfg: ScenarioConfig, p: &SweepPoint) -> Result<PointOutput> {
    let mut out = PointOutput::new(&cfg);
    let exp = detection_experiment(spec, &cfg);
    let delta = cfg.sync_error_bound;
    let mode = p.power_mode.unwrap_or(PowerMode::TotalSystem);
    let model = mode.label();
    let problem = RobustProblem::build(cfg)?;
    let head = vec![model.to_string(), num(p.gamma_db), p.seed.to_string()];
    match solve_proposed(&problem)? {
        Ok(sol) => {
            let check = verify_beamformers(&problem, &sol.comm, &sol.sensing)?;
            let curve = detection_probability(&problem, &sol.sensing, &exp)?;
            for r in curve_rows(&curve, p, delta, model) {
                out.row(0, r);
            }
            let mut row = head;
            row.extend([
                num(sol.lifted_objective()),
                num(sol.recovered_objective),
                num(check.total_power),
                num(check.power_excess),
                num(check.sinr_margin),
                opt(curve.scnr_at_pd(0.5)),
                "ok".into(),
            ]);
            out.row(1, row);
        }
        Err(status) => {
            let mut row = head;
            row.extend(std::iter::repeat_n(String::new(), 6));
            row.push(status.label().into());
            out.row(1, row);
            out.worsen(status);
        }
    }
    Ok(out)
}

fn rcs_point(spec: &ExperimentSpec, cfg: ScenarioConfig, p: &SweepPoint) -> Result<PointOutput> {
    let mut out = PointOutput::new(&cfg);
    let label = cfg.rcs_model.label();
    let head = vec![label.clone(), num(p.gamma_db), p.seed.to_string(), spec.samples.to_string()];
    let problem = RobustProblem::build(cfg)?;
    let mut row = head;
    match solve_proposed(&problem)? {
        Ok(sol) => {
            let mut rng = problem.cfg.rng(&format!("rcs-band/{label}"));
            let band = sampled_kld_report(&problem, &sol.sensing_covariances(), spec.samples, &mut rng)?;
            row.extend([
                num(sol.recovered_objective),
                num(band.mean),
                num(band.p10),
                num(band.p90),
                num(band.width()),
                "ok".into(),
            ]);
        }
        Err(status) => {
            row.extend(std::iter::repeat_n(String::new(), 5));
            row.push(status.label().into());
            out.worsen(status);
        }
    }
    out.row(0, row);
    Ok(out)
}

fn polar_point(spec: &ExperimentSpec, cfg: ScenarioConfig, p: &SweepPoint) -> Result<PointOutput> {
    let mut out = PointOutput::new(&cfg);
    let label = cfg.rcs_model.label();
    let mut rng = cfg.rng(&format!("polar/{label}"));
    let pattern = emit_polar_pattern(&cfg.rcs_profile, cfg.rcs_model, &mut rng, spec.resolution_deg)?;
    for (deg, rcs) in pattern {
        out.row(0, vec![label.clone(), p.seed.to_string(), num(deg), num(rcs)]);
    }
    Ok(out)
}

/// Convenience for callers that want a hard error on any failed point.
pub fn require_clean(result: &RunResult) -> Result<()> {
    if result.solver_trouble_points > 0 {
        return Err(DisacError::Core(CoreError::SolverTrouble(format!(
            "{} of {} points",
            result.solver_trouble_points, result.points
        ))));
    }
    if result.infeasible_points > 0 {
        return Err(DisacError::Core(CoreError::Infeasible {
            binding: vec![format!("{} of {} points", result.infeasible_points, result.points)],
        }));
    }
    Ok(())
}
