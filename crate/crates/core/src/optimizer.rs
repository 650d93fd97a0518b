//! Successive convex approximation over the lifted beamformers, worst-case
//! AoA selection and rank-one recovery.

use disac_conic::{ClarabelBackend, ConicBackend, SolveReport, SolveStatus, SolverSettings};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{c64, eigh_desc, outer, sample_cn, sqrt_psd, BlockDiag, CMat, CVec};
use crate::p3::{assemble_p3, LiftedSolution, P3Data, P3Program, POWER_PREFIX};
use crate::problem::{isotropic_sensing, RobustProblem, SensingModel};
use crate::robust_sinr::robust_sinrs;
use crate::scenario::{GeometrySummary, NumeratorMode, PowerMode, ScenarioConfig};
use crate::sensing::lower_bound_objective;

/// Relative gap below which two AoA candidates count as tied.
const AOA_TIE: f64 = 1e-9;

/// Lower bound at the given AoAs with the isotropic half-power probe.
pub fn aoa_objective(cfg: &ScenarioConfig, geometry: &GeometrySummary, r0: &BlockDiag, aoa: &[f64]) -> Result<f64> {
    let model = SensingModel::build(cfg, geometry, aoa)?;
    let probe = isotropic_sensing(cfg, cfg.power_budget / 2.0);
    lower_bound_objective(r0, &model.expected_rs(&probe))
}

/// Offsets of an odd uniform grid on `[-w, w]`, ordered by distance from
/// the center so that ties resolve toward the estimate.
fn grid_offsets(half_width: f64, points: usize) -> Vec<f64> {
    let half = (points / 2) as isize;
    let mut steps: Vec<isize> = (-half..=half).collect();
    steps.sort_by_key(|s| (s.abs(), *s));
    steps
        .into_iter()
        .map(|s| half_width * s as f64 / half.max(1) as f64)
        .collect()
}

/// One coordinate pass: node by node, the grid angle minimizing the lower
/// bound with the other nodes held at their current selection.
pub fn select_worst_case_aoa(
    cfg: &ScenarioConfig,
    geometry: &GeometrySummary,
    r0: &BlockDiag,
    grid_points: usize,
) -> Result<Vec<f64>> {
    if grid_points < 3 || grid_points % 2 == 0 {
        return Err(CoreError::InvalidConfig(format!(
            "AoA grid needs an odd count of at least 3, got {grid_points}"
        )));
    }
    let mut sel = geometry.target_aoa.clone();
    for n in 0..sel.len() {
        let width = cfg.aoa_half_width[n];
        if width == 0.0 {
            continue;
        }
        let center = geometry.target_aoa[n];
        let mut best = (center, aoa_objective(cfg, geometry, r0, &sel)?);
        for off in grid_offsets(width, grid_points).into_iter().skip(1) {
            sel[n] = center + off;
            let v = aoa_objective(cfg, geometry, r0, &sel)?;
            if v < best.1 - AOA_TIE * best.1.abs().max(1e-300) {
                best = (sel[n], v);
            }
        }
        sel[n] = best.0;
    }
    Ok(sel)
}

/// Every combination of grid angles; exponential in the node count.
pub fn joint_worst_case_aoa(
    cfg: &ScenarioConfig,
    geometry: &GeometrySummary,
    r0: &BlockDiag,
    grid_points: usize,
) -> Result<Vec<f64>> {
    let n = geometry.target_aoa.len();
    let grids: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            if cfg.aoa_half_width[i] == 0.0 {
                vec![0.0]
            } else {
                grid_offsets(cfg.aoa_half_width[i], grid_points)
            }
        })
        .collect();
    let mut idx = vec![0usize; n];
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    loop {
        let aoa: Vec<f64> = (0..n).map(|i| geometry.target_aoa[i] + grids[i][idx[i]]).collect();
        let dist: f64 = (0..n).map(|i| grids[i][idx[i]].abs()).sum();
        let v = aoa_objective(cfg, geometry, r0, &aoa)?;
        let better = match &best {
            None => true,
            Some((_, bv, bd)) => {
                let tie = AOA_TIE * bv.abs().max(1e-300);
                v < bv - tie || ((v - bv).abs() <= tie && dist < *bd)
            }
        };
        if better {
            best = Some((aoa, v, dist));
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok(best.expect("at least one candidate").0);
            }
            idx[i] += 1;
            if idx[i] < grids[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// `R0 + E[Rs]` with isotropic sensing at half the power budget.
pub fn initialize_z(cfg: &ScenarioConfig, r0: &BlockDiag, model: &SensingModel) -> BlockDiag {
    r0.add(&model.expected_rs(&isotropic_sensing(cfg, cfg.power_budget / 2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    IterationCap,
    /// The new iterate did not improve on the previous one; the previous
    /// iterate is kept.
    NoImprovement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaOutcome {
    pub lifted: LiftedSolution,
    /// Lower-bound objective after each accepted surrogate solve.
    pub trace: Vec<f64>,
    /// Number of surrogate solves.
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub solver_iterations: u32,
}

impl ScaOutcome {
    pub fn converged(&self) -> bool {
        self.stop_reason != StopReason::IterationCap
    }

    pub fn objective(&self) -> f64 {
        *self.trace.last().expect("at least one iterate")
    }
}

/// Solves with default tolerances and retries once with relaxed ones unless
/// the first attempt is conclusive. An inaccurate first attempt is kept when
/// the retry does no better.
pub fn solve_surrogate(p3: &P3Program) -> Result<SolveReport> {
    let settings = SolverSettings::default();
    let report = ClarabelBackend.solve(&p3.program, &settings)?;
    if !matches!(report.status, SolveStatus::NumericalTrouble | SolveStatus::Inaccurate) {
        return Ok(report);
    }
    log::warn!("surrogate solve in trouble ({}), retrying relaxed", report.diagnostics);
    let retry = ClarabelBackend.solve(&p3.program, &settings.relaxed())?;
    Ok(match (report.status, retry.status) {
        (_, SolveStatus::Optimal) => retry,
        (SolveStatus::Inaccurate, _) => report,
        _ => retry,
    })
}

/// Constraint groups that are infeasible on their own together with the
/// power budget.
fn binding_constraints(p3: &P3Program) -> Vec<String> {
    let sinr_labels: Vec<String> = p3
        .program
        .constraints()
        .iter()
        .filter(|c| c.label.starts_with("sinr["))
        .map(|c| c.label.clone())
        .collect();
    let mut binding = Vec::new();
    for keep in &sinr_labels {
        let mut trial = p3.clone();
        trial.program.remove_constraints("sinr[");
        let original = p3.program.constraints().iter().find(|c| &c.label == keep).expect("label exists");
        trial.program.add_constraint(keep.clone(), original.constraint.clone());
        if let Ok(r) = solve_surrogate(&trial) {
            if r.status == SolveStatus::Infeasible {
                binding.push(keep.clone());
            }
        }
    }
    if binding.is_empty() {
        binding = sinr_labels;
    }
    binding.push(POWER_PREFIX.to_string());
    binding
}

pub fn sca_optimize(problem: &RobustProblem, init: &BlockDiag) -> Result<ScaOutcome> {
    let data = problem.p3_data();
    let cfg = &problem.cfg;
    let mut z_prev = init.clone();
    let mut trace: Vec<f64> = Vec::new();
    let mut current: Option<LiftedSolution> = None;
    let mut solver_iterations = 0;
    let mut stop_reason = StopReason::IterationCap;
    let mut iterations = 0;
    for v in 0..cfg.optimizer.max_iterations {
        let p3 = assemble_p3(&data, &z_prev)?;
        let report = solve_surrogate(&p3)?;
        iterations += 1;
        solver_iterations += report.solver_iterations;
        match report.status {
            SolveStatus::Optimal => {}
            SolveStatus::Inaccurate => log::warn!("surrogate {v} accepted inaccurate: {}", report.diagnostics),
            SolveStatus::Infeasible if v == 0 => {
                return Err(CoreError::Infeasible {
                    binding: binding_constraints(&p3),
                })
            }
            status => {
                return Err(CoreError::SolverTrouble(format!(
                    "surrogate {v} ended {status:?}: {}",
                    report.diagnostics
                )))
            }
        }
        let lifted = p3.extract(&report)?;
        let expected = problem.worst_case.expected_rs(&lifted.ws);
        let value = lower_bound_objective(&problem.r0, &expected)?;
        log::debug!("sca iteration {v}: lower bound {value:.6}");
        if let Some(&prev) = trace.last() {
            // a decrease keeps the previous iterate so the trace stays monotone
            if value < prev {
                stop_reason = if prev - value <= cfg.sca_tolerance {
                    StopReason::Converged
                } else {
                    StopReason::NoImprovement
                };
                break;
            }
            trace.push(value);
            current = Some(lifted);
            if value - prev <= cfg.sca_tolerance {
                stop_reason = StopReason::Converged;
                break;
            }
        } else {
            trace.push(value);
            current = Some(lifted);
        }
        z_prev = problem.r0.add(&expected);
    }
    Ok(ScaOutcome {
        lifted: current.expect("first iterate accepted"),
        trace,
        iterations,
        stop_reason,
        solver_iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryPath {
    Principal,
    Randomized,
}

/// Power share, relative to the budget, below which a lifted matrix is
/// solver noise on an unused beam and counts as rank one.
pub const NEGLIGIBLE_POWER: f64 = 1e-6;

/// `lambda_1 / sum(lambda)`; one for a zero matrix.
pub fn dominant_ratio(m: &CMat) -> f64 {
    let (values, _) = eigh_desc(m);
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if total <= 1e-300 {
        1.0
    } else {
        values[0].max(0.0) / total
    }
}

/// [`dominant_ratio`], but one whenever the trace is at most `floor`.
pub fn effective_ratio(m: &CMat, floor: f64) -> f64 {
    if m.trace().re <= floor {
        1.0
    } else {
        dominant_ratio(m)
    }
}

/// Rotates `v` so its first entry of non-negligible magnitude is real and
/// positive.
pub fn normalize_phase(v: &CVec) -> CVec {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() > 1e-12 * scale.max(1e-300)) {
        Some(z) => v * Complex64::from_polar(1.0, -z.arg()),
        None => v.clone(),
    }
}

/// `sqrt(lambda_1) v_1`, phase-normalized.
pub fn principal_component(m: &CMat) -> CVec {
    let (values, vectors) = eigh_desc(m);
    let v = vectors.column(0).into_owned();
    normalize_phase(&(v * c64(values[0].max(0.0).sqrt(), 0.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneRecovery {
    pub vector: CVec,
    pub path: RecoveryPath,
    /// False when no candidate passed `score`; the vector is then the best
    /// effort principal component.
    pub feasible: bool,
}

/// Rank-one recovery of a single lifted matrix. `score` rescales a
/// candidate to feasibility and returns it with its objective, or `None`.
pub fn recover_rank_one<R: Rng + ?Sized>(
    lifted: &CMat,
    gate: f64,
    draws: usize,
    rng: &mut R,
    mut score: impl FnMut(&CVec) -> Option<(CVec, f64)>,
) -> RankOneRecovery {
    let principal = principal_component(lifted);
    if dominant_ratio(lifted) >= gate {
        let scored = score(&principal);
        return RankOneRecovery {
            feasible: scored.is_some(),
            vector: scored.map_or(principal, |s| s.0),
            path: RecoveryPath::Principal,
        };
    }
    let root = sqrt_psd(lifted);
    let mut best: Option<(CVec, f64)> = None;
    for _ in 0..draws {
        let w = &root * sample_cn(rng, lifted.nrows());
        if let Some((v, obj)) = score(&w) {
            if best.as_ref().is_none_or(|b| obj > b.1) {
                best = Some((v, obj));
            }
        }
    }
    RankOneRecovery {
        feasible: best.is_some(),
        vector: best.map_or(principal, |b| b.0),
        path: RecoveryPath::Randomized,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub comm_paths: Vec<RecoveryPath>,
    pub sensing_paths: Vec<RecoveryPath>,
    pub feasible: bool,
    /// Factor applied to the recovered sensing powers by power control.
    pub sensing_scale: f64,
    pub candidates: usize,
}

/// Power constraints of a mode as `(comm weights per UE, sensing weight,
/// budget)` rows over unit comm directions and sensing vectors.
fn power_rows(cfg: &ScenarioConfig, dirs: &[CVec], sensing: &[CVec]) -> Vec<(Vec<f64>, f64, f64)> {
    let (n, mt) = (cfg.num_nodes(), cfg.tx_antennas);
    let p = cfg.power_budget;
    match cfg.power_mode {
        PowerMode::TotalSystem => vec![(
            dirs.iter().map(|v| v.norm_squared()).collect(),
            sensing.iter().map(|s| s.norm_squared()).sum(),
            p,
        )],
        PowerMode::PerNode => (0..n)
            .map(|node| {
                (
                    dirs.iter().map(|v| v.rows(node * mt, mt).norm_squared()).collect(),
                    sensing[node].norm_squared(),
                    p / n as f64,
                )
            })
            .collect(),
        PowerMode::PerAntenna => (0..n)
            .flat_map(|node| (0..mt).map(move |a| (node, a)))
            .map(|(node, a)| {
                (
                    dirs.iter().map(|v| v[node * mt + a].norm_sqr()).collect(),
                    sensing[node][a].norm_sqr(),
                    p / (n * mt) as f64,
                )
            })
            .collect(),
    }
}

/// Given comm directions and sensing vectors, sets the comm powers so every
/// robust SINR meets the threshold with equality and scales the sensing
/// vectors by the largest common factor the power constraints allow.
/// Returns `(comm beams, sensing beams, sensing scale)`.
pub fn power_control(problem: &RobustProblem, dirs: &[CVec], sensing: &[CVec]) -> Option<(Vec<CVec>, Vec<CVec>, f64)> {
    let cfg = &problem.cfg;
    let ch = &problem.channels;
    let k = ch.num_ues();
    let gamma = cfg.sinr_threshold;
    let delta = cfg.sync_error_bound;
    let r = (ch.num_nodes() as f64).sqrt() * delta;
    let units: Vec<CVec> = dirs
        .iter()
        .map(|v| {
            let nv = v.norm();
            if nv > 0.0 { v / c64(nv, 0.0) } else { v.clone() }
        })
        .collect();
    if units.iter().any(|u| u.norm() == 0.0) {
        return None;
    }
    let mut m = DMatrix::<f64>::zeros(k, k);
    let mut b = nalgebra::DVector::<f64>::zeros(k);
    for ue in 0..k {
        let h = &ch.stacked[ue];
        let own = h.dotc(&units[ue]).norm();
        m[(ue, ue)] = match cfg.numerator_mode {
            NumeratorMode::Nominal => own * own,
            NumeratorMode::Conservative => (own - r).max(0.0).powi(2),
        };
        for j in (0..k).filter(|&j| j != ue) {
            m[(ue, j)] = -gamma * (h.dotc(&units[j]).norm() + r).powi(2);
        }
        for (node, s) in sensing.iter().enumerate() {
            let hn = &ch.per_node[node][ue];
            let q = s.norm_squared();
            if q > 0.0 {
                let u = s / c64(q.sqrt(), 0.0);
                b[ue] += gamma * q * (hn.dotc(&u).norm() + delta).powi(2);
            }
        }
    }
    let lu = m.lu();
    let p0 = lu.solve(&nalgebra::DVector::from_element(k, gamma * cfg.comm_noise))?;
    let p1 = lu.solve(&b)?;
    if p0.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || p1.iter().any(|x| !(x.is_finite() && *x >= -1e-12)) {
        return None;
    }
    let mut alpha = f64::INFINITY;
    for (weights, sense, budget) in power_rows(cfg, &units, sensing) {
        let used: f64 = weights.iter().zip(p0.iter()).map(|(w, p)| w * p).sum();
        let slack = budget - used;
        if slack < 0.0 {
            return None;
        }
        let rate: f64 = weights.iter().zip(p1.iter()).map(|(w, p)| w * p).sum::<f64>() + sense;
        if rate > 0.0 {
            alpha = alpha.min(slack / rate);
        }
    }
    if !alpha.is_finite() {
        alpha = 1.0;
    }
    let comm = (0..k)
        .map(|ue| &units[ue] * c64((p0[ue] + alpha * p1[ue]).max(0.0).sqrt(), 0.0))
        .collect();
    let sense = sensing.iter().map(|s| s * c64(alpha.sqrt(), 0.0)).collect();
    Some((comm, sense, alpha))
}

fn lifted_of(vs: &[CVec]) -> Vec<CMat> {
    vs.iter().map(|v| outer(v, v)).collect()
}

/// Joint rank-one recovery. The first candidate takes every principal
/// component; when some lifted matrix fails the rank-one gate, further
/// candidates replace those matrices by Gaussian draws `W^{1/2} g`. Every
/// candidate goes through [`power_control`] and the feasible one with the
/// largest lower bound is kept.
pub fn recover_beamformers<R: Rng + ?Sized>(
    problem: &RobustProblem,
    lifted: &LiftedSolution,
    rng: &mut R,
) -> Result<(Vec<CVec>, Vec<CVec>, RecoveryReport)> {
    let o = &problem.cfg.optimizer;
    let floor = NEGLIGIBLE_POWER * problem.cfg.power_budget;
    let gated = |w: &CMat| effective_ratio(w, floor) >= o.rank_one_gate;
    let comm_gated: Vec<bool> = lifted.wc.iter().map(gated).collect();
    let sense_gated: Vec<bool> = lifted.ws.iter().map(gated).collect();
    let comm_pc: Vec<CVec> = lifted.wc.iter().map(principal_component).collect();
    let sense_pc: Vec<CVec> = lifted.ws.iter().map(principal_component).collect();
    let comm_root: Vec<CMat> = lifted.wc.iter().map(sqrt_psd).collect();
    let sense_root: Vec<CMat> = lifted.ws.iter().map(sqrt_psd).collect();
    let all_gated = comm_gated.iter().chain(&sense_gated).all(|&g| g);
    let candidates = if all_gated { 1 } else { 1 + o.randomization_draws };

    let mut best: Option<(Vec<CVec>, Vec<CVec>, f64, f64)> = None;
    for c in 0..candidates {
        let (dirs, sensing): (Vec<CVec>, Vec<CVec>) = if c == 0 {
            (comm_pc.clone(), sense_pc.clone())
        } else {
            let dirs = (0..lifted.wc.len())
                .map(|i| {
                    if comm_gated[i] {
                        comm_pc[i].clone()
                    } else {
                        &comm_root[i] * sample_cn(rng, comm_root[i].nrows())
                    }
                })
                .collect();
            let sensing = (0..lifted.ws.len())
                .map(|i| {
                    if sense_gated[i] {
                        sense_pc[i].clone()
                    } else {
                        // keep the lifted power on the drawn direction
                        let w = &sense_root[i] * sample_cn(rng, sense_root[i].nrows());
                        let nw = w.norm();
                        if nw > 0.0 {
                            w * c64(lifted.ws[i].trace().re.max(0.0).sqrt() / nw, 0.0)
                        } else {
                            w
                        }
                    }
                })
                .collect();
            (dirs, sensing)
        };
        if let Some((comm, sense, alpha)) = power_control(problem, &dirs, &sensing) {
            let value = problem.lower_bound(&lifted_of(&sense))?;
            if best.as_ref().is_none_or(|b| value > b.2) {
                best = Some((comm, sense, value, alpha));
            }
        }
    }
    let path = |g: &bool| if *g { RecoveryPath::Principal } else { RecoveryPath::Randomized };
    let mut report = RecoveryReport {
        comm_paths: comm_gated.iter().map(path).collect(),
        sensing_paths: sense_gated.iter().map(path).collect(),
        feasible: best.is_some(),
        sensing_scale: 1.0,
        candidates,
    };
    match best {
        Some((comm, sense, _, alpha)) => {
            report.sensing_scale = alpha;
            Ok((comm, sense, report))
        }
        None => {
            // best effort: principal components scaled into the total budget
            let total: f64 = comm_pc.iter().chain(&sense_pc).map(|v| v.norm_squared()).sum();
            let s = if total > problem.cfg.power_budget {
                (problem.cfg.power_budget / total).sqrt()
            } else {
                1.0
            };
            let scale = |v: &CVec| v * c64(s, 0.0);
            Ok((comm_pc.iter().map(scale).collect(), sense_pc.iter().map(scale).collect(), report))
        }
    }
}

/// Dominant-eigenvalue share per lifted matrix; beams carrying less than
/// [`NEGLIGIBLE_POWER`] of the budget report one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub comm: Vec<f64>,
    pub sensing: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSolution {
    pub lifted: LiftedSolution,
    /// Stacked communication beam per UE.
    pub comm: Vec<CVec>,
    /// Sensing beam per node.
    pub sensing: Vec<CVec>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub rank_report: RankReport,
    pub recovery: RecoveryReport,
    pub worst_case_aoa: Vec<f64>,
    /// Lower bound at the recovered sensing beams.
    pub recovered_objective: f64,
}

impl BeamformerSolution {
    pub fn lifted_objective(&self) -> f64 {
        *self.objective_trace.last().expect("nonempty trace")
    }

    pub fn sensing_covariances(&self) -> Vec<CMat> {
        lifted_of(&self.sensing)
    }

    pub fn comm_covariances(&self) -> Vec<CMat> {
        lifted_of(&self.comm)
    }
}

pub fn optimize(problem: &RobustProblem) -> Result<BeamformerSolution> {
    let init = initialize_z(&problem.cfg, &problem.r0, &problem.worst_case);
    optimize_from(problem, &init)
}

pub fn optimize_from(problem: &RobustProblem, init: &BlockDiag) -> Result<BeamformerSolution> {
    let outcome = sca_optimize(problem, init)?;
    let mut rng = problem.cfg.rng("randomization");
    let (comm, sensing, recovery) = recover_beamformers(problem, &outcome.lifted, &mut rng)?;
    let recovered_objective = problem.lower_bound(&lifted_of(&sensing))?;
    let floor = NEGLIGIBLE_POWER * problem.cfg.power_budget;
    Ok(BeamformerSolution {
        rank_report: RankReport {
            comm: outcome.lifted.wc.iter().map(|w| effective_ratio(w, floor)).collect(),
            sensing: outcome.lifted.ws.iter().map(|w| effective_ratio(w, floor)).collect(),
        },
        lifted: outcome.lifted,
        comm,
        sensing,
        objective_trace: outcome.trace,
        iterations: outcome.iterations,
        stop_reason: outcome.stop_reason,
        recovery,
        worst_case_aoa: problem.worst_case.aoa.clone(),
        recovered_objective,
    })
}

/// Per-node view of the stacked beams.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSlices {
    /// `M_t x K` per node; column `k` is node `n`'s part of UE `k`'s beam.
    pub comm: Vec<CMat>,
    pub sensing: Vec<CVec>,
}

pub fn per_node_slices(comm: &[CVec], sensing: &[CVec], tx_antennas: usize) -> NodeSlices {
    let n = sensing.len();
    NodeSlices {
        comm: (0..n)
            .map(|node| CMat::from_fn(tx_antennas, comm.len(), |r, k| comm[k][node * tx_antennas + r]))
            .collect(),
        sensing: sensing.to_vec(),
    }
}

pub fn stack_slices(slices: &NodeSlices) -> Vec<CVec> {
    let k = slices.comm.first().map_or(0, |m| m.ncols());
    (0..k)
        .map(|ue| {
            CVec::from_vec(
                slices
                    .comm
                    .iter()
                    .flat_map(|m| m.column(ue).iter().copied().collect::<Vec<_>>())
                    .collect(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub total_power: f64,
    /// Largest `used - budget` over the active mode's power constraints.
    pub power_excess: f64,
    pub sinrs: Vec<f64>,
    /// `min_k sinr_k / threshold - 1`.
    pub sinr_margin: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.power_excess <= tol && self.sinr_margin >= -tol
    }
}

/// Re-checks power and robust SINR of lifted beams in the complex domain.
pub fn verify_lifted(problem: &RobustProblem, comm: &[CMat], sensing: &[CMat]) -> Result<FeasibilityReport> {
    let cfg = &problem.cfg;
    let (n, mt) = (cfg.num_nodes(), cfg.tx_antennas);
    let diag = |m: &CMat, i: usize| m[(i, i)].re;
    let total_power: f64 = comm.iter().chain(sensing).map(|w| w.trace().re).sum();
    let power_excess = match cfg.power_mode {
        PowerMode::TotalSystem => total_power - cfg.power_budget,
        PowerMode::PerNode => (0..n)
            .map(|node| {
                let c: f64 = comm.iter().map(|w| (0..mt).map(|a| diag(w, node * mt + a)).sum::<f64>()).sum();
                c + sensing[node].trace().re - cfg.power_budget / n as f64
            })
            .fold(f64::NEG_INFINITY, f64::max),
        PowerMode::PerAntenna => (0..n)
            .flat_map(|node| (0..mt).map(move |a| (node, a)))
            .map(|(node, a)| {
                let c: f64 = comm.iter().map(|w| diag(w, node * mt + a)).sum();
                c + diag(&sensing[node], a) - cfg.power_budget / (n * mt) as f64
            })
            .fold(f64::NEG_INFINITY, f64::max),
    };
    let sinrs = robust_sinrs(
        comm,
        sensing,
        &problem.channels,
        cfg.sync_error_bound,
        cfg.comm_noise,
        cfg.numerator_mode,
    )?;
    let sinr_margin = sinrs
        .iter()
        .map(|s| s / cfg.sinr_threshold - 1.0)
        .fold(f64::INFINITY, f64::min);
    Ok(FeasibilityReport {
        total_power,
        power_excess,
        sinrs,
        sinr_margin,
    })
}

pub fn verify_beamformers(problem: &RobustProblem, comm: &[CVec], sensing: &[CVec]) -> Result<FeasibilityReport> {
    verify_lifted(problem, &lifted_of(comm), &lifted_of(sensing))
}

/// Evaluates an assembled surrogate's data with a fresh `P3Data` view, used
/// by callers that only hold the problem.
pub fn p3_at(problem: &RobustProblem, z_prev: &BlockDiag) -> Result<P3Program> {
    let data: P3Data = problem.p3_data();
    assemble_p3(&data, z_prev)
}
