//! Zero-forcing benchmark: ZF communication beams, nullspace-projected
//! sensing beams and a grid search over the communication power share.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{c64, outer, CMat, CVec};
use crate::problem::RobustProblem;
use crate::robust_sinr::robust_sinrs;

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// Columns of `H (H^H H)^-1`, each scaled to power `total / K`.
pub fn zf_comm_precoder(h: &CMat, total: f64) -> Result<Vec<CVec>> {
    let k = h.ncols();
    if k == 0 {
        return Ok(Vec::new());
    }
    let svd = h.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if k > h.nrows() || smax == 0.0 || smin <= RANK_TOL * smax {
        return Err(CoreError::RankDeficient(format!(
            "stacked channel matrix {}x{} is not of full column rank",
            h.nrows(),
            k
        )));
    }
    let gram = h.adjoint() * h;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| CoreError::RankDeficient("channel Gram matrix is singular".into()))?;
    let w = h * inv;
    let per = total / k as f64;
    Ok((0..k)
        .map(|j| {
            let col = w.column(j).into_owned();
            let norm = col.norm();
            col * c64((per.sqrt()) / norm, 0.0)
        })
        .collect())
}

/// Projects `target` onto the orthogonal complement of the columns of
/// `ues`. Returns the projection and whether the fallback to the
/// unprojected direction was taken.
pub fn project_out(target: &CVec, ues: &[CVec]) -> (CVec, bool) {
    if ues.is_empty() {
        return (target.clone(), false);
    }
    let m = CMat::from_columns(ues);
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let mut out = target.clone();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > RANK_TOL * smax {
            let ui = u.column(i);
            let c = ui.dotc(target);
            out -= ui * c;
        }
    }
    if out.norm() <= 1e-9 * target.norm() {
        (target.clone(), true)
    } else {
        (out, false)
    }
}

/// Per node, the transmit direction toward the estimated target AoA
/// projected onto the nullspace of that node's UE channels, at power
/// `total / N`. The second value lists nodes that fell back to the
/// unprojected direction.
pub fn zf_sense_beam(targets: &[CVec], ue_channels: &[Vec<CVec>], total: f64) -> (Vec<CVec>, Vec<usize>) {
    let per = total / targets.len() as f64;
    let mut fallbacks = Vec::new();
    let beams = targets
        .iter()
        .zip(ue_channels)
        .enumerate()
        .map(|(n, (t, ues))| {
            let (dir, fallback) = project_out(t, ues);
            if fallback {
                log::warn!("node {n}: target direction lies in the UE channel span, sensing beam not projected");
                fallbacks.push(n);
            }
            let norm = dir.norm();
            if norm == 0.0 {
                dir
            } else {
                dir * c64(per.sqrt() / norm, 0.0)
            }
        })
        .collect();
    (beams, fallbacks)
}

/// `{0.05, 0.10, ..., 0.95}`.
pub fn default_rho_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZfSolution {
    pub rho: f64,
    pub comm: Vec<CVec>,
    pub sensing: Vec<CVec>,
    pub sinrs: Vec<f64>,
    /// Lower bound at the worst-case AoAs.
    pub objective: f64,
}

impl ZfSolution {
    pub fn comm_power(&self) -> f64 {
        self.comm.iter().map(|w| w.norm_squared()).sum()
    }

    pub fn sensing_power(&self) -> f64 {
        self.sensing.iter().map(|w| w.norm_squared()).sum()
    }

    pub fn sensing_covariances(&self) -> Vec<CMat> {
        self.sensing.iter().map(|w| outer(w, w)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ZfOutcome {
    Feasible(ZfSolution),
    /// No grid point met every robust SINR constraint.
    Infeasible { best_margin: f64 },
}

impl ZfOutcome {
    pub fn solution(&self) -> Option<&ZfSolution> {
        match self {
            ZfOutcome::Feasible(s) => Some(s),
            ZfOutcome::Infeasible { .. } => None,
        }
    }
}

/// ZF beams at power share `rho`, evaluated with the shared robust SINR
/// code and the lower bound of `problem`.
pub fn zf_at(problem: &RobustProblem, rho: f64) -> Result<ZfSolution> {
    let cfg = &problem.cfg;
    let p = cfg.power_budget;
    let comm = zf_comm_precoder(&problem.channels.stacked_matrix(), rho * p)?;
    let targets: Vec<CVec> = (0..cfg.num_nodes())
        .map(|n| problem.estimated.factors.links[0][n].a_t.conjugate())
        .collect();
    let (sensing, _) = zf_sense_beam(&targets, &problem.channels.per_node, (1.0 - rho) * p);
    let lifted_c: Vec<CMat> = comm.iter().map(|w| outer(w, w)).collect();
    let lifted_s: Vec<CMat> = sensing.iter().map(|w| outer(w, w)).collect();
    let sinrs = robust_sinrs(
        &lifted_c,
        &lifted_s,
        &problem.channels,
        cfg.sync_error_bound,
        cfg.comm_noise,
        cfg.numerator_mode,
    )?;
    let objective = problem.lower_bound(&lifted_s)?;
    Ok(ZfSolution {
        rho,
        comm,
        sensing,
        sinrs,
        objective,
    })
}

/// Among feasible grid points, the one with the largest lower bound; the
/// lowest `rho` wins ties.
pub fn zf_grid_search(problem: &RobustProblem, grid: &[f64]) -> Result<ZfOutcome> {
    if grid.is_empty() {
        return Err(CoreError::InvalidConfig("empty power-share grid".into()));
    }
    if let Some(bad) = grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(CoreError::InvalidConfig(format!("power share {bad} outside [0, 1]")));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let points: Vec<ZfSolution> = grid.par_iter().map(|&rho| zf_at(problem, rho)).collect::<Result<_>>()?;
    let threshold = problem.cfg.sinr_threshold;
    let margin = |s: &ZfSolution| s.sinrs.iter().map(|x| x / threshold - 1.0).fold(f64::INFINITY, f64::min);
    let mut best: Option<&ZfSolution> = None;
    for s in points.iter().filter(|s| margin(s) >= -1e-9) {
        if best.is_none_or(|b| s.objective > b.objective) {
            best = Some(s);
        }
    }
    Ok(match best {
        Some(s) => ZfOutcome::Feasible(s.clone()),
        None => ZfOutcome::Infeasible {
            best_margin: points.iter().map(margin).fold(f64::NEG_INFINITY, f64::max),
        },
    })
}
