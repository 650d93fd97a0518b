//! Assembly of the per-iteration convex surrogate as a [`ConicProgram`].
//!
//! Variables are the lifted communication beams `Wc[k]` over the stacked
//! array, the per-node sensing covariances `Ws[n]`, the aggregate sensing
//! covariance `Z` and nonnegative auxiliaries bounding the norm terms of the
//! robust SINR. The objective is the linearized lower bound
//! `tr((R0^-1 - Zprev^-1) Z)` plus the constant that makes it equal to the
//! surrogate value.

use disac_conic::{
    AffineExpr, Constraint, ConicProgram, HermitianVar, LinExpr, SolveReport, VarId,
};
use serde::{Deserialize, Serialize};

use crate::channel::{DownlinkChannelSet, SensingChannelFactors};
use crate::error::{CoreError, Result};
use crate::linalg::{outer, BlockDiag, CMat};
use crate::rcs::RcsStatistics;
use crate::robust_sinr::q_matrix;
use crate::scenario::{PowerMode, ScenarioConfig};

/// Model data the surrogate is built from.
#[derive(Debug, Clone, Copy)]
pub struct P3Data<'a> {
    pub cfg: &'a ScenarioConfig,
    pub channels: &'a DownlinkChannelSet,
    pub factors: &'a SensingChannelFactors,
    pub stats: &'a RcsStatistics,
    pub r0: &'a BlockDiag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct P3Layout {
    pub wc: Vec<HermitianVar>,
    pub ws: Vec<HermitianVar>,
    pub z: HermitianVar,
    /// `t[k][j]` bounds `||Wc[j] h_k||`, absent on the diagonal.
    pub t: Vec<Vec<Option<VarId>>>,
    /// `u[n][k]` bounds `||Ws[n] h_{n,k}||`.
    pub u: Vec<Vec<VarId>>,
    /// `a_t^T Ws[m] conj(a_t)` per transmitting node.
    pub g: Vec<VarId>,
    pub nodes: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
}

#[derive(Debug, Clone)]
pub struct P3Program {
    pub program: ConicProgram,
    pub layout: P3Layout,
}

/// Lifted point read back from a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedSolution {
    pub wc: Vec<CMat>,
    pub ws: Vec<CMat>,
    pub z: CMat,
}

pub const POWER_PREFIX: &str = "power";

fn validate_data(data: &P3Data, z_prev: &BlockDiag) -> Result<()> {
    let cfg = data.cfg;
    let (n, k) = (cfg.num_nodes(), cfg.num_ues());
    let dim_err = |what: &str| Err(CoreError::Dimension(what.to_string()));
    if data.channels.num_nodes() != n || data.channels.num_ues() != k {
        return dim_err("channel set does not match the scenario");
    }
    if data.channels.stacked.iter().any(|h| h.len() != n * cfg.tx_antennas) {
        return dim_err("stacked channel length differs from N * M_t");
    }
    if data.factors.num_nodes() != n || data.stats.links.len() != n {
        return dim_err("sensing factors do not match the node count");
    }
    for bd in [data.r0, z_prev] {
        if bd.blocks.len() != n || bd.blocks.iter().any(|b| b.nrows() != cfg.rx_antennas) {
            return dim_err("covariance blocks do not match N x M_r");
        }
    }
    Ok(())
}

/// Builds the surrogate at `z_prev` with the power constraint selected by
/// `cfg.power_mode`.
pub fn assemble_p3(data: &P3Data, z_prev: &BlockDiag) -> Result<P3Program> {
    validate_data(data, z_prev)?;
    let cfg = data.cfg;
    let (n, k, mt, mr) = (cfg.num_nodes(), cfg.num_ues(), cfg.tx_antennas, cfg.rx_antennas);
    let delta = cfg.sync_error_bound;
    let noise = cfg.comm_noise;
    let gamma = cfg.sinr_threshold;

    let mut program = ConicProgram::new("p3");
    let wc: Vec<HermitianVar> = (0..k)
        .map(|i| HermitianVar::new(program.add_psd(format!("Wc[{i}]"), 2 * n * mt), n * mt))
        .collect();
    let ws: Vec<HermitianVar> = (0..n)
        .map(|i| HermitianVar::new(program.add_psd(format!("Ws[{i}]"), 2 * mt), mt))
        .collect();
    let z = HermitianVar::new(program.add_psd("Z", 2 * n * mr), n * mr);
    let t: Vec<Vec<Option<VarId>>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| (a != b).then(|| program.add_nonnegative(format!("t[{a},{b}]"))))
                .collect()
        })
        .collect();
    let u: Vec<Vec<VarId>> = (0..n)
        .map(|node| {
            (0..k)
                .map(|ue| program.add_nonnegative(format!("u[{node},{ue}]")))
                .collect()
        })
        .collect();

    // objective
    let r0_inv = data.r0.inverse("R0")?;
    let zp_inv = z_prev.inverse("Z_prev")?;
    let coef = r0_inv.add(&zp_inv.scale(-1.0)).to_dense();
    let constant = data.r0.log_det("R0")? - z_prev.log_det("Z_prev")?;
    program.set_objective(z.trace_with(&coef), constant);

    // Z = R0 + E[Rs](Ws), using the rank-one structure of each A[n][m]:
    // A W A^H = (a_t^T W conj(a_t)) a_r a_r^H.
    // The quadratic form depends on the transmitter only, so it is carried
    // by one free scalar per node and the Z rows stay sparse.
    let g: Vec<VarId> = (0..n).map(|m| program.add_free(format!("g[{m}]"))).collect();
    let gains: Vec<LinExpr> = g.iter().map(|&id| LinExpr::scalar(id, 1.0)).collect();
    for m in 0..n {
        let v = data.factors.links[0][m].a_t.conjugate();
        let mut row = ws[m].trace_with(&outer(&v, &v));
        row.add_scalar(g[m], -1.0);
        program.add_constraint(format!("gain[{m}]"), Constraint::Equal(row.into()));
    }
    let s2 = data.factors.shrinkage.powi(2);
    let r0_dense = data.r0.to_dense();
    for i in 0..n * mr {
        for j in i..n * mr {
            let (bi, bj) = (i / mr, j / mr);
            let mut re = z.re(i, j);
            let mut im = z.im(i, j);
            if bi == bj {
                let rx = bi;
                for (tx, g) in gains.iter().enumerate() {
                    let link = &data.factors.links[rx][tx];
                    let scale = s2 * link.p * data.stats.m2(rx, tx);
                    let e = link.a_r[i % mr] * link.a_r[j % mr].conj() * scale;
                    re.add_expr(g, -e.re);
                    im.add_expr(g, -e.im);
                }
            }
            let r = r0_dense[(i, j)];
            program.add_constraint(format!("z_re[{i},{j}]"), Constraint::Equal(AffineExpr::new(re, -r.re)));
            if i != j {
                program.add_constraint(format!("z_im[{i},{j}]"), Constraint::Equal(AffineExpr::new(im, -r.im)));
            }
        }
    }

    // robust SINR, scaled by 1 / sigma_c^2
    let r_comm = (n as f64).sqrt() * delta;
    let inv_noise = 1.0 / noise;
    for ue in 0..k {
        let h = &data.channels.stacked[ue];
        let q = q_matrix(h);
        let mut row = LinExpr::new();
        for j in 0..k {
            if j == ue {
                wc[j].add_trace_with(&mut row, &q, -inv_noise);
                continue;
            }
            let g = gamma * inv_noise;
            wc[j].add_trace_with(&mut row, &q, g);
            wc[j].add_trace(&mut row, g * r_comm * r_comm);
            row.add_scalar(t[ue][j].expect("off-diagonal auxiliary"), g * 2.0 * r_comm);
        }
        for node in 0..n {
            let hn = &data.channels.per_node[node][ue];
            let g = gamma * inv_noise;
            ws[node].add_trace_with(&mut row, &q_matrix(hn), g);
            ws[node].add_trace(&mut row, g * delta * delta);
            row.add_scalar(u[node][ue], g * 2.0 * delta);
        }
        program.add_constraint(format!("sinr[{ue}]"), Constraint::LessEqual(AffineExpr::new(row, gamma)));
        for j in (0..k).filter(|&j| j != ue) {
            program.add_constraint(
                format!("soc_t[{ue},{j}]"),
                Constraint::SecondOrderCone {
                    bound: LinExpr::scalar(t[ue][j].expect("off-diagonal auxiliary"), 1.0).into(),
                    vector: wc[j].mat_vec(h).into_iter().map(AffineExpr::from).collect(),
                },
            );
        }
        for node in 0..n {
            let hn = &data.channels.per_node[node][ue];
            program.add_constraint(
                format!("soc_u[{node},{ue}]"),
                Constraint::SecondOrderCone {
                    bound: LinExpr::scalar(u[node][ue], 1.0).into(),
                    vector: ws[node].mat_vec(hn).into_iter().map(AffineExpr::from).collect(),
                },
            );
        }
    }

    let layout = P3Layout {
        wc,
        ws,
        z,
        t,
        u,
        g,
        nodes: n,
        tx_antennas: mt,
        rx_antennas: mr,
    };
    for (label, c) in power_constraints(&layout, cfg.power_mode, cfg.power_budget) {
        program.add_constraint(label, c);
    }
    Ok(P3Program { program, layout })
}

/// Power constraints for `mode`, labelled with [`POWER_PREFIX`].
pub fn power_constraints(layout: &P3Layout, mode: PowerMode, budget: f64) -> Vec<(String, Constraint)> {
    let (n, mt) = (layout.nodes, layout.tx_antennas);
    let le = |e: LinExpr, b: f64| Constraint::LessEqual(AffineExpr::new(e, -b));
    match mode {
        PowerMode::TotalSystem => {
            let mut e = LinExpr::new();
            layout.wc.iter().chain(&layout.ws).for_each(|w| w.add_trace(&mut e, 1.0));
            vec![(format!("{POWER_PREFIX}_total"), le(e, budget))]
        }
        PowerMode::PerNode => (0..n)
            .map(|node| {
                let mut e = LinExpr::new();
                for w in &layout.wc {
                    (0..mt).for_each(|a| w.add_re(&mut e, node * mt + a, node * mt + a, 1.0));
                }
                layout.ws[node].add_trace(&mut e, 1.0);
                (format!("{POWER_PREFIX}_node[{node}]"), le(e, budget / n as f64))
            })
            .collect(),
        PowerMode::PerAntenna => (0..n)
            .flat_map(|node| (0..mt).map(move |a| (node, a)))
            .map(|(node, a)| {
                let mut e = LinExpr::new();
                let i = node * mt + a;
                layout.wc.iter().for_each(|w| w.add_re(&mut e, i, i, 1.0));
                layout.ws[node].add_re(&mut e, a, a, 1.0);
                (
                    format!("{POWER_PREFIX}_antenna[{node},{a}]"),
                    le(e, budget / (n * mt) as f64),
                )
            })
            .collect(),
    }
}

/// Replaces the power constraints of an assembled surrogate.
pub fn alternative_power_constraints(p3: &P3Program, mode: PowerMode, budget: f64) -> P3Program {
    let mut out = p3.clone();
    out.program.remove_constraints(POWER_PREFIX);
    for (label, c) in power_constraints(&out.layout, mode, budget) {
        out.program.add_constraint(label, c);
    }
    out
}

impl P3Program {
    pub fn extract(&self, report: &SolveReport) -> Result<LiftedSolution> {
        let mat = |h: &HermitianVar| -> Result<CMat> {
            let y = report.values[h.var.0]
                .as_matrix()
                .ok_or_else(|| CoreError::Dimension("expected a matrix value".into()))?;
            Ok(h.value(y))
        };
        Ok(LiftedSolution {
            wc: self.layout.wc.iter().map(mat).collect::<Result<_>>()?,
            ws: self.layout.ws.iter().map(mat).collect::<Result<_>>()?,
            z: mat(&self.layout.z)?,
        })
    }

    /// Linear part of the objective at a solution, `Re tr((R0^-1 - Zprev^-1) Z)`.
    pub fn linear_objective(&self, report: &SolveReport) -> f64 {
        self.program.objective().evaluate(&report.values)
    }
}

/// Variable bookkeeping of the surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofAccount {
    /// `K (N M_t)^2 + N M_t^2 + (N M_r)^2`.
    pub reference_count: usize,
    /// Real degrees of freedom of the Hermitian variables as declared.
    pub hermitian_dof: usize,
    /// Real scalars handed to the solver, including embedding redundancy
    /// and auxiliaries.
    pub solver_scalars: usize,
    pub soc_auxiliaries: usize,
    pub gain_auxiliaries: usize,
    pub constraints: usize,
}

pub fn dof_account(p3: &P3Program, num_ues: usize) -> DofAccount {
    let l = &p3.layout;
    let (n, mt, mr) = (l.nodes, l.tx_antennas, l.rx_antennas);
    let hermitian_dof = l.wc.iter().chain(&l.ws).chain(std::iter::once(&l.z)).map(|h| h.n * h.n).sum();
    DofAccount {
        reference_count: num_ues * (n * mt).pow(2) + n * mt * mt + (n * mr).pow(2),
        hermitian_dof,
        solver_scalars: p3.program.scalar_count(),
        soc_auxiliaries: num_ues * (num_ues - 1) + n * num_ues,
        gain_auxiliaries: l.g.len(),
        constraints: p3.program.constraints().len(),
    }
}
