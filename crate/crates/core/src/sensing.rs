//! Second-order statistics of the sensing hypotheses and the KLD objective.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_vector, SensingChannelFactors};
use crate::error::{CoreError, Result};
use crate::linalg::{cholesky, chol_log_det, hermitize, outer, BlockDiag, CMat};
use crate::rcs::RcsStatistics;
use crate::scenario::{GeometrySummary, ScenarioConfig};

/// Clutter covariance per link `[n][m]`: a sum of point scatterers
/// `p a_r(theta) a_r(theta)^H` around the estimated target azimuth at
/// receiver `n`.
pub fn build_clutter_covariance(cfg: &ScenarioConfig, geometry: &GeometrySummary) -> Result<Vec<Vec<CMat>>> {
    let n = cfg.num_nodes();
    let mr = cfg.rx_antennas;
    let mut out = vec![vec![CMat::zeros(mr, mr); n]; n];
    for c in &cfg.clutter {
        if c.power < 0.0 {
            return Err(CoreError::InvalidConfig(format!("negative clutter power {}", c.power)));
        }
    }
    for (rx, row) in out.iter_mut().enumerate() {
        for (tx, r) in row.iter_mut().enumerate() {
            for c in cfg.clutter.iter().filter(|c| c.applies_to(rx, tx)) {
                let a = steering_vector(
                    geometry.target_aoa[rx] + c.offset,
                    mr,
                    cfg.antenna_spacing,
                    cfg.wavelength,
                );
                *r += outer(&a, &a).scale(c.power);
            }
        }
    }
    Ok(out)
}

/// `R0` with blocks `sum_m R_clu[n][m] + sigma_s^2 I`.
pub fn noise_clutter_covariance(cfg: &ScenarioConfig, geometry: &GeometrySummary) -> Result<BlockDiag> {
    let clutter = build_clutter_covariance(cfg, geometry)?;
    let mr = cfg.rx_antennas;
    Ok(BlockDiag::new(
        clutter
            .iter()
            .map(|row| {
                let mut b = CMat::identity(mr, mr).scale(cfg.sensing_noise);
                for r in row {
                    b += r;
                }
                b
            })
            .collect(),
    ))
}

/// Target covariance for one RCS draw `beta[n][m]`:
/// block `n` is `sum_m G W_m G^H` with `G = shrinkage L beta A`.
pub fn target_covariance_draw(
    factors: &SensingChannelFactors,
    beta: &[Vec<f64>],
    ws: &[CMat],
) -> BlockDiag {
    let n = factors.num_nodes();
    BlockDiag::new(
        (0..n)
            .map(|rx| {
                let mr = factors.links[rx][0].a_r.len();
                let mut b = CMat::zeros(mr, mr);
                for (tx, w) in ws.iter().enumerate() {
                    let g = factors.effective(rx, tx, beta[rx][tx]);
                    b += &g * w * g.adjoint();
                }
                hermitize(&b)
            })
            .collect(),
    )
}

/// `E[Rs]`: block `n` is
/// `shrinkage^2 sum_m |L|^2 (mu^2 + nu^2) A W_m A^H`.
pub fn expected_target_covariance(
    factors: &SensingChannelFactors,
    stats: &RcsStatistics,
    ws: &[CMat],
) -> BlockDiag {
    let n = factors.num_nodes();
    let s2 = factors.shrinkage * factors.shrinkage;
    BlockDiag::new(
        (0..n)
            .map(|rx| {
                let mr = factors.links[rx][0].a_r.len();
                let mut b = CMat::zeros(mr, mr);
                for (tx, w) in ws.iter().enumerate() {
                    let link = &factors.links[rx][tx];
                    let a = link.a();
                    b += (&a * w * a.adjoint()).scale(s2 * link.l.norm_sqr() * stats.m2(rx, tx));
                }
                hermitize(&b)
            })
            .collect(),
    )
}

/// `log|R0| - log|R1| + tr(R0^-1 R1) - dim` from Cholesky factors of both
/// matrices; the trace is `||L0^-1 L1||_F^2`.
pub fn kld(r0: &CMat, r1: &CMat) -> Result<f64> {
    if r0.shape() != r1.shape() {
        return Err(CoreError::Dimension(format!(
            "covariances {:?} and {:?}",
            r0.shape(),
            r1.shape()
        )));
    }
    let c0 = cholesky(r0, "R0")?;
    let c1 = cholesky(r1, "R1")?;
    let x = c0
        .l()
        .solve_lower_triangular(&c1.l())
        .ok_or_else(|| CoreError::NotPositiveDefinite("R0 factor is singular".into()))?;
    Ok(chol_log_det(&c0) - chol_log_det(&c1) + x.norm_squared() - r0.nrows() as f64)
}

/// Sum of per-block divergences, equal to the divergence of the dense
/// block-diagonal matrices.
pub fn kld_blocks(r0: &BlockDiag, r1: &BlockDiag) -> Result<f64> {
    if r0.blocks.len() != r1.blocks.len() {
        return Err(CoreError::Dimension("block counts differ".into()));
    }
    r0.blocks.iter().zip(&r1.blocks).map(|(a, b)| kld(a, b)).sum()
}

/// Jensen lower bound: the divergence at `R0 + E[Rs]`.
pub fn lower_bound_objective(r0: &BlockDiag, expected_rs: &BlockDiag) -> Result<f64> {
    kld_blocks(r0, &r0.add(expected_rs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KldSpread {
    pub mean: f64,
    pub p10: f64,
    pub p90: f64,
    pub std_dev: f64,
}

impl KldSpread {
    pub fn from_samples(samples: &[f64]) -> Self {
        let s = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / s;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s - 1.0)
        } else {
            0.0
        };
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean,
            p10: percentile(&sorted, 0.10),
            p90: percentile(&sorted, 0.90),
            std_dev: var.sqrt(),
        }
    }

    pub fn width(&self) -> f64 {
        self.p90 - self.p10
    }
}

/// Linear-interpolated percentile of already sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

/// Per-draw divergences `kld(R0, R0 + Rs(beta_s))` over `samples` RCS draws.
pub fn kld_samples<R: Rng + ?Sized>(
    r0: &BlockDiag,
    factors: &SensingChannelFactors,
    stats: &RcsStatistics,
    ws: &[CMat],
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    (0..samples)
        .map(|_| {
            let beta = stats.sample(rng);
            let rs = target_covariance_draw(factors, &beta, ws);
            kld_blocks(r0, &r0.add(&rs))
        })
        .collect()
}

pub fn expected_kld_monte_carlo<R: Rng + ?Sized>(
    r0: &BlockDiag,
    factors: &SensingChannelFactors,
    stats: &RcsStatistics,
    ws: &[CMat],
    samples: usize,
    rng: &mut R,
) -> Result<KldSpread> {
    if samples == 0 {
        return Err(CoreError::InvalidConfig("at least one RCS sample is required".into()));
    }
    Ok(KldSpread::from_samples(&kld_samples(r0, factors, stats, ws, samples, rng)?))
}
