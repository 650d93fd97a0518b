//! Worst-case SINR under bounded CSI error.
//!
//! Channel errors live in balls: the stacked error of UE `k` has norm at
//! most `sqrt(N) delta`, each node block at most `delta`. For interference
//! from a PSD `W` the worst case over a ball of radius `r` is bounded by
//! `h^H W h + r^2 tr(W) + r (||W h|| + ||h^H W||)`.

use serde::{Deserialize, Serialize};

use crate::channel::DownlinkChannelSet;
use crate::error::{CoreError, Result};
use crate::linalg::{eigh_desc, outer, sqrt_psd, CMat, CVec};
use crate::scenario::NumeratorMode;

const NORM_AGREEMENT: f64 = 1e-10;

/// `Q = h h^H`.
pub fn q_matrix(h: &CVec) -> CMat {
    outer(h, h)
}

/// `tr(Q W) = h^H W h`.
pub fn quadratic(h: &CVec, w: &CMat) -> f64 {
    (h.adjoint() * w * h)[(0, 0)].re
}

/// Worst-case desired signal as used by the optimizer: the value at zero
/// channel error, `tr(Q_k W_k)`.
pub fn worst_case_signal(q_k: &CMat, w_k: &CMat) -> f64 {
    (q_k * w_k).trace().re
}

/// `(max(0, ||W^{1/2} h|| - r sqrt(lambda_max(W))))^2`, which reduces to
/// `(max(0, |h^H w| - r ||w||))^2` for `W = w w^H` and lower-bounds the
/// desired power over the error ball.
pub fn conservative_signal(h: &CVec, w: &CMat, radius: f64) -> f64 {
    let root = sqrt_psd(w);
    let lmax = eigh_desc(w).0[0].max(0.0);
    ((&root * h).norm() - radius * lmax.sqrt()).max(0.0).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceTerms {
    /// Interference at zero channel error.
    pub nominal: f64,
    /// Additional worst-case terms driven by `delta`.
    pub uncertainty: f64,
    pub noise: f64,
}

impl InterferenceTerms {
    pub fn total(&self) -> f64 {
        self.nominal + self.uncertainty + self.noise
    }
}

/// `r^2 tr(W) + r (||W h|| + ||h^H W||)`; both norms are computed and must
/// agree, which holds exactly for Hermitian `W`.
fn ball_terms(h: &CVec, w: &CMat, radius: f64) -> Result<f64> {
    let wh = (w * h).norm();
    let hw = (h.adjoint() * w).norm();
    if (wh - hw).abs() > NORM_AGREEMENT * (1.0 + wh.max(hw)) {
        return Err(CoreError::NotHermitian(format!(
            "||W h|| = {wh:.6e} but ||h^H W|| = {hw:.6e}"
        )));
    }
    Ok(radius * radius * w.trace().re + radius * (wh + hw))
}

/// Worst-case interference at UE `k` from the other UEs' lifted beams
/// `comm_others` and the per-node sensing covariances `sensing`.
pub fn worst_case_interference(
    h_k: &CVec,
    comm_others: &[&CMat],
    h_nodes: &[CVec],
    sensing: &[CMat],
    delta: f64,
    noise: f64,
) -> Result<InterferenceTerms> {
    if h_nodes.len() != sensing.len() {
        return Err(CoreError::Dimension(format!(
            "{} channel blocks for {} sensing covariances",
            h_nodes.len(),
            sensing.len()
        )));
    }
    let r_comm = (h_nodes.len() as f64).sqrt() * delta;
    let mut terms = InterferenceTerms {
        nominal: 0.0,
        uncertainty: 0.0,
        noise,
    };
    for w in comm_others {
        terms.nominal += quadratic(h_k, w);
        terms.uncertainty += ball_terms(h_k, w, r_comm)?;
    }
    for (h, w) in h_nodes.iter().zip(sensing) {
        terms.nominal += quadratic(h, w);
        terms.uncertainty += ball_terms(h, w, delta)?;
    }
    Ok(terms)
}

pub fn robust_signal(
    k: usize,
    comm: &[CMat],
    channels: &DownlinkChannelSet,
    delta: f64,
    mode: NumeratorMode,
) -> f64 {
    let h = &channels.stacked[k];
    match mode {
        NumeratorMode::Nominal => quadratic(h, &comm[k]),
        NumeratorMode::Conservative => {
            conservative_signal(h, &comm[k], (channels.num_nodes() as f64).sqrt() * delta)
        }
    }
}

pub fn interference_at(
    k: usize,
    comm: &[CMat],
    sensing: &[CMat],
    channels: &DownlinkChannelSet,
    delta: f64,
    noise: f64,
) -> Result<InterferenceTerms> {
    let others: Vec<&CMat> = comm
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, w)| w)
        .collect();
    let h_nodes: Vec<CVec> = channels.per_node.iter().map(|row| row[k].clone()).collect();
    worst_case_interference(&channels.stacked[k], &others, &h_nodes, sensing, delta, noise)
}

pub fn robust_sinr_value(
    k: usize,
    comm: &[CMat],
    sensing: &[CMat],
    channels: &DownlinkChannelSet,
    delta: f64,
    noise: f64,
    mode: NumeratorMode,
) -> Result<f64> {
    let den = interference_at(k, comm, sensing, channels, delta, noise)?.total();
    Ok(robust_signal(k, comm, channels, delta, mode) / den)
}

pub fn robust_sinrs(
    comm: &[CMat],
    sensing: &[CMat],
    channels: &DownlinkChannelSet,
    delta: f64,
    noise: f64,
    mode: NumeratorMode,
) -> Result<Vec<f64>> {
    (0..channels.num_ues())
        .map(|k| robust_sinr_value(k, comm, sensing, channels, delta, noise, mode))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn matched_projection_gives_channel_gain() {
        let h = CVec::from_vec(vec![c64(1.0, -0.5), c64(0.3, 2.0)]);
        let w = outer(&h, &h).scale(1.0 / h.norm_squared());
        assert!((worst_case_signal(&q_matrix(&h), &w) - h.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn conservative_rank_one_form() {
        let h = CVec::from_vec(vec![c64(1.0, 0.2), c64(-0.4, 0.9)]);
        let w = CVec::from_vec(vec![c64(0.5, 0.5), c64(0.1, -0.3)]);
        let r = 0.05;
        let want = ((h.dotc(&w)).norm() - r * w.norm()).max(0.0).powi(2);
        assert!((conservative_signal(&h, &outer(&w, &w), r) - want).abs() < 1e-12);
    }
}
