//! Downlink Rician channels, sensing-channel factors and phase
//! synchronization impairments.
//!
//! Path loss is free space: `(lambda / (4 pi d))^2` on the downlink and
//! `lambda^2 / ((4 pi)^3 d_n^2 d_m^2)` on a sensing link. With a reference
//! range both are divided by their value at that range, which pins the
//! link budgets to the configured SNRs at the deployment radius.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{c64, sample_cn, CMat, CVec};
use crate::scenario::{GeometrySummary, ScenarioConfig};

/// Uniform linear array response, element `i` is
/// `exp(j 2 pi d0 i sin(theta) / lambda)`.
pub fn steering_vector(theta: f64, num_elements: usize, spacing: f64, wavelength: f64) -> CVec {
    let k = 2.0 * PI * spacing * theta.sin() / wavelength;
    CVec::from_fn(num_elements, |i, _| Complex64::from_polar(1.0, k * i as f64))
}

pub fn free_space_pathloss(distance: f64, wavelength: f64) -> f64 {
    (wavelength / (4.0 * PI * distance)).powi(2)
}

pub fn radar_pathloss(d_n: f64, d_m: f64, wavelength: f64) -> f64 {
    wavelength.powi(2) / ((4.0 * PI).powi(3) * d_n.powi(2) * d_m.powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub wavelength: f64,
    pub reference: Option<f64>,
}

impl PathLoss {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            wavelength: cfg.wavelength,
            reference: cfg.pathloss_reference,
        }
    }

    pub fn downlink(&self, d: f64) -> f64 {
        let raw = free_space_pathloss(d, self.wavelength);
        match self.reference {
            Some(r) => raw / free_space_pathloss(r, self.wavelength),
            None => raw,
        }
    }

    pub fn sensing(&self, d_n: f64, d_m: f64) -> f64 {
        let raw = radar_pathloss(d_n, d_m, self.wavelength);
        match self.reference {
            Some(r) => raw / radar_pathloss(r, r, self.wavelength),
            None => raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownlinkChannelSet {
    /// `[node][ue]`, each of length `M_t`.
    pub per_node: Vec<Vec<CVec>>,
    pub pathloss: Vec<Vec<f64>>,
    /// Per UE, the node blocks concatenated in node order.
    pub stacked: Vec<CVec>,
}

impl DownlinkChannelSet {
    pub fn from_per_node(per_node: Vec<Vec<CVec>>, pathloss: Vec<Vec<f64>>) -> Self {
        let k = per_node.first().map_or(0, |row| row.len());
        let stacked = (0..k)
            .map(|u| {
                let parts: Vec<Complex64> = per_node
                    .iter()
                    .flat_map(|row| row[u].iter().copied())
                    .collect();
                CVec::from_vec(parts)
            })
            .collect();
        Self {
            per_node,
            pathloss,
            stacked,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.per_node.len()
    }

    pub fn num_ues(&self) -> usize {
        self.stacked.len()
    }

    /// Stacked channels as columns of an `(N M_t) x K` matrix.
    pub fn stacked_matrix(&self) -> CMat {
        let rows = self.stacked.first().map_or(0, |h| h.len());
        CMat::from_fn(rows, self.num_ues(), |r, c| self.stacked[c][r])
    }
}

fn rician_weights(gamma: f64) -> (f64, f64) {
    if gamma.is_infinite() {
        (1.0, 0.0)
    } else {
        ((gamma / (gamma + 1.0)).sqrt(), (1.0 / (gamma + 1.0)).sqrt())
    }
}

pub fn draw_downlink_channels<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    geometry: &GeometrySummary,
    rng: &mut R,
) -> DownlinkChannelSet {
    let pl = PathLoss::from_config(cfg);
    let (los, nlos) = rician_weights(cfg.rician_factor);
    let mut per_node = Vec::with_capacity(cfg.num_nodes());
    let mut losses = Vec::with_capacity(cfg.num_nodes());
    for n in 0..cfg.num_nodes() {
        let mut row = Vec::with_capacity(cfg.num_ues());
        let mut lrow = Vec::with_capacity(cfg.num_ues());
        for k in 0..cfg.num_ues() {
            let d = geometry.ue_range[n][k];
            let ell = pl.downlink(d);
            let phase = Complex64::from_polar(1.0, -2.0 * PI * d / cfg.wavelength);
            let a = steering_vector(geometry.ue_aoa[n][k], cfg.tx_antennas, cfg.antenna_spacing, cfg.wavelength);
            let scatter = sample_cn(rng, cfg.tx_antennas);
            let h = (a * (phase * los) + scatter * c64(nlos, 0.0)) * c64(ell.sqrt(), 0.0);
            row.push(h);
            lrow.push(ell);
        }
        per_node.push(row);
        losses.push(lrow);
    }
    DownlinkChannelSet::from_per_node(per_node, losses)
}

/// Residual synchronization phase applied to a node's channel.
pub fn apply_sync_error(h: &CVec, phi: f64) -> CVec {
    h * Complex64::from_polar(1.0, phi)
}

/// Nominal sensing link from transmitter `m` to receiver `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingLink {
    /// Large-scale factor with round-trip phase; `|l|^2 = p`.
    pub l: Complex64,
    pub p: f64,
    pub a_r: CVec,
    pub a_t: CVec,
}

impl SensingLink {
    /// `a_r a_t^T`.
    pub fn a(&self) -> CMat {
        &self.a_r * self.a_t.transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingChannelFactors {
    /// `[receiver n][transmitter m]`.
    pub links: Vec<Vec<SensingLink>>,
    /// Coherent-gain loss `1 - 2 delta`.
    pub shrinkage: f64,
    /// Arrival angles the factors were built for, relative to broadside.
    pub aoa: Vec<f64>,
}

impl SensingChannelFactors {
    pub fn num_nodes(&self) -> usize {
        self.links.len()
    }

    /// `G = shrinkage * L * beta * A` for one link and RCS draw.
    pub fn effective(&self, n: usize, m: usize, beta: f64) -> CMat {
        let link = &self.links[n][m];
        link.a() * (link.l * (self.shrinkage * beta))
    }
}

pub fn nominal_sensing_factors(
    cfg: &ScenarioConfig,
    geometry: &GeometrySummary,
    aoa: &[f64],
) -> Result<SensingChannelFactors> {
    let n = cfg.num_nodes();
    if aoa.len() != n {
        return Err(CoreError::Dimension(format!("expected {n} AoAs, got {}", aoa.len())));
    }
    if geometry.target_range.iter().any(|&r| !(r > 1e-9)) {
        return Err(CoreError::DegenerateGeometry("zero node-target range".into()));
    }
    let pl = PathLoss::from_config(cfg);
    let a_r: Vec<CVec> = aoa
        .iter()
        .map(|&t| steering_vector(t, cfg.rx_antennas, cfg.antenna_spacing, cfg.wavelength))
        .collect();
    let a_t: Vec<CVec> = aoa
        .iter()
        .map(|&t| steering_vector(t, cfg.tx_antennas, cfg.antenna_spacing, cfg.wavelength))
        .collect();
    let links = (0..n)
        .map(|rx| {
            (0..n)
                .map(|tx| {
                    let (dn, dm) = (geometry.target_range[rx], geometry.target_range[tx]);
                    let p = pl.sensing(dn, dm);
                    SensingLink {
                        l: Complex64::from_polar(p.sqrt(), -2.0 * PI * (dn + dm) / cfg.wavelength),
                        p,
                        a_r: a_r[rx].clone(),
                        a_t: a_t[tx].clone(),
                    }
                })
                .collect()
        })
        .collect();
    Ok(SensingChannelFactors {
        links,
        shrinkage: 1.0 - 2.0 * cfg.sync_error_bound,
        aoa: aoa.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steering_examples() {
        let lambda = 0.03;
        let a = steering_vector(0.0, 4, lambda / 2.0, lambda);
        assert!(a.iter().all(|z| (z - c64(1.0, 0.0)).norm() < 1e-15));
        let a = steering_vector(PI / 2.0, 2, lambda / 2.0, lambda);
        assert!((a[1] - c64(-1.0, 0.0)).norm() < 1e-12);
        let a = steering_vector(30f64.to_radians(), 3, lambda / 2.0, lambda);
        for (i, want) in [0.0, PI / 2.0, PI].iter().enumerate() {
            assert!((a[i] - Complex64::from_polar(1.0, *want)).norm() < 1e-12);
        }
    }

    #[test]
    fn free_space_values() {
        assert!((free_space_pathloss(100.0, 0.03) / 5.70e-10 - 1.0).abs() < 2e-3);
        // 9e-4 / (1984.40 * 1e8)
        assert!((radar_pathloss(100.0, 100.0, 0.03) / 4.5353e-15 - 1.0).abs() < 1e-3);
        let pl = PathLoss { wavelength: 0.03, reference: Some(100.0) };
        assert!((pl.downlink(100.0) - 1.0).abs() < 1e-12);
        assert!((pl.sensing(100.0, 100.0) - 1.0).abs() < 1e-12);
        assert!((pl.downlink(200.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sync_error_examples() {
        let h = CVec::from_vec(vec![c64(1.0, 2.0), c64(-0.5, 0.1)]);
        assert_eq!(apply_sync_error(&h, 0.0), h);
        assert!((apply_sync_error(&h, PI) + &h).norm() < 1e-15);
        assert!((apply_sync_error(&h, 0.3).norm() - h.norm()).abs() < 1e-14);
    }
}
