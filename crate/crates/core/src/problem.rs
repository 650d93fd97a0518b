//! One scenario draw with everything the optimizer, the benchmark and the
//! detection harness share.

use serde::{Deserialize, Serialize};

use crate::channel::{draw_downlink_channels, nominal_sensing_factors, DownlinkChannelSet, SensingChannelFactors};
use crate::error::Result;
use crate::linalg::{c64, BlockDiag, CMat};
use crate::optimizer::select_worst_case_aoa;
use crate::p3::P3Data;
use crate::rcs::RcsStatistics;
use crate::scenario::{derive_geometry, GeometrySummary, ScenarioConfig};
use crate::sensing::{expected_target_covariance, lower_bound_objective, noise_clutter_covariance};

/// Sensing factors and RCS moments for one choice of target AoAs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingModel {
    pub aoa: Vec<f64>,
    pub factors: SensingChannelFactors,
    pub stats: RcsStatistics,
}

impl SensingModel {
    pub fn build(cfg: &ScenarioConfig, geometry: &GeometrySummary, aoa: &[f64]) -> Result<Self> {
        let factors = nominal_sensing_factors(cfg, geometry, aoa)?;
        let azimuths: Vec<f64> = aoa.iter().map(|a| a + cfg.broadside).collect();
        let stats = RcsStatistics::build(&cfg.rcs_profile, cfg.rcs_model, &azimuths, cfg.target_heading);
        Ok(Self {
            aoa: aoa.to_vec(),
            factors,
            stats,
        })
    }

    pub fn expected_rs(&self, ws: &[CMat]) -> BlockDiag {
        expected_target_covariance(&self.factors, &self.stats, ws)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustProblem {
    pub cfg: ScenarioConfig,
    pub geometry: GeometrySummary,
    pub channels: DownlinkChannelSet,
    pub r0: BlockDiag,
    /// Model at the estimated AoAs.
    pub estimated: SensingModel,
    /// Model at the worst-case AoAs the design is optimized for.
    pub worst_case: SensingModel,
}

impl RobustProblem {
    /// Validates `cfg`, draws the downlink channels from the seed's
    /// `downlink` stream and selects the worst-case AoAs.
    pub fn build(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let geometry = derive_geometry(&cfg)?;
        let channels = draw_downlink_channels(&cfg, &geometry, &mut cfg.rng("downlink"));
        Self::with_channels(cfg, channels)
    }

    pub fn with_channels(cfg: ScenarioConfig, channels: DownlinkChannelSet) -> Result<Self> {
        cfg.validate()?;
        let geometry = derive_geometry(&cfg)?;
        let r0 = noise_clutter_covariance(&cfg, &geometry)?;
        let estimated = SensingModel::build(&cfg, &geometry, &geometry.target_aoa)?;
        let aoa = select_worst_case_aoa(&cfg, &geometry, &r0, cfg.optimizer.aoa_grid_points)?;
        let worst_case = SensingModel::build(&cfg, &geometry, &aoa)?;
        Ok(Self {
            cfg,
            geometry,
            channels,
            r0,
            estimated,
            worst_case,
        })
    }

    pub fn p3_data(&self) -> P3Data<'_> {
        P3Data {
            cfg: &self.cfg,
            channels: &self.channels,
            factors: &self.worst_case.factors,
            stats: &self.worst_case.stats,
            r0: &self.r0,
        }
    }

    /// `total_power` spread evenly over every node and transmit antenna.
    pub fn isotropic_sensing(&self, total_power: f64) -> Vec<CMat> {
        isotropic_sensing(&self.cfg, total_power)
    }

    /// Jensen lower bound at the worst-case AoAs.
    pub fn lower_bound(&self, ws: &[CMat]) -> Result<f64> {
        lower_bound_objective(&self.r0, &self.worst_case.expected_rs(ws))
    }
}

pub fn isotropic_sensing(cfg: &ScenarioConfig, total_power: f64) -> Vec<CMat> {
    let mt = cfg.tx_antennas;
    let per = total_power / (cfg.num_nodes() * mt) as f64;
    vec![CMat::identity(mt, mt) * c64(per, 0.0); cfg.num_nodes()]
}
