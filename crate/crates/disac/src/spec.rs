//! Experiment spec files.
//!
//! A spec is a TOML file naming the experiment kind, the scenario it starts
//! from and the sweep. Every sweep list is optional and falls back to a
//! per-kind default, so `kind = "tradeoff"` alone is a valid spec.
//!
//! ```toml
//! kind = "detection"
//! seeds = [1, 2, 3]
//! gamma_db = [0.0, 10.0]
//! delta = [0.01, 0.05]
//!
//! [scenario]
//! snapshots = 100
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use disac_core::rcs::RcsModel;
use disac_core::scenario::{OneOrMany, PowerMode, Preset, ScenarioConfig, ScenarioFile};
use serde::{Deserialize, Serialize};

use crate::error::{DisacError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    Tradeoff,
    Detection,
    PowerModes,
    RcsModels,
    PolarPattern,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Tradeoff => "tradeoff",
            ExperimentKind::Detection => "detection",
            ExperimentKind::PowerModes => "power_modes",
            ExperimentKind::RcsModels => "rcs_models",
            ExperimentKind::PolarPattern => "polar_pattern",
        }
    }
}

/// Network size override; unset fields keep the scenario's value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub nodes: Option<usize>,
    pub antennas: Option<usize>,
}

/// Scenario given inline or as a path relative to the spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Path(PathBuf),
    Inline(Box<ScenarioFile>),
}

/// Raw file form; see [`ExperimentSpec`] for the resolved one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub kind: ExperimentKind,
    pub scenario: Option<ScenarioSource>,
    pub out: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub gamma_db: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    pub variants: Option<Vec<Variant>>,
    pub aoa_half_width_deg: Option<Vec<f64>>,
    pub scnr_db: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub threshold_db: Option<f64>,
    pub compare_zf: Option<bool>,
    pub power_modes: Option<Vec<PowerMode>>,
    pub rcs_models: Option<Vec<RcsModel>>,
    /// RCS draws per band.
    pub samples: Option<usize>,
    pub resolution_deg: Option<f64>,
}

pub const DESK_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Fully resolved sweep. Lists are never empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub scenario: ScenarioFile,
    /// Directory that relative scenario paths resolve against.
    pub base_dir: PathBuf,
    pub out: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub gamma_db: Vec<f64>,
    /// `None` keeps the scenario's synchronization bound.
    pub delta: Vec<Option<f64>>,
    pub variants: Vec<Variant>,
    /// `None` keeps the scenario's AoA half-width.
    pub aoa_half_width_deg: Vec<Option<f64>>,
    pub scnr_db: Vec<f64>,
    pub trials: usize,
    pub threshold_db: f64,
    pub compare_zf: bool,
    pub power_modes: Vec<PowerMode>,
    pub rcs_models: Vec<RcsModel>,
    pub samples: usize,
    pub resolution_deg: f64,
    pub full_scale: bool,
    #[serde(skip)]
    default_variants: bool,
}

fn default_variants(kind: ExperimentKind, scenario: &ScenarioFile) -> Vec<Variant> {
    match kind {
        ExperimentKind::Convergence => vec![
            Variant { nodes: Some(1), antennas: None },
            Variant { nodes: Some(2), antennas: None },
        ],
        ExperimentKind::Tradeoff => {
            let m = scenario.antennas.unwrap_or(scenario.preset.sizes().1);
            vec![
                Variant { nodes: Some(2), antennas: Some(m) },
                Variant { nodes: Some(1), antennas: Some(2 * m) },
            ]
        }
        _ => vec![Variant::default()],
    }
}

/// One configuration of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub variant: Variant,
    pub aoa_half_width_deg: Option<f64>,
    pub delta: Option<f64>,
    pub gamma_db: f64,
    pub power_mode: Option<PowerMode>,
    pub rcs_model: Option<RcsModel>,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| DisacError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, path, &base)
    }

    /// `origin` only labels errors; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, origin: &Path, base_dir: &Path) -> Result<Self> {
        let file: SpecFile = toml::from_str(text).map_err(|e| DisacError::spec(origin, e.to_string()))?;
        Self::from_file(file, origin, base_dir)
    }

    pub fn from_file(file: SpecFile, origin: &Path, base_dir: &Path) -> Result<Self> {
        let (scenario, scenario_dir) = match file.scenario {
            None => (ScenarioFile::default(), base_dir.to_path_buf()),
            Some(ScenarioSource::Inline(s)) => (*s, base_dir.to_path_buf()),
            Some(ScenarioSource::Path(p)) => {
                let p = base_dir.join(p);
                let text = fs::read_to_string(&p).map_err(|e| DisacError::io(&p, e))?;
                let s = ScenarioFile::from_toml(&text).map_err(|e| DisacError::spec(&p, e.to_string()))?;
                (s, p.parent().unwrap_or(Path::new(".")).to_path_buf())
            }
        };
        let kind = file.kind;
        let gamma_default = match kind {
            ExperimentKind::Tradeoff => vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0],
            ExperimentKind::Detection => vec![0.0, 10.0],
            ExperimentKind::RcsModels => vec![0.0, 5.0, 10.0, 15.0, 20.0],
            _ => vec![scenario.sinr_threshold_db.unwrap_or(10.0)],
        };
        let delta_default = match kind {
            ExperimentKind::Detection => vec![Some(0.01), Some(0.05)],
            _ => vec![None],
        };
        let aoa_default = match kind {
            ExperimentKind::Convergence => vec![Some(2.0), Some(5.0)],
            _ => vec![None],
        };
        let variants_default = default_variants(kind, &scenario);
        let spec = Self {
            kind,
            scenario,
            base_dir: scenario_dir,
            out: file.out.map(|o| base_dir.join(o)),
            seeds: file.seeds.unwrap_or_else(|| DESK_SEEDS.to_vec()),
            gamma_db: file.gamma_db.unwrap_or(gamma_default),
            delta: file.delta.map(|d| d.into_iter().map(Some).collect()).unwrap_or(delta_default),
            default_variants: file.variants.is_none(),
            variants: file.variants.unwrap_or(variants_default),
            aoa_half_width_deg: file
                .aoa_half_width_deg
                .map(|d| d.into_iter().map(Some).collect())
                .unwrap_or(aoa_default),
            scnr_db: file
                .scnr_db
                .unwrap_or_else(|| disac_core::detection::DetectionExperiment::default().input_scnr_db),
            trials: file.trials.unwrap_or(1000),
            threshold_db: file.threshold_db.unwrap_or(10.0),
            compare_zf: file.compare_zf.unwrap_or(kind == ExperimentKind::Detection),
            power_modes: file.power_modes.unwrap_or_else(|| PowerMode::ALL.to_vec()),
            rcs_models: file
                .rcs_models
                .unwrap_or_else(|| vec![RcsModel::ChiSquare { shape: 4.0 }, RcsModel::SwerlingOne]),
            samples: file.samples.unwrap_or(1000),
            resolution_deg: file.resolution_deg.unwrap_or(1.0),
            full_scale: false,
        };
        spec.check(origin)?;
        Ok(spec)
    }

    fn check(&self, origin: &Path) -> Result<()> {
        let empty = [
            ("seeds", self.seeds.is_empty()),
            ("gamma_db", self.gamma_db.is_empty()),
            ("delta", self.delta.is_empty()),
            ("variants", self.variants.is_empty()),
            ("aoa_half_width_deg", self.aoa_half_width_deg.is_empty()),
            ("scnr_db", self.scnr_db.is_empty()),
            ("power_modes", self.power_modes.is_empty()),
            ("rcs_models", self.rcs_models.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(DisacError::spec(origin, format!("sweep list `{name}` is empty")));
        }
        if self.samples < 2 {
            return Err(DisacError::spec(origin, "need at least 2 RCS samples"));
        }
        Ok(())
    }

    /// Switches the base scenario to the full-size network. Explicit
    /// sizes in the scenario or the variants still win.
    pub fn set_full_scale(&mut self) {
        self.full_scale = true;
        self.scenario.preset = Preset::Full;
        if self.default_variants {
            self.variants = default_variants(self.kind, &self.scenario);
        }
    }

    /// Sweep points in output order: variant, AoA width, delta, gamma,
    /// power mode, RCS model, then seed.
    pub fn points(&self) -> Vec<SweepPoint> {
        let modes: Vec<Option<PowerMode>> = match self.kind {
            ExperimentKind::PowerModes => self.power_modes.iter().copied().map(Some).collect(),
            _ => vec![None],
        };
        let models: Vec<Option<RcsModel>> = match self.kind {
            ExperimentKind::RcsModels | ExperimentKind::PolarPattern => {
                self.rcs_models.iter().copied().map(Some).collect()
            }
            _ => vec![None],
        };
        let gammas: Vec<f64> = match self.kind {
            ExperimentKind::PolarPattern => vec![self.gamma_db[0]],
            _ => self.gamma_db.clone(),
        };
        let mut out = Vec::new();
        for &variant in &self.variants {
            for &aoa in &self.aoa_half_width_deg {
                for &delta in &self.delta {
                    for &gamma_db in &gammas {
                        for &power_mode in &modes {
                            for &rcs_model in &models {
                                for &seed in &self.seeds {
                                    out.push(SweepPoint {
                                        variant,
                                        aoa_half_width_deg: aoa,
                                        delta,
                                        gamma_db,
                                        power_mode,
                                        rcs_model,
                                        seed,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn config(&self, point: &SweepPoint) -> Result<ScenarioConfig> {
        let mut file = self.scenario.clone();
        if let Some(n) = point.variant.nodes {
            file.num_nodes = Some(n);
            // explicit positions would fix the node count
            file.node_positions_m = None;
            if let Some(OneOrMany::Many(_)) = file.aoa_half_width_deg {
                file.aoa_half_width_deg = None;
            }
        }
        if let Some(m) = point.variant.antennas {
            file.antennas = Some(m);
            file.tx_antennas = None;
            file.rx_antennas = None;
        }
        if let Some(a) = point.aoa_half_width_deg {
            file.aoa_half_width_deg = Some(OneOrMany::One(a));
        }
        if let Some(d) = point.delta {
            file.sync_error_bound = Some(d);
        }
        file.sinr_threshold_db = Some(point.gamma_db);
        if let Some(mode) = point.power_mode {
            file.power_mode = Some(mode);
        }
        if let Some(model) = point.rcs_model {
            file.rcs_model = Some(model);
        }
        Ok(file.resolve(&self.base_dir, Some(point.seed))?)
    }
}
