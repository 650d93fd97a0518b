//! Experiment configuration, deployment geometry and seeded random streams.
//!
//! [`ScenarioConfig`] holds everything in linear units and radians. Human
//! edited files use [`ScenarioFile`], which takes dB and degrees and is
//! converted once by [`ScenarioFile::resolve`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};
use crate::linalg::{db_to_linear, wrap_angle};
use crate::rcs::{RcsModel, RcsProfile};

pub type RandomStream = ChaCha20Rng;

/// Deterministic stream keyed by `(seed, label)`.
pub fn spawn_rng_stream(seed: u64, label: &str) -> RandomStream {
    let mut hasher = Sha256::new();
    hasher.update(b"disac-stream");
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    ChaCha20Rng::from_seed(hasher.finalize().into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    #[default]
    TotalSystem,
    PerNode,
    PerAntenna,
}

impl PowerMode {
    pub const ALL: [PowerMode; 3] = [PowerMode::TotalSystem, PowerMode::PerNode, PowerMode::PerAntenna];

    pub fn label(&self) -> &'static str {
        match self {
            PowerMode::TotalSystem => "total_system",
            PowerMode::PerNode => "per_node",
            PowerMode::PerAntenna => "per_antenna",
        }
    }
}

/// Which worst-case desired-signal expression the robust SINR uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumeratorMode {
    /// Signal power at zero channel error.
    #[default]
    Nominal,
    /// `(max(0, |h^H w| - sqrt(N) delta ||w||))^2`, a true lower bound over
    /// the uncertainty ball.
    Conservative,
}

/// A point clutter scatterer seen by receiver `rx` on the link from `tx`.
/// `None` applies the point to every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterPoint {
    pub rx: Option<usize>,
    pub tx: Option<usize>,
    /// Direction relative to the estimated target azimuth at the receiver,
    /// radians.
    pub offset: f64,
    /// Watts.
    pub power: f64,
}

impl ClutterPoint {
    pub fn applies_to(&self, n: usize, m: usize) -> bool {
        self.rx.is_none_or(|r| r == n) && self.tx.is_none_or(|t| t == m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    pub aoa_grid_points: usize,
    pub randomization_draws: usize,
    /// Dominant-eigenvalue share above which a lifted matrix is taken as
    /// rank one.
    pub rank_one_gate: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            aoa_grid_points: 9,
            randomization_draws: 200,
            rank_one_gate: 0.999,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub node_positions: Vec<[f64; 3]>,
    pub ue_positions: Vec<[f64; 3]>,
    pub target_position: [f64; 3],
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub wavelength: f64,
    pub antenna_spacing: f64,
    /// Linear Rician K-factor; `f64::INFINITY` gives pure line of sight.
    pub rician_factor: f64,
    pub power_budget: f64,
    pub comm_noise: f64,
    pub sensing_noise: f64,
    pub sync_error_bound: f64,
    /// Per-node AoA half width, radians.
    pub aoa_half_width: Vec<f64>,
    pub sinr_threshold: f64,
    pub snapshots: usize,
    pub sca_tolerance: f64,
    pub rcs_model: RcsModel,
    pub rcs_profile: RcsProfile,
    pub target_heading: f64,
    pub clutter: Vec<ClutterPoint>,
    /// Common array broadside azimuth in the global frame, radians.
    pub broadside: f64,
    /// Range at which path loss is normalized to one; `None` keeps absolute
    /// free-space values.
    pub pathloss_reference: Option<f64>,
    pub power_mode: PowerMode,
    pub numerator_mode: NumeratorMode,
    pub optimizer: OptimizerSettings,
    pub seed: u64,
}

/// Parameter set a config starts from before file overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// N = 2, M = 4, K = 2.
    #[default]
    Desk,
    /// N = 2, M = 12, K = 3.
    Full,
}

impl Preset {
    pub fn sizes(&self) -> (usize, usize, usize) {
        match self {
            Preset::Desk => (2, 4, 2),
            Preset::Full => (2, 12, 3),
        }
    }
}

pub const DEFAULT_RADIUS_M: f64 = 100.0;
pub const DEFAULT_UE_AREA_M: f64 = 200.0;
const MIN_UE_NODE_DISTANCE_M: f64 = 10.0;

/// `n` nodes equally spaced on a ground circle of `radius` around the
/// target's ground projection, the first on the +x axis.
pub fn nodes_on_circle(n: usize, radius: f64, center: [f64; 3]) -> Vec<[f64; 3]> {
    (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin(), 0.0]
        })
        .collect()
}

/// UEs uniform in a `side x side` square centered on `center`, keeping a
/// minimum distance from every node.
pub fn draw_ue_positions(
    seed: u64,
    count: usize,
    side: f64,
    center: [f64; 3],
    nodes: &[[f64; 3]],
) -> Vec<[f64; 3]> {
    let mut rng = spawn_rng_stream(seed, "ue-placement");
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = [
            center[0] + side * (rng.random::<f64>() - 0.5),
            center[1] + side * (rng.random::<f64>() - 0.5),
            0.0,
        ];
        if nodes.iter().all(|q| distance(&p, q) >= MIN_UE_NODE_DISTANCE_M) {
            out.push(p);
        }
    }
    out
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Full-size network with two nodes.
pub fn default_full_config() -> ScenarioConfig {
    ScenarioConfig::preset(Preset::Full, 0)
}

impl ScenarioConfig {
    pub fn preset(preset: Preset, seed: u64) -> Self {
        let (n, m, k) = preset.sizes();
        Self::with_sizes(n, m, k, seed)
    }

    /// Desk-scale defaults: N = 2, M = 4, K = 2.
    pub fn desk(seed: u64) -> Self {
        Self::preset(Preset::Desk, seed)
    }

    /// Default physical parameters with the given array and network sizes.
    pub fn with_sizes(nodes: usize, antennas: usize, ues: usize, seed: u64) -> Self {
        let target = [0.0, 0.0, 0.0];
        let node_positions = nodes_on_circle(nodes, DEFAULT_RADIUS_M, target);
        let ue_positions = draw_ue_positions(seed, ues, DEFAULT_UE_AREA_M, target, &node_positions);
        let wavelength = 0.03;
        let power_budget = 1.0;
        let sensing_noise = power_budget / db_to_linear(30.0);
        Self {
            node_positions,
            ue_positions,
            target_position: target,
            tx_antennas: antennas,
            rx_antennas: antennas,
            wavelength,
            antenna_spacing: wavelength / 2.0,
            rician_factor: db_to_linear(5.0),
            power_budget,
            comm_noise: power_budget / db_to_linear(30.0),
            sensing_noise,
            sync_error_bound: 0.01,
            aoa_half_width: vec![2f64.to_radians(); nodes],
            sinr_threshold: db_to_linear(10.0),
            snapshots: 100,
            sca_tolerance: 0.01,
            rcs_model: RcsModel::default(),
            rcs_profile: RcsProfile::two_lobe(),
            target_heading: 0.0,
            clutter: vec![ClutterPoint {
                rx: None,
                tx: None,
                offset: 20f64.to_radians(),
                power: sensing_noise * db_to_linear(10.0),
            }],
            broadside: 0.0,
            pathloss_reference: Some(DEFAULT_RADIUS_M),
            power_mode: PowerMode::TotalSystem,
            numerator_mode: NumeratorMode::Nominal,
            optimizer: OptimizerSettings::default(),
            seed,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.node_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn rng(&self, label: &str) -> RandomStream {
        spawn_rng_stream(self.seed, label)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CoreError::InvalidConfig(msg));
        let n = self.num_nodes();
        if n == 0 {
            return bad("node list is empty".into());
        }
        if self.num_ues() == 0 {
            return bad("UE list is empty".into());
        }
        if self.tx_antennas == 0 || self.rx_antennas == 0 {
            return bad("antenna counts must be positive".into());
        }
        let all_points = self
            .node_positions
            .iter()
            .chain(&self.ue_positions)
            .chain(std::iter::once(&self.target_position));
        if all_points.flatten().any(|x| !x.is_finite()) {
            return bad("positions must be finite".into());
        }
        for (i, p) in self.node_positions.iter().enumerate() {
            if distance(p, &self.target_position) <= 1e-9 {
                return Err(CoreError::DegenerateGeometry(format!(
                    "node {i} coincides with the target"
                )));
            }
        }
        if !(self.sync_error_bound >= 0.0 && self.sync_error_bound < 0.5) {
            return bad(format!("sync error bound must lie in [0, 0.5), got {}", self.sync_error_bound));
        }
        for (name, v) in [
            ("power budget", self.power_budget),
            ("communication noise", self.comm_noise),
            ("sensing noise", self.sensing_noise),
            ("SINR threshold", self.sinr_threshold),
            ("SCA tolerance", self.sca_tolerance),
            ("wavelength", self.wavelength),
            ("antenna spacing", self.antenna_spacing),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.rician_factor >= 0.0) {
            return bad(format!("Rician factor must be nonnegative, got {}", self.rician_factor));
        }
        if self.aoa_half_width.len() != n {
            return bad(format!(
                "expected {n} AoA half widths, got {}",
                self.aoa_half_width.len()
            ));
        }
        if self.aoa_half_width.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return bad("AoA half widths must be nonnegative".into());
        }
        if self.snapshots == 0 {
            return bad("snapshot count must be positive".into());
        }
        self.rcs_model.validate()?;
        for c in &self.clutter {
            if !(c.power >= 0.0 && c.power.is_finite()) {
                return bad(format!("clutter power must be nonnegative, got {}", c.power));
            }
            if c.rx.is_some_and(|r| r >= n) || c.tx.is_some_and(|t| t >= n) {
                return bad("clutter point references a missing node".into());
            }
        }
        if let Some(r) = self.pathloss_reference {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("path-loss reference range must be positive, got {r}"));
            }
        }
        let o = &self.optimizer;
        if o.aoa_grid_points < 3 || o.aoa_grid_points % 2 == 0 {
            return bad(format!("AoA grid needs an odd count of at least 3, got {}", o.aoa_grid_points));
        }
        if o.max_iterations == 0 || o.randomization_draws == 0 {
            return bad("iteration cap and randomization draws must be positive".into());
        }
        if !(o.rank_one_gate > 0.0 && o.rank_one_gate <= 1.0) {
            return bad(format!("rank-one gate must lie in (0, 1], got {}", o.rank_one_gate));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    /// Estimated target AoA at each node relative to broadside.
    pub target_aoa: Vec<f64>,
    pub target_range: Vec<f64>,
    /// `[node][ue]` azimuth relative to broadside.
    pub ue_aoa: Vec<Vec<f64>>,
    pub ue_range: Vec<Vec<f64>>,
}

fn azimuth(from: &[f64; 3], to: &[f64; 3], broadside: f64) -> f64 {
    wrap_angle((to[1] - from[1]).atan2(to[0] - from[0]) - broadside)
}

pub fn derive_geometry(cfg: &ScenarioConfig) -> Result<GeometrySummary> {
    let mut g = GeometrySummary {
        target_aoa: Vec::new(),
        target_range: Vec::new(),
        ue_aoa: Vec::new(),
        ue_range: Vec::new(),
    };
    for (i, p) in cfg.node_positions.iter().enumerate() {
        let r = distance(p, &cfg.target_position);
        if !(r > 1e-9) {
            return Err(CoreError::DegenerateGeometry(format!(
                "node {i} coincides with the target"
            )));
        }
        g.target_aoa.push(azimuth(p, &cfg.target_position, cfg.broadside));
        g.target_range.push(r);
        let mut aoa = Vec::new();
        let mut range = Vec::new();
        for (k, u) in cfg.ue_positions.iter().enumerate() {
            let d = distance(p, u);
            if !(d > 1e-9) {
                return Err(CoreError::DegenerateGeometry(format!(
                    "node {i} coincides with UE {k}"
                )));
            }
            aoa.push(azimuth(p, u, cfg.broadside));
            range.push(d);
        }
        g.ue_aoa.push(aoa);
        g.ue_range.push(range);
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterPointFile {
    pub rx: Option<usize>,
    pub tx: Option<usize>,
    pub offset_deg: f64,
    /// Clutter-to-noise ratio relative to the sensing noise.
    pub cnr_db: f64,
}

/// File form of a scenario. Every field is optional and overrides the
/// chosen preset. Angles are degrees, ratios dB.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub preset: Preset,
    pub seed: Option<u64>,
    pub num_nodes: Option<usize>,
    /// Sets both transmit and receive array sizes.
    pub antennas: Option<usize>,
    pub tx_antennas: Option<usize>,
    pub rx_antennas: Option<usize>,
    pub num_ues: Option<usize>,
    pub node_radius_m: Option<f64>,
    pub node_positions_m: Option<Vec<[f64; 3]>>,
    pub ue_positions_m: Option<Vec<[f64; 3]>>,
    pub ue_area_m: Option<f64>,
    pub target_position_m: Option<[f64; 3]>,
    pub wavelength_m: Option<f64>,
    pub antenna_spacing_m: Option<f64>,
    pub rician_factor_db: Option<f64>,
    pub power_budget_w: Option<f64>,
    /// `P_max / sigma_c^2`.
    pub comm_snr_db: Option<f64>,
    /// `P_max / sigma_s^2`.
    pub sensing_snr_db: Option<f64>,
    pub sync_error_bound: Option<f64>,
    pub aoa_half_width_deg: Option<OneOrMany>,
    pub sinr_threshold_db: Option<f64>,
    pub snapshots: Option<usize>,
    pub sca_tolerance: Option<f64>,
    pub rcs_model: Option<RcsModel>,
    /// CSV with `angle_deg, mean_rcs` rows, relative to the file.
    pub rcs_profile_csv: Option<PathBuf>,
    pub target_heading_deg: Option<f64>,
    pub clutter: Option<Vec<ClutterPointFile>>,
    pub broadside_deg: Option<f64>,
    /// Zero or negative keeps absolute free-space path loss.
    pub pathloss_reference_m: Option<f64>,
    pub power_mode: Option<PowerMode>,
    pub numerator_mode: Option<NumeratorMode>,
    pub max_sca_iterations: Option<usize>,
    pub aoa_grid_points: Option<usize>,
    pub randomization_draws: Option<usize>,
    pub rank_one_gate: Option<f64>,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CoreError::Parse {
            path: "<scenario>".into(),
            message: e.to_string(),
        })
    }

    /// Builds a validated config. Relative paths resolve against `base_dir`.
    pub fn resolve(&self, base_dir: &Path, seed_override: Option<u64>) -> Result<ScenarioConfig> {
        let seed = seed_override.or(self.seed).unwrap_or(0);
        let (pn, pm, pk) = self.preset.sizes();
        let n = self.num_nodes.unwrap_or(pn);
        let m = self.antennas.unwrap_or(pm);
        let k = self.num_ues.unwrap_or(pk);
        let mut cfg = ScenarioConfig::with_sizes(n, m, k, seed);
        cfg.tx_antennas = self.tx_antennas.unwrap_or(m);
        cfg.rx_antennas = self.rx_antennas.unwrap_or(m);
        if let Some(t) = self.target_position_m {
            cfg.target_position = t;
        }
        let center = [cfg.target_position[0], cfg.target_position[1], 0.0];
        cfg.node_positions = match &self.node_positions_m {
            Some(p) => p.clone(),
            None => nodes_on_circle(n, self.node_radius_m.unwrap_or(DEFAULT_RADIUS_M), center),
        };
        let n = cfg.node_positions.len();
        cfg.ue_positions = match &self.ue_positions_m {
            Some(p) => p.clone(),
            None => draw_ue_positions(
                seed,
                k,
                self.ue_area_m.unwrap_or(DEFAULT_UE_AREA_M),
                center,
                &cfg.node_positions,
            ),
        };
        if let Some(w) = self.wavelength_m {
            cfg.wavelength = w;
            cfg.antenna_spacing = w / 2.0;
        }
        if let Some(d) = self.antenna_spacing_m {
            cfg.antenna_spacing = d;
        }
        if let Some(g) = self.rician_factor_db {
            cfg.rician_factor = db_to_linear(g);
        }
        if let Some(p) = self.power_budget_w {
            cfg.power_budget = p;
        }
        cfg.comm_noise = cfg.power_budget / db_to_linear(self.comm_snr_db.unwrap_or(30.0));
        cfg.sensing_noise = cfg.power_budget / db_to_linear(self.sensing_snr_db.unwrap_or(30.0));
        if let Some(d) = self.sync_error_bound {
            cfg.sync_error_bound = d;
        }
        cfg.aoa_half_width = match &self.aoa_half_width_deg {
            None => vec![2f64.to_radians(); n],
            Some(OneOrMany::One(w)) => vec![w.to_radians(); n],
            Some(OneOrMany::Many(ws)) => ws.iter().map(|w| w.to_radians()).collect(),
        };
        if let Some(g) = self.sinr_threshold_db {
            cfg.sinr_threshold = db_to_linear(g);
        }
        if let Some(t) = self.snapshots {
            cfg.snapshots = t;
        }
        if let Some(e) = self.sca_tolerance {
            cfg.sca_tolerance = e;
        }
        if let Some(model) = self.rcs_model {
            cfg.rcs_model = model;
        }
        if let Some(path) = &self.rcs_profile_csv {
            cfg.rcs_profile = RcsProfile::from_csv(&base_dir.join(path))?;
        }
        if let Some(h) = self.target_heading_deg {
            cfg.target_heading = h.to_radians();
        }
        cfg.clutter = match &self.clutter {
            None => vec![ClutterPoint {
                rx: None,
                tx: None,
                offset: 20f64.to_radians(),
                power: cfg.sensing_noise * db_to_linear(10.0),
            }],
            Some(points) => points
                .iter()
                .map(|c| ClutterPoint {
                    rx: c.rx,
                    tx: c.tx,
                    offset: c.offset_deg.to_radians(),
                    power: cfg.sensing_noise * db_to_linear(c.cnr_db),
                })
                .collect(),
        };
        if let Some(b) = self.broadside_deg {
            cfg.broadside = b.to_radians();
        }
        if let Some(r) = self.pathloss_reference_m {
            cfg.pathloss_reference = (r > 0.0).then_some(r);
        }
        if let Some(p) = self.power_mode {
            cfg.power_mode = p;
        }
        if let Some(p) = self.numerator_mode {
            cfg.numerator_mode = p;
        }
        let o = &mut cfg.optimizer;
        if let Some(v) = self.max_sca_iterations {
            o.max_iterations = v;
        }
        if let Some(v) = self.aoa_grid_points {
            o.aoa_grid_points = v;
        }
        if let Some(v) = self.randomization_draws {
            o.randomization_draws = v;
        }
        if let Some(v) = self.rank_one_gate {
            o.rank_one_gate = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
