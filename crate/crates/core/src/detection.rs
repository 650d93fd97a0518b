//! Monte-Carlo detection with a whitened matched filter.
//!
//! Each trial draws a true target AoA uniformly inside the uncertainty
//! interval, one RCS value per link held over the dwell, clutter and noise
//! per snapshot. Nodes transmit orthogonal DFT sequences. The detector
//! whitens by `R0` and matches against the echo signature predicted at the
//! estimated AoAs and mean RCS.
//!
//! Input SCNR is defined independently of the beamformer as
//! `kappa^2 tr(E[Rs](W_iso)) / tr(R0)`, with `W_iso` the isotropic sensing
//! covariance at the full power budget and no sync loss. Echo amplitudes
//! are scaled by `kappa`, so curves of different beamformers share the
//! same physical x-axis.

use std::f64::consts::TAU;

use num_complex::Complex64;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{c64, db_to_linear, linear_to_db, sample_cn, sqrt_psd, BlockDiag, CMat, CVec};
use crate::problem::{isotropic_sensing, RobustProblem, SensingModel};
use crate::scenario::spawn_rng_stream;
use crate::sensing::{kld_samples, KldSpread};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyncMode {
    /// Deterministic coherent-gain loss `1 - 2 delta` on every echo.
    Shrinkage,
    /// Per-node residual phases; link `(n, m)` picks up `phi_n - phi_m`.
    /// With `at_bound` every `|phi_n| = delta` with a random sign,
    /// otherwise `phi_n` is uniform on `[-delta, delta]`.
    SampledPhases { at_bound: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionExperiment {
    pub trials: usize,
    pub input_scnr_db: Vec<f64>,
    pub threshold_db: f64,
    pub snapshots: usize,
    pub sync_mode: SyncMode,
    /// Redraw the RCS every snapshot instead of once per trial.
    pub beta_per_snapshot: bool,
    /// Label of the per-trial random streams; experiments sharing it use
    /// common random numbers.
    pub stream: String,
}

impl Default for DetectionExperiment {
    fn default() -> Self {
        Self {
            trials: 1000,
            input_scnr_db: (0..=16).map(|i| -52.0 + 2.0 * i as f64).collect(),
            threshold_db: 10.0,
            snapshots: 100,
            sync_mode: SyncMode::Shrinkage,
            beta_per_snapshot: false,
            stream: "detection".into(),
        }
    }
}

impl DetectionExperiment {
    pub fn validate(&self, nodes: usize) -> Result<()> {
        if self.trials < 100 {
            return Err(CoreError::InvalidConfig(format!("need at least 100 trials, got {}", self.trials)));
        }
        if self.input_scnr_db.is_empty() {
            return Err(CoreError::InvalidConfig("empty input SCNR grid".into()));
        }
        if self.snapshots < nodes {
            return Err(CoreError::InvalidConfig(format!(
                "{} snapshots cannot carry {nodes} orthogonal sequences",
                self.snapshots
            )));
        }
        Ok(())
    }
}

/// Row `m` is the unit-power DFT sequence `exp(j 2 pi m t / T)`.
pub fn sensing_sequences(nodes: usize, snapshots: usize) -> CMat {
    CMat::from_fn(nodes, snapshots, |m, t| {
        Complex64::from_polar(1.0, TAU * (m * t) as f64 / snapshots as f64)
    })
}

/// Interference and unit-amplitude echo of one trial, kept apart so the
/// echo can be rescaled without redrawing.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    pub interference: CMat,
    pub echo: CMat,
}

impl TrialData {
    pub fn received(&self, hypothesis: Hypothesis, amplitude: f64) -> CMat {
        match hypothesis {
            Hypothesis::H0 => self.interference.clone(),
            Hypothesis::H1 => &self.interference + &self.echo * c64(amplitude, 0.0),
        }
    }
}

/// Square roots of the clutter and noise parts of `R0`, per block.
struct InterferenceRoots {
    clutter: Vec<CMat>,
    noise_std: f64,
}

impl InterferenceRoots {
    fn new(problem: &RobustProblem) -> Self {
        let s = problem.cfg.sensing_noise;
        let clutter = problem
            .r0
            .blocks
            .iter()
            .map(|b| sqrt_psd(&(b - CMat::identity(b.nrows(), b.ncols()) * c64(s, 0.0))))
            .collect();
        Self {
            clutter,
            noise_std: s.sqrt(),
        }
    }
}

fn trial_parts<R: Rng + ?Sized>(
    problem: &RobustProblem,
    sensing: &[CVec],
    exp: &DetectionExperiment,
    seqs: &CMat,
    roots: &InterferenceRoots,
    rng: &mut R,
) -> Result<TrialData> {
    let cfg = &problem.cfg;
    let n = cfg.num_nodes();
    let mr = cfg.rx_antennas;
    let t_len = exp.snapshots;
    // truth draws come first and in a fixed order so every beamformer sees
    // the same realization
    let aoa: Vec<f64> = (0..n)
        .map(|i| {
            let w = cfg.aoa_half_width[i];
            problem.geometry.target_aoa[i] + if w > 0.0 { rng.random_range(-w..=w) } else { 0.0 }
        })
        .collect();
    let mut truth = SensingModel::build(cfg, &problem.geometry, &aoa)?;
    let beta_trial = truth.stats.sample(rng);
    let phases: Vec<f64> = match exp.sync_mode {
        SyncMode::Shrinkage => vec![0.0; n],
        SyncMode::SampledPhases { at_bound } => (0..n)
            .map(|_| {
                let d = cfg.sync_error_bound;
                if at_bound {
                    if rng.random_bool(0.5) { d } else { -d }
                } else if d > 0.0 {
                    rng.random_range(-d..=d)
                } else {
                    0.0
                }
            })
            .collect(),
    };
    if matches!(exp.sync_mode, SyncMode::SampledPhases { .. }) {
        truth.factors.shrinkage = 1.0;
    }
    let mut echo = CMat::zeros(n * mr, t_len);
    let mut interference = CMat::zeros(n * mr, t_len);
    for t in 0..t_len {
        let beta = if exp.beta_per_snapshot && t > 0 {
            truth.stats.sample(rng)
        } else {
            beta_trial.clone()
        };
        for rx in 0..n {
            let mut y = CVec::zeros(mr);
            for tx in 0..n {
                let g = truth.factors.effective(rx, tx, beta[rx][tx]);
                let phase = Complex64::from_polar(1.0, phases[rx] - phases[tx]);
                y += (&g * &sensing[tx]) * (phase * seqs[(tx, t)]);
            }
            echo.view_mut((rx * mr, t), (mr, 1)).copy_from(&y);
            let c = &roots.clutter[rx] * sample_cn(rng, mr) + sample_cn(rng, mr) * c64(roots.noise_std, 0.0);
            interference.view_mut((rx * mr, t), (mr, 1)).copy_from(&c);
        }
    }
    Ok(TrialData { interference, echo })
}

/// Received block `N M_r x T` for one trial under `hypothesis`, with the
/// echo scaled by `amplitude`.
pub fn simulate_hypothesis_data<R: Rng + ?Sized>(
    problem: &RobustProblem,
    sensing: &[CVec],
    hypothesis: Hypothesis,
    exp: &DetectionExperiment,
    amplitude: f64,
    rng: &mut R,
) -> Result<CMat> {
    let seqs = sensing_sequences(problem.cfg.num_nodes(), exp.snapshots);
    let roots = InterferenceRoots::new(problem);
    Ok(trial_parts(problem, sensing, exp, &seqs, &roots, rng)?.received(hypothesis, amplitude))
}

/// Predicted echo per transmitter, stacked over receivers, at the
/// estimated AoAs and mean RCS.
pub fn expected_signature(problem: &RobustProblem, sensing: &[CVec]) -> Vec<CVec> {
    let model = &problem.estimated;
    let n = problem.cfg.num_nodes();
    let mr = problem.cfg.rx_antennas;
    (0..n)
        .map(|tx| {
            let mut g = CVec::zeros(n * mr);
            for rx in 0..n {
                let link = &model.factors.links[rx][tx];
                let beta = model.stats.links[rx][tx].mu;
                let y = &link.a_r * (link.a_t.transpose() * &sensing[tx])[(0, 0)] * (link.l * beta);
                g.rows_mut(rx * mr, mr).copy_from(&y);
            }
            g
        })
        .collect()
}

/// Whitened matched-filter output normalized so that its mean under H0 is
/// one: `|sum_m g_m^H R0^-1 z_m|^2 / sum_m g_m^H R0^-1 g_m`, where
/// `z_m = T^-1/2 sum_t y[t] conj(s_m[t])`.
pub fn wmf_statistic(y: &CMat, r0_inv: &BlockDiag, signature: &[CVec], seqs: &CMat) -> f64 {
    let t_len = y.ncols() as f64;
    let r0_inv = r0_inv.to_dense();
    let mut num = c64(0.0, 0.0);
    let mut den = 0.0;
    for (m, g) in signature.iter().enumerate() {
        let z = y * seqs.row(m).adjoint() / c64(t_len.sqrt(), 0.0);
        let wg = &r0_inv * g;
        num += wg.dotc(&z);
        den += wg.dotc(g).re;
    }
    if den <= 0.0 {
        0.0
    } else {
        num.norm_sqr() / den
    }
}

/// Echo amplitude giving `scnr_db` under the beamformer-independent input
/// SCNR definition in the module docs.
pub fn input_scnr_amplitude(problem: &RobustProblem, scnr_db: f64) -> Result<f64> {
    let mut factors = problem.estimated.factors.clone();
    factors.shrinkage = 1.0;
    let iso = isotropic_sensing(&problem.cfg, problem.cfg.power_budget);
    let reference = crate::sensing::expected_target_covariance(&factors, &problem.estimated.stats, &iso).trace();
    if reference <= 0.0 {
        return Err(CoreError::DegenerateGeometry("target echo carries no power".into()));
    }
    Ok((db_to_linear(scnr_db) * problem.r0.trace() / reference).sqrt())
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionPoint {
    pub scnr_db: f64,
    pub pd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub detections: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionCurve {
    pub points: Vec<DetectionPoint>,
}

impl DetectionCurve {
    /// Input SCNR where Pd first reaches `level`, linearly interpolated in
    /// dB between grid points.
    pub fn scnr_at_pd(&self, level: f64) -> Option<f64> {
        let p = &self.points;
        if p.first()?.pd >= level {
            return (p[0].pd == level).then_some(p[0].scnr_db);
        }
        p.windows(2).find(|w| w[0].pd < level && w[1].pd >= level).map(|w| {
            let f = (level - w[0].pd) / (w[1].pd - w[0].pd);
            w[0].scnr_db + f * (w[1].scnr_db - w[0].scnr_db)
        })
    }

    /// No later point lies significantly below an earlier one, judged by
    /// disjoint 95% intervals.
    pub fn is_monotone_within_ci(&self) -> bool {
        let p = &self.points;
        (0..p.len()).all(|i| (i + 1..p.len()).all(|j| p[j].ci_high >= p[i].ci_low))
    }

    pub fn pd(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.pd).collect()
    }
}

/// Pd over the experiment's SCNR grid. Trial `i` draws from the stream
/// `"{stream}/{i}"` of the scenario seed, so curves of different
/// beamformers under the same experiment use common random numbers.
pub fn detection_probability(
    problem: &RobustProblem,
    sensing: &[CVec],
    exp: &DetectionExperiment,
) -> Result<DetectionCurve> {
    let cfg = &problem.cfg;
    exp.validate(cfg.num_nodes())?;
    let seqs = sensing_sequences(cfg.num_nodes(), exp.snapshots);
    let roots = InterferenceRoots::new(problem);
    let r0_inv = problem.r0.inverse("R0")?;
    let signature = expected_signature(problem, sensing);
    let amplitudes: Vec<f64> = exp
        .input_scnr_db
        .iter()
        .map(|&s| input_scnr_amplitude(problem, s))
        .collect::<Result<_>>()?;
    let threshold = db_to_linear(exp.threshold_db);
    let counts = (0..exp.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<usize>> {
            let mut rng = spawn_rng_stream(cfg.seed, &format!("{}/{trial}", exp.stream));
            let data = trial_parts(problem, sensing, exp, &seqs, &roots, &mut rng)?;
            Ok(amplitudes
                .iter()
                .map(|&a| {
                    let y = data.received(Hypothesis::H1, a);
                    usize::from(wmf_statistic(&y, &r0_inv, &signature, &seqs) >= threshold)
                })
                .collect())
        })
        .try_reduce(
            || vec![0; amplitudes.len()],
            |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
        )?;
    let points = exp
        .input_scnr_db
        .iter()
        .zip(counts)
        .map(|(&scnr_db, detections)| {
            let (ci_low, ci_high) = wilson_interval(detections, exp.trials);
            DetectionPoint {
                scnr_db,
                pd: detections as f64 / exp.trials as f64,
                ci_low,
                ci_high,
                detections,
                trials: exp.trials,
            }
        })
        .collect();
    Ok(DetectionCurve { points })
}

/// Detector outputs on target-free data, one per trial.
pub fn h0_statistics(problem: &RobustProblem, sensing: &[CVec], exp: &DetectionExperiment) -> Result<Vec<f64>> {
    let cfg = &problem.cfg;
    let seqs = sensing_sequences(cfg.num_nodes(), exp.snapshots);
    let roots = InterferenceRoots::new(problem);
    let r0_inv = problem.r0.inverse("R0")?;
    let signature = expected_signature(problem, sensing);
    (0..exp.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = spawn_rng_stream(cfg.seed, &format!("{}/h0/{trial}", exp.stream));
            let data = trial_parts(problem, sensing, exp, &seqs, &roots, &mut rng)?;
            Ok(wmf_statistic(&data.interference, &r0_inv, &signature, &seqs))
        })
        .collect()
}

/// Mean H0 statistic in dB; zero for a calibrated detector.
pub fn h0_mean_db(stats: &[f64]) -> f64 {
    linear_to_db(stats.iter().sum::<f64>() / stats.len() as f64)
}

/// Per-draw KLD spread at the worst-case AoAs over `samples` RCS draws.
pub fn sampled_kld_report<R: Rng + ?Sized>(
    problem: &RobustProblem,
    ws: &[CMat],
    samples: usize,
    rng: &mut R,
) -> Result<KldSpread> {
    if samples < 2 {
        return Err(CoreError::InvalidConfig(format!("need at least 2 RCS samples, got {samples}")));
    }
    let model = &problem.worst_case;
    let draws = kld_samples(&problem.r0, &model.factors, &model.stats, ws, samples, rng)?;
    Ok(KldSpread::from_samples(&draws))
}
