use disac_core::detection::*;
use disac_core::linalg::{c64, CVec};
use disac_core::optimizer::optimize;
use disac_core::rcs::{RcsModel, RcsProfile};
use disac_core::scenario::{spawn_rng_stream, ScenarioConfig};
use disac_core::zf::{default_rho_grid, zf_grid_search};
use disac_core::RobustProblem;

fn desk(seed: u64) -> RobustProblem {
    RobustProblem::build(ScenarioConfig::desk(seed)).unwrap()
}

fn optimized(seed: u64) -> (RobustProblem, Vec<CVec>) {
    let p = desk(seed);
    let s = optimize(&p).unwrap();
    (p, s.sensing)
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] { i += 1 } else { j += 1 }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

#[test]
fn silent_beams_leave_h0_statistics() {
    let p = desk(0);
    let zero = vec![CVec::zeros(p.cfg.tx_antennas); p.cfg.num_nodes()];
    let exp = DetectionExperiment::default();
    let mut h0 = Vec::new();
    let mut h1 = Vec::new();
    let mut r0 = spawn_rng_stream(0, "ks-h0");
    let mut r1 = spawn_rng_stream(0, "ks-h1");
    for _ in 0..50 {
        let a = simulate_hypothesis_data(&p, &zero, Hypothesis::H0, &exp, 1.0, &mut r0).unwrap();
        let b = simulate_hypothesis_data(&p, &zero, Hypothesis::H1, &exp, 1.0, &mut r1).unwrap();
        h0.extend(a.row(0).iter().map(|z| z.re));
        h1.extend(b.row(0).iter().map(|z| z.re));
    }
    let (n, m) = (h0.len() as f64, h1.len() as f64);
    let d = ks_statistic(h0, h1);
    assert!(d < 1.63 * ((n + m) / (n * m)).sqrt(), "KS {d}");
}

#[test]
fn h0_sample_covariance_matches_r0() {
    let p = desk(1);
    let zero = vec![CVec::zeros(p.cfg.tx_antennas); p.cfg.num_nodes()];
    let exp = DetectionExperiment { snapshots: 10_000, ..DetectionExperiment::default() };
    let y = simulate_hypothesis_data(&p, &zero, Hypothesis::H0, &exp, 1.0, &mut spawn_rng_stream(1, "cov")).unwrap();
    let cov = &y * y.adjoint() / c64(10_000.0, 0.0);
    let want = p.r0.to_dense();
    let rel = (&cov - &want).norm() / want.norm();
    assert!(rel < 0.05, "relative error {rel}");
}

#[test]
fn echo_energy_is_quadratic_in_rcs() {
    let (mut p, sensing) = optimized(2);
    let exp = DetectionExperiment::default();
    let echo_energy = |p: &RobustProblem| {
        let h1 = simulate_hypothesis_data(p, &sensing, Hypothesis::H1, &exp, 1.0, &mut spawn_rng_stream(2, "beta")).unwrap();
        let h0 = simulate_hypothesis_data(p, &sensing, Hypothesis::H0, &exp, 1.0, &mut spawn_rng_stream(2, "beta")).unwrap();
        (h1 - h0).norm_squared()
    };
    p.cfg.rcs_profile = RcsProfile::flat(1.0);
    let base = echo_energy(&p);
    p.cfg.rcs_profile = RcsProfile::flat(10.0);
    let scaled = echo_energy(&p);
    assert!(base > 0.0);
    assert!((scaled / base / 100.0 - 1.0).abs() < 1e-9, "ratio {}", scaled / base);
}

#[test]
fn h0_statistic_is_calibrated() {
    let (p, sensing) = optimized(3);
    let exp = DetectionExperiment { trials: 10_000, ..DetectionExperiment::default() };
    let stats = h0_statistics(&p, &sensing, &exp).unwrap();
    let mean_db = h0_mean_db(&stats);
    assert!(mean_db.abs() <= 0.2, "H0 mean {mean_db} dB");
    // the statistic is a unit exponential under H0, so P(stat >= tau) = exp(-tau)
    for tau_db in [0.0, 3.0, 6.0, 10.0] {
        let tau = 10f64.powf(tau_db / 10.0);
        let hits = stats.iter().filter(|&&s| s >= tau).count();
        let (lo, hi) = wilson_interval(hits, stats.len());
        let tail = (-tau).exp();
        assert!(lo <= tail && tail <= hi, "{tau_db} dB: tail {tail} outside [{lo}, {hi}]");
    }
}

#[test]
fn coherent_gain_is_linear_in_snapshots() {
    let (p, sensing) = optimized(4);
    let r0_inv = p.r0.inverse("R0").unwrap();
    let sig = expected_signature(&p, &sensing);
    let mut values = Vec::new();
    for t in [50, 100, 200] {
        let exp = DetectionExperiment { snapshots: t, ..DetectionExperiment::default() };
        let mut a = spawn_rng_stream(4, "dwell");
        let mut b = spawn_rng_stream(4, "dwell");
        let h1 = simulate_hypothesis_data(&p, &sensing, Hypothesis::H1, &exp, 1.0, &mut a).unwrap();
        let h0 = simulate_hypothesis_data(&p, &sensing, Hypothesis::H0, &exp, 1.0, &mut b).unwrap();
        values.push(wmf_statistic(&(h1 - h0), &r0_inv, &sig, &sensing_sequences(2, t)));
    }
    for w in values.windows(2) {
        let db = 10.0 * (w[1] / w[0]).log10();
        assert!((db - 3.0103).abs() < 1e-6, "{db} dB per doubling");
    }
}

#[test]
fn pd_saturates_at_both_ends() {
    let (p, sensing) = optimized(5);
    let exp = DetectionExperiment {
        trials: 200,
        input_scnr_db: vec![-90.0, 30.0],
        ..DetectionExperiment::default()
    };
    let curve = detection_probability(&p, &sensing, &exp).unwrap();
    assert!(curve.points[0].pd <= 0.01);
    assert!(curve.points[1].pd >= 0.99);
}

#[test]
fn pd_curve_is_monotone_and_deterministic() {
    let (p, sensing) = optimized(6);
    let exp = DetectionExperiment::default();
    let a = detection_probability(&p, &sensing, &exp).unwrap();
    assert!(a.is_monotone_within_ci());
    assert!(a.points.first().unwrap().pd < 0.5 && a.points.last().unwrap().pd > 0.5);
    assert!(a.scnr_at_pd(0.5).is_some());
    assert_eq!(detection_probability(&p, &sensing, &exp).unwrap(), a);
}

#[test]
fn lower_threshold_detects_better() {
    let mut strict = ScenarioConfig::desk(7);
    strict.sinr_threshold = 100.0;
    let mut loose = ScenarioConfig::desk(7);
    loose.sinr_threshold = 1.0;
    let exp = DetectionExperiment::default();
    let curves: Vec<DetectionCurve> = [loose, strict]
        .into_iter()
        .map(|cfg| {
            let p = RobustProblem::build(cfg).unwrap();
            let s = optimize(&p).unwrap();
            detection_probability(&p, &s.sensing, &exp).unwrap()
        })
        .collect();
    for (a, b) in curves[0].points.iter().zip(&curves[1].points) {
        assert!(a.ci_high >= b.ci_low, "{} dB: {} vs {}", a.scnr_db, a.pd, b.pd);
    }
}

/// The proposed design concentrates sensing power on one node, which wins
/// at low Pd; ZF spreads power over both nodes and gains RCS diversity,
/// overtaking near Pd = 0.8. Only the Pd = 0.5 ordering is asserted here.
#[test]
fn proposed_beams_reach_half_pd_first() {
    let (p, sensing) = optimized(8);
    let zf = zf_grid_search(&p, &default_rho_grid()).unwrap();
    let exp = DetectionExperiment::default();
    let ours = detection_probability(&p, &sensing, &exp).unwrap();
    let theirs = detection_probability(&p, &zf.solution().unwrap().sensing, &exp).unwrap();
    let gap = theirs.scnr_at_pd(0.5).unwrap() - ours.scnr_at_pd(0.5).unwrap();
    assert!(gap > 0.0, "gap {gap} dB");
}

#[test]
fn phase_errors_at_the_bound_stay_within_ci_of_shrinkage() {
    let (p, sensing) = optimized(9);
    let shrink = detection_probability(&p, &sensing, &DetectionExperiment::default()).unwrap();
    let exp = DetectionExperiment {
        sync_mode: SyncMode::SampledPhases { at_bound: true },
        ..DetectionExperiment::default()
    };
    let sampled = detection_probability(&p, &sensing, &exp).unwrap();
    for (s, r) in sampled.points.iter().zip(&shrink.points) {
        let width = r.ci_high - r.ci_low;
        assert!(s.pd <= r.pd + width, "{} dB: sampled {} shrinkage {}", s.scnr_db, s.pd, r.pd);
    }
}

#[test]
fn swerling_band_is_wider() {
    let (p, _) = optimized(10);
    let s = optimize(&p).unwrap();
    let ws = s.sensing_covariances();
    let mut chi = p.clone();
    chi.cfg.rcs_model = RcsModel::ChiSquare { shape: 4.0 };
    let mut sw = p.clone();
    sw.cfg.rcs_model = RcsModel::SwerlingOne;
    let rebuild = |q: &RobustProblem| RobustProblem::with_channels(q.cfg.clone(), q.channels.clone()).unwrap();
    let (chi, sw) = (rebuild(&chi), rebuild(&sw));
    let a = sampled_kld_report(&chi, &ws, 1000, &mut spawn_rng_stream(10, "band")).unwrap();
    let b = sampled_kld_report(&sw, &ws, 1000, &mut spawn_rng_stream(10, "band")).unwrap();
    assert!(b.width() > a.width(), "swerling {} chi {}", b.width(), a.width());
    assert!(sampled_kld_report(&chi, &ws, 1, &mut spawn_rng_stream(10, "band")).is_err());
}

#[test]
fn experiment_validation() {
    let exp = DetectionExperiment { trials: 50, ..DetectionExperiment::default() };
    assert!(exp.validate(2).is_err());
    let exp = DetectionExperiment { input_scnr_db: vec![], ..DetectionExperiment::default() };
    assert!(exp.validate(2).is_err());
    let exp = DetectionExperiment { snapshots: 1, ..DetectionExperiment::default() };
    assert!(exp.validate(2).is_err());
    assert!(DetectionExperiment::default().validate(2).is_ok());
}
