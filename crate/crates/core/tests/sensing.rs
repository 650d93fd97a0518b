use disac_core::channel::{nominal_sensing_factors, SensingChannelFactors};
use disac_core::linalg::{c64, log_det_pd, inverse_pd, outer, sample_cn, BlockDiag, CMat, CVec};
use disac_core::rcs::{LinkRcs, RcsModel, RcsStatistics};
use disac_core::scenario::{derive_geometry, spawn_rng_stream, ClutterPoint, ScenarioConfig};
use disac_core::sensing::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn desk_model(sync: f64) -> (ScenarioConfig, SensingChannelFactors, RcsStatistics, BlockDiag) {
    let mut cfg = ScenarioConfig::desk(2);
    cfg.sync_error_bound = sync;
    let geo = derive_geometry(&cfg).unwrap();
    let factors = nominal_sensing_factors(&cfg, &geo, &geo.target_aoa).unwrap();
    let az: Vec<f64> = geo.target_aoa.iter().map(|a| a + cfg.broadside).collect();
    let stats = RcsStatistics::build(&cfg.rcs_profile, cfg.rcs_model, &az, cfg.target_heading);
    let r0 = noise_clutter_covariance(&cfg, &geo).unwrap();
    (cfg, factors, stats, r0)
}

fn random_psd(rng: &mut ChaCha20Rng, n: usize, rank: usize) -> CMat {
    let mut w = CMat::zeros(n, n);
    for _ in 0..rank {
        let v = sample_cn(rng, n);
        w += outer(&v, &v);
    }
    w
}

fn random_ws(rng: &mut ChaCha20Rng, cfg: &ScenarioConfig) -> Vec<CMat> {
    (0..cfg.num_nodes()).map(|_| random_psd(rng, cfg.tx_antennas, 2)).collect()
}

#[test]
fn clutter_examples() {
    let mut cfg = ScenarioConfig::desk(0);
    let geo = derive_geometry(&cfg).unwrap();
    cfg.clutter.clear();
    let r0 = noise_clutter_covariance(&cfg, &geo).unwrap();
    for b in &r0.blocks {
        assert!((b - CMat::identity(4, 4).scale(cfg.sensing_noise)).norm() == 0.0);
    }
    cfg.clutter = vec![ClutterPoint { rx: Some(0), tx: Some(1), offset: 0.4, power: 2.5 }];
    let clu = build_clutter_covariance(&cfg, &geo).unwrap();
    assert!((clu[0][1].trace().re - 2.5 * cfg.rx_antennas as f64).abs() < 1e-12);
    assert_eq!(clu[1][0].norm(), 0.0);
    cfg.clutter.push(ClutterPoint { rx: None, tx: None, offset: -0.9, power: 1.0 });
    let clu = build_clutter_covariance(&cfg, &geo).unwrap();
    for row in &clu {
        for r in row {
            let lmin = disac_core::linalg::min_eigenvalue(r);
            assert!(lmin >= -1e-12 * r.norm());
        }
    }
    cfg.clutter[0].power = -1.0;
    assert!(build_clutter_covariance(&cfg, &geo).is_err());
}

#[test]
fn target_covariance_examples() {
    let (cfg, factors, stats, _) = desk_model(0.01);
    let n = cfg.num_nodes();
    let zeros = vec![CMat::zeros(cfg.tx_antennas, cfg.tx_antennas); n];
    let beta = stats.sample(&mut spawn_rng_stream(0, "b"));
    assert_eq!(target_covariance_draw(&factors, &beta, &zeros).frobenius(), 0.0);

    // a single active rank-one link gives a rank-one block
    let w = CVec::from_element(cfg.tx_antennas, c64(0.5, 0.0));
    let mut ws = zeros.clone();
    ws[0] = outer(&w, &w);
    let mut one = vec![vec![0.0; n]; n];
    one[0][0] = 1.3;
    let rs = target_covariance_draw(&factors, &one, &ws);
    let sv = rs.blocks[0].clone().svd(false, false).singular_values;
    assert!(sv[0] > 0.0 && sv[1] < 1e-12 * sv[0]);

    let ws = random_ws(&mut ChaCha20Rng::seed_from_u64(1), &cfg);
    let doubled: Vec<Vec<f64>> = beta.iter().map(|r| r.iter().map(|b| 2.0 * b).collect()).collect();
    let a = target_covariance_draw(&factors, &beta, &ws).frobenius();
    let b = target_covariance_draw(&factors, &doubled, &ws).frobenius();
    assert!((b / a - 4.0).abs() < 1e-12);
}

#[test]
fn expected_covariance_deterministic_rcs() {
    let (cfg, factors, mut stats, _) = desk_model(0.01);
    for row in &mut stats.links {
        for l in row.iter_mut() {
            l.nu2 = 0.0;
        }
    }
    let mu: Vec<Vec<f64>> = stats.links.iter().map(|r| r.iter().map(|l| l.mu).collect()).collect();
    let ws = random_ws(&mut ChaCha20Rng::seed_from_u64(3), &cfg);
    let e = expected_target_covariance(&factors, &stats, &ws);
    let d = target_covariance_draw(&factors, &mu, &ws);
    assert!(e.add(&d.scale(-1.0)).frobenius() <= 1e-12 * e.frobenius());
}

#[test]
fn expected_covariance_matches_monte_carlo() {
    let (cfg, factors, stats, _) = desk_model(0.01);
    let ws = random_ws(&mut ChaCha20Rng::seed_from_u64(4), &cfg);
    let mut rng = spawn_rng_stream(4, "mc");
    let draws = 10_000;
    let mut acc = BlockDiag::zeros(cfg.num_nodes(), cfg.rx_antennas);
    for _ in 0..draws {
        acc = acc.add(&target_covariance_draw(&factors, &stats.sample(&mut rng), &ws));
    }
    let mean = acc.scale(1.0 / draws as f64);
    let want = expected_target_covariance(&factors, &stats, &ws);
    let rel = mean.add(&want.scale(-1.0)).frobenius() / want.frobenius();
    assert!(rel < 0.03, "relative error {rel}");
}

#[test]
fn shrinkage_scales_expected_covariance() {
    let (cfg, f1, stats, _) = desk_model(0.01);
    let (_, f0, _, _) = desk_model(0.0);
    let ws = random_ws(&mut ChaCha20Rng::seed_from_u64(5), &cfg);
    let ratio = expected_target_covariance(&f1, &stats, &ws).frobenius()
        / expected_target_covariance(&f0, &stats, &ws).frobenius();
    assert!((ratio - 0.9604).abs() < 1e-12);
}

#[test]
fn kld_examples() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let r0 = random_psd(&mut rng, 3, 5) + CMat::identity(3, 3);
    assert!(kld(&r0, &r0).unwrap().abs() < 1e-12);
    let one = CMat::from_element(1, 1, c64(1.0, 0.0));
    let two = CMat::from_element(1, 1, c64(2.0, 0.0));
    assert!((kld(&one, &two).unwrap() - 0.306_852_819_440_054_7).abs() < 1e-12);
    assert!(kld(&CMat::zeros(2, 2), &CMat::identity(2, 2)).is_err());
}

/// Log density of `CN(0, R)` up to the shared `-n log(pi)`.
fn log_density(x: &CVec, r_inv: &CMat, log_det: f64) -> f64 {
    -log_det - (x.adjoint() * r_inv * x)[(0, 0)].re
}

#[test]
fn kld_matches_sampled_divergence() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let r0 = random_psd(&mut rng, 4, 6) + CMat::identity(4, 4);
    let r1 = &r0 + random_psd(&mut rng, 4, 1);
    let root = disac_core::linalg::sqrt_psd(&r1);
    let (i0, i1) = (inverse_pd(&r0, "r0").unwrap(), inverse_pd(&r1, "r1").unwrap());
    let (l0, l1) = (log_det_pd(&r0, "r0").unwrap(), log_det_pd(&r1, "r1").unwrap());
    let samples = 200_000;
    let mut acc = 0.0;
    for _ in 0..samples {
        let x = &root * sample_cn(&mut rng, 4);
        acc += log_density(&x, &i1, l1) - log_density(&x, &i0, l0);
    }
    let sampled = acc / samples as f64;
    let exact = kld(&r0, &r1).unwrap();
    assert!((sampled / exact - 1.0).abs() < 0.01, "sampled {sampled} exact {exact}");
}

#[test]
fn jensen_bound_holds() {
    let (cfg, factors, stats, r0) = desk_model(0.01);
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let ws: Vec<CMat> = random_ws(&mut rng, &cfg).iter().map(|w| w.scale(1e-3)).collect();
    let bound = lower_bound_objective(&r0, &expected_target_covariance(&factors, &stats, &ws)).unwrap();
    assert!(bound > 0.0);
    let spread = expected_kld_monte_carlo(&r0, &factors, &stats, &ws, 10_000, &mut rng).unwrap();
    assert!(spread.mean >= bound - 1e-9, "mean {} bound {bound}", spread.mean);
    assert!(spread.p10 <= spread.mean && spread.mean <= spread.p90);

    let zero = BlockDiag::zeros(cfg.num_nodes(), cfg.rx_antennas);
    assert!(lower_bound_objective(&r0, &zero).unwrap().abs() < 1e-12);
}

#[test]
fn deterministic_rcs_collapses_spread() {
    let (cfg, factors, mut stats, r0) = desk_model(0.01);
    for row in &mut stats.links {
        for l in row.iter_mut() {
            *l = LinkRcs { mu: l.mu, nu2: 0.0 };
        }
    }
    stats.model = RcsModel::ChiSquare { shape: 1e12 };
    let ws = random_ws(&mut ChaCha20Rng::seed_from_u64(9), &cfg);
    let s = expected_kld_monte_carlo(&r0, &factors, &stats, &ws, 50, &mut spawn_rng_stream(1, "s")).unwrap();
    assert!(s.width() < 1e-4 * s.mean);
    assert!(expected_kld_monte_carlo(&r0, &factors, &stats, &ws, 0, &mut spawn_rng_stream(1, "s")).is_err());
}

fn block_pair(seed: u64, alpha: f64) -> (BlockDiag, BlockDiag) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let r0 = BlockDiag::new((0..2).map(|_| random_psd(&mut rng, 3, 4) + CMat::identity(3, 3)).collect());
    let p = BlockDiag::new((0..2).map(|_| random_psd(&mut rng, 3, 2).scale(alpha)).collect());
    (r0, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kld_nonnegative(seed in 0u64..10_000, alpha in 0.0f64..10.0) {
        let (r0, p) = block_pair(seed, alpha);
        let v = kld_blocks(&r0, &r0.add(&p)).unwrap();
        prop_assert!(v >= -1e-12);
        if alpha > 1e-3 {
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn kld_monotone_in_scale(seed in 0u64..10_000, a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let (r0, p) = block_pair(seed, 1.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let vlo = kld_blocks(&r0, &r0.add(&p.scale(lo))).unwrap();
        let vhi = kld_blocks(&r0, &r0.add(&p.scale(hi))).unwrap();
        prop_assert!(vhi >= vlo - 1e-10);
    }

    #[test]
    fn block_sum_equals_dense(seed in 0u64..10_000) {
        let (r0, p) = block_pair(seed, 1.0);
        let r1 = r0.add(&p);
        let dense = kld(&r0.to_dense(), &r1.to_dense()).unwrap();
        prop_assert!((dense - kld_blocks(&r0, &r1).unwrap()).abs() < 1e-9 * (1.0 + dense));
    }

    #[test]
    fn expected_covariance_is_linear(seed in 0u64..10_000) {
        let (cfg, factors, stats, _) = desk_model(0.01);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a = random_ws(&mut rng, &cfg);
        let b = random_ws(&mut rng, &cfg);
        let sum: Vec<CMat> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let lhs = expected_target_covariance(&factors, &stats, &sum);
        let rhs = expected_target_covariance(&factors, &stats, &a).add(&expected_target_covariance(&factors, &stats, &b));
        prop_assert!(lhs.add(&rhs.scale(-1.0)).frobenius() <= 1e-12 * lhs.frobenius());
    }
}
