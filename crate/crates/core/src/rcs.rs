//! Statistical radar cross-section model.
//!
//! The RCS coefficient multiplies the sensing channel directly, so it is an
//! amplitude-scale quantity and the profile is tabulated in the same units.
//! Its first two moments per link are the mean `mu` and variance `nu2`.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RcsModel {
    /// Gamma law with the given shape; variance `mu^2 / shape`.
    ChiSquare { shape: f64 },
    /// Exponential law; variance `mu^2`.
    SwerlingOne,
}

impl Default for RcsModel {
    fn default() -> Self {
        RcsModel::ChiSquare { shape: 4.0 }
    }
}

impl RcsModel {
    pub fn variance(&self, mu: f64) -> f64 {
        match *self {
            RcsModel::ChiSquare { shape } => mu * mu / shape,
            RcsModel::SwerlingOne => mu * mu,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            RcsModel::ChiSquare { shape } => format!("chi_square_{shape}"),
            RcsModel::SwerlingOne => "swerling_one".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RcsModel::ChiSquare { shape } if !(shape > 0.0 && shape.is_finite()) => Err(
                CoreError::InvalidConfig(format!("chi-square shape must be positive, got {shape}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Mean RCS tabulated over aspect angle in the target frame, linearly
/// interpolated with periodic wrap-around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcsProfile {
    /// Sorted aspect angles in [-pi, pi), radians.
    pub angles: Vec<f64>,
    pub means: Vec<f64>,
}

impl RcsProfile {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(CoreError::Profile("profile has no points".into()));
        }
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for (a, m) in points {
            if !a.is_finite() || !m.is_finite() {
                return Err(CoreError::Profile(format!("non-finite row ({a}, {m})")));
            }
            if m < 0.0 {
                return Err(CoreError::Profile(format!("negative mean RCS {m} at {a} rad")));
            }
            let mut w = wrap_angle(a);
            if w >= PI {
                w -= 2.0 * PI;
            }
            pts.push((w, m));
        }
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        pts.dedup_by(|x, y| (x.0 - y.0).abs() < 1e-12);
        Ok(Self {
            angles: pts.iter().map(|p| p.0).collect(),
            means: pts.iter().map(|p| p.1).collect(),
        })
    }

    /// Tabulates `f` on `count` equally spaced angles covering [-pi, pi).
    pub fn from_fn(count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let step = 2.0 * PI / count as f64;
        Self::new((0..count).map(|i| {
            let a = -PI + i as f64 * step;
            (a, f(a))
        }).collect())
    }

    pub fn flat(value: f64) -> Self {
        Self {
            angles: vec![0.0],
            means: vec![value],
        }
    }

    /// Default low-observable two-lobe pattern `0.1 + 0.9 cos^4(theta)`.
    pub fn two_lobe() -> Self {
        Self::from_fn(720, |a| 0.1 + 0.9 * a.cos().powi(4)).expect("analytic profile is valid")
    }

    /// Reads `angle_deg, mean_rcs` rows. A leading non-numeric row is taken
    /// as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| CoreError::Profile(format!("{}: {e}", path.display())))?;
        let mut points = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| CoreError::Profile(format!("{}: {e}", path.display())))?;
            if rec.len() < 2 {
                return Err(CoreError::Profile(format!("row {} has fewer than two fields", i + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(m)) => points.push((a.to_radians(), m)),
                _ if i == 0 => continue,
                _ => {
                    return Err(CoreError::Profile(format!(
                        "row {} is not numeric: {:?}",
                        i + 1,
                        rec
                    )))
                }
            }
        }
        Self::new(points)
    }

    pub fn mean_at(&self, angle: f64) -> f64 {
        let n = self.angles.len();
        if n == 1 {
            return self.means[0];
        }
        let mut a = wrap_angle(angle);
        if a >= PI {
            a -= 2.0 * PI;
        }
        // index of the first grid angle strictly greater than `a`
        let hi = self.angles.partition_point(|&g| g <= a);
        let (lo_i, hi_i, lo_a, hi_a) = if hi == 0 {
            (n - 1, 0, self.angles[n - 1] - 2.0 * PI, self.angles[0])
        } else if hi == n {
            (n - 1, 0, self.angles[n - 1], self.angles[0] + 2.0 * PI)
        } else {
            (hi - 1, hi, self.angles[hi - 1], self.angles[hi])
        };
        let t = (a - lo_a) / (hi_a - lo_a);
        self.means[lo_i] * (1.0 - t) + self.means[hi_i] * t
    }
}

/// `cos(|theta_n - theta_m| / 2)` with the difference wrapped to [0, pi].
pub fn bistatic_scale(theta_n: f64, theta_m: f64) -> f64 {
    (wrap_angle(theta_n - theta_m).abs() / 2.0).cos()
}

/// Aspect angle of a link in the target frame. `theta_n` and `theta_m` are
/// the arrival azimuths at the two nodes in the global frame, so the target
/// sees the nodes at `theta + pi`; the link looks along their circular
/// midpoint.
pub fn aspect_angle(theta_n: f64, theta_m: f64, target_heading: f64) -> f64 {
    let (a, b) = (theta_n + PI, theta_m + PI);
    let (s, c) = (a.sin() + b.sin(), a.cos() + b.cos());
    let mid = if s.hypot(c) < 1e-12 { a + PI / 2.0 } else { s.atan2(c) };
    wrap_angle(mid - target_heading)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRcs {
    pub mu: f64,
    pub nu2: f64,
}

impl LinkRcs {
    /// `E[beta^2] = mu^2 + nu^2`.
    pub fn m2(&self) -> f64 {
        self.mu * self.mu + self.nu2
    }
}

pub fn link_statistics(
    profile: &RcsProfile,
    model: RcsModel,
    theta_n: f64,
    theta_m: f64,
    target_heading: f64,
) -> LinkRcs {
    let sigma = profile.mean_at(aspect_angle(theta_n, theta_m, target_heading));
    let mu = bistatic_scale(theta_n, theta_m) * sigma;
    LinkRcs {
        mu,
        nu2: model.variance(mu),
    }
}

/// Per-link RCS moments, indexed `[receiver n][transmitter m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcsStatistics {
    pub model: RcsModel,
    pub links: Vec<Vec<LinkRcs>>,
}

impl RcsStatistics {
    /// Statistics for every ordered node pair given global-frame arrival
    /// azimuths.
    pub fn build(profile: &RcsProfile, model: RcsModel, azimuths: &[f64], heading: f64) -> Self {
        let links = azimuths
            .iter()
            .map(|&tn| {
                azimuths
                    .iter()
                    .map(|&tm| link_statistics(profile, model, tn, tm, heading))
                    .collect()
            })
            .collect();
        Self { model, links }
    }

    pub fn m2(&self, n: usize, m: usize) -> f64 {
        self.links[n][m].m2()
    }

    /// One independent draw per ordered link.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        self.links
            .iter()
            .map(|row| row.iter().map(|l| sample_one(l, self.model, rng)).collect())
            .collect()
    }
}

pub fn sample_one<R: Rng + ?Sized>(link: &LinkRcs, model: RcsModel, rng: &mut R) -> f64 {
    if link.mu <= 0.0 {
        return 0.0;
    }
    match model {
        RcsModel::ChiSquare { shape } => Gamma::new(shape, link.mu / shape)
            .expect("validated shape and positive mean")
            .sample(rng),
        RcsModel::SwerlingOne => Exp::new(1.0 / link.mu)
            .expect("positive mean")
            .sample(rng),
    }
}

pub fn sample_rcs<R: Rng + ?Sized>(link: &LinkRcs, model: RcsModel, rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| sample_one(link, model, rng)).collect()
}

/// One monostatic RCS draw per grid angle, for polar plots.
pub fn emit_polar_pattern<R: Rng + ?Sized>(
    profile: &RcsProfile,
    model: RcsModel,
    rng: &mut R,
    resolution_deg: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(resolution_deg >= 1.0) {
        return Err(CoreError::InvalidConfig(format!(
            "polar resolution must be at least 1 degree, got {resolution_deg}"
        )));
    }
    let count = (360.0 / resolution_deg).floor() as usize;
    Ok((0..count)
        .map(|i| {
            let deg = -180.0 + i as f64 * resolution_deg;
            let mu = profile.mean_at(deg.to_radians());
            let link = LinkRcs {
                mu,
                nu2: model.variance(mu),
            };
            (deg, sample_one(&link, model, rng))
        })
        .collect())
}
