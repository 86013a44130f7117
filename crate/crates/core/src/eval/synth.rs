//! Seeded synthetic datasets: a fixed base waveform under random smooth time
//! warps, plus injected anomalies.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Label, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    /// A short burst at ten times the signal amplitude.
    Spike,
    /// The tail of the series is offset by a constant.
    LevelShift,
    /// A quarter of the series is played backwards.
    ShapeSwap,
}

impl FromStr for AnomalyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spike" => Ok(AnomalyKind::Spike),
            "level_shift" => Ok(AnomalyKind::LevelShift),
            "shape_swap" => Ok(AnomalyKind::ShapeSwap),
            other => Err(format!("unknown anomaly kind `{other}`")),
        }
    }
}

impl fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnomalyKind::Spike => "spike",
            AnomalyKind::LevelShift => "level_shift",
            AnomalyKind::ShapeSwap => "shape_swap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_normal: usize,
    pub n_anomalous: usize,
    pub length: usize,
    /// 0 disables warping; must stay below 1 so warps remain monotone.
    pub warp_strength: f64,
    /// Standard deviation of additive Gaussian noise.
    pub noise: f64,
    pub anomaly_kind: AnomalyKind,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_normal: 100,
            n_anomalous: 10,
            length: 60,
            warp_strength: 0.5,
            noise: 0.01,
            anomaly_kind: AnomalyKind::Spike,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_normal + self.n_anomalous == 0 {
            return bad("at least one series is required");
        }
        if self.length < 8 {
            return bad("length must be at least 8");
        }
        if !(0.0..1.0).contains(&self.warp_strength) {
            return bad("warp_strength must lie in [0, 1)");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise must be a non-negative number");
        }
        Ok(())
    }
}

/// Peak magnitude of [`base_waveform`] is about 1.
const SIGNAL_AMPLITUDE: f64 = 1.0;

/// Base pattern on `t` in [0, 1]: a slow sine carrying one sharp positive
/// and one broader negative bump.
pub fn base_waveform(t: f64) -> f64 {
    let bump = |centre: f64, width: f64| (-((t - centre) / width).powi(2)).exp();
    0.6 * (2.0 * PI * t).sin() + bump(0.35, 0.04) - 0.5 * bump(0.7, 0.06)
}

/// Smooth monotone warp of [0, 1] fixing both ends.
struct Warp {
    coeffs: [f64; 2],
}

impl Warp {
    fn sample(rng: &mut impl Rng, strength: f64) -> Self {
        Warp {
            coeffs: [
                strength * rng.gen_range(-0.5..=0.5),
                strength * rng.gen_range(-0.5..=0.5),
            ],
        }
    }

    /// `t + sum_k c_k sin(k pi t) / (k pi)`; its derivative stays above
    /// `1 - strength`.
    fn apply(&self, t: f64) -> f64 {
        let mut out = t;
        for (k, c) in self.coeffs.iter().enumerate() {
            let f = (k + 1) as f64 * PI;
            out += c * (f * t).sin() / f;
        }
        out.clamp(0.0, 1.0)
    }
}

fn warped_normal(rng: &mut ChaCha8Rng, config: &SynthConfig, noise: &Normal<f64>) -> Vec<f64> {
    let warp = Warp::sample(rng, config.warp_strength);
    let last = (config.length - 1) as f64;
    (0..config.length)
        .map(|j| {
            let v = base_waveform(warp.apply(j as f64 / last));
            if config.noise > 0.0 {
                v + noise.sample(rng)
            } else {
                v
            }
        })
        .collect()
}

fn inject(rng: &mut ChaCha8Rng, values: &mut [f64], kind: AnomalyKind) {
    let n = values.len();
    match kind {
        AnomalyKind::Spike => {
            let width = (n / 30).max(1);
            let start = rng.gen_range(n / 10..=(n * 9 / 10).saturating_sub(width).max(n / 10));
            for v in &mut values[start..start + width] {
                *v += 10.0 * SIGNAL_AMPLITUDE;
            }
        }
        AnomalyKind::LevelShift => {
            let start = rng.gen_range(n * 3 / 10..=n * 7 / 10);
            for v in &mut values[start..] {
                *v += 1.5 * SIGNAL_AMPLITUDE;
            }
        }
        AnomalyKind::ShapeSwap => {
            let width = (n / 4).max(2);
            let start = rng.gen_range(0..=n - width);
            values[start..start + width].reverse();
        }
    }
}

/// Generates `n_normal` warped copies of the base waveform and `n_anomalous`
/// warped copies carrying the configured anomaly, in seeded random order.
/// Normals are `n0000, n0001, ...`, anomalies `a0000, ...`.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<TimeSeries>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut out = Vec::with_capacity(config.n_normal + config.n_anomalous);
    for i in 0..config.n_normal {
        let values = warped_normal(&mut rng, config, &noise);
        out.push(TimeSeries::labeled(
            format!("n{i:04}"),
            values,
            Label::Normal,
        ));
    }
    for i in 0..config.n_anomalous {
        let mut values = warped_normal(&mut rng, config, &noise);
        inject(&mut rng, &mut values, config.anomaly_kind);
        out.push(TimeSeries::labeled(
            format!("a{i:04}"),
            values,
            Label::Anomalous,
        ));
    }
    out.shuffle(&mut rng);
    Ok(out)
}
