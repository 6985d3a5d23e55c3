//! Deterministic synthetic volumes: canonical shapes with known
//! Bouligand-Minkowski dimensions, and four parameterized motion classes.
//!
//! The seed drives the per-voxel jitter and, for `oscillating_bar`,
//! `expanding_blob` and `zigzag_walker`, the start phase of the motion.
//! `moving_sphere` and the canonical shapes do not depend on the seed
//! except through jitter.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::VideoVolume;

pub const MAX_JITTER: f64 = 0.05;
pub const MIN_EXTENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Point,
    Line,
    Plane,
    SolidBlock,
    MovingSphere,
    OscillatingBar,
    ExpandingBlob,
    ZigzagWalker,
}

impl SynthKind {
    pub const ALL: [SynthKind; 8] = [
        SynthKind::Point,
        SynthKind::Line,
        SynthKind::Plane,
        SynthKind::SolidBlock,
        SynthKind::MovingSphere,
        SynthKind::OscillatingBar,
        SynthKind::ExpandingBlob,
        SynthKind::ZigzagWalker,
    ];

    pub const MOTIONS: [SynthKind; 4] = [
        SynthKind::MovingSphere,
        SynthKind::OscillatingBar,
        SynthKind::ExpandingBlob,
        SynthKind::ZigzagWalker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Point => "point",
            SynthKind::Line => "line",
            SynthKind::Plane => "plane",
            SynthKind::SolidBlock => "solid_block",
            SynthKind::MovingSphere => "moving_sphere",
            SynthKind::OscillatingBar => "oscillating_bar",
            SynthKind::ExpandingBlob => "expanding_blob",
            SynthKind::ZigzagWalker => "zigzag_walker",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// Translation speed in voxels per frame.
    pub speed: f64,
    /// Oscillation amplitude in voxels.
    pub amplitude: f64,
    /// Shape radius (disk radius, bar half-length / 2, square half-size).
    pub radius: f64,
    /// Oscillation period in frames.
    pub period: f64,
    /// Explicit `[min, max)` corners for `solid_block`; `None` centres a cube
    /// of half-size `radius`.
    pub block: Option<[[usize; 3]; 2]>,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            speed: 1.0,
            amplitude: 8.0,
            radius: 3.0,
            period: 16.0,
            block: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub extent: (usize, usize, usize),
    pub params: SynthParams,
    pub seed: u64,
    pub jitter: f64,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, extent: (usize, usize, usize)) -> Self {
        Self {
            kind,
            extent,
            params: SynthParams::default(),
            seed: 0,
            jitter: 0.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn with_params(mut self, params: SynthParams) -> Self {
        self.params = params;
        self
    }

    fn validate(&self) -> Result<()> {
        let (w, h, d) = self.extent;
        if w < MIN_EXTENT || h < MIN_EXTENT || d < MIN_EXTENT {
            return Err(Error::BadExtent(w, h, d));
        }
        if !(0.0..=MAX_JITTER).contains(&self.jitter) {
            return Err(Error::BadParameter(format!(
                "jitter must lie in [0, {MAX_JITTER}], got {}",
                self.jitter
            )));
        }
        let p = &self.params;
        let finite = [p.speed, p.amplitude, p.radius, p.period]
            .iter()
            .all(|v| v.is_finite());
        if !finite || p.radius <= 0.0 || p.period <= 0.0 {
            return Err(Error::BadParameter(
                "synthetic parameters must be finite with positive radius and period".into(),
            ));
        }
        Ok(())
    }
}

fn triangle(t: f64) -> f64 {
    let f = t - t.floor();
    4.0 * (f - 0.5).abs() - 1.0
}

/// Renders `spec`. Identical specs give bit-identical volumes.
pub fn generate(spec: &SynthSpec) -> Result<VideoVolume> {
    spec.validate()?;
    let (w, h, d) = spec.extent;
    let p = spec.params;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phase: f64 = rng.random();
    let (cx, cy) = ((w / 2) as f64, (h / 2) as f64);
    let tau = 2.0 * std::f64::consts::PI;
    let half_path = 0.5 * p.speed * (d - 1) as f64;

    let mut vol = match spec.kind {
        SynthKind::Point => {
            let mut v = VideoVolume::empty(w, h, d)?;
            v.set(w / 2, h / 2, d / 2, true);
            v
        }
        SynthKind::Line => VideoVolume::from_fn(w, h, d, |x, y, _| x == w / 2 && y == h / 2)?,
        SynthKind::Plane => VideoVolume::from_fn(w, h, d, |_, _, z| z == d / 2)?,
        SynthKind::SolidBlock => {
            let [lo, hi] = p.block.unwrap_or_else(|| {
                let r = p.radius.round() as usize;
                let c = [w / 2, h / 2, d / 2];
                [
                    [
                        c[0].saturating_sub(r),
                        c[1].saturating_sub(r),
                        c[2].saturating_sub(r),
                    ],
                    [c[0] + r + 1, c[1] + r + 1, c[2] + r + 1],
                ]
            });
            VideoVolume::from_fn(w, h, d, |x, y, z| {
                (lo[0]..hi[0]).contains(&x)
                    && (lo[1]..hi[1]).contains(&y)
                    && (lo[2]..hi[2]).contains(&z)
            })?
        }
        SynthKind::MovingSphere => {
            let r2 = p.radius * p.radius;
            VideoVolume::from_fn(w, h, d, |x, y, z| {
                let xc = cx - half_path + p.speed * z as f64;
                (x as f64 - xc).powi(2) + (y as f64 - cy).powi(2) <= r2
            })?
        }
        SynthKind::OscillatingBar => VideoVolume::from_fn(w, h, d, |x, y, z| {
            let xc = cx + p.amplitude * (tau * (z as f64 / p.period + phase)).sin();
            (x as f64 - xc).abs() <= 1.0 && (y as f64 - cy).abs() <= 2.0 * p.radius
        })?,
        SynthKind::ExpandingBlob => VideoVolume::from_fn(w, h, d, |x, y, z| {
            let grow = 0.5 * (1.0 - (tau * (z as f64 / p.period + phase)).cos());
            let r = p.radius + p.amplitude * grow;
            (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r
        })?,
        SynthKind::ZigzagWalker => VideoVolume::from_fn(w, h, d, |x, y, z| {
            let xc = cx - half_path + p.speed * z as f64;
            let yc = cy + p.amplitude * triangle(z as f64 / p.period + phase);
            (x as f64 - xc).abs() <= p.radius && (y as f64 - yc).abs() <= p.radius
        })?,
    };

    if spec.jitter > 0.0 {
        for i in 0..vol.len() {
            if rng.random_bool(spec.jitter) {
                let v = vol.get_index(i);
                vol.set_index(i, !v);
            }
        }
    }
    vol.ensure_nonempty()?;
    Ok(vol)
}

/// Labelled specs for the four-class motion benchmark.
///
/// Each instance draws its speed, amplitude, radius and period from a narrow
/// class-independent band around the defaults, plus its own seed.
pub fn motion_benchmark(
    per_class: usize,
    extent: (usize, usize, usize),
    jitter: f64,
    seed: u64,
) -> Vec<SynthSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_class * SynthKind::MOTIONS.len());
    for kind in SynthKind::MOTIONS {
        for _ in 0..per_class {
            let params = SynthParams {
                speed: rng.random_range(0.8..1.2),
                amplitude: rng.random_range(6.0..10.0),
                radius: rng.random_range(2.5..3.5),
                period: rng.random_range(12.0..20.0),
                block: None,
            };
            out.push(SynthSpec {
                kind,
                extent,
                params,
                seed: rng.random(),
                jitter,
            });
        }
    }
    out
}
