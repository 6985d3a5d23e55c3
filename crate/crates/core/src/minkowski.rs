//! Bouligand-Minkowski dilation curves and scalar fractal dimensions.
//!
//! The influence volume `V(r)` counts the voxels whose distance to the shape
//! is at most `r`. With an exact squared distance field that is just the
//! cumulative histogram of the field, sampled at the squared radii the
//! lattice actually produces.

use std::fmt::Write as _;

use crate::edt::DistanceField;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Voxels per partial histogram.
const HISTOGRAM_CHUNK: usize = 1 << 16;

/// Points whose volume is within this fraction of the total are saturated.
pub const SATURATION_FRACTION: f64 = 0.99;

/// `V(r)` at every squared radius present in the field, up to `r_max^2` or
/// saturation.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationCurve {
    sq_radii: Vec<u32>,
    volumes: Vec<u64>,
    total_voxels: u64,
    r_max: f64,
}

impl DilationCurve {
    pub fn sq_radii(&self) -> &[u32] {
        &self.sq_radii
    }

    pub fn volumes(&self) -> &[u64] {
        &self.volumes
    }

    pub fn total_voxels(&self) -> u64 {
        self.total_voxels
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.sq_radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sq_radii.is_empty()
    }

    /// True when the last sample covers the whole grid.
    pub fn is_saturated(&self) -> bool {
        self.volumes.last() == Some(&self.total_voxels)
    }

    /// `sq_radius,volume` rows under a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sq_radius,volume\n");
        for (q, v) in self.sq_radii.iter().zip(&self.volumes) {
            let _ = writeln!(s, "{q},{v}");
        }
        s
    }
}

/// `(ln r, ln V(r))` for every sample with `r >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLogCurve {
    points: Vec<(f64, f64)>,
    r_max: f64,
    total_voxels: u64,
}

impl LogLogCurve {
    /// Builds a curve from raw points. `log_r` must be strictly increasing.
    pub fn from_points(points: Vec<(f64, f64)>, r_max: f64, total_voxels: u64) -> Result<Self> {
        if points.windows(2).any(|p| !(p[1].0 > p[0].0)) {
            return Err(Error::BadParameter(
                "log_r must be strictly increasing".into(),
            ));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::BadParameter("non-finite log-log point".into()));
        }
        Ok(Self {
            points,
            r_max,
            total_voxels,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn total_voxels(&self) -> u64 {
        self.total_voxels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("log_r,log_v\n");
        for (r, v) in &self.points {
            let _ = writeln!(s, "{r},{v}");
        }
        s
    }
}

fn parse_csv_rows<A, B>(text: &str, header: &str) -> Result<Vec<(A, B)>>
where
    A: std::str::FromStr,
    B: std::str::FromStr,
{
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(header) {
        return Err(Error::FormatError(format!("expected header {header:?}")));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (a, b) = l
                .split_once(',')
                .ok_or_else(|| Error::FormatError(format!("bad row {l:?}")))?;
            match (a.trim().parse(), b.trim().parse()) {
                (Ok(a), Ok(b)) => Ok((a, b)),
                _ => Err(Error::FormatError(format!("bad row {l:?}"))),
            }
        })
        .collect()
}

/// Parses the output of [`DilationCurve::to_csv`].
pub fn read_dilation_csv(text: &str) -> Result<Vec<(u32, u64)>> {
    parse_csv_rows(text, "sq_radius,volume")
}

/// Parses the output of [`LogLogCurve::to_csv`].
pub fn read_loglog_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    parse_csv_rows(text, "log_r,log_v")
}

/// Legendre: `q` is a sum of three squares iff it is not `4^a (8b + 7)`.
pub fn is_sum_of_three_squares(mut q: u64) -> bool {
    if q == 0 {
        return true;
    }
    while q.is_multiple_of(4) {
        q /= 4;
    }
    q % 8 != 7
}

/// Largest integer squared radius covered by `r_max`.
fn max_sq_radius(r_max: f64) -> Result<u64> {
    if !(r_max >= 1.0) || !r_max.is_finite() {
        return Err(Error::RadiusTooSmall(r_max));
    }
    Ok((r_max * r_max).floor() as u64)
}

pub fn dilation_curve(field: &DistanceField, r_max: f64) -> Result<DilationCurve> {
    dilation_curve_with(field, r_max, Execution::default())
}

pub fn dilation_curve_with(
    field: &DistanceField,
    r_max: f64,
    exec: Execution,
) -> Result<DilationCurve> {
    let q_cap = max_sq_radius(r_max)?.min(field.max() as u64) as usize;
    let data = field.as_slice();
    let chunks = data.len().div_ceil(HISTOGRAM_CHUNK);
    let partials = par::map_range(chunks, exec, |c| {
        let mut hist = vec![0u64; q_cap + 1];
        let end = ((c + 1) * HISTOGRAM_CHUNK).min(data.len());
        for &q in &data[c * HISTOGRAM_CHUNK..end] {
            if (q as usize) <= q_cap {
                hist[q as usize] += 1;
            }
        }
        hist
    });
    let mut hist = vec![0u64; q_cap + 1];
    for p in &partials {
        for (h, v) in hist.iter_mut().zip(p) {
            *h += v;
        }
    }

    let total = data.len() as u64;
    let mut sq_radii = Vec::new();
    let mut volumes = Vec::new();
    let mut cumulative = 0u64;
    for (q, &count) in hist.iter().enumerate() {
        if count == 0 {
            continue;
        }
        cumulative += count;
        sq_radii.push(q as u32);
        volumes.push(cumulative);
        if cumulative == total {
            break;
        }
    }
    Ok(DilationCurve {
        sq_radii,
        volumes,
        total_voxels: total,
        r_max,
    })
}

/// Drops the `r = 0` sample and maps the rest to `(ln r, ln V)`.
pub fn loglog(curve: &DilationCurve) -> Result<LogLogCurve> {
    let points: Vec<(f64, f64)> = curve
        .sq_radii
        .iter()
        .zip(&curve.volumes)
        .filter(|(&q, _)| q >= 1)
        .map(|(&q, &v)| (0.5 * (q as f64).ln(), (v as f64).ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::CurveTooShort {
            needed: 2,
            have: points.len(),
        });
    }
    LogLogCurve::from_points(points, curve.r_max, curve.total_voxels)
}

/// Per-point `dims - ln V / ln r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseFd {
    pub points: Vec<(f64, f64)>,
    /// Samples at `r = 1`, where the ratio is undefined.
    pub skipped: usize,
}

pub fn fd_pointwise(curve: &LogLogCurve, dims: u32) -> PointwiseFd {
    let mut skipped = 0;
    let points = curve
        .points
        .iter()
        .filter_map(|&(lr, lv)| {
            if lr == 0.0 {
                skipped += 1;
                None
            } else {
                Some((lr, f64::from(dims) - lv / lr))
            }
        })
        .collect();
    PointwiseFd { points, skipped }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate {
    pub dimension: f64,
    pub slope: f64,
    pub r2: f64,
    pub points_used: usize,
}

/// Regression estimate over `r` in `[fit_lo, fit_hi]`, saturated tail excluded.
pub fn estimate_fd(curve: &LogLogCurve, fit_lo: f64, fit_hi: f64) -> Result<FdEstimate> {
    const EPS: f64 = 1e-12;
    let (lo, hi) = (fit_lo.ln() - EPS, fit_hi.ln() + EPS);
    let saturated = (SATURATION_FRACTION * curve.total_voxels as f64).ln();
    let window: Vec<(f64, f64)> = curve
        .points
        .iter()
        .copied()
        .filter(|&(lr, lv)| lr >= lo && lr <= hi && lv < saturated)
        .collect();
    if window.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            have: window.len(),
        });
    }
    let n = window.len() as f64;
    let mx = window.iter().map(|p| p.0).sum::<f64>() / n;
    let my = window.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = window.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = window.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = window.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = window
        .iter()
        .map(|p| (p.1 - (my + slope * (p.0 - mx))).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(FdEstimate {
        dimension: 3.0 - slope,
        slope,
        r2,
        points_used: window.len(),
    })
}

/// [`estimate_fd`] over the default window `[2, r_max]`.
pub fn estimate_fd_default(curve: &LogLogCurve) -> Result<FdEstimate> {
    estimate_fd(curve, 2.0, curve.r_max)
}
