//! Multi-scale fractal dimension signatures.
//!
//! The log-log dilation curve is conditioned onto a uniform grid, extended
//! on both sides, differentiated in the frequency domain with a Gaussian
//! low-pass, and mapped to `MFD(log r) = 3 - d log V / d log r`.

use std::fmt::Write as _;
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::LogLogCurve;

/// How the conditioned curve is extended before differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Replication {
    /// Three verbatim copies (pure periodic extension).
    Periodic,
    /// Outer copies shifted so each seam continues the curve's end slopes.
    #[default]
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignatureParams {
    /// Gaussian standard deviation, in samples of the resampled grid.
    pub sigma: f64,
    pub r_max: f64,
    pub grid_len: usize,
    pub feature_len: usize,
    #[serde(default)]
    pub replication: Replication,
}

impl Default for SignatureParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            r_max: 10.0,
            grid_len: 512,
            feature_len: 128,
            replication: Replication::Continuous,
        }
    }
}

impl SignatureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::NonPositiveSigma(self.sigma));
        }
        if !(self.r_max >= 2.0) || !self.r_max.is_finite() {
            return Err(Error::RadiusTooSmall(self.r_max));
        }
        if self.grid_len < 64 || !self.grid_len.is_power_of_two() {
            return Err(Error::BadParameter(format!(
                "grid_len must be a power of two >= 64, got {}",
                self.grid_len
            )));
        }
        if self.feature_len < 2 || self.feature_len > self.grid_len {
            return Err(Error::BadParameter(format!(
                "feature_len must lie in [2, grid_len], got {}",
                self.feature_len
            )));
        }
        Ok(())
    }
}

/// Uniformly sampled curve. `core` marks the samples of the original curve
/// inside a possibly extended sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformCurve {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
    pub core: Range<usize>,
}

impl UniformCurve {
    pub fn x(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `[first, last]` log-radius of the core samples.
    pub fn retained_range(&self) -> (f64, f64) {
        (self.x(self.core.start), self.x(self.core.end - 1))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Number of leading points whose gap to the next point exceeds twice the
/// median gap of the whole curve.
pub fn sparse_head_len(log_r: &[f64]) -> usize {
    if log_r.len() < 2 {
        return 0;
    }
    let gaps: Vec<f64> = log_r.windows(2).map(|w| w[1] - w[0]).collect();
    let limit = 2.0 * median(gaps.clone());
    gaps.iter().take_while(|&&g| g > limit).count()
}

fn subdivide(a: (f64, f64), b: (f64, f64), target: f64, depth: u32, out: &mut Vec<(f64, f64)>) {
    if b.0 - a.0 > target && depth < 60 {
        let mid = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
        subdivide(a, mid, target, depth + 1, out);
        subdivide(mid, b, target, depth + 1, out);
    } else {
        out.push(b);
    }
}

/// Piecewise-linear interpolation of sorted `points` at `x`.
fn interpolate(points: &[(f64, f64)], cursor: &mut usize, x: f64) -> f64 {
    while *cursor + 2 < points.len() && points[*cursor + 1].0 <= x {
        *cursor += 1;
    }
    let (a, b) = (points[*cursor], points[*cursor + 1]);
    let t = (x - a.0) / (b.0 - a.0);
    a.1 + t * (b.1 - a.1)
}

/// Sparse-head removal, midpoint densification and uniform resampling.
pub fn prepare_curve(curve: &LogLogCurve, grid_len: usize) -> Result<UniformCurve> {
    let pts = curve.points();
    if pts.len() < 8 {
        return Err(Error::CurveTooShort {
            needed: 8,
            have: pts.len(),
        });
    }
    if grid_len < 2 {
        return Err(Error::BadParameter(format!("grid_len {grid_len} < 2")));
    }
    let log_r: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let kept = &pts[sparse_head_len(&log_r)..];
    let (first, last) = (kept[0].0, kept[kept.len() - 1].0);
    if kept.len() < 2 || !(last > first) {
        return Err(Error::DegenerateRange);
    }
    let step = (last - first) / (grid_len - 1) as f64;

    let mut dense = vec![kept[0]];
    for w in kept.windows(2) {
        subdivide(w[0], w[1], step, 0, &mut dense);
    }

    let mut cursor = 0;
    let values = (0..grid_len)
        .map(|i| {
            let x = if i + 1 == grid_len {
                last
            } else {
                first + step * i as f64
            };
            interpolate(&dense, &mut cursor, x)
        })
        .collect();
    Ok(UniformCurve {
        start: first,
        step,
        values,
        core: 0..grid_len,
    })
}

/// Extends a curve to three times its length, one copy on each side.
pub fn replicate(curve: &UniformCurve, mode: Replication) -> UniformCurve {
    let v = &curve.values;
    let n = v.len();
    let shift = match mode {
        Replication::Periodic => 0.0,
        Replication::Continuous if n >= 2 => {
            let end_step = 0.5 * ((v[1] - v[0]) + (v[n - 1] - v[n - 2]));
            v[n - 1] - v[0] + end_step
        }
        Replication::Continuous => 0.0,
    };
    let mut values = Vec::with_capacity(3 * n);
    for offset in [-shift, 0.0, shift] {
        values.extend(v.iter().map(|x| x + offset));
    }
    UniformCurve {
        start: curve.start - curve.step * n as f64,
        step: curve.step,
        values,
        core: n..2 * n,
    }
}

fn fft_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .unwrap_or_else(|p| p.into_inner());
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

/// Derivative of the Gaussian-smoothed signal via the Fourier derivative
/// property. `sigma` is in samples; the Nyquist bin is zeroed.
pub fn spectral_derivative(values: &[f64], spacing: f64, sigma: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::OddLength(n));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::BadParameter(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let (forward, inverse) = fft_pair(n);
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    forward.process(&mut buf);

    let sigma_x = sigma * spacing;
    let period = n as f64 * spacing;
    let two_pi = 2.0 * std::f64::consts::PI;
    for (k, c) in buf.iter_mut().enumerate() {
        if 2 * k == n {
            *c = Complex::new(0.0, 0.0);
            continue;
        }
        let signed = if 2 * k < n {
            k as f64
        } else {
            k as f64 - n as f64
        };
        let freq = signed / period;
        let gain = two_pi * freq * (-0.5 * (two_pi * sigma_x * freq).powi(2)).exp();
        *c = Complex::new(-gain * c.im, gain * c.re);
    }
    inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(buf.iter().map(|c| c.re * scale).collect())
}

/// Per-scale fractal dimension curve of one volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub source_id: String,
    pub params: SignatureParams,
    pub log_r_grid: Vec<f64>,
    pub mfd: Vec<f64>,
}

pub fn mfd_signature(
    curve: &LogLogCurve,
    params: &SignatureParams,
    source_id: impl Into<String>,
) -> Result<Signature> {
    params.validate()?;
    let prepared = prepare_curve(curve, params.grid_len)?;
    let extended = replicate(&prepared, params.replication);
    let deriv = spectral_derivative(&extended.values, extended.step, params.sigma)?;
    let mfd_grid: Vec<f64> = deriv[extended.core.clone()]
        .iter()
        .map(|d| 3.0 - d)
        .collect();

    let l = mfd_grid.len();
    let m = params.feature_len;
    let mut log_r_grid = Vec::with_capacity(m);
    let mut mfd = Vec::with_capacity(m);
    for j in 0..m {
        let t = j as f64 * (l - 1) as f64 / (m - 1) as f64;
        let i = (t.floor() as usize).min(l - 2);
        let frac = t - i as f64;
        log_r_grid.push(prepared.start + prepared.step * t);
        mfd.push(mfd_grid[i] + frac * (mfd_grid[i + 1] - mfd_grid[i]));
    }
    Ok(Signature {
        source_id: source_id.into(),
        params: *params,
        log_r_grid,
        mfd,
    })
}

impl Signature {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("signature serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::FormatError(e.to_string()))
    }

    /// Header and metadata row (`source_id,sigma,r_max,log_r_*`), then an
    /// `mfd_*` header and the values row.
    pub fn to_csv(&self) -> String {
        let l = self.mfd.len();
        let mut s = String::from("source_id,sigma,r_max");
        for i in 0..l {
            let _ = write!(s, ",log_r_{i}");
        }
        s.push('\n');
        let _ = write!(
            s,
            "{},{},{}",
            csv_field(&self.source_id),
            self.params.sigma,
            self.params.r_max
        );
        for v in &self.log_r_grid {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
        let names: Vec<String> = (0..l).map(|i| format!("mfd_{i}")).collect();
        s.push_str(&names.join(","));
        s.push('\n');
        let vals: Vec<String> = self.mfd.iter().map(f64::to_string).collect();
        s.push_str(&vals.join(","));
        s.push('\n');
        s
    }

    /// Parses [`Signature::to_csv`]. Grid parameters other than sigma and
    /// r_max are not part of the CSV and come back as `grid_len = 0`
    /// and `feature_len = mfd.len()`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        let rows: Vec<csv::StringRecord> = rdr
            .records()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::FormatError(e.to_string()))?;
        if rows.len() != 4 || rows[0].get(0) != Some("source_id") {
            return Err(Error::FormatError(
                "expected four signature CSV rows".into(),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::FormatError(format!("bad number {s:?}")))
        };
        let meta = &rows[1];
        if meta.len() < 3 {
            return Err(Error::FormatError("short metadata row".into()));
        }
        let log_r_grid = meta.iter().skip(3).map(num).collect::<Result<Vec<_>>>()?;
        let mfd = rows[3].iter().map(num).collect::<Result<Vec<_>>>()?;
        if mfd.len() != log_r_grid.len() {
            return Err(Error::FormatError("grid and mfd lengths differ".into()));
        }
        Ok(Signature {
            source_id: meta[0].to_string(),
            params: SignatureParams {
                sigma: num(&meta[1])?,
                r_max: num(&meta[2])?,
                grid_len: 0,
                feature_len: mfd.len(),
                replication: Replication::default(),
            },
            log_r_grid,
            mfd,
        })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn uniform_loglog(n: usize, f: impl Fn(f64) -> f64) -> LogLogCurve {
        let pts = (0..n)
            .map(|i| {
                let x = 0.5 + 2.0 * i as f64 / (n - 1) as f64;
                (x, f(x))
            })
            .collect();
        LogLogCurve::from_points(pts, 20.0, u64::MAX).unwrap()
    }

    #[test]
    fn uniform_input_is_identity() {
        let ll = uniform_loglog(256, |x| (3.0 * x).sin() + x * x);
        let u = prepare_curve(&ll, 256).unwrap();
        for (i, (x, y)) in ll.points().iter().enumerate() {
            assert!((u.x(i) - x).abs() < 1e-12);
            assert!((u.values[i] - y).abs() < 1e-12);
        }
        assert_eq!(u.retained_range().0, 0.5);
    }

    #[test]
    fn wide_leading_gap_dropped() {
        let mut pts = vec![(0.0, 0.0)];
        pts.extend((0..12).map(|i| (1.0 + 0.1 * i as f64, i as f64)));
        let ll = LogLogCurve::from_points(pts, 10.0, u64::MAX).unwrap();
        let log_r: Vec<f64> = ll.points().iter().map(|p| p.0).collect();
        assert_eq!(sparse_head_len(&log_r), 1);
        let u = prepare_curve(&ll, 64).unwrap();
        assert_eq!(u.start, 1.0);
    }

    #[test]
    fn short_or_flat_curves_rejected() {
        let ll = uniform_loglog(7, |x| x);
        assert!(matches!(
            prepare_curve(&ll, 64),
            Err(Error::CurveTooShort { needed: 8, have: 7 })
        ));
    }

    #[test]
    fn replicate_periodic_literal() {
        let u = UniformCurve {
            start: 0.0,
            step: 1.0,
            values: vec![1.0, 2.0, 5.0],
            core: 0..3,
        };
        let r = replicate(&u, Replication::Periodic);
        assert_eq!(r.values, vec![1.0, 2.0, 5.0, 1.0, 2.0, 5.0, 1.0, 2.0, 5.0]);
        assert_eq!(r.core, 3..6);
        assert_eq!(r.start, -3.0);

        let c = UniformCurve {
            values: vec![4.0; 5],
            core: 0..5,
            ..u.clone()
        };
        for mode in [Replication::Periodic, Replication::Continuous] {
            let r = replicate(&c, mode);
            assert_eq!(r.len(), 15);
            assert!(r.values.iter().all(|&v| v == 4.0));
        }
    }

    #[test]
    fn replicate_continuous_extends_ramp() {
        let u = UniformCurve {
            start: 0.0,
            step: 0.5,
            values: (0..6).map(|i| 2.0 * i as f64).collect(),
            core: 0..6,
        };
        let r = replicate(&u, Replication::Continuous);
        for w in r.values.windows(2) {
            assert!((w[1] - w[0] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_filtered_sinusoid() {
        let n = 512;
        let h = 0.01;
        let l = n as f64 * h;
        let vals: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * i as f64 * h / l).sin())
            .collect();
        let d = spectral_derivative(&vals, h, 1.0).unwrap();
        let sx = h;
        let amp = (2.0 * PI / l) * (-2.0 * PI * PI * sx * sx / (l * l)).exp();
        for (i, v) in d.iter().enumerate() {
            let x = i as f64 * h;
            assert!((v - amp * (2.0 * PI * x / l).cos()).abs() <= 1e-6);
        }
    }

    #[test]
    fn derivative_errors_and_constants() {
        assert!(matches!(
            spectral_derivative(&[1.0, 2.0, 3.0], 1.0, 1.0),
            Err(Error::OddLength(3))
        ));
        assert!(matches!(
            spectral_derivative(&[1.0, 2.0], 1.0, 0.0),
            Err(Error::NonPositiveSigma(_))
        ));
        let d = spectral_derivative(&[3.5; 64], 0.1, 2.0).unwrap();
        assert!(d.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn derivative_is_linear() {
        let n = 256;
        let a: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 3.0 * i as f64 / n as f64).sin())
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 7.0 * i as f64 / n as f64).cos())
            .collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let (da, db, ds) = (
            spectral_derivative(&a, 0.02, 1.5).unwrap(),
            spectral_derivative(&b, 0.02, 1.5).unwrap(),
            spectral_derivative(&sum, 0.02, 1.5).unwrap(),
        );
        for i in 0..n {
            assert!((ds[i] - da[i] - db[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn power_law_and_flat_signatures() {
        let p = SignatureParams::default();
        let ll = uniform_loglog(200, |x| 3.0 * x + 0.7);
        let s = mfd_signature(&ll, &p, "cube").unwrap();
        assert_eq!(s.mfd.len(), p.feature_len);
        let lo = p.feature_len / 10;
        for v in &s.mfd[lo..p.feature_len - lo] {
            assert!(v.abs() <= 0.1, "{v}");
        }
        let flat = mfd_signature(&uniform_loglog(200, |_| 5.0), &p, "flat").unwrap();
        for v in &flat.mfd[lo..p.feature_len - lo] {
            assert!((v - 3.0).abs() <= 0.1);
        }
        assert!(s.log_r_grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn params_validation() {
        let ok = SignatureParams::default();
        assert!(ok.validate().is_ok());
        assert!(matches!(
            SignatureParams { sigma: -1.0, ..ok }.validate(),
            Err(Error::NonPositiveSigma(_))
        ));
        assert!(SignatureParams {
            grid_len: 100,
            ..ok
        }
        .validate()
        .is_err());
        assert!(SignatureParams { grid_len: 32, ..ok }.validate().is_err());
        assert!(SignatureParams {
            feature_len: 1024,
            ..ok
        }
        .validate()
        .is_err());
        assert!(matches!(
            SignatureParams { r_max: 1.5, ..ok }.validate(),
            Err(Error::RadiusTooSmall(_))
        ));
    }

    #[test]
    fn json_and_csv_round_trip() {
        let ll = uniform_loglog(100, |x| 2.0 * x + (5.0 * x).sin() * 0.1);
        let s = mfd_signature(&ll, &SignatureParams::default(), "a,\"b\"").unwrap();
        assert_eq!(Signature::from_json(&s.to_json()).unwrap(), s);
        let c = Signature::from_csv(&s.to_csv()).unwrap();
        assert_eq!(c.source_id, s.source_id);
        assert_eq!(c.mfd, s.mfd);
        assert_eq!(c.log_r_grid, s.log_r_grid);
        assert_eq!(c.params.sigma, s.params.sigma);
    }
}
