//! Exact squared Euclidean distance transform of a [`VideoVolume`].
//!
//! Three separable passes, one per axis. Each pass replaces every scanline
//! `f` by its lower envelope `g(x) = min_i (x - i)^2 + f(i)`, computed with
//! an integer parabola separator so the result is exact. All
//! arithmetic is on squared integer distances; no square root is taken here.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::volume::{read_header, VideoVolume};

pub const FIELD_MAGIC: [u8; 4] = *b"MFD1";

/// Background sentinel while passes are in flight. Larger than any squared
/// distance representable in a [`DistanceField`].
const INF: i64 = 1 << 40;

/// Minimum scanlines handed to one task.
const LINES_PER_TASK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn ordinal(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Per-voxel squared distance to the nearest foreground voxel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DistanceField {
    width: usize,
    height: usize,
    depth: usize,
    sqdist: Vec<u32>,
}

impl DistanceField {
    pub fn from_raw(width: usize, height: usize, depth: usize, sqdist: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || depth == 0 {
            return Err(Error::BadDimensions(width, height, depth));
        }
        if sqdist.len() != width * height * depth {
            return Err(Error::DimensionMismatch(format!(
                "{} distances for a {width}x{height}x{depth} field",
                sqdist.len()
            )));
        }
        Ok(Self {
            width,
            height,
            depth,
            sqdist,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.depth)
    }

    pub fn len(&self) -> usize {
        self.sqdist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sqdist.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.sqdist
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u32 {
        self.sqdist[x + self.width * (y + self.height * z)]
    }

    pub fn max(&self) -> u32 {
        self.sqdist.iter().copied().max().unwrap_or(0)
    }

    /// Debug dump: `MFD1` header then little-endian `u32` squared distances.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.len());
        out.extend_from_slice(&FIELD_MAGIC);
        for d in [self.width, self.height, self.depth] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.sqdist {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let ([w, h, d], body) = read_header(bytes, FIELD_MAGIC)?;
        let n = w
            .checked_mul(h)
            .and_then(|v| v.checked_mul(d))
            .ok_or(Error::BadDimensions(w, h, d))?;
        if body.len() < 4 * n {
            return Err(Error::TruncatedFile {
                expected: 16 + 4 * n as u64,
                found: bytes.len() as u64,
            });
        }
        let sqdist = body[..4 * n]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_raw(w, h, d, sqdist)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

/// Largest squared distance a `width x height x depth` grid can produce.
pub fn max_sqdist_bound(width: usize, height: usize, depth: usize) -> u64 {
    [width, height, depth]
        .iter()
        .map(|&n| (n as u64).saturating_sub(1).pow(2))
        .sum()
}

fn check_domain(vol: &VideoVolume) -> Result<()> {
    vol.ensure_nonempty()?;
    let (w, h, d) = vol.dims();
    let bound = max_sqdist_bound(w, h, d);
    if bound > u32::MAX as u64 {
        return Err(Error::FieldTooLarge(bound));
    }
    Ok(())
}

pub fn squared_edt(vol: &VideoVolume) -> Result<DistanceField> {
    squared_edt_with(vol, Execution::default())
}

pub fn squared_edt_with(vol: &VideoVolume, exec: Execution) -> Result<DistanceField> {
    squared_edt_axes(vol, [Axis::X, Axis::Y, Axis::Z], exec)
}

/// Runs the three envelope passes in the given axis order.
///
/// Every permutation yields the same field; x, y, z is the cache-friendly one.
pub fn squared_edt_axes(
    vol: &VideoVolume,
    order: [Axis; 3],
    exec: Execution,
) -> Result<DistanceField> {
    check_domain(vol)?;
    let mut seen = [false; 3];
    for a in order {
        if std::mem::replace(&mut seen[a.ordinal()], true) {
            return Err(Error::BadParameter(format!(
                "axis order {order:?} repeats an axis"
            )));
        }
    }
    let (w, h, d) = vol.dims();
    let dims = [w, h, d];
    let mut field: Vec<i64> = (0..vol.len())
        .map(|i| if vol.get_index(i) { 0 } else { INF })
        .collect();
    for axis in order {
        field = envelope_pass(&field, dims, axis.ordinal(), exec);
    }
    let sqdist = field.into_iter().map(|v| v as u32).collect();
    DistanceField::from_raw(w, h, d, sqdist)
}

/// Offset of the first voxel of scanline `line` along `axis`, and the stride.
#[inline]
fn line_geometry(dims: [usize; 3], axis: usize, line: usize) -> (usize, usize) {
    let [w, h, _] = dims;
    match axis {
        0 => (line * w, 1),
        1 => {
            let (x, z) = (line % w, line / w);
            (x + w * h * z, w)
        }
        _ => (line, w * h),
    }
}

fn envelope_pass(src: &[i64], dims: [usize; 3], axis: usize, exec: Execution) -> Vec<i64> {
    let n = dims[axis];
    let total = src.len();
    let mut lines = vec![0i64; total];
    par::for_each_chunk_mut(&mut lines, n * LINES_PER_TASK, exec, |task, chunk| {
        let mut scratch = Envelope::with_capacity(n);
        let first = task * LINES_PER_TASK;
        for (k, out) in chunk.chunks_mut(n).enumerate() {
            let (base, stride) = line_geometry(dims, axis, first + k);
            scratch.f.clear();
            scratch.f.extend((0..n).map(|i| src[base + i * stride]));
            scratch.solve(out);
        }
    });
    if axis == 0 {
        return lines;
    }
    // Lines are stored scanline-major; scatter back to x-fastest layout.
    let [w, h, _] = dims;
    let mut out = vec![0i64; total];
    par::for_each_chunk_mut(&mut out, w * h, exec, |z, slab| {
        for y in 0..h {
            for x in 0..w {
                let (line, pos) = if axis == 1 {
                    (x + w * z, y)
                } else {
                    (x + w * y, z)
                };
                slab[x + w * y] = lines[line * n + pos];
            }
        }
    });
    out
}

/// Reusable buffers for one scanline lower envelope.
struct Envelope {
    f: Vec<i64>,
    sites: Vec<usize>,
    starts: Vec<i64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            f: Vec::with_capacity(n),
            sites: vec![0; n],
            starts: vec![0; n],
        }
    }

    /// `out[x] = min_i (x - i)^2 + f[i]`, clamped to `INF`.
    fn solve(&mut self, out: &mut [i64]) {
        let f = &self.f;
        let m = f.len();
        let cost = |x: i64, i: usize| (x - i as i64).pow(2) + f[i];
        // First abscissa at which parabola `u` is no worse than parabola `i < u`.
        let sep = |i: usize, u: usize| {
            let (ii, uu) = (i as i64, u as i64);
            (uu * uu - ii * ii + f[u] - f[i]).div_euclid(2 * (uu - ii))
        };
        let (s, t) = (&mut self.sites, &mut self.starts);
        let mut q = 0usize;
        s[0] = 0;
        t[0] = 0;
        for u in 1..m {
            let mut emptied = false;
            while cost(t[q], s[q]) > cost(t[q], u) {
                if q == 0 {
                    emptied = true;
                    break;
                }
                q -= 1;
            }
            if emptied {
                s[0] = u;
            } else {
                let w = 1 + sep(s[q], u);
                if w < m as i64 {
                    q += 1;
                    s[q] = u;
                    t[q] = w;
                }
            }
        }
        for u in (0..m).rev() {
            out[u] = cost(u as i64, s[q]).min(INF);
            if u as i64 == t[q] && q > 0 {
                q -= 1;
            }
        }
    }
}

pub fn brute_force_edt(vol: &VideoVolume) -> Result<DistanceField> {
    brute_force_edt_with(vol, Execution::default())
}

/// Exhaustive `O(N * |foreground|)` reference transform.
pub fn brute_force_edt_with(vol: &VideoVolume, exec: Execution) -> Result<DistanceField> {
    check_domain(vol)?;
    let (w, h, d) = vol.dims();
    let sites: Vec<[i64; 3]> = vol
        .foreground_indices()
        .map(|i| {
            let (x, y, z) = vol.coords(i);
            [x as i64, y as i64, z as i64]
        })
        .collect();
    let mut sqdist = vec![0u32; vol.len()];
    par::for_each_chunk_mut(&mut sqdist, w * h, exec, |z, slab| {
        for y in 0..h {
            for x in 0..w {
                let p = [x as i64, y as i64, z as i64];
                let best = sites
                    .iter()
                    .map(|s| (0..3).map(|k| (s[k] - p[k]).pow(2)).sum::<i64>())
                    .min()
                    .unwrap();
                slab[x + w * y] = best as u32;
            }
        }
    });
    DistanceField::from_raw(w, h, d, sqdist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: usize, h: usize, d: usize, p: (usize, usize, usize)) -> VideoVolume {
        let mut v = VideoVolume::empty(w, h, d).unwrap();
        v.set(p.0, p.1, p.2, true);
        v
    }

    #[test]
    fn center_voxel_neighbourhood() {
        let f = squared_edt(&single(3, 3, 3, (1, 1, 1))).unwrap();
        let mut counts = [0usize; 4];
        for &q in f.as_slice() {
            counts[q as usize] += 1;
        }
        assert_eq!(counts, [1, 6, 12, 8]);
    }

    #[test]
    fn all_foreground_is_zero() {
        let v = VideoVolume::from_fn(5, 4, 3, |_, _, _| true).unwrap();
        let f = squared_edt(&v).unwrap();
        assert!(f.as_slice().iter().all(|&q| q == 0));
    }

    #[test]
    fn brute_force_examples() {
        let f = brute_force_edt(&single(2, 2, 2, (0, 0, 0))).unwrap();
        assert_eq!(f.get(1, 1, 1), 3);

        let mut v = VideoVolume::empty(3, 1, 1).unwrap();
        v.set(0, 0, 0, true);
        v.set(2, 0, 0, true);
        let f = brute_force_edt(&v).unwrap();
        assert_eq!(f.get(1, 0, 0), 1);
        assert_eq!(squared_edt(&v).unwrap(), f);
    }

    #[test]
    fn empty_volume_rejected() {
        let v = VideoVolume::empty(4, 4, 4).unwrap();
        assert!(matches!(squared_edt(&v), Err(Error::EmptyVolume)));
        assert!(matches!(brute_force_edt(&v), Err(Error::EmptyVolume)));
    }

    #[test]
    fn repeated_axis_rejected() {
        let v = single(4, 4, 4, (0, 0, 0));
        let r = squared_edt_axes(&v, [Axis::X, Axis::X, Axis::Z], Execution::Sequential);
        assert!(matches!(r, Err(Error::BadParameter(_))));
    }

    #[test]
    fn oversized_domain_rejected() {
        let v = single(70_000, 1, 1, (0, 0, 0));
        assert!(matches!(squared_edt(&v), Err(Error::FieldTooLarge(_))));
    }

    #[test]
    fn dump_round_trip() {
        let f = squared_edt(&single(4, 3, 2, (3, 2, 1))).unwrap();
        let bytes = f.encode();
        assert_eq!(&bytes[..4], b"MFD1");
        assert_eq!(DistanceField::decode(&bytes).unwrap(), f);
        assert!(matches!(
            DistanceField::decode(&bytes[..bytes.len() - 1]),
            Err(Error::TruncatedFile { .. })
        ));
    }

    #[test]
    fn single_line_extremes() {
        // Long thin line: the site at one end, distances grow quadratically.
        let v = single(1, 1, 40, (0, 0, 0));
        let f = squared_edt(&v).unwrap();
        for z in 0..40 {
            assert_eq!(f.get(0, 0, z), (z * z) as u32);
        }
    }
}
