//! Packed space-time occupancy volumes.
//!
//! A video of `depth` frames, each `width x height`, becomes a binary grid in
//! which voxel `(x, y, z)` is set when pixel `(x, y)` of frame `z` belongs to
//! the moving shape. Bits are stored x-fastest, then y, then z:
//! `index = x + width * (y + height * z)`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Magic bytes of the packed volume file.
pub const VOLUME_MAGIC: [u8; 4] = *b"MFV1";
const HEADER_LEN: usize = 16;

/// Default gray level at or above which a pixel is foreground.
pub const DEFAULT_THRESHOLD: u8 = 128;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VideoVolume {
    width: usize,
    height: usize,
    depth: usize,
    bits: Vec<u64>,
    foreground_count: usize,
}

impl fmt::Debug for VideoVolume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VideoVolume")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("depth", &self.depth)
            .field("foreground_count", &self.foreground_count)
            .finish()
    }
}

fn checked_len(width: usize, height: usize, depth: usize) -> Result<usize> {
    if width == 0 || height == 0 || depth == 0 {
        return Err(Error::BadDimensions(width, height, depth));
    }
    width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(depth))
        .filter(|&n| n <= u32::MAX as usize * 8)
        .ok_or(Error::BadDimensions(width, height, depth))
}

impl VideoVolume {
    /// An all-background volume.
    pub fn empty(width: usize, height: usize, depth: usize) -> Result<Self> {
        let len = checked_len(width, height, depth)?;
        Ok(Self {
            width,
            height,
            depth,
            bits: vec![0; len.div_ceil(64)],
            foreground_count: 0,
        })
    }

    /// Builds a volume from a per-voxel predicate.
    pub fn from_fn<F>(width: usize, height: usize, depth: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> bool,
    {
        let mut vol = Self::empty(width, height, depth)?;
        for z in 0..depth {
            for y in 0..height {
                for x in 0..width {
                    if f(x, y, z) {
                        vol.set(x, y, z, true);
                    }
                }
            }
        }
        Ok(vol)
    }

    /// Rebuilds a volume from LSB-first occupancy bytes.
    ///
    /// Padding bits past the last voxel are ignored.
    pub fn from_occupancy_bytes(
        width: usize,
        height: usize,
        depth: usize,
        bytes: &[u8],
    ) -> Result<Self> {
        let len = checked_len(width, height, depth)?;
        let need = len.div_ceil(8);
        if bytes.len() < need {
            return Err(Error::TruncatedFile {
                expected: (HEADER_LEN + need) as u64,
                found: (HEADER_LEN + bytes.len()) as u64,
            });
        }
        let mut bits = vec![0u64; len.div_ceil(64)];
        for (w, chunk) in bits.iter_mut().zip(bytes[..need].chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *w = u64::from_le_bytes(buf);
        }
        let tail = len % 64;
        if tail != 0 {
            if let Some(last) = bits.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        let foreground_count = bits.iter().map(|w| w.count_ones() as usize).sum();
        Ok(Self {
            width,
            height,
            depth,
            bits,
            foreground_count,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.depth)
    }

    /// Total voxel count `width * height * depth`.
    pub fn len(&self) -> usize {
        self.width * self.height * self.depth
    }

    pub fn is_empty(&self) -> bool {
        self.foreground_count == 0
    }

    pub fn foreground_count(&self) -> usize {
        self.foreground_count
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && z < self.depth);
        x + self.width * (y + self.height * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let x = index % self.width;
        let rest = index / self.width;
        (x, rest % self.height, rest / self.height)
    }

    #[inline]
    pub fn get_index(&self, index: usize) -> bool {
        (self.bits[index / 64] >> (index % 64)) & 1 == 1
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.get_index(self.index(x, y, z))
    }

    pub fn set_index(&mut self, index: usize, value: bool) {
        assert!(index < self.len(), "voxel index {index} out of range");
        let word = &mut self.bits[index / 64];
        let mask = 1u64 << (index % 64);
        let was = *word & mask != 0;
        match (was, value) {
            (false, true) => {
                *word |= mask;
                self.foreground_count += 1;
            }
            (true, false) => {
                *word &= !mask;
                self.foreground_count -= 1;
            }
            _ => {}
        }
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        assert!(
            x < self.width && y < self.height && z < self.depth,
            "voxel ({x}, {y}, {z}) out of range"
        );
        let i = self.index(x, y, z);
        self.set_index(i, value);
    }

    /// Indices of all foreground voxels in storage order.
    pub fn foreground_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Occupancy as LSB-first bytes, `ceil(len / 8)` long.
    pub fn occupancy_bytes(&self) -> Vec<u8> {
        let need = self.len().div_ceil(8);
        let mut out: Vec<u8> = self.bits.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(need);
        out
    }

    /// Content digest over dimensions and occupancy.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.encode());
        h.finalize().into()
    }

    pub fn ensure_nonempty(&self) -> Result<()> {
        if self.foreground_count == 0 {
            Err(Error::EmptyVolume)
        } else {
            Ok(())
        }
    }

    /// Serializes to the `MFV1` layout.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.len().div_ceil(8));
        out.extend_from_slice(&VOLUME_MAGIC);
        for d in [self.width, self.height, self.depth] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.occupancy_bytes());
        out
    }

    /// Parses the `MFV1` layout. Empty volumes are rejected.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let (dims, body) = read_header(bytes, VOLUME_MAGIC)?;
        let vol = Self::from_occupancy_bytes(dims[0], dims[1], dims[2], body)?;
        vol.ensure_nonempty()?;
        Ok(vol)
    }
}

/// Splits a 16-byte `magic + 3 x u32` header off `bytes`.
pub(crate) fn read_header(bytes: &[u8], magic: [u8; 4]) -> Result<([usize; 3], &[u8])> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != magic {
        return Err(Error::BadMagic {
            expected: magic,
            found,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let mut dims = [0usize; 3];
    for (i, d) in dims.iter_mut().enumerate() {
        let o = 4 + 4 * i;
        *d = u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    }
    Ok((dims, &bytes[HEADER_LEN..]))
}

pub fn save_volume(vol: &VideoVolume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&vol.encode()).map_err(|e| Error::io(path, e))
}

pub fn load_volume(path: impl AsRef<Path>) -> Result<VideoVolume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    VideoVolume::decode(&bytes)
}

/// One decoded 8-bit grayscale frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} frame",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }
}

/// Where frames come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameSource {
    /// Ordered frame images (PGM P5 or PNG).
    Frames(Vec<PathBuf>),
    /// A packed `MFV1` file.
    Packed(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSpec {
    pub source: FrameSource,
    pub binarize_threshold: u8,
}

impl FrameSpec {
    pub fn frames(paths: Vec<PathBuf>) -> Self {
        Self {
            source: FrameSource::Frames(paths),
            binarize_threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn packed(path: impl Into<PathBuf>) -> Self {
        Self {
            source: FrameSource::Packed(path.into()),
            binarize_threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn with_threshold(mut self, threshold: u8) -> Self {
        self.binarize_threshold = threshold;
        self
    }
}

pub fn decode_frame(path: &Path) -> Result<GrayFrame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|e| Error::DecodeError {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let luma = img.to_luma8();
    let (w, h) = luma.dimensions();
    GrayFrame::new(w as usize, h as usize, luma.into_raw())
}

/// Assembles thresholded frames into a volume, frame `z` at depth `z`.
///
/// A sequence whose pixels are all 0 or 1 is treated as a binary mask and
/// passes through unchanged (nonzero is foreground); otherwise a pixel is
/// foreground when its gray value is `>= threshold`.
pub fn volume_from_frames(frames: &[GrayFrame], threshold: u8) -> Result<VideoVolume> {
    let first = frames.first().ok_or(Error::EmptySequence)?;
    let (w, h) = (first.width, first.height);
    for (z, f) in frames.iter().enumerate() {
        if (f.width, f.height) != (w, h) {
            return Err(Error::DimensionMismatch(format!(
                "frame {z} is {}x{}, frame 0 is {w}x{h}",
                f.width, f.height
            )));
        }
    }
    let binary = frames.iter().all(|f| f.pixels.iter().all(|&p| p <= 1));
    let cut = if binary { 1 } else { threshold };
    let mut vol = VideoVolume::empty(w, h, frames.len())?;
    for (z, f) in frames.iter().enumerate() {
        let base = w * h * z;
        for (i, &p) in f.pixels.iter().enumerate() {
            if p >= cut {
                vol.set_index(base + i, true);
            }
        }
    }
    vol.ensure_nonempty()?;
    Ok(vol)
}

pub fn load_frame_sequence(spec: &FrameSpec, exec: Execution) -> Result<VideoVolume> {
    match &spec.source {
        FrameSource::Packed(path) => load_volume(path),
        FrameSource::Frames(paths) => {
            if paths.is_empty() {
                return Err(Error::EmptySequence);
            }
            let frames = par::map_slice(paths, exec, |p| decode_frame(p))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            volume_from_frames(&frames, spec.binarize_threshold)
        }
    }
}

/// Frame images (`.pgm`, `.png`) in `dir`, sorted by file name.
pub fn list_frame_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("pgm") | Some("png")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Loads a volume from an `MFV1` file or a directory of frames.
pub fn load_input(path: &Path, threshold: u8, exec: Execution) -> Result<VideoVolume> {
    let spec = if path.is_dir() {
        FrameSpec::frames(list_frame_dir(path)?)
    } else {
        FrameSpec::packed(path)
    }
    .with_threshold(threshold);
    load_frame_sequence(&spec, exec)
}
