//! Volume to signature to dataset plumbing, with a log-log curve cache.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use crate::classifier::LabeledDataset;
use crate::edt::squared_edt_with;
use crate::error::{Error, Result};
use crate::minkowski::{dilation_curve_with, loglog, DilationCurve, LogLogCurve};
use crate::par::{self, Execution};
use crate::signature::{mfd_signature, Signature, SignatureParams};
use crate::volume::VideoVolume;

/// Dilation and log-log curves of one volume at one `r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub dilation: DilationCurve,
    pub loglog: LogLogCurve,
}

pub fn curves_of_volume(vol: &VideoVolume, r_max: f64, exec: Execution) -> Result<Curves> {
    let field = squared_edt_with(vol, exec)?;
    let dilation = dilation_curve_with(&field, r_max, exec)?;
    let loglog = loglog(&dilation)?;
    Ok(Curves { dilation, loglog })
}

pub fn signature_of_volume(
    vol: &VideoVolume,
    params: &SignatureParams,
    source_id: &str,
    exec: Execution,
) -> Result<Signature> {
    params.validate()?;
    let curves = curves_of_volume(vol, params.r_max, exec)?;
    mfd_signature(&curves.loglog, params, source_id)
}

type CacheKey = ([u8; 32], u64);

/// Log-log curves keyed by (volume digest, r_max). Sigma only affects the
/// derivative stage, so sweeps over sigma reuse one EDT per volume.
#[derive(Debug, Default)]
pub struct CurveCache {
    map: Mutex<HashMap<CacheKey, Arc<LogLogCurve>>>,
}

impl CurveCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn loglog(
        &self,
        vol: &VideoVolume,
        r_max: f64,
        exec: Execution,
    ) -> Result<Arc<LogLogCurve>> {
        let key = (vol.digest(), r_max.to_bits());
        if let Some(hit) = self.map.lock().unwrap_or_else(|p| p.into_inner()).get(&key) {
            return Ok(Arc::clone(hit));
        }
        let curve = Arc::new(curves_of_volume(vol, r_max, exec)?.loglog);
        self.map
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(key, Arc::clone(&curve));
        Ok(curve)
    }

    pub fn signature(
        &self,
        vol: &VideoVolume,
        params: &SignatureParams,
        source_id: &str,
        exec: Execution,
    ) -> Result<Signature> {
        params.validate()?;
        let curve = self.loglog(vol, params.r_max, exec)?;
        mfd_signature(&curve, params, source_id)
    }
}

/// Signatures of many volumes, computed in parallel across volumes.
pub fn signatures(
    volumes: &[(String, VideoVolume)],
    params: &SignatureParams,
    cache: &CurveCache,
    exec: Execution,
) -> Result<Vec<Signature>> {
    // Each EDT runs sequentially; the fan-out is across volumes.
    par::map_slice(volumes, exec, |(id, vol)| {
        cache.signature(vol, params, id, Execution::Sequential)
    })
    .into_iter()
    .collect()
}

pub fn dataset_from_signatures(sigs: &[Signature], labels: &[String]) -> Result<LabeledDataset> {
    let feats = sigs.iter().map(|s| s.mfd.clone()).collect();
    LabeledDataset::from_named(feats, labels)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
}

/// Reads `path,label` rows. An optional `path,label` header is skipped and
/// relative paths resolve against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::ManifestError {
        path: path.to_path_buf(),
        reason,
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 2 {
            return Err(bad(format!(
                "row {} has {} fields, expected 2",
                n + 1,
                rec.len()
            )));
        }
        if n == 0 && &rec[0] == "path" && &rec[1] == "label" {
            continue;
        }
        if rec[0].is_empty() || rec[1].is_empty() {
            return Err(bad(format!("row {} has an empty field", n + 1)));
        }
        let p = PathBuf::from(&rec[0]);
        out.push(ManifestEntry {
            path: if p.is_absolute() { p } else { base.join(p) },
            label: rec[1].to_string(),
        });
    }
    if out.is_empty() {
        return Err(bad("no entries".into()));
    }
    Ok(out)
}

/// Manifest text with paths made relative to `base` when they lie below it.
pub fn format_manifest(entries: &[ManifestEntry], base: &Path) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let fmt_err = |e: csv::Error| Error::FormatError(e.to_string());
    wtr.write_record(["path", "label"]).map_err(fmt_err)?;
    for e in entries {
        let rel = e.path.strip_prefix(base).unwrap_or(&e.path);
        wtr.write_record([rel.to_string_lossy().as_ref(), e.label.as_str()])
            .map_err(fmt_err)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::FormatError(e.into_error().to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::FormatError(e.to_string()))
}

/// Writes a manifest with paths relative to the manifest's directory when possible.
pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let text = format_manifest(entries, path.parent().unwrap_or(Path::new(".")))?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
