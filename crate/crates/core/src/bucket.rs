//! Multi-aspect-ratio bucketing: nearest-ratio selection, bucket
//! resizing, and homogeneous batch grouping.
//!
//! Ratios follow the `r = H / W` convention. Bucket selection scans the
//! table in order and updates on `distance <= best`, so among ties the
//! LAST minimal entry wins; this quirk is kept deliberately because the
//! grouping downstream depends on reproducing it.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::rng::StreamRng;

/// Ordered list of (ratio, size) pairs; size is (height, width).
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSizeTable {
    entries: Vec<(f64, (usize, usize))>,
}

impl RatioSizeTable {
    /// Builds a table from (height, width) pairs; each entry's ratio is
    /// the exact quotient `height / width`.
    pub fn from_sizes(sizes: &[(usize, usize)]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Config("ratio table must be nonempty".into()));
        }
        if sizes.iter().any(|&(h, w)| h == 0 || w == 0) {
            return Err(Error::Config("ratio table sizes must be >= 1".into()));
        }
        let entries = sizes
            .iter()
            .map(|&(h, w)| (h as f64 / w as f64, (h, w)))
            .collect();
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, (usize, usize))] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The nine predefined (ratio, size) pairs used by default, from
/// 1:1 at 512x512 out to 2:1 at 1024x512.
pub fn default_table() -> RatioSizeTable {
    RatioSizeTable::from_sizes(&[
        (512, 512),
        (576, 768),
        (768, 576),
        (576, 1024),
        (1024, 576),
        (640, 1024),
        (1024, 640),
        (512, 1024),
        (1024, 512),
    ])
    .expect("default table is valid")
}

/// Index and size of the bucket whose ratio is nearest to `h / w`.
/// Scans in table order, updating whenever `distance <= best`.
pub fn nearest_bucket(h: usize, w: usize, table: &RatioSizeTable) -> Result<(usize, (usize, usize))> {
    if table.is_empty() {
        return Err(Error::Config("ratio table must be nonempty".into()));
    }
    if h == 0 || w == 0 {
        return Err(Error::Dimension("image dims must be >= 1".into()));
    }
    let r = h as f64 / w as f64;
    let mut best = f64::INFINITY;
    let mut best_idx = 0;
    for (i, (ri, _)) in table.entries.iter().enumerate() {
        let d = (r - ri).abs();
        if d <= best {
            best = d;
            best_idx = i;
        }
    }
    Ok((best_idx, table.entries[best_idx].1))
}

/// Bilinear resize to exactly `size = (height, width)`; aspect
/// distortion is permitted, nothing is cropped.
pub fn resize_to_bucket(image: &Plane, size: (usize, usize)) -> Result<Plane> {
    image.resize_bilinear(size.0, size.1)
}

/// One dataset record: a unique id plus the source dimensions and path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub id: String,
    pub height: usize,
    pub width: usize,
    pub path: String,
}

/// A list of records with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn new(records: Vec<ManifestRecord>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            if r.height == 0 || r.width == 0 {
                return Err(Error::Dimension(format!("record {} has zero dims", r.id)));
            }
            if !seen.insert(r.id.clone()) {
                return Err(Error::Config(format!("duplicate record id {}", r.id)));
            }
        }
        Ok(Self { records })
    }

    /// Reads a JSON-lines manifest: one record per line with keys
    /// `id`, `height`, `width`, `path`. Blank lines are skipped.
    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut records = Vec::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ManifestRecord =
                serde_json::from_str(&line).map_err(|e| Error::ManifestParse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            records.push(record);
        }
        Self::new(records)
    }
}

/// One training batch: all records share a bucket, and `partial` flags a
/// trailing batch smaller than the requested size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub bucket: usize,
    pub record_ids: Vec<String>,
    pub partial: bool,
}

/// Assigns every record to its nearest bucket, shuffles within each
/// bucket, and emits per-bucket batches of `batch_size` (a trailing
/// partial batch per bucket is kept and flagged). Deterministic given
/// the seed; buckets are emitted in table order.
pub fn group_batches(
    manifest: &DatasetManifest,
    table: &RatioSizeTable,
    batch_size: usize,
    rng: &mut StreamRng,
) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    let mut by_bucket: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for r in &manifest.records {
        let (idx, _) = nearest_bucket(r.height, r.width, table)?;
        by_bucket.entry(idx).or_default().push(r.id.clone());
    }
    let mut batches = Vec::new();
    for (bucket, mut ids) in by_bucket {
        rng.shuffle(&mut ids);
        for chunk in ids.chunks(batch_size) {
            batches.push(Batch {
                bucket,
                record_ids: chunk.to_vec(),
                partial: chunk.len() < batch_size,
            });
        }
    }
    Ok(batches)
}

/// Writes bucket assignments as CSV with header
/// `id,bucket_index,target_h,target_w` (bucket indices are 0-based).
pub fn write_assignments_csv<W: Write>(
    out: W,
    manifest: &DatasetManifest,
    table: &RatioSizeTable,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::Io { path: "<csv>".into(), message: e.to_string() };
    w.write_record(["id", "bucket_index", "target_h", "target_w"]).map_err(io_err)?;
    for r in &manifest.records {
        let (idx, (th, tw)) = nearest_bucket(r.height, r.width, table)?;
        w.write_record([r.id.as_str(), &idx.to_string(), &th.to_string(), &tw.to_string()])
            .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Io { path: "<csv>".into(), message: e.to_string() })?;
    Ok(())
}
