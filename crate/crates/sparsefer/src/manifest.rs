//! CSV manifests of grayscale images.
//!
//! Header `path,label[,identity]`; paths are relative to the manifest's
//! directory. Each image becomes one feature column, flattened column by
//! column, with pixels scaled to `[0, 1]` by the bit-depth maximum.

use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use image::{DynamicImage, ImageBuffer, Luma};
use rayon::prelude::*;
use sparsefer_core::{DenseMatrix, LabeledDataset};

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: bad header {found:?}, expected path,label[,identity]")]
    Header { path: String, found: Vec<String> },
    #[error("{path}: manifest has no rows")]
    Empty { path: String },
    #[error("row {row} ({image}): {reason}")]
    Row { row: usize, image: String, reason: String },
    #[error(transparent)]
    Dataset(#[from] sparsefer_core::Error),
}

/// One manifest line; `row` counts data rows from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub row: usize,
    pub path: PathBuf,
    pub label: String,
    pub identity: Option<String>,
}

/// Reads and validates the CSV without touching the images.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>, ManifestError> {
    let shown = path.display().to_string();
    let read_err = |source| ManifestError::Read {
        path: shown.clone(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(read_err)?;
    let header: Vec<String> = reader.headers().map_err(read_err)?.iter().map(str::to_string).collect();
    let has_identity = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["path", "label"] => false,
        ["path", "label", "identity"] => true,
        _ => {
            return Err(ManifestError::Header {
                path: shown,
                found: header,
            })
        }
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(read_err)?;
        let row = i + 1;
        let field = |k: usize| record.get(k).unwrap_or("").to_string();
        let (image, label) = (field(0), field(1));
        if image.is_empty() || label.is_empty() {
            return Err(ManifestError::Row {
                row,
                image,
                reason: "empty path or label".into(),
            });
        }
        rows.push(ManifestRow {
            row,
            path: base.join(&image),
            label,
            identity: has_identity.then(|| field(2)),
        });
    }
    if rows.is_empty() {
        return Err(ManifestError::Empty { path: shown });
    }
    Ok(rows)
}

/// Decodes one grayscale image into `[0, 1]` pixels, flattened column by
/// column. `resize` is `(width, height)`.
pub fn load_image(path: &Path, resize: Option<(u32, u32)>) -> Result<(u32, u32, Vec<f64>), String> {
    let img = image::open(path).map_err(|e| e.to_string())?;
    let (img, max): (ImageBuffer<Luma<u16>, Vec<u16>>, f64) = match img {
        DynamicImage::ImageLuma8(b) => (DynamicImage::ImageLuma8(b).into_luma16(), 255.0),
        DynamicImage::ImageLuma16(b) => (b, 65535.0),
        other => return Err(format!("expected a grayscale image, got {:?}", other.color())),
    };
    // 8-bit images were widened by 257; undo that so the scale stays /255.
    let widen = if max == 255.0 { 257.0 } else { 1.0 };
    let img = match resize {
        Some((w, h)) if (w, h) != img.dimensions() => image::imageops::resize(&img, w, h, FilterType::Triangle),
        _ => img,
    };
    let (w, h) = img.dimensions();
    let mut values = Vec::with_capacity((w * h) as usize);
    for x in 0..w {
        for y in 0..h {
            values.push(img.get_pixel(x, y).0[0] as f64 / widen / max);
        }
    }
    Ok((w, h, values))
}

/// Loads every image of a manifest. Decoding runs in parallel; columns keep
/// manifest order and class names keep first-appearance order.
pub fn load_manifest_with(path: &Path, resize: Option<(u32, u32)>) -> Result<LabeledDataset, ManifestError> {
    let rows = read_manifest(path)?;
    let decoded: Vec<(u32, u32, Vec<f64>)> = rows
        .par_iter()
        .map(|r| {
            load_image(&r.path, resize).map_err(|reason| ManifestError::Row {
                row: r.row,
                image: r.path.display().to_string(),
                reason,
            })
        })
        .collect::<Result<_, _>>()?;
    let (w0, h0) = (decoded[0].0, decoded[0].1);
    if let Some((r, d)) = rows.iter().zip(&decoded).find(|(_, d)| (d.0, d.1) != (w0, h0)) {
        return Err(ManifestError::Row {
            row: r.row,
            image: r.path.display().to_string(),
            reason: format!("image is {}x{}, earlier rows are {w0}x{h0}", d.0, d.1),
        });
    }
    let mut class_names: Vec<String> = Vec::new();
    let labels = rows
        .iter()
        .map(|r| match class_names.iter().position(|c| *c == r.label) {
            Some(i) => i,
            None => {
                class_names.push(r.label.clone());
                class_names.len() - 1
            }
        })
        .collect();
    let identities = rows
        .iter()
        .map(|r| r.identity.clone())
        .collect::<Option<Vec<String>>>();
    let d = (w0 * h0) as usize;
    let values = decoded.into_iter().flat_map(|(_, _, v)| v).collect();
    let features = DenseMatrix::from_col_major(d, rows.len(), values)?;
    Ok(LabeledDataset::new(features, labels, identities, class_names)?)
}

pub fn load_manifest(path: &Path) -> Result<LabeledDataset, ManifestError> {
    load_manifest_with(path, None)
}

/// Loads several manifests and concatenates them (classes merged by name).
pub fn load_manifests(paths: &[PathBuf], resize: Option<(u32, u32)>) -> Result<LabeledDataset, ManifestError> {
    let mut out: Option<LabeledDataset> = None;
    for p in paths {
        let ds = load_manifest_with(p, resize)?;
        out = Some(match out {
            None => ds,
            Some(acc) => acc.concat(&ds)?,
        });
    }
    out.ok_or_else(|| ManifestError::Empty {
        path: "<no manifest given>".into(),
    })
}

/// Writes `values` (in `[0, 1]`, flattened column by column) as a 16-bit
/// grayscale PNG of `width × height`.
pub fn save_gray16(path: &Path, width: u32, height: u32, values: &[f64]) -> image::ImageResult<()> {
    let img = ImageBuffer::from_fn(width, height, |x, y| {
        let v = values[(x * height + y) as usize].clamp(0.0, 1.0);
        Luma([(v * 65535.0).round() as u16])
    });
    img.save(path)
}
