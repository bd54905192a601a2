//! Synthetic corpora on disk.

use std::fs;
use std::path::{Path, PathBuf};

use sparsefer_core::synth::{gaussian_blobs, synth_generate, BlobSpec, SynthSpec};

use crate::bundle;
use crate::config::{PipelineConfig, SynthSettings};
use crate::error::{Error, Result};
use crate::manifest::save_gray16;

/// Number of pseudo-subjects the blob samples are spread over.
pub const BLOB_IDENTITIES: usize = 10;

/// Writes the configured synthetic data into `cfg.out`. Returns the manifest
/// path for blobs, `None` for planted models.
pub fn run_synth(cfg: &PipelineConfig) -> Result<Option<PathBuf>> {
    let dir = cfg.out.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    match cfg.synth {
        SynthSettings::Blobs {
            classes,
            width,
            height,
            per_class,
            sigma,
            separation,
        } => write_blobs(
            dir,
            &BlobSpec {
                classes,
                dim: (width * height) as usize,
                per_class,
                sigma,
                min_separation: separation,
                seed: cfg.seed,
            },
            width,
            height,
        )
        .map(Some),
        SynthSettings::Planted { n, k, l, signals, noise } => {
            let p = synth_generate(&SynthSpec::new(n, k, l, signals, noise, cfg.seed))?;
            bundle::save(dir, "dictionary.smx", &p.dictionary)?;
            bundle::save(dir, "codes.smx", &p.codes)?;
            bundle::save(dir, "signals.smx", &p.signals)?;
            Ok(None)
        }
    }
}

/// Gaussian blobs as `width × height` 16-bit images under `images/`, with
/// `manifest.csv` beside them.
pub fn write_blobs(dir: &Path, spec: &BlobSpec, width: u32, height: u32) -> Result<PathBuf> {
    if spec.dim != (width * height) as usize {
        return Err(Error::Config(format!("blob dimension {} is not {width}x{height}", spec.dim)));
    }
    let blobs = gaussian_blobs(spec)?;
    let images = dir.join("images");
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let ds = &blobs.dataset;
    let mut manifest = String::from("path,label,identity\n");
    let mut seen = vec![0usize; ds.n_classes()];
    for (i, &label) in ds.labels().iter().enumerate() {
        let name = &ds.class_names()[label];
        let j = seen[label];
        seen[label] += 1;
        let file = format!("{name}_{j:04}.png");
        let path = images.join(&file);
        save_gray16(&path, width, height, ds.features().col(i)).map_err(|e| Error::format(&path, e))?;
        manifest.push_str(&format!("images/{file},{name},subject{}\n", j % BLOB_IDENTITIES));
    }
    let path = dir.join("manifest.csv");
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
