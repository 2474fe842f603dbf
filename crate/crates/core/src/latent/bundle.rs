//! Conditioning bundles: everything an external diffusion backend needs to
//! run the masked-latent edit, written as files plus a checksummed manifest.
//!
//! Layout of a bundle directory:
//!
//! | file                    | content                                      |
//! |-------------------------|----------------------------------------------|
//! | `input.png`             | input image                                  |
//! | `edited.png`            | user-edited last frame                       |
//! | `tracking.pdgt`         | tracking video `(1+T, H, W, 3)`              |
//! | `mask.pdgt`             | disocclusion mask `(1+T, H, W, 1)`           |
//! | `latent_mask.pdgt`      | downsampled mask `(1+T/4, H/8, W/8, 1)`      |
//! | `source_latent.pdgt`    | encoded pseudo video                         |
//! | `edit_latent.pdgt`      | encoded edit video                           |
//! | `composite_latent.pdgt` | blended latent after the zeroing rule        |
//! | `tracking_latent.pdgt`  | encoded tracking video                       |
//! | `manifest.json`         | prompts, schedule, encoder id, SHA-256 sums  |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::encoder::LatentEncoder;
use super::{
    apply_zero_rule, build_edit_video, build_pseudo_video, composite, downsample_mask,
    schedule_conditioning, LatentError, LatentTensor, Provenance, ScheduleOutcome,
};
use crate::error::{create_dir, read_file, read_text, write_file, IoError};
use crate::motion::{export as motion_export, DisocclusionMask};
use crate::raster::{self, Image};
use crate::tensor::Tensor4;

pub const BUNDLE_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prompts {
    /// Prompt describing the input image and motion.
    pub original: String,
    /// Prompt describing what the user painted into the revealed region.
    pub new: String,
    /// `original + " " + new`; the prompt used for the edit pass.
    pub combined: String,
}

impl Prompts {
    pub fn new(original: &str, new: &str) -> Self {
        Self {
            original: original.to_string(),
            new: new.to_string(),
            combined: format!("{original} {new}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleFile {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleManifest {
    pub version: u32,
    pub encoder: String,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub prompts: Prompts,
    pub steps: usize,
    pub replace: usize,
    /// Outcome for steps `n = N, N−1, …, 1` in denoising order.
    pub schedule: Vec<ScheduleOutcome>,
    pub files: BTreeMap<String, BundleFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

/// Inputs to [`export_bundle`].
pub struct BundleInputs<'a> {
    pub image: &'a Image,
    pub tracking: &'a [Image],
    pub mask: &'a DisocclusionMask,
    pub edited: &'a Image,
    pub prompts: Prompts,
    pub steps: usize,
    pub replace: usize,
    pub encoder: &'a dyn LatentEncoder,
    pub created_at: Option<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes a bundle to `out_dir` and returns its manifest.
pub fn export_bundle(inputs: &BundleInputs<'_>, out_dir: &Path) -> Result<BundleManifest, LatentError> {
    let dims = inputs.image.dims();
    let frames = inputs.tracking.len();
    let mismatch = |what: &str, detail: String| LatentError::Dimension {
        what: what.to_string(),
        detail,
    };
    if frames < 2 {
        return Err(mismatch("tracking video", format!("needs at least 2 frames, has {frames}")));
    }
    if let Some(f) = inputs.tracking.iter().find(|f| f.dims() != dims) {
        return Err(mismatch("tracking video", format!("frame is {:?}, image is {dims:?}", f.dims())));
    }
    if inputs.mask.frame_count() != frames || inputs.mask.dims() != dims {
        return Err(mismatch(
            "disocclusion mask",
            format!(
                "is {} x {:?}, tracking is {frames} x {dims:?}",
                inputs.mask.frame_count(),
                inputs.mask.dims()
            ),
        ));
    }
    if inputs.replace > inputs.steps || inputs.steps == 0 {
        return Err(LatentError::Schedule {
            n: 1,
            steps: inputs.steps,
            replace: inputs.replace,
        });
    }
    let t = frames - 1;

    let encoder = inputs.encoder;
    let latent_mask = downsample_mask(inputs.mask)?;
    let source = LatentTensor::new(encoder.encode(&build_pseudo_video(inputs.image, t))?, Provenance::Source)?;
    let edit = LatentTensor::new(
        encoder.encode(&build_edit_video(inputs.edited, t, dims)?)?,
        Provenance::Edit,
    )?;
    let blended = apply_zero_rule(&composite(&source, &edit, &latent_mask)?, &latent_mask)?;
    let tracking_tensor = motion_export::video_tensor(inputs.tracking);
    let tracking_latent = encoder.encode(&tracking_tensor)?;

    create_dir(out_dir)?;
    let mut files = BTreeMap::new();
    let mut put = |name: &str, file: &str, bytes: Vec<u8>| -> Result<(), IoError> {
        write_file(&out_dir.join(file), &bytes)?;
        files.insert(
            name.to_string(),
            BundleFile {
                path: file.into(),
                sha256: sha256_hex(&bytes),
            },
        );
        Ok(())
    };
    put("input_image", "input.png", raster::encode_rgb_png(inputs.image))?;
    put("edited_frame", "edited.png", raster::encode_rgb_png(inputs.edited))?;
    put("tracking_video", "tracking.pdgt", tracking_tensor.to_bytes())?;
    put("disocclusion_mask", "mask.pdgt", motion_export::mask_tensor(inputs.mask).to_bytes())?;
    put("latent_mask", "latent_mask.pdgt", latent_mask.data().to_bytes())?;
    put("source_latent", "source_latent.pdgt", source.data().to_bytes())?;
    put("edit_latent", "edit_latent.pdgt", edit.data().to_bytes())?;
    put("composite_latent", "composite_latent.pdgt", blended.data().to_bytes())?;
    put("tracking_latent", "tracking_latent.pdgt", tracking_latent.to_bytes())?;

    let schedule = (1..=inputs.steps)
        .rev()
        .map(|n| schedule_conditioning(n, inputs.steps, inputs.replace).map(|d| d.outcome))
        .collect::<Result<_, _>>()?;
    let manifest = BundleManifest {
        version: BUNDLE_VERSION,
        encoder: encoder.id().to_string(),
        frames,
        height: dims.0,
        width: dims.1,
        prompts: inputs.prompts.clone(),
        steps: inputs.steps,
        replace: inputs.replace,
        schedule,
        files,
        created_at: inputs.created_at.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&out_dir.join(MANIFEST_NAME), text.as_bytes())?;
    Ok(manifest)
}

/// A bundle read back from disk with every checksum verified.
#[derive(Debug, Clone)]
pub struct LoadedBundle {
    pub manifest: BundleManifest,
    pub input_image: Image,
    pub edited_frame: Image,
    /// Every `.pdgt` artifact keyed by its manifest name.
    pub tensors: BTreeMap<String, Tensor4>,
}

pub fn load_bundle(dir: &Path) -> Result<LoadedBundle, LatentError> {
    let text = read_text(&dir.join(MANIFEST_NAME))?;
    let manifest: BundleManifest =
        serde_json::from_str(&text).map_err(|e| LatentError::Manifest(e.to_string()))?;
    if manifest.version != BUNDLE_VERSION {
        return Err(LatentError::Manifest(format!(
            "unsupported version {}",
            manifest.version
        )));
    }
    let mut tensors = BTreeMap::new();
    let mut images = BTreeMap::new();
    for (name, f) in &manifest.files {
        let path = dir.join(&f.path);
        let bytes = read_file(&path)?;
        if sha256_hex(&bytes) != f.sha256 {
            return Err(LatentError::Checksum {
                file: f.path.display().to_string(),
            });
        }
        if f.path.extension().is_some_and(|e| e == "pdgt") {
            tensors.insert(name.clone(), Tensor4::from_bytes(&bytes, &path.display().to_string())?);
        } else {
            images.insert(name.clone(), raster::load_rgb_png(&path)?);
        }
    }
    let mut take = |name: &str| {
        images
            .remove(name)
            .ok_or_else(|| LatentError::Manifest(format!("missing {name}")))
    };
    let input_image = take("input_image")?;
    let edited_frame = take("edited_frame")?;
    Ok(LoadedBundle {
        manifest,
        input_image,
        edited_frame,
        tensors,
    })
}
