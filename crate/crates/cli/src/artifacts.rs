//! The compile directory: everything `compile` writes and `bundle` and
//! `metrics` read back.
//!
//! ```text
//! input.png
//! tracking/track_0000.png ... tracking/tracking.pdgt
//! masks/mask_0000.png ...     masks/mask.pdgt
//! flow.pdgt
//! appearance/frame_0000.png ...   (only with --appearance)
//! compile.json
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proxydyn::document::PdgDocument;
use proxydyn::latent::BundleFile;
use proxydyn::motion::export::{frames_from_tensor, mask_from_tensor};
use proxydyn::motion::{
    compile_motion, read_flows, render_appearance, write_disocclusion, write_flows, write_frames,
    write_tracking, CompiledMotion, DisocclusionMask, Easing, FlowField,
};
use proxydyn::pdg::{clamp_pose, Pdg, Pose};
use proxydyn::raster::{self, Image};
use proxydyn::scene::Scene;
use proxydyn::tensor::Tensor4;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const COMPILE_MANIFEST: &str = "compile.json";
pub const COMPILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileManifest {
    pub version: u32,
    /// Frames after the input frame; the video has `frames + 1`.
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub easing: Easing,
    /// Target pose after clamping.
    pub pose: BTreeMap<String, f64>,
    pub pdg: PdgDocument,
    /// Disoccluded pixel count per frame.
    pub revealed: Vec<usize>,
    pub files: BTreeMap<String, BundleFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct CompileOptions {
    pub appearance: bool,
    pub created_at: Option<String>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn record(dir: &Path, rel: &str) -> Result<BundleFile, CliError> {
    Ok(BundleFile {
        path: PathBuf::from(rel),
        sha256: sha256_file(&dir.join(rel))?,
    })
}

/// Compiles `target` and writes the compile directory.
#[allow(clippy::too_many_arguments)]
pub fn write_compile_dir(
    scene: &Scene,
    document: &PdgDocument,
    pdg: &Pdg,
    target: &Pose,
    frames: usize,
    easing: Easing,
    out: &Path,
    options: &CompileOptions,
) -> Result<(CompileManifest, CompiledMotion), CliError> {
    pdg.ensure_valid().map_err(|e| CliError::validation(e.to_string()))?;
    let compiled = compile_motion(pdg, &scene.static_cloud(), scene.camera(), target, frames, easing)?;

    raster::save_rgb_png(scene.image(), &out.join("input.png"))?;
    write_tracking(&compiled.tracking, &out.join("tracking"))?;
    write_disocclusion(&compiled.disocclusion, &out.join("masks"))?;
    write_flows(&compiled.flows, &out.join("flow.pdgt"))?;
    if options.appearance {
        let video = render_appearance(&compiled.tracking.correspondences);
        write_frames(&video, &out.join("appearance"), "frame")?;
    }

    let mut files = BTreeMap::new();
    for (name, rel) in [
        ("input_image", "input.png"),
        ("tracking_video", "tracking/tracking.pdgt"),
        ("disocclusion_mask", "masks/mask.pdgt"),
        ("flow", "flow.pdgt"),
    ] {
        files.insert(name.to_string(), record(out, rel)?);
    }
    let (height, width) = scene.dims();
    let manifest = CompileManifest {
        version: COMPILE_VERSION,
        frames,
        height,
        width,
        easing,
        pose: clamp_pose(pdg, target).params,
        pdg: document.clone(),
        revealed: compiled.disocclusion.frames.iter().map(|m| m.count()).collect(),
        files,
        created_at: options.created_at.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(out.join(COMPILE_MANIFEST), text)
        .map_err(|e| CliError::io(format!("{}: {e}", out.join(COMPILE_MANIFEST).display())))?;
    Ok((manifest, compiled))
}

/// A compile directory read back, checksums verified.
#[derive(Debug, Clone)]
pub struct CompileDir {
    pub manifest: CompileManifest,
    pub input: Image,
    pub tracking: Vec<Image>,
    pub mask: DisocclusionMask,
    pub flows: Vec<FlowField>,
}

impl CompileDir {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(COMPILE_MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        let manifest: CompileManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        if manifest.version != COMPILE_VERSION {
            return Err(CliError::validation(format!(
                "{}: unsupported version {}",
                path.display(),
                manifest.version
            )));
        }
        for f in manifest.files.values() {
            if sha256_file(&dir.join(&f.path))? != f.sha256 {
                return Err(CliError::validation(format!(
                    "checksum mismatch for {}",
                    dir.join(&f.path).display()
                )));
            }
        }
        let file = |name: &str| -> Result<PathBuf, CliError> {
            manifest
                .files
                .get(name)
                .map(|f| dir.join(&f.path))
                .ok_or_else(|| CliError::validation(format!("{}: no {name} entry", path.display())))
        };
        let input = raster::load_rgb_png(&file("input_image")?)?;
        let tracking = frames_from_tensor(&Tensor4::read(&file("tracking_video")?)?)?;
        let mask = mask_from_tensor(&Tensor4::read(&file("disocclusion_mask")?)?)?;
        let flows = read_flows(&file("flow")?)?;
        let frames = manifest.frames + 1;
        if tracking.len() != frames || mask.frame_count() != frames || flows.len() != manifest.frames {
            return Err(CliError::validation(format!(
                "{}: artifact frame counts disagree with the manifest",
                dir.display()
            )));
        }
        Ok(Self {
            manifest,
            input,
            tracking,
            mask,
            flows,
        })
    }
}
