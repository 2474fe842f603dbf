//! One function per subcommand. They return data; printing and exit codes
//! live in the binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proxydyn::document::{PdgDocument, PoseDocument, DOCUMENT_VERSION};
use proxydyn::latent::{export_bundle, BundleInputs, BundleManifest, Prompts, ReferenceEncoder};
use proxydyn::metrics::{
    aggregate, idiff, idiff_masked, optflow_score, psnr, ssim, write_csv, write_report_json,
    Aggregate, MetricReport, MetricsError,
};
use proxydyn::motion::Easing;
use proxydyn::pdg::Violation;
use proxydyn::raster::{self, Image};
use proxydyn::scene::{load_scene, save_scene};
use proxydyn::synth::{synth_scene, SyntheticSpec};

use crate::artifacts::{write_compile_dir, CompileDir, CompileManifest, CompileOptions};
use crate::error::CliError;

/// RFC 3339 timestamp for the optional `created_at` manifest fields.
pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateReport {
    pub violations: Vec<Violation>,
    /// False when no scene was given and the document is not self-contained,
    /// so only structural checks ran.
    pub geometry_checked: bool,
}

pub fn validate(pdg_path: &Path, scene_path: Option<&Path>) -> Result<ValidateReport, CliError> {
    let doc = PdgDocument::load(pdg_path)?;
    let base = pdg_path.parent().unwrap_or(Path::new("."));
    let pdg = match scene_path {
        Some(s) => Some(doc.build(&load_scene(s)?, base)?),
        None if doc.is_self_contained() => Some(doc.build_standalone(base)?),
        None => None,
    };
    Ok(match pdg {
        Some(p) => ValidateReport {
            violations: p.validate(),
            geometry_checked: true,
        },
        None => ValidateReport {
            violations: doc.structural_violations(),
            geometry_checked: false,
        },
    })
}

pub struct CompileArgs<'a> {
    pub scene: &'a Path,
    pub pdg: &'a Path,
    pub pose: &'a Path,
    pub frames: usize,
    pub easing: Easing,
    pub out: &'a Path,
    pub options: CompileOptions,
}

pub fn compile(args: &CompileArgs<'_>) -> Result<CompileManifest, CliError> {
    let scene = load_scene(args.scene)?;
    let doc = PdgDocument::load(args.pdg)?;
    let pdg = doc.build(&scene, args.pdg.parent().unwrap_or(Path::new(".")))?;
    let violations = pdg.validate();
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(CliError::validation(lines.join("\n")));
    }
    let pose = PoseDocument::load(args.pose)?.pose();
    let (manifest, _) = write_compile_dir(&scene, &doc, &pdg, &pose, args.frames, args.easing, args.out, &args.options)?;
    Ok(manifest)
}

pub struct BundleArgs<'a> {
    pub compile_dir: &'a Path,
    pub edited: &'a Path,
    pub prompt: &'a str,
    pub new_prompt: &'a str,
    pub steps: usize,
    pub replace: usize,
    pub out: &'a Path,
    pub created_at: Option<String>,
}

pub fn bundle(args: &BundleArgs<'_>) -> Result<BundleManifest, CliError> {
    let compiled = CompileDir::load(args.compile_dir)?;
    let edited = raster::load_rgb_png(args.edited)?;
    if edited.dims() != compiled.input.dims() {
        return Err(CliError::validation(format!(
            "edited frame is {:?} but the scene is {:?}",
            edited.dims(),
            compiled.input.dims()
        )));
    }
    let inputs = BundleInputs {
        image: &compiled.input,
        tracking: &compiled.tracking,
        mask: &compiled.mask,
        edited: &edited,
        prompts: Prompts::new(args.prompt, args.new_prompt),
        steps: args.steps,
        replace: args.replace,
        encoder: &ReferenceEncoder,
        created_at: args.created_at.clone(),
    };
    Ok(export_bundle(&inputs, args.out)?)
}

pub struct MetricsArgs<'a> {
    pub candidate: &'a Path,
    pub compile_dir: &'a Path,
    pub edited: &'a Path,
    pub out: &'a Path,
    pub tau: f64,
    pub sample_id: Option<String>,
}

/// `*.png` files of a directory in name order.
pub fn read_frame_dir(dir: &Path) -> Result<Vec<Image>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    paths.iter().map(|p| Ok(raster::load_rgb_png(p)?)).collect()
}

/// Scores a candidate video and refreshes `metrics.csv` from every report in
/// the output directory.
pub fn metrics(args: &MetricsArgs<'_>) -> Result<(MetricReport, Aggregate), CliError> {
    let compiled = CompileDir::load(args.compile_dir)?;
    let video = read_frame_dir(args.candidate)?;
    let frames = compiled.manifest.frames + 1;
    if video.len() != frames {
        return Err(MetricsError::FrameCount {
            frames: video.len(),
            flows: compiled.flows.len(),
        }
        .into());
    }
    let edited = raster::load_rgb_png(args.edited)?;
    let last = video.last().expect("at least two frames");
    let optflow = match optflow_score(&video, &compiled.flows, args.tau) {
        Ok(v) => Some(v),
        Err(MetricsError::NoMotion { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let masked = idiff_masked(last, &edited, compiled.mask.frames.last().unwrap())?;
    let sample_id = args.sample_id.clone().unwrap_or_else(|| {
        args.candidate
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sample".into())
    });
    let (height, width) = last.dims();
    let report = MetricReport {
        sample_id: sample_id.clone(),
        frames,
        height,
        width,
        tau: args.tau,
        optflow,
        idiff: idiff(last, &edited)?,
        idiff_m: masked.value,
        idiff_m_empty: masked.empty,
        psnr: psnr(last, &edited)?,
        ssim: ssim(last, &edited)?,
    };
    std::fs::create_dir_all(args.out).map_err(|e| CliError::io(format!("{}: {e}", args.out.display())))?;
    write_report_json(&report, &args.out.join(format!("{sample_id}.json")))?;

    let mut reports = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(args.out)
        .map_err(|e| CliError::io(format!("{}: {e}", args.out.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
        // Other JSON files may share the directory; only reports count.
        if let Ok(r) = serde_json::from_str::<MetricReport>(&text) {
            reports.push(r);
        }
    }
    write_csv(&reports, &args.out.join("metrics.csv"))?;
    Ok((report, aggregate(&reports)))
}

/// Files written by [`synth`].
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub scene: PathBuf,
    pub pdg: PathBuf,
    pub pose: PathBuf,
}

/// Renders a synthetic spec into a scene directory plus `pdg.json` and a
/// `pose.json` that drives every edge to the far end of its range.
pub fn synth(spec_path: &Path, out: &Path) -> Result<SynthOutput, CliError> {
    let text = std::fs::read_to_string(spec_path).map_err(|e| CliError::io(format!("{}: {e}", spec_path.display())))?;
    let spec: SyntheticSpec =
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", spec_path.display())))?;
    let synth = synth_scene(&spec)?;
    let scene = save_scene(&synth.scene, out)?;
    let pdg = out.join("pdg.json");
    std::fs::write(&pdg, synth.document.to_json()).map_err(|e| CliError::io(format!("{}: {e}", pdg.display())))?;
    let params: BTreeMap<String, f64> = synth
        .document
        .edges
        .iter()
        .map(|e| {
            let [lo, hi] = e.range;
            let far = if hi.abs() >= lo.abs() { hi } else { lo };
            (e.child.clone(), far)
        })
        .collect();
    let pose_doc = PoseDocument {
        version: DOCUMENT_VERSION,
        params,
    };
    let pose = out.join("pose.json");
    std::fs::write(&pose, serde_json::to_string_pretty(&pose_doc).unwrap())
        .map_err(|e| CliError::io(format!("{}: {e}", pose.display())))?;
    Ok(SynthOutput { scene, pdg, pose })
}
