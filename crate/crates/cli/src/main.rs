use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use proxydyn::metrics::DEFAULT_TAU;
use proxydyn::motion::{Easing, DEFAULT_FRAMES};
use proxydyn_cli::artifacts::CompileOptions;
use proxydyn_cli::commands::{self, BundleArgs, CompileArgs, MetricsArgs};
use proxydyn_cli::error::CliError;
use proxydyn_cli::service::{self, ServiceConfig};

#[derive(Parser)]
#[command(name = "proxydyn", version, about = "Motion editing from proxy dynamic graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EasingArg {
    Linear,
    Smoothstep,
}

impl From<EasingArg> for Easing {
    fn from(e: EasingArg) -> Self {
        match e {
            EasingArg::Linear => Easing::Linear,
            EasingArg::Smoothstep => Easing::Smoothstep,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a graph document. Without a scene only structural checks run,
    /// unless the document carries its own point clouds.
    Validate {
        pdg: PathBuf,
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Render tracking video, disocclusion masks and flow for a target pose.
    Compile {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        pdg: PathBuf,
        #[arg(long)]
        pose: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FRAMES)]
        frames: usize,
        #[arg(long, value_enum, default_value = "linear")]
        easing: EasingArg,
        #[arg(long)]
        out: PathBuf,
        /// Also write the point-splat appearance video.
        #[arg(long)]
        appearance: bool,
        /// Record the current time in the manifest.
        #[arg(long)]
        timestamp: bool,
    },
    /// Encode a compile directory and an edited frame into a conditioning bundle.
    Bundle {
        #[arg(long)]
        compile: PathBuf,
        #[arg(long)]
        edited: PathBuf,
        #[arg(long)]
        prompt: String,
        #[arg(long)]
        new_prompt: String,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 35)]
        replace: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        timestamp: bool,
    },
    /// Score a generated video against the compiled motion and edited frame.
    Metrics {
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        compile: PathBuf,
        #[arg(long)]
        edited: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long)]
        sample_id: Option<String>,
    },
    /// Run the authoring backend.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long, default_value_t = DEFAULT_FRAMES)]
        frames: usize,
    },
    /// Render a synthetic scene spec to a scene directory, pdg.json and pose.json.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn timestamp(on: bool) -> Option<String> {
    on.then(commands::now_timestamp)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { pdg, scene } => {
            let report = commands::validate(&pdg, scene.as_deref())?;
            if !report.geometry_checked {
                eprintln!("note: no scene given; geometry checks skipped");
            }
            if report.violations.is_empty() {
                println!("valid");
                return Ok(());
            }
            let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
            Err(CliError::validation(lines.join("\n")))
        }
        Command::Compile {
            scene,
            pdg,
            pose,
            frames,
            easing,
            out,
            appearance,
            timestamp: ts,
        } => {
            std::fs::create_dir_all(&out).map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
            let manifest = commands::compile(&CompileArgs {
                scene: &scene,
                pdg: &pdg,
                pose: &pose,
                frames,
                easing: easing.into(),
                out: &out,
                options: CompileOptions {
                    appearance,
                    created_at: timestamp(ts),
                },
            })?;
            let revealed = manifest.revealed.last().copied().unwrap_or(0);
            println!("compiled {} frames to {} ({revealed} pixels revealed)", manifest.frames + 1, out.display());
            Ok(())
        }
        Command::Bundle {
            compile,
            edited,
            prompt,
            new_prompt,
            steps,
            replace,
            out,
            timestamp: ts,
        } => {
            let manifest = commands::bundle(&BundleArgs {
                compile_dir: &compile,
                edited: &edited,
                prompt: &prompt,
                new_prompt: &new_prompt,
                steps,
                replace,
                out: &out,
                created_at: timestamp(ts),
            })?;
            println!("bundle written to {} ({} latent frames)", out.display(), 1 + (manifest.frames - 1) / 4);
            Ok(())
        }
        Command::Metrics {
            candidate,
            compile,
            edited,
            out,
            tau,
            sample_id,
        } => {
            let (r, _) = commands::metrics(&MetricsArgs {
                candidate: &candidate,
                compile_dir: &compile,
                edited: &edited,
                out: &out,
                tau,
                sample_id,
            })?;
            let optflow = r.optflow.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
            println!(
                "{}: optflow {optflow} idiff {:.3} idiff_m {:.3} psnr {:.2} ssim {:.4}",
                r.sample_id, r.idiff, r.idiff_m, r.psnr, r.ssim
            );
            Ok(())
        }
        Command::Serve { bind, frames } => {
            let config = ServiceConfig {
                frames,
                ..ServiceConfig::default()
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io(e.to_string()))?;
            rt.block_on(service::serve(bind, config))
                .map_err(|e| CliError::io(format!("{bind}: {e}")))
        }
        Command::Synth { spec, out } => {
            let o = commands::synth(&spec, &out)?;
            println!("scene {}\npdg {}\npose {}", o.scene.display(), o.pdg.display(), o.pose.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            for line in e.message.lines() {
                eprintln!("error: {line}");
            }
            e.exit_code()
        }
    }
}
