//! `nuclei` — command-line front end for the instance segmentation
//! toolkit: target generation, watershed post-processing, evaluation,
//! tile planning, and synthetic test data.
//!
//! Every failure exits non-zero and prints a single-line JSON error
//! record to stderr so batch drivers can triage without scraping prose.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "nuclei", version, about = "Nuclear instance segmentation toolkit")]
struct Cli {
    /// Worker threads for batch commands (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Overrides the base seed of generator commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute training targets (distance maps, mask, type map) from
    /// an instance label map and its annotations.
    GenTargets(GenTargetsArgs),
    /// Turn predicted probability/distance maps into labelled
    /// instances via marker-controlled watershed.
    Postproc(PostprocArgs),
    /// Segmentation metrics (DICE, DICE2, AJI, DQ/SQ/PQ) over paired
    /// label maps.
    EvalSeg(EvalSegArgs),
    /// Detection + classification F-scores over paired annotation
    /// tables.
    EvalClass(EvalClassArgs),
    /// Emit the tile layout for an image size as JSON.
    TilePlan(TilePlanArgs),
    /// Generate synthetic scenes (label maps + annotations).
    Synth(SynthArgs),
}

#[derive(Args)]
struct GenTargetsArgs {
    /// Instance label map, 16-bit grayscale PNG.
    #[arg(long)]
    instances: PathBuf,
    /// Annotation table assigning a class to every instance.
    #[arg(long)]
    types: PathBuf,
    /// Directory receiving hover.bin(+.json), np.png, types.png.
    #[arg(long)]
    out_dir: PathBuf,
    /// Size of the class vocabulary.
    #[arg(long, default_value_t = 4)]
    num_classes: u8,
}

#[derive(Args)]
struct PostprocArgs {
    /// Foreground probability map (1 channel, or 2 with background
    /// first).
    #[arg(long)]
    np: PathBuf,
    /// Horizontal/vertical distance maps (exactly 2 channels).
    #[arg(long)]
    hover: PathBuf,
    /// Per-class probability maps (background + classes); enables
    /// instance typing.
    #[arg(long)]
    nc: Option<PathBuf>,
    /// Post-processing config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output instance label map (16-bit PNG).
    #[arg(long)]
    out: PathBuf,
    /// Output annotation table with per-instance types; requires --nc.
    #[arg(long)]
    types_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalSegArgs {
    /// Ground-truth label maps, paired with --pred by position.
    #[arg(long, num_args = 1.., required = true)]
    gt: Vec<PathBuf>,
    /// Predicted label maps.
    #[arg(long, num_args = 1.., required = true)]
    pred: Vec<PathBuf>,
    /// Report path (TSV, per image + average).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalClassArgs {
    /// Ground-truth annotation tables, paired with --pred-ann by
    /// position.
    #[arg(long, num_args = 1.., required = true)]
    gt_ann: Vec<PathBuf>,
    /// Predicted annotation tables.
    #[arg(long, num_args = 1.., required = true)]
    pred_ann: Vec<PathBuf>,
    /// Centroid matching radius in pixels (12 suits 40x images, 6
    /// suits 20x).
    #[arg(long, default_value_t = 12.0)]
    radius: f64,
    /// Size of the class vocabulary.
    #[arg(long, default_value_t = 4)]
    num_classes: u8,
    /// Report path (TSV).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TilePlanArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    /// Network input window size.
    #[arg(long, default_value_t = 270)]
    input: usize,
    /// Network output window size.
    #[arg(long, default_value_t = 80)]
    output: usize,
    /// Plan destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving scene_NNN.png / scene_NNN.csv pairs.
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    nuclei_core::parallel::limit_workers(cli.workers);
    let (name, result) = match &cli.command {
        Command::GenTargets(a) => (
            "gen-targets",
            commands::gen_targets(&a.instances, &a.types, &a.out_dir, a.num_classes),
        ),
        Command::Postproc(a) => (
            "postproc",
            commands::postproc(
                &a.np,
                &a.hover,
                a.nc.as_deref(),
                a.config.as_deref(),
                &a.out,
                a.types_out.as_deref(),
            ),
        ),
        Command::EvalSeg(a) => ("eval-seg", commands::eval_seg(&a.gt, &a.pred, &a.out)),
        Command::EvalClass(a) => (
            "eval-class",
            commands::eval_class(&a.gt_ann, &a.pred_ann, a.radius, a.num_classes, &a.out),
        ),
        Command::TilePlan(a) => (
            "tile-plan",
            commands::tile_plan(a.height, a.width, a.input, a.output, a.out.as_deref()),
        ),
        Command::Synth(a) => (
            "synth",
            commands::synth(a.config.as_deref(), &a.out_dir, cli.seed),
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let record = serde_json::json!({
                "status": "error",
                "command": name,
                "message": format!("{err:#}"),
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
