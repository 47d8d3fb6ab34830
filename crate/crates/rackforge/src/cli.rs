//! The `forge` command-line interface: a thin dispatch layer over the
//! library. Every subcommand is deterministic given identical inputs and
//! seeds, resolves its configuration up front, logs it to stderr, and
//! writes only under `--out`.

use crate::dataset;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::io::{self, ReconMeta, SequenceMeta, WorldFile};
use crate::losses::{self, DiscriminatorOutputs, LossKind, LossReport, PairwiseDivergence};
use crate::noise::NoiseConfig;
use crate::recon::ReconParams;
use crate::stitch::{compare_to_truth, merge_world, StitchParams};
use crate::synth::GenConfig;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "forge",
    version,
    about = "Procedural warehouse layouts: generation, degradation, evaluation and 3D reconstruction"
)]
pub struct Cli {
    /// Cap on worker threads for parallel stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PairwiseMode {
    SymmetricKl,
    SquaredError,
}

impl From<PairwiseMode> for PairwiseDivergence {
    fn from(m: PairwiseMode) -> Self {
        match m {
            PairwiseMode::SymmetricKl => PairwiseDivergence::SymmetricKl,
            PairwiseMode::SquaredError => PairwiseDivergence::SquaredError,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a domain-randomized dataset with ground-truth layouts.
    Gen {
        /// Generator config JSON; defaults to the desk-scale config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed; overrides the config's seed. FORGE_SEED supplies a
        /// default, the flag wins.
        #[arg(long, env = "FORGE_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Degrade ground truth into simulated predictions (.lay + .plf).
    Degrade {
        /// Dataset root produced by `gen`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Noise config JSON; defaults to the calibrated reference config.
        #[arg(long)]
        noise: Option<PathBuf>,
        #[arg(long, env = "FORGE_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate predictions against ground truth (mIoU / mAP table).
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Where to write the metrics JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Loss kernels over a prediction tree.
    Loss {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Optional discriminator outputs JSON: {"real": [...], "fake": [...]}.
        #[arg(long)]
        disc: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "symmetric-kl")]
        pairwise: PairwiseMode,
    },
    /// Lift per-frame layouts to 3D box reconstructions.
    Recon {
        /// Dataset root (all sequences) or one sequence directory.
        #[arg(long)]
        layouts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stitch per-frame reconstructions into a global world model.
    Stitch {
        /// Reconstruction directory from `recon`; repeat to register
        /// several sequences into one model.
        #[arg(long, required = true)]
        frames: Vec<PathBuf>,
        /// Anchor offset "x,y,z" per additional sequence (world frame of
        /// the first sequence); defaults to zero.
        #[arg(long)]
        offset: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a world model as Wavefront OBJ cuboids.
    ExportObj {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a world model against a ground-truth scene.
    Compare {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        /// Anchor "x,y,z" overriding the one stored in the world file.
        #[arg(long)]
        anchor: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in self checks: gradient checks, format round trips and a
    /// miniature end-to-end pipeline.
    Selftest,
}

/// Entry point used by the `forge` binary.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized, --jobs ignored");
        }
    }
    match cli.command {
        Command::Gen { config, seed, out } => cmd_gen(config.as_deref(), seed, &out),
        Command::Degrade {
            input,
            noise,
            seed,
            out,
        } => cmd_degrade(&input, noise.as_deref(), seed, &out),
        Command::Eval { pred, truth, out } => cmd_eval(&pred, &truth, out.as_deref()),
        Command::Loss {
            pred,
            truth,
            disc,
            pairwise,
        } => cmd_loss(&pred, &truth, disc.as_deref(), pairwise.into()),
        Command::Recon { layouts, out } => cmd_recon(&layouts, &out),
        Command::Stitch { frames, offset, out } => cmd_stitch(&frames, &offset, &out),
        Command::ExportObj { world, out } => cmd_export_obj(&world, &out),
        Command::Compare {
            world,
            scene,
            anchor,
            out,
        } => cmd_compare(&world, &scene, anchor.as_deref(), out.as_deref()),
        Command::Selftest => cmd_selftest(),
    }
}

fn log_resolved<T: serde::Serialize>(what: &str, value: &T) {
    eprintln!(
        "resolved {what}: {}",
        serde_json::to_string(value).unwrap_or_else(|_| "<unserializable>".into())
    );
}

fn cmd_gen(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg: GenConfig = match config {
        Some(path) => io::load_json(path)?,
        None => GenConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    log_resolved("config", &cfg);
    let manifest = dataset::generate_dataset(&cfg, out)?;
    io::save_json(&out.join("resolved_config.json"), &cfg)?;
    println!(
        "generated {} sequences ({} frames each) under {}",
        manifest.sequences.len(),
        manifest.sequences.first().map(|s| s.frames).unwrap_or(0),
        out.display()
    );
    Ok(())
}

fn cmd_degrade(input: &Path, noise: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg: NoiseConfig = match noise {
        Some(path) => io::load_json(path)?,
        None => NoiseConfig::calibrated_a(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    log_resolved("noise", &cfg);
    let manifest = dataset::degrade_dataset(input, &cfg, out)?;
    io::save_json(&out.join("resolved_noise.json"), &cfg)?;
    println!(
        "degraded {} sequences into {}",
        manifest.sequences.len(),
        out.display()
    );
    Ok(())
}

fn cmd_eval(pred: &Path, truth: &Path, out: Option<&Path>) -> Result<()> {
    let table = dataset::evaluate_dataset(pred, truth)?;
    print!("{}", table.render());
    println!("{}", serde_json::to_string(&table)?);
    if let Some(out) = out {
        io::save_json(out, &table)?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct DiscFile {
    real: Vec<f64>,
    fake: Vec<f64>,
}

fn cmd_loss(
    pred: &Path,
    truth: &Path,
    disc: Option<&Path>,
    mode: PairwiseDivergence,
) -> Result<()> {
    let base = dataset::dataset_losses(pred, truth, mode)?;
    let report = match disc {
        Some(path) => {
            let d: DiscFile = io::load_json(path)?;
            let real = DiscriminatorOutputs::real(d.real)?;
            let fake = DiscriminatorOutputs::fake(d.fake)?;
            LossReport::new(
                base.l_sup,
                losses::l_adv(&fake)?,
                base.l_short,
                base.l_long,
                losses::l_discr(&real, &fake)?,
            )
        }
        None => base,
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

/// Sequence directories to reconstruct: the whole dataset when `layouts`
/// has a manifest, otherwise `layouts` itself as a single sequence.
fn sequence_dirs(layouts: &Path) -> Result<Vec<(PathBuf, PathBuf, u32)>> {
    if layouts.join(io::MANIFEST_NAME).is_file() {
        let manifest = io::load_manifest(layouts)?;
        Ok(manifest
            .sequences
            .iter()
            .map(|e| (layouts.join(&e.dir), PathBuf::from(&e.dir), e.frames))
            .collect())
    } else {
        let frames = count_frames(layouts)?;
        Ok(vec![(layouts.to_path_buf(), PathBuf::new(), frames)])
    }
}

fn count_frames(seq_dir: &Path) -> Result<u32> {
    let mut frames = 0u32;
    while seq_dir
        .join(io::frame_file_name(frames, crate::grid::View::Top, "lay"))
        .is_file()
    {
        frames += 1;
    }
    if frames == 0 {
        return Err(Error::Alignment(format!(
            "no frame_*_top.lay files under {seq_dir:?}"
        )));
    }
    Ok(frames)
}

fn grid_for(seq_dir: &Path, layouts_root: &Path) -> Result<crate::grid::GridSpec> {
    if layouts_root.join(io::MANIFEST_NAME).is_file() {
        return Ok(io::load_manifest(layouts_root)?.grid);
    }
    // Single sequence directory: recover D and R from the first stack and
    // assume the default 10 m extent unless a manifest says otherwise.
    let first = io::read_lay(&seq_dir.join(io::frame_file_name(0, crate::grid::View::Top, "lay")))?;
    Ok(crate::grid::GridSpec {
        resolution: first.resolution(),
        num_shelves: first.num_channels() as u32,
        ..crate::grid::GridSpec::default()
    })
}

fn cmd_recon(layouts: &Path, out: &Path) -> Result<()> {
    let params = ReconParams::default();
    log_resolved("recon params", &params);
    let dirs = sequence_dirs(layouts)?;
    fs::create_dir_all(out)?;
    let mut total_boxes = 0usize;
    for (src, rel, frames) in &dirs {
        let spec = grid_for(src, layouts)?;
        let dst = if rel.as_os_str().is_empty() {
            out.to_path_buf()
        } else {
            out.join(rel)
        };
        fs::create_dir_all(&dst)?;
        let recons = dataset::reconstruct_sequence_dir(src, *frames, &spec, &params)?;
        let meta_path = src.join("meta.json");
        let meta: Option<SequenceMeta> = if meta_path.is_file() {
            Some(io::load_json(&meta_path)?)
        } else {
            None
        };
        for (t, recon) in recons.iter().enumerate() {
            total_boxes += recon.boxes.len();
            io::save_json(&dst.join(io::recon_frame_file_name(t as u32)), recon)?;
        }
        let recon_meta = ReconMeta {
            grid: spec,
            frames: *frames,
            anchor: meta
                .as_ref()
                .and_then(|m| m.origins.first().copied().flatten()),
            origin_shifts: meta.as_ref().map(|m| m.origin_shifts()).unwrap_or_default(),
        };
        io::save_json(&dst.join("recon.json"), &recon_meta)?;
        if src.join("scene.json").is_file() {
            fs::copy(src.join("scene.json"), dst.join("scene.json"))?;
        }
    }
    println!(
        "reconstructed {} sequence(s), {} boxes total, into {}",
        dirs.len(),
        total_boxes,
        out.display()
    );
    Ok(())
}

fn parse_vec3(text: &str) -> Result<Vec3> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::validation(
            "offset",
            format!("expected x,y,z, got {text:?}"),
        ));
    }
    let mut v = [0.0f64; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .trim()
            .parse()
            .map_err(|e| Error::validation("offset", format!("{p:?}: {e}")))?;
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn load_recon_dir(dir: &Path) -> Result<(ReconMeta, Vec<crate::recon::FrameRecon>)> {
    let meta: ReconMeta = io::load_json(&dir.join("recon.json"))?;
    let frames = (0..meta.frames)
        .map(|t| io::load_json(&dir.join(io::recon_frame_file_name(t))))
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, frames))
}

fn cmd_stitch(frames: &[PathBuf], offsets: &[String], out: &Path) -> Result<()> {
    let params = StitchParams::default();
    log_resolved("stitch params", &params);
    if offsets.len() > frames.len() {
        return Err(Error::validation("offset", "more offsets than sequences"));
    }
    let (meta0, recons0) = load_recon_dir(&frames[0])?;
    let spec = meta0.grid.clone();
    let mut world = crate::stitch::stitch_sequence(
        &recons0,
        &spec,
        &params,
        Some(&meta0.origin_shifts),
    )?;
    world.anchor = meta0.anchor;
    for (k, dir) in frames.iter().enumerate().skip(1) {
        let (meta_k, recons_k) = load_recon_dir(dir)?;
        let mut other = crate::stitch::stitch_sequence(
            &recons_k,
            &meta_k.grid,
            &params,
            Some(&meta_k.origin_shifts),
        )?;
        other.anchor = meta_k.anchor;
        let offset = match offsets.get(k).or_else(|| offsets.get(k - 1)) {
            Some(text) => parse_vec3(text)?,
            // Without an explicit offset, register via the anchors when
            // both sequences carry one.
            None => match (world.anchor, other.anchor) {
                (Some(a), Some(b)) => b - a,
                _ => Vec3::ZERO,
            },
        };
        merge_world(&mut world, &other, offset, &spec, &params);
    }
    io::save_json(out, &WorldFile { grid: spec, world: world.clone() })?;
    println!(
        "stitched {} sequence(s): {} slabs, {} boxes -> {}",
        frames.len(),
        world.slabs.len(),
        world.boxes.len(),
        out.display()
    );
    Ok(())
}

fn cmd_export_obj(world: &Path, out: &Path) -> Result<()> {
    let file: WorldFile = io::load_json(world)?;
    crate::obj::write_obj(out, &file.world)?;
    println!(
        "exported {} slabs and {} boxes to {}",
        file.world.slabs.len(),
        file.world.boxes.len(),
        out.display()
    );
    Ok(())
}

fn cmd_compare(
    world: &Path,
    scene: &Path,
    anchor: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let file: WorldFile = io::load_json(world)?;
    let scene: crate::scene::SceneGraph = io::load_json(scene)?;
    let alignment = match anchor {
        Some(text) => parse_vec3(text)?,
        None => file.world.anchor.ok_or_else(|| {
            Error::validation(
                "anchor",
                "world file has no anchor; pass --anchor x,y,z",
            )
        })?,
    };
    let report = compare_to_truth(&file.world, &scene, alignment, &file.grid);
    println!("{}", serde_json::to_string(&report)?);
    if let Some(out) = out {
        io::save_json(out, &report)?;
    }
    Ok(())
}

fn cmd_selftest() -> Result<()> {
    use crate::grid::{CellClass, LayoutStack, View};

    // Gradient checks: 100 random small inputs across all kernels.
    let mut worst = 0.0f64;
    for kind in LossKind::ALL {
        for seed in 0..20 {
            worst = worst.max(losses::check_loss_gradient(kind, seed, 1e-5));
        }
    }
    let grad_ok = worst <= 1e-4;
    println!(
        "selftest gradient-checks: {} (max relative error {worst:.3e})",
        if grad_ok { "ok" } else { "FAILED" }
    );

    // Binary format round trips.
    let tmp = std::env::temp_dir().join(format!("forge_selftest_{}", std::process::id()));
    fs::create_dir_all(&tmp)?;
    let mut stack = LayoutStack::background(View::Front, 32, 3);
    stack.set(1, 4, 4, CellClass::Occupied);
    stack.set(0, 30, 2, CellClass::Unoccupied);
    io::write_lay(&tmp.join("t.lay"), &stack)?;
    let lay_ok = io::read_lay(&tmp.join("t.lay"))? == stack;
    let probs = crate::grid::ProbabilityStack::one_hot(&stack);
    io::write_plf(&tmp.join("t.plf"), &probs)?;
    let plf_ok = io::read_plf(&tmp.join("t.plf"))? == probs;
    println!(
        "selftest format-roundtrip: {}",
        if lay_ok && plf_ok { "ok" } else { "FAILED" }
    );

    // Miniature pipeline: generate, evaluate truth vs truth, reconstruct.
    let mut cfg = GenConfig::reference_mini();
    cfg.sequences = 1;
    cfg.frames_per_sequence = 3;
    cfg.grid.resolution = 64;
    let data_dir = tmp.join("mini");
    dataset::generate_dataset(&cfg, &data_dir)?;
    let table = dataset::evaluate_dataset(&data_dir, &data_dir)?;
    let eval_ok = table.cells().iter().all(|&c| c == 100.0);
    println!(
        "selftest truth-vs-truth: {}",
        if eval_ok { "ok" } else { "FAILED" }
    );
    fs::remove_dir_all(&tmp)?;

    if grad_ok && lay_ok && plf_ok && eval_ok {
        Ok(())
    } else {
        Err(Error::validation("selftest", "one or more checks failed"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec3_parsing() {
        assert_eq!(parse_vec3("1,2,3").unwrap(), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(
            parse_vec3(" -0.5, 0, 2.25 ").unwrap(),
            Vec3::new(-0.5, 0.0, 2.25)
        );
        assert!(parse_vec3("1,2").is_err());
        assert!(parse_vec3("a,b,c").is_err());
    }

    #[test]
    fn cli_parses_the_documented_subcommands() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from([
            "forge", "gen", "--seed", "7", "--out", "/tmp/x",
        ])
        .unwrap();
        match cli.command {
            Command::Gen { seed, .. } => assert_eq!(seed, Some(7)),
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["forge", "bogus"]).is_err());
        let err = Cli::try_parse_from(["forge", "gen", "--unknown-flag"]).unwrap_err();
        assert_eq!(err.exit_code(), 2, "usage errors must exit 2");
    }
}
