//! Dataset-level pipeline: generating datasets to disk, degrading them into
//! simulated predictions, aligning prediction/truth trees, computing
//! metrics and losses over directories, and reconstructing sequences.
//!
//! On-disk layout of a dataset root:
//!
//! ```text
//! out/
//!   manifest.json
//!   seq_0000/
//!     scene.json
//!     poses.csv
//!     meta.json
//!     frame_0000_top.lay      (+ frame_0000_top.plf in degraded sets)
//!     frame_0000_front.lay    ...
//!   seq_0001/ ...
//! ```
//!
//! Sequences are processed in parallel (each worker owns its derived seed
//! and its own files), so outputs are byte-identical regardless of the
//! worker count.

use crate::error::{Error, Result};
use crate::grid::{LayoutStack, ProbabilityStack, View};
use crate::io::{
    self, frame_file_name, sequence_dir_name, Manifest, SequenceEntry, SequenceMeta,
};
use crate::losses::{self, LossReport, PairwiseDivergence};
use crate::metrics::{MetricsAccumulator, MetricsTable};
use crate::noise::{degrade, NoiseConfig};
use crate::recon::{reconstruct_frame, FrameRecon, ReconParams};
use crate::stitch::{stitch_sequence, StitchParams, WorldRecon};
use crate::synth::{generate_sequence, split_dataset, GenConfig};
use rayon::prelude::*;
use std::fs;
use std::path::Path;

/// Generates a complete dataset under `out`: one directory per sequence
/// plus the manifest. Returns the manifest.
pub fn generate_dataset(config: &GenConfig, out: &Path) -> Result<Manifest> {
    config.validate()?;
    fs::create_dir_all(out)?;

    let entries: Vec<SequenceEntry> = (0..config.sequences as u64)
        .into_par_iter()
        .map(|index| -> Result<SequenceEntry> {
            let (scene, seq) = generate_sequence(config, index)?;
            let dir = out.join(sequence_dir_name(index));
            fs::create_dir_all(&dir)?;
            io::save_json(&dir.join("scene.json"), &scene)?;
            let poses: Vec<_> = seq.frames.iter().map(|f| f.pose).collect();
            io::write_poses(&dir.join("poses.csv"), &poses)?;
            let meta = SequenceMeta {
                scene_id: seq.scene_id,
                origins: seq
                    .frames
                    .iter()
                    .map(|f| f.top_frame.map(|fr| fr.origin))
                    .collect(),
                visible: seq.frames.iter().map(|f| f.visible.clone()).collect(),
            };
            io::save_json(&dir.join("meta.json"), &meta)?;
            for (t, frame) in seq.frames.iter().enumerate() {
                io::write_lay(&dir.join(frame_file_name(t as u32, View::Top, "lay")), &frame.top)?;
                io::write_lay(
                    &dir.join(frame_file_name(t as u32, View::Front, "lay")),
                    &frame.front,
                )?;
            }
            Ok(SequenceEntry {
                id: index,
                frames: seq.frames.len() as u32,
                dir: sequence_dir_name(index),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ids: Vec<u64> = entries.iter().map(|e| e.id).collect();
    let split = split_dataset(&ids, [0.9, 0.05, 0.05], config.seed)?;
    let manifest = Manifest {
        grid: config.grid.clone(),
        config_hash: io::config_hash(config),
        split,
        sequences: entries,
    };
    io::save_json(&out.join(io::MANIFEST_NAME), &manifest)?;
    Ok(manifest)
}

/// Applies the predictor simulator to every frame of a dataset, writing
/// degraded `.lay` plus `.plf` probabilities into a mirrored tree. Scene,
/// pose and meta files are copied through so downstream stages can consume
/// either tree.
pub fn degrade_dataset(input: &Path, noise: &NoiseConfig, out: &Path) -> Result<Manifest> {
    noise.validate()?;
    let manifest = io::load_manifest(input)?;
    fs::create_dir_all(out)?;

    manifest
        .sequences
        .par_iter()
        .map(|entry| -> Result<()> {
            let src = input.join(&entry.dir);
            let dst = out.join(&entry.dir);
            fs::create_dir_all(&dst)?;
            for name in ["scene.json", "poses.csv", "meta.json"] {
                let from = src.join(name);
                if from.is_file() {
                    fs::copy(&from, dst.join(name))?;
                }
            }
            // Per-sequence noise stream: frames re-seed by (sequence, frame,
            // view) so workers stay independent.
            let mut seq_noise = noise.clone();
            seq_noise.seed = crate::synth::derive_seed(noise.seed, entry.id, 0x0de9);
            for frame in 0..entry.frames {
                for view in [View::Top, View::Front] {
                    let mut truth = io::read_lay(&src.join(frame_file_name(frame, view, "lay")))?;
                    truth.frame_index = frame as usize;
                    let (labels, probs) = degrade(&truth, &seq_noise)?;
                    io::write_lay(&dst.join(frame_file_name(frame, view, "lay")), &labels)?;
                    io::write_plf(&dst.join(frame_file_name(frame, view, "plf")), &probs)?;
                }
            }
            Ok(())
        })
        .collect::<Result<Vec<_>>>()?;

    io::save_json(&out.join(io::MANIFEST_NAME), &manifest)?;
    Ok(manifest)
}

fn aligned_frame_paths(
    pred_root: &Path,
    truth_root: &Path,
    manifest: &Manifest,
) -> Result<Vec<(u64, u32, View)>> {
    let mut frames = Vec::new();
    let mut missing = Vec::new();
    for entry in &manifest.sequences {
        for frame in 0..entry.frames {
            for view in [View::Top, View::Front] {
                let name = frame_file_name(frame, view, "lay");
                let truth = truth_root.join(&entry.dir).join(&name);
                let pred = pred_root.join(&entry.dir).join(&name);
                if !truth.is_file() {
                    missing.push(format!("truth {}/{name}", entry.dir));
                } else if !pred.is_file() {
                    missing.push(format!("prediction {}/{name}", entry.dir));
                } else {
                    frames.push((entry.id, frame, view));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Alignment(format!(
            "{} missing frame(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    Ok(frames)
}

/// Evaluates a prediction tree against a truth tree (aligned via the truth
/// manifest) into the full metrics table. Predictions without `.plf`
/// probabilities fall back to one-hot probabilities of their hard labels.
pub fn evaluate_dataset(pred_root: &Path, truth_root: &Path) -> Result<MetricsTable> {
    let manifest = io::load_manifest(truth_root)?;
    let frames = aligned_frame_paths(pred_root, truth_root, &manifest)?;

    // Per-frame accumulators merge by summation, so a deterministic fold
    // over the (ordered) frame list keeps results independent of worker
    // scheduling; frames are read and scored in parallel.
    let partials: Vec<Result<MetricsAccumulator>> = frames
        .par_iter()
        .map(|&(seq, frame, view)| -> Result<MetricsAccumulator> {
            let dir_name = sequence_dir_name(seq);
            let name = frame_file_name(frame, view, "lay");
            let truth = io::read_lay(&truth_root.join(&dir_name).join(&name))?;
            let pred = io::read_lay(&pred_root.join(&dir_name).join(&name))?;
            let plf = pred_root
                .join(&dir_name)
                .join(frame_file_name(frame, view, "plf"));
            let probs = if plf.is_file() {
                io::read_plf(&plf)?
            } else {
                ProbabilityStack::one_hot(&pred)
            };
            let mut acc = MetricsAccumulator::new();
            acc.add_frame(&pred, &probs, &truth)?;
            Ok(acc)
        })
        .collect();

    let mut total = MetricsAccumulator::new();
    for partial in partials {
        total.merge(partial?);
    }
    total.finish()
}

/// Computes the loss report over a prediction tree: supervised loss of
/// every frame against the truth tree, plus short- and long-range
/// consistency of each prediction sequence. The adversarial terms need
/// discriminator outputs, which directories do not carry; they are zero
/// here and can be supplied separately through [`losses::l_adv`] /
/// [`losses::l_discr`].
pub fn dataset_losses(
    pred_root: &Path,
    truth_root: &Path,
    mode: PairwiseDivergence,
) -> Result<LossReport> {
    let manifest = io::load_manifest(truth_root)?;
    aligned_frame_paths(pred_root, truth_root, &manifest)?;

    let terms: Vec<Result<(f64, f64, f64)>> = manifest
        .sequences
        .par_iter()
        .map(|entry| -> Result<(f64, f64, f64)> {
            let mut sup = 0.0;
            let mut short = 0.0;
            let mut long = 0.0;
            for view in [View::Top, View::Front] {
                let mut seq_probs = Vec::with_capacity(entry.frames as usize);
                for frame in 0..entry.frames {
                    let name = frame_file_name(frame, view, "lay");
                    let truth = io::read_lay(&truth_root.join(&entry.dir).join(&name))?;
                    let pred_lay = pred_root.join(&entry.dir).join(&name);
                    let plf = pred_root
                        .join(&entry.dir)
                        .join(frame_file_name(frame, view, "plf"));
                    let probs = if plf.is_file() {
                        io::read_plf(&plf)?
                    } else {
                        ProbabilityStack::one_hot(&io::read_lay(&pred_lay)?)
                    };
                    sup += losses::l_sup(
                        std::slice::from_ref(&probs),
                        std::slice::from_ref(&truth),
                    )?;
                    seq_probs.push(probs);
                }
                if seq_probs.len() >= 2 {
                    short += losses::l_short(&seq_probs, mode)?;
                }
                long += losses::l_long(&seq_probs, mode)?;
            }
            Ok((sup, short, long))
        })
        .collect();

    let mut sup = 0.0;
    let mut short = 0.0;
    let mut long = 0.0;
    for term in terms {
        let (s, sh, lo) = term?;
        sup += s;
        short += sh;
        long += lo;
    }
    Ok(LossReport::new(sup, 0.0, short, long, 0.0))
}

/// Per-frame reconstructions for one sequence directory (reads the `.lay`
/// pair of every frame).
pub fn reconstruct_sequence_dir(
    seq_dir: &Path,
    frames: u32,
    spec: &crate::grid::GridSpec,
    params: &ReconParams,
) -> Result<Vec<FrameRecon>> {
    (0..frames)
        .map(|frame| {
            let mut top = io::read_lay(&seq_dir.join(frame_file_name(frame, View::Top, "lay")))?;
            let mut front =
                io::read_lay(&seq_dir.join(frame_file_name(frame, View::Front, "lay")))?;
            top.frame_index = frame as usize;
            front.frame_index = frame as usize;
            reconstruct_frame(&top, &front, spec, params)
        })
        .collect()
}

/// Stitches one sequence directory end to end: reconstruct every frame,
/// fold them into a world model (using the meta file's origin shifts as
/// dead-reckoned fallback when present), and record the anchor origin.
pub fn stitch_sequence_dir(
    seq_dir: &Path,
    frames: u32,
    spec: &crate::grid::GridSpec,
    recon_params: &ReconParams,
    stitch_params: &StitchParams,
) -> Result<WorldRecon> {
    let recons = reconstruct_sequence_dir(seq_dir, frames, spec, recon_params)?;
    let meta_path = seq_dir.join("meta.json");
    let meta: Option<SequenceMeta> = if meta_path.is_file() {
        Some(io::load_json(&meta_path)?)
    } else {
        None
    };
    let fallback = meta.as_ref().map(|m| m.origin_shifts());
    let mut world = stitch_sequence(&recons, spec, stitch_params, fallback.as_deref())?;
    world.anchor = meta.as_ref().and_then(|m| m.origins.first().copied().flatten());
    Ok(world)
}

/// Loads every hard-label stack of a dataset (truth trees), ordered by
/// (sequence, frame, view). Intended for small reference datasets.
pub fn load_all_stacks(root: &Path) -> Result<Vec<LayoutStack>> {
    let manifest = io::load_manifest(root)?;
    let mut stacks = Vec::new();
    for entry in &manifest.sequences {
        for frame in 0..entry.frames {
            for view in [View::Top, View::Front] {
                let mut s =
                    io::read_lay(&root.join(&entry.dir).join(frame_file_name(frame, view, "lay")))?;
                s.frame_index = frame as usize;
                stacks.push(s);
            }
        }
    }
    Ok(stacks)
}
