//! rackforge: procedural warehouse scenes with shelf-centric layout ground
//! truth, a predictor simulator, layout metrics and loss kernels, and
//! multi-view 3D reconstruction with cross-frame stitching.
//!
//! The library is the primary interface; each major capability has a
//! runnable example (`cargo run --example <name>`):
//!
//! - `generate_dataset` — seeded domain-randomized dataset on disk
//! - `rasterize_layouts` — a hand-built scene rasterized and printed
//! - `simulate_predictions` — degrading ground truth into predictions
//! - `loss_kernels` — the loss terms and a gradient self-check
//! - `evaluate_metrics` — the mIoU / mAP table
//! - `reconstruct_warehouse` — generate → reconstruct → stitch → compare
//! - `export_obj` — writing a stitched world as a Wavefront OBJ
//!
//! The thin `forge` binary exposes the same pipeline as subcommands:
//! `gen`, `degrade`, `eval`, `loss`, `recon`, `stitch`, `export-obj`,
//! `compare`, `selftest`.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod geom;
pub mod grid;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod noise;
pub mod obj;
pub mod raster;
pub mod recon;
pub mod scene;
pub mod stitch;
pub mod synth;

pub use error::{Error, Result};
pub use geom::{Rect, Vec3};
pub use grid::{CellClass, GridSpec, LayoutStack, ProbabilityStack, View};
pub use metrics::{average_precision, miou, MetricsTable};
pub use noise::{degrade, NoiseConfig};
pub use raster::{
    make_shelf_frame, rasterize_front_view, rasterize_top_view, visible_racks, ShelfFrame,
};
pub use recon::{extract_components, lift_to_3d, match_top_front, reconstruct_frame, FrameRecon};
pub use scene::{BoxInstance, CameraPose, Rack, SceneGraph, Shelf};
pub use stitch::{compare_to_truth, match_frames, merge_frame, stitch_sequence, WorldRecon};
pub use synth::{
    generate_sequence, generate_trajectory, generate_warehouse, render_sequence, split_dataset,
    GenConfig, Sequence,
};
