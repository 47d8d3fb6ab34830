//! Procedural, seeded, domain-randomized warehouse synthesis: scene graphs,
//! camera trajectories, rendered ground-truth sequences and dataset splits.
//!
//! Everything is a pure function of (config, seed). Per-sequence seeds are
//! derived by hashing the master seed with the sequence index, so sequences
//! can be produced independently and in parallel while staying bit-stable
//! across runs and platforms.
//!
//! Randomized scene attributes follow the warehouse domain: box sizes,
//! yaw, colors/textures and reflectivity, placement density (dense /
//! moderate / sparse), vertical stacking, rack spacing and camera standoff.
//! Shelf structure (heights, depth, count) is sampled once per scene and
//! shared along the row, the way real warehouse aisles are built; this also
//! keeps the shelf-frame origin's Y and Z components constant while the
//! camera sweeps the row.

use crate::error::{Error, Result};
use crate::geom::{Rect, Vec3};
use crate::grid::{GridSpec, LayoutStack, View};
use crate::raster::{
    make_shelf_frame, rasterize_front_view, rasterize_top_view, visible_racks, ShelfFrame,
};
use crate::scene::{
    AisleInfo, BoxInstance, CameraPose, Rack, SceneGraph, Shelf, SurfaceAttr,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const SCENE_SALT: u64 = 0x5ce9_e01d;
const TRAJECTORY_SALT: u64 = 0x7e2a_9a7b;
const PLACEMENT_ATTEMPTS: usize = 1000;

/// Inclusive f64 range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeF {
    pub min: f64,
    pub max: f64,
}

impl RangeF {
    pub fn new(min: f64, max: f64) -> Self {
        RangeF { min, max }
    }

    pub fn fixed(v: f64) -> Self {
        RangeF { min: v, max: v }
    }

    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.min <= self.max) {
            return Err(Error::InvalidConfig(format!(
                "{name}: empty range [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Inclusive u32 range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeU {
    pub min: u32,
    pub max: u32,
}

impl RangeU {
    pub fn new(min: u32, max: u32) -> Self {
        RangeU { min, max }
    }

    pub fn fixed(v: u32) -> Self {
        RangeU { min: v, max: v }
    }

    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        if self.min == self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        if self.min > self.max {
            return Err(Error::InvalidConfig(format!(
                "{name}: empty range [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Box placement density mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Dense,
    Moderate,
    Sparse,
}

/// Sampling weights for the three density modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityWeights {
    pub dense: f64,
    pub moderate: f64,
    pub sparse: f64,
}

impl DensityWeights {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Density {
        let total = self.dense + self.moderate + self.sparse;
        let u = rng.random_range(0.0..total);
        if u < self.dense {
            Density::Dense
        } else if u < self.dense + self.moderate {
            Density::Moderate
        } else {
            Density::Sparse
        }
    }
}

/// Boxes-per-shelf count range for each density mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxCounts {
    pub dense: RangeU,
    pub moderate: RangeU,
    pub sparse: RangeU,
}

impl BoxCounts {
    fn for_mode(&self, mode: Density) -> RangeU {
        match mode {
            Density::Dense => self.dense,
            Density::Moderate => self.moderate,
            Density::Sparse => self.sparse,
        }
    }
}

/// Camera sampling and visibility parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    /// Distance from the rack-row line, sampled once per sequence.
    pub standoff: RangeF,
    /// Camera elevation, sampled once per sequence.
    pub height: RangeF,
    /// Horizontal field of view, radians.
    pub fov: f64,
    /// Visibility range for the frustum test, meters.
    pub max_range: f64,
    /// Upper bound on consecutive pose displacement, meters.
    pub max_step: f64,
    /// How far the path extends beyond the rack row on each side.
    pub lead_in: f64,
}

/// Full generator configuration. `validate` enforces every range and bound;
/// all sampling happens through seeded, portable RNG streams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub grid: GridSpec,
    pub rack_count: RangeU,
    /// Shelves per rack, sampled once per scene; must stay within the grid's
    /// channel budget.
    pub shelves_per_rack: RangeU,
    pub density_weights: DensityWeights,
    pub boxes_per_shelf: BoxCounts,
    pub box_width: RangeF,
    pub box_depth: RangeF,
    pub box_height: RangeF,
    /// Box rotation about the vertical axis, radians.
    pub box_yaw: RangeF,
    /// Vertical stacking: how many boxes may sit on top of each other.
    pub max_stack: RangeU,
    pub rack_width: RangeF,
    pub rack_depth: RangeF,
    pub rack_spacing: RangeF,
    pub first_shelf_height: RangeF,
    /// Vertical gap between consecutive shelf surfaces.
    pub shelf_gap: RangeF,
    /// Minimum horizontal clearance between box footprints.
    pub min_box_gap: f64,
    /// Placement inset from the shelf edges.
    pub shelf_margin: f64,
    pub camera: CameraConfig,
    pub frames_per_sequence: u32,
    pub sequences: u32,
    /// Background clutter: extra racks beyond visibility range.
    pub distractors: bool,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            grid: GridSpec::default(),
            rack_count: RangeU::new(2, 4),
            shelves_per_rack: RangeU::new(2, 3),
            density_weights: DensityWeights {
                dense: 1.0,
                moderate: 1.0,
                sparse: 1.0,
            },
            boxes_per_shelf: BoxCounts {
                dense: RangeU::new(5, 8),
                moderate: RangeU::new(3, 4),
                sparse: RangeU::new(0, 2),
            },
            box_width: RangeF::new(0.25, 0.55),
            box_depth: RangeF::new(0.25, 0.55),
            box_height: RangeF::new(0.25, 0.5),
            box_yaw: RangeF::new(-0.35, 0.35),
            max_stack: RangeU::new(1, 2),
            rack_width: RangeF::new(1.6, 2.4),
            rack_depth: RangeF::new(0.9, 1.2),
            rack_spacing: RangeF::new(0.35, 0.8),
            first_shelf_height: RangeF::new(0.2, 0.5),
            shelf_gap: RangeF::new(0.9, 1.4),
            min_box_gap: 0.08,
            shelf_margin: 0.05,
            camera: CameraConfig {
                standoff: RangeF::new(1.5, 3.5),
                height: RangeF::new(1.2, 1.8),
                fov: std::f64::consts::FRAC_PI_2,
                max_range: 8.0,
                max_step: 0.6,
                lead_in: 0.5,
            },
            frames_per_sequence: 20,
            sequences: 40,
            distractors: true,
            seed: 0,
        }
    }
}

impl GenConfig {
    /// Tiny dataset for fast end-to-end evaluation runs.
    pub fn reference_mini() -> Self {
        let mut cfg = GenConfig::default();
        cfg.grid = GridSpec {
            resolution: 128,
            extent: 10.0,
            num_shelves: 3,
            top_clearance: 2.0,
        };
        cfg.sequences = 4;
        cfg.frames_per_sequence = 6;
        cfg
    }

    /// Noise-free reconstruction reference: single-layer placement, one box
    /// row in depth, and gaps wide enough that connected components stay
    /// separable at D = 256.
    pub fn reference_recon() -> Self {
        let mut cfg = GenConfig::default();
        cfg.rack_count = RangeU::fixed(4);
        cfg.max_stack = RangeU::fixed(1);
        cfg.box_width = RangeF::new(0.3, 0.5);
        cfg.box_depth = RangeF::new(0.5, 0.62);
        cfg.box_height = RangeF::new(0.3, 0.5);
        cfg.rack_depth = RangeF::new(0.9, 1.0);
        cfg.min_box_gap = 0.15;
        cfg.boxes_per_shelf = BoxCounts {
            dense: RangeU::new(3, 4),
            moderate: RangeU::new(2, 3),
            sparse: RangeU::new(1, 2),
        };
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.rack_count.check("rack_count")?;
        self.shelves_per_rack.check("shelves_per_rack")?;
        self.box_width.check("box_width")?;
        self.box_depth.check("box_depth")?;
        self.box_height.check("box_height")?;
        self.box_yaw.check("box_yaw")?;
        self.max_stack.check("max_stack")?;
        self.rack_width.check("rack_width")?;
        self.rack_depth.check("rack_depth")?;
        self.rack_spacing.check("rack_spacing")?;
        self.first_shelf_height.check("first_shelf_height")?;
        self.shelf_gap.check("shelf_gap")?;
        self.camera.standoff.check("camera.standoff")?;
        self.camera.height.check("camera.height")?;
        if self.rack_count.min < 1 {
            return Err(Error::InvalidConfig("rack_count must be >= 1".into()));
        }
        if self.shelves_per_rack.min < 1 {
            return Err(Error::InvalidConfig("shelves_per_rack must be >= 1".into()));
        }
        if self.shelves_per_rack.max > self.grid.num_shelves {
            return Err(Error::InvalidConfig(format!(
                "shelves_per_rack.max {} exceeds the grid's {} channels",
                self.shelves_per_rack.max, self.grid.num_shelves
            )));
        }
        if self.max_stack.min < 1 {
            return Err(Error::InvalidConfig("max_stack must be >= 1".into()));
        }
        if self.frames_per_sequence < 2 {
            return Err(Error::InvalidConfig(
                "frames_per_sequence must be >= 2".into(),
            ));
        }
        let w = [
            self.density_weights.dense,
            self.density_weights.moderate,
            self.density_weights.sparse,
        ];
        if w.iter().any(|v| *v < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidConfig(
                "density weights must be non-negative with a positive sum".into(),
            ));
        }
        if !(self.camera.fov > 0.0 && self.camera.fov < std::f64::consts::PI) {
            return Err(Error::InvalidConfig("camera.fov must lie in (0, pi)".into()));
        }
        if !(self.camera.max_range > 0.0) {
            return Err(Error::InvalidConfig("camera.max_range must be positive".into()));
        }
        if !(self.camera.max_step > 0.0) {
            return Err(Error::InvalidConfig("camera.max_step must be positive".into()));
        }
        if self.min_box_gap < 0.0 || self.shelf_margin < 0.0 {
            return Err(Error::InvalidConfig(
                "min_box_gap and shelf_margin must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Stable seed derivation: `splitmix64` chain over (master, index, salt).
pub fn derive_seed(master: u64, index: u64, salt: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(splitmix64(salt))))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generates one warehouse scene. Deterministic in (config, seed); all
/// scene-graph invariants hold on success.
pub fn generate_warehouse(config: &GenConfig, seed: u64) -> Result<SceneGraph> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, SCENE_SALT));

    // Row-level structure shared by every rack in the scene.
    let n_racks = config.rack_count.sample(&mut rng);
    let shelf_count = config.shelves_per_rack.sample(&mut rng);
    let rack_depth = config.rack_depth.sample(&mut rng);
    let mut shelf_heights = Vec::with_capacity(shelf_count as usize);
    let mut h = config.first_shelf_height.sample(&mut rng);
    for _ in 0..shelf_count {
        shelf_heights.push(h);
        h += config.shelf_gap.sample(&mut rng);
    }
    let density = config.density_weights.sample(&mut rng);

    let mut racks = Vec::new();
    let mut spacing = Vec::new();
    let mut next_box_id = 0u32;
    let mut cursor = 0.0f64;
    for rack_idx in 0..n_racks {
        if rack_idx > 0 {
            let gap = config.rack_spacing.sample(&mut rng);
            spacing.push(gap);
            cursor += gap;
        }
        let rack = build_rack(
            &mut rng,
            config,
            rack_idx,
            cursor,
            0.0,
            rack_depth,
            &shelf_heights,
            density,
            false,
            &mut next_box_id,
        )?;
        cursor += rack.width;
        racks.push(rack);
    }

    if config.distractors {
        // Background clutter: a couple of racks far behind the aisle, always
        // beyond the visibility range of any camera pose.
        let distractor_z = config.camera.max_range + config.camera.standoff.max + 1.0;
        let count = rng.random_range(1..=2u32);
        let mut dz_cursor = rng.random_range(-1.0..1.0);
        for k in 0..count {
            let rack = build_rack(
                &mut rng,
                config,
                n_racks + k,
                dz_cursor,
                distractor_z,
                rack_depth,
                &shelf_heights,
                density,
                true,
                &mut next_box_id,
            )?;
            dz_cursor += rack.width + config.rack_spacing.sample(&mut rng);
            racks.push(rack);
        }
    }

    let scene = SceneGraph {
        racks,
        floor: random_attr(&mut rng),
        wall: random_attr(&mut rng),
        aisle: AisleInfo {
            row_z: 0.0,
            rack_spacing: spacing,
        },
    };
    debug_assert!(scene.validate().is_ok(), "generated scene must validate");
    Ok(scene)
}

#[allow(clippy::too_many_arguments)]
fn build_rack(
    rng: &mut ChaCha8Rng,
    config: &GenConfig,
    id: u32,
    left_x: f64,
    row_z: f64,
    depth: f64,
    shelf_heights: &[f64],
    density: Density,
    distractor: bool,
    next_box_id: &mut u32,
) -> Result<Rack> {
    let width = config.rack_width.sample(rng);
    let cx = left_x + width / 2.0;
    let extent = Rect::new(
        [cx - width / 2.0, row_z - depth / 2.0],
        [cx + width / 2.0, row_z + depth / 2.0],
    );
    let mut shelves = Vec::with_capacity(shelf_heights.len());
    for (level, &surface) in shelf_heights.iter().enumerate() {
        let band_top = shelf_heights
            .get(level + 1)
            .copied()
            .unwrap_or(surface + config.grid.top_clearance);
        let boxes = place_boxes(
            rng,
            config,
            &extent,
            surface,
            band_top - surface,
            density,
            next_box_id,
        )?;
        shelves.push(Shelf {
            rack_id: id,
            level: level as u32,
            extent,
            boxes,
        });
    }
    Ok(Rack {
        id,
        base: Vec3::new(cx, 0.0, row_z),
        width,
        depth,
        shelf_heights: shelf_heights.to_vec(),
        shelves,
        attr: random_attr(rng),
        distractor,
    })
}

/// Grid-jittered rejection sampling: the shelf is divided into one X slot
/// per requested box, each box is jittered inside its slot, and placements
/// that violate the minimum gap are resampled up to a bounded attempt count.
/// Exhausting attempts on a feasible shelf just leaves the slot empty;
/// a box that cannot fit on the shelf at all is a hard error.
fn place_boxes(
    rng: &mut ChaCha8Rng,
    config: &GenConfig,
    shelf: &Rect,
    surface: f64,
    band_height: f64,
    density: Density,
    next_box_id: &mut u32,
) -> Result<Vec<BoxInstance>> {
    let count = config.boxes_per_shelf.for_mode(density).sample(rng);
    let mut boxes: Vec<BoxInstance> = Vec::new();
    if count == 0 {
        return Ok(boxes);
    }
    let usable = Rect::new(
        [shelf.min[0] + config.shelf_margin, shelf.min[1] + config.shelf_margin],
        [shelf.max[0] - config.shelf_margin, shelf.max[1] - config.shelf_margin],
    );
    let usable_w = usable.max[0] - usable.min[0];
    let usable_d = usable.max[1] - usable.min[1];
    // Worst-case footprint of the smallest box over the allowed yaw range.
    let yaw_extreme = config.box_yaw.min.abs().max(config.box_yaw.max.abs());
    let min_span_w = rot_span(config.box_width.min, config.box_depth.min, yaw_extreme).0;
    let min_span_d = rot_span(config.box_width.min, config.box_depth.min, yaw_extreme).1;
    if min_span_w > usable_w || min_span_d > usable_d || config.box_height.min > band_height {
        return Err(Error::GenerationInfeasible(format!(
            "smallest box ({:.2} x {:.2} x {:.2}) cannot fit the shelf ({usable_w:.2} x {usable_d:.2}, band {band_height:.2})",
            config.box_width.min, config.box_depth.min, config.box_height.min
        )));
    }

    let slot_w = usable_w / count as f64;
    for slot in 0..count {
        let slot_min = usable.min[0] + slot as f64 * slot_w;
        let slot_max = slot_min + slot_w;
        let mut base: Option<BoxInstance> = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let w = config.box_width.sample(rng);
            let d = config.box_depth.sample(rng);
            let hgt = config.box_height.sample(rng);
            let yaw = config.box_yaw.sample(rng);
            if hgt > band_height {
                continue;
            }
            let (span_w, span_d) = rot_span(w, d, yaw);
            let (half_w, half_d) = (span_w / 2.0, span_d / 2.0);
            if slot_min + half_w > slot_max - half_w || usable.min[1] + half_d > usable.max[1] - half_d {
                continue;
            }
            let x = rng.random_range(slot_min + half_w..=slot_max - half_w);
            let z = rng.random_range(usable.min[1] + half_d..=usable.max[1] - half_d);
            let candidate = BoxInstance {
                id: *next_box_id,
                center: Vec3::new(x, surface + hgt / 2.0, z),
                size: Vec3::new(w, hgt, d),
                yaw,
                stack_level: 0,
                attr: random_attr(rng),
                reflectivity: rng.random_range(0.0..1.0),
            };
            let fp = candidate.footprint();
            if boxes
                .iter()
                .filter(|b| b.stack_level == 0)
                .all(|b| b.footprint().separated_by(&fp, config.min_box_gap))
            {
                base = Some(candidate);
                break;
            }
        }
        let Some(base) = base else { continue };
        *next_box_id += 1;
        let base_top = base.top();
        let base_id = boxes.len();
        boxes.push(base);

        // Vertical stacking: shrunk copies centered on the supporter, same
        // yaw, kept inside both the support footprint and the band.
        let stack_target = config.max_stack.sample(rng);
        let mut support_idx = base_id;
        let mut top = base_top;
        for level in 1..stack_target {
            let support = boxes[support_idx].clone();
            let sx = rng.random_range(0.55..0.9);
            let sz = rng.random_range(0.55..0.9);
            let w = support.size.x * sx;
            let d = support.size.z * sz;
            let hgt = config.box_height.sample(rng);
            if top + hgt > surface + band_height {
                break;
            }
            let jx = (support.size.x - w) / 2.0;
            let jz = (support.size.z - d) / 2.0;
            let (lx, lz) = (
                rng.random_range(-jx * 0.8..=jx * 0.8),
                rng.random_range(-jz * 0.8..=jz * 0.8),
            );
            let (s, c) = support.yaw.sin_cos();
            let center = Vec3::new(
                support.center.x + lx * c - lz * s,
                top + hgt / 2.0,
                support.center.z + lx * s + lz * c,
            );
            let stacked = BoxInstance {
                id: *next_box_id,
                center,
                size: Vec3::new(w, hgt, d),
                yaw: support.yaw,
                stack_level: level,
                attr: random_attr(rng),
                reflectivity: rng.random_range(0.0..1.0),
            };
            *next_box_id += 1;
            top += hgt;
            support_idx = boxes.len();
            boxes.push(stacked);
        }
    }
    Ok(boxes)
}

fn rot_span(w: f64, d: f64, yaw: f64) -> (f64, f64) {
    let (s, c) = (yaw.sin().abs(), yaw.cos().abs());
    (w * c + d * s, w * s + d * c)
}

fn random_attr(rng: &mut ChaCha8Rng) -> SurfaceAttr {
    SurfaceAttr {
        texture_id: rng.random_range(0..64),
        color_id: rng.random_range(0..64),
    }
}

/// Mean fill fraction over foreground shelves: base-level box footprint
/// area divided by shelf area.
pub fn mean_fill_fraction(scene: &SceneGraph) -> f64 {
    let mut total = 0.0;
    let mut shelves = 0usize;
    for rack in scene.foreground_racks() {
        for shelf in &rack.shelves {
            let area: f64 = shelf
                .boxes
                .iter()
                .filter(|b| b.stack_level == 0)
                .map(|b| b.footprint().area())
                .sum();
            let size = shelf.extent.size();
            total += area / (size[0] * size[1]);
            shelves += 1;
        }
    }
    if shelves == 0 {
        0.0
    } else {
        total / shelves as f64
    }
}

/// Generates the camera path for one sequence: a straight sweep parallel to
/// the rack row at a per-sequence standoff and height, yaw fixed toward the
/// racks, consecutive displacement bounded by the configured max step.
pub fn generate_trajectory(
    config: &GenConfig,
    scene: &SceneGraph,
    seed: u64,
) -> Result<Vec<CameraPose>> {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    for rack in scene.foreground_racks() {
        min_x = min_x.min(rack.base.x - rack.width / 2.0);
        max_x = max_x.max(rack.base.x + rack.width / 2.0);
    }
    if !min_x.is_finite() {
        return Err(Error::validation("scene", "needs at least one rack"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, TRAJECTORY_SALT));
    let standoff = config.camera.standoff.sample(&mut rng);
    let height = config.camera.height.sample(&mut rng);

    let n = config.frames_per_sequence.max(2) as usize;
    let span_start = min_x - config.camera.lead_in;
    let span_end = max_x + config.camera.lead_in;
    let raw_step = (span_end - span_start) / (n as f64 - 1.0);
    let step = raw_step.min(config.camera.max_step);
    let center = (span_start + span_end) / 2.0;
    let total = step * (n as f64 - 1.0);
    let x0 = center - total / 2.0;

    let z = scene.aisle.row_z - standoff;
    Ok((0..n)
        .map(|k| CameraPose {
            position: Vec3::new(x0 + k as f64 * step, height, z),
            yaw: 0.0,
        })
        .collect())
}

/// One rendered frame of a sequence. Frames with an empty visible set carry
/// all-background stacks and no shelf frame.
#[derive(Clone, Debug)]
pub struct Frame {
    pub pose: CameraPose,
    pub visible: Vec<u32>,
    pub top: LayoutStack,
    pub front: LayoutStack,
    pub top_frame: Option<ShelfFrame>,
    pub front_frame: Option<ShelfFrame>,
}

impl Frame {
    pub fn has_visible(&self) -> bool {
        !self.visible.is_empty()
    }
}

/// One rendered sequence: ordered frames along one camera path through one
/// scene.
#[derive(Clone, Debug)]
pub struct Sequence {
    pub scene_id: u64,
    pub frames: Vec<Frame>,
}

/// Renders ground-truth stacks for every pose of a trajectory.
pub fn render_sequence(
    scene: &SceneGraph,
    trajectory: &[CameraPose],
    spec: &GridSpec,
    fov: f64,
    max_range: f64,
) -> Sequence {
    let frames = trajectory
        .iter()
        .enumerate()
        .map(|(t, pose)| {
            let visible = visible_racks(scene, pose, fov, max_range);
            let (top, front, top_frame, front_frame) = if visible.is_empty() {
                (
                    LayoutStack::background(View::Top, spec.resolution, spec.num_shelves),
                    LayoutStack::background(View::Front, spec.resolution, spec.num_shelves),
                    None,
                    None,
                )
            } else {
                let tf = make_shelf_frame(scene, &visible, View::Top, spec)
                    .expect("non-empty visible set");
                let ff = make_shelf_frame(scene, &visible, View::Front, spec)
                    .expect("non-empty visible set");
                (
                    rasterize_top_view(scene, &tf, spec, &visible),
                    rasterize_front_view(scene, &ff, spec, &visible),
                    Some(tf),
                    Some(ff),
                )
            };
            let mut top = top;
            let mut front = front;
            top.frame_index = t;
            front.frame_index = t;
            Frame {
                pose: *pose,
                visible,
                top,
                front,
                top_frame,
                front_frame,
            }
        })
        .collect();
    Sequence { scene_id: 0, frames }
}

/// Generates scene + trajectory + rendered sequence for one sequence index
/// of a dataset, using seeds derived from the config's master seed.
pub fn generate_sequence(config: &GenConfig, index: u64) -> Result<(SceneGraph, Sequence)> {
    let scene_seed = derive_seed(config.seed, index, SCENE_SALT);
    let traj_seed = derive_seed(config.seed, index, TRAJECTORY_SALT);
    let scene = generate_warehouse(config, scene_seed)?;
    let trajectory = generate_trajectory(config, &scene, traj_seed)?;
    let mut seq = render_sequence(
        &scene,
        &trajectory,
        &config.grid,
        config.camera.fov,
        config.camera.max_range,
    );
    seq.scene_id = index;
    Ok((scene, seq))
}

/// Train/test/validation assignment over sequence ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<u64>,
    pub test: Vec<u64>,
    pub validation: Vec<u64>,
}

/// Splits sequence ids into train/test/validation by a seeded shuffle.
/// Ratios are absolute counts when they sum to the sequence count, or
/// fractions when they sum to 1.
pub fn split_dataset(sequence_ids: &[u64], ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    let n = sequence_ids.len();
    let sum: f64 = ratios.iter().sum();
    let counts: [usize; 3] = if (sum - 1.0).abs() < 1e-9 {
        // Largest-remainder apportionment so the three parts cover exactly.
        let raw: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
        let mut counts: Vec<usize> = raw.iter().map(|v| v.floor() as usize).collect();
        let mut rest = n - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())));
        for &i in &order {
            if rest == 0 {
                break;
            }
            counts[i] += 1;
            rest -= 1;
        }
        [counts[0], counts[1], counts[2]]
    } else if (sum - n as f64).abs() < 1e-9
        && ratios.iter().all(|r| (r - r.round()).abs() < 1e-9 && *r >= 0.0)
    {
        [
            ratios[0].round() as usize,
            ratios[1].round() as usize,
            ratios[2].round() as usize,
        ]
    } else {
        return Err(Error::InvalidSplit(format!(
            "ratios {ratios:?} sum to {sum}, expected 1.0 or the sequence count {n}"
        )));
    };

    let mut ids = sequence_ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 0x5911));
    ids.shuffle(&mut rng);
    let train = ids[..counts[0]].to_vec();
    let test = ids[counts[0]..counts[0] + counts[1]].to_vec();
    let validation = ids[counts[0] + counts[1]..].to_vec();
    Ok(DatasetSplit {
        seed,
        train,
        test,
        validation,
    })
}
