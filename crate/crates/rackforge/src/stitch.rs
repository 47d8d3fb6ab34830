//! Cross-frame stitching: robust shift estimation between consecutive
//! frame reconstructions and incremental merging into a global warehouse
//! model anchored at the first frame.
//!
//! The shift estimator pairs boxes by shelf level and size signature,
//! takes the component-wise median of the center displacements, filters
//! inliers against it and re-estimates from the inliers alone. Merging
//! transforms each new frame by the accumulated shift, fuses boxes that
//! land on an existing global box, grows boundary-clipped extents, and
//! appends everything unseen; the global box count never decreases.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::grid::GridSpec;
use crate::recon::{Box3D, FrameRecon, ShelfSlab};
use crate::scene::SceneGraph;
use serde::{Deserialize, Serialize};

/// Dominant traversal direction along the rack row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionDirection {
    PositiveX,
    NegativeX,
}

/// Matching and fusion thresholds, expressed in cells where they track the
/// grid resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StitchParams {
    /// Size-signature gate: per-axis relative difference for candidate
    /// pairs.
    pub size_tolerance: f64,
    /// Inlier gate around the median displacement, cells (max-norm).
    pub inlier_cells: f64,
    /// Center-distance gate for fusing a new box into a global one, cells.
    pub fuse_cells: f64,
}

impl Default for StitchParams {
    fn default() -> Self {
        StitchParams {
            size_tolerance: 0.2,
            inlier_cells: 1.5,
            // Re-quantization across shelf-frame jumps moves a recovered
            // center by up to one cell per axis, plus shift-estimate error;
            // 2.5 cells keeps true duplicates fused with margin while
            // staying far below any realistic box spacing.
            fuse_cells: 2.5,
        }
    }
}

/// Result of matching two consecutive frame reconstructions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMatch {
    /// Inlier correspondences: (index in previous frame, index in next).
    pub pairs: Vec<(usize, usize)>,
    /// Consensus content displacement from the previous frame to the next.
    pub shift: Vec3,
    pub direction: Option<MotionDirection>,
}

/// Global model built by folding frames into the first frame's shelf frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldRecon {
    pub slabs: Vec<ShelfSlab>,
    pub boxes: Vec<Box3D>,
    /// Estimated per-transition shifts (frame t → t+1).
    pub shifts: Vec<Vec3>,
    pub direction: Option<MotionDirection>,
    /// World position of the anchor (first frame) shelf-frame origin, when
    /// known from generation metadata.
    pub anchor: Option<Vec3>,
}

impl WorldRecon {
    /// Starts a world model from the first frame of a sequence.
    pub fn from_frame(frame: &FrameRecon) -> Self {
        WorldRecon {
            slabs: frame.slabs.clone(),
            boxes: frame.boxes.clone(),
            shifts: Vec::new(),
            direction: None,
            anchor: None,
        }
    }

    /// Sum of recorded shifts: maps the latest frame's coordinates into the
    /// anchor frame via `global = local - cumulative_shift`.
    pub fn cumulative_shift(&self) -> Vec3 {
        self.shifts
            .iter()
            .fold(Vec3::ZERO, |acc, s| acc + *s)
    }
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn component_median(displacements: &[Vec3]) -> Vec3 {
    let mut xs: Vec<f64> = displacements.iter().map(|d| d.x).collect();
    let mut ys: Vec<f64> = displacements.iter().map(|d| d.y).collect();
    let mut zs: Vec<f64> = displacements.iter().map(|d| d.z).collect();
    Vec3::new(median(&mut xs), median(&mut ys), median(&mut zs))
}

fn size_compatible(a: &Box3D, b: &Box3D, tol: f64) -> bool {
    let pairs = [
        (a.size.x, b.size.x),
        (a.size.y, b.size.y),
        (a.size.z, b.size.z),
    ];
    pairs
        .iter()
        .all(|&(sa, sb)| (sa - sb).abs() <= tol * sa.max(sb))
}

fn direction_of(shift: Vec3, mpc: f64) -> Option<MotionDirection> {
    // Established once the dominant (X) component clearly moves.
    if shift.x.abs() <= 0.25 * mpc {
        None
    } else if shift.x > 0.0 {
        Some(MotionDirection::PositiveX)
    } else {
        Some(MotionDirection::NegativeX)
    }
}

/// Estimates the content shift between two consecutive reconstructions.
///
/// Candidate pairs share a shelf level and a size signature within the
/// tolerance; the consensus shift is the component-wise median of the
/// inlier displacements (inliers lie within `inlier_cells` of the initial
/// median on every component). At least one inlier pair is required.
pub fn match_frames(
    prev: &FrameRecon,
    next: &FrameRecon,
    spec: &GridSpec,
    params: &StitchParams,
) -> Result<FrameMatch> {
    let mpc = spec.meters_per_cell();
    let mut candidates: Vec<(usize, usize, Vec3)> = Vec::new();
    for (i, a) in prev.boxes.iter().enumerate() {
        for (j, b) in next.boxes.iter().enumerate() {
            if a.level == b.level && size_compatible(a, b, params.size_tolerance) {
                candidates.push((i, j, b.center - a.center));
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoOverlap {
            prev: prev.frame_index,
            next: next.frame_index,
        });
    }
    let displacements: Vec<Vec3> = candidates.iter().map(|c| c.2).collect();
    let initial = component_median(&displacements);
    let gate = params.inlier_cells * mpc;
    let inliers: Vec<&(usize, usize, Vec3)> = candidates
        .iter()
        .filter(|(_, _, d)| (*d - initial).max_abs() <= gate)
        .collect();
    if inliers.is_empty() {
        return Err(Error::NoOverlap {
            prev: prev.frame_index,
            next: next.frame_index,
        });
    }
    let shift = component_median(&inliers.iter().map(|c| c.2).collect::<Vec<_>>());

    // One-to-one correspondences: nearest to the consensus first.
    let mut order: Vec<&(usize, usize, Vec3)> = inliers.clone();
    order.sort_by(|a, b| {
        (a.2 - shift)
            .max_abs()
            .total_cmp(&(b.2 - shift).max_abs())
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut prev_used = vec![false; prev.boxes.len()];
    let mut next_used = vec![false; next.boxes.len()];
    let mut pairs = Vec::new();
    for &&(i, j, _) in &order {
        if !prev_used[i] && !next_used[j] {
            prev_used[i] = true;
            next_used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    Ok(FrameMatch {
        pairs,
        shift,
        direction: direction_of(shift, mpc),
    })
}

fn fuse_extents(existing: &mut Box3D, incoming: &Box3D) {
    let lo = |c: f64, s: f64| c - s / 2.0;
    let hi = |c: f64, s: f64| c + s / 2.0;
    let (x0, x1) = (
        lo(existing.center.x, existing.size.x).min(lo(incoming.center.x, incoming.size.x)),
        hi(existing.center.x, existing.size.x).max(hi(incoming.center.x, incoming.size.x)),
    );
    let (y0, y1) = (
        lo(existing.center.y, existing.size.y).min(lo(incoming.center.y, incoming.size.y)),
        hi(existing.center.y, existing.size.y).max(hi(incoming.center.y, incoming.size.y)),
    );
    let (z0, z1) = (
        lo(existing.center.z, existing.size.z).min(lo(incoming.center.z, incoming.size.z)),
        hi(existing.center.z, existing.size.z).max(hi(incoming.center.z, incoming.size.z)),
    );
    existing.center = Vec3::new((x0 + x1) / 2.0, (y0 + y1) / 2.0, (z0 + z1) / 2.0);
    existing.size = Vec3::new(x1 - x0, y1 - y0, z1 - z0);
}

fn shifted_box(b: &Box3D, offset: Vec3) -> Box3D {
    Box3D {
        center: b.center + offset,
        ..*b
    }
}

fn shifted_slab(s: &ShelfSlab, offset: Vec3) -> ShelfSlab {
    ShelfSlab {
        x_min: s.x_min + offset.x,
        x_max: s.x_max + offset.x,
        z_min: s.z_min + offset.z,
        z_max: s.z_max + offset.z,
        elevation: s.elevation + offset.y,
        ..*s
    }
}

/// Overlap length of two centered intervals; negative when they are apart.
fn axis_overlap(c0: f64, s0: f64, c1: f64, s1: f64) -> f64 {
    (c0 + s0 / 2.0).min(c1 + s1 / 2.0) - (c0 - s0 / 2.0).max(c1 - s1 / 2.0)
}

fn boxes_overlap(a: &Box3D, b: &Box3D, slack: f64) -> bool {
    axis_overlap(a.center.x, a.size.x, b.center.x, b.size.x) > -slack
        && axis_overlap(a.center.y, a.size.y, b.center.y, b.size.y) > -slack
        && axis_overlap(a.center.z, a.size.z, b.center.z, b.size.z) > -slack
}

/// Merges the next frame into the world model given the estimated shift for
/// the transition. A new box fuses into an existing global box of the same
/// level when their centers fall within the fuse gate, or — for
/// boundary-clipped observations, whose centers shift with the clipping —
/// when the two extents overlap. Fused boundary extents grow to the union,
/// complete ones keep the larger extent; everything unmatched is appended.
pub fn merge_frame(
    world: &mut WorldRecon,
    frame: &FrameRecon,
    shift: Vec3,
    direction: Option<MotionDirection>,
    spec: &GridSpec,
    params: &StitchParams,
) {
    world.shifts.push(shift);
    if world.direction.is_none() {
        world.direction = direction;
    }
    let offset = -world.cumulative_shift();
    let gate = params.fuse_cells * spec.meters_per_cell();

    for b in &frame.boxes {
        let nb = shifted_box(b, offset);
        let best = world
            .boxes
            .iter()
            .enumerate()
            .filter(|(_, g)| g.level == nb.level)
            .map(|(i, g)| ((g.center - nb.center).norm(), i))
            .filter(|&(dist, i)| {
                dist <= gate
                    || ((world.boxes[i].boundary || nb.boundary)
                        && boxes_overlap(&world.boxes[i], &nb, 0.0))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match best {
            Some((_, i)) => {
                let g = &mut world.boxes[i];
                if g.boundary || nb.boundary {
                    fuse_extents(g, &nb);
                    g.boundary = g.boundary && nb.boundary;
                } else if nb.volume() > g.volume() {
                    let (top_det, front_det) = (g.top_detection, g.front_detection);
                    *g = nb;
                    g.top_detection = top_det;
                    g.front_detection = front_det;
                }
            }
            None => world.boxes.push(nb),
        }
    }

    let slab_slack = params.fuse_cells * spec.meters_per_cell();
    for s in &frame.slabs {
        let ns = shifted_slab(s, offset);
        let found = world
            .slabs
            .iter_mut()
            .find(|g| g.level == ns.level && g.x_overlaps(&ns, slab_slack));
        match found {
            Some(g) => {
                g.x_min = g.x_min.min(ns.x_min);
                g.x_max = g.x_max.max(ns.x_max);
                g.z_min = g.z_min.min(ns.z_min);
                g.z_max = g.z_max.max(ns.z_max);
                g.band_height = g.band_height.max(ns.band_height);
                g.boundary = g.boundary && ns.boundary;
            }
            None => world.slabs.push(ns),
        }
    }
}

/// Left-fold of [`match_frames`] + [`merge_frame`] over a sequence,
/// anchored at the first frame. `fallback_shifts`, when provided, supplies
/// a dead-reckoned shift per transition (index t maps frame t to t+1) used
/// whenever box matching finds no overlap — generation metadata records
/// exactly these shifts.
pub fn stitch_sequence(
    frames: &[FrameRecon],
    spec: &GridSpec,
    params: &StitchParams,
    fallback_shifts: Option<&[Vec3]>,
) -> Result<WorldRecon> {
    let Some(first) = frames.first() else {
        return Err(Error::validation("frames", "at least one frame required"));
    };
    let mut world = WorldRecon::from_frame(first);
    for t in 1..frames.len() {
        let (shift, direction, _pairs) = match match_frames(&frames[t - 1], &frames[t], spec, params)
        {
            Ok(m) => (m.shift, m.direction, m.pairs),
            Err(Error::NoOverlap { .. }) => {
                let fallback = fallback_shifts.and_then(|s| s.get(t - 1)).copied();
                match fallback {
                    Some(shift) => (
                        shift,
                        direction_of(shift, spec.meters_per_cell()),
                        Vec::new(),
                    ),
                    None => {
                        return Err(Error::NoOverlap {
                            prev: frames[t - 1].frame_index,
                            next: frames[t].frame_index,
                        })
                    }
                }
            }
            Err(e) => return Err(e),
        };
        merge_frame(&mut world, &frames[t], shift, direction, spec, params);
    }
    Ok(world)
}

/// Registers another stitched world into this one at a caller-supplied
/// offset (the displacement of `other`'s anchor frame relative to this
/// world's anchor frame). Used to merge separately stitched sequences into
/// one warehouse model.
pub fn merge_world(
    world: &mut WorldRecon,
    other: &WorldRecon,
    offset: Vec3,
    spec: &GridSpec,
    params: &StitchParams,
) {
    let shift = -(offset + world.cumulative_shift());
    let frame = FrameRecon {
        frame_index: 0,
        slabs: other.slabs.clone(),
        boxes: other.boxes.clone(),
        unmatched: Vec::new(),
    };
    merge_frame(world, &frame, shift, None, spec, params);
}

/// Box-level comparison of a stitched world against the ground-truth scene.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub scene_boxes: usize,
    pub world_boxes: usize,
    pub matched: usize,
    pub precision: f64,
    pub recall: f64,
    /// Mean Euclidean center error over matched pairs, meters.
    pub mean_center_error: f64,
    /// Mean per-axis absolute size error over matched pairs, meters.
    pub mean_size_error: f64,
}

/// Greedy nearest-center matching between world boxes (mapped into world
/// coordinates via `alignment`, the anchor frame origin) and ground-truth
/// boxes on channels the grid can represent. The match gate is half the
/// smaller box diagonal. Rotated ground-truth boxes compare through their
/// axis-aligned hulls, matching the axis-aligned reconstruction output.
/// An empty scene against an empty world reports precision = recall = 1.
pub fn compare_to_truth(
    world: &WorldRecon,
    scene: &SceneGraph,
    alignment: Vec3,
    spec: &GridSpec,
) -> CompareReport {
    let mut truth: Vec<(Vec3, Vec3)> = Vec::new();
    for rack in scene.foreground_racks() {
        for shelf in &rack.shelves {
            if shelf.level >= spec.num_shelves {
                continue;
            }
            for b in &shelf.boxes {
                truth.push(b.aligned_hull());
            }
        }
    }
    let predicted: Vec<(Vec3, Vec3)> = world
        .boxes
        .iter()
        .map(|b| (b.center + alignment, b.size))
        .collect();

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, (pc, ps)) in predicted.iter().enumerate() {
        for (j, (tc, ts)) in truth.iter().enumerate() {
            let dist = (*pc - *tc).norm();
            let gate = 0.5 * ps.norm().min(ts.norm());
            if dist <= gate {
                pairs.push((dist, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut p_used = vec![false; predicted.len()];
    let mut t_used = vec![false; truth.len()];
    let mut matched = 0usize;
    let mut center_err = 0.0;
    let mut size_err = 0.0;
    for (dist, i, j) in pairs {
        if p_used[i] || t_used[j] {
            continue;
        }
        p_used[i] = true;
        t_used[j] = true;
        matched += 1;
        center_err += dist;
        let ds = predicted[i].1 - truth[j].1;
        size_err += (ds.x.abs() + ds.y.abs() + ds.z.abs()) / 3.0;
    }
    let precision = if predicted.is_empty() {
        1.0
    } else {
        matched as f64 / predicted.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        matched as f64 / truth.len() as f64
    };
    CompareReport {
        scene_boxes: truth.len(),
        world_boxes: predicted.len(),
        matched,
        precision,
        recall,
        mean_center_error: if matched > 0 { center_err / matched as f64 } else { 0.0 },
        mean_size_error: if matched > 0 { size_err / matched as f64 } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{AisleInfo, SurfaceAttr};

    fn boxed(level: u32, center: [f64; 3], size: [f64; 3]) -> Box3D {
        Box3D {
            level,
            center: Vec3::new(center[0], center[1], center[2]),
            size: Vec3::new(size[0], size[1], size[2]),
            top_detection: 0,
            front_detection: 0,
            boundary: false,
        }
    }

    fn frame_with(index: usize, boxes: Vec<Box3D>) -> FrameRecon {
        FrameRecon {
            frame_index: index,
            slabs: vec![],
            boxes,
            unmatched: vec![],
        }
    }

    fn spec() -> GridSpec {
        GridSpec::new(256, 10.0, 3).unwrap()
    }

    #[test]
    fn translated_frame_recovers_exact_shift() {
        let a = frame_with(
            0,
            vec![
                boxed(0, [-1.0, 0.3, 0.1], [0.4, 0.4, 0.4]),
                boxed(0, [0.5, 0.3, -0.2], [0.3, 0.5, 0.4]),
                boxed(1, [1.2, 1.5, 0.0], [0.5, 0.3, 0.5]),
            ],
        );
        let shift = Vec3::new(0.5, 0.0, 0.0);
        let b = frame_with(
            1,
            a.boxes.iter().map(|x| shifted_box(x, shift)).collect(),
        );
        let m = match_frames(&a, &b, &spec(), &StitchParams::default()).unwrap();
        assert!((m.shift - shift).max_abs() < 1e-12);
        assert_eq!(m.direction, Some(MotionDirection::PositiveX));
        assert_eq!(m.pairs.len(), 3);
    }

    #[test]
    fn identical_frames_give_zero_shift() {
        let a = frame_with(0, vec![boxed(0, [0.0, 0.3, 0.0], [0.4, 0.4, 0.4])]);
        let m = match_frames(&a, &a, &spec(), &StitchParams::default()).unwrap();
        assert_eq!(m.shift, Vec3::ZERO);
        assert_eq!(m.direction, None);
    }

    #[test]
    fn newcomer_is_excluded_from_the_consensus() {
        let persistent = vec![
            boxed(0, [-1.0, 0.3, 0.1], [0.4, 0.4, 0.4]),
            boxed(0, [0.0, 0.3, -0.1], [0.35, 0.45, 0.4]),
            boxed(1, [0.8, 1.5, 0.2], [0.5, 0.3, 0.45]),
        ];
        let shift = Vec3::new(-0.4, 0.0, 0.0);
        let mut next: Vec<Box3D> = persistent.iter().map(|x| shifted_box(x, shift)).collect();
        // A box entering the view far away, same size class as one of the
        // persistent boxes.
        next.push(boxed(0, [3.0, 0.3, 0.1], [0.4, 0.4, 0.4]));
        let a = frame_with(0, persistent);
        let b = frame_with(1, next);
        let m = match_frames(&a, &b, &spec(), &StitchParams::default()).unwrap();
        assert!((m.shift - shift).max_abs() < 1e-12);
        assert_eq!(m.direction, Some(MotionDirection::NegativeX));
        assert_eq!(m.pairs.len(), 3, "newcomer must stay unmatched");
    }

    #[test]
    fn no_candidates_is_no_overlap() {
        let a = frame_with(0, vec![boxed(0, [0.0, 0.3, 0.0], [0.4, 0.4, 0.4])]);
        let b = frame_with(1, vec![boxed(2, [0.0, 3.0, 0.0], [0.4, 0.4, 0.4])]);
        assert!(matches!(
            match_frames(&a, &b, &spec(), &StitchParams::default()),
            Err(Error::NoOverlap { prev: 0, next: 1 })
        ));
    }

    #[test]
    fn merging_identical_frame_twice_is_idempotent() {
        let f = frame_with(
            0,
            vec![
                boxed(0, [0.0, 0.3, 0.0], [0.4, 0.4, 0.4]),
                boxed(1, [1.0, 1.5, 0.0], [0.3, 0.3, 0.3]),
            ],
        );
        let mut world = WorldRecon::from_frame(&f);
        let before = (world.slabs.clone(), world.boxes.clone());
        merge_frame(&mut world, &f, Vec3::ZERO, None, &spec(), &StitchParams::default());
        assert_eq!(world.boxes, before.1);
        assert_eq!(world.slabs, before.0);
    }

    #[test]
    fn boundary_boxes_grow_to_the_completed_extent() {
        // Clipped observation first, full observation later.
        let mut clipped = boxed(0, [0.1, 0.3, 0.0], [0.2, 0.4, 0.4]);
        clipped.boundary = true;
        let full = boxed(0, [0.0, 0.3, 0.0], [0.4, 0.4, 0.4]);
        let mut world = WorldRecon::from_frame(&frame_with(0, vec![clipped]));
        merge_frame(
            &mut world,
            &frame_with(1, vec![full]),
            Vec3::ZERO,
            None,
            &spec(),
            &StitchParams::default(),
        );
        assert_eq!(world.boxes.len(), 1);
        let g = world.boxes[0];
        assert!(!g.boundary);
        assert!((g.size.x - 0.4).abs() < 1e-12);
        assert!((g.center.x - 0.0).abs() < 1e-12);
    }

    #[test]
    fn new_rack_contents_extend_the_world() {
        let a = frame_with(0, vec![boxed(0, [0.0, 0.3, 0.0], [0.4, 0.4, 0.4])]);
        let b = frame_with(
            1,
            vec![
                boxed(0, [-0.5, 0.3, 0.0], [0.4, 0.4, 0.4]), // the same box, shifted
                boxed(0, [2.0, 0.3, 0.0], [0.3, 0.3, 0.3]),  // newcomer
            ],
        );
        let world = stitch_sequence(&[a, b], &spec(), &StitchParams::default(), None).unwrap();
        assert_eq!(world.boxes.len(), 2);
        assert_eq!(world.shifts.len(), 1);
        // Newcomer lands at its frame position minus the cumulative shift.
        assert!((world.boxes[1].center.x - 2.5).abs() < 1e-12);
    }

    #[test]
    fn single_frame_world_equals_the_frame() {
        let f = frame_with(0, vec![boxed(0, [0.3, 0.3, 0.0], [0.4, 0.4, 0.4])]);
        let world = stitch_sequence(
            std::slice::from_ref(&f),
            &spec(),
            &StitchParams::default(),
            None,
        )
        .unwrap();
        assert_eq!(world.boxes, f.boxes);
        assert!(world.shifts.is_empty());
    }

    #[test]
    fn fallback_shift_bridges_empty_frames() {
        let a = frame_with(0, vec![boxed(0, [0.0, 0.3, 0.0], [0.4, 0.4, 0.4])]);
        let empty = frame_with(1, vec![]);
        let c = frame_with(2, vec![boxed(0, [-0.6, 0.3, 0.0], [0.4, 0.4, 0.4])]);
        let fallback = [Vec3::new(-0.3, 0.0, 0.0), Vec3::new(-0.3, 0.0, 0.0)];
        let world = stitch_sequence(
            &[a.clone(), empty.clone(), c.clone()],
            &spec(),
            &StitchParams::default(),
            Some(&fallback),
        )
        .unwrap();
        // The box reappears where the dead-reckoned shifts predict: one
        // global box only.
        assert_eq!(world.boxes.len(), 1);
        assert!(matches!(
            stitch_sequence(&[a, empty, c], &spec(), &StitchParams::default(), None),
            Err(Error::NoOverlap { .. })
        ));
    }

    #[test]
    fn compare_conventions() {
        let scene = SceneGraph {
            racks: vec![],
            floor: SurfaceAttr::default(),
            wall: SurfaceAttr::default(),
            aisle: AisleInfo {
                row_z: 0.0,
                rack_spacing: vec![],
            },
        };
        let world = WorldRecon {
            slabs: vec![],
            boxes: vec![],
            shifts: vec![],
            direction: None,
            anchor: None,
        };
        let report = compare_to_truth(&world, &scene, Vec3::ZERO, &spec());
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);

        // Empty world against a non-empty scene: recall 0.
        let mut scene2 = scene.clone();
        scene2.racks.push(crate::scene::Rack {
            id: 0,
            base: Vec3::new(0.0, 0.0, 0.0),
            width: 2.0,
            depth: 1.0,
            shelf_heights: vec![0.3],
            shelves: vec![crate::scene::Shelf {
                rack_id: 0,
                level: 0,
                extent: crate::geom::Rect::new([-1.0, -0.5], [1.0, 0.5]),
                boxes: vec![crate::scene::BoxInstance {
                    id: 0,
                    center: Vec3::new(0.0, 0.5, 0.0),
                    size: Vec3::new(0.4, 0.4, 0.4),
                    yaw: 0.0,
                    stack_level: 0,
                    attr: SurfaceAttr::default(),
                    reflectivity: 0.0,
                }],
            }],
            attr: SurfaceAttr::default(),
            distractor: false,
        });
        let report2 = compare_to_truth(&world, &scene2, Vec3::ZERO, &spec());
        assert_eq!(report2.recall, 0.0);
        assert_eq!(report2.precision, 1.0);
    }
}
