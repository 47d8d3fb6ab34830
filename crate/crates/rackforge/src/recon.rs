//! Per-frame 3D reconstruction: connected-component detections from layout
//! stacks, optimal top/front correspondence, and lifting matched pairs into
//! axis-aligned cuboids in the shelf frame.
//!
//! Coordinates are shelf-frame-relative meters: Ω spans
//! `[-extent/2, extent/2]` on every axis, X/Z come from the top view and Y
//! from the front view. A lifted interval covers the outer edges of its
//! cells, so sizes are exact to one cell.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::grid::{GridSpec, LayoutStack, View};
use crate::metrics::LayoutClass;
use serde::{Deserialize, Serialize};

/// Axis-aligned cell-space rectangle of one connected component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection2D {
    pub view: View,
    pub channel: u32,
    pub class: LayoutClass,
    pub min_col: u32,
    pub max_col: u32,
    pub min_row: u32,
    pub max_row: u32,
    /// Component size in cells (not the rectangle area).
    pub area: u32,
}

impl Detection2D {
    /// Number of columns covered, inclusive.
    pub fn col_cells(&self) -> u32 {
        self.max_col - self.min_col + 1
    }

    pub fn row_cells(&self) -> u32 {
        self.max_row - self.min_row + 1
    }

    /// Intersection-over-union of the column ranges of two detections.
    pub fn col_iou(&self, other: &Detection2D) -> f64 {
        let lo = self.min_col.max(other.min_col);
        let hi = self.max_col.min(other.max_col);
        if lo > hi {
            return 0.0;
        }
        let inter = (hi - lo + 1) as f64;
        let union = (self.col_cells() + other.col_cells()) as f64 - inter;
        inter / union
    }

    /// Whether the rectangle touches the grid border (the component may be
    /// clipped by Ω).
    pub fn touches_border(&self, resolution: u32) -> bool {
        self.min_col == 0
            || self.min_row == 0
            || self.max_col + 1 == resolution
            || self.max_row + 1 == resolution
    }
}

/// Extraction and matching thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconParams {
    /// Components smaller than this many cells are discarded.
    pub min_component_area: u32,
    /// Top/front pairs below this column-range IoU stay unmatched.
    pub min_x_iou: f64,
}

impl Default for ReconParams {
    fn default() -> Self {
        ReconParams {
            min_component_area: 4,
            min_x_iou: 0.25,
        }
    }
}

/// Connected components (4-connectivity) of every channel: occupied cells
/// yield box detections, occupied ∪ unoccupied cells yield rack-extent
/// detections. Blobs below the minimum area are discarded. Output order is
/// deterministic: channel, then class (rack first), then scan order.
pub fn extract_components(stack: &LayoutStack, params: &ReconParams) -> Vec<Detection2D> {
    let d = stack.resolution() as usize;
    let mut out = Vec::new();
    for ch in 0..stack.num_channels() {
        for class in [LayoutClass::Rack, LayoutClass::Box] {
            let mask: Vec<bool> = stack.channel(ch).iter().map(|&c| class.matches(c)).collect();
            label_components(&mask, d, |min_row, min_col, max_row, max_col, area| {
                if area >= params.min_component_area {
                    out.push(Detection2D {
                        view: stack.view,
                        channel: ch as u32,
                        class,
                        min_col,
                        max_col,
                        min_row,
                        max_row,
                        area,
                    });
                }
            });
        }
    }
    out
}

fn label_components(mask: &[bool], d: usize, mut emit: impl FnMut(u32, u32, u32, u32, u32)) {
    let mut seen = vec![false; mask.len()];
    let mut queue: Vec<usize> = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.clear();
        queue.push(start);
        let (mut min_r, mut min_c) = (start / d, start % d);
        let (mut max_r, mut max_c) = (min_r, min_c);
        let mut area = 0u32;
        while let Some(i) = queue.pop() {
            area += 1;
            let (r, c) = (i / d, i % d);
            min_r = min_r.min(r);
            max_r = max_r.max(r);
            min_c = min_c.min(c);
            max_c = max_c.max(c);
            let mut push = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push(j);
                }
            };
            if r > 0 {
                push(i - d);
            }
            if r + 1 < d {
                push(i + d);
            }
            if c > 0 {
                push(i - 1);
            }
            if c + 1 < d {
                push(i + 1);
            }
        }
        emit(min_r as u32, min_c as u32, max_r as u32, max_c as u32, area);
    }
}

/// Exact maximum-weight one-to-one assignment (Hungarian method with
/// potentials). `weights[i][j]` scores pairing row `i` with column `j`;
/// the result maps each row to its assigned column, `None` when there are
/// more rows than columns and the row stays unassigned.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    // Maximization via negated costs.
    if rows > cols {
        // Transpose so the algorithm's n <= m precondition holds.
        let cost: Vec<Vec<f64>> = (0..cols)
            .map(|j| (0..rows).map(|i| -weights[i][j]).collect())
            .collect();
        let col_to_row = hungarian_min(&cost);
        let mut out = vec![None; rows];
        for (j, i) in col_to_row.into_iter().enumerate() {
            out[i] = Some(j);
        }
        return out;
    }
    let cost: Vec<Vec<f64>> = weights
        .iter()
        .map(|row| row.iter().map(|w| -w).collect())
        .collect();
    hungarian_min(&cost).into_iter().map(Some).collect()
}

/// Minimum-cost assignment for an n×m cost matrix with n <= m; returns the
/// assigned column per row. O(n²m) potentials formulation.
fn hungarian_min(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    assert!(n <= m, "hungarian_min requires rows <= cols");
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1]; // row matched to column j (1-based; 0 = free)
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut ans = vec![0usize; n];
    for j in 1..=m {
        if p[j] > 0 {
            ans[p[j] - 1] = j - 1;
        }
    }
    ans
}

/// Optimal one-to-one correspondence between top and front detections of
/// one shelf level, maximizing column-range IoU; pairs under the IoU
/// threshold are dropped. Returns (top index, front index) pairs sorted by
/// top index.
pub fn match_top_front(
    top: &[Detection2D],
    front: &[Detection2D],
    params: &ReconParams,
) -> Vec<(usize, usize)> {
    if top.is_empty() || front.is_empty() {
        return Vec::new();
    }
    let weights: Vec<Vec<f64>> = top
        .iter()
        .map(|t| front.iter().map(|f| t.col_iou(f)).collect())
        .collect();
    let assignment = max_weight_assignment(&weights);
    let mut pairs: Vec<(usize, usize)> = assignment
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .filter(|&(i, j)| weights[i][j] >= params.min_x_iou)
        .collect();
    pairs.sort_unstable();
    pairs
}

/// One shelf surface lifted to 3D: X-Z extent plus elevation and the
/// vertical band above it, frame-relative meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShelfSlab {
    pub level: u32,
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Shelf surface elevation (band bottom).
    pub elevation: f64,
    pub band_height: f64,
    pub boundary: bool,
}

impl ShelfSlab {
    pub fn x_overlaps(&self, other: &ShelfSlab, slack: f64) -> bool {
        self.x_min - slack <= other.x_max && other.x_min - slack <= self.x_max
    }
}

/// One box lifted to 3D from a matched (top, front) detection pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub level: u32,
    /// Center in frame-relative meters.
    pub center: Vec3,
    pub size: Vec3,
    /// Provenance: indices of the source detections within the frame's
    /// detection list.
    pub top_detection: u32,
    pub front_detection: u32,
    /// The source rectangles touched the grid border, so the extent may be
    /// clipped by Ω.
    pub boundary: bool,
}

impl Box3D {
    pub fn volume(&self) -> f64 {
        self.size.x * self.size.y * self.size.z
    }

    pub fn diagonal(&self) -> f64 {
        self.size.norm()
    }
}

/// Frame-level 3D reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecon {
    pub frame_index: usize,
    pub slabs: Vec<ShelfSlab>,
    pub boxes: Vec<Box3D>,
    /// Detections that found no cross-view partner (reported, not fatal).
    pub unmatched: Vec<Detection2D>,
}

impl FrameRecon {
    pub fn empty(frame_index: usize) -> Self {
        FrameRecon {
            frame_index,
            slabs: Vec::new(),
            boxes: Vec::new(),
            unmatched: Vec::new(),
        }
    }
}

/// Cell-index interval → frame-relative meter interval (outer cell edges).
fn cols_to_meters(min_col: u32, max_col: u32, spec: &GridSpec) -> (f64, f64) {
    let half = spec.extent / 2.0;
    let mpc = spec.meters_per_cell();
    (
        -half + min_col as f64 * mpc,
        -half + (max_col + 1) as f64 * mpc,
    )
}

/// Front-view row interval → elevation interval (row 0 is the top row).
fn front_rows_to_meters(min_row: u32, max_row: u32, spec: &GridSpec) -> (f64, f64) {
    let half = spec.extent / 2.0;
    let mpc = spec.meters_per_cell();
    (
        half - (max_row + 1) as f64 * mpc,
        half - min_row as f64 * mpc,
    )
}

/// Lifts one matched (top, front) box pair: X from the intersection of the
/// two column ranges, Z from the top rows, Y from the front rows.
pub fn lift_box(
    top: &Detection2D,
    front: &Detection2D,
    top_index: u32,
    front_index: u32,
    spec: &GridSpec,
) -> Box3D {
    let c0 = top.min_col.max(front.min_col);
    let c1 = top.max_col.min(front.max_col);
    let (x0, x1) = cols_to_meters(c0, c1, spec);
    let (z0, z1) = cols_to_meters(top.min_row, top.max_row, spec); // same mapping on rows
    let (y0, y1) = front_rows_to_meters(front.min_row, front.max_row, spec);
    Box3D {
        level: top.channel,
        center: Vec3::new((x0 + x1) / 2.0, (y0 + y1) / 2.0, (z0 + z1) / 2.0),
        size: Vec3::new(x1 - x0, y1 - y0, z1 - z0),
        top_detection: top_index,
        front_detection: front_index,
        boundary: top.touches_border(spec.resolution) || front.touches_border(spec.resolution),
    }
}

fn lift_slab(top: &Detection2D, front: &Detection2D, spec: &GridSpec) -> ShelfSlab {
    let c0 = top.min_col.max(front.min_col);
    let c1 = top.max_col.min(front.max_col);
    let (x_min, x_max) = cols_to_meters(c0, c1, spec);
    let (z_min, z_max) = cols_to_meters(top.min_row, top.max_row, spec);
    let (elevation, band_top) = front_rows_to_meters(front.min_row, front.max_row, spec);
    ShelfSlab {
        level: top.channel,
        x_min,
        x_max,
        z_min,
        z_max,
        elevation,
        band_height: band_top - elevation,
        boundary: top.touches_border(spec.resolution) || front.touches_border(spec.resolution),
    }
}

/// Lifts matched detection pairs to 3D boxes. `pairs` indexes into the two
/// detection slices; an empty list yields an empty result.
pub fn lift_to_3d(
    pairs: &[(usize, usize)],
    top: &[Detection2D],
    front: &[Detection2D],
    spec: &GridSpec,
) -> Vec<Box3D> {
    pairs
        .iter()
        .map(|&(i, j)| lift_box(&top[i], &front[j], i as u32, j as u32, spec))
        .collect()
}

/// Full per-frame reconstruction: extract components from both stacks,
/// correspond them per shelf level and class, and lift boxes and shelf
/// slabs.
pub fn reconstruct_frame(
    top: &LayoutStack,
    front: &LayoutStack,
    spec: &GridSpec,
    params: &ReconParams,
) -> Result<FrameRecon> {
    if top.view != View::Top || front.view != View::Front {
        return Err(Error::Shape("expected one top and one front stack".into()));
    }
    if top.resolution() != front.resolution() || top.num_channels() != front.num_channels() {
        return Err(Error::Shape("top/front stacks differ in shape".into()));
    }
    let top_dets = extract_components(top, params);
    let front_dets = extract_components(front, params);

    let mut recon = FrameRecon::empty(top.frame_index);
    for ch in 0..top.num_channels() as u32 {
        for class in [LayoutClass::Rack, LayoutClass::Box] {
            let t_idx: Vec<usize> = (0..top_dets.len())
                .filter(|&i| top_dets[i].channel == ch && top_dets[i].class == class)
                .collect();
            let f_idx: Vec<usize> = (0..front_dets.len())
                .filter(|&i| front_dets[i].channel == ch && front_dets[i].class == class)
                .collect();
            let t_sel: Vec<Detection2D> = t_idx.iter().map(|&i| top_dets[i]).collect();
            let f_sel: Vec<Detection2D> = f_idx.iter().map(|&i| front_dets[i]).collect();
            let pairs = match_top_front(&t_sel, &f_sel, params);

            let mut t_used = vec![false; t_sel.len()];
            let mut f_used = vec![false; f_sel.len()];
            for &(i, j) in &pairs {
                t_used[i] = true;
                f_used[j] = true;
                match class {
                    LayoutClass::Box => recon.boxes.push(lift_box(
                        &t_sel[i],
                        &f_sel[j],
                        t_idx[i] as u32,
                        f_idx[j] as u32,
                        spec,
                    )),
                    LayoutClass::Rack => recon.slabs.push(lift_slab(&t_sel[i], &f_sel[j], spec)),
                }
            }
            recon
                .unmatched
                .extend(t_sel.iter().zip(&t_used).filter(|(_, u)| !**u).map(|(d, _)| *d));
            recon
                .unmatched
                .extend(f_sel.iter().zip(&f_used).filter(|(_, u)| !**u).map(|(d, _)| *d));
        }
    }
    Ok(recon)
}
