//! Shelf-centric frames and exact rasterization of ground-truth layouts.
//!
//! Grid convention. Both views share the column axis: column `c` has its
//! center at `omega.min_x + (c + 0.5) * meters_per_cell`, increasing to the
//! right. Top-view row `r` maps to depth `omega.min_z + (r + 0.5) * mpc`
//! (row 0 nearest the camera side). Front-view row `r` maps to elevation
//! `omega.max_y - (r + 0.5) * mpc` (row 0 at the top of the image, matching
//! the downward Y of the layout frame).
//!
//! A cell belongs to a shape when its center lies inside the shape's
//! footprint (closed boundaries). Rasterization is amodal: occlusion is
//! never simulated, every visible rack contributes its full extent.

use crate::error::{Error, Result};
use crate::geom::{point_in_convex, Rect, Vec3};
use crate::grid::{CellClass, GridSpec, LayoutStack, View};
use crate::scene::{CameraPose, SceneGraph};
use std::ops::RangeInclusive;

/// Shelf-centric reference frame for one view: anchored at the center of
/// the visible shelves, axes parallel to the world axes (X right, Y down in
/// grid rows, Z into the scene).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShelfFrame {
    pub view: View,
    /// Center of the union bounding volume of all visible shelf surfaces.
    pub origin: Vec3,
    /// The Ω square in world coordinates: (x, z) for the top view and
    /// (x, elevation) for the front view.
    pub omega: Rect,
}

/// One grid axis: index `i` has its cell center at
/// `origin + (i + 0.5) * step`. A negative step flips the axis (used for
/// front-view rows, which run top-down).
#[derive(Clone, Copy, Debug)]
pub struct GridAxis {
    pub origin: f64,
    pub step: f64,
    pub len: u32,
}

impl GridAxis {
    #[inline]
    pub fn center(&self, i: u32) -> f64 {
        self.origin + (i as f64 + 0.5) * self.step
    }

    /// Indices whose centers might fall inside the closed interval
    /// `[lo, hi]`, with one cell of slack on each side; callers still test
    /// every candidate center so boundary handling stays exact.
    pub fn candidates(&self, lo: f64, hi: f64) -> RangeInclusive<u32> {
        const EMPTY: RangeInclusive<u32> = 1..=0;
        if !(hi >= lo) || self.len == 0 {
            return EMPTY;
        }
        let mut t0 = (lo - self.origin) / self.step - 0.5;
        let mut t1 = (hi - self.origin) / self.step - 0.5;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let a = (t0.floor() as i64 - 1).max(0);
        let b = (t1.ceil() as i64 + 1).min(self.len as i64 - 1);
        if a > b {
            return EMPTY;
        }
        (a as u32)..=(b as u32)
    }
}

impl ShelfFrame {
    /// Column and row axes of this frame's grid.
    pub fn axes(&self, spec: &GridSpec) -> (GridAxis, GridAxis) {
        let mpc = spec.meters_per_cell();
        let cols = GridAxis {
            origin: self.omega.min[0],
            step: mpc,
            len: spec.resolution,
        };
        let rows = match self.view {
            View::Top => GridAxis {
                origin: self.omega.min[1],
                step: mpc,
                len: spec.resolution,
            },
            View::Front => GridAxis {
                origin: self.omega.max[1],
                step: -mpc,
                len: spec.resolution,
            },
        };
        (cols, rows)
    }
}

/// Racks whose footprint intersects the horizontal view-frustum triangle
/// (apex at the camera, legs of length `max_range` at `yaw ± fov/2`).
/// Partial intersection counts as visible. Result preserves scene order.
pub fn visible_racks(scene: &SceneGraph, pose: &CameraPose, fov: f64, max_range: f64) -> Vec<u32> {
    assert!(
        fov > 0.0 && fov < std::f64::consts::PI,
        "fov must lie in (0, pi)"
    );
    assert!(max_range > 0.0, "max_range must be positive");
    let apex = [pose.position.x, pose.position.z];
    let left = frustum_leg(pose, -fov / 2.0, max_range);
    let right = frustum_leg(pose, fov / 2.0, max_range);
    // CCW order in the (x, z) plane: apex, right leg, left leg.
    let triangle = [apex, right, left];
    scene
        .racks
        .iter()
        .filter(|rack| crate::geom::convex_overlap(&triangle, &rack.footprint().corners()))
        .map(|rack| rack.id)
        .collect()
}

fn frustum_leg(pose: &CameraPose, offset: f64, max_range: f64) -> [f64; 2] {
    let (s, c) = (pose.yaw + offset).sin_cos();
    [pose.position.x + s * max_range, pose.position.z + c * max_range]
}

/// Builds the shelf-centric frame for a visible set. The origin is the
/// center of the union bounding volume of the visible racks' shelf
/// surfaces, so the result depends only on the visible set, never on where
/// the camera stands.
pub fn make_shelf_frame(
    scene: &SceneGraph,
    visible: &[u32],
    view: View,
    spec: &GridSpec,
) -> Result<ShelfFrame> {
    if visible.is_empty() {
        return Err(Error::NoVisibleRack);
    }
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for &id in visible {
        let rack = scene
            .rack(id)
            .ok_or_else(|| Error::validation("visible", format!("unknown rack id {id}")))?;
        for shelf in &rack.shelves {
            min[0] = min[0].min(shelf.extent.min[0]);
            max[0] = max[0].max(shelf.extent.max[0]);
            min[2] = min[2].min(shelf.extent.min[1]);
            max[2] = max[2].max(shelf.extent.max[1]);
        }
        for &h in &rack.shelf_heights {
            min[1] = min[1].min(h);
            max[1] = max[1].max(h);
        }
    }
    if !min.iter().all(|v| v.is_finite()) || !max.iter().all(|v| v.is_finite()) {
        return Err(Error::NoVisibleRack);
    }
    let origin = Vec3::new(
        (min[0] + max[0]) / 2.0,
        (min[1] + max[1]) / 2.0,
        (min[2] + max[2]) / 2.0,
    );
    let half = spec.extent / 2.0;
    let omega = match view {
        View::Top => Rect::new(
            [origin.x - half, origin.z - half],
            [origin.x + half, origin.z + half],
        ),
        View::Front => Rect::new(
            [origin.x - half, origin.y - half],
            [origin.x + half, origin.y + half],
        ),
    };
    Ok(ShelfFrame { view, origin, omega })
}

/// Rasterizes the bird's-eye-view layout stack: channel `i` classifies each
/// cell as occupied (under a level-`i` box footprint), unoccupied (under a
/// level-`i` shelf surface) or background. Boxes stacked above level `i`
/// still project into channel `i`.
pub fn rasterize_top_view(
    scene: &SceneGraph,
    frame: &ShelfFrame,
    spec: &GridSpec,
    visible: &[u32],
) -> LayoutStack {
    assert_eq!(frame.view, View::Top, "frame must be built for the top view");
    let mut stack = LayoutStack::background(View::Top, spec.resolution, spec.num_shelves);
    let (cols, rows) = frame.axes(spec);

    // Shelf surfaces first, then box footprints on top of them.
    for_each_visible_shelf(scene, visible, spec, |shelf| {
        let ch = shelf.level as usize;
        let ext = shelf.extent;
        for c in cols.candidates(ext.min[0], ext.max[0]) {
            let x = cols.center(c);
            if x < ext.min[0] || x > ext.max[0] {
                continue;
            }
            for r in rows.candidates(ext.min[1], ext.max[1]) {
                let z = rows.center(r);
                if z < ext.min[1] || z > ext.max[1] {
                    continue;
                }
                stack.set(ch, r, c, CellClass::Unoccupied);
            }
        }
    });
    for_each_visible_shelf(scene, visible, spec, |shelf| {
        let ch = shelf.level as usize;
        for b in &shelf.boxes {
            let corners = b.footprint().corners();
            let aabb = b.footprint().aabb();
            for c in cols.candidates(aabb.min[0], aabb.max[0]) {
                let x = cols.center(c);
                for r in rows.candidates(aabb.min[1], aabb.max[1]) {
                    let z = rows.center(r);
                    if point_in_convex(&corners, [x, z]) {
                        stack.set(ch, r, c, CellClass::Occupied);
                    }
                }
            }
        }
    });
    stack
}

/// Rasterizes the front-view layout stack: channel `i` classifies each cell
/// as occupied (inside a level-`i` box silhouette), unoccupied (inside the
/// level-`i` shelf band: surface up to the next shelf's underside, or the
/// configured clearance for the topmost shelf) or background.
pub fn rasterize_front_view(
    scene: &SceneGraph,
    frame: &ShelfFrame,
    spec: &GridSpec,
    visible: &[u32],
) -> LayoutStack {
    assert_eq!(
        frame.view,
        View::Front,
        "frame must be built for the front view"
    );
    let mut stack = LayoutStack::background(View::Front, spec.resolution, spec.num_shelves);
    let (cols, rows) = frame.axes(spec);

    for &id in visible {
        let Some(rack) = scene.rack(id) else { continue };
        for shelf in &rack.shelves {
            if shelf.level >= spec.num_shelves {
                continue;
            }
            let Some((lo, hi)) = rack.band(shelf.level as usize, spec.top_clearance) else {
                continue;
            };
            let ch = shelf.level as usize;
            for c in cols.candidates(shelf.extent.min[0], shelf.extent.max[0]) {
                let x = cols.center(c);
                if x < shelf.extent.min[0] || x > shelf.extent.max[0] {
                    continue;
                }
                for r in rows.candidates(lo, hi) {
                    let y = rows.center(r);
                    if y < lo || y > hi {
                        continue;
                    }
                    stack.set(ch, r, c, CellClass::Unoccupied);
                }
            }
        }
    }
    for_each_visible_shelf(scene, visible, spec, |shelf| {
        let ch = shelf.level as usize;
        for b in &shelf.boxes {
            let sil = b.silhouette();
            for c in cols.candidates(sil.min[0], sil.max[0]) {
                let x = cols.center(c);
                if x < sil.min[0] || x > sil.max[0] {
                    continue;
                }
                for r in rows.candidates(sil.min[1], sil.max[1]) {
                    let y = rows.center(r);
                    if y < sil.min[1] || y > sil.max[1] {
                        continue;
                    }
                    stack.set(ch, r, c, CellClass::Occupied);
                }
            }
        }
    });
    stack
}

fn for_each_visible_shelf<'a>(
    scene: &'a SceneGraph,
    visible: &[u32],
    spec: &GridSpec,
    mut f: impl FnMut(&'a crate::scene::Shelf),
) {
    for &id in visible {
        let Some(rack) = scene.rack(id) else { continue };
        for shelf in &rack.shelves {
            if shelf.level < spec.num_shelves {
                f(shelf);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Footprint;
    use crate::scene::{AisleInfo, BoxInstance, Rack, Shelf, SurfaceAttr};

    fn rack_at(id: u32, x: f64, z: f64, width: f64, depth: f64, heights: Vec<f64>) -> Rack {
        let extent = Rect::new([x - width / 2.0, z - depth / 2.0], [x + width / 2.0, z + depth / 2.0]);
        let shelves = (0..heights.len())
            .map(|level| Shelf {
                rack_id: id,
                level: level as u32,
                extent,
                boxes: vec![],
            })
            .collect();
        Rack {
            id,
            base: Vec3::new(x, 0.0, z),
            width,
            depth,
            shelf_heights: heights,
            shelves,
            attr: SurfaceAttr::default(),
            distractor: false,
        }
    }

    fn scene_with(racks: Vec<Rack>) -> SceneGraph {
        SceneGraph {
            racks,
            floor: SurfaceAttr::default(),
            wall: SurfaceAttr::default(),
            aisle: AisleInfo {
                row_z: 0.0,
                rack_spacing: vec![],
            },
        }
    }

    fn centered_box(size: [f64; 3], bottom: f64, yaw: f64) -> BoxInstance {
        BoxInstance {
            id: 0,
            center: Vec3::new(0.0, bottom + size[1] / 2.0, 0.0),
            size: Vec3::new(size[0], size[1], size[2]),
            yaw,
            stack_level: 0,
            attr: SurfaceAttr::default(),
            reflectivity: 0.0,
        }
    }

    #[test]
    fn camera_facing_away_sees_nothing() {
        let scene = scene_with(vec![rack_at(0, 0.0, 0.0, 2.0, 1.0, vec![0.3])]);
        let pose = CameraPose {
            position: Vec3::new(0.0, 1.5, -2.0),
            yaw: std::f64::consts::PI, // facing -Z, away from the rack
        };
        assert!(visible_racks(&scene, &pose, 1.5, 10.0).is_empty());
    }

    #[test]
    fn camera_centered_on_rack_sees_it() {
        let scene = scene_with(vec![rack_at(7, 0.0, 0.0, 2.0, 1.0, vec![0.3])]);
        let pose = CameraPose {
            position: Vec3::new(0.0, 1.5, -2.0),
            yaw: 0.0,
        };
        assert_eq!(
            visible_racks(&scene, &pose, std::f64::consts::FRAC_PI_2, 10.0),
            vec![7]
        );
    }

    #[test]
    fn narrow_fov_sees_exactly_the_middle_racks() {
        // Four 1 m racks at x = 0, 1.5, 3, 4.5; camera mid-aisle in front of
        // the gap between racks 1 and 2.
        let racks: Vec<Rack> = (0..4)
            .map(|i| rack_at(i, 1.5 * i as f64, 0.0, 1.0, 1.0, vec![0.3]))
            .collect();
        let scene = scene_with(racks);
        let pose = CameraPose {
            position: Vec3::new(2.25, 1.5, -2.0),
            yaw: 0.0,
        };
        let fov = 0.8f64;
        let visible = visible_racks(&scene, &pose, fov, 10.0);

        // Independent oracle: dense point sampling of each footprint against
        // the frustum triangle.
        let apex = [pose.position.x, pose.position.z];
        let left = frustum_leg(&pose, -fov / 2.0, 10.0);
        let right = frustum_leg(&pose, fov / 2.0, 10.0);
        let tri = [apex, right, left];
        let mut expected = vec![];
        for rack in &scene.racks {
            let fp = rack.footprint().aabb();
            let mut hit = false;
            let n = 200;
            'sampling: for i in 0..=n {
                for j in 0..=n {
                    let x = fp.min[0] + (fp.max[0] - fp.min[0]) * i as f64 / n as f64;
                    let z = fp.min[1] + (fp.max[1] - fp.min[1]) * j as f64 / n as f64;
                    if point_in_convex(&tri, [x, z]) {
                        hit = true;
                        break 'sampling;
                    }
                }
            }
            if hit {
                expected.push(rack.id);
            }
        }
        assert_eq!(expected, vec![1, 2], "oracle should pick the middle racks");
        assert_eq!(visible, expected);
    }

    #[test]
    fn frame_origin_single_rack() {
        let scene = scene_with(vec![rack_at(0, 3.0, 5.0, 2.0, 1.0, vec![0.4, 1.2])]);
        let spec = GridSpec::default();
        let frame = make_shelf_frame(&scene, &[0], View::Top, &spec).unwrap();
        assert!((frame.origin.x - 3.0).abs() < 1e-12);
        assert!((frame.origin.z - 5.0).abs() < 1e-12);
        assert!((frame.origin.y - 0.8).abs() < 1e-12);
    }

    #[test]
    fn frame_origin_two_racks_midpoint() {
        let scene = scene_with(vec![
            rack_at(0, 0.0, 0.0, 2.0, 1.0, vec![0.4]),
            rack_at(1, 4.0, 0.0, 2.0, 1.0, vec![0.4]),
        ]);
        let spec = GridSpec::default();
        let frame = make_shelf_frame(&scene, &[0, 1], View::Front, &spec).unwrap();
        assert!((frame.origin.x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn frame_origin_unequal_widths_uses_union_extent() {
        let scene = scene_with(vec![
            rack_at(0, 0.0, 0.0, 1.0, 1.0, vec![0.4]),
            rack_at(1, 2.0, 0.0, 2.0, 1.0, vec![0.4]),
            rack_at(2, 5.0, 0.0, 0.5, 1.0, vec![0.4]),
        ]);
        let spec = GridSpec::default();
        let frame = make_shelf_frame(&scene, &[0, 1, 2], View::Top, &spec).unwrap();
        // Union X extent: [-0.5, 5.25] -> center 2.375.
        assert!((frame.origin.x - 2.375).abs() < 1e-12);
    }

    #[test]
    fn empty_visible_set_is_an_error() {
        let scene = scene_with(vec![]);
        let spec = GridSpec::default();
        assert!(matches!(
            make_shelf_frame(&scene, &[], View::Top, &spec),
            Err(Error::NoVisibleRack)
        ));
    }

    #[test]
    fn empty_omega_rasterizes_all_background() {
        let scene = scene_with(vec![rack_at(0, 0.0, 0.0, 2.0, 1.0, vec![0.3])]);
        let spec = GridSpec::new(32, 4.0, 3).unwrap();
        let frame = ShelfFrame {
            view: View::Top,
            origin: Vec3::new(100.0, 0.0, 100.0),
            omega: Rect::new([98.0, 98.0], [102.0, 102.0]),
        };
        let stack = rasterize_top_view(&scene, &frame, &spec, &[0]);
        assert!(stack.is_all_background());
    }

    #[test]
    fn unit_box_covers_an_8x8_square_at_eighth_meter_cells() {
        // extent 4 m at D = 32 gives mpc = 0.125; a 1 m x 1 m box centered
        // at the frame origin covers cell centers in [-0.5, 0.5] on both
        // axes: columns/rows 12..=19.
        let mut rack = rack_at(0, 0.0, 0.0, 3.0, 3.0, vec![0.3]);
        rack.shelves[0].boxes.push(centered_box([1.0, 0.4, 1.0], 0.3, 0.0));
        let scene = scene_with(vec![rack]);
        let spec = GridSpec::new(32, 4.0, 3).unwrap();
        let frame = make_shelf_frame(&scene, &[0], View::Top, &spec).unwrap();
        let stack = rasterize_top_view(&scene, &frame, &spec, &[0]);
        for r in 0..32 {
            for c in 0..32 {
                let expect_occupied = (12..=19).contains(&r) && (12..=19).contains(&c);
                let got = stack.get(0, r, c);
                if expect_occupied {
                    assert_eq!(got, CellClass::Occupied, "r={r} c={c}");
                } else {
                    assert_ne!(got, CellClass::Occupied, "r={r} c={c}");
                }
            }
        }
        assert_eq!(stack.class_counts(0)[CellClass::Occupied.index()], 64);
    }

    #[test]
    fn shelf_covering_omega_is_all_unoccupied() {
        let rack = rack_at(0, 0.0, 0.0, 10.0, 10.0, vec![0.3]);
        let scene = scene_with(vec![rack]);
        let spec = GridSpec::new(32, 4.0, 1).unwrap();
        let frame = make_shelf_frame(&scene, &[0], View::Top, &spec).unwrap();
        let stack = rasterize_top_view(&scene, &frame, &spec, &[0]);
        assert_eq!(stack.class_counts(0), [0, 1024, 0]);
    }

    #[test]
    fn front_band_height_rounds_to_cells() {
        // Single shelf at 0.5 m, clearance 0.9 m, mpc 0.125:
        // round(0.9 / 0.125) = 7 unoccupied rows.
        let rack = rack_at(0, 0.0, 0.0, 6.0, 1.0, vec![0.5]);
        let scene = scene_with(vec![rack]);
        let mut spec = GridSpec::new(32, 4.0, 1).unwrap();
        spec.top_clearance = 0.9;
        let frame = make_shelf_frame(&scene, &[0], View::Front, &spec).unwrap();
        let stack = rasterize_front_view(&scene, &frame, &spec, &[0]);
        let mut rows_with_band = vec![];
        for r in 0..32 {
            if (0..32).any(|c| stack.get(0, r, c) == CellClass::Unoccupied) {
                rows_with_band.push(r);
            }
        }
        assert_eq!(rows_with_band.len(), 7);
        assert_eq!(rows_with_band, (9..=15).collect::<Vec<_>>());
    }

    #[test]
    fn full_height_box_fills_the_band_stripe() {
        let mut rack = rack_at(0, 0.0, 0.0, 6.0, 1.0, vec![0.5, 1.5]);
        rack.shelves[0].boxes.push(centered_box([0.8, 1.0, 0.6], 0.5, 0.0));
        let scene = scene_with(vec![rack.clone()]);
        let spec = GridSpec::new(64, 4.0, 2).unwrap();
        let frame = make_shelf_frame(&scene, &[0], View::Front, &spec).unwrap();
        let stack = rasterize_front_view(&scene, &frame, &spec, &[0]);
        // Every row that carries band cells must also carry occupied cells
        // at the box's X extent.
        let (cols, rows) = frame.axes(&spec);
        let (bx0, bx1) = Footprint::new(0.0, 0.0, 0.8, 0.6, 0.0).span_x();
        for r in 0..64 {
            let y = rows.center(r);
            if y >= 0.5 && y <= 1.5 {
                for c in 0..64 {
                    let x = cols.center(c);
                    if x >= bx0 && x <= bx1 {
                        assert_eq!(stack.get(0, r, c), CellClass::Occupied, "r={r} c={c}");
                    }
                }
            }
        }
    }

    #[test]
    fn shift_equivariance_of_both_views() {
        let mut rack = rack_at(0, 0.0, 0.0, 3.0, 1.2, vec![0.3, 1.1]);
        rack.shelves[0]
            .boxes
            .push(centered_box([0.5, 0.5, 0.4], 0.3, 0.7));
        let scene = scene_with(vec![rack]);
        let spec = GridSpec::new(64, 6.0, 2).unwrap();

        let mut shifted = scene.clone();
        let offset = Vec3::new(3.25, 0.0, -1.5);
        for rack in &mut shifted.racks {
            rack.base = rack.base + offset;
            for h in &mut rack.shelf_heights {
                *h += offset.y;
            }
            for shelf in &mut rack.shelves {
                shelf.extent = Rect::new(
                    [shelf.extent.min[0] + offset.x, shelf.extent.min[1] + offset.z],
                    [shelf.extent.max[0] + offset.x, shelf.extent.max[1] + offset.z],
                );
                for b in &mut shelf.boxes {
                    b.center = b.center + offset;
                }
            }
        }

        for view in [View::Top, View::Front] {
            let f0 = make_shelf_frame(&scene, &[0], view, &spec).unwrap();
            let f1 = make_shelf_frame(&shifted, &[0], view, &spec).unwrap();
            let (a, b) = match view {
                View::Top => (
                    rasterize_top_view(&scene, &f0, &spec, &[0]),
                    rasterize_top_view(&shifted, &f1, &spec, &[0]),
                ),
                View::Front => (
                    rasterize_front_view(&scene, &f0, &spec, &[0]),
                    rasterize_front_view(&shifted, &f1, &spec, &[0]),
                ),
            };
            assert_eq!(a, b, "view {view:?} must be shift-invariant");
        }
    }
}
