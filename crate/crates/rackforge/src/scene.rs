//! Ground-truth warehouse scene graph: racks, shelves, boxes and the
//! camera poses that observe them.
//!
//! Scenes serialize to a documented JSON schema (see the repository README);
//! appearance attributes (texture, color, reflectivity) are metadata only
//! and never influence geometry.

use crate::error::{Error, Result};
use crate::geom::{Footprint, Rect, Vec3};
use serde::{Deserialize, Serialize};

/// Appearance metadata for floors, walls, racks and boxes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceAttr {
    pub texture_id: u32,
    pub color_id: u32,
}

/// Rack-row geometry: all foreground racks sit on one line parallel to the
/// X axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AisleInfo {
    /// Z coordinate of the rack-row line.
    pub row_z: f64,
    /// Gap between consecutive foreground racks, meters (len = racks − 1).
    pub rack_spacing: Vec<f64>,
}

/// One box resting on a shelf (stack level 0) or on another box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxInstance {
    pub id: u32,
    /// World-frame center, y is the elevation of the box center.
    pub center: Vec3,
    /// Full extents: x = width, y = height, z = depth.
    pub size: Vec3,
    /// Rotation about the vertical axis, radians.
    pub yaw: f64,
    /// 0 = directly on the shelf, k = on top of a level k−1 box.
    pub stack_level: u32,
    #[serde(default)]
    pub attr: SurfaceAttr,
    /// Reflectivity in [0, 1]; metadata only.
    #[serde(default)]
    pub reflectivity: f64,
}

impl BoxInstance {
    pub fn footprint(&self) -> Footprint {
        Footprint::new(self.center.x, self.center.z, self.size.x, self.size.z, self.yaw)
    }

    pub fn bottom(&self) -> f64 {
        self.center.y - self.size.y / 2.0
    }

    pub fn top(&self) -> f64 {
        self.center.y + self.size.y / 2.0
    }

    /// Frontal silhouette: X projection interval × vertical interval.
    pub fn silhouette(&self) -> Rect {
        let (x0, x1) = self.footprint().span_x();
        Rect::new([x0, self.bottom()], [x1, self.top()])
    }

    /// World-frame axis-aligned hull, as (center, size). For yaw = 0 this is
    /// the box itself; reconstructions are compared against this hull since
    /// lifted cuboids are axis-aligned.
    pub fn aligned_hull(&self) -> (Vec3, Vec3) {
        let (x0, x1) = self.footprint().span_x();
        let (z0, z1) = self.footprint().span_z();
        (
            Vec3::new((x0 + x1) / 2.0, self.center.y, (z0 + z1) / 2.0),
            Vec3::new(x1 - x0, self.size.y, z1 - z0),
        )
    }
}

/// One shelf level of a rack with the boxes it carries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shelf {
    pub rack_id: u32,
    /// Level index, bottom = 0.
    pub level: u32,
    /// Surface rectangle in the X-Z plane: min = [x0, z0], max = [x1, z1].
    pub extent: Rect,
    pub boxes: Vec<BoxInstance>,
}

/// A rack: a stack of shelves sharing one footprint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rack {
    pub id: u32,
    /// Footprint center at floor level (y = 0).
    pub base: Vec3,
    /// Footprint extent along X.
    pub width: f64,
    /// Footprint extent along Z.
    pub depth: f64,
    /// Shelf surface elevations, strictly increasing, bottom first.
    pub shelf_heights: Vec<f64>,
    pub shelves: Vec<Shelf>,
    #[serde(default)]
    pub attr: SurfaceAttr,
    /// Background-clutter rack: part of the scene, never part of the
    /// ground-truth layouts (always beyond visibility range).
    #[serde(default)]
    pub distractor: bool,
}

impl Rack {
    pub fn footprint(&self) -> Footprint {
        Footprint::new(self.base.x, self.base.z, self.width, self.depth, 0.0)
    }

    pub fn shelf(&self, level: u32) -> Option<&Shelf> {
        self.shelves.iter().find(|s| s.level == level)
    }

    /// Vertical band of shelf `level` in the front view: from its surface up
    /// to the next shelf's underside, or `top_clearance` for the topmost.
    pub fn band(&self, level: usize, top_clearance: f64) -> Option<(f64, f64)> {
        let lo = *self.shelf_heights.get(level)?;
        let hi = match self.shelf_heights.get(level + 1) {
            Some(&next) => next,
            None => lo + top_clearance,
        };
        Some((lo, hi))
    }
}

/// Camera pose: position plus yaw about the vertical axis. Pitch and roll
/// are zero by construction, so the image plane stays orthogonal to the
/// ground.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vec3,
    /// Radians; 0 faces +Z, positive turns toward +X.
    pub yaw: f64,
}

impl CameraPose {
    /// Horizontal facing direction as (x, z).
    pub fn direction(&self) -> [f64; 2] {
        let (s, c) = self.yaw.sin_cos();
        [s, c]
    }
}

/// Complete ground-truth warehouse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub racks: Vec<Rack>,
    #[serde(default)]
    pub floor: SurfaceAttr,
    #[serde(default)]
    pub wall: SurfaceAttr,
    pub aisle: AisleInfo,
}

impl SceneGraph {
    pub fn rack(&self, id: u32) -> Option<&Rack> {
        self.racks.iter().find(|r| r.id == id)
    }

    /// Foreground racks only (distractors excluded), in scene order.
    pub fn foreground_racks(&self) -> impl Iterator<Item = &Rack> {
        self.racks.iter().filter(|r| !r.distractor)
    }

    pub fn total_box_count(&self) -> usize {
        self.racks
            .iter()
            .flat_map(|r| &r.shelves)
            .map(|s| s.boxes.len())
            .sum()
    }

    /// Structural invariants: strictly increasing shelf heights, boxes
    /// inside their shelf's horizontal extent resting on the surface or on
    /// a supporting box, pairwise non-overlap at equal stack level, and no
    /// rack interpenetration.
    pub fn validate(&self) -> Result<()> {
        const TOL: f64 = 1e-9;
        for rack in &self.racks {
            for pair in rack.shelf_heights.windows(2) {
                if pair[1] <= pair[0] {
                    return Err(Error::validation(
                        format!("rack[{}].shelf_heights", rack.id),
                        "must be strictly increasing",
                    ));
                }
            }
            for shelf in &rack.shelves {
                if shelf.rack_id != rack.id {
                    return Err(Error::validation(
                        format!("rack[{}].shelf[{}].rack_id", rack.id, shelf.level),
                        "does not match owning rack",
                    ));
                }
                let surface = rack.shelf_heights.get(shelf.level as usize).copied().ok_or_else(
                    || {
                        Error::validation(
                            format!("rack[{}].shelf[{}]", rack.id, shelf.level),
                            "level has no entry in shelf_heights",
                        )
                    },
                )?;
                for b in &shelf.boxes {
                    if !(b.size.x > 0.0 && b.size.y > 0.0 && b.size.z > 0.0) {
                        return Err(Error::validation(
                            format!("box[{}].size", b.id),
                            "components must be positive",
                        ));
                    }
                    let aabb = b.footprint().aabb();
                    if !shelf.extent.contains_rect(&Rect::new(
                        [aabb.min[0] + TOL, aabb.min[1] + TOL],
                        [aabb.max[0] - TOL, aabb.max[1] - TOL],
                    )) {
                        return Err(Error::validation(
                            format!("box[{}]", b.id),
                            "footprint exceeds shelf extent",
                        ));
                    }
                    if b.stack_level == 0 && (b.bottom() - surface).abs() > TOL {
                        return Err(Error::validation(
                            format!("box[{}]", b.id),
                            "stack level 0 must rest on the shelf surface",
                        ));
                    }
                    if b.stack_level > 0 {
                        let supported = shelf.boxes.iter().any(|o| {
                            o.stack_level + 1 == b.stack_level && (o.top() - b.bottom()).abs() < TOL
                        });
                        if !supported {
                            return Err(Error::validation(
                                format!("box[{}]", b.id),
                                "stacked box has no supporting box underneath",
                            ));
                        }
                    }
                }
                for (i, a) in shelf.boxes.iter().enumerate() {
                    for b in shelf.boxes.iter().skip(i + 1) {
                        if a.stack_level == b.stack_level
                            && !a.footprint().separated_by(&b.footprint(), TOL)
                        {
                            return Err(Error::validation(
                                format!("box[{}]/box[{}]", a.id, b.id),
                                "overlapping footprints at equal stack level",
                            ));
                        }
                    }
                }
            }
        }
        for (i, a) in self.racks.iter().enumerate() {
            for b in self.racks.iter().skip(i + 1) {
                if !a.footprint().separated_by(&b.footprint(), 0.0) {
                    return Err(Error::validation(
                        format!("rack[{}]/rack[{}]", a.id, b.id),
                        "rack footprints interpenetrate",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn simple_box(id: u32, x: f64, y_bottom: f64, z: f64, size: [f64; 3], yaw: f64) -> BoxInstance {
        BoxInstance {
            id,
            center: Vec3::new(x, y_bottom + size[1] / 2.0, z),
            size: Vec3::new(size[0], size[1], size[2]),
            yaw,
            stack_level: 0,
            attr: SurfaceAttr::default(),
            reflectivity: 0.0,
        }
    }

    fn one_rack_scene() -> SceneGraph {
        let extent = Rect::new([-0.9, -0.5], [0.9, 0.5]);
        SceneGraph {
            racks: vec![Rack {
                id: 0,
                base: Vec3::new(0.0, 0.0, 0.0),
                width: 1.8,
                depth: 1.0,
                shelf_heights: vec![0.3, 1.3],
                shelves: vec![
                    Shelf {
                        rack_id: 0,
                        level: 0,
                        extent,
                        boxes: vec![simple_box(0, 0.0, 0.3, 0.0, [0.4, 0.4, 0.4], 0.0)],
                    },
                    Shelf {
                        rack_id: 0,
                        level: 1,
                        extent,
                        boxes: vec![],
                    },
                ],
                attr: SurfaceAttr::default(),
                distractor: false,
            }],
            floor: SurfaceAttr::default(),
            wall: SurfaceAttr::default(),
            aisle: AisleInfo {
                row_z: 0.0,
                rack_spacing: vec![],
            },
        }
    }

    #[test]
    fn valid_scene_passes() {
        one_rack_scene().validate().unwrap();
    }

    #[test]
    fn overlapping_boxes_rejected() {
        let mut scene = one_rack_scene();
        let dup = scene.racks[0].shelves[0].boxes[0].clone();
        scene.racks[0].shelves[0].boxes.push(BoxInstance { id: 1, ..dup });
        let err = scene.validate().unwrap_err();
        assert!(err.to_string().contains("overlapping"));
    }

    #[test]
    fn floating_box_rejected() {
        let mut scene = one_rack_scene();
        scene.racks[0].shelves[0].boxes[0].center.y += 0.05;
        assert!(scene.validate().is_err());
    }

    #[test]
    fn band_uses_next_shelf_then_clearance() {
        let scene = one_rack_scene();
        let rack = &scene.racks[0];
        assert_eq!(rack.band(0, 2.0), Some((0.3, 1.3)));
        assert_eq!(rack.band(1, 2.0), Some((1.3, 3.3)));
        assert_eq!(rack.band(2, 2.0), None);
    }

    #[test]
    fn scene_json_round_trip() {
        let scene = one_rack_scene();
        let text = serde_json::to_string(&scene).unwrap();
        let back: SceneGraph = serde_json::from_str(&text).unwrap();
        assert_eq!(scene, back);
    }
}
