//! Wavefront OBJ export of a world model: one axis-aligned cuboid per
//! shelf slab and per box, each in its own object group. When the world
//! carries an anchor, vertices are emitted in world coordinates.

use crate::error::Result;
use crate::geom::Vec3;
use crate::stitch::WorldRecon;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Visual thickness given to shelf slabs (they are surfaces in the model).
const SLAB_PLATE: f64 = 0.04;

/// Renders the world as Wavefront OBJ text.
pub fn world_to_obj(world: &WorldRecon) -> String {
    let offset = world.anchor.unwrap_or(Vec3::ZERO);
    let mut out = String::new();
    out.push_str("# rackforge world model\n");
    let mut next_vertex = 1usize;
    for (i, slab) in world.slabs.iter().enumerate() {
        let min = Vec3::new(slab.x_min, slab.elevation - SLAB_PLATE, slab.z_min) + offset;
        let max = Vec3::new(slab.x_max, slab.elevation, slab.z_max) + offset;
        emit_cuboid(&mut out, &format!("shelf_{i}_level_{}", slab.level), min, max, &mut next_vertex);
    }
    for (i, b) in world.boxes.iter().enumerate() {
        let min = b.center - b.size.scale(0.5) + offset;
        let max = b.center + b.size.scale(0.5) + offset;
        emit_cuboid(&mut out, &format!("box_{i}_level_{}", b.level), min, max, &mut next_vertex);
    }
    out
}

pub fn write_obj(path: &Path, world: &WorldRecon) -> Result<()> {
    fs::write(path, world_to_obj(world))?;
    Ok(())
}

fn emit_cuboid(out: &mut String, name: &str, min: Vec3, max: Vec3, next_vertex: &mut usize) {
    let _ = writeln!(out, "o {name}");
    let corners = [
        [min.x, min.y, min.z],
        [max.x, min.y, min.z],
        [max.x, max.y, min.z],
        [min.x, max.y, min.z],
        [min.x, min.y, max.z],
        [max.x, min.y, max.z],
        [max.x, max.y, max.z],
        [min.x, max.y, max.z],
    ];
    for c in corners {
        let _ = writeln!(out, "v {:.6} {:.6} {:.6}", c[0], c[1], c[2]);
    }
    let b = *next_vertex;
    // Quads: bottom, top, four sides; outward winding.
    let faces = [
        [0, 3, 2, 1],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ];
    for f in faces {
        let _ = writeln!(out, "f {} {} {} {}", b + f[0], b + f[1], b + f[2], b + f[3]);
    }
    *next_vertex += 8;
}
