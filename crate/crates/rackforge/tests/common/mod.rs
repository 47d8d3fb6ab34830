//! Shared test support: brute-force rasterization oracles kept independent
//! of the library's rasterization path.
//!
//! The oracles classify every cell of the grid by direct membership tests:
//! rotated footprints via inverse rotation into the box frame (the library
//! uses corner cross products), axis intervals via corner enumeration.

use rackforge::grid::{CellClass, GridSpec, LayoutStack, View};
use rackforge::raster::ShelfFrame;
use rackforge::scene::SceneGraph;

/// Point-in-rotated-rectangle via inverse rotation (closed boundaries).
fn in_rotated_rect(px: f64, pz: f64, cx: f64, cz: f64, half_w: f64, half_d: f64, yaw: f64) -> bool {
    let (s, c) = yaw.sin_cos();
    let dx = px - cx;
    let dz = pz - cz;
    // Rotate the point by -yaw into the box frame.
    let lx = dx * c + dz * s;
    let lz = -dx * s + dz * c;
    lx.abs() <= half_w && lz.abs() <= half_d
}

/// X projection interval of a rotated footprint via corner enumeration.
fn span_x_by_corners(cx: f64, half_w: f64, half_d: f64, yaw: f64) -> (f64, f64) {
    let (s, c) = yaw.sin_cos();
    let offsets = [
        half_w * c - half_d * s,
        half_w * c + half_d * s,
        -half_w * c + half_d * s,
        -half_w * c - half_d * s,
    ];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for o in offsets {
        lo = lo.min(cx + o);
        hi = hi.max(cx + o);
    }
    (lo, hi)
}

/// Brute-force top-view rasterization: every cell against every shape.
pub fn oracle_top_view(
    scene: &SceneGraph,
    frame: &ShelfFrame,
    spec: &GridSpec,
    visible: &[u32],
) -> LayoutStack {
    assert_eq!(frame.view, View::Top);
    let d = spec.resolution;
    let mpc = spec.meters_per_cell();
    let mut stack = LayoutStack::background(View::Top, d, spec.num_shelves);
    for ch in 0..spec.num_shelves {
        for r in 0..d {
            for c in 0..d {
                let x = frame.omega.min[0] + (c as f64 + 0.5) * mpc;
                let z = frame.omega.min[1] + (r as f64 + 0.5) * mpc;
                let mut class = CellClass::Background;
                'shapes: for &id in visible {
                    let Some(rack) = scene.rack(id) else { continue };
                    for shelf in &rack.shelves {
                        if shelf.level != ch {
                            continue;
                        }
                        for b in &shelf.boxes {
                            if in_rotated_rect(
                                x,
                                z,
                                b.center.x,
                                b.center.z,
                                b.size.x / 2.0,
                                b.size.z / 2.0,
                                b.yaw,
                            ) {
                                class = CellClass::Occupied;
                                break 'shapes;
                            }
                        }
                        if class == CellClass::Background
                            && x >= shelf.extent.min[0]
                            && x <= shelf.extent.max[0]
                            && z >= shelf.extent.min[1]
                            && z <= shelf.extent.max[1]
                        {
                            class = CellClass::Unoccupied;
                        }
                    }
                }
                if class != CellClass::Background {
                    stack.set(ch as usize, r, c, class);
                }
            }
        }
    }
    stack
}

/// Brute-force front-view rasterization.
pub fn oracle_front_view(
    scene: &SceneGraph,
    frame: &ShelfFrame,
    spec: &GridSpec,
    visible: &[u32],
) -> LayoutStack {
    assert_eq!(frame.view, View::Front);
    let d = spec.resolution;
    let mpc = spec.meters_per_cell();
    let mut stack = LayoutStack::background(View::Front, d, spec.num_shelves);
    for ch in 0..spec.num_shelves {
        for r in 0..d {
            for c in 0..d {
                let x = frame.omega.min[0] + (c as f64 + 0.5) * mpc;
                let y = frame.omega.max[1] - (r as f64 + 0.5) * mpc;
                let mut class = CellClass::Background;
                'shapes: for &id in visible {
                    let Some(rack) = scene.rack(id) else { continue };
                    for shelf in &rack.shelves {
                        if shelf.level != ch {
                            continue;
                        }
                        for b in &shelf.boxes {
                            let (x0, x1) = span_x_by_corners(
                                b.center.x,
                                b.size.x / 2.0,
                                b.size.z / 2.0,
                                b.yaw,
                            );
                            let y0 = b.center.y - b.size.y / 2.0;
                            let y1 = b.center.y + b.size.y / 2.0;
                            if x >= x0 && x <= x1 && y >= y0 && y <= y1 {
                                class = CellClass::Occupied;
                                break 'shapes;
                            }
                        }
                        if class == CellClass::Background {
                            if let Some((lo, hi)) =
                                rack.band(shelf.level as usize, spec.top_clearance)
                            {
                                if x >= shelf.extent.min[0]
                                    && x <= shelf.extent.max[0]
                                    && y >= lo
                                    && y <= hi
                                {
                                    class = CellClass::Unoccupied;
                                }
                            }
                        }
                    }
                }
                if class != CellClass::Background {
                    stack.set(ch as usize, r, c, class);
                }
            }
        }
    }
    stack
}

/// Cell-for-cell mismatch count between two stacks of equal shape.
pub fn mismatches(a: &LayoutStack, b: &LayoutStack) -> usize {
    assert!(a.same_shape(b));
    (0..a.num_channels())
        .map(|ch| {
            a.channel(ch)
                .iter()
                .zip(b.channel(ch))
                .filter(|(x, y)| x != y)
                .count()
        })
        .sum()
}
