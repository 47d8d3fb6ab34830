//! File formats and dataset manifest.
//!
//! Layout grid binary format (`.lay`): magic `MVRL`, format version `u16`,
//! view tag `u8` (0 = top, 1 = front), `R: u16`, `D: u32`, then R·D·D class
//! bytes row-major, channel-major. All integers little-endian. The
//! probability format (`.plf`) shares the header and stores three
//! little-endian `f32` per cell instead of one class byte.
//!
//! Scenes, worlds, frame reconstructions, metrics and manifests are JSON;
//! camera poses are CSV with the header `frame,x,y,z,yaw`.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::grid::{CellClass, GridSpec, LayoutStack, ProbabilityStack, View};
use crate::scene::CameraPose;
use crate::synth::{DatasetSplit, GenConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

pub const LAY_MAGIC: [u8; 4] = *b"MVRL";
pub const FORMAT_VERSION: u16 = 1;

const HEADER_LEN: usize = 4 + 2 + 1 + 2 + 4;

fn encode_header(view: View, channels: u16, resolution: u32) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN);
    buf.extend_from_slice(&LAY_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(view.tag());
    buf.extend_from_slice(&channels.to_le_bytes());
    buf.extend_from_slice(&resolution.to_le_bytes());
    buf
}

struct Header {
    view: View,
    channels: u16,
    resolution: u32,
}

fn decode_header(path: &Path, data: &[u8]) -> Result<Header> {
    if data.len() < HEADER_LEN {
        return Err(Error::format(
            path,
            data.len() as u64,
            "truncated header",
        ));
    }
    if data[0..4] != LAY_MAGIC {
        return Err(Error::format(path, 0, "bad magic, expected MVRL"));
    }
    let version = u16::from_le_bytes([data[4], data[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::format(
            path,
            4,
            format!("unsupported format version {version}"),
        ));
    }
    let view = View::from_tag(data[6])
        .ok_or_else(|| Error::format(path, 6, format!("invalid view tag {}", data[6])))?;
    let channels = u16::from_le_bytes([data[7], data[8]]);
    let resolution = u32::from_le_bytes([data[9], data[10], data[11], data[12]]);
    if resolution == 0 || channels == 0 {
        return Err(Error::format(path, 7, "zero channel count or resolution"));
    }
    Ok(Header {
        view,
        channels,
        resolution,
    })
}

/// Writes a hard-label stack as `.lay`.
pub fn write_lay(path: &Path, stack: &LayoutStack) -> Result<()> {
    let cells = stack.cells_per_channel();
    let mut buf = encode_header(stack.view, stack.num_channels() as u16, stack.resolution());
    buf.reserve(stack.num_channels() * cells);
    for ch in 0..stack.num_channels() {
        buf.extend(stack.channel(ch).iter().map(|c| c.as_u8()));
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Reads a `.lay` stack. The caller assigns `frame_index`; it is not part
/// of the format.
pub fn read_lay(path: &Path) -> Result<LayoutStack> {
    let data = fs::read(path)?;
    let header = decode_header(path, &data)?;
    let cells = header.resolution as usize * header.resolution as usize;
    let expected = HEADER_LEN + header.channels as usize * cells;
    if data.len() != expected {
        return Err(Error::format(
            path,
            data.len().min(expected) as u64,
            format!("expected {expected} bytes, found {}", data.len()),
        ));
    }
    let mut channels = Vec::with_capacity(header.channels as usize);
    for ch in 0..header.channels as usize {
        let start = HEADER_LEN + ch * cells;
        let mut grid = Vec::with_capacity(cells);
        for (i, &byte) in data[start..start + cells].iter().enumerate() {
            let class = CellClass::from_u8(byte).ok_or_else(|| {
                Error::format(
                    path,
                    (start + i) as u64,
                    format!("invalid class byte {byte}"),
                )
            })?;
            grid.push(class);
        }
        channels.push(grid);
    }
    LayoutStack::from_channels(header.view, header.resolution, channels)
}

/// Writes a probability stack as `.plf`.
pub fn write_plf(path: &Path, stack: &ProbabilityStack) -> Result<()> {
    let cells = stack.channel(0).len();
    let mut buf = encode_header(stack.view, stack.num_channels() as u16, stack.resolution());
    buf.reserve(stack.num_channels() * cells * 12);
    for ch in 0..stack.num_channels() {
        for p in stack.channel(ch) {
            for v in p {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Reads a `.plf` stack.
pub fn read_plf(path: &Path) -> Result<ProbabilityStack> {
    let data = fs::read(path)?;
    let header = decode_header(path, &data)?;
    let cells = header.resolution as usize * header.resolution as usize;
    let expected = HEADER_LEN + header.channels as usize * cells * 12;
    if data.len() != expected {
        return Err(Error::format(
            path,
            data.len().min(expected) as u64,
            format!("expected {expected} bytes, found {}", data.len()),
        ));
    }
    let mut channels = Vec::with_capacity(header.channels as usize);
    let mut off = HEADER_LEN;
    for _ in 0..header.channels {
        let mut grid = Vec::with_capacity(cells);
        for _ in 0..cells {
            let mut triple = [0.0f32; 3];
            for slot in &mut triple {
                let bytes: [u8; 4] = data[off..off + 4].try_into().unwrap();
                let v = f32::from_le_bytes(bytes);
                if !v.is_finite() {
                    return Err(Error::format(path, off as u64, "non-finite probability"));
                }
                *slot = v;
                off += 4;
            }
            grid.push(triple);
        }
        channels.push(grid);
    }
    ProbabilityStack::from_channels(header.view, header.resolution, channels)
}

/// Writes camera poses as CSV (`frame,x,y,z,yaw`).
pub fn write_poses(path: &Path, poses: &[CameraPose]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["frame", "x", "y", "z", "yaw"])?;
    for (i, p) in poses.iter().enumerate() {
        wtr.write_record([
            i.to_string(),
            p.position.x.to_string(),
            p.position.y.to_string(),
            p.position.z.to_string(),
            p.yaw.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a pose CSV written by [`write_poses`].
pub fn read_poses(path: &Path) -> Result<Vec<CameraPose>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut poses = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != 5 {
            return Err(Error::validation(
                format!("poses.csv row {row}"),
                format!("expected 5 fields, found {}", record.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            record[i].parse::<f64>().map_err(|e| {
                Error::validation(format!("poses.csv row {row} field {i}"), e.to_string())
            })
        };
        poses.push(CameraPose {
            position: Vec3::new(num(1)?, num(2)?, num(3)?),
            yaw: num(4)?,
        });
    }
    Ok(poses)
}

/// Pretty-printed JSON save.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let data = fs::read(path)?;
    Ok(serde_json::from_slice(&data)?)
}

/// Per-sequence generation metadata: the shelf-frame origin of every frame
/// (shared by both views) and the visible rack sets. Origin deltas supply
/// the dead-reckoned fallback shifts for stitching.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub scene_id: u64,
    pub origins: Vec<Option<Vec3>>,
    pub visible: Vec<Vec<u32>>,
}

impl SequenceMeta {
    /// Content shift per transition t→t+1: the shelf-centric coordinates of
    /// a fixed world point move by the negated origin delta. Transitions
    /// touching a frame without a visible rack fall back to zero.
    pub fn origin_shifts(&self) -> Vec<Vec3> {
        self.origins
            .windows(2)
            .map(|w| match (w[0], w[1]) {
                (Some(a), Some(b)) => -(b - a),
                _ => Vec3::ZERO,
            })
            .collect()
    }
}

/// One sequence entry of the dataset manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub id: u64,
    pub frames: u32,
    /// Directory name relative to the dataset root.
    pub dir: String,
}

/// Dataset manifest: grid geometry, the hash of the generating config, the
/// split assignment and every sequence with its frame count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub grid: GridSpec,
    pub config_hash: String,
    pub split: DatasetSplit,
    pub sequences: Vec<SequenceEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sequence_dir_name(id: u64) -> String {
    format!("seq_{id:04}")
}

pub fn frame_file_name(frame: u32, view: View, extension: &str) -> String {
    format!("frame_{frame:04}_{}.{extension}", view.name())
}

/// SHA-256 of the canonical (serde) JSON encoding of the generator config.
pub fn config_hash(config: &GenConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&json))
}

/// Checks that every file the manifest references exists and parses (JSON
/// bodies and binary headers). Returns the first offender as a validation
/// error naming the missing piece.
pub fn validate_manifest(root: &Path, manifest: &Manifest) -> Result<()> {
    for entry in &manifest.sequences {
        let dir = root.join(&entry.dir);
        let scene = dir.join("scene.json");
        if !scene.is_file() {
            return Err(Error::validation(
                format!("sequences[{}].scene", entry.id),
                format!("missing {scene:?}"),
            ));
        }
        load_json::<crate::scene::SceneGraph>(&scene)?;
        let poses = dir.join("poses.csv");
        if poses.is_file() {
            read_poses(&poses)?;
        }
        for frame in 0..entry.frames {
            for view in [View::Top, View::Front] {
                let lay = dir.join(frame_file_name(frame, view, "lay"));
                if !lay.is_file() {
                    return Err(Error::validation(
                        format!("sequences[{}].frame[{frame}]", entry.id),
                        format!("missing {lay:?}"),
                    ));
                }
                let data = fs::read(&lay)?;
                decode_header(&lay, &data)?;
            }
        }
    }
    Ok(())
}

/// On-disk wrapper for a stitched world: the grid geometry travels with
/// the model so downstream commands stay self-contained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldFile {
    pub grid: GridSpec,
    pub world: crate::stitch::WorldRecon,
}

/// Metadata written next to per-frame reconstruction JSON files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconMeta {
    pub grid: GridSpec,
    pub frames: u32,
    /// World position of the first frame's shelf-frame origin, when known.
    pub anchor: Option<Vec3>,
    /// Dead-reckoned content shifts per transition, from generation
    /// metadata.
    pub origin_shifts: Vec<Vec3>,
}

pub fn recon_frame_file_name(frame: u32) -> String {
    format!("frame_{frame:04}.json")
}

/// Resolves the manifest inside a dataset root.
pub fn load_manifest(root: &Path) -> Result<Manifest> {
    let path = root.join(MANIFEST_NAME);
    if !path.is_file() {
        return Err(Error::Alignment(format!(
            "no {MANIFEST_NAME} under {root:?}"
        )));
    }
    load_json(&path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn lay_round_trip_is_byte_identical() {
        let dir = tempdir().unwrap();
        let mut stack = LayoutStack::background(View::Front, 16, 2);
        stack.set(0, 3, 4, CellClass::Occupied);
        stack.set(1, 5, 9, CellClass::Unoccupied);
        let p1 = dir.path().join("a.lay");
        let p2 = dir.path().join("b.lay");
        write_lay(&p1, &stack).unwrap();
        let back = read_lay(&p1).unwrap();
        assert_eq!(back, stack);
        write_lay(&p2, &back).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn plf_round_trip_is_byte_identical() {
        let dir = tempdir().unwrap();
        let mut labels = LayoutStack::background(View::Top, 8, 1);
        labels.set(0, 1, 1, CellClass::Occupied);
        let probs = ProbabilityStack::one_hot(&labels);
        let p1 = dir.path().join("a.plf");
        let p2 = dir.path().join("b.plf");
        write_plf(&p1, &probs).unwrap();
        let back = read_plf(&p1).unwrap();
        assert_eq!(back, probs);
        write_plf(&p2, &back).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn truncated_lay_reports_format_error() {
        let dir = tempdir().unwrap();
        let stack = LayoutStack::background(View::Top, 8, 1);
        let path = dir.path().join("t.lay");
        write_lay(&path, &stack).unwrap();
        let mut data = fs::read(&path).unwrap();
        data.truncate(data.len() - 5);
        fs::write(&path, &data).unwrap();
        match read_lay(&path) {
            Err(Error::Format { offset, .. }) => assert!(offset > 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_bad_class_bytes_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.lay");
        fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(read_lay(&path), Err(Error::Format { .. })));

        let stack = LayoutStack::background(View::Top, 8, 1);
        write_lay(&path, &stack).unwrap();
        let mut data = fs::read(&path).unwrap();
        let n = data.len();
        data[n - 1] = 7;
        fs::write(&path, &data).unwrap();
        match read_lay(&path) {
            Err(Error::Format { offset, message, .. }) => {
                assert_eq!(offset as usize, n - 1);
                assert!(message.contains("7"));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn pose_csv_round_trip() {
        let dir = tempdir().unwrap();
        let poses = vec![
            CameraPose {
                position: Vec3::new(0.5, 1.5, -2.25),
                yaw: 0.0,
            },
            CameraPose {
                position: Vec3::new(1.0, 1.5, -2.25),
                yaw: 0.125,
            },
        ];
        let path = dir.path().join("poses.csv");
        write_poses(&path, &poses).unwrap();
        let back = read_poses(&path).unwrap();
        assert_eq!(back, poses);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("frame,x,y,z,yaw"));
    }

    #[test]
    fn origin_shifts_negate_origin_deltas() {
        let meta = SequenceMeta {
            scene_id: 3,
            origins: vec![
                Some(Vec3::new(1.0, 0.5, 0.0)),
                Some(Vec3::new(1.5, 0.5, 0.0)),
                None,
            ],
            visible: vec![vec![0], vec![0, 1], vec![]],
        };
        let shifts = meta.origin_shifts();
        assert_eq!(shifts.len(), 2);
        assert_eq!(shifts[0], Vec3::new(-0.5, 0.0, 0.0));
        assert_eq!(shifts[1], Vec3::ZERO);
    }
}
