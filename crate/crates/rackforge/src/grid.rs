//! Layout grids: R × D × D stacks of cell classes or class probabilities.
//!
//! Each stack covers one view (top or front) of one frame. Channel `i`
//! holds shelf level `i`, counted from the ground up; channels for shelf
//! levels absent from the scene stay all-background.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which projection a layout stack encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Top,
    Front,
}

impl View {
    /// Tag byte used by the binary formats (0 = top, 1 = front).
    pub fn tag(self) -> u8 {
        match self {
            View::Top => 0,
            View::Front => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<View> {
        match tag {
            0 => Some(View::Top),
            1 => Some(View::Front),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            View::Top => "top",
            View::Front => "front",
        }
    }
}

/// Semantic class of one layout cell. Serialized as integers 0, 1, 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellClass {
    Background = 0,
    Unoccupied = 1,
    Occupied = 2,
}

impl CellClass {
    pub const COUNT: usize = 3;
    pub const ALL: [CellClass; 3] = [CellClass::Background, CellClass::Unoccupied, CellClass::Occupied];

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_u8(v: u8) -> Option<CellClass> {
        match v {
            0 => Some(CellClass::Background),
            1 => Some(CellClass::Unoccupied),
            2 => Some(CellClass::Occupied),
            _ => None,
        }
    }
}

fn default_top_clearance() -> f64 {
    2.0
}

/// Geometry of the layout grids: a square region of interest `extent`
/// meters per side, discretized into `resolution` × `resolution` cells,
/// with up to `num_shelves` channels per stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Cells per grid side (D).
    pub resolution: u32,
    /// Physical side length of the region of interest in meters.
    pub extent: f64,
    /// Maximum number of shelf channels (R).
    pub num_shelves: u32,
    /// Vertical band height granted to the topmost shelf of a rack in the
    /// front view, meters.
    #[serde(default = "default_top_clearance")]
    pub top_clearance: f64,
}

impl GridSpec {
    pub fn new(resolution: u32, extent: f64, num_shelves: u32) -> Result<Self> {
        let spec = GridSpec {
            resolution,
            extent,
            num_shelves,
            top_clearance: default_top_clearance(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 8 {
            return Err(Error::InvalidConfig(format!(
                "grid resolution must be >= 8, got {}",
                self.resolution
            )));
        }
        if !(self.extent > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid extent must be positive, got {}",
                self.extent
            )));
        }
        if self.num_shelves < 1 {
            return Err(Error::InvalidConfig("num_shelves must be >= 1".into()));
        }
        if !(self.top_clearance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "top clearance must be positive, got {}",
                self.top_clearance
            )));
        }
        Ok(())
    }

    pub fn meters_per_cell(&self) -> f64 {
        self.extent / self.resolution as f64
    }

    pub fn cells_per_channel(&self) -> usize {
        (self.resolution as usize) * (self.resolution as usize)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            resolution: 256,
            extent: 10.0,
            num_shelves: 3,
            top_clearance: default_top_clearance(),
        }
    }
}

/// Hard-label layout stack: `num_channels` grids of `resolution`² cell
/// classes, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayoutStack {
    pub view: View,
    pub frame_index: usize,
    resolution: u32,
    channels: Vec<Vec<CellClass>>,
}

impl LayoutStack {
    /// All-background stack with `num_channels` channels.
    pub fn background(view: View, resolution: u32, num_channels: u32) -> Self {
        let cells = (resolution as usize) * (resolution as usize);
        LayoutStack {
            view,
            frame_index: 0,
            resolution,
            channels: vec![vec![CellClass::Background; cells]; num_channels as usize],
        }
    }

    pub fn from_channels(view: View, resolution: u32, channels: Vec<Vec<CellClass>>) -> Result<Self> {
        let cells = (resolution as usize) * (resolution as usize);
        for (i, ch) in channels.iter().enumerate() {
            if ch.len() != cells {
                return Err(Error::Shape(format!(
                    "channel {i} has {} cells, expected {cells}",
                    ch.len()
                )));
            }
        }
        Ok(LayoutStack {
            view,
            frame_index: 0,
            resolution,
            channels,
        })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn cells_per_channel(&self) -> usize {
        (self.resolution as usize) * (self.resolution as usize)
    }

    #[inline]
    fn idx(&self, row: u32, col: u32) -> usize {
        debug_assert!(row < self.resolution && col < self.resolution);
        row as usize * self.resolution as usize + col as usize
    }

    #[inline]
    pub fn get(&self, channel: usize, row: u32, col: u32) -> CellClass {
        self.channels[channel][self.idx(row, col)]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, row: u32, col: u32, class: CellClass) {
        let i = self.idx(row, col);
        self.channels[channel][i] = class;
    }

    pub fn channel(&self, channel: usize) -> &[CellClass] {
        &self.channels[channel]
    }

    pub fn channel_mut(&mut self, channel: usize) -> &mut [CellClass] {
        &mut self.channels[channel]
    }

    /// Cell counts per class for one channel; the three always sum to D².
    pub fn class_counts(&self, channel: usize) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for c in &self.channels[channel] {
            counts[c.index()] += 1;
        }
        counts
    }

    pub fn is_all_background(&self) -> bool {
        self.channels
            .iter()
            .all(|ch| ch.iter().all(|&c| c == CellClass::Background))
    }

    /// Shape equality: same view, resolution and channel count.
    pub fn same_shape(&self, other: &LayoutStack) -> bool {
        self.view == other.view
            && self.resolution == other.resolution
            && self.channels.len() == other.channels.len()
    }
}

/// Per-cell probability triple over [`CellClass`], stored as `f32` to match
/// the on-disk format exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityStack {
    pub view: View,
    pub frame_index: usize,
    resolution: u32,
    channels: Vec<Vec<[f32; 3]>>,
}

impl ProbabilityStack {
    /// One-hot probabilities matching a hard-label stack.
    pub fn one_hot(labels: &LayoutStack) -> Self {
        let channels = (0..labels.num_channels())
            .map(|ch| {
                labels
                    .channel(ch)
                    .iter()
                    .map(|&c| {
                        let mut p = [0.0f32; 3];
                        p[c.index()] = 1.0;
                        p
                    })
                    .collect()
            })
            .collect();
        ProbabilityStack {
            view: labels.view,
            frame_index: labels.frame_index,
            resolution: labels.resolution(),
            channels,
        }
    }

    pub fn from_channels(
        view: View,
        resolution: u32,
        channels: Vec<Vec<[f32; 3]>>,
    ) -> Result<Self> {
        let cells = (resolution as usize) * (resolution as usize);
        for (i, ch) in channels.iter().enumerate() {
            if ch.len() != cells {
                return Err(Error::Shape(format!(
                    "channel {i} has {} cells, expected {cells}",
                    ch.len()
                )));
            }
        }
        Ok(ProbabilityStack {
            view,
            frame_index: 0,
            resolution,
            channels,
        })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, channel: usize) -> &[[f32; 3]] {
        &self.channels[channel]
    }

    pub fn channel_mut(&mut self, channel: usize) -> &mut [[f32; 3]] {
        &mut self.channels[channel]
    }

    pub fn get(&self, channel: usize, row: u32, col: u32) -> [f32; 3] {
        self.channels[channel][row as usize * self.resolution as usize + col as usize]
    }

    /// Hard labels by probability argmax; ties break toward the lower
    /// class id.
    pub fn argmax(&self) -> LayoutStack {
        let channels = self
            .channels
            .iter()
            .map(|ch| {
                ch.iter()
                    .map(|p| {
                        let mut best = 0usize;
                        for k in 1..3 {
                            if p[k] > p[best] {
                                best = k;
                            }
                        }
                        CellClass::from_u8(best as u8).unwrap()
                    })
                    .collect()
            })
            .collect();
        LayoutStack {
            view: self.view,
            frame_index: self.frame_index,
            resolution: self.resolution,
            channels,
        }
    }

    /// Checks every cell is a probability vector: entries >= 0 summing to 1
    /// within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (i, ch) in self.channels.iter().enumerate() {
            for (j, p) in ch.iter().enumerate() {
                let sum = p.iter().map(|&v| v as f64).sum::<f64>();
                if p.iter().any(|&v| v < 0.0 || !v.is_finite()) || (sum - 1.0).abs() > tol {
                    return Err(Error::Validation {
                        field: format!("channel[{i}].cell[{j}]"),
                        message: format!("invalid probability triple {p:?} (sum {sum})"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &ProbabilityStack) -> bool {
        self.view == other.view
            && self.resolution == other.resolution
            && self.channels.len() == other.channels.len()
    }

    pub fn same_shape_as_labels(&self, labels: &LayoutStack) -> bool {
        self.view == labels.view
            && self.resolution == labels.resolution()
            && self.channels.len() == labels.num_channels()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_partition_sums_to_d_squared() {
        let mut stack = LayoutStack::background(View::Top, 16, 3);
        stack.set(0, 3, 4, CellClass::Occupied);
        stack.set(0, 3, 5, CellClass::Unoccupied);
        let counts = stack.class_counts(0);
        assert_eq!(counts.iter().sum::<usize>(), 256);
        assert_eq!(counts, [254, 1, 1]);
    }

    #[test]
    fn grid_spec_rejects_bad_values() {
        assert!(GridSpec::new(4, 10.0, 3).is_err());
        assert!(GridSpec::new(32, 0.0, 3).is_err());
        assert!(GridSpec::new(32, 10.0, 0).is_err());
        let spec = GridSpec::new(32, 4.0, 3).unwrap();
        assert!((spec.meters_per_cell() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn argmax_breaks_ties_toward_lower_class() {
        let cells = vec![[0.4f32, 0.4, 0.2], [0.2, 0.4, 0.4], [0.1, 0.2, 0.7]];
        let stack = ProbabilityStack::from_channels(View::Top, 8, vec![{
            let mut v = vec![[1.0f32, 0.0, 0.0]; 64];
            v[..3].copy_from_slice(&cells);
            v
        }])
        .unwrap();
        let labels = stack.argmax();
        assert_eq!(labels.channel(0)[0], CellClass::Background);
        assert_eq!(labels.channel(0)[1], CellClass::Unoccupied);
        assert_eq!(labels.channel(0)[2], CellClass::Occupied);
    }

    #[test]
    fn one_hot_round_trips_through_argmax() {
        let mut labels = LayoutStack::background(View::Front, 8, 2);
        labels.set(1, 0, 0, CellClass::Occupied);
        labels.set(0, 7, 7, CellClass::Unoccupied);
        let probs = ProbabilityStack::one_hot(&labels);
        probs.validate(1e-6).unwrap();
        assert_eq!(probs.argmax(), labels);
    }
}
