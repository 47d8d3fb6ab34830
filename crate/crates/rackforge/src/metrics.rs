//! Segmentation metrics over layout stacks: mean intersection-over-union
//! and pixel-level average precision, reported per view and per class in
//! the shape of the quantitative results table.
//!
//! The `Rack` class covers the shelf extent (occupied ∪ unoccupied cells),
//! the `Box` class covers occupied cells only. IoU averages per frame per
//! channel over non-empty ground truth; AP pools all cells of a channel
//! across frames, sweeps thresholds over the class-probability scores and
//! integrates the precision-recall curve by the trapezoidal rule.

use crate::error::{Error, Result};
use crate::grid::{CellClass, LayoutStack, ProbabilityStack, View};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Evaluated semantic class, as used in the results table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutClass {
    /// Shelf extent: occupied or unoccupied cells.
    Rack,
    /// Box occupancy: occupied cells only.
    Box,
}

impl LayoutClass {
    #[inline]
    pub fn matches(self, cell: CellClass) -> bool {
        match self {
            LayoutClass::Rack => cell != CellClass::Background,
            LayoutClass::Box => cell == CellClass::Occupied,
        }
    }

    /// Probability mass assigned to this class by a cell's triple.
    #[inline]
    pub fn score(self, p: [f32; 3]) -> f64 {
        match self {
            LayoutClass::Rack => p[1] as f64 + p[2] as f64,
            LayoutClass::Box => p[2] as f64,
        }
    }
}

/// Mean IoU between predicted and true class masks, in percent.
///
/// Pairs whose view differs from `view` are skipped; within each selected
/// pair, every channel with non-empty ground truth contributes one IoU
/// term. Errors with `UndefinedMetric` when no channel anywhere has
/// ground-truth support.
pub fn miou(
    preds: &[LayoutStack],
    truths: &[LayoutStack],
    class: LayoutClass,
    view: View,
) -> Result<f64> {
    if preds.len() != truths.len() {
        return Err(Error::Shape(format!(
            "dataset size mismatch: {} predictions vs {} truths",
            preds.len(),
            truths.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, t) in preds.iter().zip(truths) {
        if t.view != view {
            continue;
        }
        if !p.same_shape(t) {
            return Err(Error::Shape(
                "prediction stack shape does not match truth".into(),
            ));
        }
        for ch in 0..t.num_channels() {
            if let Some(iou) = channel_iou(p.channel(ch), t.channel(ch), class) {
                sum += iou;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::UndefinedMetric(format!(
            "no frame with non-empty {class:?} ground truth in the {} view",
            view.name()
        )));
    }
    Ok(100.0 * sum / count as f64)
}

/// Pixel-level average precision in percent: per channel, all cells across
/// frames are pooled, scored by the class probability, and the area under
/// the precision-recall curve is taken; channels without positive ground
/// truth are skipped and the rest are averaged.
pub fn average_precision(
    preds: &[ProbabilityStack],
    truths: &[LayoutStack],
    class: LayoutClass,
    view: View,
) -> Result<f64> {
    if preds.len() != truths.len() {
        return Err(Error::Shape(format!(
            "dataset size mismatch: {} predictions vs {} truths",
            preds.len(),
            truths.len()
        )));
    }
    let mut num_channels = 0usize;
    for (p, t) in preds.iter().zip(truths) {
        if t.view != view {
            continue;
        }
        if !p.same_shape_as_labels(t) {
            return Err(Error::Shape(
                "prediction stack shape does not match truth".into(),
            ));
        }
        num_channels = num_channels.max(t.num_channels());
    }

    let mut accs: Vec<ApAccumulator> = (0..num_channels).map(|_| ApAccumulator::new()).collect();
    for (p, t) in preds.iter().zip(truths) {
        if t.view != view {
            continue;
        }
        for ch in 0..t.num_channels() {
            accs[ch].add_channel(p.channel(ch), t.channel(ch), class);
        }
    }
    let aps: Vec<f64> = accs.iter().filter_map(|a| a.average_precision()).collect();
    if aps.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "no positive {class:?} ground truth in the {} view",
            view.name()
        )));
    }
    Ok(100.0 * aps.iter().sum::<f64>() / aps.len() as f64)
}

/// IoU of the class masks of one channel pair; `None` when the ground-truth
/// mask is empty.
pub fn channel_iou(pred: &[CellClass], truth: &[CellClass], class: LayoutClass) -> Option<f64> {
    let mut inter = 0usize;
    let mut union = 0usize;
    let mut gt = 0usize;
    for (pc, tc) in pred.iter().zip(truth) {
        let pm = class.matches(*pc);
        let tm = class.matches(*tc);
        gt += tm as usize;
        inter += (pm && tm) as usize;
        union += (pm || tm) as usize;
    }
    if gt == 0 {
        None
    } else {
        Some(inter as f64 / union as f64)
    }
}

/// Streaming accumulator for one pixel-level precision-recall curve.
/// Cells are grouped by exact score (non-negative f64 bit patterns sort
/// numerically), so AP stays exact while memory tracks the number of
/// distinct scores rather than the number of cells.
#[derive(Clone, Debug, Default)]
pub struct ApAccumulator {
    counts: BTreeMap<u64, (u64, u64)>,
    positives: u64,
}

impl ApAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, score: f64, positive: bool) {
        debug_assert!(score >= 0.0, "scores must be non-negative");
        let entry = self.counts.entry(score.to_bits()).or_insert((0, 0));
        if positive {
            entry.0 += 1;
            self.positives += 1;
        } else {
            entry.1 += 1;
        }
    }

    pub fn add_channel(&mut self, pred: &[[f32; 3]], truth: &[CellClass], class: LayoutClass) {
        for (pc, tc) in pred.iter().zip(truth) {
            self.add(class.score(*pc), class.matches(*tc));
        }
    }

    pub fn merge(&mut self, other: ApAccumulator) {
        self.positives += other.positives;
        for (bits, (pos, neg)) in other.counts {
            let entry = self.counts.entry(bits).or_insert((0, 0));
            entry.0 += pos;
            entry.1 += neg;
        }
    }

    /// Area under the PR curve by the trapezoidal rule, sweeping the
    /// distinct scores from high to low; `None` without positive support.
    pub fn average_precision(&self) -> Option<f64> {
        if self.positives == 0 {
            return None;
        }
        let mut ap = 0.0;
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut prev_r = 0.0f64;
        let mut prev_p: Option<f64> = None;
        for (&_bits, &(pos, neg)) in self.counts.iter().rev() {
            tp += pos;
            fp += neg;
            let recall = tp as f64 / self.positives as f64;
            let precision = tp as f64 / (tp + fp) as f64;
            let anchor = prev_p.unwrap_or(precision);
            ap += (recall - prev_r) * (precision + anchor) / 2.0;
            prev_r = recall;
            prev_p = Some(precision);
        }
        Some(ap)
    }
}

/// mIoU and mAP for one (view, class) cell of the results table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub miou: f64,
    pub map: f64,
}

/// Rack and box metrics for one view.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewMetrics {
    pub rack: ClassMetrics,
    #[serde(rename = "box")]
    pub boxes: ClassMetrics,
}

/// Full results table: per view × class, mIoU and mAP percentages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub top: ViewMetrics,
    pub front: ViewMetrics,
}

impl MetricsTable {
    /// The eight table cells in a fixed order: top rack (mIoU, mAP), top
    /// box, front rack, front box.
    pub fn cells(&self) -> [f64; 8] {
        [
            self.top.rack.miou,
            self.top.rack.map,
            self.top.boxes.miou,
            self.top.boxes.map,
            self.front.rack.miou,
            self.front.rack.map,
            self.front.boxes.miou,
            self.front.boxes.map,
        ]
    }

    /// Plain-text rendering in the layout of the results table.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("              Top View              Front View\n");
        out.push_str("          Rack        Box        Rack        Box\n");
        out.push_str("        mIoU  mAP   mIoU  mAP   mIoU  mAP   mIoU  mAP\n");
        let c = self.cells();
        out.push_str(&format!(
            "       {:6.2} {:6.2} {:6.2} {:6.2} {:6.2} {:6.2} {:6.2} {:6.2}\n",
            c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]
        ));
        out
    }
}

/// Streaming builder for the full metrics table: feed aligned
/// (hard prediction, probability prediction, truth) frames one at a time,
/// then `finish`. Equivalent to the standalone [`miou`] /
/// [`average_precision`] calls but without holding the dataset in memory.
#[derive(Default)]
pub struct MetricsAccumulator {
    // Indexed by [view][class]: view 0 = top, class 0 = rack.
    iou_sum: [[f64; 2]; 2],
    iou_count: [[usize; 2]; 2],
    ap: [[Vec<ApAccumulator>; 2]; 2],
}

impl MetricsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_frame(
        &mut self,
        pred_hard: &LayoutStack,
        pred_prob: &ProbabilityStack,
        truth: &LayoutStack,
    ) -> Result<()> {
        if !pred_hard.same_shape(truth) || !pred_prob.same_shape_as_labels(truth) {
            return Err(Error::Shape(
                "prediction stacks do not match the truth shape".into(),
            ));
        }
        let vi = truth.view.tag() as usize;
        for (ci, class) in [LayoutClass::Rack, LayoutClass::Box].into_iter().enumerate() {
            let ap_by_channel = &mut self.ap[vi][ci];
            while ap_by_channel.len() < truth.num_channels() {
                ap_by_channel.push(ApAccumulator::new());
            }
            for ch in 0..truth.num_channels() {
                if let Some(iou) = channel_iou(pred_hard.channel(ch), truth.channel(ch), class) {
                    self.iou_sum[vi][ci] += iou;
                    self.iou_count[vi][ci] += 1;
                }
                ap_by_channel[ch].add_channel(pred_prob.channel(ch), truth.channel(ch), class);
            }
        }
        Ok(())
    }

    /// Combines two accumulators; summation commutes, so any partition of
    /// the dataset merges to the same table.
    pub fn merge(&mut self, other: MetricsAccumulator) {
        for vi in 0..2 {
            for ci in 0..2 {
                self.iou_sum[vi][ci] += other.iou_sum[vi][ci];
                self.iou_count[vi][ci] += other.iou_count[vi][ci];
            }
        }
        for (vi, by_class) in other.ap.into_iter().enumerate() {
            for (ci, channels) in by_class.into_iter().enumerate() {
                let mine = &mut self.ap[vi][ci];
                while mine.len() < channels.len() {
                    mine.push(ApAccumulator::new());
                }
                for (ch, acc) in channels.into_iter().enumerate() {
                    mine[ch].merge(acc);
                }
            }
        }
    }

    pub fn finish(&self) -> Result<MetricsTable> {
        let cell = |vi: usize, ci: usize| -> Result<ClassMetrics> {
            let (view, class) = (
                if vi == 0 { View::Top } else { View::Front },
                if ci == 0 { LayoutClass::Rack } else { LayoutClass::Box },
            );
            if self.iou_count[vi][ci] == 0 {
                return Err(Error::UndefinedMetric(format!(
                    "no frame with non-empty {class:?} ground truth in the {} view",
                    view.name()
                )));
            }
            let aps: Vec<f64> = self.ap[vi][ci]
                .iter()
                .filter_map(|a| a.average_precision())
                .collect();
            if aps.is_empty() {
                return Err(Error::UndefinedMetric(format!(
                    "no positive {class:?} ground truth in the {} view",
                    view.name()
                )));
            }
            Ok(ClassMetrics {
                miou: 100.0 * self.iou_sum[vi][ci] / self.iou_count[vi][ci] as f64,
                map: 100.0 * aps.iter().sum::<f64>() / aps.len() as f64,
            })
        };
        Ok(MetricsTable {
            top: ViewMetrics {
                rack: cell(0, 0)?,
                boxes: cell(0, 1)?,
            },
            front: ViewMetrics {
                rack: cell(1, 0)?,
                boxes: cell(1, 1)?,
            },
        })
    }
}

/// Computes all eight table cells from aligned in-memory stacks. The hard
/// predictions drive mIoU, the probability stacks drive mAP; both lists
/// must align index-for-index with `truths`.
pub fn evaluate_stacks(
    pred_hard: &[LayoutStack],
    pred_prob: &[ProbabilityStack],
    truths: &[LayoutStack],
) -> Result<MetricsTable> {
    if pred_hard.len() != truths.len() || pred_prob.len() != truths.len() {
        return Err(Error::Shape("dataset size mismatch".into()));
    }
    let mut acc = MetricsAccumulator::new();
    for ((h, p), t) in pred_hard.iter().zip(pred_prob).zip(truths) {
        acc.add_frame(h, p, t)?;
    }
    acc.finish()
}
