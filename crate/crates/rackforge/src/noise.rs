//! Predictor simulator: seeded, parameterized degradation of ground-truth
//! stacks into the kind of imperfect hard labels and calibrated
//! probabilities a trained layout network would emit.
//!
//! Degradations apply in a fixed order so tests stay order-stable:
//! box dropout → boundary morphology → false-positive blobs → label flips
//! → probability softening.

use crate::error::{Error, Result};
use crate::grid::{CellClass, LayoutStack, ProbabilityStack};
use crate::synth::{derive_seed, RangeU};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

const NOISE_SALT: u64 = 0x401e_5e;

/// Degradation parameters. All probabilities are per the unit they name;
/// `temperature` controls how soft the emitted probabilities are (small
/// values are effectively one-hot).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Probability that a connected occupied component disappears.
    pub box_dropout: f64,
    /// Per-channel probability of boundary erosion.
    pub erosion_prob: f64,
    /// Per-channel probability of boundary dilation.
    pub dilation_prob: f64,
    /// Radius of the square structuring element, cells.
    pub morph_radius: RangeU,
    /// Expected number of false-positive blobs per channel (Poisson rate).
    pub blob_rate: f64,
    /// Blob side length range, cells.
    pub blob_size: RangeU,
    /// Per-cell label flip probability.
    pub flip_prob: f64,
    /// Forced flip targets per class; `None` flips uniformly to one of the
    /// other two classes. An entry equal to its own class leaves that class
    /// alone.
    pub flip_table: Option<[CellClass; 3]>,
    /// Softmax temperature of the emitted probabilities; > 0.
    pub temperature: f64,
    pub seed: u64,
}

impl NoiseConfig {
    /// Identity degradation: output equals input with one-hot
    /// probabilities (the tiny temperature underflows to exact one-hot).
    pub fn noiseless() -> Self {
        NoiseConfig {
            box_dropout: 0.0,
            erosion_prob: 0.0,
            dilation_prob: 0.0,
            morph_radius: RangeU::fixed(0),
            blob_rate: 0.0,
            blob_size: RangeU::fixed(0),
            flip_prob: 0.0,
            flip_table: None,
            temperature: 1e-3,
            seed: 0,
        }
    }

    /// The repository's calibrated reference degradation ("NoiseConfig A"):
    /// mild boundary noise, occasional spurious blobs and box dropouts.
    pub fn calibrated_a() -> Self {
        NoiseConfig {
            box_dropout: 0.02,
            erosion_prob: 0.25,
            dilation_prob: 0.15,
            morph_radius: RangeU::fixed(1),
            blob_rate: 0.3,
            blob_size: RangeU::new(2, 4),
            flip_prob: 0.01,
            flip_table: None,
            temperature: 0.25,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("box_dropout", self.box_dropout),
            ("erosion_prob", self.erosion_prob),
            ("dilation_prob", self.dilation_prob),
            ("flip_prob", self.flip_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.erosion_prob + self.dilation_prob > 1.0 {
            return Err(Error::InvalidConfig(
                "erosion_prob + dilation_prob must not exceed 1".into(),
            ));
        }
        if self.blob_rate < 0.0 {
            return Err(Error::InvalidConfig("blob_rate must be non-negative".into()));
        }
        if !(self.temperature > 0.0 && self.temperature <= 100.0) {
            return Err(Error::InvalidConfig(format!(
                "temperature must lie in (0, 100], got {}",
                self.temperature
            )));
        }
        if self.morph_radius.min > self.morph_radius.max || self.blob_size.min > self.blob_size.max
        {
            return Err(Error::InvalidConfig("empty radius/size range".into()));
        }
        Ok(())
    }

    /// Probability assigned to the emitted hard label and to each of the
    /// other two classes. Always `hit > miss`, so argmax recovers the label.
    pub fn probability_pair(&self) -> (f32, f32) {
        let b = (-1.0 / self.temperature).exp();
        let denom = 1.0 + 2.0 * b;
        ((1.0 / denom) as f32, (b / denom) as f32)
    }
}

/// Degrades one ground-truth stack. Deterministic in (stack content, view,
/// frame index, config); the emitted hard labels always equal the argmax of
/// the emitted probabilities.
pub fn degrade(truth: &LayoutStack, cfg: &NoiseConfig) -> Result<(LayoutStack, ProbabilityStack)> {
    cfg.validate()?;
    let stream = (truth.frame_index as u64) << 1 | truth.view.tag() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, stream, NOISE_SALT));
    let d = truth.resolution() as usize;
    let mut labels = truth.clone();

    for ch in 0..labels.num_channels() {
        // Stage 1: box dropout on connected occupied components.
        if cfg.box_dropout > 0.0 {
            let occupied: Vec<bool> = labels
                .channel(ch)
                .iter()
                .map(|&c| c == CellClass::Occupied)
                .collect();
            for comp in components4(&occupied, d) {
                if rng.random::<f64>() < cfg.box_dropout {
                    let cells = labels.channel_mut(ch);
                    for i in comp {
                        cells[i] = CellClass::Unoccupied;
                    }
                }
            }
        }

        // Stage 2: boundary morphology on the occupied mask.
        if cfg.erosion_prob > 0.0 || cfg.dilation_prob > 0.0 {
            let u = rng.random::<f64>();
            let radius = cfg.morph_radius.sample(&mut rng);
            if radius > 0 {
                if u < cfg.erosion_prob {
                    erode(labels.channel_mut(ch), d, radius as usize);
                } else if u < cfg.erosion_prob + cfg.dilation_prob {
                    dilate(labels.channel_mut(ch), d, radius as usize);
                }
            }
        }

        // Stage 3: false-positive blobs.
        if cfg.blob_rate > 0.0 {
            let poisson = Poisson::new(cfg.blob_rate)
                .map_err(|e| Error::InvalidConfig(format!("blob rate: {e}")))?;
            let count = (poisson.sample(&mut rng) as usize).min(64);
            for _ in 0..count {
                let w = (cfg.blob_size.sample(&mut rng) as usize).clamp(1, d);
                let h = (cfg.blob_size.sample(&mut rng) as usize).clamp(1, d);
                let r0 = rng.random_range(0..=(d - h));
                let c0 = rng.random_range(0..=(d - w));
                let cells = labels.channel_mut(ch);
                for r in r0..r0 + h {
                    for c in c0..c0 + w {
                        cells[r * d + c] = CellClass::Occupied;
                    }
                }
            }
        }

        // Stage 4: per-cell label flips.
        if cfg.flip_prob > 0.0 {
            let table = cfg.flip_table;
            let cells = labels.channel_mut(ch);
            for cell in cells.iter_mut() {
                if rng.random::<f64>() >= cfg.flip_prob {
                    continue;
                }
                *cell = match table {
                    Some(t) => t[cell.index()],
                    None => {
                        let others: [CellClass; 2] = match *cell {
                            CellClass::Background => [CellClass::Unoccupied, CellClass::Occupied],
                            CellClass::Unoccupied => [CellClass::Background, CellClass::Occupied],
                            CellClass::Occupied => [CellClass::Background, CellClass::Unoccupied],
                        };
                        others[rng.random_range(0..2usize)]
                    }
                };
            }
        }
    }

    // Stage 5: probability softening around the final hard labels.
    let (hit, miss) = cfg.probability_pair();
    let channels = (0..labels.num_channels())
        .map(|ch| {
            labels
                .channel(ch)
                .iter()
                .map(|&c| {
                    let mut p = [miss; 3];
                    p[c.index()] = hit;
                    p
                })
                .collect()
        })
        .collect();
    let mut probs = ProbabilityStack::from_channels(labels.view, labels.resolution(), channels)?;
    probs.frame_index = labels.frame_index;
    Ok((labels, probs))
}

/// 4-connected components of a boolean mask; each component is a list of
/// flat indices in scan order.
fn components4(mask: &[bool], d: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = vec![start];
        seen[start] = true;
        while let Some(i) = queue.pop() {
            comp.push(i);
            let (r, c) = (i / d, i % d);
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
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Erosion with a square structuring element: occupied cells whose
/// Chebyshev-`radius` neighborhood is not fully occupied become unoccupied.
fn erode(cells: &mut [CellClass], d: usize, radius: usize) {
    let occ: Vec<bool> = cells.iter().map(|&c| c == CellClass::Occupied).collect();
    for r in 0..d {
        for c in 0..d {
            let i = r * d + c;
            if !occ[i] {
                continue;
            }
            let mut keep = r >= radius && c >= radius && r + radius < d && c + radius < d;
            if keep {
                'scan: for rr in r - radius..=r + radius {
                    for cc in c - radius..=c + radius {
                        if !occ[rr * d + cc] {
                            keep = false;
                            break 'scan;
                        }
                    }
                }
            }
            if !keep {
                cells[i] = CellClass::Unoccupied;
            }
        }
    }
}

/// Dilation with a square structuring element: any cell within Chebyshev
/// `radius` of an occupied cell becomes occupied.
fn dilate(cells: &mut [CellClass], d: usize, radius: usize) {
    let occ: Vec<bool> = cells.iter().map(|&c| c == CellClass::Occupied).collect();
    for r in 0..d {
        for c in 0..d {
            let i = r * d + c;
            if occ[i] {
                continue;
            }
            let r0 = r.saturating_sub(radius);
            let c0 = c.saturating_sub(radius);
            let r1 = (r + radius).min(d - 1);
            let c1 = (c + radius).min(d - 1);
            let mut near = false;
            'scan: for rr in r0..=r1 {
                for cc in c0..=c1 {
                    if occ[rr * d + cc] {
                        near = true;
                        break 'scan;
                    }
                }
            }
            if near {
                cells[i] = CellClass::Occupied;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::View;
    use crate::metrics::{miou, LayoutClass};

    fn square_stack(d: u32, r0: u32, c0: u32, side: u32) -> LayoutStack {
        let mut s = LayoutStack::background(View::Top, d, 1);
        // Shelf everywhere so eroded/dropped cells become unoccupied ground.
        for i in 0..s.cells_per_channel() {
            s.channel_mut(0)[i] = CellClass::Unoccupied;
        }
        for r in r0..r0 + side {
            for c in c0..c0 + side {
                s.set(0, r, c, CellClass::Occupied);
            }
        }
        s
    }

    #[test]
    fn zero_noise_is_identity_with_one_hot_probabilities() {
        let truth = square_stack(16, 4, 4, 8);
        let (labels, probs) = degrade(&truth, &NoiseConfig::noiseless()).unwrap();
        assert_eq!(labels, truth);
        for i in 0..truth.cells_per_channel() {
            let p = probs.channel(0)[i];
            let expect = truth.channel(0)[i].index();
            for k in 0..3 {
                assert_eq!(p[k], if k == expect { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn forced_two_class_flip_table_swaps_every_foreground_cell() {
        let truth = square_stack(16, 4, 4, 8);
        let mut cfg = NoiseConfig::noiseless();
        cfg.flip_prob = 1.0;
        cfg.flip_table = Some([
            CellClass::Background,
            CellClass::Occupied,
            CellClass::Unoccupied,
        ]);
        let (labels, _) = degrade(&truth, &cfg).unwrap();
        for i in 0..truth.cells_per_channel() {
            let before = truth.channel(0)[i];
            let after = labels.channel(0)[i];
            match before {
                CellClass::Background => assert_eq!(after, CellClass::Background),
                CellClass::Unoccupied => assert_eq!(after, CellClass::Occupied),
                CellClass::Occupied => assert_eq!(after, CellClass::Unoccupied),
            }
        }
    }

    #[test]
    fn erosion_radius_one_shrinks_8x8_to_6x6() {
        let truth = square_stack(16, 4, 4, 8);
        let mut cfg = NoiseConfig::noiseless();
        cfg.erosion_prob = 1.0;
        cfg.morph_radius = RangeU::fixed(1);
        let (labels, _) = degrade(&truth, &cfg).unwrap();

        // Morphological oracle evaluated directly from the definition.
        let d = 16usize;
        for r in 0..d {
            for c in 0..d {
                let occ = |rr: i64, cc: i64| {
                    rr >= 0
                        && cc >= 0
                        && (rr as usize) < d
                        && (cc as usize) < d
                        && truth.get(0, rr as u32, cc as u32) == CellClass::Occupied
                };
                let mut expect = occ(r as i64, c as i64);
                if expect {
                    for dr in -1i64..=1 {
                        for dc in -1i64..=1 {
                            expect &= occ(r as i64 + dr, c as i64 + dc);
                        }
                    }
                }
                assert_eq!(
                    labels.get(0, r as u32, c as u32) == CellClass::Occupied,
                    expect,
                    "r={r} c={c}"
                );
            }
        }
        let occupied = labels.class_counts(0)[CellClass::Occupied.index()];
        assert_eq!(occupied, 36);
    }

    #[test]
    fn hard_labels_always_match_probability_argmax() {
        let truth = square_stack(32, 6, 6, 12);
        let mut cfg = NoiseConfig::calibrated_a();
        for seed in 0..10 {
            cfg.seed = seed;
            let (labels, probs) = degrade(&truth, &cfg).unwrap();
            probs.validate(1e-6).unwrap();
            assert_eq!(probs.argmax(), labels, "seed {seed}");
        }
    }

    #[test]
    fn degradation_is_deterministic() {
        let truth = square_stack(32, 6, 6, 12);
        let cfg = NoiseConfig::calibrated_a();
        let (a_labels, a_probs) = degrade(&truth, &cfg).unwrap();
        let (b_labels, b_probs) = degrade(&truth, &cfg).unwrap();
        assert_eq!(a_labels, b_labels);
        assert_eq!(a_probs, b_probs);
    }

    #[test]
    fn miou_degrades_monotonically_with_flip_probability() {
        let truth = square_stack(32, 6, 6, 12);
        let sweep = [0.0, 0.02, 0.05, 0.1];
        let mut means = Vec::new();
        for &flip in &sweep {
            let mut acc = 0.0;
            for seed in 0..20 {
                let mut cfg = NoiseConfig::noiseless();
                cfg.flip_prob = flip;
                cfg.seed = seed;
                let (labels, _) = degrade(&truth, &cfg).unwrap();
                acc += miou(&[labels], &[truth.clone()], LayoutClass::Box, View::Top).unwrap();
            }
            means.push(acc / 20.0);
        }
        for pair in means.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "mIoU must not increase with flip probability: {means:?}"
            );
        }
        assert!(means[0] > means[3], "sweep endpoints must differ: {means:?}");
    }
}
