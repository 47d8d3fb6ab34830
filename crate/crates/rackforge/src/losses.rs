//! Reference numeric kernels for the training losses, with analytic
//! gradients and a central-difference gradient checker.
//!
//! All kernels are pure scalar reductions over probability stacks or
//! discriminator outputs. Per-channel aggregation uses the mean over the
//! D² cells so magnitudes stay independent of the grid resolution.

use crate::error::{Error, Result};
use crate::grid::{CellClass, LayoutStack, ProbabilityStack};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Additive smoothing inside every logarithm.
pub const PROB_EPSILON: f64 = 1e-12;

/// Pairwise divergence used between two predicted distributions in the
/// consistency losses. The default is the symmetric KL form, which is zero
/// exactly when the two distributions agree; a squared-error alternative is
/// available behind this switch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseDivergence {
    #[default]
    SymmetricKl,
    SquaredError,
}

#[inline]
fn smoothed(p: f64) -> f64 {
    // Clamp so a perfect probability of 1.0 yields exactly zero loss and
    // every term stays non-negative.
    (p + PROB_EPSILON).min(1.0)
}

/// Per-cell supervised divergence: −log of the probability assigned to the
/// true class.
pub fn cell_divergence(p: [f64; 3], truth: CellClass) -> f64 {
    -smoothed(p[truth.index()]).ln()
}

/// Analytic gradient of [`cell_divergence`] with respect to the probability
/// vector.
pub fn cell_divergence_grad(p: [f64; 3], truth: CellClass) -> [f64; 3] {
    let mut g = [0.0; 3];
    let t = truth.index();
    if p[t] + PROB_EPSILON < 1.0 {
        g[t] = -1.0 / (p[t] + PROB_EPSILON);
    }
    g
}

/// Divergence between two predicted distributions for one cell.
pub fn pair_divergence(p: [f64; 3], q: [f64; 3], mode: PairwiseDivergence) -> f64 {
    match mode {
        PairwiseDivergence::SymmetricKl => {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += (p[k] - q[k]) * (smoothed(p[k]).ln() - smoothed(q[k]).ln());
            }
            0.5 * acc
        }
        PairwiseDivergence::SquaredError => {
            let mut acc = 0.0;
            for k in 0..3 {
                let d = p[k] - q[k];
                acc += d * d;
            }
            acc
        }
    }
}

/// Gradient of [`pair_divergence`] with respect to `p` (the `q` gradient is
/// obtained by swapping the arguments).
pub fn pair_divergence_grad_p(p: [f64; 3], q: [f64; 3], mode: PairwiseDivergence) -> [f64; 3] {
    let mut g = [0.0; 3];
    match mode {
        PairwiseDivergence::SymmetricKl => {
            for k in 0..3 {
                let log_term = smoothed(p[k]).ln() - smoothed(q[k]).ln();
                let ratio = if p[k] + PROB_EPSILON < 1.0 {
                    (p[k] - q[k]) / (p[k] + PROB_EPSILON)
                } else {
                    p[k] - q[k]
                };
                g[k] = 0.5 * (log_term + ratio);
            }
        }
        PairwiseDivergence::SquaredError => {
            for k in 0..3 {
                g[k] = 2.0 * (p[k] - q[k]);
            }
        }
    }
    g
}

fn check_batch_shapes(preds: &[ProbabilityStack], truths: &[LayoutStack]) -> Result<()> {
    if preds.len() != truths.len() {
        return Err(Error::Shape(format!(
            "batch size mismatch: {} predictions vs {} truths",
            preds.len(),
            truths.len()
        )));
    }
    for (j, (p, t)) in preds.iter().zip(truths).enumerate() {
        if !p.same_shape_as_labels(t) {
            return Err(Error::Shape(format!(
                "batch item {j}: prediction shape does not match truth"
            )));
        }
    }
    Ok(())
}

/// Supervised loss: sum over batch items and shelf channels of the
/// per-channel mean cell divergence.
pub fn l_sup(preds: &[ProbabilityStack], truths: &[LayoutStack]) -> Result<f64> {
    check_batch_shapes(preds, truths)?;
    let mut total = 0.0;
    for (p, t) in preds.iter().zip(truths) {
        let cells = p.channel(0).len().max(1) as f64;
        for ch in 0..p.num_channels() {
            let mut acc = 0.0;
            for (pp, tt) in p.channel(ch).iter().zip(t.channel(ch)) {
                acc += cell_divergence(widen(*pp), *tt);
            }
            total += acc / cells;
        }
    }
    Ok(total)
}

/// Generator-side adversarial loss: mean of (v − 1)² over fake-source
/// discriminator outputs.
pub fn l_adv(fake: &DiscriminatorOutputs) -> Result<f64> {
    fake.expect_source(SampleSource::Fake)?;
    if fake.values.is_empty() {
        return Err(Error::EmptyBatch("l_adv"));
    }
    let n = fake.values.len() as f64;
    Ok(fake.values.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>() / n)
}

/// Discriminator loss: mean squared distance of real outputs from 1 plus
/// mean square of fake outputs.
pub fn l_discr(real: &DiscriminatorOutputs, fake: &DiscriminatorOutputs) -> Result<f64> {
    real.expect_source(SampleSource::Real)?;
    fake.expect_source(SampleSource::Fake)?;
    if real.values.is_empty() || fake.values.is_empty() {
        return Err(Error::EmptyBatch("l_discr"));
    }
    let nr = real.values.len() as f64;
    let nf = fake.values.len() as f64;
    let real_term = real.values.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>() / nr;
    let fake_term = fake.values.iter().map(|v| v * v).sum::<f64>() / nf;
    Ok(real_term + fake_term)
}

fn stack_pair(a: &ProbabilityStack, b: &ProbabilityStack, mode: PairwiseDivergence) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Shape("sequence stacks differ in shape".into()));
    }
    let cells = a.channel(0).len().max(1) as f64;
    let mut total = 0.0;
    for ch in 0..a.num_channels() {
        let mut acc = 0.0;
        for (pa, pb) in a.channel(ch).iter().zip(b.channel(ch)) {
            acc += pair_divergence(widen(*pa), widen(*pb), mode);
        }
        total += acc / cells;
    }
    Ok(total)
}

/// Short-range consistency loss: divergence summed over consecutive frame
/// pairs of one prediction sequence.
pub fn l_short(seq: &[ProbabilityStack], mode: PairwiseDivergence) -> Result<f64> {
    if seq.len() < 2 {
        return Err(Error::SequenceTooShort {
            need: 2,
            got: seq.len(),
        });
    }
    let mut total = 0.0;
    for pair in seq.windows(2) {
        total += stack_pair(&pair[0], &pair[1], mode)?;
    }
    Ok(total)
}

/// Long-range consistency loss: divergence summed over all frame pairs at
/// least two apart. Sequences shorter than 3 frames have no qualifying
/// pairs and score 0.
pub fn l_long(seq: &[ProbabilityStack], mode: PairwiseDivergence) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..seq.len() {
        for k in (j + 2)..seq.len() {
            total += stack_pair(&seq[j], &seq[k], mode)?;
        }
    }
    Ok(total)
}

#[inline]
fn widen(p: [f32; 3]) -> [f64; 3] {
    [p[0] as f64, p[1] as f64, p[2] as f64]
}

/// Where a batch of discriminator outputs came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Real,
    Fake,
}

/// A batch of discriminator scores in [0, 1], tagged by source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorOutputs {
    pub source: SampleSource,
    pub values: Vec<f64>,
}

impl DiscriminatorOutputs {
    pub fn new(source: SampleSource, values: Vec<f64>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::validation(
                    format!("values[{i}]"),
                    format!("discriminator output {v} outside [0, 1]"),
                ));
            }
        }
        Ok(DiscriminatorOutputs { source, values })
    }

    pub fn real(values: Vec<f64>) -> Result<Self> {
        Self::new(SampleSource::Real, values)
    }

    pub fn fake(values: Vec<f64>) -> Result<Self> {
        Self::new(SampleSource::Fake, values)
    }

    fn expect_source(&self, want: SampleSource) -> Result<()> {
        if self.source != want {
            return Err(Error::validation(
                "source",
                format!("expected {want:?} outputs, got {:?}", self.source),
            ));
        }
        Ok(())
    }
}

/// All loss terms for one evaluation; `l_total` is the exact sum in the
/// fixed order sup + short + long + adv + discr.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_sup: f64,
    pub l_adv: f64,
    pub l_short: f64,
    pub l_long: f64,
    pub l_discr: f64,
    pub l_total: f64,
}

impl LossReport {
    pub fn new(l_sup: f64, l_adv: f64, l_short: f64, l_long: f64, l_discr: f64) -> Self {
        LossReport {
            l_sup,
            l_adv,
            l_short,
            l_long,
            l_discr,
            l_total: l_sup + l_short + l_long + l_adv + l_discr,
        }
    }
}

/// Central-difference gradient check for an arbitrary scalar function.
/// Returns the maximum relative error over coordinates. The denominator is
/// `max(|numeric| + |analytic|, 1e-2)` so coordinates with a vanishing
/// gradient compare against finite-difference noise on an absolute scale.
pub fn gradient_check<F>(f: F, analytic: &[f64], x: &[f64], epsilon: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert!(
        epsilon > 0.0 && epsilon <= 1e-2,
        "epsilon must lie in (0, 1e-2]"
    );
    assert_eq!(analytic.len(), x.len());
    let mut buf = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = buf[i];
        buf[i] = orig + epsilon;
        let hi = f(&buf);
        buf[i] = orig - epsilon;
        let lo = f(&buf);
        buf[i] = orig;
        let numeric = (hi - lo) / (2.0 * epsilon);
        let denom = (numeric.abs() + analytic[i].abs()).max(1e-2);
        worst = worst.max((numeric - analytic[i]).abs() / denom);
    }
    worst
}

/// Which loss kernel a self-check targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Sup,
    Adv,
    Discr,
    Short,
    Long,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [
        LossKind::Sup,
        LossKind::Adv,
        LossKind::Discr,
        LossKind::Short,
        LossKind::Long,
    ];
}

/// Runs the finite-difference check for one kernel on a seeded random small
/// input; returns the max relative error.
pub fn check_loss_gradient(kind: LossKind, seed: u64, epsilon: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    match kind {
        LossKind::Adv => {
            let n = rng.random_range(3..=20);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let grad: Vec<f64> = x.iter().map(|v| 2.0 * (v - 1.0) / n as f64).collect();
            gradient_check(
                |v| v.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>() / v.len() as f64,
                &grad,
                &x,
                epsilon,
            )
        }
        LossKind::Discr => {
            let nr = rng.random_range(2..=10);
            let nf = rng.random_range(2..=10);
            let x: Vec<f64> = (0..nr + nf).map(|_| rng.random_range(0.0..1.0)).collect();
            let mut grad = vec![0.0; nr + nf];
            for i in 0..nr {
                grad[i] = 2.0 * (x[i] - 1.0) / nr as f64;
            }
            for i in nr..nr + nf {
                grad[i] = 2.0 * x[i] / nf as f64;
            }
            let f = move |v: &[f64]| {
                let real = &v[..nr];
                let fake = &v[nr..];
                real.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>() / nr as f64
                    + fake.iter().map(|v| v * v).sum::<f64>() / fake.len() as f64
            };
            gradient_check(f, &grad, &x, epsilon)
        }
        LossKind::Sup => {
            let cells = 16usize; // one 4x4 channel per item
            let batch = rng.random_range(1..=3);
            let truths: Vec<CellClass> = (0..batch * cells)
                .map(|_| CellClass::from_u8(rng.random_range(0..3u8)).unwrap())
                .collect();
            let x = random_prob_vec(&mut rng, batch * cells);
            let w = 1.0 / cells as f64;
            let mut grad = vec![0.0; x.len()];
            for (i, t) in truths.iter().enumerate() {
                let p = [x[3 * i], x[3 * i + 1], x[3 * i + 2]];
                let g = cell_divergence_grad(p, *t);
                for k in 0..3 {
                    grad[3 * i + k] = w * g[k];
                }
            }
            let truths_c = truths.clone();
            let f = move |v: &[f64]| {
                let mut acc = 0.0;
                for (i, t) in truths_c.iter().enumerate() {
                    acc += w * cell_divergence([v[3 * i], v[3 * i + 1], v[3 * i + 2]], *t);
                }
                acc
            };
            gradient_check(f, &grad, &x, epsilon)
        }
        LossKind::Short | LossKind::Long => {
            let frames = rng.random_range(3..=4);
            let cells = 4usize; // one 2x2 channel per frame
            let mode = PairwiseDivergence::SymmetricKl;
            let x = random_prob_vec(&mut rng, frames * cells);
            let pairs: Vec<(usize, usize)> = match kind {
                LossKind::Short => (0..frames - 1).map(|j| (j, j + 1)).collect(),
                _ => (0..frames)
                    .flat_map(|j| ((j + 2)..frames).map(move |k| (j, k)))
                    .collect(),
            };
            let w = 1.0 / cells as f64;
            let cell_of = |v: &[f64], frame: usize, c: usize| -> [f64; 3] {
                let base = 3 * (frame * cells + c);
                [v[base], v[base + 1], v[base + 2]]
            };
            let mut grad = vec![0.0; x.len()];
            for &(j, k) in &pairs {
                for c in 0..cells {
                    let p = cell_of(&x, j, c);
                    let q = cell_of(&x, k, c);
                    let gp = pair_divergence_grad_p(p, q, mode);
                    let gq = pair_divergence_grad_p(q, p, mode);
                    for d in 0..3 {
                        grad[3 * (j * cells + c) + d] += w * gp[d];
                        grad[3 * (k * cells + c) + d] += w * gq[d];
                    }
                }
            }
            let pairs_c = pairs.clone();
            let f = move |v: &[f64]| {
                let mut acc = 0.0;
                for &(j, k) in &pairs_c {
                    for c in 0..cells {
                        acc += w * pair_divergence(cell_of(v, j, c), cell_of(v, k, c), mode);
                    }
                }
                acc
            };
            gradient_check(f, &grad, &x, epsilon)
        }
    }
}

/// Probability triples via softmax of standard-normal logits, flattened.
/// Keeps every entry comfortably away from 0 and 1.
fn random_prob_vec(rng: &mut ChaCha8Rng, n_cells: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * n_cells);
    for _ in 0..n_cells {
        let logits: [f64; 3] = [
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
        ];
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps = logits.map(|l| (l - m).exp());
        let sum: f64 = exps.iter().sum();
        out.extend(exps.iter().map(|e| e / sum));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::View;
    use approx::assert_abs_diff_eq;

    fn prob_stack(cells: Vec<[f32; 3]>, channels: usize) -> ProbabilityStack {
        // Square-ish grid holding the supplied cells, padded per channel.
        let d = (cells.len() as f64).sqrt().ceil() as u32;
        let d = d.max(8);
        let per = (d * d) as usize;
        let mut chans = Vec::new();
        for _ in 0..channels {
            let mut v = vec![[1.0f32, 0.0, 0.0]; per];
            v[..cells.len()].copy_from_slice(&cells);
            chans.push(v);
        }
        ProbabilityStack::from_channels(View::Top, d, chans).unwrap()
    }

    #[test]
    fn divergence_one_hot_correct_is_zero() {
        assert_eq!(cell_divergence([1.0, 0.0, 0.0], CellClass::Background), 0.0);
    }

    #[test]
    fn divergence_uniform_is_ln_three() {
        let third = 1.0 / 3.0;
        let v = cell_divergence([third, third, third], CellClass::Unoccupied);
        assert_abs_diff_eq!(v, 3.0f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn divergence_direct_evaluation() {
        let v = cell_divergence([0.7, 0.2, 0.1], CellClass::Background);
        assert_abs_diff_eq!(v, -(0.7f64.ln()), epsilon = 1e-11);
        assert_abs_diff_eq!(v, 0.35667494393873245, epsilon = 1e-11);
    }

    #[test]
    fn l_sup_zero_for_perfect_one_hot() {
        let mut labels = LayoutStack::background(View::Top, 8, 2);
        labels.set(0, 1, 1, CellClass::Occupied);
        labels.set(1, 2, 3, CellClass::Unoccupied);
        let preds = ProbabilityStack::one_hot(&labels);
        assert_eq!(l_sup(&[preds], &[labels]).unwrap(), 0.0);
    }

    #[test]
    fn l_sup_linear_in_batch() {
        let labels = LayoutStack::background(View::Top, 8, 1);
        let pred = prob_stack(vec![[0.6, 0.3, 0.1]; 4], 1);
        let single = l_sup(&[pred.clone()], &[labels.clone()]).unwrap();
        let double = l_sup(&[pred.clone(), pred], &[labels.clone(), labels]).unwrap();
        assert_eq!(double, 2.0 * single);
    }

    #[test]
    fn l_sup_hand_summed_2x2() {
        // One 8x8 channel with 4 interesting cells, rest exact one-hot
        // correct (contributing zero). Truth is all-background.
        let cells: Vec<[f32; 3]> = vec![
            [0.7, 0.2, 0.1],
            [0.5, 0.25, 0.25],
            [0.9, 0.05, 0.05],
            [0.25, 0.5, 0.25],
        ];
        let labels = LayoutStack::background(View::Top, 8, 1);
        let pred = prob_stack(cells.clone(), 1);
        let expected: f64 = cells
            .iter()
            .map(|p| -((p[0] as f64 + PROB_EPSILON).ln()))
            .sum::<f64>()
            / 64.0;
        assert_abs_diff_eq!(l_sup(&[pred], &[labels]).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn l_sup_rejects_shape_mismatch() {
        let labels = LayoutStack::background(View::Top, 8, 2);
        let pred = prob_stack(vec![], 1);
        assert!(matches!(
            l_sup(&[pred], &[labels]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn l_adv_values() {
        let ones = DiscriminatorOutputs::fake(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(l_adv(&ones).unwrap(), 0.0);
        let zeros = DiscriminatorOutputs::fake(vec![0.0, 0.0]).unwrap();
        assert_eq!(l_adv(&zeros).unwrap(), 1.0);
        let mixed = DiscriminatorOutputs::fake(vec![0.5, 0.75]).unwrap();
        assert_eq!(l_adv(&mixed).unwrap(), 0.15625);
        let empty = DiscriminatorOutputs::fake(vec![]).unwrap();
        assert!(matches!(l_adv(&empty), Err(Error::EmptyBatch(_))));
    }

    #[test]
    fn l_discr_values() {
        let perfect = l_discr(
            &DiscriminatorOutputs::real(vec![1.0, 1.0]).unwrap(),
            &DiscriminatorOutputs::fake(vec![0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(perfect, 0.0);
        let inverted = l_discr(
            &DiscriminatorOutputs::real(vec![0.0]).unwrap(),
            &DiscriminatorOutputs::fake(vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(inverted, 2.0);
        let v = l_discr(
            &DiscriminatorOutputs::real(vec![0.9]).unwrap(),
            &DiscriminatorOutputs::fake(vec![0.2]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn consistency_losses_vanish_on_constant_sequences() {
        let frame = prob_stack(vec![[0.2, 0.3, 0.5]; 6], 2);
        let seq = vec![frame.clone(), frame.clone(), frame.clone(), frame];
        assert_eq!(l_short(&seq, PairwiseDivergence::SymmetricKl).unwrap(), 0.0);
        assert_eq!(l_long(&seq, PairwiseDivergence::SymmetricKl).unwrap(), 0.0);
    }

    #[test]
    fn l_short_two_frames_is_one_pair() {
        let a = prob_stack(vec![[0.7, 0.2, 0.1]; 4], 1);
        let b = prob_stack(vec![[0.3, 0.4, 0.3]; 4], 1);
        let total = l_short(&[a.clone(), b.clone()], PairwiseDivergence::SymmetricKl).unwrap();
        let single = stack_pair(&a, &b, PairwiseDivergence::SymmetricKl).unwrap();
        assert_eq!(total, single);
        assert!(total > 0.0);
        assert!(matches!(
            l_short(&[a], PairwiseDivergence::SymmetricKl),
            Err(Error::SequenceTooShort { .. })
        ));
    }

    #[test]
    fn l_short_hand_summed_three_frames() {
        // 1x1-cell frames (padded to 8x8) with hand-chosen distributions;
        // the expected value is the literal two-term sum.
        let p1 = [0.7f64, 0.2, 0.1];
        let p2 = [0.5f64, 0.3, 0.2];
        let p3 = [0.2f64, 0.2, 0.6];
        let jeffreys = |p: [f64; 3], q: [f64; 3]| -> f64 {
            0.5 * (0..3)
                .map(|k| (p[k] - q[k]) * (((p[k] + 1e-12).ln()) - ((q[k] + 1e-12).ln())))
                .sum::<f64>()
        };
        let expected = (jeffreys(p1, p2) + jeffreys(p2, p3)) / 64.0;
        let seq = vec![
            prob_stack(vec![p1.map(|v| v as f32)], 1),
            prob_stack(vec![p2.map(|v| v as f32)], 1),
            prob_stack(vec![p3.map(|v| v as f32)], 1),
        ];
        let got = l_short(&seq, PairwiseDivergence::SymmetricKl).unwrap();
        // f32 storage rounds the inputs; compare at f32 precision.
        assert_abs_diff_eq!(got, expected, epsilon = 1e-6);
    }

    #[test]
    fn l_long_gap_pairs_only() {
        let frames: Vec<ProbabilityStack> = [
            [0.7f32, 0.2, 0.1],
            [0.5, 0.3, 0.2],
            [0.2, 0.2, 0.6],
            [0.4, 0.4, 0.2],
        ]
        .iter()
        .map(|p| prob_stack(vec![*p], 1))
        .collect();
        let mode = PairwiseDivergence::SymmetricKl;
        assert_eq!(l_long(&frames[..2], mode).unwrap(), 0.0);
        let expected = stack_pair(&frames[0], &frames[2], mode).unwrap()
            + stack_pair(&frames[0], &frames[3], mode).unwrap()
            + stack_pair(&frames[1], &frames[3], mode).unwrap();
        assert_abs_diff_eq!(l_long(&frames, mode).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn loss_report_total_is_exact_sum() {
        let r = LossReport::new(1.25, 0.5, 0.125, 0.0625, 2.0);
        assert_eq!(r.l_total, 1.25 + 0.125 + 0.0625 + 0.5 + 2.0);
    }

    #[test]
    fn batch_order_invariance() {
        let labels_a = LayoutStack::background(View::Top, 8, 1);
        let mut labels_b = LayoutStack::background(View::Top, 8, 1);
        labels_b.set(0, 0, 0, CellClass::Occupied);
        let pred_a = prob_stack(vec![[0.6, 0.3, 0.1]; 3], 1);
        let pred_b = prob_stack(vec![[0.1, 0.2, 0.7]; 5], 1);
        let fwd = l_sup(
            &[pred_a.clone(), pred_b.clone()],
            &[labels_a.clone(), labels_b.clone()],
        )
        .unwrap();
        let rev = l_sup(&[pred_b, pred_a], &[labels_b, labels_a]).unwrap();
        assert_abs_diff_eq!(fwd, rev, epsilon = 1e-15);

        let fake1 = DiscriminatorOutputs::fake(vec![0.1, 0.7, 0.4]).unwrap();
        let fake2 = DiscriminatorOutputs::fake(vec![0.4, 0.1, 0.7]).unwrap();
        assert_abs_diff_eq!(
            l_adv(&fake1).unwrap(),
            l_adv(&fake2).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn quadratic_losses_check_to_machine_precision() {
        // Central differences are exact for quadratics, so a coarse step
        // keeps floating-point noise negligible.
        for seed in 0..10 {
            let err = check_loss_gradient(LossKind::Adv, seed, 1e-2);
            assert!(err <= 1e-9, "seed {seed}: err {err}");
        }
    }

    #[test]
    fn all_kernels_pass_gradient_check() {
        for kind in LossKind::ALL {
            for seed in 0..25 {
                let err = check_loss_gradient(kind, seed, 1e-5);
                assert!(err <= 1e-4, "{kind:?} seed {seed}: err {err}");
            }
        }
    }
}
