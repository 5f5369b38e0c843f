//! Bidirectional max-margin loss with pluggable negative/positive mining.
//!
//! For each pair `i` and each direction, a hinge
//! `max(0, m - s(anchor, positive) + s(anchor, negative))` is summed over the
//! mined negatives and the positive set (the paired item, plus near-duplicates
//! under relevance-aware positive mining). Gradients are propagated by hand
//! through the cosine similarity, the L2 normalization and both affine maps.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::encoder::{normalize, DualEncoder, Projection};
use crate::corpus::Annotation;
use crate::error::{Error, Result};
use crate::metrics::relevance;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mining {
    /// One uniformly drawn in-batch negative per direction.
    RandomNegative,
    /// The most similar in-batch negative per direction.
    HardestNegative,
    /// Hardest negative among items with relevance below `threshold`.
    RelevanceAwareNegative { threshold: f64 },
    /// As above, and items with relevance at least `positive_threshold`
    /// join the positive set.
    RelevanceAwarePositive { threshold: f64, positive_threshold: f64 },
}

impl Mining {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, t: f64| {
            if (0.0..=1.0).contains(&t) {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must lie in [0, 1], got {t}")))
            }
        };
        match *self {
            Mining::RelevanceAwareNegative { threshold } => check("threshold", threshold),
            Mining::RelevanceAwarePositive {
                threshold,
                positive_threshold,
            } => {
                check("threshold", threshold)?;
                check("positive_threshold", positive_threshold)
            }
            _ => Ok(()),
        }
    }

    /// Default thresholds: 0.5 for negatives, 1.0 for positives.
    pub fn ran() -> Self {
        Mining::RelevanceAwareNegative { threshold: 0.5 }
    }

    pub fn ranp() -> Self {
        Mining::RelevanceAwarePositive {
            threshold: 0.5,
            positive_threshold: 1.0,
        }
    }

    fn needs_relevance(&self) -> bool {
        matches!(
            self,
            Mining::RelevanceAwareNegative { .. } | Mining::RelevanceAwarePositive { .. }
        )
    }
}

/// Which side is ranked against the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Video anchor, caption candidates.
    VideoToText,
    /// Caption anchor, video candidates.
    TextToVideo,
}

/// Items the miner picked for one anchor and direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub anchor: usize,
    pub direction: Direction,
    pub negative: Option<usize>,
    pub extra_positives: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a> {
    pub video: &'a [f64],
    pub text: &'a [f64],
    pub annotation: &'a Annotation,
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    /// Sum of the per-pair losses over the batch.
    pub loss: f64,
    pub grads: DualEncoder,
    pub selections: Vec<Selection>,
    /// Number of active hinges.
    pub violations: usize,
}

struct Side {
    inputs: Vec<Vec<f64>>,
    units: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

fn embed_side(proj: &Projection, inputs: Vec<&[f64]>) -> Result<Side> {
    let mut units = Vec::with_capacity(inputs.len());
    let mut norms = Vec::with_capacity(inputs.len());
    for x in &inputs {
        let (u, n) = normalize(proj.forward(x)?)?;
        units.push(u);
        norms.push(n);
    }
    Ok(Side {
        inputs: inputs.into_iter().map(<[f64]>::to_vec).collect(),
        units,
        norms,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss and analytic gradients for one batch.
pub fn contrastive_loss(
    encoder: &DualEncoder,
    batch: &[BatchItem<'_>],
    mining: Mining,
    margin: f64,
    rng: &mut Rng,
) -> Result<LossOutput> {
    let n = batch.len();
    if n < 2 {
        return Err(Error::config("contrastive loss needs at least two pairs"));
    }
    mining.validate()?;
    let video = embed_side(&encoder.video, batch.iter().map(|b| b.video).collect())?;
    let text = embed_side(&encoder.text, batch.iter().map(|b| b.text).collect())?;

    // sims[i * n + j] = s(v_i, q_j)
    let sims: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| dot(&video.units[i], &text.units[j]))
        .collect();
    let rel: Vec<f64> = if mining.needs_relevance() {
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| relevance(batch[i].annotation, batch[j].annotation))
            .collect()
    } else {
        Vec::new()
    };

    let mut dsims = vec![0.0; n * n];
    let mut loss = 0.0;
    let mut violations = 0;
    let mut selections = Vec::with_capacity(2 * n);

    for i in 0..n {
        for direction in [Direction::VideoToText, Direction::TextToVideo] {
            // Flat index of s(anchor i, candidate j) for this direction.
            let at = |j: usize| match direction {
                Direction::VideoToText => i * n + j,
                Direction::TextToVideo => j * n + i,
            };
            let hardest = |allowed: &dyn Fn(usize) -> bool| {
                (0..n)
                    .filter(|&j| j != i && allowed(j))
                    .fold(None, |best: Option<usize>, j| match best {
                        Some(b) if sims[at(b)] >= sims[at(j)] => Some(b),
                        _ => Some(j),
                    })
            };
            let negative = match mining {
                Mining::RandomNegative => {
                    let r = rng.random_range(0..n - 1);
                    Some(if r >= i { r + 1 } else { r })
                }
                Mining::HardestNegative => hardest(&|_| true),
                Mining::RelevanceAwareNegative { threshold } | Mining::RelevanceAwarePositive { threshold, .. } => {
                    hardest(&|j| rel[i * n + j] < threshold)
                }
            };
            let extra_positives: Vec<usize> = match mining {
                Mining::RelevanceAwarePositive { positive_threshold, .. } => (0..n)
                    .filter(|&j| j != i && rel[i * n + j] >= positive_threshold)
                    .collect(),
                _ => Vec::new(),
            };

            if let Some(neg) = negative {
                for &pos in std::iter::once(&i).chain(&extra_positives) {
                    let hinge = margin - sims[at(pos)] + sims[at(neg)];
                    if hinge > 0.0 {
                        loss += hinge;
                        violations += 1;
                        dsims[at(pos)] -= 1.0;
                        dsims[at(neg)] += 1.0;
                    }
                }
            }
            selections.push(Selection {
                anchor: i,
                direction,
                negative,
                extra_positives,
            });
        }
    }

    let mut grads = encoder.zeros_like();
    for i in 0..n {
        let mut d_video = vec![0.0; encoder.embed_dim()];
        let mut d_text = vec![0.0; encoder.embed_dim()];
        for j in 0..n {
            let g_row = dsims[i * n + j];
            if g_row != 0.0 {
                d_video
                    .iter_mut()
                    .zip(&text.units[j])
                    .for_each(|(d, f)| *d += g_row * f);
            }
            let g_col = dsims[j * n + i];
            if g_col != 0.0 {
                d_text
                    .iter_mut()
                    .zip(&video.units[j])
                    .for_each(|(d, e)| *d += g_col * e);
            }
        }
        accumulate(&mut grads.video, &video, i, &d_video);
        accumulate(&mut grads.text, &text, i, &d_text);
    }

    Ok(LossOutput {
        loss,
        grads,
        selections,
        violations,
    })
}

/// Backpropagate `d_unit` (gradient w.r.t. the normalized embedding of item
/// `i`) through the normalization and the affine map.
fn accumulate(grad: &mut Projection, side: &Side, i: usize, d_unit: &[f64]) {
    let unit = &side.units[i];
    let radial = dot(unit, d_unit);
    let inv = 1.0 / side.norms[i];
    let x = &side.inputs[i];
    for r in 0..grad.out_dim {
        let d_pre = (d_unit[r] - unit[r] * radial) * inv;
        if d_pre == 0.0 {
            continue;
        }
        grad.bias[r] += d_pre;
        let row = &mut grad.weight[r * grad.in_dim..(r + 1) * grad.in_dim];
        row.iter_mut().zip(x).for_each(|(g, xv)| *g += d_pre * xv);
    }
}
