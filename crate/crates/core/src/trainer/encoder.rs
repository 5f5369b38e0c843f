use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Affine map `y = W x + b` with `W` stored row-major (`out_dim x in_dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Projection {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Projection {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// Gaussian init with variance `1 / in_dim`, zero bias. No row is left
    /// all-zero.
    pub fn random(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let normal = Normal::new(0.0, (1.0 / in_dim as f64).sqrt()).expect("positive std");
        let mut weight = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..out_dim {
            loop {
                let row: Vec<f64> = (0..in_dim).map(|_| normal.sample(rng)).collect();
                if row.iter().any(|&x| x != 0.0) {
                    weight.extend(row);
                    break;
                }
            }
        }
        Projection {
            in_dim,
            out_dim,
            weight,
            bias: vec![0.0; out_dim],
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.weight[r * self.in_dim..(r + 1) * self.in_dim]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                actual: x.len(),
            });
        }
        Ok((0..self.out_dim)
            .map(|r| self.bias[r] + self.row(r).iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect())
    }

    /// Affine map followed by L2 normalization.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (unit, _) = normalize(self.forward(x)?)?;
        Ok(unit)
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub(crate) fn params(&self) -> impl Iterator<Item = &f64> {
        self.weight.iter().chain(&self.bias)
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weight.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Returns the unit vector and the original norm.
pub(crate) fn normalize(mut v: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::Numeric(format!("cannot normalize a vector of norm {norm}")));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok((v, norm))
}

/// Video and text projections into a shared embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEncoder {
    pub video: Projection,
    pub text: Projection,
}

impl DualEncoder {
    pub fn random(video_dim: usize, text_dim: usize, embed_dim: usize, rng: &mut Rng) -> Self {
        DualEncoder {
            video: Projection::random(video_dim, embed_dim, rng),
            text: Projection::random(text_dim, embed_dim, rng),
        }
    }

    /// Same shapes, all zero; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        DualEncoder {
            video: Projection::zeros(self.video.in_dim, self.video.out_dim),
            text: Projection::zeros(self.text.in_dim, self.text.out_dim),
        }
    }

    pub fn video_dim(&self) -> usize {
        self.video.in_dim
    }

    pub fn text_dim(&self) -> usize {
        self.text.in_dim
    }

    pub fn embed_dim(&self) -> usize {
        self.video.out_dim
    }

    pub fn encode_video(&self, feat: &[f64]) -> Result<Vec<f64>> {
        self.video.encode(feat)
    }

    pub fn encode_text(&self, feat: &[f64]) -> Result<Vec<f64>> {
        self.text.encode(feat)
    }

    pub fn num_params(&self) -> usize {
        self.video.num_params() + self.text.num_params()
    }

    /// Parameters in checkpoint order: video W, video b, text W, text b.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.video.params().chain(self.text.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.video.params_mut().chain(self.text.params_mut())
    }

    /// Round every parameter to the nearest f32, the checkpoint precision.
    pub fn round_to_f32(&mut self) {
        self.params_mut().for_each(|p| *p = f64::from(*p as f32));
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }
}

/// Cosine similarity of two unit embeddings.
pub fn similarity(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
