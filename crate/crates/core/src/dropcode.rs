//! Drop-resistant message coding.
//!
//! Agents encode a Gaussian feature `f ~ N(mu, I)` into a real-valued
//! message. Transmission independently drops each coordinate, and receivers
//! read dropped coordinates as zero. Centering the message (`s = f - mu`,
//! decoded as `s + mu`) keeps dropped coordinates cheap to lose.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Feature distribution of a population of agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingModel {
    /// Per-agent feature means; all of length `D`.
    pub means: Vec<Vec<f64>>,
    /// Standard deviation of features around their mean.
    pub noise_scale: f64,
    /// Standard deviation of channel noise added to every message.
    pub message_noise: f64,
}

impl EmbeddingModel {
    /// One agent with mean `mu` on every coordinate and unit variance.
    pub fn isotropic(dim: usize, mu: f64) -> Self {
        Self {
            means: vec![vec![mu; dim]],
            noise_scale: 1.0,
            message_noise: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        for mean in &self.means {
            if mean.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: mean.len() });
            }
            if mean.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("agent means must be finite".into()));
            }
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidArgument("noise_scale must be finite and >= 0".into()));
        }
        if !(self.message_noise >= 0.0 && self.message_noise.is_finite()) {
            return Err(Error::InvalidArgument("message_noise must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// A transmitted message after the drop channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedMessage {
    pub values: Vec<f64>,
    pub drop_mask: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoder {
    Identity,
    Whitened,
}

impl Encoder {
    pub const ALL: [Encoder; 2] = [Encoder::Identity, Encoder::Whitened];
}

impl fmt::Display for Encoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoder::Identity => "identity",
            Encoder::Whitened => "whitened",
        })
    }
}

impl FromStr for Encoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Encoder::Identity),
            "whitened" => Ok(Encoder::Whitened),
            other => Err(Error::InvalidArgument(format!("unknown encoder {other:?}"))),
        }
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), got: a.len() });
    }
    Ok(())
}

pub fn whiten_encode(f: &[f64], mean: &[f64]) -> Result<Vec<f64>> {
    check_dims(f, mean)?;
    Ok(f.iter().zip(mean).map(|(x, m)| x - m).collect())
}

pub fn decode(s: &[f64], mean: &[f64]) -> Result<Vec<f64>> {
    check_dims(s, mean)?;
    Ok(s.iter().zip(mean).map(|(x, m)| x + m).collect())
}

/// Drops each coordinate independently with probability `p`.
pub fn simulate_drop<R: Rng + ?Sized>(message: &[f64], p: f64, rng: &mut R) -> Result<CodedMessage> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("drop probability {p} outside [0, 1]")));
    }
    let drop_mask: Vec<bool> = message.iter().map(|_| rng.random::<f64>() < p).collect();
    Ok(apply_mask(message, drop_mask))
}

fn apply_mask(message: &[f64], drop_mask: Vec<bool>) -> CodedMessage {
    let values = message
        .iter()
        .zip(&drop_mask)
        .map(|(&v, &d)| if d { 0.0 } else { v })
        .collect();
    CodedMessage { values, drop_mask }
}

/// Expected reconstruction error at one drop rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropEstimate {
    pub p: f64,
    pub encoder: Encoder,
    pub mean_l1_error: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    /// Half-width of the normal 95% interval.
    pub ci95: f64,
    pub n_samples: usize,
}

/// Monte-Carlo estimate of `E|decode(drop(encode(f))) - f|_1` for every `p`.
///
/// Each sample's feature, channel noise and per-coordinate uniforms are
/// shared across drop rates and encoders, so curves are monotone in `p` and
/// encoder comparisons are paired.
pub fn drop_benchmark(
    model: &EmbeddingModel,
    p_grid: &[f64],
    encoder: Encoder,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<DropEstimate>> {
    model.validate()?;
    if let Some(&p) = p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("drop probability {p} outside [0, 1]")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let d = model.dim();
    let feature_noise = Normal::new(0.0, model.noise_scale).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = seed::substream(seed, &[0xD0]);
    let mut sums = vec![(0.0f64, 0.0f64); p_grid.len()];
    let mut f = vec![0.0; d];
    let mut noise = vec![0.0; d];
    let mut uniforms = vec![0.0; d];
    for _ in 0..n_samples {
        let agent = rng.random_range(0..model.means.len());
        let mean = &model.means[agent];
        for i in 0..d {
            f[i] = mean[i] + feature_noise.sample(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            noise[i] = model.message_noise * z;
            uniforms[i] = rng.random::<f64>();
        }
        let sent: Vec<f64> = match encoder {
            Encoder::Identity => f.clone(),
            Encoder::Whitened => whiten_encode(&f, mean)?,
        };
        let received: Vec<f64> = sent.iter().zip(&noise).map(|(s, n)| s + n).collect();
        for (k, &p) in p_grid.iter().enumerate() {
            let coded = apply_mask(&received, uniforms.iter().map(|&u| u < p).collect());
            let recon = match encoder {
                Encoder::Identity => coded.values,
                Encoder::Whitened => decode(&coded.values, mean)?,
            };
            let err: f64 = recon.iter().zip(&f).map(|(a, b)| (a - b).abs()).sum();
            sums[k].0 += err;
            sums[k].1 += err * err;
        }
    }
    let n = n_samples as f64;
    Ok(p_grid
        .iter()
        .zip(sums)
        .map(|(&p, (s, s2))| {
            let mean = s / n;
            let var = if n_samples > 1 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
            let std_error = (var / n).sqrt();
            DropEstimate {
                p,
                encoder,
                mean_l1_error: mean,
                std_error,
                ci95: 1.96 * std_error,
                n_samples,
            }
        })
        .collect())
}

pub fn write_csv<W: Write>(rows: &[DropEstimate], mut w: W) -> Result<()> {
    writeln!(w, "p,encoder,mean_l1_error,ci95")?;
    for r in rows {
        writeln!(w, "{},{},{:.6},{:.6}", r.p, r.encoder, r.mean_l1_error, r.ci95)?;
    }
    Ok(())
}
