//! Deterministic generation of synthetic networks and latent samples.
//!
//! Everything here is a pure function of a seed. The PRNG is pinned to
//! `ChaCha8Rng` (counter-based, portable across platforms), with one stream
//! per role so that reusing a seed for different purposes never aliases
//! draws:
//!
//! | stream | purpose                        |
//! |--------|--------------------------------|
//! | 0      | mapping-network weights        |
//! | 1      | feature-extractor weights      |
//! | 2      | scorer weights                 |
//! | 3      | reference population draws     |
//! | 16 + t | trajectory `t` sampling        |
//!
//! The generated networks are untrained: the geometry-level properties the
//! library exercises do not depend on realism, only on having a smooth map
//! with a non-trivial Jacobian field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, Mat};
use crate::net::{Layer, MappingNetwork, Network};

/// ChaCha stream carrying mapping-network weights.
pub const STREAM_MAPPING: u64 = 0;
/// ChaCha stream carrying feature-extractor weights.
pub const STREAM_EXTRACTOR: u64 = 1;
/// ChaCha stream carrying scorer weights.
pub const STREAM_SCORER: u64 = 2;
/// ChaCha stream carrying reference-population latent draws.
pub const STREAM_REFERENCE: u64 = 3;
/// First ChaCha stream used for per-trajectory sampling.
pub const STREAM_TRAJECTORY_BASE: u64 = 16;

/// Activation interleaved between linear layers of generated networks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Tanh,
}

impl Activation {
    fn layer(self) -> Layer {
        match self {
            Activation::LeakyRelu { slope } => Layer::LeakyRelu { slope },
            Activation::Tanh => Layer::Tanh,
        }
    }
}

/// Shape and seed of a generated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureConfig {
    /// Latent dimension `n`.
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Number of linear layers.
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Width of intermediate layers; defaults to `dim`.
    #[serde(default)]
    pub hidden_dim: Option<usize>,
    /// Activation after each linear layer; `None` leaves the stack purely
    /// affine.
    #[serde(default = "default_activation")]
    pub activation: Option<Activation>,
    /// Prepend a pixel-norm layer, as style-based mapping networks do.
    #[serde(default)]
    pub use_pixel_norm: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_dim() -> usize {
    16
}

fn default_depth() -> usize {
    4
}

fn default_activation() -> Option<Activation> {
    Some(Activation::LeakyRelu { slope: 0.2 })
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            dim: default_dim(),
            depth: default_depth(),
            hidden_dim: None,
            activation: default_activation(),
            use_pixel_norm: false,
            seed: 0,
        }
    }
}

impl FixtureConfig {
    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Input(format!("fixture dim {} must be >= 2", self.dim)));
        }
        if self.depth < 1 {
            return Err(Error::Input("fixture depth must be >= 1".into()));
        }
        if self.hidden_dim == Some(0) {
            return Err(Error::Input("fixture hidden_dim must be positive".into()));
        }
        Ok(())
    }

    fn hidden(&self) -> usize {
        self.hidden_dim.unwrap_or(self.dim)
    }

    /// Weight std for a layer with the given fan-in/out: He for leaky-ReLU
    /// stacks, Xavier otherwise.
    fn weight_std(&self, fan_in: usize, fan_out: usize) -> f64 {
        match self.activation {
            Some(Activation::LeakyRelu { .. }) => (2.0 / fan_in as f64).sqrt(),
            _ => (2.0 / (fan_in + fan_out) as f64).sqrt(),
        }
    }
}

fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_linear(
    cfg: &FixtureConfig,
    fan_in: usize,
    fan_out: usize,
    rng: &mut ChaCha8Rng,
) -> Layer {
    let std = cfg.weight_std(fan_in, fan_out);
    let mut weight = Mat::zeros(fan_out, fan_in);
    for i in 0..fan_out {
        for j in 0..fan_in {
            let g: f64 = rng.sample(StandardNormal);
            weight[(i, j)] = std * g;
        }
    }
    Layer::Linear {
        weight,
        bias: vec![0.0; fan_out],
    }
}

/// Stack of seeded linear layers (dims `in -> hidden^... -> out`) with the
/// configured activation after every linear layer except the last.
fn gen_stack(cfg: &FixtureConfig, out_dim: usize, stream: u64, activate_last: bool) -> Network {
    let mut rng = seeded_rng(cfg.seed, stream);
    let mut layers = Vec::new();
    if cfg.use_pixel_norm {
        layers.push(Layer::PixelNorm { epsilon: 1e-8 });
    }
    let hidden = cfg.hidden();
    let mut fan_in = cfg.dim;
    for k in 0..cfg.depth {
        let last = k + 1 == cfg.depth;
        let fan_out = if last { out_dim } else { hidden };
        layers.push(random_linear(cfg, fan_in, fan_out, &mut rng));
        if let Some(act) = cfg.activation {
            if !last || activate_last {
                layers.push(act.layer());
            }
        }
        fan_in = fan_out;
    }
    Network::new(cfg.dim, layers).expect("generated stack is dimension-consistent")
}

/// Seeded square mapping network: linear layers interleaved with the
/// configured activation (after every layer, as style-based mapping
/// networks do), optionally led by pixel norm.
pub fn gen_mapping_network(cfg: &FixtureConfig) -> Result<MappingNetwork> {
    cfg.validate()?;
    MappingNetwork::new(gen_stack(cfg, cfg.dim, STREAM_MAPPING, true))
}

/// Seeded feature extractor `R^n -> R^n` used as the proxy embedding for
/// distributional metrics. The final layer is linear so features are
/// unbounded.
pub fn gen_feature_extractor(cfg: &FixtureConfig) -> Result<Network> {
    cfg.validate()?;
    Ok(gen_stack(cfg, cfg.dim, STREAM_EXTRACTOR, false))
}

/// Seeded scalar scorer `R^n -> R`, the differentiable stand-in for an
/// external prediction network.
pub fn gen_scorer(cfg: &FixtureConfig) -> Result<Network> {
    cfg.validate()?;
    Ok(gen_stack(cfg, 1, STREAM_SCORER, false))
}

/// Standard normal latent draw.
pub fn sample_z(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Unit-norm target direction: a normalized standard normal draw.
pub fn sample_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v = sample_z(dim, rng);
        let len = norm(&v);
        if len > 1e-12 {
            return v.iter().map(|x| x / len).collect();
        }
    }
}

/// The sampling stream for trajectory `t` under `master_seed`.
pub fn trajectory_rng(master_seed: u64, trajectory: u64) -> ChaCha8Rng {
    seeded_rng(master_seed, STREAM_TRAJECTORY_BASE + trajectory)
}

/// The stream carrying reference-population draws under `feature_seed`.
pub fn reference_rng(feature_seed: u64) -> ChaCha8Rng {
    seeded_rng(feature_seed, STREAM_REFERENCE)
}
