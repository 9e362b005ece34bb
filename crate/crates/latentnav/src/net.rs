//! Feed-forward networks with exact analytic Jacobians.
//!
//! A [`Network`] is an ordered stack of [`Layer`]s mapping `R^n -> R^m`.
//! A [`MappingNetwork`] is the square (`n -> n`) case whose Jacobian is the
//! object everything downstream decomposes: the local geometry of the
//! intermediate latent space is read off `J = dM/dz`.
//!
//! All operations are pure; networks are immutable after construction and
//! can be shared freely across threads.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// One layer of a feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// Affine map `x -> W x + b`. `weight` is `out_dim x in_dim`.
    Linear { weight: Mat, bias: Vec<f64> },
    /// Elementwise `x -> x` for `x > 0`, `slope * x` otherwise.
    LeakyRelu { slope: f64 },
    /// Elementwise hyperbolic tangent. Smooth, so second-order checks have a
    /// C1 fixture to work against.
    Tanh,
    /// `x -> x / sqrt(mean(x^2) + epsilon)`, the style-network input
    /// normalization. Scale-invariant up to epsilon.
    PixelNorm { epsilon: f64 },
}

impl Layer {
    fn validate(&self, index: usize) -> Result<()> {
        match self {
            Layer::Linear { weight, bias } => {
                if weight.rows() != bias.len() {
                    return Err(Error::Config {
                        index,
                        reason: format!(
                            "linear weight has {} rows but bias has length {}",
                            weight.rows(),
                            bias.len()
                        ),
                    });
                }
                if weight.rows() == 0 || weight.cols() == 0 {
                    return Err(Error::Config {
                        index,
                        reason: "linear layer must be non-empty".into(),
                    });
                }
                if !weight.is_finite() || !bias.iter().all(|v| v.is_finite()) {
                    return Err(Error::Config {
                        index,
                        reason: "linear layer has non-finite parameters".into(),
                    });
                }
            }
            Layer::LeakyRelu { slope } => {
                if !(*slope > 0.0 && *slope < 1.0) {
                    return Err(Error::Config {
                        index,
                        reason: format!("leaky_relu slope {slope} must lie in (0, 1)"),
                    });
                }
            }
            Layer::Tanh => {}
            Layer::PixelNorm { epsilon } => {
                if !(*epsilon > 0.0) {
                    return Err(Error::Config {
                        index,
                        reason: format!("pixel_norm epsilon {epsilon} must be positive"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Output dimension given `input_dim`, or a config error at `index`.
    fn output_dim(&self, input_dim: usize, index: usize) -> Result<usize> {
        match self {
            Layer::Linear { weight, .. } => {
                if weight.cols() != input_dim {
                    return Err(Error::Config {
                        index,
                        reason: format!(
                            "linear layer expects input dimension {}, got {input_dim}",
                            weight.cols()
                        ),
                    });
                }
                Ok(weight.rows())
            }
            _ => Ok(input_dim),
        }
    }

    /// Apply the layer to `x`. Dimensions must already be validated.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Layer::Linear { weight, bias } => {
                let mut y = weight.matvec(x);
                for (yi, bi) in y.iter_mut().zip(bias) {
                    *yi += bi;
                }
                y
            }
            Layer::LeakyRelu { slope } => x
                .iter()
                .map(|&v| if v > 0.0 { v } else { slope * v })
                .collect(),
            Layer::Tanh => x.iter().map(|v| v.tanh()).collect(),
            Layer::PixelNorm { epsilon } => {
                let n = x.len() as f64;
                let scale = (x.iter().map(|v| v * v).sum::<f64>() / n + epsilon).sqrt();
                x.iter().map(|v| v / scale).collect()
            }
        }
    }

    /// Left-multiply the running Jacobian `j` by this layer's Jacobian at
    /// input `x` (the value *entering* the layer).
    fn chain_jacobian(&self, x: &[f64], j: &Mat) -> Mat {
        match self {
            Layer::Linear { weight, .. } => weight.matmul(j),
            Layer::LeakyRelu { slope } => {
                let mut out = j.clone();
                for (i, &v) in x.iter().enumerate() {
                    let d = if v > 0.0 { 1.0 } else { *slope };
                    if d != 1.0 {
                        for c in 0..out.cols() {
                            out[(i, c)] *= d;
                        }
                    }
                }
                out
            }
            Layer::Tanh => {
                let mut out = j.clone();
                for (i, &v) in x.iter().enumerate() {
                    let t = v.tanh();
                    let d = 1.0 - t * t;
                    for c in 0..out.cols() {
                        out[(i, c)] *= d;
                    }
                }
                out
            }
            Layer::PixelNorm { epsilon } => {
                // y = x / sqrt(s), s = |x|^2 / n + eps
                // dy/dx = s^{-1/2} I - x x^T / (n s^{3/2})
                let n = x.len() as f64;
                let s = x.iter().map(|v| v * v).sum::<f64>() / n + epsilon;
                let g = 1.0 / s.sqrt();
                let k = 1.0 / (n * s * s.sqrt());
                // row vector x^T J
                let xj = j.vecmat(x);
                let mut out = j.clone();
                for i in 0..out.rows() {
                    let xi = x[i];
                    for c in 0..out.cols() {
                        out[(i, c)] = g * out[(i, c)] - k * xi * xj[c];
                    }
                }
                out
            }
        }
    }
}

/// A validated feed-forward network `R^{input_dim} -> R^{output_dim}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    output_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    /// Validate layer parameters and the dimension chain.
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Input("input_dim must be positive".into()));
        }
        let mut dim = input_dim;
        for (index, layer) in layers.iter().enumerate() {
            layer.validate(index)?;
            dim = layer.output_dim(dim, index)?;
        }
        Ok(Network {
            input_dim,
            output_dim: dim,
            layers,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Dim {
                context: "network input",
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Evaluate the network.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer.apply(&cur);
        }
        Ok(cur)
    }

    /// Value after every layer, in order. The last entry equals
    /// `forward(x)`. Useful for inspecting pre-activations.
    pub fn layer_outputs(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let mut outs = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer.apply(&cur);
            outs.push(cur.clone());
        }
        Ok(outs)
    }

    /// Exact analytic Jacobian `J[i][j] = d out_i / d x_j` at `x`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Mat> {
        Ok(self.forward_with_jacobian(x)?.1)
    }

    /// Forward value and Jacobian in one pass; identical to calling
    /// [`Network::forward`] and [`Network::jacobian`] separately.
    pub fn forward_with_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Mat)> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut j = Mat::identity(self.input_dim);
        for layer in &self.layers {
            j = layer.chain_jacobian(&cur, &j);
            cur = layer.apply(&cur);
        }
        Ok((cur, j))
    }

    /// Serialize to the JSON weight format.
    pub fn to_json(&self) -> Result<String> {
        let file = NetworkFile::from(self);
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parse the JSON weight format and validate.
    pub fn from_json(json: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(json)?;
        file.into_network()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = self.to_json()?;
        std::fs::write(path, json).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json(&json)
    }
}

/// A square network `R^n -> R^n`, the mapping network `M: Z -> W`.
///
/// Squareness is what makes the downstream algebra well-posed: the Jacobian
/// admits a full SVD with invertible `U`, and coefficient vectors in the
/// left singular basis can be pulled back into `Z` space.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingNetwork {
    net: Network,
}

impl MappingNetwork {
    /// Wrap a network, requiring `output_dim == input_dim`.
    pub fn new(net: Network) -> Result<Self> {
        if net.output_dim() != net.input_dim() {
            return Err(Error::Input(format!(
                "mapping network must be square: input dimension {} but output dimension {}",
                net.input_dim(),
                net.output_dim()
            )));
        }
        Ok(MappingNetwork { net })
    }

    /// Build and validate in one step.
    pub fn from_layers(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        Self::new(Network::new(input_dim, layers)?)
    }

    /// Latent dimension `n` shared by `Z` and `W`.
    pub fn dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn as_network(&self) -> &Network {
        &self.net
    }

    pub fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(z)
    }

    pub fn jacobian(&self, z: &[f64]) -> Result<Mat> {
        self.net.jacobian(z)
    }

    pub fn forward_with_jacobian(&self, z: &[f64]) -> Result<(Vec<f64>, Mat)> {
        self.net.forward_with_jacobian(z)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.net.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(Network::load(path)?)
    }
}

/// An input latent code and its image under the mapping network.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPair {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

impl LatentPair {
    /// Pair `z` with `w = M(z)`.
    pub fn from_z(net: &MappingNetwork, z: Vec<f64>) -> Result<Self> {
        let w = net.forward(&z)?;
        Ok(LatentPair { z, w })
    }
}

// ---------------------------------------------------------------------------
// JSON weight format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    input_dim: usize,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LayerFile {
    Linear {
        weight: Vec<Vec<f64>>,
        bias: Vec<f64>,
    },
    LeakyRelu {
        slope: f64,
    },
    Tanh,
    PixelNorm {
        epsilon: f64,
    },
}

impl From<&Network> for NetworkFile {
    fn from(net: &Network) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|layer| match layer {
                Layer::Linear { weight, bias } => LayerFile::Linear {
                    weight: weight.to_rows(),
                    bias: bias.clone(),
                },
                Layer::LeakyRelu { slope } => LayerFile::LeakyRelu { slope: *slope },
                Layer::Tanh => LayerFile::Tanh,
                Layer::PixelNorm { epsilon } => LayerFile::PixelNorm { epsilon: *epsilon },
            })
            .collect();
        NetworkFile {
            input_dim: net.input_dim,
            layers,
        }
    }
}

impl NetworkFile {
    fn into_network(self) -> Result<Network> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in self.layers {
            layers.push(match layer {
                LayerFile::Linear { weight, bias } => Layer::Linear {
                    weight: Mat::from_rows(weight)?,
                    bias,
                },
                LayerFile::LeakyRelu { slope } => Layer::LeakyRelu { slope },
                LayerFile::Tanh => Layer::Tanh,
                LayerFile::PixelNorm { epsilon } => Layer::PixelNorm { epsilon },
            });
        }
        Network::new(self.input_dim, layers)
    }
}
