//! Differentiable objectives on `w` and the two optimization drivers:
//! plain gradient descent in `W`, and the box-constrained variant that
//! routes each descent step through the bounded local space.
//!
//! The descent direction plays the role of the target latent code: the
//! constrained driver forms `w_tm = w - lr * grad L(w)` and then takes the
//! full clamp-and-pull-back step toward it, so every realized update stays
//! inside the local box.

use serde::{Deserialize, Serialize};

use crate::basis;
use crate::error::{Error, Result};
use crate::linalg::{add_scaled, dot, sub};
use crate::net::{MappingNetwork, Network};

/// A differentiable objective on `w`.
#[derive(Debug, Clone)]
pub enum LossSpec {
    /// `(|w - w0|^2 - d_t)^2`: hold the squared distance from an anchor
    /// latent code at a target level.
    LatentDistance { w0: Vec<f64>, target_sq_dist: f64 },
    /// `(scorer(w) - s)^2`: drive a scalar prediction network to a target
    /// score.
    ScoreMatch { scorer: Network, target: f64 },
    /// `|mask ⊙ (extractor(w) - target)|^2`: match a feature embedding on a
    /// binary mask.
    FeatureMatch {
        extractor: Network,
        target: Vec<f64>,
        mask: Vec<f64>,
    },
}

impl LossSpec {
    /// Validating constructor for the latent-distance objective.
    pub fn latent_distance(w0: Vec<f64>, target_sq_dist: f64) -> Result<Self> {
        if !(target_sq_dist >= 0.0) {
            return Err(Error::Input(format!(
                "target squared distance {target_sq_dist} must be non-negative"
            )));
        }
        Ok(LossSpec::LatentDistance { w0, target_sq_dist })
    }

    /// Validating constructor for the score-matching objective.
    pub fn score_match(scorer: Network, target: f64) -> Result<Self> {
        if scorer.output_dim() != 1 {
            return Err(Error::Input(format!(
                "scorer must map to a scalar, got output dimension {}",
                scorer.output_dim()
            )));
        }
        Ok(LossSpec::ScoreMatch { scorer, target })
    }

    /// Validating constructor for the masked feature-matching objective.
    pub fn feature_match(extractor: Network, target: Vec<f64>, mask: Vec<f64>) -> Result<Self> {
        if extractor.output_dim() != target.len() || target.len() != mask.len() {
            return Err(Error::Input(format!(
                "feature dimensions disagree: extractor {} / target {} / mask {}",
                extractor.output_dim(),
                target.len(),
                mask.len()
            )));
        }
        if !mask.iter().all(|&m| m == 0.0 || m == 1.0) {
            return Err(Error::Input("mask entries must be 0 or 1".into()));
        }
        Ok(LossSpec::FeatureMatch {
            extractor,
            target,
            mask,
        })
    }

    /// Dimension of `w` this loss expects.
    pub fn dim(&self) -> usize {
        match self {
            LossSpec::LatentDistance { w0, .. } => w0.len(),
            LossSpec::ScoreMatch { scorer, .. } => scorer.input_dim(),
            LossSpec::FeatureMatch { extractor, .. } => extractor.input_dim(),
        }
    }

    fn check_dim(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::Dim {
                context: "loss input",
                expected: self.dim(),
                actual: w.len(),
            });
        }
        Ok(())
    }

    /// Loss value at `w`.
    pub fn value(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        match self {
            LossSpec::LatentDistance { w0, target_sq_dist } => {
                let diff = sub(w, w0);
                let r = dot(&diff, &diff) - target_sq_dist;
                Ok(r * r)
            }
            LossSpec::ScoreMatch { scorer, target } => {
                let s = scorer.forward(w)?[0];
                Ok((s - target) * (s - target))
            }
            LossSpec::FeatureMatch {
                extractor,
                target,
                mask,
            } => {
                let f = extractor.forward(w)?;
                Ok(f
                    .iter()
                    .zip(target)
                    .zip(mask)
                    .map(|((fi, ti), mi)| {
                        let r = mi * (fi - ti);
                        r * r
                    })
                    .sum())
            }
        }
    }

    /// Exact analytic gradient `dL/dw`.
    pub fn grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        match self {
            LossSpec::LatentDistance { w0, target_sq_dist } => {
                let diff = sub(w, w0);
                let r = dot(&diff, &diff) - target_sq_dist;
                Ok(diff.iter().map(|d| 4.0 * r * d).collect())
            }
            LossSpec::ScoreMatch { scorer, target } => {
                let (s, j) = scorer.forward_with_jacobian(w)?;
                let factor = 2.0 * (s[0] - target);
                Ok(j.row(0).iter().map(|g| factor * g).collect())
            }
            LossSpec::FeatureMatch {
                extractor,
                target,
                mask,
            } => {
                let (f, j) = extractor.forward_with_jacobian(w)?;
                // residual r_i = mask_i * (f_i - t_i); grad = 2 J^T r
                // (mask is binary, so mask^2 = mask)
                let residual: Vec<f64> = f
                    .iter()
                    .zip(target)
                    .zip(mask)
                    .map(|((fi, ti), mi)| mi * (fi - ti))
                    .collect();
                let mut grad = j.vecmat(&residual);
                for g in &mut grad {
                    *g *= 2.0;
                }
                Ok(grad)
            }
        }
    }
}

/// One unconstrained descent step in `W`: `w - lr * grad L(w)`.
pub fn sgd_step(spec: &LossSpec, w: &[f64], lr: f64) -> Result<Vec<f64>> {
    if !(lr > 0.0) {
        return Err(Error::Input(format!("learning rate {lr} must be positive")));
    }
    let grad = spec.grad(w)?;
    if !grad.iter().all(|g| g.is_finite()) {
        return Err(Error::Numeric {
            iter: 0,
            reason: "gradient left the finite range".into(),
        });
    }
    Ok(add_scaled(w, -lr, &grad))
}

/// Optimization trajectory point. `z` is tracked only by the bounded
/// driver.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub iter: usize,
    pub z: Option<Vec<f64>>,
    pub w: Vec<f64>,
    pub loss: f64,
}

/// One constrained step: descend in `W`, then clamp the move into the
/// bounded local space at the current `z` and pull it back through the
/// network.
pub fn bounded_opt_step(
    net: &MappingNetwork,
    spec: &LossSpec,
    state: &OptState,
    lr: f64,
    alpha: f64,
    sv_threshold: f64,
) -> Result<OptState> {
    if !(lr > 0.0) {
        return Err(Error::Input(format!("learning rate {lr} must be positive")));
    }
    let z = state.z.as_ref().expect("bounded driver requires z");
    let frame = basis::compute_frame(net, z, alpha, sv_threshold)?;
    let grad = spec.grad(&state.w)?;
    let delta_w_target: Vec<f64> = grad.iter().map(|g| -lr * g).collect();
    let a_c = frame.clamp(&frame.coefficients(&delta_w_target));
    let z_next = add_scaled(z, 1.0, &frame.z_step(&a_c));
    let w_next = net.forward(&z_next)?;
    if !w_next.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric {
            iter: state.iter + 1,
            reason: "latent code left the finite range".into(),
        });
    }
    let loss = spec.value(&w_next)?;
    Ok(OptState {
        iter: state.iter + 1,
        z: Some(z_next),
        w: w_next,
        loss,
    })
}

/// Which update rule drives the optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Driver {
    /// Unconstrained descent directly on `w`.
    Sgd,
    /// Box-constrained updates through the bounded local space.
    Bounded,
}

impl std::str::FromStr for Driver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Driver::Sgd),
            "bounded" => Ok(Driver::Bounded),
            other => Err(Error::Input(format!("unknown driver `{other}`"))),
        }
    }
}

/// Iterate the chosen driver from `w_init = M(init_z)`. Returns the initial
/// state followed by one state per iteration (`iters + 1` total).
#[allow(clippy::too_many_arguments)]
pub fn run_optimization(
    net: &MappingNetwork,
    spec: &LossSpec,
    init_z: &[f64],
    iters: usize,
    lr: f64,
    driver: Driver,
    alpha: f64,
    sv_threshold: f64,
) -> Result<Vec<OptState>> {
    if iters < 1 {
        return Err(Error::Input("iters must be >= 1".into()));
    }
    let w0 = net.forward(init_z)?;
    let mut states = Vec::with_capacity(iters + 1);
    states.push(OptState {
        iter: 0,
        z: matches!(driver, Driver::Bounded).then(|| init_z.to_vec()),
        w: w0.clone(),
        loss: spec.value(&w0)?,
    });
    for t in 1..=iters {
        let prev = states.last().unwrap();
        let next = match driver {
            Driver::Sgd => {
                let w = sgd_step(spec, &prev.w, lr).map_err(|e| numeric_at(e, t))?;
                if !w.iter().all(|v| v.is_finite()) {
                    return Err(Error::Numeric {
                        iter: t,
                        reason: "latent code left the finite range".into(),
                    });
                }
                let loss = spec.value(&w)?;
                OptState {
                    iter: t,
                    z: None,
                    w,
                    loss,
                }
            }
            Driver::Bounded => bounded_opt_step(net, spec, prev, lr, alpha, sv_threshold)
                .map_err(|e| numeric_at(e, t))?,
        };
        states.push(next);
    }
    Ok(states)
}

fn numeric_at(e: Error, iter: usize) -> Error {
    match e {
        Error::Numeric { reason, .. } => Error::Numeric { iter, reason },
        other => other,
    }
}
