//! Bounded local space: an axis-aligned box in the left singular basis of
//! the mapping-network Jacobian.
//!
//! At a latent point `(z, w = M(z))`, the SVD `J = U Σ V^T` of the Jacobian
//! gives an orthonormal basis `{u_i}` of directions in `W`, each weighted by
//! how strongly the network maps into it. The box spanned by
//! `λ_i ∈ [-α σ_i, α σ_i]` along those directions is the region treated as
//! reliably inside the trained distribution; displacements are expressed as
//! coefficient vectors in that basis, clamped to the box, and pulled back
//! into `Z` through the pseudo-inverse of `Σ V^T`.
//!
//! Directions whose singular value falls at or below `sv_threshold` are
//! considered unreliable and motion along them is zeroed entirely.
//!
//! Dimension mismatches in this module are programmer error and panic.

use crate::error::Result;
use crate::linalg::{self, Mat, SingularSystem};
use crate::net::MappingNetwork;

/// Default singular-value cutoff below which a direction is dropped.
pub const DEFAULT_SV_THRESHOLD: f64 = 0.05;

/// Default box scaling factor.
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Coordinates of a `W`-space displacement in the local basis, as a row
/// vector: `Δw = A U^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(Vec<f64>);

impl Coefficients {
    pub fn new(a: Vec<f64>) -> Self {
        Coefficients(a)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One bounded local space: a latent point, the singular system of the
/// Jacobian there, and the box parameters.
#[derive(Debug, Clone)]
pub struct LocalFrame {
    z: Vec<f64>,
    w: Vec<f64>,
    sys: SingularSystem,
    alpha: f64,
    sv_threshold: f64,
}

/// Build the frame at `z`: evaluates `w = M(z)` and decomposes the Jacobian.
pub fn compute_frame(
    net: &MappingNetwork,
    z: &[f64],
    alpha: f64,
    sv_threshold: f64,
) -> Result<LocalFrame> {
    use crate::error::Error;
    if !(alpha > 0.0) {
        return Err(Error::Input(format!("alpha {alpha} must be positive")));
    }
    if !(sv_threshold >= 0.0) {
        return Err(Error::Input(format!(
            "sv_threshold {sv_threshold} must be non-negative"
        )));
    }
    let (w, j) = net.forward_with_jacobian(z)?;
    let sys = linalg::svd(&j)?;
    Ok(LocalFrame {
        z: z.to_vec(),
        w,
        sys,
        alpha,
        sv_threshold,
    })
}

impl LocalFrame {
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn system(&self) -> &SingularSystem {
        &self.sys
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sv_threshold(&self) -> f64 {
        self.sv_threshold
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Whether direction `i` survives the singular-value threshold.
    pub fn retained(&self, i: usize) -> bool {
        self.sys.sigma()[i] > self.sv_threshold
    }

    /// True when every direction falls at or below the threshold.
    pub fn is_degenerate(&self) -> bool {
        (0..self.dim()).all(|i| !self.retained(i))
    }

    /// Coefficients of `delta_w` in the local basis: `A = Δw U`.
    ///
    /// `U` is orthonormal, so right-multiplying by `U` is the inverse of
    /// `U^T` without forming an explicit inverse.
    pub fn coefficients(&self, delta_w: &[f64]) -> Coefficients {
        assert_eq!(delta_w.len(), self.dim(), "coefficients: dimension mismatch");
        Coefficients(self.sys.u().vecmat(delta_w))
    }

    /// Clamp coefficients into the box: zero where `σ_i <= sv_threshold`,
    /// otherwise restrict to `[-α σ_i, α σ_i]`.
    pub fn clamp(&self, a: &Coefficients) -> Coefficients {
        assert_eq!(a.len(), self.dim(), "clamp: dimension mismatch");
        let sigma = self.sys.sigma();
        let clamped = a
            .as_slice()
            .iter()
            .zip(sigma)
            .map(|(&ai, &si)| {
                if si <= self.sv_threshold {
                    0.0
                } else {
                    let bound = self.alpha * si;
                    ai.clamp(-bound, bound)
                }
            })
            .collect();
        Coefficients(clamped)
    }

    /// The `W`-space step for clamped coefficients: `Δw = A_c U^T`.
    pub fn reconstruct_delta(&self, a_c: &Coefficients) -> Vec<f64> {
        assert_eq!(a_c.len(), self.dim(), "reconstruct_delta: dimension mismatch");
        let ut = self.sys.u().transpose();
        ut.vecmat(a_c.as_slice())
    }

    /// The `Z`-space step `Δz = A_c Σ⁺ V^T`, where the pseudo-inverse uses
    /// `1/σ_i` for retained directions and `0` for thresholded ones.
    pub fn z_step(&self, a_c: &Coefficients) -> Vec<f64> {
        assert_eq!(a_c.len(), self.dim(), "z_step: dimension mismatch");
        let n = self.dim();
        let sigma = self.sys.sigma();
        let v = self.sys.v();
        let mut dz = vec![0.0; n];
        for j in 0..n {
            if sigma[j] <= self.sv_threshold || sigma[j] == 0.0 {
                continue;
            }
            let c = a_c.as_slice()[j] / sigma[j];
            if c == 0.0 {
                continue;
            }
            for k in 0..n {
                dz[k] += c * v[(k, j)];
            }
        }
        dz
    }

    /// Membership test: every retained local coordinate of
    /// `w_point - w` within `α σ_i + tol`, thresholded coordinates within
    /// `tol` (the box is flat along dropped directions).
    pub fn contains(&self, w_point: &[f64], tol: f64) -> bool {
        assert_eq!(w_point.len(), self.dim(), "contains: dimension mismatch");
        let delta = linalg::sub(w_point, &self.w);
        let coords = self.sys.u().vecmat(&delta);
        let sigma = self.sys.sigma();
        coords.iter().zip(sigma).all(|(&lambda, &si)| {
            let bound = if si > self.sv_threshold {
                self.alpha * si + tol
            } else {
                tol
            };
            lambda.abs() <= bound
        })
    }
}

/// Test-support frame construction straight from a Jacobian, bypassing a
/// network. The `w`/`z` fields are set to the given center.
#[doc(hidden)]
pub fn frame_from_jacobian(
    center: &[f64],
    j: &Mat,
    alpha: f64,
    sv_threshold: f64,
) -> Result<LocalFrame> {
    let sys = linalg::svd(j)?;
    Ok(LocalFrame {
        z: center.to_vec(),
        w: center.to_vec(),
        sys,
        alpha,
        sv_threshold,
    })
}
