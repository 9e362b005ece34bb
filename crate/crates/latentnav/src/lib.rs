//! Singular-value-bounded navigation of mapping-network latent spaces.
//!
//! Style-based generators turn a Gaussian latent code `z` into an
//! intermediate code `w = M(z)` through a mapping network `M`. Moving far
//! in `W` tends to leave the region the network actually populates. This
//! crate walks `W` inside a *bounded local space*: at each point, the SVD
//! of the Jacobian of `M` gives an orthonormal basis of directions weighted
//! by singular values, and steps are clamped into the box `[-α σ_i, α σ_i]`
//! along each direction before being pulled back into `Z`.
//!
//! The crate ships:
//!
//! - [`net`] — feed-forward networks with exact analytic Jacobians and a
//!   JSON weight format;
//! - [`linalg`] — a deterministic dense SVD and the matrix-square-root
//!   trace behind the Fréchet distance;
//! - [`basis`] — the bounded local space itself: coefficients, clamping,
//!   membership, pull-back;
//! - [`traversal`] — four traversal methods (bounded, linear, random,
//!   single-axis) and a step-by-step runner;
//! - [`metrics`] — cosine similarity and the Fréchet-Gaussian distance;
//! - [`optimize`] — loss specs with analytic gradients and two descent
//!   drivers (plain and box-constrained);
//! - [`fixtures`] — seeded synthetic networks and latent samplers;
//! - [`harness`] — the experiment runner with paired sampling and CSV/JSON
//!   output, wired to the `latentnav` binary.
//!
//! The guide in `book/` walks through the concepts; its code snippets run
//! as doctests of this crate, so the book cannot drift from the library.

// Parameter validation uses `!(x > 0.0)` on purpose: unlike `x <= 0.0`, the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod net;
pub mod optimize;
pub mod traversal;

pub use basis::{compute_frame, Coefficients, LocalFrame};
pub use error::{Error, Result};
pub use linalg::{Mat, SingularSystem};
pub use net::{Layer, LatentPair, MappingNetwork, Network};
pub use traversal::{run_traversal, Method, TraversalConfig, TraversalRecord};

// Book chapters double as doctests so the guide stays in sync with the API.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(mapping_networks, "../../../book/src/mapping-networks.md");
    chapter!(local_basis, "../../../book/src/local-basis.md");
    chapter!(bounded_local_space, "../../../book/src/bounded-local-space.md");
    chapter!(traversal, "../../../book/src/traversal.md");
    chapter!(metrics, "../../../book/src/metrics.md");
    chapter!(optimization, "../../../book/src/optimization.md");
    chapter!(experiments, "../../../book/src/experiments.md");
}
