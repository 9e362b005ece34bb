//! Latent traversal methods and the iterative runner.
//!
//! Four ways of chasing a fixed unit target direction through `W` space:
//!
//! - **Bounded** — the full pipeline: target step, local-basis coefficients,
//!   box clamp, pull-back into `Z`, re-evaluate `w = M(z)`.
//! - **Linear** — `w += L * d`; never touches the network after init.
//! - **Random** — a fresh random unit direction each iteration, sign-flipped
//!   toward the target; never touches the network after init.
//! - **Ict** — steps along the single retained left singular vector most
//!   aligned with the target, scaled so the linearized `W`-step has length
//!   `L`.
//!
//! For Bounded and Ict the per-step metrics are computed from the realized
//! displacement `Δw = M(z_{t+1}) - M(z_t)`, not the linearized one. The
//! cumulative distance is the running sum of signed projections `Δw · d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{self, DEFAULT_ALPHA, DEFAULT_SV_THRESHOLD};
use crate::error::{Error, Result};
use crate::linalg::{add_scaled, dot, norm, sub};
use crate::net::MappingNetwork;

/// Traversal method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bounded,
    Linear,
    Random,
    Ict,
}

impl Method {
    /// Whether the method tracks `z` and consults the mapping network per
    /// step.
    pub fn uses_network(self) -> bool {
        matches!(self, Method::Bounded | Method::Ict)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Bounded => "bounded",
            Method::Linear => "linear",
            Method::Random => "random",
            Method::Ict => "ict",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounded" => Ok(Method::Bounded),
            "linear" => Ok(Method::Linear),
            "random" => Ok(Method::Random),
            "ict" => Ok(Method::Ict),
            other => Err(Error::Input(format!("unknown traversal method `{other}`"))),
        }
    }
}

/// Per-iteration Euclidean step distances matching published per-model
/// choices, keyed by the training set the model came from.
pub fn step_length_preset(name: &str) -> Option<f64> {
    match name {
        "lhq" => Some(2.0),
        "butterfly" => Some(10.0),
        "ffhq" => Some(20.0),
        "wikiart" => Some(20.0),
        "semantic" => Some(5.0),
        "eg3d" => Some(20.0),
        _ => None,
    }
}

/// Parameters of one traversal run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalConfig {
    pub method: Method,
    /// Number of iterations.
    pub steps: usize,
    /// Target Euclidean distance per iteration in `W`.
    pub step_length: f64,
    /// Box scaling factor (Bounded only).
    pub alpha: f64,
    /// Singular-value cutoff (Bounded and Ict).
    pub sv_threshold: f64,
    /// Seed for the Random method's per-step draws.
    pub seed: u64,
}

impl TraversalConfig {
    pub fn new(method: Method) -> Self {
        TraversalConfig {
            method,
            steps: 500,
            step_length: 2.0,
            alpha: DEFAULT_ALPHA,
            sv_threshold: DEFAULT_SV_THRESHOLD,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Input("steps must be >= 1".into()));
        }
        if !(self.step_length > 0.0) {
            return Err(Error::Input(format!(
                "step_length {} must be positive",
                self.step_length
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Input(format!("alpha {} must be positive", self.alpha)));
        }
        if !(self.sv_threshold >= 0.0) {
            return Err(Error::Input(format!(
                "sv_threshold {} must be non-negative",
                self.sv_threshold
            )));
        }
        Ok(())
    }
}

/// Mutable traversal state. `z` is tracked only by methods that consult the
/// network; `direction` is unit length.
#[derive(Debug, Clone)]
pub struct TraversalState {
    pub z: Option<Vec<f64>>,
    pub w: Vec<f64>,
    pub direction: Vec<f64>,
    pub cum_dist: f64,
}

/// Metrics of one traversal step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversalRecord {
    /// 1-based iteration index.
    pub iter: usize,
    /// Cosine between the realized step and the target direction; `0.0` for
    /// an exactly zero step.
    pub cos_sim: f64,
    /// Euclidean length of the realized step.
    pub step_len: f64,
    /// Running sum of `Δw · d`.
    pub cum_dist: f64,
    /// `|w|` after the step (diagnostic).
    pub w_norm: f64,
}

/// Metrics from a realized displacement; updates `cum_dist` in the state.
fn record_step(state: &mut TraversalState, delta_w: &[f64]) -> TraversalRecord {
    let step_len = norm(delta_w);
    let projection = dot(delta_w, &state.direction);
    let cos_sim = if step_len > 0.0 {
        (projection / step_len).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    state.cum_dist += projection;
    TraversalRecord {
        iter: 0,
        cos_sim,
        step_len,
        cum_dist: state.cum_dist,
        w_norm: norm(&state.w),
    }
}

/// One Bounded step: clamp the target displacement into the local box and
/// pull it back through the pseudo-inverse into `Z`.
pub fn step_bounded(
    net: &MappingNetwork,
    state: &mut TraversalState,
    config: &TraversalConfig,
) -> Result<TraversalRecord> {
    let z = state.z.as_ref().expect("bounded step requires z");
    let frame = basis::compute_frame(net, z, config.alpha, config.sv_threshold)?;
    let delta_w_target: Vec<f64> = state.direction.iter().map(|d| config.step_length * d).collect();
    let a = frame.coefficients(&delta_w_target);
    let a_c = frame.clamp(&a);
    let dz = frame.z_step(&a_c);
    let z_next = add_scaled(z, 1.0, &dz);
    let w_next = net.forward(&z_next)?;
    let delta_w = sub(&w_next, &state.w);
    state.z = Some(z_next);
    state.w = w_next;
    Ok(record_step(state, &delta_w))
}

/// One Linear step: move straight along the target direction in `W`.
pub fn step_linear(state: &mut TraversalState, config: &TraversalConfig) -> TraversalRecord {
    let delta_w: Vec<f64> = state.direction.iter().map(|d| config.step_length * d).collect();
    state.w = add_scaled(&state.w, 1.0, &delta_w);
    record_step(state, &delta_w)
}

/// One Random step: a fresh normalized Gaussian direction, sign-flipped to
/// face the target.
pub fn step_random(
    state: &mut TraversalState,
    config: &TraversalConfig,
    rng: &mut ChaCha8Rng,
) -> TraversalRecord {
    let n = state.w.len();
    let mut r: Vec<f64>;
    loop {
        r = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let len = norm(&r);
        if len > 1e-12 {
            for v in &mut r {
                *v /= len;
            }
            break;
        }
    }
    if dot(&r, &state.direction) < 0.0 {
        for v in &mut r {
            *v = -*v;
        }
    }
    let delta_w: Vec<f64> = r.iter().map(|v| config.step_length * v).collect();
    state.w = add_scaled(&state.w, 1.0, &delta_w);
    record_step(state, &delta_w)
}

/// One Ict step: move along the single retained left singular vector most
/// aligned with the target direction (lowest index on ties), with the `Z`
/// step scaled so the linearized `W` step has length `step_length`.
pub fn step_ict(
    net: &MappingNetwork,
    state: &mut TraversalState,
    config: &TraversalConfig,
) -> Result<TraversalRecord> {
    let z = state.z.as_ref().expect("ict step requires z");
    let frame = basis::compute_frame(net, z, config.alpha, config.sv_threshold)?;
    if frame.is_degenerate() {
        return Err(Error::DegenerateFrame {
            threshold: config.sv_threshold,
        });
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 0..frame.dim() {
        if !frame.retained(i) {
            continue;
        }
        let alignment = dot(&frame.system().left_vector(i), &state.direction);
        let better = match best {
            Some((_, b)) => alignment.abs() > b.abs(),
            None => true,
        };
        if better {
            best = Some((i, alignment));
        }
    }
    let (index, alignment) = best.expect("frame is not degenerate");
    let sign = if alignment >= 0.0 { 1.0 } else { -1.0 };
    let sigma = frame.system().sigma()[index];
    let v = frame.system().right_vector(index);
    let z_next = add_scaled(z, sign * config.step_length / sigma, &v);
    let w_next = net.forward(&z_next)?;
    let delta_w = sub(&w_next, &state.w);
    state.z = Some(z_next);
    state.w = w_next;
    Ok(record_step(state, &delta_w))
}

/// A traversal in progress. Exposes the state between steps so callers can
/// snapshot `w` populations.
pub struct Traversal<'a> {
    net: &'a MappingNetwork,
    config: TraversalConfig,
    state: TraversalState,
    rng: ChaCha8Rng,
    iter: usize,
}

impl<'a> Traversal<'a> {
    /// Initialize at `w = M(init_z)`. `direction` must be unit length within
    /// `1e-9`; it is re-normalized exactly.
    pub fn new(
        net: &'a MappingNetwork,
        config: TraversalConfig,
        init_z: &[f64],
        direction: &[f64],
    ) -> Result<Self> {
        config.validate()?;
        let len = norm(direction);
        if (len - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!(
                "direction must be unit length, got norm {len}"
            )));
        }
        let direction: Vec<f64> = direction.iter().map(|d| d / len).collect();
        let w = net.forward(init_z)?;
        let z = config.method.uses_network().then(|| init_z.to_vec());
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Traversal {
            net,
            config,
            state: TraversalState {
                z,
                w,
                direction,
                cum_dist: 0.0,
            },
            rng,
            iter: 0,
        })
    }

    pub fn state(&self) -> &TraversalState {
        &self.state
    }

    pub fn config(&self) -> &TraversalConfig {
        &self.config
    }

    /// Iterations completed so far.
    pub fn completed(&self) -> usize {
        self.iter
    }

    /// Advance one iteration and return its record.
    pub fn step(&mut self) -> Result<TraversalRecord> {
        self.iter += 1;
        let mut record = match self.config.method {
            Method::Bounded => step_bounded(self.net, &mut self.state, &self.config),
            Method::Linear => Ok(step_linear(&mut self.state, &self.config)),
            Method::Random => Ok(step_random(&mut self.state, &self.config, &mut self.rng)),
            Method::Ict => step_ict(self.net, &mut self.state, &self.config),
        }
        .map_err(|e| at_iteration(e, self.iter))?;
        record.iter = self.iter;
        if !self.state.w.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric {
                iter: self.iter,
                reason: "latent code left the finite range".into(),
            });
        }
        Ok(record)
    }
}

fn at_iteration(e: Error, iter: usize) -> Error {
    match e {
        Error::Numeric { reason, .. } => Error::Numeric { iter, reason },
        Error::SvdConvergence { sweeps } => Error::Numeric {
            iter,
            reason: format!("SVD did not converge within {sweeps} sweeps"),
        },
        other => other,
    }
}

/// Run the configured method for `config.steps` iterations; one record per
/// iteration. Deterministic in all inputs.
pub fn run_traversal(
    net: &MappingNetwork,
    config: &TraversalConfig,
    init_z: &[f64],
    direction: &[f64],
) -> Result<Vec<TraversalRecord>> {
    let mut traversal = Traversal::new(net, config.clone(), init_z, direction)?;
    let mut records = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        records.push(traversal.step()?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{gen_mapping_network, sample_direction, sample_z, Activation, FixtureConfig};
    use crate::linalg::Mat;
    use crate::net::Layer;

    fn identity_net(n: usize) -> MappingNetwork {
        MappingNetwork::from_layers(
            n,
            vec![Layer::Linear {
                weight: Mat::identity(n),
                bias: vec![0.0; n],
            }],
        )
        .unwrap()
    }

    fn diag_net(diag: &[f64]) -> MappingNetwork {
        MappingNetwork::from_layers(
            diag.len(),
            vec![Layer::Linear {
                weight: Mat::from_diag(diag),
                bias: vec![0.0; diag.len()],
            }],
        )
        .unwrap()
    }

    fn unit(mut v: Vec<f64>) -> Vec<f64> {
        let n = norm(&v);
        for x in &mut v {
            *x /= n;
        }
        v
    }

    #[test]
    fn linear_steps_accumulate() {
        let net = identity_net(2);
        let mut cfg = TraversalConfig::new(Method::Linear);
        cfg.steps = 3;
        cfg.step_length = 2.0;
        let records = run_traversal(&net, &cfg, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let cum: Vec<f64> = records.iter().map(|r| r.cum_dist).collect();
        assert_eq!(cum, vec![2.0, 4.0, 6.0]);
        for r in &records {
            assert_eq!(r.cos_sim, 1.0);
            assert_eq!(r.step_len, 2.0);
        }
    }

    #[test]
    fn linear_500_steps_total_displacement() {
        let net = identity_net(2);
        let mut cfg = TraversalConfig::new(Method::Linear);
        cfg.steps = 500;
        cfg.step_length = 2.0;
        let records = run_traversal(&net, &cfg, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(records.last().unwrap().cum_dist, 1000.0);
        assert_eq!(records.last().unwrap().w_norm, 1000.0);
    }

    #[test]
    fn bounded_in_box_on_identity_net_equals_target_step() {
        let net = identity_net(3);
        let mut cfg = TraversalConfig::new(Method::Bounded);
        cfg.steps = 1;
        cfg.step_length = 0.5;
        cfg.alpha = 1.0; // box bound alpha * sigma = 1 >= |a_i|
        cfg.sv_threshold = 0.0;
        let d = unit(vec![1.0, 1.0, 1.0]);
        let records = run_traversal(&net, &cfg, &[0.2, -0.1, 0.4], &d).unwrap();
        let r = &records[0];
        assert!((r.step_len - 0.5).abs() <= 1e-12);
        assert!((r.cos_sim - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bounded_out_of_box_on_identity_net_is_box_projection() {
        // On the identity map U = I, so the clamp acts coordinatewise on d.
        let net = identity_net(2);
        let mut cfg = TraversalConfig::new(Method::Bounded);
        cfg.steps = 1;
        cfg.step_length = 10.0;
        cfg.alpha = 1.0;
        cfg.sv_threshold = 0.0;
        let d = unit(vec![3.0, 4.0]); // components (0.6, 0.8)
        let records = run_traversal(&net, &cfg, &[0.0, 0.0], &d).unwrap();
        // target delta = (6, 8); box bound 1 per axis -> realized (1, 1)
        let r = &records[0];
        let expected = [1.0f64, 1.0];
        let expected_len = (2.0f64).sqrt();
        assert!((r.step_len - expected_len).abs() <= 1e-12);
        let expected_cos = dot(&expected, &d) / expected_len;
        assert!((r.cos_sim - expected_cos).abs() <= 1e-12);
        assert!(r.step_len < cfg.step_length);
    }

    #[test]
    fn bounded_equals_linear_on_identity_net_when_alpha_covers_step() {
        let net = identity_net(4);
        let d = unit(vec![0.3, -0.5, 0.8, 0.1]);
        let z0 = vec![0.1, 0.2, -0.3, 0.0];
        let mut lin_cfg = TraversalConfig::new(Method::Linear);
        lin_cfg.steps = 500;
        lin_cfg.step_length = 0.9;
        let mut bnd_cfg = lin_cfg.clone();
        bnd_cfg.method = Method::Bounded;
        bnd_cfg.alpha = 1.0;
        bnd_cfg.sv_threshold = 0.0;
        let lin = run_traversal(&net, &lin_cfg, &z0, &d).unwrap();
        let bnd = run_traversal(&net, &bnd_cfg, &z0, &d).unwrap();
        for (a, b) in lin.iter().zip(&bnd) {
            assert!((a.cos_sim - b.cos_sim).abs() <= 1e-10);
            assert!((a.step_len - b.step_len).abs() <= 1e-10);
            assert!((a.cum_dist - b.cum_dist).abs() <= 1e-10);
        }
    }

    #[test]
    fn bounded_linearization_error_shrinks_quadratically() {
        let cfg_net = FixtureConfig {
            dim: 6,
            depth: 2,
            activation: Some(Activation::Tanh),
            seed: 3,
            ..FixtureConfig::default()
        };
        let net = gen_mapping_network(&cfg_net).unwrap();
        let mut rng = crate::fixtures::trajectory_rng(3, 0);
        let z0 = sample_z(6, &mut rng);
        let d = sample_direction(6, &mut rng);

        // The default threshold drops the near-singular directions whose
        // pull-back would leave the linear regime entirely.
        let mut errors = Vec::new();
        let mut step = 0.05;
        for _ in 0..4 {
            let frame = basis::compute_frame(&net, &z0, 1e9, DEFAULT_SV_THRESHOLD).unwrap();
            let target: Vec<f64> = d.iter().map(|x| step * x).collect();
            let a_c = frame.clamp(&frame.coefficients(&target));
            let linearized = add_scaled(frame.w(), 1.0, &frame.reconstruct_delta(&a_c));
            let z1 = add_scaled(&z0, 1.0, &frame.z_step(&a_c));
            let w1 = net.forward(&z1).unwrap();
            errors.push(norm(&sub(&w1, &linearized)));
            step /= 2.0;
        }
        for pair in errors.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!(
                (3.2..=4.8).contains(&ratio),
                "expected ~4x error reduction per halving, got {ratio} ({errors:?})"
            );
        }
    }

    #[test]
    fn random_one_dimensional_behaves_like_linear() {
        let net = identity_net(1);
        let mut cfg = TraversalConfig::new(Method::Random);
        cfg.steps = 50;
        cfg.step_length = 2.0;
        cfg.seed = 9;
        let records = run_traversal(&net, &cfg, &[0.0], &[1.0]).unwrap();
        for r in &records {
            assert_eq!(r.cos_sim, 1.0);
            assert_eq!(r.step_len, 2.0);
        }
        assert_eq!(records.last().unwrap().cum_dist, 100.0);
    }

    #[test]
    fn random_cos_sim_never_negative() {
        let net = identity_net(8);
        let mut cfg = TraversalConfig::new(Method::Random);
        cfg.steps = 10_000;
        cfg.step_length = 1.0;
        cfg.seed = 1;
        let d = unit(vec![1.0; 8]);
        let records = run_traversal(&net, &cfg, &[0.0; 8], &d).unwrap();
        assert!(records.iter().all(|r| r.cos_sim >= 0.0));
    }

    #[test]
    fn random_mean_cos_matches_sphere_expectation() {
        // |first coordinate| of a uniform unit vector in R^n has mean
        // ~ sqrt(2 / (pi n)); at n = 512 the asymptotic error is ~1e-5.
        let n = 512;
        let net = identity_net(n);
        let mut cfg = TraversalConfig::new(Method::Random);
        cfg.steps = 10_000;
        cfg.step_length = 1.0;
        cfg.seed = 4;
        let mut d = vec![0.0; n];
        d[0] = 1.0;
        let records = run_traversal(&net, &cfg, &vec![0.0; n], &d).unwrap();
        let samples: Vec<f64> = records.iter().map(|r| r.cos_sim).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>()
            / (samples.len() - 1) as f64;
        let se = (var / samples.len() as f64).sqrt();
        let expected = (2.0 / (std::f64::consts::PI * n as f64)).sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * se,
            "mean {mean} vs expected {expected} (3se = {:e})",
            3.0 * se
        );
    }

    #[test]
    fn ict_aligned_axis_moves_exactly() {
        let net = diag_net(&[3.0, 1.0]);
        let mut cfg = TraversalConfig::new(Method::Ict);
        cfg.steps = 1;
        cfg.step_length = 0.7;
        cfg.sv_threshold = 0.0;
        // u_1 = e_1 for the diagonal Jacobian.
        let records = run_traversal(&net, &cfg, &[0.1, 0.1], &[1.0, 0.0]).unwrap();
        let r = &records[0];
        assert!((r.step_len - 0.7).abs() <= 1e-12);
        assert!((r.cos_sim - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ict_diagonal_45_degree_target() {
        let net = diag_net(&[3.0, 1.0]);
        let mut cfg = TraversalConfig::new(Method::Ict);
        cfg.steps = 1;
        cfg.step_length = 1.0;
        cfg.sv_threshold = 0.0;
        let d = unit(vec![1.0, 1.0]);
        let records = run_traversal(&net, &cfg, &[0.3, -0.2], &d).unwrap();
        let r = &records[0];
        assert!((r.cos_sim - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-12);
    }

    #[test]
    fn ict_realized_step_approaches_target_length() {
        let cfg_net = FixtureConfig {
            dim: 5,
            depth: 2,
            activation: Some(Activation::Tanh),
            seed: 8,
            ..FixtureConfig::default()
        };
        let net = gen_mapping_network(&cfg_net).unwrap();
        let mut rng = crate::fixtures::trajectory_rng(8, 0);
        let z0 = sample_z(5, &mut rng);
        let d = sample_direction(5, &mut rng);
        let mut prev_gap = f64::INFINITY;
        let mut step = 0.05;
        for _ in 0..4 {
            let mut cfg = TraversalConfig::new(Method::Ict);
            cfg.steps = 1;
            cfg.step_length = step;
            let records = run_traversal(&net, &cfg, &z0, &d).unwrap();
            let gap = (records[0].step_len / step - 1.0).abs();
            assert!(gap <= prev_gap + 1e-12, "ratio gap should shrink: {gap} > {prev_gap}");
            prev_gap = gap;
            step /= 2.0;
        }
        assert!(prev_gap <= 1e-2);
    }

    #[test]
    fn ict_degenerate_frame_errors() {
        let net = diag_net(&[0.01, 0.01]);
        let mut cfg = TraversalConfig::new(Method::Ict);
        cfg.steps = 1;
        cfg.sv_threshold = 0.05;
        let err = run_traversal(&net, &cfg, &[0.0, 0.0], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateFrame { .. }));
    }

    #[test]
    fn bounded_linearized_step_stays_in_box() {
        let cfg_net = FixtureConfig {
            dim: 6,
            depth: 3,
            seed: 21,
            ..FixtureConfig::default()
        };
        let net = gen_mapping_network(&cfg_net).unwrap();
        let mut rng = crate::fixtures::trajectory_rng(21, 0);
        let z0 = sample_z(6, &mut rng);
        let d = sample_direction(6, &mut rng);
        let mut cfg = TraversalConfig::new(Method::Bounded);
        cfg.steps = 50;
        cfg.step_length = 2.0;

        // Walk manually, checking the linearized displacement per step.
        let mut tr = Traversal::new(&net, cfg.clone(), &z0, &d).unwrap();
        for _ in 0..cfg.steps {
            let z = tr.state().z.clone().unwrap();
            let frame = basis::compute_frame(&net, &z, cfg.alpha, cfg.sv_threshold).unwrap();
            let target: Vec<f64> = d.iter().map(|x| cfg.step_length * x).collect();
            let a_c = frame.clamp(&frame.coefficients(&target));
            let linearized = add_scaled(frame.w(), 1.0, &frame.reconstruct_delta(&a_c));
            assert!(frame.contains(&linearized, 1e-9));
            tr.step().unwrap();
        }
    }

    #[test]
    fn cum_dist_is_projection_accumulation() {
        let cfg_net = FixtureConfig {
            dim: 5,
            depth: 2,
            seed: 33,
            ..FixtureConfig::default()
        };
        let net = gen_mapping_network(&cfg_net).unwrap();
        let mut rng = crate::fixtures::trajectory_rng(33, 0);
        let z0 = sample_z(5, &mut rng);
        let d = sample_direction(5, &mut rng);
        let mut cfg = TraversalConfig::new(Method::Bounded);
        cfg.steps = 40;
        cfg.step_length = 1.0;

        let mut tr = Traversal::new(&net, cfg.clone(), &z0, &d).unwrap();
        let mut manual = 0.0;
        for _ in 0..cfg.steps {
            let w_before = tr.state().w.clone();
            let rec = tr.step().unwrap();
            let dw = sub(&tr.state().w, &w_before);
            manual += dot(&dw, &d);
            assert!((rec.cum_dist - manual).abs() <= 1e-12 * manual.abs().max(1.0));
        }
    }

    #[test]
    fn run_twice_identical_records() {
        let cfg_net = FixtureConfig {
            dim: 8,
            seed: 55,
            ..FixtureConfig::default()
        };
        let net = gen_mapping_network(&cfg_net).unwrap();
        let mut rng = crate::fixtures::trajectory_rng(55, 0);
        let z0 = sample_z(8, &mut rng);
        let d = sample_direction(8, &mut rng);
        for method in [Method::Bounded, Method::Linear, Method::Random, Method::Ict] {
            let mut cfg = TraversalConfig::new(method);
            cfg.steps = 30;
            cfg.step_length = 0.5;
            cfg.seed = 77;
            let a = run_traversal(&net, &cfg, &z0, &d).unwrap();
            let b = run_traversal(&net, &cfg, &z0, &d).unwrap();
            assert_eq!(a, b, "method {method} not deterministic");
        }
    }

    #[test]
    fn rejects_non_unit_direction() {
        let net = identity_net(2);
        let cfg = TraversalConfig::new(Method::Linear);
        assert!(run_traversal(&net, &cfg, &[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn first_step_length_monotone_in_alpha() {
        let cfg_net = FixtureConfig {
            dim: 8,
            seed: 70,
            ..FixtureConfig::default()
        };
        let net = gen_mapping_network(&cfg_net).unwrap();
        let mut rng = crate::fixtures::trajectory_rng(70, 0);
        for _ in 0..20 {
            let z0 = sample_z(8, &mut rng);
            let d = sample_direction(8, &mut rng);
            let mut prev = -1.0;
            for alpha in [0.5, 1.0, 2.0] {
                let frame = basis::compute_frame(&net, &z0, alpha, 0.05).unwrap();
                let target: Vec<f64> = d.iter().map(|x| 2.0 * x).collect();
                let a_c = frame.clamp(&frame.coefficients(&target));
                let len = norm(&frame.reconstruct_delta(&a_c));
                assert!(len + 1e-12 >= prev);
                prev = len;
            }
        }
    }
}
