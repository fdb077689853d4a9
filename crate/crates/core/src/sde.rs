//! Trajectory simulation for the stochastic lattice system
//!
//!   dq = ∂H/∂p dt + ε σ_q(t) dW_q,   dp = −∂H/∂q dt + ε σ_p(t) dW_p,
//!
//! plus the ε = 0 deterministic flow and the Radon-Nikodym weight that
//! converts reference-plus-noise path law into the Hamiltonian one.
//!
//! All randomness is counter-based (see [`crate::rng`]): a trajectory is a
//! pure function of its seed, so ensembles parallelize over seeds without
//! affecting any sampled path.

use crate::error::{HamlatError, Result};
use crate::lattice::{lift_increment, LatticeState, PathGrid};
use crate::models::Hamiltonian;
use crate::rng::normal_at;

/// Hard cap on |p|; C³_b models cannot reach it, so hitting it means a
/// misconfigured run.
const BLOWUP_LIMIT: f64 = 1e6;

/// A per-site diffusion coefficient as a function of time.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sigma {
    Const { value: f64 },
    /// σ(t) = a + b·t.
    Affine { a: f64, b: f64 },
}

impl Sigma {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Sigma::Const { value } => *value,
            Sigma::Affine { a, b } => a + b * t,
        }
    }
}

/// Diagonal, time-dependent noise: one coefficient per site and channel,
/// uniformly elliptic (lower ≤ σ(t) ≤ upper), with global intensity ε.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    sigma_q: Vec<Sigma>,
    sigma_p: Vec<Sigma>,
    lower: f64,
    upper: f64,
    epsilon: f64,
}

impl NoiseModel {
    pub fn new(
        sigma_q: Vec<Sigma>,
        sigma_p: Vec<Sigma>,
        lower: f64,
        upper: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if sigma_q.len() != sigma_p.len() {
            return Err(HamlatError::DimensionMismatch {
                expected: sigma_q.len(),
                got: sigma_p.len(),
            });
        }
        if !(lower > 0.0) || !(upper >= lower) {
            return Err(HamlatError::InvalidInput(
                "ellipticity bounds need 0 < lower ≤ upper".into(),
            ));
        }
        if epsilon < 0.0 {
            return Err(HamlatError::InvalidInput("epsilon must be ≥ 0".into()));
        }
        Ok(Self {
            sigma_q,
            sigma_p,
            lower,
            upper,
            epsilon,
        })
    }

    /// σ ≡ value on every site and channel.
    pub fn constant(n: usize, value: f64, epsilon: f64) -> Result<Self> {
        Self::new(
            vec![Sigma::Const { value }; n],
            vec![Sigma::Const { value }; n],
            value,
            value,
            epsilon,
        )
    }

    /// σ ≡ 1.
    pub fn unit(n: usize, epsilon: f64) -> Result<Self> {
        Self::constant(n, 1.0, epsilon)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(
            self.sigma_q.clone(),
            self.sigma_p.clone(),
            self.lower,
            self.upper,
            epsilon,
        )
    }

    pub fn n_sites(&self) -> usize {
        self.sigma_q.len()
    }

    pub fn sigma_q_at(&self, site: usize, t: f64) -> f64 {
        self.sigma_q[site].at(t)
    }

    pub fn sigma_p_at(&self, site: usize, t: f64) -> f64 {
        self.sigma_p[site].at(t)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Check ellipticity bounds and bounded increments on a sampled grid.
    pub fn validate_on_grid(&self, t0: f64, t1: f64, samples: usize) -> Result<()> {
        let n = samples.max(2);
        let dt = (t1 - t0) / (n - 1) as f64;
        // Increment bound consistent with a Lipschitz-in-t coefficient.
        let max_slope = 1e3 * self.upper.max(1.0);
        for i in 0..self.n_sites() {
            let mut prev_q = f64::NAN;
            let mut prev_p = f64::NAN;
            for k in 0..n {
                let t = t0 + k as f64 * dt;
                for (channel, v) in [(0, self.sigma_q_at(i, t)), (1, self.sigma_p_at(i, t))] {
                    if !(v >= self.lower && v <= self.upper) {
                        return Err(HamlatError::InvalidInput(format!(
                            "sigma_{} at site {i}, t = {t}: {v} outside [{}, {}]",
                            if channel == 0 { "q" } else { "p" },
                            self.lower,
                            self.upper
                        )));
                    }
                    let prev = if channel == 0 { prev_q } else { prev_p };
                    if prev.is_finite() && (v - prev).abs() > max_slope * dt {
                        return Err(HamlatError::InvalidInput(format!(
                            "sigma increment at site {i}, t = {t} exceeds continuity bound"
                        )));
                    }
                    if channel == 0 {
                        prev_q = v;
                    } else {
                        prev_p = v;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    Splitting,
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(dt: f64, seed: u64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(HamlatError::InvalidInput("dt must be positive".into()));
        }
        Ok(Self { dt, seed, scheme })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn check_finite(q: &[f64], p: &[f64], step: usize, t: f64) -> Result<()> {
    for (i, v) in q.iter().chain(p.iter()).enumerate() {
        if !v.is_finite() || v.abs() > BLOWUP_LIMIT {
            return Err(HamlatError::Integration {
                step,
                t,
                detail: format!("state component {i} left the admissible range ({v})"),
            });
        }
    }
    Ok(())
}

fn grid_steps(horizon: f64, dt: f64) -> usize {
    ((horizon / dt).round() as usize).max(1)
}

/// Euler-Maruyama simulation of the noisy system over [0, T].
///
/// Noise variates are addressed by (seed, step, 2·site + channel), and the
/// left-endpoint σ(t_k) multiplies each increment. Identical inputs give
/// bit-identical paths.
pub fn simulate(
    model: &dyn Hamiltonian,
    noise: &NoiseModel,
    x0: &LatticeState,
    horizon: f64,
    cfg: &SimConfig,
) -> Result<PathGrid> {
    if !(horizon > 0.0) {
        return Err(HamlatError::InvalidInput("T must be positive".into()));
    }
    let n = x0.n_sites();
    if noise.n_sites() != n {
        return Err(HamlatError::DimensionMismatch {
            expected: n,
            got: noise.n_sites(),
        });
    }
    let steps = grid_steps(horizon, cfg.dt);
    let dt = horizon / steps as f64;
    let sqrt_dt = dt.sqrt();
    let eps = noise.epsilon();

    let mut nodes = Vec::with_capacity(steps + 1);
    nodes.push(x0.clone());
    let mut q = x0.q().to_vec();
    let mut p = x0.p().to_vec();
    for k in 0..steps {
        let t = k as f64 * dt;
        let state = nodes.last().unwrap();
        let gq = model.grad_q(state);
        let gp = model.grad_p(state);
        for i in 0..n {
            let xi = normal_at(cfg.seed, k as u64, 2 * i as u64);
            let eta = normal_at(cfg.seed, k as u64, 2 * i as u64 + 1);
            q[i] += gp[i] * dt + eps * noise.sigma_q_at(i, t) * sqrt_dt * xi;
            p[i] += -gq[i] * dt + eps * noise.sigma_p_at(i, t) * sqrt_dt * eta;
        }
        check_finite(&q, &p, k, t)?;
        nodes.push(LatticeState::new(q.clone(), p.clone())?);
        q.copy_from_slice(nodes.last().unwrap().q());
    }
    PathGrid::new(0.0, horizon, nodes)
}

fn stormer_verlet_step(
    model: &dyn Hamiltonian,
    state: &LatticeState,
    dt: f64,
) -> Result<LatticeState> {
    let n = state.n_sites();
    // half kick, full drift, half kick
    let gq = model.grad_q(state);
    let p_half: Vec<f64> = (0..n).map(|i| state.p()[i] - 0.5 * dt * gq[i]).collect();
    let half = LatticeState::new(state.q().to_vec(), p_half)?;
    let gp = model.grad_p(&half);
    let q_new: Vec<f64> = (0..n).map(|i| half.q()[i] + dt * gp[i]).collect();
    let moved = LatticeState::new(q_new, half.p().to_vec())?;
    let gq2 = model.grad_q(&moved);
    let p_new: Vec<f64> = (0..n).map(|i| moved.p()[i] - 0.5 * dt * gq2[i]).collect();
    LatticeState::new(moved.q().to_vec(), p_new)
}

fn midpoint_step(model: &dyn Hamiltonian, state: &LatticeState, dt: f64) -> Result<LatticeState> {
    let n = state.n_sites();
    let gq = model.grad_q(state);
    let gp = model.grad_p(state);
    let qm: Vec<f64> = (0..n).map(|i| state.q()[i] + 0.5 * dt * gp[i]).collect();
    let pm: Vec<f64> = (0..n).map(|i| state.p()[i] - 0.5 * dt * gq[i]).collect();
    let mid = LatticeState::new(qm, pm)?;
    let gqm = model.grad_q(&mid);
    let gpm = model.grad_p(&mid);
    let q: Vec<f64> = (0..n).map(|i| state.q()[i] + dt * gpm[i]).collect();
    let p: Vec<f64> = (0..n).map(|i| state.p()[i] - dt * gqm[i]).collect();
    LatticeState::new(q, p)
}

/// Deterministic (ε = 0) flow of the Hamiltonian system.
///
/// `Scheme::Splitting` uses Störmer-Verlet, which assumes a separable model
/// (∂H/∂p independent of q and vice versa; true for the built-in lattice
/// models) and conserves energy to O(dt²). `Scheme::EulerMaruyama` degrades
/// to the plain Euler update of [`simulate`] at ε = 0.
pub fn simulate_deterministic(
    model: &dyn Hamiltonian,
    x0: &LatticeState,
    horizon: f64,
    cfg: &SimConfig,
) -> Result<PathGrid> {
    if !(horizon > 0.0) {
        return Err(HamlatError::InvalidInput("T must be positive".into()));
    }
    let steps = grid_steps(horizon, cfg.dt);
    let dt = horizon / steps as f64;
    let mut nodes = Vec::with_capacity(steps + 1);
    nodes.push(x0.clone());
    for k in 0..steps {
        let next = match cfg.scheme {
            Scheme::Splitting => stormer_verlet_step(model, nodes.last().unwrap(), dt)?,
            Scheme::EulerMaruyama => euler_step(model, nodes.last().unwrap(), dt)?,
        };
        check_finite(next.q(), next.p(), k, k as f64 * dt)?;
        nodes.push(next);
    }
    PathGrid::new(0.0, horizon, nodes)
}

fn euler_step(
    model: &dyn Hamiltonian,
    state: &LatticeState,
    dt: f64,
) -> Result<LatticeState> {
    let n = state.n_sites();
    let gq = model.grad_q(state);
    let gp = model.grad_p(state);
    let q: Vec<f64> = (0..n).map(|i| state.q()[i] + dt * gp[i]).collect();
    let p: Vec<f64> = (0..n).map(|i| state.p()[i] - dt * gq[i]).collect();
    LatticeState::new(q, p)
}

/// Explicit-midpoint deterministic step, O(dt²) without separability.
pub fn simulate_deterministic_midpoint(
    model: &dyn Hamiltonian,
    x0: &LatticeState,
    horizon: f64,
    dt_request: f64,
) -> Result<PathGrid> {
    let steps = grid_steps(horizon, dt_request);
    let dt = horizon / steps as f64;
    let mut nodes = Vec::with_capacity(steps + 1);
    nodes.push(x0.clone());
    for k in 0..steps {
        let next = midpoint_step(model, nodes.last().unwrap(), dt)?;
        check_finite(next.q(), next.p(), k, k as f64 * dt)?;
        nodes.push(next);
    }
    PathGrid::new(0.0, horizon, nodes)
}

/// Radon-Nikodym weight of the Hamiltonian path law against the
/// reference-plus-noise law, evaluated along one realized path.
///
/// The path is read as Φ = φ + ε∫σ dW with φ the reference; Brownian
/// increments are recovered per site from the left-endpoint discretization,
/// and the exponent is the Itô sum of ⟨σ⁻¹(drift − φ̇), ΔW⟩ minus half the
/// time integral of its square. Site sums are unweighted: that is the exact
/// discrete martingale (E[weight] = 1 when the path really is reference
/// plus noise).
pub fn girsanov_weight(
    path: &PathGrid,
    model: &dyn Hamiltonian,
    noise: &NoiseModel,
    reference: &PathGrid,
) -> Result<f64> {
    let eps = noise.epsilon();
    if !(eps > 0.0) {
        return Err(HamlatError::DegenerateMeasure);
    }
    if path.segments() != reference.segments() || path.n_sites() != reference.n_sites() {
        return Err(HamlatError::DimensionMismatch {
            expected: reference.segments(),
            got: path.segments(),
        });
    }
    let n = path.n_sites();
    let dt = path.dt();
    let mut exponent = 0.0;
    for k in 0..path.segments() {
        let t = path.time(k);
        let x = path.node(k);
        let xn = path.node(k + 1);
        let r = reference.node(k);
        let rn = reference.node(k + 1);
        let gq = model.grad_q(x);
        let gp = model.grad_p(x);
        for i in 0..n {
            let sq = noise.sigma_q_at(i, t);
            let sp = noise.sigma_p_at(i, t);
            // reference velocities and recovered Brownian increments
            let ref_dq = lift_increment(r.q()[i], rn.q()[i]);
            let ref_dp = rn.p()[i] - r.p()[i];
            let dwq = (lift_increment(x.q()[i], xn.q()[i]) - ref_dq) / (eps * sq);
            let dwp = ((xn.p()[i] - x.p()[i]) - ref_dp) / (eps * sp);
            let theta_q = (gp[i] - ref_dq / dt) / (eps * sq);
            let theta_p = (-gq[i] - ref_dp / dt) / (eps * sp);
            exponent += theta_q * dwq + theta_p * dwp - 0.5 * (theta_q * theta_q + theta_p * theta_p) * dt;
        }
    }
    Ok(exponent.exp())
}
