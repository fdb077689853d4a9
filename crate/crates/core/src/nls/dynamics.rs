//! Mode-space propagation of the stochastic spectral system
//!
//!   ẋ = ∂H/∂y + ε σ_R(t) Ẇ,   ẏ = −∂H/∂x + ε σ_I(t) Ẇ,
//!
//! its ε = 0 most probable path, the ℓ^{a,p}-weighted rate function, and
//! torus-deviation diagnostics.
//!
//! The splitting propagator rotates each mode exactly under Λ; the Birkhoff
//! normal form is integrated exactly as well (its frequencies depend only on
//! the conserved actions), and the full cubic model takes a Strang step with
//! an RK4 substep for the quartic flow.

use super::{ModePath, ModeState, NlsDynamics, NlsModeHamiltonian, NlsModel, TorusSpec};
use crate::error::{HamlatError, Result};
use crate::lattice::{LatticeState, PathGrid};
use crate::rng::normal_at;
use crate::sde::{NoiseModel, Scheme, SimConfig};

const BLOWUP_LIMIT: f64 = 1e6;

/// Rotate each mode by θ_j = freq_j·dt (the flow of a diagonal quadratic).
fn rotate(state: &mut ModeState, freqs: &[f64], dt: f64) {
    for j in 0..state.n_modes() {
        let th = freqs[j] * dt;
        let (s, c) = th.sin_cos();
        let (x, y) = (state.x[j], state.y[j]);
        state.x[j] = x * c + y * s;
        state.y[j] = -x * s + y * c;
    }
}

fn linear_freqs(h: &NlsModeHamiltonian) -> Vec<f64> {
    (1..=h.modes()).map(|j| h.model.lambda(j)).collect()
}

/// Action-dependent rotation frequencies of the normal form: λ_j + 4ΣḠ_jk I_k.
fn normal_form_freqs(h: &NlsModeHamiltonian, state: &ModeState) -> Vec<f64> {
    let modes = h.modes();
    let actions: Vec<f64> = (0..modes).map(|j| state.action(j)).collect();
    (0..modes)
        .map(|j| {
            h.model.lambda(j + 1)
                + (0..modes)
                    .map(|k| 4.0 * super::coeffs::birkhoff_gbar(j + 1, k + 1) * actions[k])
                    .sum::<f64>()
        })
        .collect()
}

/// Gradient of the quartic part alone (full gradient minus the Λ part).
fn cubic_grad(h: &NlsModeHamiltonian, state: &ModeState) -> (Vec<f64>, Vec<f64>) {
    let (mut gx, mut gy) = h.grad_modes(state);
    for j in 0..h.modes() {
        let lam = h.model.lambda(j + 1);
        gx[j] -= lam * state.x[j];
        gy[j] -= lam * state.y[j];
    }
    (gx, gy)
}

fn rk4_cubic_step(h: &NlsModeHamiltonian, state: &ModeState, dt: f64) -> ModeState {
    let field = |s: &ModeState| -> (Vec<f64>, Vec<f64>) {
        let (gx, gy) = cubic_grad(h, s);
        (gy, gx.iter().map(|v| -v).collect())
    };
    let add = |s: &ModeState, kx: &[f64], ky: &[f64], a: f64| -> ModeState {
        ModeState {
            x: s.x.iter().zip(kx).map(|(v, k)| v + a * k).collect(),
            y: s.y.iter().zip(ky).map(|(v, k)| v + a * k).collect(),
        }
    };
    let (k1x, k1y) = field(state);
    let (k2x, k2y) = field(&add(state, &k1x, &k1y, dt / 2.0));
    let (k3x, k3y) = field(&add(state, &k2x, &k2y, dt / 2.0));
    let (k4x, k4y) = field(&add(state, &k3x, &k3y, dt));
    let mut out = state.clone();
    for j in 0..state.n_modes() {
        out.x[j] += dt / 6.0 * (k1x[j] + 2.0 * k2x[j] + 2.0 * k3x[j] + k4x[j]);
        out.y[j] += dt / 6.0 * (k1y[j] + 2.0 * k2y[j] + 2.0 * k3y[j] + k4y[j]);
    }
    out
}

fn deterministic_step(h: &NlsModeHamiltonian, state: &ModeState, dt: f64, scheme: Scheme) -> ModeState {
    match scheme {
        Scheme::EulerMaruyama => {
            let (gx, gy) = h.grad_modes(state);
            let mut out = state.clone();
            for j in 0..state.n_modes() {
                out.x[j] += dt * gy[j];
                out.y[j] -= dt * gx[j];
            }
            out
        }
        Scheme::Splitting => match h.dynamics {
            NlsDynamics::Linear => {
                let mut out = state.clone();
                rotate(&mut out, &linear_freqs(h), dt);
                out
            }
            NlsDynamics::NormalForm => {
                // frequencies depend only on the actions, which the rotation
                // preserves: this is the exact flow
                let freqs = normal_form_freqs(h, state);
                let mut out = state.clone();
                rotate(&mut out, &freqs, dt);
                out
            }
            NlsDynamics::FullCubic => {
                let freqs = linear_freqs(h);
                let mut out = state.clone();
                rotate(&mut out, &freqs, dt / 2.0);
                out = rk4_cubic_step(h, &out, dt);
                rotate(&mut out, &freqs, dt / 2.0);
                out
            }
        },
    }
}

/// Integrate the noisy mode system over [0, T]. The q-channel coefficients
/// of the noise model drive the real parts (σ_R) and the p-channel the
/// imaginary parts (σ_I); variates are counter-based in (seed, step, lane).
pub fn simulate_snls(
    h: &NlsModeHamiltonian,
    noise: &NoiseModel,
    u0: &ModeState,
    horizon: f64,
    cfg: &SimConfig,
) -> Result<ModePath> {
    let modes = h.modes();
    if u0.n_modes() != modes || noise.n_sites() != modes {
        return Err(HamlatError::DimensionMismatch {
            expected: modes,
            got: u0.n_modes().min(noise.n_sites()),
        });
    }
    if !(horizon > 0.0) {
        return Err(HamlatError::InvalidInput("T must be positive".into()));
    }
    let steps = ((horizon / cfg.dt).round() as usize).max(1);
    let dt = horizon / steps as f64;
    let sqrt_dt = dt.sqrt();
    let eps = noise.epsilon();
    let mut nodes = Vec::with_capacity(steps + 1);
    nodes.push(u0.clone());
    for k in 0..steps {
        let t = k as f64 * dt;
        let mut next = deterministic_step(h, nodes.last().unwrap(), dt, cfg.scheme);
        if eps > 0.0 {
            for j in 0..modes {
                let xi = normal_at(cfg.seed, k as u64, 2 * j as u64);
                let eta = normal_at(cfg.seed, k as u64, 2 * j as u64 + 1);
                next.x[j] += eps * noise.sigma_q_at(j, t) * sqrt_dt * xi;
                next.y[j] += eps * noise.sigma_p_at(j, t) * sqrt_dt * eta;
            }
        }
        for j in 0..modes {
            if !next.x[j].is_finite()
                || !next.y[j].is_finite()
                || next.x[j].abs() > BLOWUP_LIMIT
                || next.y[j].abs() > BLOWUP_LIMIT
            {
                return Err(HamlatError::Integration {
                    step: k,
                    t,
                    detail: format!("mode {} left the admissible range", j + 1),
                });
            }
        }
        nodes.push(next);
    }
    ModePath::new(0.0, horizon, nodes)
}

/// Most probable transition path: the ε = 0 deterministic flow.
pub fn mpp_nls(
    h: &NlsModeHamiltonian,
    u0: &ModeState,
    horizon: f64,
    cfg: &SimConfig,
) -> Result<ModePath> {
    let silent = NoiseModel::unit(h.modes(), 0.0)?;
    simulate_snls(h, &silent, u0, horizon, cfg)
}

/// ℓ^{a,p}-weighted rate of deviation from the deterministic flow:
///
///   J(ψ) = ½ ∫ Σ_j w_j [ (ẋ_j − ∂H/∂y_j)²/σ_j^R² + (ẏ_j + ∂H/∂x_j)²/σ_j^I² ] dt,
///
/// with w_j = j^{2p} e^{2aj}; +∞ when ψ does not start at the configured u0.
pub fn nls_rate_function(
    psi: &ModePath,
    h: &NlsModeHamiltonian,
    noise: &NoiseModel,
    u0: &ModeState,
) -> Result<f64> {
    let modes = h.modes();
    if psi.nodes[0].n_modes() != modes || noise.n_sites() != modes {
        return Err(HamlatError::DimensionMismatch {
            expected: modes,
            got: psi.nodes[0].n_modes(),
        });
    }
    if psi.segments() < 2 {
        return Err(HamlatError::Resolution("rate needs K ≥ 2 segments".into()));
    }
    let start = &psi.nodes[0];
    let d0: f64 = (0..modes)
        .map(|j| {
            h.model.lp_weight(j + 1)
                * ((start.x[j] - u0.x[j]).powi(2) + (start.y[j] - u0.y[j]).powi(2))
        })
        .sum::<f64>()
        .sqrt();
    if d0 > 1e-9 {
        return Ok(f64::INFINITY);
    }
    let dt = psi.dt();
    let w: Vec<f64> = (1..=modes).map(|j| h.model.lp_weight(j)).collect();
    let mut total = 0.0;
    for k in 0..psi.segments() {
        let a = &psi.nodes[k];
        let b = &psi.nodes[k + 1];
        let mid = ModeState {
            x: (0..modes).map(|j| 0.5 * (a.x[j] + b.x[j])).collect(),
            y: (0..modes).map(|j| 0.5 * (a.y[j] + b.y[j])).collect(),
        };
        let (gx, gy) = h.grad_modes(&mid);
        let tm = psi.time(k) + 0.5 * dt;
        for j in 0..modes {
            let vx = (b.x[j] - a.x[j]) / dt;
            let vy = (b.y[j] - a.y[j]) / dt;
            let rx = (vx - gy[j]) / noise.sigma_q_at(j, tm);
            let ry = (vy + gx[j]) / noise.sigma_p_at(j, tm);
            total += dt * w[j] * (rx * rx + ry * ry);
        }
    }
    Ok(0.5 * total)
}

/// Per-node torus diagnostics: worst tangential action deviation and the
/// ℓ^{a,p}-weighted energy in the normal modes.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DeviationSample {
    pub t: f64,
    pub action_dev: f64,
    pub normal_energy: f64,
}

pub fn torus_deviation(
    path: &ModePath,
    torus: &TorusSpec,
    nls: &NlsModel,
) -> Result<Vec<DeviationSample>> {
    let modes = path.nodes[0].n_modes();
    if torus.tangential.iter().any(|&j| j < 1 || j > modes) {
        return Err(HamlatError::InvalidInput(
            "torus tangential set outside the mode cutoff".into(),
        ));
    }
    let tangential: Vec<usize> = torus.tangential.clone();
    Ok(path
        .nodes
        .iter()
        .enumerate()
        .map(|(k, node)| {
            let action_dev = tangential
                .iter()
                .zip(&torus.actions)
                .map(|(&j, &target)| (node.action(j - 1) - target).abs())
                .fold(0.0f64, f64::max);
            let normal_energy: f64 = (1..=modes)
                .filter(|j| !tangential.contains(j))
                .map(|j| {
                    nls.lp_weight(j)
                        * (node.x[j - 1] * node.x[j - 1] + node.y[j - 1] * node.y[j - 1])
                })
                .sum();
            DeviationSample {
                t: path.time(k),
                action_dev,
                normal_energy,
            }
        })
        .collect())
}

/// Mode path in lattice coordinates (x_j as the site angle, y_j as the
/// momentum), for the shared action/rate machinery. Valid while |x_j| < π.
pub fn mode_path_to_lattice(path: &ModePath) -> Result<PathGrid> {
    let nodes: Vec<LatticeState> = path
        .nodes
        .iter()
        .map(|m| LatticeState::new(m.x.clone(), m.y.clone()))
        .collect::<Result<_>>()?;
    PathGrid::new(path.t0, path.t1, nodes)
}

pub fn lattice_to_mode_path(path: &PathGrid) -> Result<ModePath> {
    let nodes: Vec<ModeState> = path
        .nodes()
        .iter()
        .map(|s| ModeState::new(s.q_signed(), s.p().to_vec()))
        .collect::<Result<_>>()?;
    ModePath::new(path.t0(), path.t1(), nodes)
}

/// Time-integrated ℓ^{a,p} distance between mode paths on a shared grid.
pub fn mode_path_distance(a: &ModePath, b: &ModePath, nls: &NlsModel) -> Result<f64> {
    if a.segments() != b.segments() {
        return Err(HamlatError::DimensionMismatch {
            expected: a.segments(),
            got: b.segments(),
        });
    }
    let modes = a.nodes[0].n_modes();
    let sq: Vec<f64> = a
        .nodes
        .iter()
        .zip(&b.nodes)
        .map(|(u, v)| {
            (0..modes)
                .map(|j| {
                    nls.lp_weight(j + 1)
                        * ((u.x[j] - v.x[j]).powi(2) + (u.y[j] - v.y[j]).powi(2))
                })
                .sum::<f64>()
        })
        .collect();
    let k = sq.len() - 1;
    let mut s = 0.5 * (sq[0] + sq[k]);
    for v in &sq[1..k] {
        s += v;
    }
    Ok((s * a.dt()).sqrt())
}
