//! Karhunen-Loève expansion of the integrated noise and small-ball
//! probability constants.
//!
//! The per-site integrated noise Z(t) = ∫₀ᵗ σ(u) dW(u) is a Gaussian Markov
//! process with covariance K(s,t) = ∫₀^{s∧t} σ²(u) du; its KL eigenpairs come
//! from a Nyström (midpoint) discretization of the integral operator. The
//! small-ball rate lim ε² ln P(‖X‖_p ≤ ε) = −κ_p (∫ (G′H − H′G)^{p/(2+p)})^{(2+p)/p}
//! needs κ_p = 2^{2/p} p (λ₁(p)/(2+p))^{(2+p)/p} and the ground state λ₁(p)
//! of −½φ″ + |x|^p φ, which we compute by finite differences with Richardson
//! extrapolation on a truncated interval.

use crate::error::{HamlatError, Result};
use crate::lattice::WeightSequence;
use crate::sde::NoiseModel;
use nalgebra::DMatrix;

/// KL eigenpairs of one scalar integrated-noise process on [0, T].
#[derive(Debug, Clone)]
pub struct KLBasis {
    /// Midpoint grid on [0, T].
    pub grid: Vec<f64>,
    /// Top eigenvalues λ_j² (variances), descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenfunctions sampled on `grid`, orthonormal in L²([0, T]).
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Σ over all modes of λ_j² = ∫ K(t,t) dt (operator trace).
    pub total_variance: f64,
}

impl KLBasis {
    /// Variance not captured by the returned modes.
    pub fn tail_variance(&self) -> f64 {
        (self.total_variance - self.eigenvalues.iter().sum::<f64>()).max(0.0)
    }

    /// Quadrature weight of the midpoint grid.
    pub fn dt(&self) -> f64 {
        if self.grid.len() >= 2 {
            self.grid[1] - self.grid[0]
        } else {
            0.0
        }
    }

    /// L² coefficients ⟨f, l_j⟩ of a function sampled on `grid`.
    pub fn project(&self, samples: &[f64]) -> Vec<f64> {
        let h = self.dt();
        self.eigenfunctions
            .iter()
            .map(|l| l.iter().zip(samples).map(|(a, b)| a * b).sum::<f64>() * h)
            .collect()
    }
}

/// Nyström discretization of the covariance operator with kernel
/// K(s,t) = ∫₀^{min(s,t)} σ²(u) du; returns the top `modes` eigenpairs.
pub fn kl_expand(
    sigma: impl Fn(f64) -> f64,
    t_end: f64,
    n: usize,
    modes: usize,
) -> Result<KLBasis> {
    if modes == 0 || n < 4 * modes {
        return Err(HamlatError::Resolution(format!(
            "need grid n ≥ 4·modes, got n = {n}, modes = {modes}"
        )));
    }
    if !(t_end > 0.0) {
        return Err(HamlatError::InvalidInput("T must be positive".into()));
    }
    let h = t_end / n as f64;
    let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    // cumulative ∫σ² at the grid midpoints, substepped for accuracy
    let subs = 8;
    let mut cum = vec![0.0; n];
    let mut acc = 0.0;
    let mut t_prev = 0.0;
    for i in 0..n {
        let t_i = grid[i];
        let dt = (t_i - t_prev) / subs as f64;
        for s in 0..subs {
            let u = t_prev + (s as f64 + 0.5) * dt;
            let sv = sigma(u);
            acc += sv * sv * dt;
        }
        cum[i] = acc;
        t_prev = t_i;
    }
    let mat = DMatrix::from_fn(n, n, |i, j| h * cum[i.min(j)]);
    let trace = mat.trace();
    let eig = mat.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let inv_sqrt_h = 1.0 / h.sqrt();
    let mut eigenvalues = Vec::with_capacity(modes);
    let mut eigenfunctions = Vec::with_capacity(modes);
    for &ix in order.iter().take(modes) {
        eigenvalues.push(eig.eigenvalues[ix].max(0.0));
        let col = eig.eigenvectors.column(ix);
        let mut f: Vec<f64> = col.iter().map(|v| v * inv_sqrt_h).collect();
        // fix sign by the largest-magnitude sample
        let lead = f
            .iter()
            .cloned()
            .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        if lead < 0.0 {
            f.iter_mut().for_each(|v| *v = -*v);
        }
        eigenfunctions.push(f);
    }
    Ok(KLBasis {
        grid,
        eigenvalues,
        eigenfunctions,
        total_variance: trace,
    })
}

/// Count of eigenvalues of the symmetric tridiagonal matrix strictly below x
/// (Sturm sequence).
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut d = f64::INFINITY;
    let off2 = off * off;
    for &a in diag {
        let denom = if d == 0.0 { 1e-300 } else { d };
        d = a - x - off2 / denom;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiag_smallest(diag: &[f64], off: f64, mut lo: f64, mut hi: f64) -> f64 {
    while sturm_count(diag, off, hi) == 0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn lambda1_on_mesh(p: f64, radius: f64, mesh: usize) -> f64 {
    let h = 2.0 * radius / mesh as f64;
    let inv_h2 = 1.0 / (h * h);
    // interior points of [-R, R] with Dirichlet walls
    let diag: Vec<f64> = (1..mesh)
        .map(|i| {
            let x = -radius + i as f64 * h;
            inv_h2 + x.abs().powf(p)
        })
        .collect();
    tridiag_smallest(&diag, -0.5 * inv_h2, 0.0, 4.0)
}

/// Ground-state eigenvalue of the form ∫ |x|^p φ² + ½ ∫ (φ′)² over unit-norm φ.
///
/// Finite differences on [-R, R] with R set so |x|^p at the wall dominates the
/// eigenvalue scale, mesh 4096, Richardson-extrapolated against mesh 2048.
pub fn lambda1(p: f64) -> Result<f64> {
    if !(1.0..f64::INFINITY).contains(&p) {
        return Err(HamlatError::InvalidInput(format!(
            "norm exponent p must be in [1, ∞), got {p}"
        )));
    }
    lambda1_with(p, default_radius(p), 4096)
}

pub(crate) fn default_radius(p: f64) -> f64 {
    // potential at the wall ≥ 80× a generous eigenvalue bound
    (80.0f64 * 1.5).powf(1.0 / p)
}

pub(crate) fn lambda1_with(p: f64, radius: f64, mesh: usize) -> Result<f64> {
    if mesh < 16 {
        return Err(HamlatError::Resolution("lambda1 mesh too coarse".into()));
    }
    let coarse = lambda1_on_mesh(p, radius, mesh / 2);
    let fine = lambda1_on_mesh(p, radius, mesh);
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Small-ball constants of a Gaussian Markov process under the L^p norm.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SmallBallReport {
    pub kappa_p: f64,
    pub lambda1_p: f64,
    /// Value of lim ε² ln P(‖X‖_p ≤ ε); always ≤ 0.
    pub limit_constant: f64,
}

/// κ_p = 2^{2/p} · p · (λ₁(p)/(2+p))^{(2+p)/p}.
pub fn kappa(p: f64) -> Result<f64> {
    let l1 = lambda1(p)?;
    Ok(2.0f64.powf(2.0 / p) * p * (l1 / (2.0 + p)).powf((2.0 + p) / p))
}

/// Small-ball limit from the Markov factorization σ(s,t) = G(s∧t)·H(s∨t):
///
///   lim ε² ln P(‖X‖_p ≤ ε) = −κ_p (∫₀¹ (G′H − H′G)^{p/(2+p)} dt)^{(2+p)/p}.
pub fn small_ball_constant(
    g: impl Fn(f64) -> f64,
    h: impl Fn(f64) -> f64,
    p: f64,
) -> Result<SmallBallReport> {
    let l1 = lambda1(p)?;
    let kappa_p = 2.0f64.powf(2.0 / p) * p * (l1 / (2.0 + p)).powf((2.0 + p) / p);
    let n = 4096;
    let dt = 1.0 / n as f64;
    let fd = 1e-6;
    let mut integral = 0.0;
    let mut prev_ratio = f64::NEG_INFINITY;
    for i in 0..n {
        let t = (i as f64 + 0.5) * dt;
        let (gv, hv) = (g(t), h(t));
        if !(gv > 0.0) || !(hv > 0.0) {
            return Err(HamlatError::InvalidInput(
                "factorization needs G > 0 and H > 0 on (0,1)".into(),
            ));
        }
        let ratio = gv / hv;
        if ratio <= prev_ratio {
            return Err(HamlatError::InvalidInput(
                "G/H must be strictly increasing on (0,1)".into(),
            ));
        }
        prev_ratio = ratio;
        let gp = (g(t + fd) - g(t - fd)) / (2.0 * fd);
        let hp = (h(t + fd) - h(t - fd)) / (2.0 * fd);
        let w = gp * hv - hp * gv;
        if w < 0.0 {
            return Err(HamlatError::InvalidInput(
                "G′H − H′G must be nonnegative".into(),
            ));
        }
        integral += w.powf(p / (2.0 + p)) * dt;
    }
    let limit_constant = -kappa_p * integral.powf((2.0 + p) / p);
    Ok(SmallBallReport {
        kappa_p,
        lambda1_p: l1,
        limit_constant,
    })
}

/// Same limit through the integrated-noise form Z(t) = ∫₀ᵗ f dW on [0, 1]:
///
///   lim ε² ln P(‖Z‖_p ≤ ε) = −κ_p (∫₀¹ |f|^{2p/(2+p)} dt)^{(2+p)/p}.
pub fn small_ball_constant_integrated(f: impl Fn(f64) -> f64, p: f64) -> Result<SmallBallReport> {
    let l1 = lambda1(p)?;
    let kappa_p = 2.0f64.powf(2.0 / p) * p * (l1 / (2.0 + p)).powf((2.0 + p) / p);
    let n = 4096;
    let dt = 1.0 / n as f64;
    let mut integral = 0.0;
    for i in 0..n {
        let t = (i as f64 + 0.5) * dt;
        integral += f(t).abs().powf(2.0 * p / (2.0 + p)) * dt;
    }
    let limit_constant = -kappa_p * integral.powf((2.0 + p) / p);
    Ok(SmallBallReport {
        kappa_p,
        lambda1_p: l1,
        limit_constant,
    })
}

/// Lower bound −κ₂ C_ρ² M² on lim ε² ln P(‖X‖_{L²_ρ} ≤ ε) for the
/// infinite-dimensional integrated noise, with C_ρ = Σ ρ_j and M the
/// ellipticity upper bound.
pub fn small_ball_bound_rho(noise: &NoiseModel, w: &WeightSequence) -> Result<f64> {
    let kappa2 = kappa(2.0)?;
    let c = w.c_rho();
    let m = noise.upper();
    Ok(-kappa2 * c * c * m * m)
}
