//! Hamiltonians on the lattice phase space, with analytic gradients.
//!
//! A model supplies H(q, p) and its per-site gradients; second derivatives
//! default to central differences of the gradients, and a model may override
//! [`Hamiltonian::hess_vec`] with exact products. Built-ins:
//!
//! - `free`:      H ≡ 0
//! - `harmonic`:  H = Σ p_i²/2 + ω_i² θ_i²/2 with θ the lifted angle near 0
//! - `pendulum`:  H = Σ p_i²/2 − cos q_i + κ Σ_nn (1 − cos(q_i − q_j))
//!
//! The spectral NLS mode Hamiltonian plugs in through the same trait from
//! `crate::nls`. Models are stateless evaluators, safe to share.

use crate::error::{HamlatError, Result};
use crate::lattice::{signed_angle, LatticeState, WeightSequence};

/// Finite-difference step for the default Hessian-vector product.
const HESS_FD_STEP: f64 = 1e-4;

pub trait Hamiltonian: Send + Sync {
    fn name(&self) -> &str;

    /// Energy H(q, p).
    fn energy(&self, x: &LatticeState) -> f64;

    /// ∂H/∂q per site, with respect to any local lift of the angle.
    fn grad_q(&self, x: &LatticeState) -> Vec<f64>;

    /// ∂H/∂p per site.
    fn grad_p(&self, x: &LatticeState) -> Vec<f64>;

    /// Global Lipschitz constant of the gradients, when known.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }

    /// Directional derivative of (grad_q, grad_p) along the tangent (dq, dp),
    /// i.e. the Hessian applied to that direction. Default: central
    /// differences of the analytic gradients.
    fn hess_vec(&self, x: &LatticeState, dq: &[f64], dp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = x.n_sites();
        let norm = dq
            .iter()
            .chain(dp.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            return (vec![0.0; n], vec![0.0; n]);
        }
        let h = HESS_FD_STEP;
        let shift = |s: f64| -> LatticeState {
            let q: Vec<f64> = (0..n).map(|i| x.q()[i] + s * h * dq[i] / norm).collect();
            let p: Vec<f64> = (0..n).map(|i| x.p()[i] + s * h * dp[i] / norm).collect();
            LatticeState::new(q, p).expect("same length")
        };
        let xp = shift(1.0);
        let xm = shift(-1.0);
        let gqp = self.grad_q(&xp);
        let gqm = self.grad_q(&xm);
        let gpp = self.grad_p(&xp);
        let gpm = self.grad_p(&xm);
        let scale = norm / (2.0 * h);
        let out_q = (0..n).map(|i| (gqp[i] - gqm[i]) * scale).collect();
        let out_p = (0..n).map(|i| (gpp[i] - gpm[i]) * scale).collect();
        (out_q, out_p)
    }
}

/// H ≡ 0; the driftless baseline.
pub struct Free {
    n: usize,
}

impl Free {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl Hamiltonian for Free {
    fn name(&self) -> &str {
        "free"
    }
    fn energy(&self, _x: &LatticeState) -> f64 {
        0.0
    }
    fn grad_q(&self, _x: &LatticeState) -> Vec<f64> {
        vec![0.0; self.n]
    }
    fn grad_p(&self, _x: &LatticeState) -> Vec<f64> {
        vec![0.0; self.n]
    }
    fn lipschitz_hint(&self) -> Option<f64> {
        Some(0.0)
    }
    fn hess_vec(&self, _x: &LatticeState, dq: &[f64], _dp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; dq.len()], vec![0.0; dq.len()])
    }
}

/// Uncoupled oscillators in the lifted-angle chart (-π, π].
pub struct HarmonicLattice {
    omega: Vec<f64>,
}

impl HarmonicLattice {
    pub fn new(omega: Vec<f64>) -> Self {
        Self { omega }
    }

    pub fn uniform(n: usize, omega: f64) -> Self {
        Self {
            omega: vec![omega; n],
        }
    }
}

impl Hamiltonian for HarmonicLattice {
    fn name(&self) -> &str {
        "harmonic"
    }
    fn energy(&self, x: &LatticeState) -> f64 {
        let mut e = 0.0;
        for i in 0..x.n_sites() {
            let th = signed_angle(x.q()[i]);
            e += 0.5 * x.p()[i] * x.p()[i] + 0.5 * self.omega[i] * self.omega[i] * th * th;
        }
        e
    }
    fn grad_q(&self, x: &LatticeState) -> Vec<f64> {
        (0..x.n_sites())
            .map(|i| self.omega[i] * self.omega[i] * signed_angle(x.q()[i]))
            .collect()
    }
    fn grad_p(&self, x: &LatticeState) -> Vec<f64> {
        x.p().to_vec()
    }
    fn hess_vec(&self, _x: &LatticeState, dq: &[f64], dp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let gq = dq
            .iter()
            .enumerate()
            .map(|(i, d)| self.omega[i] * self.omega[i] * d)
            .collect();
        (gq, dp.to_vec())
    }
}

/// Coupled pendulum chain; neighbors are consecutive sites in storage order.
pub struct PendulumLattice {
    n: usize,
    kappa: f64,
}

impl PendulumLattice {
    pub fn new(n: usize, kappa: f64) -> Self {
        Self { n, kappa }
    }
}

impl Hamiltonian for PendulumLattice {
    fn name(&self) -> &str {
        "pendulum"
    }
    fn energy(&self, x: &LatticeState) -> f64 {
        let q = x.q();
        let mut e = 0.0;
        for i in 0..self.n {
            e += 0.5 * x.p()[i] * x.p()[i] - q[i].cos();
        }
        for i in 0..self.n.saturating_sub(1) {
            e += self.kappa * (1.0 - (q[i] - q[i + 1]).cos());
        }
        e
    }
    fn grad_q(&self, x: &LatticeState) -> Vec<f64> {
        let q = x.q();
        let mut g = vec![0.0; self.n];
        for i in 0..self.n {
            g[i] = q[i].sin();
        }
        for i in 0..self.n.saturating_sub(1) {
            let s = self.kappa * (q[i] - q[i + 1]).sin();
            g[i] += s;
            g[i + 1] -= s;
        }
        g
    }
    fn grad_p(&self, x: &LatticeState) -> Vec<f64> {
        x.p().to_vec()
    }
    fn lipschitz_hint(&self) -> Option<f64> {
        Some(1.0 + 4.0 * self.kappa.abs())
    }
    fn hess_vec(&self, x: &LatticeState, dq: &[f64], dp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let q = x.q();
        let mut gq = vec![0.0; self.n];
        for i in 0..self.n {
            gq[i] = q[i].cos() * dq[i];
        }
        for i in 0..self.n.saturating_sub(1) {
            let c = self.kappa * (q[i] - q[i + 1]).cos();
            gq[i] += c * (dq[i] - dq[i + 1]);
            gq[i + 1] -= c * (dq[i] - dq[i + 1]);
        }
        (gq, dp.to_vec())
    }
}

/// Worst relative disagreement between analytic and central-difference
/// gradients over all coordinates.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// (coordinate index, is_momentum) of the worst entry.
    pub worst: (usize, bool),
}

/// Compare analytic gradients against central differences of the energy.
///
/// Relative error per coordinate is |fd − analytic| / max(1, |fd|, |analytic|).
pub fn grad_check(model: &dyn Hamiltonian, x: &LatticeState, h: f64) -> Result<GradCheckReport> {
    if !(h > 0.0) {
        return Err(HamlatError::InvalidInput("step h must be positive".into()));
    }
    if !model.energy(x).is_finite() {
        return Err(HamlatError::Model(format!(
            "{}: non-finite energy",
            model.name()
        )));
    }
    let n = x.n_sites();
    let gq = model.grad_q(x);
    let gp = model.grad_p(x);
    let mut worst = (0usize, false);
    let mut max_rel = 0.0f64;
    let mut probe = |i: usize, momentum: bool, analytic: f64| -> Result<()> {
        let mut qp = x.q().to_vec();
        let mut qm = x.q().to_vec();
        let mut pp = x.p().to_vec();
        let mut pm = x.p().to_vec();
        if momentum {
            pp[i] += h;
            pm[i] -= h;
        } else {
            qp[i] += h;
            qm[i] -= h;
        }
        let ep = model.energy(&LatticeState::new(qp, pp)?);
        let em = model.energy(&LatticeState::new(qm, pm)?);
        if !ep.is_finite() || !em.is_finite() {
            return Err(HamlatError::Model(format!(
                "{}: non-finite energy under probe",
                model.name()
            )));
        }
        let fd = (ep - em) / (2.0 * h);
        let rel = (fd - analytic).abs() / 1.0f64.max(fd.abs()).max(analytic.abs());
        if rel > max_rel {
            max_rel = rel;
            worst = (i, momentum);
        }
        Ok(())
    };
    for i in 0..n {
        probe(i, false, gq[i])?;
        probe(i, true, gp[i])?;
    }
    Ok(GradCheckReport {
        max_rel_err: max_rel,
        worst,
    })
}

/// Weighted trace of the antisymmetric part of the mixed second derivatives:
/// Σ_i ρ_i² [(∂²H/∂q_i∂p_i) − (∂²H/∂p_i∂q_i)].
///
/// Vanishes for any twice-differentiable H; this is the mechanism that kills
/// the correction term of the path functional for Hamiltonian drift. Second
/// derivatives are taken by central differences of the analytic gradients so
/// the check stays independent of any exact `hess_vec` override.
pub fn symplectic_trace_defect(
    model: &dyn Hamiltonian,
    x: &LatticeState,
    w: &WeightSequence,
) -> Result<f64> {
    let n = x.n_sites();
    if n != w.len() {
        return Err(HamlatError::DimensionMismatch {
            expected: w.len(),
            got: n,
        });
    }
    let h = HESS_FD_STEP;
    let mut defect = 0.0;
    for i in 0..n {
        // ∂(grad_q)_i/∂p_i
        let mut pp = x.p().to_vec();
        let mut pm = x.p().to_vec();
        pp[i] += h;
        pm[i] -= h;
        let gqp = model.grad_q(&LatticeState::new(x.q().to_vec(), pp)?);
        let gqm = model.grad_q(&LatticeState::new(x.q().to_vec(), pm)?);
        let d_qp = (gqp[i] - gqm[i]) / (2.0 * h);
        // ∂(grad_p)_i/∂q_i
        let mut qp = x.q().to_vec();
        let mut qm = x.q().to_vec();
        qp[i] += h;
        qm[i] -= h;
        let gpp = model.grad_p(&LatticeState::new(qp, x.p().to_vec())?);
        let gpm = model.grad_p(&LatticeState::new(qm, x.p().to_vec())?);
        let d_pq = (gpp[i] - gpm[i]) / (2.0 * h);
        defect += w.rho()[i] * w.rho()[i] * (d_qp - d_pq);
    }
    Ok(defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::weighted_norm;
    use crate::rng::normal_at;

    fn random_state_in_unit_ball(n: usize, w: &WeightSequence, seed: u64) -> LatticeState {
        let q: Vec<f64> = (0..n).map(|i| 0.4 * normal_at(seed, 0, i as u64)).collect();
        let p: Vec<f64> = (0..n).map(|i| 0.4 * normal_at(seed, 1, i as u64)).collect();
        let x = LatticeState::new(q, p).unwrap();
        let nrm = weighted_norm(&x, w).unwrap();
        if nrm <= 1.0 {
            return x;
        }
        let s = 0.9 / nrm;
        let q: Vec<f64> = x.q_signed().iter().map(|v| v * s).collect();
        let p: Vec<f64> = x.p().iter().map(|v| v * s).collect();
        LatticeState::new(q, p).unwrap()
    }

    #[test]
    fn free_model_grad_check_is_exact() {
        let m = Free::new(3);
        let x = LatticeState::new(vec![0.3, 1.0, 5.9], vec![0.1, -2.0, 0.0]).unwrap();
        let rep = grad_check(&m, &x, 1e-5).unwrap();
        assert_eq!(rep.max_rel_err, 0.0);
    }

    #[test]
    fn harmonic_grad_check_tight() {
        let w = WeightSequence::dyadic_chain(4);
        let m = HarmonicLattice::uniform(4, 1.3);
        for seed in 0..20 {
            let x = random_state_in_unit_ball(4, &w, seed);
            let rep = grad_check(&m, &x, 1e-5).unwrap();
            assert!(rep.max_rel_err <= 1e-6, "seed {seed}: {}", rep.max_rel_err);
        }
    }

    #[test]
    fn pendulum_grad_check() {
        let w = WeightSequence::dyadic_chain(4);
        let m = PendulumLattice::new(4, 0.7);
        for seed in 0..20 {
            let x = random_state_in_unit_ball(4, &w, seed);
            let rep = grad_check(&m, &x, 1e-5).unwrap();
            assert!(rep.max_rel_err <= 1e-5, "seed {seed}: {}", rep.max_rel_err);
        }
    }

    #[test]
    fn pendulum_exact_hessian_matches_fd_default() {
        let m = PendulumLattice::new(5, 0.4);
        let x = LatticeState::new(
            vec![0.1, 1.2, 3.0, 4.5, 6.0],
            vec![0.5, -0.2, 0.0, 0.3, 1.0],
        )
        .unwrap();
        let dq = vec![0.3, -1.0, 0.2, 0.0, 0.7];
        let dp = vec![-0.4, 0.1, 0.9, 0.2, -0.6];
        let (eq, ep) = m.hess_vec(&x, &dq, &dp);
        // route through the trait default on a wrapper without the override
        struct NoOverride<'a>(&'a PendulumLattice);
        impl Hamiltonian for NoOverride<'_> {
            fn name(&self) -> &str {
                "pendulum-fd"
            }
            fn energy(&self, x: &LatticeState) -> f64 {
                self.0.energy(x)
            }
            fn grad_q(&self, x: &LatticeState) -> Vec<f64> {
                self.0.grad_q(x)
            }
            fn grad_p(&self, x: &LatticeState) -> Vec<f64> {
                self.0.grad_p(x)
            }
        }
        let (fq, fp) = NoOverride(&m).hess_vec(&x, &dq, &dp);
        for i in 0..5 {
            assert!((eq[i] - fq[i]).abs() < 1e-6, "q[{i}]: {} vs {}", eq[i], fq[i]);
            assert!((ep[i] - fp[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn trace_defect_free_and_pendulum() {
        let w = WeightSequence::dyadic_chain(4);
        let free = Free::new(4);
        let pend = PendulumLattice::new(4, 0.7);
        for seed in 0..10 {
            let x = random_state_in_unit_ball(4, &w, seed);
            assert_eq!(symplectic_trace_defect(&free, &x, &w).unwrap(), 0.0);
            let d = symplectic_trace_defect(&pend, &x, &w).unwrap().abs();
            assert!(d <= 1e-8, "seed {seed}: defect {d}");
        }
    }
}
