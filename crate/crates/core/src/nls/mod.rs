//! Spectral model of the cubic nonlinear Schrödinger equation on [0, π]
//! with Dirichlet sine modes φ_j = √(2/π) sin(jx) and A = −d²/dx² + m.
//!
//! In mode coordinates q_j = x_j + i y_j the Hamiltonian is
//! H = ½ Σ λ_j |q_j|² + ¼ ∫ |u|⁴ with λ_j = j² + m, and its quartic Birkhoff
//! normal form is Λ + ½ Σ Ḡ_ij |q_i|²|q_j|² with Ḡ_ij = (4 − δ_ij)/(4π).
//! Tangential/normal frequency data (α, β, A, B) come from differentiating
//! the normal form in the actions I_j = |q_j|²/2: ω(I) = α + A·I on the
//! torus and Ω(I) = β + B·I transversally.

pub mod coeffs;
pub mod dynamics;
pub mod hamiltonian;

pub use hamiltonian::{NlsDynamics, NlsModeHamiltonian};

use crate::error::{HamlatError, Result};
use crate::lattice::{Site, WeightSequence};
use coeffs::birkhoff_gbar;
use nalgebra::DMatrix;

/// Model parameters: mass m, mode cutoff, and the ℓ^{a,p} weight exponents.
/// The nonlinearity is cubic (f(s) = s, g(s) = s²/2).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct NlsModel {
    pub mass: f64,
    pub modes: usize,
    pub a_weight: f64,
    pub p_weight: f64,
}

impl NlsModel {
    pub fn new(mass: f64, modes: usize, a_weight: f64, p_weight: f64) -> Result<Self> {
        if modes < 1 {
            return Err(HamlatError::InvalidInput("need at least one mode".into()));
        }
        if a_weight < 0.0 || p_weight < 0.5 {
            return Err(HamlatError::InvalidInput(
                "weights need a ≥ 0 and p ≥ 1/2".into(),
            ));
        }
        Ok(Self {
            mass,
            modes,
            a_weight,
            p_weight,
        })
    }

    /// Desk-scale defaults: a = 0.1, p = 1.
    pub fn with_defaults(mass: f64, modes: usize) -> Self {
        Self::new(mass, modes, 0.1, 1.0).expect("defaults are valid")
    }

    /// λ_j = j² + m for the 1-based mode index.
    pub fn lambda(&self, j: usize) -> f64 {
        (j * j) as f64 + self.mass
    }

    /// ℓ^{a,p} weight j^{2p} e^{2aj} applied to |q_j|².
    pub fn lp_weight(&self, j: usize) -> f64 {
        (j as f64).powf(2.0 * self.p_weight) * (2.0 * self.a_weight * j as f64).exp()
    }
}

/// Mode amplitudes split into real and imaginary parts, q_j = x_j + i y_j.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ModeState {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(HamlatError::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(HamlatError::InvalidInput("non-finite mode amplitude".into()));
        }
        Ok(Self { x, y })
    }

    pub fn zero(modes: usize) -> Self {
        Self {
            x: vec![0.0; modes],
            y: vec![0.0; modes],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.x.len()
    }

    /// Action I_j = (x_j² + y_j²)/2 of the 0-based mode slot.
    pub fn action(&self, slot: usize) -> f64 {
        0.5 * (self.x[slot] * self.x[slot] + self.y[slot] * self.y[slot])
    }

    /// Point on the torus |q_j|² = 2 I_j with phases θ_j, zero normal modes.
    pub fn on_torus(torus: &TorusSpec, phases: &[f64], modes: usize) -> Result<Self> {
        let mut s = Self::zero(modes);
        for ((&j, &action), &phase) in torus
            .tangential
            .iter()
            .zip(&torus.actions)
            .zip(phases.iter().chain(std::iter::repeat(&0.0)))
        {
            if j < 1 || j > modes {
                return Err(HamlatError::InvalidInput(format!(
                    "torus mode {j} outside cutoff {modes}"
                )));
            }
            let r = (2.0 * action).sqrt();
            s.x[j - 1] = r * phase.cos();
            s.y[j - 1] = r * phase.sin();
        }
        Ok(s)
    }
}

/// Mode-space trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModePath {
    pub t0: f64,
    pub t1: f64,
    pub nodes: Vec<ModeState>,
}

impl ModePath {
    pub fn new(t0: f64, t1: f64, nodes: Vec<ModeState>) -> Result<Self> {
        if !(t1 > t0) || nodes.len() < 2 {
            return Err(HamlatError::InvalidInput("need t1 > t0 and ≥ 2 nodes".into()));
        }
        Ok(Self { t0, t1, nodes })
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.segments() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt()
    }
}

/// Tangential/normal frequency data of the quartic normal form.
#[derive(Debug, Clone)]
pub struct NormalForm {
    /// Tangential mode indices j₁ < … < jₙ (1-based).
    pub tangential: Vec<usize>,
    /// Normal mode indices up to the cutoff.
    pub normal: Vec<usize>,
    /// α_j = j² + m over the tangential set.
    pub alpha: Vec<f64>,
    /// β_j = j² + m over the normal set, strictly increasing.
    pub beta: Vec<f64>,
    /// Symmetric n×n torus frequency matrix: ω(I) = α + A·I.
    pub a_mat: DMatrix<f64>,
    /// (cutoff−n)×n normal coupling: Ω(I) = β + B·I.
    pub b_mat: DMatrix<f64>,
}

impl NormalForm {
    pub fn omega(&self, actions: &[f64]) -> Vec<f64> {
        (0..self.tangential.len())
            .map(|r| {
                self.alpha[r]
                    + (0..actions.len())
                        .map(|c| self.a_mat[(r, c)] * actions[c])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn omega_normal(&self, actions: &[f64]) -> Vec<f64> {
        (0..self.normal.len())
            .map(|r| {
                self.beta[r]
                    + (0..actions.len())
                        .map(|c| self.b_mat[(r, c)] * actions[c])
                        .sum::<f64>()
            })
            .collect()
    }
}

/// An invariant torus |q_j|² = 2 I_j over a tangential set.
#[derive(Debug, Clone)]
pub struct TorusSpec {
    pub tangential: Vec<usize>,
    pub actions: Vec<f64>,
}

impl TorusSpec {
    pub fn new(tangential: Vec<usize>, actions: Vec<f64>) -> Result<Self> {
        if tangential.len() != actions.len() {
            return Err(HamlatError::DimensionMismatch {
                expected: tangential.len(),
                got: actions.len(),
            });
        }
        if actions.iter().any(|&a| !(a > 0.0)) {
            return Err(HamlatError::InvalidInput("torus actions must be positive".into()));
        }
        if tangential.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HamlatError::InvalidInput(
                "tangential set must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            tangential,
            actions,
        })
    }
}

/// ℓ^{a,p} mode weights as a lattice weight sequence (ρ_j² = j^{2p} e^{2aj}),
/// so mode paths share the lattice action and rate machinery.
pub fn mode_weights(nls: &NlsModel) -> WeightSequence {
    let sites: Vec<Site> = (1..=nls.modes).map(|j| Site(vec![j as i32])).collect();
    let rho: Vec<f64> = (1..=nls.modes).map(|j| nls.lp_weight(j).sqrt()).collect();
    WeightSequence::new(sites, rho).expect("positive weights")
}

/// Assemble (α, β, A, B) for a tangential set within the cutoff.
///
/// A and B are fixed by ω(I) = ∂(Λ + Ḡ-part)/∂I with |q_j|² = 2 I_j, which
/// gives A = 4·Ḡ on J×J and B = 4·Ḡ on (normal)×J.
pub fn normal_form(nls: &NlsModel, tangential: &[usize], cutoff: usize) -> Result<NormalForm> {
    if tangential.is_empty() {
        return Err(HamlatError::InvalidInput("empty tangential set".into()));
    }
    if tangential.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HamlatError::InvalidInput(
            "tangential set must be strictly increasing".into(),
        ));
    }
    if *tangential.last().unwrap() > cutoff || tangential[0] < 1 {
        return Err(HamlatError::InvalidInput(format!(
            "tangential set must lie within 1..={cutoff}"
        )));
    }
    let normal: Vec<usize> = (1..=cutoff).filter(|j| !tangential.contains(j)).collect();
    let n = tangential.len();
    let alpha: Vec<f64> = tangential.iter().map(|&j| nls.lambda(j)).collect();
    let beta: Vec<f64> = normal.iter().map(|&j| nls.lambda(j)).collect();
    let a_mat = DMatrix::from_fn(n, n, |r, c| 4.0 * birkhoff_gbar(tangential[r], tangential[c]));
    let b_mat = DMatrix::from_fn(normal.len(), n, |r, c| {
        4.0 * birkhoff_gbar(normal[r], tangential[c])
    });
    Ok(NormalForm {
        tangential: tangential.to_vec(),
        normal,
        alpha,
        beta,
        a_mat,
        b_mat,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct NondegeneracyReport {
    pub det_a: f64,
    pub det_a_ok: bool,
    /// min over enumerated 1 ≤ |l| ≤ 2 of |⟨l, β⟩| and its witness.
    pub min_l_beta: f64,
    pub min_l_beta_witness: Vec<(usize, i32)>,
    pub l_beta_ok: bool,
    /// min over the sampled (k, l, I) grid of |⟨k, ω(I)⟩ + ⟨l, Ω(I)⟩|.
    pub min_divisor: f64,
    /// An exact divisor zero was hit on the sampled grid. Such points lie on
    /// the resonance web the Cantor construction excises; they are reported
    /// but do not fail the normal form's nondegeneracy.
    pub divisor_zero_found: bool,
    pub violations: Vec<String>,
    /// det A ≠ 0 and ⟨l, β⟩ ≠ 0 — the checkable nondegeneracy hypotheses.
    pub pass: bool,
}

/// All integer vectors with 1 ≤ |l|₁ ≤ 2 supported on `indices`, as sparse
/// (index, coefficient) lists.
pub fn enumerate_l(indices: &[usize]) -> Vec<Vec<(usize, i32)>> {
    let mut out = Vec::new();
    for (a, &ja) in indices.iter().enumerate() {
        for s in [1i32, -1] {
            out.push(vec![(ja, s)]);
            out.push(vec![(ja, 2 * s)]);
        }
        for &jb in &indices[a + 1..] {
            for sa in [1i32, -1] {
                for sb in [1i32, -1] {
                    out.push(vec![(ja, sa), (jb, sb)]);
                }
            }
        }
    }
    out
}

/// Check det A ≠ 0, ⟨l, β⟩ ≠ 0 for 1 ≤ |l| ≤ 2, and sample the combined
/// divisor ⟨k, ω(I)⟩ + ⟨l, Ω(I)⟩ over an action grid. Zeros within 1e-12
/// are flagged.
pub fn check_nondegeneracy(
    nf: &NormalForm,
    k_cutoff: i64,
    action_samples: &[Vec<f64>],
) -> NondegeneracyReport {
    const TOL: f64 = 1e-12;
    let mut violations = Vec::new();
    let det_a = nf.a_mat.clone().determinant();
    if det_a.abs() <= TOL {
        violations.push(format!("det A = {det_a:e} within tolerance of zero"));
    }

    let l_list = enumerate_l(&nf.normal);
    let beta_of = |j: usize| -> f64 {
        let pos = nf.normal.iter().position(|&v| v == j).expect("normal index");
        nf.beta[pos]
    };
    let mut min_l_beta = f64::INFINITY;
    let mut witness = Vec::new();
    for l in &l_list {
        let value: f64 = l.iter().map(|&(j, c)| c as f64 * beta_of(j)).sum();
        if value.abs() < min_l_beta {
            min_l_beta = value.abs();
            witness = l.clone();
        }
        if value.abs() <= TOL {
            violations.push(format!("⟨l, β⟩ = {value:e} for l = {l:?}"));
        }
    }

    // sampled combined divisor over (k, l) ≠ 0
    let n = nf.tangential.len();
    let mut min_div = f64::INFINITY;
    for actions in action_samples {
        let omega = nf.omega(actions);
        let big_omega = nf.omega_normal(actions);
        let l_values: Vec<f64> = l_list
            .iter()
            .map(|l| {
                l.iter()
                    .map(|&(j, c)| {
                        let pos = nf.normal.iter().position(|&v| v == j).unwrap();
                        c as f64 * big_omega[pos]
                    })
                    .sum()
            })
            .collect();
        let mut k = vec![-k_cutoff; n];
        loop {
            let k_dot: f64 = k.iter().zip(&omega).map(|(&ki, &o)| ki as f64 * o).sum();
            if k.iter().any(|&ki| ki != 0) {
                min_div = min_div.min(k_dot.abs());
            }
            for lv in &l_values {
                min_div = min_div.min((k_dot + lv).abs());
            }
            let mut pos = 0;
            while pos < n {
                k[pos] += 1;
                if k[pos] <= k_cutoff {
                    break;
                }
                k[pos] = -k_cutoff;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
    }
    let divisor_zero_found = min_div <= TOL;
    if divisor_zero_found {
        violations.push(format!(
            "sampled divisor {min_div:e} within tolerance of zero (resonant action point)"
        ));
    }

    let det_a_ok = det_a.abs() > TOL;
    let l_beta_ok = min_l_beta > TOL;
    NondegeneracyReport {
        det_a,
        det_a_ok,
        min_l_beta,
        min_l_beta_witness: witness,
        l_beta_ok,
        min_divisor: min_div,
        divisor_zero_found,
        violations,
        pass: det_a_ok && l_beta_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use coeffs::birkhoff_gbar_quadrature;
    use std::f64::consts::PI;

    #[test]
    fn normal_form_alpha_and_det() {
        let nls = NlsModel::with_defaults(1.0, 10);
        let nf = normal_form(&nls, &[1, 2], 10).unwrap();
        assert_eq!(nf.alpha, vec![2.0, 5.0]);
        // A = 4·Ḡ on {1,2}²: det = 16·(9/(16π²) − 1/π²) = −7/π²
        let det = nf.a_mat.clone().determinant();
        assert!((det + 7.0 / (PI * PI)).abs() < 1e-12, "det {det}");
        // β strictly increasing
        assert!(nf.beta.windows(2).all(|w| w[1] > w[0]));
        // A symmetric
        assert!((nf.a_mat[(0, 1)] - nf.a_mat[(1, 0)]).abs() < 1e-15);
    }

    #[test]
    fn frequency_map_matches_quadrature_energy_differences() {
        // ω(I) = α + A·I against central differences of the quartic
        // normal-form energy assembled from quadrature coefficients.
        let nls = NlsModel::with_defaults(1.0, 8);
        let tangential = [1usize, 2];
        let nf = normal_form(&nls, &tangential, 8).unwrap();
        let energy = |actions: &[f64]| -> f64 {
            let mut e = 0.0;
            for (r, &j) in tangential.iter().enumerate() {
                e += nls.lambda(j) * actions[r];
            }
            for (r, &i) in tangential.iter().enumerate() {
                for (c, &j) in tangential.iter().enumerate() {
                    e += 2.0 * birkhoff_gbar_quadrature(i, j) * actions[r] * actions[c];
                }
            }
            e
        };
        let actions = [0.31, 0.17];
        let omega = nf.omega(&actions);
        let h = 1e-6;
        for r in 0..2 {
            let mut up = actions;
            let mut dn = actions;
            up[r] += h;
            dn[r] -= h;
            let fd = (energy(&up) - energy(&dn)) / (2.0 * h);
            assert!(
                (fd - omega[r]).abs() < 1e-8,
                "mode {r}: fd {fd} vs omega {}",
                omega[r]
            );
        }
    }

    #[test]
    fn nondegeneracy_passes_for_default_model() {
        let nls = NlsModel::with_defaults(1.0, 10);
        let nf = normal_form(&nls, &[1, 2], 10).unwrap();
        let samples = vec![vec![0.05, 0.03], vec![0.2, 0.1], vec![0.0, 0.0]];
        let report = check_nondegeneracy(&nf, 3, &samples);
        assert!(report.pass, "violations: {:?}", report.violations);
        assert!(report.det_a.abs() > 0.1);
        // β_j = j² + 1 > 0, so single-l products cannot vanish
        assert!(report.min_l_beta > 0.5, "min |⟨l,β⟩| = {}", report.min_l_beta);
        // the I = 0 sample sits on the resonance web: 2ω₂ = Ω₃ = 10 exactly
        // at m = 1, so a divisor zero is found and reported
        assert!(report.divisor_zero_found);
    }

    #[test]
    fn engineered_beta_resonance_detected() {
        // m = −4 with J = {1}: mode 2 is normal with β₂ = 4 − 4 = 0
        let nls = NlsModel::with_defaults(-4.0, 6);
        let nf = normal_form(&nls, &[1], 6).unwrap();
        let report = check_nondegeneracy(&nf, 2, &[vec![0.1]]);
        assert!(!report.pass);
        assert!(
            report.violations.iter().any(|v| v.contains("⟨l, β⟩")),
            "violations: {:?}",
            report.violations
        );
    }

    #[test]
    fn torus_state_construction() {
        let torus = TorusSpec::new(vec![1, 3], vec![0.5, 0.2]).unwrap();
        let s = ModeState::on_torus(&torus, &[0.3, 1.1], 6).unwrap();
        assert!((s.action(0) - 0.5).abs() < 1e-12);
        assert!((s.action(2) - 0.2).abs() < 1e-12);
        assert_eq!(s.action(1), 0.0);
        assert!(TorusSpec::new(vec![1], vec![0.0]).is_err());
        assert!(TorusSpec::new(vec![2, 1], vec![0.1, 0.1]).is_err());
    }

    #[test]
    fn l_enumeration_count() {
        // per index: ±e, ±2e (4); per pair: 4 sign patterns
        let l = enumerate_l(&[3, 5, 9]);
        assert_eq!(l.len(), 3 * 4 + 3 * 4);
    }
}
