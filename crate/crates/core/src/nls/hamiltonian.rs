//! The mode-space Hamiltonian as a plug-in lattice model.
//!
//! Mode amplitudes ride the lattice chart: x_j is the angle representative
//! in (-π, π] of site j and y_j the momentum. Valid for the bounded
//! amplitude ranges the spectral model is used on.

use super::coeffs::{birkhoff_gbar, SineGrid};
use super::{ModeState, NlsModel};
use crate::lattice::LatticeState;
use crate::models::Hamiltonian;

/// How much of the Hamiltonian the dynamics carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NlsDynamics {
    /// Λ only: uncoupled rotations with frequencies λ_j.
    Linear,
    /// Λ plus the Birkhoff quartic ½ Σ Ḡ_ij |q_i|²|q_j|²: integrable.
    NormalForm,
    /// Λ + ¼∫|u|⁴: the full cubic Galerkin truncation.
    FullCubic,
}

pub struct NlsModeHamiltonian {
    pub model: NlsModel,
    pub dynamics: NlsDynamics,
    grid: SineGrid,
    gbar: Vec<Vec<f64>>,
}

impl NlsModeHamiltonian {
    pub fn new(model: NlsModel, dynamics: NlsDynamics) -> Self {
        let grid = SineGrid::for_modes(model.modes);
        let gbar = (1..=model.modes)
            .map(|i| (1..=model.modes).map(|j| birkhoff_gbar(i, j)).collect())
            .collect();
        Self {
            model,
            dynamics,
            grid,
            gbar,
        }
    }

    pub fn modes(&self) -> usize {
        self.model.modes
    }

    fn mode_state(&self, s: &LatticeState) -> ModeState {
        ModeState {
            x: s.q_signed(),
            y: s.p().to_vec(),
        }
    }

    /// Real and imaginary parts of u = Σ q_j φ_j on the quadrature grid.
    fn synthesize(&self, m: &ModeState) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.len();
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for j in 0..self.model.modes {
            let phi = &self.grid.phi[j];
            let (xj, yj) = (m.x[j], m.y[j]);
            if xj != 0.0 || yj != 0.0 {
                for ix in 0..n {
                    re[ix] += xj * phi[ix];
                    im[ix] += yj * phi[ix];
                }
            }
        }
        (re, im)
    }

    fn project(&self, values: &[f64]) -> Vec<f64> {
        (0..self.model.modes)
            .map(|j| {
                self.grid.phi[j]
                    .iter()
                    .zip(values)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * self.grid.weight
            })
            .collect()
    }

    pub fn energy_modes(&self, m: &ModeState) -> f64 {
        let modes = self.model.modes;
        let mut e = 0.0;
        for j in 0..modes {
            e += 0.5 * self.model.lambda(j + 1) * (m.x[j] * m.x[j] + m.y[j] * m.y[j]);
        }
        match self.dynamics {
            NlsDynamics::Linear => e,
            NlsDynamics::NormalForm => {
                let actions: Vec<f64> = (0..modes).map(|j| m.action(j)).collect();
                let mut quartic = 0.0;
                for i in 0..modes {
                    for j in 0..modes {
                        quartic += self.gbar[i][j] * actions[i] * actions[j];
                    }
                }
                e + 2.0 * quartic
            }
            NlsDynamics::FullCubic => {
                let (re, im) = self.synthesize(m);
                let quartic: Vec<f64> = re
                    .iter()
                    .zip(&im)
                    .map(|(&r, &i)| {
                        let a = r * r + i * i;
                        a * a
                    })
                    .collect();
                e + 0.25 * self.grid.integrate(&quartic)
            }
        }
    }

    /// (∂H/∂x, ∂H/∂y) per mode.
    pub fn grad_modes(&self, m: &ModeState) -> (Vec<f64>, Vec<f64>) {
        let modes = self.model.modes;
        let mut gx: Vec<f64> = (0..modes).map(|j| self.model.lambda(j + 1) * m.x[j]).collect();
        let mut gy: Vec<f64> = (0..modes).map(|j| self.model.lambda(j + 1) * m.y[j]).collect();
        match self.dynamics {
            NlsDynamics::Linear => {}
            NlsDynamics::NormalForm => {
                let actions: Vec<f64> = (0..modes).map(|j| m.action(j)).collect();
                for n in 0..modes {
                    // ∂(2ΣḠ I I)/∂I_n = 4 Σ_j Ḡ_nj I_j, then ∂I_n/∂x_n = x_n
                    let nu: f64 = (0..modes).map(|j| 4.0 * self.gbar[n][j] * actions[j]).sum();
                    gx[n] += nu * m.x[n];
                    gy[n] += nu * m.y[n];
                }
            }
            NlsDynamics::FullCubic => {
                let (re, im) = self.synthesize(m);
                let n_x = self.grid.len();
                let mut fx = vec![0.0; n_x];
                let mut fy = vec![0.0; n_x];
                for ix in 0..n_x {
                    let a = re[ix] * re[ix] + im[ix] * im[ix];
                    fx[ix] = a * re[ix];
                    fy[ix] = a * im[ix];
                }
                let px = self.project(&fx);
                let py = self.project(&fy);
                for j in 0..modes {
                    gx[j] += px[j];
                    gy[j] += py[j];
                }
            }
        }
        (gx, gy)
    }

    /// Hessian applied to a mode-space direction (dx, dy).
    pub fn hess_vec_modes(
        &self,
        m: &ModeState,
        dx: &[f64],
        dy: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let modes = self.model.modes;
        let mut hx: Vec<f64> = (0..modes).map(|j| self.model.lambda(j + 1) * dx[j]).collect();
        let mut hy: Vec<f64> = (0..modes).map(|j| self.model.lambda(j + 1) * dy[j]).collect();
        match self.dynamics {
            NlsDynamics::Linear => {}
            NlsDynamics::NormalForm => {
                let actions: Vec<f64> = (0..modes).map(|j| m.action(j)).collect();
                let d_actions: Vec<f64> = (0..modes)
                    .map(|j| m.x[j] * dx[j] + m.y[j] * dy[j])
                    .collect();
                for n in 0..modes {
                    let nu: f64 = (0..modes).map(|j| 4.0 * self.gbar[n][j] * actions[j]).sum();
                    let dnu: f64 = (0..modes)
                        .map(|j| 4.0 * self.gbar[n][j] * d_actions[j])
                        .sum();
                    hx[n] += nu * dx[n] + dnu * m.x[n];
                    hy[n] += nu * dy[n] + dnu * m.y[n];
                }
            }
            NlsDynamics::FullCubic => {
                let (re, im) = self.synthesize(m);
                let dm = ModeState {
                    x: dx.to_vec(),
                    y: dy.to_vec(),
                };
                let (dre, dim) = self.synthesize(&dm);
                let n_x = self.grid.len();
                let mut fx = vec![0.0; n_x];
                let mut fy = vec![0.0; n_x];
                for ix in 0..n_x {
                    let a = re[ix] * re[ix] + im[ix] * im[ix];
                    let da = 2.0 * (re[ix] * dre[ix] + im[ix] * dim[ix]);
                    fx[ix] = da * re[ix] + a * dre[ix];
                    fy[ix] = da * im[ix] + a * dim[ix];
                }
                let px = self.project(&fx);
                let py = self.project(&fy);
                for j in 0..modes {
                    hx[j] += px[j];
                    hy[j] += py[j];
                }
            }
        }
        (hx, hy)
    }
}

impl Hamiltonian for NlsModeHamiltonian {
    fn name(&self) -> &str {
        match self.dynamics {
            NlsDynamics::Linear => "nls_modes_linear",
            NlsDynamics::NormalForm => "nls_modes_normal_form",
            NlsDynamics::FullCubic => "nls_modes",
        }
    }

    fn energy(&self, s: &LatticeState) -> f64 {
        self.energy_modes(&self.mode_state(s))
    }

    fn grad_q(&self, s: &LatticeState) -> Vec<f64> {
        self.grad_modes(&self.mode_state(s)).0
    }

    fn grad_p(&self, s: &LatticeState) -> Vec<f64> {
        self.grad_modes(&self.mode_state(s)).1
    }

    fn hess_vec(&self, s: &LatticeState, dq: &[f64], dp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.hess_vec_modes(&self.mode_state(s), dq, dp)
    }
}
