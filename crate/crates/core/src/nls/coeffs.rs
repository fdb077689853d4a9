//! Sine-basis quadrature and the quartic coupling coefficients.
//!
//! Midpoint quadrature on [0, π] integrates cos(Mx) exactly for every
//! integer 0 < M < 2n (the Dirichlet-kernel sum telescopes to
//! sin(Mπ) = 0), so every product of up to four modes is integrated to
//! rounding once the grid beats the combined frequency.

use crate::error::{HamlatError, Result};
use std::f64::consts::PI;

/// Midpoint grid on [0, π] with the sine-mode table φ_j(x) = √(2/π) sin(jx).
#[derive(Debug, Clone)]
pub struct SineGrid {
    pub nodes: Vec<f64>,
    /// quadrature weight (π/n, uniform)
    pub weight: f64,
    /// phi[j-1][i] = φ_j at node i
    pub phi: Vec<Vec<f64>>,
}

impl SineGrid {
    /// Grid resolving products of `modes` sines up to degree four exactly.
    pub fn for_modes(modes: usize) -> Self {
        let n = (4 * modes + 16).max(64);
        Self::with_points(modes, n)
    }

    pub fn with_points(modes: usize, n: usize) -> Self {
        let weight = PI / n as f64;
        let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * weight).collect();
        let norm = (2.0 / PI).sqrt();
        let phi = (1..=modes)
            .map(|j| nodes.iter().map(|&x| norm * (j as f64 * x).sin()).collect())
            .collect();
        Self {
            nodes,
            weight,
            phi,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫₀^π f dx by the midpoint rule over sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.weight
    }
}

/// Dirichlet eigenpair of A = −d²/dx² + m: φ_j sampled on a midpoint grid
/// and λ_j = j² + m.
pub fn eigen_pair(j: usize, mass: f64, grid_points: usize) -> Result<(Vec<f64>, f64)> {
    if j < 1 {
        return Err(HamlatError::InvalidInput("mode index starts at 1".into()));
    }
    let grid = SineGrid::with_points(j, grid_points);
    Ok((grid.phi[j - 1].clone(), (j * j) as f64 + mass))
}

/// Does any sign pattern give i ± j ± k ± l = 0?
pub fn has_resonant_sign_combo(i: usize, j: usize, k: usize, l: usize) -> bool {
    let (i, j, k, l) = (i as i64, j as i64, k as i64, l as i64);
    for sj in [1, -1] {
        for sk in [1, -1] {
            for sl in [1, -1] {
                if i + sj * j + sk * k + sl * l == 0 {
                    return true;
                }
            }
        }
    }
    false
}

/// G_ijkl = ∫₀^π φ_i φ_j φ_k φ_l dx, exactly zero unless some signed
/// combination of the indices vanishes.
pub fn g_coefficient(i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
    if i < 1 || j < 1 || k < 1 || l < 1 {
        return Err(HamlatError::InvalidInput("mode indices start at 1".into()));
    }
    if !has_resonant_sign_combo(i, j, k, l) {
        return Ok(0.0);
    }
    Ok(g_coefficient_quadrature(i, j, k, l))
}

/// The same integral evaluated by quadrature regardless of the selection
/// rule; the independent route for selection-rule tests.
pub fn g_coefficient_quadrature(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let top = i.max(j).max(k).max(l);
    let n = (2 * (i + j + k + l)).max(64);
    let grid = SineGrid::with_points(top, n);
    let vals: Vec<f64> = (0..grid.len())
        .map(|ix| {
            grid.phi[i - 1][ix] * grid.phi[j - 1][ix] * grid.phi[k - 1][ix] * grid.phi[l - 1][ix]
        })
        .collect();
    grid.integrate(&vals)
}

/// Birkhoff normal-form coefficient Ḡ_ij = (4 − δ_ij)/(4π).
pub fn birkhoff_gbar(i: usize, j: usize) -> f64 {
    let delta = if i == j { 1.0 } else { 0.0 };
    (4.0 - delta) / (4.0 * PI)
}

/// Ḡ_ij recovered from the quartic tensor by quadrature: G_ijij for i ≠ j
/// and G_iiii/2 on the diagonal. Independent of the closed form above.
pub fn birkhoff_gbar_quadrature(i: usize, j: usize) -> f64 {
    if i == j {
        0.5 * g_coefficient_quadrature(i, i, i, i)
    } else {
        g_coefficient_quadrature(i, j, i, j)
    }
}
