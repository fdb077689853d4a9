//! The run configuration document: one strict JSON file.
//!
//! Unknown keys are rejected at parse time; range validation collects every
//! offending key before reporting.

use hamlat_core::action::Constraint;
use hamlat_core::lattice::{Site, WeightSequence};
use hamlat_core::models::{Free, Hamiltonian, HarmonicLattice, PendulumLattice};
use hamlat_core::nls::{NlsDynamics, NlsModeHamiltonian, NlsModel};
use hamlat_core::sde::{NoiseModel, Scheme, Sigma};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Free,
    Harmonic {
        #[serde(default = "one")]
        omega: f64,
        /// overrides `omega` with one frequency per site when present
        #[serde(default)]
        omega_per_site: Option<Vec<f64>>,
    },
    Pendulum {
        #[serde(default = "half")]
        kappa: f64,
    },
    NlsModes {
        mass: f64,
        modes: usize,
        #[serde(default = "default_a")]
        a_weight: f64,
        #[serde(default = "one")]
        p_weight: f64,
        #[serde(default = "full_cubic")]
        dynamics: NlsDynamics,
    },
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_a() -> f64 {
    0.1
}
fn full_cubic() -> NlsDynamics {
    NlsDynamics::FullCubic
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum WeightsConfig {
    /// 1-D chain 0..n with ρ_i = 2^{-i}.
    DyadicChain { n: usize },
    /// symmetric 1-D box with ρ_i = 2^{-|i|}.
    DyadicBox { radius: u32 },
    Explicit { sites: Vec<Site>, rho: Vec<f64> },
    /// ℓ^{a,p} mode weights taken from the nls_modes model block.
    NlsModes,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma_q: Sigma,
    pub sigma_p: Sigma,
    pub lower: f64,
    pub upper: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t1: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: u64,
    #[serde(default)]
    pub write_paths: usize,
    #[serde(default = "euler")]
    pub scheme: Scheme,
}

fn euler() -> Scheme {
    Scheme::EulerMaruyama
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MppConfig {
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "fixed_start")]
    pub constraint: Constraint,
    /// straight-line target; defaults to the deterministic terminal state
    #[serde(default)]
    pub guess_terminal: Option<InitialConfig>,
}

fn default_grad_tol() -> f64 {
    1e-7
}
fn default_iters() -> usize {
    20_000
}
fn fixed_start() -> Constraint {
    Constraint::FixedStart
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    /// CSV path written by `simulate`/`mpp`; evaluated against the model.
    pub path_csv: Option<String>,
    pub meta_json: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpConfig {
    pub epsilons: Vec<f64>,
    pub n: u64,
    pub radius: f64,
    /// tube center: deterministic flow from the initial state, or a linear
    /// drift at this rate in every q component
    #[serde(default)]
    pub drift_center: Option<f64>,
    #[serde(default)]
    pub refine_iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallballConfig {
    #[serde(default = "two")]
    pub p: f64,
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlConfig {
    pub grid_n: usize,
    pub modes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsCoeffsConfig {
    pub cutoff: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsToriConfig {
    pub tangential: Vec<usize>,
    pub actions: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub seeds_per_epsilon: u64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KamScanConfig {
    pub tangential: Vec<usize>,
    pub cutoff: usize,
    pub k_cutoff: i64,
    pub alphas: Vec<f64>,
    pub action_max: f64,
    pub grid_per_axis: usize,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "two")]
    pub d: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub weights: WeightsConfig,
    pub noise: NoiseConfig,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub mpp: Option<MppConfig>,
    #[serde(default)]
    pub action: Option<ActionConfig>,
    #[serde(default)]
    pub ldp: Option<LdpConfig>,
    #[serde(default)]
    pub smallball: Option<SmallballConfig>,
    #[serde(default)]
    pub kl: Option<KlConfig>,
    #[serde(default)]
    pub nls_coeffs: Option<NlsCoeffsConfig>,
    #[serde(default)]
    pub nls_tori: Option<NlsToriConfig>,
    #[serde(default)]
    pub kam_scan: Option<KamScanConfig>,
}

impl RunConfig {
    /// Range checks; every offending key is listed.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut bad = Vec::new();
        if !(self.grid.dt > 0.0) {
            bad.push(format!("grid.dt must be positive (got {})", self.grid.dt));
        }
        if !(self.grid.t1 > 0.0) {
            bad.push(format!("grid.t1 must be positive (got {})", self.grid.t1));
        }
        if !(self.noise.lower > 0.0) || self.noise.upper < self.noise.lower {
            bad.push("noise.lower/upper must satisfy 0 < lower ≤ upper".into());
        }
        if self.noise.epsilon < 0.0 {
            bad.push(format!(
                "noise.epsilon must be ≥ 0 (got {})",
                self.noise.epsilon
            ));
        }
        if self.initial.q.len() != self.initial.p.len() {
            bad.push("initial.q and initial.p must have equal length".into());
        }
        if let ModelConfig::NlsModes {
            modes,
            a_weight,
            p_weight,
            ..
        } = &self.model
        {
            if *modes < 1 {
                bad.push("model.modes must be ≥ 1".into());
            }
            if *a_weight < 0.0 {
                bad.push("model.a_weight must be ≥ 0".into());
            }
            if *p_weight < 0.5 {
                bad.push("model.p_weight must be ≥ 1/2".into());
            }
        }
        if let Some(sim) = &self.simulate {
            if sim.n == 0 {
                bad.push("simulate.n must be ≥ 1".into());
            }
        }
        if let Some(mpp) = &self.mpp {
            if !(mpp.grad_tol > 0.0) {
                bad.push(format!(
                    "mpp.grad_tol must be positive (got {})",
                    mpp.grad_tol
                ));
            }
        }
        if let Some(ldp) = &self.ldp {
            if ldp.epsilons.iter().any(|&e| !(e > 0.0)) {
                bad.push("ldp.epsilons must all be positive".into());
            }
            if !(ldp.radius > 0.0) {
                bad.push(format!("ldp.radius must be positive (got {})", ldp.radius));
            }
            if ldp.n == 0 {
                bad.push("ldp.n must be ≥ 1".into());
            }
        }
        if let Some(sb) = &self.smallball {
            if !(sb.p >= 1.0) {
                bad.push(format!("smallball.p must be ≥ 1 (got {})", sb.p));
            }
        }
        if let Some(kl) = &self.kl {
            if kl.modes == 0 || kl.grid_n < 4 * kl.modes {
                bad.push("kl.grid_n must be ≥ 4·kl.modes with modes ≥ 1".into());
            }
        }
        if let Some(nc) = &self.nls_coeffs {
            if nc.cutoff < 1 {
                bad.push("nls_coeffs.cutoff must be ≥ 1".into());
            }
        }
        if let Some(nt) = &self.nls_tori {
            if nt.tangential.len() != nt.actions.len() {
                bad.push("nls_tori.tangential and actions must pair up".into());
            }
            if nt.actions.iter().any(|&a| !(a > 0.0)) {
                bad.push("nls_tori.actions must be positive".into());
            }
            if nt.epsilons.is_empty() || nt.seeds_per_epsilon == 0 {
                bad.push("nls_tori needs epsilons and seeds_per_epsilon ≥ 1".into());
            }
        }
        if let Some(ks) = &self.kam_scan {
            if ks.grid_per_axis == 0 || !(ks.action_max > 0.0) {
                bad.push("kam_scan.grid_per_axis and action_max must be positive".into());
            }
            if ks.alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
                bad.push("kam_scan.alphas must lie in (0, 1]".into());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad)
        }
    }

    pub fn n_sites(&self) -> usize {
        self.initial.q.len()
    }

    pub fn build_model(&self) -> Result<Box<dyn Hamiltonian>, String> {
        let n = self.n_sites();
        Ok(match &self.model {
            ModelConfig::Free => Box::new(Free::new(n)),
            ModelConfig::Harmonic {
                omega,
                omega_per_site,
            } => match omega_per_site {
                Some(per_site) => {
                    if per_site.len() != n {
                        return Err(format!(
                            "model.omega_per_site has {} entries for {n} sites",
                            per_site.len()
                        ));
                    }
                    Box::new(HarmonicLattice::new(per_site.clone()))
                }
                None => Box::new(HarmonicLattice::uniform(n, *omega)),
            },
            ModelConfig::Pendulum { kappa } => Box::new(PendulumLattice::new(n, *kappa)),
            ModelConfig::NlsModes {
                mass,
                modes,
                a_weight,
                p_weight,
                dynamics,
            } => {
                if *modes != n {
                    return Err(format!(
                        "model.modes ({modes}) must match the initial state length ({n})"
                    ));
                }
                let nls = NlsModel::new(*mass, *modes, *a_weight, *p_weight)
                    .map_err(|e| e.to_string())?;
                Box::new(NlsModeHamiltonian::new(nls, *dynamics))
            }
        })
    }

    pub fn build_nls(&self) -> Result<NlsModel, String> {
        match &self.model {
            ModelConfig::NlsModes {
                mass,
                modes,
                a_weight,
                p_weight,
                ..
            } => NlsModel::new(*mass, *modes, *a_weight, *p_weight).map_err(|e| e.to_string()),
            _ => Err("this subcommand needs model.kind = \"nls_modes\"".into()),
        }
    }

    pub fn build_weights(&self) -> Result<WeightSequence, String> {
        match &self.weights {
            WeightsConfig::DyadicChain { n } => Ok(WeightSequence::dyadic_chain(*n)),
            WeightsConfig::DyadicBox { radius } => Ok(WeightSequence::dyadic_1d(*radius)),
            WeightsConfig::Explicit { sites, rho } => {
                WeightSequence::new(sites.clone(), rho.clone()).map_err(|e| e.to_string())
            }
            WeightsConfig::NlsModes => Ok(hamlat_core::nls::mode_weights(&self.build_nls()?)),
        }
    }

    pub fn build_noise(&self) -> Result<NoiseModel, String> {
        let n = self.n_sites();
        let noise = NoiseModel::new(
            vec![self.noise.sigma_q.clone(); n],
            vec![self.noise.sigma_p.clone(); n],
            self.noise.lower,
            self.noise.upper,
            self.noise.epsilon,
        )
        .map_err(|e| e.to_string())?;
        noise
            .validate_on_grid(0.0, self.grid.t1, 256)
            .map_err(|e| e.to_string())?;
        Ok(noise)
    }
}
