//! One function per subcommand; each writes its documented artifacts into
//! the output directory and stays byte-deterministic for a fixed config and
//! seed (the manifest's timing field is the only exception, written by the
//! caller).

use crate::config::{ModelConfig, RunConfig};
use hamlat_core::action::{
    euler_lagrange_residual, minimize_action, om_action, straight_line_path, MinimizeConfig,
};
use hamlat_core::gauss::{kl_expand, small_ball_bound_rho, small_ball_constant};
use hamlat_core::kam::{diophantine_scan, fit_measure_exponent, resonant_measure_mc, ResonanceScan};
use hamlat_core::lattice::{
    path_from_csv, path_to_csv,weighted_norm, LatticeState, PathMeta,
};
use hamlat_core::ldp::{ldp_scaling_fit, linear_drift_center, run_ladder, TubeSpec};
use hamlat_core::models::{grad_check, symplectic_trace_defect};
use hamlat_core::nls::coeffs::{birkhoff_gbar, g_coefficient};
use hamlat_core::nls::dynamics::{simulate_snls, torus_deviation};
use hamlat_core::nls::{normal_form, ModeState, TorusSpec as NlsTorus};
use hamlat_core::rng::{derive_seed, normal_at, uniform_at};
use hamlat_core::sde::{simulate, simulate_deterministic, Scheme, SimConfig};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub enum CmdError {
    Validation(String),
    Numerical(String),
}

impl From<hamlat_core::HamlatError> for CmdError {
    fn from(e: hamlat_core::HamlatError) -> Self {
        CmdError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Validation(format!("io: {e}"))
    }
}

type CmdResult = Result<(), CmdError>;

fn val(msg: impl Into<String>) -> CmdError {
    CmdError::Validation(msg.into())
}

fn initial_state(cfg: &RunConfig) -> Result<LatticeState, CmdError> {
    LatticeState::new(cfg.initial.q.clone(), cfg.initial.p.clone()).map_err(CmdError::from)
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> CmdResult {
    fs::write(dir.join(name), serde_json::to_string_pretty(value).unwrap() + "\n")?;
    Ok(())
}

pub fn gradcheck(cfg: &RunConfig, dir: &Path, seed: u64) -> CmdResult {
    let model = cfg.build_model().map_err(val)?;
    let w = cfg.build_weights().map_err(val)?;
    let n = cfg.n_sites();
    let mut worst_grad = 0.0f64;
    let mut worst_defect_ratio = 0.0f64;
    let states = 100;
    for rep in 0..states {
        let s = seed.wrapping_add(rep);
        let q: Vec<f64> = (0..n).map(|i| 0.4 * normal_at(s, 0, i as u64)).collect();
        let p: Vec<f64> = (0..n).map(|i| 0.4 * normal_at(s, 1, i as u64)).collect();
        let x = LatticeState::new(q, p)?;
        let rep_g = grad_check(model.as_ref(), &x, 1e-5)?;
        worst_grad = worst_grad.max(rep_g.max_rel_err);
        let defect = symplectic_trace_defect(model.as_ref(), &x, &w)?.abs();
        let scale = 1.0 + weighted_norm(&x, &w)?;
        worst_defect_ratio = worst_defect_ratio.max(defect / scale);
    }
    write_json(
        dir,
        "gradcheck.json",
        &serde_json::json!({
            "model": model.name(),
            "states": states,
            "max_rel_err": worst_grad,
            "max_trace_defect_ratio": worst_defect_ratio,
            "pass": worst_grad <= 1e-5 && worst_defect_ratio <= 1e-6,
        }),
    )
}

pub fn simulate_cmd(cfg: &RunConfig, dir: &Path, seed: u64) -> CmdResult {
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| val("config block `simulate` is required"))?;
    let model = cfg.build_model().map_err(val)?;
    let w = cfg.build_weights().map_err(val)?;
    let noise = cfg.build_noise().map_err(val)?;
    let x0 = initial_state(cfg)?;
    let records: Vec<(u64, String)> = (0..sim.n)
        .into_par_iter()
        .map(|i| -> Result<(u64, String), hamlat_core::HamlatError> {
            let traj_seed = derive_seed(seed, i);
            let c = SimConfig::new(cfg.grid.dt, traj_seed, sim.scheme)?;
            let path = simulate(model.as_ref(), &noise, &x0, cfg.grid.t1, &c)?;
            let end = path.last();
            let record = serde_json::json!({
                "index": i,
                "seed": traj_seed,
                "terminal_q": end.q(),
                "terminal_p": end.p(),
                "energy": model.energy(end),
                "path_norm": hamlat_core::lattice::path_norm(&path, &w)?,
            });
            Ok((i, record.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut lines: Vec<(u64, String)> = records;
    lines.sort_by_key(|r| r.0);
    let body: String = lines.iter().map(|(_, l)| l.clone() + "\n").collect();
    fs::write(dir.join("ensemble.jsonl"), body)?;

    for i in 0..(sim.write_paths as u64).min(sim.n) {
        let traj_seed = derive_seed(seed, i);
        let c = SimConfig::new(cfg.grid.dt, traj_seed, sim.scheme)?;
        let path = simulate(model.as_ref(), &noise, &x0, cfg.grid.t1, &c)?;
        fs::write(dir.join(format!("path_{i}.csv")), path_to_csv(&path, &w)?)?;
        let meta = PathMeta::of(&path, &w);
        fs::write(
            dir.join(format!("path_{i}.meta.json")),
            serde_json::to_string_pretty(&meta).unwrap() + "\n",
        )?;
    }
    Ok(())
}

pub fn mpp(cfg: &RunConfig, dir: &Path, _seed: u64) -> CmdResult {
    let mcfg = cfg
        .mpp
        .as_ref()
        .ok_or_else(|| val("config block `mpp` is required"))?;
    let model = cfg.build_model().map_err(val)?;
    let w = cfg.build_weights().map_err(val)?;
    let noise = cfg.build_noise().map_err(val)?;
    let x0 = initial_state(cfg)?;
    let sim_cfg = SimConfig::new(cfg.grid.dt, 0, Scheme::Splitting)?;
    let flow = simulate_deterministic(model.as_ref(), &x0, cfg.grid.t1, &sim_cfg)?;
    let target = match &mcfg.guess_terminal {
        Some(t) => LatticeState::new(t.q.clone(), t.p.clone())?,
        None => flow.last().clone(),
    };
    let initial = straight_line_path(0.0, cfg.grid.t1, &x0, &target, flow.segments())?;
    let opts = MinimizeConfig {
        grad_tol: mcfg.grad_tol,
        max_iters: mcfg.max_iters,
        constraint: mcfg.constraint,
        ..Default::default()
    };
    let (path, report, iters) = minimize_action(&initial, model.as_ref(), &noise, &w, &opts)?;
    fs::write(dir.join("mpp_path.csv"), path_to_csv(&path, &w)?)?;
    fs::write(
        dir.join("mpp_path.meta.json"),
        serde_json::to_string_pretty(&PathMeta::of(&path, &w)).unwrap() + "\n",
    )?;
    write_json(
        dir,
        "mpp_report.json",
        &serde_json::json!({
            "total": report.total,
            "q_term": report.q_term,
            "p_term": report.p_term,
            "el_residual": report.el_residual,
            "iterations": iters,
        }),
    )
}

pub fn action(cfg: &RunConfig, dir: &Path, _seed: u64) -> CmdResult {
    let acfg = cfg
        .action
        .as_ref()
        .ok_or_else(|| val("config block `action` is required"))?;
    let model = cfg.build_model().map_err(val)?;
    let w = cfg.build_weights().map_err(val)?;
    let noise = cfg.build_noise().map_err(val)?;
    let path = match (&acfg.path_csv, &acfg.meta_json) {
        (Some(csv), Some(meta)) => {
            let csv = fs::read_to_string(csv)?;
            let meta: PathMeta = serde_json::from_str(&fs::read_to_string(meta)?)
                .map_err(|e| val(format!("bad sidecar: {e}")))?;
            path_from_csv(&csv, &meta)?
        }
        (None, None) => {
            let x0 = initial_state(cfg)?;
            let sim_cfg = SimConfig::new(cfg.grid.dt, 0, Scheme::Splitting)?;
            simulate_deterministic(model.as_ref(), &x0, cfg.grid.t1, &sim_cfg)?
        }
        _ => return Err(val("action.path_csv and action.meta_json go together")),
    };
    let report = om_action(&path, model.as_ref(), &noise, &w)?;
    let residual = euler_lagrange_residual(&path, model.as_ref(), &w)?;
    write_json(
        dir,
        "action_report.json",
        &serde_json::json!({
            "total": report.total,
            "q_term": report.q_term,
            "p_term": report.p_term,
            "el_residual": residual,
        }),
    )
}

pub fn ldp(cfg: &RunConfig, dir: &Path, seed: u64) -> CmdResult {
    let lcfg = cfg
        .ldp
        .as_ref()
        .ok_or_else(|| val("config block `ldp` is required"))?;
    let model = cfg.build_model().map_err(val)?;
    let w = cfg.build_weights().map_err(val)?;
    let noise = cfg.build_noise().map_err(val)?;
    let x0 = initial_state(cfg)?;
    let center = match lcfg.drift_center {
        Some(c) => {
            let segments = (cfg.grid.t1 / cfg.grid.dt).round().max(1.0) as usize;
            linear_drift_center(&x0, c, cfg.grid.t1, segments)
        }
        None => {
            let sim_cfg = SimConfig::new(cfg.grid.dt, 0, Scheme::Splitting)?;
            simulate_deterministic(model.as_ref(), &x0, cfg.grid.t1, &sim_cfg)?
        }
    };
    let tube = TubeSpec::new(center, lcfg.radius)?;
    let estimate = run_ladder(model.as_ref(), &noise, &tube, &lcfg.epsilons, lcfg.n, seed, &w)?;

    let mut csv = String::from("epsilon,hits,n,p_hat,ci_low,ci_high,eps2_ln_p\n");
    for (eps, level) in estimate.epsilons.iter().zip(&estimate.levels) {
        let scaled = if level.p_hat > 0.0 {
            (eps * eps * level.p_hat.ln()).to_string()
        } else {
            String::from("nan")
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            eps, level.hits, level.samples, level.p_hat, level.ci_low, level.ci_high, scaled
        );
    }
    fs::write(dir.join("ldp_table.csv"), csv)?;

    let fit = ldp_scaling_fit(&estimate, &tube, model.as_ref(), &noise, &w, lcfg.refine_iters)?;
    write_json(
        dir,
        "ldp_fit.json",
        &serde_json::to_value(&fit).map_err(|e| val(e.to_string()))?,
    )
}

pub fn smallball(cfg: &RunConfig, dir: &Path, _seed: u64) -> CmdResult {
    let scfg = cfg
        .smallball
        .as_ref()
        .ok_or_else(|| val("config block `smallball` is required"))?;
    let w = cfg.build_weights().map_err(val)?;
    let noise = cfg.build_noise().map_err(val)?;
    // Brownian factorization G = t, H = 1 as the reference process
    let report = small_ball_constant(|t| t, |_| 1.0, scfg.p)?;
    let bound = small_ball_bound_rho(&noise, &w)?;
    write_json(
        dir,
        "smallball.json",
        &serde_json::json!({
            "p": scfg.p,
            "kappa_p": report.kappa_p,
            "lambda1_p": report.lambda1_p,
            "limit_constant": report.limit_constant,
            "bound_rho": bound,
            "c_rho": w.c_rho(),
            "noise_upper": noise.upper(),
        }),
    )
}

pub fn kl(cfg: &RunConfig, dir: &Path, _seed: u64) -> CmdResult {
    let kcfg = cfg
        .kl
        .as_ref()
        .ok_or_else(|| val("config block `kl` is required"))?;
    let noise = cfg.build_noise().map_err(val)?;
    // site 0, q channel carries the expansion
    let basis = kl_expand(|t| noise.sigma_q_at(0, t), cfg.grid.t1, kcfg.grid_n, kcfg.modes)?;
    let mut eig = String::from("j,lambda_sq\n");
    for (j, l) in basis.eigenvalues.iter().enumerate() {
        let _ = writeln!(eig, "{},{}", j + 1, l);
    }
    fs::write(dir.join("kl_eigenvalues.csv"), eig)?;
    let mut funcs = String::from("t");
    for j in 1..=kcfg.modes {
        let _ = write!(funcs, ",l_{j}");
    }
    funcs.push('\n');
    for (i, t) in basis.grid.iter().enumerate() {
        let _ = write!(funcs, "{t}");
        for f in &basis.eigenfunctions {
            let _ = write!(funcs, ",{}", f[i]);
        }
        funcs.push('\n');
    }
    fs::write(dir.join("kl_eigenfunctions.csv"), funcs)?;
    write_json(
        dir,
        "kl_summary.json",
        &serde_json::json!({
            "total_variance": basis.total_variance,
            "captured": basis.eigenvalues.iter().sum::<f64>(),
            "tail_variance": basis.tail_variance(),
        }),
    )
}

pub fn nls_coeffs(cfg: &RunConfig, dir: &Path, _seed: u64) -> CmdResult {
    let ccfg = cfg
        .nls_coeffs
        .as_ref()
        .ok_or_else(|| val("config block `nls_coeffs` is required"))?;
    let c = ccfg.cutoff;
    let mut gbar = String::from("i,j,value\n");
    for i in 1..=c {
        for j in 1..=c {
            let _ = writeln!(gbar, "{},{},{}", i, j, birkhoff_gbar(i, j));
        }
    }
    fs::write(dir.join("gbar.csv"), gbar)?;

    let mut g = String::from("i,j,k,l,value\n");
    for i in 1..=c {
        for j in i..=c {
            for k in j..=c {
                for l in k..=c {
                    let _ = writeln!(g, "{},{},{},{},{}", i, j, k, l, g_coefficient(i, j, k, l)?);
                }
            }
        }
    }
    fs::write(dir.join("g_coeffs.csv"), g)?;
    Ok(())
}

pub fn nls_tori(cfg: &RunConfig, dir: &Path, seed: u64) -> CmdResult {
    let tcfg = cfg
        .nls_tori
        .as_ref()
        .ok_or_else(|| val("config block `nls_tori` is required"))?;
    let nls = cfg.build_nls().map_err(val)?;
    let dynamics = match &cfg.model {
        ModelConfig::NlsModes { dynamics, .. } => *dynamics,
        _ => unreachable!("build_nls checked the model kind"),
    };
    let h = hamlat_core::nls::NlsModeHamiltonian::new(nls.clone(), dynamics);
    let torus = NlsTorus::new(tcfg.tangential.clone(), tcfg.actions.clone())?;
    let base_noise = cfg.build_noise().map_err(val)?;

    let mut lines = Vec::new();
    let mut summary = Vec::new();
    for (ei, &eps) in tcfg.epsilons.iter().enumerate() {
        let noise = base_noise.with_epsilon(eps)?;
        let runs: Vec<(u64, f64, f64)> = (0..tcfg.seeds_per_epsilon)
            .into_par_iter()
            .map(|r| -> Result<(u64, f64, f64), hamlat_core::HamlatError> {
                let run_seed = derive_seed(seed, (ei as u64) << 32 | r);
                let phases: Vec<f64> = (0..tcfg.tangential.len())
                    .map(|i| std::f64::consts::TAU * uniform_at(run_seed, 0, i as u64))
                    .collect();
                let u0 = ModeState::on_torus(&torus, &phases, nls.modes)?;
                let c = SimConfig::new(cfg.grid.dt, run_seed, Scheme::Splitting)?;
                let path = simulate_snls(&h, &noise, &u0, cfg.grid.t1, &c)?;
                let devs = torus_deviation(&path, &torus, &nls)?;
                let max_dev = devs.iter().map(|d| d.action_dev).fold(0.0f64, f64::max);
                let max_ne = devs.iter().map(|d| d.normal_energy).fold(0.0f64, f64::max);
                Ok((r, max_dev, max_ne))
            })
            .collect::<Result<_, _>>()?;
        let mut runs = runs;
        runs.sort_by_key(|r| r.0);
        let mut exceed = 0u64;
        for (r, max_dev, max_ne) in &runs {
            let over = *max_dev > tcfg.threshold;
            if over {
                exceed += 1;
            }
            lines.push(
                serde_json::json!({
                    "epsilon": eps,
                    "seed_index": r,
                    "max_action_dev": max_dev,
                    "max_normal_energy": max_ne,
                    "exceeds": over,
                })
                .to_string(),
            );
        }
        let p = exceed as f64 / tcfg.seeds_per_epsilon as f64;
        summary.push(serde_json::json!({
            "epsilon": eps,
            "exceedance": p,
            "eps2_ln_p": if p > 0.0 { serde_json::json!(eps * eps * p.ln()) } else { serde_json::json!(null) },
            "runs": tcfg.seeds_per_epsilon,
        }));
    }
    fs::write(dir.join("tori_runs.jsonl"), lines.join("\n") + "\n")?;
    write_json(dir, "tori_summary.json", &serde_json::json!(summary))
}

pub fn kam_scan(cfg: &RunConfig, dir: &Path, seed: u64) -> CmdResult {
    let kcfg = cfg
        .kam_scan
        .as_ref()
        .ok_or_else(|| val("config block `kam_scan` is required"))?;
    let nls = cfg.build_nls().map_err(val)?;
    let nf = normal_form(&nls, &kcfg.tangential, kcfg.cutoff)?;
    let n = kcfg.tangential.len();
    let tau = kcfg.tau.unwrap_or(n as f64 + 2.0);

    // action grid: product grid over [0, action_max]^n, off-origin
    let per = kcfg.grid_per_axis;
    let mut grid: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for g in &grid {
            for a in 1..=per {
                let mut v = g.clone();
                v.push(kcfg.action_max * a as f64 / per as f64);
                next.push(v);
            }
        }
        grid = next;
    }

    let mut csv = String::new();
    for i in 0..n {
        let _ = write!(csv, "I{},", i + 1);
    }
    let header: Vec<String> = kcfg.alphas.iter().map(|a| format!("pass_alpha_{a}")).collect();
    csv.push_str(&header.join(","));
    csv.push('\n');
    let mut passes = Vec::new();
    let mut fractions = Vec::new();
    for &alpha in &kcfg.alphas {
        let res = diophantine_scan(&nf, &grid, alpha, tau, kcfg.k_cutoff, kcfg.d)?;
        fractions.push(serde_json::json!({"alpha": alpha, "admissible_fraction": res.fraction}));
        passes.push(res.admissible);
    }
    for (gi, point) in grid.iter().enumerate() {
        for v in point {
            let _ = write!(csv, "{v},");
        }
        let row: Vec<String> = passes.iter().map(|p| (p[gi] as u8).to_string()).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    fs::write(dir.join("kam_admissible.csv"), csv)?;

    // resonant-measure ladder over the same normal form as a toy box scan
    let scan = ResonanceScan {
        box_lo: vec![0.0; n],
        box_hi: vec![kcfg.action_max; n],
        k_cutoff: kcfg.k_cutoff,
        l_modes: nf.normal.clone(),
        alphas: kcfg.alphas.clone(),
        samples: 20_000,
        tau,
        d: kcfg.d,
        seed,
    };
    let fracs = resonant_measure_mc(&scan, |actions| {
        (nf.omega(actions), nf.omega_normal(actions))
    })?;
    let fit = fit_measure_exponent(&fracs).ok();
    write_json(
        dir,
        "kam_fractions.json",
        &serde_json::json!({
            "admissible": fractions,
            "resonant_measure": fracs,
            "exponent_fit": fit,
        }),
    )
}
