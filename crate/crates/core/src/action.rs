//! Onsager-Machlup action on discretized paths and its minimization.
//!
//! For a path φ = (φ_q, φ_p) the action is
//!
//!   S[φ] = ∫ ‖σ_q⁻¹(t)(φ̇_q − ∂H/∂p)‖_ρ² dt + ∫ ‖σ_p⁻¹(t)(φ̇_p + ∂H/∂q)‖_ρ² dt,
//!
//! discretized with forward-difference velocities and midpoint states per
//! segment, so the discrete action is a smooth function of the node values
//! and its gradient can be assembled exactly from the model's Hessian-vector
//! products. Minimizers of S are the most probable transition paths; they
//! solve the deterministic Hamiltonian system, which the Euler-Lagrange
//! residual measures directly. The noise intensity ε never enters here.
//!
//! Angles are optimized in locally lifted coordinates (increments unwrapped
//! to (-π, π]), so paths crossing the 0/2π seam behave smoothly.

use crate::error::{HamlatError, Result};
use crate::lattice::{lift_increment, LatticeState, PathGrid, Tangent, WeightSequence};
use crate::models::Hamiltonian;
use crate::sde::NoiseModel;

#[derive(Debug, Clone)]
pub struct ActionReport {
    pub total: f64,
    pub q_term: f64,
    pub p_term: f64,
    /// Time-integrated ‖φ̇_q − ∂H/∂p‖_ρ + ‖φ̇_p + ∂H/∂q‖_ρ.
    pub el_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    FixedStart,
    FixedBothEndpoints,
}

#[derive(Debug, Clone)]
pub struct MinimizeConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub constraint: Constraint,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-6,
            constraint: Constraint::FixedStart,
            memory: 12,
        }
    }
}

impl MinimizeConfig {
    pub fn validated(self) -> Result<Self> {
        if !(self.grad_tol > 0.0) {
            return Err(HamlatError::InvalidInput("grad_tol must be positive".into()));
        }
        Ok(self)
    }
}

/// Lifted representation of a path: per node, n angles (real lifts) followed
/// by n momenta. Lifting unwraps angle increments once so the optimizer works
/// on ℝ-valued coordinates.
struct Lifted {
    x: Vec<f64>,
    n: usize,
    segments: usize,
    t0: f64,
    dt: f64,
}

impl Lifted {
    fn from_path(path: &PathGrid) -> Self {
        let n = path.n_sites();
        let k = path.segments();
        let mut x = vec![0.0; (k + 1) * 2 * n];
        for i in 0..n {
            x[i] = path.node(0).q()[i];
        }
        for i in 0..n {
            x[n + i] = path.node(0).p()[i];
        }
        for s in 1..=k {
            let prev = path.node(s - 1);
            let cur = path.node(s);
            for i in 0..n {
                x[s * 2 * n + i] =
                    x[(s - 1) * 2 * n + i] + lift_increment(prev.q()[i], cur.q()[i]);
                x[s * 2 * n + n + i] = cur.p()[i];
            }
        }
        Self {
            x,
            n,
            segments: k,
            t0: path.t0(),
            dt: path.dt(),
        }
    }

    fn node_state(x: &[f64], n: usize, s: usize) -> LatticeState {
        let base = s * 2 * n;
        LatticeState::new(x[base..base + n].to_vec(), x[base + n..base + 2 * n].to_vec())
            .expect("lengths agree")
    }

    fn to_path(&self) -> PathGrid {
        let nodes: Vec<LatticeState> = (0..=self.segments)
            .map(|s| Self::node_state(&self.x, self.n, s))
            .collect();
        PathGrid::new(self.t0, self.t0 + self.dt * self.segments as f64, nodes)
            .expect("valid path")
    }
}

/// Per-segment inverse-variance weights ρ_i²/σ²(t_mid), fixed data for a grid.
struct SegmentWeights {
    wq: Vec<f64>, // segments × n, row-major
    wp: Vec<f64>,
    rho2: Vec<f64>,
}

impl SegmentWeights {
    fn build(
        segments: usize,
        t0: f64,
        dt: f64,
        noise: &NoiseModel,
        w: &WeightSequence,
    ) -> Result<Self> {
        let n = w.len();
        if noise.n_sites() != n {
            return Err(HamlatError::DimensionMismatch {
                expected: n,
                got: noise.n_sites(),
            });
        }
        let rho2: Vec<f64> = w.rho().iter().map(|r| r * r).collect();
        let mut wq = vec![0.0; segments * n];
        let mut wp = vec![0.0; segments * n];
        for k in 0..segments {
            let tm = t0 + (k as f64 + 0.5) * dt;
            for i in 0..n {
                let sq = noise.sigma_q_at(i, tm);
                let sp = noise.sigma_p_at(i, tm);
                wq[k * n + i] = rho2[i] / (sq * sq);
                wp[k * n + i] = rho2[i] / (sp * sp);
            }
        }
        Ok(Self { wq, wp, rho2 })
    }
}

/// Evaluate action terms, and optionally the exact gradient, on a lifted path.
fn eval_lifted(
    x: &[f64],
    n: usize,
    segments: usize,
    dt: f64,
    model: &dyn Hamiltonian,
    sw: &SegmentWeights,
    mut grad: Option<&mut [f64]>,
) -> (f64, f64, f64) {
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut q_term = 0.0;
    let mut p_term = 0.0;
    let mut residual = 0.0;
    let mut mid_q = vec![0.0; n];
    let mut mid_p = vec![0.0; n];
    let mut vq = vec![0.0; n];
    let mut vp = vec![0.0; n];
    let mut aa = vec![0.0; n];
    let mut bb = vec![0.0; n];
    for k in 0..segments {
        let base = k * 2 * n;
        let next = (k + 1) * 2 * n;
        for i in 0..n {
            vq[i] = (x[next + i] - x[base + i]) / dt;
            vp[i] = (x[next + n + i] - x[base + n + i]) / dt;
            mid_q[i] = 0.5 * (x[next + i] + x[base + i]);
            mid_p[i] = 0.5 * (x[next + n + i] + x[base + n + i]);
        }
        let mid = LatticeState::new(mid_q.clone(), mid_p.clone()).expect("lengths agree");
        let gq = model.grad_q(&mid);
        let gp = model.grad_p(&mid);
        let wq = &sw.wq[k * n..(k + 1) * n];
        let wp = &sw.wp[k * n..(k + 1) * n];
        let mut res_q = 0.0;
        let mut res_p = 0.0;
        for i in 0..n {
            let rq = vq[i] - gp[i];
            let rp = vp[i] + gq[i];
            q_term += dt * wq[i] * rq * rq;
            p_term += dt * wp[i] * rp * rp;
            res_q += sw.rho2[i] * rq * rq;
            res_p += sw.rho2[i] * rp * rp;
            aa[i] = 2.0 * wq[i] * rq;
            bb[i] = 2.0 * wp[i] * rp;
        }
        residual += dt * (res_q.sqrt() + res_p.sqrt());
        if let Some(g) = grad.as_deref_mut() {
            // velocity terms
            for i in 0..n {
                g[next + i] += aa[i];
                g[base + i] -= aa[i];
                g[next + n + i] += bb[i];
                g[base + n + i] -= bb[i];
            }
            // midpoint-state terms through the model's second derivatives
            let (ha_q, ha_p) = model.hess_vec(&mid, &vec![0.0; n], &aa); // (H_qp·A, H_pp·A)
            let (hb_q, hb_p) = model.hess_vec(&mid, &bb, &vec![0.0; n]); // (H_qq·B, H_pq·B)
            let half = 0.5 * dt;
            for i in 0..n {
                let dq = half * (hb_q[i] - ha_q[i]);
                let dp = half * (hb_p[i] - ha_p[i]);
                g[base + i] += dq;
                g[next + i] += dq;
                g[base + n + i] += dp;
                g[next + n + i] += dp;
            }
        }
    }
    (q_term, p_term, residual)
}

fn require_resolution(path: &PathGrid) -> Result<()> {
    if path.segments() < 2 {
        return Err(HamlatError::Resolution(
            "action evaluation needs K ≥ 2 segments".into(),
        ));
    }
    Ok(())
}

/// The two integrals of the path action and the Euler-Lagrange defect.
pub fn om_action(
    path: &PathGrid,
    model: &dyn Hamiltonian,
    noise: &NoiseModel,
    w: &WeightSequence,
) -> Result<ActionReport> {
    require_resolution(path)?;
    let lifted = Lifted::from_path(path);
    let sw = SegmentWeights::build(lifted.segments, lifted.t0, lifted.dt, noise, w)?;
    let (q_term, p_term, el_residual) = eval_lifted(
        &lifted.x,
        lifted.n,
        lifted.segments,
        lifted.dt,
        model,
        &sw,
        None,
    );
    Ok(ActionReport {
        total: q_term + p_term,
        q_term,
        p_term,
        el_residual,
    })
}

/// Exact gradient of the discretized action with respect to every node's
/// lifted (q, p) coordinates. Callers mask constrained nodes.
pub fn om_gradient(
    path: &PathGrid,
    model: &dyn Hamiltonian,
    noise: &NoiseModel,
    w: &WeightSequence,
) -> Result<Vec<Tangent>> {
    require_resolution(path)?;
    let lifted = Lifted::from_path(path);
    let sw = SegmentWeights::build(lifted.segments, lifted.t0, lifted.dt, noise, w)?;
    let mut g = vec![0.0; lifted.x.len()];
    eval_lifted(
        &lifted.x,
        lifted.n,
        lifted.segments,
        lifted.dt,
        model,
        &sw,
        Some(&mut g),
    );
    let n = lifted.n;
    Ok((0..=lifted.segments)
        .map(|s| Tangent {
            q: g[s * 2 * n..s * 2 * n + n].to_vec(),
            p: g[s * 2 * n + n..s * 2 * n + 2 * n].to_vec(),
        })
        .collect())
}

/// ℓ² norm of the gradient over the nodes left free by the constraint.
pub fn gradient_norm(grads: &[Tangent], constraint: Constraint) -> f64 {
    let last = grads.len() - 1;
    let mut s = 0.0;
    for (k, g) in grads.iter().enumerate() {
        let fixed = k == 0 || (constraint == Constraint::FixedBothEndpoints && k == last);
        if fixed {
            continue;
        }
        s += g.q.iter().chain(g.p.iter()).map(|v| v * v).sum::<f64>();
    }
    s.sqrt()
}

/// Time-integrated residual of the most-probable-path equations; zero iff
/// the path solves the deterministic Hamiltonian system on the grid.
pub fn euler_lagrange_residual(
    path: &PathGrid,
    model: &dyn Hamiltonian,
    w: &WeightSequence,
) -> Result<f64> {
    require_resolution(path)?;
    let lifted = Lifted::from_path(path);
    // unit-σ weights: the residual carries ρ only
    let unit = NoiseModel::unit(w.len(), 0.0)?;
    let sw = SegmentWeights::build(lifted.segments, lifted.t0, lifted.dt, &unit, w)?;
    let (_, _, residual) = eval_lifted(
        &lifted.x,
        lifted.n,
        lifted.segments,
        lifted.dt,
        model,
        &sw,
        None,
    );
    Ok(residual)
}

#[derive(Debug, Clone, Copy)]
struct Mat2 {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Mat2 {
    const ZERO: Mat2 = Mat2 {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
    };

    fn ident(s: f64) -> Self {
        Mat2 {
            a: s,
            b: 0.0,
            c: 0.0,
            d: s,
        }
    }

    fn t(self) -> Self {
        Mat2 {
            a: self.a,
            b: self.c,
            c: self.b,
            d: self.d,
        }
    }

    fn mul(self, o: Mat2) -> Self {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    fn add(self, o: Mat2) -> Self {
        Mat2 {
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c,
            d: self.d + o.d,
        }
    }

    fn sub(self, o: Mat2) -> Self {
        Mat2 {
            a: self.a - o.a,
            b: self.b - o.b,
            c: self.c - o.c,
            d: self.d - o.d,
        }
    }

    fn scale(self, s: f64) -> Self {
        Mat2 {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
            d: self.d * s,
        }
    }

    fn inv(self) -> Self {
        let det = self.a * self.d - self.b * self.c;
        let r = 1.0 / det;
        Mat2 {
            a: self.d * r,
            b: -self.b * r,
            c: -self.c * r,
            d: self.a * r,
        }
    }

    fn mul_vec(self, x: f64, y: f64) -> (f64, f64) {
        (self.a * x + self.b * y, self.c * x + self.d * y)
    }
}

/// Block-tridiagonal preconditioner from the linearized per-site action.
///
/// Freezing the model's diagonal curvature (H_qq, H_pp, H_qp at one
/// representative state), the action's Hessian decouples into one symmetric
/// block-tridiagonal system per site with 2×2 (q,p) blocks that carry both
/// the time-Laplacian and the local rotation. Solving it exactly flattens
/// the near-resonant soft modes that otherwise stall the descent.
struct BlockPreconditioner {
    // per site: prefactored block-Thomas data over the free nodes
    l: Vec<Vec<Mat2>>,
    u_inv: Vec<Vec<Mat2>>,
    e: Vec<Vec<Mat2>>,
    n: usize,
    free_nodes: usize,
    scratch: Vec<(f64, f64)>,
}

impl BlockPreconditioner {
    fn build(
        sw: &SegmentWeights,
        n: usize,
        segments: usize,
        dt: f64,
        constraint: Constraint,
        model: &dyn Hamiltonian,
        reference: &LatticeState,
    ) -> Self {
        let last_free = match constraint {
            Constraint::FixedStart => segments,
            Constraint::FixedBothEndpoints => segments - 1,
        };
        let free_nodes = last_free;
        // frozen diagonal curvature per site
        let mut hqq = vec![0.0; n];
        let mut hpp = vec![0.0; n];
        let mut hqp = vec![0.0; n];
        let mut unit_q = vec![0.0; n];
        let mut unit_p = vec![0.0; n];
        for i in 0..n {
            unit_q[i] = 1.0;
            let (gq, gp) = model.hess_vec(reference, &unit_q, &unit_p);
            hqq[i] = gq[i];
            hqp[i] = gp[i];
            unit_q[i] = 0.0;
            unit_p[i] = 1.0;
            let (_, gp2) = model.hess_vec(reference, &unit_q, &unit_p);
            hpp[i] = gp2[i];
            unit_p[i] = 0.0;
        }

        let mut l_all = Vec::with_capacity(n);
        let mut u_all = Vec::with_capacity(n);
        let mut e_all = Vec::with_capacity(n);
        for i in 0..n {
            let inv_dt = 1.0 / dt;
            // residual Jacobians w.r.t. the left (jl) and right (jr) node
            let jl = |_k: usize| Mat2 {
                a: -inv_dt - 0.5 * hqp[i],
                b: -0.5 * hpp[i],
                c: 0.5 * hqq[i],
                d: -inv_dt + 0.5 * hqp[i],
            };
            let jr = |_k: usize| Mat2 {
                a: inv_dt - 0.5 * hqp[i],
                b: -0.5 * hpp[i],
                c: 0.5 * hqq[i],
                d: inv_dt + 0.5 * hqp[i],
            };
            let weight = |k: usize| Mat2 {
                a: sw.wq[k * n + i],
                b: 0.0,
                c: 0.0,
                d: sw.wp[k * n + i],
            };
            let mut diag = vec![Mat2::ZERO; free_nodes];
            let mut off = vec![Mat2::ZERO; free_nodes.saturating_sub(1)];
            for s in 1..=last_free {
                // segment s−1 touches this node from the right
                let c = weight(s - 1).scale(2.0 * dt);
                let j = jr(s - 1);
                let mut d = j.t().mul(c).mul(j);
                if s <= segments - 1 {
                    // segment s touches it from the left
                    let c2 = weight(s).scale(2.0 * dt);
                    let j2 = jl(s);
                    d = d.add(j2.t().mul(c2).mul(j2));
                    if s < last_free {
                        off[s - 1] = j2.t().mul(c2).mul(jr(s));
                    }
                }
                // mild SPD shift
                let wbar = 0.5 * (sw.wq[(s - 1) * n + i] + sw.wp[(s - 1) * n + i]);
                diag[s - 1] = d.add(Mat2::ident(1e-2 * dt * wbar));
            }
            // block Thomas factorization
            let mut l = vec![Mat2::ZERO; free_nodes];
            let mut u_inv = vec![Mat2::ZERO; free_nodes];
            let mut u_prev = diag[0];
            u_inv[0] = u_prev.inv();
            for s in 1..free_nodes {
                l[s] = off[s - 1].t().mul(u_inv[s - 1]);
                u_prev = diag[s].sub(l[s].mul(off[s - 1]));
                u_inv[s] = u_prev.inv();
            }
            l_all.push(l);
            u_all.push(u_inv);
            e_all.push(off);
        }
        Self {
            l: l_all,
            u_inv: u_all,
            e: e_all,
            n,
            free_nodes,
            scratch: vec![(0.0, 0.0); free_nodes],
        }
    }

    /// out = M⁻¹ v over the reduced (free-node) vector layout.
    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        let m = self.free_nodes;
        for i in 0..n {
            for s in 0..m {
                self.scratch[s] = (v[s * 2 * n + i], v[s * 2 * n + n + i]);
            }
            let (l, u_inv, e) = (&self.l[i], &self.u_inv[i], &self.e[i]);
            for s in 1..m {
                let (px, py) = self.scratch[s - 1];
                let (lx, ly) = l[s].mul_vec(px, py);
                self.scratch[s].0 -= lx;
                self.scratch[s].1 -= ly;
            }
            let (bx, by) = self.scratch[m - 1];
            self.scratch[m - 1] = u_inv[m - 1].mul_vec(bx, by);
            for s in (0..m - 1).rev() {
                let (nx, ny) = self.scratch[s + 1];
                let (ex, ey) = e[s].mul_vec(nx, ny);
                let (bx, by) = (self.scratch[s].0 - ex, self.scratch[s].1 - ey);
                self.scratch[s] = u_inv[s].mul_vec(bx, by);
            }
            for s in 0..m {
                out[s * 2 * n + i] = self.scratch[s].0;
                out[s * 2 * n + n + i] = self.scratch[s].1;
            }
        }
    }
}

struct FreeMask {
    /// flat-vector index ranges that are free to move
    free: Vec<usize>,
}

impl FreeMask {
    fn new(n: usize, segments: usize, constraint: Constraint) -> Self {
        let last = segments;
        let mut free = Vec::new();
        for s in 0..=segments {
            let fixed = s == 0 || (constraint == Constraint::FixedBothEndpoints && s == last);
            if fixed {
                continue;
            }
            for j in 0..2 * n {
                free.push(s * 2 * n + j);
            }
        }
        Self { free }
    }

    fn gather(&self, full: &[f64], out: &mut [f64]) {
        for (o, &ix) in out.iter_mut().zip(&self.free) {
            *o = full[ix];
        }
    }

    fn scatter(&self, reduced: &[f64], full: &mut [f64]) {
        for (&v, &ix) in reduced.iter().zip(&self.free) {
            full[ix] = v;
        }
    }
}

/// Minimize the discretized action by L-BFGS with Armijo backtracking.
///
/// Monotone decrease is enforced by the line search; iteration stops when
/// the free-coordinate gradient norm falls below `grad_tol`. With
/// `FixedStart` the minimizer reproduces the deterministic flow from the
/// pinned initial state.
pub fn minimize_action(
    initial: &PathGrid,
    model: &dyn Hamiltonian,
    noise: &NoiseModel,
    w: &WeightSequence,
    cfg: &MinimizeConfig,
) -> Result<(PathGrid, ActionReport, usize)> {
    require_resolution(initial)?;
    let cfg = cfg.clone().validated()?;
    let mut lifted = Lifted::from_path(initial);
    let (n, segments, dt) = (lifted.n, lifted.segments, lifted.dt);
    let sw = SegmentWeights::build(segments, lifted.t0, dt, noise, w)?;
    let mask = FreeMask::new(n, segments, cfg.constraint);
    let dim = mask.free.len();

    let mut full_grad = vec![0.0; lifted.x.len()];
    let eval = |x: &[f64], g: Option<&mut [f64]>| -> f64 {
        let (q, p, _) = eval_lifted(x, n, segments, dt, model, &sw, g);
        q + p
    };

    let mut f = eval(&lifted.x, Some(&mut full_grad));
    let initial_action = f;
    let mut g = vec![0.0; dim];
    mask.gather(&full_grad, &mut g);

    // preconditioned L-BFGS two-loop recursion state
    let mid_ref = initial.node(segments / 2).clone();
    let mut precond =
        BlockPreconditioner::build(&sw, n, segments, dt, cfg.constraint, model, &mid_ref);
    let mut minv = vec![0.0; dim];
    let mut minv_y = vec![0.0; dim];
    let mem = cfg.memory.max(1);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();

    let mut iters = 0usize;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();

    while norm(&g) > cfg.grad_tol && iters < cfg.max_iters {
        iters += 1;
        // search direction
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let h = s_hist.len();
        let mut alpha = vec![0.0; h];
        for j in (0..h).rev() {
            alpha[j] = rho_hist[j] * dot(&s_hist[j], &d);
            axpy(-alpha[j], &y_hist[j], &mut d);
        }
        precond.apply(&d, &mut minv);
        if h > 0 {
            let j = h - 1;
            precond.apply(&y_hist[j], &mut minv_y);
            let gamma = dot(&s_hist[j], &y_hist[j]) / dot(&y_hist[j], &minv_y);
            for (dd, mv) in d.iter_mut().zip(&minv) {
                *dd = gamma * mv;
            }
        } else {
            d.copy_from_slice(&minv);
        }
        for j in 0..h {
            let beta = rho_hist[j] * dot(&y_hist[j], &d);
            axpy(alpha[j] - beta, &s_hist[j], &mut d);
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            // curvature memory turned uphill; restart from the preconditioned
            // steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            precond.apply(&neg, &mut minv);
            d.copy_from_slice(&minv);
            slope = dot(&g, &d);
        }

        // Armijo backtracking
        let mut step = 1.0;
        let mut x_red = vec![0.0; dim];
        mask.gather(&lifted.x, &mut x_red);
        let mut trial = lifted.x.clone();
        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..60 {
            let cand: Vec<f64> = x_red
                .iter()
                .zip(&d)
                .map(|(x, dd)| x + step * dd)
                .collect();
            mask.scatter(&cand, &mut trial);
            let fc = eval(&trial, None);
            if fc <= f + 1e-4 * step * slope {
                f_new = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(HamlatError::Optimization(format!(
                "line search stalled at iteration {iters}: action {f:.6e}, gradient norm {:.3e}",
                norm(&g)
            )));
        }

        let mut g_new_full = vec![0.0; lifted.x.len()];
        let f_check = eval(&trial, Some(&mut g_new_full));
        debug_assert!((f_check - f_new).abs() <= 1e-12 * (1.0 + f_new.abs()));
        let mut g_new = vec![0.0; dim];
        mask.gather(&g_new_full, &mut g_new);

        // curvature pair
        let s_vec: Vec<f64> = d.iter().map(|v| v * step).collect();
        let y_vec: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s_vec, &y_vec);
        if sy > 1e-12 * norm(&s_vec) * norm(&y_vec) {
            if s_hist.len() == mem {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            rho_hist.push(1.0 / sy);
            s_hist.push(s_vec);
            y_hist.push(y_vec);
        }

        lifted.x.copy_from_slice(&trial);
        f = f_new;
        g = g_new;
    }

    let path = lifted.to_path();
    let report = om_action(&path, model, noise, w)?;
    debug_assert!(report.total <= initial_action + 1e-9 * (1.0 + initial_action));
    Ok((path, report, iters))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Straight-line interpolation (in lifted coordinates) between two states.
pub fn straight_line_path(
    t0: f64,
    t1: f64,
    from: &LatticeState,
    to: &LatticeState,
    segments: usize,
) -> Result<PathGrid> {
    let n = from.n_sites();
    if to.n_sites() != n {
        return Err(HamlatError::DimensionMismatch {
            expected: n,
            got: to.n_sites(),
        });
    }
    let dq: Vec<f64> = (0..n)
        .map(|i| lift_increment(from.q()[i], to.q()[i]))
        .collect();
    let nodes: Vec<LatticeState> = (0..=segments)
        .map(|k| {
            let a = k as f64 / segments as f64;
            let q: Vec<f64> = (0..n).map(|i| from.q()[i] + a * dq[i]).collect();
            let p: Vec<f64> = (0..n)
                .map(|i| from.p()[i] + a * (to.p()[i] - from.p()[i]))
                .collect();
            LatticeState::new(q, p).expect("lengths agree")
        })
        .collect();
    PathGrid::new(t0, t1, nodes)
}
