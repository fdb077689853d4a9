//! Truncated weighted lattice phase space.
//!
//! State lives on a finite set of sites (a truncation of ℤ^m), one circle
//! angle q and one real momentum p per site. Geometry comes from positive
//! site weights ρ:
//!
//!   ‖u‖_ρ² = Σ_i ρ_i² (d_T(q_i, 0)² + p_i²),
//!
//! with d_T the geodesic distance on the circle, and path-level norms are
//! time integrals of ‖·‖_ρ² over a uniform grid. Everything here is
//! immutable after construction and safe to share across workers.

use crate::error::{HamlatError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

/// A lattice site: a point of ℤ^m, m ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site(pub Vec<i32>);

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(":"))
    }
}

impl FromStr for Site {
    type Err = HamlatError;
    fn from_str(s: &str) -> Result<Self> {
        let coords = s
            .split(':')
            .map(|c| c.parse::<i32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| HamlatError::InvalidInput(format!("bad site '{s}': {e}")))?;
        if coords.is_empty() {
            return Err(HamlatError::InvalidInput("empty site".into()));
        }
        Ok(Site(coords))
    }
}

impl Site {
    /// ℓ¹ norm |i|₁ of the site index.
    pub fn norm1(&self) -> i64 {
        self.0.iter().map(|&c| c.unsigned_abs() as i64).sum()
    }
}

/// Positive, summable site weights ρ fixing the ℓ²_ρ geometry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightSequence {
    sites: Vec<Site>,
    rho: Vec<f64>,
    c_rho: f64,
}

impl WeightSequence {
    pub fn new(sites: Vec<Site>, rho: Vec<f64>) -> Result<Self> {
        if sites.len() != rho.len() {
            return Err(HamlatError::DimensionMismatch {
                expected: sites.len(),
                got: rho.len(),
            });
        }
        if sites.is_empty() {
            return Err(HamlatError::InvalidInput("empty site set".into()));
        }
        if rho.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(HamlatError::InvalidInput(
                "weights must be positive and finite".into(),
            ));
        }
        let c_rho: f64 = rho.iter().sum();
        if !c_rho.is_finite() || !rho.iter().map(|r| r * r).sum::<f64>().is_finite() {
            return Err(HamlatError::InvalidInput("weight sums overflow".into()));
        }
        Ok(Self { sites, rho, c_rho })
    }

    /// Default truncation: the 1-D box {-radius, …, radius} with the dyadic
    /// weights ρ_i = 2^{-|i|} (summable on the full lattice).
    pub fn dyadic_1d(radius: u32) -> Self {
        let sites: Vec<Site> = (-(radius as i32)..=radius as i32).map(|i| Site(vec![i])).collect();
        let rho: Vec<f64> = sites.iter().map(|s| 2f64.powi(-(s.norm1() as i32))).collect();
        Self::new(sites, rho).expect("dyadic weights are valid")
    }

    /// A 1-D chain of `n` sites 0..n with dyadic weights ρ_i = 2^{-i}.
    pub fn dyadic_chain(n: usize) -> Self {
        let sites: Vec<Site> = (0..n as i32).map(|i| Site(vec![i])).collect();
        let rho: Vec<f64> = (0..n as i32).map(|i| 2f64.powi(-i)).collect();
        Self::new(sites, rho).expect("dyadic weights are valid")
    }

    /// Single site at the origin with unit weight.
    pub fn single_site() -> Self {
        Self::new(vec![Site(vec![0])], vec![1.0]).expect("valid")
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// C_ρ = Σ_i ρ_i (cached at construction).
    pub fn c_rho(&self) -> f64 {
        self.c_rho
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(HamlatError::DimensionMismatch {
                expected: self.len(),
                got: n,
            });
        }
        Ok(())
    }
}

/// Wrap an angle to its canonical representative in [0, 2π).
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r == TAU {
        0.0
    } else {
        r
    }
}

/// Map an angle to the symmetric chart (-π, π].
pub fn signed_angle(a: f64) -> f64 {
    let w = wrap_angle(a);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Geodesic distance on the circle, in [0, π].
pub fn torus_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Signed increment b − a lifted to (-π, π]; the shortest rotation from a to b.
pub fn lift_increment(a: f64, b: f64) -> f64 {
    signed_angle(b - a)
}

/// One phase-space configuration: an angle and a momentum per site.
///
/// Angles are stored as canonical representatives in [0, 2π).
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl LatticeState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(HamlatError::DimensionMismatch {
                expected: q.len(),
                got: p.len(),
            });
        }
        let q = q.into_iter().map(wrap_angle).collect();
        Ok(Self { q, p })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            q: vec![0.0; n],
            p: vec![0.0; n],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Angles in the symmetric chart (-π, π], for models that need a signed lift.
    pub fn q_signed(&self) -> Vec<f64> {
        self.q.iter().map(|&a| signed_angle(a)).collect()
    }
}

/// A tangent-space element: unconstrained real displacements per site.
///
/// The ℓ²_ρ inner product is bilinear only on these momentum-like differences;
/// angles enter distances through the circle metric instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl Tangent {
    pub fn zero(n: usize) -> Self {
        Self {
            q: vec![0.0; n],
            p: vec![0.0; n],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.q.len()
    }
}

/// ‖u‖_ρ = sqrt(Σ_i ρ_i² (d_T(q_i, 0)² + p_i²)).
pub fn weighted_norm(u: &LatticeState, w: &WeightSequence) -> Result<f64> {
    w.check_len(u.n_sites())?;
    let mut s = 0.0;
    for i in 0..u.n_sites() {
        let r2 = w.rho[i] * w.rho[i];
        let dq = torus_distance(u.q[i], 0.0);
        s += r2 * (dq * dq + u.p[i] * u.p[i]);
    }
    Ok(s.sqrt())
}

/// Metric distance d_ρ(u, v) with wrap-aware angle differences.
pub fn state_distance(u: &LatticeState, v: &LatticeState, w: &WeightSequence) -> Result<f64> {
    w.check_len(u.n_sites())?;
    w.check_len(v.n_sites())?;
    let mut s = 0.0;
    for i in 0..u.n_sites() {
        let r2 = w.rho[i] * w.rho[i];
        let dq = torus_distance(u.q[i], v.q[i]);
        let dp = u.p[i] - v.p[i];
        s += r2 * (dq * dq + dp * dp);
    }
    Ok(s.sqrt())
}

/// Weighted inner product ⟨u, v⟩_ρ = Σ_i ρ_i² (q_i q̃_i + p_i p̃_i) on tangents.
pub fn weighted_inner(u: &Tangent, v: &Tangent, w: &WeightSequence) -> Result<f64> {
    w.check_len(u.n_sites())?;
    w.check_len(v.n_sites())?;
    let mut s = 0.0;
    for i in 0..u.n_sites() {
        s += w.rho[i] * w.rho[i] * (u.q[i] * v.q[i] + u.p[i] * v.p[i]);
    }
    Ok(s)
}

/// ‖u‖_ρ on a tangent vector.
pub fn tangent_norm(u: &Tangent, w: &WeightSequence) -> Result<f64> {
    Ok(weighted_inner(u, u, w)?.sqrt())
}

/// A trajectory sampled on the uniform grid t_k = t0 + k·dt, k = 0..=K.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    t0: f64,
    t1: f64,
    nodes: Vec<LatticeState>,
}

impl PathGrid {
    pub fn new(t0: f64, t1: f64, nodes: Vec<LatticeState>) -> Result<Self> {
        if !(t1 > t0) {
            return Err(HamlatError::InvalidInput(format!(
                "need t1 > t0, got [{t0}, {t1}]"
            )));
        }
        if nodes.len() < 2 {
            return Err(HamlatError::Resolution(
                "a path needs at least K = 1 segment (2 nodes)".into(),
            ));
        }
        let n = nodes[0].n_sites();
        if let Some(bad) = nodes.iter().find(|s| s.n_sites() != n) {
            return Err(HamlatError::DimensionMismatch {
                expected: n,
                got: bad.n_sites(),
            });
        }
        Ok(Self { t0, t1, nodes })
    }

    /// Constant-in-time path at the given state.
    pub fn constant(t0: f64, t1: f64, state: LatticeState, segments: usize) -> Result<Self> {
        Self::new(t0, t1, vec![state; segments + 1])
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    /// Number of segments K (one less than the node count).
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.segments() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt()
    }

    pub fn nodes(&self) -> &[LatticeState] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> &LatticeState {
        &self.nodes[k]
    }

    pub fn n_sites(&self) -> usize {
        self.nodes[0].n_sites()
    }

    pub fn first(&self) -> &LatticeState {
        &self.nodes[0]
    }

    pub fn last(&self) -> &LatticeState {
        self.nodes.last().unwrap()
    }
}

fn trapezoid(values_sq: &[f64], dt: f64) -> f64 {
    let k = values_sq.len() - 1;
    let mut s = 0.5 * (values_sq[0] + values_sq[k]);
    for v in &values_sq[1..k] {
        s += v;
    }
    s * dt
}

/// L²([t0,t1], ℓ²_ρ) norm of a path: trapezoidal quadrature of ‖u(t)‖_ρ².
pub fn path_norm(path: &PathGrid, w: &WeightSequence) -> Result<f64> {
    let sq: Vec<f64> = path
        .nodes
        .iter()
        .map(|s| weighted_norm(s, w).map(|x| x * x))
        .collect::<Result<_>>()?;
    Ok(trapezoid(&sq, path.dt()).sqrt())
}

/// L²-in-time distance between two paths on the same grid.
pub fn path_distance(a: &PathGrid, b: &PathGrid, w: &WeightSequence) -> Result<f64> {
    if a.segments() != b.segments() {
        return Err(HamlatError::DimensionMismatch {
            expected: a.segments(),
            got: b.segments(),
        });
    }
    let sq: Vec<f64> = a
        .nodes
        .iter()
        .zip(&b.nodes)
        .map(|(u, v)| state_distance(u, v, w).map(|d| d * d))
        .collect::<Result<_>>()?;
    Ok(trapezoid(&sq, a.dt()).sqrt())
}

/// Sidecar metadata stored next to a path CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathMeta {
    pub sites: Vec<Site>,
    pub rho: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub segments: usize,
}

impl PathMeta {
    pub fn of(path: &PathGrid, w: &WeightSequence) -> Self {
        Self {
            sites: w.sites().to_vec(),
            rho: w.rho().to_vec(),
            t0: path.t0(),
            t1: path.t1(),
            dt: path.dt(),
            segments: path.segments(),
        }
    }
}

/// Serialize a path as CSV rows `t,site,q,p` (shortest round-trip floats).
pub fn path_to_csv(path: &PathGrid, w: &WeightSequence) -> Result<String> {
    w.check_len(path.n_sites())?;
    let mut out = String::from("t,site,q,p\n");
    for (k, node) in path.nodes.iter().enumerate() {
        let t = path.time(k);
        for (i, site) in w.sites().iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", t, site, node.q[i], node.p[i]));
        }
    }
    Ok(out)
}

/// Parse a path back from its CSV body and sidecar metadata.
pub fn path_from_csv(csv: &str, meta: &PathMeta) -> Result<PathGrid> {
    let n = meta.sites.len();
    let mut lines = csv.lines();
    match lines.next() {
        Some("t,site,q,p") => {}
        other => {
            return Err(HamlatError::InvalidInput(format!(
                "bad CSV header: {other:?}"
            )))
        }
    }
    let mut nodes: Vec<LatticeState> = Vec::with_capacity(meta.segments + 1);
    let mut q = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (_t, site, qs, ps) = match (fields.next(), fields.next(), fields.next(), fields.next())
        {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => return Err(HamlatError::InvalidInput(format!("bad CSV row: {line}"))),
        };
        let i = q.len();
        if i >= n || site != meta.sites[i].to_string() {
            return Err(HamlatError::InvalidInput(format!(
                "unexpected site '{site}' in row {line}"
            )));
        }
        q.push(qs.parse::<f64>().map_err(|e| {
            HamlatError::InvalidInput(format!("bad q in row '{line}': {e}"))
        })?);
        p.push(ps.parse::<f64>().map_err(|e| {
            HamlatError::InvalidInput(format!("bad p in row '{line}': {e}"))
        })?);
        if q.len() == n {
            nodes.push(LatticeState::new(std::mem::take(&mut q), std::mem::take(&mut p))?);
        }
    }
    if nodes.len() != meta.segments + 1 {
        return Err(HamlatError::InvalidInput(format!(
            "node count {} does not match sidecar segments {}",
            nodes.len(),
            meta.segments
        )));
    }
    PathGrid::new(meta.t0, meta.t1, nodes)
}
