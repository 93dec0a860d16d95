//! Regime classification and profile assembly.
//!
//! A problem instance fixes `n`, `k`, radii `0 < a < b`, and boundary data:
//! either `u = c1, c2` on the two spheres or `u = +infinity` on both. In
//! cylinder variables the data become two heights `p_a, p_b` and a
//! half-length `T = (1/2) ln(b/a)`, and the classification compares `T`
//! with the critical half-length of the data:
//!
//! * `T` below critical: a smooth strictly monotone profile connecting the
//!   heights, staying strictly outside the degenerate cone `|xi'| = 1`;
//! * `T` critical: the profile grazes the fold of its level exactly at one
//!   boundary, where the slope degenerates to -1 or +1;
//! * `T` above critical: the profile rises onto the fold of a strictly
//!   higher level and reflects off it, producing an interior time `t_m`
//!   where `xi'` jumps from +1 to -1 (a Lipschitz corner of `u`);
//! * infinite data: both ends blow down (`xi -> -infinity`), the fold
//!   height is fixed by the full descent time, and the jump sits at the
//!   geometric center `t_m = 0`.
//!
//! Profiles are never produced by time-stepping the ODE. Each branch lives
//! on one level set of the first integral, node states `(xi, xi')` are
//! evaluated exactly on the level, and node times come from the travel-time
//! quadrature, inverted where the grid is specified in `t`.

use crate::cylinder::{dlnu_dr_from_slope, from_cylinder, CylinderError, LevelSet};
use crate::symfuncs::MAX_DIM;
use crate::quadrature::{
    boundary_peaks, level_traverse_time, t_bc_from_peaks, time_between_levels, QuadError,
};
use crate::rootfind::{case4_jump_time, solve_p_case4, solve_p_for_t, solve_qa, RootError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-width of the band around the critical half-length inside which
/// data are treated as borderline.
pub const CLASSIFY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid problem data: {0}")]
    Invalid(String),
    #[error("boundary data are mutually inconsistent: {0}")]
    InconsistentData(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Cylinder(#[from] CylinderError),
}

/// Boundary data on the two spheres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// `u -> +infinity` at both boundary spheres.
    Infinite,
    /// `u = c1` at `|x| = a` and `u = c2` at `|x| = b`.
    Finite { c1: f64, c2: f64 },
}

/// A validated problem instance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: u32,
    pub k: u32,
    pub a: f64,
    pub b: f64,
    pub bc: BoundaryCondition,
}

impl ProblemSpec {
    pub fn new(n: u32, k: u32, a: f64, b: f64, bc: BoundaryCondition) -> Result<Self, SolverError> {
        if n < 3 || k < 2 || k > n || n as usize > MAX_DIM {
            return Err(SolverError::Invalid(format!(
                "need 3 <= n <= {MAX_DIM} and 2 <= k <= n, got n = {n}, k = {k}"
            )));
        }
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > a) {
            return Err(SolverError::Invalid(format!(
                "need 0 < a < b finite, got a = {a}, b = {b}"
            )));
        }
        if let BoundaryCondition::Finite { c1, c2 } = bc {
            if !(c1.is_finite() && c2.is_finite() && c1 > 0.0 && c2 > 0.0) {
                return Err(SolverError::Invalid(format!(
                    "boundary values must be positive and finite, got c1 = {c1}, c2 = {c2}"
                )));
            }
        }
        Ok(Self { n, k, a, b, bc })
    }

    /// Spec with finite data chosen to hit prescribed cylinder heights.
    pub fn from_boundary_heights(
        n: u32,
        k: u32,
        a: f64,
        b: f64,
        p_a: f64,
        p_b: f64,
    ) -> Result<Self, SolverError> {
        let half = (n as f64 - 2.0) / 2.0;
        let c1 = (-half * (p_a + a.ln())).exp();
        let c2 = (-half * (p_b + b.ln())).exp();
        Self::new(n, k, a, b, BoundaryCondition::Finite { c1, c2 })
    }

    /// Half-length of the annulus in the cylinder variable.
    pub fn t_half_log(&self) -> f64 {
        0.5 * (self.b / self.a).ln()
    }

    /// Cylinder heights `(p_a, p_b)` of finite boundary data.
    pub fn heights(&self) -> Option<(f64, f64)> {
        match self.bc {
            BoundaryCondition::Infinite => None,
            BoundaryCondition::Finite { c1, c2 } => {
                Some(boundary_peaks(self.n, self.a, self.b, c1, c2))
            }
        }
    }

    /// Geometric center `sqrt(ab)`.
    pub fn center(&self) -> f64 {
        (self.a * self.b).sqrt()
    }
}

/// Which of the five structural alternatives the data select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    /// Short annulus: smooth strictly monotone profile.
    Case1Smooth,
    /// Critical length with the outer datum dominant: slope degenerates
    /// to +1 exactly at `t = +T` (the sphere `|x| = b`).
    Case2OuterSingular,
    /// Critical length with the inner datum dominant: slope degenerates
    /// to -1 exactly at `t = -T` (the sphere `|x| = a`).
    Case3InnerSingular,
    /// Long annulus: interior gradient jump at `t = t_m`.
    Case4InteriorJump,
    /// Infinite data: blow-down at both ends, jump at the center.
    InfiniteBC,
}

/// Classification output: the tag plus every scalar the construction needs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Cylinder heights of finite data.
    pub p_a: Option<f64>,
    pub p_b: Option<f64>,
    /// Critical half-length of the data (finite case).
    pub t_bc: Option<f64>,
    /// Conserved first integral of the profile's level.
    pub h: f64,
    /// Fold-side level coordinate `s = (-1)^k H`.
    pub s: f64,
    /// Fold height of the level, when the level folds.
    pub p: Option<f64>,
    /// Slope `xi'(-T)` at the inner boundary (smooth regime only).
    pub q_a: Option<f64>,
    /// Jump time; present exactly for the jump-carrying regimes.
    pub t_m: Option<f64>,
    /// Data landed within `CLASSIFY_TOL` of the critical length.
    pub borderline: bool,
}

fn fold_sign(k: u32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Decide the regime of a spec. `tol` is the tolerance handed to the
/// quadrature and root solves; the borderline band `CLASSIFY_TOL` is fixed.
pub fn classify(spec: &ProblemSpec, tol: f64) -> Result<Regime, SolverError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(SolverError::Invalid(format!("bad tolerance {tol}")));
    }
    let (n, k) = (spec.n, spec.k);
    let t_half = spec.t_half_log();
    let sign = fold_sign(k);
    match spec.bc {
        BoundaryCondition::Infinite => {
            let p = solve_p_for_t(t_half, n, k, tol)?;
            let s = -(-(n as f64) * p).exp();
            Ok(Regime {
                tag: RegimeTag::InfiniteBC,
                p_a: None,
                p_b: None,
                t_bc: None,
                h: sign * s,
                s,
                p: Some(p),
                q_a: None,
                t_m: Some(0.0),
                borderline: false,
            })
        }
        BoundaryCondition::Finite { .. } => {
            let (p_a, p_b) = spec.heights().expect("finite data");
            let qtol = (tol * 1e-2).clamp(1e-13, 1e-11);
            let t_bc = t_bc_from_peaks(n, k, p_a, p_b, qtol)?.value;
            let delta = t_half - t_bc;
            let base = Regime {
                tag: RegimeTag::Case1Smooth,
                p_a: Some(p_a),
                p_b: Some(p_b),
                t_bc: Some(t_bc),
                h: 0.0,
                s: 0.0,
                p: None,
                q_a: None,
                t_m: None,
                borderline: delta.abs() <= CLASSIFY_TOL,
            };
            if delta.abs() <= CLASSIFY_TOL {
                if (p_a - p_b).abs() <= CLASSIFY_TOL {
                    return Err(SolverError::InconsistentData(format!(
                        "annulus length sits at the critical value but the boundary \
                         heights coincide (p_a = {p_a}, p_b = {p_b}); no profile exists"
                    )));
                }
                let peak = p_a.max(p_b);
                let s = -(-(n as f64) * peak).exp();
                let tag = if p_a > p_b {
                    RegimeTag::Case3InnerSingular
                } else {
                    RegimeTag::Case2OuterSingular
                };
                return Ok(Regime {
                    tag,
                    h: sign * s,
                    s,
                    p: Some(peak),
                    ..base
                });
            }
            if delta < 0.0 {
                let sol = solve_qa(n, k, p_a, p_b, t_half, tol)?;
                let p = if sol.s < 0.0 {
                    Some(-(-sol.s).ln() / n as f64)
                } else {
                    None
                };
                return Ok(Regime {
                    tag: RegimeTag::Case1Smooth,
                    h: sol.h,
                    s: sol.s,
                    p,
                    q_a: Some(sol.q_a),
                    ..base
                });
            }
            let p = solve_p_case4(n, k, p_a, p_b, t_half, tol)?;
            let t_m = case4_jump_time(n, k, p_a, p_b, p, tol)?;
            let s = -(-(n as f64) * p).exp();
            Ok(Regime {
                tag: RegimeTag::Case4InteriorJump,
                h: sign * s,
                s,
                p: Some(p),
                t_m: Some(t_m),
                ..base
            })
        }
    }
}

/// Grid shape for profile assembly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridControl {
    /// Nodes per monotone branch; jump profiles have two branches.
    pub points_per_branch: usize,
    /// Absolute tolerance of the travel-time quadrature.
    pub quad_tol: f64,
    /// Cap on the width (in time) of the fold-resolving zone.
    pub fold_zone_cap: f64,
    /// Blow-down truncation depth: the profile stops at
    /// `xi = min(-xi_depth, p - xi_depth)`.
    pub xi_depth: f64,
}

impl Default for GridControl {
    fn default() -> Self {
        Self {
            points_per_branch: 2001,
            quad_tol: 1e-10,
            fold_zone_cap: 0.1,
            xi_depth: 20.0,
        }
    }
}

/// Fraction of a fold-touching branch's nodes spent inside the fold zone.
const FOLD_NODE_FRACTION: f64 = 0.4;

/// Index range of one monotone branch inside the profile arrays.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Branch {
    /// First node index (inclusive).
    pub lo: usize,
    /// Last node index (inclusive).
    pub hi: usize,
    /// Whether `xi` increases with `t` on this branch.
    pub rising: bool,
    /// Time at which the branch touches the fold of its level, if it does.
    pub fold_t: Option<f64>,
}

/// Assembled cylinder-variable profile `xi(t)` on `[-T, T]`.
///
/// Node states are exact on the profile's level set: `xi_p[i]` is the level
/// speed at `xi[i]` with the branch's sign, so the pointwise ODE data carry
/// no time-discretization error; only the node times `t[i]` involve
/// quadrature. At a jump the time value appears twice, closing one branch
/// with slope +1 and opening the next with slope -1.
#[derive(Debug, Clone)]
pub struct CylinderProfile {
    pub spec: ProblemSpec,
    pub regime: Regime,
    pub grid: GridControl,
    /// Half-length `T`.
    pub big_t: f64,
    pub t: Vec<f64>,
    pub xi: Vec<f64>,
    pub xi_p: Vec<f64>,
    pub branches: Vec<Branch>,
    pub level: LevelSet,
}

/// One branch before assembly, always ascending in `t`.
struct RawBranch {
    t: Vec<f64>,
    xi: Vec<f64>,
    xi_p: Vec<f64>,
    rising: bool,
    fold_t: Option<f64>,
}

fn inner_quad_tol(grid: &GridControl) -> f64 {
    (grid.quad_tol * 1e-3).clamp(1e-15, 1e-12)
}

/// Height at prescribed travel time below the fold: solves
/// `time_between_levels(xi, p) = tau` for `xi <= p`. The map has slope
/// `-1/speed` with `speed >= 1`, so a bracketed Newton iteration is safe.
fn xi_at_time_to_fold(
    level: &LevelSet,
    p: f64,
    tau: f64,
    qtol: f64,
) -> Result<f64, SolverError> {
    if tau == 0.0 {
        return Ok(p);
    }
    if tau < 0.0 {
        return Err(SolverError::Internal(format!("negative fold offset {tau}")));
    }
    let time_to = |xi: f64| -> Result<f64, SolverError> {
        Ok(time_between_levels(xi, p, level, (tau * 1e-9).clamp(1e-16, qtol))?.value)
    };
    // travel time to the fold is at most the depth, so p - tau brackets
    // from one side; expand downward until it brackets from the other
    let mut depth = tau;
    let mut lo = p - depth;
    let mut iter = 0;
    while time_to(lo)? < tau {
        depth *= 2.0;
        lo = p - depth;
        iter += 1;
        if iter > 60 {
            return Err(SolverError::Internal(format!(
                "no height reaches fold offset {tau}"
            )));
        }
    }
    let mut hi = p;
    let mut xi = p - tau;
    let f_tol = (tau * 1e-12).max(5e-14);
    for _ in 0..100 {
        let f = time_to(xi)? - tau;
        if f.abs() <= f_tol {
            return Ok(xi);
        }
        if f > 0.0 {
            lo = xi;
        } else {
            hi = xi;
        }
        let step = f * level.speed(xi)?;
        let cand = xi + step;
        xi = if cand > lo && cand < hi {
            cand
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * p.abs().max(1.0) {
            return Ok(xi);
        }
    }
    Err(SolverError::Internal(format!(
        "fold-offset inversion stalled at tau = {tau}"
    )))
}

/// Node counts: fold zone vs level-graded body.
fn node_split(grid: &GridControl) -> Result<(usize, usize), SolverError> {
    let ppb = grid.points_per_branch;
    if ppb < 21 {
        return Err(SolverError::Invalid(format!(
            "points_per_branch must be at least 21, got {ppb}"
        )));
    }
    let n_fold = ((ppb - 1) as f64 * FOLD_NODE_FRACTION).round() as usize;
    Ok((n_fold.max(2), ppb - 1 - n_fold.max(2)))
}

/// Build one branch that touches the fold of `level` at `(fold_t, p)` and
/// runs to the height `end_xi`. `left_of_fold` selects which side of the
/// fold the branch occupies. `end_t` pins the far endpoint time (boundary
/// branches); `None` leaves it where the quadrature puts it (blow-down).
fn build_fold_branch(
    level: &LevelSet,
    p: f64,
    fold_t: f64,
    end_xi: f64,
    end_t: Option<f64>,
    left_of_fold: bool,
    grid: &GridControl,
) -> Result<RawBranch, SolverError> {
    let (n_fold, n_body) = node_split(grid)?;
    let qtol = inner_quad_tol(grid);
    if end_xi >= p {
        return Err(SolverError::Internal(format!(
            "branch endpoint height {end_xi} is not below the fold {p}"
        )));
    }
    let span = match end_t {
        Some(et) => (fold_t - et).abs(),
        None => time_between_levels(end_xi, p, level, grid.quad_tol)?.value,
    };
    if !(span > 0.0) {
        return Err(SolverError::Internal("empty branch".into()));
    }
    let delta_c = grid.fold_zone_cap.min(0.25 * span);
    let g = level.k.min(4) as i32;

    // offsets from the fold, ascending: fold zone then the body
    let mut offsets = Vec::with_capacity(n_fold + n_body + 1);
    let mut heights = Vec::with_capacity(n_fold + n_body + 1);
    let mut speeds = Vec::with_capacity(n_fold + n_body + 1);
    offsets.push(0.0);
    heights.push(p);
    speeds.push(1.0);
    for j in 1..=n_fold {
        let tau = (j as f64 / n_fold as f64).powi(g) * delta_c;
        let xi = xi_at_time_to_fold(level, p, tau, qtol)?;
        offsets.push(tau);
        heights.push(xi);
        speeds.push(level.speed(xi)?);
    }
    let xi_edge = *heights.last().expect("fold zone nonempty");
    // body: uniform in xi from the fold-zone edge down to the endpoint,
    // times accumulated panel by panel
    let mut acc = delta_c;
    for i in 1..=n_body {
        let xi = xi_edge + (end_xi - xi_edge) * i as f64 / n_body as f64;
        let prev = *heights.last().expect("nonempty");
        acc += time_between_levels(xi, prev, level, qtol)?.value;
        offsets.push(acc);
        heights.push(xi);
        speeds.push(level.speed(xi)?);
    }
    // pin the boundary endpoint; a large defect means the level or the
    // jump time is wrong, not roundoff
    if let Some(et) = end_t {
        let defect = (offsets.last().unwrap() - span).abs();
        if defect > 1e-6 {
            return Err(SolverError::Internal(format!(
                "branch closes {defect:e} away from its endpoint time; \
                 level and boundary data disagree"
            )));
        }
        let _ = et;
        *offsets.last_mut().unwrap() = span;
        *heights.last_mut().unwrap() = end_xi;
    }

    // orient: ascending t, slope sign from the side of the fold
    let m = offsets.len();
    let mut t = Vec::with_capacity(m);
    let mut xi = Vec::with_capacity(m);
    let mut xi_p = Vec::with_capacity(m);
    if left_of_fold {
        for i in (0..m).rev() {
            t.push(fold_t - offsets[i]);
            xi.push(heights[i]);
            xi_p.push(speeds[i]);
        }
        // the fold node carries slope +1 exactly
        *xi_p.last_mut().unwrap() = 1.0;
        if end_t.is_some() {
            t[0] = fold_t - span;
        }
    } else {
        for i in 0..m {
            t.push(fold_t + offsets[i]);
            xi.push(heights[i]);
            xi_p.push(-speeds[i]);
        }
        *xi_p.first_mut().unwrap() = -1.0;
        if end_t.is_some() {
            *t.last_mut().unwrap() = fold_t + span;
        }
    }
    Ok(RawBranch {
        t,
        xi,
        xi_p,
        rising: left_of_fold,
        fold_t: Some(fold_t),
    })
}

/// Smooth monotone branch from `p_hi` at `t = -T` down to `p_lo` at
/// `t = +T` on an unfolded-or-clear level; uniform in `xi`.
fn build_smooth_branch(
    level: &LevelSet,
    s: f64,
    p_hi: f64,
    p_lo: f64,
    big_t: f64,
    grid: &GridControl,
) -> Result<RawBranch, SolverError> {
    let ppb = grid.points_per_branch;
    if ppb < 21 {
        return Err(SolverError::Invalid(format!(
            "points_per_branch must be at least 21, got {ppb}"
        )));
    }
    let qtol = inner_quad_tol(grid);
    let n_panels = ppb - 1;
    let mut t = Vec::with_capacity(ppb);
    let mut xi = Vec::with_capacity(ppb);
    let mut xi_p = Vec::with_capacity(ppb);
    t.push(-big_t);
    xi.push(p_hi);
    xi_p.push(-level.speed(p_hi)?);
    let mut acc = -big_t;
    for i in 1..=n_panels {
        let x = p_hi + (p_lo - p_hi) * i as f64 / n_panels as f64;
        let prev = *xi.last().expect("nonempty");
        acc += level_traverse_time(x, prev, s, level.n, level.k, qtol)?.value;
        t.push(acc);
        xi.push(x);
        xi_p.push(-level.speed(x)?);
    }
    let defect = (t.last().unwrap() - big_t).abs();
    if defect > 1e-6 {
        return Err(SolverError::Internal(format!(
            "smooth branch closes {defect:e} away from t = T"
        )));
    }
    *t.last_mut().unwrap() = big_t;
    *xi.last_mut().unwrap() = p_lo;
    Ok(RawBranch {
        t,
        xi,
        xi_p,
        rising: false,
        fold_t: None,
    })
}

fn mirror_branches(branches: &mut [RawBranch]) {
    branches.reverse();
    for br in branches.iter_mut() {
        br.t.reverse();
        br.xi.reverse();
        br.xi_p.reverse();
        for v in br.t.iter_mut() {
            *v = -*v;
        }
        for v in br.xi_p.iter_mut() {
            *v = -*v;
        }
        br.rising = !br.rising;
        br.fold_t = br.fold_t.map(|ft| -ft);
    }
}

fn assemble(
    spec: &ProblemSpec,
    regime: &Regime,
    grid: &GridControl,
    big_t: f64,
    level: LevelSet,
    raw: Vec<RawBranch>,
) -> Result<CylinderProfile, SolverError> {
    let total: usize = raw.iter().map(|b| b.t.len()).sum();
    let mut t = Vec::with_capacity(total);
    let mut xi = Vec::with_capacity(total);
    let mut xi_p = Vec::with_capacity(total);
    let mut branches = Vec::with_capacity(raw.len());
    for br in raw {
        for w in br.t.windows(2) {
            if !(w[0] < w[1]) {
                return Err(SolverError::Internal(format!(
                    "branch times not strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&last) = t.last() {
            let first = *br.t.first().expect("branch nonempty");
            if first < last {
                return Err(SolverError::Internal(format!(
                    "branch starts at {first} before the previous one ends at {last}"
                )));
            }
        }
        let lo = t.len();
        t.extend_from_slice(&br.t);
        xi.extend_from_slice(&br.xi);
        xi_p.extend_from_slice(&br.xi_p);
        branches.push(Branch {
            lo,
            hi: t.len() - 1,
            rising: br.rising,
            fold_t: br.fold_t,
        });
    }
    Ok(CylinderProfile {
        spec: *spec,
        regime: *regime,
        grid: *grid,
        big_t,
        t,
        xi,
        xi_p,
        branches,
        level,
    })
}

/// Build the full profile for a classified spec.
pub fn build_profile(
    spec: &ProblemSpec,
    regime: &Regime,
    grid: &GridControl,
) -> Result<CylinderProfile, SolverError> {
    if !(grid.quad_tol > 0.0 && grid.fold_zone_cap > 0.0 && grid.xi_depth > 1.0) {
        return Err(SolverError::Invalid("bad grid controls".into()));
    }
    let big_t = spec.t_half_log();
    let nf = spec.n as f64;
    let sign = fold_sign(spec.k);
    match regime.tag {
        RegimeTag::InfiniteBC => {
            let p0 = regime
                .p
                .ok_or_else(|| SolverError::Internal("missing fold height".into()))?;
            let xi_min = (-grid.xi_depth).min(p0 - grid.xi_depth);
            // node times at depth xi sit within ~e^{xi} of the blow-down
            // time, so the fold height must satisfy the length equation to
            // a fraction of the truncated tail mass e^{xi_min}, far tighter
            // than any classification needs
            let tight = (1e-3 * xi_min.exp()).clamp(5e-14, grid.quad_tol);
            let p = solve_p_for_t(spec.t_half_log(), spec.n, spec.k, tight)?;
            let s = -(-nf * p).exp();
            let mut regime = *regime;
            regime.p = Some(p);
            regime.s = s;
            regime.h = sign * s;
            let regime = &regime;
            let level = LevelSet::new(spec.n, spec.k, sign * s)?;
            let right = build_fold_branch(&level, p, 0.0, xi_min, None, false, grid)?;
            let mut left = vec![RawBranch {
                t: right.t.clone(),
                xi: right.xi.clone(),
                xi_p: right.xi_p.clone(),
                rising: right.rising,
                fold_t: right.fold_t,
            }];
            mirror_branches(&mut left);
            let mut raw = left;
            raw.push(right);
            let prof = assemble(spec, regime, grid, big_t, level, raw)?;
            if *prof.t.last().expect("nonempty") >= big_t {
                return Err(SolverError::Internal(
                    "blow-down truncation reached the boundary time".into(),
                ));
            }
            Ok(prof)
        }
        RegimeTag::Case4InteriorJump => {
            let (p_a, p_b) = regime
                .p_a
                .zip(regime.p_b)
                .ok_or_else(|| SolverError::Internal("missing heights".into()))?;
            let p = regime
                .p
                .ok_or_else(|| SolverError::Internal("missing fold height".into()))?;
            let t_m = regime
                .t_m
                .ok_or_else(|| SolverError::Internal("missing jump time".into()))?;
            let mirrored = p_a < p_b;
            let (pa_n, pb_n) = (p_a.max(p_b), p_a.min(p_b));
            let t_m_n = if mirrored { -t_m } else { t_m };
            let level = LevelSet::new(spec.n, spec.k, sign * -(-nf * p).exp())?;
            let left = build_fold_branch(&level, p, t_m_n, pa_n, Some(-big_t), true, grid)?;
            let right = build_fold_branch(&level, p, t_m_n, pb_n, Some(big_t), false, grid)?;
            let mut raw = vec![left, right];
            if mirrored {
                mirror_branches(&mut raw);
            }
            assemble(spec, regime, grid, big_t, level, raw)
        }
        RegimeTag::Case2OuterSingular | RegimeTag::Case3InnerSingular => {
            let (p_a, p_b) = regime
                .p_a
                .zip(regime.p_b)
                .ok_or_else(|| SolverError::Internal("missing heights".into()))?;
            let mirrored = regime.tag == RegimeTag::Case2OuterSingular;
            let (pa_n, pb_n) = (p_a.max(p_b), p_a.min(p_b));
            let level = LevelSet::new(spec.n, spec.k, sign * -(-nf * pa_n).exp())?;
            // normalized: the profile starts on the fold at t = -T with
            // slope exactly -1 and descends to the lower height
            let branch =
                build_fold_branch(&level, pa_n, -big_t, pb_n, Some(big_t), false, grid)?;
            let mut raw = vec![branch];
            if mirrored {
                mirror_branches(&mut raw);
            }
            assemble(spec, regime, grid, big_t, level, raw)
        }
        RegimeTag::Case1Smooth => {
            let (p_a, p_b) = regime
                .p_a
                .zip(regime.p_b)
                .ok_or_else(|| SolverError::Internal("missing heights".into()))?;
            let mirrored = p_a < p_b;
            let (pa_n, pb_n) = (p_a.max(p_b), p_a.min(p_b));
            let level = LevelSet::new(spec.n, spec.k, regime.h)?;
            let branch = build_smooth_branch(&level, regime.s, pa_n, pb_n, big_t, grid)?;
            let mut raw = vec![branch];
            if mirrored {
                mirror_branches(&mut raw);
            }
            assemble(spec, regime, grid, big_t, level, raw)
        }
    }
}

impl CylinderProfile {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Branch containing time `t`; at a shared jump time the later branch
    /// wins, so the returned slope there is the right-hand one.
    pub fn branch_of(&self, t: f64) -> Option<&Branch> {
        self.branches
            .iter()
            .rev()
            .find(|br| self.t[br.lo] <= t && t <= self.t[br.hi])
    }

    /// Exact state `(xi, xi')` at an arbitrary time, by inverting the
    /// travel-time map on the profile's level. Not grid interpolation: the
    /// result lies on the level to quadrature accuracy.
    pub fn eval_state(&self, t: f64) -> Result<(f64, f64), SolverError> {
        let br = self.branch_of(t).ok_or_else(|| {
            SolverError::Invalid(format!("time {t} outside the profile domain"))
        })?;
        let qtol = inner_quad_tol(&self.grid);
        let slope_sign = if br.rising { 1.0 } else { -1.0 };
        if let Some(ft) = br.fold_t {
            let p = self.level.peak_xi().ok_or_else(|| {
                SolverError::Internal("fold branch on an unfolded level".into())
            })?;
            let xi = xi_at_time_to_fold(&self.level, p, (t - ft).abs(), qtol)?;
            let speed = self.level.speed(xi)?;
            return Ok((xi, slope_sign * speed));
        }
        // smooth branch: anchor at the nearest node at-or-left of t
        let idx = match self.t[br.lo..=br.hi]
            .binary_search_by(|probe| probe.total_cmp(&t))
        {
            Ok(i) => br.lo + i,
            Err(i) => br.lo + i.saturating_sub(1),
        };
        let (t0, xi0) = (self.t[idx], self.xi[idx]);
        let want = t - t0;
        // xi moves against t on a falling branch
        let mut lo;
        let mut hi;
        if br.rising {
            lo = xi0;
            hi = self.xi[br.hi].max(xi0);
        } else {
            lo = self.xi[br.hi].min(xi0);
            hi = xi0;
        }
        let mut xi = xi0 + slope_sign * want;
        xi = xi.clamp(lo, hi);
        for _ in 0..100 {
            let (a, b) = if xi <= xi0 { (xi, xi0) } else { (xi0, xi) };
            let tau = level_traverse_time(
                a,
                b,
                self.regime.s,
                self.level.n,
                self.level.k,
                qtol,
            )?
            .value;
            // travel time from the anchor, signed along the branch
            let elapsed = if (xi > xi0) == br.rising { tau } else { -tau };
            let f = elapsed - want;
            if f.abs() <= 1e-13 {
                let speed = self.level.speed(xi)?;
                return Ok((xi, slope_sign * speed));
            }
            if f > 0.0 {
                if br.rising {
                    hi = xi;
                } else {
                    lo = xi;
                }
            } else if br.rising {
                lo = xi;
            } else {
                hi = xi;
            }
            let speed = self.level.speed(xi)?;
            let cand = xi - slope_sign * f * speed;
            xi = if cand > lo && cand < hi {
                cand
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * xi0.abs().max(1.0) {
                let speed = self.level.speed(xi)?;
                return Ok((xi, slope_sign * speed));
            }
        }
        Err(SolverError::Internal(format!(
            "state evaluation stalled at t = {t}"
        )))
    }

    pub fn eval_xi(&self, t: f64) -> Result<f64, SolverError> {
        Ok(self.eval_state(t)?.0)
    }

    pub fn eval_slope(&self, t: f64) -> Result<f64, SolverError> {
        Ok(self.eval_state(t)?.1)
    }

    /// Indices of the two rows sharing the jump time, if the profile has a
    /// jump.
    pub fn jump_rows(&self) -> Option<(usize, usize)> {
        self.regime.t_m?;
        for pair in self.branches.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if self.t[a.hi] == self.t[b.lo] {
                return Some((a.hi, b.lo));
            }
        }
        None
    }
}

/// Radial solution reconstructed from a cylinder profile.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub spec: ProblemSpec,
    pub regime: Regime,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// Logarithmic radial derivative `d(ln u)/dr` at each node.
    pub dlnu_dr: Vec<f64>,
    /// Radius of the gradient jump, for jump-carrying regimes.
    pub m: Option<f64>,
    /// One-sided `d(ln u)/dr` limits at the jump.
    pub jump_dlnu_left: Option<f64>,
    pub jump_dlnu_right: Option<f64>,
    /// Stabilized value of `u d^{(n-2)/2}` near each boundary sphere
    /// (infinite data only); `d` is the distance to that sphere.
    pub boundary_coeff_inner: Option<f64>,
    pub boundary_coeff_outer: Option<f64>,
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values[values.len() / 2])
}

/// Map the profile back to `u(r)`.
pub fn reconstruct_u(profile: &CylinderProfile) -> RadialSolution {
    let spec = profile.spec;
    let (n, a, b) = (spec.n, spec.a, spec.b);
    let mut r = Vec::with_capacity(profile.len());
    let mut u = Vec::with_capacity(profile.len());
    let mut dlnu = Vec::with_capacity(profile.len());
    for i in 0..profile.len() {
        let (ri, ui) = from_cylinder(profile.t[i], profile.xi[i], a, b, n);
        r.push(ri);
        u.push(ui);
        dlnu.push(dlnu_dr_from_slope(profile.xi_p[i], ri, n));
    }
    let m = profile.regime.t_m.map(|tm| spec.center() * tm.exp());
    let jump_left = m.map(|m| -(n as f64 - 2.0) / m);
    let jump_right = m.map(|_| 0.0);
    let (mut coeff_in, mut coeff_out) = (None, None);
    if profile.regime.tag == RegimeTag::InfiniteBC {
        let power = (n as f64 - 2.0) / 2.0;
        let d_min_in = r.first().map(|&r0| r0 - a).unwrap_or(0.0);
        let d_min_out = r.last().map(|&rl| b - rl).unwrap_or(0.0);
        let mut inner: Vec<f64> = r
            .iter()
            .zip(u.iter())
            .filter(|(&ri, _)| ri - a <= 10.0 * d_min_in)
            .map(|(&ri, &ui)| ui * (ri - a).powf(power))
            .collect();
        let mut outer: Vec<f64> = r
            .iter()
            .zip(u.iter())
            .filter(|(&ri, _)| b - ri <= 10.0 * d_min_out)
            .map(|(&ri, &ui)| ui * (b - ri).powf(power))
            .collect();
        coeff_in = median(&mut inner);
        coeff_out = median(&mut outer);
    }
    RadialSolution {
        spec,
        regime: profile.regime,
        r,
        u,
        dlnu_dr: dlnu,
        m,
        jump_dlnu_left: jump_left,
        jump_dlnu_right: jump_right,
        boundary_coeff_inner: coeff_in,
        boundary_coeff_outer: coeff_out,
    }
}

/// Numerical certificate that the jump is a genuine viscosity corner.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TouchingCertificate {
    /// Profile has no jump; nothing to certify.
    pub vacuous: bool,
    /// `d(ln u)/dr` gap across the jump (right minus left); must be
    /// strictly positive, so no C^1 function touches `u` from above at `m`.
    pub gap: Option<f64>,
    /// Images of the admissible touching-slope interval endpoints under
    /// the slope map; must be +1 and -1.
    pub map_left: Option<f64>,
    pub map_right: Option<f64>,
    pub ok: bool,
}

/// Certify the jump of a profile: the one-sided derivative gap is strict,
/// and the interval of admissible touching slopes `[-(n-2)/m, 0]` maps
/// onto `[+1, -1]` under `d -> -(2/(n-2)) m d - 1`.
pub fn touching_certificate(profile: &CylinderProfile) -> TouchingCertificate {
    let Some(t_m) = profile.regime.t_m else {
        return TouchingCertificate {
            vacuous: true,
            gap: None,
            map_left: None,
            map_right: None,
            ok: true,
        };
    };
    let n = profile.spec.n as f64;
    let m = profile.spec.center() * t_m.exp();
    let left = -(n - 2.0) / m;
    let right = 0.0;
    let gap = right - left;
    let slope_map = |d: f64| -(2.0 / (n - 2.0)) * m * d - 1.0;
    let map_left = slope_map(left);
    let map_right = slope_map(right);
    let ok = gap > 0.0 && (map_left - 1.0).abs() <= 5e-15 && map_right == -1.0;
    TouchingCertificate {
        vacuous: false,
        gap: Some(gap),
        map_left: Some(map_left),
        map_right: Some(map_right),
        ok,
    }
}
