//! Quadrature for level-set travel times.
//!
//! Every time-of-flight along a folded level is an integral of the kernel
//!
//! ```text
//! K(eta; p) = { 1 + e^{-2 eta - 2 p} (1 - e^{n eta})^{1/k} }^{-1/2},   eta <= 0,
//! ```
//!
//! where `eta = xi - peak_xi` measures depth below the fold and
//! `p = peak_xi` fixes the level through `|H| = e^{-n p}`. The kernel is
//! bounded by 1, behaves like `e^{eta + p}` far down the branch (so tails
//! truncate with an explicit exponential bound), and has a `|eta|^{1/k}`
//! cusp in its derivative at `eta = 0`. All integrals are therefore run on
//! meshes graded geometrically toward the fold and refined by an adaptive
//! Gauss-Kronrod 7-15 rule.

use crate::cylinder::{CylinderError, LevelSet};
use thiserror::Error;

/// Default absolute tolerance for travel-time integrals.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Kernel evaluations allowed per integral before giving up.
pub const DEFAULT_BUDGET: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("integration domain invalid: {0}")]
    Domain(String),
    #[error("evaluation budget exhausted; best estimate {0:.6e} with error {1:.1e}", best.value, best.abs_error)]
    Budget { best: QuadResult },
    #[error(transparent)]
    Cylinder(#[from] CylinderError),
}

/// Value of a travel-time integral together with its accounting.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated error of the computed part.
    pub abs_error: f64,
    /// Analytic bound on the truncated tail, zero for finite domains.
    pub tail_bound: f64,
    pub evaluations: usize,
}

impl QuadResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            abs_error: 0.0,
            tail_bound: 0.0,
            evaluations: 0,
        }
    }

    fn scaled(mut self, factor: f64) -> Self {
        self.value *= factor;
        self.abs_error *= factor.abs();
        self.tail_bound *= factor.abs();
        self
    }
}

/// Precomputed constants of the fold kernel at one level.
#[derive(Debug, Clone, Copy)]
pub struct KernelParams {
    pub n: u32,
    pub k: u32,
    /// Peak xi value of the level, i.e. `-(1/n) ln |H|`.
    pub p: f64,
}

impl KernelParams {
    pub fn new(n: u32, k: u32, p: f64) -> Self {
        Self { n, k, p }
    }

    /// Kernel value; `eta` is clamped to 0 from above so roundoff at the
    /// fold cannot leave the domain.
    pub fn eval(&self, eta: f64) -> f64 {
        let eta = eta.min(0.0);
        let nf = self.n as f64;
        let bracket = -f64::exp_m1(nf * eta);
        let w = (-2.0 * eta - 2.0 * self.p).exp() * bracket.powf(1.0 / self.k as f64);
        1.0 / (1.0 + w).sqrt()
    }
}

/// Travel-time kernel `K(eta; p)`; rejects `eta > 0`.
pub fn time_kernel(eta: f64, p: f64, n: u32, k: u32) -> Result<f64, QuadError> {
    if eta > 0.0 {
        return Err(QuadError::Domain(format!("kernel needs eta <= 0, got {eta}")));
    }
    if !eta.is_finite() && !(eta == f64::NEG_INFINITY) {
        return Err(QuadError::Domain("eta is NaN".into()));
    }
    if eta == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok(KernelParams::new(n, k, p).eval(eta))
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1]; the Gauss nodes are the
// odd-indexed Kronrod abscissae plus the center.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Kronrod panel: returns (integral, error estimate), 15 evaluations.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate().take(7) {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

/// Adaptive integration over `[points[0], points.last()]` seeded with the
/// given panel boundaries; worst panel is bisected until the summed error
/// estimate drops below `tol` or the budget runs out.
pub fn integrate_seeded<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    tol: f64,
    budget: usize,
) -> Result<QuadResult, QuadError> {
    if points.len() < 2 {
        return Err(QuadError::Domain("need at least two panel points".into()));
    }
    for w in points.windows(2) {
        if !(w[0] < w[1]) {
            return Err(QuadError::Domain(format!(
                "panel points not increasing: {} then {}",
                w[0], w[1]
            )));
        }
    }
    let mut evals = 0usize;
    let mut segs: Vec<Segment> = Vec::with_capacity(points.len() + 32);
    for w in points.windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        segs.push(Segment {
            lo: w[0],
            hi: w[1],
            value,
            error,
        });
    }
    loop {
        let total_error: f64 = segs.iter().map(|s| s.error).sum();
        if total_error <= tol {
            return Ok(QuadResult {
                value: segs.iter().map(|s| s.value).sum(),
                abs_error: total_error,
                tail_bound: 0.0,
                evaluations: evals,
            });
        }
        if evals + 30 > budget {
            return Err(QuadError::Budget {
                best: QuadResult {
                    value: segs.iter().map(|s| s.value).sum(),
                    abs_error: total_error,
                    tail_bound: 0.0,
                    evaluations: evals,
                },
            });
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("non-empty");
        let seg = segs[worst];
        let mid = 0.5 * (seg.lo + seg.hi);
        if mid <= seg.lo || mid >= seg.hi {
            // panel is at floating-point resolution; accept its estimate
            segs[worst].error = 0.0;
            continue;
        }
        let (v1, e1) = gk15(&mut f, seg.lo, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.hi);
        evals += 30;
        segs[worst] = Segment {
            lo: seg.lo,
            hi: mid,
            value: v1,
            error: e1,
        };
        segs.push(Segment {
            lo: mid,
            hi: seg.hi,
            value: v2,
            error: e2,
        });
    }
}

/// Adaptive integration of `f` over `[lo, hi]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    budget: usize,
) -> Result<QuadResult, QuadError> {
    integrate_seeded(f, &[lo, hi], tol, budget)
}

/// Panel boundaries from `lo < 0` up to 0, geometrically refined toward 0
/// where the kernel has its cusp.
fn graded_to_zero(lo: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    let mut x = lo / 2.0;
    while x < -1e-13 {
        pts.push(x);
        x /= 2.0;
    }
    pts.push(0.0);
    pts
}

fn tail_bound(p: f64, lambda: f64, n: u32, k: u32) -> f64 {
    // kernel <= e^{eta+p} (1 - e^{-n lambda})^{-1/(2k)} for eta <= -lambda
    let correction = (-f64::exp_m1(-(n as f64) * lambda)).powf(-1.0 / (2.0 * k as f64));
    (p - lambda).exp() * correction
}

fn check_nk(n: u32, k: u32) -> Result<(), QuadError> {
    if n < 3 || k < 2 || k > n {
        return Err(QuadError::Domain(format!("invalid orders n = {n}, k = {k}")));
    }
    Ok(())
}

fn t_of_p_with_cutoff(
    p: f64,
    n: u32,
    k: u32,
    tol: f64,
    lambda: f64,
) -> Result<QuadResult, QuadError> {
    let params = KernelParams::new(n, k, p);
    let mut result = integrate_seeded(
        |eta| params.eval(eta),
        &graded_to_zero(-lambda),
        tol * 0.8,
        DEFAULT_BUDGET,
    )?;
    result.tail_bound = tail_bound(p, lambda, n, k);
    Ok(result)
}

/// Full descent time from the fold at height `p` to `xi = -infinity`:
/// `T(p) = integral of K(.; p) over (-infinity, 0]`, truncated where the
/// tail bound drops below `tol / 10`.
pub fn t_of_p(p: f64, n: u32, k: u32, tol: f64) -> Result<QuadResult, QuadError> {
    check_nk(n, k)?;
    if !(p.is_finite() && tol > 0.0) {
        return Err(QuadError::Domain(format!("bad p = {p} or tol = {tol}")));
    }
    let lambda = (p + (10.0 / tol).ln()).max(1.0);
    t_of_p_with_cutoff(p, n, k, tol, lambda)
}

/// Cylinder heights of the two boundary data:
/// `p_a = -(2/(n-2)) ln c1 - ln a` and `p_b = -(2/(n-2)) ln c2 - ln b`.
pub fn boundary_peaks(n: u32, a: f64, b: f64, c1: f64, c2: f64) -> (f64, f64) {
    let scale = -2.0 / (n as f64 - 2.0);
    (scale * c1.ln() - a.ln(), scale * c2.ln() - b.ln())
}

/// Descent time from depth `eta_from <= 0` up to the fold:
/// `integral of K(.; p) over [eta_from, 0]`. Empty for `eta_from >= 0`.
pub fn partial_descent_time(
    eta_from: f64,
    p: f64,
    n: u32,
    k: u32,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    check_nk(n, k)?;
    if !eta_from.is_finite() {
        return Err(QuadError::Domain(format!("eta_from = {eta_from}")));
    }
    if eta_from >= 0.0 {
        return Ok(QuadResult::zero());
    }
    let params = KernelParams::new(n, k, p);
    integrate_seeded(
        |eta| params.eval(eta),
        &graded_to_zero(eta_from),
        tol,
        DEFAULT_BUDGET,
    )
}

/// The critical half-length together with the boundary heights it was
/// computed from.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryTimes {
    pub time: QuadResult,
    pub p_a: f64,
    pub p_b: f64,
}

/// Critical half-length from the heights alone:
/// `(1/2) integral of K(.; max(p_a, p_b))` over the height gap.
pub fn t_bc_from_peaks(
    n: u32,
    k: u32,
    p_a: f64,
    p_b: f64,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    check_nk(n, k)?;
    let gap = (p_a - p_b).abs();
    if gap == 0.0 {
        return Ok(QuadResult::zero());
    }
    Ok(partial_descent_time(-gap, p_a.max(p_b), n, k, tol)?.scaled(0.5))
}

/// Critical half-length of the boundary data:
/// half the kernel integral at level `max(p_a, p_b)` over the height gap.
/// Comparing `ln(b/a)` with twice this number classifies the regime.
pub fn t_bc(
    n: u32,
    k: u32,
    a: f64,
    b: f64,
    c1: f64,
    c2: f64,
    tol: f64,
) -> Result<BoundaryTimes, QuadError> {
    check_nk(n, k)?;
    if !(a > 0.0 && b > a && c1 > 0.0 && c2 > 0.0) {
        return Err(QuadError::Domain(format!(
            "need 0 < a < b and positive data, got a={a} b={b} c1={c1} c2={c2}"
        )));
    }
    let (p_a, p_b) = boundary_peaks(n, a, b, c1, c2);
    let time = t_bc_from_peaks(n, k, p_a, p_b, tol)?;
    Ok(BoundaryTimes { time, p_a, p_b })
}

/// Travel time between two heights on a folded level, in the depth
/// variable `eta = xi - peak`. Requires `xi_from <= xi_to <= peak`.
pub fn time_between_levels(
    xi_from: f64,
    xi_to: f64,
    level: &LevelSet,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    check_nk(level.n, level.k)?;
    let peak = level.peak_xi().ok_or_else(|| {
        QuadError::Domain(format!(
            "level (-1)^k H = {} has no fold; no finite travel anchor",
            level.signed()
        ))
    })?;
    if xi_to > peak + 1e-12 {
        return Err(QuadError::Domain(format!(
            "xi_to = {xi_to} exceeds the fold value {peak}"
        )));
    }
    if xi_from > xi_to {
        return Err(QuadError::Domain(format!(
            "need xi_from <= xi_to, got {xi_from} > {xi_to}"
        )));
    }
    let lo = (xi_from - peak).min(0.0);
    let hi = (xi_to - peak).min(0.0);
    if lo == hi {
        return Ok(QuadResult::zero());
    }
    let params = KernelParams::new(level.n, level.k, peak);
    let pts: Vec<f64> = if hi == 0.0 {
        graded_to_zero(lo)
    } else {
        (0..=8).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect()
    };
    integrate_seeded(|eta| params.eval(eta), &pts, tol, DEFAULT_BUDGET)
}

/// Travel time in raw xi between two heights on a level of either sign of
/// `s = (-1)^k H`. Folded levels delegate to the depth parametrization;
/// unfolded ones integrate the bounded speed kernel directly.
pub fn level_traverse_time(
    xi_from: f64,
    xi_to: f64,
    s: f64,
    n: u32,
    k: u32,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    check_nk(n, k)?;
    if xi_from > xi_to {
        return Err(QuadError::Domain(format!(
            "need xi_from <= xi_to, got {xi_from} > {xi_to}"
        )));
    }
    if s < 0.0 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let level = LevelSet::new(n, k, sign * s).map_err(QuadError::Cylinder)?;
        return time_between_levels(xi_from, xi_to, &level, tol);
    }
    if xi_from == xi_to {
        return Ok(QuadResult::zero());
    }
    let (nf, kf) = (n as f64, k as f64);
    let pts: Vec<f64> = (0..=8)
        .map(|i| xi_from + (xi_to - xi_from) * i as f64 / 8.0)
        .collect();
    integrate_seeded(
        |xi| {
            let w = (-2.0 * xi).exp() * (1.0 + s * (nf * xi).exp()).powf(1.0 / kf);
            1.0 / (1.0 + w).sqrt()
        },
        &pts,
        tol,
        DEFAULT_BUDGET,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::first_integral;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Composite Simpson on a mesh graded geometrically toward the fold;
    /// deterministic and refinement-free, used as an independent oracle.
    fn simpson_graded<F: Fn(f64) -> f64>(f: F, lo: f64, panels_per_block: usize) -> f64 {
        let blocks = graded_to_zero(lo);
        let mut total = 0.0;
        for w in blocks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let m = panels_per_block;
            let h = (b - a) / m as f64;
            let mut acc = f(a) + f(b);
            for i in 1..m {
                let x = a + h * i as f64;
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            total += acc * h / 3.0;
        }
        total
    }

    #[test]
    fn kernel_pointwise_anchors() {
        // value frozen from a 40-digit evaluation of
        // (1 + e^2 (1 - e^{-7})^{1/2})^{-1/2}
        let frozen = 0.34532712470901309941;
        let got = time_kernel(-1.0, 0.0, 7, 2).unwrap();
        assert!((got - frozen).abs() < 1e-12, "{got}");
        assert_eq!(time_kernel(0.0, 3.0, 7, 2).unwrap(), 1.0);
        assert!(time_kernel(0.5, 0.0, 7, 2).is_err());
        assert_eq!(time_kernel(f64::NEG_INFINITY, 0.0, 7, 2).unwrap(), 0.0);
    }

    #[test]
    fn kernel_matches_exponential_tail() {
        for p in [-2.0, 0.0, 1.5] {
            let eta = -30.0;
            let k = time_kernel(eta, p, 7, 2).unwrap();
            let ratio = k / (eta + p).exp();
            assert!((ratio - 1.0).abs() < 1e-10, "p={p}: ratio {ratio}");
        }
    }

    #[test]
    fn kernel_bounded_and_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let n = rng.random_range(3..=9);
            let k = rng.random_range(2..=n);
            let p = rng.random_range(-5.0..5.0);
            let eta = -rng.random_range(0.0..40.0f64);
            let v = time_kernel(eta, p, n, k).unwrap();
            assert!(v > 0.0 && v <= 1.0, "K({eta};{p}) = {v}");
        }
    }

    #[test]
    fn t_of_p_anchor_against_frozen_and_simpson() {
        // frozen from a 40-digit evaluation of the full integral at p = 0,
        // n = 7, k = 2
        let frozen = 0.90053496420570103076;
        let adaptive = t_of_p(0.0, 7, 2, 1e-11).unwrap();
        assert!(
            (adaptive.value - frozen).abs() < 1e-10,
            "adaptive {} vs frozen",
            adaptive.value
        );
        let params = KernelParams::new(7, 2, 0.0);
        let simpson = simpson_graded(|e| params.eval(e), -30.0, 2400);
        assert!(
            (adaptive.value - simpson).abs() < 1e-9,
            "adaptive {} vs simpson {simpson}",
            adaptive.value
        );
    }

    #[test]
    fn t_of_p_limits() {
        assert!(t_of_p(-10.0, 7, 2, 1e-10).unwrap().value < 1e-3);
        assert!(t_of_p(20.0, 7, 2, 1e-10).unwrap().value > 10.0);
    }

    #[test]
    fn t_of_p_monotone_in_p() {
        let mut last = -1.0;
        for i in 0..=20 {
            let p = -4.0 + i as f64 * 0.4;
            let v = t_of_p(p, 5, 3, 1e-10).unwrap().value;
            assert!(v > last, "T({p}) = {v} not above {last}");
            last = v;
        }
    }

    #[test]
    fn tail_truncation_is_sound() {
        for p in [-1.0, 0.5, 2.0] {
            let tol = 1e-10;
            let lambda = (p + (10.0f64 / tol).ln()).max(1.0);
            let base = t_of_p_with_cutoff(p, 7, 2, tol, lambda).unwrap();
            let wide = t_of_p_with_cutoff(p, 7, 2, tol, 2.0 * lambda).unwrap();
            let shift = (wide.value - base.value).abs();
            let slack = base.tail_bound + base.abs_error + wide.abs_error;
            assert!(
                shift <= slack,
                "p={p}: doubling the cutoff moved the value by {shift:e}, bound {:e}",
                base.tail_bound
            );
            assert!(base.tail_bound < tol / 5.0);
        }
    }

    #[test]
    fn t_bc_anchor_and_degenerate_gap() {
        // a=1, b=e, c1=c2=1 gives heights 0 and -1; frozen 40-digit value of
        // half the kernel integral over that unit gap at level 0
        let frozen = 0.27023816250902418239;
        let bt = t_bc(7, 2, 1.0, std::f64::consts::E, 1.0, 1.0, 1e-11).unwrap();
        assert!((bt.p_a - 0.0).abs() < 1e-14);
        assert!((bt.p_b + 1.0).abs() < 1e-14);
        assert!((bt.time.value - frozen).abs() < 1e-10, "{}", bt.time.value);
        // equal heights: zero critical length
        let (n, a, b) = (7, 1.0, 4.0);
        let c1 = 1.3;
        // choose c2 with p_a = p_b
        let c2 = c1 * (a / b as f64).powf((n as f64 - 2.0) / 2.0);
        let bt = t_bc(n, 2, a, b, c1, c2, 1e-10).unwrap();
        assert!(bt.time.value.abs() < 1e-15, "{}", bt.time.value);
        assert!((bt.p_a - bt.p_b).abs() < 1e-13);
    }

    #[test]
    fn t_bc_invariant_under_height_preserving_scaling() {
        let (n, k) = (6u32, 3u32);
        let (a, b, c1, c2) = (0.7, 3.1, 2.0, 0.4);
        let base = t_bc(n, k, a, b, c1, c2, 1e-12).unwrap();
        let mu: f64 = 3.7;
        let factor = mu.powf(-(n as f64 - 2.0) / 2.0);
        let scaled = t_bc(n, k, mu * a, mu * b, c1 * factor, c2 * factor, 1e-12).unwrap();
        assert!(
            (base.time.value - scaled.time.value).abs() < 1e-12,
            "{} vs {}",
            base.time.value,
            scaled.time.value
        );
    }

    #[test]
    fn time_between_levels_basics() {
        let level = LevelSet::from_state(7, 2, 0.8, -1.0).unwrap();
        let peak = level.peak_xi().unwrap();
        // empty interval
        let zero = time_between_levels(-1.0, -1.0, &level, 1e-10).unwrap();
        assert_eq!(zero.value, 0.0);
        // full branch matches the closed descent time at the same peak
        let full = time_between_levels(peak - 40.0, peak, &level, 1e-11).unwrap();
        let direct = t_of_p(peak, 7, 2, 1e-11).unwrap();
        assert!(
            (full.value - direct.value).abs() < 1e-9,
            "{} vs {}",
            full.value,
            direct.value
        );
        // above the fold is rejected
        assert!(time_between_levels(0.0, peak + 0.5, &level, 1e-10).is_err());
        // reversed order is rejected
        assert!(time_between_levels(0.5, -0.5, &level, 1e-10).is_err());
    }

    #[test]
    fn depth_and_raw_xi_routes_agree() {
        // same segment integrated in the depth variable and in raw xi with
        // the fold outside the panel; routes share no mesh
        let level = LevelSet::from_state(5, 3, 0.3, -1.0).unwrap();
        let peak = level.peak_xi().unwrap();
        let (lo, hi) = (peak - 2.5, peak - 1e-4);
        let depth = time_between_levels(lo, hi, &level, 1e-12).unwrap();
        let raw = integrate(
            |xi| 1.0 / level.speed(xi).unwrap(),
            lo,
            hi,
            1e-12,
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert!(
            (depth.value - raw.value).abs() < 1e-9,
            "{} vs {}",
            depth.value,
            raw.value
        );
    }

    #[test]
    fn traverse_time_handles_unfolded_levels() {
        // s > 0: no fold, any xi reachable
        let res = level_traverse_time(-1.0, 2.0, 4.2, 7, 2, 1e-10).unwrap();
        assert!(res.value > 0.0 && res.value < 3.0);
        // s < 0 delegates to the fold kernel
        let level = LevelSet::from_state(7, 2, 0.4, -1.0).unwrap();
        let s = level.signed();
        let via_s = level_traverse_time(-2.0, 0.0, s, 7, 2, 1e-11).unwrap();
        let via_level = time_between_levels(-2.0, 0.0, &level, 1e-11).unwrap();
        assert!((via_s.value - via_level.value).abs() < 1e-11);
    }

    /// The branch length depends on the level only through H: two phase
    /// points generating the same level give the same full descent time.
    #[test]
    fn flight_time_invariant_under_reparametrization() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..20 {
            let n = rng.random_range(3..=8);
            let k = rng.random_range(2..=n);
            let p1 = rng.random_range(-1.0..1.5);
            let level = LevelSet::from_state(n, k, p1, -1.0).unwrap();
            let peak1 = level.peak_xi().unwrap();
            // second anchor: a deeper point on the same level, slope from the
            // speed law, H recomputed from scratch through the first integral;
            // depth stays moderate because reconstructing H from the state
            // loses a factor e^{n depth} of precision
            let xi2 = p1 - rng.random_range(0.3..1.2);
            let q2 = -level.speed(xi2).unwrap();
            let h2 = first_integral(xi2, q2, n, k);
            let level2 = LevelSet::new(n, k, h2).unwrap();
            let peak2 = level2.peak_xi().unwrap();
            let f1 = t_of_p(peak1, n, k, 1e-11).unwrap().value;
            let f2 = t_of_p(peak2, n, k, 1e-11).unwrap().value;
            assert!(
                (f1 - f2).abs() < 2e-10,
                "n={n} k={k}: flight {f1} vs {f2} (peaks {peak1} vs {peak2})"
            );
        }
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let params = KernelParams::new(7, 2, 0.0);
        let err = integrate_seeded(|eta| params.eval(eta), &[-5.0, 0.0], 1e-30, 600);
        match err {
            Err(QuadError::Budget { best }) => {
                assert!(best.value > 0.0 && best.value < 5.0);
                assert!(best.evaluations <= 600);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn integrate_rejects_bad_panels() {
        assert!(integrate_seeded(|x| x, &[0.0], 1e-10, 1000).is_err());
        assert!(integrate_seeded(|x| x, &[1.0, 0.5], 1e-10, 1000).is_err());
    }
}
