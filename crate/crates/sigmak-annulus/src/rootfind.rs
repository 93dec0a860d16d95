//! Scalar root solves for the shooting parameters.
//!
//! Three equations pin down a profile:
//!
//! * the fold height `p` with prescribed full descent time, `T(p) = T`,
//!   used by the doubly infinite boundary condition;
//! * the level `s` whose monotone traverse between the two boundary
//!   heights takes exactly `2T`, used on short annuli (smooth regime);
//! * the interior fold height `p >= max(p_a, p_b)` whose two half-descents
//!   onto the boundary heights sum to `T`, used on long annuli where the
//!   gradient jumps.
//!
//! Every target function is strictly monotone in its unknown, so brackets
//! are grown geometrically and then shrunk by bisection, with a secant
//! step interleaved where the function is smooth. The jump position and
//! matching radius are resubstitutions of the solved height, not separate
//! solves.

use crate::cylinder::LevelSet;
use crate::quadrature::{
    level_traverse_time, partial_descent_time, t_bc_from_peaks, t_of_p, QuadError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]: f = {f_lo:.3e} and {f_hi:.3e}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("no root within the admissible range: {0}")]
    OutOfRange(String),
    #[error("boundary data incompatible with the requested regime: {0}")]
    Regime(String),
    #[error("root iteration did not converge within {max_iter} steps")]
    MaxIter { max_iter: usize },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Cylinder(#[from] crate::cylinder::CylinderError),
}

/// Bisection with an interleaved secant step. The bracket must change
/// sign; every second step bisects, so the width halves at least every
/// two iterations regardless of secant behavior.
pub fn solve_bracketed<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol_x: f64,
    max_iter: usize,
) -> Result<f64, RootError>
where
    F: FnMut(f64) -> Result<f64, RootError>,
{
    let mut f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let mut f_hi = f(hi)?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(RootError::NoBracket { lo, hi, f_lo, f_hi });
    }
    for iter in 0..max_iter {
        let width = hi - lo;
        if width <= tol_x * lo.abs().max(hi.abs()).max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        let x = if iter % 2 == 1 {
            mid
        } else {
            let secant = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            let margin = 0.01 * width;
            if secant > lo + margin && secant < hi - margin {
                secant
            } else {
                mid
            }
        };
        if x <= lo || x >= hi {
            return Ok(mid);
        }
        let f_x = f(x)?;
        if f_x == 0.0 {
            return Ok(x);
        }
        if f_x.signum() == f_lo.signum() {
            lo = x;
            f_lo = f_x;
        } else {
            hi = x;
            f_hi = f_x;
        }
    }
    Err(RootError::MaxIter { max_iter })
}

/// Pure bisection; used where the target has a one-sided derivative
/// blow-up at an endpoint of the bracket.
pub fn bisect<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol_x: f64,
    max_iter: usize,
) -> Result<f64, RootError>
where
    F: FnMut(f64) -> Result<f64, RootError>,
{
    let mut f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi)?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(RootError::NoBracket { lo, hi, f_lo, f_hi });
    }
    for _ in 0..max_iter {
        if hi - lo <= tol_x * lo.abs().max(hi.abs()).max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(RootError::MaxIter { max_iter })
}

fn quad_tol_for(tol: f64) -> f64 {
    (tol * 1e-2).clamp(1e-14, 1e-11)
}

/// Fold height with prescribed full descent time: solves `T(p) = t_target`
/// for the strictly increasing map `T`. The doubly infinite profile on a
/// half-length `T` annulus uses `p = solve_p_for_t(T)`.
pub fn solve_p_for_t(t_target: f64, n: u32, k: u32, tol: f64) -> Result<f64, RootError> {
    if !(t_target > 0.0 && t_target.is_finite()) {
        return Err(RootError::OutOfRange(format!(
            "descent time must be positive and finite, got {t_target}"
        )));
    }
    let qtol = quad_tol_for(tol);
    let g = |p: f64| -> Result<f64, RootError> {
        Ok(t_of_p(p, n, k, qtol)?.value - t_target)
    };
    let mut lo = -2.0;
    let mut f_lo = g(lo)?;
    while f_lo > 0.0 {
        lo *= 2.0;
        if lo < -200.0 {
            return Err(RootError::OutOfRange(format!(
                "no fold height below -200 reaches descent time {t_target}"
            )));
        }
        f_lo = g(lo)?;
    }
    let mut hi = t_target.max(0.5);
    if hi > 300.0 {
        return Err(RootError::OutOfRange(format!(
            "descent time {t_target} needs a fold height beyond 300"
        )));
    }
    let mut f_hi = g(hi)?;
    while f_hi < 0.0 {
        hi = hi * 2.0 + 1.0;
        if hi > 300.0 {
            return Err(RootError::OutOfRange(format!(
                "descent time {t_target} needs a fold height beyond 300"
            )));
        }
        f_hi = g(hi)?;
    }
    solve_bracketed(g, lo, hi, tol, 300)
}

/// Level and starting slope of the smooth (short-annulus) profile.
#[derive(Debug, Clone, Copy)]
pub struct QaSolution {
    /// Slope at the inner boundary, `xi'(-T)`; negative when the inner
    /// boundary height is the larger one.
    pub q_a: f64,
    /// Fold-side level coordinate `s = (-1)^k H`.
    pub s: f64,
    /// Conserved first integral `H`.
    pub h: f64,
}

/// Smooth-regime shooting: finds the level `s` on which the monotone
/// traverse between the boundary heights takes time `2T`. Requires the
/// annulus to be shorter than the critical half-length of the data.
pub fn solve_qa(
    n: u32,
    k: u32,
    p_a: f64,
    p_b: f64,
    big_t: f64,
    tol: f64,
) -> Result<QaSolution, RootError> {
    if !(big_t > 0.0 && big_t.is_finite() && p_a.is_finite() && p_b.is_finite()) {
        return Err(RootError::OutOfRange(format!(
            "need finite heights and positive half-length, got p_a={p_a} p_b={p_b} T={big_t}"
        )));
    }
    let pa = p_a.max(p_b);
    let pb = p_a.min(p_b);
    let qtol = quad_tol_for(tol);
    if pa == pb {
        return Err(RootError::Regime(
            "equal boundary heights admit no monotone connecting orbit".into(),
        ));
    }
    let tbc = t_bc_from_peaks(n, k, pa, pb, qtol)?.value;
    if big_t >= tbc {
        return Err(RootError::Regime(format!(
            "half-length {big_t} is not below the critical value {tbc}"
        )));
    }
    let s_min = -(-(n as f64) * pa).exp();
    let target = 2.0 * big_t;
    let time_at = |y: f64| -> Result<f64, RootError> {
        let s = s_min + y.exp();
        Ok(level_traverse_time(pb, pa, s, n, k, qtol)?.value)
    };
    // traverse time decreases strictly in s; expand a bracket in
    // y = ln(s - s_min)
    let mut y_lo = 0.0;
    let mut step = 1.0;
    while time_at(y_lo)? < target {
        y_lo -= step;
        step *= 2.0;
        if y_lo < -700.0 {
            return Err(RootError::OutOfRange(format!(
                "traverse time never reaches {target} above the fold-touching level"
            )));
        }
    }
    let mut y_hi = y_lo.max(0.0);
    step = 1.0;
    while time_at(y_hi)? > target {
        y_hi += step;
        step *= 2.0;
        if y_hi > 700.0 {
            return Err(RootError::OutOfRange(format!(
                "traverse time stays above {target} for all representable levels"
            )));
        }
    }
    let y = solve_bracketed(
        |y| Ok(time_at(y)? - target),
        y_lo.min(y_hi),
        y_hi,
        1e-13,
        300,
    )?;
    let s = s_min + y.exp();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let h = sign * s;
    let level = LevelSet::new(n, k, h)?;
    // slope at the actual inner boundary height; descending profiles
    // start below the cone, rising ones above it
    let speed = (1.0 + level.w(p_a)?).sqrt();
    let q_a = if p_a >= p_b { -speed } else { speed };
    Ok(QaSolution { q_a, s, h })
}

/// Interior fold height of the long-annulus profile: solves
/// `T_plus(p) + T_minus(p) = T` by pure bisection, where the two terms
/// are the half-descents from the fold onto each boundary height.
/// Monotone increasing in `p` with `T_bc - T < 0` at `p = max(p_a, p_b)`.
pub fn solve_p_case4(
    n: u32,
    k: u32,
    p_a: f64,
    p_b: f64,
    big_t: f64,
    tol: f64,
) -> Result<f64, RootError> {
    if !(big_t > 0.0 && big_t.is_finite() && p_a.is_finite() && p_b.is_finite()) {
        return Err(RootError::OutOfRange(format!(
            "need finite heights and positive half-length, got p_a={p_a} p_b={p_b} T={big_t}"
        )));
    }
    let pa = p_a.max(p_b);
    let pb = p_a.min(p_b);
    let qtol = quad_tol_for(tol);
    let g = |p: f64| -> Result<f64, RootError> {
        let t_plus = partial_descent_time(pb - p, p, n, k, qtol)?.value;
        let t_minus = partial_descent_time(pa - p, p, n, k, qtol)?.value;
        Ok(0.5 * (t_plus + t_minus) - big_t)
    };
    let g_at_pa = g(pa)?;
    if g_at_pa > 0.0 {
        return Err(RootError::Regime(format!(
            "half-length {big_t} is below the critical value; no interior fold exists"
        )));
    }
    if g_at_pa == 0.0 {
        return Ok(pa);
    }
    let mut hi = pa + 1.0;
    let mut width = 1.0;
    while g(hi)? < 0.0 {
        width *= 2.0;
        hi = pa + width;
        if width > 300.0 {
            return Err(RootError::OutOfRange(format!(
                "no fold height within 300 of the boundary heights reaches {big_t}"
            )));
        }
    }
    bisect(g, pa, hi, tol, 300)
}

/// Cylinder time of the gradient jump for a solved interior fold height:
/// the signed offset `T_minus - T_plus`, nonpositive when `p_a >= p_b` and
/// mirrored otherwise.
pub fn case4_jump_time(
    n: u32,
    k: u32,
    p_a: f64,
    p_b: f64,
    p: f64,
    tol: f64,
) -> Result<f64, RootError> {
    let pa = p_a.max(p_b);
    let pb = p_a.min(p_b);
    if p < pa - 1e-9 {
        return Err(RootError::OutOfRange(format!(
            "fold height {p} lies below the larger boundary height {pa}"
        )));
    }
    let qtol = quad_tol_for(tol);
    let t_minus = 0.5 * partial_descent_time(pa - p.max(pa), p.max(pa), n, k, qtol)?.value;
    let t_plus = 0.5 * partial_descent_time(pb - p.max(pa), p.max(pa), n, k, qtol)?.value;
    let offset = t_minus - t_plus;
    Ok(if p_a >= p_b { offset } else { -offset })
}

/// Radius at which the long-annulus profile jumps: `sqrt(ab) e^{t_m}` with
/// `t_m` the signed jump time. Lies in `(a, sqrt(ab)]` when the inner
/// datum is the higher one.
pub fn matching_radius(
    n: u32,
    k: u32,
    p_a: f64,
    p_b: f64,
    p: f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, RootError> {
    if !(a > 0.0 && b > a) {
        return Err(RootError::OutOfRange(format!("need 0 < a < b, got {a}, {b}")));
    }
    let t_m = case4_jump_time(n, k, p_a, p_b, p, tol)?;
    Ok((a * b).sqrt() * t_m.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::boundary_peaks;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bracketed_solver_on_polynomial() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let root = solve_bracketed(f, 0.0, 4.0, 1e-14, 200).unwrap();
        assert!((root - 2.0f64.powf(1.0 / 3.0)).abs() < 1e-12);
        let err = solve_bracketed(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 100);
        assert!(matches!(err, Err(RootError::NoBracket { .. })));
    }

    #[test]
    fn bisect_matches_known_root() {
        let root = bisect(|x| Ok(x.cos() - x), 0.0, 1.0, 1e-13, 200).unwrap();
        assert!((root - 0.739085133215160641).abs() < 1e-12);
    }

    #[test]
    fn solve_p_frozen_anchor() {
        // half-length of the annulus 1 < r < 10; fold height frozen from a
        // 40-digit solve of T(p) = ln(10)/2 at n = 7, k = 2
        let t = 0.5 * 10f64.ln();
        let p = solve_p_for_t(t, 7, 2, 1e-11).unwrap();
        assert!(
            (p - 0.33449114656627457397).abs() < 1e-9,
            "p = {p}"
        );
    }

    #[test]
    fn solve_p_round_trip() {
        for &p in &[-8.0, -3.0, -0.5, 0.0, 1.0, 4.0, 12.0] {
            let t = t_of_p(p, 6, 4, 1e-12).unwrap().value;
            let p_back = solve_p_for_t(t, 6, 4, 1e-11).unwrap();
            let t_back = t_of_p(p_back, 6, 4, 1e-12).unwrap().value;
            assert!(
                (t_back - t).abs() < 1e-9,
                "p = {p}: time {t} came back as {t_back}"
            );
        }
    }

    #[test]
    fn solve_p_rejects_unreachable_times() {
        assert!(matches!(
            solve_p_for_t(0.0, 7, 2, 1e-10),
            Err(RootError::OutOfRange(_))
        ));
        assert!(matches!(
            solve_p_for_t(1e6, 7, 2, 1e-10),
            Err(RootError::OutOfRange(_))
        ));
    }

    #[test]
    fn solve_qa_frozen_anchor() {
        // n=7, k=2, annulus 1 < r < 1.2 with data 0.1 and 50; level and
        // starting slope frozen from a 40-digit solve
        let (p_a, p_b) = boundary_peaks(7, 1.0, 1.2, 0.1, 50.0);
        assert!((p_a - 0.92103403719761827361).abs() < 1e-14);
        assert!((p_b + 1.7471307589652130497).abs() < 1e-13);
        let t = 0.5 * 1.2f64.ln();
        let sol = solve_qa(7, 2, p_a, p_b, t, 1e-11).unwrap();
        let s_frozen = 277182.81991536866551;
        let q_frozen = -45.792584535573497859;
        assert!(
            ((sol.s - s_frozen) / s_frozen).abs() < 1e-8,
            "s = {}",
            sol.s
        );
        assert!(
            ((sol.q_a - q_frozen) / q_frozen).abs() < 1e-8,
            "q_a = {}",
            sol.q_a
        );
    }

    #[test]
    fn solve_qa_resubstitutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..15 {
            let n = rng.random_range(3..=8);
            let k = rng.random_range(2..=n);
            let p_a = rng.random_range(-1.5..1.5);
            let p_b = p_a + rng.random_range(0.2..2.0) * if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 };
            let tbc = t_bc_from_peaks(n, k, p_a, p_b, 1e-12).unwrap().value;
            let t = 0.8 * tbc;
            let sol = solve_qa(n, k, p_a, p_b, t, 1e-11).unwrap();
            let back = level_traverse_time(p_a.min(p_b), p_a.max(p_b), sol.s, n, k, 1e-12)
                .unwrap()
                .value;
            assert!(
                (back - 2.0 * t).abs() < 1e-9,
                "n={n} k={k}: traverse {back} vs 2T = {}",
                2.0 * t
            );
            assert!(sol.q_a.abs() > 1.0);
            assert_eq!(sol.q_a > 0.0, p_b > p_a, "slope sign follows the data order");
        }
    }

    #[test]
    fn solve_qa_rejects_supercritical_length() {
        let (p_a, p_b) = (0.5, -0.5);
        let tbc = t_bc_from_peaks(7, 2, p_a, p_b, 1e-12).unwrap().value;
        let err = solve_qa(7, 2, p_a, p_b, 1.1 * tbc, 1e-10);
        assert!(matches!(err, Err(RootError::Regime(_))), "{err:?}");
    }

    #[test]
    fn case4_frozen_anchors() {
        // annulus 1 < r < 10, both data equal to 1, n = 7, k = 2; all five
        // quantities frozen from a 40-digit solve
        let (p_a, p_b) = boundary_peaks(7, 1.0, 10.0, 1.0, 1.0);
        assert_eq!(p_a, 0.0);
        assert!((p_b + 10f64.ln()).abs() < 1e-15);
        let t = 0.5 * 10f64.ln();
        let p = solve_p_case4(7, 2, p_a, p_b, t, 1e-12).unwrap();
        assert!((p - 0.90266827759968126563).abs() < 1e-9, "p = {p}");
        let t_plus = 0.5 * partial_descent_time(p_b - p, p, 7, 2, 1e-13).unwrap().value;
        let t_minus = 0.5 * partial_descent_time(p_a - p, p, 7, 2, 1e-13).unwrap().value;
        assert!((t_plus - 0.7710370880742014814).abs() < 1e-9);
        assert!((t_minus - 0.38025545842282136061).abs() < 1e-9);
        assert!((t_plus + t_minus - t).abs() < 1e-10);
        let t_m = case4_jump_time(7, 2, p_a, p_b, p, 1e-12).unwrap();
        assert!((t_m + 0.39078162965138012079).abs() < 1e-9, "t_m = {t_m}");
        let m = matching_radius(7, 2, p_a, p_b, p, 1.0, 10.0, 1e-12).unwrap();
        assert!((m - 2.1393689809696037555).abs() < 1e-9, "m = {m}");
    }

    #[test]
    fn case4_resubstitutes_and_mirrors() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let n = rng.random_range(3..=8);
            let k = rng.random_range(2..=n);
            let p_a = rng.random_range(-1.0..1.0);
            let p_b = p_a - rng.random_range(0.0..2.0);
            let tbc = t_bc_from_peaks(n, k, p_a, p_b, 1e-12).unwrap().value;
            let t = 1.5 * tbc + 0.2;
            let p = solve_p_case4(n, k, p_a, p_b, t, 1e-12).unwrap();
            let t_plus = 0.5
                * partial_descent_time(p_a.min(p_b) - p, p, n, k, 1e-13)
                    .unwrap()
                    .value;
            let t_minus = 0.5
                * partial_descent_time(p_a.max(p_b) - p, p, n, k, 1e-13)
                    .unwrap()
                    .value;
            assert!(
                (t_plus + t_minus - t).abs() < 1e-10,
                "n={n} k={k}: halves sum to {} vs {t}",
                t_plus + t_minus
            );
            let t_m = case4_jump_time(n, k, p_a, p_b, p, 1e-12).unwrap();
            assert!(t_m <= 1e-12, "jump time {t_m} should be nonpositive");
            // mirrored data flips the jump to the other side of the center
            let t_m_mirror = case4_jump_time(n, k, p_b, p_a, p, 1e-12).unwrap();
            assert!((t_m + t_m_mirror).abs() < 1e-13);
            // matching radius sits inside the annulus, at or left of center
            let a = 0.5;
            let b = a * (2.0 * t).exp();
            let m = matching_radius(n, k, p_a, p_b, p, a, b, 1e-12).unwrap();
            assert!(m <= (a * b).sqrt() * 1.0000001 && m > a);
        }
    }

    #[test]
    fn case4_rejects_subcritical_length() {
        let (p_a, p_b) = (0.4, -0.6);
        let tbc = t_bc_from_peaks(5, 3, p_a, p_b, 1e-12).unwrap().value;
        let err = solve_p_case4(5, 3, p_a, p_b, 0.5 * tbc, 1e-10);
        assert!(matches!(err, Err(RootError::Regime(_))), "{err:?}");
    }
}
