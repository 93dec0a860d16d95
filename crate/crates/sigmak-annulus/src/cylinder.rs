//! Cylinder change of variables and the pointwise sigma_k machinery.
//!
//! A radial candidate `u(r)` on the annulus `{a < |x| < b}` is rewritten in
//! the variables
//!
//! ```text
//! t  = ln r - (ln a + ln b)/2,        t in (-T, T),  T = ln(b/a)/2,
//! xi = -(2/(n-2)) ln u - ln r,
//! ```
//!
//! under which the conformal Hessian becomes diagonal with a radial and an
//! (n-1)-fold tangential eigenvalue, and
//!
//! ```text
//! sigma_k(lambda(-A^u)) =
//!   (-1)^k 2^{1-k} binom(n-1, k-1) e^{2k xi} (1 - xi'^2)^{k-1}
//!   * [ xi'' + (n-2k)/(2k) (1 - xi'^2) ].
//! ```
//!
//! Setting this equal to `2^{-k} binom(n,k)` yields an autonomous ODE with
//! the conserved quantity
//!
//! ```text
//! H(xi, xi') = e^{(2k-n) xi} (1 - xi'^2)^k - (-1)^k e^{-n xi},
//! ```
//!
//! whose level sets carry all admissible trajectories: on a level with
//! `(-1)^k H < 0` the slope satisfies `xi'^2 = 1 + W(xi)` with
//! `W >= 0` vanishing exactly at the fold value `xi = -(1/n) ln |H|`.
//!
//! The module also hosts the ambient oracle: an independent check that
//! evaluates `u` on a one-dimensional stencil, assembles the full n-by-n
//! matrix `-A^u` at a point of the x1-axis by second-order central
//! differences (tangential second derivatives of a radial function reduce
//! to `u_r / r` there), and feeds its eigenvalues to the elementary
//! symmetric polynomial. No cylinder algebra enters that path.

use crate::symfuncs::{self, binom, SymmetricMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CylinderError {
    #[error("radius {r} outside [{a}, {b}]")]
    RadiusOutside { r: f64, a: f64, b: f64 },
    #[error("need 0 < a < b and u > 0, got a = {a}, b = {b}, u = {u}")]
    BadDomain { a: f64, b: f64, u: f64 },
    #[error("xi = {xi} lies above the fold value {peak} of this level")]
    AboveFold { xi: f64, peak: f64 },
    #[error("level has (-1)^k H = {signed} >= 0 and therefore no fold")]
    NoFold { signed: f64 },
    #[error("stencil step {h} too large for radius {r}")]
    StencilTooWide { h: f64, r: f64 },
    #[error("dimension parameters invalid: n = {n}, k = {k}")]
    BadDims { n: u32, k: u32 },
    #[error(transparent)]
    Sym(#[from] symfuncs::SymError),
}

fn check_dims(n: u32, k: u32) -> Result<(), CylinderError> {
    if n < 3 || k < 2 || k > n || n as usize > symfuncs::MAX_DIM {
        return Err(CylinderError::BadDims { n, k });
    }
    Ok(())
}

/// One point of a cylinder trajectory. `xi_pp` is optional because the
/// profile stores only first-order data; curvature is recovered from the
/// level set when needed.
#[derive(Debug, Clone, Copy)]
pub struct CylinderState {
    pub t: f64,
    pub xi: f64,
    pub xi_p: f64,
    pub xi_pp: Option<f64>,
}

/// `(r, u) -> (t, xi)` for dimension `n`.
pub fn to_cylinder(r: f64, u: f64, a: f64, b: f64, n: u32) -> Result<(f64, f64), CylinderError> {
    if !(a > 0.0 && b > a && u > 0.0 && u.is_finite()) {
        return Err(CylinderError::BadDomain { a, b, u });
    }
    if !(r >= a && r <= b) {
        return Err(CylinderError::RadiusOutside { r, a, b });
    }
    let t = r.ln() - 0.5 * (a.ln() + b.ln());
    let xi = -2.0 / (n as f64 - 2.0) * u.ln() - r.ln();
    Ok((t, xi))
}

/// `(t, xi) -> (r, u)` for dimension `n`.
pub fn from_cylinder(t: f64, xi: f64, a: f64, b: f64, n: u32) -> (f64, f64) {
    let r = (t + 0.5 * (a.ln() + b.ln())).exp();
    let u = (-(n as f64 - 2.0) / 2.0 * (xi + r.ln())).exp();
    (r, u)
}

/// Radial logarithmic derivative of `u` from the cylinder slope:
/// `d(ln u)/dr = -(n-2)(xi' + 1) / (2r)`.
///
/// This is an affine bijection of slopes; `xi' = -1` maps to a critical
/// point of `u` and `xi' = +1` to `d(ln u)/dr = -(n-2)/r`.
pub fn dlnu_dr_from_slope(xi_p: f64, r: f64, n: u32) -> f64 {
    -(n as f64 - 2.0) * (xi_p + 1.0) / (2.0 * r)
}

/// Target constant `2^{-k} binom(n, k)` of the curvature equation.
pub fn sigma_k_target(n: u32, k: u32) -> f64 {
    0.5f64.powi(k as i32) * binom(n as usize, k as usize)
}

/// Closed-form `sigma_k(lambda(-A^u))` at a cylinder 2-jet.
pub fn sigma_k_radial(xi: f64, xi_p: f64, xi_pp: f64, n: u32, k: u32) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let one_minus_q2 = 1.0 - xi_p * xi_p;
    sign * 0.5f64.powi(k as i32 - 1)
        * binom(n as usize - 1, k as usize - 1)
        * (2.0 * kf * xi).exp()
        * one_minus_q2.powi(k as i32 - 1)
        * (xi_pp + (nf - 2.0 * kf) / (2.0 * kf) * one_minus_q2)
}

/// Conserved quantity `H(xi, xi')` of the cylinder ODE.
pub fn first_integral(xi: f64, xi_p: f64, n: u32, k: u32) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    ((2.0 * kf - nf) * xi).exp() * (1.0 - xi_p * xi_p).powi(k as i32) - sign * (-nf * xi).exp()
}

/// One level set of the first integral.
///
/// The sign-adjusted value `s = (-1)^k H` controls the geometry: for
/// `s < 0` the branch folds at `peak_xi = -(1/n) ln(-s)` where the slope
/// passes through -1 with infinite curvature; for `s >= 0` the slope is
/// bounded away from -1 and the branch sweeps all of `xi` monotonically.
#[derive(Debug, Clone, Copy)]
pub struct LevelSet {
    pub n: u32,
    pub k: u32,
    pub h: f64,
}

impl LevelSet {
    pub fn new(n: u32, k: u32, h: f64) -> Result<Self, CylinderError> {
        check_dims(n, k)?;
        Ok(Self { n, k, h })
    }

    /// Level through the phase point `(xi, xi_p)`.
    pub fn from_state(n: u32, k: u32, xi: f64, xi_p: f64) -> Result<Self, CylinderError> {
        Self::new(n, k, first_integral(xi, xi_p, n, k))
    }

    /// `s = (-1)^k H`.
    pub fn signed(&self) -> f64 {
        if self.k % 2 == 0 {
            self.h
        } else {
            -self.h
        }
    }

    /// Fold value of xi, present only when `s < 0`.
    pub fn peak_xi(&self) -> Option<f64> {
        let s = self.signed();
        (s < 0.0).then(|| -(-s).ln() / self.n as f64)
    }

    /// `W(xi) = e^{-2 xi} (1 + s e^{n xi})^{1/k} = xi'^2 - 1` on the level.
    ///
    /// For folded levels the bracket is evaluated as `-expm1(n (xi - peak))`
    /// so no precision is lost approaching the fold.
    pub fn w(&self, xi: f64) -> Result<f64, CylinderError> {
        let (nf, kf) = (self.n as f64, self.k as f64);
        let s = self.signed();
        if s < 0.0 {
            let peak = -(-s).ln() / nf;
            let eta = xi - peak;
            if eta > 0.0 {
                return Err(CylinderError::AboveFold { xi, peak });
            }
            let bracket = -f64::exp_m1(nf * eta);
            Ok((-2.0 * eta - 2.0 * peak).exp() * bracket.powf(1.0 / kf))
        } else {
            let bracket = 1.0 + s * (nf * xi).exp();
            Ok((-2.0 * xi).exp() * bracket.powf(1.0 / kf))
        }
    }

    /// Slope magnitude `|xi'| = sqrt(1 + W) >= 1` on the level.
    pub fn speed(&self, xi: f64) -> Result<f64, CylinderError> {
        Ok((1.0 + self.w(xi)?).sqrt())
    }

    /// Curvature `xi''` forced by the level: differentiating
    /// `xi'^2 = 1 + W` gives `xi'' = W'(xi)/2` on either slope sign.
    /// Tends to minus infinity at the fold for k >= 2.
    pub fn xi_pp(&self, xi: f64) -> Result<f64, CylinderError> {
        let (nf, kf) = (self.n as f64, self.k as f64);
        let s = self.signed();
        let w = self.w(xi)?;
        let (bracket, s_exp_nxi, exp_m2xi) = if s < 0.0 {
            let peak = -(-s).ln() / nf;
            let eta = xi - peak;
            (
                -f64::exp_m1(nf * eta),
                -(nf * eta).exp(),
                (-2.0 * eta - 2.0 * peak).exp(),
            )
        } else {
            (
                1.0 + s * (nf * xi).exp(),
                s * (nf * xi).exp(),
                (-2.0 * xi).exp(),
            )
        };
        Ok(-w + nf / (2.0 * kf) * s_exp_nxi * exp_m2xi * bracket.powf(1.0 / kf - 1.0))
    }
}

/// Five samples of a radial profile around `r`: at `r - h`, `r - h/2`, `r`,
/// `r + h/2`, `r + h`. Enough for two second-order stencils and one
/// Richardson combination.
#[derive(Debug, Clone, Copy)]
pub struct AmbientSample {
    pub r: f64,
    pub h: f64,
    pub u: [f64; 5],
}

impl AmbientSample {
    pub fn from_radial<F: Fn(f64) -> f64>(
        profile: F,
        r: f64,
        h: f64,
    ) -> Result<Self, CylinderError> {
        if !(h > 0.0 && h < r / 2.0) {
            return Err(CylinderError::StencilTooWide { h, r });
        }
        Ok(Self {
            r,
            h,
            u: [
                profile(r - h),
                profile(r - h / 2.0),
                profile(r),
                profile(r + h / 2.0),
                profile(r + h),
            ],
        })
    }
}

/// Output of the finite-difference oracle.
#[derive(Debug, Clone)]
pub struct OracleSigma {
    /// Richardson-extrapolated `sigma_k` over steps h and h/2.
    pub sigma_k: f64,
    /// Eigenvalues of `-A^u` (radial first, then the tangential value
    /// n-1 times), from the finer stencil.
    pub eigenvalues: Vec<f64>,
    /// Set when the stencil is too coarse relative to r for the quadratic
    /// error model to be trustworthy.
    pub precision_warning: bool,
}

/// `sigma_k` of `-A^u` at `|x| = r` by finite differences on the ambient
/// matrix, Richardson-extrapolated over `{h, h/2}`.
pub fn ambient_oracle_sigma_k(
    sample: &AmbientSample,
    n: u32,
    k: u32,
) -> Result<OracleSigma, CylinderError> {
    check_dims(n, k)?;
    let coarse = minus_a_eigenvalues(sample.u[0], sample.u[2], sample.u[4], sample.r, sample.h, n)?;
    let fine = minus_a_eigenvalues(
        sample.u[1],
        sample.u[2],
        sample.u[3],
        sample.r,
        sample.h / 2.0,
        n,
    )?;
    let sigma_coarse = symfuncs::sigma(&coarse, k as usize)?;
    let sigma_fine = symfuncs::sigma(&fine, k as usize)?;
    Ok(OracleSigma {
        sigma_k: (4.0 * sigma_fine - sigma_coarse) / 3.0,
        eigenvalues: fine,
        precision_warning: sample.h > sample.r / 100.0,
    })
}

/// Eigenvalues of `-A^u` from a single 3-point stencil. The matrix is
/// assembled from the conformal Hessian
///
/// ```text
/// A^u = -2/(n-2) u^{-(n+2)/(n-2)} Hess u
///       + 2n/(n-2)^2 u^{-2n/(n-2)} grad u (x) grad u
///       - 1/(n-2)^2 u^{-2n/(n-2)} |grad u|^2 I * 2
/// ```
///
/// at a point of the x1-axis, where for radial u the Hessian is
/// `diag(u_rr, u_r/r, ..., u_r/r)` and the gradient is `(u_r, 0, ..., 0)`.
fn minus_a_eigenvalues(
    u_lo: f64,
    u_mid: f64,
    u_hi: f64,
    r: f64,
    h: f64,
    n: u32,
) -> Result<Vec<f64>, CylinderError> {
    let u_r = (u_hi - u_lo) / (2.0 * h);
    let u_rr = (u_hi - 2.0 * u_mid + u_lo) / (h * h);
    minus_a_from_derivatives(u_mid, u_r, u_rr, r, n)
}

fn minus_a_from_derivatives(
    u: f64,
    u_r: f64,
    u_rr: f64,
    r: f64,
    n: u32,
) -> Result<Vec<f64>, CylinderError> {
    let nf = n as f64;
    let c_hess = -2.0 / (nf - 2.0) * u.powf(-(nf + 2.0) / (nf - 2.0));
    let c_grad = 2.0 * nf / ((nf - 2.0) * (nf - 2.0)) * u.powf(-2.0 * nf / (nf - 2.0));
    let c_norm = -2.0 / ((nf - 2.0) * (nf - 2.0)) * u.powf(-2.0 * nf / (nf - 2.0));
    let a_radial = c_hess * u_rr + (c_grad + c_norm) * u_r * u_r;
    let a_tangential = c_hess * u_r / r + c_norm * u_r * u_r;
    let mut diag = vec![-a_tangential; n as usize];
    diag[0] = -a_radial;
    // the tensor is diagonal, so the entries are the eigenvalues; the
    // constructor only runs to validate finiteness, keeping radial first
    SymmetricMatrix::from_diagonal(&diag)?;
    Ok(diag)
}

/// Exact ambient eigenvalues of the conformal curvature tensor at a
/// cylinder 2-jet: the radial derivatives of `u` are evaluated in closed
/// form, so no finite-difference cancellation enters. Large slopes make
/// the symmetric functions of these eigenvalues cancel heavily, which is
/// tolerable here but fatal for differenced input.
pub fn eigenvalues_from_jet(
    t: f64,
    xi: f64,
    xi_p: f64,
    xi_pp: f64,
    a: f64,
    b: f64,
    n: u32,
) -> Result<Vec<f64>, CylinderError> {
    let (r, u) = from_cylinder(t, xi, a, b, n);
    let nf = n as f64;
    let dln = dlnu_dr_from_slope(xi_p, r, n);
    let d2ln = -(nf - 2.0) / (2.0 * r * r) * (xi_pp - xi_p - 1.0);
    let u_r = u * dln;
    let u_rr = u * (dln * dln + d2ln);
    minus_a_from_derivatives(u, u_r, u_rr, r, n)
}

/// Radial profile realizing a prescribed cylinder 2-jet at radius `r0`:
/// the quadratic `xi(t)` through `(xi, xi_p, xi_pp)` is mapped back to
/// `u(r)`. Smooth in r, so finite differences of it exercise the full
/// ambient formula.
pub fn radial_from_taylor(
    n: u32,
    a: f64,
    b: f64,
    r0: f64,
    xi: f64,
    xi_p: f64,
    xi_pp: f64,
) -> impl Fn(f64) -> f64 {
    let half_log_ab = 0.5 * (a.ln() + b.ln());
    let t0 = r0.ln() - half_log_ab;
    let nf = n as f64;
    move |r: f64| {
        let dt = (r.ln() - half_log_ab) - t0;
        let xi_t = xi + xi_p * dt + 0.5 * xi_pp * dt * dt;
        (-(nf - 2.0) / 2.0 * (xi_t + r.ln())).exp()
    }
}

/// Raw (non-extrapolated) oracle value at a single step, for convergence
/// order measurements.
pub fn ambient_sigma_single_step<F: Fn(f64) -> f64>(
    profile: F,
    r: f64,
    h: f64,
    n: u32,
    k: u32,
) -> Result<f64, CylinderError> {
    check_dims(n, k)?;
    let ev = minus_a_eigenvalues(profile(r - h), profile(r), profile(r + h), r, h, n)?;
    Ok(symfuncs::sigma(&ev, k as usize)?)
}

/// Finite-difference eigenvalues of the conformal curvature tensor of a
/// radial profile at one radius, for cone-membership checks.
pub fn ambient_eigenvalues<F: Fn(f64) -> f64>(
    profile: F,
    r: f64,
    h: f64,
    n: u32,
) -> Result<Vec<f64>, CylinderError> {
    minus_a_eigenvalues(profile(r - h), profile(r), profile(r + h), r, h, n)
}
