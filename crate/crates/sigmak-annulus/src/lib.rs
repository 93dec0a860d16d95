//! Construction, classification and verification of radially symmetric
//! Lipschitz viscosity solutions of the sigma_k curvature equation on
//! annuli `{a < |x| < b}` in dimension `n >= 3`, for `2 <= k <= n`, with
//! prescribed or infinite boundary data.
//!
//! The equation asks for `u > 0` with
//!
//! ```text
//! sigma_k(lambda(-A^u)) = 2^{-k} C(n,k),   lambda(-A^u) in Gamma_k,
//! ```
//!
//! where `A^u` is the conformal Hessian of the metric `u^{4/(n-2)} |dx|^2`
//! and `Gamma_k` is the Garding cone. For radial `u` the substitution
//! `t = ln r - (ln a + ln b)/2`, `xi = -(2/(n-2)) ln u - ln r` collapses the
//! PDE to a second-order ODE for `xi(t)` with the first integral
//!
//! ```text
//! H = e^{(2k-n) xi} (1 - xi'^2)^k - (-1)^k e^{-n xi},
//! ```
//!
//! so every radial solution is assembled from level sets of `H` by
//! quadrature. Boundary data splits into four regimes: a smooth monotone
//! profile, two borderline profiles that are `C^{1,1/k}` (and no better) at
//! one boundary sphere, and a Lipschitz profile with an interior gradient
//! jump. The same jump appears at `|x| = sqrt(ab)` for infinite boundary
//! data.
//!
//! The crate builds the profiles, reconstructs `u(r)`, and audits each
//! artifact with checks that are independent of the construction: a
//! finite-difference oracle for the full conformal Hessian, conservation of
//! `H` along the profile, cone membership, one-sided derivative
//! extrapolation at the jump, and Holder-exponent fits.
//!
//! ```
//! use sigmak_annulus::solver::{classify, build_profile, reconstruct_u,
//!                              BoundaryCondition, GridControl, ProblemSpec};
//!
//! let spec = ProblemSpec::new(7, 2, 1.0, 10.0, BoundaryCondition::Infinite).unwrap();
//! let regime = classify(&spec, 1e-10).unwrap();
//! let profile = build_profile(&spec, &regime, &GridControl::default()).unwrap();
//! let radial = reconstruct_u(&profile);
//! assert!((radial.m.unwrap() - 10f64.sqrt()).abs() < 1e-12);
//! ```

pub mod cli;
pub mod cylinder;
pub mod quadrature;
pub mod rootfind;
pub mod solver;
pub mod symfuncs;
pub mod verification;
