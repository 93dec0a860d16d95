//! Elementary symmetric polynomials, Garding cones, and the trace gap
//! estimate used by the viscosity-touching argument.
//!
//! For eigenvalues `lambda = (lambda_1, ..., lambda_n)`,
//! `sigma_k(lambda)` is the sum of all k-fold products and the open cone
//! `Gamma_k` is `{sigma_1 > 0, ..., sigma_k > 0}`. The touching argument
//! needs one linear-algebra fact: if `M` is symmetric with
//! `lambda(M) in closure(Gamma_2)` and `m` is a unit vector, then
//!
//! ```text
//! tr M - m^T M m  >=  lambda_1 + ... + lambda_{n-1}  >=  0
//! ```
//!
//! with eigenvalues sorted increasingly, i.e. dropping any single
//! direction never drives the partial trace negative.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SymError {
    #[error("need 1 <= k <= n <= {MAX_DIM}, got k = {k}, n = {n}")]
    BadOrder { k: usize, n: usize },
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("matrix is not symmetric: |M[{i}][{j}] - M[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error("direction vector has norm {0}, expected 1 within 1e-12")]
    NotUnit(f64),
    #[error("direction length {0} does not match matrix dimension {1}")]
    DimMismatch(usize, usize),
}

/// Largest supported eigenvalue count.
pub const MAX_DIM: usize = 20;

/// Dimensions up to this size use the exact subset expansion; larger ones
/// switch to the Newton-identity recurrence.
const SUBSET_LIMIT: usize = 12;

/// Binomial coefficient as f64, exact for the sizes used here.
pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (n - i) as u128;
        den *= (i + 1) as u128;
    }
    (num / den) as f64
}

fn check_entries(lambda: &[f64]) -> Result<(), SymError> {
    for (i, v) in lambda.iter().enumerate() {
        if !v.is_finite() {
            return Err(SymError::NonFinite(i));
        }
    }
    Ok(())
}

/// `sigma_k(lambda)`, the k-th elementary symmetric polynomial.
///
/// Entries are sorted internally before summation, so the result is exactly
/// invariant under permutations of the input.
pub fn sigma(lambda: &[f64], k: usize) -> Result<f64, SymError> {
    let n = lambda.len();
    if k == 0 || k > n || n > MAX_DIM {
        return Err(SymError::BadOrder { k, n });
    }
    check_entries(lambda)?;
    let mut sorted = lambda.to_vec();
    sorted.sort_by(f64::total_cmp);
    if n <= SUBSET_LIMIT {
        Ok(sigma_subset(&sorted, k))
    } else {
        Ok(sigma_newton(&sorted, k))
    }
}

/// Direct sum over all k-element subsets.
fn sigma_subset(lambda: &[f64], k: usize) -> f64 {
    let n = lambda.len();
    // idx holds the current combination in lexicographic order.
    let mut idx: Vec<usize> = (0..k).collect();
    let mut total = 0.0;
    loop {
        let mut prod = 1.0;
        for &i in &idx {
            prod *= lambda[i];
        }
        total += prod;
        // advance to the next combination
        let mut pos = k;
        loop {
            if pos == 0 {
                return total;
            }
            pos -= 1;
            if idx[pos] != pos + n - k {
                break;
            }
            if pos == 0 {
                return total;
            }
        }
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Newton's identities: j e_j = sum_{i=1..j} (-1)^{i-1} e_{j-i} p_i.
fn sigma_newton(lambda: &[f64], k: usize) -> f64 {
    let mut power_sums = vec![0.0; k + 1];
    for i in 1..=k {
        power_sums[i] = lambda.iter().map(|&x| x.powi(i as i32)).sum();
    }
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for j in 1..=k {
        let mut acc = 0.0;
        let mut sign = 1.0;
        for i in 1..=j {
            acc += sign * e[j - i] * power_sums[i];
            sign = -sign;
        }
        e[j] = acc / j as f64;
    }
    e[k]
}

/// Strict cone membership: `sigma_j(lambda) > 0` for every `j <= k`.
pub fn in_gamma_k(lambda: &[f64], k: usize) -> Result<bool, SymError> {
    for j in 1..=k {
        if sigma(lambda, j)? <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Closure membership with slack: `sigma_j(lambda) >= -tol` for `j <= k`.
pub fn in_gamma_k_closure(lambda: &[f64], k: usize, tol: f64) -> Result<bool, SymError> {
    for j in 1..=k {
        if sigma(lambda, j)? < -tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Dense symmetric matrix with eigenvalue access. Used only by the
/// finite-difference oracle and by randomized cone sampling; the solver
/// itself never forms matrices.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    data: nalgebra::DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Builds from row-major entries, rejecting asymmetry above 1e-12
    /// relative to the largest entry.
    pub fn from_rows(n: usize, entries: &[f64]) -> Result<Self, SymError> {
        assert_eq!(entries.len(), n * n, "need n*n entries");
        check_entries(entries)?;
        let scale = entries.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in i + 1..n {
                let gap = (entries[i * n + j] - entries[j * n + i]).abs();
                if gap > 1e-12 * scale {
                    return Err(SymError::NotSymmetric { i, j, gap });
                }
            }
        }
        let data = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            0.5 * (entries[i * n + j] + entries[j * n + i])
        });
        Ok(Self { data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self, SymError> {
        check_entries(diag)?;
        Ok(Self {
            data: nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(diag)),
        })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_row_slice(v);
        (v.transpose() * &self.data * &v)[(0, 0)]
    }

    /// Eigenvalues sorted increasingly.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .data
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// The quantity `tr M - m^T M m` for a unit direction `m`.
///
/// When `lambda(M)` lies in the closure of `Gamma_2` this is bounded below
/// by the sum of all eigenvalues except the largest, hence is nonnegative.
pub fn gamma2bar_trace_gap(mat: &SymmetricMatrix, direction: &[f64]) -> Result<f64, SymError> {
    let n = mat.dim();
    if direction.len() != n {
        return Err(SymError::DimMismatch(direction.len(), n));
    }
    check_entries(direction)?;
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(SymError::NotUnit(norm));
    }
    Ok(mat.trace() - mat.quadratic_form(direction))
}
