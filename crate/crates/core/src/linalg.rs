//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub(crate) const POWER_TOL: f64 = 1e-14;
pub(crate) const POWER_MAX_ITER: usize = 1_000_000;
pub(crate) const DEFLATED_TOL: f64 = 1e-8;
pub(crate) const EXACT_SPECTRUM_MAX: usize = 64;

/// Max row sum of absolute values.
pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn normalize_max(v: &mut [f64]) -> f64 {
    let m = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if m > 0.0 {
        for x in v.iter_mut() {
            *x /= m;
        }
    }
    m
}

/// Power iteration `v <- M v`, normalized in sup norm, until the sup change
/// drops below `tol`.
fn power_iterate(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = m.nrows();
    let mut v = vec![1.0; n];
    let mut change = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = vec![0.0; n];
        for i in 0..n {
            next[i] = (0..n).map(|j| m[(i, j)] * v[j]).sum();
        }
        normalize_max(&mut next);
        change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if change <= tol {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        change,
    })
}

/// Leading eigenvalue with positive left and right eigenvectors of a
/// primitive nonnegative matrix.
pub(crate) struct Perron {
    pub lambda: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

pub(crate) fn perron(b: &DMatrix<f64>) -> Result<Perron> {
    let right = power_iterate(b, POWER_TOL, POWER_MAX_ITER)?;
    let left = power_iterate(&b.transpose(), POWER_TOL, POWER_MAX_ITER)?;
    if right.iter().chain(&left).any(|&x| x <= 0.0) {
        return Err(Error::Precondition("Perron vector is not strictly positive".into()));
    }
    // Rayleigh quotient u^T B v / u^T v
    let n = b.nrows();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in 0..n {
            num += left[i] * b[(i, j)] * right[j];
        }
        den += left[i] * right[i];
    }
    Ok(Perron {
        lambda: num / den,
        left,
        right,
    })
}

/// How the second eigenvalue modulus was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMethod {
    /// Full dense eigendecomposition.
    Exact,
    /// Power iteration on the deflated operator, tolerance 1e-8.
    Deflated,
}

/// Moduli of all eigenvalues, sorted decreasing.
pub(crate) fn eigenvalue_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    let mut mods: Vec<f64> = m
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .collect();
    mods.sort_by(|a, b| b.partial_cmp(a).unwrap());
    mods
}

/// Spectral radius of `e` (a deflated operator) by power iteration, measuring
/// growth over two steps so that sign flips and rotations average out.
pub(crate) fn deflated_radius(e: &DMatrix<f64>) -> f64 {
    let n = e.nrows();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.618).sin()).collect();
    normalize_max(&mut v);
    let mut estimate = 0.0;
    for _ in 0..20_000 {
        let mut w = v.clone();
        let mut growth = 1.0;
        for _ in 0..2 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                next[i] = (0..n).map(|j| e[(i, j)] * w[j]).sum();
            }
            growth *= normalize_max(&mut next);
            w = next;
        }
        let new_estimate = growth.sqrt();
        if growth == 0.0 {
            return 0.0;
        }
        let done = (new_estimate - estimate).abs() <= DEFLATED_TOL * new_estimate.max(1e-300);
        estimate = new_estimate;
        v = w;
        if done {
            break;
        }
    }
    estimate
}

/// Stationary vector of the stochastic matrix `p` restricted to the closed
/// class `class`, by solving `pi (P - I) = 0, sum pi = 1`.
pub(crate) fn stationary_on_class(p: &DMatrix<f64>, class: &[usize]) -> Result<Vec<f64>> {
    let k = class.len();
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (r, &j) in class.iter().enumerate() {
        for (c, &i) in class.iter().enumerate() {
            // row r of (P - I)^T
            a[(r, c)] = p[(i, j)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for c in 0..k {
        a[(k - 1, c)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(k);
    rhs[k - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Precondition("singular stationary system".into()))?;
    Ok(sol.iter().copied().collect())
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perron_of_golden_mean() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        let p = perron(&b).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.lambda - phi).abs() < 1e-14);
        assert!((p.right[0] / p.right[1] - phi).abs() < 1e-13);
        let mods = eigenvalue_moduli(&b);
        assert!((mods[1] - 1.0 / phi).abs() < 1e-13);
    }

    #[test]
    fn deflated_radius_matches_exact() {
        // stochastic matrix with eigenvalues 1, 0.5, -0.3 (diagonal similarity)
        let p = DMatrix::from_row_slice(3, 3, &[0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.1, 0.2, 0.7]);
        let mods = eigenvalue_moduli(&p);
        let pi = stationary_on_class(&p, &[0, 1, 2]).unwrap();
        let e = DMatrix::from_fn(3, 3, |i, j| p[(i, j)] - pi[j]);
        let r = deflated_radius(&e);
        assert!((r - mods[1]).abs() < 1e-6, "{r} vs {}", mods[1]);
    }

    #[test]
    fn stationary_solves() {
        let p = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.3, 0.7]);
        let pi = stationary_on_class(&p, &[0, 1]).unwrap();
        assert!((pi[0] - 0.75).abs() < 1e-15);
        assert!((pi[1] - 0.25).abs() < 1e-15);
    }
}
