//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration for the eigenvectors.
//!
//! Bisection preserves the ordering and simplicity of the spectrum exactly,
//! which is what the self-adjoint discretization is chosen to guarantee.

use crate::error::{Error, Result};

/// Number of eigenvalues of `T` strictly below `x` (Sturm sequence count).
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let mut count = 0usize;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let e2 = off[i - 1] * off[i - 1];
        let denom = if q.abs() < f64::MIN_POSITIVE.sqrt() {
            f64::MIN_POSITIVE.sqrt().copysign(if q == 0.0 { 1.0 } else { q })
        } else {
            q
        };
        q = diag[i] - x - e2 / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th (0-based, ascending) eigenvalue by bisection.
fn eigenvalue_k(diag: &[f64], off: &[f64], k: usize, lo0: f64, hi0: f64) -> f64 {
    let (mut lo, mut hi) = (lo0, hi0);
    let scale = hi0.abs().max(lo0.abs()).max(1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            return mid;
        }
        if count_below(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve `(T - shift I) x = rhs` in place by LU with partial pivoting.
fn shifted_solve(diag: &[f64], off: &[f64], shift: f64, rhs: &mut [f64]) {
    let n = diag.len();
    // band storage: d main, u first upper, w second upper (fill-in from pivoting)
    let mut d: Vec<f64> = diag.iter().map(|&v| v - shift).collect();
    let mut u = off.to_vec();
    let mut w = vec![0.0; n.saturating_sub(2)];
    let mut sub = off.to_vec(); // current subdiagonal entries being eliminated

    for i in 0..n - 1 {
        if sub[i].abs() > d[i].abs() {
            // swap rows i and i+1
            rhs.swap(i, i + 1);
            std::mem::swap(&mut d[i], &mut sub[i]);
            let t = u[i];
            u[i] = d[i + 1];
            d[i + 1] = t;
            if i + 1 < n - 1 {
                let t = if i < w.len() { w[i] } else { 0.0 };
                if i < w.len() {
                    w[i] = u[i + 1];
                }
                u[i + 1] = t;
            }
        }
        let pivot = if d[i] == 0.0 { f64::MIN_POSITIVE.sqrt() } else { d[i] };
        let m = sub[i] / pivot;
        d[i + 1] -= m * u[i];
        if i + 1 < n - 1 && i < w.len() {
            u[i + 1] -= m * w[i];
        }
        rhs[i + 1] -= m * rhs[i];
    }
    // back substitution
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u[i] * rhs[i + 1];
        }
        if i + 2 < n && i < w.len() {
            s -= w[i] * rhs[i + 2];
        }
        let pivot = if d[i] == 0.0 { f64::MIN_POSITIVE.sqrt() } else { d[i] };
        rhs[i] = s / pivot;
    }
}

/// First `n_eigs` eigenpairs, eigenvalues ascending, eigenvectors
/// l2-orthonormal.
pub fn lowest_eigenpairs(
    diag: &[f64],
    off: &[f64],
    n_eigs: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = diag.len();
    if off.len() + 1 != n {
        return Err(Error::numerical("tridiag", "off-diagonal length mismatch"));
    }
    if n_eigs > n {
        return Err(Error::numerical(
            "tridiag",
            format!("requested {n_eigs} eigenvalues from an {n}-point discretization; refine the grid"),
        ));
    }
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::numerical(
            "tridiag",
            format!("cannot bracket spectrum: Gershgorin bounds [{lo}, {hi}]"),
        ));
    }

    let scale = hi.abs().max(lo.abs()).max(1.0);
    let mut values = Vec::with_capacity(n_eigs);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n_eigs);
    for k in 0..n_eigs {
        let lambda = eigenvalue_k(diag, off, k, lo, hi);
        values.push(lambda);

        // inverse iteration from a deterministic seed
        let mut v: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 + 1.0) * 0.7511 + (k as f64) * 0.3917;
                (x.sin() + 0.01).abs() + 1e-3
            })
            .collect();
        normalize(&mut v);
        let shift = lambda + 1e-11 * scale;
        for _ in 0..4 {
            shifted_solve(diag, off, shift, &mut v);
            // re-orthogonalize against close previous eigenvectors
            for (j, prev) in vectors.iter().enumerate() {
                if (values[j] - lambda).abs() < 1e-6 * scale {
                    let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                    for (vi, pi) in v.iter_mut().zip(prev) {
                        *vi -= dot * pi;
                    }
                }
            }
            normalize(&mut v);
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v {
            *x /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_laplacian_eigenvalues() {
        // -u'' on (0,1), Dirichlet, h = 1/(n+1): lambda_k = (2 - 2 cos(k pi h)) / h^2
        let n = 200;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let (vals, vecs) = lowest_eigenpairs(&diag, &off, 5).unwrap();
        for (k, &lam) in vals.iter().enumerate() {
            let exact = (2.0 - 2.0 * ((k as f64 + 1.0) * std::f64::consts::PI * h).cos()) / (h * h);
            assert!((lam - exact).abs() < 1e-8 * exact.abs().max(1.0), "k={k}");
        }
        // orthonormality and residual
        for (k, v) in vecs.iter().enumerate() {
            for (j, u) in vecs.iter().enumerate() {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                let want = if k == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "({k},{j}) dot={dot}");
            }
            let mut res: f64 = 0.0;
            for i in 0..n {
                let mut t = diag[i] * v[i] - vals[k] * v[i];
                if i > 0 {
                    t += off[i - 1] * v[i - 1];
                }
                if i < n - 1 {
                    t += off[i] * v[i + 1];
                }
                res = res.max(t.abs());
            }
            assert!(res < 1e-6 * vals[k].abs().max(1.0), "k={k} residual {res}");
        }
    }

    #[test]
    fn rejects_oversized_request() {
        let err = lowest_eigenpairs(&[1.0, 2.0], &[0.1], 5).unwrap_err();
        assert!(err.to_string().contains("refine"));
    }
}
