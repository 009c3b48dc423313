//! Adimensional eigenvalues of the harmonic-oscillator interval problems
//! through the confluent hypergeometric solutions.
//!
//! On each inter-node segment of the state-`n` drift, the reduced problem is
//!
//! ```text
//! y''(x) - (x^2/4 - (2n+1)/2 - mu) y = 0,    y = 0 at the segment ends,
//! ```
//!
//! in units of `sigma0` for `x` and of `omega` for the eigenvalue `mu`.
//! Two independent solutions are
//!
//! ```text
//! y1 = exp(-x^2/4) M(-(mu+n)/2,   1/2; x^2/2)        (even)
//! y2 = x exp(-x^2/4) M(-(mu+n-1)/2, 3/2; x^2/2)      (odd)
//! ```
//!
//! The boundary condition kind depends on the segment: a symmetric finite
//! segment `[-c, c]` uses the printed odd-branch condition
//! `M(-(mu+n-1)/2, 3/2; c^2/2) = 0` on top of `mu_0 = 0`; segments reaching
//! infinity impose decay at the truncation radius; asymmetric segments use
//! the two-point determinant. The even-branch eigenvalues of symmetric
//! segments are reachable through the full finite-difference solver.

use super::kummer::confluent_m;
use super::TRUNCATION_RADIUS;
use crate::error::{Error, Result};
use crate::ho::hermite_zeros;
use crate::params::PhysicalParams;

/// Ends of an inter-node segment in adimensional units (`None` = infinite).
#[derive(Debug, Clone, Copy)]
struct AdimSegment {
    left: Option<f64>,
    right: Option<f64>,
}

/// Even solution of the reduced equation, evaluated at adimensional `x >= 0`.
fn y_even(n: u32, mu: f64, x: f64) -> Result<f64> {
    let z = 0.5 * x * x;
    Ok((-0.25 * x * x).exp() * confluent_m(-(mu + n as f64) / 2.0, 0.5, z)?)
}

/// Odd solution of the reduced equation.
fn y_odd(n: u32, mu: f64, x: f64) -> Result<f64> {
    let z = 0.5 * x * x;
    Ok(x * (-0.25 * x * x).exp() * confluent_m(-(mu + n as f64 - 1.0) / 2.0, 1.5, z)?)
}

/// The n-th drift's inter-node segment `k` (0-based, `k = 0..=n`) in
/// adimensional units.
fn adim_segment(n: u32, k: usize) -> Result<AdimSegment> {
    if k > n as usize {
        return Err(Error::domain(
            "segment_index",
            format!("state n={n} has {} segments, got index {k}", n + 1),
        ));
    }
    let nodes: Vec<f64> =
        hermite_zeros(n).into_iter().map(|u| u * std::f64::consts::SQRT_2).collect();
    let left = if k == 0 { None } else { Some(nodes[k - 1]) };
    let right = if k == n as usize { None } else { Some(nodes[k]) };
    Ok(AdimSegment { left, right })
}

/// First `count` positive eigenvalues `mu_1 <= ... <= mu_count` of segment
/// `k` of the state-`n` drift, preceded by `mu_0 = 0`: `count + 1` values in
/// total, in units of `omega`.
pub fn ho_interval_eigenvalues(
    n: u32,
    segment_index: usize,
    count: usize,
    _params: &PhysicalParams,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::domain("count", "need at least one eigenvalue"));
    }
    let seg = adim_segment(n, segment_index)?;
    let r = TRUNCATION_RADIUS;

    // Boundary condition as a function of mu; sign changes locate eigenvalues.
    let condition: Box<dyn Fn(f64) -> Result<f64>> = match (seg.left, seg.right) {
        (None, None) => {
            // full line: even and odd decay conditions merged by product
            Box::new(move |mu| Ok(y_even(n, mu, r)? * y_odd(n, mu, r)?))
        }
        (Some(c), None) | (None, Some(c)) if c.abs() <= 1e-12 => {
            // half line with the node at the origin: odd branch only
            Box::new(move |mu| y_odd(n, mu, r))
        }
        (Some(c), None) | (None, Some(c)) => {
            // half line with an off-origin node: zero at |c| and decay at r
            let c = c.abs();
            Box::new(move |mu| {
                let det = y_even(n, mu, c)? * y_odd(n, mu, r)? - y_even(n, mu, r)? * y_odd(n, mu, c)?;
                Ok(det)
            })
        }
        (Some(a), Some(b)) if (a + b).abs() <= 1e-9 => {
            // symmetric finite segment: the printed odd-branch condition
            let c = b;
            Box::new(move |mu| y_odd(n, mu, c))
        }
        (Some(a), Some(b)) => Box::new(move |mu| {
            let det = y_even(n, mu, a)? * y_odd(n, mu, b)? - y_even(n, mu, b)? * y_odd(n, mu, a)?;
            Ok(det)
        }),
    };

    // mu_0 = 0 is analytic for the symmetric finite segment (even branch);
    // everywhere else the scan finds it as a root within roundoff of zero.
    let symmetric_finite =
        matches!((seg.left, seg.right), (Some(a), Some(b)) if (a + b).abs() <= 1e-9);
    let wanted = if symmetric_finite { count } else { count + 1 };

    let mut roots = scan_roots(&condition, wanted)?;
    if symmetric_finite {
        roots.insert(0, 0.0);
    } else if !roots.is_empty() {
        // the lowest root is the invariant mode; pin it
        if roots[0].abs() > 1e-6 {
            return Err(Error::numerical(
                "ho_interval_eigenvalues",
                format!("lowest root {} is not the invariant mu_0 = 0", roots[0]),
            ));
        }
        roots[0] = 0.0;
    }
    roots.truncate(count + 1);
    Ok(roots)
}

/// Scan `mu` upward from just below zero, bisecting every sign change of the
/// condition until `wanted` roots are found.
fn scan_roots(condition: &dyn Fn(f64) -> Result<f64>, wanted: usize) -> Result<Vec<f64>> {
    const STEP: f64 = 0.25;
    const MU_MAX: f64 = 2000.0;
    let mut roots = Vec::with_capacity(wanted);
    let mut mu = -0.5;
    let mut prev = condition(mu)?;
    let mut trace: Vec<(f64, f64)> = vec![(mu, prev)];
    while roots.len() < wanted && mu < MU_MAX {
        let next_mu = mu + STEP;
        let next = condition(next_mu)?;
        if prev == 0.0 {
            roots.push(mu);
        } else if prev * next < 0.0 {
            roots.push(bisect(condition, mu, next_mu, prev)?);
        }
        mu = next_mu;
        prev = next;
        if trace.len() < 8 {
            trace.push((mu, prev));
        }
    }
    if roots.len() < wanted {
        return Err(Error::numerical(
            "ho_interval_eigenvalues",
            format!(
                "found {} of {wanted} roots scanning mu up to {MU_MAX}; bracket trace: {trace:?}",
                roots.len()
            ),
        ));
    }
    Ok(roots)
}

fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, mut flo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-13 * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysicalParams {
        PhysicalParams::quantum(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn n2_middle_segment_reproduces_printed_values() {
        let mus = ho_interval_eigenvalues(2, 1, 3, &params()).unwrap();
        assert_eq!(mus.len(), 4);
        assert_eq!(mus[0], 0.0);
        assert!((mus[1] - 7.44).abs() < 0.01, "mu1 = {}", mus[1]);
        assert!((mus[2] - 37.06).abs() < 0.01, "mu2 = {}", mus[2]);
        assert!((mus[3] - 86.41).abs() < 0.01, "mu3 = {}", mus[3]);
    }

    #[test]
    fn ou_full_line_spectrum_is_integers() {
        let mus = ho_interval_eigenvalues(0, 0, 5, &params()).unwrap();
        for (m, &mu) in mus.iter().enumerate() {
            assert!((mu - m as f64).abs() < 1e-8, "m={m}: {mu}");
        }
    }

    #[test]
    fn n1_half_line_spectrum_is_even_integers() {
        let mus = ho_interval_eigenvalues(1, 1, 4, &params()).unwrap();
        for (m, &mu) in mus.iter().enumerate() {
            assert!((mu - 2.0 * m as f64).abs() < 1e-8, "m={m}: {mu}");
        }
    }

    #[test]
    fn segment_index_out_of_range_is_rejected() {
        assert!(ho_interval_eigenvalues(1, 3, 2, &params()).is_err());
    }
}
