//! Harmonic-oscillator closed forms: eigenfunctions, energies, nodes.
//!
//! Eigenfunctions are evaluated through the orthonormal Hermite-function
//! recurrence
//!
//! ```text
//! psi_0(u) = pi^(-1/4) exp(-u^2/2)
//! psi_{n+1}(u) = u sqrt(2/(n+1)) psi_n(u) - sqrt(n/(n+1)) psi_{n-1}(u)
//! ```
//!
//! whose values stay bounded for every `(n, u)`, so there is no overflow to
//! guard against; in the far tail the start value underflows gracefully to 0.
//! The physical eigenfunction is `phi_n(x) = (sigma0 sqrt(2))^(-1/2) psi_n(u)`
//! with `u = x / (sigma0 sqrt(2))`.

use crate::params::PhysicalParams;

/// Orthonormal Hermite function `psi_n(u)` (unit `L^2(du)` norm).
pub fn hermite_function(n: u32, u: f64) -> f64 {
    hermite_pair(n, u).0
}

/// `(psi_n(u), psi_{n-1}(u))`; the second entry is 0 for `n = 0`.
fn hermite_pair(n: u32, u: f64) -> (f64, f64) {
    let mut prev = 0.0_f64;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * u * u).exp();
    for k in 0..n {
        let k = k as f64;
        let next = u * (2.0 / (k + 1.0)).sqrt() * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `phi_n(x)`: n-th normalized eigenfunction of the harmonic oscillator.
pub fn ho_eigenfunction(n: u32, x: f64, params: &PhysicalParams) -> f64 {
    let scale = params.sigma0() * std::f64::consts::SQRT_2;
    hermite_function(n, x / scale) / scale.sqrt()
}

/// `phi_n^2(x)`, the stationary quantum pdf.
pub fn ho_density(n: u32, x: f64, params: &PhysicalParams) -> f64 {
    let phi = ho_eigenfunction(n, x, params);
    phi * phi
}

/// `E_n = action * omega * (n + 1/2)`.
pub fn ho_energy(n: u32, params: &PhysicalParams) -> f64 {
    params.energy_scale() * (n as f64 + 0.5)
}

/// The harmonic potential `m omega^2 x^2 / 2`.
pub fn ho_potential(x: f64, params: &PhysicalParams) -> f64 {
    0.5 * params.mass() * params.omega() * params.omega() * x * x
}

/// Zeros of `phi_n` (the n simple nodes), ascending.
pub fn ho_nodes(n: u32, params: &PhysicalParams) -> Vec<f64> {
    let scale = params.sigma0() * std::f64::consts::SQRT_2;
    hermite_zeros(n).into_iter().map(|u| u * scale).collect()
}

/// `phi_n'(x) / phi_n(x)`; infinite at nodes.
pub fn ho_log_derivative(n: u32, x: f64, params: &PhysicalParams) -> f64 {
    let s0 = params.sigma0();
    let u = x / (s0 * std::f64::consts::SQRT_2);
    let (pn, pm) = hermite_pair(n, u);
    // psi_n'(u) = -u psi_n + sqrt(2n) psi_{n-1}
    -x / (2.0 * s0 * s0) + (n as f64).sqrt() / s0 * pm / pn
}

/// Zeros of the physicists' Hermite polynomial `H_n(u)`.
///
/// Built by interlacing: each zero of `H_k` is bracketed by consecutive zeros
/// of `H_{k-1}` (plus outer brackets beyond the classical turning point), and
/// located by bisection on the sign of `psi_k`.
pub fn hermite_zeros(n: u32) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut zeros = vec![0.0];
    for k in 2..=n {
        let outer = (2.0 * k as f64 + 1.0).sqrt() + 1.0;
        let mut brackets = Vec::with_capacity(k as usize + 1);
        brackets.push(-outer);
        brackets.extend(zeros.iter().copied());
        brackets.push(outer);
        let mut next = Vec::with_capacity(k as usize);
        for w in brackets.windows(2) {
            next.push(bisect_hermite(k, w[0], w[1]));
        }
        zeros = next;
    }
    // enforce exact odd symmetry
    let m = zeros.len();
    for i in 0..m / 2 {
        let s = 0.5 * (zeros[m - 1 - i] - zeros[i]);
        zeros[i] = -s;
        zeros[m - 1 - i] = s;
    }
    if m % 2 == 1 {
        zeros[m / 2] = 0.0;
    }
    zeros
}

fn bisect_hermite(n: u32, mut lo: f64, mut hi: f64) -> f64 {
    let f = |u: f64| hermite_function(n, u);
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-15 * (1.0 + mid.abs()) {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
