//! Closed-form transition kernels for the harmonic-oscillator drifts: the
//! ground-truth layer the solvers are tested against.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::ho;
use crate::params::PhysicalParams;

/// Mean and variance entering both kernels:
/// `alpha(t) = x0 e^(-omega (t-t0))`,
/// `sigma^2(t) = sigma0^2 (1 - e^(-2 omega (t-t0)))`.
#[derive(Debug, Clone, Copy)]
pub struct OuKernelParams {
    pub x0: f64,
    pub t0: f64,
    omega: f64,
    sigma0_sq: f64,
}

impl OuKernelParams {
    pub fn new(x0: f64, t0: f64, params: &PhysicalParams) -> Self {
        OuKernelParams { x0, t0, omega: params.omega(), sigma0_sq: params.sigma0_sq() }
    }

    pub fn alpha(&self, t: f64) -> f64 {
        self.x0 * (-self.omega * (t - self.t0)).exp()
    }

    pub fn sigma_sq(&self, t: f64) -> f64 {
        self.sigma0_sq * (1.0 - (-2.0 * self.omega * (t - self.t0)).exp())
    }
}

/// Ornstein-Uhlenbeck transition density for the ground-state drift
/// `v_0 = -omega x`: a Gaussian with mean `alpha(t)` and variance
/// `sigma^2(t)`.
pub fn ou_transition(x: f64, t: f64, x0: f64, t0: f64, params: &PhysicalParams) -> Result<f64> {
    if !(t > t0) {
        return Err(Error::domain("t", format!("kernel needs t > t0, got t={t}, t0={t0}")));
    }
    let k = OuKernelParams::new(x0, t0, params);
    let (alpha, s2) = (k.alpha(t), k.sigma_sq(t));
    let d = x - alpha;
    Ok((-d * d / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt())
}

/// Transition density for the first-excited drift `v_1 = 2 omega sigma0^2/x
/// - omega x`, restricted to the half-line containing `x0` and normalized
/// there; identically zero on the other side of the node at the origin.
///
/// Written in the stable product form
/// `2 x^2 / (sigma^3 sqrt(2 pi)) e^(-(x^2+alpha^2)/2 sigma^2) sinhc(x alpha / sigma^2)`,
/// which has no 0/0 at small `alpha`; for large argument the sinh is
/// expanded back into the difference of two shifted Gaussians to avoid
/// overflow near the kernel's birth.
pub fn n1_transition(x: f64, t: f64, x0: f64, t0: f64, params: &PhysicalParams) -> Result<f64> {
    if x0 == 0.0 {
        return Err(Error::domain("x0", "kernel undefined at the node x0 = 0"));
    }
    if !(t > t0) {
        return Err(Error::domain("t", format!("kernel needs t > t0, got t={t}, t0={t0}")));
    }
    if x * x0 <= 0.0 {
        return Ok(0.0); // other half-line (and the node itself)
    }
    let k = OuKernelParams::new(x0, t0, params);
    let (alpha, s2) = (k.alpha(t), k.sigma_sq(t));
    let sigma = s2.sqrt();
    let w = x * alpha / s2;
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let p = if w.abs() > 35.0 {
        // difference form; the second Gaussian is below 1e-30 of the first
        let f = (-(x - alpha) * (x - alpha) / (2.0 * s2)).exp();
        let g = (-(x + alpha) * (x + alpha) / (2.0 * s2)).exp();
        (x / alpha) * (f - g) / (sigma * norm)
    } else {
        let sinhc = if w.abs() < 1e-6 { 1.0 + w * w / 6.0 } else { w.sinh() / w };
        2.0 * x * x / (s2 * sigma * norm) * (-(x * x + alpha * alpha) / (2.0 * s2)).exp() * sinhc
    };
    Ok(p)
}

/// Piecewise weight `Gamma(q; x) = q Theta(x) + (2-q) Theta(-x)` with
/// `Theta(0) = 1/2`, so `Gamma(q; 0) = 1` for every `q`.
pub fn gamma_factor(q: f64, x: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&q) {
        return Err(Error::domain("q", format!("mass share must lie in [0, 2], got {q}")));
    }
    Ok(if x > 0.0 {
        q
    } else if x < 0.0 {
        2.0 - q
    } else {
        1.0
    })
}

/// Asymptotic density of the `v_1` evolution started from `f0`:
/// `Gamma(q; x) phi_1^2(x)` with `q` twice the initial mass on `x > 0`.
pub fn n1_asymptotic(f0: &GridFunction, params: &PhysicalParams) -> Result<GridFunction> {
    let q = 2.0 * f0.integrate_weighted(|x| if x > 0.0 { 1.0 } else { 0.0 });
    let q = q.clamp(0.0, 2.0);
    Ok(f0.map(|x, _| gamma_factor(q, x).expect("q clamped") * ho::ho_density(1, x, params)))
}
