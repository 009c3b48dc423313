//! Hamilton-Jacobi-Madelung residual: the certificate that a `(f, S, V)`
//! triple is a genuine quantum evolution.
//!
//! With `R = sqrt(f)`, the residual of
//!
//! ```text
//! dS/dt + (dS/dx)^2 / 2m + V - (action^2 / 2m) R''/R = 0
//! ```
//!
//! vanishes identically for true solutions; on sampled data it decays at
//! second order in the space and time steps. Points where `f <= 0` cannot be
//! evaluated and are excluded and reported rather than treated as fatal.

use crate::error::{Error, Result};
use crate::grid::{derivative, second_derivative, GridFunction};
use crate::params::PhysicalParams;

#[derive(Debug, Clone)]
pub struct HjmReport {
    /// Pointwise residual (energy units); zero at excluded points.
    pub residual: GridFunction,
    /// `(segment, index)` of points excluded because `f <= 0`.
    pub excluded: Vec<(usize, usize)>,
}

impl HjmReport {
    /// Largest |residual| over points further than `margin` from any of
    /// `singular` (and not excluded).
    pub fn max_away_from(&self, singular: &[f64], margin: f64) -> f64 {
        let mut m = 0.0_f64;
        for (k, (seg, vals)) in self
            .residual
            .partition()
            .segments()
            .iter()
            .zip(self.residual.values())
            .enumerate()
        {
            for (j, (&x, &r)) in seg.points().iter().zip(vals).enumerate() {
                if singular.iter().any(|&s| (x - s).abs() < margin) {
                    continue;
                }
                if self.excluded.contains(&(k, j)) {
                    continue;
                }
                m = m.max(r.abs());
            }
        }
        m
    }

    /// `L^2` norm of the residual (quadrature-weighted).
    pub fn l2(&self) -> f64 {
        self.residual
            .partition()
            .segments()
            .iter()
            .zip(self.residual.values())
            .map(|(s, v)| s.step() * v.iter().map(|r| r * r).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Pointwise HJM residual from `f` and `V` at time `t0` and the phase at
/// `t0 - dt`, `t0`, `t0 + dt` (central time stencil).
pub fn hjm_residual(
    f: &GridFunction,
    s_prev: &GridFunction,
    s_now: &GridFunction,
    s_next: &GridFunction,
    potential: &GridFunction,
    params: &PhysicalParams,
    dt: f64,
) -> Result<HjmReport> {
    for other in [s_prev, s_now, s_next, potential] {
        if !f.partition().approx_eq(other.partition()) {
            return Err(Error::GridMismatch("hjm_residual inputs on different partitions".into()));
        }
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::domain("dt", format!("need dt > 0, got {dt}")));
    }

    let m = params.mass();
    let quantum_coef = params.action() * params.action() / (2.0 * m);
    let mut residual = GridFunction::zeros(f.partition());
    let mut excluded = Vec::new();

    for k in 0..f.partition().n_segments() {
        let (seg, fv) = f.segment(k);
        let pts = seg.points();
        let r_amp: Vec<f64> = fv.iter().map(|&fj| if fj > 0.0 { fj.sqrt() } else { 0.0 }).collect();
        let ds = derivative(pts, &s_now.values()[k]);
        let d2r = second_derivative(pts, &r_amp);
        let out = &mut residual.values_mut()[k];
        for j in 0..pts.len() {
            if fv[j] <= 0.0 {
                excluded.push((k, j));
                continue;
            }
            let dts = (s_next.values()[k][j] - s_prev.values()[k][j]) / (2.0 * dt);
            out[j] = dts + ds[j] * ds[j] / (2.0 * m) + potential.values()[k][j]
                - quantum_coef * d2r[j] / r_amp[j];
        }
    }
    Ok(HjmReport { residual, excluded })
}
