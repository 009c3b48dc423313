//! Forward velocity fields, possibly singular at wave-function nodes.

use crate::error::{Error, Result};
use crate::grid::{derivative, GridFunction};
use crate::ho;
use crate::params::PhysicalParams;
use std::sync::Arc;

type XtFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type XFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Drift `v(x, t)` with an explicit list of singular nodes partitioning the
/// domain into non-communicating segments.
///
/// Stationary fields may carry extra analytic structure used by the solvers:
/// the derivative `v'(x)`, the log of the (unnormalized) invariant density
/// `Phi(x)/D = integral of v/D`, and the exact Sturm-Liouville coefficient
/// `q(x) = v^2/4D + v'/2`. When absent, solvers fall back to finite
/// differences and quadrature.
#[derive(Clone)]
pub struct VelocityField {
    eval: XtFn,
    nodes: Vec<f64>,
    stationary: bool,
    derivative: Option<XFn>,
    log_invariant: Option<XFn>,
    sl_q: Option<XFn>,
}

impl std::fmt::Debug for VelocityField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VelocityField")
            .field("nodes", &self.nodes)
            .field("stationary", &self.stationary)
            .finish()
    }
}

impl VelocityField {
    pub fn stationary(eval: impl Fn(f64) -> f64 + Send + Sync + 'static, nodes: Vec<f64>) -> Self {
        VelocityField {
            eval: Arc::new(move |x, _| eval(x)),
            nodes,
            stationary: true,
            derivative: None,
            log_invariant: None,
            sl_q: None,
        }
    }

    pub fn time_dependent(eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, nodes: Vec<f64>) -> Self {
        VelocityField {
            eval: Arc::new(eval),
            nodes,
            stationary: false,
            derivative: None,
            log_invariant: None,
            sl_q: None,
        }
    }

    pub fn with_derivative(mut self, dv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(dv));
        self
    }

    /// Attach `Phi(x)/D`, an antiderivative of `v/D` (any branch constant).
    pub fn with_log_invariant(mut self, phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.log_invariant = Some(Arc::new(phi));
        self
    }

    pub fn with_sl_q(mut self, q: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.sl_q = Some(Arc::new(q));
        self
    }

    /// The singular drift of the n-th stationary HO state,
    /// `v_n = 2 D phi_n'/phi_n`, with its n nodes and exact analytic extras.
    pub fn ho_state(n: u32, params: &PhysicalParams) -> Self {
        let p = *params;
        let nodes = ho::ho_nodes(n, params);
        let two_d = 2.0 * params.diffusion();
        let omega = params.omega();
        let s0sq = params.sigma0_sq();
        let eval = move |x: f64| two_d * ho::ho_log_derivative(n, x, &p);
        // q_n = v_n^2/4D + v_n'/2 collapses to the oscillator form
        // omega * (x^2/(4 sigma0^2) - (2n+1)/2); the node singularities cancel.
        let q = move |x: f64| omega * (x * x / (4.0 * s0sq) - (2.0 * n as f64 + 1.0) / 2.0);
        let log_h = move |x: f64| {
            let phi = ho::ho_eigenfunction(n, x, &p);
            (phi * phi).ln()
        };
        VelocityField {
            eval: Arc::new(move |x, _| eval(x)),
            nodes,
            stationary: true,
            derivative: None,
            log_invariant: Some(Arc::new(log_h)),
            sl_q: Some(Arc::new(q)),
        }
    }

    /// Linear drift `v(x,t) = A(t) + B(t) x` (no nodes).
    pub fn linear(
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        VelocityField::time_dependent(move |x, t| a(t) + b(t) * x, Vec::new())
    }

    pub fn v(&self, x: f64, t: f64) -> f64 {
        (self.eval)(x, t)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// `v'(x)` for stationary fields: analytic if attached, else central
    /// finite difference with step `h`.
    pub fn dv_dx(&self, x: f64, h: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(x),
            None => (self.v(x + h, 0.0) - self.v(x - h, 0.0)) / (2.0 * h),
        }
    }

    pub fn log_invariant(&self) -> Option<&XFn> {
        self.log_invariant.as_ref()
    }

    pub fn sl_q(&self) -> Option<&XFn> {
        self.sl_q.as_ref()
    }

    /// Distance from `x` to the nearest node (infinite if none).
    pub fn node_distance(&self, x: f64) -> f64 {
        self.nodes.iter().fold(f64::INFINITY, |d, &n| d.min((x - n).abs()))
    }
}

/// Reconstruct the drift from a sampled quantum state: given `R` (with
/// `f = R^2`) and the phase `S` at a fixed time,
///
/// ```text
/// v = dS/dx / m + (action/2m) d ln R^2 / dx .
/// ```
///
/// The returned field interpolates linearly between sample points of each
/// segment; its nodes are the interior partition boundaries (zeros of `R`).
pub fn velocity_from_state(
    r: &GridFunction,
    s: &GridFunction,
    params: &PhysicalParams,
) -> Result<VelocityField> {
    if !r.partition().approx_eq(s.partition()) {
        return Err(Error::GridMismatch("R and S on different partitions".into()));
    }
    let inv_m = 1.0 / params.mass();
    let d_coef = params.diffusion(); // action/2m

    let mut seg_points: Vec<Vec<f64>> = Vec::new();
    let mut seg_v: Vec<Vec<f64>> = Vec::new();
    for (k, (seg, rv)) in r.partition().segments().iter().zip(r.values()).enumerate() {
        for (&x, &rj) in seg.points().iter().zip(rv) {
            if rj < 0.0 {
                return Err(Error::domain("R", format!("negative amplitude {rj} at x = {x}")));
            }
            if rj == 0.0 {
                return Err(Error::domain("R", format!("zero amplitude at interior point x = {x}")));
            }
        }
        let log_f: Vec<f64> = rv.iter().map(|&rj| 2.0 * rj.ln()).collect();
        let dlog = derivative(seg.points(), &log_f);
        let ds = derivative(seg.points(), &s.values()[k]);
        let v: Vec<f64> = dlog
            .iter()
            .zip(&ds)
            .map(|(&dl, &dsj)| inv_m * dsj + d_coef * dl)
            .collect();
        seg_points.push(seg.points().to_vec());
        seg_v.push(v);
    }

    // nodes = interior boundaries between consecutive segments
    let segs = r.partition().segments();
    let nodes: Vec<f64> = segs.windows(2).map(|w| 0.5 * (w[0].b() + w[1].a())).collect();

    let eval = move |x: f64| -> f64 {
        // locate the segment, clamp outside
        let mut best = 0usize;
        for (k, pts) in seg_points.iter().enumerate() {
            if x >= pts[0] {
                best = k;
            }
        }
        let pts = &seg_points[best];
        let vals = &seg_v[best];
        if x <= pts[0] {
            return vals[0];
        }
        if x >= pts[pts.len() - 1] {
            return vals[vals.len() - 1];
        }
        let h = pts[1] - pts[0];
        let j = ((x - pts[0]) / h).floor() as usize;
        let j = j.min(pts.len() - 2);
        let w = (x - pts[j]) / h;
        vals[j] * (1.0 - w) + vals[j + 1] * w
    };

    Ok(VelocityField::stationary(eval, nodes))
}
