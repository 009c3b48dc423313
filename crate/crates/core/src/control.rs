//! The inverse problem: given a prescribed density/drift evolution `(f, v)`,
//! synthesize the phase `S(x,t)` and the time-dependent controlling
//! potential `V(x,t)` that make it a genuine quantum evolution.
//!
//! With `v = dW/dx` and an adimensional density `f~ = sigma0 f`,
//!
//! ```text
//! S = m W - (action/2) ln f~ - theta(t)
//! V = (action^2/4m) d2x ln f~
//!     + (action/2) (dt ln f~ + v dx ln f~)
//!     - m v^2/2 - m dt W + theta'
//! ```
//!
//! where the gauge `theta(t)` only moves the zero of the energy. Four
//! closed-form controlled evolutions are built in: the relaxing
//! Ornstein-Uhlenbeck kernel, the first-excited kernel on a half-line, the
//! decay mixture from the first excited state to the ground state, and the
//! smoothed transition from an oscillating coherent packet to the ground
//! state. Each carries its closed-form potential, so the numerical synthesis
//! route can be certified against it and through the HJM residual.

use crate::error::{Error, Result};
use crate::grid::{derivative, second_derivative, GridFunction, Partition};
use crate::hjm::{hjm_residual, HjmReport};
use crate::ho;
use crate::oracles;
use crate::params::PhysicalParams;
use crate::velocity::VelocityField;
use std::sync::Arc;

type XtFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type TFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A quantum state presented through its `(f, S, v)` fields at one instant.
/// `f = R^2` and `v = dS/dx / m + (action/2m) d ln f / dx` hold by
/// construction and are testable by finite differences.
pub struct QuantumStateFV {
    pub density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub phase: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub velocity: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

/// Points excluded from a synthesis because the density vanished there:
/// `(segment, index)` pairs.
pub type Excluded = Vec<(usize, usize)>;

/// Phase from density and drift potential at one instant:
/// `S = m W - (action/2) ln(sigma0 f) - theta`.
///
/// Points with `f <= 0` are excluded (phase set to 0 there) and reported.
pub fn synthesize_phase(
    f: &GridFunction,
    w_pot: &GridFunction,
    theta: f64,
    params: &PhysicalParams,
) -> Result<(GridFunction, Excluded)> {
    if !f.partition().approx_eq(w_pot.partition()) {
        return Err(Error::GridMismatch("f and W on different partitions".into()));
    }
    let m = params.mass();
    let half_action = 0.5 * params.action();
    let sigma0 = params.sigma0();
    let mut excluded = Vec::new();
    let mut s = GridFunction::zeros(f.partition());
    for k in 0..f.partition().n_segments() {
        for j in 0..f.values()[k].len() {
            let fj = f.values()[k][j];
            if fj <= 0.0 {
                excluded.push((k, j));
                continue;
            }
            s.values_mut()[k][j] = m * w_pot.values()[k][j] - half_action * (sigma0 * fj).ln() - theta;
        }
    }
    Ok((s, excluded))
}

/// Input frames for the potential synthesis: density and drift potential at
/// `t - dt`, `t`, `t + dt` (central time stencil) plus the drift at `t`.
pub struct PotentialSynthesisInput<'a> {
    pub f: [&'a GridFunction; 3],
    pub v: &'a GridFunction,
    pub w_pot: [&'a GridFunction; 3],
    pub theta_dot: f64,
    pub dt: f64,
    pub params: &'a PhysicalParams,
}

/// Controlling potential from the HJM relation, by finite differences on the
/// stored frames. Points where any density frame vanishes are excluded and
/// reported.
pub fn synthesize_potential(input: &PotentialSynthesisInput<'_>) -> Result<(GridFunction, Excluded)> {
    let [f_prev, f_now, f_next] = input.f;
    for other in [f_prev, f_next, input.v, input.w_pot[0], input.w_pot[1], input.w_pot[2]] {
        if !f_now.partition().approx_eq(other.partition()) {
            return Err(Error::GridMismatch("synthesis frames on different partitions".into()));
        }
    }
    if !(input.dt > 0.0) {
        return Err(Error::domain("dt", format!("need dt > 0, got {}", input.dt)));
    }
    let p = input.params;
    let m = p.mass();
    let quarter = p.action() * p.action() / (4.0 * m);
    let half_action = 0.5 * p.action();

    let mut excluded = Vec::new();
    let mut v_out = GridFunction::zeros(f_now.partition());
    for k in 0..f_now.partition().n_segments() {
        let (seg, fv) = f_now.segment(k);
        let pts = seg.points();
        let n = pts.len();
        let mut ok = vec![true; n];
        for j in 0..n {
            if fv[j] <= 0.0 || f_prev.values()[k][j] <= 0.0 || f_next.values()[k][j] <= 0.0 {
                ok[j] = false;
                excluded.push((k, j));
            }
        }
        let log_f: Vec<f64> = fv.iter().map(|&x| if x > 0.0 { x.ln() } else { 0.0 }).collect();
        let dlog = derivative(pts, &log_f);
        let d2log = second_derivative(pts, &log_f);
        let out = &mut v_out.values_mut()[k];
        for j in 0..n {
            if !ok[j] {
                continue;
            }
            let dt_log = (f_next.values()[k][j].ln() - f_prev.values()[k][j].ln()) / (2.0 * input.dt);
            let dt_w = (input.w_pot[2].values()[k][j] - input.w_pot[0].values()[k][j]) / (2.0 * input.dt);
            let vj = input.v.values()[k][j];
            out[j] = quarter * d2log[j] + half_action * (dt_log + vj * dlog[j])
                - 0.5 * m * vj * vj
                - m * dt_w
                + input.theta_dot;
        }
    }
    Ok((v_out, excluded))
}

// ---------------------------------------------------------------------------
// decay 1 -> 0
// ---------------------------------------------------------------------------

/// Time factors of the decay mixture: `beta^2 = 1 - e^(-2 omega t)`,
/// `gamma = e^(-omega t)`, `b^2 = beta^2/gamma^2 = e^(2 omega t) - 1`.
#[derive(Debug, Clone, Copy)]
pub struct DecayModel {
    omega: f64,
}

impl DecayModel {
    pub fn new(params: &PhysicalParams) -> Self {
        DecayModel { omega: params.omega() }
    }

    pub fn beta_sq(&self, t: f64) -> f64 {
        -(-2.0 * self.omega * t).exp_m1()
    }

    pub fn gamma(&self, t: f64) -> f64 {
        (-self.omega * t).exp()
    }

    pub fn b_sq(&self, t: f64) -> f64 {
        (2.0 * self.omega * t).exp_m1()
    }
}

/// Decay density `f = beta^2 phi_0^2 + gamma^2 phi_1^2`, normalized for all
/// `t >= 0` (a convex combination of pdfs).
pub fn decay_density_at(x: f64, t: f64, params: &PhysicalParams) -> f64 {
    let m = DecayModel::new(params);
    let g = m.gamma(t);
    m.beta_sq(t) * ho::ho_density(0, x, params) + g * g * ho::ho_density(1, x, params)
}

/// [`decay_density_at`] sampled on a partition.
pub fn decay_density(part: &Partition, t: f64, params: &PhysicalParams) -> Result<GridFunction> {
    if !(t >= 0.0) {
        return Err(Error::domain("t", format!("need t >= 0, got {t}")));
    }
    Ok(GridFunction::sample(part, |x| decay_density_at(x, t, params)))
}

/// Shape factor of the decay potential,
/// `U(x; b) = (x^4 + b^2 x^2 - b^2) / (b^2 + x^2)^2` in adimensional `x`.
pub fn decay_shape_u(x: f64, b_sq: f64) -> f64 {
    let x2 = x * x;
    let denom = b_sq + x2;
    (x2 * x2 + b_sq * x2 - b_sq) / (denom * denom)
}

/// Controlling potential of the decay:
/// `V = m omega^2 x^2/2 - 2 action omega U(x/sigma0; beta/gamma)`.
///
/// At `t -> 0+` the potential develops a negative singularity at `x = 0`
/// (the point `(x=0, t=0)` is rejected); as `t -> infinity` it returns to
/// the harmonic potential.
pub fn decay_potential(x: f64, t: f64, params: &PhysicalParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain("t", format!("need t >= 0, got {t}")));
    }
    let b_sq = DecayModel::new(params).b_sq(t);
    if b_sq == 0.0 && x == 0.0 {
        return Err(Error::domain("x", "decay potential is singular at (x=0, t=0)"));
    }
    Ok(ho::ho_potential(x, params)
        - 2.0 * params.energy_scale() * decay_shape_u(x / params.sigma0(), b_sq))
}

// ---------------------------------------------------------------------------
// linear drifts and Gaussian moments
// ---------------------------------------------------------------------------

/// Moments of the Gaussian solutions for a linear drift `v = A(t) + B(t) x`:
/// solves `mu' = B mu + A`, `nu' = 2 B nu + 2D` by RK4 on the given time
/// grid (internally sub-stepped). Returns `(mu, nu)` at each grid time.
pub fn linear_drift_moments(
    a: impl Fn(f64) -> f64,
    b: impl Fn(f64) -> f64,
    mu0: f64,
    nu0: f64,
    diffusion: f64,
    t_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if t_grid.is_empty() {
        return Err(Error::domain("t_grid", "empty time grid"));
    }
    let span = t_grid[t_grid.len() - 1] - t_grid[0];
    let h_target = if span > 0.0 { span / 2000.0 } else { f64::INFINITY };
    let mut out = Vec::with_capacity(t_grid.len());
    let mut t = t_grid[0];
    let mut mu = mu0;
    let mut nu = nu0;
    out.push((mu, nu));
    for &t_next in &t_grid[1..] {
        if !(t_next > t) {
            return Err(Error::domain("t_grid", "times must be strictly increasing"));
        }
        let gap = t_next - t;
        let n_sub = (gap / h_target).ceil().max(1.0) as usize;
        let h = gap / n_sub as f64;
        for _ in 0..n_sub {
            let rhs =
                |t: f64, mu: f64, nu: f64| (b(t) * mu + a(t), 2.0 * b(t) * nu + 2.0 * diffusion);
            let (k1m, k1n) = rhs(t, mu, nu);
            let (k2m, k2n) = rhs(t + 0.5 * h, mu + 0.5 * h * k1m, nu + 0.5 * h * k1n);
            let (k3m, k3n) = rhs(t + 0.5 * h, mu + 0.5 * h * k2m, nu + 0.5 * h * k2n);
            let (k4m, k4n) = rhs(t + h, mu + h * k3m, nu + h * k3n);
            mu += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
            nu += h / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n);
            t += h;
            if !(mu.is_finite() && nu.is_finite()) {
                return Err(Error::numerical(
                    "linear_drift_moments",
                    format!("ODE step failed at t = {t}: mu = {mu}, nu = {nu}, h = {h}"),
                ));
            }
        }
        t = t_next;
        out.push((mu, nu));
    }
    Ok(out)
}

/// Oscillating coherent packet with initial displacement `a`: density
/// `phi_0^2(x - a cos omega t)`, drift `a omega (cos - sin) - omega x`, and
/// the corresponding phase.
pub fn coherent_packet(a: f64, t: f64, params: &PhysicalParams) -> QuantumStateFV {
    let p = *params;
    let w = p.omega();
    let s0sq = p.sigma0_sq();
    let action = p.action();
    let (c, s) = ((w * t).cos(), (w * t).sin());
    let center = a * c;
    let drift_const = a * w * (c - s);
    QuantumStateFV {
        density: Arc::new(move |x| ho::ho_density(0, x - center, &p)),
        phase: Arc::new(move |x| {
            -action * (4.0 * a * x * s - a * a * (2.0 * w * t).sin()) / (8.0 * s0sq)
                - 0.5 * action * w * t
        }),
        velocity: Arc::new(move |x| drift_const - w * x),
    }
}

// ---------------------------------------------------------------------------
// smoothing family
// ---------------------------------------------------------------------------

/// The switching profile `F(t) = 1 - (1 - e^(-Omega t))^N` with
/// `Omega = ln N / tau`: monotone from 1 to 0, flat at `t = 0` (`N >= 2`),
/// flex at `t = tau`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothingFamily {
    tau: f64,
    n: u32,
    omega_big: f64,
}

impl SmoothingFamily {
    pub fn new(tau: f64, n: u32) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::domain("tau", format!("need tau > 0, got {tau}")));
        }
        if n < 2 {
            return Err(Error::domain("N", format!("need N >= 2 (so that F'(0) = 0), got {n}")));
        }
        Ok(SmoothingFamily { tau, n, omega_big: (n as f64).ln() / tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Decay rate of the k-th mode, `omega_k = k ln N / tau`.
    pub fn omega_k(&self, k: u32) -> f64 {
        k as f64 * self.omega_big
    }

    /// Product form `1 - (1 - e^(-Omega t))^N`.
    pub fn value(&self, t: f64) -> f64 {
        1.0 - (-(-self.omega_big * t).exp_m1()).powi(self.n as i32)
    }

    /// Binomial-sum form `sum_k (-1)^(k+1) C(N,k) e^(-omega_k t)`.
    pub fn value_binomial(&self, t: f64) -> f64 {
        self.coefficients().into_iter().map(|(c, rate)| c * (-rate * t).exp()).sum()
    }

    /// Signed expansion coefficients `((-1)^(k+1) C(N,k), omega_k)`.
    pub fn coefficients(&self) -> Vec<(f64, f64)> {
        (1..=self.n)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                (sign * binomial(self.n, k), self.omega_k(k))
            })
            .collect()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let u = (-self.omega_big * t).exp();
        -(self.n as f64) * self.omega_big * u * (1.0 - u).powi(self.n as i32 - 1)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        let u = (-self.omega_big * t).exp();
        let nf = self.n as f64;
        nf * self.omega_big
            * self.omega_big
            * u
            * (1.0 - u).powi(self.n as i32 - 2)
            * ((1.0 - u) - (nf - 1.0) * u)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

// ---------------------------------------------------------------------------
// packet -> ground transition
// ---------------------------------------------------------------------------

/// The smoothed coherent-packet-to-ground-state transition: drift
/// `v = A(t) - omega x` with `A = a omega (cos - sin) F(t)`, its
/// non-dispersive Gaussian solution, and the closed-form controlling
/// potential.
#[derive(Debug, Clone, Copy)]
pub struct PacketControl {
    pub a: f64,
    pub smoothing: SmoothingFamily,
    omega: f64,
}

impl PacketControl {
    pub fn new(a: f64, tau: f64, n: u32, params: &PhysicalParams) -> Result<Self> {
        Ok(PacketControl { a, smoothing: SmoothingFamily::new(tau, n)?, omega: params.omega() })
    }

    /// `A(t) = a omega (cos omega t - sin omega t) F(t)`.
    pub fn drive(&self, t: f64) -> f64 {
        let w = self.omega;
        self.a * w * ((w * t).cos() - (w * t).sin()) * self.smoothing.value(t)
    }

    /// The full drift as a time-dependent field.
    pub fn drift(&self) -> VelocityField {
        let me = *self;
        let w = self.omega;
        VelocityField::linear(move |t| me.drive(t), move |_| -w)
    }

    /// Packet center: closed-form solution of `mu' = -omega mu + A`,
    /// `mu(0) = a`, mode by mode of the binomial expansion.
    pub fn center(&self, t: f64) -> f64 {
        let w = self.omega;
        let (c, s) = ((w * t).cos(), (w * t).sin());
        let e_w = (-w * t).exp();
        let mut mu = 0.0;
        for (coef, wk) in self.smoothing.coefficients() {
            let den = (wk - w) * (wk - w) + w * w;
            let e_k = (-wk * t).exp();
            let mode = self.a * e_w
                + self.a * w * (e_k * ((2.0 * w - wk) * c + wk * s) - (2.0 * w - wk) * e_w) / den;
            mu += coef * mode;
        }
        mu
    }

    /// `U_k(t)` of the potential's mode expansion.
    pub fn u_k(&self, k: u32, t: f64) -> f64 {
        let w = self.omega;
        let wk = self.smoothing.omega_k(k);
        let den = (wk - w) * (wk - w) + w * w;
        (w * t).sin() + (2.0 * w * w * (w * t).sin() - wk * wk * (w * t).cos()) / den
    }

    /// Weight of the homogeneous `e^(-omega t)` part in the k-th mode.
    ///
    /// Equals `sqrt(2) U_k(pi/4 omega) - 2`; with this weight the mode sum
    /// telescopes to zero at `t = 0` (binomial identity
    /// `sum (-1)^(k+1) k C(N,k) = 0` for `N >= 2`), so the potential starts
    /// exactly at the harmonic potential.
    pub fn w_k(&self, k: u32) -> f64 {
        let w = self.omega;
        let wk = self.smoothing.omega_k(k);
        let den = (wk - w) * (wk - w) + w * w;
        -1.0 + (2.0 * w * w - wk * wk) / den
    }

    /// Closed-form controlling potential
    /// `V = m omega^2 x^2/2 - m omega a x sum_k (-1)^(k+1) C(N,k)
    ///      [U_k omega_k e^(-omega_k t) - W_k omega e^(-omega t)]`.
    pub fn potential(&self, x: f64, t: f64, params: &PhysicalParams) -> f64 {
        let w = self.omega;
        let mut sum = 0.0;
        for (k, (coef, wk)) in self.smoothing.coefficients().into_iter().enumerate() {
            let k = (k + 1) as u32;
            sum += coef * (self.u_k(k, t) * wk * (-wk * t).exp() - self.w_k(k) * w * (-w * t).exp());
        }
        ho::ho_potential(x, params) - params.mass() * w * self.a * x * sum
    }

    /// Gauge rate that zeroes the x-independent part of the synthesized
    /// potential: `theta' = action omega/2 - m omega^2 mu^2 + m A^2/2`.
    pub fn theta_dot(&self, t: f64, params: &PhysicalParams) -> f64 {
        let mu = self.center(t);
        let a_t = self.drive(t);
        0.5 * params.action() * self.omega - params.mass() * self.omega * self.omega * mu * mu
            + 0.5 * params.mass() * a_t * a_t
    }
}

/// The transition drift (the spec-level free function).
pub fn transition_drift(a: f64, tau: f64, n: u32, params: &PhysicalParams) -> Result<VelocityField> {
    Ok(PacketControl::new(a, tau, n, params)?.drift())
}

/// Closed-form packet-to-ground controlling potential at `(x, t)`.
pub fn packet_to_ground_potential(
    x: f64,
    t: f64,
    a: f64,
    tau: f64,
    n: u32,
    params: &PhysicalParams,
) -> Result<f64> {
    Ok(PacketControl::new(a, tau, n, params)?.potential(x, t, params))
}

// ---------------------------------------------------------------------------
// closed-form controlled evolutions
// ---------------------------------------------------------------------------

/// Scenario selector for [`ControlledEvolution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlKind {
    /// OU kernel relaxation under the ground-state drift, from `x0`.
    Ou { x0: f64 },
    /// First-excited kernel on the half-line containing `x0`.
    N1 { x0: f64 },
    /// Decay mixture from `phi_1^2` to `phi_0^2` under the ground drift.
    Decay,
    /// Smoothed coherent-packet-to-ground transition.
    Packet { a: f64, tau: f64, n: u32 },
}

/// A prescribed `(f, v)` trajectory with its gauge, closed-form potential
/// and singular points; provides both the closed forms and the numeric
/// synthesis route, plus the HJM certification.
pub struct ControlledEvolution {
    pub params: PhysicalParams,
    pub kind: ControlKind,
    density: XtFn,
    velocity: XtFn,
    w_pot: XtFn,
    theta_dot: TFn,
    potential: XtFn,
    /// x locations excluded from certification (potential singularities).
    singular: Vec<f64>,
}

impl ControlledEvolution {
    pub fn new(kind: ControlKind, params: &PhysicalParams) -> Result<Self> {
        let p = *params;
        let w = p.omega();
        let s0sq = p.sigma0_sq();
        let action = p.action();
        let half_aw = 0.5 * action * w;
        match kind {
            ControlKind::Ou { x0 } => {
                let kp = oracles::OuKernelParams::new(x0, 0.0, &p);
                Ok(ControlledEvolution {
                    params: p,
                    kind,
                    density: Arc::new(move |x, t| oracles::ou_transition(x, t, x0, 0.0, &p).unwrap()),
                    velocity: Arc::new(move |x, _| -w * x),
                    w_pot: Arc::new(move |x, _| -0.5 * w * x * x),
                    theta_dot: Arc::new(move |t| half_aw / (w * t).tanh()),
                    potential: Arc::new(move |x, t| {
                        let (al, s2) = (kp.alpha(t), kp.sigma_sq(t));
                        let d = x - al;
                        half_aw * d * d / s2 * (s0sq / s2) - 0.5 * p.mass() * w * w * x * x
                    }),
                    singular: vec![],
                })
            }
            ControlKind::N1 { x0 } => {
                if x0 == 0.0 {
                    return Err(Error::domain("x0", "n1 control undefined at the node"));
                }
                let kp = oracles::OuKernelParams::new(x0, 0.0, &p);
                let s0 = p.sigma0();
                Ok(ControlledEvolution {
                    params: p,
                    kind,
                    density: Arc::new(move |x, t| oracles::n1_transition(x, t, x0, 0.0, &p).unwrap()),
                    velocity: Arc::new(move |x, _| 2.0 * w * s0sq / x - w * x),
                    // antiderivative anchored at |x| = sigma0; the constant
                    // is pure gauge
                    w_pot: Arc::new(move |x, _| 2.0 * w * s0sq * (x.abs() / s0).ln() - 0.5 * w * x * x),
                    theta_dot: Arc::new(move |t| {
                        let (al, s2) = (kp.alpha(t), kp.sigma_sq(t));
                        half_aw * (4.0 * s0sq / s2 - 2.0 * s0sq * al * al / (s2 * s2) - 1.0)
                    }),
                    potential: Arc::new(move |x, t| {
                        let (al, s2) = (kp.alpha(t), kp.sigma_sq(t));
                        let warg = x * al / s2;
                        // T(w) = w coth w, stable for small arguments
                        let t_factor = if warg.abs() < 1e-6 {
                            1.0 + warg * warg / 3.0
                        } else {
                            warg / warg.tanh()
                        };
                        let r = s0sq / s2;
                        0.5 * p.mass() * w * w * x * x * (2.0 * r * r - 1.0)
                            + action * w * (1.0 - r * t_factor)
                            - action * action / (4.0 * p.mass() * x * x) * (1.0 - t_factor).powi(2)
                    }),
                    singular: vec![0.0],
                })
            }
            ControlKind::Decay => Ok(ControlledEvolution {
                params: p,
                kind,
                density: Arc::new(move |x, t| decay_density_at(x, t, &p)),
                velocity: Arc::new(move |x, _| -w * x),
                w_pot: Arc::new(move |x, _| -0.5 * w * x * x),
                theta_dot: Arc::new(move |_| half_aw),
                potential: Arc::new(move |x, t| decay_potential(x, t, &p).unwrap_or(f64::NEG_INFINITY)),
                singular: vec![0.0],
            }),
            ControlKind::Packet { a, tau, n } => {
                let pc = PacketControl::new(a, tau, n, &p)?;
                Ok(ControlledEvolution {
                    params: p,
                    kind,
                    density: Arc::new(move |x, t| ho::ho_density(0, x - pc.center(t), &p)),
                    velocity: Arc::new(move |x, t| pc.drive(t) - w * x),
                    w_pot: Arc::new(move |x, t| pc.drive(t) * x - 0.5 * w * x * x),
                    theta_dot: Arc::new(move |t| pc.theta_dot(t, &p)),
                    potential: Arc::new(move |x, t| pc.potential(x, t, &p)),
                    singular: vec![],
                })
            }
        }
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        (self.density)(x, t)
    }

    pub fn velocity(&self, x: f64, t: f64) -> f64 {
        (self.velocity)(x, t)
    }

    pub fn drift_potential(&self, x: f64, t: f64) -> f64 {
        (self.w_pot)(x, t)
    }

    pub fn theta_dot(&self, t: f64) -> f64 {
        (self.theta_dot)(t)
    }

    /// Closed-form controlling potential.
    pub fn closed_potential(&self, x: f64, t: f64) -> f64 {
        (self.potential)(x, t)
    }

    /// x locations excluded from certification.
    pub fn singular_points(&self) -> &[f64] {
        &self.singular
    }

    /// Gauge-free phase `m W - (action/2) ln(sigma0 f)`; subtracting
    /// `integral of theta_dot` gives the physical phase.
    pub fn phase_gaugeless(&self, x: f64, t: f64) -> f64 {
        let f = self.density(x, t);
        self.params.mass() * self.drift_potential(x, t)
            - 0.5 * self.params.action() * (self.params.sigma0() * f).ln()
    }

    /// Numeric synthesis of the controlling potential on a grid, via
    /// [`synthesize_potential`] with central time frames `t +- dt`.
    pub fn synthesized_potential(
        &self,
        part: &Partition,
        t: f64,
        dt: f64,
    ) -> Result<(GridFunction, Excluded)> {
        let frame = |s: f64| GridFunction::sample(part, |x| self.density(x, s));
        let w_frame = |s: f64| GridFunction::sample(part, |x| self.drift_potential(x, s));
        let f = [frame(t - dt), frame(t), frame(t + dt)];
        let w = [w_frame(t - dt), w_frame(t), w_frame(t + dt)];
        let v = GridFunction::sample(part, |x| self.velocity(x, t));
        synthesize_potential(&PotentialSynthesisInput {
            f: [&f[0], &f[1], &f[2]],
            v: &v,
            w_pot: [&w[0], &w[1], &w[2]],
            theta_dot: self.theta_dot(t),
            dt,
            params: &self.params,
        })
    }

    /// HJM certification of the closed forms: residual of the sampled
    /// `(f, S, V)` triple at time `t` with stencil `t +- dt`.
    ///
    /// The phase frames are gauge-free; the exact `theta_dot(t)` is folded
    /// into the potential, which removes the gauge's own time-stencil error.
    pub fn certify(&self, part: &Partition, t: f64, dt: f64) -> Result<HjmReport> {
        let f = GridFunction::sample(part, |x| self.density(x, t));
        let s_at = |s: f64| GridFunction::sample(part, |x| self.phase_gaugeless(x, s));
        let v_adj = GridFunction::sample(part, |x| self.closed_potential(x, t) - self.theta_dot(t));
        hjm_residual(&f, &s_at(t - dt), &s_at(t), &s_at(t + dt), &v_adj, &self.params, dt)
    }
}
