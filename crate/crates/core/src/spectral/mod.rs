//! Self-adjoint reduction of the Fokker-Planck operator and its
//! Sturm-Liouville spectral solution on a single inter-node segment.
//!
//! With the substitution `f = sqrt(h) g` the FP operator becomes the
//! symmetric operator `L g = (D g')' - q g`,
//! `q = (D' - v)^2/4D - (D' - v)'/2`, which for constant diffusion reduces to
//! `q = v^2/4D + v'/2`. Separation of variables leads to `L G + lambda G = 0`
//! with flux boundary conditions `[2D G' - v G] = 0`; at wave-function nodes
//! the condition degenerates to `G = 0`.
//!
//! Discretization: symmetric second-order differences on a cell-centered
//! grid. Boundary conditions enter through ghost-point elimination, which
//! only modifies the diagonal, so the discrete operator stays exactly
//! symmetric and its eigenvalues real, simple and ascending. Unbounded
//! segments are truncated at [`TRUNCATION_RADIUS`] ground-state widths with a
//! Dirichlet cutoff.

pub mod ho_eigs;
pub mod kummer;
mod tridiag;

pub use ho_eigs::ho_interval_eigenvalues;
pub use kummer::confluent_m;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Partition, SegmentGrid};
use crate::velocity::VelocityField;
use serde::Serialize;

/// Truncation radius for unbounded segments, in units of `sigma0`.
/// Gaussian decay of `sqrt(h)` makes the induced error far below roundoff.
pub const TRUNCATION_RADIUS: f64 = 12.0;

/// How a segment endpoint is treated in the discrete operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    /// Endpoint is a node of the drift: `G = 0` there.
    Node,
    /// Truncated infinite end: Dirichlet cutoff on `G`.
    TruncatedInfinity,
    /// Regular endpoint with finite drift: flux form `2D G' - v G = 0`.
    Flux { v_end: f64 },
}

impl BoundaryKind {
    /// Ghost-point reflection ratio `G_ghost / G_edge`.
    fn reflection(&self, d: f64, h: f64, left: bool) -> f64 {
        match *self {
            BoundaryKind::Node | BoundaryKind::TruncatedInfinity => -1.0,
            BoundaryKind::Flux { v_end } => {
                let s = if left { 1.0 } else { -1.0 };
                (4.0 * d - s * v_end * h) / (4.0 * d + s * v_end * h)
            }
        }
    }
}

/// `L g = (D g')' - q g` on one segment, with its boundary conditions.
pub struct SelfAdjointOperator {
    segment: SegmentGrid,
    diffusion: f64,
    q: Vec<f64>,
    left: BoundaryKind,
    right: BoundaryKind,
}

impl SelfAdjointOperator {
    pub fn new(
        segment: SegmentGrid,
        diffusion: f64,
        q: Vec<f64>,
        left: BoundaryKind,
        right: BoundaryKind,
    ) -> Result<Self> {
        if q.len() != segment.len() {
            return Err(Error::GridMismatch("q samples do not match segment grid".into()));
        }
        if !(diffusion > 0.0) {
            return Err(Error::domain("diffusion", format!("must be positive, got {diffusion}")));
        }
        Ok(SelfAdjointOperator { segment, diffusion, q, left, right })
    }

    pub fn segment(&self) -> &SegmentGrid {
        &self.segment
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }
}

/// Build the self-adjoint coefficients of a stationary field on a segment.
///
/// `q` is taken from the field's exact closure when available, otherwise
/// `v^2/4D + v'/2` with the derivative by central differences. Endpoints
/// coinciding with a node of `v` get the degenerate `G = 0` condition;
/// everything else gets the flux form.
pub fn self_adjoint_coeffs(
    v: &VelocityField,
    diffusion: f64,
    segment: SegmentGrid,
) -> Result<SelfAdjointOperator> {
    if !v.is_stationary() {
        return Err(Error::domain("v", "self-adjoint reduction needs a stationary field"));
    }
    let h = segment.step();
    let q: Vec<f64> = match v.sl_q() {
        Some(qf) => segment.points().iter().map(|&x| qf(x)).collect(),
        None => segment
            .points()
            .iter()
            .map(|&x| {
                let vx = v.v(x, 0.0);
                vx * vx / (4.0 * diffusion) + 0.5 * v.dv_dx(x, 0.25 * h)
            })
            .collect(),
    };
    let is_node = |x: f64| v.nodes().iter().any(|&nd| (x - nd).abs() <= 1e-9 * (1.0 + nd.abs()));
    let left = if is_node(segment.a()) {
        BoundaryKind::Node
    } else {
        BoundaryKind::Flux { v_end: v.v(segment.a(), 0.0) }
    };
    let right = if is_node(segment.b()) {
        BoundaryKind::Node
    } else {
        BoundaryKind::Flux { v_end: v.v(segment.b(), 0.0) }
    };
    SelfAdjointOperator::new(segment, diffusion, q, left, right)
}

/// Same as [`self_adjoint_coeffs`] but with explicit endpoint kinds, for
/// truncated unbounded segments.
pub fn self_adjoint_coeffs_with_boundaries(
    v: &VelocityField,
    diffusion: f64,
    segment: SegmentGrid,
    left: BoundaryKind,
    right: BoundaryKind,
) -> Result<SelfAdjointOperator> {
    let op = self_adjoint_coeffs(v, diffusion, segment)?;
    SelfAdjointOperator::new(op.segment, op.diffusion, op.q, left, right)
}

/// Eigenvalues, orthonormal eigenfunctions and invariant density of one
/// segment. `lambda_0` is pinned to exactly zero after validation, so
/// spectral evolution conserves mass identically.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    segment: SegmentGrid,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    invariant: Vec<f64>,
    mass: f64,
}

/// Result of a spectral time evolution, with diagnostics the caller may
/// surface as warnings.
#[derive(Debug, Clone)]
pub struct SpectralEvolution {
    pub density: GridFunction,
    /// Most negative sample (0 when none are negative).
    pub max_negative: f64,
    /// Magnitude of the last retained mode at this time.
    pub tail_estimate: f64,
}

impl SpectralDecomposition {
    pub fn segment(&self) -> &SegmentGrid {
        &self.segment
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunction(&self, n: usize) -> &[f64] {
        &self.eigenfunctions[n]
    }

    pub fn n_eigs(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Invariant density `h = G_0^2`, unit mass on the segment.
    pub fn invariant(&self) -> &[f64] {
        &self.invariant
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn invariant_grid_function(&self) -> GridFunction {
        let part = Partition::new(vec![self.segment.clone()]).expect("single segment");
        GridFunction::from_values(part, vec![self.invariant.clone()]).expect("layout")
    }

    /// Expansion coefficients `c_n = integral of f0 G_n / sqrt(h)`.
    /// `c_0` equals the segment mass of `f0` exactly.
    pub fn expand_initial(&self, f0: &GridFunction) -> Result<Vec<f64>> {
        if f0.partition().n_segments() != 1 || !f0.partition().segments()[0].approx_eq(&self.segment) {
            return Err(Error::GridMismatch("f0 not on the decomposition segment".into()));
        }
        let vals = &f0.values()[0];
        if vals.iter().any(|&f| f < -1e-12) {
            return Err(Error::domain("f0", "initial density has negative samples"));
        }
        let h = self.segment.step();
        let sqrt_inv = &self.eigenfunctions[0];
        Ok(self
            .eigenfunctions
            .iter()
            .map(|g| h * vals.iter().zip(g).zip(sqrt_inv).map(|((&f, &gj), &sj)| f * gj / sj).sum::<f64>())
            .collect())
    }

    /// Coefficients of a delta at `x0`, represented as a one-cell hat:
    /// `c_n = G_n(x0) / sqrt(h(x0))`.
    pub fn expand_delta(&self, x0: f64) -> Result<Vec<f64>> {
        let pts = self.segment.points();
        if x0 < self.segment.a() || x0 > self.segment.b() {
            return Err(Error::domain("x0", format!("{x0} outside segment")));
        }
        let j = pts
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x0).abs().partial_cmp(&(b.1 - x0).abs()).unwrap())
            .map(|(j, _)| j)
            .unwrap();
        let s0 = self.eigenfunctions[0][j];
        Ok(self.eigenfunctions.iter().map(|g| g[j] / s0).collect())
    }

    /// `f(x, t) = sum_n c_n e^(-lambda_n t) sqrt(h) G_n`.
    pub fn evolve(&self, c: &[f64], t: f64) -> Result<SpectralEvolution> {
        if c.len() > self.eigenvalues.len() {
            return Err(Error::domain("c", "more coefficients than eigenpairs"));
        }
        if !(t >= 0.0) {
            return Err(Error::domain("t", format!("need t >= 0, got {t}")));
        }
        let sqrt_h = &self.eigenfunctions[0];
        let mut vals = vec![0.0f64; self.segment.len()];
        let mut tail = 0.0;
        for (n, &cn) in c.iter().enumerate() {
            let w = cn * (-self.eigenvalues[n] * t).exp();
            tail = w.abs();
            for (j, out) in vals.iter_mut().enumerate() {
                *out += w * sqrt_h[j] * self.eigenfunctions[n][j];
            }
        }
        let max_negative = vals.iter().copied().fold(0.0_f64, f64::min);
        let part = Partition::new(vec![self.segment.clone()])?;
        Ok(SpectralEvolution {
            density: GridFunction::from_values(part, vec![vals])?,
            max_negative,
            tail_estimate: tail,
        })
    }

    pub fn export(&self) -> DecompositionExport {
        DecompositionExport {
            interval: [self.segment.a(), self.segment.b()],
            eigenvalues: self.eigenvalues.clone(),
            mass: self.mass,
            grid: self.segment.points().to_vec(),
            eigenfunctions: self.eigenfunctions.clone(),
        }
    }
}

/// JSON export layout: deterministic for a fixed configuration.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionExport {
    pub interval: [f64; 2],
    pub eigenvalues: Vec<f64>,
    pub mass: f64,
    pub grid: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
}

/// Solve the Sturm-Liouville problem for the `n_eigs` lowest eigenpairs.
pub fn solve_sturm_liouville(op: &SelfAdjointOperator, n_eigs: usize) -> Result<SpectralDecomposition> {
    if n_eigs == 0 {
        return Err(Error::domain("n_eigs", "need at least one eigenvalue"));
    }
    let n = op.segment.len();
    let h = op.segment.step();
    let d_h2 = op.diffusion / (h * h);

    let mut diag: Vec<f64> = op.q.iter().map(|&qj| 2.0 * d_h2 + qj).collect();
    let off = vec![-d_h2; n - 1];
    diag[0] -= d_h2 * op.left.reflection(op.diffusion, h, true);
    diag[n - 1] -= d_h2 * op.right.reflection(op.diffusion, h, false);

    let (mut values, vectors) = tridiag::lowest_eigenpairs(&diag, &off, n_eigs)?;

    // G_n = w_n / sqrt(h): quadrature-orthonormal on the segment
    let scale = 1.0 / h.sqrt();
    let mut funcs: Vec<Vec<f64>> = vectors
        .into_iter()
        .map(|w| w.into_iter().map(|x| x * scale).collect())
        .collect();

    // deterministic signs: positive mean for G_0, positive first significant
    // component for the rest
    if funcs[0].iter().sum::<f64>() < 0.0 {
        for x in &mut funcs[0] {
            *x = -*x;
        }
    }
    for g in funcs.iter_mut().skip(1) {
        let lead = g.iter().find(|x| x.abs() > 1e-8 * scale).copied().unwrap_or(1.0);
        if lead < 0.0 {
            for x in g.iter_mut() {
                *x = -*x;
            }
        }
    }

    // lambda_0 is exactly zero in the continuum; validate and pin it
    let gap = if values.len() > 1 { values[1] - values[0] } else { values[0].abs().max(1.0) };
    if values[0].abs() > 1e-3 * gap.abs().max(1e-300) {
        return Err(Error::numerical(
            "solve_sturm_liouville",
            format!(
                "lowest eigenvalue {} is not numerically zero (gap {}); operator or boundary conditions are inconsistent",
                values[0], gap
            ),
        ));
    }
    values[0] = 0.0;

    let invariant: Vec<f64> = funcs[0].iter().map(|&g| g * g).collect();
    Ok(SpectralDecomposition {
        segment: op.segment.clone(),
        eigenvalues: values,
        eigenfunctions: funcs,
        invariant,
        mass: 1.0,
    })
}

/// Operator for inter-node segment `k` of the state-`n` drift, with
/// unbounded ends truncated at `x_max_sigma` ground-state widths and the
/// right boundary kinds attached.
pub fn ho_segment_operator(
    n: u32,
    segment_index: usize,
    x_max_sigma: f64,
    n_cells: usize,
    params: &crate::params::PhysicalParams,
) -> Result<SelfAdjointOperator> {
    if segment_index > n as usize {
        return Err(Error::domain(
            "segment",
            format!("state n={n} has {} segments, got index {segment_index}", n + 1),
        ));
    }
    let v = VelocityField::ho_state(n, params);
    let nodes = v.nodes().to_vec();
    let cut = x_max_sigma * params.sigma0();
    let (a, left) = if segment_index == 0 {
        (-cut, BoundaryKind::TruncatedInfinity)
    } else {
        (nodes[segment_index - 1], BoundaryKind::Node)
    };
    let (b, right) = if segment_index == n as usize {
        (cut, BoundaryKind::TruncatedInfinity)
    } else {
        (nodes[segment_index], BoundaryKind::Node)
    };
    if a >= b {
        return Err(Error::domain("x_max", format!("truncation {cut} inside segment [{a}, {b}]")));
    }
    let segment = SegmentGrid::cell_centered(a, b, n_cells)?;
    self_adjoint_coeffs_with_boundaries(&v, params.diffusion(), segment, left, right)
}

/// Invariant zero-flux density `h ~ exp(integral of v/D)` on a segment,
/// normalized to unit segment mass.
///
/// Uses the field's exact log-invariant when attached, otherwise Simpson
/// quadrature of `v/D` between grid points. A non-integrable endpoint
/// singularity (attracting node with exponent <= -1) is reported as an error.
pub fn invariant_density(
    v: &VelocityField,
    diffusion: f64,
    segment: &SegmentGrid,
) -> Result<GridFunction> {
    if !v.is_stationary() {
        return Err(Error::domain("v", "invariant density needs a stationary field"));
    }
    let pts = segment.points();
    let log_h: Vec<f64> = match v.log_invariant() {
        Some(phi) => pts.iter().map(|&x| phi(x)).collect(),
        None => {
            let mut acc = vec![0.0f64; pts.len()];
            for j in 1..pts.len() {
                let (x0, x1) = (pts[j - 1], pts[j]);
                let xm = 0.5 * (x0 + x1);
                let simpson = (x1 - x0) / 6.0 * (v.v(x0, 0.0) + 4.0 * v.v(xm, 0.0) + v.v(x1, 0.0));
                acc[j] = acc[j - 1] + simpson / diffusion;
            }
            acc
        }
    };

    // integrability probe at endpoints that are nodes of v
    for (endpoint, x_near) in [(segment.a(), pts[0]), (segment.b(), pts[pts.len() - 1])] {
        if v.nodes().iter().any(|&nd| (nd - endpoint).abs() <= 1e-9 * (1.0 + nd.abs())) {
            let exponent = v.v(x_near, 0.0) * (x_near - endpoint) / diffusion;
            if exponent <= -1.0 + 1e-9 {
                return Err(Error::numerical(
                    "invariant_density",
                    format!(
                        "non-integrable singularity at endpoint {endpoint}: local exponent {exponent}"
                    ),
                ));
            }
        }
    }

    let max = log_h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let vals: Vec<f64> = log_h.iter().map(|&l| (l - max).exp()).collect();
    let part = Partition::new(vec![segment.clone()])?;
    let mut h = GridFunction::from_values(part, vec![vals])?;
    h.normalize()?;
    Ok(h)
}
