//! Unit system of every computation.
//!
//! Quantum mode ties the diffusion coefficient to the Planck constant,
//! `D = hbar/2m`; beam mode replaces `hbar` by the transverse emittance
//! `epsilon` with unit mass, `D = epsilon/2`. In both modes
//! `sigma0^2 = D/omega` is the squared width of the invariant Gaussian and
//! the length scale used to adimensionalize solver internals.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Quantum,
    Beam,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Quantum => write!(f, "quantum"),
            Mode::Beam => write!(f, "beam"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(Mode::Quantum),
            "beam" => Ok(Mode::Beam),
            other => Err(Error::domain("mode", format!("expected quantum|beam, got {other:?}"))),
        }
    }
}

/// Mass, angular frequency and action scale, with the derived diffusion
/// coefficient and ground-state width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    mass: f64,
    omega: f64,
    /// `hbar` in quantum mode, the emittance `epsilon` in beam mode.
    action: f64,
    mode: Mode,
    diffusion: f64,
    sigma0: f64,
}

impl PhysicalParams {
    /// Derive the full parameter set; `action` is `hbar` or `epsilon`
    /// depending on `mode`. Beam mode ignores `mass` (set to 1).
    pub fn derive(mass: f64, omega: f64, action: f64, mode: Mode) -> Result<Self> {
        let mass = match mode {
            Mode::Quantum => mass,
            Mode::Beam => 1.0,
        };
        check_positive("mass", mass)?;
        check_positive("omega", omega)?;
        match mode {
            Mode::Quantum => check_positive("hbar", action)?,
            Mode::Beam => check_positive("emittance", action)?,
        }
        let diffusion = action / (2.0 * mass);
        let sigma0 = (diffusion / omega).sqrt();
        Ok(PhysicalParams { mass, omega, action, mode, diffusion, sigma0 })
    }

    pub fn quantum(mass: f64, omega: f64, hbar: f64) -> Result<Self> {
        Self::derive(mass, omega, hbar, Mode::Quantum)
    }

    pub fn beam(omega: f64, emittance: f64) -> Result<Self> {
        Self::derive(1.0, omega, emittance, Mode::Beam)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// The action scale: `hbar` (quantum) or `epsilon` (beam).
    pub fn action(&self) -> f64 {
        self.action
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Diffusion coefficient `D = action/2m` (length^2/time).
    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    /// Ground-state width `sigma0 = sqrt(D/omega)`.
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// `sigma0^2 = action/(2 m omega)`.
    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0 * self.sigma0
    }

    /// Energy quantum `action * omega`, the natural unit for potentials.
    pub fn energy_scale(&self) -> f64 {
        self.action * self.omega
    }

    // Adimensionalization helpers used at the solver boundary.

    pub fn x_to_adim(&self, x: f64) -> f64 {
        x / self.sigma0
    }

    pub fn x_from_adim(&self, xi: f64) -> f64 {
        xi * self.sigma0
    }

    pub fn t_to_adim(&self, t: f64) -> f64 {
        t * self.omega
    }

    pub fn t_from_adim(&self, tau: f64) -> f64 {
        tau / self.omega
    }

    /// Densities transform with unit mass: `f_adim(xi) = sigma0 * f(sigma0*xi)`.
    pub fn density_to_adim(&self, f: f64) -> f64 {
        f * self.sigma0
    }

    pub fn density_from_adim(&self, f: f64) -> f64 {
        f / self.sigma0
    }

    /// Velocities scale with `sigma0 * omega`.
    pub fn v_to_adim(&self, v: f64) -> f64 {
        v / (self.sigma0 * self.omega)
    }

    pub fn v_from_adim(&self, u: f64) -> f64 {
        u * self.sigma0 * self.omega
    }
}

fn check_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(field, format!("must be strictly positive, got {value}")))
    }
}
