//! Flat key-value configuration: physical parameter files and scenario
//! configurations for the command-line front end.
//!
//! The text form is `key = value` lines with `#` comments. A scenario
//! configuration round-trips losslessly through [`ScenarioConfig::to_text`]
//! and [`ScenarioConfig::from_text`]; unknown keys are rejected by name.

use crate::error::{Error, Result};
use crate::params::{Mode, PhysicalParams};
use serde::Serialize;

/// Parse `key = value` lines; order preserved, duplicates rejected.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1)))?;
        let key = k.trim().to_string();
        if out.iter().any(|(existing, _)| *existing == key) {
            return Err(Error::Config(format!("duplicate key {key:?}")));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn get<'a>(kv: &'a [(String, String)], key: &str) -> Option<&'a str> {
    kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn parse_f64(kv: &[(String, String)], key: &str) -> Result<Option<f64>> {
    get(kv, key)
        .map(|v| v.parse::<f64>().map_err(|e| Error::Config(format!("key {key:?}: {e}"))))
        .transpose()
}

fn parse_list(kv: &[(String, String)], key: &str) -> Result<Option<Vec<f64>>> {
    get(kv, key)
        .map(|v| {
            v.split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("key {key:?}: {e}"))))
                .collect()
        })
        .transpose()
}

/// Physical parameters from their flat key-value file
/// (`m`, `omega`, `hbar` or `emittance`, `mode`).
pub fn params_from_text(text: &str) -> Result<PhysicalParams> {
    let kv = parse_kv(text)?;
    params_from_kv(&kv, true)
}

fn params_from_kv(kv: &[(String, String)], strict: bool) -> Result<PhysicalParams> {
    if strict {
        for (k, _) in kv {
            if !matches!(k.as_str(), "m" | "omega" | "hbar" | "emittance" | "mode") {
                return Err(Error::Config(format!("unknown key {k:?} in parameter file")));
            }
        }
    }
    let mode: Mode = match get(kv, "mode") {
        Some(s) => s.parse()?,
        None => Mode::Quantum,
    };
    let m = parse_f64(kv, "m")?.unwrap_or(1.0);
    let omega = parse_f64(kv, "omega")?.unwrap_or(1.0);
    let action = match mode {
        Mode::Quantum => {
            if get(kv, "emittance").is_some() {
                return Err(Error::Config("key \"emittance\" requires mode = beam".into()));
            }
            parse_f64(kv, "hbar")?.unwrap_or(1.0)
        }
        Mode::Beam => {
            if get(kv, "hbar").is_some() {
                return Err(Error::Config("key \"hbar\" requires mode = quantum".into()));
            }
            parse_f64(kv, "emittance")?
                .ok_or_else(|| Error::Config("beam mode needs key \"emittance\"".into()))?
        }
    };
    PhysicalParams::derive(m, omega, action, mode)
}

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Spectrum,
    Evolve,
    Kernel,
    Control,
    Simulate,
    Compare,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ScenarioKind::Spectrum => "spectrum",
            ScenarioKind::Evolve => "evolve",
            ScenarioKind::Kernel => "kernel",
            ScenarioKind::Control => "control",
            ScenarioKind::Simulate => "simulate",
            ScenarioKind::Compare => "compare",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "spectrum" => ScenarioKind::Spectrum,
            "evolve" => ScenarioKind::Evolve,
            "kernel" => ScenarioKind::Kernel,
            "control" => ScenarioKind::Control,
            "simulate" => ScenarioKind::Simulate,
            "compare" => ScenarioKind::Compare,
            other => {
                return Err(Error::Config(format!(
                    "key \"kind\": expected spectrum|evolve|kernel|control|simulate|compare, got {other:?}"
                )))
            }
        })
    }
}

/// Control scenario selector (mirrors `control::ControlKind` at the config
/// level).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlScenario {
    Ou,
    N1,
    Decay,
    Packet,
}

impl std::fmt::Display for ControlScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ControlScenario::Ou => "ou",
            ControlScenario::N1 => "n1",
            ControlScenario::Decay => "decay",
            ControlScenario::Packet => "packet",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for ControlScenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ou" => ControlScenario::Ou,
            "n1" => ControlScenario::N1,
            "decay" => ControlScenario::Decay,
            "packet" => ControlScenario::Packet,
            other => {
                return Err(Error::Config(format!(
                    "key \"scenario\": expected ou|n1|decay|packet, got {other:?}"
                )))
            }
        })
    }
}

/// Full run configuration. Every field has a default; the text form lists
/// all of them, so a round trip is lossless.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub params: PhysicalParams,
    /// Quantum state index for drifts and spectra.
    pub n: u32,
    /// Inter-node segment index (spectrum command).
    pub segment: usize,
    pub n_eigs: usize,
    /// Kernel/evolution source point.
    pub x0: f64,
    /// Domain truncation in units of `sigma0`.
    pub x_max: f64,
    /// Grid cells per segment.
    pub grid_points: usize,
    /// Macro time step, in units of `1/omega`.
    pub dt: f64,
    /// Output times in units of `1/omega`.
    pub output_times: Vec<f64>,
    pub seed: u64,
    pub n_particles: usize,
    pub scenario: ControlScenario,
    /// Packet displacement in units of `sigma0`.
    pub a: f64,
    /// Packet switching time in units of `1/omega`.
    pub tau: f64,
    /// Packet smoothing order.
    pub big_n: u32,
    pub engine_a: String,
    pub engine_b: String,
    pub tolerance: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kind: ScenarioKind::Spectrum,
            params: PhysicalParams::quantum(1.0, 1.0, 1.0).expect("default params"),
            n: 0,
            segment: 0,
            n_eigs: 4,
            x0: 1.0,
            x_max: 12.0,
            grid_points: 2000,
            dt: 5e-3,
            output_times: vec![0.1, 0.5, 1.0, 5.0],
            seed: 1,
            n_particles: 100_000,
            scenario: ControlScenario::Ou,
            a: 1.0,
            tau: 1.0,
            big_n: 4,
            engine_a: "fpsolver".into(),
            engine_b: "ou_oracle".into(),
            tolerance: 1e-3,
        }
    }
}

impl ScenarioConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let kv = parse_kv(text)?;
        const KNOWN: &[&str] = &[
            "kind", "mode", "m", "omega", "hbar", "emittance", "n", "segment", "n_eigs", "x0",
            "x_max", "grid_points", "dt", "output_times", "seed", "n_particles", "scenario", "a",
            "tau", "N", "engine_a", "engine_b", "tolerance",
        ];
        for (k, _) in &kv {
            if !KNOWN.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key {k:?}")));
            }
        }
        let d = ScenarioConfig::default();
        let parse_usize = |key: &str, dflt: usize| -> Result<usize> {
            get(&kv, key)
                .map(|v| v.parse::<usize>().map_err(|e| Error::Config(format!("key {key:?}: {e}"))))
                .transpose()
                .map(|o| o.unwrap_or(dflt))
        };
        Ok(ScenarioConfig {
            kind: match get(&kv, "kind") {
                Some(s) => s.parse()?,
                None => d.kind,
            },
            params: params_from_kv(&kv, false)?,
            n: get(&kv, "n")
                .map(|v| v.parse::<u32>().map_err(|e| Error::Config(format!("key \"n\": {e}"))))
                .transpose()?
                .unwrap_or(d.n),
            segment: parse_usize("segment", d.segment)?,
            n_eigs: parse_usize("n_eigs", d.n_eigs)?,
            x0: parse_f64(&kv, "x0")?.unwrap_or(d.x0),
            x_max: parse_f64(&kv, "x_max")?.unwrap_or(d.x_max),
            grid_points: parse_usize("grid_points", d.grid_points)?,
            dt: parse_f64(&kv, "dt")?.unwrap_or(d.dt),
            output_times: parse_list(&kv, "output_times")?.unwrap_or(d.output_times),
            seed: get(&kv, "seed")
                .map(|v| v.parse::<u64>().map_err(|e| Error::Config(format!("key \"seed\": {e}"))))
                .transpose()?
                .unwrap_or(d.seed),
            n_particles: parse_usize("n_particles", d.n_particles)?,
            scenario: match get(&kv, "scenario") {
                Some(s) => s.parse()?,
                None => d.scenario,
            },
            a: parse_f64(&kv, "a")?.unwrap_or(d.a),
            tau: parse_f64(&kv, "tau")?.unwrap_or(d.tau),
            big_n: get(&kv, "N")
                .map(|v| v.parse::<u32>().map_err(|e| Error::Config(format!("key \"N\": {e}"))))
                .transpose()?
                .unwrap_or(d.big_n),
            engine_a: get(&kv, "engine_a").unwrap_or(&d.engine_a).to_string(),
            engine_b: get(&kv, "engine_b").unwrap_or(&d.engine_b).to_string(),
            tolerance: parse_f64(&kv, "tolerance")?.unwrap_or(d.tolerance),
        })
    }

    /// Canonical text form: every field, fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        s.push_str(&format!("kind = {}\n", self.kind));
        s.push_str(&format!("mode = {}\n", p.mode()));
        s.push_str(&format!("m = {}\n", p.mass()));
        s.push_str(&format!("omega = {}\n", p.omega()));
        match p.mode() {
            Mode::Quantum => s.push_str(&format!("hbar = {}\n", p.action())),
            Mode::Beam => s.push_str(&format!("emittance = {}\n", p.action())),
        }
        s.push_str(&format!("n = {}\n", self.n));
        s.push_str(&format!("segment = {}\n", self.segment));
        s.push_str(&format!("n_eigs = {}\n", self.n_eigs));
        s.push_str(&format!("x0 = {}\n", self.x0));
        s.push_str(&format!("x_max = {}\n", self.x_max));
        s.push_str(&format!("grid_points = {}\n", self.grid_points));
        s.push_str(&format!("dt = {}\n", self.dt));
        let times: Vec<String> = self.output_times.iter().map(|t| t.to_string()).collect();
        s.push_str(&format!("output_times = {}\n", times.join(",")));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("n_particles = {}\n", self.n_particles));
        s.push_str(&format!("scenario = {}\n", self.scenario));
        s.push_str(&format!("a = {}\n", self.a));
        s.push_str(&format!("tau = {}\n", self.tau));
        s.push_str(&format!("N = {}\n", self.big_n));
        s.push_str(&format!("engine_a = {}\n", self.engine_a));
        s.push_str(&format!("engine_b = {}\n", self.engine_b));
        s.push_str(&format!("tolerance = {}\n", self.tolerance));
        s
    }

    /// Hex SHA-256 of the canonical text; stamped into reports.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.to_text().as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}
