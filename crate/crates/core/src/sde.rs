//! Particle-level check of the Ito diffusion `dX = v dt + dW`,
//! `E[dW^2] = 2D dt`: ensembles must track the Fokker-Planck solution, and
//! particles must never cross a node.
//!
//! Reproducibility: every (particle, macro-step) pair gets its own
//! counter-derived ChaCha8 stream from `(seed, particle, step)`, so
//! trajectories are bit-identical no matter how the particle loop is
//! scheduled across threads.
//!
//! Node policy: within a macro step the move is sub-stepped so the drift
//! displacement stays below a quarter of the distance to the nearest node
//! (with a floor of `dt * 1e-6`), and a proposed move that would cross a
//! node is rejected and redrawn. The exact process almost surely never
//! crosses (the drift diverges repulsively), so rejection restores that
//! property at finite step size; rejections are counted and reported.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::params::PhysicalParams;
use crate::velocity::VelocityField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Simulation configuration.
#[derive(Debug, Clone)]
pub struct SdeConfig {
    pub n_particles: usize,
    /// Macro time step (physical units).
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Times at which to keep snapshots; rounded to the macro-step grid.
    pub snapshot_times: Vec<f64>,
}

/// Particle positions at one snapshot time.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub time: f64,
    pub positions: Vec<f64>,
}

impl Ensemble {
    pub fn mean(&self) -> f64 {
        self.positions.iter().sum::<f64>() / self.positions.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.positions.iter().map(|&x| (x - m) * (x - m)).sum::<f64>()
            / (self.positions.len() as f64 - 1.0)
    }
}

/// Full simulation outcome with node-crossing diagnostics.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub snapshots: Vec<Ensemble>,
    /// Rejected (redrawn) node-crossing proposals.
    pub rejected_crossings: u64,
    /// Particles whose interval label changed: must stay zero.
    pub label_violations: u64,
}

impl SimOutcome {
    /// Write snapshots as CSV rows `t,particle_id,x`.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "t,particle_id,x")?;
        for snap in &self.snapshots {
            for (i, x) in snap.positions.iter().enumerate() {
                writeln!(w, "{:.17e},{i},{x:.17e}", snap.time)?;
            }
        }
        Ok(())
    }
}

/// Counter-based stream for one (particle, step) pair.
fn stream(seed: u64, particle: u64, step: u64) -> ChaCha8Rng {
    // splitmix-style mixing of the three counters into a 256-bit key
    let mut key = [0u8; 32];
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let mut z = state
            .wrapping_add(particle.wrapping_mul(0xbf58_476d_1ce4_e5b9))
            .wrapping_add(step.wrapping_mul(0x94d0_49bb_1331_11eb))
            .wrapping_add(i as u64);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
        state = state.wrapping_add(z);
    }
    ChaCha8Rng::from_seed(key)
}

/// Interval label: number of nodes strictly below `x`.
fn label_of(nodes: &[f64], x: f64) -> usize {
    nodes.iter().filter(|&&n| n < x).count()
}

/// Bounds of the labeled interval (infinite at the ends).
fn bounds_of(nodes: &[f64], label: usize) -> (f64, f64) {
    let lo = if label == 0 { f64::NEG_INFINITY } else { nodes[label - 1] };
    let hi = if label == nodes.len() { f64::INFINITY } else { nodes[label] };
    (lo, hi)
}

/// Euler-Maruyama simulation of the drift `v` with diffusion from `params`.
///
/// `f0_sampler` draws one initial position given the particle's own RNG
/// stream; it must respect the node partition (a particle's label is fixed
/// by its initial position).
pub fn simulate(
    v: &VelocityField,
    params: &PhysicalParams,
    f0_sampler: &(dyn Fn(&mut ChaCha8Rng) -> f64 + Sync),
    config: &SdeConfig,
) -> Result<SimOutcome> {
    if config.n_particles == 0 {
        return Err(Error::domain("n_particles", "need at least one particle"));
    }
    if !(config.dt > 0.0 && config.t_end > 0.0) {
        return Err(Error::domain("dt", "need dt > 0 and t_end > 0"));
    }
    let n_steps = (config.t_end / config.dt).round().max(1.0) as u64;
    let snap_steps: Vec<u64> = {
        let mut s: Vec<u64> = config
            .snapshot_times
            .iter()
            .map(|&t| (t / config.dt).round().clamp(0.0, n_steps as f64) as u64)
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let sqrt_2d = (2.0 * params.diffusion()).sqrt();
    let dt_min = config.dt * 1e-6;
    let nodes = v.nodes().to_vec();

    struct ParticleResult {
        path: Vec<f64>, // positions at snapshot steps
        rejections: u64,
        violated: bool,
    }

    let results: Vec<ParticleResult> = (0..config.n_particles as u64)
        .into_par_iter()
        .map(|pid| {
            let mut rng = stream(config.seed, pid, u64::MAX);
            let mut x = f0_sampler(&mut rng);
            let label = label_of(&nodes, x);
            let (lo, hi) = bounds_of(&nodes, label);
            let mut rejections = 0u64;
            let mut path = Vec::with_capacity(snap_steps.len());
            let mut snap_iter = snap_steps.iter().peekable();
            if let Some(&&0) = snap_iter.peek() {
                path.push(x);
                snap_iter.next();
            }
            for step in 0..n_steps {
                let mut rng = stream(config.seed, pid, step);
                let t_base = step as f64 * config.dt;
                let mut remaining = config.dt;
                while remaining > 0.0 {
                    let t_now = t_base + (config.dt - remaining);
                    let vx = v.v(x, t_now);
                    let node_dist = (x - lo).abs().min((hi - x).abs());
                    let mut dt_sub = remaining;
                    if vx != 0.0 && node_dist.is_finite() {
                        dt_sub = dt_sub.min(node_dist / (4.0 * vx.abs()));
                    }
                    dt_sub = dt_sub.max(dt_min).min(remaining);
                    let noise = sqrt_2d * dt_sub.sqrt();
                    let mut accepted = false;
                    for _attempt in 0..64 {
                        let z: f64 = rng.sample(StandardNormal);
                        let x_new = x + vx * dt_sub + noise * z;
                        if x_new > lo && x_new < hi {
                            x = x_new;
                            accepted = true;
                            break;
                        }
                        rejections += 1;
                    }
                    if !accepted {
                        // hold position for this sub-step; the run continues
                    }
                    remaining -= dt_sub;
                }
                if let Some(&&s) = snap_iter.peek() {
                    if s == step + 1 {
                        path.push(x);
                        snap_iter.next();
                    }
                }
            }
            ParticleResult { path, rejections, violated: label_of(&nodes, x) != label }
        })
        .collect();

    let mut snapshots: Vec<Ensemble> = snap_steps
        .iter()
        .map(|&s| Ensemble {
            time: s as f64 * config.dt,
            positions: Vec::with_capacity(config.n_particles),
        })
        .collect();
    let mut rejected = 0u64;
    let mut violations = 0u64;
    for r in results {
        rejected += r.rejections;
        violations += r.violated as u64;
        for (snap, &x) in snapshots.iter_mut().zip(&r.path) {
            snap.positions.push(x);
        }
    }
    Ok(SimOutcome { snapshots, rejected_crossings: rejected, label_violations: violations })
}

/// `L^1` distance between the normalized histogram of an ensemble (binned on
/// the reference's own grid cells) and the reference density. Mass outside
/// the reference grid counts fully toward the distance.
pub fn histogram_l1(positions: &[f64], reference: &GridFunction) -> Result<f64> {
    if positions.is_empty() {
        return Err(Error::domain("ensemble", "no particles"));
    }
    let n = positions.len() as f64;
    let mut inside = 0usize;
    let mut l1 = 0.0;
    for (seg, vals) in reference.partition().segments().iter().zip(reference.values()) {
        let h = seg.step();
        let mut counts = vec![0u64; seg.len()];
        for &x in positions {
            if x >= seg.a() && x < seg.b() {
                let j = (((x - seg.a()) / h) as usize).min(seg.len() - 1);
                counts[j] += 1;
                inside += 1;
            }
        }
        for (&c, &f) in counts.iter().zip(vals) {
            l1 += (c as f64 / (n * h) - f).abs() * h;
        }
    }
    // particles that fell outside every segment
    l1 += (positions.len() - inside) as f64 / n;
    Ok(l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Partition;
    use crate::oracles;

    fn params() -> PhysicalParams {
        PhysicalParams::quantum(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn identical_seeds_give_identical_trajectories() {
        let p = params();
        let v = VelocityField::ho_state(0, &p);
        let config = SdeConfig {
            n_particles: 200,
            dt: 1e-2,
            t_end: 0.5,
            seed: 42,
            snapshot_times: vec![0.25, 0.5],
        };
        let sampler = |rng: &mut ChaCha8Rng| rng.sample::<f64, _>(StandardNormal);
        let a = simulate(&v, &p, &sampler, &config).unwrap();
        let b = simulate(&v, &p, &sampler, &config).unwrap();
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(sa.positions, sb.positions);
        }
        let mut config2 = config;
        config2.seed = 43;
        let c = simulate(&v, &p, &sampler, &config2).unwrap();
        assert_ne!(a.snapshots[0].positions, c.snapshots[0].positions);
    }

    #[test]
    fn brownian_increment_variance_is_2dt() {
        // v = 0: X_t - X_0 is pure Brownian with variance 2 D t
        let p = PhysicalParams::quantum(1.0, 1.0, 1.7).unwrap();
        let v = VelocityField::stationary(|_| 0.0, vec![]);
        let t_end = 0.8;
        let n = 40_000;
        let config = SdeConfig {
            n_particles: n,
            dt: 1e-2,
            t_end,
            seed: 7,
            snapshot_times: vec![t_end],
        };
        let sampler = |_: &mut ChaCha8Rng| 0.0;
        let out = simulate(&v, &p, &sampler, &config).unwrap();
        let var = out.snapshots[0].variance();
        let want = 2.0 * p.diffusion() * t_end;
        let se = want * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - want).abs() < 4.0 * se, "var {var} vs {want} (se {se})");
    }

    #[test]
    fn ou_ensemble_tracks_kernel_moments() {
        let p = params();
        let v = VelocityField::ho_state(0, &p);
        let x0 = 1.2;
        let n = 40_000;
        let config = SdeConfig {
            n_particles: n,
            dt: 2e-3,
            t_end: 1.0,
            seed: 11,
            snapshot_times: vec![0.3, 1.0],
        };
        let sampler = move |_: &mut ChaCha8Rng| x0;
        let out = simulate(&v, &p, &sampler, &config).unwrap();
        let k = oracles::OuKernelParams::new(x0, 0.0, &p);
        for snap in &out.snapshots {
            let (want_mean, want_var) = (k.alpha(snap.time), k.sigma_sq(snap.time));
            let se_mean = want_var.sqrt() / (n as f64).sqrt();
            let se_var = want_var * (2.0 / (n as f64 - 1.0)).sqrt();
            assert!(
                (snap.mean() - want_mean).abs() < 4.0 * se_mean,
                "t={}: mean {} vs {want_mean}",
                snap.time,
                snap.mean()
            );
            assert!(
                (snap.variance() - want_var).abs() < 4.0 * se_var,
                "t={}: var {} vs {want_var}",
                snap.time,
                snap.variance()
            );
        }
    }

    #[test]
    fn stationary_ensemble_stays_stationary() {
        let p = params();
        let v = VelocityField::ho_state(0, &p);
        let n = 30_000;
        let s0 = p.sigma0();
        let config = SdeConfig {
            n_particles: n,
            dt: 5e-3,
            t_end: 2.0,
            seed: 3,
            snapshot_times: vec![1.0, 2.0],
        };
        let sampler = move |rng: &mut ChaCha8Rng| s0 * rng.sample::<f64, _>(StandardNormal);
        let out = simulate(&v, &p, &sampler, &config).unwrap();
        for snap in &out.snapshots {
            let se_mean = p.sigma0() / (n as f64).sqrt();
            let se_var = p.sigma0_sq() * (2.0 / (n as f64 - 1.0)).sqrt();
            assert!(snap.mean().abs() < 4.0 * se_mean, "mean at t={}", snap.time);
            assert!(
                (snap.variance() - p.sigma0_sq()).abs() < 4.0 * se_var,
                "var at t={}",
                snap.time
            );
        }
    }

    #[test]
    fn nodes_are_impenetrable() {
        let p = params();
        for n_state in [1u32, 2] {
            let v = VelocityField::ho_state(n_state, &p);
            let config = SdeConfig {
                n_particles: 2000,
                dt: 1e-3,
                t_end: 2.0,
                seed: 19,
                snapshot_times: vec![2.0],
            };
            // start in the rightmost interval
            let lo = v.nodes().last().copied().unwrap();
            let sampler = move |rng: &mut ChaCha8Rng| {
                lo + 0.3 + rng.sample::<f64, _>(StandardNormal).abs()
            };
            let out = simulate(&v, &p, &sampler, &config).unwrap();
            assert_eq!(out.label_violations, 0, "n={n_state}");
            for &x in &out.snapshots[0].positions {
                assert!(x > lo, "n={n_state}: particle at {x} crossed {lo}");
            }
        }
    }

    #[test]
    fn histogram_converges_to_sampled_density() {
        // particles drawn exactly from the reference: L1 shrinks ~ 1/sqrt(n)
        let p = params();
        let part = Partition::single(-4.0, 4.0, 100).unwrap();
        let reference = GridFunction::sample(&part, |x| crate::ho::ho_density(0, x, &p));
        let s0 = p.sigma0();
        let draw = |n: usize, seed: u64| -> Vec<f64> {
            let mut rng = stream(seed, 0, 0);
            (0..n).map(|_| s0 * rng.sample::<f64, _>(StandardNormal)).collect()
        };
        let small = histogram_l1(&draw(2_000, 5), &reference).unwrap();
        let large = histogram_l1(&draw(200_000, 6), &reference).unwrap();
        assert!(large < small, "{large} !< {small}");
        assert!(large < 0.05, "L1 at n=2e5: {large}");
        assert!(histogram_l1(&[], &reference).is_err());
    }

    #[test]
    fn n1_ensemble_matches_kernel_histogram() {
        let p = params();
        let v = VelocityField::ho_state(1, &p);
        let x0 = 0.9;
        let t = 0.8;
        let config = SdeConfig {
            n_particles: 30_000,
            dt: 1e-3,
            t_end: t,
            seed: 23,
            snapshot_times: vec![t],
        };
        let sampler = move |_: &mut ChaCha8Rng| x0;
        let out = simulate(&v, &p, &sampler, &config).unwrap();
        let part = Partition::single(0.0, 6.0, 150).unwrap();
        let reference =
            GridFunction::sample(&part, |x| oracles::n1_transition(x, t, x0, 0.0, &p).unwrap());
        let l1 = histogram_l1(&out.snapshots[0].positions, &reference).unwrap();
        assert!(l1 < 0.1, "L1 = {l1}");
        assert_eq!(out.label_violations, 0);
    }
}
