//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see every line.

use stomec::config::ScenarioConfig;
use stomec::control::{
    linear_drift_moments, ControlKind, ControlledEvolution, PacketControl, SmoothingFamily,
};
use stomec::fpsolver::{evolve_fp, l1_distance, FPProblem};
use stomec::grid::{GridFunction, Partition};
use stomec::ho;
use stomec::oracles;
use stomec::sde::{histogram_l1, simulate, SdeConfig};
use stomec::spectral::{ho_interval_eigenvalues, ho_segment_operator, solve_sturm_liouville};
use stomec::{PhysicalParams, VelocityField};

fn params() -> PhysicalParams {
    PhysicalParams::quantum(1.0, 1.0, 1.0).unwrap()
}

fn report(criterion: &str, pass: bool, details: &str) {
    println!("acceptance {criterion}: {} - {details}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}: {details}");
}

/// Independent oracle for criterion 1: plain partial sums of the defining
/// series (no shared code with the library's evaluator) plus bisection.
fn oracle_m(a: f64, b: f64, z: f64) -> f64 {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for k in 0..400 {
        let kf = k as f64;
        term *= (a + kf) * z / ((b + kf) * (kf + 1.0));
        sum += term;
        if term == 0.0 {
            break;
        }
    }
    sum
}

fn oracle_root(mut lo: f64, mut hi: f64) -> f64 {
    let f = |mu: f64| oracle_m(-(mu + 1.0) / 2.0, 1.5, 0.5);
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_1_eigenvalue_reproduction() {
    let p = params();
    // full Sturm-Liouville solve on the middle segment of the n=2 drift
    let op = ho_segment_operator(2, 1, 12.0, 3000, &p).unwrap();
    let dec = solve_sturm_liouville(&op, 7).unwrap();
    let mu: Vec<f64> = dec.eigenvalues().iter().map(|l| l / p.omega()).collect();
    // the printed values are the antisymmetric branch: spectrum indices 1, 3, 5
    let printed = [7.44, 37.06, 86.41];
    let from_solver = [mu[1], mu[3], mu[5]];
    let solver_ok = printed.iter().zip(&from_solver).all(|(want, got)| (got - want).abs() <= 0.01);

    // independent confirmation: root-finding the odd-branch condition
    // through the library's confluent M ...
    let mu_conf = ho_interval_eigenvalues(2, 1, 3, &p).unwrap();
    // ... checked against oracle roots from plain partial sums (frozen)
    let oracle = [oracle_root(6.0, 9.0), oracle_root(35.0, 39.0), oracle_root(84.0, 88.0)];
    let frozen = [7.440203, 37.058604, 86.408378];
    let oracle_ok = oracle.iter().zip(&frozen).all(|(a, b)| (a - b).abs() < 1e-5);
    let confluent_ok = mu_conf[1..]
        .iter()
        .zip(&oracle)
        .all(|(got, want)| (got - want).abs() <= 1e-6);
    let printed_ok = mu_conf[1..]
        .iter()
        .zip(&printed)
        .all(|(got, want)| (got - want).abs() <= 0.01);
    let cross_ok = from_solver.iter().zip(&mu_conf[1..]).all(|(a, b)| (a - b).abs() <= 0.01);

    report(
        "criterion 1 (eigenvalue reproduction)",
        solver_ok && oracle_ok && confluent_ok && printed_ok && cross_ok,
        &format!("solver mu = {from_solver:?}, confluent mu = {:?}", &mu_conf[1..]),
    );
}

fn hat_delta(part: &Partition, x0: f64) -> (GridFunction, f64) {
    let mut f = GridFunction::zeros(part);
    let mut best: Option<(usize, usize, f64)> = None;
    for (k, seg) in part.segments().iter().enumerate() {
        for (j, &x) in seg.points().iter().enumerate() {
            let d = (x - x0).abs();
            if best.is_none() || d < best.unwrap().2 {
                best = Some((k, j, d));
            }
        }
    }
    let (k, j, _) = best.unwrap();
    f.values_mut()[k][j] = 1.0 / part.segments()[k].step();
    (f, part.segments()[k].points()[j])
}

#[test]
fn criterion_2_kernel_equivalence() {
    let p = params();
    let times: Vec<f64> = [0.1, 0.5, 1.0, 5.0].iter().map(|t| t / p.omega()).collect();

    // OU kernel on a 2000-point grid
    let part = Partition::single(-12.0 * p.sigma0(), 12.0 * p.sigma0(), 2000).unwrap();
    let (f0, x0) = hat_delta(&part, p.sigma0());
    let problem = FPProblem {
        velocity: VelocityField::ho_state(0, &p),
        params: p,
        f0,
        dt: 5e-3 / p.omega(),
        output_times: times.clone(),
    };
    let traj = evolve_fp(&problem).unwrap();
    let mut worst_ou = 0.0_f64;
    for (t, frame) in traj.times.iter().zip(&traj.frames) {
        let exact =
            GridFunction::sample(&part, |x| oracles::ou_transition(x, *t, x0, 0.0, &p).unwrap());
        worst_ou = worst_ou.max(l1_distance(frame, &exact).unwrap());
    }

    // n=1 kernel, starts on both half-lines, L1 measured per half-line
    let part1 = Partition::from_nodes(&[0.0], 12.0 * p.sigma0(), 2000).unwrap();
    let mut worst_n1 = 0.0_f64;
    for sign in [1.0, -1.0] {
        let (f0, x0) = hat_delta(&part1, sign * p.sigma0());
        let problem = FPProblem {
            velocity: VelocityField::ho_state(1, &p),
            params: p,
            f0,
            dt: 5e-3 / p.omega(),
            output_times: times.clone(),
        };
        let traj = evolve_fp(&problem).unwrap();
        for (t, frame) in traj.times.iter().zip(&traj.frames) {
            let exact = GridFunction::sample(&part1, |x| {
                oracles::n1_transition(x, *t, x0, 0.0, &p).unwrap()
            });
            // per-half-line distances
            for k in 0..2 {
                let seg = &part1.segments()[k];
                let d: f64 = seg.step()
                    * frame.values()[k]
                        .iter()
                        .zip(&exact.values()[k])
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>();
                worst_n1 = worst_n1.max(d);
            }
        }
    }

    report(
        "criterion 2 (kernel equivalence)",
        worst_ou <= 1e-3 && worst_n1 <= 3e-3,
        &format!("worst OU L1 = {worst_ou:.2e} (<= 1e-3), worst n1 half-line L1 = {worst_n1:.2e} (<= 3e-3)"),
    );
}

#[test]
fn criterion_3_relaxation_law() {
    let p = params();
    let part = Partition::from_nodes(&[0.0], 12.0 * p.sigma0(), 1500).unwrap();
    // masses 0.3 left / 0.7 right: q = 1.4
    let raw = GridFunction::sample(&part, |x| {
        let s = p.sigma0();
        (-((x.abs() - s) * (x.abs() - s)) / (0.3 * s * s)).exp()
    });
    let m = raw.segment_masses();
    let f0 = GridFunction::from_values(
        part.clone(),
        vec![
            raw.values()[0].iter().map(|v| 0.3 * v / m[0]).collect(),
            raw.values()[1].iter().map(|v| 0.7 * v / m[1]).collect(),
        ],
    )
    .unwrap();

    let times: Vec<f64> = [1.0, 2.0, 4.0, 8.0].iter().map(|t| t / p.omega()).collect();
    let problem = FPProblem {
        velocity: VelocityField::ho_state(1, &p),
        params: p,
        f0,
        dt: 5e-3 / p.omega(),
        output_times: times,
    };
    let traj = evolve_fp(&problem).unwrap();
    let limit = GridFunction::sample(&part, |x| {
        oracles::gamma_factor(1.4, x).unwrap() * ho::ho_density(1, x, &p)
    });
    let terminal = l1_distance(traj.frames.last().unwrap(), &limit).unwrap();
    let mass_ok = traj.max_mass_drift <= 1e-10;
    let masses = traj.frames.last().unwrap().segment_masses();

    report(
        "criterion 3 (relaxation law)",
        terminal <= 1e-3 && mass_ok && (masses[0] - 0.3).abs() < 1e-9 && (masses[1] - 0.7).abs() < 1e-9,
        &format!(
            "terminal L1 = {terminal:.2e} (<= 1e-3), mass drift = {:.2e} (<= 1e-10), masses = {masses:?}",
            traj.max_mass_drift
        ),
    );
}

#[test]
fn criterion_4_exponential_rate() {
    let p = params();
    // lambda_1 from the spectral module, not assumed
    let op = ho_segment_operator(0, 0, 12.0, 2000, &p).unwrap();
    let dec = solve_sturm_liouville(&op, 3).unwrap();
    let lambda1 = dec.eigenvalues()[1];

    let part = Partition::single(-12.0 * p.sigma0(), 12.0 * p.sigma0(), 2000).unwrap();
    let s = p.sigma0();
    let mut f0 = GridFunction::sample(&part, |x| (-(x - 0.5 * s) * (x - 0.5 * s) / (0.5 * s * s)).exp());
    f0.normalize().unwrap();
    let times: Vec<f64> = [2.0, 2.5, 3.0, 3.5, 4.0].iter().map(|t| t / p.omega()).collect();
    let problem = FPProblem {
        velocity: VelocityField::ho_state(0, &p),
        params: p,
        f0,
        dt: 5e-3 / p.omega(),
        output_times: times.clone(),
    };
    let traj = evolve_fp(&problem).unwrap();
    let h = GridFunction::sample(&part, |x| ho::ho_density(0, x, &p));
    let logs: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.frames)
        .map(|(&t, f)| (t, l1_distance(f, &h).unwrap().ln()))
        .collect();
    // least-squares slope of ln L1 against t
    let n = logs.len() as f64;
    let (st, sl): (f64, f64) = logs.iter().fold((0.0, 0.0), |(a, b), (t, l)| (a + t, b + l));
    let (stt, stl): (f64, f64) =
        logs.iter().fold((0.0, 0.0), |(a, b), (t, l)| (a + t * t, b + t * l));
    let slope = (n * stl - st * sl) / (n * stt - st * st);
    let rate = -slope;
    let rel = (rate - lambda1).abs() / lambda1;

    report(
        "criterion 4 (exponential rate)",
        rel <= 0.05,
        &format!("fitted rate = {rate:.4}, spectral lambda_1 = {lambda1:.4}, rel dev = {rel:.3}"),
    );
}

#[test]
fn criterion_5_control_certification() {
    let p = params();
    let s = p.sigma0();
    let cases = [
        (ControlKind::Ou { x0: s }, 0.6 / p.omega(), -8.0 * s, 8.0 * s),
        (ControlKind::N1 { x0: s }, 0.6 / p.omega(), 1e-6 * s, 8.0 * s),
        (ControlKind::Decay, 0.5 / p.omega(), -8.0 * s, 8.0 * s),
        (
            ControlKind::Packet { a: s, tau: 1.0 / p.omega(), n: 4 },
            1.0 / p.omega(),
            -8.0 * s,
            8.0 * s,
        ),
    ];
    let mut all_ok = true;
    let mut details = String::new();
    for (kind, t, lo, hi) in cases {
        let ev = ControlledEvolution::new(kind, &p).unwrap();
        let margin = 0.5 * s;
        let window = |x: f64| {
            x.abs() <= 4.0 * s && !ev.singular_points().iter().any(|&sp| (x - sp).abs() < margin)
        };

        // synthesized vs closed form at relative 1e-4
        let part = Partition::single(lo, hi, 6000).unwrap();
        let (v_syn, _) = ev.synthesized_potential(&part, t, 5e-4 / p.omega()).unwrap();
        let mut max_rel = 0.0_f64;
        for (x, got) in v_syn.iter() {
            if !window(x) {
                continue;
            }
            let want = ev.closed_potential(x, t);
            max_rel = max_rel.max((got - want).abs() / want.abs().max(p.energy_scale()));
        }

        // HJM residual decreases at second order under joint refinement
        let resid = |cells: usize, dt: f64| {
            let part = Partition::single(lo, hi, cells).unwrap();
            let rep = ev.certify(&part, t, dt).unwrap();
            let mut m = 0.0_f64;
            for (k, (seg, vals)) in
                rep.residual.partition().segments().iter().zip(rep.residual.values()).enumerate()
            {
                for (j, (&x, &r)) in seg.points().iter().zip(vals).enumerate() {
                    if window(x) && !rep.excluded.contains(&(k, j)) {
                        m = m.max(r.abs());
                    }
                }
            }
            m
        };
        let coarse = resid(1000, 8e-3 / p.omega());
        let fine = resid(2000, 4e-3 / p.omega());
        let ratio = coarse / fine;

        let ok = max_rel <= 1e-4 && ratio >= 3.5;
        all_ok &= ok;
        details.push_str(&format!("{kind:?}: rel = {max_rel:.1e}, ratio = {ratio:.2}; "));
    }
    report("criterion 5 (control certification)", all_ok, &details);
}

#[test]
fn criterion_6_asymptotic_potential_recovery() {
    let p = params();
    let s = p.sigma0();
    let t = 10.0 / p.omega();
    let scenarios = [
        ControlKind::Ou { x0: s },
        ControlKind::Decay,
        ControlKind::Packet { a: s, tau: 1.0 / p.omega(), n: 4 },
    ];
    let mut all_ok = true;
    let mut details = String::new();
    for kind in scenarios {
        let ev = ControlledEvolution::new(kind, &p).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..=600 {
            let x = -3.0 * s + i as f64 * s / 100.0;
            let dev = (ev.closed_potential(x, t) - ho::ho_potential(x, &p)).abs();
            worst = worst.max(dev);
        }
        let ok = worst <= 1e-3 * p.energy_scale();
        all_ok &= ok;
        details.push_str(&format!("{kind:?}: max dev = {:.2e}; ", worst / p.energy_scale()));
    }
    report("criterion 6 (asymptotic potential recovery)", all_ok, &details);
}

#[test]
fn criterion_7_smoothing_family_algebra() {
    let p = PhysicalParams::quantum(1.0, 0.8, 1.3).unwrap();
    let mut all_ok = true;
    let mut worst_forms = 0.0_f64;
    let mut worst_wk = 0.0_f64;
    for n in 2..=10u32 {
        let tau = 0.9 / p.omega();
        let fam = SmoothingFamily::new(tau, n).unwrap();
        for i in 0..=400 {
            let t = i as f64 * 20.0 * tau / 400.0;
            worst_forms = worst_forms.max((fam.value(t) - fam.value_binomial(t)).abs());
        }
        all_ok &= (fam.value(0.0) - 1.0).abs() < 1e-15;
        all_ok &= fam.derivative(0.0).abs() < 1e-15;
        all_ok &= fam.second_derivative(tau).abs() < 1e-12;

        let pc = PacketControl::new(p.sigma0(), tau, n, &p).unwrap();
        for k in 1..=n {
            let lhs = std::f64::consts::SQRT_2 * pc.u_k(k, std::f64::consts::FRAC_PI_4 / p.omega());
            // the identity relates U_k(pi/4 omega) to the printed W_k
            // combination, which is the implemented weight plus 2
            worst_wk = worst_wk.max((lhs - (pc.w_k(k) + 2.0)).abs());
        }
    }
    all_ok &= worst_forms <= 1e-12 && worst_wk <= 1e-12;
    report(
        "criterion 7 (smoothing-family algebra)",
        all_ok,
        &format!("product-vs-binomial dev = {worst_forms:.2e}, W_k identity dev = {worst_wk:.2e}"),
    );
}

#[test]
fn criterion_8_monte_carlo_consistency() {
    let p = params();
    let n_particles = 100_000;
    let x0 = p.sigma0();

    // (a) OU moments within 4 standard errors, (b) histogram L1 <= 0.05
    let config = SdeConfig {
        n_particles,
        dt: 1e-3 / p.omega(),
        t_end: 1.0 / p.omega(),
        seed: 20120,
        snapshot_times: vec![0.5 / p.omega(), 1.0 / p.omega()],
    };
    let v0 = VelocityField::ho_state(0, &p);
    let sampler = move |_: &mut rand_chacha::ChaCha8Rng| x0;
    let out = simulate(&v0, &p, &sampler, &config).unwrap();
    let k = oracles::OuKernelParams::new(x0, 0.0, &p);
    let mut moments_ok = true;
    for snap in &out.snapshots {
        let (wm, wv) = (k.alpha(snap.time), k.sigma_sq(snap.time));
        let se_mean = wv.sqrt() / (n_particles as f64).sqrt();
        let se_var = wv * (2.0 / (n_particles as f64 - 1.0)).sqrt();
        moments_ok &= (snap.mean() - wm).abs() <= 4.0 * se_mean;
        moments_ok &= (snap.variance() - wv).abs() <= 4.0 * se_var;
    }
    let bins = Partition::single(-5.0 * p.sigma0(), 5.0 * p.sigma0(), 200).unwrap();
    let t_last = out.snapshots.last().unwrap().time;
    let reference =
        GridFunction::sample(&bins, |x| oracles::ou_transition(x, t_last, x0, 0.0, &p).unwrap());
    let hist_l1 = histogram_l1(&out.snapshots.last().unwrap().positions, &reference).unwrap();

    // (c) zero node crossings for the n=1 and n=2 drifts over 1e4 steps
    let mut crossings_ok = true;
    for n_state in [1u32, 2] {
        let v = VelocityField::ho_state(n_state, &p);
        let config = SdeConfig {
            n_particles: 2000,
            dt: 1e-3 / p.omega(),
            t_end: 10.0 / p.omega(), // 1e4 steps
            seed: 77,
            snapshot_times: vec![10.0 / p.omega()],
        };
        let start = v.nodes().last().unwrap() + 0.5 * p.sigma0();
        let sampler = move |_: &mut rand_chacha::ChaCha8Rng| start;
        let out = simulate(&v, &p, &sampler, &config).unwrap();
        crossings_ok &= out.label_violations == 0;
        let lo = *v.nodes().last().unwrap();
        crossings_ok &= out.snapshots[0].positions.iter().all(|&x| x > lo);
    }

    report(
        "criterion 8 (Monte-Carlo consistency)",
        moments_ok && hist_l1 <= 0.05 && crossings_ok,
        &format!("moments within 4 SE: {moments_ok}, histogram L1 = {hist_l1:.3} (<= 0.05), node crossings: none = {crossings_ok}"),
    );
}

#[test]
fn criterion_9_non_dispersive_transport() {
    let p = params();
    let tau = 1.0 / p.omega();
    let pc = PacketControl::new(p.sigma0(), tau, 4, &p).unwrap();
    let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 20.0 * tau / 400.0).collect();
    let w = p.omega();
    let out = linear_drift_moments(
        move |t| pc.drive(t),
        move |_| -w,
        p.sigma0(), // mu(0) = a
        p.sigma0_sq(),
        p.diffusion(),
        &grid,
    )
    .unwrap();
    let worst = out
        .iter()
        .map(|&(_, nu)| (nu - p.sigma0_sq()).abs() / p.sigma0_sq())
        .fold(0.0_f64, f64::max);
    report(
        "criterion 9 (non-dispersive transport)",
        worst <= 1e-8,
        &format!("max relative variance deviation over [0, 20 tau] = {worst:.2e}"),
    );
}

#[test]
fn config_hash_is_stable_for_reports() {
    // determinism anchor used by the CLI reports
    let cfg = ScenarioConfig::default();
    assert_eq!(cfg.hash(), ScenarioConfig::from_text(&cfg.to_text()).unwrap().hash());
}
