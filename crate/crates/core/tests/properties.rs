//! Property tests for the spec-level invariants that quantify over inputs.

use proptest::prelude::*;
use stomec::config::ScenarioConfig;
use stomec::grid::{GridFunction, Partition};
use stomec::ho;
use stomec::spectral::confluent_m;
use stomec::velocity::{velocity_from_state, VelocityField};
use stomec::PhysicalParams;

/// Brute-force partial sums of the defining series, with a crude tail bound
/// from the geometric ratio of the last term. Valid in the regime where the
/// series carries no catastrophic cancellation.
fn series_with_bound(a: f64, b: f64, z: f64) -> (f64, f64) {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 0.0_f64;
    loop {
        term *= (a + k) * z / ((b + k) * (k + 1.0));
        sum += term;
        k += 1.0;
        if term == 0.0 {
            return (sum, 0.0);
        }
        if k > 600.0 || (term.abs() < 1e-16 * sum.abs() && k > z) {
            let ratio = ((a + k) * z / ((b + k) * (k + 1.0))).abs().min(0.9);
            return (sum, term.abs() * ratio / (1.0 - ratio));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// confluent_M matches brute-force partial sums on the usage domain
    /// (sampled where the oracle itself is cancellation-safe: |a| <~ z/5 or
    /// small a z).
    #[test]
    fn confluent_m_matches_series_oracle(
        a in -12.0_f64..2.0,
        b_half in prop::bool::ANY,
        z in 0.01_f64..200.0,
    ) {
        let b = if b_half { 0.5 } else { 1.5 };
        prop_assume!(a >= -z / 5.0 || a.abs() * z < 40.0);
        let (oracle, tail) = series_with_bound(a, b, z);
        let got = confluent_m(a, b, z).unwrap();
        let tol = 1e-10 * oracle.abs().max(1e-30) + tail;
        prop_assert!(
            (got - oracle).abs() <= tol,
            "M({a}, {b}; {z}) = {got} vs oracle {oracle} (tail {tail})"
        );
    }

    /// velocity_from_state on (phi_n, S = -E_n t) reproduces 2 D phi'/phi to
    /// relative 1e-8 away from nodes, for every n <= 6.
    #[test]
    fn velocity_from_state_matches_closed_drift(
        n in 0u32..=6,
        x_unit in -0.95_f64..0.95,
    ) {
        let p = PhysicalParams::quantum(1.0, 1.0, 1.0).unwrap();
        let x = 3.0 * p.sigma0() * x_unit;
        let exact_field = VelocityField::ho_state(n, &p);
        prop_assume!(exact_field.node_distance(x) > 0.3 * p.sigma0());

        // fine local grid centered on the probe point: the reconstruction is
        // second order, so a 5e-5 sigma0 step reaches 1e-8 relative
        let h = 5e-5 * p.sigma0();
        let part = Partition::single(x - 60.0 * h, x + 60.0 * h, 120).unwrap();
        let r = GridFunction::sample(&part, |y| ho::ho_eigenfunction(n, y, &p).abs());
        let s = GridFunction::zeros(&part);
        let v = velocity_from_state(&r, &s, &p).unwrap();
        let got = v.v(x, 0.0);
        let want = exact_field.v(x, 0.0);
        prop_assert!(
            (got - want).abs() <= 1e-8 * want.abs().max(p.sigma0() * p.omega()),
            "n={n} x={x}: {got} vs {want}"
        );
    }

    /// Scenario configurations round-trip losslessly through their text form.
    #[test]
    fn scenario_config_round_trips(
        m in 0.1_f64..10.0,
        omega in 0.1_f64..10.0,
        hbar in 0.1_f64..10.0,
        n in 0u32..4,
        x0 in -3.0_f64..3.0,
        dt in 1e-4_f64..0.1,
        seed in prop::num::u64::ANY,
        times in prop::collection::vec(1e-3_f64..20.0, 1..6),
    ) {
        let mut cfg = ScenarioConfig::default();
        cfg.params = PhysicalParams::quantum(m, omega, hbar).unwrap();
        cfg.n = n;
        cfg.x0 = x0;
        cfg.dt = dt;
        cfg.seed = seed;
        cfg.output_times = times;
        let back = ScenarioConfig::from_text(&cfg.to_text()).unwrap();
        prop_assert_eq!(cfg, back);
    }

    /// GridFunction CSV serialization round-trips bit-exactly.
    #[test]
    fn grid_function_csv_round_trips(
        a in -5.0_f64..0.0,
        width in 0.5_f64..5.0,
        cells in 2usize..80,
        two_segments in prop::bool::ANY,
        scale in -3.0_f64..3.0,
    ) {
        let part = if two_segments {
            let mid = a + 0.5 * width;
            Partition::new(vec![
                stomec::grid::SegmentGrid::cell_centered(a, mid, cells).unwrap(),
                stomec::grid::SegmentGrid::cell_centered(mid, a + width, cells).unwrap(),
            ])
            .unwrap()
        } else {
            Partition::single(a, a + width, cells).unwrap()
        };
        let f = GridFunction::sample(&part, |x| (scale * x).sin() * x.exp());
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = GridFunction::read_csv(&buf[..]).unwrap();
        prop_assert!(f.partition().approx_eq(g.partition()));
        for ((_, x), (_, y)) in f.iter().zip(g.iter()) {
            prop_assert_eq!(x, y);
        }
    }
}
