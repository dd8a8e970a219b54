//! Property tests for structural invariants that hold for every input.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crit3_core::io::{read_snapshot, write_snapshot};
use crit3_core::linearized::{mix3, potential_eigendecomposition, LinearizedOps, Part};
use crit3_core::modulation::canonical_phases;
use crit3_core::spectrum::richardson;
use crit3_core::states::{apply_symmetry, g4_exact, ground_state, report, GroundStateBundle};
use crit3_core::{Field3, MassTriple, RadialGrid, C64};
use proptest::prelude::*;

struct Fixture {
    grid: RadialGrid,
    gs: GroundStateBundle,
    ops: LinearizedOps,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let m = MassTriple::new(1.0, 1.0, 3.0).unwrap();
        let grid = RadialGrid::stretched(1.0e4, 256, 8.0).unwrap();
        let gs = ground_state(&m, &grid);
        let ops = LinearizedOps::assemble(&m, &grid, &gs).unwrap();
        Fixture { grid, gs, ops }
    })
}

/// Field built from one Gaussian per component: `(center, width, amplitude, phase)`.
fn bumps(grid: &RadialGrid, p: &[(f64, f64, f64, f64); 3]) -> Field3 {
    let mut u = Field3::zeros(grid.n());
    for (k, &(c, w, a, ph)) in p.iter().enumerate() {
        let z = C64::from_polar(a, ph);
        for (v, &r) in u.c[k].values.iter_mut().zip(grid.r()) {
            *v = z * (-((r - c) / w).powi(2)).exp();
        }
    }
    u
}

fn bump_params() -> impl Strategy<Value = [(f64, f64, f64, f64); 3]> {
    let one = (0.0..5.0f64, 0.3..3.0f64, 0.05..2.0f64, -PI..PI);
    [one.clone(), one.clone(), one]
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn canonical_phases_are_a_lattice_reduction(eta in -20.0..20.0f64, theta in -20.0..20.0f64) {
        let (e, t) = canonical_phases(eta, theta);
        prop_assert!(e > -PI / 2.0 - 1e-12 && e <= PI / 2.0 + 1e-12);
        prop_assert!(t > -PI - 1e-12 && t <= PI + 1e-12);
        // the three component phases are unchanged modulo 2 pi
        for (a, b) in [(eta + theta, e + t), (2.0 * eta, 2.0 * e), (2.0 * theta, 2.0 * t)] {
            prop_assert!(wrap(a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
        let (e2, t2) = canonical_phases(e, t);
        prop_assert!((e2 - e).abs() < 1e-12 && (t2 - t).abs() < 1e-12);
    }

    #[test]
    fn functionals_are_gauge_invariant(p in bump_params(), eta in -PI..PI, theta in -PI..PI) {
        let f = fixture();
        let u = bumps(&f.grid, &p);
        let v = apply_symmetry(&f.grid, &u, eta, theta, 1.0).unwrap().field;
        let a = report(&f.grid, &u, &f.gs).unwrap();
        let b = report(&f.grid, &v, &f.gs).unwrap();
        prop_assert!((a.k - b.k).abs() <= 1e-12 * a.k);
        prop_assert!((a.p - b.p).abs() <= 1e-12 * a.k * a.k.max(1.0));
        prop_assert!((a.e - (a.k - 2.0 * a.p)).abs() <= 1e-12 * a.k.max(a.p.abs()));
    }

    #[test]
    fn gagliardo_nirenberg_bound(p in bump_params()) {
        let f = fixture();
        let m = f.gs.masses;
        let g_s = 0.5 * m.m1() * (m.m2() * m.m3()).sqrt() * g4_exact().powi(4);
        let u = bumps(&f.grid, &p);
        prop_assert!(report(&f.grid, &u, &f.gs).unwrap().gn_ratio <= g_s * (1.0 + 1e-4));
    }

    #[test]
    fn imaginary_block_is_nonnegative(p in bump_params()) {
        let f = fixture();
        let v = bumps(&f.grid, &p).re_stack();
        let q = f.ops.quad(Part::Imag, &v, &v);
        prop_assert!(q >= -1e-8 * f.ops.h1_dot(&v, &v));
    }

    #[test]
    fn potential_quadratic_forms_diagonalize(u in prop::array::uniform3(-10.0..10.0f64)) {
        let pm = potential_eigendecomposition();
        for (mat, x, d) in [(&pm.m_a, &pm.p_mat, [-1.0, -1.0, 3.0]), (&pm.m_b, &pm.c_mat, [1.0, 1.0, -3.0])] {
            let lhs: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| u[i] * mat[i][j] * u[j]).sum();
            let w = mix3(x, &u, true);
            let rhs: f64 = (0..3).map(|j| d[j] * w[j] * w[j]).sum();
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn snapshots_round_trip_bit_exact(n in 16usize..128, r_max in 10.0..1.0e4f64, p in bump_params()) {
        let grid = RadialGrid::stretched(r_max, n, 8.0f64.min(r_max / 2.0)).unwrap();
        let u = bumps(&grid, &p);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &grid, &u).unwrap();
        prop_assert_eq!(buf.len(), 32 + 48 * n);
        let (g2, u2) = read_snapshot(buf.as_slice()).unwrap();
        prop_assert_eq!(g2.r(), grid.r());
        prop_assert_eq!(u2, u);
    }

    #[test]
    fn richardson_is_exact_on_second_order_sequences(a in -5.0..5.0f64, b in -50.0..50.0f64) {
        let ns = [256usize, 512, 1024];
        let v: Vec<f64> = ns.iter().map(|&n| a + b / (n * n) as f64).collect();
        let r = richardson(&ns, &v);
        prop_assert!((r.extrapolated[1] - a).abs() < 1e-12 * (1.0 + a.abs() + b.abs()));
    }
}
