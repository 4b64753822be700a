//! Property tests of the scheme's structural estimates on random data.

use proptest::prelude::*;
use relaxchain::diagnostics::{matrix_audit, paired_run};
use relaxchain::equilibrium::EquilibriumMap;
use relaxchain::kinetics::KineticsModel;
use relaxchain::refsolver::{ReferenceSolver, ScalarState};
use relaxchain::scheme::{cell_residual, solve_cell_alloc, GridState, Scheme, SchemeParams};

const CELLS: usize = 48;

fn cubic3() -> KineticsModel {
    KineticsModel::cubic_chain(vec![1.0, 0.0, -0.5], &[1.0, 0.5], &[1.0, 1.5]).unwrap()
}

/// Piecewise-constant data in the middle third, zero elsewhere.
fn data(vals: &[f64], r: usize) -> GridState {
    let mut u = vec![0.0; CELLS * r];
    let pieces = vals.len() / r;
    for j in CELLS / 3..2 * CELLS / 3 {
        let k = (j - CELLS / 3) * pieces / (CELLS / 3);
        u[j * r..(j + 1) * r].copy_from_slice(&vals[k * r..(k + 1) * r]);
    }
    GridState::new(0.0, 1.0 / CELLS as f64, r, u).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tv_sup_and_mass(vals in proptest::collection::vec(-1.5f64..1.5, 12), eps in 1e-4f64..1.0) {
        let u0 = data(&vals, 3);
        let scheme = Scheme::new(cubic3(), SchemeParams::with_eps(eps), u0.dx).unwrap();
        let (tv0, m0) = (u0.total_variation(), u0.mass());
        let end = scheme.run(u0, 10.0 * scheme.dt(), |prev, next, _| {
            assert!(next.total_variation() <= prev.total_variation() + 1e-10);
            assert!(next.sup() <= tv0 + 1e-10);
            Ok(())
        }).unwrap();
        prop_assert!((end.mass() - m0).abs() <= 1e-12);
    }

    #[test]
    fn contraction(a in proptest::collection::vec(-1.0f64..1.0, 12),
                   b in proptest::collection::vec(-1.0f64..1.0, 12),
                   eps in 1e-3f64..1.0) {
        let scheme = Scheme::new(cubic3(), SchemeParams::with_eps(eps), 1.0 / CELLS as f64).unwrap();
        let (d, _, _) = paired_run(&scheme, data(&a, 3), data(&b, 3), 8.0 * scheme.dt()).unwrap();
        for w in d.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10);
        }
    }

    #[test]
    fn cell_solve_meets_tolerance(rhs in proptest::collection::vec(-2.0f64..2.0, 3), tau in 1e-3f64..1e3) {
        let model = cubic3();
        let params = SchemeParams::default();
        let (w, report) = solve_cell_alloc(&model, &params, tau, &rhs).unwrap();
        prop_assert!(report.residual <= params.fp_tol || report.at_floor);
        prop_assert!(cell_residual(&model, tau, &rhs, &w) <= 1e-12 * (1.0 + tau));
        let mass: f64 = rhs.iter().sum::<f64>() - w.iter().sum::<f64>();
        prop_assert!(mass.abs() <= 1e-14);
    }

    #[test]
    fn inverse_is_stochastic(v in proptest::collection::vec(-2.0f64..2.0, 4),
                             w in proptest::collection::vec(-2.0f64..2.0, 4),
                             tau in 0.0f64..1e4) {
        let model = KineticsModel::cubic_chain(vec![1.0, 0.5, 0.0, -1.0], &[1.0, 2.0, 0.5], &[0.5, 1.0, 1.5]).unwrap();
        let rep = matrix_audit(&model, &[(v, w)], &[tau]).unwrap();
        prop_assert!(rep.pass, "{:?}", rep);
    }

    #[test]
    fn reference_is_tvd(vals in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let model = KineticsModel::cubic_chain(vec![1.0, -1.0], &[1.0], &[0.5]).unwrap();
        let mut cells = vec![0.0; CELLS];
        for (j, c) in cells.iter_mut().enumerate().take(2 * CELLS / 3).skip(CELLS / 3) {
            *c = vals[(j - CELLS / 3) * 6 / (CELLS / 3)];
        }
        let s0 = ScalarState::new(0.0, 1.0 / CELLS as f64, cells).unwrap();
        let solver = ReferenceSolver::for_state(EquilibriumMap::new(model), &s0, 513).unwrap();
        let dt = solver.max_dt(s0.dx, 0.9);
        let mut s = s0.clone();
        for _ in 0..10 {
            let next = solver.step(&s, dt).unwrap();
            prop_assert!(next.total_variation() <= s.total_variation() + 1e-12);
            s = next;
        }
        prop_assert!((s.mass() - s0.mass()).abs() <= 1e-12);
    }
}
