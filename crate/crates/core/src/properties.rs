//! Randomized properties of the solvers and file formats.

use proptest::prelude::*;

use crate::imbedding::{default_tolerances, solve_profile};
use crate::nonlocal::solve_both;
use crate::ode::Tolerances;
use crate::output::fmt_num;
use crate::profile::{GaussianTerm, ProfileFile, RabiProfile};
use crate::scalar::cplx;

fn tol() -> Tolerances<f64> {
    Tolerances::new(1e-10, 1e-13)
}

prop_compose! {
    fn term(scale: f64)(re in -scale..scale, im in -scale..scale, center in -0.4..0.4, width in 0.08..0.3) -> GaussianTerm<f64> {
        GaussianTerm::new(cplx(re, im), center, width).unwrap()
    }
}

prop_compose! {
    /// Decay-free profile with an open excited channel, and a velocity.
    fn case_in(lo: f64, hi: f64)(v in lo..hi)(
        terms in prop::collection::vec(term(6.0 * v), 1..4),
        open in 0.1..2.0_f64,
        v in Just(v),
    ) -> (RabiProfile<f64>, f64) {
        // 4 v^2 + 8 Delta = open * 4 v^2
        let detuning = (open - 1.0) * v * v / 2.0;
        (RabiProfile::new(terms, detuning, 0.0).unwrap(), v)
    }
}

fn case() -> impl Strategy<Value = (RabiProfile<f64>, f64)> {
    case_in(2.0, 60.0)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flux_is_conserved((p, v) in case()) {
        let m = solve_profile(&p, v, tol()).unwrap();
        let (l, r) = m.outgoing_flux();
        prop_assert!(close(l, 1.0, 1e-6) && close(r, 1.0, 1e-6), "flux {l} {r}");
        prop_assert!(m.unitarity_excess().iter().all(|&e| e <= 1e-8));
    }

    #[test]
    fn global_phase_is_irrelevant((p, v) in case(), alpha in 0.0..std::f64::consts::TAU) {
        let a = solve_profile(&p, v, tol()).unwrap().coefficients();
        let b = solve_profile(&p.rotated(alpha), v, tol()).unwrap().coefficients();
        prop_assert!(close(a.t_left, b.t_left, 1e-7) && close(a.t_right, b.t_right, 1e-7));
        prop_assert!(close(a.r_left, b.r_left, 1e-7) && close(a.r_right, b.r_right, 1e-7));
    }

    #[test]
    fn mirror_swaps_sides((p, v) in case()) {
        let a = solve_profile(&p, v, tol()).unwrap().coefficients();
        let b = solve_profile(&p.mirrored(), v, tol()).unwrap().coefficients();
        prop_assert!(close(a.t_left, b.t_right, 1e-7) && close(a.t_right, b.t_left, 1e-7));
        prop_assert!(close(a.r_left, b.r_right, 1e-7) && close(a.r_right, b.r_left, 1e-7));
    }

    #[test]
    fn absorption_only_with_decay((p, v) in case(), gamma in 0.0..50.0_f64) {
        let p = RabiProfile::new(p.terms, p.detuning, gamma).unwrap();
        let m = solve_profile(&p, v, default_tolerances()).unwrap();
        prop_assert!(m.unitarity_excess().iter().all(|&e| e <= 1e-8), "{:?}", m.unitarity_excess());
    }

    #[test]
    fn numbers_round_trip_to_twelve_digits(x in prop::num::f64::NORMAL) {
        let y: f64 = fmt_num(x).parse().unwrap();
        prop_assert!((x - y).abs() <= 5e-12 * x.abs());
    }

    #[test]
    fn profile_files_round_trip((p, _) in case()) {
        let file = ProfileFile::from(&p);
        let back = ProfileFile::from_json(&file.to_json()).unwrap();
        prop_assert_eq!(&file, &back);
        let q: RabiProfile<f64> = back.into_profile().unwrap();
        prop_assert_eq!(q.terms, p.terms);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solvers_agree_on_weak_profiles((p, v) in case_in(2.0, 10.0)) {
        let terms = p.terms.iter().map(|t| GaussianTerm { weight: t.weight * 0.2, ..*t }).collect();
        let weak = RabiProfile::new(terms, p.detuning, 0.0).unwrap();
        let m = solve_profile(&weak, v, tol()).unwrap();
        let s = solve_both(&weak, v, 801).unwrap();
        prop_assert!(close(m.t_left().norm(), s.left.t.norm(), 1e-3));
        prop_assert!(close(m.r_left().norm(), s.left.r.norm(), 1e-3));
        prop_assert!(close(m.t_right().norm(), s.right.t.norm(), 1e-3));
        prop_assert!(close(m.r_right().norm(), s.right.r.norm(), 1e-3));
    }
}
