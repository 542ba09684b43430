//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use asym_core::imbedding::{default_tolerances, solve, solve_profile};
use asym_core::kernel::{build_kernel, effective_params, energy_from_velocity};
use asym_core::nonlocal::solve_converged;
use asym_core::optimizer::{gradient_check, objective, optimize, DeviceKind, DeviceTarget, Init, StepPolicy};
use asym_core::profile::reference;
use asym_core::semiclassical::{estimate_parameters, integrate_trajectory, RotationModel, RotationOrder, SquarePulse};
use asym_core::symmetry::classify_with_energy;
use asym_core::{Ansatz, Complex, GaussianTerm, RabiProfile, ScatterJob, Side, Symmetry, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn run(number: usize, name: &str, budget: Duration, check: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = check();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = v.pass && in_time;
    let timing = if in_time {
        format!("{:.2}s", elapsed.as_secs_f64())
    } else {
        format!("{:.2}s exceeds {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64())
    };
    println!("criterion {number} {name}: {} ({}; {timing})", if pass { "PASS" } else { "FAIL" }, v.detail);
    pass
}

/// Decay-free Gaussian sum with an open excited channel, and a velocity in `[v_lo, v_hi)`.
fn random_case(rng: &mut ChaCha8Rng, v_lo: f64, v_hi: f64, strength: f64) -> (RabiProfile, f64) {
    let v = (rng.gen_range(v_lo.ln()..v_hi.ln())).exp();
    let count = rng.gen_range(1..=4);
    let scale = strength * v;
    let terms = (0..count)
        .map(|_| {
            let weight = Complex::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
            GaussianTerm::new(weight, rng.gen_range(-0.4..0.4), rng.gen_range(0.06..0.3)).unwrap()
        })
        .collect();
    // open channel: 4 v^2 + 8 Delta > 0
    let detuning = rng.gen_range(-0.45..3.0) * v * v;
    (RabiProfile::new(terms, detuning, 0.0).unwrap(), v)
}

fn free_propagation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tol = default_tolerances();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let kbar = rng.gen_range(0.5_f64.ln()..2000.0_f64.ln()).exp();
        // i Gammabar = 8 tau Delta keeps kappa_2 real and positive
        let open = rng.gen_range(0.05..4.0);
        let gammabar = Complex::new(0.0, -(open - 1.0) * kbar * kbar);
        let m = solve(&ScatterJob::free(kbar, gammabar), tol).unwrap();
        let c = m.coefficients();
        for e in [c.t_left - 1.0, c.t_right - 1.0, c.r_left, c.r_right] {
            worst = worst.max(e.abs());
        }
    }
    verdict(worst <= 1e-9, format!("max deviation {worst:.2e} over 50 cases"))
}

fn flux_and_bounds() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tol = Tolerances::new(1e-10, 1e-13);
    let (mut flux, mut excess) = (0.0_f64, f64::NEG_INFINITY);
    for _ in 0..100 {
        let (p, v) = random_case(&mut rng, 1.0, 400.0, 8.0);
        let m = solve_profile(&p, v, tol).unwrap();
        let (l, r) = m.outgoing_flux();
        flux = flux.max((l - 1.0).abs()).max((r - 1.0).abs());
        excess = m.unitarity_excess().into_iter().fold(excess, f64::max);
    }
    verdict(flux <= 1e-6 && excess <= 1e-8, format!("max flux residual {flux:.2e}, max bound excess {excess:.2e}"))
}

fn two_solvers() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tol = Tolerances::new(1e-10, 1e-13);
    let (mut worst, mut worst_err, mut finest) = (0.0_f64, 0.0_f64, 0);
    for _ in 0..20 {
        let (p, v) = random_case(&mut rng, 2.0, 15.0, 4.0);
        let m = solve_profile(&p, v, tol).unwrap();
        let c = solve_converged(&p, v, 201, 6401, 1e-5).unwrap();
        let s = c.solution;
        for d in [
            m.t_left().norm() - s.left.t.norm(),
            m.r_left().norm() - s.left.r.norm(),
            m.t_right().norm() - s.right.t.norm(),
            m.r_right().norm() - s.right.r.norm(),
        ] {
            worst = worst.max(d.abs());
        }
        worst_err = worst_err.max(c.error_estimate);
        finest = finest.max(c.finest_n);
    }
    verdict(
        worst <= 1e-3 && worst_err <= 1e-4,
        format!("max modulus difference {worst:.2e}, max extrapolation error {worst_err:.2e}, finest grid {finest}"),
    )
}

fn transmit_absorb() -> Verdict {
    let p = RabiProfile::transmit_absorb();
    let tol = default_tolerances();
    let c = solve_profile(&p, reference::transmit_absorb::V_OVER_VD, tol).unwrap().coefficients();
    let at_design = c.t_left >= 0.95 && c.t_right <= 0.05 && c.r_left <= 0.05 && c.r_right <= 0.05;
    let band = (0..=40)
        .map(|i| solve_profile(&p, 380.0 + i as f64, tol).unwrap().coefficients().t_left)
        .fold(f64::INFINITY, f64::min);
    verdict(
        at_design && band >= 0.9,
        format!(
            "T2l={:.4} T2r={:.4} R2l={:.2e} R2r={:.2e}; min T2l on [380, 420] = {band:.4}",
            c.t_left, c.t_right, c.r_left, c.r_right
        ),
    )
}

fn reflect_absorb() -> Verdict {
    let p = RabiProfile::reflect_absorb();
    let c = solve_profile(&p, reference::reflect_absorb::V_OVER_VD, default_tolerances()).unwrap().coefficients();
    verdict(
        c.r_left >= 0.9 && c.absorb_right() >= 0.9,
        format!(
            "R2l={:.4} absorb_r={:.4} (T2l={:.4} T2r={:.4} R2r={:.4} absorb_l={:.4})",
            c.r_left,
            c.absorb_right(),
            c.t_left,
            c.t_right,
            c.r_right,
            c.absorb_left()
        ),
    )
}

fn half_transmit_reflect_absorb() -> Verdict {
    let p = RabiProfile::half_transmit_reflect_absorb();
    let v = reference::half_transmit_reflect_absorb::V_OVER_VD;
    let c = solve_profile(&p, v, default_tolerances()).unwrap().coefficients();
    let half = 0.45..=0.55;
    verdict(
        half.contains(&c.t_left) && half.contains(&c.r_left) && c.absorb_right() >= 0.9,
        format!(
            "T2l={:.4} R2l={:.4} absorb_r={:.4} (T2r={:.4} R2r={:.4})",
            c.t_left,
            c.r_left,
            c.absorb_right(),
            c.t_right,
            c.r_right
        ),
    )
}

fn classifier() -> Verdict {
    let cases = [
        (RabiProfile::transmit_absorb(), reference::transmit_absorb::V_OVER_VD, vec![Symmetry::I, Symmetry::VIII]),
        (RabiProfile::reflect_absorb(), reference::reflect_absorb::V_OVER_VD, vec![Symmetry::I, Symmetry::VI]),
        (
            RabiProfile::half_transmit_reflect_absorb(),
            reference::half_transmit_reflect_absorb::V_OVER_VD,
            vec![Symmetry::I],
        ),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (p, v, expected) in cases {
        let energy = energy_from_velocity(v);
        let mu = effective_params(&p, energy).unwrap().mu;
        let report = classify_with_energy(&p, 2.0 * v, mu, 1024, None).unwrap();
        let found = report.present();
        let k = build_kernel(&p, energy, 201).unwrap();
        let (vi, viii) = (k.transpose_residual(), k.parity_transpose_residual());
        // each relation holds to 1e-8 exactly when the class is present
        let kernel_ok = (vi <= 1e-8) == report.has(Symmetry::VI) && (viii <= 1e-8) == report.has(Symmetry::VIII);
        pass &= found == expected && kernel_ok;
        let names: Vec<_> = found.iter().map(|s| s.name()).collect();
        notes.push(format!("{{{}}} VI-res {vi:.1e} VIII-res {viii:.1e}", names.join(",")));
    }
    verdict(pass, notes.join("; "))
}

fn semiclassical() -> Verdict {
    let tol = Tolerances::new(1e-11, 1e-14);
    let p = RabiProfile::transmit_absorb();
    let v0 = reference::transmit_absorb::V_OVER_VD;
    let left = integrate_trajectory(&p, v0, Side::Left, None, 201, tol).unwrap().final_ground_population();
    let right = integrate_trajectory(&p, v0, Side::Right, None, 201, tol).unwrap().final_ground_population();
    let trajectory_ok = left >= 0.9 && right <= 0.1;

    let mut rotation_diff: f64 = 0.0;
    let mut beta_ok = true;
    for delta in [1.0, 90.0, 1413.01] {
        let model = RotationModel::canonical(delta);
        beta_ok &= (model.beta() - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-12;
        for v in [0.5, 8.0, 400.0] {
            let pulse = SquarePulse::from_model(&model, v).unwrap();
            for side in [Side::Left, Side::Right] {
                let run = integrate_trajectory(&pulse, v, side, None, 11, tol).unwrap();
                let (g, e) = model.compose(RotationOrder::for_side(side)).populations;
                let (gd, ed) = run.populations().last().unwrap();
                rotation_diff = rotation_diff.max((g - gd).abs()).max((e - ed).abs());
            }
        }
    }

    let est = estimate_parameters(v0, reference::WIDTH).unwrap();
    let a_err = (est.amplitude / reference::transmit_absorb::A - 1.0).abs();
    let d_err = (est.detuning / reference::transmit_absorb::DETUNING - 1.0).abs();
    verdict(
        trajectory_ok && beta_ok && rotation_diff <= 1e-6 && a_err <= 0.1 && d_err <= 0.1,
        format!(
            "ground population left {left:.4} right {right:.4}; rotation vs TDSE {rotation_diff:.1e}; \
             estimate a={:.1} ({:.1}%) delta={:.1} ({:.1}%)",
            est.amplitude,
            100.0 * a_err,
            est.detuning,
            100.0 * d_err
        ),
    )
}

fn optimizer() -> Verdict {
    let target =
        DeviceTarget::new(DeviceKind::TransmitAbsorb, reference::transmit_absorb::V_OVER_VD, Ansatz::Viii).unwrap();
    let policy = StepPolicy::default();
    let state = optimize(&target, Init::Auto, 500, policy).unwrap();
    let start = target.auto_init().unwrap();
    let j0 = objective(&target, &start).unwrap();
    let checks = [
        gradient_check(&target, &start, policy.fd_step).unwrap(),
        gradient_check(&target, &state.theta, policy.fd_step).unwrap(),
    ];
    let worst = checks.iter().map(|c| c.max_relative_diff()).fold(0.0, f64::max);
    verdict(
        state.objective >= 0.9 && state.evaluations <= 500 && state.is_monotone() && checks.iter().all(|c| c.passes(0.05)),
        format!(
            "J {j0:.4} -> {:.4} in {} evaluations ({} accepted steps, stop {:?}); monotone {}; gradient check max rel diff {worst:.1e}",
            state.objective,
            state.evaluations,
            state.trace.len() - 1,
            state.stop,
            state.is_monotone()
        ),
    )
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "free propagation", secs(1), free_propagation),
        run(2, "flux and unitarity bounds", secs(60), flux_and_bounds),
        run(3, "two-solver equivalence", secs(300), two_solvers),
        run(4, "T/A device", secs(30), transmit_absorb),
        run(5, "R/A device", secs(600), reflect_absorb),
        run(6, "half-TR/A device", secs(600), half_transmit_reflect_absorb),
        run(7, "symmetry classifier", secs(600), classifier),
        run(8, "semiclassical consistency", secs(600), semiclassical),
        run(9, "optimizer", secs(600), optimizer),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
