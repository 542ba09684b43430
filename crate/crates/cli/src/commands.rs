use std::collections::BTreeMap;
use std::io;

use asym_core::imbedding::{self, SweepPoint};
use asym_core::kernel::{build_kernel, effective_params, energy_from_velocity};
use asym_core::nonlocal::{self, solve_converged};
use asym_core::optimizer::{self, DeviceTarget, Init, StepPolicy};
use asym_core::output::{fmt_num, CsvTable};
use asym_core::semiclassical::integrate_trajectory;
use asym_core::symmetry::{classify_profile, classify_with_energy};
use asym_core::{Coefficients, Error, ErrorClass, ProfileFile, RabiProfile, Side, Symmetry, Tolerances};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::emit::{config_comment, write_json, write_table};
use crate::random::random_case;

/// Flux residual allowed by `verify`.
pub const FLUX_TOL: f64 = 1e-6;
/// Allowed violation of the unitarity bounds.
pub const BOUND_TOL: f64 = 1e-8;
/// Allowed difference of amplitude moduli between the two solvers.
pub const ORACLE_TOL: f64 = 1e-3;

const ORACLE_MAX_GRID: usize = 6401;
const ORACLE_TARGET: f64 = 1e-5;

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(e) => match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Numerical => 3,
                ErrorClass::Physics => 4,
            },
            Failure::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<i32, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Core(Error::InvalidInput(msg.into()))
}

fn tolerances(rtol: f64) -> Result<Tolerances, Failure> {
    if !(rtol > 0.0 && rtol < 1.0) {
        return Err(invalid(format!("--tol must lie in (0, 1), got {rtol}")));
    }
    Ok(Tolerances::new(rtol, rtol * 1e-3))
}

fn positive_velocity(v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("velocity must be positive, got {v}")))
    }
}

fn velocity(given: Option<f64>, source: &ProfileSource) -> Result<f64, Failure> {
    let v = given
        .or_else(|| source.default_velocity())
        .ok_or_else(|| invalid("--v-over-vd is required unless a preset is used"))?;
    positive_velocity(v)
}

fn coefficient_fields(c: &Coefficients) -> [(&'static str, f64); 6] {
    [
        ("T2l", c.t_left),
        ("T2r", c.t_right),
        ("R2l", c.r_left),
        ("R2r", c.r_right),
        ("absorb_l", c.absorb_left()),
        ("absorb_r", c.absorb_right()),
    ]
}

fn coefficient_json(c: &Coefficients) -> serde_json::Value {
    coefficient_fields(c).into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>().into()
}

fn names<T: Copy>(values: &[Option<T>; 8]) -> BTreeMap<&'static str, T> {
    Symmetry::ALL.iter().filter_map(|s| values[s.index()].map(|v| (s.name(), v))).collect()
}

pub fn classify<C: Serialize>(args: &ClassifyArgs, config: &C) -> Outcome {
    let profile = args.source.load()?;
    let report = match args.v_over_vd {
        Some(v) => {
            let v = positive_velocity(v)?;
            let params = effective_params(&profile, energy_from_velocity(v))?;
            classify_with_energy(&profile, 2.0 * v, params.mu, args.grid, args.tol)?
        }
        None => classify_profile(&profile, args.grid, args.tol)?,
    };
    let flags: BTreeMap<_, _> = Symmetry::ALL.iter().map(|s| (s.name(), report.has(*s))).collect();
    let value = json!({
        "config": config_comment(config),
        "symmetries": report.present().iter().map(|s| s.name()).collect::<Vec<_>>(),
        "flags": flags,
        "phases": names(&report.phases),
        "residuals": names(&report.residuals),
        "degenerate": report.degenerate,
        "energy_checked": report.energy_checked,
        "q": report.q.map(|q| [q.re, q.im]),
        "allowed_devices": report.allowed.iter().map(|d| d.label()).collect::<Vec<_>>(),
        "lattice_consistent": report.lattice_consistent(),
    });
    write_json(&value, args.out.as_deref())?;
    Ok(0)
}

pub fn solve<C: Serialize>(args: &SolveArgs, config: &C) -> Outcome {
    let profile = args.source.load()?;
    let v = velocity(args.v_over_vd, &args.source)?;
    let tol = tolerances(args.tol)?;
    let (coefficients, flux) = match args.solver {
        Solver::Imbedding => {
            let m = imbedding::solve_profile(&profile, v, tol)?;
            (m.coefficients(), Some(m.outgoing_flux()))
        }
        Solver::Nonlocal => (nonlocal::solve_both(&profile, v, args.grid)?.coefficients(), None),
    };
    let mut line = format!("v_over_vd={}", fmt_num(v));
    for (k, x) in coefficient_fields(&coefficients) {
        line.push_str(&format!(" {k}={}", fmt_num(x)));
    }
    if let Some((l, r)) = flux {
        line.push_str(&format!(" flux_l={} flux_r={}", fmt_num(l), fmt_num(r)));
    }
    println!("{line}");
    if let Some(path) = &args.output.out {
        let table = nonlocal::coefficients_to_csv(&[(v, coefficients)]);
        write_table(&table, &config_comment(config), args.output.format, Some(path))?;
    }
    Ok(0)
}

fn sweep_velocities(args: &SweepArgs) -> Result<Vec<f64>, Failure> {
    if let Some(v) = args.v_over_vd {
        return Ok(vec![positive_velocity(v)?]);
    }
    let design = args.source.default_velocity();
    let lo = args.v_min.or(design.map(|v| 0.8 * v));
    let hi = args.v_max.or(design.map(|v| 1.2 * v));
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return Err(invalid("--v-min and --v-max are required unless a preset is used"));
    };
    positive_velocity(lo)?;
    positive_velocity(hi)?;
    if lo > hi {
        return Err(invalid(format!("--v-min ({lo}) exceeds --v-max ({hi})")));
    }
    match args.v_steps {
        0 => Err(invalid("--v-steps must be at least 1")),
        1 => Ok(vec![lo]),
        n => Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()),
    }
}

pub fn sweep<C: Serialize>(args: &SweepArgs, config: &C) -> Outcome {
    let profile = args.source.load()?;
    let velocities = sweep_velocities(args)?;
    let tol = tolerances(args.tol)?;
    let points: Vec<SweepPoint<f64>> = match args.solver {
        Solver::Imbedding => imbedding::sweep_velocity(&profile, &velocities, tol),
        Solver::Nonlocal => velocities
            .par_iter()
            .map(|&v| SweepPoint {
                velocity_ratio: v,
                result: nonlocal::solve_both(&profile, v, args.grid).map(|s| s.coefficients()),
            })
            .collect(),
    };
    let mut failed = 0;
    for p in &points {
        if let Err(e) = &p.result {
            eprintln!("warning: v_over_vd={}: {e}", fmt_num(p.velocity_ratio));
            failed += 1;
        }
    }
    if failed == points.len() {
        let p = points.into_iter().next().expect("at least one velocity");
        return Err(p.result.expect_err("every point failed").into());
    }
    let table = imbedding::sweep_to_csv(&points);
    write_table(&table, &config_comment(config), args.output.format, args.output.out.as_deref())?;
    eprintln!("sweep: {} points, {failed} failed", points.len());
    Ok(0)
}

pub fn kernel<C: Serialize>(args: &KernelArgs, config: &C) -> Outcome {
    let profile = args.source.load()?;
    let v = velocity(args.v_over_vd, &args.source)?;
    let k = build_kernel(&profile, energy_from_velocity(v), args.grid)?;
    write_table(&k.to_csv(), &config_comment(config), args.output.format, args.output.out.as_deref())?;
    eprintln!(
        "kernel: n={} max|V|={} transpose_residual={} parity_transpose_residual={}",
        k.n(),
        fmt_num(k.max_abs()),
        fmt_num(k.transpose_residual()),
        fmt_num(k.parity_transpose_residual())
    );
    Ok(0)
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
    }
}

pub fn semiclassical<C: Serialize>(args: &SemiclassicalArgs, config: &C) -> Outcome {
    let profile = args.source.load()?;
    let v = velocity(args.v_over_vd, &args.source)?;
    let tol = tolerances(args.tol)?;
    let runs = args
        .side
        .sides()
        .iter()
        .map(|&side| integrate_trajectory(&profile, v, side, None, args.samples, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let table = if let [run] = runs.as_slice() {
        run.to_csv()
    } else {
        let mut header = vec!["t_over_tau"];
        for run in &runs {
            header.push(if run.side == Side::Left { "pop_ground_left" } else { "pop_ground_right" });
            header.push(if run.side == Side::Left { "pop_excited_left" } else { "pop_excited_right" });
        }
        let mut t = CsvTable::new(&header);
        let columns: Vec<Vec<(f64, f64)>> = runs.iter().map(|r| r.populations().collect()).collect();
        for (i, &time) in runs[0].times.iter().enumerate() {
            let mut row = vec![time];
            for c in &columns {
                row.extend([c[i].0, c[i].1]);
            }
            t.push(row);
        }
        t
    };
    write_table(&table, &config_comment(config), args.output.format, args.output.out.as_deref())?;
    for run in &runs {
        eprintln!(
            "{}: final ground population {} (norm drift {})",
            side_name(run.side),
            fmt_num(run.final_ground_population()),
            fmt_num(run.max_norm_deviation())
        );
    }
    Ok(0)
}

pub fn optimize<C: Serialize>(args: &OptimizeArgs, config: &C) -> Outcome {
    let kind = args.device.kind();
    let ansatz = args.ansatz.map(AnsatzArg::ansatz).unwrap_or(kind.default_ansatz());
    let v = positive_velocity(args.v_over_vd.unwrap_or(args.device.velocity()))?;
    let mut target = DeviceTarget::new(kind, v, ansatz)?;
    target.robust = args.robust;
    target.tol = tolerances(args.tol)?;
    let init = match args.init {
        InitArg::Auto => Init::Auto,
        InitArg::File => {
            let path = args.profile.as_deref().ok_or_else(|| invalid("--init file needs --profile"))?;
            let start = load_profile(path)?;
            Init::Explicit(target.adopt_profile(&start)?)
        }
    };
    let state = optimizer::optimize(&target, init, args.budget, StepPolicy::default())?;
    let names = target.parameter_names();
    let best = target.profile(&state.theta)?;
    let coefficients = imbedding::solve_profile(&best, v, target.tol)?.coefficients();
    let profile_json: serde_json::Value = serde_json::to_value(ProfileFile::from(&best)).expect("profile serializes");
    if let Some(path) = &args.out {
        write_json(&profile_json, Some(path))?;
    }
    if let Some(path) = &args.log {
        write_table(&state.log_csv(names), &config_comment(config), args.format, Some(path))?;
    }
    let theta: serde_json::Map<_, _> = names.iter().zip(&state.theta).map(|(n, x)| (n.to_string(), json!(x))).collect();
    let mut summary = json!({
        "config": config_comment(config),
        "device": kind,
        "ansatz": ansatz,
        "objective": state.objective,
        "ideal": kind.ideal(),
        "theta": theta,
        "width": target.width,
        "coefficients": coefficient_json(&coefficients),
        "iterations": state.iterations,
        "evaluations": state.evaluations,
        "stop": state.stop,
        "stalled": state.stalled,
        "monotone": state.is_monotone(),
    });
    if args.out.is_none() {
        summary["profile"] = profile_json;
    }
    write_json(&summary, None)?;
    Ok(0)
}

/// Outcome of one `verify` check.
struct Check {
    name: &'static str,
    pass: Option<bool>,
    detail: String,
}

impl Check {
    fn line(&self) -> String {
        let status = match self.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        format!("{status} {} {}", self.name, self.detail)
    }
}

fn verify_case(args: &VerifyArgs) -> Result<(RabiProfile, f64, bool), Failure> {
    match (&args.profile, args.preset, args.seed) {
        (Some(path), _, _) => {
            let p = load_profile(path)?;
            let v = args.v_over_vd.ok_or_else(|| invalid("--v-over-vd is required with --profile"))?;
            Ok((p, positive_velocity(v)?, false))
        }
        (None, Some(d), _) => Ok((d.profile(), positive_velocity(args.v_over_vd.unwrap_or(d.velocity()))?, false)),
        (None, None, Some(seed)) => {
            let (p, v) = random_case(seed);
            Ok((p, positive_velocity(args.v_over_vd.unwrap_or(v))?, true))
        }
        (None, None, None) => Err(invalid("one of --profile, --preset or --seed is required")),
    }
}

pub fn verify<C: Serialize>(args: &VerifyArgs, config: &C) -> Outcome {
    let (profile, v, random) = verify_case(args)?;
    let tol = tolerances(args.tol)?;
    println!("# {}", config_comment(config));
    if random {
        let file = serde_json::to_string(&ProfileFile::from(&profile)).expect("profile serializes");
        println!("# profile {file} v_over_vd={}", fmt_num(v));
    }
    let m = imbedding::solve_profile(&profile, v, tol)?;
    let mut checks = Vec::new();

    let open = 4.0 * v * v + 8.0 * profile.detuning > 0.0;
    let (fl, fr) = m.outgoing_flux();
    let residual = (fl - 1.0).abs().max((fr - 1.0).abs());
    checks.push(if profile.gamma == 0.0 && open {
        Check {
            name: "flux",
            pass: Some(residual <= FLUX_TOL),
            detail: format!(
                "residual={} left={} right={} tol={}",
                fmt_num(residual),
                fmt_num(fl),
                fmt_num(fr),
                fmt_num(FLUX_TOL)
            ),
        }
    } else {
        Check { name: "flux", pass: None, detail: "needs gamma = 0 and an open excited channel".into() }
    });

    let excess = m.unitarity_excess();
    let worst = excess.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check {
        name: "bounds",
        pass: Some(worst <= BOUND_TOL),
        detail: format!(
            "max_excess={} [{}] tol={}",
            fmt_num(worst),
            excess.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(" "),
            fmt_num(BOUND_TOL)
        ),
    });

    checks.push(match solve_converged(&profile, v, args.grid, ORACLE_MAX_GRID, ORACLE_TARGET) {
        Ok(c) => {
            let s = c.solution;
            let diffs = [
                (m.t_left().norm() - s.left.t.norm()).abs(),
                (m.r_left().norm() - s.left.r.norm()).abs(),
                (m.t_right().norm() - s.right.t.norm()).abs(),
                (m.r_right().norm() - s.right.r.norm()).abs(),
            ];
            let worst = diffs.iter().cloned().fold(0.0, f64::max);
            Check {
                name: "oracle",
                pass: Some(worst <= ORACLE_TOL),
                detail: format!(
                    "max_modulus_diff={} grid={} extrapolation_error={} tol={}",
                    fmt_num(worst),
                    c.finest_n,
                    fmt_num(c.error_estimate),
                    fmt_num(ORACLE_TOL)
                ),
            }
        }
        Err(e) => Check { name: "oracle", pass: Some(false), detail: format!("non-local solver failed: {e}") },
    });

    for c in &checks {
        println!("{}", c.line());
    }
    Ok(if checks.iter().any(|c| c.pass == Some(false)) { 1 } else { 0 })
}
