//! Gradient ascent on the Gaussian ansatz parameters.
//!
//! The parameter vector is `[a, x0, Delta]` for ansatz VIII and
//! `[b, c, x0, Delta]` for VI and I, all in natural units; the Gaussian width
//! and the decay rate stay fixed. Gradients are central finite differences in
//! coordinates scaled by the initial parameter magnitudes, and every step is
//! accepted only if it increases the objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imbedding::{default_tolerances, solve_profile, Coefficients};
use crate::ode::Tolerances;
use crate::output::CsvTable;
use crate::profile::{reference, Ansatz, RabiProfile};
use crate::scalar::Real;
use crate::semiclassical::estimate_parameters;
use crate::symmetry::{Device, Symmetry};

/// Device types the optimizer knows an objective for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeviceKind {
    /// Transmit from the left, absorb from the right.
    #[serde(rename = "ta")]
    TransmitAbsorb,
    /// Reflect from the left, absorb from the right.
    #[serde(rename = "ra")]
    ReflectAbsorb,
    /// Half transmit, half reflect from the left; absorb from the right.
    #[serde(rename = "tra-half")]
    HalfTransmitReflectAbsorb,
}

impl DeviceKind {
    pub fn device(self) -> Device {
        match self {
            DeviceKind::TransmitAbsorb => Device::TransmitAbsorb,
            DeviceKind::ReflectAbsorb => Device::ReflectAbsorb,
            DeviceKind::HalfTransmitReflectAbsorb => Device::TransmitReflectAbsorb,
        }
    }

    /// Ansatz used for this device in the reference designs.
    pub fn default_ansatz(self) -> Ansatz {
        match self {
            DeviceKind::TransmitAbsorb => Ansatz::Viii,
            DeviceKind::ReflectAbsorb => Ansatz::Vi,
            DeviceKind::HalfTransmitReflectAbsorb => Ansatz::I,
        }
    }

    /// Objective value of a perfect device.
    pub fn ideal(self) -> f64 {
        match self {
            DeviceKind::HalfTransmitReflectAbsorb => 0.0,
            _ => 1.0,
        }
    }

    pub fn score<T: Real>(self, c: &Coefficients<T>) -> T {
        let half = T::lit(0.5);
        match self {
            DeviceKind::TransmitAbsorb => c.t_left - c.r_left - c.t_right - c.r_right,
            DeviceKind::ReflectAbsorb => c.r_left - c.t_left - c.t_right - c.r_right,
            DeviceKind::HalfTransmitReflectAbsorb => {
                let (dt, dr) = (c.t_left - half, c.r_left - half);
                -dt * dt - dr * dr - c.t_right - c.r_right
            }
        }
    }
}

/// Symmetries every member of an ansatz family has for generic parameters.
pub fn ansatz_symmetries(ansatz: Ansatz) -> &'static [Symmetry] {
    match ansatz {
        Ansatz::Viii => &[Symmetry::I, Symmetry::VIII],
        Ansatz::Vi => &[Symmetry::I, Symmetry::VI],
        Ansatz::I => &[Symmetry::I],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceTarget<T> {
    pub kind: DeviceKind,
    pub velocity_ratio: T,
    pub ansatz: Ansatz,
    /// Gaussian width `w / d`.
    pub width: T,
    /// `tau * gamma`
    pub gamma: T,
    /// Average the objective over `{0.9, 1, 1.1} v0` instead of `v0` alone.
    pub robust: bool,
    pub tol: Tolerances<T>,
}

impl<T: Real> DeviceTarget<T> {
    /// Fails with [`Error::DeviceForbidden`] when the ansatz symmetries rule
    /// the device out.
    pub fn new(kind: DeviceKind, velocity_ratio: T, ansatz: Ansatz) -> Result<Self> {
        if !(velocity_ratio > T::zero()) || !velocity_ratio.is_finite() {
            return Err(Error::invalid(format!("target velocity must be positive, got {velocity_ratio}")));
        }
        let device = kind.device();
        if !ansatz_symmetries(ansatz).iter().all(|s| device.permitted().contains(s)) {
            return Err(Error::DeviceForbidden {
                device: device.label().to_string(),
                ansatz: ansatz.name().to_string(),
            });
        }
        Ok(Self {
            kind,
            velocity_ratio,
            ansatz,
            width: T::lit(reference::WIDTH),
            gamma: T::zero(),
            robust: false,
            tol: default_tolerances(),
        })
    }

    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self.ansatz {
            Ansatz::Viii => &["a", "x0", "delta"],
            Ansatz::Vi | Ansatz::I => &["b", "c", "x0", "delta"],
        }
    }

    pub fn profile(&self, theta: &[T]) -> Result<RabiProfile<T>> {
        let n = self.parameter_names().len();
        if theta.len() != n {
            return Err(Error::invalid(format!("ansatz {} takes {n} parameters, got {}", self.ansatz, theta.len())));
        }
        let amps = self.ansatz.amplitude_count();
        RabiProfile::preset(self.ansatz, &theta[..amps], theta[amps], self.width, theta[amps + 1], self.gamma)
    }

    /// Reads the ansatz parameters back from a profile of this target's
    /// form, adopting its width and decay rate.
    pub fn adopt_profile(&mut self, profile: &RabiProfile<T>) -> Result<Vec<T>> {
        let mismatch = || Error::invalid(format!("profile is not of the {} ansatz form", self.ansatz));
        let [first, second] = profile.terms.as_slice() else {
            return Err(mismatch());
        };
        let (w0, w1) = (first.weight, second.weight);
        let scale = w0.norm().max(w1.norm()).max(T::min_positive_value());
        let small = |x: T| x.abs() <= T::lit(1e-9) * scale;
        let x0 = second.center;
        let same_shape =
            first.width == second.width && (first.center + x0).abs() <= T::lit(1e-12) * x0.abs().max(T::one());
        let theta = match self.ansatz {
            Ansatz::Viii if small(w0.im) && small(w1.re) && small(w1.im - w0.re) => vec![w0.re, x0, profile.detuning],
            Ansatz::Vi if small(w0.im) && small(w1.im) => vec![w0.re, w1.re, x0, profile.detuning],
            Ansatz::I if small(w0.re) && small(w1.im) => vec![-w0.im, w1.re, x0, profile.detuning],
            _ => return Err(mismatch()),
        };
        if !same_shape {
            return Err(mismatch());
        }
        self.width = first.width;
        self.gamma = profile.gamma;
        Ok(theta)
    }

    fn velocities(&self) -> Vec<T> {
        if self.robust {
            [0.9, 1.0, 1.1].iter().map(|&f| self.velocity_ratio * T::lit(f)).collect()
        } else {
            vec![self.velocity_ratio]
        }
    }

    /// Starting point from the semiclassical estimates: `a`, `Delta` from
    /// the rotation model and `x0 = 0.15`. For two-amplitude ansätze the
    /// estimate seeds `b = a` and `c = 1.2 a` so the profile is not even.
    pub fn auto_init(&self) -> Result<Vec<T>> {
        let est = estimate_parameters(self.velocity_ratio, self.width)?;
        let x0 = T::lit(0.15);
        Ok(match self.ansatz {
            Ansatz::Viii => vec![est.amplitude, x0, est.detuning],
            Ansatz::Vi | Ansatz::I => vec![est.amplitude, T::lit(1.2) * est.amplitude, x0, est.detuning],
        })
    }
}

/// Objective `J(theta)`; 1 (or 0 for the half device) is perfect.
pub fn objective<T: Real>(target: &DeviceTarget<T>, theta: &[T]) -> Result<T> {
    let profile = target.profile(theta)?;
    let vs = target.velocities();
    let mut sum = T::zero();
    for &v in &vs {
        let c = solve_profile(&profile, v, target.tol)?.coefficients();
        sum += target.kind.score(&c);
    }
    Ok(sum / T::from_count(vs.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init<T> {
    Auto,
    Explicit(Vec<T>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy<T> {
    /// First trial step length in scaled coordinates (relative to `|theta0|`).
    pub initial_step: T,
    pub max_halvings: usize,
    /// Central-difference step, relative to each parameter scale.
    pub fd_step: T,
    /// Start each line search at twice the last accepted step (capped at
    /// `initial_step`) instead of at `initial_step`.
    pub adaptive: bool,
}

impl<T: Real> Default for StepPolicy<T> {
    fn default() -> Self {
        Self { initial_step: T::lit(0.1), max_halvings: 8, fd_step: T::lit(1e-4), adaptive: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    LineSearchFailed,
    ZeroGradient,
    Stalled,
}

/// One accepted iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry<T> {
    pub iteration: usize,
    pub evaluations: usize,
    pub objective: T,
    pub theta: Vec<T>,
    pub step: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptState<T> {
    pub theta: Vec<T>,
    pub objective: T,
    pub gradient: Vec<T>,
    pub iterations: usize,
    pub step: T,
    pub evaluations: usize,
    /// Initial point followed by every accepted step.
    pub trace: Vec<TraceEntry<T>>,
    pub stalled: bool,
    pub stop: StopReason,
}

impl<T: Real> OptState<T> {
    /// `iteration, evaluations, J, step, <parameter names...>`.
    pub fn log_csv(&self, names: &[&str]) -> CsvTable {
        let mut header = vec!["iteration", "evaluations", "J", "step"];
        header.extend_from_slice(names);
        let mut t = CsvTable::new(&header);
        for e in &self.trace {
            let mut row =
                vec![e.iteration as f64, e.evaluations as f64, e.objective.to_f64_lossy(), e.step.to_f64_lossy()];
            row.extend(e.theta.iter().map(|x| x.to_f64_lossy()));
            t.push(row);
        }
        t
    }

    /// `true` when the objective never decreases along the trace.
    pub fn is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1].objective >= w[0].objective)
    }
}

struct Counter<'a, T> {
    target: &'a DeviceTarget<T>,
    scale: Vec<T>,
    evaluations: usize,
    budget: usize,
}

impl<T: Real> Counter<'_, T> {
    fn theta(&self, u: &[T]) -> Vec<T> {
        u.iter().zip(&self.scale).map(|(&x, &s)| x * s).collect()
    }

    fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.evaluations)
    }

    fn eval(&mut self, u: &[T]) -> Option<T> {
        self.evaluations += 1;
        objective(self.target, &self.theta(u)).ok().filter(|j| j.is_finite())
    }

    /// Central differences in scaled coordinates, stencil points in parallel.
    fn gradient(&mut self, u: &[T], h: T) -> Vec<T> {
        let n = u.len();
        self.evaluations += 2 * n;
        let points: Vec<Vec<T>> = (0..2 * n)
            .map(|m| {
                let mut p = u.to_vec();
                p[m / 2] += if m % 2 == 0 { h } else { -h };
                self.theta(&p)
            })
            .collect();
        let values: Vec<Option<T>> = points.par_iter().map(|th| objective(self.target, th).ok()).collect();
        (0..n)
            .map(|i| match (values[2 * i], values[2 * i + 1]) {
                (Some(p), Some(m)) if p.is_finite() && m.is_finite() => (p - m) / (T::lit(2.0) * h),
                _ => T::zero(),
            })
            .collect()
    }
}

/// Finite-difference gradient ascent within at most `budget` objective
/// evaluations (finite-difference stencils included).
pub fn optimize<T: Real>(
    target: &DeviceTarget<T>,
    init: Init<T>,
    budget: usize,
    policy: StepPolicy<T>,
) -> Result<OptState<T>> {
    if budget < 1 {
        return Err(Error::invalid("optimization budget must be at least one evaluation"));
    }
    let theta0 = match init {
        Init::Auto => target.auto_init()?,
        Init::Explicit(t) => {
            target.profile(&t)?;
            t
        }
    };
    let scale: Vec<T> = theta0.iter().map(|&x| if x == T::zero() { T::one() } else { x.abs() }).collect();
    let mut counter = Counter { target, scale, evaluations: 0, budget };
    let mut u: Vec<T> = theta0.iter().zip(&counter.scale).map(|(&x, &s)| x / s).collect();
    let mut j = counter.eval(&u).ok_or_else(|| Error::invalid("objective undefined at the initial parameters"))?;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        evaluations: counter.evaluations,
        objective: j,
        theta: theta0.clone(),
        step: T::zero(),
    }];
    let mut gradient = vec![T::zero(); u.len()];
    let mut step = policy.initial_step;
    let mut iterations = 0;
    let stop = loop {
        if counter.remaining() < 2 * u.len() + 1 {
            break StopReason::Budget;
        }
        gradient = counter.gradient(&u, policy.fd_step);
        let gnorm = gradient.iter().fold(T::zero(), |s, g| s + *g * *g).sqrt();
        if gnorm == T::zero() {
            break StopReason::ZeroGradient;
        }
        iterations += 1;
        let mut alpha =
            if policy.adaptive { (step * T::lit(2.0)).min(policy.initial_step) } else { policy.initial_step };
        let mut accepted = false;
        let mut out_of_budget = false;
        for _ in 0..=policy.max_halvings {
            if counter.remaining() == 0 {
                out_of_budget = true;
                break;
            }
            let trial: Vec<T> = u.iter().zip(&gradient).map(|(&x, &g)| x + alpha * g / gnorm).collect();
            if let Some(jt) = counter.eval(&trial) {
                if jt > j {
                    u = trial;
                    j = jt;
                    step = alpha;
                    accepted = true;
                    break;
                }
            }
            alpha /= T::lit(2.0);
        }
        if accepted {
            trace.push(TraceEntry {
                iteration: iterations,
                evaluations: counter.evaluations,
                objective: j,
                theta: counter.theta(&u),
                step,
            });
        } else if out_of_budget {
            break StopReason::Budget;
        } else {
            break StopReason::LineSearchFailed;
        }
    };
    // gradient in the original parameters
    let gradient: Vec<T> = gradient.iter().zip(&counter.scale).map(|(&g, &s)| g / s).collect();
    let stalled = trace.len() == 1;
    Ok(OptState {
        theta: counter.theta(&u),
        objective: j,
        gradient,
        iterations,
        step,
        evaluations: counter.evaluations,
        trace,
        stalled,
        stop: if stalled && stop != StopReason::ZeroGradient { StopReason::Stalled } else { stop },
    })
}

/// Central-difference gradients at steps `h` and `h/2` (scaled coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck<T> {
    pub coarse: Vec<T>,
    pub fine: Vec<T>,
    /// Per component `|coarse - fine| / max(|fine|, 1e-3 max|fine|)`.
    pub relative_diff: Vec<T>,
}

impl<T: Real> GradientCheck<T> {
    pub fn max_relative_diff(&self) -> T {
        self.relative_diff.iter().fold(T::zero(), |m, &d| m.max(d))
    }

    pub fn passes(&self, tolerance: T) -> bool {
        self.max_relative_diff() <= tolerance
    }
}

pub fn gradient_check<T: Real>(target: &DeviceTarget<T>, theta: &[T], h: T) -> Result<GradientCheck<T>> {
    target.profile(theta)?;
    let scale: Vec<T> = theta.iter().map(|&x| if x == T::zero() { T::one() } else { x.abs() }).collect();
    let mut counter = Counter { target, scale, evaluations: 0, budget: usize::MAX };
    let u: Vec<T> = theta.iter().zip(&counter.scale).map(|(&x, &s)| x / s).collect();
    let coarse = counter.gradient(&u, h);
    let fine = counter.gradient(&u, h / T::lit(2.0));
    let floor = fine.iter().fold(T::zero(), |m, g| m.max(g.abs())) * T::lit(1e-3);
    let relative_diff = coarse
        .iter()
        .zip(&fine)
        .map(|(&c, &f)| {
            let denom = f.abs().max(floor);
            if denom == T::zero() {
                T::zero()
            } else {
                (c - f).abs() / denom
            }
        })
        .collect();
    Ok(GradientCheck { coarse, fine, relative_diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::classify_profile;

    fn coeffs(t_left: f64, t_right: f64, r_left: f64, r_right: f64) -> Coefficients<f64> {
        Coefficients { t_left, t_right, r_left, r_right }
    }

    #[test]
    fn perfect_devices_score_ideal() {
        assert_eq!(DeviceKind::TransmitAbsorb.score(&coeffs(1.0, 0.0, 0.0, 0.0)), 1.0);
        assert_eq!(DeviceKind::ReflectAbsorb.score(&coeffs(0.0, 0.0, 1.0, 0.0)), 1.0);
        assert_eq!(DeviceKind::HalfTransmitReflectAbsorb.score(&coeffs(0.5, 0.0, 0.5, 0.0)), 0.0);
        // free propagation transmits both ways
        assert_eq!(DeviceKind::TransmitAbsorb.score(&coeffs(1.0, 1.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn forbidden_combinations() {
        let e = DeviceTarget::new(DeviceKind::ReflectAbsorb, 400.0_f64, Ansatz::Viii).unwrap_err();
        assert!(matches!(e, Error::DeviceForbidden { .. }));
        assert!(DeviceTarget::new(DeviceKind::TransmitAbsorb, 400.0_f64, Ansatz::Vi).is_err());
        assert!(DeviceTarget::new(DeviceKind::TransmitAbsorb, 400.0_f64, Ansatz::I).is_ok());
        assert!(DeviceTarget::new(DeviceKind::HalfTransmitReflectAbsorb, 8.0_f64, Ansatz::I).is_ok());
        assert!(DeviceTarget::new(DeviceKind::HalfTransmitReflectAbsorb, 8.0_f64, Ansatz::Vi).is_err());
    }

    #[test]
    fn zero_coupling_objective() {
        let t = DeviceTarget::new(DeviceKind::TransmitAbsorb, 20.0_f64, Ansatz::Viii).unwrap();
        let j = objective(&t, &[0.0, 0.15, 10.0]).unwrap();
        assert!(j.abs() < 1e-9, "{j}");
    }

    #[test]
    fn single_evaluation_budget() {
        let t = DeviceTarget::new(DeviceKind::TransmitAbsorb, 20.0_f64, Ansatz::Viii).unwrap();
        let s = optimize(&t, Init::Auto, 1, StepPolicy::default()).unwrap();
        assert_eq!(s.evaluations, 1);
        assert!(s.stalled);
        assert_eq!(s.theta, t.auto_init().unwrap());
        assert_eq!(s.objective, objective(&t, &s.theta).unwrap());
    }

    #[test]
    fn ascent_improves_and_keeps_symmetry() {
        let t = DeviceTarget::new(DeviceKind::TransmitAbsorb, 20.0_f64, Ansatz::Viii).unwrap();
        let s = optimize(&t, Init::Explicit(vec![100.0, 0.2, 40.0]), 60, StepPolicy::default()).unwrap();
        assert!(s.evaluations <= 60);
        assert!(s.is_monotone());
        assert!(s.objective > s.trace[0].objective);
        for e in &s.trace {
            let r = classify_profile(&t.profile(&e.theta).unwrap(), 256, None).unwrap();
            assert_eq!(r.present(), vec![Symmetry::I, Symmetry::VIII]);
        }
        let log = s.log_csv(t.parameter_names());
        assert_eq!(log.rows.len(), s.trace.len());
        assert_eq!(log.header.len(), 7);
    }

    #[test]
    fn adopt_round_trip() {
        for (kind, ansatz, theta) in [
            (DeviceKind::TransmitAbsorb, Ansatz::Viii, vec![2618.19, 0.1532, 1413.01]),
            (DeviceKind::ReflectAbsorb, Ansatz::Vi, vec![-244516.1, 167853.9, 0.1679, 193.508]),
            (DeviceKind::HalfTransmitReflectAbsorb, Ansatz::I, vec![102.652, 165.8355, 0.1648, 90.5337]),
        ] {
            let mut t = DeviceTarget::new(kind, 10.0_f64, ansatz).unwrap();
            let p = t.profile(&theta).unwrap();
            assert_eq!(t.adopt_profile(&p).unwrap(), theta);
        }
        let mut t = DeviceTarget::new(DeviceKind::TransmitAbsorb, 10.0_f64, Ansatz::Viii).unwrap();
        assert!(t.adopt_profile(&RabiProfile::half_transmit_reflect_absorb()).is_err());
    }

    #[test]
    fn wrong_parameter_count() {
        let t = DeviceTarget::new(DeviceKind::ReflectAbsorb, 20.0_f64, Ansatz::Vi).unwrap();
        assert!(objective(&t, &[1.0, 2.0, 3.0]).is_err());
        assert_eq!(t.auto_init().unwrap().len(), 4);
    }
}
