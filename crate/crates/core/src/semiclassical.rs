//! Classical-trajectory approximations of the two-level scattering problem.
//!
//! An atom moving at constant speed `±v` sees the time-dependent potential
//! `V(±v t)` and its internal state obeys
//!
//! ```text
//! i dchi/dt = 1/2 [[0, Omega(x)], [Omega(x)^*, -(2 Delta + i gamma)]] chi,   x = ±v t
//! ```
//!
//! in natural units. For two contiguous square pulses the evolution is a
//! product of two Bloch-sphere rotations whose order depends on the side of
//! incidence.

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::nonlocal::Side;
use crate::ode::{integrate, interior, OdeOptions, Tolerances};
use crate::output::CsvTable;
use crate::profile::Coupling;
use crate::scalar::{cplx, expi, Real, C};

/// Default number of output samples of a trajectory.
pub const DEFAULT_SAMPLES: usize = 401;

/// `Omega` on `(-w, 0)`, `i Omega` on `(0, w)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquarePulse<T> {
    pub omega: T,
    pub detuning: T,
    pub half_width: T,
}

impl<T: Real> SquarePulse<T> {
    pub fn new(omega: T, detuning: T, half_width: T) -> Result<Self> {
        if !(half_width > T::zero()) {
            return Err(Error::invalid(format!("pulse width must be positive, got {half_width}")));
        }
        Ok(Self { omega, detuning, half_width })
    }

    /// The pulse traversed at speed `v` in time `model.duration`.
    pub fn from_model(model: &RotationModel<T>, velocity_ratio: T) -> Result<Self> {
        Self::new(model.omega, model.detuning, velocity_ratio * model.duration / T::lit(2.0))
    }
}

impl<T: Real> Coupling<T> for SquarePulse<T> {
    fn rabi(&self, x: T) -> C<T> {
        let z = T::zero();
        if x > -self.half_width && x < z {
            cplx(self.omega, z)
        } else if x >= z && x < self.half_width {
            cplx(z, self.omega)
        } else {
            cplx(z, z)
        }
    }
    fn detuning(&self) -> T {
        self.detuning
    }
    fn gamma(&self) -> T {
        T::zero()
    }
    fn breakpoints(&self) -> Vec<T> {
        vec![-self.half_width, T::zero(), self.half_width]
    }
    fn extent(&self) -> T {
        self.half_width
    }
}

/// Internal-state amplitudes along one classical trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryRun<T> {
    pub side: Side,
    pub velocity_ratio: T,
    /// Times in units of `tau`.
    pub times: Vec<T>,
    /// `(chi_ground, chi_excited)` at each time.
    pub states: Vec<[C<T>; 2]>,
}

impl<T: Real> TrajectoryRun<T> {
    pub fn populations(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.states.iter().map(|s| (s[0].norm_sqr(), s[1].norm_sqr()))
    }

    pub fn final_state(&self) -> [C<T>; 2] {
        *self.states.last().expect("runs hold at least one sample")
    }

    pub fn final_ground_population(&self) -> T {
        self.final_state()[0].norm_sqr()
    }

    /// Largest `| |chi|^2 - 1 |` over the samples.
    pub fn max_norm_deviation(&self) -> T {
        self.populations().fold(T::zero(), |m, (g, e)| m.max((g + e - T::one()).abs()))
    }

    /// `t_over_tau, pop_ground, pop_excited`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["t_over_tau", "pop_ground", "pop_excited"]);
        for (time, (g, e)) in self.times.iter().zip(self.populations()) {
            t.push(vec![time.to_f64_lossy(), g.to_f64_lossy(), e.to_f64_lossy()]);
        }
        t
    }
}

/// Integrates the trajectory equation from `t_span.0` to `t_span.1`,
/// starting in the ground state, and samples `samples` equally spaced times.
/// Without `t_span` the run covers `|t| <= extent / v`.
pub fn integrate_trajectory<T: Real, P: Coupling<T> + ?Sized>(
    profile: &P,
    velocity_ratio: T,
    side: Side,
    t_span: Option<(T, T)>,
    samples: usize,
    tol: Tolerances<T>,
) -> Result<TrajectoryRun<T>> {
    if !(velocity_ratio > T::zero()) || !velocity_ratio.is_finite() {
        return Err(Error::invalid(format!("velocity must be positive, got {velocity_ratio}")));
    }
    if samples < 2 {
        return Err(Error::invalid("a trajectory needs at least 2 samples"));
    }
    let (t0, t1) = t_span.unwrap_or_else(|| {
        let half = profile.extent() / velocity_ratio;
        (-half, half)
    });
    if !(t1 > t0) {
        return Err(Error::invalid("trajectory time span must be increasing"));
    }
    let signed_v = match side {
        Side::Left => velocity_ratio,
        Side::Right => -velocity_ratio,
    };
    let half = T::lit(0.5);
    let decay = cplx(T::lit(2.0) * profile.detuning(), profile.gamma());
    let i = cplx(T::zero(), T::one());
    let rhs = |t: T, y: &[C<T>; 2], seg: (T, T)| -> [C<T>; 2] {
        let w = profile.rabi(signed_v * interior(t, seg.0, seg.1));
        // i dchi/dt = H chi
        let h0 = w * y[1] * half;
        let h1 = w.conj() * y[0] * half - decay * y[1] * half;
        [-i * h0, -i * h1]
    };

    let step = (t1 - t0) / T::from_count(samples - 1);
    let times: Vec<T> =
        (0..samples).map(|j| if j + 1 == samples { t1 } else { t0 + step * T::from_count(j) }).collect();
    // restart the integrator where the coupling jumps
    let mut kinks: Vec<T> =
        profile.breakpoints().into_iter().map(|x| x / signed_v).filter(|&t| t > t0 && t < t1).collect();
    kinks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));

    let mut opts = OdeOptions::with_tol(tol);
    let mut y = [cplx(T::one(), T::zero()), cplx(T::zero(), T::zero())];
    let mut states = Vec::with_capacity(samples);
    states.push(y);
    let mut t = t0;
    let mut next_kink = 0;
    for &target in &times[1..] {
        while next_kink < kinks.len() && kinks[next_kink] <= target {
            let k = kinks[next_kink];
            if k > t {
                let sol =
                    integrate(|s, y: &[C<T>; 2]| rhs(s, y, (t, k)), t, k, y, &opts, |_, _| ControlFlow::Continue(()))?;
                y = sol.y;
                t = k;
                // the scale of the next piece is unrelated to the last step
                opts.h_init = None;
            }
            next_kink += 1;
        }
        if target > t {
            let sol = integrate(
                |s, y: &[C<T>; 2]| rhs(s, y, (t, target)),
                t,
                target,
                y,
                &opts,
                |_, _| ControlFlow::Continue(()),
            )?;
            y = sol.y;
            opts.h_init = Some(sol.last_step);
            t = target;
        }
        states.push(y);
    }
    Ok(TrajectoryRun { side, velocity_ratio, times, states })
}

/// Two square pulses as consecutive rotations `R_j = exp(-i beta n_j.sigma / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationModel<T> {
    pub omega: T,
    pub detuning: T,
    /// Total crossing time of both pulses.
    pub duration: T,
}

/// Order in which the two rotations act.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationOrder {
    /// `R_2 R_1`: the real pulse first, as seen by an atom from the left.
    FirstThenSecond,
    /// `R_1 R_2`: incidence from the right.
    SecondThenFirst,
}

impl RotationOrder {
    pub fn for_side(side: Side) -> Self {
        match side {
            Side::Left => RotationOrder::FirstThenSecond,
            Side::Right => RotationOrder::SecondThenFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationOutcome<T> {
    /// State after the rotations, without the common phase.
    pub state: [C<T>; 2],
    /// `e^{i Delta T / 2}`.
    pub phase: C<T>,
    pub populations: (T, T),
}

impl<T: Real> RotationModel<T> {
    pub fn new(omega: T, detuning: T, duration: T) -> Self {
        Self { omega, detuning, duration }
    }

    /// `Omega / Delta = sqrt(2)` and `T = 4 pi / (3 sqrt(3) Delta)`, giving
    /// `beta = 2 pi / 3`: one order returns the atom to the ground state,
    /// the other leaves it excited.
    pub fn canonical(detuning: T) -> Self {
        let three = T::lit(3.0);
        Self {
            omega: T::SQRT_2() * detuning,
            detuning,
            duration: T::lit(4.0) * T::PI() / (three * three.sqrt() * detuning),
        }
    }

    fn rate(&self) -> T {
        self.omega.hypot(self.detuning)
    }

    pub fn beta(&self) -> T {
        self.duration / T::lit(2.0) * self.rate()
    }

    /// Rotation axes `n_1 = (Omega, 0, Delta) / r`, `n_2 = (0, -Omega, Delta) / r`.
    pub fn axes(&self) -> [[T; 3]; 2] {
        let r = self.rate();
        if r == T::zero() {
            return [[T::zero(), T::zero(), T::one()]; 2];
        }
        [[self.omega / r, T::zero(), self.detuning / r], [T::zero(), -self.omega / r, self.detuning / r]]
    }

    pub fn rotation(&self, axis: [T; 3]) -> Mat2<T> {
        rotation_matrix(self.beta(), axis)
    }

    pub fn compose(&self, order: RotationOrder) -> RotationOutcome<T> {
        let [n1, n2] = self.axes();
        compose_rotations(self.beta(), n1, n2, self.detuning * self.duration / T::lit(2.0), order)
    }
}

/// `cos(beta/2) 1 - i sin(beta/2) n.sigma`.
pub fn rotation_matrix<T: Real>(beta: T, n: [T; 3]) -> Mat2<T> {
    let (s, c) = (beta / T::lit(2.0)).sin_cos();
    Mat2::new(cplx(c, -s * n[2]), cplx(-s * n[1], -s * n[0]), cplx(s * n[1], -s * n[0]), cplx(c, s * n[2]))
}

/// Applies the two rotations about `n1`, `n2` to the ground state in the
/// requested order. `phase_angle` is `Delta T / 2`.
pub fn compose_rotations<T: Real>(
    beta: T,
    n1: [T; 3],
    n2: [T; 3],
    phase_angle: T,
    order: RotationOrder,
) -> RotationOutcome<T> {
    let r1 = rotation_matrix(beta, n1);
    let r2 = rotation_matrix(beta, n2);
    let u = match order {
        RotationOrder::FirstThenSecond => r2 * r1,
        RotationOrder::SecondThenFirst => r1 * r2,
    };
    let state = u.apply([cplx(T::one(), T::zero()), cplx(T::zero(), T::zero())]);
    RotationOutcome {
        state,
        phase: expi(cplx(phase_angle, T::zero())),
        populations: (state[0].norm_sqr(), state[1].norm_sqr()),
    }
}

/// Initial guesses for the symmetry-VIII transmit/absorb device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterEstimate<T> {
    /// `tau * a`
    pub amplitude: T,
    /// `tau * Delta`
    pub detuning: T,
}

/// `a = (v0 / w) sqrt(pi) (2/3)^{3/2}` and `Delta = a / 2`, from matching
/// the Gaussian pulse areas to the canonical rotation model.
pub fn estimate_parameters<T: Real>(velocity_ratio: T, width: T) -> Result<ParameterEstimate<T>> {
    if !(velocity_ratio > T::zero()) || !(width > T::zero()) {
        return Err(Error::invalid(format!("velocity and width must be positive, got {velocity_ratio} and {width}")));
    }
    let two_thirds = T::lit(2.0) / T::lit(3.0);
    let amplitude = velocity_ratio / width * T::PI().sqrt() * two_thirds.powf(T::lit(1.5));
    Ok(ParameterEstimate { amplitude, detuning: amplitude / T::lit(2.0) })
}
