//! Two-channel scattering amplitudes by invariant imbedding.
//!
//! The potential is switched on over `[0, eta]` and the right-incidence
//! reflection and transmission matrices are propagated in `eta` from 0 to 1.
//! To avoid the exponential growth of the free solutions in a closed channel
//! the propagation uses the rescaled matrices
//!
//! ```text
//! S(eta) = 1 + h+(eta) R~(eta) h-(eta)^-1
//! T(eta) = h+(0) T~(eta) h-(eta)^-1
//! ```
//!
//! with `h±(x) = diag(e^{±ik x}/sqrt(k), e^{±i kappa x}/sqrt(kappa))`,
//! which obey
//!
//! ```text
//! dS/deta = -2Q + Q S + S [Q + V(eta) S]
//! dT/deta = T [Q + V(eta) S]
//! ```
//!
//! where `Q = i diag(k, kappa)` and `V(eta) = (2i)^-1 diag(1/k, 1/kappa) U(eta)`
//! for the bare coupling matrix `U = [[0, Omega], [Omega^*, 0]]`.
//! The free phase of `T` is split off as `T = P E(eta)` with the unimodular
//! `E = diag(e^{ik eta}, e^{i Re(kappa) eta})`, so that
//!
//! ```text
//! dP/deta = P [Q - Q_E + E V S E^-1],   Q_E = i diag(k, Re kappa)
//! ```
//!
//! is not oscillatory, and without coupling `S = 1`, `P = 1` (open channel)
//! hold exactly.
//! Left incidence is obtained by solving the mirrored potential.

use std::ops::ControlFlow;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::ode::{integrate, interior, OdeError, OdeOptions, Tolerances};
use crate::output::CsvTable;
use crate::profile::Coupling;
use crate::scalar::{cplx, expi, Real, C};
use crate::units::{ChannelWavenumber, ScatterJob};

/// `|S|` beyond which the Riccati propagation is declared blown up.
pub const RICCATI_BLOWUP: f64 = 1e8;

/// Phase between the ground-channel transmission amplitude of the original
/// potential for left incidence and that of its mirror image for right
/// incidence: `T^l = e^{i theta} T~_mirror`. The plane-wave convention
/// `e^{±i kbar xbar}` on `[0, 1]` makes it vanish.
///
/// ```
/// assert_eq!(asym_core::imbedding::MIRROR_TRANSMISSION_PHASE, 0.0);
/// ```
pub const MIRROR_TRANSMISSION_PHASE: f64 = 0.0;

/// Free-space solutions `h±` for one job.
#[derive(Debug, Clone, Copy)]
pub struct FreeSolutions<T> {
    pub kbar: T,
    pub kappa: C<T>,
}

impl<T: Real> FreeSolutions<T> {
    pub fn new(kbar: T, kappa: C<T>) -> Self {
        Self { kbar, kappa }
    }

    fn wavenumbers(&self) -> [C<T>; 2] {
        [cplx(self.kbar, T::zero()), self.kappa]
    }

    pub fn h_plus(&self, x: T) -> Mat2<T> {
        let [k1, k2] = self.wavenumbers();
        Mat2::diag(expi(k1 * x) / k1.sqrt(), expi(k2 * x) / k2.sqrt())
    }

    pub fn h_minus(&self, x: T) -> Mat2<T> {
        let [k1, k2] = self.wavenumbers();
        Mat2::diag(expi(-k1 * x) / k1.sqrt(), expi(-k2 * x) / k2.sqrt())
    }

    fn h_plus_prime(&self, x: T) -> Mat2<T> {
        let [k1, k2] = self.wavenumbers();
        let i = cplx(T::zero(), T::one());
        Mat2::diag(i * k1.sqrt() * expi(k1 * x), i * k2.sqrt() * expi(k2 * x))
    }

    fn h_minus_prime(&self, x: T) -> Mat2<T> {
        let [k1, k2] = self.wavenumbers();
        let i = cplx(T::zero(), T::one());
        Mat2::diag(-i * k1.sqrt() * expi(-k1 * x), -i * k2.sqrt() * expi(-k2 * x))
    }

    /// `W(h+, h-) = h+' h- - h+ h-'`, equal to `2i` times the identity.
    pub fn wronskian(&self, x: T) -> Mat2<T> {
        self.h_plus_prime(x) * self.h_minus(x) - self.h_plus(x) * self.h_minus_prime(x)
    }
}

/// Reflection and transmission matrices for both incidence sides.
///
/// Column `j` holds the amplitudes for incidence in channel `j`
/// (0 = ground, 1 = excited); row `i` the outgoing channel. Excited-channel
/// entries carry the `kappa^{1/2} / kbar^{1/2}` flux normalization and are
/// only proportionality factors when the channel is closed.
#[derive(Debug, Clone, Copy)]
pub struct ChannelMatrices<T> {
    pub r: Mat2<T>,
    pub t: Mat2<T>,
    pub r_tilde: Mat2<T>,
    pub t_tilde: Mat2<T>,
    pub kappa: C<T>,
    pub open: bool,
    /// Sum of local error estimates of both propagations.
    pub error_estimate: T,
}

impl<T: Real> ChannelMatrices<T> {
    pub fn t_left(&self) -> C<T> {
        self.t.get(0, 0)
    }
    pub fn t_right(&self) -> C<T> {
        self.t_tilde.get(0, 0)
    }
    pub fn r_left(&self) -> C<T> {
        self.r.get(0, 0)
    }
    pub fn r_right(&self) -> C<T> {
        self.r_tilde.get(0, 0)
    }

    pub fn coefficients(&self) -> Coefficients<T> {
        Coefficients {
            t_left: self.t_left().norm_sqr(),
            t_right: self.t_right().norm_sqr(),
            r_left: self.r_left().norm_sqr(),
            r_right: self.r_right().norm_sqr(),
        }
    }

    /// Total outgoing probability flux for ground-state incidence from the
    /// left and from the right. Excited-channel flux counts only when open.
    pub fn outgoing_flux(&self) -> (T, T) {
        let excited = |m: &Mat2<T>| if self.open { m.get(1, 0).norm_sqr() } else { T::zero() };
        let left = self.t.get(0, 0).norm_sqr() + self.r.get(0, 0).norm_sqr() + excited(&self.t) + excited(&self.r);
        let right = self.t_tilde.get(0, 0).norm_sqr()
            + self.r_tilde.get(0, 0).norm_sqr()
            + excited(&self.t_tilde)
            + excited(&self.r_tilde);
        (left, right)
    }

    /// The four ground-state bounds `1 >= |a|^2 + |b|^2` implied by unitarity,
    /// returned as `|a|^2 + |b|^2 - 1` (non-positive when satisfied).
    pub fn unitarity_excess(&self) -> [T; 4] {
        let c = self.coefficients();
        [
            c.r_left + c.t_left - T::one(),
            c.r_right + c.t_right - T::one(),
            c.r_right + c.t_left - T::one(),
            c.r_left + c.t_right - T::one(),
        ]
    }
}

/// Squared moduli of the ground-channel amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients<T> {
    pub t_left: T,
    pub t_right: T,
    pub r_left: T,
    pub r_right: T,
}

impl<T: Real> Coefficients<T> {
    pub fn absorb_left(&self) -> T {
        T::one() - self.t_left - self.r_left
    }
    pub fn absorb_right(&self) -> T {
        T::one() - self.t_right - self.r_right
    }
}

/// Right-incidence matrices `R~`, `T~` of one propagation.
#[derive(Debug, Clone, Copy)]
pub struct RightIncidence<T> {
    pub r_tilde: Mat2<T>,
    pub t_tilde: Mat2<T>,
    pub channel: ChannelWavenumber<T>,
    pub error_estimate: T,
    pub steps: usize,
}

/// Left-incidence matrices `R`, `T`.
#[derive(Debug, Clone, Copy)]
pub struct LeftIncidence<T> {
    pub r: Mat2<T>,
    pub t: Mat2<T>,
    pub channel: ChannelWavenumber<T>,
    pub error_estimate: T,
    pub steps: usize,
}

fn default_options<T: Real>(tol: Tolerances<T>) -> OdeOptions<T> {
    OdeOptions::with_tol(tol)
}

/// Default integrator tolerances: relative `1e-9`, absolute `1e-12`.
pub fn default_tolerances<T: Real>() -> Tolerances<T> {
    Tolerances::new(T::lit(1e-9), T::lit(1e-12))
}

/// Propagates `S` and `T` from `eta = 0` to 1 and returns `R~`, `T~`.
pub fn solve_right_incidence<T: Real>(job: &ScatterJob<'_, T>, tol: Tolerances<T>) -> Result<RightIncidence<T>> {
    if !(job.kbar > T::zero()) || !job.kbar.is_finite() {
        return Err(Error::invalid(format!("kbar must be positive, got {}", job.kbar)));
    }
    let channel = job.channel2();
    let kbar = cplx(job.kbar, T::zero());
    let kappa = channel.kappa;
    if kappa.norm() == T::zero() {
        return Err(Error::DegenerateThreshold);
    }
    let i = cplx(T::zero(), T::one());
    let two = T::lit(2.0);
    let q = Mat2::diag(i * kbar, i * kappa);
    let c1 = (i * kbar * two).inv();
    let c2 = (i * kappa * two).inv();

    let free_phase = [kbar, cplx(kappa.re, T::zero())];
    let dq = q - Mat2::diag(i * free_phase[0], i * free_phase[1]);

    let rhs = |eta: T, y: &[C<T>; 8], seg: (T, T)| -> [C<T>; 8] {
        let s = Mat2::from_slice(&y[0..4]);
        let p = Mat2::from_slice(&y[4..8]);
        let w = job.omega_bar(interior(eta, seg.0, seg.1));
        let z = C::new(T::zero(), T::zero());
        let v = Mat2::new(z, w * c1, w.conj() * c2, z);
        let vs = v * s;
        let ds = q * s + s * (q + vs) - q.scale(cplx(two, T::zero()));
        let e = [expi(free_phase[0] * eta), expi(free_phase[1] * eta)];
        let mut b = dq;
        for r in 0..2 {
            for c in 0..2 {
                b.0[r][c] += e[r] * vs.get(r, c) / e[c];
            }
        }
        let dt = p * b;
        let (ds, dt) = (ds.to_array(), dt.to_array());
        [ds[0], ds[1], ds[2], ds[3], dt[0], dt[1], dt[2], dt[3]]
    };

    let id = Mat2::<T>::identity().to_array();
    let mut y = [id[0], id[1], id[2], id[3], id[0], id[1], id[2], id[3]];
    let mut opts = default_options(tol);
    let mut error_estimate = T::zero();
    let mut steps = 0;
    let blowup = T::lit(RICCATI_BLOWUP);
    let mut blown: Option<(T, T)> = None;

    let mut knots = vec![T::zero()];
    knots.extend(job.breakpoints.iter().copied());
    knots.push(T::one());
    for seg in knots.windows(2) {
        let bounds = (seg[0], seg[1]);
        let f = |eta: T, y: &[C<T>; 8]| rhs(eta, y, bounds);
        let sol = integrate(f, seg[0], seg[1], y, &opts, |eta, y: &[C<T>; 8]| {
            let norm = y[..4].iter().fold(T::zero(), |m, z| m.max(z.norm()));
            if norm > blowup {
                blown = Some((eta, norm));
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        let sol = match sol {
            Ok(s) => s,
            Err(OdeError::Aborted { .. }) => {
                let (eta, norm) = blown.expect("abort only on blow-up");
                return Err(Error::RiccatiBlowUp { eta: eta.to_f64_lossy(), norm: norm.to_f64_lossy() });
            }
            Err(e) => return Err(e.into()),
        };
        y = sol.y;
        error_estimate += sol.error_sum;
        steps += sol.accepted;
        if sol.last_step > T::zero() {
            opts.h_init = Some(sol.last_step);
        }
    }

    let s1 = Mat2::from_slice(&y[0..4]);
    let mut t1 = Mat2::from_slice(&y[4..8]);
    for (b, &phase) in free_phase.iter().enumerate() {
        let e = expi(phase);
        for row in &mut t1.0 {
            row[b] *= e;
        }
    }
    let roots = [kbar.sqrt(), kappa.sqrt()];
    let phase = [expi(-kbar), expi(-kappa)];
    let m = s1 - Mat2::identity();
    let mut r_tilde = Mat2::zero();
    let mut t_tilde = Mat2::zero();
    for a in 0..2 {
        for b in 0..2 {
            let ratio = roots[a] / roots[b];
            r_tilde.0[a][b] = phase[a] * ratio * m.get(a, b) * phase[b];
            t_tilde.0[a][b] = ratio * t1.get(a, b) * phase[b];
        }
    }
    Ok(RightIncidence { r_tilde, t_tilde, channel, error_estimate, steps })
}

/// Left incidence through the mirror image `Omega(xbar) -> Omega(1 - xbar)`.
///
/// With `E = diag(e^{i kbar}, e^{i kappa})` the relabeling is
/// `R = E R~_mirror E` and `T = E^-1 T~_mirror E`.
pub fn solve_left_incidence<T: Real>(job: &ScatterJob<'_, T>, tol: Tolerances<T>) -> Result<LeftIncidence<T>> {
    let mirror = job.mirrored();
    let right = solve_right_incidence(&mirror, tol)?;
    let kappa = right.channel.kappa;
    let e = [expi(cplx(job.kbar, T::zero())), expi(kappa)];
    let mut r = Mat2::zero();
    let mut t = Mat2::zero();
    for a in 0..2 {
        for b in 0..2 {
            r.0[a][b] = e[a] * right.r_tilde.get(a, b) * e[b];
            t.0[a][b] = right.t_tilde.get(a, b) * e[b] / e[a];
        }
    }
    Ok(LeftIncidence { r, t, channel: right.channel, error_estimate: right.error_estimate, steps: right.steps })
}

/// Both incidence sides.
pub fn solve<T: Real>(job: &ScatterJob<'_, T>, tol: Tolerances<T>) -> Result<ChannelMatrices<T>> {
    let right = solve_right_incidence(job, tol)?;
    let left = solve_left_incidence(job, tol)?;
    Ok(ChannelMatrices {
        r: left.r,
        t: left.t,
        r_tilde: right.r_tilde,
        t_tilde: right.t_tilde,
        kappa: right.channel.kappa,
        open: right.channel.open,
        error_estimate: left.error_estimate + right.error_estimate,
    })
}

/// Convenience: solve a natural-unit coupling at velocity `v / v_d`.
pub fn solve_profile<T: Real, P: Coupling<T> + ?Sized>(
    profile: &P,
    velocity_ratio: T,
    tol: Tolerances<T>,
) -> Result<ChannelMatrices<T>> {
    if !(velocity_ratio > T::zero()) {
        return Err(Error::invalid(format!("velocity must be positive, got {velocity_ratio}")));
    }
    let job = ScatterJob::from_coupling(profile, velocity_ratio);
    solve(&job, tol)
}

#[derive(Debug)]
pub struct SweepPoint<T> {
    pub velocity_ratio: T,
    pub result: Result<Coefficients<T>>,
}

/// Scattering coefficients at each velocity; failures are kept per point.
pub fn sweep_velocity<T: Real, P: Coupling<T> + ?Sized>(
    profile: &P,
    velocities: &[T],
    tol: Tolerances<T>,
) -> Vec<SweepPoint<T>> {
    velocities
        .par_iter()
        .map(|&v| SweepPoint { velocity_ratio: v, result: solve_profile(profile, v, tol).map(|m| m.coefficients()) })
        .collect()
}

/// `v_over_vd, T2l, T2r, R2l, R2r, absorb_l, absorb_r`; failed points are `nan`.
pub fn sweep_to_csv<T: Real>(points: &[SweepPoint<T>]) -> CsvTable {
    let mut t = CsvTable::new(&["v_over_vd", "T2l", "T2r", "R2l", "R2r", "absorb_l", "absorb_r"]);
    for p in points {
        let v = p.velocity_ratio.to_f64_lossy();
        match &p.result {
            Ok(c) => t.push(vec![
                v,
                c.t_left.to_f64_lossy(),
                c.t_right.to_f64_lossy(),
                c.r_left.to_f64_lossy(),
                c.r_right.to_f64_lossy(),
                c.absorb_left().to_f64_lossy(),
                c.absorb_right().to_f64_lossy(),
            ]),
            Err(_) => t.push(vec![v, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN]),
        }
    }
    t
}
