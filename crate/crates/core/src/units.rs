//! Physical ↔ dimensionless conversions.
//!
//! Library profiles are stored in natural units (`x/d`, `tau * rate`). The
//! scattering solvers use a second, barred system on `xbar in [0, 1]`:
//!
//! * `kbar = sqrt(2 m E) 2d / hbar = 2 v / v_d`
//! * `xbar = x / (2d) + 1/2`
//! * `Omega_bar(xbar) = 4 tau Omega(x)`
//! * `Gamma_bar = 4 tau (gamma - 2 i Delta)`

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::profile::Coupling;
use crate::scalar::{cplx, sqrt_upper, Real, C};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Velocity, time and potential-density scales for a particle of mass `m`
/// and potential half-width `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalScales {
    pub mass_kg: f64,
    pub half_width_m: f64,
    /// `hbar / (m d)`, m/s.
    pub v_d: f64,
    /// `m d^2 / hbar`, s.
    pub tau: f64,
    /// `hbar^2 / (m d^3)`, J/m.
    pub v0: f64,
}

impl PhysicalScales {
    pub fn new(mass_kg: f64, half_width_m: f64) -> Result<Self> {
        Self::with_hbar(mass_kg, half_width_m, HBAR)
    }

    /// Same as [`PhysicalScales::new`] with a custom value of `hbar`.
    pub fn with_hbar(mass_kg: f64, half_width_m: f64, hbar: f64) -> Result<Self> {
        if !(mass_kg > 0.0 && mass_kg.is_finite()) {
            return Err(Error::invalid(format!("mass must be positive, got {mass_kg}")));
        }
        if !(half_width_m > 0.0 && half_width_m.is_finite()) {
            return Err(Error::invalid(format!("half-width must be positive, got {half_width_m}")));
        }
        let v_d = hbar / (mass_kg * half_width_m);
        // tau = d / v_d keeps v_d * tau == d up to one rounding
        let tau = half_width_m / v_d;
        let v0 = hbar * hbar / (mass_kg * half_width_m.powi(3));
        Ok(Self { mass_kg, half_width_m, v_d, tau, v0 })
    }

    /// Beryllium ion with a 10 µm half-width.
    pub fn beryllium() -> Self {
        Self::new(1.49e-26, 10e-6).expect("valid constants")
    }

    pub fn velocity_ratio(&self, velocity_m_s: f64) -> f64 {
        velocity_m_s / self.v_d
    }

    /// Converts a rate in 1/s (or rad/s) into `tau * rate`.
    pub fn rate_to_natural(&self, rate: f64) -> f64 {
        rate * self.tau
    }

    pub fn rate_from_natural(&self, tau_rate: f64) -> f64 {
        tau_rate / self.tau
    }
}

/// Barred scattering parameters of one incident energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams<T> {
    pub kbar: T,
    pub gammabar: C<T>,
    pub velocity_ratio: T,
}

impl<T: Real> DimensionlessParams<T> {
    /// From natural-unit detuning and decay at velocity `v / v_d`.
    pub fn from_natural(velocity_ratio: T, tau_detuning: T, tau_gamma: T) -> Self {
        let four = T::lit(4.0);
        Self {
            kbar: T::lit(2.0) * velocity_ratio,
            gammabar: cplx(four * tau_gamma, -T::lit(8.0) * tau_detuning),
            velocity_ratio,
        }
    }

    /// `(tau * Delta, tau * gamma)` recovered from `Gamma_bar`.
    pub fn natural_rates(&self) -> (T, T) {
        (-self.gammabar.im / T::lit(8.0), self.gammabar.re / T::lit(4.0))
    }
}

/// Physical quantities recovered from barred ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalState {
    pub velocity_m_s: f64,
    pub detuning_rad_s: f64,
    pub gamma_per_s: f64,
}

/// Excited-channel asymptotic wavenumber `sqrt(kbar^2 + i Gamma_bar)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelWavenumber<T> {
    /// Branch with `Im >= 0`.
    pub kappa: C<T>,
    /// `true` when the excited channel carries travelling waves (`Im = 0`).
    pub open: bool,
}

pub fn channel2_wavenumber<T: Real>(kbar: T, gammabar: C<T>) -> ChannelWavenumber<T> {
    let i = cplx(T::zero(), T::one());
    let kappa = sqrt_upper(cplx(kbar * kbar, T::zero()) + i * gammabar);
    let open = kappa.im.abs() <= T::lit(8.0) * T::epsilon() * kappa.norm() && kappa.re > T::zero();
    ChannelWavenumber { kappa, open }
}

/// A fully dimensionless two-channel scattering instance on `xbar in [0, 1]`.
#[derive(Clone)]
pub struct ScatterJob<'a, T> {
    pub kbar: T,
    pub gammabar: C<T>,
    omega_bar: Arc<dyn Fn(T) -> C<T> + Send + Sync + 'a>,
    /// Discontinuities of `Omega_bar` in `(0, 1)`.
    pub breakpoints: Vec<T>,
}

impl<'a, T: Real> ScatterJob<'a, T> {
    pub fn new(kbar: T, gammabar: C<T>, omega_bar: impl Fn(T) -> C<T> + Send + Sync + 'a) -> Self {
        Self { kbar, gammabar, omega_bar: Arc::new(omega_bar), breakpoints: Vec::new() }
    }

    /// Free propagation: `Omega_bar = 0`.
    pub fn free(kbar: T, gammabar: C<T>) -> Self {
        Self::new(kbar, gammabar, |_| C::new(T::zero(), T::zero()))
    }

    /// Job for a natural-unit coupling at velocity `v / v_d`.
    pub fn from_coupling<P: Coupling<T> + ?Sized>(profile: &'a P, velocity_ratio: T) -> Self {
        let params = DimensionlessParams::from_natural(velocity_ratio, profile.detuning(), profile.gamma());
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let breakpoints = profile
            .breakpoints()
            .into_iter()
            .map(|x| (x + T::one()) / two)
            .filter(|&xb| xb > T::zero() && xb < T::one())
            .collect();
        Self {
            kbar: params.kbar,
            gammabar: params.gammabar,
            omega_bar: Arc::new(move |xb: T| profile.rabi(two * xb - T::one()) * four),
            breakpoints,
        }
    }

    #[inline]
    pub fn omega_bar(&self, xbar: T) -> C<T> {
        (self.omega_bar)(xbar)
    }

    pub fn channel2(&self) -> ChannelWavenumber<T> {
        channel2_wavenumber(self.kbar, self.gammabar)
    }

    /// The same potential reflected about `xbar = 1/2`.
    pub fn mirrored(&self) -> ScatterJob<'a, T> {
        let f = Arc::clone(&self.omega_bar);
        let mut bp: Vec<T> = self.breakpoints.iter().map(|&b| T::one() - b).collect();
        bp.reverse();
        ScatterJob {
            kbar: self.kbar,
            gammabar: self.gammabar,
            omega_bar: Arc::new(move |x| f(T::one() - x)),
            breakpoints: bp,
        }
    }
}

impl<T: Real> std::fmt::Debug for ScatterJob<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScatterJob")
            .field("kbar", &self.kbar)
            .field("gammabar", &self.gammabar)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

/// Converts a natural-unit profile and an SI velocity into barred parameters
/// and the scattering job on `[0, 1]`.
pub fn to_dimensionless<'a, P>(
    profile: &'a P,
    half_width_m: Option<f64>,
    velocity_m_s: f64,
    scales: &PhysicalScales,
) -> Result<(DimensionlessParams<f64>, ScatterJob<'a, f64>)>
where
    P: Coupling<f64>,
{
    if !(velocity_m_s > 0.0) || !velocity_m_s.is_finite() {
        return Err(Error::invalid(format!("velocity must be positive, got {velocity_m_s}")));
    }
    if let Some(d) = half_width_m {
        if ((d - scales.half_width_m) / scales.half_width_m).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "profile half-width {d} m does not match scales half-width {} m",
                scales.half_width_m
            )));
        }
    }
    let ratio = scales.velocity_ratio(velocity_m_s);
    let params = DimensionlessParams::from_natural(ratio, profile.detuning(), profile.gamma());
    Ok((params, ScatterJob::from_coupling(profile, ratio)))
}

/// Inverse of [`to_dimensionless`] for the scalar parameters.
pub fn from_dimensionless(params: &DimensionlessParams<f64>, scales: &PhysicalScales) -> PhysicalState {
    let (tau_delta, tau_gamma) = params.natural_rates();
    PhysicalState {
        velocity_m_s: params.kbar / 2.0 * scales.v_d,
        detuning_rad_s: scales.rate_from_natural(tau_delta),
        gamma_per_s: scales.rate_from_natural(tau_gamma),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::RabiProfile;

    #[test]
    fn scales_are_consistent() {
        let s = PhysicalScales::beryllium();
        assert!(s.v_d > 0.0 && s.tau > 0.0);
        assert!(((s.v_d * s.tau - s.half_width_m) / s.half_width_m).abs() < 1e-15);
        // V0 = m v_d^2 / d
        assert!((s.v0 / (s.mass_kg * s.v_d * s.v_d / s.half_width_m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beryllium_against_published_scales() {
        // Published: v_d = 0.67 mm/s and tau = 1.49e-2 s. Those correspond to
        // hbar rounded to 1e-34; with CODATA hbar both differ by about 5.5 %.
        let s = PhysicalScales::beryllium();
        assert!((s.v_d / 0.67e-3 - 1.0).abs() < 0.06, "v_d = {}", s.v_d);
        assert!((s.tau / 1.49e-2 - 1.0).abs() < 0.06, "tau = {}", s.tau);
        let rounded = PhysicalScales::with_hbar(1.49e-26, 10e-6, 1e-34).unwrap();
        assert!((rounded.v_d - 0.67e-3).abs() < 0.005e-3);
        assert!((rounded.tau - 1.49e-2).abs() < 1e-6);
        // v = 400 v_d is about 27 cm/s
        assert!((400.0 * rounded.v_d - 0.27).abs() < 0.005);
    }

    #[test]
    fn kbar_is_twice_velocity_ratio() {
        let s = PhysicalScales::beryllium();
        let p = RabiProfile::<f64>::zero(0.0, 0.0).unwrap();
        let (params, job) = to_dimensionless(&p, None, s.v_d, &s).unwrap();
        assert!((params.kbar - 2.0).abs() < 1e-14);
        assert_eq!(job.kbar, params.kbar);
    }

    #[test]
    fn gammabar_from_detuning() {
        let params = DimensionlessParams::<f64>::from_natural(400.0, 1413.01, 0.0);
        // independent hand computation: -2 * 4 * 1413.01 = -11304.08
        assert_eq!(params.gammabar.re, 0.0);
        assert!((params.gammabar.im + 11304.08).abs() < 1e-9);
        let params = DimensionlessParams::from_natural(1.0, -0.5, 0.25);
        assert!(params.gammabar.re > 0.0 && params.gammabar.im > 0.0);
    }

    #[test]
    fn conversion_errors() {
        let s = PhysicalScales::beryllium();
        let p = RabiProfile::<f64>::zero(0.0, 0.0).unwrap();
        assert!(to_dimensionless(&p, None, 0.0, &s).is_err());
        assert!(to_dimensionless(&p, None, -1.0, &s).is_err());
        assert!(to_dimensionless(&p, Some(2e-5), 1e-3, &s).is_err());
        assert!(to_dimensionless(&p, Some(1e-5), 1e-3, &s).is_ok());
        assert!(PhysicalScales::new(0.0, 1.0).is_err());
    }

    #[test]
    fn round_trip_physical() {
        let s = PhysicalScales::beryllium();
        let v = 0.27;
        let delta = 9.5e4;
        let gamma = 1.3e2;
        let p = RabiProfile::zero(s.rate_to_natural(delta), s.rate_to_natural(gamma)).unwrap();
        let (params, _) = to_dimensionless(&p, None, v, &s).unwrap();
        let back = from_dimensionless(&params, &s);
        assert!((back.velocity_m_s / v - 1.0).abs() < 1e-12);
        assert!((back.detuning_rad_s / delta - 1.0).abs() < 1e-12);
        assert!((back.gamma_per_s / gamma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn channel2_open_and_closed() {
        let c = channel2_wavenumber(3.0_f64, cplx(0.0, 0.0));
        assert!(c.open);
        assert!((c.kappa - cplx(3.0, 0.0)).norm() < 1e-15);

        // T/A device: kbar^2 + i Gamma_bar = 640000 + 11304.08, real positive
        let p = DimensionlessParams::from_natural(400.0_f64, 1413.01, 0.0);
        let c = channel2_wavenumber(p.kbar, p.gammabar);
        assert!(c.open);
        assert!((c.kappa.re - (651_304.08_f64).sqrt()).abs() < 1e-9);

        // kbar = 1, Gamma_bar = -8i -> kbar^2 + i Gamma_bar = 1 + 8 = 9 (open)
        let c = channel2_wavenumber(1.0_f64, cplx(0.0, -8.0));
        assert!(c.open && (c.kappa.re - 3.0).abs() < 1e-14);
        // Gamma_bar = +8i -> 1 - 8 = -7, closed with kappa = i sqrt(7)
        let c = channel2_wavenumber(1.0_f64, cplx(0.0, 8.0));
        assert!(!c.open);
        assert!(c.kappa.re.abs() < 1e-15 && (c.kappa.im - 7.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn mirrored_job_reflects_profile() {
        let p = RabiProfile::transmit_absorb();
        let job = ScatterJob::from_coupling(&p, 400.0);
        let m = job.mirrored();
        for xb in [0.1, 0.37, 0.5, 0.9] {
            assert_eq!(m.omega_bar(xb), job.omega_bar(1.0 - xb));
        }
        // Omega_bar = 4 tau Omega at x = 2 xbar - 1
        assert!((job.omega_bar(0.5) - p.rabi(0.0) * 4.0).norm() < 1e-9);
    }
}
