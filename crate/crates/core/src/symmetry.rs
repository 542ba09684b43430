//! Symmetry classes of the effective ground-state potential and the device
//! selection rules they imply.
//!
//! The eight classes are `AH = HA` or `AH = H^dagger A` with `A` in
//! `{1, Pi, Theta, Pi Theta}`. For the potential
//! `V(x,y) ∝ e^{iq|x-y|}/q · Omega(x) Omega(y)^*` they reduce to:
//!
//! | class | condition |
//! |-------|-----------|
//! | I     | none |
//! | II    | `Re q = 0` |
//! | III   | `Omega(x) = e^{i phi} Omega(-x)` |
//! | IV    | II and III |
//! | V     | II and VI |
//! | VI    | `Omega(x) = e^{i phi} Omega(x)^*` |
//! | VII   | II and VIII |
//! | VIII  | `Omega(x) = e^{i phi} Omega(-x)^*` |

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{uniform_grid, Coupling};
use crate::scalar::{sqrt_upper, Real, C};

/// Default relative max-norm tolerance for the functional conditions.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-9;
/// Relative tolerance on `Re q` for class II.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Symmetry {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

impl Symmetry {
    pub const ALL: [Symmetry; 8] = [
        Symmetry::I,
        Symmetry::II,
        Symmetry::III,
        Symmetry::IV,
        Symmetry::V,
        Symmetry::VI,
        Symmetry::VII,
        Symmetry::VIII,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["I", "II", "III", "IV", "V", "VI", "VII", "VIII"][self.index()]
    }

    /// Classes implied by this one (excluding itself).
    pub fn implies(self) -> &'static [Symmetry] {
        use Symmetry::*;
        match self {
            I => &[],
            II | III | VI | VIII => &[I],
            IV => &[III, II, I],
            V => &[VI, II, I],
            VII => &[VIII, II, I],
        }
    }
}

impl std::fmt::Display for Symmetry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Ideal asymmetric devices: response to left incidence / right incidence,
/// with T = transmission, R = reflection, A = absorption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Device {
    #[serde(rename = "TR/A")]
    TransmitReflectAbsorb,
    #[serde(rename = "T/R")]
    TransmitReflect,
    #[serde(rename = "T/A")]
    TransmitAbsorb,
    #[serde(rename = "TR/R")]
    TransmitReflectReflect,
    #[serde(rename = "R/A")]
    ReflectAbsorb,
    #[serde(rename = "TR/T")]
    TransmitReflectTransmit,
}

impl Device {
    pub const ALL: [Device; 6] = [
        Device::TransmitReflectAbsorb,
        Device::TransmitReflect,
        Device::TransmitAbsorb,
        Device::TransmitReflectReflect,
        Device::ReflectAbsorb,
        Device::TransmitReflectTransmit,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Device::TransmitReflectAbsorb => "TR/A",
            Device::TransmitReflect => "T/R",
            Device::TransmitAbsorb => "T/A",
            Device::TransmitReflectReflect => "TR/R",
            Device::ReflectAbsorb => "R/A",
            Device::TransmitReflectTransmit => "TR/T",
        }
    }

    /// Symmetry classes compatible with this device.
    pub fn permitted(self) -> &'static [Symmetry] {
        use Symmetry::*;
        match self {
            Device::TransmitReflectAbsorb | Device::TransmitReflect => &[I],
            Device::TransmitAbsorb | Device::TransmitReflectReflect => &[I, VIII],
            Device::ReflectAbsorb => &[I, VI],
            Device::TransmitReflectTransmit => &[I, IV, VI, VII],
        }
    }
}

impl std::fmt::Display for Device {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A device is allowed iff every symmetry present is in its permitted row.
pub fn allowed_devices(flags: &[bool; 8]) -> Vec<Device> {
    Device::ALL
        .into_iter()
        .filter(|d| Symmetry::ALL.iter().filter(|s| flags[s.index()]).all(|s| d.permitted().contains(s)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport<T> {
    pub flags: [bool; 8],
    /// Matched phase in `[0, 2 pi)` for the functional conditions.
    pub phases: [Option<T>; 8],
    /// Relative residual of the best phase match for III, VI, VIII.
    pub residuals: [Option<T>; 8],
    /// The profile is identically zero on the grid.
    pub degenerate: bool,
    /// Whether II, IV, V, VII were decided (they need the incident energy).
    pub energy_checked: bool,
    /// `q d` when energy was checked.
    pub q: Option<C<T>>,
    pub allowed: Vec<Device>,
}

impl<T: Real> SymmetryReport<T> {
    pub fn has(&self, s: Symmetry) -> bool {
        self.flags[s.index()]
    }

    pub fn phase(&self, s: Symmetry) -> Option<T> {
        self.phases[s.index()]
    }

    pub fn present(&self) -> Vec<Symmetry> {
        Symmetry::ALL.into_iter().filter(|s| self.has(*s)).collect()
    }

    /// Checks that every present class also has all classes it implies.
    pub fn lattice_consistent(&self) -> bool {
        self.present().iter().all(|s| s.implies().iter().all(|t| self.has(*t)))
    }

    pub fn allows(&self, d: Device) -> bool {
        self.allowed.contains(&d)
    }
}

#[derive(Debug, Clone, Copy)]
struct PhaseMatch<T> {
    holds: bool,
    phase: T,
    residual: T,
}

fn phase_match<T: Real>(omega: &[C<T>], f: &[C<T>], scale: T, tol: T) -> PhaseMatch<T> {
    let inner = f.iter().zip(omega).fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * *b);
    let two_pi = T::lit(2.0) * T::PI();
    let mut phase = inner.arg();
    if phase < T::zero() {
        phase += two_pi;
    }
    if phase >= two_pi {
        phase -= two_pi;
    }
    let rot = C::from_polar(T::one(), phase);
    let residual = omega.iter().zip(f).fold(T::zero(), |m, (w, g)| m.max((*w - rot * *g).norm())) / scale;
    PhaseMatch { holds: residual < tol, phase, residual }
}

/// Profile-level classification (III, VI, VIII) on a uniform grid of
/// `grid_n >= 64` points over `[-1, 1]`.
pub fn classify_profile<T: Real, P: Coupling<T> + ?Sized>(
    profile: &P,
    grid_n: usize,
    tol: Option<T>,
) -> Result<SymmetryReport<T>> {
    if grid_n < 64 {
        return Err(Error::invalid(format!("classification grid needs at least 64 points, got {grid_n}")));
    }
    let tol = tol.unwrap_or_else(|| T::lit(DEFAULT_SYMMETRY_TOL));
    let xs = uniform_grid::<T>(grid_n);
    let omega: Vec<C<T>> = xs.iter().map(|&x| profile.rabi(x)).collect();
    let mirror: Vec<C<T>> = xs.iter().map(|&x| profile.rabi(-x)).collect();
    let scale = omega.iter().fold(T::zero(), |m, z| m.max(z.norm()));

    let mut flags = [false; 8];
    let mut phases = [None; 8];
    let mut residuals = [None; 8];
    flags[Symmetry::I.index()] = true;

    let degenerate = scale == T::zero();
    if degenerate {
        flags = [true; 8];
        return Ok(SymmetryReport {
            flags,
            phases,
            residuals,
            degenerate,
            energy_checked: false,
            q: None,
            allowed: allowed_devices(&flags),
        });
    }

    let conj: Vec<C<T>> = omega.iter().map(|z| z.conj()).collect();
    let mirror_conj: Vec<C<T>> = mirror.iter().map(|z| z.conj()).collect();
    for (sym, f) in [(Symmetry::III, &mirror), (Symmetry::VI, &conj), (Symmetry::VIII, &mirror_conj)] {
        let m = phase_match(&omega, f, scale, tol);
        flags[sym.index()] = m.holds;
        residuals[sym.index()] = Some(m.residual);
        if m.holds {
            phases[sym.index()] = Some(m.phase);
        }
    }
    Ok(SymmetryReport {
        flags,
        phases,
        residuals,
        degenerate,
        energy_checked: false,
        q: None,
        allowed: allowed_devices(&flags),
    })
}

/// Full classification at a given incident energy. `kbar` is the barred
/// wavenumber and `mu = (2 Delta + i gamma) / (2E / hbar)`.
pub fn classify_with_energy<T: Real, P: Coupling<T> + ?Sized>(
    profile: &P,
    kbar: T,
    mu: C<T>,
    grid_n: usize,
    tol: Option<T>,
) -> Result<SymmetryReport<T>> {
    let mut report = classify_profile(profile, grid_n, tol)?;
    let one_plus_mu = mu + T::one();
    if one_plus_mu.re == T::zero() && one_plus_mu.im == T::zero() {
        return Err(Error::DegenerateThreshold);
    }
    let q = sqrt_upper(one_plus_mu) * (kbar / T::lit(2.0));
    if report.degenerate {
        report.energy_checked = true;
        report.q = Some(q);
        return Ok(report);
    }
    let hermitian = q.re.abs() <= T::lit(HERMITIAN_TOL) * q.norm();
    let f = &mut report.flags;
    f[Symmetry::II.index()] = hermitian;
    f[Symmetry::IV.index()] = hermitian && f[Symmetry::III.index()];
    f[Symmetry::V.index()] = hermitian && f[Symmetry::VI.index()];
    f[Symmetry::VII.index()] = hermitian && f[Symmetry::VIII.index()];
    let p = &mut report.phases;
    p[Symmetry::IV.index()] = if f[Symmetry::IV.index()] { p[Symmetry::III.index()] } else { None };
    p[Symmetry::V.index()] = if f[Symmetry::V.index()] { p[Symmetry::VI.index()] } else { None };
    p[Symmetry::VII.index()] = if f[Symmetry::VII.index()] { p[Symmetry::VIII.index()] } else { None };
    report.allowed = allowed_devices(&report.flags);
    report.energy_checked = true;
    report.q = Some(q);
    Ok(report)
}
