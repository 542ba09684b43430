//! Complex Rabi-frequency profiles.
//!
//! All quantities are in natural units of the half-width `d` and the time
//! scale `tau = m d^2 / hbar`: positions are `x/d`, rates are `tau * rate`.
//! The potential support is `[-1, 1]`; profiles vanish outside it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cplx, Real, C};

/// Anything that provides a Rabi frequency, detuning and decay rate.
pub trait Coupling<T: Real>: Sync {
    /// `tau * Omega(x)` at `x/d`.
    fn rabi(&self, x: T) -> C<T>;
    /// `tau * Delta`.
    fn detuning(&self) -> T;
    /// `tau * gamma`.
    fn gamma(&self) -> T;
    /// Positions where `Omega` is discontinuous. Integrators restart there.
    fn breakpoints(&self) -> Vec<T> {
        Vec::new()
    }
    /// Half-extent (in units of `d`) of the region a classical trajectory
    /// must cover to see the whole coupling.
    fn extent(&self) -> T {
        T::one()
    }
}

impl<T: Real, P: Coupling<T> + ?Sized> Coupling<T> for &P {
    fn rabi(&self, x: T) -> C<T> {
        (**self).rabi(x)
    }
    fn detuning(&self) -> T {
        (**self).detuning()
    }
    fn gamma(&self) -> T {
        (**self).gamma()
    }
    fn breakpoints(&self) -> Vec<T> {
        (**self).breakpoints()
    }
    fn extent(&self) -> T {
        (**self).extent()
    }
}

/// `weight * exp(-(x - center)^2 / width^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTerm<T> {
    pub weight: C<T>,
    pub center: T,
    pub width: T,
}

impl<T: Real> GaussianTerm<T> {
    pub fn new(weight: C<T>, center: T, width: T) -> Result<Self> {
        if !(width > T::zero()) || !width.is_finite() {
            return Err(Error::invalid(format!("Gaussian width must be positive, got {width}")));
        }
        if !center.is_finite() || !weight.re.is_finite() || !weight.im.is_finite() {
            return Err(Error::invalid("Gaussian term has non-finite parameters"));
        }
        Ok(Self { weight, center, width })
    }

    #[inline]
    pub fn eval(&self, x: T) -> C<T> {
        let u = (x - self.center) / self.width;
        self.weight * (-u * u).exp()
    }
}

/// The three Gaussian ansatz families and the symmetry each enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ansatz {
    /// `a [g(x+x0) + i g(x-x0)]`
    #[serde(rename = "VIII")]
    Viii,
    /// `b g(x+x0) + c g(x-x0)`
    #[serde(rename = "VI")]
    Vi,
    /// `-i b g(x+x0) + c g(x-x0)`
    #[serde(rename = "I")]
    I,
}

impl Ansatz {
    /// Number of amplitude parameters (`a`, or `b` and `c`).
    pub fn amplitude_count(self) -> usize {
        match self {
            Ansatz::Viii => 1,
            Ansatz::Vi | Ansatz::I => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Ansatz::Viii => "VIII",
            Ansatz::Vi => "VI",
            Ansatz::I => "I",
        }
    }
}

impl std::fmt::Display for Ansatz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiProfile<T> {
    pub terms: Vec<GaussianTerm<T>>,
    /// `tau * Delta`
    pub detuning: T,
    /// `tau * gamma`, non-negative.
    pub gamma: T,
    /// Physical half-width in metres, when known.
    pub half_width_m: Option<f64>,
}

impl<T: Real> RabiProfile<T> {
    pub fn new(terms: Vec<GaussianTerm<T>>, detuning: T, gamma: T) -> Result<Self> {
        if !(gamma >= T::zero()) {
            return Err(Error::invalid(format!("decay rate must be non-negative, got {gamma}")));
        }
        if !detuning.is_finite() {
            return Err(Error::invalid("detuning must be finite"));
        }
        Ok(Self { terms, detuning, gamma, half_width_m: None })
    }

    /// A profile with no laser coupling at all.
    pub fn zero(detuning: T, gamma: T) -> Result<Self> {
        Self::new(Vec::new(), detuning, gamma)
    }

    /// Builds one of the Gaussian ansatz profiles. `amplitudes` is `[a]` for
    /// [`Ansatz::Viii`] and `[b, c]` otherwise.
    pub fn preset(ansatz: Ansatz, amplitudes: &[T], x0: T, width: T, detuning: T, gamma: T) -> Result<Self> {
        if amplitudes.len() != ansatz.amplitude_count() {
            return Err(Error::invalid(format!(
                "ansatz {ansatz} takes {} amplitude(s), got {}",
                ansatz.amplitude_count(),
                amplitudes.len()
            )));
        }
        let z = T::zero();
        let terms = match ansatz {
            Ansatz::Viii => {
                let a = amplitudes[0];
                vec![GaussianTerm::new(cplx(a, z), -x0, width)?, GaussianTerm::new(cplx(z, a), x0, width)?]
            }
            Ansatz::Vi => vec![
                GaussianTerm::new(cplx(amplitudes[0], z), -x0, width)?,
                GaussianTerm::new(cplx(amplitudes[1], z), x0, width)?,
            ],
            Ansatz::I => vec![
                GaussianTerm::new(cplx(z, -amplitudes[0]), -x0, width)?,
                GaussianTerm::new(cplx(amplitudes[1], z), x0, width)?,
            ],
        };
        Self::new(terms, detuning, gamma)
    }

    /// Largest `|tau Omega|` on a uniform grid of `n` points over `[-1, 1]`.
    pub fn max_abs_on_grid(&self, n: usize) -> T {
        uniform_grid::<T>(n).into_iter().fold(T::zero(), |m, x| m.max(self.rabi(x).norm()))
    }

    /// Global phase rotation `Omega -> e^{i alpha} Omega`.
    pub fn rotated(&self, alpha: T) -> Self {
        let phase = C::from_polar(T::one(), alpha);
        let mut out = self.clone();
        for t in &mut out.terms {
            t.weight *= phase;
        }
        out
    }

    /// Mirror image `Omega(x) -> Omega(-x)`.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.center = -t.center;
        }
        out
    }

    pub fn cast<U: Real>(&self) -> RabiProfile<U> {
        let conv = |x: T| U::lit(x.to_f64_lossy());
        RabiProfile {
            terms: self
                .terms
                .iter()
                .map(|t| GaussianTerm {
                    weight: cplx(conv(t.weight.re), conv(t.weight.im)),
                    center: conv(t.center),
                    width: conv(t.width),
                })
                .collect(),
            detuning: conv(self.detuning),
            gamma: conv(self.gamma),
            half_width_m: self.half_width_m,
        }
    }
}

impl<T: Real> Coupling<T> for RabiProfile<T> {
    fn rabi(&self, x: T) -> C<T> {
        if x.abs() > T::one() {
            return C::new(T::zero(), T::zero());
        }
        self.terms.iter().fold(C::new(T::zero(), T::zero()), |acc, t| acc + t.eval(x))
    }

    fn detuning(&self) -> T {
        self.detuning
    }

    fn gamma(&self) -> T {
        self.gamma
    }

    fn extent(&self) -> T {
        let w = self.terms.iter().fold(T::zero(), |m, t| m.max(t.width));
        T::one() + T::lit(5.0) * w
    }
}

/// `n` equally spaced points on `[-1, 1]`, endpoints included.
pub fn uniform_grid<T: Real>(n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        _ => {
            let h = T::lit(2.0) / T::from_count(n - 1);
            (0..n).map(|i| -T::one() + h * T::from_count(i)).collect()
        }
    }
}

/// Published device parameters, in `tau` / `d` units.
pub mod reference {
    /// Gaussian width shared by every published device.
    pub const WIDTH: f64 = std::f64::consts::SQRT_2 / 10.0;

    /// One-way transmission filter (left transmits, right absorbs), ansatz VIII.
    pub mod transmit_absorb {
        pub const V_OVER_VD: f64 = 400.0;
        pub const A: f64 = 2618.19;
        pub const X0: f64 = 0.1532;
        pub const DETUNING: f64 = 1413.01;
    }

    /// One-way reflection filter (left reflects, right absorbs), ansatz VI.
    pub mod reflect_absorb {
        pub const V_OVER_VD: f64 = 400.0;
        pub const B: f64 = -244516.1;
        pub const C: f64 = 167853.9;
        pub const X0: f64 = 0.1679;
        pub const DETUNING: f64 = 193.508;
    }

    /// Half transmit+reflect / absorb device, ansatz I.
    pub mod half_transmit_reflect_absorb {
        pub const V_OVER_VD: f64 = 8.0;
        pub const B: f64 = 102.6520;
        pub const C: f64 = 165.8355;
        pub const X0: f64 = 0.1648;
        pub const DETUNING: f64 = 90.5337;
    }
}

impl RabiProfile<f64> {
    pub fn transmit_absorb() -> Self {
        use reference::transmit_absorb as p;
        Self::preset(Ansatz::Viii, &[p::A], p::X0, reference::WIDTH, p::DETUNING, 0.0).expect("valid preset")
    }

    pub fn reflect_absorb() -> Self {
        use reference::reflect_absorb as p;
        Self::preset(Ansatz::Vi, &[p::B, p::C], p::X0, reference::WIDTH, p::DETUNING, 0.0).expect("valid preset")
    }

    pub fn half_transmit_reflect_absorb() -> Self {
        use reference::half_transmit_reflect_absorb as p;
        Self::preset(Ansatz::I, &[p::B, p::C], p::X0, reference::WIDTH, p::DETUNING, 0.0).expect("valid preset")
    }
}

/// On-disk profile representation (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub terms: Vec<TermFile>,
    pub tau_delta: f64,
    pub tau_gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_meters: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    pub re: f64,
    pub im: f64,
    pub center_over_d: f64,
    pub w_over_d: f64,
}

impl ProfileFile {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn into_profile<T: Real>(&self) -> Result<RabiProfile<T>> {
        let terms = self
            .terms
            .iter()
            .map(|t| GaussianTerm::new(cplx(T::lit(t.re), T::lit(t.im)), T::lit(t.center_over_d), T::lit(t.w_over_d)))
            .collect::<Result<Vec<_>>>()?;
        if let Some(d) = self.d_meters {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::invalid(format!("d_meters must be positive, got {d}")));
            }
        }
        let mut p = RabiProfile::new(terms, T::lit(self.tau_delta), T::lit(self.tau_gamma))?;
        p.half_width_m = self.d_meters;
        Ok(p)
    }
}

impl<T: Real> From<&RabiProfile<T>> for ProfileFile {
    fn from(p: &RabiProfile<T>) -> Self {
        ProfileFile {
            terms: p
                .terms
                .iter()
                .map(|t| TermFile {
                    re: t.weight.re.to_f64_lossy(),
                    im: t.weight.im.to_f64_lossy(),
                    center_over_d: t.center.to_f64_lossy(),
                    w_over_d: t.width.to_f64_lossy(),
                })
                .collect(),
            tau_delta: p.detuning.to_f64_lossy(),
            tau_gamma: p.gamma.to_f64_lossy(),
            d_meters: p.half_width_m,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_forms() {
        let p = RabiProfile::<f64>::preset(Ansatz::Viii, &[2.0], 0.2, 0.1, 0.0, 0.0).unwrap();
        // at x = -x0 the real Gaussian peaks, the imaginary one is exp(-16)
        let v = p.rabi(-0.2);
        assert!((v.re - 2.0).abs() < 1e-12);
        assert!((v.im - 2.0 * (-16.0_f64).exp()).abs() < 1e-15);

        let p = RabiProfile::<f64>::preset(Ansatz::I, &[1.0, 3.0], 0.2, 0.1, 0.0, 0.0).unwrap();
        assert!((p.rabi(-0.2).im + 1.0).abs() < 1e-6);
        assert!((p.rabi(0.2).re - 3.0).abs() < 1e-6);
    }

    #[test]
    fn preset_rejects_bad_width_and_arity() {
        assert!(RabiProfile::preset(Ansatz::Vi, &[1.0, 2.0], 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(RabiProfile::preset(Ansatz::Vi, &[1.0, 2.0], 0.1, -1.0, 0.0, 0.0).is_err());
        assert!(RabiProfile::preset(Ansatz::Viii, &[1.0, 2.0], 0.1, 0.1, 0.0, 0.0).is_err());
        assert!(RabiProfile::<f64>::zero(0.0, -1.0).is_err());
    }

    #[test]
    fn presets_vanish_at_support_edge() {
        for p in
            [RabiProfile::transmit_absorb(), RabiProfile::reflect_absorb(), RabiProfile::half_transmit_reflect_absorb()]
        {
            let max = p.max_abs_on_grid(2001);
            for x in [-1.0, 1.0] {
                assert!(p.rabi(x).norm() < 1e-8 * max, "edge value too large");
            }
            assert_eq!(p.rabi(1.0 + 1e-9).norm(), 0.0);
        }
    }

    #[test]
    fn file_round_trip() {
        let p = RabiProfile::half_transmit_reflect_absorb();
        let file = ProfileFile::from(&p);
        let back: RabiProfile<f64> = ProfileFile::from_json(&file.to_json()).unwrap().into_profile().unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn file_schema_violations() {
        assert!(ProfileFile::from_json(r#"{"terms": []}"#).is_err());
        assert!(ProfileFile::from_json(r#"{"terms": [], "tau_delta": 1, "tau_gamma": 0, "extra": 1}"#).is_err());
        let f = ProfileFile::from_json(
            r#"{"terms": [{"re": 1, "im": 0, "center_over_d": 0, "w_over_d": -0.1}], "tau_delta": 1, "tau_gamma": 0}"#,
        )
        .unwrap();
        assert!(f.into_profile::<f64>().is_err());
    }

    #[test]
    fn grid_endpoints() {
        let g = uniform_grid::<f64>(5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
