//! Dormand–Prince 5(4) integrator for fixed-size complex systems.
//!
//! Step-size control follows Hairer, Nørsett & Wanner (PI-free variant with
//! safety factor 0.9 and growth limited to `[0.2, 5]`). The error norm is the
//! RMS over components of `|err_i| / (atol + rtol * max(|y_i|, |y_new_i|))`.

use std::ops::ControlFlow;

use thiserror::Error;

use crate::scalar::{Real, C};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({max_steps}) exceeded at t = {t:.6e}")]
    MaxSteps { t: f64, max_steps: usize },
    #[error("non-finite state at t = {t:.6e}")]
    NonFinite { t: f64 },
    #[error("integration aborted by observer at t = {t:.6e}")]
    Aborted { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    pub rtol: T,
    pub atol: T,
}

impl<T: Real> Tolerances<T> {
    pub fn new(rtol: T, atol: T) -> Self {
        Self { rtol, atol }
    }
}

impl Default for Tolerances<f64> {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub tol: Tolerances<T>,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<T>,
    /// Upper bound on `|h|`; unbounded when `None`.
    pub h_max: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> OdeOptions<T> {
    pub fn with_tol(tol: Tolerances<T>) -> Self {
        Self { tol, h_init: None, h_max: None, max_steps: 2_000_000 }
    }
}

/// Result of a successful integration.
#[derive(Debug, Clone)]
pub struct OdeSolution<T, const N: usize> {
    pub y: [C<T>; N],
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Last accepted step size; a good `h_init` for a continuation.
    pub last_step: T,
    /// Sum of the local error estimates (in absolute units, max over
    /// components) of all accepted steps. A crude global error indicator.
    pub error_sum: T,
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// error coefficients: b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn combine<T: Real, const N: usize>(y: &[C<T>; N], h: T, terms: &[(f64, &[C<T>; N])]) -> [C<T>; N] {
    let mut out = *y;
    for &(a, k) in terms {
        let s = h * T::lit(a);
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

fn all_finite<T: Real, const N: usize>(y: &[C<T>; N]) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Pulls `t` strictly inside `[a, b]` so that a right-hand side with a jump
/// at a segment end is evaluated on the segment's own side.
pub(crate) fn interior<T: Real>(t: T, a: T, b: T) -> T {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let eps = (hi - lo) * T::lit(1e-12);
    t.max(lo + eps).min(hi - eps)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `observe` is called after every accepted step with the new `(t, y)`;
/// returning `ControlFlow::Break` stops the integration with
/// [`OdeError::Aborted`].
pub fn integrate<T, const N: usize, F, O>(
    mut f: F,
    t0: T,
    t1: T,
    y0: [C<T>; N],
    opts: &OdeOptions<T>,
    mut observe: O,
) -> Result<OdeSolution<T, N>, OdeError>
where
    T: Real,
    F: FnMut(T, &[C<T>; N]) -> [C<T>; N],
    O: FnMut(T, &[C<T>; N]) -> ControlFlow<()>,
{
    let span = t1 - t0;
    let mut sol =
        OdeSolution { y: y0, accepted: 0, rejected: 0, rhs_evals: 0, last_step: T::zero(), error_sum: T::zero() };
    if span == T::zero() {
        return Ok(sol);
    }
    let dir = span.signum();
    let Tolerances { rtol, atol } = opts.tol;
    let h_max = opts.h_max.map(|h| h.abs()).unwrap_or_else(|| span.abs());

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    sol.rhs_evals += 1;

    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => initial_step(&mut f, t, &y, &k1, dir, rtol, atol, &mut sol.rhs_evals),
    };
    h = h.min(h_max).min(span.abs());

    let eps = T::epsilon();
    let safety = T::lit(0.9);
    let fac_min = T::lit(0.2);
    let fac_max = T::lit(5.0);
    let mut last_rejected = false;

    loop {
        let remaining = (t1 - t).abs();
        if remaining <= eps * T::lit(10.0) * t1.abs().max(T::one()) {
            break;
        }
        if sol.accepted + sol.rejected >= opts.max_steps {
            return Err(OdeError::MaxSteps { t: t.to_f64_lossy(), max_steps: opts.max_steps });
        }
        if h < eps * T::lit(16.0) * t.abs().max(T::one()) {
            return Err(OdeError::StepSizeUnderflow { t: t.to_f64_lossy(), h: h.to_f64_lossy() });
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let hs = h * dir;

        let y2 = combine(&y, hs, &[(A21, &k1)]);
        let k2 = f(t + hs * T::lit(C2), &y2);
        let y3 = combine(&y, hs, &[(A31, &k1), (A32, &k2)]);
        let k3 = f(t + hs * T::lit(C3), &y3);
        let y4 = combine(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = f(t + hs * T::lit(C4), &y4);
        let y5 = combine(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = f(t + hs * T::lit(C5), &y5);
        let y6 = combine(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let t_new = if last { t1 } else { t + hs };
        let k6 = f(t_new, &y6);
        let y_new = combine(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t_new, &y_new);
        sol.rhs_evals += 6;

        let mut err_sq = T::zero();
        let mut err_abs = T::zero();
        for i in 0..N {
            let e = (k1[i] * T::lit(E1)
                + k3[i] * T::lit(E3)
                + k4[i] * T::lit(E4)
                + k5[i] * T::lit(E5)
                + k6[i] * T::lit(E6)
                + k7[i] * T::lit(E7))
                * h;
            let en = e.norm();
            let sc = atol + rtol * y[i].norm().max(y_new[i].norm());
            err_sq += (en / sc) * (en / sc);
            err_abs = err_abs.max(en);
        }
        let err = (err_sq / T::from_count(N)).sqrt();

        if !err.is_finite() || !all_finite(&y_new) {
            sol.rejected += 1;
            last_rejected = true;
            h *= fac_min;
            continue;
        }

        if err <= T::one() {
            t = t_new;
            y = y_new;
            k1 = k7;
            sol.accepted += 1;
            sol.last_step = h;
            sol.error_sum += err_abs;
            if observe(t, &y).is_break() {
                return Err(OdeError::Aborted { t: t.to_f64_lossy() });
            }
            if last {
                break;
            }
            let mut fac =
                if err == T::zero() { fac_max } else { (safety * err.powf(T::lit(-0.2))).min(fac_max).max(fac_min) };
            if last_rejected {
                fac = fac.min(T::one());
            }
            last_rejected = false;
            h = (h * fac).min(h_max);
        } else {
            sol.rejected += 1;
            last_rejected = true;
            let fac = (safety * err.powf(T::lit(-0.2))).max(fac_min);
            h *= fac;
        }
    }
    if !all_finite(&y) {
        return Err(OdeError::NonFinite { t: t.to_f64_lossy() });
    }
    sol.y = y;
    Ok(sol)
}

#[allow(clippy::too_many_arguments)]
fn initial_step<T, const N: usize, F>(
    f: &mut F,
    t: T,
    y: &[C<T>; N],
    k1: &[C<T>; N],
    dir: T,
    rtol: T,
    atol: T,
    evals: &mut usize,
) -> T
where
    T: Real,
    F: FnMut(T, &[C<T>; N]) -> [C<T>; N],
{
    let n = T::from_count(N);
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for i in 0..N {
        let sc = atol + rtol * y[i].norm();
        d0 += (y[i].norm() / sc).powi(2);
        d1 += (k1[i].norm() / sc).powi(2);
    }
    let d0 = (d0 / n).sqrt();
    let d1 = (d1 / n).sqrt();
    let tiny = T::lit(1e-5);
    // well above the underflow check in `integrate`, also in single precision
    let floor = T::lit(1e-6).max(T::epsilon() * T::lit(1e3) * t.abs().max(T::one()));
    let h0 = if d0 < tiny || d1 < tiny { floor } else { T::lit(0.01) * d0 / d1 };
    let y1 = combine(y, h0 * dir, &[(1.0, k1)]);
    let k2 = f(t + h0 * dir, &y1);
    *evals += 1;
    let mut d2 = T::zero();
    for i in 0..N {
        let sc = atol + rtol * y[i].norm();
        d2 += ((k2[i] - k1[i]).norm() / sc).powi(2);
    }
    let d2 = (d2 / n).sqrt() / h0;
    let dmax = d1.max(d2);
    let h1 =
        if dmax <= T::lit(1e-15) { (h0 * T::lit(1e-3)).max(floor) } else { (T::lit(0.01) / dmax).powf(T::lit(0.2)) };
    (h0 * T::lit(100.0)).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    fn no_obs<T: Real, const N: usize>(_: T, _: &[C<T>; N]) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }

    #[test]
    fn complex_exponential_matches_closed_form() {
        // y' = (i w - a) y
        let lam = cplx(-0.3_f64, 7.0);
        let opts = OdeOptions::with_tol(Tolerances::new(1e-10, 1e-13));
        let sol = integrate(|_, y: &[C<f64>; 1]| [lam * y[0]], 0.0, 2.0, [cplx(1.0, 0.0)], &opts, no_obs).unwrap();
        let exact = (lam * 2.0).exp();
        assert!((sol.y[0] - exact).norm() < 1e-8, "{:?} vs {:?}", sol.y[0], exact);
    }

    #[test]
    fn backward_integration() {
        let opts = OdeOptions::with_tol(Tolerances::new(1e-10, 1e-13));
        let sol = integrate(|_, y: &[C<f64>; 1]| [y[0]], 1.0, 0.0, [cplx(1.0, 0.0)], &opts, no_obs).unwrap();
        assert!((sol.y[0].re - (-1.0_f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let opts = OdeOptions::with_tol(Tolerances::new(1e-11, 1e-14));
        let sol = integrate(
            |_, y: &[C<f64>; 2]| [y[1], -y[0] * 25.0],
            0.0,
            10.0,
            [cplx(1.0, 0.0), cplx(0.0, 0.0)],
            &opts,
            no_obs,
        )
        .unwrap();
        assert!((sol.y[0].re - (50.0_f64).cos()).abs() < 1e-8);
    }

    #[test]
    fn observer_abort() {
        let opts = OdeOptions::with_tol(Tolerances::new(1e-8, 1e-10));
        let err = integrate(
            |_, y: &[C<f64>; 1]| [y[0] * 3.0],
            0.0,
            10.0,
            [cplx(1.0, 0.0)],
            &opts,
            |_, y| if y[0].norm() > 100.0 { ControlFlow::Break(()) } else { ControlFlow::Continue(()) },
        )
        .unwrap_err();
        match err {
            OdeError::Aborted { t } => assert!(t > 1.0 && t < 2.0),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn zero_span_is_identity() {
        let opts = OdeOptions::with_tol(Tolerances::new(1e-8, 1e-10));
        let sol = integrate(|_, y: &[C<f64>; 1]| [y[0]], 1.0, 1.0, [cplx(2.0, 1.0)], &opts, no_obs).unwrap();
        assert_eq!(sol.y[0], cplx(2.0, 1.0));
        assert_eq!(sol.accepted, 0);
    }

    #[test]
    fn works_in_single_precision() {
        let opts = OdeOptions::with_tol(Tolerances::new(1e-5_f32, 1e-7));
        let sol =
            integrate(|_, y: &[C<f32>; 1]| [y[0] * cplx(0.0, 1.0)], 0.0, 3.0, [cplx(1.0, 0.0)], &opts, no_obs).unwrap();
        assert!((sol.y[0] - cplx(3.0_f32.cos(), 3.0_f32.sin())).norm() < 1e-4);
    }
}
