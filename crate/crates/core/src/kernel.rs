//! The energy-dependent non-local ground-state potential
//!
//! `V(x,y) = (m/4) e^{i q |x-y|} / (i q) · Omega(x) Omega(y)^*`,
//!
//! obtained by eliminating the excited state. Natural units are used
//! throughout (`hbar = m = d = 1`): energies in `hbar / tau`, wavenumbers in
//! `1/d`, and `V` in units of `V0 = hbar^2 / (m d^3)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::output::CsvTable;
use crate::profile::{uniform_grid, Coupling};
use crate::scalar::{cplx, expi, sqrt_upper, Real, C};

pub const DEFAULT_KERNEL_GRID: usize = 401;

/// `mu = (2 Delta + i gamma) / (2E)` and `q = sqrt(2E) (1 + mu)^{1/2}`,
/// `Im q >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams<T> {
    pub energy: T,
    pub mu: C<T>,
    pub q: C<T>,
}

impl<T: Real> EffectiveParams<T> {
    /// Ground-channel wavenumber `k = sqrt(2E)` (equal to `v / v_d`).
    pub fn k(&self) -> T {
        (T::lit(2.0) * self.energy).sqrt()
    }
}

/// Kinetic energy of a particle moving at `v / v_d`.
pub fn energy_from_velocity<T: Real>(velocity_ratio: T) -> T {
    velocity_ratio * velocity_ratio / T::lit(2.0)
}

pub fn effective_params<T: Real, P: Coupling<T> + ?Sized>(profile: &P, energy: T) -> Result<EffectiveParams<T>> {
    if !(energy > T::zero()) || !energy.is_finite() {
        return Err(Error::invalid(format!("energy must be positive, got {energy}")));
    }
    let two = T::lit(2.0);
    let mu = cplx(two * profile.detuning(), profile.gamma()) / (two * energy);
    let one_plus_mu = mu + T::one();
    if one_plus_mu.re == T::zero() && one_plus_mu.im == T::zero() {
        return Err(Error::DegenerateThreshold);
    }
    let q = sqrt_upper(one_plus_mu) * (two * energy).sqrt();
    Ok(EffectiveParams { energy, mu, q })
}

/// `V(x, y) / V0` for given Rabi values and `q`.
#[inline]
pub fn kernel_value<T: Real>(x: T, y: T, omega_x: C<T>, omega_y: C<T>, q: C<T>) -> C<T> {
    let i = cplx(T::zero(), T::one());
    expi(q * (x - y).abs()) / (i * q * T::lit(4.0)) * omega_x * omega_y.conj()
}

/// `V(x_i, y_j)` on a uniform grid over `[-1, 1]`, endpoints included.
#[derive(Debug, Clone)]
pub struct NonlocalKernel<T> {
    pub grid: Vec<T>,
    pub values: DenseMatrix<T>,
    pub params: EffectiveParams<T>,
}

pub fn build_kernel<T: Real, P: Coupling<T> + ?Sized>(profile: &P, energy: T, n: usize) -> Result<NonlocalKernel<T>> {
    if n < 2 {
        return Err(Error::invalid(format!("kernel grid needs at least 2 points, got {n}")));
    }
    let params = effective_params(profile, energy)?;
    let grid = uniform_grid::<T>(n);
    let omega: Vec<C<T>> = grid.iter().map(|&x| profile.rabi(x)).collect();
    let mut values = DenseMatrix::zeros(n);
    values.data.par_chunks_exact_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = kernel_value(grid[i], grid[j], omega[i], omega[j], params.q);
        }
    });
    Ok(NonlocalKernel { grid, values, params })
}

impl<T: Real> NonlocalKernel<T> {
    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn max_abs(&self) -> T {
        self.values.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    fn residual(&self, other: impl Fn(usize, usize) -> C<T>) -> T {
        let n = self.n();
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.values.at(i, j) - other(i, j)).norm());
            }
        }
        worst / scale
    }

    /// `max |V(x,y) - V(y,x)| / max |V|`; small for class VI.
    pub fn transpose_residual(&self) -> T {
        self.residual(|i, j| self.values.at(j, i))
    }

    /// `max |V(x,y) - V(-y,-x)| / max |V|`; small for class VIII.
    pub fn parity_transpose_residual(&self) -> T {
        let n = self.n();
        self.residual(|i, j| self.values.at(n - 1 - j, n - 1 - i))
    }

    /// `max |V(x,y) - V(-x,-y)| / max |V|`; small for class III.
    pub fn parity_residual(&self) -> T {
        let n = self.n();
        self.residual(|i, j| self.values.at(n - 1 - i, n - 1 - j))
    }

    /// `max |V(x,y) - V(y,x)^*| / max |V|`; small for class II.
    pub fn hermitian_residual(&self) -> T {
        self.residual(|i, j| self.values.at(j, i).conj())
    }

    /// Fraction of `sum |V|` carried by entries with `|x - y| > delta`.
    pub fn off_diagonal_fraction(&self, delta: T) -> T {
        let n = self.n();
        let mut total = T::zero();
        let mut off = T::zero();
        for i in 0..n {
            for j in 0..n {
                let a = self.values.at(i, j).norm();
                total += a;
                if (self.grid[i] - self.grid[j]).abs() > delta {
                    off += a;
                }
            }
        }
        if total == T::zero() {
            T::zero()
        } else {
            off / total
        }
    }

    /// Rows `x_over_d, y_over_d, absV_over_V0, argV`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["x_over_d", "y_over_d", "absV_over_V0", "argV"]);
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                let v = self.values.at(i, j);
                t.push(vec![
                    self.grid[i].to_f64_lossy(),
                    self.grid[j].to_f64_lossy(),
                    v.norm().to_f64_lossy(),
                    v.arg().to_f64_lossy(),
                ]);
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Ansatz, GaussianTerm, RabiProfile};

    #[test]
    fn free_detuning_gives_free_q() {
        let p = RabiProfile::<f64>::zero(0.0, 0.0).unwrap();
        let e = effective_params(&p, 3.0).unwrap();
        assert_eq!(e.mu, cplx(0.0, 0.0));
        assert!((e.q.re - 6.0_f64.sqrt()).abs() < 1e-15 && e.q.im == 0.0);
    }

    #[test]
    fn threshold_and_bad_energy() {
        // Delta = -E: mu = -1
        let p = RabiProfile::<f64>::zero(-2.0, 0.0).unwrap();
        assert!(matches!(effective_params(&p, 2.0), Err(Error::DegenerateThreshold)));
        assert!(effective_params(&p, 0.0).is_err());
        assert!(effective_params(&p, -1.0).is_err());
    }

    #[test]
    fn transmit_absorb_mu() {
        let p = RabiProfile::transmit_absorb();
        let e = effective_params(&p, energy_from_velocity(400.0)).unwrap();
        // 2 * 1413.01 / 160000
        assert!((e.mu.re - 0.017_662_625).abs() < 1e-12);
        assert_eq!(e.mu.im, 0.0);
        assert_eq!(e.q.im, 0.0);
        // kbar^2 (1 + mu) == kbar^2 + i Gamma_bar with kbar = 800, Gamma_bar = -8 i tau Delta
        let kbar2 = 800.0_f64 * 800.0;
        let lhs = kbar2 * (1.0 + e.mu.re);
        let rhs = kbar2 + 8.0 * 1413.01;
        assert!(((lhs - rhs) / rhs).abs() < 1e-12);
    }

    #[test]
    fn gamma_makes_q_complex_upper() {
        let p = RabiProfile::<f64>::zero(-3.0, 0.5).unwrap();
        let e = effective_params(&p, 1.0).unwrap();
        assert!(e.q.im > 0.0);
        let p = RabiProfile::<f64>::zero(-3.0, 0.0).unwrap();
        let e = effective_params(&p, 1.0).unwrap();
        assert!(e.q.re.abs() < 1e-15 && e.q.im > 0.0);
    }

    #[test]
    fn single_gaussian_centre_value() {
        let p = RabiProfile::new(vec![GaussianTerm::new(cplx(5.0, 2.0), 0.0, 0.2).unwrap()], 1.5, 0.0).unwrap();
        let k = build_kernel(&p, 2.0, 5).unwrap();
        // independent scalar computation of (1/4) Omega(0) Omega(0)^* / (i q)
        let mu: f64 = 2.0 * 1.5 / (2.0 * 2.0);
        let q = 2.0 * (1.0 + mu).sqrt();
        let omega_sq = 5.0 * 5.0 + 2.0 * 2.0;
        let expected = cplx(0.0, -omega_sq / (4.0 * q));
        assert!((k.values.at(2, 2) - expected).norm() < 1e-12);
    }

    #[test]
    fn zero_profile_zero_kernel() {
        let p = RabiProfile::<f64>::zero(1.0, 0.0).unwrap();
        let k = build_kernel(&p, 1.0, 7).unwrap();
        assert_eq!(k.max_abs(), 0.0);
        assert!(build_kernel(&p, 1.0, 1).is_err());
    }

    #[test]
    fn kernel_symmetries_follow_profile() {
        let e = energy_from_velocity(400.0);
        let k = build_kernel(&RabiProfile::transmit_absorb(), e, 201).unwrap();
        assert!(k.parity_transpose_residual() < 1e-10);
        assert!(k.transpose_residual() > 1e-3);

        let k = build_kernel(&RabiProfile::reflect_absorb(), e, 201).unwrap();
        assert!(k.transpose_residual() < 1e-10);
        assert!(k.parity_transpose_residual() > 1e-3);

        // mu + 1 < 0 with gamma = 0: Hermitian
        let p = RabiProfile::preset(Ansatz::I, &[3.0, 5.0], 0.2, 0.15, -5.0, 0.0).unwrap();
        let k = build_kernel(&p, 2.0, 201).unwrap();
        assert!(k.hermitian_residual() < 1e-10);
    }

    #[test]
    fn energy_doubling_halves_mu() {
        let p = RabiProfile::half_transmit_reflect_absorb();
        let e1 = effective_params(&p, 32.0).unwrap();
        let e2 = effective_params(&p, 64.0).unwrap();
        assert!((e2.mu - e1.mu / 2.0).norm() < 1e-15);
        let expected = sqrt_upper(cplx(1.0, 0.0) + e1.mu / 2.0) * (128.0_f64).sqrt();
        assert!((e2.q - expected).norm() < 1e-12);
        let k2 = build_kernel(&p, 64.0, 11).unwrap();
        assert_eq!(k2.params.q, e2.q);
    }

    #[test]
    fn closed_range_shrinks_with_mu() {
        let base = RabiProfile::<f64>::preset(Ansatz::Viii, &[10.0], 0.2, 0.15, 0.0, 0.0).unwrap();
        let mut last = f64::INFINITY;
        for mu in [-2.0, -4.0, -8.0, -12.0, -20.0] {
            let mut p = base.clone();
            // E = 1 -> mu = 2 Delta / 2
            p.detuning = mu;
            let k = build_kernel(&p, 1.0, 161).unwrap();
            assert!(k.params.q.re.abs() < 1e-14);
            let frac = k.off_diagonal_fraction(0.05);
            assert!(frac < last, "off-diagonal fraction not decreasing: {frac} >= {last}");
            last = frac;
        }
    }

    #[test]
    fn csv_has_n_squared_rows() {
        let k = build_kernel(&RabiProfile::transmit_absorb(), 80000.0, 9).unwrap();
        let t = k.to_csv();
        assert_eq!(t.rows.len(), 81);
        assert_eq!(t.header, vec!["x_over_d", "y_over_d", "absV_over_V0", "argV"]);
    }
}
