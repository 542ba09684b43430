//! Ground-channel scattering through the non-local potential alone.
//!
//! Solves the Lippmann–Schwinger equation
//!
//! ```text
//! phi(x) = phi0(x) + ∫∫ G0(x, x') V(x', y) phi(y) dy dx',   G0 = e^{ik|x-x'|} / (ik)
//! ```
//!
//! by Nyström discretization with the trapezoid rule on the uniform kernel
//! grid over `[-1, 1]` (natural units). It never touches the excited channel,
//! which makes it an independent check of the two-level solver.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imbedding::Coefficients;
use crate::kernel::{build_kernel, energy_from_velocity, NonlocalKernel};
use crate::linalg::{DenseMatrix, Lu};
use crate::output::CsvTable;
use crate::profile::Coupling;
use crate::scalar::{cplx, expi, Real, C};

pub const DEFAULT_LS_GRID: usize = 801;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Ground-channel amplitudes for one incidence side, plane waves
/// `e^{±ikx}` unnormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundAmplitudes<T> {
    pub t: C<T>,
    pub r: C<T>,
}

/// Both sides from one factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundSolution<T> {
    pub left: GroundAmplitudes<T>,
    pub right: GroundAmplitudes<T>,
    pub n: usize,
}

impl<T: Real> GroundSolution<T> {
    pub fn coefficients(&self) -> Coefficients<T> {
        Coefficients {
            t_left: self.left.t.norm_sqr(),
            t_right: self.right.t.norm_sqr(),
            r_left: self.left.r.norm_sqr(),
            r_right: self.right.r.norm_sqr(),
        }
    }

    fn max_diff(&self, other: &Self) -> T {
        [
            self.left.t - other.left.t,
            self.left.r - other.left.r,
            self.right.t - other.right.t,
            self.right.r - other.right.r,
        ]
        .iter()
        .fold(T::zero(), |m, d| m.max(d.norm()))
    }

    fn combine(&self, other: &Self, a: T, b: T) -> Self {
        let mix = |x: C<T>, y: C<T>| x * a + y * b;
        Self {
            left: GroundAmplitudes { t: mix(self.left.t, other.left.t), r: mix(self.left.r, other.left.r) },
            right: GroundAmplitudes { t: mix(self.right.t, other.right.t), r: mix(self.right.r, other.right.r) },
            n: self.n.max(other.n),
        }
    }
}

/// `y_i = sum_l e^{ik|x_i - x_l|} f_l` on a uniform grid with spacing `h`,
/// in O(N) by a forward and a backward sweep.
fn apply_exponential_kernel<T: Real>(k: C<T>, h: T, f: &[C<T>], out: &mut [C<T>]) {
    let step = expi(k * h);
    let zero = C::new(T::zero(), T::zero());
    let mut acc = zero;
    for (o, &fi) in out.iter_mut().zip(f) {
        acc = acc * step + fi;
        *o = acc;
    }
    let mut acc = zero;
    for i in (0..f.len()).rev() {
        out[i] += acc;
        acc = (acc + f[i]) * step;
    }
}

fn trapezoid_weights<T: Real>(n: usize) -> Vec<T> {
    let h = T::lit(2.0) / T::from_count(n - 1);
    let mut w = vec![h; n];
    w[0] = h / T::lit(2.0);
    w[n - 1] = h / T::lit(2.0);
    w
}

/// The discretized system `(1 - G0 W V W) phi = phi0` and what is needed to
/// read off amplitudes.
pub struct LsSystem<T> {
    pub kernel: NonlocalKernel<T>,
    pub weights: Vec<T>,
    lu: Lu<T>,
}

impl<T: Real> LsSystem<T> {
    pub fn new<P: Coupling<T> + ?Sized>(profile: &P, energy: T, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(format!("Lippmann-Schwinger grid needs at least 3 points, got {n}")));
        }
        let kernel = build_kernel(profile, energy, n)?;
        let k = cplx(kernel.params.k(), T::zero());
        let h = T::lit(2.0) / T::from_count(n - 1);
        let weights = trapezoid_weights::<T>(n);
        let i = cplx(T::zero(), T::one());
        let g_scale = (i * k).inv();

        // column j of G0 W V W, built from column j of V W
        let columns: Vec<Vec<C<T>>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let f: Vec<C<T>> = (0..n).map(|l| kernel.values.at(l, j) * (weights[l] * weights[j])).collect();
                let mut col = vec![C::new(T::zero(), T::zero()); n];
                apply_exponential_kernel(k, h, &f, &mut col);
                col
            })
            .collect();
        let mut a = DenseMatrix::zeros(n);
        for (j, col) in columns.iter().enumerate() {
            for (r, &g) in col.iter().enumerate() {
                *a.at_mut(r, j) = -g * g_scale;
            }
        }
        for d in 0..n {
            *a.at_mut(d, d) += T::one();
        }
        let lu = Lu::factor(a)?;
        Ok(Self { kernel, weights, lu })
    }

    pub fn k(&self) -> T {
        self.kernel.params.k()
    }

    pub fn solve_side(&self, side: Side) -> GroundAmplitudes<T> {
        let n = self.kernel.n();
        let k = self.k();
        let sign = match side {
            Side::Left => T::one(),
            Side::Right => -T::one(),
        };
        let grid = &self.kernel.grid;
        let phi0: Vec<C<T>> = grid.iter().map(|&x| expi(cplx(sign * k * x, T::zero()))).collect();
        let phi = self.lu.solve(&phi0);
        let weighted: Vec<C<T>> = phi.iter().zip(&self.weights).map(|(p, &w)| *p * w).collect();
        let u = self.kernel.values.matvec(&weighted);
        let i = cplx(T::zero(), T::one());
        let scale = (i * k).inv();
        let mut forward = C::new(T::zero(), T::zero());
        let mut backward = C::new(T::zero(), T::zero());
        for m in 0..n {
            let wu = u[m] * self.weights[m];
            forward += expi(cplx(-sign * k * grid[m], T::zero())) * wu;
            backward += expi(cplx(sign * k * grid[m], T::zero())) * wu;
        }
        GroundAmplitudes { t: forward * scale + T::one(), r: backward * scale }
    }

    pub fn solve(&self) -> GroundSolution<T> {
        GroundSolution { left: self.solve_side(Side::Left), right: self.solve_side(Side::Right), n: self.kernel.n() }
    }
}

/// Amplitudes for one side at energy `E` on an `n`-point grid.
pub fn solve_ground<T: Real, P: Coupling<T> + ?Sized>(
    profile: &P,
    energy: T,
    n: usize,
    side: Side,
) -> Result<GroundAmplitudes<T>> {
    Ok(LsSystem::new(profile, energy, n)?.solve_side(side))
}

/// Both sides at velocity `v / v_d` on an `n`-point grid.
pub fn solve_both<T: Real, P: Coupling<T> + ?Sized>(
    profile: &P,
    velocity_ratio: T,
    n: usize,
) -> Result<GroundSolution<T>> {
    if !(velocity_ratio > T::zero()) {
        return Err(Error::invalid(format!("velocity must be positive, got {velocity_ratio}")));
    }
    Ok(LsSystem::new(profile, energy_from_velocity(velocity_ratio), n)?.solve())
}

/// Result of grid refinement with Romberg extrapolation.
#[derive(Debug, Clone, Copy)]
pub struct Converged<T> {
    pub solution: GroundSolution<T>,
    /// Change of the extrapolated amplitudes at the last refinement, max modulus.
    pub error_estimate: T,
    /// Finest grid used.
    pub finest_n: usize,
}

/// Refines `n -> 2n - 1` and extrapolates the amplitudes in powers of `h^2`
/// (the trapezoid error expansion; the kernel kink at `x = y` always sits
/// on a node) until successive extrapolants differ by less than `target`,
/// or the next grid would exceed `max_n`.
pub fn solve_converged<T: Real, P: Coupling<T> + ?Sized>(
    profile: &P,
    velocity_ratio: T,
    n0: usize,
    max_n: usize,
    target: T,
) -> Result<Converged<T>> {
    let mut n = n0.max(3);
    let mut previous_row = vec![solve_both(profile, velocity_ratio, n)?];
    loop {
        n = 2 * n - 1;
        let mut row = vec![solve_both(profile, velocity_ratio, n)?];
        let mut factor = T::one();
        for m in 0..previous_row.len() {
            factor *= T::lit(4.0);
            let (fine, coarse) = (row[m], previous_row[m]);
            let d = T::one() / (factor - T::one());
            row.push(fine.combine(&coarse, T::one() + d, -d));
        }
        let best = *row.last().expect("non-empty row");
        let err = best.max_diff(previous_row.last().expect("non-empty row"));
        if err < target || 2 * n - 1 > max_n {
            return Ok(Converged { solution: GroundSolution { n, ..best }, error_estimate: err, finest_n: n });
        }
        previous_row = row;
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy<T> {
    pub solutions: Vec<GroundSolution<T>>,
    /// Max amplitude change between consecutive grids.
    pub differences: Vec<T>,
    /// Observed order from the last three grids, when available.
    pub order: Option<T>,
}

impl<T: Real> ConvergenceStudy<T> {
    /// `n, T2l, T2r, R2l, R2r, diff` with `nan` for the first difference.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["n", "T2l", "T2r", "R2l", "R2r", "diff"]);
        for (idx, s) in self.solutions.iter().enumerate() {
            let c = s.coefficients();
            let d = if idx == 0 { f64::NAN } else { self.differences[idx - 1].to_f64_lossy() };
            t.push(vec![
                s.n as f64,
                c.t_left.to_f64_lossy(),
                c.t_right.to_f64_lossy(),
                c.r_left.to_f64_lossy(),
                c.r_right.to_f64_lossy(),
                d,
            ]);
        }
        t
    }
}

pub fn convergence_study<T: Real, P: Coupling<T> + ?Sized>(
    profile: &P,
    energy: T,
    n_list: &[usize],
) -> Result<ConvergenceStudy<T>> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid sizes must be strictly ascending"));
    }
    let solutions =
        n_list.iter().map(|&n| LsSystem::new(profile, energy, n).map(|s| s.solve())).collect::<Result<Vec<_>>>()?;
    let differences: Vec<T> = solutions.windows(2).map(|w| w[1].max_diff(&w[0])).collect();
    let spacing = |n: usize| T::lit(2.0) / T::from_count(n - 1);
    let order = if differences.len() >= 2 {
        let m = differences.len();
        let (d0, d1) = (differences[m - 2], differences[m - 1]);
        // differences between grids n_{j} and n_{j+1} scale like h_j^p
        let (h0, h1) = (spacing(n_list[m - 2]), spacing(n_list[m - 1]));
        (d0 > T::zero() && d1 > T::zero()).then(|| (d0 / d1).ln() / (h0 / h1).ln())
    } else {
        None
    };
    Ok(ConvergenceStudy { solutions, differences, order })
}

/// Same columns as [`crate::imbedding::sweep_to_csv`].
pub fn coefficients_to_csv<T: Real>(rows: &[(T, Coefficients<T>)]) -> CsvTable {
    let mut t = CsvTable::new(&["v_over_vd", "T2l", "T2r", "R2l", "R2r", "absorb_l", "absorb_r"]);
    for (v, c) in rows {
        t.push(vec![
            v.to_f64_lossy(),
            c.t_left.to_f64_lossy(),
            c.t_right.to_f64_lossy(),
            c.r_left.to_f64_lossy(),
            c.r_right.to_f64_lossy(),
            c.absorb_left().to_f64_lossy(),
            c.absorb_right().to_f64_lossy(),
        ]);
    }
    t
}
