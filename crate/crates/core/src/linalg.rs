//! Small complex linear algebra: 2×2 matrices and a dense LU solver.

use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T>(pub [[C<T>; 2]; 2]);

impl<T: Real> Mat2<T> {
    pub fn new(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        let (o, z) = (C::new(T::one(), T::zero()), C::new(T::zero(), T::zero()));
        Mat2([[o, z], [z, o]])
    }

    pub fn zero() -> Self {
        let z = C::new(T::zero(), T::zero());
        Mat2([[z, z], [z, z]])
    }

    pub fn diag(a: C<T>, d: C<T>) -> Self {
        let z = C::new(T::zero(), T::zero());
        Mat2([[a, z], [z, d]])
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C<T> {
        self.0[r][c]
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn det(&self) -> C<T> {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.0.iter().flatten().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn apply(&self, v: [C<T>; 2]) -> [C<T>; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn to_array(&self) -> [C<T>; 4] {
        let m = &self.0;
        [m[0][0], m[0][1], m[1][0], m[1][1]]
    }

    pub fn from_slice(s: &[C<T>]) -> Self {
        Mat2([[s[0], s[1]], [s[2], s[3]]])
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]])
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(C::new(-T::one(), T::zero()))
    }
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix<T> {
    pub n: usize,
    pub data: Vec<C<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C::new(T::zero(), T::zero()); n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C<T> {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut C<T> {
        &mut self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[C<T>]) -> Vec<C<T>> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + *a * *b))
            .collect()
    }
}

// below this many remaining rows the elimination stays sequential
const PARALLEL_LU_ROWS: usize = 192;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    /// Factorizes `a` in place. Fails when a pivot falls below
    /// `n * eps * max|a_ij|`.
    pub fn factor(mut a: DenseMatrix<T>) -> Result<Self> {
        let n = a.n;
        let scale = a.data.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        let threshold = T::epsilon() * T::from_count(n.max(1)) * scale;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, a.at(i, k).norm()))
                    .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= threshold || !pmax.is_finite() {
                return Err(Error::SingularSystem { pivot: pmax.to_f64_lossy(), column: k });
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a.at(k, k);
            let (head, tail) = a.data.split_at_mut((k + 1) * n);
            let row_k = &head[k * n..(k + 1) * n];
            let eliminate = |row_i: &mut [C<T>]| {
                let l = row_i[k] / pivot;
                row_i[k] = l;
                if l.re == T::zero() && l.im == T::zero() {
                    return;
                }
                for (x, &u) in row_i[k + 1..].iter_mut().zip(&row_k[k + 1..]) {
                    *x -= l * u;
                }
            };
            if n - k > PARALLEL_LU_ROWS {
                tail.par_chunks_exact_mut(n).for_each(eliminate);
            } else {
                tail.chunks_exact_mut(n).for_each(eliminate);
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let n = self.lu.n;
        let mut x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in 0..i {
                s -= row[j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn mat2_product_and_det() {
        let a = Mat2::new(cplx(1.0, 2.0), cplx(0.0, 1.0), cplx(3.0, 0.0), cplx(-1.0, 0.5));
        let b = Mat2::new(cplx(0.5, 0.0), cplx(1.0, -1.0), cplx(2.0, 2.0), cplx(0.0, 0.0));
        let ab = a * b;
        assert!((ab.det() - a.det() * b.det()).norm() < 1e-12);
        assert_eq!(Mat2::identity() * a, a);
    }

    #[test]
    fn lu_solves_small_system() {
        let mut m = DenseMatrix::<f64>::zeros(3);
        let vals = [
            cplx(2.0, 1.0),
            cplx(0.0, 0.0),
            cplx(1.0, 0.0),
            cplx(0.0, 0.0),
            cplx(0.0, 3.0),
            cplx(1.0, 1.0),
            cplx(4.0, 0.0),
            cplx(1.0, 0.0),
            cplx(0.0, -1.0),
        ];
        m.data.copy_from_slice(&vals);
        let x = vec![cplx(1.0, 0.0), cplx(-2.0, 1.0), cplx(0.5, 0.5)];
        let b = m.matvec(&x);
        let lu = Lu::factor(m).unwrap();
        let got = lu.solve(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-12);
        }
    }

    #[test]
    fn lu_reports_singular() {
        let mut m = DenseMatrix::<f64>::zeros(2);
        m.data.copy_from_slice(&[cplx(1.0, 0.0), cplx(2.0, 0.0), cplx(2.0, 0.0), cplx(4.0, 0.0)]);
        assert!(matches!(Lu::factor(m), Err(Error::SingularSystem { .. })));
    }
}
