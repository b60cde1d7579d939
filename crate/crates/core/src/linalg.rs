// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small dense linear algebra: a complex scalar, 3×3 rotations, Hermitian
//! 3×3 eigenvalues via the characteristic cubic, and the n×n routines
//! (LU solve, Jacobi eigendecomposition, Cholesky) used by the fitting
//! engine. Everything is fixed-size or lives on small heap buffers; no
//! external linear-algebra crate is involved.

use crate::fm;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Complex number over f64.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl Cplx {
    pub const ZERO: Cplx = Cplx { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Cplx { re, im }
    }

    pub fn real(re: f64) -> Self {
        Cplx { re, im: 0.0 }
    }

    pub fn i_times(v: f64) -> Self {
        Cplx { re: 0.0, im: v }
    }

    pub fn conj(self) -> Self {
        Cplx {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        fm::hypot(self.re, self.im)
    }

    pub fn scale(self, s: f64) -> Self {
        Cplx {
            re: self.re * s,
            im: self.im * s,
        }
    }

    /// exp(iθ)
    pub fn cis(theta: f64) -> Self {
        Cplx {
            re: fm::cos(theta),
            im: fm::sin(theta),
        }
    }
}

impl Add for Cplx {
    type Output = Cplx;
    fn add(self, rhs: Cplx) -> Cplx {
        Cplx::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl AddAssign for Cplx {
    fn add_assign(&mut self, rhs: Cplx) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for Cplx {
    type Output = Cplx;
    fn sub(self, rhs: Cplx) -> Cplx {
        Cplx::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for Cplx {
    type Output = Cplx;
    fn mul(self, rhs: Cplx) -> Cplx {
        Cplx::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Neg for Cplx {
    type Output = Cplx;
    fn neg(self) -> Cplx {
        Cplx::new(-self.re, -self.im)
    }
}

/// 3×3 real matrix, row-major.
pub type Mat3 = [[f64; 3]; 3];

pub const MAT3_IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat3_transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[j][i];
        }
    }
    out
}

pub fn mat3_det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn mat3_apply(a: &Mat3, v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    }
    out
}

/// Largest deviation of RᵀR from the identity.
pub fn mat3_orthonormality_defect(a: &Mat3) -> f64 {
    let g = mat3_mul(&mat3_transpose(a), a);
    let mut worst: f64 = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

pub fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = fm::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Active right-handed rotation about `axis` by `angle_deg` (Rodrigues).
pub fn rotation_about(axis: [f64; 3], angle_deg: f64) -> Mat3 {
    let u = normalize3(axis);
    let th = angle_deg * fm::PI / 180.0;
    let (s, c) = (fm::sin(th), fm::cos(th));
    let omc = 1.0 - c;
    [
        [
            c + u[0] * u[0] * omc,
            u[0] * u[1] * omc - u[2] * s,
            u[0] * u[2] * omc + u[1] * s,
        ],
        [
            u[1] * u[0] * omc + u[2] * s,
            c + u[1] * u[1] * omc,
            u[1] * u[2] * omc - u[0] * s,
        ],
        [
            u[2] * u[0] * omc - u[1] * s,
            u[2] * u[1] * omc + u[0] * s,
            c + u[2] * u[2] * omc,
        ],
    ]
}

/// Eigenvalues of a 3×3 Hermitian matrix, ascending.
///
/// The characteristic polynomial of a Hermitian matrix has real
/// coefficients and three real roots, so the trigonometric cubic formula
/// applies directly — no iteration.
pub fn eigvals_hermitian3(h: &[[Cplx; 3]; 3]) -> [f64; 3] {
    let d = [h[0][0].re, h[1][1].re, h[2][2].re];
    let o01 = h[0][1].norm_sqr();
    let o02 = h[0][2].norm_sqr();
    let o12 = h[1][2].norm_sqr();

    // λ³ − c2 λ² + c1 λ − c0
    let c2 = d[0] + d[1] + d[2];
    let c1 = d[0] * d[1] + d[0] * d[2] + d[1] * d[2] - o01 - o02 - o12;
    let tri = h[0][1] * h[1][2] * h[0][2].conj();
    let c0 = d[0] * d[1] * d[2] - d[0] * o12 - d[1] * o02 - d[2] * o01 + 2.0 * tri.re;

    solve_real_cubic(c2, c1, c0)
}

/// Roots of λ³ − c2 λ² + c1 λ − c0 when all three are known to be real.
fn solve_real_cubic(c2: f64, c1: f64, c0: f64) -> [f64; 3] {
    // Depress: λ = t + c2/3, t³ + p t + q = 0.
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = -c0 + c2 * (c1 - 2.0 * c2 * c2 / 9.0) / 3.0;

    let mut roots = if p >= -1e-300 {
        // Triple/near-triple root.
        [shift; 3]
    } else {
        let m = 2.0 * fm::sqrt(-p / 3.0);
        let mut arg = 3.0 * q / (p * m);
        arg = arg.clamp(-1.0, 1.0);
        let phi = fm::acos(arg) / 3.0;
        [
            m * fm::cos(phi) + shift,
            m * fm::cos(phi - 2.0 * fm::PI / 3.0) + shift,
            m * fm::cos(phi - 4.0 * fm::PI / 3.0) + shift,
        ]
    };
    roots.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Dense n×n linear solve (LU, partial pivoting). `a` is row-major and is
/// consumed. Returns `None` when a pivot falls below `tol` × row scale.
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale: f64 = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let inv = 1.0 / a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] * inv;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut v = b[col];
        for k in col + 1..n {
            v -= a[col * n + k] * b[k];
        }
        b[col] = v / a[col * n + col];
    }
    Some(b)
}

/// Symmetric n×n inverse via Gauss-Jordan. Returns `None` on singularity.
pub fn invert_symmetric(mat: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut a = mat.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
                inv.swap(col * n + k, piv * n + k);
            }
        }
        let d = 1.0 / a[col * n + col];
        for k in 0..n {
            a[col * n + k] *= d;
            inv[col * n + k] *= d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                a[row * n + k] -= f * a[col * n + k];
                inv[row * n + k] -= f * inv[col * n + k];
            }
        }
    }
    Some(inv)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, column eigenvectors), unordered.
pub fn jacobi_eigen_sym(mat: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = mat.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + fm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + fm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / fm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let evals = (0..n).map(|i| a[i * n + i]).collect();
    (evals, v)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(mat: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = mat[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = fm::sqrt(sum);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm_from_parts(diag: [f64; 3], im_off: [f64; 3]) -> [[Cplx; 3]; 3] {
        // Off-diagonals i·a for (01, 02, 12).
        let mut h = [[Cplx::ZERO; 3]; 3];
        for i in 0..3 {
            h[i][i] = Cplx::real(diag[i]);
        }
        h[0][1] = Cplx::i_times(im_off[0]);
        h[1][0] = h[0][1].conj();
        h[0][2] = Cplx::i_times(im_off[1]);
        h[2][0] = h[0][2].conj();
        h[1][2] = Cplx::i_times(im_off[2]);
        h[2][1] = h[1][2].conj();
        h
    }

    #[test]
    fn eigvals_diagonal() {
        let h = herm_from_parts([3.0, -1.0, 2.0], [0.0, 0.0, 0.0]);
        let e = eigvals_hermitian3(&h);
        for (got, want) in e.iter().zip([-1.0, 2.0, 3.0].iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn eigvals_match_characteristic_polynomial() {
        // Verify each root satisfies det(H − λI) ≈ 0 through the real cubic.
        let h = herm_from_parts([4260.8, 3179.0, -7439.8], [120.0, -310.0, 55.5]);
        let e = eigvals_hermitian3(&h);
        let c2 = h[0][0].re + h[1][1].re + h[2][2].re;
        let o01 = h[0][1].norm_sqr();
        let o02 = h[0][2].norm_sqr();
        let o12 = h[1][2].norm_sqr();
        let c1 = h[0][0].re * h[1][1].re + h[0][0].re * h[2][2].re + h[1][1].re * h[2][2].re
            - o01
            - o02
            - o12;
        let tri = h[0][1] * h[1][2] * h[0][2].conj();
        let c0 = h[0][0].re * h[1][1].re * h[2][2].re
            - h[0][0].re * o12
            - h[1][1].re * o02
            - h[2][2].re * o01
            + 2.0 * tri.re;
        for &lam in &e {
            let p = ((lam - c2) * lam + c1) * lam - c0;
            assert!(p.abs() < 1e-3 * lam.abs().max(1.0).powi(2), "residual {p}");
        }
        assert!(e[0] <= e[1] && e[1] <= e[2]);
    }

    #[test]
    fn rotation_is_orthonormal() {
        let r = rotation_about([1.0, 2.0, -0.5], 37.0);
        assert!(mat3_orthonormality_defect(&r) < 1e-12);
        assert!((mat3_det(&r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_composes() {
        let r1 = rotation_about([0.0, 0.0, 1.0], 30.0);
        let r2 = rotation_about([0.0, 0.0, 1.0], 60.0);
        let r90 = rotation_about([0.0, 0.0, 1.0], 90.0);
        let comp = mat3_mul(&r2, &r1);
        for i in 0..3 {
            for j in 0..3 {
                assert!((comp[i][j] - r90[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_dense_roundtrip() {
        let a = vec![4.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 2.0];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x_true[j]).sum())
            .collect();
        let x = solve_dense(a, b, 3).unwrap();
        for (got, want) in x.iter().zip(x_true.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_dense_singular_detected() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(solve_dense(a, vec![1.0, 2.0], 2).is_none());
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // A = Q diag(1,2,5) Qᵀ for a hand-built rotation Q.
        let q = rotation_about([1.0, 1.0, 1.0], 53.0);
        let d = [1.0, 2.0, 5.0];
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = (0..3).map(|k| q[i][k] * d[k] * q[j][k]).sum();
            }
        }
        let flat: Vec<f64> = a.iter().flatten().copied().collect();
        let (mut evals, vecs) = jacobi_eigen_sym(&flat, 3);
        evals.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
        for (got, want) in evals.iter().zip(d.iter()) {
            assert!((got - want).abs() < 1e-10);
        }
        // Columns orthonormal.
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| vecs[k * 3 + i] * vecs[k * 3 + j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((dot - target).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cholesky_roundtrip() {
        let m = vec![4.0, 2.0, 0.4, 2.0, 3.0, 0.1, 0.4, 0.1, 1.5];
        let l = cholesky(&m, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((v - m[i * 3 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(&m, 2).is_none());
    }

    #[test]
    fn invert_symmetric_identity() {
        let m = vec![2.0, 0.3, 0.3, 1.0];
        let inv = invert_symmetric(&m, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let v: f64 = (0..2).map(|k| m[i * 2 + k] * inv[k * 2 + j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((v - target).abs() < 1e-12);
            }
        }
    }
}
