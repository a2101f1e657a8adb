//! Pauli matrices and small helpers for the 2x2 / 4x4 complex algebra
//! used throughout the crate.
//!
//! Basis convention for polarization qubits, chosen so that the Stokes
//! reconstruction identity holds literally:
//! `sigma(1)` measures the +-45 degree linear balance, `sigma(2)` the
//! circular balance, `sigma(3)` the x/y linear balance.

use nalgebra::{Matrix2, Matrix4, Vector3};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

pub const I: C64 = Complex::new(0.0, 1.0);
pub const ONE: C64 = Complex::new(1.0, 0.0);
pub const ZERO: C64 = Complex::new(0.0, 0.0);

pub fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// sigma(0) = identity.
pub fn sigma0() -> Mat2 {
    Mat2::identity()
}

pub fn sigma1() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma2() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma3() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// The four Pauli matrices indexed 0..=3.
pub fn sigma(i: usize) -> Mat2 {
    match i {
        0 => sigma0(),
        1 => sigma1(),
        2 => sigma2(),
        3 => sigma3(),
        _ => panic!("pauli index out of range: {i}"),
    }
}

/// v . sigma for a real 3-vector v.
pub fn dot_sigma(v: &Vector3<f64>) -> Mat2 {
    Mat2::new(
        Complex::new(v.z, 0.0),
        Complex::new(v.x, -v.y),
        Complex::new(v.x, v.y),
        Complex::new(-v.z, 0.0),
    )
}

/// Real part of Tr(m), asserting the imaginary part is negligible.
pub fn re_trace(m: &Mat4) -> f64 {
    let t = m.trace();
    debug_assert!(t.im.abs() < 1e-9, "trace expected real, got im {}", t.im);
    t.re
}

/// Max entrywise |a - b|.
pub fn max_abs_diff2(a: &Mat2, b: &Mat2) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff4(a: &Mat4, b: &Mat4) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermiticity defect: max |m - m^dagger| entrywise.
pub fn hermiticity_defect2(m: &Mat2) -> f64 {
    max_abs_diff2(m, &m.adjoint())
}

pub fn hermiticity_defect4(m: &Mat4) -> f64 {
    max_abs_diff4(m, &m.adjoint())
}

/// Eigenvalues of a Hermitian 2x2 matrix, ascending.
pub fn hermitian_eigenvalues2(m: &Mat2) -> [f64; 2] {
    let half_tr = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
    let disc = (half_tr * half_tr - det).max(0.0).sqrt();
    [half_tr - disc, half_tr + disc]
}

/// Eigenvalues of a Hermitian 4x4 matrix, ascending.
pub fn hermitian_eigenvalues4(m: &Mat4) -> [f64; 4] {
    let sym = m.symmetric_eigen();
    let mut ev = [0.0; 4];
    for (slot, v) in ev.iter_mut().zip(sym.eigenvalues.iter()) {
        *slot = *v;
    }
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}
