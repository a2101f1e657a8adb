//! Deterministic text output. Every float goes through the same
//! 17-significant-digit formatter so repeated runs are byte-identical.

use bellmode::floatfmt::fmt_f64;
use bellmode::pauli::{C64, Mat2, Mat4};
use nalgebra::Matrix2;

pub fn real(x: f64) -> String {
    fmt_f64(x)
}

pub fn complex(z: C64) -> String {
    format!("[{}, {}]", fmt_f64(z.re), fmt_f64(z.im))
}

pub fn real_list(xs: &[f64]) -> String {
    let cells: Vec<String> = xs.iter().map(|x| fmt_f64(*x)).collect();
    format!("[{}]", cells.join(", "))
}

pub fn real_matrix2(m: &Matrix2<f64>) -> String {
    format!(
        "[[{}, {}], [{}, {}]]",
        fmt_f64(m[(0, 0)]),
        fmt_f64(m[(0, 1)]),
        fmt_f64(m[(1, 0)]),
        fmt_f64(m[(1, 1)])
    )
}

pub fn complex_matrix2(m: &Mat2) -> String {
    let rows: Vec<String> = (0..2)
        .map(|i| {
            let cells: Vec<String> = (0..2).map(|j| complex(m[(i, j)])).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn complex_matrix4(m: &Mat4) -> String {
    let rows: Vec<String> = (0..4)
        .map(|i| {
            let cells: Vec<String> = (0..4).map(|j| complex(m[(i, j)])).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn real_table4(s: &[[f64; 4]; 4]) -> String {
    let rows: Vec<String> = s.iter().map(|row| real_list(row)).collect();
    format!("[{}]", rows.join(", "))
}
