//! Dense helpers for unit-test oracles.

use nalgebra::DMatrix;

/// Dense matrix of a linear map given by its action, column by column.
pub fn dense(rows: usize, cols: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    let mut e = vec![0.0; cols];
    for j in 0..cols {
        e[j] = 1.0;
        let col = apply(&e);
        for i in 0..rows {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    m
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
