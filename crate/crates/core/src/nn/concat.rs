use alloc::format;

use crate::error::{shape, Result};
use crate::math::Matrix;

/// Row-wise `[h_t ‖ y_t]`, LSTM channels first.
pub fn concat_channels(h_seq: &Matrix, y_seq: &Matrix) -> Result<Matrix> {
    if h_seq.rows() != y_seq.rows() {
        return Err(shape(format!(
            "cannot concatenate sequences of length {} and {}",
            h_seq.rows(),
            y_seq.rows()
        )));
    }
    let (hw, yw) = (h_seq.cols(), y_seq.cols());
    let mut z = Matrix::zeros(h_seq.rows(), hw + yw);
    for t in 0..h_seq.rows() {
        let row = z.row_mut(t);
        row[..hw].copy_from_slice(h_seq.row(t));
        row[hw..].copy_from_slice(y_seq.row(t));
    }
    Ok(z)
}

/// Reverse of [`concat_channels`]: splits a `T × (H+F)` gradient after column `H`.
pub fn split_channels(z: &Matrix, first_width: usize) -> Result<(Matrix, Matrix)> {
    if first_width > z.cols() {
        return Err(shape(format!("split at column {first_width} of a width-{} matrix", z.cols())));
    }
    let rest = z.cols() - first_width;
    let mut a = Matrix::zeros(z.rows(), first_width);
    let mut b = Matrix::zeros(z.rows(), rest);
    for t in 0..z.rows() {
        a.row_mut(t).copy_from_slice(&z.row(t)[..first_width]);
        b.row_mut(t).copy_from_slice(&z.row(t)[first_width..]);
    }
    Ok((a, b))
}
