use nalgebra::DMatrix;
use num_complex::Complex64;

/// Singular values of a row-major complex matrix, sorted non-increasing.
///
/// Strongly rectangular inputs are first reduced to the square triangular
/// factor of a QR decomposition, which has the same singular values.
pub fn singular_values(rows: usize, cols: usize, data: &[Complex64]) -> Vec<f64> {
    assert_eq!(data.len(), rows * cols, "matrix data length");
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_row_slice(rows, cols, data);
    let mut sv: Vec<f64> = if rows.max(cols) > 2 * rows.min(cols) {
        let tall = if rows < cols { m.adjoint() } else { m };
        tall.qr().r().singular_values().iter().copied().collect()
    } else {
        m.singular_values().iter().copied().collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}
