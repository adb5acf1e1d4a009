//! Two-dimensional FFTs over row-major `ndarray` grids.
//!
//! Rows are transformed in parallel; columns by transposing, transforming the
//! rows and transposing back. Plans are immutable and shared between workers;
//! each worker owns its scratch buffer.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

fn transform_rows(data: &mut Array2<Complex64>, fft: &Arc<dyn Fft<f64>>) {
    let width = data.ncols();
    let slice = data
        .as_slice_mut()
        .expect("grids are kept in standard layout");
    slice.par_chunks_mut(width).for_each_init(
        || vec![Complex64::default(); fft.get_inplace_scratch_len()],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

fn transform(data: &mut Array2<Complex64>, direction: FftDirection) {
    let (ny, nx) = data.dim();
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft(nx, direction);
    let col_fft = planner.plan_fft(ny, direction);

    if !data.is_standard_layout() {
        *data = data.as_standard_layout().into_owned();
    }
    transform_rows(data, &row_fft);
    let mut transposed = data.t().as_standard_layout().into_owned();
    transform_rows(&mut transposed, &col_fft);
    data.assign(&transposed.t());
}

/// Unnormalized forward transform with kernel `e^{−2πi k·j/N}`.
pub fn forward(data: &mut Array2<Complex64>) {
    transform(data, FftDirection::Forward);
}

/// Inverse transform including the `1/N` factor.
pub fn inverse(data: &mut Array2<Complex64>) {
    transform(data, FftDirection::Inverse);
    let scale = 1.0 / data.len() as f64;
    data.par_mapv_inplace(|v| v * scale);
}

/// Moves index 0 to index `(ny/2, nx/2)`.
pub fn fftshift<T: Clone>(data: &Array2<T>) -> Array2<T> {
    let (ny, nx) = data.dim();
    let (sy, sx) = (ny / 2, nx / 2);
    Array2::from_shape_fn((ny, nx), |(j, i)| {
        data[[(j + ny - sy) % ny, (i + nx - sx) % nx]].clone()
    })
}

/// Signed DFT index of each position after [`fftshift`]: `k − N/2`.
pub fn shifted_indices(n: usize) -> impl Iterator<Item = i64> {
    let half = (n / 2) as i64;
    (0..n as i64).map(move |k| k - half)
}
