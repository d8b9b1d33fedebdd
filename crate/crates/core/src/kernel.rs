//! The discretized logarithmic kernel on a uniform grid.
//!
//! `K_ij = ln(1/|x_i − x_j|)` off the diagonal and the self-cell average
//! `K_ii = ln(1/Δ) + 3/2`. Entries depend only on `|i − j|`, so `K` is a
//! symmetric Toeplitz matrix and `K·m` is computed by circulant embedding in
//! O(n log n).

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// `∫₀¹∫₀¹ ln(1/|s − t|) ds dt`.
pub const SELF_CELL_AVERAGE: f64 = 1.5;

/// Diagonal entry for a grid with spacing `dx`.
pub fn self_cell_entry(dx: f64) -> f64 {
    (1.0 / dx).ln() + SELF_CELL_AVERAGE
}

#[derive(Clone)]
pub struct LogKernel {
    n: usize,
    column: Vec<f64>,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for LogKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LogKernel").field("n", &self.n).finish()
    }
}

impl LogKernel {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.len();
        let dx = grid.spacing();
        let column: Vec<f64> = (0..n)
            .map(|d| {
                if d == 0 {
                    self_cell_entry(dx)
                } else {
                    -(d as f64 * dx).ln()
                }
            })
            .collect();

        let size = 2 * n;
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        // circulant whose first column is [c_0 … c_{n−1}, 0, c_{n−1} … c_1]
        let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
        for d in 0..n {
            spectrum[d].re = column[d];
        }
        for d in 1..n {
            spectrum[size - d].re = column[d];
        }
        forward.process(&mut spectrum);
        Self {
            n,
            column,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.column[i.abs_diff(j)]
    }

    pub fn column(&self) -> &[f64] {
        &self.column
    }

    /// `K·m`.
    pub fn apply(&self, m: &[f64]) -> Vec<f64> {
        assert_eq!(m.len(), self.n, "kernel size mismatch");
        let size = 2 * self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (b, &x) in buf.iter_mut().zip(m) {
            b.re = x;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.spectrum) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / size as f64;
        buf[..self.n].iter().map(|c| c.re * scale).collect()
    }

    /// Dense `K·m`, O(n²). Reference path for tests and small grids.
    pub fn apply_dense(&self, m: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry(i, j) * m[j]).sum())
            .collect()
    }
}
