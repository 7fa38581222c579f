//! Separable multidimensional FFTs over row-major arrays with odd axis
//! lengths, as used by the Nyquist grid.
//!
//! Forward transforms use `exp(-2πi jk/g)`, inverse transforms `exp(+2πi jk/g)`;
//! neither is normalised. Real transforms keep the half spectrum
//! `k_last ∈ [0, g_last/2]` of the last axis.

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

/// Lines gathered per batch when transforming a strided axis.
const BATCH: usize = 32;

pub struct GridFft {
    shape: Vec<usize>,
    half_shape: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl GridFft {
    pub fn new(shape: &[usize]) -> Self {
        assert!(!shape.is_empty() && shape.iter().all(|&g| g % 2 == 1));
        let mut planner = FftPlanner::new();
        let fwd = shape.iter().map(|&g| planner.plan_fft_forward(g)).collect();
        let inv = shape.iter().map(|&g| planner.plan_fft_inverse(g)).collect();
        let last = *shape.last().unwrap();
        let mut real = RealFftPlanner::new();
        let mut half_shape = shape.to_vec();
        *half_shape.last_mut().unwrap() = last / 2 + 1;
        Self {
            shape: shape.to_vec(),
            half_shape,
            fwd,
            inv,
            r2c: real.plan_fft_forward(last),
            c2r: real.plan_fft_inverse(last),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shape of the real-transform half spectrum.
    pub fn half_shape(&self) -> &[usize] {
        &self.half_shape
    }

    pub fn half_len(&self) -> usize {
        self.half_shape.iter().product()
    }

    pub fn complex_forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        for axis in 0..self.shape.len() {
            transform_axis(data, &self.shape, axis, self.fwd[axis].as_ref());
        }
    }

    pub fn complex_inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        for axis in 0..self.shape.len() {
            transform_axis(data, &self.shape, axis, self.inv[axis].as_ref());
        }
    }

    /// Forward transform of real data into the half spectrum. `input` is used
    /// as scratch.
    pub fn real_forward(&self, input: &mut [f64], out: &mut [Complex64]) {
        assert_eq!(input.len(), self.len());
        assert_eq!(out.len(), self.half_len());
        let g = *self.shape.last().unwrap();
        let h = *self.half_shape.last().unwrap();
        let mut scratch = self.r2c.make_scratch_vec();
        for (line, spectrum) in input.chunks_exact_mut(g).zip(out.chunks_exact_mut(h)) {
            self.real_line_forward(line, spectrum, &mut scratch);
        }
        self.leading_forward(out);
    }

    /// Inverse of [`real_forward`](Self::real_forward) up to the factor `n`,
    /// assuming the full spectrum is Hermitian. `half` is used as scratch.
    pub fn real_inverse(&self, half: &mut [Complex64], out: &mut [f64]) {
        assert_eq!(half.len(), self.half_len());
        assert_eq!(out.len(), self.len());
        self.leading_inverse(half);
        let g = *self.shape.last().unwrap();
        let h = *self.half_shape.last().unwrap();
        let mut scratch = self.c2r.make_scratch_vec();
        for (spectrum, line) in half.chunks_exact_mut(h).zip(out.chunks_exact_mut(g)) {
            self.real_line_inverse(spectrum, line, &mut scratch);
        }
    }

    /// Scratch buffer for the single-line real transforms.
    pub fn line_scratch(&self) -> Vec<Complex64> {
        let a = self.r2c.get_scratch_len();
        let b = self.c2r.get_scratch_len();
        vec![Complex64::default(); a.max(b)]
    }

    /// Real transform of one last-axis line; `line` is used as scratch.
    pub fn real_line_forward(&self, line: &mut [f64], spectrum: &mut [Complex64], scratch: &mut [Complex64]) {
        let need = self.r2c.get_scratch_len();
        self.r2c
            .process_with_scratch(line, spectrum, &mut scratch[..need])
            .expect("buffer lengths match the plan");
    }

    /// Inverse real transform of one half-spectrum line; `spectrum` is used as
    /// scratch.
    pub fn real_line_inverse(&self, spectrum: &mut [Complex64], line: &mut [f64], scratch: &mut [Complex64]) {
        // Hermitian input leaves only rounding here.
        spectrum[0].im = 0.0;
        let need = self.c2r.get_scratch_len();
        self.c2r
            .process_with_scratch(spectrum, line, &mut scratch[..need])
            .expect("buffer lengths match the plan");
    }

    /// Forward complex transforms over every axis but the last of a half
    /// spectrum.
    pub fn leading_forward(&self, half: &mut [Complex64]) {
        for axis in 0..self.shape.len() - 1 {
            transform_axis(half, &self.half_shape, axis, self.fwd[axis].as_ref());
        }
    }

    pub fn leading_inverse(&self, half: &mut [Complex64]) {
        for axis in 0..self.shape.len() - 1 {
            transform_axis(half, &self.half_shape, axis, self.inv[axis].as_ref());
        }
    }
}

fn transform_axis(data: &mut [Complex64], shape: &[usize], axis: usize, fft: &dyn Fft<f64>) {
    let len = shape[axis];
    if len == 1 {
        return;
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    if stride == 1 {
        fft.process_with_scratch(data, &mut scratch);
        return;
    }
    let mut buf = vec![Complex64::default(); len * BATCH];
    for block in data.chunks_exact_mut(len * stride) {
        let mut i0 = 0;
        while i0 < stride {
            let b = BATCH.min(stride - i0);
            for l in 0..len {
                let row = &block[l * stride + i0..l * stride + i0 + b];
                for (i, &v) in row.iter().enumerate() {
                    buf[i * len + l] = v;
                }
            }
            fft.process_with_scratch(&mut buf[..b * len], &mut scratch);
            for l in 0..len {
                let row = &mut block[l * stride + i0..l * stride + i0 + b];
                for (i, v) in row.iter_mut().enumerate() {
                    *v = buf[i * len + l];
                }
            }
            i0 += b;
        }
    }
}
