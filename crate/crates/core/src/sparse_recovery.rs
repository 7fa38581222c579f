//! Basis pursuit denoising over the real trigonometric basis.
//!
//! Coefficient vectors have one entry per lattice point, indexed by the flat
//! lattice index `q`:
//!
//! * `q = centre`: the constant function `1`;
//! * `q > centre`: `√2 cos(k(q)·θ)`;
//! * `q < centre`: `√2 sin(k(n-1-q)·θ)`, i.e. the sine partner of the
//!   canonical frequency mirrored onto `q`.
//!
//! On the Nyquist grid these `n` functions are orthogonal with squared norm
//! `n`, so any set of distinct grid rows satisfies `Φ Φᵀ = n I`. The data term
//! is `(1/2m) ‖Φc − C‖²`, whose gradient has Lipschitz constant `n/m`; step
//! sizes in [`BpdnConfig`] are fractions of `m/n`.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::GridFft;
use crate::oracle::Oracle;
use crate::spectral::{NyquistGrid, SampleFile};
use crate::trigpoly::{FrequencyLattice, FrequencyVector, TrigPoly};

/// Grid samples of a landscape: distinct grid indices with observed values.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    grid: NyquistGrid,
    indices: Vec<usize>,
    values: Vec<f64>,
    n_shots: Option<u64>,
}

impl SampleSet {
    pub fn new(lattice: FrequencyLattice, indices: Vec<usize>, values: Vec<f64>, n_shots: Option<u64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: values.len(),
            });
        }
        let n = lattice.size();
        let mut seen = HashSet::with_capacity(indices.len());
        for &j in &indices {
            if j >= n {
                return Err(Error::InvalidArgument(format!("grid index {j} out of range {n}")));
            }
            if !seen.insert(j) {
                return Err(Error::InvalidArgument(format!("grid point {j} sampled twice")));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample value {i}")));
        }
        Ok(Self {
            grid: NyquistGrid::new(lattice),
            indices,
            values,
            n_shots,
        })
    }

    /// Queries `oracle` at the given grid indices (stream = grid index).
    pub fn from_oracle<O: Oracle>(oracle: &O, lattice: FrequencyLattice, indices: Vec<usize>) -> Result<Self> {
        let grid = NyquistGrid::new(lattice.clone());
        if oracle.dims() != grid.dims() {
            return Err(Error::DimensionMismatch {
                expected: grid.dims(),
                got: oracle.dims(),
            });
        }
        let values = sample_indices(oracle, &grid, &indices)?;
        Self::new(lattice, indices, values, oracle.shots())
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        self.grid.lattice()
    }

    pub fn grid(&self) -> &NyquistGrid {
        &self.grid
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_shots(&self) -> Option<u64> {
        self.n_shots
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.indices.iter().map(|&j| self.grid.point(j)).collect()
    }

    /// The first `m` samples.
    pub fn prefix(&self, m: usize) -> Self {
        Self {
            grid: self.grid.clone(),
            indices: self.indices[..m].to_vec(),
            values: self.values[..m].to_vec(),
            n_shots: self.n_shots,
        }
    }

    pub fn to_file(&self, seed: Option<u64>) -> SampleFile {
        SampleFile {
            max_freq: self.lattice().max_freq().to_vec(),
            grid: false,
            points: Some(self.points()),
            values: self.values.clone(),
            n_shots: self.n_shots,
            seed,
        }
    }

    /// Accepts both random-point and full-grid files.
    pub fn from_file(file: &SampleFile) -> Result<Self> {
        let lattice = FrequencyLattice::new(file.max_freq.clone())?;
        let grid = NyquistGrid::new(lattice.clone());
        let indices = if file.grid {
            (0..grid.size()).collect()
        } else {
            let points = file
                .points
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("sample file has no points".into()))?;
            points.iter().map(|p| grid.index_of(p)).collect::<Result<_>>()?
        };
        Self::new(lattice, indices, file.values.clone(), file.n_shots)
    }
}

/// Oracle values at grid indices, evaluated in parallel.
pub fn sample_indices<O: Oracle>(oracle: &O, grid: &NyquistGrid, indices: &[usize]) -> Result<Vec<f64>> {
    indices
        .par_iter()
        .map_init(
            || vec![0.0; grid.dims()],
            |theta, &j| {
                grid.point_into(j, theta);
                oracle.value(theta, j as u64)
            },
        )
        .collect()
}

/// Default multiplier on `(1/m) ‖C‖²` for the L1 weight.
pub const DEFAULT_LAMBDA_SCALE: f64 = 1e-3;

/// Refinement after FISTA on the identified support.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RefineMethod {
    /// Conjugate gradients on the normal equations.
    #[default]
    Cg,
    /// Plain gradient descent with step `alpha_gd · m/n`.
    Gd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BpdnConfig {
    /// FISTA step as a fraction of `m/n`.
    pub alpha_fista: f64,
    /// L1 weight; `None` uses [`lambda_heuristic`] with `lambda_scale`.
    pub lambda: Option<f64>,
    pub lambda_scale: f64,
    pub n_fista: usize,
    /// Gradient-descent refinement step as a fraction of `m/n`.
    pub alpha_gd: f64,
    pub n_gd: usize,
    /// Support cut after FISTA, relative to the largest coefficient.
    pub support_threshold: f64,
    pub refine: RefineMethod,
}

impl Default for BpdnConfig {
    fn default() -> Self {
        Self {
            alpha_fista: 1.0,
            lambda: None,
            lambda_scale: DEFAULT_LAMBDA_SCALE,
            n_fista: 3000,
            alpha_gd: 1.0,
            n_gd: 40,
            support_threshold: 1e-6,
            refine: RefineMethod::Cg,
        }
    }
}

impl BpdnConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha_fista", self.alpha_fista),
            ("lambda_scale", self.lambda_scale),
            ("alpha_gd", self.alpha_gd),
            ("support_threshold", self.support_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {l}")));
            }
        }
        if self.n_fista == 0 {
            return Err(Error::InvalidArgument("n_fista must be positive".into()));
        }
        Ok(())
    }

    pub fn lambda_for(&self, values: &[f64]) -> f64 {
        self.lambda
            .unwrap_or_else(|| lambda_heuristic(values, self.lambda_scale))
    }
}

/// `scale · (1/m) ‖C‖²`.
pub fn lambda_heuristic(values: &[f64], scale: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    scale * values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
}

/// `sign(x) · max(|x| − t, 0)` componentwise.
pub fn soft_threshold(x: &[f64], t: f64) -> Vec<f64> {
    x.iter().map(|&v| soft(v, t)).collect()
}

#[inline]
fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Distinct grid indices drawn uniformly without replacement.
pub fn random_sample_grid(lattice: &FrequencyLattice, m: usize, seed: u64) -> Result<Vec<usize>> {
    let n = lattice.size();
    if m > n {
        return Err(Error::InvalidArgument(format!("cannot draw {m} distinct points from {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, n, m).into_vec())
}

/// Matrix-free `Φ` and `Φᵀ` for a fixed set of grid rows.
///
/// Both directions run a real FFT whose last-axis stage touches only the grid
/// lines that hold samples. Coefficients and spectrum are matched line by
/// line: lattice line `ℓ` (fixed leading digits) pairs with half-spectrum
/// line `bin_line[ℓ]`, and its mirror `L-1-ℓ` carries the negative last-axis
/// frequencies.
pub struct SamplingOperator {
    lattice: FrequencyLattice,
    indices: Vec<usize>,
    /// Per-sample grid digits, row-major `m × d`.
    digits: Vec<u32>,
    /// `exp(2πi t / g_a)` for each axis.
    twiddles: Vec<Vec<Complex64>>,
    fft: GridFft,
    bin_line: Vec<usize>,
    /// Sample positions sorted by grid index.
    order: Vec<usize>,
    /// `(grid line, range into order)` for each line holding samples.
    sample_lines: Vec<(usize, std::ops::Range<usize>)>,
}

impl SamplingOperator {
    pub fn new(lattice: &FrequencyLattice, indices: &[usize]) -> Result<Self> {
        let grid = NyquistGrid::new(lattice.clone());
        let n = lattice.size();
        if indices.iter().any(|&j| j >= n) {
            return Err(Error::InvalidArgument("sample index outside the grid".into()));
        }
        let d = lattice.dims();
        let mut digits = vec![0u32; indices.len() * d];
        let mut tmp = vec![0usize; d];
        for (row, &j) in digits.chunks_exact_mut(d).zip(indices) {
            grid.digits_into(j, &mut tmp);
            row.iter_mut().zip(&tmp).for_each(|(r, &t)| *r = t as u32);
        }
        let shape = lattice.shape();
        let twiddles = shape
            .iter()
            .map(|&g| (0..g).map(|t| Complex64::from_polar(1.0, 2.0 * PI * t as f64 / g as f64)).collect())
            .collect();
        let fft = GridFft::new(&shape);
        let g_last = shape[d - 1];
        let lines = n / g_last;
        let mut bin_line = vec![0usize; lines];
        for (l, slot) in bin_line.iter_mut().enumerate() {
            let mut rest = l;
            let mut stride = 1;
            for a in (0..d - 1).rev() {
                let u = rest % shape[a];
                rest /= shape[a];
                // Digit u is frequency u - f_a; its FFT bin is that mod g_a.
                *slot += (u + shape[a] / 2 + 1) % shape[a] * stride;
                stride *= shape[a];
            }
        }
        let mut order: Vec<usize> = (0..indices.len()).collect();
        order.sort_unstable_by_key(|&i| indices[i]);
        let mut sample_lines: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            let line = indices[i] / g_last;
            match sample_lines.last_mut() {
                Some((l, range)) if *l == line => range.end = pos + 1,
                _ => sample_lines.push((line, pos..pos + 1)),
            }
        }
        Ok(Self {
            lattice: lattice.clone(),
            indices: indices.to_vec(),
            digits,
            twiddles,
            fft,
            bin_line,
            order,
            sample_lines,
        })
    }

    /// Coefficient-space dimension `n`.
    pub fn cols(&self) -> usize {
        self.lattice.size()
    }

    /// Number of samples `m`.
    pub fn rows(&self) -> usize {
        self.indices.len()
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    /// `Φ x`.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols());
        let n = self.cols();
        let c = self.lattice.center();
        let active = (c + 1..n).filter(|&q| x[q] != 0.0 || x[n - 1 - q] != 0.0).count();
        if active * self.rows() <= n {
            self.forward_direct(&self.active_terms(x), x[c])
        } else {
            self.forward_fft(x)
        }
    }

    /// `(k, cos coefficient, sin coefficient)` for canonical frequencies with a
    /// nonzero entry.
    fn active_terms(&self, x: &[f64]) -> Vec<(Vec<i32>, f64, f64)> {
        let n = self.cols();
        let c = self.lattice.center();
        (c + 1..n)
            .filter(|&q| x[q] != 0.0 || x[n - 1 - q] != 0.0)
            .map(|q| (self.lattice.frequency(q).0, x[q], x[n - 1 - q]))
            .collect()
    }

    fn phase(&self, k: &[i32], row: &[u32]) -> Complex64 {
        let mut z = Complex64::new(1.0, 0.0);
        for ((&ka, &ja), tw) in k.iter().zip(row).zip(&self.twiddles) {
            let g = tw.len() as i64;
            z *= tw[(ka as i64 * ja as i64).rem_euclid(g) as usize];
        }
        z
    }

    fn forward_direct(&self, terms: &[(Vec<i32>, f64, f64)], constant: f64) -> Vec<f64> {
        let d = self.lattice.dims();
        self.digits
            .par_chunks_exact(d)
            .map(|row| {
                let mut acc = constant;
                for (k, a, b) in terms {
                    let z = self.phase(k, row);
                    acc += SQRT_2 * (a * z.re + b * z.im);
                }
                acc
            })
            .collect()
    }

    fn forward_fft(&self, x: &[f64]) -> Vec<f64> {
        let n = self.cols();
        let c = self.lattice.center();
        let g = *self.lattice.shape().last().unwrap();
        let (f, h) = (g / 2, g / 2 + 1);
        let mut half = vec![Complex64::default(); self.fft.half_len()];
        for (l, &bin) in self.bin_line.iter().enumerate() {
            let row = &mut half[bin * h..(bin + 1) * h];
            for (kl, slot) in row.iter_mut().enumerate() {
                let q = l * g + f + kl;
                let (a, b) = (x[q], x[n - 1 - q]);
                *slot = match q.cmp(&c) {
                    Ordering::Greater => Complex64::new(a, -b) / SQRT_2,
                    Ordering::Less => Complex64::new(b, a) / SQRT_2,
                    Ordering::Equal => a.into(),
                };
            }
        }
        self.fft.leading_inverse(&mut half);
        let mut out = vec![0.0; self.rows()];
        let mut spectrum = vec![Complex64::default(); h];
        let mut line = vec![0.0; g];
        let mut scratch = self.fft.line_scratch();
        for (l, range) in &self.sample_lines {
            spectrum.copy_from_slice(&half[l * h..(l + 1) * h]);
            self.fft.real_line_inverse(&mut spectrum, &mut line, &mut scratch);
            for &i in &self.order[range.clone()] {
                out[i] = line[self.indices[i] % g];
            }
        }
        out
    }

    /// `Φᵀ r`.
    pub fn adjoint(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.rows());
        let n = self.cols();
        let c = self.lattice.center();
        let g = *self.lattice.shape().last().unwrap();
        let (f, h) = (g / 2, g / 2 + 1);
        let mut half = vec![Complex64::default(); self.fft.half_len()];
        let mut line = vec![0.0; g];
        let mut scratch = self.fft.line_scratch();
        for (l, range) in &self.sample_lines {
            line.fill(0.0);
            for &i in &self.order[range.clone()] {
                line[self.indices[i] % g] = r[i];
            }
            self.fft.real_line_forward(&mut line, &mut half[l * h..(l + 1) * h], &mut scratch);
        }
        self.fft.leading_forward(&mut half);
        let lines = self.bin_line.len();
        let mut out = vec![0.0; n];
        for (l, row) in out.chunks_exact_mut(g).enumerate() {
            let pos = &half[self.bin_line[l] * h..(self.bin_line[l] + 1) * h];
            let neg = &half[self.bin_line[lines - 1 - l] * h..(self.bin_line[lines - 1 - l] + 1) * h];
            for (t, o) in row.iter_mut().enumerate() {
                let rk = if t >= f { pos[t - f] } else { neg[f - t].conj() };
                *o = match (l * g + t).cmp(&c) {
                    Ordering::Greater => SQRT_2 * rk.re,
                    Ordering::Less => SQRT_2 * rk.im,
                    Ordering::Equal => rk.re,
                };
            }
        }
        out
    }

    /// `(Φᵀ r)` restricted to `support`, computed directly when small.
    pub fn adjoint_on(&self, support: &[usize], r: &[f64]) -> Vec<f64> {
        if support.len() * self.rows() > self.cols() {
            let full = self.adjoint(r);
            return support.iter().map(|&q| full[q]).collect();
        }
        let n = self.cols();
        let c = self.lattice.center();
        let d = self.lattice.dims();
        support
            .par_iter()
            .map(|&q| {
                if q == c {
                    return r.iter().sum();
                }
                let (k, is_cos) = if q > c {
                    (self.lattice.frequency(q).0, true)
                } else {
                    (self.lattice.frequency(n - 1 - q).0, false)
                };
                let mut acc = 0.0;
                for (row, &rv) in self.digits.chunks_exact(d).zip(r) {
                    let z = self.phase(&k, row);
                    acc += rv * if is_cos { z.re } else { z.im };
                }
                SQRT_2 * acc
            })
            .collect()
    }
}

/// Real-basis coefficient vector of a polynomial on its own lattice.
pub fn real_coefficients(poly: &TrigPoly) -> Vec<f64> {
    let lattice = poly.lattice();
    let n = lattice.size();
    let mut x = vec![0.0; n];
    for (k, c) in poly.iter() {
        let q = lattice.flat_index(&k.0).expect("stored keys lie in the lattice");
        if k.is_zero() {
            x[q] = c.re;
        } else {
            x[q] = SQRT_2 * c.re;
            x[n - 1 - q] = -SQRT_2 * c.im;
        }
    }
    x
}

/// Inverse of [`real_coefficients`].
pub fn poly_from_real(lattice: &FrequencyLattice, x: &[f64]) -> Result<TrigPoly> {
    let n = lattice.size();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let c = lattice.center();
    let mut entries = vec![(FrequencyVector(vec![0; lattice.dims()]), Complex64::new(x[c], 0.0))];
    for q in c + 1..n {
        let (a, b) = (x[q], x[n - 1 - q]);
        if a != 0.0 || b != 0.0 {
            entries.push((lattice.frequency(q), Complex64::new(a, -b) / SQRT_2));
        }
    }
    Ok(TrigPoly::from_canonical_unchecked(lattice.clone(), entries))
}

/// Number of basis functions with a nonzero coefficient; matches full-lattice
/// complex counting (a cos/sin pair spans the frequencies `±k`).
pub fn real_support_size(x: &[f64]) -> usize {
    let n = x.len();
    let c = (n - 1) / 2;
    let pairs = (c + 1..n).filter(|&q| x[q] != 0.0 || x[n - 1 - q] != 0.0).count();
    2 * pairs + usize::from(x[c] != 0.0)
}

fn l2_data_term(residual: &[f64]) -> f64 {
    0.5 * residual.iter().map(|r| r * r).sum::<f64>() / residual.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FistaOutput {
    pub coeffs: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
    /// Final `(1/2m) ‖Φc − C‖²`.
    pub l2_objective: f64,
    /// Whether the data term never increased over the last 10% of iterations.
    pub tail_monotone: bool,
}

/// FISTA: extrapolate `y = c + ((i−2)/(i+1)) Δc`, then
/// `c ← soft(y − α ∇f(y), αλ)` with `f` the data term.
///
/// The objective oscillates under momentum, so divergence is judged against
/// the starting objective at `c = 0`.
pub fn fista(op: &SamplingOperator, values: &[f64], lambda: f64, config: &BpdnConfig) -> Result<FistaOutput> {
    let (m, n) = (op.rows(), op.cols());
    if m == 0 {
        return Err(Error::InvalidArgument("FISTA needs at least one sample".into()));
    }
    if values.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: values.len() });
    }
    let step = config.alpha_fista * m as f64 / n as f64;
    let t = step * lambda;
    let grad_scale = step / m as f64;
    let start = l2_data_term(values);
    let tail_start = config.n_fista - config.n_fista / 10;

    let mut c = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut y = vec![0.0; n];
    // Φc and Φc_prev, kept so Φy follows by linearity.
    let mut pc = vec![0.0; m];
    let mut pc_prev = vec![0.0; m];
    let mut residual = vec![0.0; m];
    let mut tail_monotone = true;
    let mut prev_l2 = f64::INFINITY;
    let mut l2 = start;
    for i in 1..=config.n_fista {
        let mom = (i as f64 - 2.0).max(0.0) / (i as f64 + 1.0);
        for q in 0..n {
            y[q] = c[q] + mom * delta[q];
        }
        for j in 0..m {
            residual[j] = pc[j] + mom * (pc[j] - pc_prev[j]) - values[j];
        }
        let grad = op.adjoint(&residual);
        for q in 0..n {
            let next = soft(y[q] - grad_scale * grad[q], t);
            delta[q] = next - c[q];
            c[q] = next;
        }
        pc_prev = std::mem::replace(&mut pc, op.forward(&c));
        l2 = 0.5 * pc.iter().zip(values).map(|(p, v)| (p - v).powi(2)).sum::<f64>() / m as f64;
        let obj = l2 + lambda * c.iter().map(|v| v.abs()).sum::<f64>();
        if !obj.is_finite() {
            return Err(Error::NonFinite(format!("FISTA objective at iteration {i}")));
        }
        if obj > 10.0 * start && obj > 1e-300 {
            return Err(Error::Diverged { objective: obj, minimum: start });
        }
        if i > tail_start && l2 > prev_l2 * (1.0 + 1e-12) + 1e-300 {
            tail_monotone = false;
        }
        prev_l2 = l2;
    }
    Ok(FistaOutput {
        coeffs: c,
        lambda,
        iterations: config.n_fista,
        l2_objective: l2,
        tail_monotone,
    })
}

/// Indices with `|x_q| > rel · max |x|`.
pub fn support_of(x: &[f64], rel: f64) -> Vec<usize> {
    let cut = rel * x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (0..x.len()).filter(|&q| x[q].abs() > cut).collect()
}

/// Least squares `(1/2m) ‖Φ_S x − C‖²` on `support`, starting from `init`.
/// Entries off the support are zero in the output; the data term never
/// exceeds that of `init` restricted to the support.
pub fn refine_on_support(
    op: &SamplingOperator,
    values: &[f64],
    support: &[usize],
    init: &[f64],
    config: &BpdnConfig,
) -> Result<Vec<f64>> {
    if support.is_empty() {
        return Err(Error::InvalidArgument("refinement support is empty".into()));
    }
    let (m, n) = (op.rows(), op.cols());
    if init.len() != n || values.len() != m {
        return Err(Error::DimensionMismatch { expected: n, got: init.len() });
    }
    let embed = |z: &[f64]| {
        let mut full = vec![0.0; n];
        for (&q, &v) in support.iter().zip(z) {
            full[q] = v;
        }
        full
    };
    let residual_of = |z: &[f64]| -> Vec<f64> {
        op.forward(&embed(z)).iter().zip(values).map(|(p, v)| v - p).collect()
    };
    let mut z: Vec<f64> = support.iter().map(|&q| init[q]).collect();
    let mut r = residual_of(&z);
    let start_obj = l2_data_term(&r);
    let rhs_scale = 1.0 + op.adjoint_on(support, values).iter().map(|v| v * v).sum::<f64>().sqrt() / m as f64;
    let tol = 1e-12 * rhs_scale;
    let mut s = op.adjoint_on(support, &r);
    match config.refine {
        RefineMethod::Cg => {
            // CGLS on Φ_S z = C.
            let mut p = s.clone();
            let mut gamma: f64 = s.iter().map(|v| v * v).sum();
            for _ in 0..config.n_gd {
                if gamma.sqrt() / m as f64 <= tol {
                    break;
                }
                let qv = op.forward(&embed(&p));
                let qq: f64 = qv.iter().map(|v| v * v).sum();
                if qq == 0.0 {
                    break;
                }
                let alpha = gamma / qq;
                z.iter_mut().zip(&p).for_each(|(zi, pi)| *zi += alpha * pi);
                r.iter_mut().zip(&qv).for_each(|(ri, qi)| *ri -= alpha * qi);
                s = op.adjoint_on(support, &r);
                let gamma_new: f64 = s.iter().map(|v| v * v).sum();
                let beta = gamma_new / gamma;
                p.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + beta * *pi);
                gamma = gamma_new;
            }
        }
        RefineMethod::Gd => {
            let step = config.alpha_gd / n as f64;
            for _ in 0..config.n_gd {
                if s.iter().map(|v| v * v).sum::<f64>().sqrt() / m as f64 <= tol {
                    break;
                }
                z.iter_mut().zip(&s).for_each(|(zi, si)| *zi += step * si);
                r = residual_of(&z);
                s = op.adjoint_on(support, &r);
            }
        }
    }
    let end_obj = l2_data_term(&residual_of(&z));
    if end_obj > start_obj {
        z = support.iter().map(|&q| init[q]).collect();
    }
    Ok(embed(&z))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoverConfig {
    pub m_init: usize,
    pub m_max: usize,
    pub holdout: usize,
    /// Accept when OOS MSE ≤ `accept_ratio` × the zero predictor's.
    pub accept_ratio: f64,
    pub bpdn: BpdnConfig,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        Self {
            m_init: 100,
            m_max: 4000,
            holdout: 100,
            accept_ratio: 0.1,
            bpdn: BpdnConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryResult {
    pub poly: TrigPoly,
    pub coeffs: Vec<f64>,
    pub fista_coeffs: Vec<f64>,
    /// Full-lattice support size of `poly`.
    pub support_size: usize,
    pub m_used: usize,
    pub oos_mse_rel: f64,
    pub fista_oos_mse_rel: f64,
    pub baseline_mse_rel: f64,
    pub iterations: usize,
    pub rounds: usize,
    pub accepted: bool,
    pub lambda: f64,
    pub tail_monotone: bool,
    pub samples: SampleSet,
    pub holdout: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryDiagnostics {
    pub m_used: usize,
    pub s: usize,
    pub oos_mse_rel: f64,
    pub fista_oos_mse_rel: f64,
    pub baseline_mse_rel: f64,
    pub accepted: bool,
    pub rounds: usize,
    pub iterations: usize,
    pub lambda: f64,
    pub tail_monotone: bool,
    pub config: RecoverConfig,
    pub seed: u64,
}

impl RecoveryResult {
    pub fn diagnostics(&self, config: &RecoverConfig, seed: u64) -> RecoveryDiagnostics {
        RecoveryDiagnostics {
            m_used: self.m_used,
            s: self.support_size,
            oos_mse_rel: self.oos_mse_rel,
            fista_oos_mse_rel: self.fista_oos_mse_rel,
            baseline_mse_rel: self.baseline_mse_rel,
            accepted: self.accepted,
            rounds: self.rounds,
            iterations: self.iterations,
            lambda: self.lambda,
            tail_monotone: self.tail_monotone,
            config: config.clone(),
            seed,
        }
    }
}

/// Output of one FISTA + refinement pass on a fixed sample set.
#[derive(Clone, Debug)]
pub struct BpdnSolution {
    pub coeffs: Vec<f64>,
    pub fista: FistaOutput,
}

/// FISTA followed by refinement on the thresholded support.
pub fn solve_bpdn(samples: &SampleSet, config: &BpdnConfig) -> Result<BpdnSolution> {
    config.validate()?;
    let op = SamplingOperator::new(samples.lattice(), samples.indices())?;
    let lambda = config.lambda_for(samples.values());
    let fista_out = fista(&op, samples.values(), lambda, config)?;
    let support = support_of(&fista_out.coeffs, config.support_threshold);
    let coeffs = if support.is_empty() {
        fista_out.coeffs.clone()
    } else {
        refine_on_support(&op, samples.values(), &support, &fista_out.coeffs, config)?
    };
    Ok(BpdnSolution { coeffs, fista: fista_out })
}

/// Relative MSE of a real-coefficient model against reference values at grid
/// indices, and the zero predictor's (which is 1 unless all values vanish).
fn relative_mse_at(op: &SamplingOperator, x: &[f64], reference: &[f64]) -> (f64, f64) {
    let pred = op.forward(x);
    let denom: f64 = reference.iter().map(|v| v * v).sum();
    let num: f64 = pred.iter().zip(reference).map(|(p, v)| (p - v).powi(2)).sum();
    if denom == 0.0 {
        (if num == 0.0 { 0.0 } else { f64::INFINITY }, 0.0)
    } else {
        (num / denom, 1.0)
    }
}

/// Dynamic-budget recovery: a holdout set scores each round and the training
/// set doubles (keeping earlier samples) until the holdout error is accepted
/// or `m_max` is reached.
pub fn recover<O: Oracle>(oracle: &O, lattice: &FrequencyLattice, config: &RecoverConfig, seed: u64) -> Result<RecoveryResult> {
    config.bpdn.validate()?;
    if config.m_init == 0 || config.m_init > config.m_max {
        return Err(Error::InvalidArgument(format!(
            "need 0 < m_init ≤ m_max, got {} and {}",
            config.m_init, config.m_max
        )));
    }
    let n = lattice.size();
    let m_max = config.m_max.min(n - config.holdout.min(n));
    if config.m_init + config.holdout > n {
        return Err(Error::InvalidArgument(format!(
            "m_init + holdout = {} exceeds the grid size {n}",
            config.m_init + config.holdout
        )));
    }
    if oracle.dims() != lattice.dims() {
        return Err(Error::DimensionMismatch {
            expected: lattice.dims(),
            got: oracle.dims(),
        });
    }
    let order = random_sample_grid(lattice, config.holdout + m_max, seed)?;
    let grid = NyquistGrid::new(lattice.clone());
    recover_with(lattice, config, &order, oracle.shots(), |idx| sample_indices(oracle, &grid, idx))
}

/// [`recover`] driven by a fixed sample set. The samples are shuffled by
/// `seed`; the first `holdout` form the holdout set and training prefixes
/// double through the rest.
pub fn recover_from_samples(samples: &SampleSet, config: &RecoverConfig, seed: u64) -> Result<RecoveryResult> {
    config.bpdn.validate()?;
    if config.m_init == 0 || config.m_init + config.holdout > samples.len() {
        return Err(Error::InvalidArgument(format!(
            "need 0 < m_init and m_init + holdout ≤ {} samples, got {} + {}",
            samples.len(),
            config.m_init,
            config.holdout
        )));
    }
    if config.m_init > config.m_max {
        return Err(Error::InvalidArgument(format!(
            "need m_init ≤ m_max, got {} and {}",
            config.m_init, config.m_max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..samples.len()).collect();
    perm.shuffle(&mut rng);
    let m_max = config.m_max.min(samples.len() - config.holdout);
    perm.truncate(config.holdout + m_max);
    let order: Vec<usize> = perm.iter().map(|&i| samples.indices[i]).collect();
    let value_of: HashMap<usize, f64> = samples.indices.iter().copied().zip(samples.values.iter().copied()).collect();
    recover_with(samples.lattice(), config, &order, samples.n_shots, |idx| {
        Ok(idx.iter().map(|j| value_of[j]).collect())
    })
}

/// Shared loop: `order` lists the holdout indices followed by the training
/// order; `fetch` returns values for a batch of grid indices.
fn recover_with<F>(
    lattice: &FrequencyLattice,
    config: &RecoverConfig,
    order: &[usize],
    n_shots: Option<u64>,
    mut fetch: F,
) -> Result<RecoveryResult>
where
    F: FnMut(&[usize]) -> Result<Vec<f64>>,
{
    let (holdout_idx, train_order) = order.split_at(config.holdout);
    let m_max = train_order.len();
    let holdout_vals = fetch(holdout_idx)?;
    let holdout_op = SamplingOperator::new(lattice, holdout_idx)?;

    let mut train_vals: Vec<f64> = Vec::new();
    let mut m = config.m_init.min(m_max);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let have = train_vals.len();
        train_vals.extend(fetch(&train_order[have..m])?);
        let samples = SampleSet::new(lattice.clone(), train_order[..m].to_vec(), train_vals.clone(), n_shots)?;
        let sol = solve_bpdn(&samples, &config.bpdn)?;
        let (oos, baseline, fista_oos) = if config.holdout > 0 {
            let (oos, base) = relative_mse_at(&holdout_op, &sol.coeffs, &holdout_vals);
            let (f, _) = relative_mse_at(&holdout_op, &sol.fista.coeffs, &holdout_vals);
            (oos, base, f)
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        let accepted = config.holdout > 0 && oos <= config.accept_ratio * baseline;
        if accepted || m >= m_max || config.holdout == 0 {
            let poly = poly_from_real(lattice, &sol.coeffs)?;
            return Ok(RecoveryResult {
                support_size: real_support_size(&sol.coeffs),
                poly,
                m_used: m,
                oos_mse_rel: oos,
                fista_oos_mse_rel: fista_oos,
                baseline_mse_rel: baseline,
                iterations: sol.fista.iterations,
                rounds,
                accepted,
                lambda: sol.fista.lambda,
                tail_monotone: sol.fista.tail_monotone,
                fista_coeffs: sol.fista.coeffs,
                coeffs: sol.coeffs,
                samples,
                holdout: holdout_idx.to_vec(),
            });
        }
        m = (2 * m).min(m_max);
    }
}
