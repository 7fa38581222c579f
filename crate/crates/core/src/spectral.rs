//! Full-grid sampling on the Nyquist grid, forward and inverse DFTs between
//! grid values and [`TrigPoly`] coefficients, and sparsity measurement.
//!
//! Grid point `j` has per-axis digits `j_a ∈ [0, g_a)` with `g_a = 2 f_a + 1`,
//! coordinates `θ_a = 2π j_a / g_a`, and flat index `Σ j_a · stride_a` using
//! the lattice strides. Frequency `k` lands in FFT bin `k mod g`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::GridFft;
use crate::oracle::Oracle;
use crate::trigpoly::{support_from_correlated_circuit, FrequencyLattice, FrequencyVector, TrigPoly};

pub const DEFAULT_GRID_BUDGET: usize = 10_000_000;
pub const DEFAULT_SPARSITY_THRESHOLD: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-10;

/// The `Π (2 f_a + 1)`-point uniform grid matching a lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NyquistGrid {
    lattice: FrequencyLattice,
    shape: Vec<usize>,
}

impl NyquistGrid {
    pub fn new(lattice: FrequencyLattice) -> Self {
        let shape = lattice.shape();
        Self { lattice, shape }
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn size(&self) -> usize {
        self.lattice.size()
    }

    pub fn digits_into(&self, mut j: usize, out: &mut [usize]) {
        for (a, &s) in self.lattice.strides().iter().enumerate() {
            out[a] = j / s;
            j -= out[a] * s;
        }
    }

    pub fn point_into(&self, j: usize, out: &mut [f64]) {
        let mut rest = j;
        for (a, (&s, &g)) in self.lattice.strides().iter().zip(&self.shape).enumerate() {
            let d = rest / s;
            rest -= d * s;
            out[a] = 2.0 * PI * d as f64 / g as f64;
        }
    }

    pub fn point(&self, j: usize) -> Vec<f64> {
        let mut t = vec![0.0; self.dims()];
        self.point_into(j, &mut t);
        t
    }

    /// Flat index of a grid coordinate, accepting any `2π` shift and rounding
    /// error up to `1e-9` per axis.
    pub fn index_of(&self, theta: &[f64]) -> Result<usize> {
        if theta.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: theta.len(),
            });
        }
        let mut j = 0;
        for ((&t, &g), &s) in theta.iter().zip(&self.shape).zip(self.lattice.strides()) {
            let x = t * g as f64 / (2.0 * PI);
            let r = x.round();
            if !x.is_finite() || (x - r).abs() > 1e-9 * g as f64 {
                return Err(Error::OffGrid(theta.to_vec()));
            }
            j += (r as i64).rem_euclid(g as i64) as usize * s;
        }
        Ok(j)
    }

    /// FFT bin of lattice frequency `k`.
    pub fn bin_of(&self, k: &[i32]) -> usize {
        k.iter()
            .zip(&self.shape)
            .zip(self.lattice.strides())
            .map(|((&ki, &g), &s)| (ki.rem_euclid(g as i32)) as usize * s)
            .sum()
    }
}

/// Landscape values at every grid point, in flat order.
#[derive(Clone, Debug, PartialEq)]
pub struct GridData {
    grid: NyquistGrid,
    values: Vec<f64>,
}

impl GridData {
    pub fn new(grid: NyquistGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::DimensionMismatch {
                expected: grid.size(),
                got: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid value {j}")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &NyquistGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `(1/n) Σ_j v_j²`.
    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }
}

/// Evaluates `oracle` at every grid point (in parallel; point `j` uses
/// stream `j`).
pub fn sample_full_grid<O: Oracle>(oracle: &O, grid: &NyquistGrid, budget: usize) -> Result<GridData> {
    let n = grid.size();
    if n > budget {
        return Err(Error::BudgetExceeded { needed: n, budget });
    }
    if oracle.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: oracle.dims(),
        });
    }
    let values = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; grid.dims()],
            |theta, j| {
                grid.point_into(j, theta);
                oracle.value(theta, j as u64)
            },
        )
        .collect::<Result<Vec<f64>>>()?;
    GridData::new(grid.clone(), values)
}

/// `c_k = (1/n) Σ_j v_j exp(-i k·θ_j)`, checking Hermitian symmetry.
pub fn dft_forward(data: &GridData) -> Result<TrigPoly> {
    let grid = data.grid();
    let lattice = grid.lattice();
    let n = grid.size();
    let plan = GridFft::new(grid.shape());
    let mut spectrum: Vec<Complex64> = data.values().iter().map(|&v| v.into()).collect();
    plan.complex_forward(&mut spectrum);
    let inv_n = 1.0 / n as f64;
    spectrum.iter_mut().for_each(|c| *c *= inv_n);

    let scale = 1.0 + spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut worst = spectrum[0].im.abs();
    let center = lattice.center();
    let mut k = vec![0i32; grid.dims()];
    let mut neg = vec![0i32; grid.dims()];
    let mut entries = Vec::with_capacity(n - center);
    entries.push((FrequencyVector(k.clone()), Complex64::new(spectrum[0].re, 0.0)));
    for q in center + 1..n {
        lattice.frequency_into(q, &mut k);
        neg.iter_mut().zip(&k).for_each(|(m, &v)| *m = -v);
        let c = spectrum[grid.bin_of(&k)];
        let mirror = spectrum[grid.bin_of(&neg)];
        worst = worst.max((c - mirror.conj()).norm());
        entries.push((FrequencyVector(k.clone()), 0.5 * (c + mirror.conj())));
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(Error::SymmetryViolation(worst));
    }
    Ok(TrigPoly::from_canonical_unchecked(lattice.clone(), entries))
}

/// `v_j = poly(θ_j)` on every grid point.
pub fn dft_inverse(poly: &TrigPoly, grid: &NyquistGrid) -> Result<GridData> {
    if poly.lattice() != grid.lattice() {
        return Err(Error::LatticeMismatch);
    }
    let plan = GridFft::new(grid.shape());
    let mut half = vec![Complex64::default(); plan.half_len()];
    let h = plan.half_shape().last().copied().unwrap();
    // Half-spectrum position of the bin of k (requires k_last ≥ 0).
    let half_pos = |k: &[i32]| -> usize {
        let d = k.len();
        let mut pos = 0;
        for a in 0..d {
            let g = grid.shape()[a] as i32;
            let stride: usize = plan.half_shape()[a + 1..].iter().product();
            pos += k[a].rem_euclid(g) as usize * stride;
        }
        debug_assert!((k[d - 1] as usize) < h);
        pos
    };
    let mut neg = vec![0i32; grid.dims()];
    for (k, &c) in poly.iter() {
        let last = *k.0.last().unwrap();
        if last > 0 {
            half[half_pos(&k.0)] += c;
        } else if last < 0 {
            neg.iter_mut().zip(&k.0).for_each(|(m, &v)| *m = -v);
            half[half_pos(&neg)] += c.conj();
        } else if k.is_zero() {
            half[0] += c;
        } else {
            // k_last = 0: both k and -k sit in the stored half slab.
            half[half_pos(&k.0)] += c;
            neg.iter_mut().zip(&k.0).for_each(|(m, &v)| *m = -v);
            half[half_pos(&neg)] += c.conj();
        }
    }
    let mut values = vec![0.0; grid.size()];
    plan.real_inverse(&mut half, &mut values);
    GridData::new(grid.clone(), values)
}

/// Full-lattice count of coefficients with `|c| > rel_threshold · max |c|`.
/// The zero polynomial has sparsity 0.
pub fn sparsity(poly: &TrigPoly, rel_threshold: f64) -> Result<usize> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sparsity threshold {rel_threshold} must lie in (0, 1)"
        )));
    }
    let cut = rel_threshold * poly.max_abs();
    Ok(poly
        .iter()
        .filter(|(_, c)| c.norm() > cut)
        .map(|(k, _)| if k.is_zero() { 1 } else { 2 })
        .sum())
}

/// Exact recovery from the full Nyquist grid of the correlated-circuit lattice.
pub fn recover_full<O: Oracle>(oracle: &O, group_sizes: &[usize], budget: usize) -> Result<TrigPoly> {
    let lattice = support_from_correlated_circuit(group_sizes)?;
    recover_on_lattice(oracle, lattice, budget)
}

pub fn recover_on_lattice<O: Oracle>(oracle: &O, lattice: FrequencyLattice, budget: usize) -> Result<TrigPoly> {
    let grid = NyquistGrid::new(lattice);
    dft_forward(&sample_full_grid(oracle, &grid, budget)?)
}

/// Sample-set file: `{"max_freq", "grid", "points", "values", "n_shots", "seed"}`.
/// `points` is omitted for full-grid data, whose points are implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub max_freq: Vec<u32>,
    #[serde(default)]
    pub grid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    pub values: Vec<f64>,
    pub n_shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SampleFile {
    pub fn from_grid(data: &GridData, n_shots: Option<u64>, seed: Option<u64>) -> Self {
        Self {
            max_freq: data.grid().lattice().max_freq().to_vec(),
            grid: true,
            points: None,
            values: data.values().to_vec(),
            n_shots,
            seed,
        }
    }

    pub fn to_grid_data(&self) -> Result<GridData> {
        if !self.grid {
            return Err(Error::InvalidArgument("sample file is not full-grid data".into()));
        }
        let grid = NyquistGrid::new(FrequencyLattice::new(self.max_freq.clone())?);
        GridData::new(grid, self.values.clone())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FnOracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_poly(rng: &mut ChaCha8Rng, max_freq: Vec<u32>, density: f64) -> TrigPoly {
        let lattice = FrequencyLattice::new(max_freq).unwrap();
        let mut p = TrigPoly::zero(lattice.clone());
        for q in lattice.center()..lattice.size() {
            if rng.random::<f64>() < density {
                let k = lattice.frequency(q);
                let im = if k.is_zero() { 0.0 } else { rng.random_range(-1.0..1.0) };
                p.set(&k.0, Complex64::new(rng.random_range(-1.0..1.0), im)).unwrap();
            }
        }
        p
    }

    fn assert_polys_close(a: &TrigPoly, b: &TrigPoly, tol: f64) {
        let lattice = a.lattice();
        for q in 0..lattice.size() {
            let k = lattice.frequency(q);
            assert!((a.get(&k.0) - b.get(&k.0)).norm() <= tol, "k = {:?}", k.0);
        }
    }

    #[test]
    fn grid_points_and_indices() {
        let grid = NyquistGrid::new(FrequencyLattice::new(vec![1]).unwrap());
        let pts: Vec<f64> = (0..3).map(|j| grid.point(j)[0]).collect();
        assert_eq!(pts, vec![0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]);
        let g2 = NyquistGrid::new(FrequencyLattice::new(vec![2, 1]).unwrap());
        for j in 0..g2.size() {
            assert_eq!(g2.index_of(&g2.point(j)).unwrap(), j);
        }
        assert_eq!(g2.index_of(&[-2.0 * PI / 5.0, 2.0 * PI]).unwrap(), 4 * 3);
        assert!(matches!(g2.index_of(&[0.1, 0.0]), Err(Error::OffGrid(_))));
    }

    #[test]
    fn budget_and_constant_oracle() {
        let grid = NyquistGrid::new(FrequencyLattice::new(vec![3, 3]).unwrap());
        let c = FnOracle::new(2, |_: &[f64]| 2.5);
        assert!(matches!(sample_full_grid(&c, &grid, 10), Err(Error::BudgetExceeded { .. })));
        let data = sample_full_grid(&c, &grid, DEFAULT_GRID_BUDGET).unwrap();
        assert!(data.values().iter().all(|&v| v == 2.5));
        let p = dft_forward(&data).unwrap().pruned(1e-14);
        assert_eq!(p.num_stored(), 1);
        assert!((p.get(&[0, 0]).re - 2.5).abs() < 1e-14);
        assert_eq!(sparsity(&p, 1e-8).unwrap(), 1);
        let r = recover_full(&c, &[2, 1], DEFAULT_GRID_BUDGET).unwrap().pruned(1e-14);
        assert_eq!(r.num_stored(), 1);
    }

    #[test]
    fn cosine_has_two_coefficients() {
        let grid = NyquistGrid::new(FrequencyLattice::new(vec![2]).unwrap());
        let data = sample_full_grid(&FnOracle::new(1, |t: &[f64]| t[0].cos()), &grid, 100).unwrap();
        let p = dft_forward(&data).unwrap();
        for k in -2..=2 {
            let want = if k == 1 || k == -1 { 0.5 } else { 0.0 };
            assert!((p.get(&[k]) - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
        assert_eq!(sparsity(&p, 1e-8).unwrap(), 2);
        assert!(sparsity(&p, 0.0).is_err());
        assert_eq!(sparsity(&TrigPoly::zero(p.lattice().clone()), 0.1).unwrap(), 0);
    }

    #[test]
    fn roundtrips_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for max_freq in [vec![4], vec![2, 3], vec![1, 2, 2], vec![0, 3], vec![2, 0, 1]] {
            let p = random_poly(&mut rng, max_freq, 0.5);
            let grid = NyquistGrid::new(p.lattice().clone());
            let data = dft_inverse(&p, &grid).unwrap();
            for j in 0..grid.size() {
                let direct = p.eval(&grid.point(j)).unwrap();
                assert!((data.values()[j] - direct).abs() < 1e-12);
            }
            let back = dft_forward(&data).unwrap();
            assert_polys_close(&back, &p, 1e-12);
            let ms = data.mean_square();
            assert!((ms - back.energy()).abs() <= 1e-10 * ms.max(1e-300));
        }
    }

    #[test]
    fn forward_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let grid = NyquistGrid::new(FrequencyLattice::new(vec![3, 2]).unwrap());
        let x: Vec<f64> = (0..grid.size()).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..grid.size()).map(|_| rng.random()).collect();
        let (a, b) = (1.7, -0.4);
        let z: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let fx = dft_forward(&GridData::new(grid.clone(), x).unwrap()).unwrap();
        let fy = dft_forward(&GridData::new(grid.clone(), y).unwrap()).unwrap();
        let fz = dft_forward(&GridData::new(grid.clone(), z).unwrap()).unwrap();
        for q in 0..grid.size() {
            let k = grid.lattice().frequency(q).0;
            assert!((a * fx.get(&k) + b * fy.get(&k) - fz.get(&k)).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_rejects_lattice_mismatch() {
        let p = TrigPoly::zero(FrequencyLattice::new(vec![1]).unwrap());
        let grid = NyquistGrid::new(FrequencyLattice::new(vec![2]).unwrap());
        assert!(matches!(dft_inverse(&p, &grid), Err(Error::LatticeMismatch)));
        let z = dft_inverse(&p, &NyquistGrid::new(p.lattice().clone())).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sample_file_roundtrip() {
        let grid = NyquistGrid::new(FrequencyLattice::new(vec![1, 1]).unwrap());
        let data = GridData::new(grid, (0..9).map(|v| v as f64 * 0.1).collect()).unwrap();
        let f = SampleFile::from_grid(&data, None, Some(3));
        let s = f.to_json().unwrap();
        assert!(s.contains(r#""grid":true"#) && !s.contains("points"));
        assert_eq!(SampleFile::from_json(&s).unwrap().to_grid_data().unwrap(), data);
    }
}
