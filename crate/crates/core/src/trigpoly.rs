//! Bounded multivariate trigonometric polynomials with integer frequencies.
//!
//! A [`TrigPoly`] is a real-valued function on the torus `[0, 2π)^d` written as
//! `Σ_k c_k exp(i k·θ)` with `c_{-k} = conj(c_k)`. Only the canonical half of
//! the frequency lattice (first nonzero component positive) and the zero
//! frequency are stored, so the symmetry cannot be broken.
//!
//! [`FrequencyLattice`] owns the flat indexing convention shared by the
//! spectral and sparse-recovery code: frequency `k` maps to the mixed-radix
//! integer with digits `k_i + f_i`, first dimension most significant. Under this
//! convention `flat(-k) = n - 1 - flat(k)`, the zero frequency sits at the
//! centre `(n - 1) / 2` and the canonical half is exactly the flat indices above
//! the centre.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on `Π (2 f_i + 1)` accepted by [`FrequencyLattice::new`].
pub const DEFAULT_LATTICE_LIMIT: usize = 1 << 36;

/// Per-dimension frequency bounds: frequencies range over `{-f_i, …, f_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FrequencyLattice {
    max_freq: Vec<u32>,
    strides: Vec<usize>,
    size: usize,
}

impl FrequencyLattice {
    pub fn new(max_freq: Vec<u32>) -> Result<Self> {
        Self::with_limit(max_freq, DEFAULT_LATTICE_LIMIT)
    }

    pub fn with_limit(max_freq: Vec<u32>, limit: usize) -> Result<Self> {
        if max_freq.is_empty() {
            return Err(Error::InvalidArgument(
                "a lattice needs at least one dimension".into(),
            ));
        }
        let mut size: u128 = 1;
        for &f in &max_freq {
            size = size.saturating_mul(2 * f as u128 + 1);
        }
        if size > limit as u128 {
            return Err(Error::LatticeTooLarge { size, limit });
        }
        let size = size as usize;
        let mut strides = vec![1usize; max_freq.len()];
        for i in (0..max_freq.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (2 * max_freq[i + 1] as usize + 1);
        }
        Ok(Self {
            max_freq,
            strides,
            size,
        })
    }

    pub fn dims(&self) -> usize {
        self.max_freq.len()
    }

    pub fn max_freq(&self) -> &[u32] {
        &self.max_freq
    }

    /// Number of lattice points `n = Π (2 f_i + 1)`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Points per axis of the matching Nyquist grid.
    pub fn shape(&self) -> Vec<usize> {
        self.max_freq.iter().map(|&f| 2 * f as usize + 1).collect()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Flat index of the zero frequency.
    pub fn center(&self) -> usize {
        (self.size - 1) / 2
    }

    pub fn contains(&self, k: &[i32]) -> bool {
        k.len() == self.dims()
            && k
                .iter()
                .zip(&self.max_freq)
                .all(|(&ki, &f)| ki.unsigned_abs() <= f)
    }

    pub fn flat_index(&self, k: &[i32]) -> Result<usize> {
        if k.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: k.len(),
            });
        }
        if !self.contains(k) {
            return Err(Error::FrequencyOutOfRange(k.to_vec()));
        }
        Ok(k.iter()
            .zip(&self.max_freq)
            .zip(&self.strides)
            .map(|((&ki, &f), &s)| (ki + f as i32) as usize * s)
            .sum())
    }

    /// Inverse of [`flat_index`](Self::flat_index), writing into `out`.
    pub fn frequency_into(&self, mut q: usize, out: &mut [i32]) {
        debug_assert!(q < self.size);
        for (i, (&f, &s)) in self.max_freq.iter().zip(&self.strides).enumerate() {
            let digit = q / s;
            q -= digit * s;
            out[i] = digit as i32 - f as i32;
        }
    }

    pub fn frequency(&self, q: usize) -> FrequencyVector {
        let mut k = vec![0; self.dims()];
        self.frequency_into(q, &mut k);
        FrequencyVector(k)
    }
}

/// Maximal frequency support of a circuit whose Pauli rotations are grouped
/// by shared parameter: group `i` holds `M_i` canonically parameterised gates
/// and contributes frequencies `{-M_i, …, M_i}`.
pub fn support_from_correlated_circuit(group_sizes: &[usize]) -> Result<FrequencyLattice> {
    if group_sizes.is_empty() {
        return Err(Error::InvalidArgument("no parameter groups given".into()));
    }
    if group_sizes.contains(&0) {
        return Err(Error::InvalidArgument(
            "every parameter group needs at least one gate".into(),
        ));
    }
    let max_freq = group_sizes
        .iter()
        .map(|&m| {
            u32::try_from(m).map_err(|_| Error::InvalidArgument("group size too large".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    FrequencyLattice::new(max_freq)
}

/// An integer frequency vector.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrequencyVector(pub Vec<i32>);

impl FrequencyVector {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    /// True when the first nonzero component is positive.
    pub fn is_canonical(&self) -> bool {
        is_canonical(&self.0)
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&k| -k).collect())
    }
}

pub(crate) fn is_canonical(k: &[i32]) -> bool {
    k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Tolerance for accepting an imaginary part on the zero frequency.
const REAL_TOL: f64 = 1e-12;

/// A real trigonometric polynomial stored on the canonical half-lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "TrigPolyJson", try_from = "TrigPolyJson")]
pub struct TrigPoly {
    lattice: FrequencyLattice,
    coeffs: BTreeMap<FrequencyVector, Complex64>,
}

impl TrigPoly {
    pub fn zero(lattice: FrequencyLattice) -> Self {
        Self {
            lattice,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(lattice: FrequencyLattice, value: f64) -> Self {
        let mut p = Self::zero(lattice);
        let zero = vec![0; p.lattice.dims()];
        p.set(&zero, Complex64::new(value, 0.0))
            .expect("zero frequency is always in range");
        p
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn dims(&self) -> usize {
        self.lattice.dims()
    }

    /// Sets the coefficient of `k`; the mirror `-k` follows implicitly.
    ///
    /// A non-canonical `k` is stored as `conj(c)` at `-k`. The zero frequency
    /// must be real.
    pub fn set(&mut self, k: &[i32], c: Complex64) -> Result<()> {
        self.lattice.flat_index(k)?;
        let key = FrequencyVector(k.to_vec());
        let (key, value) = if key.is_zero() {
            if c.im.abs() > REAL_TOL * (1.0 + c.re.abs()) {
                return Err(Error::SymmetryViolation(c.im.abs()));
            }
            (key, Complex64::new(c.re, 0.0))
        } else if key.is_canonical() {
            (key, c)
        } else {
            (key.negated(), c.conj())
        };
        if value == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, value);
        }
        Ok(())
    }

    /// Coefficient of an arbitrary lattice frequency (mirrors are conjugated).
    pub fn get(&self, k: &[i32]) -> Complex64 {
        let key = FrequencyVector(k.to_vec());
        if key.is_zero() || key.is_canonical() {
            self.coeffs.get(&key).copied().unwrap_or_default()
        } else {
            self.coeffs
                .get(&key.negated())
                .map(|c| c.conj())
                .unwrap_or_default()
        }
    }

    /// Builds a polynomial from coefficients given on the full lattice.
    ///
    /// Every pair `(k, -k)` must be conjugate up to `tol` (absolute, scaled by
    /// `1 + max |c|`); the stored value is the symmetrised average.
    pub fn from_full<I>(lattice: FrequencyLattice, entries: I, tol: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i32>, Complex64)>,
    {
        let mut full: HashMap<Vec<i32>, Complex64> = HashMap::new();
        for (k, c) in entries {
            lattice.flat_index(&k)?;
            *full.entry(k).or_default() += c;
        }
        let scale = 1.0 + full.values().map(|c| c.norm()).fold(0.0, f64::max);
        let mut poly = Self::zero(lattice);
        let mut worst: f64 = 0.0;
        for (k, &c) in &full {
            let fv = FrequencyVector(k.clone());
            if fv.is_zero() {
                worst = worst.max(c.im.abs());
                if c.re != 0.0 {
                    poly.coeffs.insert(fv, Complex64::new(c.re, 0.0));
                }
            } else if fv.is_canonical() {
                let mirror = full.get(&fv.negated().0).copied().unwrap_or_default();
                worst = worst.max((c - mirror.conj()).norm());
                let avg = 0.5 * (c + mirror.conj());
                if avg != Complex64::new(0.0, 0.0) {
                    poly.coeffs.insert(fv, avg);
                }
            } else {
                let mirror = fv.negated();
                if !full.contains_key(&mirror.0) {
                    worst = worst.max(c.norm());
                    let avg = 0.5 * c.conj();
                    if avg != Complex64::new(0.0, 0.0) {
                        poly.coeffs.insert(mirror, avg);
                    }
                }
            }
        }
        if worst > tol * scale {
            return Err(Error::SymmetryViolation(worst));
        }
        Ok(poly)
    }

    /// Stored entries: the zero frequency and canonical frequencies.
    pub fn iter(&self) -> impl Iterator<Item = (&FrequencyVector, &Complex64)> {
        self.coeffs.iter()
    }

    /// Number of stored (canonical or zero) coefficients.
    pub fn num_stored(&self) -> usize {
        self.coeffs.len()
    }

    /// Nonzero coefficients on the full lattice: mirror pairs count twice.
    pub fn full_support_size(&self) -> usize {
        self.coeffs
            .keys()
            .map(|k| if k.is_zero() { 1 } else { 2 })
            .sum()
    }

    /// Largest coefficient magnitude over the full lattice.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `Σ_k |c_k|²` over the full lattice.
    pub fn energy(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| if k.is_zero() { c.norm_sqr() } else { 2.0 * c.norm_sqr() })
            .sum()
    }

    /// Drops coefficients with `|c| ≤ rel_tol · max |c|`.
    pub fn pruned(&self, rel_tol: f64) -> Self {
        let cut = rel_tol * self.max_abs();
        Self {
            lattice: self.lattice.clone(),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(_, c)| c.norm() > cut)
                .map(|(k, c)| (k.clone(), *c))
                .collect(),
        }
    }

    /// Entries must be canonical or zero, inside the lattice, with a real
    /// zero-frequency value.
    pub(crate) fn from_canonical_unchecked(
        lattice: FrequencyLattice,
        entries: impl IntoIterator<Item = (FrequencyVector, Complex64)>,
    ) -> Self {
        let coeffs: BTreeMap<_, _> = entries
            .into_iter()
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        debug_assert!(coeffs
            .keys()
            .all(|k| lattice.contains(&k.0) && (k.is_zero() || k.is_canonical())));
        Self { lattice, coeffs }
    }

    fn check_dims(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Value at `theta` (radians).
    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        self.check_dims(theta)?;
        let mut acc = 0.0;
        for (k, c) in &self.coeffs {
            if k.is_zero() {
                acc += c.re;
            } else {
                let phase = dot(&k.0, theta);
                acc += 2.0 * (c.re * phase.cos() - c.im * phase.sin());
            }
        }
        Ok(acc)
    }

    /// Analytic gradient at `theta`.
    pub fn grad(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(theta)?;
        let mut g = vec![0.0; self.dims()];
        for (k, c) in &self.coeffs {
            if k.is_zero() {
                continue;
            }
            let phase = dot(&k.0, theta);
            // d/dθ_j 2 Re(c e^{ik·θ}) = -2 k_j Im(c e^{ik·θ})
            let im = c.re * phase.sin() + c.im * phase.cos();
            for (gj, &kj) in g.iter_mut().zip(&k.0) {
                *gj -= 2.0 * kj as f64 * im;
            }
        }
        Ok(g)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn dot(k: &[i32], theta: &[f64]) -> f64 {
    k.iter().zip(theta).map(|(&ki, &t)| ki as f64 * t).sum()
}

#[derive(Serialize, Deserialize)]
struct TrigPolyJson {
    max_freq: Vec<u32>,
    coeffs: Vec<CoeffJson>,
}

#[derive(Serialize, Deserialize)]
struct CoeffJson {
    k: Vec<i32>,
    re: f64,
    im: f64,
}

impl From<TrigPoly> for TrigPolyJson {
    fn from(p: TrigPoly) -> Self {
        Self {
            max_freq: p.lattice.max_freq.clone(),
            coeffs: p
                .coeffs
                .into_iter()
                .map(|(k, c)| CoeffJson {
                    k: k.0,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<TrigPolyJson> for TrigPoly {
    type Error = Error;

    fn try_from(j: TrigPolyJson) -> Result<Self> {
        let lattice = FrequencyLattice::new(j.max_freq)?;
        let mut poly = TrigPoly::zero(lattice);
        for c in j.coeffs {
            let key = FrequencyVector(c.k);
            if !(key.is_zero() || key.is_canonical()) {
                return Err(Error::InvalidArgument(format!(
                    "coefficient {:?} is not on the canonical half-lattice",
                    key.0
                )));
            }
            if poly.coeffs.contains_key(&key) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate coefficient {:?}",
                    key.0
                )));
            }
            poly.set(&key.0, Complex64::new(c.re, c.im))?;
        }
        Ok(poly)
    }
}
