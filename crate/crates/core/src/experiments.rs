//! Desk-scale experiments: sparsity scaling, recovery accuracy, gradient
//! descent with quantum-call accounting, and narrow-gorge diagnostics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::oracle::{derive_seed, Negated, Oracle};
use crate::qaoa::{random_regular_graph, LatticeBound, QaoaInstance, QaoaOracle};
use crate::sparse_recovery::{
    poly_from_real, random_sample_grid, solve_bpdn, BpdnConfig, SampleSet,
};
use crate::spectral::{
    dft_forward, dft_inverse, sample_full_grid, sparsity, GridData, NyquistGrid,
    DEFAULT_GRID_BUDGET, DEFAULT_SPARSITY_THRESHOLD,
};
use crate::trigpoly::{FrequencyLattice, TrigPoly};

pub const DEFAULT_GD_STEP: f64 = 0.05;
pub const DEFAULT_GD_ITERS: usize = 200;
pub const DEFAULT_FD_STEP: f64 = 1e-3;
pub const DEFAULT_RESTARTS: usize = 100;
pub const DEFAULT_TEST_POINTS: usize = 100;

/// `(mse_rel, baseline_rel)` of `poly` against `oracle` at `test_points`:
/// `mean((poly − oracle)²) / mean(oracle²)` and the zero predictor's value,
/// which is 1.
pub fn oos_relative_mse<O: Oracle>(poly: &TrigPoly, oracle: &O, test_points: &[Vec<f64>]) -> Result<(f64, f64)> {
    if test_points.is_empty() {
        return Err(Error::InvalidArgument("no test points".into()));
    }
    let pairs = test_points
        .iter()
        .enumerate()
        .map(|(i, t)| Ok((poly.eval(t)?, oracle.value(t, i as u64)?)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let denom: f64 = pairs.iter().map(|(_, v)| v * v).sum();
    if denom == 0.0 {
        return Err(Error::InvalidArgument("oracle vanishes at every test point".into()));
    }
    let num: f64 = pairs.iter().map(|(p, v)| (p - v).powi(2)).sum();
    Ok((num / denom, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptMode {
    TrueLandscape,
    RecoveredPoly,
}

/// What gradient descent runs on.
#[derive(Clone, Copy)]
pub enum GdTarget<'a> {
    /// Analytic gradient, no quantum calls.
    Poly(&'a TrigPoly),
    /// Central finite differences; every evaluation is one quantum call.
    Oracle(&'a dyn Oracle),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GdConfig {
    pub step: f64,
    pub iters: usize,
    pub fd_step: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            step: DEFAULT_GD_STEP,
            iters: DEFAULT_GD_ITERS,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptRun {
    /// `θ0` followed by every iterate.
    pub trajectory: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
    /// Target cost at `theta`.
    pub cost: f64,
    pub quantum_calls: u64,
    pub mode: OptMode,
}

/// Plain gradient descent `θ ← θ − step·∇C`. Oracle mode charges `2d` calls
/// per iteration plus one for the final cost; poly mode charges none.
pub fn gd_optimize(target: GdTarget<'_>, theta0: &[f64], config: &GdConfig) -> Result<OptRun> {
    if !(config.step > 0.0) || config.iters == 0 || !(config.fd_step > 0.0) {
        return Err(Error::InvalidArgument("GD needs step, iters and fd_step > 0".into()));
    }
    let d = match target {
        GdTarget::Poly(p) => p.dims(),
        GdTarget::Oracle(o) => o.dims(),
    };
    if theta0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: theta0.len() });
    }
    let mut calls = 0u64;
    let mut eval = |theta: &[f64]| -> Result<f64> {
        let v = match target {
            GdTarget::Poly(p) => p.eval(theta)?,
            GdTarget::Oracle(o) => {
                calls += 1;
                o.value(theta, calls - 1)?
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("cost at {theta:?}")))
        }
    };
    let mut theta = theta0.to_vec();
    let mut trajectory = Vec::with_capacity(config.iters + 1);
    trajectory.push(theta.clone());
    for _ in 0..config.iters {
        let grad = match target {
            GdTarget::Poly(p) => p.grad(&theta)?,
            GdTarget::Oracle(_) => {
                let mut g = vec![0.0; d];
                let mut probe = theta.clone();
                for (j, gj) in g.iter_mut().enumerate() {
                    probe[j] = theta[j] + config.fd_step;
                    let up = eval(&probe)?;
                    probe[j] = theta[j] - config.fd_step;
                    let down = eval(&probe)?;
                    probe[j] = theta[j];
                    *gj = (up - down) / (2.0 * config.fd_step);
                }
                g
            }
        };
        if let Some(j) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient component {j}")));
        }
        theta.iter_mut().zip(&grad).for_each(|(t, g)| *t -= config.step * g);
        trajectory.push(theta.clone());
    }
    let cost = eval(&theta)?;
    let mode = match target {
        GdTarget::Poly(_) => OptMode::RecoveredPoly,
        GdTarget::Oracle(_) => OptMode::TrueLandscape,
    };
    Ok(OptRun {
        trajectory,
        theta,
        cost,
        quantum_calls: calls,
        mode,
    })
}

/// Reference global minimum of a landscape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptimum {
    pub theta: Vec<f64>,
    pub value: f64,
}

/// Dense scan of the Nyquist grid of `lattice`, then oracle-mode GD polish
/// from the `polish_starts` lowest grid points.
pub fn reference_minimum<O: Oracle>(
    oracle: &O,
    lattice: &FrequencyLattice,
    polish_starts: usize,
    polish: &GdConfig,
    budget: usize,
) -> Result<ReferenceOptimum> {
    let grid = NyquistGrid::new(lattice.clone());
    let data = sample_full_grid(oracle, &grid, budget)?;
    let mut order: Vec<usize> = (0..grid.size()).collect();
    let k = polish_starts.clamp(1, order.len());
    order.select_nth_unstable_by(k - 1, |&a, &b| data.values()[a].total_cmp(&data.values()[b]));
    let best_grid = order[..k]
        .iter()
        .copied()
        .min_by(|&a, &b| data.values()[a].total_cmp(&data.values()[b]))
        .expect("k ≥ 1");
    let mut best = ReferenceOptimum {
        theta: grid.point(best_grid),
        value: data.values()[best_grid],
    };
    let polished = order[..k]
        .par_iter()
        .map(|&j| gd_optimize(GdTarget::Oracle(oracle), &grid.point(j), polish))
        .collect::<Result<Vec<_>>>()?;
    for run in polished {
        if run.cost < best.value {
            best = ReferenceOptimum {
                theta: run.theta,
                value: run.cost,
            };
        }
    }
    Ok(best)
}

/// `(value − C_min) / |C_min|`.
pub fn relative_error_to_optimum(value: f64, reference: &ReferenceOptimum) -> Result<f64> {
    let c = reference.value;
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("reference minimum {c} cannot normalise")));
    }
    Ok((value - c) / c.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhanceConfig {
    pub m: usize,
    pub restarts: usize,
    pub gd: GdConfig,
    pub bound: LatticeBound,
    pub bpdn: BpdnConfig,
    /// Grid points polished for the reference minimum.
    pub polish_starts: usize,
    pub polish: GdConfig,
    pub budget: usize,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            m: 400,
            restarts: DEFAULT_RESTARTS,
            gd: GdConfig::default(),
            bound: LatticeBound::Superset,
            bpdn: BpdnConfig::default(),
            polish_starts: 10,
            polish: GdConfig {
                step: 0.02,
                iters: 1000,
                fd_step: 1e-4,
            },
            budget: DEFAULT_GRID_BUDGET,
        }
    }
}

/// One CSV row of the optimisation comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptRow {
    pub mode: OptMode,
    pub restart: usize,
    pub rel_error: f64,
    pub quantum_calls: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhanceReport {
    pub reference: ReferenceOptimum,
    /// Randomly initialised true-landscape GD.
    pub random_runs: Vec<OptRow>,
    pub random_median: f64,
    /// Relative error at the recovered polynomial's optimum.
    pub recovered_rel_error: f64,
    /// Samples spent on recovery; the polynomial descent itself is free.
    pub recovered_calls: u64,
    /// True-landscape GD started from the recovered optimum.
    pub refined: OptRow,
}

/// Compares randomly initialised GD on `−⟨C⟩` with GD started from the
/// optimum of a landscape recovered from `m` samples.
pub fn gd_enhancement_experiment(instance: &QaoaInstance, config: &EnhanceConfig, seed: u64) -> Result<EnhanceReport> {
    let lattice = instance.lattice(config.bound)?;
    let exact = QaoaOracle {
        instance,
        shots: None,
        seed,
    };
    let oracle = Negated(exact);
    let d = instance.num_params();
    let reference = reference_minimum(&oracle, &lattice, config.polish_starts, &config.polish, config.budget)?;

    let random_runs = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            let theta0: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..TAU)).collect();
            let run = gd_optimize(GdTarget::Oracle(&oracle), &theta0, &config.gd)?;
            Ok(OptRow {
                mode: OptMode::TrueLandscape,
                restart: r,
                rel_error: relative_error_to_optimum(run.cost, &reference)?,
                quantum_calls: run.quantum_calls,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut errs: Vec<f64> = random_runs.iter().map(|r| r.rel_error).collect();
    let random_median = median(&mut errs);

    let indices = random_sample_grid(&lattice, config.m, derive_seed(seed, u64::MAX))?;
    let samples = SampleSet::from_oracle(&oracle, lattice.clone(), indices)?;
    let sol = solve_bpdn(&samples, &config.bpdn)?;
    let poly = poly_from_real(&lattice, &sol.coeffs)?;
    let grid = NyquistGrid::new(lattice);
    let surface = dft_inverse(&poly, &grid)?;
    let start = surface
        .values()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| j)
        .expect("grid is non-empty");
    let on_poly = gd_optimize(GdTarget::Poly(&poly), &grid.point(start), &config.gd)?;
    let recovered_rel_error = relative_error_to_optimum(oracle.value(&on_poly.theta, 0)?, &reference)?;
    let refined_run = gd_optimize(GdTarget::Oracle(&oracle), &on_poly.theta, &config.gd)?;
    Ok(EnhanceReport {
        reference: reference.clone(),
        random_runs,
        random_median,
        recovered_rel_error,
        recovered_calls: samples.len() as u64 + on_poly.quantum_calls,
        refined: OptRow {
            mode: OptMode::TrueLandscape,
            restart: 0,
            rel_error: relative_error_to_optimum(refined_run.cost, &reference)?,
            quantum_calls: refined_run.quantum_calls,
        },
    })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Norm comparisons behind the unrecoverability conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GorgeReport {
    /// `‖C|Ω‖₁ / ‖C_all‖₂`.
    pub ratio: f64,
    /// `1/√n`.
    pub bound: f64,
    pub condition_met: bool,
    pub l2_sample_norm: f64,
    pub full_l2_norm: f64,
    /// Shot-noise tolerance `max|C_all| · √(m / n_shots)`.
    pub epsilon: Option<f64>,
    /// `‖C|Ω‖₂ < ε`: the zero polynomial fits the samples within the noise.
    pub noise_condition_met: Option<bool>,
}

pub fn gorge_report(full: &GridData, sample_indices: &[usize], n_shots: Option<u64>) -> Result<GorgeReport> {
    let v = full.values();
    let n = v.len();
    if let Some(&j) = sample_indices.iter().find(|&&j| j >= n) {
        return Err(Error::InvalidArgument(format!("sample index {j} outside a grid of {n}")));
    }
    let full_l2_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if full_l2_norm == 0.0 {
        return Err(Error::InvalidArgument("landscape vanishes on the whole grid".into()));
    }
    let l1: f64 = sample_indices.iter().map(|&j| v[j].abs()).sum();
    let l2_sample_norm = sample_indices.iter().map(|&j| v[j] * v[j]).sum::<f64>().sqrt();
    let ratio = l1 / full_l2_norm;
    let bound = 1.0 / (n as f64).sqrt();
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let epsilon = n_shots.map(|s| scale * (sample_indices.len() as f64 / s as f64).sqrt());
    Ok(GorgeReport {
        ratio,
        bound,
        condition_met: ratio < bound,
        l2_sample_norm,
        full_l2_norm,
        epsilon,
        noise_condition_met: epsilon.map(|e| l2_sample_norm < e),
    })
}

/// Normalised Dirichlet kernel `(1/(2w+1)) Σ_{|k|≤w} e^{ik(θ−θ_c)}` on the
/// one-dimensional grid of `2f+1` points, peaked at grid point `center`.
pub fn dirichlet_spike(max_freq: u32, bandwidth: u32, center: usize) -> Result<GridData> {
    if bandwidth > max_freq {
        return Err(Error::InvalidArgument(format!(
            "bandwidth {bandwidth} exceeds the lattice bound {max_freq}"
        )));
    }
    let lattice = FrequencyLattice::new(vec![max_freq])?;
    let grid = NyquistGrid::new(lattice.clone());
    if center >= grid.size() {
        return Err(Error::InvalidArgument(format!("center {center} is off the grid")));
    }
    let theta_c = grid.point(center)[0];
    let norm = 1.0 / (2 * bandwidth + 1) as f64;
    let mut poly = TrigPoly::constant(lattice, norm);
    for k in 1..=bandwidth as i32 {
        poly.set(&[k], Complex64::from_polar(norm, -(k as f64) * theta_c))?;
    }
    dft_inverse(&poly, &grid)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GorgeConfig {
    /// Lattice bound; the grid has `2f+1` points.
    pub max_freq: u32,
    pub bandwidths: Vec<u32>,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub n_shots: Option<u64>,
    pub bpdn: BpdnConfig,
}

impl Default for GorgeConfig {
    fn default() -> Self {
        Self {
            max_freq: 2048,
            bandwidths: vec![2048, 512, 128, 32],
            sample_sizes: vec![10, 40, 160],
            trials: 5,
            n_shots: None,
            bpdn: BpdnConfig::default(),
        }
    }
}

/// One synthetic spike trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GorgeRow {
    pub bandwidth: u32,
    pub m: usize,
    pub trial: usize,
    pub ratio: f64,
    pub bound: f64,
    pub condition_met: bool,
    /// Relative MSE of BPDN over every unsampled grid point; only computed
    /// when the condition holds.
    pub oos_mse_rel: Option<f64>,
    pub baseline_rel: f64,
}

pub fn gorge_experiment(config: &GorgeConfig, seed: u64) -> Result<Vec<GorgeRow>> {
    let mut cells = Vec::new();
    for &w in &config.bandwidths {
        for &m in &config.sample_sizes {
            for trial in 0..config.trials {
                cells.push((w, m, trial));
            }
        }
    }
    let n = 2 * config.max_freq as usize + 1;
    cells
        .into_par_iter()
        .enumerate()
        .map(|(i, (w, m, trial))| {
            let cell_seed = derive_seed(seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
            let full = dirichlet_spike(config.max_freq, w, rng.random_range(0..n))?;
            let lattice = full.grid().lattice().clone();
            let indices = random_sample_grid(&lattice, m, derive_seed(cell_seed, 1))?;
            let report = gorge_report(&full, &indices, config.n_shots)?;
            let oos_mse_rel = if report.condition_met {
                let values = indices.iter().map(|&j| full.values()[j]).collect();
                let samples = SampleSet::new(lattice.clone(), indices.clone(), values, config.n_shots)?;
                let sol = solve_bpdn(&samples, &config.bpdn)?;
                let pred = dft_inverse(&poly_from_real(&lattice, &sol.coeffs)?, full.grid())?;
                let mut sampled = vec![false; n];
                indices.iter().for_each(|&j| sampled[j] = true);
                let (mut num, mut den) = (0.0, 0.0);
                for j in (0..n).filter(|&j| !sampled[j]) {
                    num += (pred.values()[j] - full.values()[j]).powi(2);
                    den += full.values()[j].powi(2);
                }
                Some(num / den)
            } else {
                None
            };
            Ok(GorgeRow {
                bandwidth: w,
                m,
                trial,
                ratio: report.ratio,
                bound: report.bound,
                condition_met: report.condition_met,
                oos_mse_rel,
                baseline_rel: 1.0,
            })
        })
        .collect()
}

/// Empirical frequencies with which iid zero-mean Gaussian vectors satisfy
/// `‖y‖₁ ≤ (m + t√m)σ` and `‖y‖₂ ≤ (1 + t)√m σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCheck {
    pub m: usize,
    pub t: f64,
    pub trials: usize,
    pub l1_frequency: f64,
    pub l2_frequency: f64,
    /// `1 − 1/t²`.
    pub required: f64,
}

pub fn concentration_bounds(m: usize, sigma: f64, t: f64, trials: usize, seed: u64) -> Result<ConcentrationCheck> {
    if m == 0 || trials == 0 || !(sigma > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidArgument("need m, trials, σ, t > 0".into()));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sm = (m as f64).sqrt();
    let (l1_cap, l2_cap) = ((m as f64 + t * sm) * sigma, (1.0 + t) * sm * sigma);
    let (mut l1_ok, mut l2_ok) = (0usize, 0usize);
    for _ in 0..trials {
        let (mut l1, mut sq) = (0.0, 0.0);
        for _ in 0..m {
            let y: f64 = normal.sample(&mut rng);
            l1 += y.abs();
            sq += y * y;
        }
        l1_ok += (l1 <= l1_cap) as usize;
        l2_ok += (sq.sqrt() <= l2_cap) as usize;
    }
    Ok(ConcentrationCheck {
        m,
        t,
        trials,
        l1_frequency: l1_ok as f64 / trials as f64,
        l2_frequency: l2_ok as f64 / trials as f64,
        required: 1.0 - 1.0 / (t * t),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsityConfig {
    pub degree: usize,
    pub threshold: f64,
    pub bound: LatticeBound,
    pub budget: usize,
}

impl Default for SparsityConfig {
    fn default() -> Self {
        Self {
            degree: 3,
            threshold: DEFAULT_SPARSITY_THRESHOLD,
            bound: LatticeBound::Superset,
            budget: DEFAULT_GRID_BUDGET,
        }
    }
}

/// One `(N, p, graph)` cell; `s` is empty when the grid exceeds the budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsityRow {
    #[serde(rename = "N")]
    pub n_qubits: usize,
    pub p: usize,
    pub graph_seed: u64,
    pub edges: usize,
    pub n: usize,
    pub s: Option<usize>,
    pub threshold: f64,
    pub skipped: bool,
}

/// Seed of graph `index` with `n_qubits` vertices; shared across layer counts.
pub fn graph_seed(seed: u64, n_qubits: usize, index: usize) -> u64 {
    derive_seed(seed, (n_qubits as u64) << 32 | index as u64)
}

pub fn sparsity_scaling_experiment(
    n_list: &[usize],
    p_list: &[usize],
    graphs_per_point: usize,
    seed: u64,
    config: &SparsityConfig,
) -> Result<Vec<SparsityRow>> {
    let mut rows = Vec::new();
    for &nq in n_list {
        for g in 0..graphs_per_point {
            let gs = graph_seed(seed, nq, g);
            let graph = random_regular_graph(nq, config.degree, gs)?;
            for &p in p_list {
                let instance = QaoaInstance::new(graph.clone(), p)?;
                let lattice = instance.lattice(config.bound)?;
                let n = lattice.size();
                let s = if n > config.budget {
                    None
                } else {
                    let oracle = QaoaOracle {
                        instance: &instance,
                        shots: None,
                        seed: gs,
                    };
                    let data = sample_full_grid(&oracle, &NyquistGrid::new(lattice), config.budget)?;
                    Some(sparsity(&dft_forward(&data)?, config.threshold)?)
                };
                rows.push(SparsityRow {
                    n_qubits: nq,
                    p,
                    graph_seed: gs,
                    edges: graph.num_edges(),
                    n,
                    s,
                    threshold: config.threshold,
                    skipped: s.is_none(),
                });
            }
        }
    }
    Ok(rows)
}

/// One CSV row of a recovery run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    #[serde(rename = "N")]
    pub n_qubits: usize,
    pub p: usize,
    pub m: usize,
    pub mse_rel: f64,
    pub baseline_rel: f64,
    pub s: usize,
    pub seed: u64,
}

/// `DEFAULT_TEST_POINTS`-style random test points on a lattice's grid,
/// avoiding `exclude`.
pub fn random_test_points(lattice: &FrequencyLattice, count: usize, exclude: &[usize], seed: u64) -> Result<Vec<Vec<f64>>> {
    let grid = NyquistGrid::new(lattice.clone());
    let taken: std::collections::HashSet<usize> = exclude.iter().copied().collect();
    let available = grid.size() - taken.len().min(grid.size());
    if count > available {
        return Err(Error::InvalidArgument(format!("only {available} grid points are free for testing")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut used = taken.clone();
    while out.len() < count {
        let j = rng.random_range(0..grid.size());
        if used.insert(j) {
            out.push(grid.point(j));
        }
    }
    Ok(out)
}
