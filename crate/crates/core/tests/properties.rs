use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparse_landscape::circuit::{Gate, GenericCircuit, Observable};
use sparse_landscape::clifford::{
    circuit_lattice, closed_form_cost, conjugate_pauli, heisenberg_propagate, CliffordTableau,
};
use sparse_landscape::pauli::PauliString;
use sparse_landscape::qaoa::{random_regular_graph, LatticeBound, QaoaInstance, QaoaOracle};
use sparse_landscape::sparse_recovery::{
    poly_from_real, random_sample_grid, real_coefficients, refine_on_support, BpdnConfig, SamplingOperator,
};
use sparse_landscape::spectral::{dft_forward, dft_inverse, recover_on_lattice, GridData, NyquistGrid};
use sparse_landscape::trigpoly::FrequencyLattice;

fn lattice_from(rng: &mut ChaCha8Rng, dims: usize, max: u32) -> FrequencyLattice {
    FrequencyLattice::new((0..dims).map(|_| rng.random_range(0..=max)).collect()).unwrap()
}

fn dense_real(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_pauli(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
    PauliString::from_bits(n, rng.random_range(0..1 << n), rng.random_range(0..1 << n), 0)
}

fn random_circuit(rng: &mut ChaCha8Rng, n: usize, m: usize) -> GenericCircuit {
    let mut gates = Vec::new();
    for _ in 0..4 * n {
        let q = rng.random_range(0..n);
        let r = (q + rng.random_range(1..n.max(2))) % n;
        gates.push(match rng.random_range(0..if n > 1 { 4 } else { 2 }) {
            0 => Gate::H(q),
            1 => Gate::S(q),
            2 => Gate::Cx(q, r),
            _ => Gate::Cz(q, r),
        });
    }
    for param in 0..m {
        let mut p = random_pauli(rng, n);
        while p.is_identity_up_to_phase() {
            p = random_pauli(rng, n);
        }
        let pos = rng.random_range(0..=gates.len());
        gates.insert(pos, Gate::Rot { pauli: p, param });
    }
    GenericCircuit::new(n, gates).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampling_operator_is_adjoint_on_both_paths(seed in any::<u64>(), dims in 1usize..=3, frac in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lattice = lattice_from(&mut rng, dims, 6);
        let n = lattice.size();
        let m = ((frac * n as f64) as usize).max(1);
        let idx = random_sample_grid(&lattice, m, seed).unwrap();
        let op = SamplingOperator::new(&lattice, &idx).unwrap();
        let x = dense_real(&mut rng, n);
        let r = dense_real(&mut rng, m);
        let (lhs, rhs) = (dot(&op.forward(&x), &r), dot(&x, &op.adjoint(&r)));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn sampling_operator_evaluates_the_polynomial(seed in any::<u64>(), dims in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lattice = lattice_from(&mut rng, dims, 5);
        let x = dense_real(&mut rng, lattice.size());
        let poly = poly_from_real(&lattice, &x).unwrap();
        let grid = NyquistGrid::new(lattice.clone());
        let idx = random_sample_grid(&lattice, lattice.size().min(40), seed).unwrap();
        let pred = SamplingOperator::new(&lattice, &idx).unwrap().forward(&x);
        for (&j, p) in idx.iter().zip(&pred) {
            prop_assert!((poly.eval(&grid.point(j)).unwrap() - p).abs() < 1e-10);
        }
        let back = real_coefficients(&poly);
        prop_assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn polynomial_oracles_are_recovered_exactly(seed in any::<u64>(), dims in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lattice = lattice_from(&mut rng, dims, 5);
        let truth = poly_from_real(&lattice, &dense_real(&mut rng, lattice.size())).unwrap();
        let got = recover_on_lattice(&truth, lattice.clone(), 1 << 20).unwrap();
        for (k, c) in truth.iter() {
            prop_assert!((got.get(&k.0) - c).norm() <= 1e-12);
        }
        prop_assert_eq!(got.num_stored(), truth.num_stored());
    }

    #[test]
    fn dft_is_linear_and_isometric(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lattice = lattice_from(&mut rng, 2, 6);
        let grid = NyquistGrid::new(lattice.clone());
        let n = grid.size();
        let (x, y) = (dense_real(&mut rng, n), dense_real(&mut rng, n));
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let fx = dft_forward(&GridData::new(grid.clone(), x).unwrap()).unwrap();
        let fy = dft_forward(&GridData::new(grid.clone(), y).unwrap()).unwrap();
        let data = GridData::new(grid.clone(), mix).unwrap();
        let fm = dft_forward(&data).unwrap();
        for q in 0..n {
            let k = lattice.frequency(q);
            let expect = fx.get(&k.0) * a + fy.get(&k.0) * b;
            prop_assert!((fm.get(&k.0) - expect).norm() <= 1e-12 * (1.0 + a.abs() + b.abs()));
        }
        prop_assert!((fm.energy() - data.mean_square()).abs() <= 1e-10 * data.mean_square());
        let back = dft_inverse(&fm, &grid).unwrap();
        prop_assert!(back.values().iter().zip(data.values()).all(|(u, v)| (u - v).abs() < 1e-12));
    }

    #[test]
    fn refinement_does_not_increase_the_data_term(seed in any::<u64>(), support_size in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lattice = FrequencyLattice::new(vec![10, 4]).unwrap();
        let n = lattice.size();
        let idx = random_sample_grid(&lattice, 60, seed).unwrap();
        let op = SamplingOperator::new(&lattice, &idx).unwrap();
        let values = dense_real(&mut rng, idx.len());
        let mut support: Vec<usize> = (0..support_size).map(|_| rng.random_range(0..n)).collect();
        support.sort_unstable();
        support.dedup();
        let init = dense_real(&mut rng, n);
        let data = |x: &[f64]| {
            op.forward(x).iter().zip(&values).map(|(p, v)| (p - v).powi(2)).sum::<f64>()
        };
        let mut restricted = vec![0.0; n];
        support.iter().for_each(|&q| restricted[q] = init[q]);
        let out = refine_on_support(&op, &values, &support, &init, &BpdnConfig::default()).unwrap();
        prop_assert!(data(&out) <= data(&restricted) * (1.0 + 1e-12));
        prop_assert!((0..n).all(|q| support.contains(&q) || out[q] == 0.0));
    }

    #[test]
    fn qaoa_cost_stays_in_cut_range(seed in any::<u64>(), n in 2usize..=5, p in 1usize..=2) {
        let graph = random_regular_graph(2 * n, 3, seed).unwrap();
        let inst = QaoaInstance::new(graph, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = inst.graph().num_edges() as f64;
        for _ in 0..10 {
            let theta: Vec<f64> = (0..2 * p).map(|_| rng.random_range(-TAU..TAU)).collect();
            let v = inst.expectation(&theta).unwrap();
            prop_assert!((-1e-12..=edges + 1e-12).contains(&v));
            prop_assert!((inst.state(&theta).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tableau_inverse_round_trips(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, n, 0);
        let t = CliffordTableau::from_gates(n, c.gates()).unwrap();
        prop_assert!(t.is_symplectic());
        let inv = t.inverse();
        for _ in 0..50 {
            let p = random_pauli(&mut rng, n);
            prop_assert_eq!(conjugate_pauli(&inv, &conjugate_pauli(&t, &p).unwrap()).unwrap(), p);
        }
    }

    #[test]
    fn propagation_respects_term_and_support_bounds(seed in any::<u64>(), n in 1usize..=5, m in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, n, m);
        let obs = random_pauli(&mut rng, n);
        let terms = heisenberg_propagate(&c, &obs, 14).unwrap();
        prop_assert!(terms.len() <= 1 << m);
        let poly = closed_form_cost(&c, &Observable::new(vec![(1.0, obs)]).unwrap(), 0, 14).unwrap();
        prop_assert_eq!(poly.lattice(), &circuit_lattice(&c).unwrap());
        let theta: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..TAU)).collect();
        prop_assert!(poly.eval(&theta).unwrap().abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn exact_qaoa_lattice_is_band_limited_off_grid() {
    let inst = QaoaInstance::new(random_regular_graph(6, 3, 3).unwrap(), 2).unwrap();
    let lattice = inst.lattice(LatticeBound::Exact).unwrap();
    let oracle = QaoaOracle {
        instance: &inst,
        shots: None,
        seed: 0,
    };
    let poly = recover_on_lattice(&oracle, lattice, 1 << 22).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let theta: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..TAU)).collect();
        assert!((poly.eval(&theta).unwrap() - inst.expectation(&theta).unwrap()).abs() < 1e-9);
    }
}
