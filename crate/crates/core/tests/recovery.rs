use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparse_landscape::sparse_recovery::{
    poly_from_real, random_sample_grid, recover, recover_from_samples, RecoverConfig, SampleSet,
};
use sparse_landscape::trigpoly::FrequencyLattice;
use sparse_landscape::TrigPoly;

fn planted(lattice: &FrequencyLattice, s: usize, seed: u64) -> TrigPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; lattice.size()];
    for _ in 0..s {
        x[rng.random_range(0..lattice.size())] = rng.random_range(0.5..1.5);
    }
    poly_from_real(lattice, &x).unwrap()
}

fn max_coeff_error(a: &TrigPoly, b: &TrigPoly) -> f64 {
    a.iter()
        .map(|(k, c)| (b.get(&k.0) - c).norm())
        .chain(b.iter().map(|(k, c)| (a.get(&k.0) - c).norm()))
        .fold(0.0, f64::max)
}

#[test]
fn stored_samples_recover_a_sparse_landscape() {
    let lattice = FrequencyLattice::new(vec![20, 15]).unwrap();
    let truth = planted(&lattice, 4, 1);
    let idx = random_sample_grid(&lattice, 400, 2).unwrap();
    let samples = SampleSet::from_oracle(&truth, lattice.clone(), idx).unwrap();
    let config = RecoverConfig {
        m_init: 50,
        m_max: 300,
        ..Default::default()
    };
    let a = recover_from_samples(&samples, &config, 3).unwrap();
    assert!(a.accepted);
    assert!(a.m_used <= 300);
    assert!(max_coeff_error(&a.poly, &truth) < 1e-6, "{}", max_coeff_error(&a.poly, &truth));
    assert_eq!(a.holdout.len(), config.holdout);
    assert!(a.holdout.iter().all(|j| !a.samples.indices().contains(j)));

    let b = recover_from_samples(&samples, &config, 3).unwrap();
    assert_eq!(a.poly, b.poly);
}

#[test]
fn stored_and_live_sampling_agree_on_the_pipeline() {
    let lattice = FrequencyLattice::new(vec![30]).unwrap();
    let truth = planted(&lattice, 3, 4);
    let config = RecoverConfig {
        m_init: 20,
        m_max: 40,
        holdout: 15,
        ..Default::default()
    };
    let live = recover(&truth, &lattice, &config, 5).unwrap();
    assert!(live.accepted);
    assert!(max_coeff_error(&live.poly, &truth) < 1e-6);

    let all: Vec<usize> = (0..lattice.size()).collect();
    let stored = SampleSet::from_oracle(&truth, lattice.clone(), all).unwrap();
    let offline = recover_from_samples(&stored, &config, 5).unwrap();
    assert!(offline.accepted);
    assert!(max_coeff_error(&offline.poly, &truth) < 1e-6);
}

#[test]
fn stored_samples_must_cover_holdout_and_initial_budget() {
    let lattice = FrequencyLattice::new(vec![5]).unwrap();
    let idx = random_sample_grid(&lattice, 8, 1).unwrap();
    let samples = SampleSet::new(lattice, idx, vec![1.0; 8], None).unwrap();
    let config = RecoverConfig {
        m_init: 5,
        m_max: 10,
        holdout: 5,
        ..Default::default()
    };
    assert!(recover_from_samples(&samples, &config, 0).is_err());
}
