//! Dense double-precision statevector simulation. Qubit `q` is bit `q` of the
//! basis index.

use num_complex::Complex64;

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::pauli::PauliString;

pub const DEFAULT_QUBIT_LIMIT: usize = 20;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(num_qubits: usize, bits: u64, limit: usize) -> Result<Self> {
        if num_qubits > limit {
            return Err(Error::TooManyQubits {
                qubits: num_qubits,
                limit,
            });
        }
        let dim = 1usize << num_qubits;
        if (bits as u128) >= dim as u128 {
            return Err(Error::InvalidArgument(format!(
                "basis state {bits} needs more than {num_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[bits as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// `|+⟩^{⊗N}`.
    pub fn plus(num_qubits: usize, limit: usize) -> Result<Self> {
        let mut s = Self::basis(num_qubits, 0, limit)?;
        let a = Complex64::new((s.amps.len() as f64).sqrt().recip(), 0.0);
        s.amps.iter_mut().for_each(|v| *v = a);
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies a gate; `theta` supplies rotation angles by parameter index.
    pub fn apply(&mut self, gate: &Gate, theta: &[f64]) {
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        match *gate {
            Gate::H(q) => self.apply_1q(q, [[s2.into(), s2.into()], [s2.into(), (-s2).into()]]),
            Gate::S(q) => {
                let m = 1usize << q;
                for (b, a) in self.amps.iter_mut().enumerate() {
                    if b & m != 0 {
                        *a *= Complex64::i();
                    }
                }
            }
            Gate::X(q) => self.apply_pauli_in_place(&PauliString::from_bits(self.num_qubits, 1 << q, 0, 0)),
            Gate::Y(q) => {
                self.apply_pauli_in_place(&PauliString::from_bits(self.num_qubits, 1 << q, 1 << q, 0))
            }
            Gate::Z(q) => self.apply_pauli_in_place(&PauliString::from_bits(self.num_qubits, 0, 1 << q, 0)),
            Gate::Cx(c, t) => {
                let (mc, mt) = (1usize << c, 1usize << t);
                for b in 0..self.amps.len() {
                    if b & mc != 0 && b & mt == 0 {
                        self.amps.swap(b, b | mt);
                    }
                }
            }
            Gate::Cz(a, b) => {
                let m = (1usize << a) | (1usize << b);
                for (i, v) in self.amps.iter_mut().enumerate() {
                    if i & m == m {
                        *v = -*v;
                    }
                }
            }
            Gate::Rot { pauli, param } => self.apply_rotation(&pauli, theta[param]),
        }
    }

    fn apply_1q(&mut self, q: usize, u: [[Complex64; 2]; 2]) {
        let m = 1usize << q;
        for b in 0..self.amps.len() {
            if b & m == 0 {
                let (a0, a1) = (self.amps[b], self.amps[b | m]);
                self.amps[b] = u[0][0] * a0 + u[0][1] * a1;
                self.amps[b | m] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }

    /// `ψ ← P ψ`.
    pub fn apply_pauli_in_place(&mut self, p: &PauliString) {
        let x = p.x_bits() as usize;
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= p.apply_to_basis(b as u64).1;
            }
            return;
        }
        let top = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for b in 0..self.amps.len() {
            if b & top == 0 {
                let c = b ^ x;
                let fb = p.apply_to_basis(b as u64).1;
                let fc = p.apply_to_basis(c as u64).1;
                let (ab, ac) = (self.amps[b], self.amps[c]);
                self.amps[c] = fb * ab;
                self.amps[b] = fc * ac;
            }
        }
    }

    /// `ψ ← exp(-i P θ/2) ψ`.
    pub fn apply_rotation(&mut self, p: &PauliString, theta: f64) {
        let (s, c) = (0.5 * theta).sin_cos();
        let mis = Complex64::new(0.0, -s);
        let x = p.x_bits() as usize;
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= c + mis * p.apply_to_basis(b as u64).1;
            }
            return;
        }
        let top = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for b in 0..self.amps.len() {
            if b & top == 0 {
                let d = b ^ x;
                let fb = p.apply_to_basis(b as u64).1;
                let fd = p.apply_to_basis(d as u64).1;
                let (ab, ad) = (self.amps[b], self.amps[d]);
                self.amps[b] = c * ab + mis * fd * ad;
                self.amps[d] = c * ad + mis * fb * ab;
            }
        }
    }

    /// `⟨ψ|P|ψ⟩`; real for Hermitian `P`.
    pub fn expectation(&self, p: &PauliString) -> Complex64 {
        let x = p.x_bits() as usize;
        self.amps
            .iter()
            .enumerate()
            .map(|(b, a)| {
                let f = p.apply_to_basis(b as u64).1;
                self.amps[b ^ x].conj() * f * a
            })
            .sum()
    }

    /// `ψ ← exp(-i γ diag(h)) ψ`.
    pub fn apply_diagonal_phase(&mut self, diag: &[f64], gamma: f64) {
        for (a, &h) in self.amps.iter_mut().zip(diag) {
            let (s, c) = (gamma * h).sin_cos();
            *a *= Complex64::new(c, -s);
        }
    }

    /// `ψ ← exp(-i β Σ_q X_q) ψ`.
    pub fn apply_x_mixer(&mut self, beta: f64) {
        let (s, c) = beta.sin_cos();
        let c = Complex64::new(c, 0.0);
        let mis = Complex64::new(0.0, -s);
        for q in 0..self.num_qubits {
            self.apply_1q(q, [[c, mis], [mis, c]]);
        }
    }

    /// `⟨ψ|diag(h)|ψ⟩`.
    pub fn diagonal_expectation(&self, diag: &[f64]) -> f64 {
        self.amps.iter().zip(diag).map(|(a, &h)| a.norm_sqr() * h).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_apply(m: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        let d = v.len();
        (0..d).map(|i| (0..d).map(|j| m[i * d + j] * v[j]).sum()).collect()
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
        let mut amps: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector { num_qubits: n, amps }
    }

    fn close(a: &[Complex64], b: &[Complex64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn pauli_and_rotation_match_dense_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let n = rng.random_range(1..=3);
            let mask = (1u64 << n) - 1;
            let p = PauliString::from_bits(n, rng.random::<u64>() & mask, rng.random::<u64>() & mask, 0);
            let psi = random_state(&mut rng, n);
            let dense = p.to_dense();

            let mut a = psi.clone();
            a.apply_pauli_in_place(&p);
            assert!(close(&a.amps, &dense_apply(&dense, &psi.amps)));

            let theta: f64 = rng.random_range(-3.0..3.0);
            let (s, c) = (0.5 * theta).sin_cos();
            let d = 1 << n;
            let rot: Vec<Complex64> = (0..d * d)
                .map(|ij| {
                    let id = if ij / d == ij % d { c } else { 0.0 };
                    Complex64::new(id, 0.0) - Complex64::new(0.0, s) * dense[ij]
                })
                .collect();
            let mut r = psi.clone();
            r.apply_rotation(&p, theta);
            assert!(close(&r.amps, &dense_apply(&rot, &psi.amps)));
            assert!((r.norm_sqr() - 1.0).abs() < 1e-12);

            let ev = psi.expectation(&p);
            let direct: Complex64 = psi
                .amps
                .iter()
                .zip(dense_apply(&dense, &psi.amps))
                .map(|(a, b)| a.conj() * b)
                .sum();
            assert!((ev - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn clifford_gates_preserve_norm_and_act_as_expected() {
        let mut s = StateVector::basis(2, 0, 20).unwrap();
        s.apply(&Gate::H(0), &[]);
        s.apply(&Gate::Cx(0, 1), &[]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amps[0].re - h).abs() < 1e-15 && (s.amps[3].re - h).abs() < 1e-15);
        s.apply(&Gate::Cz(0, 1), &[]);
        assert!((s.amps[3].re + h).abs() < 1e-15);
        s.apply(&Gate::S(1), &[]);
        assert!((s.amps[3] - Complex64::new(0.0, -h)).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut psi = random_state(&mut rng, 4);
        let gates = [Gate::H(2), Gate::S(0), Gate::X(3), Gate::Y(1), Gate::Z(2), Gate::Cx(3, 0), Gate::Cz(1, 2)];
        for g in gates.iter().cycle().take(50) {
            psi.apply(g, &[]);
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixer_equals_product_of_x_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = random_state(&mut rng, 3);
        let beta = 0.37;
        let mut a = psi.clone();
        a.apply_x_mixer(beta);
        let mut b = psi.clone();
        for q in 0..3 {
            b.apply_rotation(&PauliString::single(3, q, 'X').unwrap(), 2.0 * beta);
        }
        assert!(close(&a.amps, &b.amps));
    }

    #[test]
    fn qubit_limit_is_enforced() {
        assert!(matches!(
            StateVector::basis(21, 0, DEFAULT_QUBIT_LIMIT),
            Err(Error::TooManyQubits { .. })
        ));
        assert!(StateVector::basis(2, 4, 20).is_err());
    }
}
