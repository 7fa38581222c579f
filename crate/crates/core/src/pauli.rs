//! Pauli strings on up to 64 qubits.
//!
//! A string is `i^phase · ⊗_q σ_q` with `σ_q ∈ {I, X, Y, Z}` encoded by the bit
//! pair `(x_q, z_q)`: `(0,0)=I`, `(1,0)=X`, `(1,1)=Y`, `(0,1)=Z`. Because `Y` is
//! stored as itself (not as `XZ`) a string is Hermitian exactly when its phase
//! is `±1`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_PAULI_QUBITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    /// Exponent of `i`, in `0..4`.
    phase: u8,
    x: u64,
    z: u64,
    num_qubits: u8,
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> Self {
        assert!(num_qubits <= MAX_PAULI_QUBITS);
        Self {
            phase: 0,
            x: 0,
            z: 0,
            num_qubits: num_qubits as u8,
        }
    }

    pub fn from_bits(num_qubits: usize, x: u64, z: u64, phase: u8) -> Self {
        assert!(num_qubits <= MAX_PAULI_QUBITS);
        let mask = qubit_mask(num_qubits);
        debug_assert!(x & !mask == 0 && z & !mask == 0);
        Self {
            phase: phase % 4,
            x: x & mask,
            z: z & mask,
            num_qubits: num_qubits as u8,
        }
    }

    /// Single-qubit Pauli `letter` on qubit `q`.
    pub fn single(num_qubits: usize, q: usize, letter: char) -> Result<Self> {
        if q >= num_qubits {
            return Err(Error::InvalidArgument(format!(
                "qubit {q} out of range for {num_qubits} qubits"
            )));
        }
        let (x, z) = letter_bits(letter)?;
        Ok(Self::from_bits(num_qubits, (x as u64) << q, (z as u64) << q, 0))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits as usize
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    /// Exponent `e` of the global factor `i^e`.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn phase_complex(&self) -> Complex64 {
        i_pow(self.phase as u32)
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase % 4;
        self
    }

    /// Multiplies the global factor by `i^e`.
    pub fn times_i_pow(mut self, e: u8) -> Self {
        self.phase = (self.phase + e) % 4;
        self
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// No `X` or `Y` factor: diagonal in the computational basis.
    pub fn is_z_type(&self) -> bool {
        self.x == 0
    }

    pub fn letter(&self, q: usize) -> char {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (1, 1) => 'Y',
            _ => 'Z',
        }
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones().is_multiple_of(2)
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.num_qubits, other.num_qubits);
        let (x1, z1, x2, z2) = (self.x, self.z, other.x, other.z);
        let y1 = x1 & z1;
        let xo1 = x1 & !z1;
        let zo1 = !x1 & z1;
        let y2 = x2 & z2;
        let xo2 = x2 & !z2;
        let zo2 = !x2 & z2;
        // XY = iZ, YZ = iX, ZX = iY and the reverse orders give -i.
        let plus = ((xo1 & y2) | (y1 & zo2) | (zo1 & xo2)).count_ones();
        let minus = ((y1 & xo2) | (zo1 & y2) | (xo1 & zo2)).count_ones();
        let phase = (self.phase as u32 + other.phase as u32 + plus + 3 * minus) % 4;
        Self {
            phase: phase as u8,
            x: x1 ^ x2,
            z: z1 ^ z2,
            num_qubits: self.num_qubits,
        }
    }

    /// Action on a computational basis state: `P|b⟩ = factor · |b ⊕ x⟩`.
    pub fn apply_to_basis(&self, b: u64) -> (u64, Complex64) {
        // Y|b⟩ = i(-1)^b |1-b⟩, Z|b⟩ = (-1)^b |b⟩
        let y_count = (self.x & self.z).count_ones();
        let sign_flips = (self.z & b).count_ones() % 2;
        let e = (self.phase as u32 + y_count + 2 * sign_flips) % 4;
        (b ^ self.x, i_pow(e))
    }

    /// Dense `2^N × 2^N` matrix, row-major. Intended for small test oracles.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let dim = 1usize << self.num_qubits;
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for col in 0..dim {
            let (row, f) = self.apply_to_basis(col as u64);
            m[row as usize * dim + col] = f;
        }
        m
    }
}

/// `i^e`.
pub fn i_pow(e: u32) -> Complex64 {
    match e % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn qubit_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn letter_bits(c: char) -> Result<(u8, u8)> {
    match c {
        'I' | 'i' => Ok((0, 0)),
        'X' | 'x' => Ok((1, 0)),
        'Y' | 'y' => Ok((1, 1)),
        'Z' | 'z' => Ok((0, 1)),
        _ => Err(Error::InvalidArgument(format!("unknown Pauli letter {c:?}"))),
    }
}

/// Character `q` of the string is the letter on qubit `q`. An optional sign
/// prefix (`+`, `-`, `+i`, `-i`) sets the phase.
impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (0, rest)
        } else {
            (0, s)
        };
        if body.is_empty() || body.chars().count() > MAX_PAULI_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "Pauli string must have 1..={MAX_PAULI_QUBITS} letters, got {:?}",
                s
            )));
        }
        let mut x = 0;
        let mut z = 0;
        let mut n = 0;
        for (q, c) in body.chars().enumerate() {
            let (xb, zb) = letter_bits(c)?;
            x |= (xb as u64) << q;
            z |= (zb as u64) << q;
            n += 1;
        }
        Ok(Self::from_bits(n, x, z, phase))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}")?;
        for q in 0..self.num_qubits() {
            write!(f, "{}", self.letter(q))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matmul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                let aik = a[i * dim + k];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    c[i * dim + j] += aik * b[k * dim + j];
                }
            }
        }
        c
    }

    fn random_pauli(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
        let mask = (1u64 << n) - 1;
        PauliString::from_bits(n, rng.random::<u64>() & mask, rng.random::<u64>() & mask, rng.random_range(0..4))
    }

    #[test]
    fn parse_and_display() {
        let p: PauliString = "IZXY".parse().unwrap();
        assert_eq!(p.num_qubits(), 4);
        assert_eq!(p.letter(0), 'I');
        assert_eq!(p.letter(3), 'Y');
        assert_eq!(p.to_string(), "IZXY");
        let m: PauliString = "-iXX".parse().unwrap();
        assert_eq!(m.phase(), 3);
        assert_eq!(m.to_string(), "-iXX");
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn single_qubit_products() {
        let x: PauliString = "X".parse().unwrap();
        let y: PauliString = "Y".parse().unwrap();
        let z: PauliString = "Z".parse().unwrap();
        assert_eq!(x.mul(&y), z.with_phase(1));
        assert_eq!(y.mul(&x), z.with_phase(3));
        assert_eq!(z.mul(&x), y.with_phase(1));
        assert_eq!(y.mul(&z), x.with_phase(1));
        assert_eq!(x.mul(&x), PauliString::identity(1));
        assert!(!x.commutes_with(&z));
        assert!(x.commutes_with(&x));
    }

    #[test]
    fn products_and_commutation_match_dense_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3 {
            let dim = 1 << n;
            for _ in 0..40 {
                let a = random_pauli(&mut rng, n);
                let b = random_pauli(&mut rng, n);
                let ab = matmul(&a.to_dense(), &b.to_dense(), dim);
                assert_eq!(a.mul(&b).to_dense(), ab);
                let ba = matmul(&b.to_dense(), &a.to_dense(), dim);
                let commute = ab.iter().zip(&ba).all(|(u, v)| (u - v).norm() < 1e-12);
                assert_eq!(a.commutes_with(&b), commute);
            }
        }
    }

    #[test]
    fn hermitian_iff_real_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let p = random_pauli(&mut rng, 2);
            let m = p.to_dense();
            let herm = (0..4).all(|i| (0..4).all(|j| (m[i * 4 + j] - m[j * 4 + i].conj()).norm() < 1e-12));
            assert_eq!(p.is_hermitian(), herm);
        }
    }
}
