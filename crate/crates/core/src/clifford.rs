//! Closed-form cost functions of Clifford + Pauli-rotation circuits.
//!
//! The observable is pushed backwards through the circuit in the Heisenberg
//! picture. Clifford runs map each Pauli to a single Pauli via a tableau; a
//! rotation `exp(-iPθ/2)` that anticommutes with the current Pauli `Q` splits
//! it into `cos θ · Q + sin θ · (iPQ)`. Branches carry products of cos/sin
//! factors and are expanded into exponentials only when the polynomial is
//! assembled.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::{Gate, GenericCircuit, Observable};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::trigpoly::{support_from_correlated_circuit, FrequencyLattice, TrigPoly};

/// Default cap on the number of rotation gates propagated.
pub const DEFAULT_MAX_ROTATIONS: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Trig {
    Cos,
    Sin,
}

/// `coeff · ∏ trig(θ_j) · pauli`. The Pauli is kept at phase `+1`; signs live
/// in `coeff`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub pauli: PauliString,
    /// Sorted by parameter, one entry per rotation that branched.
    pub trig_factors: Vec<(usize, Trig)>,
}

impl PauliTerm {
    /// A Hermitian Pauli with its `±1` phase moved into the coefficient.
    pub fn new(pauli: PauliString) -> Result<Self> {
        let (pauli, sign) = normalise(pauli)?;
        Ok(Self {
            coeff: sign,
            pauli,
            trig_factors: Vec::new(),
        })
    }

    /// Value of the scalar prefactor at `theta`.
    pub fn weight(&self, theta: &[f64]) -> f64 {
        self.trig_factors
            .iter()
            .map(|&(j, t)| match t {
                Trig::Cos => theta[j].cos(),
                Trig::Sin => theta[j].sin(),
            })
            .product::<f64>()
            * self.coeff
    }
}

fn normalise(p: PauliString) -> Result<(PauliString, f64)> {
    match p.phase() {
        0 => Ok((p, 1.0)),
        2 => Ok((p.with_phase(0), -1.0)),
        _ => Err(Error::NonUnitPhase),
    }
}

/// Heisenberg images `C† X_q C` and `C† Z_q C` of a Clifford unitary `C`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordTableau {
    x_images: Vec<PauliString>,
    z_images: Vec<PauliString>,
}

impl CliffordTableau {
    pub fn identity(num_qubits: usize) -> Self {
        let n = num_qubits;
        Self {
            x_images: (0..n).map(|q| PauliString::from_bits(n, 1 << q, 0, 0)).collect(),
            z_images: (0..n).map(|q| PauliString::from_bits(n, 0, 1 << q, 0)).collect(),
        }
    }

    /// Tableau of the gate sequence, first gate acting first.
    pub fn from_gates(num_qubits: usize, gates: &[Gate]) -> Result<Self> {
        let mut t = Self::identity(num_qubits);
        for g in gates {
            t.append(g)?;
        }
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.x_images.len()
    }

    pub fn x_image(&self, q: usize) -> PauliString {
        self.x_images[q]
    }

    pub fn z_image(&self, q: usize) -> PauliString {
        self.z_images[q]
    }

    /// `C ← G C`: the gate acts after the current unitary.
    pub fn append(&mut self, gate: &Gate) -> Result<()> {
        let n = self.num_qubits();
        let (x_new, z_new): (Vec<_>, Vec<_>) = (0..n)
            .map(|q| {
                let x = conjugate_by_gate(gate, PauliString::from_bits(n, 1 << q, 0, 0))?;
                let z = conjugate_by_gate(gate, PauliString::from_bits(n, 0, 1 << q, 0))?;
                Ok((conjugate_pauli(self, &x)?, conjugate_pauli(self, &z)?))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        self.x_images = x_new;
        self.z_images = z_new;
        debug_assert!(self.is_symplectic());
        Ok(())
    }

    /// Tableau of `B A` where `self = A` acts first.
    pub fn then(&self, other: &Self) -> Result<Self> {
        if other.num_qubits() != self.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                got: other.num_qubits(),
            });
        }
        let map = |v: &[PauliString]| v.iter().map(|p| conjugate_pauli(self, p)).collect::<Result<Vec<_>>>();
        Ok(Self {
            x_images: map(&other.x_images)?,
            z_images: map(&other.z_images)?,
        })
    }

    /// Tableau of `C†`.
    pub fn inverse(&self) -> Self {
        let n = self.num_qubits();
        // Row r of the GF(2) map sends basis vector r (x bits then z bits) to
        // its image; solve for the preimages of every basis vector.
        let width = 2 * n;
        let rows: Vec<u128> = self
            .x_images
            .iter()
            .chain(&self.z_images)
            .map(|p| p.x_bits() as u128 | (p.z_bits() as u128) << n)
            .collect();
        let preimages = invert_gf2(&rows, width);
        let build = |target: PauliString, coeffs: u128| {
            let candidate = PauliString::from_bits(n, (coeffs & mask(n)) as u64, (coeffs >> n) as u64, 0);
            let image = conjugate_pauli(self, &candidate).expect("widths agree");
            debug_assert_eq!((image.x_bits(), image.z_bits()), (target.x_bits(), target.z_bits()));
            // Fix the sign so the image is exactly the target.
            candidate.with_phase((4 + target.phase() - image.phase()) % 4)
        };
        Self {
            x_images: (0..n)
                .map(|q| build(PauliString::from_bits(n, 1 << q, 0, 0), preimages[q]))
                .collect(),
            z_images: (0..n)
                .map(|q| build(PauliString::from_bits(n, 0, 1 << q, 0), preimages[n + q]))
                .collect(),
        }
    }

    /// Images are Hermitian and obey the canonical commutation relations.
    pub fn is_symplectic(&self) -> bool {
        let n = self.num_qubits();
        let hermitian = self.x_images.iter().chain(&self.z_images).all(|p| p.is_hermitian());
        hermitian
            && (0..n).all(|i| {
                (0..n).all(|j| {
                    self.x_images[i].commutes_with(&self.x_images[j])
                        && self.z_images[i].commutes_with(&self.z_images[j])
                        && self.x_images[i].commutes_with(&self.z_images[j]) == (i != j)
                })
            })
    }
}

fn mask(n: usize) -> u128 {
    (1u128 << n) - 1
}

/// Row `r` of the result holds the coefficients expressing basis vector `r`
/// as a combination of `rows`. `rows` must be a basis of `GF(2)^width`.
fn invert_gf2(rows: &[u128], width: usize) -> Vec<u128> {
    // Augment each row with an identity tag and reduce to the identity.
    let mut m: Vec<(u128, u128)> = rows.iter().enumerate().map(|(i, &r)| (r, 1u128 << i)).collect();
    for col in 0..width {
        let pivot = (col..width)
            .find(|&r| m[r].0 >> col & 1 == 1)
            .expect("tableau rows are linearly independent");
        m.swap(col, pivot);
        let (pv, pt) = m[col];
        for (r, row) in m.iter_mut().enumerate() {
            if r != col && row.0 >> col & 1 == 1 {
                row.0 ^= pv;
                row.1 ^= pt;
            }
        }
    }
    m.into_iter().map(|(_, tag)| tag).collect()
}

/// `C† p C` for the unitary `C` of `tableau`.
pub fn conjugate_pauli(tableau: &CliffordTableau, p: &PauliString) -> Result<PauliString> {
    let n = tableau.num_qubits();
    if p.num_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.num_qubits(),
        });
    }
    let mut out = PauliString::identity(n).with_phase(p.phase());
    for q in 0..n {
        let (x, z) = ((p.x_bits() >> q) & 1, (p.z_bits() >> q) & 1);
        if x == 1 {
            out = out.mul(&tableau.x_images[q]);
        }
        if z == 1 {
            out = out.mul(&tableau.z_images[q]);
        }
        if x == 1 && z == 1 {
            // Y = i X Z.
            out = out.times_i_pow(1);
        }
    }
    Ok(out)
}

/// Images of `X_q`, `Z_q` under conjugation by a Clifford gate, for the
/// qubits it touches.
fn gate_images(gate: &Gate, n: usize) -> Vec<(usize, PauliString, PauliString)> {
    let x = |q: usize| PauliString::from_bits(n, 1 << q, 0, 0);
    let z = |q: usize| PauliString::from_bits(n, 0, 1 << q, 0);
    let neg = |p: PauliString| p.times_i_pow(2);
    match *gate {
        Gate::H(q) => vec![(q, z(q), x(q))],
        Gate::S(q) => vec![(q, neg(PauliString::from_bits(n, 1 << q, 1 << q, 0)), z(q))],
        Gate::X(q) => vec![(q, x(q), neg(z(q)))],
        Gate::Y(q) => vec![(q, neg(x(q)), neg(z(q)))],
        Gate::Z(q) => vec![(q, neg(x(q)), z(q))],
        Gate::Cx(c, t) => vec![(c, x(c).mul(&x(t)), z(c)), (t, x(t), z(c).mul(&z(t)))],
        Gate::Cz(a, b) => vec![(a, x(a).mul(&z(b)), z(a)), (b, z(a).mul(&x(b)), z(b))],
        Gate::Rot { .. } => unreachable!("rotations are not Clifford"),
    }
}

/// `G† p G` for a single Clifford gate.
fn conjugate_by_gate(gate: &Gate, p: PauliString) -> Result<PauliString> {
    if !gate.is_clifford() {
        return Err(Error::InvalidArgument(format!("{gate:?} is not a Clifford gate")));
    }
    let n = p.num_qubits();
    let images = gate_images(gate, n);
    let touched: u64 = images.iter().map(|(q, _, _)| 1u64 << q).sum();
    let mut out = PauliString::from_bits(n, p.x_bits() & !touched, p.z_bits() & !touched, p.phase());
    for (q, xi, zi) in images {
        let (x, z) = ((p.x_bits() >> q) & 1, (p.z_bits() >> q) & 1);
        if x == 1 {
            out = out.mul(&xi);
        }
        if z == 1 {
            out = out.mul(&zi);
        }
        if x == 1 && z == 1 {
            out = out.times_i_pow(1);
        }
    }
    Ok(out)
}

/// `exp(iPθ_j/2) · term · exp(-iPθ_j/2)`.
pub fn rotate_pauli(generator: &PauliString, param: usize, term: &PauliTerm) -> Result<Vec<PauliTerm>> {
    if generator.phase() != 0 {
        return Err(Error::NonUnitPhase);
    }
    if generator.num_qubits() != term.pauli.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: term.pauli.num_qubits(),
            got: generator.num_qubits(),
        });
    }
    if generator.commutes_with(&term.pauli) {
        return Ok(vec![term.clone()]);
    }
    let with_factor = |t: Trig| {
        let mut f = term.trig_factors.clone();
        let pos = f.partition_point(|&e| e <= (param, t));
        f.insert(pos, (param, t));
        f
    };
    let (rotated, sign) = normalise(generator.mul(&term.pauli).times_i_pow(1))?;
    Ok(vec![
        PauliTerm {
            coeff: term.coeff,
            pauli: term.pauli,
            trig_factors: with_factor(Trig::Cos),
        },
        PauliTerm {
            coeff: term.coeff * sign,
            pauli: rotated,
            trig_factors: with_factor(Trig::Sin),
        },
    ])
}

fn merge(terms: Vec<PauliTerm>) -> Vec<PauliTerm> {
    let mut acc: HashMap<(PauliString, Vec<(usize, Trig)>), f64> = HashMap::with_capacity(terms.len());
    for t in terms {
        *acc.entry((t.pauli, t.trig_factors)).or_default() += t.coeff;
    }
    let mut out: Vec<PauliTerm> = acc
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|((pauli, trig_factors), coeff)| PauliTerm {
            coeff,
            pauli,
            trig_factors,
        })
        .collect();
    out.sort_by(|a, b| (a.pauli, &a.trig_factors).cmp(&(b.pauli, &b.trig_factors)));
    out
}

/// `U(θ)† P U(θ)` as a sum of Pauli terms, with at most `max_rotations`
/// rotation gates allowed.
pub fn heisenberg_propagate(
    circuit: &GenericCircuit,
    observable: &PauliString,
    max_rotations: usize,
) -> Result<Vec<PauliTerm>> {
    let n = circuit.num_qubits();
    if observable.num_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: observable.num_qubits(),
        });
    }
    let count = circuit.rotation_count();
    if count > max_rotations {
        return Err(Error::TooManyRotations {
            count,
            limit: max_rotations,
        });
    }
    let mut terms = vec![PauliTerm::new(*observable)?];
    let gates = circuit.gates();
    let mut end = gates.len();
    while end > 0 {
        if let Gate::Rot { pauli, param } = &gates[end - 1] {
            let mut next = Vec::with_capacity(2 * terms.len());
            for t in &terms {
                next.extend(rotate_pauli(pauli, *param, t)?);
            }
            terms = merge(next);
            end -= 1;
            continue;
        }
        let start = gates[..end].iter().rposition(|g| !g.is_clifford()).map_or(0, |i| i + 1);
        let tableau = CliffordTableau::from_gates(n, &gates[start..end])?;
        for t in &mut terms {
            let (p, sign) = normalise(conjugate_pauli(&tableau, &t.pauli)?)?;
            t.pauli = p;
            t.coeff *= sign;
        }
        terms = merge(terms);
        end = start;
    }
    Ok(terms)
}

/// Lattice of a circuit's closed-form cost. Clifford-only circuits get a
/// single dimension with `f = 0`, so their cost is a constant taking one
/// ignored angle.
pub fn circuit_lattice(circuit: &GenericCircuit) -> Result<FrequencyLattice> {
    if circuit.num_params() == 0 {
        FrequencyLattice::new(vec![0])
    } else {
        support_from_correlated_circuit(&circuit.group_sizes())
    }
}

/// `⟨x| U(θ)† O U(θ) |x⟩` as a trigonometric polynomial, for a computational
/// basis input whose bit `q` is the state of qubit `q`.
pub fn closed_form_cost(
    circuit: &GenericCircuit,
    observable: &Observable,
    input_bits: u64,
    max_rotations: usize,
) -> Result<TrigPoly> {
    let n = circuit.num_qubits();
    if let Some(w) = observable.num_qubits() {
        if w != n {
            return Err(Error::DimensionMismatch { expected: n, got: w });
        }
    }
    if n < 64 && input_bits >> n != 0 {
        return Err(Error::InvalidArgument(format!(
            "input state {input_bits:#b} does not fit {n} qubits"
        )));
    }
    let lattice = circuit_lattice(circuit)?;
    let d = lattice.dims();
    let per_term: Vec<Vec<PauliTerm>> = observable
        .terms()
        .par_iter()
        .map(|(_, p)| heisenberg_propagate(circuit, p, max_rotations))
        .collect::<Result<_>>()?;
    let mut full: HashMap<Vec<i32>, Complex64> = HashMap::new();
    for ((r, _), terms) in observable.terms().iter().zip(&per_term) {
        for t in terms.iter().filter(|t| t.pauli.is_z_type()) {
            let parity = (t.pauli.z_bits() & input_bits).count_ones() % 2;
            let value = if parity == 0 { r * t.coeff } else { -r * t.coeff };
            for (k, c) in expand_monomial(&t.trig_factors, d) {
                *full.entry(k).or_default() += c * value;
            }
        }
    }
    TrigPoly::from_full(lattice, full, 1e-12)
}

/// Exponential expansion of `∏ trig(θ_j)`.
fn expand_monomial(factors: &[(usize, Trig)], d: usize) -> Vec<(Vec<i32>, Complex64)> {
    let mut acc = vec![(vec![0i32; d], Complex64::new(1.0, 0.0))];
    for &(j, t) in factors {
        // cos = (e^{iθ} + e^{-iθ})/2, sin = (e^{iθ} - e^{-iθ})/2i.
        let (up, down) = match t {
            Trig::Cos => (Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)),
            Trig::Sin => (Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5)),
        };
        let mut next = Vec::with_capacity(2 * acc.len());
        for (k, c) in acc {
            let mut kp = k.clone();
            kp[j] += 1;
            let mut km = k;
            km[j] -= 1;
            next.push((kp, c * up));
            next.push((km, c * down));
        }
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qaoa::generic_expectation;
    use crate::statevector::StateVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn random_pauli(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
        PauliString::from_bits(n, rng.random_range(0..1 << n), rng.random_range(0..1 << n), 0)
    }

    fn random_clifford_gate(rng: &mut ChaCha8Rng, n: usize) -> Gate {
        let q = rng.random_range(0..n);
        let mut r = rng.random_range(0..n);
        if n > 1 {
            while r == q {
                r = rng.random_range(0..n);
            }
        }
        match rng.random_range(0..if n > 1 { 7 } else { 5 }) {
            0 => Gate::H(q),
            1 => Gate::S(q),
            2 => Gate::X(q),
            3 => Gate::Y(q),
            4 => Gate::Z(q),
            5 => Gate::Cx(q, r),
            _ => Gate::Cz(q, r),
        }
    }

    fn dense_unitary(n: usize, gates: &[Gate], theta: &[f64]) -> Vec<Vec<Complex64>> {
        // Column b is U|b⟩.
        (0..1u64 << n)
            .map(|b| {
                let mut s = StateVector::basis(n, b, 20).unwrap();
                for g in gates {
                    s.apply(g, theta);
                }
                s.amplitudes().to_vec()
            })
            .collect()
    }

    /// `U† P U` as a dense row-major matrix.
    fn dense_heisenberg(n: usize, gates: &[Gate], theta: &[f64], pauli: &PauliString) -> Vec<Complex64> {
        let dim = 1usize << n;
        let cols = dense_unitary(n, gates, theta);
        let pm = pauli.to_dense();
        let mut out = vec![Complex64::default(); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = Complex64::default();
                for a in 0..dim {
                    for b in 0..dim {
                        acc += cols[i][a].conj() * pm[a * dim + b] * cols[j][b];
                    }
                }
                out[i * dim + j] = acc;
            }
        }
        out
    }

    fn assert_dense_eq(a: &[Complex64], b: &[Complex64], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn textbook_conjugations() {
        let h = CliffordTableau::from_gates(1, &[Gate::H(0)]).unwrap();
        assert_eq!(conjugate_pauli(&h, &p("X")).unwrap(), p("Z"));
        assert_eq!(conjugate_pauli(&h, &p("Z")).unwrap(), p("X"));
        assert_eq!(conjugate_pauli(&h, &p("Y")).unwrap(), p("-Y"));
        let cx = CliffordTableau::from_gates(2, &[Gate::Cx(0, 1)]).unwrap();
        assert_eq!(conjugate_pauli(&cx, &p("XI")).unwrap(), p("XX"));
        assert!(conjugate_pauli(&cx, &p("X")).is_err());
    }

    #[test]
    fn tableau_conjugation_matches_dense_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.random_range(1..=4);
            let gates: Vec<Gate> = (0..rng.random_range(1..12)).map(|_| random_clifford_gate(&mut rng, n)).collect();
            let t = CliffordTableau::from_gates(n, &gates).unwrap();
            assert!(t.is_symplectic());
            for _ in 0..5 {
                let q = random_pauli(&mut rng, n);
                let got = conjugate_pauli(&t, &q).unwrap();
                assert_dense_eq(&got.to_dense(), &dense_heisenberg(n, &gates, &[], &q), 1e-12);
            }
        }
    }

    #[test]
    fn inverse_round_trips_and_composition_is_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 5;
        let ga: Vec<Gate> = (0..30).map(|_| random_clifford_gate(&mut rng, n)).collect();
        let gb: Vec<Gate> = (0..30).map(|_| random_clifford_gate(&mut rng, n)).collect();
        let a = CliffordTableau::from_gates(n, &ga).unwrap();
        let b = CliffordTableau::from_gates(n, &gb).unwrap();
        let inv = a.inverse();
        assert!(inv.is_symplectic());
        assert_eq!(a.then(&inv).unwrap(), CliffordTableau::identity(n));
        let both: Vec<Gate> = ga.iter().chain(&gb).cloned().collect();
        assert_eq!(a.then(&b).unwrap(), CliffordTableau::from_gates(n, &both).unwrap());
        for _ in 0..1000 {
            let q = random_pauli(&mut rng, n).with_phase(rng.random_range(0..4));
            let there = conjugate_pauli(&a, &q).unwrap();
            assert_eq!(conjugate_pauli(&inv, &there).unwrap(), q);
        }
    }

    #[test]
    fn rotation_branching_examples() {
        let t = PauliTerm::new(p("Z")).unwrap();
        assert_eq!(rotate_pauli(&p("Z"), 0, &t).unwrap(), vec![t]);
        let out = rotate_pauli(&p("Z"), 0, &PauliTerm::new(p("X")).unwrap()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!((out[0].coeff, out[0].pauli, out[0].trig_factors.clone()), (1.0, p("X"), vec![(0, Trig::Cos)]));
        assert_eq!((out[1].coeff, out[1].pauli, out[1].trig_factors.clone()), (-1.0, p("Y"), vec![(0, Trig::Sin)]));
        assert!(matches!(rotate_pauli(&p("-Z"), 0, &out[0]), Err(Error::NonUnitPhase)));
    }

    #[test]
    fn anticommuting_branches_are_hermitian_involutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut checked = 0;
        while checked < 200 {
            let gen = random_pauli(&mut rng, 4);
            let q = random_pauli(&mut rng, 4);
            if gen.commutes_with(&q) {
                continue;
            }
            for b in rotate_pauli(&gen, 0, &PauliTerm::new(q).unwrap()).unwrap() {
                assert!(b.pauli.is_hermitian());
                let sq = b.pauli.mul(&b.pauli);
                assert!(sq.is_identity_up_to_phase() && sq.phase() == 0);
            }
            checked += 1;
        }
    }

    #[test]
    fn propagation_examples() {
        let c = GenericCircuit::new(2, vec![Gate::H(0), Gate::Cx(0, 1)]).unwrap();
        let terms = heisenberg_propagate(&c, &p("ZZ"), DEFAULT_MAX_ROTATIONS).unwrap();
        assert_eq!(terms.len(), 1);
        assert!(terms[0].trig_factors.is_empty());
        let c = GenericCircuit::new(1, vec![Gate::Rot { pauli: p("Z"), param: 0 }]).unwrap();
        let terms = heisenberg_propagate(&c, &p("X"), DEFAULT_MAX_ROTATIONS).unwrap();
        assert_eq!(terms.len(), 2);
        let big = GenericCircuit::new(1, (0..3).map(|i| Gate::Rot { pauli: p("Z"), param: i }).collect()).unwrap();
        assert!(matches!(
            heisenberg_propagate(&big, &p("X"), 2),
            Err(Error::TooManyRotations { count: 3, limit: 2 })
        ));
    }

    fn random_circuit(rng: &mut ChaCha8Rng, n: usize, m: usize, cliffords: usize) -> GenericCircuit {
        let num_params = rng.random_range(1..=m);
        let mut gates: Vec<Gate> = (0..cliffords).map(|_| random_clifford_gate(rng, n)).collect();
        for r in 0..m {
            let mut gen = random_pauli(rng, n);
            while gen.is_identity_up_to_phase() {
                gen = random_pauli(rng, n);
            }
            // The first rotations cover every parameter so indices stay contiguous.
            let param = if r < num_params { r } else { rng.random_range(0..num_params) };
            let pos = rng.random_range(0..=gates.len());
            gates.insert(pos, Gate::Rot { pauli: gen, param });
        }
        GenericCircuit::new(n, gates).unwrap()
    }

    #[test]
    fn propagation_matches_dense_heisenberg_picture() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..15 {
            let n = rng.random_range(1..=4);
            let m = rng.random_range(1..=5);
            let c = random_circuit(&mut rng, n, m, 8);
            let obs = random_pauli(&mut rng, n);
            let terms = heisenberg_propagate(&c, &obs, DEFAULT_MAX_ROTATIONS).unwrap();
            assert!(terms.len() <= 1 << m);
            for _ in 0..20 {
                let theta: Vec<f64> = (0..c.num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
                let dim = 1usize << n;
                let mut sum = vec![Complex64::default(); dim * dim];
                for t in &terms {
                    let w = t.weight(&theta);
                    for (s, v) in sum.iter_mut().zip(t.pauli.to_dense()) {
                        *s += v * w;
                    }
                }
                assert_dense_eq(&sum, &dense_heisenberg(n, c.gates(), &theta, &obs), 1e-10);
            }
        }
    }

    #[test]
    fn closed_form_single_qubit_examples() {
        let c = GenericCircuit::new(1, vec![Gate::H(0), Gate::Rot { pauli: p("Z"), param: 0 }]).unwrap();
        let obs = Observable::new(vec![(1.0, p("X"))]).unwrap();
        let poly = closed_form_cost(&c, &obs, 0, DEFAULT_MAX_ROTATIONS).unwrap();
        assert_eq!(poly.num_stored(), 1);
        assert!((poly.get(&[1]) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((poly.get(&[-1]) - Complex64::new(0.5, 0.0)).norm() < 1e-15);

        let c = GenericCircuit::new(2, vec![Gate::H(1), Gate::Cx(1, 0), Gate::H(1)]).unwrap();
        let obs = Observable::new(vec![(1.0, p("ZI"))]).unwrap();
        let poly = closed_form_cost(&c, &obs, 0, DEFAULT_MAX_ROTATIONS).unwrap();
        assert!((poly.eval(&[0.4]).unwrap() - 0.0).abs() < 1e-15);
        let c = GenericCircuit::new(2, vec![Gate::Cx(1, 0)]).unwrap();
        let poly = closed_form_cost(&c, &obs, 0, DEFAULT_MAX_ROTATIONS).unwrap();
        assert_eq!(poly.eval(&[0.0]).unwrap(), 1.0);
        assert!(closed_form_cost(&c, &obs, 0b100, DEFAULT_MAX_ROTATIONS).is_err());
    }

    #[test]
    fn closed_form_matches_statevector_on_random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.random_range(1..=5);
            let m = rng.random_range(1..=6);
            let c = random_circuit(&mut rng, n, m, 20);
            let obs = Observable::new(
                (0..3).map(|_| (rng.random_range(-2.0..2.0), random_pauli(&mut rng, n))).collect(),
            )
            .unwrap();
            let input = rng.random_range(0..1u64 << n);
            let poly = closed_form_cost(&c, &obs, input, DEFAULT_MAX_ROTATIONS).unwrap();
            assert_eq!(poly.lattice(), &support_from_correlated_circuit(&c.group_sizes()).unwrap());
            for _ in 0..10 {
                let theta: Vec<f64> = (0..c.num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
                let want = generic_expectation(&c, &theta, input, &obs, 20).unwrap();
                assert!((poly.eval(&theta).unwrap() - want).abs() < 1e-10);
            }
        }
    }
}
