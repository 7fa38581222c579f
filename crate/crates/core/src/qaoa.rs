//! QAOA/MaxCut cost landscapes and exact expectation values of small
//! Clifford+rotation circuits.
//!
//! Layer unitaries are `exp(-iγ H_C)` and `exp(-iβ Σ X_q)` with `H_C` the
//! cut-count diagonal, applied to `|+⟩^{⊗N}`. The parameter vector is ordered
//! `(γ_1, β_1, …, γ_p, β_p)` and the landscape value is the expected cut size.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Gate, GenericCircuit, Observable};
use crate::error::{Error, Result};
use crate::oracle::{check_dims, derive_seed, Oracle};
use crate::pauli::PauliString;
use crate::statevector::{StateVector, DEFAULT_QUBIT_LIMIT};
use crate::trigpoly::FrequencyLattice;

pub const GRAPH_RETRY_LIMIT: usize = 10_000;

/// Undirected simple graph. Edges are stored as `(u, v)` with `u < v`, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;

    fn try_from(g: GraphJson) -> Result<Self> {
        Graph::new(g.n, g.edges.into_iter().map(|[u, v]| (u, v)).collect())
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        GraphJson {
            n: g.num_vertices,
            edges: g.edges.into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }
}

impl Graph {
    pub fn new(num_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(u, v) in &edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) out of range for {num_vertices} vertices"
                )));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {u}")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidArgument(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(Self {
            num_vertices,
            edges: set.into_iter().collect(),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_vertices];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Uniform random simple `degree`-regular graph via the pairing model,
/// rejecting any pairing with self-loops or repeated edges.
pub fn random_regular_graph(num_vertices: usize, degree: usize, seed: u64) -> Result<Graph> {
    if (num_vertices * degree) % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "N·k = {} must be even",
            num_vertices * degree
        )));
    }
    if degree >= num_vertices && !(degree == 0 && num_vertices == 0) {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} must be below the vertex count {num_vertices}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..num_vertices)
        .flat_map(|v| std::iter::repeat_n(v, degree))
        .collect();
    'attempt: for _ in 0..GRAPH_RETRY_LIMIT {
        stubs.shuffle(&mut rng);
        let mut set = BTreeSet::new();
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !set.insert((u, v)) {
                continue 'attempt;
            }
        }
        return Ok(Graph {
            num_vertices,
            edges: set.into_iter().collect(),
        });
    }
    Err(Error::RetriesExceeded(GRAPH_RETRY_LIMIT))
}

/// Cut size of every bitstring `z` (bit `q` of `z` is vertex `q`).
pub fn maxcut_cost_values(graph: &Graph, qubit_limit: usize) -> Result<Vec<f64>> {
    let n = graph.num_vertices();
    if n > qubit_limit {
        return Err(Error::TooManyQubits {
            qubits: n,
            limit: qubit_limit,
        });
    }
    Ok((0..1u64 << n)
        .map(|z| {
            graph
                .edges()
                .iter()
                .filter(|&&(u, v)| ((z >> u) ^ (z >> v)) & 1 == 1)
                .count() as f64
        })
        .collect())
}

/// Frequency bound used for the QAOA lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeBound {
    /// `[2|E|, 2N]` per layer.
    #[default]
    Superset,
    /// `[|E|, 2N]` per layer: the largest eigenvalue gaps of `H_C` and `Σ X_q`.
    Exact,
}

#[derive(Clone, Debug)]
pub struct QaoaInstance {
    graph: Graph,
    layers: usize,
    cost: Vec<f64>,
}

impl QaoaInstance {
    pub fn new(graph: Graph, layers: usize) -> Result<Self> {
        Self::with_qubit_limit(graph, layers, DEFAULT_QUBIT_LIMIT)
    }

    pub fn with_qubit_limit(graph: Graph, layers: usize, qubit_limit: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::InvalidArgument("QAOA needs p ≥ 1 layers".into()));
        }
        let cost = maxcut_cost_values(&graph, qubit_limit)?;
        Ok(Self {
            graph,
            layers,
            cost,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    /// `d = 2p`.
    pub fn num_params(&self) -> usize {
        2 * self.layers
    }

    pub fn cost_values(&self) -> &[f64] {
        &self.cost
    }

    pub fn state(&self, theta: &[f64]) -> Result<StateVector> {
        check_dims(self.num_params(), theta)?;
        let mut psi = StateVector::plus(self.graph.num_vertices(), usize::MAX)?;
        for layer in theta.chunks_exact(2) {
            psi.apply_diagonal_phase(&self.cost, layer[0]);
            psi.apply_x_mixer(layer[1]);
        }
        Ok(psi)
    }

    pub fn expectation(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.state(theta)?.diagonal_expectation(&self.cost))
    }

    /// Mean cut value of `n_shots` bitstrings measured from `|ψ(θ)⟩`.
    pub fn shot_sample(&self, theta: &[f64], n_shots: u64, seed: u64) -> Result<f64> {
        if n_shots == 0 {
            return Err(Error::InvalidArgument("n_shots must be positive".into()));
        }
        let probs = self.state(theta)?.probabilities();
        let dist = WeightedIndex::new(&probs)
            .map_err(|e| Error::InvalidArgument(format!("bad outcome distribution: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total: f64 = (0..n_shots).map(|_| self.cost[dist.sample(&mut rng)]).sum();
        Ok(total / n_shots as f64)
    }

    pub fn lattice(&self, bound: LatticeBound) -> Result<FrequencyLattice> {
        let e = self.graph.num_edges() as u32;
        let f_gamma = match bound {
            LatticeBound::Superset => 2 * e,
            LatticeBound::Exact => e,
        };
        let f_beta = 2 * self.graph.num_vertices() as u32;
        FrequencyLattice::new(
            (0..self.layers).flat_map(|_| [f_gamma, f_beta]).collect(),
        )
    }

    /// The same ansatz as Pauli rotations: `exp(-iγ H_C)` equals, up to a
    /// global phase, `Π_e exp(-i Z_u Z_v (-γ)/2)` and `exp(-iβ X)` is
    /// `exp(-i X (2β)/2)`. Use [`generic_params`](Self::generic_params) to map
    /// `(γ, β)` to the circuit parameters.
    pub fn to_generic_circuit(&self) -> Result<(GenericCircuit, Observable)> {
        let n = self.graph.num_vertices();
        let mut gates: Vec<Gate> = (0..n).map(Gate::H).collect();
        for l in 0..self.layers {
            for &(u, v) in self.graph.edges() {
                let zz = PauliString::from_bits(n, 0, (1 << u) | (1 << v), 0);
                gates.push(Gate::Rot { pauli: zz, param: 2 * l });
            }
            for q in 0..n {
                gates.push(Gate::Rot {
                    pauli: PauliString::single(n, q, 'X')?,
                    param: 2 * l + 1,
                });
            }
        }
        let mut terms = Vec::new();
        for &(u, v) in self.graph.edges() {
            terms.push((0.5, PauliString::identity(n)));
            terms.push((-0.5, PauliString::from_bits(n, 0, (1 << u) | (1 << v), 0)));
        }
        Ok((GenericCircuit::new(n, gates)?, Observable::new(terms)?))
    }

    /// Maps `(γ_1, β_1, …)` to the parameters of [`to_generic_circuit`](Self::to_generic_circuit).
    pub fn generic_params(theta: &[f64]) -> Vec<f64> {
        theta
            .chunks(2)
            .flat_map(|c| [-c[0], 2.0 * c.get(1).copied().unwrap_or(0.0)])
            .take(theta.len())
            .collect()
    }
}

/// Exact `⟨C⟩` for a QAOA instance.
pub fn qaoa_expectation(instance: &QaoaInstance, theta: &[f64]) -> Result<f64> {
    instance.expectation(theta)
}

/// Exact `⟨x|U†(θ) O U(θ)|x⟩` by dense simulation.
pub fn generic_expectation(
    circuit: &GenericCircuit,
    theta: &[f64],
    input: u64,
    observable: &Observable,
    qubit_limit: usize,
) -> Result<f64> {
    check_dims(circuit.num_params(), theta)?;
    if let Some(w) = observable.num_qubits() {
        if w != circuit.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: circuit.num_qubits(),
                got: w,
            });
        }
    }
    let mut psi = StateVector::basis(circuit.num_qubits(), input, qubit_limit)?;
    for g in circuit.gates() {
        psi.apply(g, theta);
    }
    Ok(observable
        .terms()
        .iter()
        .map(|(c, p)| c * psi.expectation(p).re)
        .sum())
}

/// QAOA landscape as an [`Oracle`], exact or finite-shot.
pub struct QaoaOracle<'a> {
    pub instance: &'a QaoaInstance,
    /// `None` evaluates the exact expectation.
    pub shots: Option<u64>,
    pub seed: u64,
}

impl Oracle for QaoaOracle<'_> {
    fn dims(&self) -> usize {
        self.instance.num_params()
    }

    fn value(&self, theta: &[f64], stream: u64) -> Result<f64> {
        match self.shots {
            None => self.instance.expectation(theta),
            Some(s) => self
                .instance
                .shot_sample(theta, s, derive_seed(self.seed, stream)),
        }
    }

    fn shots(&self) -> Option<u64> {
        self.shots
    }
}
