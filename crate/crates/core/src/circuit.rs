//! Clifford + Pauli-rotation circuits and Pauli-sum observables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliString;

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    S(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cx(usize, usize),
    Cz(usize, usize),
    /// `exp(-i P θ_param / 2)`.
    Rot { pauli: PauliString, param: usize },
}

impl Gate {
    pub fn is_clifford(&self) -> bool {
        !matches!(self, Gate::Rot { .. })
    }

    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => vec![q],
            Gate::Cx(a, b) | Gate::Cz(a, b) => vec![a, b],
            Gate::Rot { .. } => vec![],
        }
    }
}

/// An ordered gate list; the first gate acts first.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericCircuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    num_params: usize,
}

impl GenericCircuit {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > crate::pauli::MAX_PAULI_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "circuit width {num_qubits} must be in 1..=64"
            )));
        }
        let mut seen_params = Vec::new();
        for g in &gates {
            let qs = g.qubits();
            if let Some(&q) = qs.iter().find(|&&q| q >= num_qubits) {
                return Err(Error::InvalidArgument(format!(
                    "gate {g:?} addresses qubit {q} of a {num_qubits}-qubit circuit"
                )));
            }
            if qs.len() == 2 && qs[0] == qs[1] {
                return Err(Error::InvalidArgument(format!(
                    "two-qubit gate {g:?} needs distinct qubits"
                )));
            }
            if let Gate::Rot { pauli, param } = g {
                if pauli.num_qubits() != num_qubits {
                    return Err(Error::InvalidArgument(format!(
                        "rotation generator {pauli} has the wrong width"
                    )));
                }
                if pauli.phase() != 0 {
                    return Err(Error::NonUnitPhase);
                }
                if *param >= seen_params.len() {
                    seen_params.resize(*param + 1, false);
                }
                seen_params[*param] = true;
            }
        }
        if let Some(missing) = seen_params.iter().position(|&s| !s) {
            return Err(Error::InvalidArgument(format!(
                "parameter indices must be contiguous; {missing} is unused"
            )));
        }
        Ok(Self {
            num_qubits,
            gates,
            num_params: seen_params.len(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of independent parameters `d`.
    pub fn num_params(&self) -> usize {
        self.num_params
    }

    /// Total number of rotation gates `M` (repeats included).
    pub fn rotation_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.is_clifford()).count()
    }

    /// How many rotations share each parameter.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_params];
        for g in &self.gates {
            if let Gate::Rot { param, .. } = g {
                sizes[*param] += 1;
            }
        }
        sizes
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: CircuitJson = serde_json::from_str(s)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&CircuitJson::from(self))?)
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    n: usize,
    gates: Vec<GateJson>,
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pauli: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    param: Option<usize>,
}

impl TryFrom<CircuitJson> for GenericCircuit {
    type Error = Error;

    fn try_from(c: CircuitJson) -> Result<Self> {
        let mut gates = Vec::with_capacity(c.gates.len());
        for g in c.gates {
            let want = |len: usize| -> Result<()> {
                if g.qubits.len() == len {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "gate {:?} expects {len} qubit(s), got {:?}",
                        g.kind, g.qubits
                    )))
                }
            };
            let gate = match g.kind.as_str() {
                "h" | "s" | "x" | "y" | "z" => {
                    want(1)?;
                    let q = g.qubits[0];
                    match g.kind.as_str() {
                        "h" => Gate::H(q),
                        "s" => Gate::S(q),
                        "x" => Gate::X(q),
                        "y" => Gate::Y(q),
                        _ => Gate::Z(q),
                    }
                }
                "cx" => {
                    want(2)?;
                    Gate::Cx(g.qubits[0], g.qubits[1])
                }
                "cz" => {
                    want(2)?;
                    Gate::Cz(g.qubits[0], g.qubits[1])
                }
                "rot" => {
                    let pauli: PauliString = g
                        .pauli
                        .as_deref()
                        .ok_or_else(|| Error::InvalidArgument("rot gate needs a pauli".into()))?
                        .parse()?;
                    let param = g
                        .param
                        .ok_or_else(|| Error::InvalidArgument("rot gate needs a param".into()))?;
                    Gate::Rot { pauli, param }
                }
                other => {
                    return Err(Error::InvalidArgument(format!("unknown gate type {other:?}")))
                }
            };
            gates.push(gate);
        }
        GenericCircuit::new(c.n, gates)
    }
}

impl From<&GenericCircuit> for CircuitJson {
    fn from(c: &GenericCircuit) -> Self {
        let gates = c
            .gates
            .iter()
            .map(|g| {
                let (kind, qubits) = match *g {
                    Gate::H(q) => ("h", vec![q]),
                    Gate::S(q) => ("s", vec![q]),
                    Gate::X(q) => ("x", vec![q]),
                    Gate::Y(q) => ("y", vec![q]),
                    Gate::Z(q) => ("z", vec![q]),
                    Gate::Cx(a, b) => ("cx", vec![a, b]),
                    Gate::Cz(a, b) => ("cz", vec![a, b]),
                    Gate::Rot { pauli, param } => {
                        return GateJson {
                            kind: "rot".into(),
                            qubits: vec![],
                            pauli: Some(pauli.to_string()),
                            param: Some(param),
                        }
                    }
                };
                GateJson {
                    kind: kind.into(),
                    qubits,
                    pauli: None,
                    param: None,
                }
            })
            .collect();
        CircuitJson {
            n: c.num_qubits,
            gates,
        }
    }
}

/// A real linear combination of Hermitian Pauli strings with phase `+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    pub fn new(terms: Vec<(f64, PauliString)>) -> Result<Self> {
        if terms.iter().any(|(_, p)| p.phase() != 0) {
            return Err(Error::NonUnitPhase);
        }
        if let Some(w) = terms.first().map(|(_, p)| p.num_qubits()) {
            if terms.iter().any(|(_, p)| p.num_qubits() != w) {
                return Err(Error::InvalidArgument(
                    "observable terms have different widths".into(),
                ));
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn num_qubits(&self) -> Option<usize> {
        self.terms.first().map(|(_, p)| p.num_qubits())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Vec<ObservableTermJson> = serde_json::from_str(s)?;
        let terms = raw
            .into_iter()
            .map(|t| Ok((t.coeff, t.pauli.parse()?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    pub fn to_json(&self) -> Result<String> {
        let raw: Vec<ObservableTermJson> = self
            .terms
            .iter()
            .map(|(c, p)| ObservableTermJson {
                coeff: *c,
                pauli: p.to_string(),
            })
            .collect();
        Ok(serde_json::to_string(&raw)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ObservableTermJson {
    coeff: f64,
    pauli: String,
}

/// Parses a computational basis string; character `q` is qubit `q`.
pub fn parse_basis_state(s: &str) -> Result<(usize, u64)> {
    let s = s.trim();
    if s.is_empty() || s.len() > 64 {
        return Err(Error::InvalidArgument(format!("bad basis string {s:?}")));
    }
    let mut bits = 0u64;
    for (q, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => bits |= 1 << q,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "basis string {s:?} may only contain 0 and 1"
                )))
            }
        }
    }
    Ok((s.len(), bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_parameters_and_qubits() {
        let z: PauliString = "ZI".parse().unwrap();
        let ok = GenericCircuit::new(
            2,
            vec![
                Gate::H(0),
                Gate::Rot { pauli: z, param: 1 },
                Gate::Cx(0, 1),
                Gate::Rot { pauli: z, param: 0 },
                Gate::Rot { pauli: z, param: 1 },
            ],
        )
        .unwrap();
        assert_eq!(ok.num_params(), 2);
        assert_eq!(ok.rotation_count(), 3);
        assert_eq!(ok.group_sizes(), vec![1, 2]);

        assert!(GenericCircuit::new(2, vec![Gate::H(2)]).is_err());
        assert!(GenericCircuit::new(2, vec![Gate::Cz(1, 1)]).is_err());
        assert!(GenericCircuit::new(2, vec![Gate::Rot { pauli: z, param: 1 }]).is_err());
        let neg = z.with_phase(2);
        assert!(matches!(
            GenericCircuit::new(2, vec![Gate::Rot { pauli: neg, param: 0 }]),
            Err(Error::NonUnitPhase)
        ));
    }

    #[test]
    fn json_roundtrip() {
        let src = r#"{"n":3,"gates":[{"type":"h","qubits":[0]},{"type":"cx","qubits":[0,2]},{"type":"rot","pauli":"IZX","param":0}]}"#;
        let c = GenericCircuit::from_json(src).unwrap();
        assert_eq!(c.gates().len(), 3);
        assert_eq!(c.to_json().unwrap(), src);
        assert!(GenericCircuit::from_json(r#"{"n":1,"gates":[{"type":"t","qubits":[0]}]}"#).is_err());
        assert!(GenericCircuit::from_json(r#"{"n":2,"gates":[{"type":"cx","qubits":[0]}]}"#).is_err());
    }

    #[test]
    fn observable_json_and_phase_check() {
        let o = Observable::from_json(r#"[{"coeff":0.5,"pauli":"II"},{"coeff":-0.5,"pauli":"ZZ"}]"#)
            .unwrap();
        assert_eq!(o.terms().len(), 2);
        assert_eq!(o.num_qubits(), Some(2));
        assert!(Observable::from_json(r#"[{"coeff":1.0,"pauli":"-ZZ"}]"#).is_err());
        assert!(Observable::from_json(r#"[{"coeff":1.0,"pauli":"Z"},{"coeff":1.0,"pauli":"ZZ"}]"#).is_err());
    }

    #[test]
    fn basis_strings() {
        assert_eq!(parse_basis_state("0110").unwrap(), (4, 0b0110));
        assert_eq!(parse_basis_state("1000").unwrap(), (4, 0b0001));
        assert!(parse_basis_state("01a").is_err());
    }
}
