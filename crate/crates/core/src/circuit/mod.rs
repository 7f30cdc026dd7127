//! Circuit intermediate representation: gates, circuits, the dependency DAG
//! and the OpenQASM 2.0 subset reader/writer.

mod dag;
mod qasm;

pub use dag::{depth, depth_with, reverse_two_qubit_order, CircuitDag};
pub use qasm::{parse_qasm, serialize_qasm};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unsupported gate `{name}`")]
    UnsupportedGate { line: usize, name: String },
    #[error("line {line}: qubit index {index} out of range for register of size {size}")]
    QubitOutOfRange { line: usize, index: usize, size: usize },
    #[error("gate {kind} expects {expected} qubit(s), got {got}")]
    Arity { kind: GateKind, expected: usize, got: usize },
    #[error("gate {kind} expects {expected} parameter(s), got {got}")]
    Params { kind: GateKind, expected: usize, got: usize },
    #[error("gate {kind} acts on qubit {qubit}, circuit has {width} qubit(s)")]
    OutOfWidth { kind: GateKind, qubit: usize, width: usize },
    #[error("gate {kind} repeats qubit {qubit}")]
    RepeatedQubit { kind: GateKind, qubit: usize },
    #[error("expected a SWAP gate, got {0}")]
    NotSwap(GateKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    RX,
    RY,
    RZ,
    CX,
    CZ,
    SWAP,
    MEASURE,
    BARRIER,
}

impl GateKind {
    pub const ALL: [GateKind; 12] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::CX,
        GateKind::CZ,
        GateKind::SWAP,
        GateKind::MEASURE,
        GateKind::BARRIER,
    ];

    /// QASM mnemonic.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::RX => "rx",
            GateKind::RY => "ry",
            GateKind::RZ => "rz",
            GateKind::CX => "cx",
            GateKind::CZ => "cz",
            GateKind::SWAP => "swap",
            GateKind::MEASURE => "measure",
            GateKind::BARRIER => "barrier",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }

    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateKind::CX | GateKind::CZ | GateKind::SWAP)
    }

    /// Measurement and barrier: carried through compilation but never routed.
    pub fn is_directive(self) -> bool {
        matches!(self, GateKind::MEASURE | GateKind::BARRIER)
    }

    pub fn num_params(self) -> usize {
        usize::from(self.is_rotation())
    }

    /// Fixed operand count; `None` for barriers, which may span any number of qubits.
    pub fn arity(self) -> Option<usize> {
        match self {
            GateKind::BARRIER => None,
            k if k.is_two_qubit() => Some(2),
            _ => Some(1),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub params: Vec<f64>,
    pub qubits: Vec<usize>,
    /// Classical target of a measurement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clbit: Option<usize>,
    /// Position in program order.
    pub index: usize,
}

impl Gate {
    /// Builds a gate, checking operand and parameter counts. The index is
    /// assigned when the gate is pushed onto a [`Circuit`].
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Result<Gate, CircuitError> {
        if let Some(expected) = kind.arity() {
            if qubits.len() != expected {
                return Err(CircuitError::Arity { kind, expected, got: qubits.len() });
            }
        } else if qubits.is_empty() {
            return Err(CircuitError::Arity { kind, expected: 1, got: 0 });
        }
        if params.len() != kind.num_params() {
            return Err(CircuitError::Params { kind, expected: kind.num_params(), got: params.len() });
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(CircuitError::RepeatedQubit { kind, qubit: *q });
            }
        }
        Ok(Gate { kind, params, qubits, clbit: None, index: 0 })
    }

    fn fixed(kind: GateKind, qubits: Vec<usize>) -> Gate {
        Gate { kind, params: Vec::new(), qubits, clbit: None, index: 0 }
    }

    pub fn h(q: usize) -> Gate {
        Gate::fixed(GateKind::H, vec![q])
    }
    pub fn x(q: usize) -> Gate {
        Gate::fixed(GateKind::X, vec![q])
    }
    pub fn y(q: usize) -> Gate {
        Gate::fixed(GateKind::Y, vec![q])
    }
    pub fn z(q: usize) -> Gate {
        Gate::fixed(GateKind::Z, vec![q])
    }
    pub fn rx(theta: f64, q: usize) -> Gate {
        Gate { params: vec![theta], ..Gate::fixed(GateKind::RX, vec![q]) }
    }
    pub fn ry(theta: f64, q: usize) -> Gate {
        Gate { params: vec![theta], ..Gate::fixed(GateKind::RY, vec![q]) }
    }
    pub fn rz(theta: f64, q: usize) -> Gate {
        Gate { params: vec![theta], ..Gate::fixed(GateKind::RZ, vec![q]) }
    }
    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::fixed(GateKind::CX, vec![control, target])
    }
    pub fn cz(a: usize, b: usize) -> Gate {
        Gate::fixed(GateKind::CZ, vec![a, b])
    }
    pub fn swap(a: usize, b: usize) -> Gate {
        Gate::fixed(GateKind::SWAP, vec![a, b])
    }
    pub fn measure(q: usize, c: usize) -> Gate {
        Gate { clbit: Some(c), ..Gate::fixed(GateKind::MEASURE, vec![q]) }
    }
    pub fn barrier(qubits: Vec<usize>) -> Gate {
        Gate::fixed(GateKind::BARRIER, qubits)
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.is_two_qubit()
    }

    /// Same gate with every operand passed through `f`.
    pub fn remapped(&self, f: impl Fn(usize) -> usize) -> Gate {
        Gate { qubits: self.qubits.iter().map(|&q| f(q)).collect(), ..self.clone() }
    }

    /// Same operation, ignoring the program index.
    pub fn same_op(&self, other: &Gate) -> bool {
        self.kind == other.kind
            && self.params == other.params
            && self.qubits == other.qubits
            && self.clbit == other.clbit
    }
}

/// Expands SWAP(a,b) into CX(a,b), CX(b,a), CX(a,b).
pub fn decompose_swap(g: &Gate) -> Result<[Gate; 3], CircuitError> {
    if g.kind != GateKind::SWAP {
        return Err(CircuitError::NotSwap(g.kind));
    }
    let (a, b) = (g.qubits[0], g.qubits[1]);
    Ok([Gate::cx(a, b), Gate::cx(b, a), Gate::cx(a, b)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub name: String,
    pub num_qubits: usize,
    pub num_clbits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(name: impl Into<String>, num_qubits: usize) -> Circuit {
        Circuit { name: name.into(), num_qubits, num_clbits: 0, gates: Vec::new() }
    }

    pub fn with_clbits(mut self, num_clbits: usize) -> Circuit {
        self.num_clbits = num_clbits;
        self
    }

    /// Appends a gate after validating it against the circuit width.
    pub fn push(&mut self, mut gate: Gate) -> Result<(), CircuitError> {
        let checked = Gate::new(gate.kind, gate.qubits.clone(), gate.params.clone())?;
        debug_assert_eq!(checked.qubits, gate.qubits);
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.num_qubits) {
            return Err(CircuitError::OutOfWidth { kind: gate.kind, qubit: q, width: self.num_qubits });
        }
        if let Some(c) = gate.clbit {
            self.num_clbits = self.num_clbits.max(c + 1);
        }
        gate.index = self.gates.len();
        self.gates.push(gate);
        Ok(())
    }

    pub fn from_gates(
        name: impl Into<String>,
        num_qubits: usize,
        gates: impl IntoIterator<Item = Gate>,
    ) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new(name, num_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Gate count excluding barriers.
    pub fn gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind != GateKind::BARRIER).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Copy without measurements and barriers.
    pub fn without_directives(&self) -> Circuit {
        let mut c = Circuit::new(self.name.clone(), self.num_qubits).with_clbits(self.num_clbits);
        for g in self.gates.iter().filter(|g| !g.kind.is_directive()) {
            c.push(g.clone()).expect("gate was valid in the source circuit");
        }
        c
    }
}
