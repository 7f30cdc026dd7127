//! Statevector and density-matrix simulation with Kraus noise channels.
//!
//! Qubit 0 is the most significant bit of a basis index, so |10> has qubit 0
//! set. Two-qubit matrices use the same convention with the first operand as
//! the high bit.

mod channel;

pub use channel::{
    amplitude_damping, channel_params_from_calibration, dephasing, depolarizing, pauli_i, pauli_x, pauli_y, pauli_z,
    ChannelParams, KrausChannel,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{decompose_swap, Circuit, Gate, GateKind};
use crate::device::DeviceModel;

/// Largest width accepted by the statevector simulator.
pub const STATEVECTOR_MAX_QUBITS: usize = 20;
/// Largest width accepted by the density-matrix simulator.
pub const DENSITY_MAX_QUBITS: usize = 6;

const VALIDITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{what} = {value} is not in [0, 1]")]
    Probability { what: &'static str, value: f64 },
    #[error("channel needs at least one Kraus operator")]
    EmptyChannel,
    #[error("Kraus operators deviate from completeness by {0:e}")]
    NotTracePreserving(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("duration {0} is negative")]
    NegativeDuration(f64),
    #[error("{width} qubits exceed the {mode} simulator cap of {cap}")]
    TooWide { width: usize, cap: usize, mode: &'static str },
    #[error("{0} has no unitary")]
    NoUnitary(GateKind),
    #[error("two-qubit gate on {0}-{1}, which is not a device edge")]
    NotAnEdge(usize, usize),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
}

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Unitary of a gate: 2x2 for single-qubit kinds, 4x4 for two-qubit kinds.
pub fn gate_unitary(g: &Gate) -> Result<DMatrix<Complex64>, SimError> {
    let half = |i: usize| g.params[i] / 2.0;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m = match g.kind {
        GateKind::H => DMatrix::from_row_slice(2, 2, &[s, s, s, -s].map(Complex64::from)),
        GateKind::X => pauli_x(),
        GateKind::Y => pauli_y(),
        GateKind::Z => pauli_z(),
        GateKind::RX => {
            let (c, sn) = (half(0).cos(), half(0).sin());
            let mis = Complex64::new(0.0, -sn);
            DMatrix::from_row_slice(2, 2, &[c.into(), mis, mis, c.into()])
        }
        GateKind::RY => {
            let (c, sn) = (half(0).cos(), half(0).sin());
            DMatrix::from_row_slice(2, 2, &[c, -sn, sn, c].map(Complex64::from))
        }
        GateKind::RZ => {
            let t = half(0);
            DMatrix::from_row_slice(2, 2, &[Complex64::from_polar(1.0, -t), C0, C0, Complex64::from_polar(1.0, t)])
        }
        GateKind::CX => permutation4([0, 1, 3, 2]),
        GateKind::SWAP => permutation4([0, 2, 1, 3]),
        GateKind::CZ => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C1, C1, C1, -C1])),
        GateKind::MEASURE | GateKind::BARRIER => return Err(SimError::NoUnitary(g.kind)),
    };
    Ok(m)
}

/// Matrix sending basis state `i` to `perm[i]`.
fn permutation4(perm: [usize; 4]) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    for (i, &j) in perm.iter().enumerate() {
        m[(j, i)] = C1;
    }
    m
}

fn bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Applies a 1- or 2-qubit operator to one column of amplitudes.
fn apply_local(data: &mut [Complex64], n: usize, qubits: &[usize], u: &DMatrix<Complex64>) {
    match *qubits {
        [q] => {
            let b = bit(n, q);
            for i in (0..data.len()).filter(|i| i & b == 0) {
                let (a0, a1) = (data[i], data[i | b]);
                data[i] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
                data[i | b] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
            }
        }
        [qa, qb] => {
            let (ba, bb) = (bit(n, qa), bit(n, qb));
            for i in (0..data.len()).filter(|i| i & (ba | bb) == 0) {
                let idx = [i, i | bb, i | ba, i | ba | bb];
                let a = idx.map(|k| data[k]);
                for (r, &k) in idx.iter().enumerate() {
                    data[k] = (0..4).map(|c| u[(r, c)] * a[c]).sum();
                }
            }
        }
        _ => unreachable!("operators act on one or two qubits"),
    }
}

fn check_operands(n: usize, qubits: &[usize], u: &DMatrix<Complex64>) -> Result<(), SimError> {
    if u.nrows() != 1 << qubits.len() || qubits.iter().any(|&q| q >= n) || qubits.is_empty() || qubits.len() > 2 {
        return Err(SimError::Dimension(format!(
            "{}x{} operator on qubits {qubits:?} of a {n}-qubit state",
            u.nrows(),
            u.ncols()
        )));
    }
    Ok(())
}

fn check_width(n: usize, cap: usize, mode: &'static str) -> Result<(), SimError> {
    if n > cap {
        Err(SimError::TooWide { width: n, cap, mode })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero_state(n: usize) -> Result<StateVector, SimError> {
        check_width(n, STATEVECTOR_MAX_QUBITS, "statevector")?;
        let mut amps = vec![C0; 1 << n];
        amps[0] = C1;
        Ok(StateVector { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<StateVector, SimError> {
        if !amps.len().is_power_of_two() {
            return Err(SimError::Dimension(format!("{} amplitudes", amps.len())));
        }
        let n = amps.len().trailing_zeros() as usize;
        check_width(n, STATEVECTOR_MAX_QUBITS, "statevector")?;
        Ok(StateVector { n, amps })
    }

    /// Tensor product of single-qubit states, qubit 0 first.
    pub fn product(states: &[[Complex64; 2]]) -> Result<StateVector, SimError> {
        let mut amps = vec![C1];
        for s in states {
            amps = amps.iter().flat_map(|&a| [a * s[0], a * s[1]]).collect();
        }
        StateVector::from_amplitudes(amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn apply_unitary(&mut self, qubits: &[usize], u: &DMatrix<Complex64>) -> Result<(), SimError> {
        check_operands(self.n, qubits, u)?;
        apply_local(&mut self.amps, self.n, qubits, u);
        Ok(())
    }

    /// Applies a gate's unitary; measurements and barriers are ignored.
    pub fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        if g.kind.is_directive() {
            return Ok(());
        }
        self.apply_unitary(&g.qubits, &gate_unitary(g)?)
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Moves the content of qubit `q` to qubit `perm[q]`.
    pub fn permute_qubits(&self, perm: &[usize]) -> StateVector {
        let n = self.n;
        let mut out = vec![C0; self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let j = (0..n).filter(|&q| i & bit(n, q) != 0).fold(0, |acc, q| acc | bit(n, perm[q]));
            out[j] = a;
        }
        StateVector { n, amps: out }
    }
}

/// Pure-state fidelity |<psi|phi>|.
pub fn pure_fidelity(psi: &StateVector, phi: &StateVector) -> f64 {
    psi.inner(phi).norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn zero_state(n: usize) -> Result<DensityMatrix, SimError> {
        check_width(n, DENSITY_MAX_QUBITS, "density-matrix")?;
        let dim = 1 << n;
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(0, 0)] = C1;
        Ok(DensityMatrix { n, rho })
    }

    pub fn from_pure(psi: &StateVector) -> Result<DensityMatrix, SimError> {
        check_width(psi.n, DENSITY_MAX_QUBITS, "density-matrix")?;
        let v = nalgebra::DVector::from_column_slice(&psi.amps);
        Ok(DensityMatrix { n: psi.n, rho: &v * v.adjoint() })
    }

    pub fn from_matrix(rho: DMatrix<Complex64>) -> Result<DensityMatrix, SimError> {
        let dim = rho.nrows();
        if dim != rho.ncols() || !dim.is_power_of_two() {
            return Err(SimError::Dimension(format!("{}x{} density matrix", rho.nrows(), rho.ncols())));
        }
        let n = dim.trailing_zeros() as usize;
        check_width(n, DENSITY_MAX_QUBITS, "density-matrix")?;
        let d = DensityMatrix { n, rho };
        d.validate()?;
        Ok(d)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// Checks Hermiticity, unit trace and positivity.
    pub fn validate(&self) -> Result<(), SimError> {
        let herm = (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > VALIDITY_TOLERANCE {
            return Err(SimError::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - C1).norm() > VALIDITY_TOLERANCE {
            return Err(SimError::InvalidState(format!("trace {tr}")));
        }
        let min = hermitian_eigenvalues(&self.rho).into_iter().fold(f64::INFINITY, f64::min);
        if min < -VALIDITY_TOLERANCE {
            return Err(SimError::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// rho -> A rho A^dagger for a local operator `a`; relies on rho being
    /// Hermitian, since then A (A rho)^dagger = A rho A^dagger.
    fn conjugate_by(&self, qubits: &[usize], a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let dim = self.rho.nrows();
        let mut m = self.rho.clone();
        for col in m.as_mut_slice().chunks_mut(dim) {
            apply_local(col, self.n, qubits, a);
        }
        let mut m = m.adjoint();
        for col in m.as_mut_slice().chunks_mut(dim) {
            apply_local(col, self.n, qubits, a);
        }
        m
    }

    pub fn apply_unitary(&mut self, qubits: &[usize], u: &DMatrix<Complex64>) -> Result<(), SimError> {
        check_operands(self.n, qubits, u)?;
        self.rho = self.conjugate_by(qubits, u);
        Ok(())
    }

    /// Applies a gate's unitary; measurements and barriers are ignored.
    pub fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        if g.kind.is_directive() {
            return Ok(());
        }
        self.apply_unitary(&g.qubits, &gate_unitary(g)?)
    }

    /// rho -> sum_k K_k rho K_k^dagger on `target`.
    pub fn apply_channel(&mut self, ch: &KrausChannel, target: usize) -> Result<(), SimError> {
        let ops = ch.operators();
        check_operands(self.n, &[target], &ops[0])?;
        let mut out = self.conjugate_by(&[target], &ops[0]);
        for k in &ops[1..] {
            out += self.conjugate_by(&[target], k);
        }
        self.rho = out;
        Ok(())
    }
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let sym = (m + m.adjoint()) * Complex64::from(0.5);
    sym.symmetric_eigenvalues().iter().copied().collect()
}

/// Eigenvalues below this are roundoff and treated as zero when factoring.
const RANK_TOLERANCE: f64 = 1e-14;

/// Factor A with m = A A^dagger, one column sqrt(l) v per eigenpair with l
/// above the roundoff floor.
fn psd_factor(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let sym = (m + m.adjoint()) * Complex64::from(0.5);
    let eig = sym.symmetric_eigen();
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > RANK_TOLERANCE).collect();
    let mut a = DMatrix::zeros(m.nrows(), keep.len());
    for (c, &k) in keep.iter().enumerate() {
        a.set_column(c, &(eig.eigenvectors.column(k) * Complex64::from(eig.eigenvalues[k].sqrt())));
    }
    a
}

/// Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)), clamped to [0, 1].
/// Computed as the trace norm of A^dagger B for rho = A A^dagger and
/// sigma = B B^dagger, which avoids square roots of roundoff eigenvalues and
/// is symmetric in its arguments.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, SimError> {
    if rho.n != sigma.n {
        return Err(SimError::Dimension(format!("{} vs {} qubits", rho.n, sigma.n)));
    }
    rho.validate()?;
    sigma.validate()?;
    let overlap = psd_factor(&rho.rho).adjoint() * psd_factor(&sigma.rho);
    let f: f64 = overlap.singular_values().iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Which noise processes the density-matrix simulator applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Depolarizing on both operands of a two-qubit gate, p = edge error.
    pub two_qubit_depolarizing: bool,
    /// Depolarizing after single-qubit gates, p = the qubit's gate error.
    pub single_qubit_depolarizing: bool,
    /// Damping and dephasing on every qubit for each gate's duration.
    pub thermal: bool,
    pub single_qubit_duration_ns: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            two_qubit_depolarizing: true,
            single_qubit_depolarizing: true,
            thermal: true,
            single_qubit_duration_ns: 35.0,
        }
    }
}

impl NoiseSpec {
    pub fn noiseless() -> NoiseSpec {
        NoiseSpec {
            two_qubit_depolarizing: false,
            single_qubit_depolarizing: false,
            thermal: false,
            ..Default::default()
        }
    }
}

/// Noiseless statevector run from |0...0>; directives are skipped.
pub fn simulate_ideal(circuit: &Circuit) -> Result<StateVector, SimError> {
    let mut psi = StateVector::zero_state(circuit.num_qubits)?;
    for g in circuit.gates() {
        psi.apply_gate(g)?;
    }
    Ok(psi)
}

/// Density-matrix run of a circuit whose qubits are physical qubits of `dev`.
/// Each gate is followed by its noise channels; SWAPs are simulated as their
/// three-CX decomposition and directives are skipped.
pub fn simulate_noisy(circuit: &Circuit, dev: &DeviceModel, spec: &NoiseSpec) -> Result<DensityMatrix, SimError> {
    let n = circuit.num_qubits;
    check_width(n, DENSITY_MAX_QUBITS, "density-matrix")?;
    if n > dev.num_qubits {
        return Err(SimError::Dimension(format!("{n}-qubit circuit on a {}-qubit device", dev.num_qubits)));
    }
    let mut rho = DensityMatrix::zero_state(n)?;
    for g in circuit.gates().iter().filter(|g| !g.kind.is_directive()) {
        let expanded: Vec<Gate> =
            if g.kind == GateKind::SWAP { decompose_swap(g).expect("kind checked").to_vec() } else { vec![g.clone()] };
        for g in &expanded {
            rho.apply_gate(g)?;
            let duration_ns = if g.is_two_qubit() {
                let (a, b) = (g.qubits[0], g.qubits[1]);
                let edge = dev.edge_between(a, b).ok_or(SimError::NotAnEdge(a, b))?;
                if spec.two_qubit_depolarizing {
                    let ch = depolarizing(edge.two_qubit_error)?;
                    rho.apply_channel(&ch, a)?;
                    rho.apply_channel(&ch, b)?;
                }
                edge.gate_duration_ns
            } else {
                let q = g.qubits[0];
                if spec.single_qubit_depolarizing {
                    rho.apply_channel(&depolarizing(dev.qubits[q].single_qubit_error)?, q)?;
                }
                spec.single_qubit_duration_ns
            };
            if spec.thermal {
                for q in 0..n {
                    let p = channel_params_from_calibration(&dev.qubits[q], duration_ns / 1000.0)?;
                    rho.apply_channel(&amplitude_damping(p.lambda)?, q)?;
                    rho.apply_channel(&dephasing(p.gamma)?, q)?;
                }
            }
        }
    }
    Ok(rho)
}
