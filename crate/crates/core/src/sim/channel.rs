use nalgebra::DMatrix;
use num_complex::Complex64;

use super::SimError;
use crate::device::CalibrationRecord;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

/// Completeness tolerance enforced when a channel is constructed.
const COMPLETENESS_TOLERANCE: f64 = 1e-10;

pub fn pauli_i() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[C1, C0, C0, C1])
}

pub fn pauli_x() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[C0, C1, C1, C0])
}

pub fn pauli_y() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[C0, -CI, CI, C0])
}

pub fn pauli_z() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[C1, C0, C0, -C1])
}

/// Completely positive trace-preserving map given by Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<DMatrix<Complex64>>,
}

impl KrausChannel {
    pub fn new(ops: Vec<DMatrix<Complex64>>) -> Result<KrausChannel, SimError> {
        let dim = ops.first().map(|k| k.nrows()).ok_or(SimError::EmptyChannel)?;
        if ops.iter().any(|k| k.nrows() != dim || k.ncols() != dim) || !dim.is_power_of_two() {
            return Err(SimError::Dimension(format!("Kraus operators must all be {dim}x{dim}")));
        }
        let ch = KrausChannel { ops };
        let err = ch.completeness_error();
        if err > COMPLETENESS_TOLERANCE {
            return Err(SimError::NotTracePreserving(err));
        }
        Ok(ch)
    }

    /// Builds from (weight, operator) terms, dropping zero-weight ones.
    fn weighted(terms: Vec<(f64, DMatrix<Complex64>)>) -> KrausChannel {
        let ops = terms.into_iter().filter(|(w, _)| *w > 0.0).map(|(w, k)| k * Complex64::from(w.sqrt())).collect();
        KrausChannel::new(ops).expect("weights sum to one")
    }

    pub fn identity() -> KrausChannel {
        KrausChannel { ops: vec![pauli_i()] }
    }

    pub fn operators(&self) -> &[DMatrix<Complex64>] {
        &self.ops
    }

    pub fn num_qubits(&self) -> usize {
        self.ops[0].nrows().trailing_zeros() as usize
    }

    /// Largest entry of |sum K^dagger K - I|.
    pub fn completeness_error(&self) -> f64 {
        let dim = self.ops[0].nrows();
        let sum = self.ops.iter().fold(DMatrix::zeros(dim, dim), |acc: DMatrix<Complex64>, k| acc + k.adjoint() * k);
        (sum - DMatrix::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_probability(what: &'static str, p: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SimError::Probability { what, value: p })
    }
}

/// {sqrt(1-p) I, sqrt(p/3) X, sqrt(p/3) Y, sqrt(p/3) Z}.
pub fn depolarizing(p: f64) -> Result<KrausChannel, SimError> {
    check_probability("depolarizing probability", p)?;
    Ok(KrausChannel::weighted(vec![
        (1.0 - p, pauli_i()),
        (p / 3.0, pauli_x()),
        (p / 3.0, pauli_y()),
        (p / 3.0, pauli_z()),
    ]))
}

/// {sqrt(1-gamma) I, sqrt(gamma) Z}; scales coherences by 1 - 2 gamma.
pub fn dephasing(gamma: f64) -> Result<KrausChannel, SimError> {
    check_probability("dephasing probability", gamma)?;
    Ok(KrausChannel::weighted(vec![(1.0 - gamma, pauli_i()), (gamma, pauli_z())]))
}

/// {|0><0| + sqrt(1-lambda) |1><1|, sqrt(lambda) |0><1|}.
pub fn amplitude_damping(lambda: f64) -> Result<KrausChannel, SimError> {
    check_probability("damping probability", lambda)?;
    let k0 = DMatrix::from_row_slice(2, 2, &[C1, C0, C0, Complex64::from((1.0 - lambda).sqrt())]);
    let mut ops = vec![k0];
    if lambda > 0.0 {
        ops.push(DMatrix::from_row_slice(2, 2, &[C0, Complex64::from(lambda.sqrt()), C0, C0]));
    }
    KrausChannel::new(ops)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub gamma: f64,
    pub lambda: f64,
}

/// Damping and dephasing probabilities for a qubit idling `t_us`
/// microseconds: lambda = 1 - exp(-t/T1), gamma = (1 - exp(-t/Tphi)) / 2.
/// Applied together they scale coherences by exp(-t/T2).
pub fn channel_params_from_calibration(rec: &CalibrationRecord, t_us: f64) -> Result<ChannelParams, SimError> {
    if t_us < 0.0 || t_us.is_nan() {
        return Err(SimError::NegativeDuration(t_us));
    }
    let lambda = -(-t_us / rec.t1).exp_m1();
    let t_phi = rec.t_phi();
    let gamma = if t_phi.is_infinite() { 0.0 } else { -(-t_us / t_phi).exp_m1() / 2.0 };
    Ok(ChannelParams { gamma, lambda })
}
