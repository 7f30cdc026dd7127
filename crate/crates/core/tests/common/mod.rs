#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use tram::device::{CalibrationRecord, DeviceModel, EdgeRecord};

/// Device with random calibration on `n` qubits. With `connected`, a random
/// spanning tree is laid first; every other pair is added with `p_edge`.
pub fn random_device(rng: &mut impl Rng, n: usize, p_edge: f64, connected: bool) -> DeviceModel {
    let qubits = (0..n)
        .map(|i| {
            let t1 = rng.gen_range(50.0..400.0);
            CalibrationRecord {
                qubit: i,
                t1,
                t2: rng.gen_range(0.2..2.0) * t1,
                readout_error: rng.gen_range(0.005..0.05),
                single_qubit_error: rng.gen_range(1e-4..1e-3),
            }
        })
        .collect();
    let mut pairs = Vec::new();
    if connected {
        for i in 1..n {
            pairs.push((rng.gen_range(0..i), i));
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if !pairs.contains(&(a, b)) && rng.gen_bool(p_edge) {
                pairs.push((a, b));
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(a, b)| EdgeRecord {
            q0: a,
            q1: b,
            two_qubit_error: rng.gen_range(0.002..0.05),
            gate_duration_ns: rng.gen_range(200.0..600.0),
        })
        .collect();
    DeviceModel::new("random", n, qubits, edges).unwrap()
}

pub fn random_qubit_state(rng: &mut impl Rng) -> [Complex64; 2] {
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let phi: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    [Complex64::new((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), phi)]
}

pub fn zero_state() -> [Complex64; 2] {
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
}
