//! Synthetic benchmark circuits and corpus directory loading.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{parse_qasm, serialize_qasm, Circuit, CircuitError, Gate};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}: {1}")]
    Parse(String, CircuitError),
    #[error("no .qasm files in {0}")]
    Empty(String),
}

fn build(name: &str, n: usize, gates: Vec<Gate>) -> Circuit {
    Circuit::from_gates(name, n, gates).expect("builder emits valid gates")
}

/// Controlled phase as two CX and three RZ, up to global phase.
fn cphase(theta: f64, a: usize, b: usize, out: &mut Vec<Gate>) {
    out.extend([
        Gate::rz(theta / 2.0, a),
        Gate::cx(a, b),
        Gate::rz(-theta / 2.0, b),
        Gate::cx(a, b),
        Gate::rz(theta / 2.0, b),
    ]);
}

/// Toffoli in the Clifford+T basis with T = rz(pi/4).
fn toffoli(a: usize, b: usize, t: usize, out: &mut Vec<Gate>) {
    let q = PI / 4.0;
    out.extend([
        Gate::h(t),
        Gate::cx(b, t),
        Gate::rz(-q, t),
        Gate::cx(a, t),
        Gate::rz(q, t),
        Gate::cx(b, t),
        Gate::rz(-q, t),
        Gate::cx(a, t),
        Gate::rz(q, b),
        Gate::rz(q, t),
        Gate::h(t),
        Gate::cx(a, b),
        Gate::rz(q, a),
        Gate::rz(-q, b),
        Gate::cx(a, b),
    ]);
}

pub fn ghz(n: usize) -> Circuit {
    let mut g = vec![Gate::h(0)];
    g.extend((1..n).map(|i| Gate::cx(i - 1, i)));
    build(&format!("ghz_n{n}"), n, g)
}

/// Bell pairs on (0,1), (2,3), ... entangled pairwise across neighbours.
pub fn bell(n: usize) -> Circuit {
    let mut g = Vec::new();
    for i in (0..n - 1).step_by(2) {
        g.extend([Gate::h(i), Gate::cx(i, i + 1)]);
    }
    for i in (1..n - 1).step_by(2) {
        g.extend([Gate::cz(i, i + 1), Gate::h(i + 1)]);
    }
    build(&format!("bell_n{n}"), n, g)
}

/// Deutsch's algorithm with a balanced CX oracle.
pub fn deutsch() -> Circuit {
    build("deutsch_n2", 2, vec![Gate::x(1), Gate::h(0), Gate::h(1), Gate::cx(0, 1), Gate::h(0)])
}

/// Controlled-SWAP on q0 -> (q1, q2).
pub fn fredkin() -> Circuit {
    let mut g = vec![Gate::cx(2, 1)];
    toffoli(0, 1, 2, &mut g);
    g.push(Gate::cx(2, 1));
    build("fredkin_n3", 3, g)
}

/// Quantum Fourier transform with final qubit reversal.
pub fn qft(n: usize) -> Circuit {
    let mut g = Vec::new();
    for i in 0..n {
        g.push(Gate::h(i));
        for j in i + 1..n {
            cphase(PI / (1u64 << (j - i)) as f64, j, i, &mut g);
        }
    }
    for i in 0..n / 2 {
        g.push(Gate::swap(i, n - 1 - i));
    }
    build(&format!("qft_n{n}"), n, g)
}

/// One-layer QAOA for MaxCut on a ring.
pub fn qaoa_ring(n: usize) -> Circuit {
    let (gamma, beta) = (0.7, 0.35);
    let mut g: Vec<Gate> = (0..n).map(Gate::h).collect();
    for i in 0..n {
        let j = (i + 1) % n;
        g.extend([Gate::cx(i, j), Gate::rz(2.0 * gamma, j), Gate::cx(i, j)]);
    }
    g.extend((0..n).map(|i| Gate::rx(2.0 * beta, i)));
    build(&format!("qaoa_n{n}"), n, g)
}

/// Ripple-carry adder on `2k + 2` qubits: carry-in, interleaved (b_i, a_i)
/// pairs, carry-out. Inputs are prepared with X gates so the circuit has a
/// non-trivial classical result.
pub fn adder(n: usize) -> Circuit {
    assert!(n >= 4 && n.is_multiple_of(2), "adder width must be even and at least 4");
    let k = (n - 2) / 2;
    let b = |i: usize| 1 + 2 * i;
    let a = |i: usize| 2 + 2 * i;
    let cin = 0;
    let cout = n - 1;
    let mut g = Vec::new();
    for i in 0..k {
        g.push(Gate::x(a(i)));
        if i % 2 == 0 {
            g.push(Gate::x(b(i)));
        }
    }
    let maj = |c: usize, y: usize, x: usize, g: &mut Vec<Gate>| {
        g.extend([Gate::cx(x, y), Gate::cx(x, c)]);
        toffoli(c, y, x, g);
    };
    let uma = |c: usize, y: usize, x: usize, g: &mut Vec<Gate>| {
        toffoli(c, y, x, g);
        g.extend([Gate::cx(x, c), Gate::cx(c, y)]);
    };
    maj(cin, b(0), a(0), &mut g);
    for i in 1..k {
        maj(a(i - 1), b(i), a(i), &mut g);
    }
    g.push(Gate::cx(a(k - 1), cout));
    for i in (1..k).rev() {
        uma(a(i - 1), b(i), a(i), &mut g);
    }
    uma(cin, b(0), a(0), &mut g);
    build(&format!("add_n{n}"), n, g)
}

/// W state by a cascade of controlled rotations.
pub fn w_state(n: usize) -> Circuit {
    let mut g = vec![Gate::x(0)];
    for i in 0..n - 1 {
        // move amplitude sqrt((n-i-1)/(n-i)) from qubit i to i+1
        let theta = 2.0 * ((n - i - 1) as f64 / (n - i) as f64).sqrt().asin();
        g.extend([
            Gate::ry(theta / 2.0, i + 1),
            Gate::cx(i, i + 1),
            Gate::ry(-theta / 2.0, i + 1),
            Gate::cx(i, i + 1),
            Gate::cx(i + 1, i),
        ]);
    }
    build(&format!("wstate_n{n}"), n, g)
}

/// Random CX network: `layers` rounds of random rotations followed by CX
/// gates on a random pairing of the qubits.
pub fn random_cx(n: usize, layers: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Vec::new();
    for _ in 0..layers {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        for q in 0..n {
            let theta = rng.gen_range(-PI..PI);
            g.push(if rng.gen_bool(0.5) { Gate::ry(theta, q) } else { Gate::rz(theta, q) });
        }
        for pair in order.chunks_exact(2) {
            g.push(Gate::cx(pair[0], pair[1]));
        }
    }
    build(&format!("rand_cx_n{n}"), n, g)
}

/// Random circuit with `num_gates` gates, about half of them two-qubit.
pub fn random_circuit(n: usize, num_gates: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Vec::with_capacity(num_gates);
    for _ in 0..num_gates {
        let a = rng.gen_range(0..n);
        if n > 1 && rng.gen_bool(0.5) {
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            g.push(match rng.gen_range(0..3) {
                0 => Gate::cx(a, b),
                1 => Gate::cz(a, b),
                _ => Gate::swap(a, b),
            });
        } else {
            let theta = rng.gen_range(-PI..PI);
            g.push(match rng.gen_range(0..4) {
                0 => Gate::h(a),
                1 => Gate::rx(theta, a),
                2 => Gate::ry(theta, a),
                _ => Gate::rz(theta, a),
            });
        }
    }
    build(&format!("random_n{n}_s{seed}"), n, g)
}

/// The bundled benchmark set, sorted by name.
pub fn builtin_corpus() -> Vec<Circuit> {
    let mut all = vec![
        bell(2),
        deutsch(),
        fredkin(),
        qft(3),
        ghz(4),
        bell(4),
        qft(4),
        adder(4),
        ghz(5),
        qaoa_ring(5),
        random_cx(5, 6, 5),
        qaoa_ring(6),
        adder(6),
        w_state(7),
        qft(8),
        random_cx(8, 10, 8),
        adder(10),
        qaoa_ring(10),
        qft(12),
        random_cx(12, 12, 12),
        ghz(16),
        adder(16),
        random_cx(16, 16, 16),
    ];
    all.sort_by(|a, b| a.name.cmp(&b.name));
    all
}

/// Writes every bundled circuit as `<name>.qasm` into `dir`.
pub fn write_corpus(dir: &Path) -> Result<usize, CorpusError> {
    fs::create_dir_all(dir).map_err(|e| CorpusError::Io(dir.display().to_string(), e))?;
    let corpus = builtin_corpus();
    for c in &corpus {
        let path = dir.join(format!("{}.qasm", c.name));
        fs::write(&path, serialize_qasm(c)).map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
    }
    Ok(corpus.len())
}

/// A file stem with its parsed circuit or the reason it failed to load.
pub type LoadedCircuit = (String, Result<Circuit, CorpusError>);

/// Loads every `.qasm` file in `dir`, named by file stem and sorted by name.
/// Files that fail to parse are returned as errors alongside the rest.
pub fn load_dir(dir: &Path) -> Result<Vec<LoadedCircuit>, CorpusError> {
    let entries = fs::read_dir(dir).map_err(|e| CorpusError::Io(dir.display().to_string(), e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CorpusError::Io(dir.display().to_string(), e))?.path();
        if path.extension().is_some_and(|x| x == "qasm") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(CorpusError::Empty(dir.display().to_string()));
    }
    let mut out: Vec<(String, Result<Circuit, CorpusError>)> = paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let circuit = fs::read_to_string(&p)
                .map_err(|e| CorpusError::Io(p.display().to_string(), e))
                .and_then(|src| parse_qasm(&src).map_err(|e| CorpusError::Parse(name.clone(), e)))
                .map(|mut c| {
                    c.name = name.clone();
                    c
                });
            (name, circuit)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
