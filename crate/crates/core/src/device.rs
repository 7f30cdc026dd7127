//! Coupling graph, calibration data and the noise-aware distance quantities
//! derived from them.
//!
//! Units: coherence times and dwell times are microseconds, gate durations are
//! stored in nanoseconds as they appear in calibration files.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance reported for physical qubits with no connecting path.
pub const UNREACHABLE: f64 = 1e12;

/// Default offset added to normalized T2 scores.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// SWAP = three native two-qubit gates.
pub const SWAP_GATE_COUNT: f64 = 3.0;

const T2_BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("calibration schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("{what} = {value} is not a probability in [0, 1)")]
    Probability { what: String, value: f64 },
    #[error("{what} = {value} must be positive")]
    NonPositive { what: String, value: f64 },
    #[error("invalid coupling graph: {0}")]
    Graph(String),
    #[error("all {0} qubits share the same T2; normalization is undefined")]
    DegenerateT2(usize),
    #[error("dwell time {0} is negative")]
    NegativeTime(f64),
    #[error("unknown built-in device `{0}`")]
    UnknownBuiltin(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    #[serde(rename = "id")]
    pub qubit: usize,
    #[serde(rename = "t1_us")]
    pub t1: f64,
    #[serde(rename = "t2_us")]
    pub t2: f64,
    pub readout_error: f64,
    pub single_qubit_error: f64,
}

impl CalibrationRecord {
    /// Pure-dephasing time from 1/T2 = 1/(2 T1) + 1/Tphi. Infinite when T2
    /// reaches (or, after clamping, exceeds) the 2 T1 bound.
    pub fn t_phi(&self) -> f64 {
        let rate = 1.0 / self.t2 - 1.0 / (2.0 * self.t1);
        if rate <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / rate
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub q0: usize,
    pub q1: usize,
    pub two_qubit_error: f64,
    pub gate_duration_ns: f64,
}

impl EdgeRecord {
    pub fn endpoints(&self) -> (usize, usize) {
        (self.q0.min(self.q1), self.q0.max(self.q1))
    }

    pub fn other(&self, q: usize) -> Option<usize> {
        if q == self.q0 {
            Some(self.q1)
        } else if q == self.q1 {
            Some(self.q0)
        } else {
            None
        }
    }

    pub fn fidelity(&self) -> f64 {
        1.0 - self.two_qubit_error
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DeviceFile {
    name: String,
    num_qubits: usize,
    qubits: Vec<CalibrationRecord>,
    edges: Vec<EdgeRecord>,
}

/// Hardware description: coupling graph plus calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceModel {
    pub name: String,
    pub num_qubits: usize,
    pub qubits: Vec<CalibrationRecord>,
    pub edges: Vec<EdgeRecord>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

const BUILTIN: [(&str, &str); 3] = [
    ("perth", include_str!("../data/devices/perth.json")),
    ("guadalupe", include_str!("../data/devices/guadalupe.json")),
    ("brooklyn", include_str!("../data/devices/brooklyn.json")),
];

impl DeviceModel {
    /// Validates and indexes a device. Qubit records may be given in any order
    /// but must cover `0..num_qubits` exactly once.
    pub fn new(
        name: impl Into<String>,
        num_qubits: usize,
        mut qubits: Vec<CalibrationRecord>,
        edges: Vec<EdgeRecord>,
    ) -> Result<DeviceModel, DeviceError> {
        let name = name.into();
        qubits.sort_by_key(|q| q.qubit);
        if qubits.len() != num_qubits || qubits.iter().enumerate().any(|(i, q)| q.qubit != i) {
            return Err(DeviceError::Graph(format!("expected one calibration record per qubit 0..{num_qubits}")));
        }
        for q in &qubits {
            positive(&format!("t1 of qubit {}", q.qubit), q.t1)?;
            positive(&format!("t2 of qubit {}", q.qubit), q.t2)?;
            probability(&format!("readout_error of qubit {}", q.qubit), q.readout_error)?;
            probability(&format!("single_qubit_error of qubit {}", q.qubit), q.single_qubit_error)?;
            if q.t2 > 2.0 * q.t1 + T2_BOUND_TOLERANCE {
                warn!(
                    "{name}: qubit {} has T2 = {} > 2 T1 = {}; pure dephasing clamped to zero",
                    q.qubit,
                    q.t2,
                    2.0 * q.t1
                );
            }
        }
        let mut adjacency = vec![Vec::new(); num_qubits];
        for (k, e) in edges.iter().enumerate() {
            if e.q0 >= num_qubits || e.q1 >= num_qubits {
                return Err(DeviceError::Graph(format!("edge {}-{} outside 0..{num_qubits}", e.q0, e.q1)));
            }
            if e.q0 == e.q1 {
                return Err(DeviceError::Graph(format!("self-loop on qubit {}", e.q0)));
            }
            if adjacency[e.q0].iter().any(|&(n, _)| n == e.q1) {
                return Err(DeviceError::Graph(format!("duplicate edge {}-{}", e.q0, e.q1)));
            }
            probability(&format!("two_qubit_error of edge {}-{}", e.q0, e.q1), e.two_qubit_error)?;
            positive(&format!("gate_duration_ns of edge {}-{}", e.q0, e.q1), e.gate_duration_ns)?;
            adjacency[e.q0].push((e.q1, k));
            adjacency[e.q1].push((e.q0, k));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let dev = DeviceModel { name, num_qubits, qubits, edges, adjacency };
        if num_qubits > 0 && !dev.is_connected() {
            warn!("{}: coupling graph is disconnected", dev.name);
        }
        Ok(dev)
    }

    pub fn from_json(text: &str) -> Result<DeviceModel, DeviceError> {
        let file: DeviceFile = serde_json::from_str(text)?;
        DeviceModel::new(file.name, file.num_qubits, file.qubits, file.edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DeviceModel, DeviceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| DeviceError::Io { path: path.display().to_string(), source })?;
        DeviceModel::from_json(&text)
    }

    /// One of the bundled fixtures: `perth`, `guadalupe` or `brooklyn`.
    pub fn builtin(name: &str) -> Result<DeviceModel, DeviceError> {
        let key = name.trim_end_matches(".json");
        BUILTIN
            .iter()
            .find(|(n, _)| *n == key)
            .map(|(_, text)| DeviceModel::from_json(text))
            .unwrap_or_else(|| Err(DeviceError::UnknownBuiltin(name.to_string())))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    pub fn to_json(&self) -> String {
        let file = DeviceFile {
            name: self.name.clone(),
            num_qubits: self.num_qubits,
            qubits: self.qubits.clone(),
            edges: self.edges.clone(),
        };
        serde_json::to_string_pretty(&file).expect("device serializes")
    }

    /// Neighbours of `q` in ascending order.
    pub fn neighbors(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[q].iter().map(|&(n, _)| n)
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adjacency[q].len()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<&EdgeRecord> {
        self.adjacency.get(a)?.iter().find(|&&(n, _)| n == b).map(|&(_, k)| &self.edges[k])
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_between(a, b).is_some()
    }

    /// Edges as sorted `(min, max)` pairs in lexicographic order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self.edges.iter().map(EdgeRecord::endpoints).collect();
        out.sort_unstable();
        out
    }

    pub fn is_connected(&self) -> bool {
        self.num_qubits == 0 || self.components().len() == 1
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.num_qubits];
        let mut out = Vec::new();
        for s in 0..self.num_qubits {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                for v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Whether `members` induces a connected subgraph.
    pub fn induces_connected(&self, members: &[usize]) -> bool {
        if members.is_empty() {
            return false;
        }
        let mut inside = vec![false; self.num_qubits];
        for &m in members {
            inside[m] = true;
        }
        let mut seen = vec![false; self.num_qubits];
        let mut stack = vec![members[0]];
        seen[members[0]] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in self.neighbors(u) {
                if inside[v] && !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == members.len()
    }

    /// Sub-device induced by `members`; qubit `i` of the result is
    /// `members[i]` of `self`.
    pub fn induced(&self, members: &[usize]) -> DeviceModel {
        let mut local = vec![None; self.num_qubits];
        for (i, &m) in members.iter().enumerate() {
            local[m] = Some(i);
        }
        let qubits = members
            .iter()
            .enumerate()
            .map(|(i, &m)| CalibrationRecord { qubit: i, ..self.qubits[m].clone() })
            .collect();
        let edges = self
            .edges
            .iter()
            .filter_map(|e| match (local[e.q0], local[e.q1]) {
                (Some(a), Some(b)) => Some(EdgeRecord { q0: a, q1: b, ..e.clone() }),
                _ => None,
            })
            .collect();
        DeviceModel::new(format!("{}[sub]", self.name), members.len(), qubits, edges)
            .expect("subgraph of a valid device is valid")
    }

    /// Unweighted hop distances; `usize::MAX` when unreachable.
    pub fn hop_distances(&self) -> Vec<Vec<usize>> {
        (0..self.num_qubits)
            .map(|s| {
                let mut dist = vec![usize::MAX; self.num_qubits];
                dist[s] = 0;
                let mut queue = VecDeque::from([s]);
                while let Some(u) = queue.pop_front() {
                    for v in self.neighbors(u) {
                        if dist[v] == usize::MAX {
                            dist[v] = dist[u] + 1;
                            queue.push_back(v);
                        }
                    }
                }
                dist
            })
            .collect()
    }

    /// Largest finite hop distance.
    pub fn diameter(&self) -> usize {
        self.hop_distances().into_iter().flatten().filter(|&d| d != usize::MAX).max().unwrap_or(0)
    }

    pub fn mean_two_qubit_duration_us(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        self.edges.iter().map(|e| e.gate_duration_ns).sum::<f64>() / self.edges.len() as f64 / 1000.0
    }

    pub fn mean_t2(&self, members: &[usize]) -> f64 {
        members.iter().map(|&m| self.qubits[m].t2).sum::<f64>() / members.len().max(1) as f64
    }
}

fn probability(what: &str, value: f64) -> Result<(), DeviceError> {
    if (0.0..1.0).contains(&value) {
        Ok(())
    } else {
        Err(DeviceError::Probability { what: what.to_string(), value })
    }
}

fn positive(what: &str, value: f64) -> Result<(), DeviceError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DeviceError::NonPositive { what: what.to_string(), value })
    }
}

/// Min-max normalized T2 per qubit plus `epsilon`, in `(0, 1 + epsilon]`.
pub fn normalize_t2(dev: &DeviceModel, epsilon: f64) -> Result<Vec<f64>, DeviceError> {
    let t2: Vec<f64> = dev.qubits.iter().map(|q| q.t2).collect();
    let min = t2.iter().copied().fold(f64::INFINITY, f64::min);
    let max = t2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if t2.is_empty() || max - min == 0.0 {
        return Err(DeviceError::DegenerateT2(t2.len()));
    }
    Ok(t2.iter().map(|v| (v - min) / (max - min) + epsilon).collect())
}

/// Additive routing weight -ln(F_2q) with F_2q = 1 - two_qubit_error.
pub fn edge_weight(e: &EdgeRecord) -> Result<f64, DeviceError> {
    probability(&format!("two_qubit_error of edge {}-{}", e.q0, e.q1), e.two_qubit_error)?;
    Ok(-(-e.two_qubit_error).ln_1p())
}

/// Cost of a SWAP realized on `e`.
pub fn swap_weight(e: &EdgeRecord) -> Result<f64, DeviceError> {
    Ok(SWAP_GATE_COUNT * edge_weight(e)?)
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra over `weights[k]` of edge `k`; returns distances and
/// predecessor links.
fn dijkstra(dev: &DeviceModel, weights: &[f64], source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = dev.num_qubits;
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem(0.0, source));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, k) in &dev.adjacency[u] {
            let nd = d + weights[k];
            if nd < dist[v] || (nd == dist[v] && prev[v].is_some_and(|p| u < p)) {
                dist[v] = nd;
                prev[v] = Some(u);
                heap.push(HeapItem(nd, v));
            }
        }
    }
    (dist, prev)
}

fn edge_weights(dev: &DeviceModel) -> Vec<f64> {
    dev.edges.iter().map(|e| edge_weight(e).expect("validated on load")).collect()
}

/// All-pairs gate-error distance: weighted shortest paths under
/// [`edge_weight`]. Unreachable pairs hold [`UNREACHABLE`].
pub fn err_distance(dev: &DeviceModel) -> Vec<Vec<f64>> {
    let weights = edge_weights(dev);
    (0..dev.num_qubits)
        .map(|s| {
            dijkstra(dev, &weights, s).0.into_iter().map(|d| if d.is_finite() { d } else { UNREACHABLE }).collect()
        })
        .collect()
}

/// Cheapest path from `a` to `b` (inclusive) under [`edge_weight`].
pub fn cheapest_path(dev: &DeviceModel, a: usize, b: usize) -> Option<Vec<usize>> {
    let (dist, prev) = dijkstra(dev, &edge_weights(dev), a);
    if !dist[b].is_finite() {
        return None;
    }
    let mut path = vec![b];
    let mut cur = b;
    while let Some(p) = prev[cur] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    Some(path)
}

/// Dephasing failure probability 1 - exp(-t / T2) over dwell time `t_us`.
pub fn dwell_penalty(q: &CalibrationRecord, t_us: f64) -> Result<f64, DeviceError> {
    if t_us < 0.0 || t_us.is_nan() {
        return Err(DeviceError::NegativeTime(t_us));
    }
    Ok(-(-t_us / q.t2).exp_m1())
}

/// Dwell time approximated as circuit depth times the mean two-qubit gate
/// duration, in microseconds.
pub fn default_dwell_time(dev: &DeviceModel, circuit_depth: usize) -> f64 {
    circuit_depth as f64 * dev.mean_two_qubit_duration_us()
}

/// Precomputed noise-aware routing cost
/// D(i, j) = D_err(i, j) + eta (P(i) + P(j)).
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingCostTable {
    n: usize,
    d_err: Vec<f64>,
    penalty: Vec<f64>,
    eta: f64,
    cost: Vec<f64>,
}

impl RoutingCostTable {
    pub fn build(dev: &DeviceModel, dwell_time_us: f64, eta: f64) -> Result<RoutingCostTable, DeviceError> {
        let penalty = dev.qubits.iter().map(|q| dwell_penalty(q, dwell_time_us)).collect::<Result<Vec<_>, _>>()?;
        Ok(RoutingCostTable::from_parts(err_distance(dev), penalty, eta))
    }

    pub fn from_parts(d_err: Vec<Vec<f64>>, penalty: Vec<f64>, eta: f64) -> RoutingCostTable {
        let n = d_err.len();
        assert_eq!(penalty.len(), n, "one dwell penalty per qubit");
        assert!(eta >= 0.0, "eta must be nonnegative");
        let d_err: Vec<f64> = d_err.into_iter().flatten().collect();
        assert_eq!(d_err.len(), n * n, "square distance matrix");
        let mut cost = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = d_err[i * n + j];
                cost[i * n + j] = if d >= UNREACHABLE { UNREACHABLE } else { d + eta * (penalty[i] + penalty[j]) };
            }
        }
        RoutingCostTable { n, d_err, penalty, eta, cost }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn penalty(&self, q: usize) -> f64 {
        self.penalty[q]
    }

    pub fn d_err(&self, i: usize, j: usize) -> f64 {
        self.d_err[i * self.n + j]
    }

    /// Noise-aware routing cost between physical qubits.
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }
}

/// Free-function form of [`RoutingCostTable::cost`].
pub fn routing_cost(table: &RoutingCostTable, i: usize, j: usize) -> f64 {
    table.cost(i, j)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn uniform_device(n: usize, edges: &[(usize, usize)], err: f64) -> DeviceModel {
        let qubits = (0..n)
            .map(|i| CalibrationRecord {
                qubit: i,
                t1: 100.0,
                t2: 80.0 + i as f64,
                readout_error: 0.01,
                single_qubit_error: 1e-4,
            })
            .collect();
        let edges = edges
            .iter()
            .map(|&(a, b)| EdgeRecord { q0: a, q1: b, two_qubit_error: err, gate_duration_ns: 300.0 })
            .collect();
        DeviceModel::new("test", n, qubits, edges).unwrap()
    }
}
