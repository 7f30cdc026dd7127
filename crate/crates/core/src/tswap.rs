//! Decay-aware SWAP routing. Gates run as soon as their operands are coupled;
//! when every ready two-qubit gate is blocked, the SWAP minimizing the
//! decay-weighted front/lookahead cost is inserted.

use std::collections::BTreeSet;

use log::{debug, warn};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{decompose_swap, depth, Circuit, CircuitDag, Gate, GateKind};
use crate::device::{cheapest_path, DeviceModel, RoutingCostTable, UNREACHABLE};
use crate::sim::{pure_fidelity, SimError, StateVector};
use crate::thim::Mapping;

/// Heuristic values closer than this count as ties, broken by the
/// lexicographically smallest edge.
const H_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum RouteError {
    #[error("mapping covers {mapped} logical and {physical} physical qubits; circuit has {width}, device {device}")]
    MappingMismatch { mapped: usize, physical: usize, width: usize, device: usize },
    #[error("logical qubits {0} and {1} sit in different connected components")]
    Unroutable(usize, usize),
    #[error("{swaps} SWAPs without progress on gate {gate}; front layer {front:?}")]
    GuardTripped { swaps: usize, gate: usize, front: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouterParams {
    /// Weight of the lookahead term.
    pub mu: f64,
    /// Decay added to a logical qubit per SWAP it takes part in.
    pub delta: f64,
    /// Emit inserted SWAPs as three CX gates.
    pub decompose_swaps: bool,
    /// Reset all decay to 1 after this many executed two-qubit gates.
    pub decay_reset: Option<usize>,
    /// Fail instead of force-routing when the progress guard trips.
    pub strict_guard: bool,
}

impl Default for RouterParams {
    fn default() -> Self {
        RouterParams { mu: 0.5, delta: 1e-3, decompose_swaps: true, decay_reset: None, strict_guard: false }
    }
}

impl RouterParams {
    /// The comparison configuration: same loop with decay frozen.
    pub fn baseline(self) -> RouterParams {
        RouterParams { delta: 0.0, decay_reset: None, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutingMetrics {
    pub two_qubit_gates: usize,
    pub depth: usize,
    pub swaps: usize,
    pub final_layout: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedCircuit {
    /// Gates on physical qubits of the routing device.
    pub circuit: Circuit,
    pub initial: Mapping,
    pub final_mapping: Mapping,
    /// Physical edges of the inserted SWAPs, in order.
    pub swap_edges: Vec<(usize, usize)>,
    /// Final decay per logical qubit.
    pub decay: Vec<f64>,
    /// Times the progress guard forced a route.
    pub guard_trips: usize,
}

impl RoutedCircuit {
    pub fn swaps_inserted(&self) -> usize {
        self.swap_edges.len()
    }

    /// Re-indexes onto `members` (physical qubit `members[i]` becomes `i`).
    /// None if a gate or logical qubit sits outside `members`.
    pub fn restricted(&self, members: &[usize]) -> Option<RoutedCircuit> {
        let mut local = vec![None; self.circuit.num_qubits];
        for (i, &m) in members.iter().enumerate() {
            *local.get_mut(m)? = Some(i);
        }
        let down = |p: usize| local[p];
        let mut circuit = Circuit::new(self.circuit.name.clone(), members.len()).with_clbits(self.circuit.num_clbits);
        for g in self.circuit.gates() {
            let qubits = g.qubits.iter().map(|&q| down(q)).collect::<Option<Vec<usize>>>()?;
            circuit.push(Gate { qubits, ..g.clone() }).ok()?;
        }
        let map = |m: &Mapping| {
            let l2p = m.layout().iter().map(|&p| down(p)).collect::<Option<Vec<usize>>>()?;
            Mapping::new(l2p, members.len()).ok()
        };
        let swap_edges = self
            .swap_edges
            .iter()
            .map(|&(a, b)| Some((down(a)?.min(down(b)?), down(a)?.max(down(b)?))))
            .collect::<Option<Vec<_>>>()?;
        Some(RoutedCircuit {
            circuit,
            initial: map(&self.initial)?,
            final_mapping: map(&self.final_mapping)?,
            swap_edges,
            decay: self.decay.clone(),
            guard_trips: self.guard_trips,
        })
    }

    pub fn metrics(&self) -> RoutingMetrics {
        RoutingMetrics {
            two_qubit_gates: self.circuit.two_qubit_count(),
            depth: depth(&self.circuit),
            swaps: self.swaps_inserted(),
            final_layout: self.final_mapping.layout().to_vec(),
        }
    }
}

/// Gates whose predecessors have all executed.
pub fn front_layer(dag: &CircuitDag, executed: &[bool]) -> Vec<usize> {
    (0..dag.len()).filter(|&i| !executed[i] && dag.predecessors(i).iter().all(|&p| executed[p])).collect()
}

/// Two-qubit gates among the immediate DAG successors of `front`.
pub fn lookahead(dag: &CircuitDag, front: &[usize]) -> Vec<usize> {
    let out: BTreeSet<usize> = front
        .iter()
        .flat_map(|&f| dag.successors(f).iter().copied())
        .filter(|&s| dag.gate(s).is_two_qubit() && !front.contains(&s))
        .collect();
    out.into_iter().collect()
}

/// Coupling edges touching a physical qubit that hosts an operand of a front
/// gate, as sorted pairs in lexicographic order.
pub fn candidate_swaps(dag: &CircuitDag, front: &[usize], mapping: &Mapping, dev: &DeviceModel) -> Vec<(usize, usize)> {
    let mut out = BTreeSet::new();
    for &f in front {
        for &l in &dag.gate(f).qubits {
            let p = mapping.physical(l);
            for n in dev.neighbors(p) {
                out.insert((p.min(n), p.max(n)));
            }
        }
    }
    out.into_iter().collect()
}

fn mean_cost(gates: &[&Gate], mapping: &Mapping, costs: &RoutingCostTable) -> f64 {
    if gates.is_empty() {
        return 0.0;
    }
    gates.iter().map(|g| costs.cost(mapping.physical(g.qubits[0]), mapping.physical(g.qubits[1]))).sum::<f64>()
        / gates.len() as f64
}

/// Decay-weighted cost of `swap`, evaluated on the mapping after applying it.
/// An empty physical qubit contributes decay 1.
pub fn heuristic_h(
    swap: (usize, usize),
    front: &[&Gate],
    lookahead: &[&Gate],
    mapping: &Mapping,
    decay: &[f64],
    costs: &RoutingCostTable,
    mu: f64,
) -> f64 {
    let d = |p: usize| mapping.logical(p).map_or(1.0, |l| decay[l]);
    let weight = d(swap.0).max(d(swap.1));
    let mut after = mapping.clone();
    after.swap_physical(swap.0, swap.1);
    weight * (mean_cost(front, &after, costs) + mu * mean_cost(lookahead, &after, costs))
}

struct Router<'a> {
    dag: &'a CircuitDag,
    dev: &'a DeviceModel,
    costs: &'a RoutingCostTable,
    params: RouterParams,
    mapping: Mapping,
    decay: Vec<f64>,
    pending_preds: Vec<usize>,
    ready: BTreeSet<usize>,
    terminal_measure: Vec<bool>,
    out: Circuit,
    deferred: Vec<Gate>,
    swap_edges: Vec<(usize, usize)>,
    guard_trips: usize,
    executed_2q: usize,
    /// Edge of the last SWAP if no gate has run since.
    last_swap: Option<(usize, usize)>,
}

impl<'a> Router<'a> {
    fn executable(&self, node: usize) -> bool {
        let g = self.dag.gate(node);
        !g.is_two_qubit() || self.dev.has_edge(self.mapping.physical(g.qubits[0]), self.mapping.physical(g.qubits[1]))
    }

    fn execute(&mut self, node: usize) {
        self.ready.remove(&node);
        self.last_swap = None;
        let g = self.dag.gate(node);
        let placed = g.remapped(|q| self.mapping.physical(q));
        if self.terminal_measure[node] {
            // placed with the final mapping once routing ends
            self.deferred.push(g.clone());
        } else {
            self.out.push(placed).expect("physical indices fit the device");
        }
        if g.is_two_qubit() {
            self.executed_2q += 1;
            if let Some(k) = self.params.decay_reset {
                if k > 0 && self.executed_2q.is_multiple_of(k) {
                    self.decay.iter_mut().for_each(|d| *d = 1.0);
                }
            }
        }
        for &s in self.dag.successors(node) {
            self.pending_preds[s] -= 1;
            if self.pending_preds[s] == 0 {
                self.ready.insert(s);
            }
        }
    }

    /// Runs the smallest-index executable ready gate; false if none.
    fn step(&mut self) -> bool {
        match self.ready.iter().copied().find(|&n| self.executable(n)) {
            Some(n) => {
                self.execute(n);
                true
            }
            None => false,
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        for p in [a, b] {
            if let Some(l) = self.mapping.logical(p) {
                self.decay[l] += self.params.delta;
            }
        }
        self.mapping.swap_physical(a, b);
        let swap = Gate::swap(a, b);
        if self.params.decompose_swaps {
            for g in decompose_swap(&swap).expect("swap") {
                self.out.push(g).expect("edge endpoints fit the device");
            }
        } else {
            self.out.push(swap).expect("edge endpoints fit the device");
        }
        self.swap_edges.push((a.min(b), a.max(b)));
        self.last_swap = Some((a.min(b), a.max(b)));
    }

    fn choose_swap(&self, front: &[usize]) -> (usize, usize) {
        let front_gates: Vec<&Gate> = front.iter().map(|&f| self.dag.gate(f)).collect();
        let ahead: Vec<&Gate> = lookahead(self.dag, front).into_iter().map(|e| self.dag.gate(e)).collect();
        let mut candidates = candidate_swaps(self.dag, front, &self.mapping, self.dev);
        // undoing the previous SWAP before any gate runs only restores the old state
        if candidates.len() > 1 {
            candidates.retain(|&c| Some(c) != self.last_swap);
        }
        let mut best: Option<((usize, usize), f64)> = None;
        for c in candidates {
            let h = heuristic_h(c, &front_gates, &ahead, &self.mapping, &self.decay, self.costs, self.params.mu);
            if best.is_none_or(|(_, bh)| h < bh - H_TIE_TOLERANCE) {
                best = Some((c, h));
            }
        }
        best.expect("blocked front gates have incident edges").0
    }

    /// Moves the first operand of the cheapest front gate along its cheapest
    /// path until the operands are adjacent.
    fn force_route(&mut self, front: &[usize]) {
        let &gate = front
            .iter()
            .min_by(|&&x, &&y| self.gate_cost(x).total_cmp(&self.gate_cost(y)).then(x.cmp(&y)))
            .expect("non-empty front");
        let g = self.dag.gate(gate);
        let (pa, pb) = (self.mapping.physical(g.qubits[0]), self.mapping.physical(g.qubits[1]));
        let path = cheapest_path(self.dev, pa, pb).expect("reachability checked");
        for w in path.windows(2).take(path.len().saturating_sub(2)) {
            self.apply_swap(w[0], w[1]);
        }
    }

    fn gate_cost(&self, node: usize) -> f64 {
        let g = self.dag.gate(node);
        self.costs.cost(self.mapping.physical(g.qubits[0]), self.mapping.physical(g.qubits[1]))
    }
}

/// For each node, whether it is a measurement with no later unitary gate on
/// any dependent path.
fn terminal_measures(dag: &CircuitDag) -> Vec<bool> {
    let mut unitary_after = vec![false; dag.len()];
    for i in (0..dag.len()).rev() {
        unitary_after[i] = dag.successors(i).iter().any(|&s| !dag.gate(s).kind.is_directive() || unitary_after[s]);
    }
    (0..dag.len()).map(|i| dag.gate(i).kind == GateKind::MEASURE && !unitary_after[i]).collect()
}

/// Routes `dag` from initial mapping `m0` onto `dev`. The output circuit is
/// indexed by the physical qubits of `dev`.
pub fn route(
    dag: &CircuitDag,
    m0: &Mapping,
    dev: &DeviceModel,
    costs: &RoutingCostTable,
    params: RouterParams,
) -> Result<RoutedCircuit, RouteError> {
    if m0.num_logical() != dag.num_qubits() || m0.num_physical() != dev.num_qubits || costs.len() != dev.num_qubits {
        return Err(RouteError::MappingMismatch {
            mapped: m0.num_logical(),
            physical: m0.num_physical(),
            width: dag.num_qubits(),
            device: dev.num_qubits,
        });
    }
    let num_clbits = dag.gates().iter().filter_map(|g| g.clbit).map(|c| c + 1).max().unwrap_or(0);
    let mut r = Router {
        dag,
        dev,
        costs,
        params,
        mapping: m0.clone(),
        decay: vec![1.0; dag.num_qubits()],
        pending_preds: (0..dag.len()).map(|i| dag.in_degree(i)).collect(),
        ready: (0..dag.len()).filter(|&i| dag.in_degree(i) == 0).collect(),
        terminal_measure: terminal_measures(dag),
        out: Circuit::new("", dev.num_qubits).with_clbits(num_clbits),
        deferred: Vec::new(),
        swap_edges: Vec::new(),
        guard_trips: 0,
        executed_2q: 0,
        last_swap: None,
    };
    let guard = 3 * dev.diameter().max(1);
    let mut swaps_since_progress = 0;
    loop {
        if r.step() {
            swaps_since_progress = 0;
            continue;
        }
        let front: Vec<usize> = r.ready.iter().copied().collect();
        if front.is_empty() {
            break;
        }
        for &f in &front {
            if r.gate_cost(f) >= UNREACHABLE {
                let g = dag.gate(f);
                return Err(RouteError::Unroutable(g.qubits[0], g.qubits[1]));
            }
        }
        if swaps_since_progress >= guard {
            if params.strict_guard {
                return Err(RouteError::GuardTripped { swaps: swaps_since_progress, gate: front[0], front });
            }
            warn!("progress guard tripped after {swaps_since_progress} SWAPs; force-routing");
            r.guard_trips += 1;
            r.force_route(&front);
            swaps_since_progress = 0;
            continue;
        }
        let (a, b) = r.choose_swap(&front);
        debug!("swap {a}-{b} for front {front:?}");
        r.apply_swap(a, b);
        swaps_since_progress += 1;
    }
    for g in std::mem::take(&mut r.deferred) {
        let placed = g.remapped(|q| r.mapping.physical(q));
        r.out.push(placed).expect("physical indices fit the device");
    }
    Ok(RoutedCircuit {
        circuit: r.out,
        initial: m0.clone(),
        final_mapping: r.mapping,
        swap_edges: r.swap_edges,
        decay: r.decay,
        guard_trips: r.guard_trips,
    })
}

/// Comparison router: decay frozen at 1 and costs from gate errors alone.
pub fn route_baseline(
    dag: &CircuitDag,
    m0: &Mapping,
    dev: &DeviceModel,
    params: RouterParams,
) -> Result<RoutedCircuit, RouteError> {
    let costs = RoutingCostTable::build(dev, 0.0, 0.0).expect("zero dwell time is valid");
    route(dag, m0, dev, &costs, params.baseline())
}

/// Two-qubit gates of `c` that do not sit on a coupling edge.
pub fn nonconformant_gates<'c>(c: &'c Circuit, dev: &DeviceModel) -> Vec<&'c Gate> {
    c.gates().iter().filter(|g| g.is_two_qubit() && !dev.has_edge(g.qubits[0], g.qubits[1])).collect()
}

/// Overlap between the original circuit run on `input` (one single-qubit
/// state per logical qubit) and the routed circuit run on the same input
/// placed by the initial mapping, after undoing the final permutation.
/// Measurements and barriers are ignored.
pub fn equivalence_fidelity(
    original: &Circuit,
    routed: &RoutedCircuit,
    input: &[[Complex64; 2]],
) -> Result<f64, SimError> {
    let zero = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let m = routed.circuit.num_qubits;
    let mut psi = StateVector::product(input)?;
    for g in original.gates() {
        psi.apply_gate(g)?;
    }
    let mut placed = vec![zero; m];
    for (l, s) in input.iter().enumerate() {
        placed[routed.initial.physical(l)] = *s;
    }
    let mut phi = StateVector::product(&placed)?;
    for g in routed.circuit.gates() {
        phi.apply_gate(g)?;
    }
    // widen psi with idle |0> qubits at the low end, then move logical l to its final host
    let shift = m - original.num_qubits;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << m];
    for (i, &a) in psi.amplitudes().iter().enumerate() {
        amps[i << shift] = a;
    }
    let wide = StateVector::from_amplitudes(amps)?;
    let mut perm: Vec<usize> = routed.final_mapping.layout().to_vec();
    let free: Vec<usize> = (0..m).filter(|&p| routed.final_mapping.logical(p).is_none()).collect();
    perm.extend(free);
    Ok(pure_fidelity(&wide.permute_qubits(&perm), &phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_qasm;
    use crate::device::fixtures::uniform_device;

    fn hop_costs(dev: &DeviceModel) -> RoutingCostTable {
        let d = dev
            .hop_distances()
            .into_iter()
            .map(|row| row.into_iter().map(|x| if x == usize::MAX { UNREACHABLE } else { x as f64 }).collect())
            .collect();
        RoutingCostTable::from_parts(d, vec![0.0; dev.num_qubits], 0.0)
    }

    fn circ(n: usize, gates: Vec<Gate>) -> Circuit {
        Circuit::from_gates("t", n, gates).unwrap()
    }

    #[test]
    fn front_layer_examples() {
        let dag = CircuitDag::build(&circ(3, vec![Gate::cx(0, 1), Gate::cx(1, 2)]));
        assert_eq!(front_layer(&dag, &[false, false]), vec![0]);
        assert!(front_layer(&dag, &[true, true]).is_empty());
    }

    #[test]
    fn fredkin_front_and_lookahead() {
        let c = parse_qasm(include_str!("../data/bench/fredkin_n3.qasm")).unwrap();
        let dag = CircuitDag::build(&c);
        let mut executed = vec![false; dag.len()];
        let front = front_layer(&dag, &executed);
        assert_eq!(front, vec![0]);
        executed[0] = true;
        // cx q1,q2 follows on q1; the h on q2 is not a two-qubit gate
        let e = lookahead(&dag, &front);
        assert_eq!(e, vec![2]);
    }

    #[test]
    fn candidates_on_path_and_star() {
        let path = uniform_device(4, &[(0, 1), (1, 2), (2, 3)], 0.01);
        let dag = CircuitDag::build(&circ(2, vec![Gate::cx(0, 1)]));
        let m = Mapping::new(vec![0, 3], 4).unwrap();
        assert_eq!(candidate_swaps(&dag, &[0], &m, &path), vec![(0, 1), (2, 3)]);
        let star = uniform_device(4, &[(0, 1), (0, 2), (0, 3)], 0.01);
        let m = Mapping::new(vec![1, 2], 4).unwrap();
        assert_eq!(candidate_swaps(&dag, &[0], &m, &star), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn heuristic_examples() {
        let costs = RoutingCostTable::from_parts(
            vec![
                vec![0.0, 9.0, 9.0, 9.0, 9.0],
                vec![9.0, 0.0, 3.0, 9.0, 9.0],
                vec![9.0, 3.0, 0.0, 9.0, 9.0],
                vec![9.0, 9.0, 9.0, 0.0, 1.0],
                vec![9.0, 9.0, 9.0, 1.0, 0.0],
            ],
            vec![0.0; 5],
            0.0,
        );
        // swapping physical 0 and 1 moves logical 0 onto physical 1
        let m = Mapping::new(vec![0, 2, 3, 4], 5).unwrap();
        let f = Gate::cx(0, 1);
        let e = Gate::cx(2, 3);
        let h = heuristic_h((0, 1), &[&f], &[], &m, &[1.0; 4], &costs, 0.0);
        assert_eq!(h, 3.0);
        let h = heuristic_h((0, 1), &[&f], &[&e], &m, &[1.0; 4], &costs, 0.5);
        assert_eq!(h, 3.5);
        let h = heuristic_h((0, 1), &[&f], &[&e], &m, &[1.002, 1.0, 1.0, 1.0], &costs, 0.5);
        assert!((h - 3.507).abs() < 1e-12);
    }

    #[test]
    fn conformant_circuit_is_relabeled() {
        let dev = uniform_device(3, &[(0, 1), (1, 2)], 0.01);
        let c = circ(3, vec![Gate::h(0), Gate::cx(0, 1), Gate::cx(1, 2), Gate::rz(0.3, 2)]);
        let m0 = Mapping::new(vec![2, 1, 0], 3).unwrap();
        let dag = CircuitDag::build(&c);
        let r = route(&dag, &m0, &dev, &hop_costs(&dev), RouterParams::default()).unwrap();
        assert_eq!(r.swaps_inserted(), 0);
        let relabeled: Vec<Gate> = c.gates().iter().map(|g| g.remapped(|q| 2 - q)).collect();
        assert!(r.circuit.gates().iter().zip(&relabeled).all(|(a, b)| a.same_op(b)));
        let base = route_baseline(&dag, &m0, &dev, RouterParams::default()).unwrap();
        assert_eq!(base.circuit, r.circuit);
    }

    #[test]
    fn grid_needs_two_swaps() {
        // 2x3 grid: 0-1-2 over 3-4-5; opposite corners are three hops apart
        let grid = uniform_device(6, &[(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)], 0.01);
        let c = circ(6, vec![Gate::cx(0, 5)]);
        let m0 = Mapping::new((0..6).collect(), 6).unwrap();
        let params = RouterParams { decompose_swaps: false, ..RouterParams::default() };
        let r = route(&CircuitDag::build(&c), &m0, &grid, &hop_costs(&grid), params).unwrap();
        assert_eq!(r.swaps_inserted(), 2);
        assert!(nonconformant_gates(&r.circuit, &grid).is_empty());
        assert_eq!(r.circuit.count_kind(GateKind::SWAP), 2);
    }

    #[test]
    fn decay_bookkeeping_and_gate_accounting() {
        let dev = uniform_device(5, &[(0, 1), (1, 2), (2, 3), (3, 4)], 0.01);
        let c = circ(5, vec![Gate::cx(0, 4), Gate::cx(1, 3), Gate::cx(0, 2), Gate::cx(4, 1)]);
        let m0 = Mapping::new((0..5).collect(), 5).unwrap();
        let params = RouterParams::default();
        let r = route(&CircuitDag::build(&c), &m0, &dev, &hop_costs(&dev), params).unwrap();
        assert!(r.swaps_inserted() > 0);
        assert_eq!(r.circuit.two_qubit_count(), c.two_qubit_count() + 3 * r.swaps_inserted());
        // replay the swaps to count participation per logical qubit
        let mut m = m0.clone();
        let mut count = [0usize; 5];
        for &(a, b) in &r.swap_edges {
            for p in [a, b] {
                if let Some(l) = m.logical(p) {
                    count[l] += 1;
                }
            }
            m.swap_physical(a, b);
        }
        assert_eq!(m, r.final_mapping);
        for (d, k) in r.decay.iter().zip(count) {
            assert!((d - 1.0 - params.delta * k as f64).abs() < 1e-15);
        }
        let zero = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!(equivalence_fidelity(&c, &r, &[zero; 5]).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn measurements_follow_final_mapping() {
        let dev = uniform_device(3, &[(0, 1), (1, 2)], 0.01);
        let c = circ(3, vec![Gate::cx(0, 2), Gate::measure(0, 0), Gate::measure(2, 1)]);
        let m0 = Mapping::new(vec![0, 1, 2], 3).unwrap();
        let r = route(&CircuitDag::build(&c), &m0, &dev, &hop_costs(&dev), RouterParams::default()).unwrap();
        let measures: Vec<&Gate> = r.circuit.gates().iter().filter(|g| g.kind == GateKind::MEASURE).collect();
        assert_eq!(measures.len(), 2);
        assert_eq!(measures[0].qubits, vec![r.final_mapping.physical(0)]);
        assert_eq!(measures[1].clbit, Some(1));
        assert_eq!(r.circuit.gates().last().unwrap().kind, GateKind::MEASURE);
    }

    #[test]
    fn restriction_round_trip() {
        let dev = uniform_device(4, &[(0, 1), (1, 2), (2, 3)], 0.01);
        let c = circ(2, vec![Gate::h(0), Gate::cx(0, 1)]);
        let m0 = Mapping::new(vec![1, 3], 4).unwrap();
        let r = route(&CircuitDag::build(&c), &m0, &dev, &hop_costs(&dev), RouterParams::default()).unwrap();
        let sub = r.restricted(&[1, 2, 3]).unwrap();
        assert_eq!(sub.circuit.num_qubits, 3);
        assert_eq!(sub.initial.layout(), &[0, 2]);
        assert_eq!(sub.swaps_inserted(), r.swaps_inserted());
        let zero = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!(equivalence_fidelity(&c, &sub, &[zero; 2]).unwrap() > 1.0 - 1e-9);
        assert!(r.restricted(&[2, 3]).is_none());
    }

    #[test]
    fn unroutable_components() {
        let dev = uniform_device(4, &[(0, 1), (2, 3)], 0.01);
        let c = circ(2, vec![Gate::cx(0, 1)]);
        let m0 = Mapping::new(vec![0, 2], 4).unwrap();
        let err = route(&CircuitDag::build(&c), &m0, &dev, &hop_costs(&dev), RouterParams::default());
        assert_eq!(err.unwrap_err(), RouteError::Unroutable(0, 1));
    }

    #[test]
    fn equivalence_with_spare_physical_qubits() {
        let dev = uniform_device(4, &[(0, 1), (1, 2), (2, 3)], 0.01);
        let c = circ(2, vec![Gate::h(0), Gate::cx(0, 1), Gate::ry(0.7, 1)]);
        let m0 = Mapping::new(vec![0, 3], 4).unwrap();
        let r = route(&CircuitDag::build(&c), &m0, &dev, &hop_costs(&dev), RouterParams::default()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let input =
            [[Complex64::new(s, 0.0), Complex64::new(0.0, s)], [Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)]];
        assert!(equivalence_fidelity(&c, &r, &input).unwrap() > 1.0 - 1e-9);
    }
}
