use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Circuit, Gate};

/// Gate-dependency DAG. Node `i` is gate `i` of the circuit; a gate depends on
/// the most recent earlier gate on each of its qubits, so the gates touching
/// any one qubit form a chain.
#[derive(Debug, Clone)]
pub struct CircuitDag {
    gates: Vec<Gate>,
    num_qubits: usize,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

impl CircuitDag {
    pub fn build(c: &Circuit) -> CircuitDag {
        let n = c.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        let mut last: Vec<Option<usize>> = vec![None; c.num_qubits];
        for (i, g) in c.gates().iter().enumerate() {
            for &q in &g.qubits {
                if let Some(p) = last[q] {
                    if !preds[i].contains(&p) {
                        preds[i].push(p);
                        succs[p].push(i);
                    }
                }
                last[q] = Some(i);
            }
        }
        for s in &mut succs {
            s.sort_unstable();
        }
        for p in &mut preds {
            p.sort_unstable();
        }
        CircuitDag { gates: c.gates().to_vec(), num_qubits: c.num_qubits, preds, succs }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gate(&self, node: usize) -> &Gate {
        &self.gates[node]
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn predecessors(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.succs[node]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.preds[node].len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succs.iter().enumerate().flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    /// Kahn's algorithm with ties broken by program index. Returns `None` if
    /// the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = (0..self.len()).map(|i| self.in_degree(i)).collect();
        let mut heap: BinaryHeap<Reverse<usize>> = (0..self.len()).filter(|&i| indeg[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(Reverse(u)) = heap.pop() {
            order.push(u);
            for &v in &self.succs[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    heap.push(Reverse(v));
                }
            }
        }
        (order.len() == self.len()).then_some(order)
    }

    /// Node depth layers: longest path (in counted nodes) ending at each node.
    fn levels(&self, include_directives: bool) -> Vec<usize> {
        let order = self.topological_order().expect("circuit DAGs are acyclic");
        let mut level = vec![0usize; self.len()];
        for u in order {
            let base = self.preds[u].iter().map(|&p| level[p]).max().unwrap_or(0);
            let counted = include_directives || !self.gates[u].kind.is_directive();
            level[u] = base + usize::from(counted);
        }
        level
    }
}

/// Circuit depth: the number of nodes on the longest DAG path, not counting
/// measurements or barriers.
pub fn depth(c: &Circuit) -> usize {
    depth_with(c, false)
}

pub fn depth_with(c: &Circuit, include_directives: bool) -> usize {
    CircuitDag::build(c).levels(include_directives).into_iter().max().unwrap_or(0)
}

/// Two-qubit gates in reverse topological order: element 0 is the last
/// two-qubit gate executed, the final element the first.
pub fn reverse_two_qubit_order(dag: &CircuitDag) -> Vec<Gate> {
    let order = dag.topological_order().expect("circuit DAGs are acyclic");
    order.into_iter().rev().map(|i| dag.gate(i)).filter(|g| g.kind.is_two_qubit()).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_qasm, GateKind};

    fn circ(n: usize, gates: Vec<Gate>) -> Circuit {
        Circuit::from_gates("t", n, gates).unwrap()
    }

    #[test]
    fn chain_edge() {
        let dag = CircuitDag::build(&circ(3, vec![Gate::cx(0, 1), Gate::cx(1, 2)]));
        assert_eq!(dag.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn parallel_gates_have_no_edges() {
        let dag = CircuitDag::build(&circ(2, vec![Gate::h(0), Gate::h(1)]));
        assert_eq!(dag.edges().count(), 0);
    }

    #[test]
    fn depth_examples() {
        assert_eq!(depth(&circ(2, vec![Gate::h(0), Gate::h(1)])), 1);
        assert_eq!(depth(&circ(3, vec![Gate::cx(0, 1), Gate::cx(1, 2), Gate::cx(0, 1)])), 3);
        assert_eq!(depth(&Circuit::new("empty", 4)), 0);
    }

    #[test]
    fn depth_skips_directives_unless_asked() {
        let c = circ(2, vec![Gate::h(0), Gate::barrier(vec![0, 1]), Gate::h(1), Gate::measure(1, 0)]);
        // the barrier still fences: h(1) waits on h(0)
        assert_eq!(depth(&c), 2);
        assert_eq!(depth_with(&c, true), 4);
    }

    #[test]
    fn reverse_order_examples() {
        let dag = CircuitDag::build(&circ(3, vec![Gate::cx(0, 1), Gate::h(0), Gate::cx(1, 2)]));
        let tg = reverse_two_qubit_order(&dag);
        assert_eq!(tg.len(), 2);
        assert!(tg[0].same_op(&Gate::cx(1, 2)));
        assert!(tg[1].same_op(&Gate::cx(0, 1)));

        let none = CircuitDag::build(&circ(2, vec![Gate::h(0), Gate::x(1)]));
        assert!(reverse_two_qubit_order(&none).is_empty());
    }

    const FREDKIN: &str = include_str!("../../data/bench/fredkin_n3.qasm");

    #[test]
    fn fredkin_dag_structure() {
        let c = parse_qasm(FREDKIN).unwrap();
        assert_eq!(c.count_kind(GateKind::CX), 8);
        assert_eq!(c.count_kind(GateKind::H), 2);
        assert_eq!(c.count_kind(GateKind::RZ), 7);
        let dag = CircuitDag::build(&c);
        // every gate after the first on a qubit has a predecessor on that qubit
        for (i, g) in c.gates().iter().enumerate() {
            let earlier = c.gates()[..i].iter().any(|h| h.qubits.iter().any(|q| g.qubits.contains(q)));
            assert_eq!(dag.in_degree(i) > 0, earlier);
        }
        let tg = reverse_two_qubit_order(&dag);
        let last_cx = c.gates().iter().rev().find(|g| g.kind == GateKind::CX).unwrap();
        assert_eq!(tg[0].index, last_cx.index);
        assert_eq!(depth(&c), 13);
    }

    #[test]
    fn qubit_chains() {
        let c = parse_qasm(FREDKIN).unwrap();
        let dag = CircuitDag::build(&c);
        for q in 0..c.num_qubits {
            let on_q: Vec<usize> = (0..c.len()).filter(|&i| c.gates()[i].qubits.contains(&q)).collect();
            for w in on_q.windows(2) {
                assert!(dag.successors(w[0]).contains(&w[1]));
            }
        }
    }
}
