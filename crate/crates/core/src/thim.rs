//! Time-weighted initial mapping: a heatmap of logical interactions, weighted
//! toward late gates, drives a greedy placement onto the partition that is then
//! polished by hill climbing on the global routing cost.

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{reverse_two_qubit_order, Circuit, CircuitDag, Gate};
use crate::device::{DeviceModel, RoutingCostTable};

/// Improvements smaller than this are treated as noise by the refiner.
const IMPROVEMENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ThimError {
    #[error("time-weight index {k} outside 1..={total}")]
    IndexOutOfRange { k: usize, total: usize },
    #[error("phi = {0} must be nonnegative")]
    NegativePhi(f64),
    #[error("{logical} logical qubits do not fit in a partition of {physical}")]
    PartitionTooSmall { logical: usize, physical: usize },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
}

/// Injective logical-to-physical assignment with its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mapping {
    l2p: Vec<usize>,
    #[serde(skip)]
    p2l: Vec<Option<usize>>,
}

impl Mapping {
    pub fn new(l2p: Vec<usize>, num_physical: usize) -> Result<Mapping, ThimError> {
        let mut p2l = vec![None; num_physical];
        for (l, &p) in l2p.iter().enumerate() {
            if p >= num_physical {
                return Err(ThimError::InvalidLayout(format!("physical {p} outside 0..{num_physical}")));
            }
            if let Some(other) = p2l[p] {
                return Err(ThimError::InvalidLayout(format!("logicals {other} and {l} share physical {p}")));
            }
            p2l[p] = Some(l);
        }
        Ok(Mapping { l2p, p2l })
    }

    pub fn num_logical(&self) -> usize {
        self.l2p.len()
    }

    pub fn num_physical(&self) -> usize {
        self.p2l.len()
    }

    pub fn physical(&self, l: usize) -> usize {
        self.l2p[l]
    }

    pub fn logical(&self, p: usize) -> Option<usize> {
        self.p2l[p]
    }

    /// Physical index of each logical qubit.
    pub fn layout(&self) -> &[usize] {
        &self.l2p
    }

    /// Exchanges the contents of two physical qubits (either may be empty).
    pub fn swap_physical(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.p2l[a], self.p2l[b]);
        self.p2l[a] = lb;
        self.p2l[b] = la;
        if let Some(l) = la {
            self.l2p[l] = b;
        }
        if let Some(l) = lb {
            self.l2p[l] = a;
        }
    }

    /// Same assignment expressed in another physical index space.
    pub fn relabeled(&self, f: impl Fn(usize) -> usize, num_physical: usize) -> Mapping {
        Mapping::new(self.l2p.iter().map(|&p| f(p)).collect(), num_physical).expect("relabeling is injective")
    }
}

/// Weight exp(phi (1 - k/total)) of the k-th gate counted from the end.
pub fn time_weight(k: usize, total: usize, phi: f64) -> Result<f64, ThimError> {
    if k == 0 || k > total {
        return Err(ThimError::IndexOutOfRange { k, total });
    }
    if phi < 0.0 || phi.is_nan() {
        return Err(ThimError::NegativePhi(phi));
    }
    Ok((phi * (1.0 - k as f64 / total as f64)).exp())
}

/// Symmetric matrix of time-weighted interaction counts between logical
/// qubits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    n: usize,
    hm: Vec<f64>,
    pub phi: f64,
}

impl Heatmap {
    pub fn zeros(n: usize, phi: f64) -> Heatmap {
        Heatmap { n, hm: vec![0.0; n * n], phi }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, phi: f64) -> Heatmap {
        let n = rows.len();
        let hm: Vec<f64> = rows.into_iter().flatten().collect();
        assert_eq!(hm.len(), n * n, "square heatmap");
        Heatmap { n, hm, phi }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.hm[i * self.n + j]
    }

    fn add(&mut self, i: usize, j: usize, w: f64) {
        self.hm[i * self.n + j] += w;
        self.hm[j * self.n + i] += w;
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.hm[i * self.n..(i + 1) * self.n].iter().sum()
    }

    /// Pairs `i < j` with positive weight, hottest first, ties in
    /// lexicographic order.
    pub fn hot_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j) > 0.0)
            .collect();
        pairs.sort_by(|&a, &b| self.get(b.0, b.1).total_cmp(&self.get(a.0, a.1)).then(a.cmp(&b)));
        pairs
    }
}

/// Accumulates `time_weight(k)` onto the operand pair of the k-th gate of
/// `tg`, which must be in reverse execution order.
pub fn build_heatmap(tg: &[Gate], num_logical: usize, phi: f64) -> Result<Heatmap, ThimError> {
    let mut hm = Heatmap::zeros(num_logical, phi);
    for (i, g) in tg.iter().enumerate() {
        let w = time_weight(i + 1, tg.len(), phi)?;
        hm.add(g.qubits[0], g.qubits[1], w);
    }
    Ok(hm)
}

/// Sum over logical pairs of heat times routing cost between their hosts.
pub fn global_cost(hm: &Heatmap, costs: &RoutingCostTable, m: &Mapping) -> f64 {
    let mut c = 0.0;
    for i in 0..hm.len() {
        for j in i + 1..hm.len() {
            let h = hm.get(i, j);
            if h > 0.0 {
                c += h * costs.cost(m.physical(i), m.physical(j));
            }
        }
    }
    c
}

/// Greedy placement: hottest logical pairs claim the cheapest physical pairs.
/// `t2` is indexed by physical qubit and orders the qubits that receive
/// logical qubits without two-qubit interactions.
pub fn greedy_assign(
    hm: &Heatmap,
    costs: &RoutingCostTable,
    partition: &[usize],
    t2: &[f64],
) -> Result<Mapping, ThimError> {
    greedy_pinned(hm, costs, partition, t2, None)
}

/// Greedy placement with logical `pin.0` fixed on physical `pin.1` first.
fn greedy_pinned(
    hm: &Heatmap,
    costs: &RoutingCostTable,
    partition: &[usize],
    t2: &[f64],
    pin: Option<(usize, usize)>,
) -> Result<Mapping, ThimError> {
    let n = hm.len();
    if n > partition.len() {
        return Err(ThimError::PartitionTooSmall { logical: n, physical: partition.len() });
    }
    let mut phys_pairs: Vec<(usize, usize)> = partition
        .iter()
        .enumerate()
        .flat_map(|(x, &a)| partition[x + 1..].iter().map(move |&b| (a.min(b), a.max(b))))
        .collect();
    phys_pairs.sort_by(|&a, &b| costs.cost(a.0, a.1).total_cmp(&costs.cost(b.0, b.1)).then(a.cmp(&b)));

    let centrality = |p: usize| -> f64 {
        partition.iter().filter(|&&o| o != p).map(|&o| costs.cost(p, o)).sum::<f64>()
            / (partition.len().max(2) - 1) as f64
    };

    let mut l2p: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; costs.len()];
    if let Some((l, p)) = pin {
        l2p[l] = Some(p);
        used[p] = true;
    }
    for (a, b) in hm.hot_pairs() {
        match (l2p[a], l2p[b]) {
            (None, None) => {
                let &(p, q) = phys_pairs
                    .iter()
                    .find(|&&(p, q)| !used[p] && !used[q])
                    .expect("two free logicals imply two free physicals");
                let (heavy, light) = if hm.row_sum(b) > hm.row_sum(a) { (b, a) } else { (a, b) };
                let (central, outer) = if centrality(q) < centrality(p) { (q, p) } else { (p, q) };
                l2p[heavy] = Some(central);
                l2p[light] = Some(outer);
                used[p] = true;
                used[q] = true;
            }
            (Some(p), None) | (None, Some(p)) => {
                let free = if l2p[a].is_none() { a } else { b };
                let q = partition
                    .iter()
                    .copied()
                    .filter(|&q| !used[q])
                    .min_by(|&x, &y| costs.cost(p, x).total_cmp(&costs.cost(p, y)).then(x.cmp(&y)))
                    .expect("a free logical implies a free physical");
                l2p[free] = Some(q);
                used[q] = true;
            }
            (Some(_), Some(_)) => {}
        }
    }

    let mut rest: Vec<usize> = partition.iter().copied().filter(|&p| !used[p]).collect();
    rest.sort_by(|&x, &y| t2[y].total_cmp(&t2[x]).then(x.cmp(&y)));
    let mut rest = rest.into_iter();
    let l2p = l2p.into_iter().map(|p| p.unwrap_or_else(|| rest.next().expect("enough partition qubits"))).collect();
    Mapping::new(l2p, costs.len())
}

/// Change in global cost if logical `i` moves to physical `to`, exchanging
/// with whatever logical sits there.
fn move_delta(hm: &Heatmap, costs: &RoutingCostTable, m: &Mapping, i: usize, to: usize) -> f64 {
    let from = m.physical(i);
    let other = m.logical(to);
    let mut delta = 0.0;
    for k in 0..hm.len() {
        if k == i || Some(k) == other {
            continue;
        }
        let pk = m.physical(k);
        let hi = hm.get(i, k);
        if hi > 0.0 {
            delta += hi * (costs.cost(to, pk) - costs.cost(from, pk));
        }
        if let Some(j) = other {
            let hj = hm.get(j, k);
            if hj > 0.0 {
                delta += hj * (costs.cost(from, pk) - costs.cost(to, pk));
            }
        }
    }
    delta
}

/// Hill climbing over exchanges of two logical qubits and moves onto free
/// partition qubits. Takes the first improving move in (logical, partition)
/// order and rescans; stops when no move improves or after `budget` accepted
/// moves. Returns the mapping and the cost after each accepted move.
pub fn refine_mapping_traced(
    m0: &Mapping,
    hm: &Heatmap,
    costs: &RoutingCostTable,
    partition: &[usize],
    budget: usize,
) -> (Mapping, Vec<f64>) {
    let mut m = m0.clone();
    let mut trace = vec![global_cost(hm, costs, &m)];
    let mut accepted = 0;
    'search: while accepted < budget {
        for i in 0..m.num_logical() {
            for &to in partition {
                if to == m.physical(i) || m.logical(to).is_some_and(|j| j < i) {
                    continue;
                }
                if move_delta(hm, costs, &m, i, to) < -IMPROVEMENT_TOLERANCE {
                    m.swap_physical(m.physical(i), to);
                    accepted += 1;
                    trace.push(global_cost(hm, costs, &m));
                    continue 'search;
                }
            }
        }
        break;
    }
    (m, trace)
}

pub fn refine_mapping(
    m0: &Mapping,
    hm: &Heatmap,
    costs: &RoutingCostTable,
    partition: &[usize],
    budget: usize,
) -> Mapping {
    refine_mapping_traced(m0, hm, costs, partition, budget).0
}

/// Default refinement budget: 10 times the squared logical width.
pub fn default_budget(num_logical: usize) -> usize {
    10 * num_logical * num_logical
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThimResult {
    pub mapping: Mapping,
    pub greedy: Mapping,
    pub heatmap: Heatmap,
    pub global_cost: f64,
}

/// Full initial-mapping pass: reverse gate order, heatmap, greedy placement
/// and refinement, repeated from one pinned start per partition qubit; the
/// cheapest refined mapping wins, the unpinned start on ties. `costs` must
/// cover the physical index space of `partition`.
pub fn thim_initial_mapping(
    circuit: &Circuit,
    dev: &DeviceModel,
    costs: &RoutingCostTable,
    partition: &[usize],
    phi: f64,
    budget: usize,
) -> Result<ThimResult, ThimError> {
    let tg = reverse_two_qubit_order(&CircuitDag::build(circuit));
    let heatmap = build_heatmap(&tg, circuit.num_qubits, phi)?;
    let t2: Vec<f64> = dev.qubits.iter().map(|q| q.t2).collect();
    let greedy = greedy_assign(&heatmap, costs, partition, &t2)?;
    let mut mapping = refine_mapping(&greedy, &heatmap, costs, partition, budget);
    let mut global_cost = global_cost(&heatmap, costs, &mapping);
    // restarts: the hottest pair's heavier qubit pinned on each partition qubit
    if let Some(&(a, b)) = heatmap.hot_pairs().first() {
        let heavy = if heatmap.row_sum(b) > heatmap.row_sum(a) { b } else { a };
        for &p in partition {
            let start = greedy_pinned(&heatmap, costs, partition, &t2, Some((heavy, p)))?;
            let candidate = refine_mapping(&start, &heatmap, costs, partition, budget);
            let c = self::global_cost(&heatmap, costs, &candidate);
            if c < global_cost - IMPROVEMENT_TOLERANCE {
                mapping = candidate;
                global_cost = c;
            }
        }
    }
    Ok(ThimResult { mapping, greedy, heatmap, global_cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::fixtures::uniform_device;
    use crate::device::RoutingCostTable;

    fn hop_costs(dev: &DeviceModel) -> RoutingCostTable {
        let d = dev.hop_distances().into_iter().map(|row| row.into_iter().map(|x| x as f64).collect()).collect();
        RoutingCostTable::from_parts(d, vec![0.0; dev.num_qubits], 0.0)
    }

    #[test]
    fn time_weight_examples() {
        assert_eq!(time_weight(3, 7, 0.0).unwrap(), 1.0);
        assert!((time_weight(1, 10, 2.0).unwrap() - 1.8f64.exp()).abs() < 1e-15);
        assert!((time_weight(1, 10, 2.0).unwrap() - 6.049_647).abs() < 1e-6);
        assert_eq!(time_weight(10, 10, 5.0).unwrap(), 1.0);
        assert!(time_weight(0, 10, 1.0).is_err());
        assert!(time_weight(11, 10, 1.0).is_err());
        assert!(time_weight(1, 10, -1.0).is_err());
    }

    #[test]
    fn heatmap_examples() {
        let one = build_heatmap(&[Gate::cx(0, 1)], 2, 3.0).unwrap();
        assert_eq!(one.get(0, 1), 1.0);
        assert_eq!(one.get(1, 0), 1.0);
        let two = build_heatmap(&[Gate::cx(0, 1), Gate::cx(1, 0)], 2, 1.0).unwrap();
        assert!((two.get(0, 1) - (0.5f64.exp() + 1.0)).abs() < 1e-15);
        assert!((two.get(0, 1) - 2.648_721).abs() < 1e-6);
        let counts = build_heatmap(&[Gate::cx(0, 1), Gate::cz(1, 2), Gate::cx(0, 1)], 3, 0.0).unwrap();
        assert_eq!(counts.get(0, 1), 2.0);
        assert_eq!(counts.get(1, 2), 1.0);
        assert_eq!(counts.get(0, 2), 0.0);
        assert_eq!(counts.get(1, 1), 0.0);
    }

    #[test]
    fn global_cost_examples() {
        let hm = Heatmap::from_rows(vec![vec![0.0, 2.0], vec![2.0, 0.0]], 1.0);
        let costs = RoutingCostTable::from_parts(vec![vec![0.0, 3.0], vec![3.0, 0.0]], vec![0.0, 0.0], 0.0);
        let m = Mapping::new(vec![0, 1], 2).unwrap();
        assert_eq!(global_cost(&hm, &costs, &m), 6.0);
        let zero = RoutingCostTable::from_parts(vec![vec![0.0; 2]; 2], vec![0.0, 0.0], 0.0);
        assert_eq!(global_cost(&hm, &zero, &m), 0.0);
    }

    #[test]
    fn single_pair_is_forced() {
        let dev = uniform_device(2, &[(0, 1)], 0.01);
        let hm = build_heatmap(&[Gate::cx(0, 1)], 2, 1.0).unwrap();
        let m = greedy_assign(&hm, &hop_costs(&dev), &[0, 1], &[1.0, 1.0]).unwrap();
        let mut layout = m.layout().to_vec();
        layout.sort_unstable();
        assert_eq!(layout, vec![0, 1]);
    }

    #[test]
    fn hottest_pair_gets_cheapest_edge() {
        // path 0-1-2-3 where the middle coupler is cheapest
        let mut dev = uniform_device(4, &[(0, 1), (1, 2), (2, 3)], 0.02);
        dev.edges[1].two_qubit_error = 0.001;
        let costs = RoutingCostTable::build(&dev, 0.0, 0.0).unwrap();
        let tg = [Gate::cx(0, 1), Gate::cx(2, 3), Gate::cx(2, 3), Gate::cx(2, 3)];
        let hm = build_heatmap(&tg, 4, 0.0).unwrap();
        let t2: Vec<f64> = dev.qubits.iter().map(|q| q.t2).collect();
        let m = greedy_assign(&hm, &costs, &[0, 1, 2, 3], &t2).unwrap();
        let hot = (m.physical(2).min(m.physical(3)), m.physical(2).max(m.physical(3)));
        assert_eq!(hot, (1, 2));
    }

    #[test]
    fn hub_goes_to_center() {
        let dev = uniform_device(3, &[(0, 1), (1, 2)], 0.01);
        let costs = hop_costs(&dev);
        let hm = build_heatmap(&[Gate::cx(0, 1), Gate::cx(0, 2)], 3, 1.0).unwrap();
        let m = greedy_assign(&hm, &costs, &[0, 1, 2], &[1.0; 3]).unwrap();
        assert_eq!(m.physical(0), 1);
        let best = permutations(3, 3)
            .into_iter()
            .map(|l| global_cost(&hm, &costs, &Mapping::new(l, 3).unwrap()))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(global_cost(&hm, &costs, &m), best);
    }

    fn permutations(n: usize, k: usize) -> Vec<Vec<usize>> {
        fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for p in 0..n {
                if !cur.contains(&p) {
                    cur.push(p);
                    rec(n, k, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(n, k, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn refinement_repairs_bad_start() {
        let dev = uniform_device(3, &[(0, 1), (1, 2)], 0.01);
        let costs = hop_costs(&dev);
        let hm = build_heatmap(&[Gate::cx(0, 1), Gate::cx(0, 2)], 3, 0.0).unwrap();
        let bad = Mapping::new(vec![0, 1, 2], 3).unwrap();
        assert_eq!(global_cost(&hm, &costs, &bad), 3.0);
        let (m, trace) = refine_mapping_traced(&bad, &hm, &costs, &[0, 1, 2], 100);
        assert_eq!(global_cost(&hm, &costs, &m), 2.0);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(refine_mapping(&bad, &hm, &costs, &[0, 1, 2], 0), bad);
        assert_eq!(refine_mapping(&m, &hm, &costs, &[0, 1, 2], 100), m);
    }

    #[test]
    fn refinement_uses_free_qubits() {
        // one logical pair parked on the ends of a 3-path; moving onto the free
        // middle qubit fixes it
        let dev = uniform_device(3, &[(0, 1), (1, 2)], 0.01);
        let costs = hop_costs(&dev);
        let hm = build_heatmap(&[Gate::cx(0, 1)], 2, 1.0).unwrap();
        let start = Mapping::new(vec![0, 2], 3).unwrap();
        let m = refine_mapping(&start, &hm, &costs, &[0, 1, 2], 10);
        assert_eq!(global_cost(&hm, &costs, &m), 1.0);
    }

    #[test]
    fn no_two_qubit_gates_orders_by_t2() {
        let dev = DeviceModel::builtin("perth").unwrap();
        let costs = RoutingCostTable::build(&dev, 1.0, 0.5).unwrap();
        let c = Circuit::from_gates("h", 2, [Gate::h(0), Gate::h(1)]).unwrap();
        let r = thim_initial_mapping(&c, &dev, &costs, &[1, 3, 5], 1.0, 10).unwrap();
        let mut by_t2 = [1, 3, 5];
        by_t2.sort_by(|&a, &b| dev.qubits[b].t2.total_cmp(&dev.qubits[a].t2));
        assert_eq!(r.mapping.layout(), &by_t2[..2]);
    }

    #[test]
    fn fig8_style_needs_no_swap() {
        let dev = DeviceModel::builtin("perth").unwrap();
        let costs = RoutingCostTable::build(&dev, 1.0, 0.5).unwrap();
        let c = Circuit::from_gates("f8", 3, [Gate::cx(0, 1), Gate::cx(1, 2)]).unwrap();
        let r = thim_initial_mapping(&c, &dev, &costs, &[0, 1, 2, 3], 1.0, 90).unwrap();
        let m = &r.mapping;
        assert!(dev.has_edge(m.physical(0), m.physical(1)));
        assert!(dev.has_edge(m.physical(1), m.physical(2)));
    }

    #[test]
    fn rejects_small_partition() {
        let hm = Heatmap::zeros(3, 1.0);
        let costs = RoutingCostTable::from_parts(vec![vec![0.0; 2]; 2], vec![0.0; 2], 0.0);
        assert_eq!(
            greedy_assign(&hm, &costs, &[0, 1], &[1.0, 1.0]),
            Err(ThimError::PartitionTooSmall { logical: 3, physical: 2 })
        );
        assert!(Mapping::new(vec![0, 0], 2).is_err());
    }
}
