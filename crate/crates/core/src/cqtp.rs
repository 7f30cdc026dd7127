//! Calibration-driven qubit partitioning: agglomerative community merging on
//! the coupling graph, scored by modularity gain plus coherence and error
//! terms, stopped when a community of the requested size appears.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::DeviceModel;

/// Two rewards closer than this are treated as equal and the deterministic
/// tie-break decides.
pub const REWARD_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CqtpError {
    #[error("modularity is undefined on a graph with no edges")]
    NoEdges,
    #[error("communities {0:?} and {1:?} are not adjacent")]
    NotAdjacent(Vec<usize>, Vec<usize>),
    #[error("communities must be non-empty, disjoint and cover all {0} qubits")]
    InvalidCover(usize),
    #[error("target size {target} outside 1..={num_qubits}")]
    TargetOutOfRange { target: usize, num_qubits: usize },
    #[error("no connected set of {0} qubits exists on this device")]
    NoConnectedSubgraph(usize),
    #[error("expected {expected} T2 scores, got {got}")]
    ScoreLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub omega1: f64,
    pub omega2: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { omega1: 0.5, omega2: 0.5 }
    }
}

/// Modularity of a cover: sum over communities of e_ii - a_i^2, with e_ii the
/// fraction of edges inside community i and a_i the fraction of edge ends
/// attached to it.
pub fn modularity(communities: &[Vec<usize>], dev: &DeviceModel) -> Result<f64, CqtpError> {
    let m = dev.edges.len();
    if m == 0 {
        return Err(CqtpError::NoEdges);
    }
    let label = cover_labels(communities, dev.num_qubits)?;
    let k = communities.len();
    let mut inside = vec![0usize; k];
    let mut ends = vec![0usize; k];
    for e in &dev.edges {
        let (a, b) = (label[e.q0], label[e.q1]);
        ends[a] += 1;
        ends[b] += 1;
        if a == b {
            inside[a] += 1;
        }
    }
    let m = m as f64;
    Ok((0..k)
        .map(|i| {
            let a = ends[i] as f64 / (2.0 * m);
            inside[i] as f64 / m - a * a
        })
        .sum())
}

fn cover_labels(communities: &[Vec<usize>], n: usize) -> Result<Vec<usize>, CqtpError> {
    let mut label = vec![usize::MAX; n];
    for (i, c) in communities.iter().enumerate() {
        if c.is_empty() {
            return Err(CqtpError::InvalidCover(n));
        }
        for &q in c {
            if q >= n || label[q] != usize::MAX {
                return Err(CqtpError::InvalidCover(n));
            }
            label[q] = i;
        }
    }
    if label.contains(&usize::MAX) {
        return Err(CqtpError::InvalidCover(n));
    }
    Ok(label)
}

/// Change in modularity from merging `ci` and `cj`: 2 (e_ij - a_i a_j), where
/// e_ij is half the fraction of edges running between them. Only the two
/// merged communities enter, so the rest of the cover is not needed.
pub fn modularity_gain(ci: &[usize], cj: &[usize], dev: &DeviceModel) -> Result<f64, CqtpError> {
    let m = dev.edges.len() as f64;
    if m == 0.0 {
        return Err(CqtpError::NoEdges);
    }
    let between = between_edges(ci, cj, dev).count() as f64;
    let deg = |c: &[usize]| c.iter().map(|&q| dev.degree(q)).sum::<usize>() as f64;
    let (ai, aj) = (deg(ci) / (2.0 * m), deg(cj) / (2.0 * m));
    Ok(2.0 * (between / (2.0 * m) - ai * aj))
}

fn between_edges<'a>(
    ci: &'a [usize],
    cj: &'a [usize],
    dev: &'a DeviceModel,
) -> impl Iterator<Item = &'a crate::device::EdgeRecord> + 'a {
    dev.edges
        .iter()
        .filter(move |e| (ci.contains(&e.q0) && cj.contains(&e.q1)) || (ci.contains(&e.q1) && cj.contains(&e.q0)))
}

/// Mean normalized T2 score of a community.
pub fn mean_score(members: &[usize], scores: &[f64]) -> f64 {
    members.iter().map(|&q| scores[q]).sum::<f64>() / members.len() as f64
}

/// Coherence similarity of two communities from their mean scores.
pub fn t2_similarity(mi: f64, mj: f64) -> f64 {
    2.0 * mi * mj / (mi * mi + mj * mj) * ((mi + mj) / 2.0).sqrt()
}

/// (E + V) / 2 with E the mean two-qubit success rate over edges joining the
/// communities and V the mean readout success rate over their members.
pub fn error_term(ci: &[usize], cj: &[usize], dev: &DeviceModel) -> Result<f64, CqtpError> {
    let (sum, count) = between_edges(ci, cj, dev).fold((0.0, 0usize), |(s, c), e| (s + e.fidelity(), c + 1));
    if count == 0 {
        return Err(CqtpError::NotAdjacent(ci.to_vec(), cj.to_vec()));
    }
    let readout: f64 = ci.iter().chain(cj).map(|&q| 1.0 - dev.qubits[q].readout_error).sum();
    let e = sum / count as f64;
    let v = readout / (ci.len() + cj.len()) as f64;
    Ok((e + v) / 2.0)
}

/// Merge reward F = dQ + omega1 * T2_SIM + omega2 * EV for two adjacent
/// communities; `scores` are the normalized T2 values per qubit.
pub fn reward(
    ci: &[usize],
    cj: &[usize],
    dev: &DeviceModel,
    scores: &[f64],
    w: RewardWeights,
) -> Result<f64, CqtpError> {
    check_scores(dev, scores)?;
    let ev = error_term(ci, cj, dev)?;
    let dq = modularity_gain(ci, cj, dev)?;
    let sim = t2_similarity(mean_score(ci, scores), mean_score(cj, scores));
    Ok(dq + w.omega1 * sim + w.omega2 * ev)
}

fn check_scores(dev: &DeviceModel, scores: &[f64]) -> Result<(), CqtpError> {
    if scores.len() != dev.num_qubits {
        return Err(CqtpError::ScoreLength { expected: dev.num_qubits, got: scores.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    /// Sorted member qubits.
    pub members: Vec<usize>,
    /// Child node ids; `None` for leaves.
    pub children: Option<(usize, usize)>,
    /// Reward of the merge that created this node.
    pub reward: Option<f64>,
}

/// Binary merge tree. Nodes `0..n` are the single-qubit leaves; merged nodes
/// follow in merge order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyTree {
    pub nodes: Vec<TreeNode>,
    /// One root per connected component, by smallest member.
    pub roots: Vec<usize>,
}

impl HierarchyTree {
    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_none()).count()
    }

    pub fn merges(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.children.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    /// Sorted physical qubits.
    pub members: Vec<usize>,
    /// Rewards of the merges that built the selected community, in merge order.
    pub reward_trail: Vec<f64>,
}

struct Candidate {
    a: usize,
    b: usize,
    reward: f64,
    size: usize,
    /// Smallest member of each side; the first is the union's minimum.
    key: (usize, usize),
}

impl Candidate {
    /// Higher reward first, then the smaller tie-break key.
    fn beats(&self, other: &Candidate) -> bool {
        if self.reward > other.reward + REWARD_TIE_TOLERANCE {
            true
        } else if other.reward > self.reward + REWARD_TIE_TOLERANCE {
            false
        } else {
            self.key < other.key
        }
    }
}

/// Live agglomeration state: active node ids into `nodes`.
struct Merger<'a> {
    dev: &'a DeviceModel,
    scores: &'a [f64],
    w: RewardWeights,
    nodes: Vec<TreeNode>,
    active: Vec<usize>,
}

impl<'a> Merger<'a> {
    fn new(dev: &'a DeviceModel, scores: &'a [f64], w: RewardWeights) -> Self {
        let nodes = (0..dev.num_qubits).map(|q| TreeNode { members: vec![q], children: None, reward: None }).collect();
        Merger { dev, scores, w, nodes, active: (0..dev.num_qubits).collect() }
    }

    fn adjacent(&self, a: &[usize], b: &[usize]) -> bool {
        a.iter().any(|&u| self.dev.neighbors(u).any(|v| b.contains(&v)))
    }

    fn candidates(&self) -> Vec<Candidate> {
        let mut out = Vec::new();
        for (x, &a) in self.active.iter().enumerate() {
            for &b in &self.active[x + 1..] {
                let (ma, mb) = (&self.nodes[a].members, &self.nodes[b].members);
                if !self.adjacent(ma, mb) {
                    continue;
                }
                let reward = reward(ma, mb, self.dev, self.scores, self.w).expect("adjacent communities");
                let (lo, hi) = if ma[0] < mb[0] { (ma[0], mb[0]) } else { (mb[0], ma[0]) };
                out.push(Candidate { a, b, reward, size: ma.len() + mb.len(), key: (lo, hi) });
            }
        }
        out
    }

    fn merge(&mut self, c: &Candidate) -> usize {
        let mut members = self.nodes[c.a].members.clone();
        members.extend(&self.nodes[c.b].members);
        members.sort_unstable();
        let id = self.nodes.len();
        self.nodes.push(TreeNode { members, children: Some((c.a, c.b)), reward: Some(c.reward) });
        self.active.retain(|&x| x != c.a && x != c.b);
        self.active.push(id);
        id
    }

    fn trail(&self, id: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if let (Some((l, r)), Some(f)) = (self.nodes[n].children, self.nodes[n].reward) {
                out.push((n, f));
                stack.push(l);
                stack.push(r);
            }
        }
        out.sort_by_key(|&(n, _)| n);
        out
    }
}

fn best(cands: impl Iterator<Item = Candidate>) -> Option<Candidate> {
    cands.fold(None, |acc: Option<Candidate>, c| match acc {
        Some(b) if !c.beats(&b) => Some(b),
        _ => Some(c),
    })
}

/// Full merge tree: repeatedly merges the adjacent pair with the highest
/// reward until no adjacent pair remains (one root per component).
pub fn build_hierarchy(dev: &DeviceModel, scores: &[f64], w: RewardWeights) -> Result<HierarchyTree, CqtpError> {
    check_scores(dev, scores)?;
    if dev.edges.is_empty() && dev.num_qubits > 1 {
        return Err(CqtpError::NoEdges);
    }
    let mut state = Merger::new(dev, scores, w);
    while let Some(c) = best(state.candidates().into_iter()) {
        state.merge(&c);
    }
    let mut roots = state.active.clone();
    roots.sort_by_key(|&r| state.nodes[r].members[0]);
    Ok(HierarchyTree { nodes: state.nodes, roots })
}

/// Selection value of a single qubit, also used to order qubits for trimming.
fn qubit_value(dev: &DeviceModel, scores: &[f64], w: RewardWeights, q: usize) -> f64 {
    w.omega1 * scores[q] + w.omega2 * (1.0 - dev.qubits[q].readout_error)
}

/// Runs the merge loop until a community of exactly `n_target` qubits forms.
/// Merges that would overshoot are held back while a non-overshooting merge
/// exists; if none does, the smallest overshooting merge is taken and then
/// trimmed back to size by removing low-value qubits whose removal keeps the
/// community connected.
pub fn select_partition(
    dev: &DeviceModel,
    scores: &[f64],
    w: RewardWeights,
    n_target: usize,
) -> Result<Partition, CqtpError> {
    check_scores(dev, scores)?;
    let n = dev.num_qubits;
    if n_target == 0 || n_target > n {
        return Err(CqtpError::TargetOutOfRange { target: n_target, num_qubits: n });
    }
    if !dev.components().iter().any(|c| c.len() >= n_target) {
        return Err(CqtpError::NoConnectedSubgraph(n_target));
    }
    if n_target == 1 {
        let q = (0..n)
            .max_by(|&a, &b| qubit_value(dev, scores, w, a).total_cmp(&qubit_value(dev, scores, w, b)).then(b.cmp(&a)))
            .expect("device has qubits");
        return Ok(Partition { members: vec![q], reward_trail: Vec::new() });
    }
    let mut state = Merger::new(dev, scores, w);
    loop {
        let cands = state.candidates();
        if cands.is_empty() {
            return Err(CqtpError::NoConnectedSubgraph(n_target));
        }
        let fitting = best(cands.iter().filter(|c| c.size <= n_target).map(clone_candidate));
        if let Some(c) = fitting {
            let id = state.merge(&c);
            if state.nodes[id].members.len() == n_target {
                return Ok(partition_from(&state, id, state.nodes[id].members.clone()));
            }
            continue;
        }
        let smallest = cands.iter().map(|c| c.size).min().expect("non-empty");
        let c = best(cands.into_iter().filter(|c| c.size == smallest)).expect("non-empty");
        let id = state.merge(&c);
        let members = trim(dev, scores, w, state.nodes[id].members.clone(), n_target);
        return Ok(partition_from(&state, id, members));
    }
}

fn clone_candidate(c: &Candidate) -> Candidate {
    Candidate { a: c.a, b: c.b, reward: c.reward, size: c.size, key: c.key }
}

fn partition_from(state: &Merger<'_>, id: usize, members: Vec<usize>) -> Partition {
    Partition { members, reward_trail: state.trail(id).into_iter().map(|(_, f)| f).collect() }
}

fn trim(dev: &DeviceModel, scores: &[f64], w: RewardWeights, mut members: Vec<usize>, n_target: usize) -> Vec<usize> {
    while members.len() > n_target {
        let victim = members
            .iter()
            .copied()
            .filter(|&q| {
                let rest: Vec<usize> = members.iter().copied().filter(|&x| x != q).collect();
                dev.induces_connected(&rest)
            })
            .min_by(|&a, &b| qubit_value(dev, scores, w, a).total_cmp(&qubit_value(dev, scores, w, b)).then(a.cmp(&b)))
            .expect("a connected graph always has a non-cut vertex");
        members.retain(|&q| q != victim);
    }
    members
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::fixtures::uniform_device;
    use crate::device::{normalize_t2, CalibrationRecord, EdgeRecord};

    const TRIANGLES: [(usize, usize); 6] = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];

    #[test]
    fn modularity_examples() {
        let dev = uniform_device(6, &TRIANGLES, 0.01);
        let q = modularity(&[vec![0, 1, 2], vec![3, 4, 5]], &dev).unwrap();
        assert!((q - 0.5).abs() < 1e-15);
        assert_eq!(modularity(&[(0..6).collect()], &dev).unwrap(), 0.0);
        let singles: Vec<Vec<usize>> = (0..6).map(|q| vec![q]).collect();
        let expected = -(0..6).map(|_| (2.0f64 / 12.0).powi(2)).sum::<f64>();
        assert!((modularity(&singles, &dev).unwrap() - expected).abs() < 1e-15);
        let empty = uniform_device(2, &[], 0.01);
        assert_eq!(modularity(&[vec![0], vec![1]], &empty), Err(CqtpError::NoEdges));
        assert_eq!(modularity(&[vec![0, 1]], &dev), Err(CqtpError::InvalidCover(6)));
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(t2_similarity(1.0, 1.0), 1.0);
        assert!((t2_similarity(0.5, 0.5) - 0.5f64.sqrt()).abs() < 1e-15);
        // factors 8/17 and sqrt(5/8)
        assert!((t2_similarity(1.0, 0.25) - 8.0 / 17.0 * 0.625f64.sqrt()).abs() < 1e-15);
        assert!((t2_similarity(1.0, 0.25) - 0.372_033).abs() < 1e-6);
        assert_eq!(t2_similarity(0.3, 0.8), t2_similarity(0.8, 0.3));
    }

    fn two_qubit_device(ro: [f64; 2], err: f64) -> DeviceModel {
        let qubits = (0..2)
            .map(|i| CalibrationRecord {
                qubit: i,
                t1: 100.0,
                t2: 90.0 + i as f64,
                readout_error: ro[i],
                single_qubit_error: 0.0,
            })
            .collect();
        let edges = vec![EdgeRecord { q0: 0, q1: 1, two_qubit_error: err, gate_duration_ns: 100.0 }];
        DeviceModel::new("pair", 2, qubits, edges).unwrap()
    }

    #[test]
    fn error_term_examples() {
        assert_eq!(error_term(&[0], &[1], &two_qubit_device([0.0, 0.0], 0.0)).unwrap(), 1.0);
        let ev = error_term(&[0], &[1], &two_qubit_device([0.02881, 0.007568], 1.111e-3)).unwrap();
        let e = 1.0 - 1.111e-3;
        let v = (1.0 - 0.02881 + 1.0 - 0.007568) / 2.0;
        assert!((ev - (e + v) / 2.0).abs() < 1e-15);
        assert!((ev - 0.990350).abs() < 1e-6);
        let dev = uniform_device(3, &[(0, 1)], 0.01);
        assert!(matches!(error_term(&[0], &[2], &dev), Err(CqtpError::NotAdjacent(..))));
    }

    #[test]
    fn reward_is_symmetric_and_reduces_to_modularity_gain() {
        let dev = DeviceModel::builtin("perth").unwrap();
        let s = normalize_t2(&dev, 1e-8).unwrap();
        let w = RewardWeights::default();
        let f = reward(&[1, 3], &[5], &dev, &s, w).unwrap();
        assert_eq!(f, reward(&[5], &[1, 3], &dev, &s, w).unwrap());
        let zero = RewardWeights { omega1: 0.0, omega2: 0.0 };
        let dq = reward(&[1], &[3], &dev, &s, zero).unwrap();
        let before = modularity(&(0..7).map(|q| vec![q]).collect::<Vec<_>>(), &dev).unwrap();
        let after = modularity(&[vec![0], vec![1, 3], vec![2], vec![4], vec![5], vec![6]], &dev).unwrap();
        assert!((dq - (after - before)).abs() < 1e-15);
        assert!(reward(&[0], &[6], &dev, &s, w).is_err());
    }

    #[test]
    fn four_cycle_first_merge() {
        let dev = uniform_device(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], 0.02);
        let m = 0.6;
        let scores = vec![m; 4];
        let w = RewardWeights { omega1: 0.3, omega2: 0.7 };
        let tree = build_hierarchy(&dev, &scores, w).unwrap();
        let first = tree.merges().next().unwrap();
        // all four edges tie; the pair with the smallest members wins
        assert_eq!(first.members, vec![0, 1]);
        let singles: Vec<Vec<usize>> = (0..4).map(|q| vec![q]).collect();
        let merged = vec![vec![0, 1], vec![2], vec![3]];
        let dq = modularity(&merged, &dev).unwrap() - modularity(&singles, &dev).unwrap();
        let ev = (0.98 + 0.99) / 2.0;
        let expected = dq + 0.3 * m.sqrt() + 0.7 * ev;
        assert!((first.reward.unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn hierarchy_shape() {
        let dev = uniform_device(2, &[(0, 1)], 0.01);
        let s = normalize_t2(&dev, 1e-8).unwrap();
        let tree = build_hierarchy(&dev, &s, RewardWeights::default()).unwrap();
        assert_eq!(tree.nodes.len(), 3);
        assert_eq!(tree.nodes[tree.roots[0]].members, vec![0, 1]);

        let g = DeviceModel::builtin("guadalupe").unwrap();
        let s = normalize_t2(&g, 1e-8).unwrap();
        let tree = build_hierarchy(&g, &s, RewardWeights::default()).unwrap();
        assert_eq!(tree.merges().count(), 15);
        assert_eq!(tree.num_leaves(), 16);
        for node in tree.merges() {
            assert!(g.induces_connected(&node.members));
            let (l, r) = node.children.unwrap();
            let mut union = tree.nodes[l].members.clone();
            union.extend(&tree.nodes[r].members);
            union.sort_unstable();
            assert_eq!(union, node.members);
        }
    }

    #[test]
    fn disconnected_device_has_one_root_per_component() {
        let dev = uniform_device(5, &[(0, 1), (1, 2), (3, 4)], 0.01);
        let s = normalize_t2(&dev, 1e-8).unwrap();
        let tree = build_hierarchy(&dev, &s, RewardWeights::default()).unwrap();
        assert_eq!(tree.roots.len(), 2);
        assert_eq!(tree.nodes[tree.roots[1]].members, vec![3, 4]);
        assert!(select_partition(&dev, &s, RewardWeights::default(), 3).is_ok());
        assert_eq!(select_partition(&dev, &s, RewardWeights::default(), 4), Err(CqtpError::NoConnectedSubgraph(4)));
    }

    /// Perth topology with Q3..Q6 long-lived and the Q4-Q5 coupler best.
    fn fig6_instance() -> DeviceModel {
        let t2 = [60.0, 70.0, 50.0, 180.0, 200.0, 210.0, 170.0];
        let qubits = t2
            .iter()
            .enumerate()
            .map(|(i, &t)| CalibrationRecord {
                qubit: i,
                t1: 150.0,
                t2: t,
                readout_error: 0.02,
                single_qubit_error: 2e-4,
            })
            .collect();
        let perth = DeviceModel::builtin("perth").unwrap();
        let edges = perth
            .edges
            .iter()
            .map(|e| EdgeRecord { two_qubit_error: if e.endpoints() == (4, 5) { 0.003 } else { 0.01 }, ..e.clone() })
            .collect();
        DeviceModel::new("fig6", 7, qubits, edges).unwrap()
    }

    #[test]
    fn fig6_style_instance() {
        let dev = fig6_instance();
        let s = normalize_t2(&dev, 1e-8).unwrap();
        let w = RewardWeights { omega1: 1.0, omega2: 0.5 };
        let tree = build_hierarchy(&dev, &s, w).unwrap();
        assert_eq!(tree.merges().next().unwrap().members, vec![4, 5]);
        let p = select_partition(&dev, &s, w, 4).unwrap();
        assert_eq!(p.members, vec![3, 4, 5, 6]);
        assert_eq!(p.reward_trail.len(), 3);
    }

    #[test]
    fn selection_edge_cases() {
        let dev = DeviceModel::builtin("perth").unwrap();
        let s = normalize_t2(&dev, 1e-8).unwrap();
        let w = RewardWeights::default();
        let all = select_partition(&dev, &s, w, 7).unwrap();
        assert_eq!(all.members, (0..7).collect::<Vec<_>>());
        let one = select_partition(&dev, &s, w, 1).unwrap();
        let value = |q: usize| w.omega1 * s[q] + w.omega2 * (1.0 - dev.qubits[q].readout_error);
        let best = (0..7).fold(0, |b, q| if value(q) > value(b) { q } else { b });
        assert_eq!(one.members, vec![best]);
        assert!(select_partition(&dev, &s, w, 0).is_err());
        assert!(select_partition(&dev, &s, w, 8).is_err());
    }

    #[test]
    fn trimming_keeps_connectivity() {
        // a 4-cycle where every pair merge yields size 2, then 4; asking for 3
        // from two pairs forces an overshoot
        let dev = uniform_device(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], 0.01);
        let s = normalize_t2(&dev, 1e-8).unwrap();
        let p = select_partition(&dev, &s, RewardWeights::default(), 3).unwrap();
        assert_eq!(p.members.len(), 3);
        assert!(dev.induces_connected(&p.members));
    }
}
