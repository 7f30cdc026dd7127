//! End-to-end compilation: partition, initial mapping, routing, optional
//! noisy simulation, and report assembly over a corpus.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{depth, Circuit, CircuitDag};
use crate::cqtp::{select_partition, RewardWeights};
use crate::device::{default_dwell_time, normalize_t2, DeviceError, DeviceModel, RoutingCostTable, DEFAULT_EPSILON};
use crate::sim::{simulate_ideal, simulate_noisy, uhlmann_fidelity, DensityMatrix, NoiseSpec};
use crate::thim::{default_budget, thim_initial_mapping, Mapping};
use crate::tswap::{nonconformant_gates, route, route_baseline, RoutedCircuit, RouterParams};

/// Widest circuit simulated with noise when `simulate` is set.
pub const MAX_SIMULATED_WIDTH: usize = 5;

/// Sweeps larger than this need explicit permission.
pub const MAX_SWEEP_POINTS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RouterChoice {
    Tram,
    Baseline,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouterKind {
    Tram,
    Baseline,
}

impl RouterChoice {
    fn kinds(self) -> &'static [RouterKind] {
        match self {
            RouterChoice::Tram => &[RouterKind::Tram],
            RouterChoice::Baseline => &[RouterKind::Baseline],
            RouterChoice::Both => &[RouterKind::Tram, RouterKind::Baseline],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Built-in device name or path to a device JSON file.
    pub device: String,
    pub omega1: f64,
    pub omega2: f64,
    /// Heatmap time-decay exponent.
    pub phi: f64,
    /// Weight of the dwell penalty in routing costs.
    pub eta: f64,
    /// Lookahead weight.
    pub mu: f64,
    /// Decay increment per SWAP.
    pub delta: f64,
    /// T2 normalization guard.
    pub epsilon: f64,
    /// Accepted-move budget for mapping refinement; 10 n^2 when unset.
    pub refine_budget: Option<usize>,
    pub router: RouterChoice,
    pub simulate: bool,
    /// Reserved; every stage is deterministic.
    pub seed: u64,
    /// Dwell time for the penalty term; one mean two-qubit gate duration when unset.
    pub dwell_time_us: Option<f64>,
    pub decay_reset: Option<usize>,
    pub decompose_swaps: bool,
    pub strict_guard: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let r = RouterParams::default();
        PipelineConfig {
            device: "guadalupe".into(),
            omega1: 0.5,
            omega2: 0.5,
            phi: 1.0,
            eta: 0.5,
            mu: r.mu,
            delta: r.delta,
            epsilon: DEFAULT_EPSILON,
            refine_budget: None,
            router: RouterChoice::Both,
            simulate: false,
            seed: 0,
            dwell_time_us: None,
            decay_reset: None,
            decompose_swaps: r.decompose_swaps,
            strict_guard: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("circuit needs {width} qubits but the device has {device}")]
    Width { width: usize, device: usize },
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("invariant violated for {circuit} ({router:?}): {message}")]
    Invariant { circuit: String, router: RouterKind, message: String },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Device(_) => 1,
            PipelineError::Invariant { .. } => 3,
            _ => 2,
        }
    }
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(PipelineError::Config(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("omega1", self.omega1)?;
        unit("omega2", self.omega2)?;
        unit("mu", self.mu)?;
        for (name, v) in [("phi", self.phi), ("eta", self.eta), ("delta", self.delta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PipelineError::Config(format!("{name} = {v} must be finite and non-negative")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(PipelineError::Config(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if let Some(t) = self.dwell_time_us {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(PipelineError::Config(format!("dwell time {t} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> RewardWeights {
        RewardWeights { omega1: self.omega1, omega2: self.omega2 }
    }

    pub fn router_params(&self) -> RouterParams {
        RouterParams {
            mu: self.mu,
            delta: self.delta,
            decompose_swaps: self.decompose_swaps,
            decay_reset: self.decay_reset,
            strict_guard: self.strict_guard,
        }
    }

    pub fn load_device(&self) -> Result<DeviceModel, PipelineError> {
        load_device(&self.device)
    }
}

/// Opens `spec` as a file if it exists, otherwise as a built-in name.
pub fn load_device(spec: &str) -> Result<DeviceModel, PipelineError> {
    if Path::new(spec).is_file() {
        Ok(DeviceModel::load(spec)?)
    } else {
        Ok(DeviceModel::builtin(spec)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub circuit: String,
    pub router: RouterKind,
    pub width: usize,
    pub gates_before: usize,
    pub gates_after: usize,
    pub two_qubit_before: usize,
    pub two_qubit_after: usize,
    pub depth_before: usize,
    pub depth_after: usize,
    pub swaps: usize,
    pub guard_trips: usize,
    pub global_cost: f64,
    pub partition: Vec<usize>,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityRecord {
    pub circuit: String,
    pub router: RouterKind,
    pub fidelity: f64,
    pub ideal_depth: usize,
}

#[derive(Debug, Clone)]
pub struct RouterOutput {
    pub router: RouterKind,
    /// Routed circuit on device indices.
    pub routed: RoutedCircuit,
    pub row: ReportRow,
}

#[derive(Debug, Clone)]
pub struct Compilation {
    pub circuit: String,
    pub partition: Vec<usize>,
    /// Initial mapping on device indices.
    pub initial: Mapping,
    pub outputs: Vec<RouterOutput>,
}

fn relabel(routed: RoutedCircuit, members: &[usize], dev: &DeviceModel) -> RoutedCircuit {
    let mut circuit = Circuit::new(routed.circuit.name.clone(), dev.num_qubits).with_clbits(routed.circuit.num_clbits);
    for g in routed.circuit.gates() {
        circuit.push(g.remapped(|p| members[p])).expect("partition members are device qubits");
    }
    let up = |p: usize| members[p];
    RoutedCircuit {
        circuit,
        initial: routed.initial.relabeled(up, dev.num_qubits),
        final_mapping: routed.final_mapping.relabeled(up, dev.num_qubits),
        swap_edges: routed.swap_edges.iter().map(|&(a, b)| (up(a).min(up(b)), up(a).max(up(b)))).collect(),
        decay: routed.decay,
        guard_trips: routed.guard_trips,
    }
}

/// Noisy-versus-ideal fidelity of a routed circuit on its own device.
fn routed_fidelity(c: &Circuit, dev: &DeviceModel) -> Result<f64, PipelineError> {
    let ideal =
        DensityMatrix::from_pure(&simulate_ideal(c).map_err(stage("simulation"))?).map_err(stage("simulation"))?;
    let noisy = simulate_noisy(c, dev, &NoiseSpec::default()).map_err(stage("simulation"))?;
    uhlmann_fidelity(&noisy, &ideal).map_err(stage("simulation"))
}

/// Partitions the device, maps and routes `circuit` with each selected
/// router. All routers share the partition and initial mapping.
pub fn compile_one(cfg: &PipelineConfig, dev: &DeviceModel, circuit: &Circuit) -> Result<Compilation, PipelineError> {
    cfg.validate()?;
    let n = circuit.num_qubits;
    if n > dev.num_qubits {
        return Err(PipelineError::Width { width: n, device: dev.num_qubits });
    }
    let scores = normalize_t2(dev, cfg.epsilon).map_err(stage("partition"))?;
    let partition = select_partition(dev, &scores, cfg.weights(), n).map_err(stage("partition"))?;
    let members = partition.members;
    let sub = dev.induced(&members);
    let circuit_depth = depth(circuit);
    let dwell = cfg.dwell_time_us.unwrap_or_else(|| default_dwell_time(&sub, 1));
    let costs = RoutingCostTable::build(&sub, dwell, cfg.eta).map_err(stage("costs"))?;
    let local: Vec<usize> = (0..n).collect();
    let budget = cfg.refine_budget.unwrap_or_else(|| default_budget(n));
    let thim = thim_initial_mapping(circuit, &sub, &costs, &local, cfg.phi, budget).map_err(stage("mapping"))?;
    let dag = CircuitDag::build(circuit);
    let params = cfg.router_params();

    let mut outputs = Vec::new();
    for &kind in cfg.router.kinds() {
        let routed = match kind {
            RouterKind::Tram => route(&dag, &thim.mapping, &sub, &costs, params),
            RouterKind::Baseline => route_baseline(&dag, &thim.mapping, &sub, params),
        }
        .map_err(stage("routing"))?;
        if routed.guard_trips > 0 {
            warn!("{}: progress guard tripped {} times ({kind:?})", circuit.name, routed.guard_trips);
        }
        let fidelity =
            if cfg.simulate && n <= MAX_SIMULATED_WIDTH { Some(routed_fidelity(&routed.circuit, &sub)?) } else { None };
        let routed = relabel(routed, &members, dev);
        if let Some(g) = nonconformant_gates(&routed.circuit, dev).first() {
            return Err(PipelineError::Invariant {
                circuit: circuit.name.clone(),
                router: kind,
                message: format!("{:?} on {:?} is not a coupling edge", g.kind, g.qubits),
            });
        }
        let row = ReportRow {
            circuit: circuit.name.clone(),
            router: kind,
            width: n,
            gates_before: circuit.gate_count(),
            gates_after: routed.circuit.gate_count(),
            two_qubit_before: circuit.two_qubit_count(),
            two_qubit_after: routed.circuit.two_qubit_count(),
            depth_before: circuit_depth,
            depth_after: depth(&routed.circuit),
            swaps: routed.swaps_inserted(),
            guard_trips: routed.guard_trips,
            global_cost: thim.global_cost,
            partition: members.clone(),
            fidelity,
        };
        outputs.push(RouterOutput { router: kind, routed, row });
    }
    info!("{}: partition {:?}, global cost {:.6}", circuit.name, members, thim.global_cost);
    Ok(Compilation {
        circuit: circuit.name.clone(),
        initial: thim.mapping.relabeled(|p| members[p], dev.num_qubits),
        partition: members,
        outputs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub circuit: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterSummary {
    pub circuits: usize,
    pub geomean_two_qubit_gates: f64,
    pub geomean_depth: f64,
    pub mean_fidelity: Option<f64>,
    pub guard_trips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Circuits routed by both routers.
    pub compared: usize,
    pub mean_gate_reduction_pct: Option<f64>,
    pub mean_two_qubit_reduction_pct: Option<f64>,
    pub mean_depth_reduction_pct: Option<f64>,
    pub mean_fidelity_delta: Option<f64>,
    pub routers: BTreeMap<RouterKind, RouterSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub device: String,
    pub config: PipelineConfig,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<Failure>,
    pub aggregates: Aggregates,
}

/// (baseline - tram) / baseline * 100, zero when the baseline is zero.
pub fn reduction_pct(baseline: usize, tram: usize) -> f64 {
    if baseline == 0 {
        0.0
    } else {
        (baseline as f64 - tram as f64) / baseline as f64 * 100.0
    }
}

/// Geometric mean of positive counts; zero counts are clamped to one.
pub fn geometric_mean(values: impl IntoIterator<Item = usize>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + (v.max(1) as f64).ln(), n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).exp()
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn aggregate(rows: &[ReportRow]) -> Aggregates {
    let mut routers = BTreeMap::new();
    for kind in [RouterKind::Tram, RouterKind::Baseline] {
        let mine: Vec<&ReportRow> = rows.iter().filter(|r| r.router == kind).collect();
        if mine.is_empty() {
            continue;
        }
        let fids: Vec<f64> = mine.iter().filter_map(|r| r.fidelity).collect();
        routers.insert(
            kind,
            RouterSummary {
                circuits: mine.len(),
                geomean_two_qubit_gates: geometric_mean(mine.iter().map(|r| r.two_qubit_after)),
                geomean_depth: geometric_mean(mine.iter().map(|r| r.depth_after)),
                mean_fidelity: mean(&fids),
                guard_trips: mine.iter().map(|r| r.guard_trips).sum(),
            },
        );
    }
    let mut gate = Vec::new();
    let mut two = Vec::new();
    let mut dep = Vec::new();
    let mut fid = Vec::new();
    for t in rows.iter().filter(|r| r.router == RouterKind::Tram) {
        let Some(b) = rows.iter().find(|r| r.router == RouterKind::Baseline && r.circuit == t.circuit) else {
            continue;
        };
        gate.push(reduction_pct(b.gates_after, t.gates_after));
        two.push(reduction_pct(b.two_qubit_after, t.two_qubit_after));
        dep.push(reduction_pct(b.depth_after, t.depth_after));
        if let (Some(ft), Some(fb)) = (t.fidelity, b.fidelity) {
            fid.push(ft - fb);
        }
    }
    Aggregates {
        compared: gate.len(),
        mean_gate_reduction_pct: mean(&gate),
        mean_two_qubit_reduction_pct: mean(&two),
        mean_depth_reduction_pct: mean(&dep),
        mean_fidelity_delta: mean(&fid),
        routers,
    }
}

/// Compiles every circuit concurrently; rows come back ordered by circuit
/// name, then router. Per-circuit errors become failures.
pub fn run_circuits(
    cfg: &PipelineConfig,
    dev: &DeviceModel,
    circuits: &[Circuit],
) -> Result<(RunReport, Vec<Compilation>), PipelineError> {
    cfg.validate()?;
    let mut order: Vec<&Circuit> = circuits.iter().collect();
    order.sort_by(|a, b| a.name.cmp(&b.name));
    let results: Vec<Result<Compilation, PipelineError>> = order.par_iter().map(|c| compile_one(cfg, dev, c)).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut compiled = Vec::new();
    for (c, res) in order.iter().zip(results) {
        match res {
            Ok(comp) => {
                rows.extend(comp.outputs.iter().map(|o| o.row.clone()));
                compiled.push(comp);
            }
            Err(e @ PipelineError::Invariant { .. }) => return Err(e),
            Err(e) => failures.push(Failure { circuit: c.name.clone(), error: e.to_string() }),
        }
    }
    let aggregates = aggregate(&rows);
    let report = RunReport { device: dev.name.clone(), config: cfg.clone(), rows, failures, aggregates };
    Ok((report, compiled))
}

/// Loads a corpus directory and compiles it. Unparsable files are recorded
/// as failures.
pub fn run_corpus(cfg: &PipelineConfig, dev: &DeviceModel, dir: &Path) -> Result<RunReport, PipelineError> {
    let loaded = crate::corpus::load_dir(dir).map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut circuits = Vec::new();
    let mut bad = Vec::new();
    for (name, c) in loaded {
        match c {
            Ok(c) => circuits.push(c),
            Err(e) => bad.push(Failure { circuit: name, error: e.to_string() }),
        }
    }
    let (mut report, _) = run_circuits(cfg, dev, &circuits)?;
    report.failures.extend(bad);
    report.failures.sort_by(|a, b| a.circuit.cmp(&b.circuit));
    Ok(report)
}

/// Inclusive `start:stop:step` range.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, PipelineError> {
    let bad = || PipelineError::Config(format!("grid '{spec}' is not start:stop:step"));
    let parts: Vec<f64> =
        spec.split(':').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if step.is_nan() || step <= 0.0 || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub omega1: f64,
    pub omega2: f64,
    pub epsilon: f64,
    pub partitions: BTreeMap<String, Vec<usize>>,
    pub mean_t2: BTreeMap<String, f64>,
    pub aggregates: Aggregates,
}

fn sweep_point(cfg: &PipelineConfig, dev: &DeviceModel, circuits: &[Circuit]) -> Result<SweepRow, PipelineError> {
    let (report, compiled) = run_circuits(cfg, dev, circuits)?;
    let partitions: BTreeMap<String, Vec<usize>> =
        compiled.iter().map(|c| (c.circuit.clone(), c.partition.clone())).collect();
    let mean_t2 = partitions.iter().map(|(k, m)| (k.clone(), dev.mean_t2(m))).collect();
    Ok(SweepRow {
        omega1: cfg.omega1,
        omega2: cfg.omega2,
        epsilon: cfg.epsilon,
        partitions,
        mean_t2,
        aggregates: report.aggregates,
    })
}

/// One run per (omega1, omega2) in `grid` x `grid`.
pub fn sweep_weights(
    cfg: &PipelineConfig,
    dev: &DeviceModel,
    circuits: &[Circuit],
    grid: &[f64],
    allow_large: bool,
) -> Result<Vec<SweepRow>, PipelineError> {
    let points = grid.len() * grid.len();
    if points > MAX_SWEEP_POINTS && !allow_large {
        return Err(PipelineError::Config(format!(
            "{points} grid points exceed {MAX_SWEEP_POINTS}; pass --allow-large-sweep"
        )));
    }
    let mut rows = Vec::with_capacity(points);
    for &omega1 in grid {
        for &omega2 in grid {
            rows.push(sweep_point(&PipelineConfig { omega1, omega2, ..cfg.clone() }, dev, circuits)?);
        }
    }
    Ok(rows)
}

/// One run per normalization guard value.
pub fn sweep_epsilon(
    cfg: &PipelineConfig,
    dev: &DeviceModel,
    circuits: &[Circuit],
    epsilons: &[f64],
) -> Result<Vec<SweepRow>, PipelineError> {
    epsilons.iter().map(|&epsilon| sweep_point(&PipelineConfig { epsilon, ..cfg.clone() }, dev, circuits)).collect()
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.digits$}"))
}

/// Aligned plain-text table of a report.
pub fn render_table(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:<8} {:>5} {:>7} {:>7} {:>6} {:>6} {:>7} {:>7} {:>5} {:>8}",
        "circuit", "router", "width", "gates", "routed", "cx", "cx'", "depth", "depth'", "swaps", "fidelity"
    );
    for r in &report.rows {
        let router = match r.router {
            RouterKind::Tram => "tram",
            RouterKind::Baseline => "baseline",
        };
        let _ = writeln!(
            out,
            "{:<16} {:<8} {:>5} {:>7} {:>7} {:>6} {:>6} {:>7} {:>7} {:>5} {:>8}",
            r.circuit,
            router,
            r.width,
            r.gates_before,
            r.gates_after,
            r.two_qubit_before,
            r.two_qubit_after,
            r.depth_before,
            r.depth_after,
            r.swaps,
            opt(r.fidelity, 5)
        );
    }
    for f in &report.failures {
        let _ = writeln!(out, "{:<16} FAILED: {}", f.circuit, f.error);
    }
    let a = &report.aggregates;
    let _ = writeln!(out);
    let _ = writeln!(out, "compared circuits:      {}", a.compared);
    let _ = writeln!(out, "mean gate reduction:    {} %", opt(a.mean_gate_reduction_pct, 2));
    let _ = writeln!(out, "mean cx reduction:      {} %", opt(a.mean_two_qubit_reduction_pct, 2));
    let _ = writeln!(out, "mean depth reduction:   {} %", opt(a.mean_depth_reduction_pct, 2));
    let _ = writeln!(out, "mean fidelity delta:    {}", opt(a.mean_fidelity_delta, 5));
    for (k, s) in &a.routers {
        let _ = writeln!(
            out,
            "{:<9} geomean cx {:.3}  geomean depth {:.3}  mean fidelity {}",
            format!("{k:?}").to_lowercase(),
            s.geomean_two_qubit_gates,
            s.geomean_depth,
            opt(s.mean_fidelity, 5)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    fn perth() -> DeviceModel {
        DeviceModel::builtin("perth").unwrap()
    }

    #[test]
    fn conformant_two_qubit_circuit() {
        let c = Circuit::from_gates("bell", 2, vec![Gate::h(0), Gate::cx(0, 1)]).unwrap();
        let comp = compile_one(&PipelineConfig::default(), &perth(), &c).unwrap();
        assert_eq!(comp.outputs.len(), 2);
        for o in &comp.outputs {
            assert_eq!(o.row.swaps, 0);
            assert_eq!(o.row.depth_after, o.row.depth_before);
            assert_eq!(o.row.partition, comp.partition);
        }
    }

    #[test]
    fn too_wide_circuit() {
        let c = Circuit::new("wide", 8);
        let err = compile_one(&PipelineConfig::default(), &perth(), &c).unwrap_err();
        assert!(matches!(err, PipelineError::Width { width: 8, device: 7 }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn config_validation() {
        let bad = PipelineConfig { omega1: 1.5, ..PipelineConfig::default() };
        assert_eq!(bad.validate().unwrap_err().exit_code(), 1);
        assert!(PipelineConfig { epsilon: 0.0, ..PipelineConfig::default() }.validate().is_err());
        assert!(load_device("nowhere").is_err());
    }

    #[test]
    fn reductions_and_means() {
        assert_eq!(reduction_pct(200, 150), 25.0);
        assert_eq!(reduction_pct(0, 3), 0.0);
        assert!((geometric_mean([2, 8]) - 4.0).abs() < 1e-12);
        let row = |router, after| ReportRow {
            circuit: "c".into(),
            router,
            width: 2,
            gates_before: 10,
            gates_after: after,
            two_qubit_before: 4,
            two_qubit_after: after,
            depth_before: 5,
            depth_after: after,
            swaps: 0,
            guard_trips: 0,
            global_cost: 0.0,
            partition: vec![0, 1],
            fidelity: None,
        };
        let a = aggregate(&[row(RouterKind::Tram, 9), row(RouterKind::Baseline, 12)]);
        assert_eq!(a.compared, 1);
        assert_eq!(a.mean_gate_reduction_pct, Some(25.0));
        assert_eq!(a.mean_fidelity_delta, None);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0:1:0.5").unwrap().len(), 3);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn sweep_guard_and_shape() {
        let dev = perth();
        let c = vec![crate::corpus::ghz(3)];
        let cfg = PipelineConfig { router: RouterChoice::Tram, ..PipelineConfig::default() };
        let rows = sweep_weights(&cfg, &dev, &c, &[0.0, 1.0], false).unwrap();
        assert_eq!(rows.len(), 4);
        let big: Vec<f64> = (0..23).map(|i| i as f64 / 22.0).collect();
        assert!(sweep_weights(&cfg, &dev, &c, &big, false).is_err());
    }
}
