use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tram::circuit::{depth, parse_qasm, serialize_qasm};
use tram::corpus::{builtin_corpus, load_dir, write_corpus};
use tram::pipeline::{
    compile_one, parse_grid, render_table, run_circuits, run_corpus, sweep_epsilon, sweep_weights, FidelityRecord,
    PipelineConfig, PipelineError, RouterChoice, RouterKind, RunReport,
};

#[derive(Parser)]
#[command(name = "tram", version, about = "Noise-aware qubit mapping and routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile one circuit.
    Compile {
        #[arg(long)]
        circuit: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Compile every .qasm file in a directory (the bundled set by default).
    Corpus {
        #[arg(long)]
        dir: Option<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Re-run the corpus over a grid of reward weights or T2 guards.
    Sweep {
        /// start:stop:step applied to both omega1 and omega2.
        #[arg(long)]
        grid: Option<String>,
        /// Comma-separated epsilon values.
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[arg(long)]
        allow_large_sweep: bool,
        #[arg(long)]
        dir: Option<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Write the bundled benchmark circuits as QASM files.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Opts {
    /// Built-in device name (perth, guadalupe, brooklyn) or JSON path.
    #[arg(long, default_value = "guadalupe")]
    device: String,
    #[arg(long, default_value_t = 0.5)]
    omega1: f64,
    #[arg(long, default_value_t = 0.5)]
    omega2: f64,
    #[arg(long, default_value_t = 1.0)]
    phi: f64,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
    #[arg(long)]
    refine_budget: Option<usize>,
    #[arg(long, value_enum, default_value_t = RouterChoice::Both)]
    router: RouterChoice,
    /// Noisy simulation for circuits of at most five qubits.
    #[arg(long)]
    simulate: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dwell time in microseconds for the decoherence penalty.
    #[arg(long)]
    dwell_time: Option<f64>,
    #[arg(long)]
    decay_reset: Option<usize>,
    /// Keep inserted SWAPs as SWAP gates.
    #[arg(long)]
    keep_swaps: bool,
    /// Fail instead of force-routing when routing stalls.
    #[arg(long)]
    strict_guard: bool,
    /// Output directory for routed circuits and reports.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Opts {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            device: self.device.clone(),
            omega1: self.omega1,
            omega2: self.omega2,
            phi: self.phi,
            eta: self.eta,
            mu: self.mu,
            delta: self.delta,
            epsilon: self.epsilon,
            refine_budget: self.refine_budget,
            router: self.router,
            simulate: self.simulate,
            seed: self.seed,
            dwell_time_us: self.dwell_time,
            decay_reset: self.decay_reset,
            decompose_swaps: !self.keep_swaps,
            strict_guard: self.strict_guard,
        }
    }
}

fn router_name(k: RouterKind) -> &'static str {
    match k {
        RouterKind::Tram => "tram",
        RouterKind::Baseline => "baseline",
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_report(out: Option<&Path>, report: &RunReport) -> anyhow::Result<()> {
    print!("{}", render_table(report));
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), report)?;
        fs::write(dir.join("report.txt"), render_table(report))?;
    }
    Ok(())
}

fn report_code(report: &RunReport) -> u8 {
    if report.failures.is_empty() {
        0
    } else {
        2
    }
}

fn pipeline_code(e: &PipelineError) -> u8 {
    e.exit_code() as u8
}

fn compile(circuit: &Path, opts: &Opts) -> anyhow::Result<u8> {
    let cfg = opts.config();
    if let Err(e) = cfg.validate() {
        eprintln!("{e}");
        return Ok(1);
    }
    let dev = match cfg.load_device() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{e}");
            return Ok(1);
        }
    };
    let src = match fs::read_to_string(circuit) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", circuit.display());
            return Ok(1);
        }
    };
    let mut c = match parse_qasm(&src) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", circuit.display());
            return Ok(1);
        }
    };
    c.name = circuit.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "circuit".into());
    let comp = match compile_one(&cfg, &dev, &c) {
        Ok(comp) => comp,
        Err(e) => {
            eprintln!("{e}");
            return Ok(pipeline_code(&e));
        }
    };
    let rows: Vec<_> = comp.outputs.iter().map(|o| o.row.clone()).collect();
    let report = RunReport {
        device: dev.name.clone(),
        config: cfg.clone(),
        aggregates: tram::pipeline::aggregate(&rows),
        rows,
        failures: Vec::new(),
    };
    if let Some(dir) = &opts.out {
        fs::create_dir_all(dir)?;
        for o in &comp.outputs {
            let stem = format!("{}.{}", c.name, router_name(o.router));
            fs::write(dir.join(format!("{stem}.qasm")), serialize_qasm(&o.routed.circuit))?;
            write_json(&dir.join(format!("{stem}.metrics.json")), &o.routed.metrics())?;
            if let Some(fidelity) = o.row.fidelity {
                let rec =
                    FidelityRecord { circuit: c.name.clone(), router: o.router, fidelity, ideal_depth: depth(&c) };
                write_json(&dir.join(format!("{stem}.fidelity.json")), &rec)?;
            }
        }
    }
    write_report(opts.out.as_deref(), &report)?;
    Ok(0)
}

fn corpus_circuits(dir: Option<&Path>) -> anyhow::Result<Vec<tram::circuit::Circuit>> {
    match dir {
        None => Ok(builtin_corpus()),
        Some(d) => load_dir(d)?.into_iter().map(|(_, c)| c.map_err(anyhow::Error::from)).collect(),
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Compile { circuit, opts } => compile(&circuit, &opts),
        Command::Corpus { dir, opts } => {
            let cfg = opts.config();
            let dev = match cfg.validate().and_then(|_| cfg.load_device()) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("{e}");
                    return Ok(1);
                }
            };
            let report = match &dir {
                Some(d) => run_corpus(&cfg, &dev, d),
                None => run_circuits(&cfg, &dev, &builtin_corpus()).map(|(r, _)| r),
            };
            match report {
                Ok(report) => {
                    write_report(opts.out.as_deref(), &report)?;
                    Ok(report_code(&report))
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(pipeline_code(&e))
                }
            }
        }
        Command::Sweep { grid, epsilons, allow_large_sweep, dir, opts } => {
            let cfg = opts.config();
            if grid.is_none() && epsilons.is_empty() {
                eprintln!("sweep needs --grid or --epsilons");
                return Ok(1);
            }
            let dev = match cfg.validate().and_then(|_| cfg.load_device()) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("{e}");
                    return Ok(1);
                }
            };
            let circuits: Vec<_> =
                corpus_circuits(dir.as_deref())?.into_iter().filter(|c| c.num_qubits <= dev.num_qubits).collect();
            let mut rows = Vec::new();
            let result = (|| {
                if let Some(g) = &grid {
                    rows.extend(sweep_weights(&cfg, &dev, &circuits, &parse_grid(g)?, allow_large_sweep)?);
                }
                if !epsilons.is_empty() {
                    rows.extend(sweep_epsilon(&cfg, &dev, &circuits, &epsilons)?);
                }
                Ok::<_, PipelineError>(())
            })();
            if let Err(e) = result {
                eprintln!("{e}");
                return Ok(pipeline_code(&e));
            }
            let text = serde_json::to_string_pretty(&rows)? + "\n";
            match &opts.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    fs::write(dir.join("sweep.json"), text)?;
                }
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::GenCorpus { out } => {
            let n = write_corpus(&out)?;
            println!("wrote {n} circuits to {}", out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("TRAM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors; help and version are not errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
