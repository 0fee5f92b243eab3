//! Command line front end for the voter-model library.
//!
//! Every run writes its artifacts into `--out-dir` together with a
//! `manifest.json` recording the resolved parameters and output names, so
//! re-running the recorded command reproduces the outputs bit for bit for
//! deterministic operations. Tables are tab-separated with a `#`-prefixed
//! comment block restating the parameters.
//!
//! Exit codes: 0 success, 2 usage error, 3 input error (unreadable or
//! malformed files), 4 numerical failure (singular or infeasible problems).

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use voter_model::{
    alpha_sweep, barabasi_albert, complete, erdos_renyi, estimate_zealots, estimate_zealots_with,
    load_network, parse_members, replicate, save_network, simulate, solve_activation_with,
    solve_p1_target, solve_p2_diversity_complete, solve_p3_active_complete,
    solve_p_diversity_general, BackfireSpec, CongressError, CongressSeries,
    GeneralDiversityOptions, InitialOpinions, Network, NodeRole, OptimizationResult,
    OptimizeError, SimError, SimulationConfig, SolveError, SolverOptions, WeightLaw,
    ZealotEstimate,
};

const USAGE: u8 = 2;
const INPUT: u8 = 3;
const NUMERICAL: u8 = 4;

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => USAGE,
            Failure::Input(_) => INPUT,
            Failure::Numerical(_) => NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Numerical(m) => m,
        }
    }
}

type CmdResult<T> = Result<T, Failure>;

fn usage(e: impl fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn input(e: impl fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn from_solve(e: &SolveError) -> Failure {
    match e {
        SolveError::EmptyNetwork | SolveError::InvalidNetwork(_) => Failure::Input(e.to_string()),
        SolveError::NoZealotInfluence { .. } | SolveError::LinSolve(_) => {
            Failure::Numerical(e.to_string())
        }
        SolveError::NotFree { .. } | SolveError::BadParameters(_) => Failure::Usage(e.to_string()),
    }
}

fn from_optimize(e: &OptimizeError) -> Failure {
    match e {
        OptimizeError::Solve(inner) => from_solve(inner),
        OptimizeError::BadParameters(_) => Failure::Usage(e.to_string()),
        OptimizeError::Unattainable { .. } | OptimizeError::Degenerate(_) => {
            Failure::Numerical(e.to_string())
        }
    }
}

fn from_sim(e: &SimError) -> Failure {
    match e {
        SimError::BadConfig(_) => Failure::Usage(e.to_string()),
        _ => Failure::Input(e.to_string()),
    }
}

fn from_congress(e: &CongressError) -> Failure {
    match e {
        CongressError::Optimize(inner) => from_optimize(inner),
        CongressError::BadParameters(_) => Failure::Usage(e.to_string()),
        _ => Failure::Input(e.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "voter",
    version,
    about = "Voter model with committed agents on directed weighted networks"
)]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Globals {
    /// Seed for anything stochastic (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for artifacts and manifest.json (default ".").
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Solver tolerance; defaults to 1e-10 for linear systems and 1e-9 for
    /// the general diversity optimizer.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Worker threads for parallel scans and replicated runs (default: one
    /// per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file supplying defaults for the global flags; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

/// Globals after merging flags over the optional config file over defaults.
struct Resolved {
    seed: u64,
    out_dir: PathBuf,
    tolerance: Option<f64>,
}

fn resolve(globals: &Globals) -> CmdResult<Resolved> {
    let cfg: serde_json::Value = match &globals.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("config {}: {e}", path.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Failure::Input(format!("config {}: {e}", path.display())))?;
            let object = value
                .as_object()
                .ok_or_else(|| Failure::Input(format!("config {}: not a JSON object", path.display())))?;
            for key in object.keys() {
                if !matches!(key.as_str(), "seed" | "out_dir" | "tolerance" | "threads") {
                    return Err(Failure::Input(format!(
                        "config {}: unknown key {key:?}",
                        path.display()
                    )));
                }
            }
            value
        }
        None => serde_json::Value::Null,
    };
    let threads = globals
        .threads
        .or_else(|| cfg["threads"].as_u64().map(|v| v as usize));
    if let Some(t) = threads {
        // At most one global pool per process; a duplicate request is moot.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(Resolved {
        seed: globals.seed.or_else(|| cfg["seed"].as_u64()).unwrap_or(0),
        out_dir: globals
            .out_dir
            .clone()
            .or_else(|| cfg["out_dir"].as_str().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".")),
        tolerance: globals.tolerance.or_else(|| cfg["tolerance"].as_f64()),
    })
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network file.
    Generate {
        #[command(subcommand)]
        topology: Topology,
    },
    /// Solve equilibrium opinions and pair activation on a network file.
    Equilibrium(EquilibriumArgs),
    /// Run the event-driven simulation on a network file.
    Simulate(SimulateArgs),
    /// Committed-agent placement optimization.
    Optimize {
        #[command(subcommand)]
        problem: Problem,
    },
    /// US House two-party pipeline: estimation and intervention sweeps.
    Congress {
        #[command(subcommand)]
        action: CongressAction,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Uniform,
    Exponential,
    Constant,
}

impl Weights {
    fn law(self) -> WeightLaw {
        match self {
            Weights::Uniform => WeightLaw::Uniform01,
            Weights::Exponential => WeightLaw::ExponentialMean1,
            Weights::Constant => WeightLaw::ConstantOne,
        }
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weights::Uniform => "uniform",
            Weights::Exponential => "exponential",
            Weights::Constant => "constant",
        })
    }
}

#[derive(Subcommand)]
enum Topology {
    /// Directed Erdos-Renyi: each ordered pair draws an edge independently.
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        z0: usize,
        #[arg(long, default_value_t = 0)]
        z1: usize,
        #[arg(long, value_enum, default_value_t = Weights::Uniform)]
        weights: Weights,
        /// Output file name inside --out-dir.
        #[arg(long, default_value = "network.txt")]
        out: PathBuf,
    },
    /// Preferential attachment with m edges per arriving node.
    Ba {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        z0: usize,
        #[arg(long, default_value_t = 0)]
        z1: usize,
        #[arg(long, value_enum, default_value_t = Weights::Uniform)]
        weights: Weights,
        #[arg(long, default_value = "network.txt")]
        out: PathBuf,
    },
    /// Complete unweighted graph.
    Complete {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        z0: usize,
        #[arg(long, default_value_t = 0)]
        z1: usize,
        #[arg(long, default_value = "network.txt")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EquilibriumArgs {
    /// Network file to solve.
    #[arg(long)]
    network: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Initial {
    /// Independent fair coin per free node.
    Fair,
    Zeros,
    Ones,
}

impl Initial {
    fn opinions(self) -> InitialOpinions {
        match self {
            Initial::Fair => InitialOpinions::FairCoin,
            Initial::Zeros => InitialOpinions::AllZero,
            Initial::Ones => InitialOpinions::AllOne,
        }
    }
}

impl fmt::Display for Initial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Initial::Fair => "fair",
            Initial::Zeros => "zeros",
            Initial::Ones => "ones",
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Network file to simulate.
    #[arg(long)]
    network: PathBuf,
    /// Simulated time span.
    #[arg(long, default_value_t = 50_000.0)]
    horizon: f64,
    /// Samples before this time are excluded from the summary.
    #[arg(long, default_value_t = 10_000.0)]
    burn_in: f64,
    /// Record a sample every this many updates.
    #[arg(long, default_value_t = 100)]
    sample_every: u64,
    /// Independent runs; above one, per-run seeds derive from --seed.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, value_enum, default_value_t = Initial::Fair)]
    initial: Initial,
}

#[derive(Subcommand)]
enum Problem {
    /// Steer the mean opinion to a target on the complete graph.
    P1 {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        z0: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        /// Target mean opinion in [0, 1].
        #[arg(long)]
        lambda: f64,
    },
    /// Maximize opinion diversity 4 x (1 - x) on the complete graph.
    P2 {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        z0: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
    },
    /// Maximize the active-link objective on the complete graph.
    P3 {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        z0: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
    },
    /// Maximize diversity on a network file by tuning the outgoing weights
    /// of designated 1-committed nodes.
    General {
        #[arg(long)]
        network: PathBuf,
        /// Comma-separated node ids holding role z1 (default: all of them).
        #[arg(long, value_delimiter = ',')]
        support: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
    },
}

#[derive(Subcommand)]
enum CongressAction {
    /// Estimate committed counts for both parties from a seat-share series.
    Estimate {
        /// Pre-aggregated counts file (k D R N per line); default: bundled.
        #[arg(long, conflicts_with = "roster")]
        counts: Option<PathBuf>,
        /// Member-level roster CSV with congress, chamber, party_code, icpsr.
        #[arg(long)]
        roster: Option<PathBuf>,
        /// Chamber size for the closed forms (default: rounded mean).
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        population: Option<u32>,
    },
    /// Post-intervention diversity and activity over a backfire grid.
    Sweep {
        #[arg(long, conflicts_with = "roster")]
        counts: Option<PathBuf>,
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        population: Option<u32>,
        /// Backfire grid as start:stop:step, endpoints inclusive.
        #[arg(long, default_value = "0:0.95:0.05")]
        alphas: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn run(cli: Cli) -> CmdResult<()> {
    let globals = resolve(&cli.globals)?;
    match cli.command {
        Command::Generate { topology } => cmd_generate(&globals, topology),
        Command::Equilibrium(args) => cmd_equilibrium(&globals, &args),
        Command::Simulate(args) => cmd_simulate(&globals, &args),
        Command::Optimize { problem } => cmd_optimize(&globals, problem),
        Command::Congress { action } => cmd_congress(&globals, action),
    }
}

/// Collects parameters and artifact names for one run, renders tables with
/// the shared comment block, and writes the manifest.
struct Run {
    out_dir: PathBuf,
    subcommand: String,
    params: Vec<(String, String)>,
    artifacts: Vec<String>,
}

impl Run {
    fn new(out_dir: &Path, subcommand: &str) -> CmdResult<Self> {
        fs::create_dir_all(out_dir)
            .map_err(|e| Failure::Input(format!("create {}: {e}", out_dir.display())))?;
        Ok(Run {
            out_dir: out_dir.to_path_buf(),
            subcommand: subcommand.to_string(),
            params: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    fn param(&mut self, key: &str, value: impl fmt::Display) {
        self.params.push((key.to_string(), value.to_string()));
    }

    fn artifact_path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.out_dir.join(name)
    }

    fn table(&mut self, name: &str, header: &str, rows: &[String]) -> CmdResult<()> {
        let mut text = String::new();
        let _ = writeln!(text, "# voter {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "# subcommand: {}", self.subcommand);
        for (key, value) in &self.params {
            let _ = writeln!(text, "# {key}: {value}");
        }
        let _ = writeln!(text, "{header}");
        for row in rows {
            let _ = writeln!(text, "{row}");
        }
        let path = self.artifact_path(name);
        fs::write(&path, text).map_err(|e| Failure::Input(format!("write {}: {e}", path.display())))
    }

    fn manifest(&self) -> CmdResult<()> {
        let params: serde_json::Map<String, serde_json::Value> = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let doc = serde_json::json!({
            "tool": { "name": "voter", "version": env!("CARGO_PKG_VERSION") },
            "subcommand": self.subcommand,
            "parameters": params,
            "artifacts": self.artifacts,
        });
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, format!("{doc:#}\n"))
            .map_err(|e| Failure::Input(format!("write {}: {e}", path.display())))
    }
}

fn role_name(role: NodeRole) -> &'static str {
    match role {
        NodeRole::Free => "free",
        NodeRole::Zealot0 => "z0",
        NodeRole::Zealot1 => "z1",
    }
}

fn load(path: &Path) -> CmdResult<Network> {
    load_network(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_generate(globals: &Resolved, topology: Topology) -> CmdResult<()> {
    let mut run = Run::new(&globals.out_dir, "generate")?;
    // Flags are the only input here, so generator rejections are usage
    // errors.
    let (net, out) = match topology {
        Topology::Er { n, density, z0, z1, weights, out } => {
            run.param("topology", "er");
            run.param("n", n);
            run.param("density", density);
            run.param("z0", z0);
            run.param("z1", z1);
            run.param("weights", weights);
            run.param("seed", globals.seed);
            (erdos_renyi(n, density, z0, z1, weights.law(), globals.seed).map_err(usage)?, out)
        }
        Topology::Ba { n, m, z0, z1, weights, out } => {
            run.param("topology", "ba");
            run.param("n", n);
            run.param("m", m);
            run.param("z0", z0);
            run.param("z1", z1);
            run.param("weights", weights);
            run.param("seed", globals.seed);
            (barabasi_albert(n, m, z0, z1, weights.law(), globals.seed).map_err(usage)?, out)
        }
        Topology::Complete { n, z0, z1, out } => {
            run.param("topology", "complete");
            run.param("n", n);
            run.param("z0", z0);
            run.param("z1", z1);
            (complete(n, z0, z1).map_err(usage)?, out)
        }
    };
    run.param("out", out.display());
    let path = run.artifact_path(&out.to_string_lossy());
    save_network(&net, &path).map_err(input)?;
    run.manifest()?;
    println!(
        "wrote {}: {} nodes ({} free, {} z0, {} z1), {} edges",
        path.display(),
        net.n(),
        net.free_count(),
        net.zealot_count(NodeRole::Zealot0),
        net.zealot_count(NodeRole::Zealot1),
        net.edge_count()
    );
    Ok(())
}

fn cmd_equilibrium(globals: &Resolved, args: &EquilibriumArgs) -> CmdResult<()> {
    let mut run = Run::new(&globals.out_dir, "equilibrium")?;
    let tolerance = globals.tolerance.unwrap_or(1e-10);
    run.param("network", args.network.display());
    run.param("tolerance", tolerance);
    let net = load(&args.network)?;
    let activation = solve_activation_with(&net, &SolverOptions { tolerance })
        .map_err(|e| from_solve(&e))?;
    let opinions = &activation.opinions;

    let rows: Vec<String> = (0..net.n())
        .map(|i| format!("{i}\t{}\t{}", role_name(net.role(i)), opinions.x_star(&net, i)))
        .collect();
    run.table("opinions.tsv", "node\trole\tx_star", &rows)?;

    let rows: Vec<String> = net
        .edges()
        .map(|(dst, src, w)| {
            let q = activation.q(&net, dst, src).expect("stored edges end at a free node");
            format!("{dst}\t{src}\t{w}\t{q}")
        })
        .collect();
    run.table("activation.tsv", "dst\tsrc\tweight\tq", &rows)?;

    let header = "n\tfree\tz0\tz1\tx_bar_free\tx_bar\tsigma\trho\trho_w\trho_pairs";
    let row = format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        net.n(),
        net.free_count(),
        net.zealot_count(NodeRole::Zealot0),
        net.zealot_count(NodeRole::Zealot1),
        opinions.x_bar_free,
        opinions.x_bar,
        opinions.sigma,
        activation.rho,
        activation.rho_w,
        activation.rho_pairs
    );
    run.table("summary.tsv", header, &[row])?;
    run.manifest()?;
    println!(
        "x_bar = {}, sigma = {}, rho = {}, rho_w = {}",
        opinions.x_bar, opinions.sigma, activation.rho, activation.rho_w
    );
    Ok(())
}

fn cmd_simulate(globals: &Resolved, args: &SimulateArgs) -> CmdResult<()> {
    let mut run = Run::new(&globals.out_dir, "simulate")?;
    run.param("network", args.network.display());
    run.param("horizon", args.horizon);
    run.param("burn_in", args.burn_in);
    run.param("sample_every", args.sample_every);
    run.param("runs", args.runs);
    run.param("initial", args.initial);
    run.param("seed", globals.seed);
    let net = load(&args.network)?;
    let cfg = SimulationConfig {
        horizon: args.horizon,
        burn_in: args.burn_in,
        sample_every: args.sample_every,
        seed: globals.seed,
        initial: args.initial.opinions(),
        track_pairs: Vec::new(),
    };

    // Theoretical overlay; a network the solver rejects still simulates, the
    // overlay columns then read NaN.
    let tolerance = globals.tolerance.unwrap_or(1e-10);
    let theory = solve_activation_with(&net, &SolverOptions { tolerance }).ok();
    let (x_bar_t, rho_t, rho_w_t) = theory
        .map(|a| (a.opinions.x_bar, a.rho, a.rho_w))
        .unwrap_or((f64::NAN, f64::NAN, f64::NAN));

    let (x_bar, rho, rho_w, se_x, se_r, se_w, samples, absorbed) = if args.runs == 1 {
        let trace = simulate(&net, &cfg).map_err(|e| from_sim(&e))?;
        let rows: Vec<String> = trace
            .samples
            .iter()
            .map(|s| format!("{}\t{}\t{}\t{}", s.time, s.x_bar, s.rho, s.rho_w))
            .collect();
        run.table("trace.tsv", "time\tx_bar\trho\trho_w", &rows)?;
        let s = trace.summary;
        (s.x_bar, s.rho, s.rho_w, s.se_x_bar, s.se_rho, s.se_rho_w, s.samples, usize::from(trace.absorbed_at.is_some()))
    } else {
        let rep = replicate(&net, &cfg, args.runs).map_err(|e| from_sim(&e))?;
        let rows: Vec<String> = rep
            .per_run
            .iter()
            .zip(&rep.absorbed)
            .enumerate()
            .map(|(i, (s, absorbed))| {
                format!(
                    "{i}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    s.samples,
                    s.x_bar,
                    s.rho,
                    s.rho_w,
                    s.se_x_bar,
                    s.se_rho,
                    s.se_rho_w,
                    absorbed.unwrap_or(f64::NAN)
                )
            })
            .collect();
        let header = "run\tsamples\tx_bar\trho\trho_w\tse_x_bar\tse_rho\tse_rho_w\tabsorbed_at";
        run.table("runs.tsv", header, &rows)?;
        let samples = rep.per_run.iter().map(|s| s.samples).sum();
        let absorbed = rep.absorbed.iter().flatten().count();
        (rep.x_bar, rep.rho, rep.rho_w, rep.se_x_bar, rep.se_rho, rep.se_rho_w, samples, absorbed)
    };

    let header = "runs\tsamples\tabsorbed\tx_bar\tse_x_bar\trho\tse_rho\trho_w\tse_rho_w\t\
                  x_bar_theory\trho_theory\trho_w_theory\tabs_err_x_bar\tabs_err_rho\tabs_err_rho_w";
    let row = format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        args.runs,
        samples,
        absorbed,
        x_bar,
        se_x,
        rho,
        se_r,
        rho_w,
        se_w,
        x_bar_t,
        rho_t,
        rho_w_t,
        (x_bar - x_bar_t).abs(),
        (rho - rho_t).abs(),
        (rho_w - rho_w_t).abs()
    );
    run.table("summary.tsv", header, &[row])?;
    run.manifest()?;
    println!(
        "x_bar = {x_bar} (se {se_x}), rho = {rho} (se {se_r}), rho_w = {rho_w} (se {se_w})"
    );
    if x_bar_t.is_finite() {
        println!(
            "theory: x_bar = {x_bar_t}, rho = {rho_t}, rho_w = {rho_w_t}; |rho_hat - rho| = {}",
            (rho - rho_t).abs()
        );
    }
    Ok(())
}

fn cmd_optimize(globals: &Resolved, problem: Problem) -> CmdResult<()> {
    match problem {
        Problem::P1 { n, z0, alpha, lambda } => {
            let solve = |spec: &BackfireSpec| solve_p1_target(spec, lambda);
            cmd_optimize_complete(globals, "p1", n, z0, alpha, Some(lambda), solve)
        }
        Problem::P2 { n, z0, alpha } => {
            cmd_optimize_complete(globals, "p2", n, z0, alpha, None, |s| {
                solve_p2_diversity_complete(s)
            })
        }
        Problem::P3 { n, z0, alpha } => {
            cmd_optimize_complete(globals, "p3", n, z0, alpha, None, |s| {
                solve_p3_active_complete(s)
            })
        }
        Problem::General { network, support, max_iters } => {
            cmd_optimize_general(globals, &network, support, max_iters)
        }
    }
}

fn cmd_optimize_complete(
    globals: &Resolved,
    problem: &str,
    n: f64,
    z0: f64,
    alpha: f64,
    lambda: Option<f64>,
    solve: impl Fn(&BackfireSpec) -> Result<OptimizationResult, OptimizeError>,
) -> CmdResult<()> {
    let mut run = Run::new(&globals.out_dir, "optimize")?;
    run.param("problem", problem);
    run.param("n", n);
    run.param("z0", z0);
    run.param("alpha", alpha);
    if let Some(lambda) = lambda {
        run.param("lambda", lambda);
    }
    let spec = BackfireSpec::new(n, z0, alpha).map_err(|e| from_optimize(&e))?;
    let result = solve(&spec).map_err(|e| from_optimize(&e))?;
    let post = &result.post_intervention;
    let header = "problem\tz1_star\tz1_star_rounded\tobjective\tpost_z0\tpost_z1\tpost_free\t\
                  x_bar\tsigma\trho";
    let row = format!(
        "{problem}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        result.z1_star,
        result.z1_star_rounded,
        result.objective_at_star,
        post.z0,
        post.z1,
        post.free,
        post.x_bar,
        post.sigma,
        post.rho
    );
    run.table("optimize.tsv", header, &[row])?;
    run.manifest()?;
    println!(
        "{problem}: z1_star = {} (rounded {}), objective = {}, x_bar = {}, sigma = {}",
        result.z1_star, result.z1_star_rounded, result.objective_at_star, post.x_bar, post.sigma
    );
    Ok(())
}

fn cmd_optimize_general(
    globals: &Resolved,
    network: &Path,
    support: Option<Vec<usize>>,
    max_iters: usize,
) -> CmdResult<()> {
    let mut run = Run::new(&globals.out_dir, "optimize")?;
    run.param("problem", "general");
    run.param("network", network.display());
    let net = load(network)?;
    let support = support.unwrap_or_else(|| {
        (0..net.n()).filter(|&i| net.role(i) == NodeRole::Zealot1).collect()
    });
    let support_list =
        support.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    run.param("support", &support_list);
    let tolerance = globals.tolerance.unwrap_or(1e-9);
    run.param("tolerance", tolerance);
    run.param("max_iters", max_iters);
    let options = GeneralDiversityOptions { tolerance, max_iters };
    let result =
        solve_p_diversity_general(&net, &support, &options).map_err(|e| from_optimize(&e))?;

    let rows: Vec<String> = result
        .free_ids
        .iter()
        .zip(&result.influence)
        .zip(&result.x_free)
        .map(|((node, influence), x)| format!("{node}\t{influence}\t{x}"))
        .collect();
    run.table("plan.tsv", "node\tinfluence\tx_star", &rows)?;
    let header = "x_bar\tsigma\titerations\tat_target";
    let row = format!(
        "{}\t{}\t{}\t{}",
        result.x_bar, result.sigma, result.iterations, result.at_target
    );
    run.table("summary.tsv", header, &[row])?;
    run.manifest()?;
    println!(
        "x_bar = {} (sigma = {}) after {} iterations; at target: {}",
        result.x_bar, result.sigma, result.iterations, result.at_target
    );
    // A zero plan that leaves the mean above one half is a constrained
    // optimum, not a solver failure.
    if !result.at_target && result.iterations > 0 {
        return Err(Failure::Numerical(format!(
            "stalled {} from the target mean after {} iterations",
            (result.x_bar - 0.5).abs(),
            result.iterations
        )));
    }
    Ok(())
}

fn cmd_congress(globals: &Resolved, action: CongressAction) -> CmdResult<()> {
    match action {
        CongressAction::Estimate { counts, roster, population } => {
            let mut run = Run::new(&globals.out_dir, "congress")?;
            run.param("action", "estimate");
            let series = load_series(&mut run, &counts, &roster)?;
            let estimate = run_estimate(&mut run, &series, population);
            write_estimate(&mut run, &series, &estimate)?;
            run.manifest()?;
            println!(
                "committed voters: D = {}, R = {} (epsilon = {}, population = {}, {} congresses)",
                estimate.z_d,
                estimate.z_r,
                estimate.epsilon,
                estimate.population,
                series.len()
            );
            Ok(())
        }
        CongressAction::Sweep { counts, roster, population, alphas } => {
            let mut run = Run::new(&globals.out_dir, "congress")?;
            run.param("action", "sweep");
            let series = load_series(&mut run, &counts, &roster)?;
            let estimate = run_estimate(&mut run, &series, population);
            run.param("alphas", &alphas);
            let grid = parse_alpha_grid(&alphas)?;
            let rows = alpha_sweep(&series, &estimate, &grid).map_err(|e| from_congress(&e))?;
            write_estimate(&mut run, &series, &estimate)?;
            let table: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        r.alpha,
                        r.party,
                        r.objective,
                        r.z_star,
                        r.z_star_rounded,
                        r.z_max,
                        r.sigma_at_star,
                        r.rho_at_star
                    )
                })
                .collect();
            let header =
                "alpha\tparty\tobjective\tz_star\tz_star_rounded\tz_max\tsigma_at_star\trho_at_star";
            run.table("sweep.tsv", header, &table)?;
            run.manifest()?;
            println!(
                "wrote {} sweep rows over {} backfire values (committed: D = {}, R = {})",
                rows.len(),
                grid.len(),
                estimate.z_d,
                estimate.z_r
            );
            Ok(())
        }
    }
}

fn load_series(
    run: &mut Run,
    counts: &Option<PathBuf>,
    roster: &Option<PathBuf>,
) -> CmdResult<CongressSeries> {
    match (counts, roster) {
        (Some(path), None) => {
            run.param("counts", path.display());
            CongressSeries::from_counts_path(path).map_err(|e| from_congress(&e))
        }
        (None, Some(path)) => {
            run.param("roster", path.display());
            parse_members(path).map_err(|e| from_congress(&e))
        }
        (None, None) => {
            run.param("counts", "bundled");
            Ok(CongressSeries::bundled())
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --counts with --roster"),
    }
}

fn run_estimate(
    run: &mut Run,
    series: &CongressSeries,
    population: Option<u32>,
) -> ZealotEstimate {
    match population {
        Some(p) => {
            run.param("population", p);
            estimate_zealots_with(series, p)
        }
        None => estimate_zealots(series),
    }
}

fn write_estimate(
    run: &mut Run,
    series: &CongressSeries,
    estimate: &ZealotEstimate,
) -> CmdResult<()> {
    let header = "z_d\tz_r\tsigma_hat\trho_hat\tepsilon\tpopulation\tcongresses\td_min\tr_min";
    let row = format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        estimate.z_d,
        estimate.z_r,
        estimate.sigma_hat,
        estimate.rho_hat,
        estimate.epsilon,
        estimate.population,
        series.len(),
        series.d_min(),
        series.r_min()
    );
    run.table("estimate.tsv", header, &[row])
}

/// Parses `start:stop:step` into an inclusive grid. The endpoint count is
/// rounded so accumulated float error cannot drop the final value.
fn parse_alpha_grid(text: &str) -> CmdResult<Vec<f64>> {
    let bad = |why: &str| Failure::Usage(format!("--alphas {text:?}: {why}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step]: [&str; 3] =
        parts.try_into().map_err(|_| bad("expected start:stop:step"))?;
    let parse = |field: &str| field.parse::<f64>().map_err(|_| bad("expected numbers"));
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    if !(step > 0.0) {
        return Err(bad("step must be positive"));
    }
    if !(0.0..1.0).contains(&start) || !(0.0..1.0).contains(&stop) || stop < start {
        return Err(bad("need 0 <= start <= stop < 1"));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    if count > 10_000 {
        return Err(bad("grid has more than 10000 points"));
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::parse_alpha_grid;

    #[test]
    fn alpha_grid_includes_both_endpoints() {
        let grid = parse_alpha_grid("0:0.95:0.05").unwrap();
        assert_eq!(grid.len(), 20);
        assert_eq!(grid[0], 0.0);
        assert!((grid[19] - 0.95).abs() < 1e-12);
        assert!(grid.iter().all(|a| (0.0..1.0).contains(a)));
    }

    #[test]
    fn alpha_grid_supports_a_single_point() {
        assert_eq!(parse_alpha_grid("0.5:0.5:0.1").unwrap(), vec![0.5]);
    }

    #[test]
    fn alpha_grid_rejects_malformed_specifications() {
        for text in ["", "0:0.9", "0:0.9:0.1:2", "a:b:c", "0:0.9:0", "0:0.9:-0.1", "0.9:0.1:0.1", "0:1:0.5"] {
            assert!(parse_alpha_grid(text).is_err(), "{text:?} should be rejected");
        }
    }
}
