use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use serde::{Deserialize, Serialize};

use mtssa_core::mechanism::BidderId;
use mtssa_core::paillier::{PrivateKey, PublicKey};
use mtssa_core::protocol::{AuctioneerKeys, PlaintextSolver, ProtocolError, SecureSolver, SubnetSolver, Transcript};
use mtssa_core::sim::{self, Engine, MechanismKind, MetricsReport, MonteCarloOptions, ScenarioConfig, SimError};

#[derive(Parser)]
#[command(name = "mtssa", version, about = "Secure multi-tier spectrum auction simulator")]
struct Cli {
    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, env = "MTSSA_OUT_DIR", default_value = ".", global = true)]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an auctioneer key pair.
    Keygen(KeygenArgs),
    /// Run one auction on a scenario and print every station's award.
    Auction(AuctionArgs),
    /// Monte Carlo sweep over one or more scenarios.
    Simulate(SimulateArgs),
    /// Turn a results CSV into means and plot series.
    Report(ReportArgs),
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long, default_value_t = 512)]
    bits: u64,
    /// Seed for a reproducible key; fresh entropy when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Key file (default: key.json in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MechanismArg {
    Csl,
    Mtssa,
    MtssaFl,
    All,
}

impl MechanismArg {
    fn kinds(self) -> Vec<MechanismKind> {
        match self {
            MechanismArg::Csl => vec![MechanismKind::Csl],
            MechanismArg::Mtssa => vec![MechanismKind::Mtssa],
            MechanismArg::MtssaFl => vec![MechanismKind::MtssaFl],
            MechanismArg::All => MechanismKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Secure,
    Plaintext,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct AuctionArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Key size when no key file is given.
    #[arg(long, default_value_t = 512)]
    bits: u64,
    /// Key file written by `keygen`.
    #[arg(long)]
    key: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MechanismArg::Mtssa)]
    mechanism: MechanismArg,
    #[arg(long, value_enum, default_value_t = EngineArg::Secure)]
    engine: EngineArg,
    /// Band count (default: the largest in the scenario).
    #[arg(long)]
    bands: Option<usize>,
    /// Which run's placement to use for generated scenarios.
    #[arg(long, default_value_t = 0)]
    run: usize,
    /// Write the per-round protocol transcripts here as JSON.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, required = true)]
    scenario: Vec<PathBuf>,
    /// Results CSV (default: results.csv in the output directory). The means
    /// and plot series go next to it as `.summary.json` and `.plot.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = MechanismArg::All)]
    mechanism: MechanismArg,
    #[arg(long, value_enum, default_value_t = EngineArg::Plaintext)]
    engine: EngineArg,
    /// Key size for the secure engine.
    #[arg(long, default_value_t = 512)]
    bits: u64,
    /// Override the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's run count.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    /// Plot-data JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit 1 is reserved for usage errors, which clap reports itself.
enum Failure {
    Validation(String),
    Abort(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Abort(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Abort(m) => m,
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Protocol { .. } => Failure::Abort(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        Failure::Abort(e.to_string())
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Validation(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(io_err(path))
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig, Failure> {
    let file = File::open(path).map_err(io_err(path))?;
    ScenarioConfig::from_reader(BufReader::new(file))
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

#[derive(Serialize, Deserialize)]
struct KeyFile {
    bits: u64,
    public: PublicKey,
    private: PrivateKey,
}

fn load_key(path: &Path) -> Result<AuctioneerKeys, Failure> {
    let file = File::open(path).map_err(io_err(path))?;
    let key: KeyFile = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    if key.public.n() != key.private.n() {
        return Err(Failure::Validation(format!("{}: public and private halves differ", path.display())));
    }
    Ok(AuctioneerKeys { public: key.public, private: key.private })
}

fn keygen(args: &KeygenArgs, out_dir: &Path) -> Result<(), Failure> {
    let mut rng = match args.seed {
        Some(seed) => ChaCha20Rng::seed_from_u64(seed),
        None => ChaCha20Rng::from_entropy(),
    };
    let keys = AuctioneerKeys::generate(args.bits, &mut rng)
        .map_err(|e| Failure::Validation(format!("--bits: {e}")))?;
    let path = args.out.clone().unwrap_or_else(|| out_dir.join("key.json"));
    let file = KeyFile { bits: args.bits, public: keys.public, private: keys.private };
    write_text(&path, &(serde_json::to_string_pretty(&file).expect("key serializes") + "\n"))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct RoundTranscript {
    mechanism: MechanismKind,
    root: BidderId,
    transcript: Transcript,
}

fn auction(args: &AuctionArgs) -> Result<(), Failure> {
    let config = load_scenario(&args.scenario)?;
    let num_bands = args.bands.unwrap_or(config.max_bands());
    if num_bands == 0 {
        return Err(Failure::Validation("--bands: must be at least 1".into()));
    }
    if num_bands > config.max_bands() && config.stations.is_some() {
        return Err(Failure::Validation(format!(
            "--bands: station marginals cover at most {} bands",
            config.max_bands()
        )));
    }
    let mut config = config;
    if num_bands > config.max_bands() {
        config.bands.push(num_bands);
        config.s = config.s.max(config.w * num_bands as u64);
    }
    let scenario = sim::generate_scenario(&config, args.run);
    let keys = match (&args.key, args.engine) {
        (_, EngineArg::Plaintext) => None,
        (Some(path), EngineArg::Secure) => Some(load_key(path)?),
        (None, EngineArg::Secure) => Some(
            AuctioneerKeys::generate(args.bits, &mut ChaCha20Rng::seed_from_u64(args.seed))
                .map_err(|e| Failure::Validation(format!("--bits: {e}")))?,
        ),
    };

    let mut outcomes = Vec::new();
    let mut transcripts = Vec::new();
    for kind in args.mechanism.kinds() {
        let mut root_rng = ChaCha8Rng::seed_from_u64(args.seed);
        let outcome = match &keys {
            Some(keys) if kind != MechanismKind::Csl => {
                let mut solver = SecureSolver::new(keys.clone(), args.seed).keep_transcripts(args.transcript.is_some());
                let out = sim::run_mechanism(kind, &scenario, num_bands, config.f, &mut solver, &mut root_rng)?;
                transcripts.extend(
                    solver
                        .into_transcripts()
                        .into_iter()
                        .map(|(root, transcript)| RoundTranscript { mechanism: kind, root, transcript }),
                );
                out
            }
            _ => {
                let solver: &mut dyn SubnetSolver = &mut PlaintextSolver;
                sim::run_mechanism(kind, &scenario, num_bands, config.f, solver, &mut root_rng)?
            }
        };
        let metrics = sim::compute_metrics(&outcome, &scenario.valuations, &scenario.stations, num_bands, args.run);
        outcomes.push((outcome, metrics));
    }

    if let Some(path) = &args.transcript {
        write_text(path, &(serde_json::to_string_pretty(&transcripts).expect("transcript serializes") + "\n"))?;
    }

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let text = match args.format {
        Format::Json => {
            let body: Vec<_> = outcomes
                .iter()
                .map(|(o, m)| serde_json::json!({ "outcome": o, "metrics": m }))
                .collect();
            serde_json::to_string_pretty(&body).expect("outcome serializes") + "\n"
        }
        Format::Text => render_text(&scenario, &outcomes, num_bands),
    };
    out.write_all(text.as_bytes()).map_err(|e| Failure::Validation(e.to_string()))
}

fn render_text(scenario: &sim::Scenario, outcomes: &[(sim::MechanismOutcome, sim::MetricsRow)], num_bands: usize) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    for (o, m) in outcomes {
        let _ = writeln!(s, "{}: {} stations, {} bands", o.mechanism, scenario.stations.len(), num_bands);
        let _ = writeln!(s, "{:>7} {:>3} {:>5} {:<16} {:>5} {:>7}", "station", "wsp", "kind", "bands", "price", "utility");
        for st in &scenario.stations {
            let r = &o.stations[&st.id];
            let bands = r.bands.iter().map(|b| b.0.to_string()).collect::<Vec<_>>().join(",");
            let kind = match st.kind {
                mtssa_core::topology::CellKind::Macro => "macro",
                mtssa_core::topology::CellKind::Small => "small",
            };
            let _ = writeln!(s, "{:>7} {:>3} {:>5} {:<16} {:>5} {:>7}", st.id.0, st.wsp, kind, format!("{{{bands}}}"), r.price, r.utility);
        }
        if let (Some(w), Some(lease)) = (o.winning_wsp, o.lease_price) {
            let _ = writeln!(s, "leased to wsp {w} at {lease}");
        }
        let _ = writeln!(
            s,
            "utilization {}  revenue {}  satisfaction {:.4}\n",
            m.utilization, m.revenue, m.satisfaction
        );
    }
    s
}

fn with_extension(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn simulate(args: &SimulateArgs, out_dir: &Path) -> Result<(), Failure> {
    let engine = match args.engine {
        EngineArg::Plaintext => Engine::Plaintext,
        EngineArg::Secure => Engine::Secure { bits: args.bits },
    };
    let options = MonteCarloOptions { mechanisms: args.mechanism.kinds(), engine, jobs: args.jobs };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for path in &args.scenario {
        let mut config = load_scenario(path)?;
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        if let Some(runs) = args.runs {
            config.runs = runs;
            config.validate()?;
        }
        let report = sim::monte_carlo(&config, &options);
        rows.extend(report.rows);
        failures.extend(report.failures);
    }
    let mut report = MetricsReport::from_rows(rows);
    report.failures = failures;

    let csv_path = args.out.clone().unwrap_or_else(|| out_dir.join("results.csv"));
    let mut f = create(&csv_path)?;
    report.write_csv(&mut f)?;
    f.flush().map_err(io_err(&csv_path))?;
    write_text(&with_extension(&csv_path, ".summary.json"), &(report.summary_json() + "\n"))?;
    let plot = serde_json::to_string_pretty(&report.plot_data()).expect("plot data serializes");
    write_text(&with_extension(&csv_path, ".plot.json"), &(plot + "\n"))?;
    eprintln!("wrote {} rows to {}", report.rows.len(), csv_path.display());

    if let Some(first) = report.failures.first() {
        return Err(Failure::Abort(format!(
            "{} run(s) failed; first: run {} {} with {} bands: {}",
            report.failures.len(),
            first.run,
            first.mechanism,
            first.num_bands,
            first.error
        )));
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<(), Failure> {
    let file = File::open(&args.input).map_err(io_err(&args.input))?;
    let rows = sim::read_csv(BufReader::new(file))?;
    if let Some(bad) = rows.iter().find(|r| !r.is_consistent()) {
        return Err(Failure::Validation(format!(
            "{}: row for run {} of {} violates the metric bounds",
            args.input.display(),
            bad.run,
            bad.mechanism
        )));
    }
    let report = MetricsReport::from_rows(rows);
    let body = serde_json::json!({ "means": report.means, "series": report.plot_data() });
    let text = serde_json::to_string_pretty(&body).expect("report serializes") + "\n";
    match &args.out {
        Some(path) => write_text(path, &text),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Validation(e.to_string())),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Keygen(a) => keygen(a, &cli.out_dir),
        Command::Auction(a) => auction(a),
        Command::Simulate(a) => simulate(a, &cli.out_dir),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
