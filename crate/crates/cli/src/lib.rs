//! `risvs` command-line front-end: single acquisitions, closed loops,
//! γ sweeps and the acceptance self-test.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use risvs_core::config::{load_scenario, to_toml};
use risvs_core::scenario::{acquire, gamma_sweep, kind_at, write_sweep_csv, Scenario};
use risvs_core::selftest::{run_all, run_criterion, CRITERIA};
use risvs_core::sigproc::spectrum::write_displacement_csv;
use risvs_core::strategy::{run_closed_loop, write_loop_log, StrategyName};
use risvs_core::PathKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_SELFTEST: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0} acceptance criteria failed")]
    Selftest(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Selftest(_) => EXIT_SELFTEST,
        }
    }
}

impl From<risvs_core::Error> for CliError {
    fn from(e: risvs_core::Error) -> Self {
        use risvs_core::Error as E;
        match e {
            E::Config(_) | E::Ingest { .. } | E::Nyquist { .. } | E::InvalidParameter(_) | E::InvalidGeometry(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "risvs", version, about = "RIS-assisted radar respiration sensing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One acquisition window; writes per-path displacement and spectrum CSVs.
    Acquire(AcquireArgs),
    /// Closed evaluate/reconfigure loop; writes a JSON-lines log.
    Loop(LoopArgs),
    /// γ sweep over seeds; writes one CSV per strategy.
    Sweep(SweepArgs),
    /// Run the acceptance criteria and print one line per criterion.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML). The built-in default profile is used when omitted.
    #[arg(long, short)]
    pub scenario: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, short, default_value = "out")]
    pub out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AcquireArgs {
    #[command(flatten)]
    pub common: Common,
    /// Override the strategy kind.
    #[arg(long)]
    pub strategy: Option<StrategyName>,
    /// Override the RIS share γ.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LoopArgs {
    #[command(flatten)]
    pub common: Common,
    /// Strategy for the first window.
    #[arg(long)]
    pub strategy: Option<StrategyName>,
    /// Starting RIS share γ.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Number of acquisition windows.
    #[arg(long)]
    pub windows: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Strategies to sweep (comma-separated); defaults to the scenario's list.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<StrategyName>,
    /// γ grid (comma-separated); defaults to the scenario's grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gammas: Option<Vec<f64>>,
    /// Number of seeds, starting at the scenario's `first_seed` (or `--seed`).
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Run only these criteria (comma-separated ids).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

/// Provenance written next to every output file.
#[derive(Debug, Serialize)]
struct Meta<'a> {
    artifact: &'a str,
    version: &'a str,
    command: &'a str,
    file: String,
    seed: u64,
    config_sha256: String,
}

struct Outputs<'a> {
    dir: &'a Path,
    command: &'a str,
    seed: u64,
    hash: String,
    written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path, command: &'a str, sc: &Scenario) -> CliResult<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            command,
            seed: sc.seed,
            hash: config_hash(sc)?,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        let fail = |p: &Path, e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", p.display()));
        std::fs::write(&path, bytes).map_err(|e| fail(&path, e))?;
        let meta = Meta {
            artifact: "risvs",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            file: name.to_string(),
            seed: self.seed,
            config_sha256: self.hash.clone(),
        };
        let meta_path = self.dir.join(format!("{name}.meta.json"));
        let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        text.push('\n');
        std::fs::write(&meta_path, text).map_err(|e| fail(&meta_path, e))?;
        self.written.push(path);
        Ok(())
    }
}

/// SHA-256 of the effective scenario in canonical TOML form.
pub fn config_hash(sc: &Scenario) -> CliResult<String> {
    let digest = Sha256::digest(to_toml(sc)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn load(common: &Common) -> CliResult<Scenario> {
    let mut sc = match &common.scenario {
        Some(path) => load_scenario(path).map_err(|e| CliError::Config(e.to_string()))?,
        None => Scenario::default(),
    };
    if let Some(seed) = common.seed {
        sc.seed = seed;
        sc.sweep.first_seed = seed;
    }
    Ok(sc)
}

fn apply_strategy(sc: &mut Scenario, kind: Option<StrategyName>, gamma: Option<f64>) -> CliResult<()> {
    if let Some(k) = kind {
        sc.strategy.kind = k;
    }
    if let Some(g) = gamma {
        sc.strategy.gamma = g;
    }
    sc.validate().map_err(|e| CliError::Config(e.to_string()))
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(buf)
}

pub fn cmd_acquire(args: &AcquireArgs) -> CliResult<Vec<PathBuf>> {
    let mut sc = load(&args.common)?;
    apply_strategy(&mut sc, args.strategy, args.gamma)?;
    let kind = risvs_core::scenario::configured_kind(&sc);
    let run = acquire(&sc, &kind, sc.seed)?;
    let mut out = Outputs::new(&args.common.out, "acquire", &sc)?;
    for path in PathKind::BOTH {
        if let Some(est) = run.estimate(path) {
            out.write(
                &format!("{path}_displacement.csv"),
                &to_bytes(|b| write_displacement_csv(&est.displacement, b))?,
            )?;
            out.write(&format!("{path}_spectrum.csv"), &to_bytes(|b| est.spectrum.write_csv(b))?)?;
        }
    }
    Ok(out.written)
}

pub fn cmd_loop(args: &LoopArgs) -> CliResult<Vec<PathBuf>> {
    let mut sc = load(&args.common)?;
    apply_strategy(&mut sc, args.strategy, args.gamma)?;
    let windows = args.windows.unwrap_or(sc.strategy.windows);
    let steps = run_closed_loop(&sc, sc.seed, windows)?;
    let mut out = Outputs::new(&args.common.out, "loop", &sc)?;
    out.write("loop.jsonl", &to_bytes(|b| write_loop_log(&steps, b))?)?;
    Ok(out.written)
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<Vec<PathBuf>> {
    let mut sc = load(&args.common)?;
    if let Some(g) = &args.gammas {
        sc.sweep.gammas = g.clone();
    }
    if let Some(n) = args.seeds {
        sc.sweep.seeds = n;
    }
    if !args.strategy.is_empty() {
        sc.sweep.kinds = args.strategy.clone();
    }
    if sc.sweep.gammas.is_empty() {
        return Err(CliError::Config("γ grid is empty".into()));
    }
    if sc.sweep.seeds == 0 {
        return Err(CliError::Config("sweep needs at least one seed".into()));
    }
    sc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    for &k in &sc.sweep.kinds {
        kind_at(k, 0.5, &sc)?;
    }
    let seeds = sc.sweep.seed_list();
    let mut out = Outputs::new(&args.common.out, "sweep", &sc)?;
    for &kind in &sc.sweep.kinds {
        let rows = gamma_sweep(&sc, kind, &sc.sweep.gammas, &seeds)?;
        out.write(&format!("sweep_{kind}.csv"), &to_bytes(|b| write_sweep_csv(&rows, b))?)?;
    }
    Ok(out.written)
}

pub fn cmd_selftest<W: Write>(args: &SelftestArgs, mut log: W) -> CliResult<()> {
    let reports = if args.only.is_empty() {
        run_all()
    } else {
        for id in &args.only {
            if !CRITERIA.iter().any(|c| c.0 == *id) {
                return Err(CliError::Config(format!("no acceptance criterion {id}; valid ids are 1-11")));
            }
        }
        args.only.iter().map(|&id| run_criterion(id)).collect()
    };
    for r in &reports {
        writeln!(log, "{r}").map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    writeln!(log, "{} of {} criteria passed", reports.len() - failed, reports.len())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    if failed > 0 {
        return Err(CliError::Selftest(failed));
    }
    Ok(())
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Acquire(a) => cmd_acquire(a),
        Command::Loop(a) => cmd_loop(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Selftest(a) => cmd_selftest(a, &mut *stdout).map(|_| Vec::new()),
    };
    match result {
        Ok(files) => {
            for f in files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
