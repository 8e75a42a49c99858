//! Batch front-end: fit, score, simulate and tabulate exact risks.
//!
//! Exit codes: 0 success, 2 invalid input or I/O, 3 numerical singularity,
//! 4 no feasible candidate.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use aalen_fic::{
    enumerate_candidates, exact_risk, fit_submodel, load_dataset, replicate_mse, simulate_dataset, tolerance_radius,
    Dataset, FicEngine, FicError, FicReport, Focal, IndexSet, OracleConfig, SimConfig, StepEstimate, WeightSpec,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Fic(#[from] FicError),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Fic(FicError::Singular { .. })
            | CliError::Fic(FicError::TooManySingular { .. })
            | CliError::Fic(FicError::Quadrature { .. }) => 3,
            CliError::Fic(FicError::AllInfeasible) => 4,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "aalen-fic", version, about = "Aalen linear hazard regression and focussed covariate selection")]
pub struct Cli {
    /// Worker threads for parallel scoring and simulation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the full model or a covariate subset.
    Fit(FitArgs),
    /// Rank candidate subsets by FIC or weighted FIC.
    Fic(FicArgs),
    /// Draw a censored dataset from a simulation config.
    Simulate(SimulateArgs),
    /// Tabulate exact squared bias, variance and mse for gamma covariates.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub data: PathBuf,
    /// Horizon; defaults to the largest event time.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Covariates to keep, 1-based and comma-separated, e.g. "1,3".
    #[arg(long)]
    pub subset: Option<String>,
    /// Write the JSON estimate here as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FicArgs {
    pub data: PathBuf,
    /// Focal covariate vector, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long, conflicts_with_all = ["t1", "t2", "weights"])]
    pub t: Option<f64>,
    #[arg(long, requires = "t2", conflicts_with = "weights")]
    pub t1: Option<f64>,
    #[arg(long, requires = "t1", conflicts_with = "weights")]
    pub t2: Option<f64>,
    /// JSON weight specification: {"points": [{"x", "t", "w"}]} or {"empirical_covariates": {"t"}}.
    #[arg(long, conflicts_with = "x")]
    pub weights: Option<PathBuf>,
    /// Semicolon-separated subsets such as "1;1,2", or "all".
    #[arg(long, default_value = "all")]
    pub candidates: String,
    /// Covariates every enumerated candidate must contain, 1-based.
    #[arg(long)]
    pub protected: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config JSON.
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// One oracle config or an array of them.
    pub config: PathBuf,
    /// Sample sizes, comma-separated.
    #[arg(long)]
    pub n: String,
    #[arg(long, default_value = "all")]
    pub candidates: String,
    /// Also run this many Monte Carlo replications per row.
    #[arg(long)]
    pub replicate: Option<usize>,
    /// Base seed for replications.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Provenance for one command invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_paths: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    pub started_unix_seconds: f64,
    pub elapsed_seconds: f64,
}

impl RunManifest {
    fn new(command: &str, configs: &[&Path], seed: Option<u64>, outputs: &[&Path]) -> Self {
        RunManifest {
            command: command.to_string(),
            config_paths: configs.iter().map(|p| p.display().to_string()).collect(),
            seed,
            version: VERSION.to_string(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            started_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            elapsed_seconds: 0.0,
        }
    }

    /// Comment lines for CSV artifacts. Timing is left out so outputs stay
    /// byte-identical between runs; it goes to the sidecar file.
    pub fn csv_comment(&self) -> String {
        let mut s = format!("# aalen-fic {} {}\n", self.version, self.command);
        for c in &self.config_paths {
            let _ = writeln!(s, "# config: {c}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "# seed: {seed}");
        }
        for o in &self.outputs {
            let _ = writeln!(s, "# output: {o}");
        }
        s
    }

    /// `<output>.manifest.json`
    pub fn sidecar_path(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    fn finish(mut self, clock: Instant) -> CliResult<()> {
        self.elapsed_seconds = clock.elapsed().as_secs_f64();
        for o in self.outputs.clone() {
            let path = Self::sidecar_path(Path::new(&o));
            let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
            std::fs::write(&path, json + "\n").map_err(|source| CliError::Io { path, source })?;
        }
        Ok(())
    }
}

pub fn parse_vector(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: {v:?} in {s:?}"))))
        .collect()
}

fn parse_indices(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("not an index: {v:?} in {s:?}"))))
        .collect()
}

/// A 1-based, comma-separated subset such as "1,3".
pub fn parse_subset(s: &str, r: usize) -> CliResult<IndexSet> {
    Ok(IndexSet::new(&parse_indices(s)?, r)?)
}

/// "all" (optionally restricted to supersets of `protected`) or "1;1,2".
pub fn parse_candidates(s: &str, r: usize, protected: Option<&str>) -> CliResult<Vec<IndexSet>> {
    let protected = match protected {
        Some(p) => parse_indices(p)?
            .into_iter()
            .map(|j| {
                j.checked_sub(1)
                    .filter(|&j| j < r)
                    .ok_or_else(|| CliError::Usage(format!("protected index {j} outside 1..={r}")))
            })
            .collect::<CliResult<Vec<_>>>()?,
        None => Vec::new(),
    };
    if s.trim() == "all" {
        return Ok(enumerate_candidates(r, &protected)?);
    }
    let sets = s.split(';').map(|part| parse_subset(part, r)).collect::<CliResult<Vec<_>>>()?;
    if let Some(bad) = sets.iter().find(|set| protected.iter().any(|&j| !set.contains(j))) {
        return Err(CliError::Usage(format!("candidate {bad} lacks a protected covariate")));
    }
    Ok(sets)
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    serde_json::from_reader(BufReader::new(open(path)?))
        .map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

fn read_dataset(path: &Path) -> CliResult<Dataset> {
    Ok(load_dataset(BufReader::new(open(path)?))?)
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn io_stdout(e: std::io::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<stdout>"), source: e }
}

fn fmt_num(v: f64) -> String {
    format!("{v:>14.6e}")
}

pub fn fit_table(est: &StepEstimate) -> String {
    let cols = est.index_set.one_based();
    let mut s = String::from("      time");
    for j in &cols {
        let _ = write!(s, " {:>14} {:>14}", format!("dA{j}"), format!("A{j}"));
    }
    s.push('\n');
    let mut cum = vec![0.0; cols.len()];
    for (u, inc) in est.grid.times.iter().zip(&est.increments) {
        let _ = write!(s, "{u:>10.4}");
        for (c, d) in cum.iter_mut().zip(inc) {
            *c += d;
            let _ = write!(s, " {} {}", fmt_num(*d), fmt_num(*c));
        }
        s.push('\n');
    }
    s
}

pub fn fic_table(report: &FicReport) -> String {
    let mut s = format!("{:>4}  {:<16} {:>14} {:>14} {:>14}\n", "rank", "I", "sqb_hat", "var_hat", "FIC");
    for (k, c) in report.feasible().enumerate() {
        let flag = if c.negative_variance { "  (negative variance)" } else { "" };
        let _ = writeln!(
            s,
            "{:>4}  {:<16} {} {} {}{flag}",
            k + 1,
            c.index_set.to_string(),
            fmt_num(c.sqb_hat.unwrap_or(f64::NAN)),
            fmt_num(c.var_hat.unwrap_or(f64::NAN)),
            fmt_num(c.score.unwrap_or(f64::NAN)),
        );
    }
    for c in report.infeasible() {
        let _ = writeln!(s, "   -  {:<16} infeasible: {}", c.index_set.to_string(), c.reason.as_deref().unwrap_or(""));
    }
    match &report.winner {
        Some(w) => {
            let _ = writeln!(s, "winner: {w}");
        }
        None => s.push_str("winner: none\n"),
    }
    s
}

fn emit<T: Serialize>(value: &T, table: String, format: Format, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let json = serde_json::to_string_pretty(value).expect("artifact serializes") + "\n";
    if let Some(path) = out {
        write_file(path, json.as_bytes())?;
    }
    match format {
        Format::Json => stdout.write_all(json.as_bytes()),
        Format::Table => stdout.write_all(table.as_bytes()),
    }
    .map_err(io_stdout)
}

pub fn cmd_fit(args: &FitArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let clock = Instant::now();
    let d = read_dataset(&args.data)?;
    let set = match &args.subset {
        Some(s) => parse_subset(s, d.r())?,
        None => IndexSet::full(d.r()),
    };
    let tau = args.tau.unwrap_or_else(|| d.max_event_time());
    let est = fit_submodel(&d, &set, tau)?;
    emit(&est, fit_table(&est), args.format, args.out.as_deref(), stdout)?;
    if let Some(out) = &args.out {
        RunManifest::new("fit", &[&args.data], None, &[out]).finish(clock)?;
    }
    Ok(())
}

pub fn fic_focal(args: &FicArgs) -> CliResult<Focal> {
    if let Some(path) = &args.weights {
        return Ok(Focal::Weighted(read_json::<WeightSpec>(path)?));
    }
    let x = parse_vector(args.x.as_deref().ok_or_else(|| CliError::Usage("--x is required without --weights".into()))?)?;
    match (args.t, args.t1, args.t2) {
        (Some(t), None, None) => Ok(Focal::Point { x, t }),
        (None, Some(t1), Some(t2)) => Ok(Focal::Interval { x, t1, t2 }),
        _ => Err(CliError::Usage("give either --t or both --t1 and --t2".into())),
    }
}

pub fn cmd_fic(args: &FicArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let clock = Instant::now();
    let d = read_dataset(&args.data)?;
    let candidates = parse_candidates(&args.candidates, d.r(), args.protected.as_deref())?;
    let focal = fic_focal(args)?;
    let report = FicEngine::new(&d).rank_models(&candidates, &focal)?;
    emit(&report, fic_table(&report), args.format, args.out.as_deref(), stdout)?;
    if let Some(out) = &args.out {
        let mut configs: Vec<&Path> = vec![&args.data];
        configs.extend(args.weights.as_deref());
        RunManifest::new("fic", &configs, None, &[out]).finish(clock)?;
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let clock = Instant::now();
    let mut cfg: SimConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let d = simulate_dataset(&cfg)?;
    let manifest = RunManifest::new("simulate", &[&args.config], Some(cfg.seed), &[&args.out]);
    let file = File::create(&args.out).map_err(|source| CliError::Io { path: args.out.clone(), source })?;
    let mut w = BufWriter::new(file);
    let io = |source| CliError::Io { path: args.out.clone(), source };
    w.write_all(manifest.csv_comment().as_bytes()).map_err(io)?;
    d.write_csv(&mut w)?;
    w.flush().map_err(io)?;
    manifest.finish(clock)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OracleInput {
    Many(Vec<OracleConfig>),
    One(Box<OracleConfig>),
}

/// One line of the oracle table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub config: usize,
    pub n: usize,
    #[serde(rename = "I")]
    pub index_set: String,
    pub bias: f64,
    pub sqb: f64,
    pub var: f64,
    pub mse: f64,
    pub submodel_preferred: bool,
    pub mc_mean: Option<f64>,
    pub mc_se: Option<f64>,
    pub mc_used: Option<usize>,
    pub mc_dropped: Option<usize>,
}

pub fn oracle_rows(
    configs: &[OracleConfig],
    ns: &[usize],
    candidates: &str,
    replicate: Option<usize>,
    seed: u64,
) -> CliResult<Vec<OracleRow>> {
    let mut jobs = Vec::new();
    for (k, cfg) in configs.iter().enumerate() {
        cfg.validate()?;
        for set in parse_candidates(candidates, cfg.alphas.len(), None)? {
            for &n in ns {
                jobs.push((k, set.clone(), n));
            }
        }
    }
    jobs.par_iter()
        .map(|(k, set, n)| -> CliResult<OracleRow> {
            let cfg = &configs[*k];
            let risk = exact_risk(cfg, set, *n)?;
            let radius = tolerance_radius(cfg, set, *n)?;
            let mut row = OracleRow {
                config: *k,
                n: *n,
                index_set: set.to_string(),
                bias: risk.bias,
                sqb: risk.sqb,
                var: risk.var,
                mse: risk.mse,
                submodel_preferred: radius.submodel_preferred,
                mc_mean: None,
                mc_se: None,
                mc_used: None,
                mc_dropped: None,
            };
            if let Some(reps) = replicate {
                let sim = SimConfig::from_oracle(cfg, *n, seed);
                let mc = replicate_mse(&sim, set, &cfg.x, cfg.t, reps)?;
                row.mc_mean = Some(mc.mean);
                row.mc_se = Some(mc.se);
                row.mc_used = Some(mc.used);
                row.mc_dropped = Some(mc.dropped);
            }
            Ok(row)
        })
        .collect()
}

pub fn cmd_oracle(args: &OracleArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let clock = Instant::now();
    let configs = match read_json::<OracleInput>(&args.config)? {
        OracleInput::Many(v) => v,
        OracleInput::One(c) => vec![*c],
    };
    let ns = parse_indices(&args.n)?;
    if ns.contains(&0) {
        return Err(CliError::Usage("sample sizes must be positive".into()));
    }
    let rows = oracle_rows(&configs, &ns, &args.candidates, args.replicate, args.seed)?;
    let outputs: Vec<&Path> = args.out.iter().map(|p| p.as_path()).collect();
    let manifest = RunManifest::new("oracle", &[&args.config], args.replicate.map(|_| args.seed), &outputs);
    let mut buf = manifest.csv_comment().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in &rows {
            w.serialize(row).map_err(|e| CliError::Usage(format!("csv: {e}")))?;
        }
        w.flush().map_err(io_stdout)?;
    }
    match &args.out {
        Some(path) => {
            write_file(path, &buf)?;
            manifest.finish(clock)
        }
        None => stdout.write_all(&buf).map_err(io_stdout),
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let go = |out: &mut Vec<u8>| match &cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Fic(a) => cmd_fic(a, out),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Oracle(a) => cmd_oracle(a, out),
    };
    let mut buf = Vec::new();
    match cli.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
            .install(|| go(&mut buf))?,
        None => go(&mut buf)?,
    }
    stdout.write_all(&buf).map_err(io_stdout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[test]
    fn vectors_and_subsets() {
        assert_eq!(parse_vector("1, -2.5,3e1").unwrap(), vec![1.0, -2.5, 30.0]);
        assert!(parse_vector("1,,2").is_err());
        assert_eq!(parse_subset("3,1", 3).unwrap(), IndexSet::new(&[1, 3], 3).unwrap());
        assert!(parse_subset("0", 3).is_err());
        assert!(parse_subset("4", 3).is_err());
    }

    #[test]
    fn candidate_lists() {
        assert_eq!(parse_candidates("all", 3, None).unwrap().len(), 7);
        let protected = parse_candidates("all", 3, Some("1")).unwrap();
        assert_eq!(protected.len(), 4);
        assert!(protected.iter().all(|s| s.contains(0)));
        let listed = parse_candidates("1; 1,2", 2, None).unwrap();
        assert_eq!(listed, vec![IndexSet::new(&[1], 2).unwrap(), IndexSet::full(2)]);
        assert!(matches!(parse_candidates("2", 2, Some("1")), Err(CliError::Usage(_))));
        assert!(matches!(parse_candidates("all", 2, Some("3")), Err(CliError::Usage(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Fic(FicError::Singular { time: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::Fic(FicError::TooManySingular { dropped: 6, reps: 10 }).exit_code(), 3);
        assert_eq!(CliError::Fic(FicError::AllInfeasible).exit_code(), 4);
        assert_eq!(CliError::Fic(FicError::Validation("x".into())).exit_code(), 2);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
    }

    #[test]
    fn manifest_comment_has_no_timing() {
        let m = RunManifest::new("simulate", &[Path::new("a.json")], Some(7), &[Path::new("out.csv")]);
        let c = m.csv_comment();
        assert_eq!(c, format!("# aalen-fic {VERSION} simulate\n# config: a.json\n# seed: 7\n# output: out.csv\n"));
        assert_eq!(RunManifest::sidecar_path(Path::new("d/out.csv")), PathBuf::from("d/out.csv.manifest.json"));
    }

    #[test]
    fn focal_from_arguments() {
        let cli = Cli::try_parse_from(["aalen-fic", "fic", "d.csv", "--x", "-1,2", "--t1", "0", "--t2", "3"]).unwrap();
        let Command::Fic(args) = &cli.command else { panic!("parsed {:?}", cli.command) };
        assert_eq!(fic_focal(args).unwrap(), Focal::Interval { x: vec![-1.0, 2.0], t1: 0.0, t2: 3.0 });
        assert!(Cli::try_parse_from(["aalen-fic", "fic", "d.csv", "--x", "1", "--t", "1", "--t1", "0", "--t2", "1"]).is_err());
        let cli = Cli::try_parse_from(["aalen-fic", "fic", "d.csv", "--x", "1"]).unwrap();
        let Command::Fic(args) = &cli.command else { unreachable!() };
        assert!(matches!(fic_focal(args), Err(CliError::Usage(_))));
    }
}
