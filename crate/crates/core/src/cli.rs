//! Command-line front end.
//!
//! Standard output carries machine-readable results only (`key=value` lines
//! or tables); progress goes to standard error. Exit codes: 0 success, 1
//! usage error, 2 runtime error.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::dynamics::{
    run_with, CopyRule, SimError, SimParams, TraceWriter, DEFAULT_ACTIVE_THRESHOLD,
};
use crate::experiment::{
    self, ExperimentConfig, ExperimentError, NetworkSpec, RunSummary, DEFAULT_PERIODS,
    DEFAULT_TOP_K,
};
use crate::metrics::{degree_stats, expected_choice_count};
use crate::netgen::{serialize_network, NetError, Preset, Topology};

pub const OUT_ENV: &str = "CHOICENET_OUT";

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "choicenet",
    version,
    about = "Neutral copy-or-innovate choice dynamics on networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a network and write it as an edge list.
    Net(NetArgs),
    /// Simulate a single run and print its statistics.
    Run(RunArgs),
    /// Run an ensemble sweep and write all result files.
    Sweep(SweepArgs),
    /// Print the popularity, overlap and active-choice grids of a finished sweep.
    Stats(StatsArgs),
    /// Export long-format figure data from a finished sweep.
    Figures(FiguresArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct TopologyChoice {
    /// lattice22, complete475, metafunnel533 or superstar2420
    #[arg(long)]
    preset: Option<Preset>,
    /// Square lattice side length
    #[arg(long, value_name = "N")]
    lattice: Option<usize>,
    /// Complete graph node count
    #[arg(long, value_name = "N")]
    complete: Option<usize>,
    /// Metafunnel parameters
    #[arg(long, value_name = "K,STEPS,G", value_parser = int_list::<3>)]
    metafunnel: Option<[usize; 3]>,
    /// Superstar parameters
    #[arg(long, value_name = "S,H", value_parser = int_list::<2>)]
    superstar: Option<[usize; 2]>,
}

fn int_list<const N: usize>(s: &str) -> Result<[usize; N], String> {
    let values = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{v}` is not an integer"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|_| format!("expected {N} comma-separated integers"))
}

impl TopologyChoice {
    fn spec(&self) -> NetworkSpec {
        if let Some(p) = self.preset {
            return NetworkSpec::Preset(p);
        }
        let topology = if let Some(n) = self.lattice {
            Topology::Lattice { n }
        } else if let Some(n) = self.complete {
            Topology::Complete { n }
        } else if let Some([k, steps, g]) = self.metafunnel {
            Topology::Metafunnel { k, steps, g }
        } else if let Some([s, h]) = self.superstar {
            Topology::Superstar { s, h }
        } else {
            unreachable!("clap requires one topology flag")
        };
        NetworkSpec::Custom(topology)
    }
}

#[derive(Debug, Args)]
pub struct NetArgs {
    #[command(flatten)]
    topology: TopologyChoice,
    /// Output file (default: `<label>.edges` in $CHOICENET_OUT or the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct NetworkSource {
    #[arg(long)]
    preset: Option<Preset>,
    /// Edge-list file written by `net`
    #[arg(long)]
    network_file: Option<PathBuf>,
    /// Descriptor such as `superstar:s=24,h=20`
    #[arg(long)]
    network: Option<String>,
}

impl NetworkSource {
    fn spec(&self) -> Result<NetworkSpec> {
        Ok(match (&self.preset, &self.network_file, &self.network) {
            (Some(p), _, _) => NetworkSpec::Preset(*p),
            (_, Some(path), _) => NetworkSpec::File(path.clone()),
            (_, _, Some(d)) => NetworkSpec::Custom(Topology::parse_descriptor(d)?),
            _ => unreachable!("clap requires one network source"),
        })
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    source: NetworkSource,
    /// Innovation probability per agent per period
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Number of periods, including the initial one
    #[arg(long, default_value_t = DEFAULT_PERIODS)]
    periods: u32,
    /// RNG seed for the run
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Size of the top lists compared by the overlap statistic
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    /// Adopters needed for a choice to count as active
    #[arg(long, default_value_t = DEFAULT_ACTIVE_THRESHOLD)]
    threshold: u32,
    /// include-self or neighbors-only
    #[arg(long, default_value = "include-self")]
    copy_rule: CopyRule,
    /// Write `period,choice_id,adopter_count` rows for every period
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML file with ExperimentConfig keys; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset to include (repeatable)
    #[arg(long)]
    preset: Vec<Preset>,
    /// Edge-list file to include (repeatable)
    #[arg(long)]
    network_file: Vec<PathBuf>,
    /// Comma-separated innovation rates
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    /// Periods per run, including the initial one
    #[arg(long)]
    periods: Option<u32>,
    /// Runs per (network, mu) cell
    #[arg(long)]
    runs: Option<u32>,
    /// Master seed; per-run seeds are derived from it
    #[arg(long)]
    seed: Option<u64>,
    /// Size of the top lists compared by the overlap statistic
    #[arg(long)]
    top_k: Option<usize>,
    /// Adopters needed for a choice to count as active
    #[arg(long)]
    threshold: Option<u32>,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long)]
    workers: Option<usize>,
    /// include-self or neighbors-only
    #[arg(long)]
    copy_rule: Option<CopyRule>,
    /// Results directory
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Directory written by `sweep`
    #[arg(long)]
    results: PathBuf,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// Directory written by `sweep`
    #[arg(long)]
    results: PathBuf,
    /// Directory for the long-format CSVs
    #[arg(long, env = OUT_ENV)]
    out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_usage_error(&e) {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

/// Bad parameters, as opposed to failures while doing the work.
fn is_usage_error(e: &anyhow::Error) -> bool {
    fn net(e: &NetError) -> bool {
        matches!(
            e,
            NetError::InvalidParameter(_) | NetError::UnknownPreset(_)
        )
    }
    fn sim(e: &SimError) -> bool {
        matches!(
            e,
            SimError::InvalidMu(_) | SimError::NoPeriods | SimError::InvalidThreshold
        )
    }
    e.chain().any(|cause| {
        if let Some(e) = cause.downcast_ref::<ExperimentError>() {
            return match e {
                ExperimentError::Config(_) => true,
                ExperimentError::Net(e) => net(e),
                ExperimentError::Sim(e) => sim(e),
                _ => false,
            };
        }
        cause.downcast_ref::<NetError>().is_some_and(net)
            || cause.downcast_ref::<SimError>().is_some_and(sim)
    })
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Net(args) => cmd_net(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Figures(args) => cmd_figures(args),
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn cmd_net(args: NetArgs) -> Result<()> {
    let spec = args.topology.spec();
    let net = spec.load()?;
    let out = args
        .out
        .unwrap_or_else(|| default_out_dir().join(format!("{}.edges", spec.label())));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(&out, serialize_network(&net))
        .with_context(|| format!("writing {}", out.display()))?;
    let stats = degree_stats(&net);
    println!("network={}", net.topology());
    println!("nodes={}", net.node_count());
    println!("edges={}", net.edge_count());
    println!("degree_mean={}", stats.mean);
    println!("degree_variance={}", stats.variance);
    println!("degree_skewness={}", stats.skewness);
    println!("file={}", out.display());
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let net = args.source.spec()?.load()?;
    if args.top_k == 0 {
        return Err(ExperimentError::Config("--top-k must be at least 1".into()).into());
    }
    let params = SimParams::new(args.mu, args.periods, args.seed)?.with_copy_rule(args.copy_rule);
    let rec = match &args.trace {
        Some(path) => {
            let file =
                fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut trace = TraceWriter::new(BufWriter::new(file));
            let rec = run_with(&net, &params, args.threshold, |t, tallies| {
                trace.record(t, tallies)
            })?;
            trace
                .finish()
                .with_context(|| format!("writing {}", path.display()))?;
            rec
        }
        None => run_with(&net, &params, args.threshold, |_, _| {})?,
    };
    let summary = RunSummary::from_record(&rec, args.top_k, args.threshold);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "network={}", net.topology())?;
    writeln!(out, "nodes={}", net.node_count())?;
    writeln!(out, "mu={}", args.mu)?;
    writeln!(out, "periods={}", args.periods)?;
    writeln!(out, "seed={}", args.seed)?;
    writeln!(out, "copy_rule={}", args.copy_rule.name())?;
    writeln!(out, "distinct_choices={}", summary.distinct)?;
    writeln!(
        out,
        "expected_distinct_choices={}",
        expected_choice_count(net.node_count(), args.mu, args.periods)
    )?;
    writeln!(out, "top1_popularity={}", summary.top1)?;
    writeln!(out, "overlap={}", summary.overlap)?;
    writeln!(
        out,
        "active_mean={}",
        summary.active_total as f64 / f64::from(args.periods)
    )?;
    Ok(())
}

fn sweep_config(args: &SweepArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if !args.preset.is_empty() || !args.network_file.is_empty() {
        cfg.networks = args
            .preset
            .iter()
            .map(|&p| NetworkSpec::Preset(p))
            .chain(args.network_file.iter().cloned().map(NetworkSpec::File))
            .collect();
    }
    if let Some(mu) = &args.mu {
        cfg.mu = mu.clone();
    }
    macro_rules! take {
        ($($field:ident),*) => { $( if let Some(v) = args.$field { cfg.$field = v; } )* };
    }
    take!(periods, runs, seed, top_k, threshold, copy_rule);
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    Ok(cfg)
}

fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let probe = dir.join(".choicenet-write-check");
    fs::write(&probe, b"").with_context(|| format!("{} is not writable", dir.display()))?;
    fs::remove_file(&probe).ok();
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = sweep_config(&args)?;
    cfg.validate()?;
    let out = cfg.out.clone().unwrap_or_else(default_out_dir);
    for spec in &cfg.networks {
        if let NetworkSpec::File(path) = spec {
            if !path.is_file() {
                bail!("network file {} does not exist", path.display());
            }
        }
    }
    ensure_writable(&out)?;

    let total = cfg.networks.len() * cfg.mu.len();
    let mut done = 0;
    let stats = experiment::run_ensemble_with_progress(&cfg, |cell| {
        done += 1;
        eprintln!(
            "[{done}/{total}] {} mu={}: top1={:.1} overlap={:.2} active={:.2}",
            cell.network, cell.mu, cell.top1.mean, cell.overlap.mean, cell.active.mean
        );
    })?;
    experiment::write_outputs(&stats, &cfg, &out)?;
    println!("{}", out.display());
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let rows = experiment::read_summary(&args.results)?;
    print!("{}", experiment::summarize(&rows));
    Ok(())
}

fn cmd_figures(args: FiguresArgs) -> Result<()> {
    let counts = experiment::export_figures(&args.results, &args.out)?;
    println!("ranksize_rows={}", counts.rank_size);
    println!("lifespans_survivors_rows={}", counts.survivor_lifespans);
    println!("lifespans_popular_rows={}", counts.popular_lifespans);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("choicenet").chain(args.iter().copied()))
    }

    #[test]
    fn topology_flags_are_exclusive() {
        assert!(parse(&["net", "--preset", "lattice22", "--lattice", "3"]).is_err());
        assert!(parse(&["net"]).is_err());
        assert!(parse(&["net", "--superstar", "24"]).is_err());
        let Command::Net(args) = parse(&["net", "--metafunnel", "5,3,3"]).unwrap().command else {
            panic!()
        };
        assert_eq!(
            args.topology.spec(),
            NetworkSpec::Preset(Preset::Metafunnel533).custom()
        );
    }

    #[test]
    fn sweep_flags_override_file_values() {
        let Command::Sweep(args) = parse(&[
            "sweep",
            "--mu",
            "0,0.5",
            "--runs",
            "3",
            "--preset",
            "complete475",
            "--workers",
            "2",
        ])
        .unwrap()
        .command
        else {
            panic!()
        };
        let cfg = sweep_config(&args).unwrap();
        assert_eq!(cfg.mu, vec![0.0, 0.5]);
        assert_eq!(cfg.runs, 3);
        assert_eq!(cfg.periods, 2000);
        assert_eq!(cfg.workers, Some(2));
        assert_eq!(cfg.networks, vec![NetworkSpec::Preset(Preset::Complete475)]);
    }

    #[test]
    fn unknown_preset_is_a_usage_error() {
        assert!(parse(&["net", "--preset", "ring9"]).is_err());
        assert_eq!(
            run_cli(["choicenet", "net", "--preset", "ring9"]),
            EXIT_USAGE
        );
        assert_eq!(run_cli(["choicenet", "--help"]), 0);
    }

    impl NetworkSpec {
        fn custom(self) -> NetworkSpec {
            match self {
                NetworkSpec::Preset(p) => NetworkSpec::Custom(p.topology()),
                other => other,
            }
        }
    }
}
