//! Ensemble sweeps over networks and innovation rates.
//!
//! Each `(network, mu)` cell runs `runs` independent simulations. Every run is
//! reduced to a [`RunSummary`] as soon as it finishes, and summaries are folded
//! into integer accumulators. Integer sums are exact, so the aggregate does
//! not depend on how rayon splits or orders the work.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{run_with, CopyRule, SimError, SimParams, DEFAULT_ACTIVE_THRESHOLD};
use crate::metrics::{self, RunRecord};
use crate::netgen::{self, NetError, Network, Preset, Topology};

pub const DEFAULT_MU: [f64; 6] = [0.0, 0.0025, 0.005, 0.0075, 0.01, 0.05];
pub const DEFAULT_PERIODS: u32 = 2000;
pub const DEFAULT_RUNS: u32 = 500;
pub const DEFAULT_TOP_K: usize = 100;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("missing input files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingInputs(Vec<PathBuf>),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Where a network comes from: a named preset, explicit constructor
/// parameters, or an edge-list file.
///
/// The string form is the preset name, a descriptor such as
/// `superstar:s=24,h=20`, or `file:<path>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NetworkSpec {
    Preset(Preset),
    Custom(Topology),
    File(PathBuf),
}

impl NetworkSpec {
    pub fn parse(s: &str) -> Result<Self, NetError> {
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(NetworkSpec::File(PathBuf::from(path)));
        }
        if s.contains(':') {
            return Topology::parse_descriptor(s).map(NetworkSpec::Custom);
        }
        s.parse().map(NetworkSpec::Preset)
    }

    /// Short name used in output file names and tables.
    pub fn label(&self) -> String {
        match self {
            NetworkSpec::Preset(p) => p.name().to_string(),
            NetworkSpec::Custom(t) => {
                let mut label = t.kind().name().to_string();
                for (key, value) in t.params() {
                    let _ = write!(label, "-{key}{value}");
                }
                label
            }
            NetworkSpec::File(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "network".to_string()),
        }
    }

    pub fn load(&self) -> Result<Network, ExperimentError> {
        match self {
            NetworkSpec::Preset(p) => Ok(p.build()),
            NetworkSpec::Custom(t) => Ok(t.build()?),
            NetworkSpec::File(path) => {
                let doc = fs::read_to_string(path).map_err(io_err(path))?;
                Ok(netgen::parse_network(&doc)?)
            }
        }
    }
}

impl TryFrom<String> for NetworkSpec {
    type Error = NetError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        NetworkSpec::parse(&s)
    }
}

impl From<NetworkSpec> for String {
    fn from(spec: NetworkSpec) -> String {
        match spec {
            NetworkSpec::Preset(p) => p.name().to_string(),
            NetworkSpec::Custom(t) => t.to_string(),
            NetworkSpec::File(path) => format!("file:{}", path.display()),
        }
    }
}

/// Sweep settings. Missing keys in a config file take the defaults below,
/// which reproduce the canonical grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub networks: Vec<NetworkSpec>,
    pub mu: Vec<f64>,
    pub periods: u32,
    pub runs: u32,
    pub seed: u64,
    pub top_k: usize,
    pub threshold: u32,
    pub copy_rule: CopyRule,
    /// Parallel runs; `None` uses every available core.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            networks: Preset::ALL.into_iter().map(NetworkSpec::Preset).collect(),
            mu: DEFAULT_MU.to_vec(),
            periods: DEFAULT_PERIODS,
            runs: DEFAULT_RUNS,
            seed: 0,
            top_k: DEFAULT_TOP_K,
            threshold: DEFAULT_ACTIVE_THRESHOLD,
            copy_rule: CopyRule::default(),
            workers: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: String| Err(ExperimentError::Config(msg));
        if self.networks.is_empty() {
            return fail("at least one network is required".into());
        }
        if self.mu.is_empty() {
            return fail("at least one mu value is required".into());
        }
        if let Some(mu) = self.mu.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return fail(format!("mu values must lie in [0, 1], got {mu}"));
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if self.periods == 0 {
            return fail("periods must be at least 1".into());
        }
        if self.top_k == 0 {
            return fail("top_k must be at least 1".into());
        }
        if self.threshold == 0 {
            return fail("threshold must be at least 1".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be at least 1".into());
        }
        let mut labels = HashSet::new();
        for spec in &self.networks {
            let label = spec.label();
            if label.contains([',', '/', '\\']) || label.is_empty() {
                return fail(format!(
                    "network label `{label}` is not usable in file names"
                ));
            }
            if !labels.insert(label.clone()) {
                return fail(format!("network `{label}` appears more than once"));
            }
        }
        let mut mus = HashSet::new();
        for mu in &self.mu {
            if !mus.insert(mu_label(*mu)) {
                return fail(format!("mu {mu} appears more than once"));
            }
        }
        Ok(())
    }
}

/// `mu` as it appears in file names and CSV cells.
pub fn mu_label(mu: f64) -> String {
    format!("{mu}")
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of run `run` in cell `(network_index, mu_index)`:
/// `mix(mix(mix(master ^ network_index) ^ mu_index) ^ run)` with the
/// SplitMix64 finaliser as `mix`.
pub fn derive_seed(master: u64, network_index: usize, mu_index: usize, run: u32) -> u64 {
    let cell = splitmix64(splitmix64(master ^ network_index as u64) ^ mu_index as u64);
    splitmix64(cell ^ u64::from(run))
}

/// What one run contributes to its cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub rank_size: Vec<u64>,
    /// Lifespans of the top-k survivors, longest first.
    pub survivor_lifespans: Vec<u32>,
    /// Lifespans of the top-k most selected choices, in popularity order.
    pub popular_lifespans: Vec<u32>,
    pub top1: u64,
    pub overlap: u64,
    /// Sum over periods of the active-choice count.
    pub active_total: u64,
    pub distinct: u64,
}

impl RunSummary {
    pub fn from_record(rec: &RunRecord, top_k: usize, threshold: u32) -> Self {
        let rank_size = metrics::rank_size(rec);
        let survivor_lifespans = metrics::top_survivors(rec, top_k)
            .into_iter()
            .map(|(_, span)| span)
            .collect();
        let popular_lifespans = metrics::top_popular(rec, top_k)
            .into_iter()
            .map(|(id, _)| rec.choices()[id as usize].lifespan())
            .collect();
        let start = (threshold as usize).min(rec.adopter_histogram().len());
        RunSummary {
            top1: rank_size.first().copied().unwrap_or(0),
            rank_size,
            survivor_lifespans,
            popular_lifespans,
            overlap: metrics::top_overlap(rec, top_k) as u64,
            active_total: rec.adopter_histogram()[start..].iter().sum(),
            distinct: rec.distinct_choices_ever(),
        }
    }
}

/// Exact running sums of a non-negative integer statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Moments {
    sum: u128,
    sum_sq: u128,
}

impl Moments {
    fn push(&mut self, x: u64) {
        let x = u128::from(x);
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, other: Moments) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    /// Mean and standard error of `x / scale` over `n` samples.
    fn estimate(&self, n: u64, scale: f64) -> Estimate {
        let n128 = u128::from(n);
        let mean = self.sum as f64 / n as f64 / scale;
        let se = if n > 1 {
            let spread = n128 * self.sum_sq - self.sum * self.sum;
            let variance = spread as f64 / (n128 * (n128 - 1)) as f64;
            (variance / n as f64).sqrt() / scale
        } else {
            0.0
        };
        Estimate { mean, se }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean; 0 for a single run.
    pub se: f64,
}

fn add_padded<T: Into<u64> + Copy>(sums: &mut Vec<u64>, values: &[T]) {
    if sums.len() < values.len() {
        sums.resize(values.len(), 0);
    }
    for (s, &v) in sums.iter_mut().zip(values) {
        *s += v.into();
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct CellAccumulator {
    runs: u64,
    rank_size: Vec<u64>,
    survivor_lifespans: Vec<u64>,
    popular_lifespans: Vec<u64>,
    top1: Moments,
    overlap: Moments,
    active: Moments,
    distinct: Moments,
}

impl CellAccumulator {
    fn push(mut self, run: RunSummary) -> Self {
        self.runs += 1;
        add_padded(&mut self.rank_size, &run.rank_size);
        add_padded(&mut self.survivor_lifespans, &run.survivor_lifespans);
        add_padded(&mut self.popular_lifespans, &run.popular_lifespans);
        self.top1.push(run.top1);
        self.overlap.push(run.overlap);
        self.active.push(run.active_total);
        self.distinct.push(run.distinct);
        self
    }

    fn merge(mut self, other: CellAccumulator) -> Self {
        self.runs += other.runs;
        add_padded(&mut self.rank_size, &other.rank_size);
        add_padded(&mut self.survivor_lifespans, &other.survivor_lifespans);
        add_padded(&mut self.popular_lifespans, &other.popular_lifespans);
        self.top1.merge(other.top1);
        self.overlap.merge(other.overlap);
        self.active.merge(other.active);
        self.distinct.merge(other.distinct);
        self
    }
}

/// Averages for one `(network, mu)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStats {
    pub network: String,
    pub network_index: usize,
    pub node_count: usize,
    pub mu: f64,
    pub mu_index: usize,
    pub runs: u64,
    pub periods: u32,
    /// Rank-wise mean over runs, zero-padded to the longest run.
    pub rank_size: Vec<f64>,
    pub survivor_lifespans: Vec<f64>,
    pub popular_lifespans: Vec<f64>,
    pub top1: Estimate,
    pub overlap: Estimate,
    /// Mean active choices per period.
    pub active: Estimate,
    pub distinct: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub cells: Vec<CellStats>,
}

impl EnsembleStats {
    pub fn cell(&self, network: &str, mu: f64) -> Option<&CellStats> {
        self.cells
            .iter()
            .find(|c| c.network == network && c.mu == mu)
    }

    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.cells
            .iter()
            .map(|c| SummaryRow {
                network: c.network.clone(),
                mu: mu_label(c.mu),
                runs: c.runs,
                nodes: c.node_count,
                top1_popularity: c.top1.mean,
                top1_popularity_se: c.top1.se,
                overlap: c.overlap.mean,
                overlap_se: c.overlap.se,
                active_mean: c.active.mean,
                active_mean_se: c.active.se,
                distinct_mean: c.distinct.mean,
                distinct_mean_se: c.distinct.se,
            })
            .collect()
    }
}

fn cell_stats(
    acc: CellAccumulator,
    label: String,
    network_index: usize,
    node_count: usize,
    mu: f64,
    mu_index: usize,
    periods: u32,
) -> CellStats {
    let n = acc.runs;
    let mean_curve = |sums: &[u64]| sums.iter().map(|&s| s as f64 / n as f64).collect();
    CellStats {
        network: label,
        network_index,
        node_count,
        mu,
        mu_index,
        runs: n,
        periods,
        rank_size: mean_curve(&acc.rank_size),
        survivor_lifespans: mean_curve(&acc.survivor_lifespans),
        popular_lifespans: mean_curve(&acc.popular_lifespans),
        top1: acc.top1.estimate(n, 1.0),
        overlap: acc.overlap.estimate(n, 1.0),
        active: acc.active.estimate(n, f64::from(periods)),
        distinct: acc.distinct.estimate(n, 1.0),
    }
}

/// Runs every cell of the sweep.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleStats, ExperimentError> {
    run_ensemble_with_progress(cfg, |_| {})
}

/// Like [`run_ensemble`], calling `progress` after each finished cell.
pub fn run_ensemble_with_progress<F>(
    cfg: &ExperimentConfig,
    mut progress: F,
) -> Result<EnsembleStats, ExperimentError>
where
    F: FnMut(&CellStats),
{
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(workers) = cfg.workers {
        builder = builder.num_threads(workers);
    }
    let pool = builder
        .build()
        .map_err(|e| ExperimentError::Config(format!("cannot start worker pool: {e}")))?;

    let mut cells = Vec::with_capacity(cfg.networks.len() * cfg.mu.len());
    for (network_index, spec) in cfg.networks.iter().enumerate() {
        let net = spec.load()?;
        for (mu_index, &mu) in cfg.mu.iter().enumerate() {
            let one_run = |run: u32| -> Result<RunSummary, SimError> {
                let seed = derive_seed(cfg.seed, network_index, mu_index, run);
                let params = SimParams::new(mu, cfg.periods, seed)?.with_copy_rule(cfg.copy_rule);
                let rec = run_with(&net, &params, cfg.threshold, |_, _| {})?;
                Ok(RunSummary::from_record(&rec, cfg.top_k, cfg.threshold))
            };
            let acc = pool.install(|| {
                (0..cfg.runs)
                    .into_par_iter()
                    .map(one_run)
                    .try_fold(CellAccumulator::default, |acc, run| {
                        run.map(|r| acc.push(r))
                    })
                    .try_reduce(CellAccumulator::default, |a, b| Ok(a.merge(b)))
            })?;
            let stats = cell_stats(
                acc,
                spec.label(),
                network_index,
                net.node_count(),
                mu,
                mu_index,
                cfg.periods,
            );
            progress(&stats);
            cells.push(stats);
        }
    }
    Ok(EnsembleStats { cells })
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub network: String,
    pub mu: String,
    pub runs: u64,
    pub nodes: usize,
    pub top1_popularity: f64,
    pub top1_popularity_se: f64,
    pub overlap: f64,
    pub overlap_se: f64,
    pub active_mean: f64,
    pub active_mean_se: f64,
    pub distinct_mean: f64,
    pub distinct_mean_se: f64,
}

pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TABLES_FILE: &str = "tables.txt";

/// The three per-cell curve files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    RankSize,
    SurvivorLifespans,
    PopularLifespans,
}

impl CurveKind {
    pub const ALL: [CurveKind; 3] = [
        CurveKind::RankSize,
        CurveKind::SurvivorLifespans,
        CurveKind::PopularLifespans,
    ];

    fn prefix(self) -> &'static str {
        match self {
            CurveKind::RankSize => "ranksize",
            CurveKind::SurvivorLifespans => "lifespans_survivors",
            CurveKind::PopularLifespans => "lifespans_popular",
        }
    }

    fn value_column(self) -> &'static str {
        match self {
            CurveKind::RankSize => "mean_count",
            _ => "mean_lifespan",
        }
    }

    pub fn file_name(self, network: &str, mu: &str) -> String {
        format!("{}_{network}_{mu}.csv", self.prefix())
    }

    /// Name of the long-format figure-data file.
    pub fn figure_file(self) -> String {
        format!("fig_{}.csv", self.prefix())
    }

    fn curve(self, cell: &CellStats) -> &[f64] {
        match self {
            CurveKind::RankSize => &cell.rank_size,
            CurveKind::SurvivorLifespans => &cell.survivor_lifespans,
            CurveKind::PopularLifespans => &cell.popular_lifespans,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Writes the curve files, `summary.csv`, `tables.txt` and `manifest.json`.
/// Everything except the manifest's `created_unix` field is a pure function
/// of the config.
pub fn write_outputs(
    stats: &EnsembleStats,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for cell in &stats.cells {
        let mu = mu_label(cell.mu);
        for kind in CurveKind::ALL {
            let mut text = format!("rank,{}\n", kind.value_column());
            for (i, v) in kind.curve(cell).iter().enumerate() {
                let _ = writeln!(text, "{},{v}", i + 1);
            }
            write_file(&dir.join(kind.file_name(&cell.network, &mu)), &text)?;
        }
    }

    let summary_path = dir.join(SUMMARY_FILE);
    let mut writer = csv::Writer::from_path(&summary_path).map_err(csv_err(&summary_path))?;
    let rows = stats.summary_rows();
    for row in &rows {
        writer.serialize(row).map_err(csv_err(&summary_path))?;
    }
    writer.flush().map_err(io_err(&summary_path))?;

    write_file(&dir.join(TABLES_FILE), &summarize(&rows))?;
    write_file(
        &dir.join(MANIFEST_FILE),
        &manifest(stats, cfg, std::time::SystemTime::now()),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    code_version: &'static str,
    created_unix: u64,
    seed_rule: &'static str,
    config: &'a ExperimentConfig,
    cells: Vec<ManifestCell<'a>>,
}

#[derive(Serialize)]
struct ManifestCell<'a> {
    network: &'a str,
    mu: f64,
    seeds: Vec<u64>,
}

fn manifest(stats: &EnsembleStats, cfg: &ExperimentConfig, now: std::time::SystemTime) -> String {
    let created_unix = now
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let cells = stats
        .cells
        .iter()
        .map(|c| ManifestCell {
            network: &c.network,
            mu: c.mu,
            seeds: (0..c.runs as u32)
                .map(|r| derive_seed(cfg.seed, c.network_index, c.mu_index, r))
                .collect(),
        })
        .collect();
    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION"),
        created_unix,
        seed_rule: "splitmix64(splitmix64(splitmix64(seed ^ network_index) ^ mu_index) ^ run), Xoshiro256++ seed_from_u64",
        config: cfg,
        cells,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    text
}

pub fn read_summary(dir: &Path) -> Result<Vec<SummaryRow>, ExperimentError> {
    let path = dir.join(SUMMARY_FILE);
    if !path.exists() {
        return Err(ExperimentError::MissingInputs(vec![path]));
    }
    let mut reader = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
    reader
        .deserialize()
        .collect::<Result<Vec<SummaryRow>, _>>()
        .map_err(csv_err(&path))
}

/// Renders the popularity, overlap and active-choice grids (rows are
/// networks, columns are mu), each cell as `mean ± se`.
pub fn summarize(rows: &[SummaryRow]) -> String {
    let mut networks: Vec<&str> = Vec::new();
    let mut mus: Vec<&str> = Vec::new();
    for row in rows {
        if !networks.contains(&row.network.as_str()) {
            networks.push(&row.network);
        }
        if !mus.contains(&row.mu.as_str()) {
            mus.push(&row.mu);
        }
    }
    let find = |net: &str, mu: &str| rows.iter().find(|r| r.network == net && r.mu == mu);

    type Pick = fn(&SummaryRow) -> (f64, f64);
    let tables: [(&str, Pick, usize); 3] = [
        (
            "Top-1 popularity (total selections of the most selected choice)",
            |r| (r.top1_popularity, r.top1_popularity_se),
            0,
        ),
        (
            "Overlap of top-k most popular and top-k longest-lived",
            |r| (r.overlap, r.overlap_se),
            2,
        ),
        (
            "Active choices per period",
            |r| (r.active_mean, r.active_mean_se),
            2,
        ),
    ];

    let mut out = String::new();
    for (title, pick, digits) in tables {
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:<16}", "network");
        for mu in &mus {
            let _ = write!(out, " {:>20}", format!("mu={mu}"));
        }
        out.push('\n');
        for net in &networks {
            let _ = write!(out, "{net:<16}");
            for mu in &mus {
                let cell = match find(net, mu) {
                    Some(row) => {
                        let (mean, se) = pick(row);
                        format!("{mean:.digits$} ± {se:.digits$}")
                    }
                    None => "-".to_string(),
                };
                let _ = write!(out, " {cell:>20}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Row counts written by [`export_figures`], one per curve kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FigureRows {
    pub rank_size: usize,
    pub survivor_lifespans: usize,
    pub popular_lifespans: usize,
}

/// Gathers every cell's curves into long-format `network,mu,rank,value`
/// files, copying values verbatim.
pub fn export_figures(results: &Path, out: &Path) -> Result<FigureRows, ExperimentError> {
    let rows = read_summary(results)?;
    let missing: Vec<PathBuf> = rows
        .iter()
        .flat_map(|row| {
            CurveKind::ALL
                .iter()
                .map(move |k| results.join(k.file_name(&row.network, &row.mu)))
        })
        .filter(|p| !p.exists())
        .collect();
    if !missing.is_empty() {
        return Err(ExperimentError::MissingInputs(missing));
    }

    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut counts = FigureRows::default();
    for kind in CurveKind::ALL {
        let mut text = String::from("network,mu,rank,value\n");
        let mut n = 0;
        for row in &rows {
            let path = results.join(kind.file_name(&row.network, &row.mu));
            let mut reader = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
            for record in reader.records() {
                let record = record.map_err(csv_err(&path))?;
                let (Some(rank), Some(value)) = (record.get(0), record.get(1)) else {
                    return Err(ExperimentError::Config(format!(
                        "{}: expected two columns",
                        path.display()
                    )));
                };
                let _ = writeln!(text, "{},{},{rank},{value}", row.network, row.mu);
                n += 1;
            }
        }
        write_file(&out.join(kind.figure_file()), &text)?;
        match kind {
            CurveKind::RankSize => counts.rank_size = n,
            CurveKind::SurvivorLifespans => counts.survivor_lifespans = n,
            CurveKind::PopularLifespans => counts.popular_lifespans = n,
        }
    }
    Ok(counts)
}
