//! Synchronous copy-or-innovate dynamics.
//!
//! Each period every agent independently either innovates (probability `mu`)
//! and adopts a globally new choice, or copies a previous-period choice drawn
//! uniformly from its copy pool. Under [`CopyRule::IncludeSelf`] the pool is
//! the agent's neighbours plus the agent itself; under
//! [`CopyRule::NeighborsOnly`] it is the neighbours alone. Drawing a pool
//! member uniformly is the same as picking a choice with probability
//! proportional to the number of pool members holding it.
//!
//! Random draws are consumed in a fixed order: agents in ascending index, one
//! `f64` to decide innovation, then (when copying) one bounded `u32` for the
//! pool slot. Slot `degree` is the agent itself.

use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{ChoiceStats, RunRecord};
use crate::netgen::Network;

/// The generator behind every run. `seed_from_u64` expands the seed with
/// SplitMix64.
pub type SimRng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub const DEFAULT_ACTIVE_THRESHOLD: u32 = 5;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("innovation rate must lie in [0, 1], got {0}")]
    InvalidMu(f64),
    #[error("period count must be at least 1")]
    NoPeriods,
    #[error("activity threshold must be at least 1")]
    InvalidThreshold,
    #[error("agent {0} has no neighbours")]
    IsolatedAgent(usize),
    #[error("state is at period {period}, the last of {periods}")]
    PastFinalPeriod { period: u32, periods: u32 },
    #[error("state has {state} agents but the network has {network} nodes")]
    SizeMismatch { state: usize, network: usize },
}

/// Who an agent may copy from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CopyRule {
    /// Neighbours plus the agent's own previous choice.
    #[default]
    IncludeSelf,
    NeighborsOnly,
}

impl CopyRule {
    pub fn name(self) -> &'static str {
        match self {
            CopyRule::IncludeSelf => "include-self",
            CopyRule::NeighborsOnly => "neighbors-only",
        }
    }
}

impl FromStr for CopyRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "include-self" => Ok(CopyRule::IncludeSelf),
            "neighbors-only" => Ok(CopyRule::NeighborsOnly),
            other => Err(format!(
                "unknown copy rule `{other}` (expected include-self or neighbors-only)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub mu: f64,
    /// Total periods including the initial period 0.
    pub periods: u32,
    pub seed: u64,
    pub copy_rule: CopyRule,
}

impl SimParams {
    pub fn new(mu: f64, periods: u32, seed: u64) -> Result<Self, SimError> {
        let params = SimParams {
            mu,
            periods,
            seed,
            copy_rule: CopyRule::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_copy_rule(self, copy_rule: CopyRule) -> Self {
        SimParams { copy_rule, ..self }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(SimError::InvalidMu(self.mu));
        }
        if self.periods == 0 {
            return Err(SimError::NoPeriods);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    current: Vec<u64>,
    next_choice_id: u64,
    period: u32,
    scratch: Vec<u64>,
}

impl SimState {
    /// Period 0: agent `i` holds choice `i`.
    pub fn new(net: &Network) -> Self {
        let n = net.node_count();
        SimState {
            current: (0..n as u64).collect(),
            next_choice_id: n as u64,
            period: 0,
            scratch: vec![0; n],
        }
    }

    /// Builds a state from explicit choices, e.g. to probe a single step.
    pub fn from_choices(current: Vec<u64>, next_choice_id: u64, period: u32) -> Self {
        assert!(
            current.iter().all(|&c| c < next_choice_id),
            "every choice must be below next_choice_id"
        );
        let scratch = vec![0; current.len()];
        SimState {
            current,
            next_choice_id,
            period,
            scratch,
        }
    }

    pub fn current(&self) -> &[u64] {
        &self.current
    }

    pub fn next_choice_id(&self) -> u64 {
        self.next_choice_id
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    /// Advances one period, reading only the current snapshot.
    pub fn step<R: Rng>(
        &mut self,
        net: &Network,
        params: &SimParams,
        rng: &mut R,
    ) -> Result<(), SimError> {
        if self.period + 1 >= params.periods {
            return Err(SimError::PastFinalPeriod {
                period: self.period,
                periods: params.periods,
            });
        }
        self.advance(net, params.mu, params.copy_rule, rng)
    }

    /// The update rule itself, without the period-budget check.
    pub fn advance<R: Rng>(
        &mut self,
        net: &Network,
        mu: f64,
        copy_rule: CopyRule,
        rng: &mut R,
    ) -> Result<(), SimError> {
        let n = self.current.len();
        if n != net.node_count() {
            return Err(SimError::SizeMismatch {
                state: n,
                network: net.node_count(),
            });
        }
        let self_slot = u32::from(copy_rule == CopyRule::IncludeSelf);
        for agent in 0..n {
            let innovate = rng.random::<f64>() < mu;
            self.scratch[agent] = if innovate {
                let id = self.next_choice_id;
                self.next_choice_id += 1;
                id
            } else {
                let adj = net.neighbors(agent);
                if adj.is_empty() {
                    return Err(SimError::IsolatedAgent(agent));
                }
                let slot = rng.random_range(0..adj.len() as u32 + self_slot) as usize;
                match adj.get(slot) {
                    Some(&neighbor) => self.current[neighbor as usize],
                    None => self.current[agent],
                }
            };
        }
        std::mem::swap(&mut self.current, &mut self.scratch);
        self.period += 1;
        Ok(())
    }
}

pub fn init_state(net: &Network) -> SimState {
    SimState::new(net)
}

/// Folds each period's adoptions into a [`RunRecord`].
struct Recorder {
    threshold: u32,
    choices: Vec<ChoiceStats>,
    counts: Vec<u32>,
    present: Vec<u64>,
    tallies: Vec<(u64, u32)>,
    active_counts: Vec<u32>,
    histogram: Vec<u64>,
}

impl Recorder {
    fn new(n_agents: usize, periods: u32, threshold: u32) -> Self {
        Recorder {
            threshold,
            choices: Vec::with_capacity(n_agents),
            counts: Vec::with_capacity(n_agents),
            present: Vec::with_capacity(n_agents),
            tallies: Vec::with_capacity(n_agents),
            active_counts: Vec::with_capacity(periods as usize),
            histogram: vec![0; n_agents + 1],
        }
    }

    /// Returns this period's `(choice, adopters)` pairs in ascending choice order.
    fn observe(&mut self, state: &SimState) -> &[(u64, u32)] {
        let period = state.period;
        let known = self.choices.len() as u64;
        for _ in known..state.next_choice_id {
            self.choices.push(ChoiceStats {
                first_period: period,
                last_period: period,
                total_selections: 0,
            });
        }
        self.counts.resize(self.choices.len(), 0);

        for &c in &state.current {
            let count = &mut self.counts[c as usize];
            if *count == 0 {
                self.present.push(c);
            }
            *count += 1;
        }

        self.present.sort_unstable();
        self.tallies.clear();
        let mut active = 0;
        for &c in &self.present {
            let count = std::mem::take(&mut self.counts[c as usize]);
            let stats = &mut self.choices[c as usize];
            stats.last_period = period;
            stats.total_selections += u64::from(count);
            self.histogram[count as usize] += 1;
            if count >= self.threshold {
                active += 1;
            }
            self.tallies.push((c, count));
        }
        self.present.clear();
        self.active_counts.push(active);
        &self.tallies
    }

    fn finish(self, n_agents: usize, periods: u32) -> RunRecord {
        RunRecord::from_parts(
            n_agents,
            periods,
            self.choices,
            self.threshold,
            self.active_counts,
            self.histogram,
        )
    }
}

/// Runs `params.periods` periods (initialisation plus `periods - 1` steps)
/// with the default activity threshold.
pub fn run(net: &Network, params: &SimParams) -> Result<RunRecord, SimError> {
    run_with(net, params, DEFAULT_ACTIVE_THRESHOLD, |_, _| {})
}

/// Like [`run`], calling `on_period(period, tallies)` after every period with
/// the adopter count of each choice held by at least one agent.
pub fn run_with<F>(
    net: &Network,
    params: &SimParams,
    threshold: u32,
    mut on_period: F,
) -> Result<RunRecord, SimError>
where
    F: FnMut(u32, &[(u64, u32)]),
{
    params.validate()?;
    if threshold == 0 {
        return Err(SimError::InvalidThreshold);
    }
    let n = net.node_count();
    let mut rng = rng_from_seed(params.seed);
    let mut state = init_state(net);
    let mut recorder = Recorder::new(n, params.periods, threshold);
    on_period(0, recorder.observe(&state));
    for _ in 1..params.periods {
        state.step(net, params, &mut rng)?;
        on_period(state.period, recorder.observe(&state));
    }
    Ok(recorder.finish(n, params.periods))
}

/// Writes per-period adopter counts as `period,choice_id,adopter_count` rows.
pub struct TraceWriter<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W) -> Self {
        let error = writeln!(out, "period,choice_id,adopter_count").err();
        TraceWriter { out, error }
    }

    pub fn record(&mut self, period: u32, tallies: &[(u64, u32)]) {
        if self.error.is_some() {
            return;
        }
        for &(choice, count) in tallies {
            if let Err(e) = writeln!(self.out, "{period},{choice},{count}") {
                self.error = Some(e);
                return;
            }
        }
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}
