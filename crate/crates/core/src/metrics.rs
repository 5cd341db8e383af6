//! Per-run statistics: popularity ranking, lifespans, top-set overlap and
//! active-choice counts, plus degree moments of a network.
//!
//! Every top-k ranking breaks ties by ascending choice id.

use std::cmp::Reverse;

use thiserror::Error;

use crate::netgen::Network;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("choice {0} never existed in this run")]
    UnknownChoice(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChoiceStats {
    pub first_period: u32,
    pub last_period: u32,
    pub total_selections: u64,
}

impl ChoiceStats {
    /// Periods from first to last adoption, inclusive.
    pub fn lifespan(&self) -> u32 {
        self.last_period - self.first_period + 1
    }
}

/// Everything a single run leaves behind.
///
/// Choice ids are dense, so the per-choice table is indexed by id. The adopter
/// histogram counts `(period, choice)` pairs by adopter count, which lets
/// [`active_choices`] answer for any threshold without keeping full traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    n_agents: usize,
    periods: u32,
    choices: Vec<ChoiceStats>,
    active_threshold: u32,
    active_counts: Vec<u32>,
    adopter_histogram: Vec<u64>,
}

impl RunRecord {
    pub(crate) fn from_parts(
        n_agents: usize,
        periods: u32,
        choices: Vec<ChoiceStats>,
        active_threshold: u32,
        active_counts: Vec<u32>,
        adopter_histogram: Vec<u64>,
    ) -> Self {
        debug_assert_eq!(active_counts.len(), periods as usize);
        debug_assert_eq!(adopter_histogram.len(), n_agents + 1);
        RunRecord {
            n_agents,
            periods,
            choices,
            active_threshold,
            active_counts,
            adopter_histogram,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn periods(&self) -> u32 {
        self.periods
    }

    /// Per-choice table indexed by choice id.
    pub fn choices(&self) -> &[ChoiceStats] {
        &self.choices
    }

    pub fn choice(&self, id: u64) -> Result<&ChoiceStats, MetricsError> {
        usize::try_from(id)
            .ok()
            .and_then(|i| self.choices.get(i))
            .ok_or(MetricsError::UnknownChoice(id))
    }

    pub fn distinct_choices_ever(&self) -> u64 {
        self.choices.len() as u64
    }

    pub fn total_selections(&self) -> u64 {
        self.choices.iter().map(|c| c.total_selections).sum()
    }

    pub fn active_threshold(&self) -> u32 {
        self.active_threshold
    }

    /// Number of choices with at least `active_threshold` adopters, per period.
    pub fn active_counts(&self) -> &[u32] {
        &self.active_counts
    }

    /// Entry `m` is the number of `(period, choice)` pairs with exactly `m`
    /// adopters.
    pub fn adopter_histogram(&self) -> &[u64] {
        &self.adopter_histogram
    }
}

/// Sorts `(key, id)` descending by key, ascending by id, keeping `k` entries.
fn top_k_by_key<K: Ord + Copy>(mut items: Vec<(K, u64)>, k: usize) -> Vec<(K, u64)> {
    let order = |a: &(K, u64), b: &(K, u64)| (Reverse(a.0), a.1).cmp(&(Reverse(b.0), b.1));
    if k == 0 {
        return Vec::new();
    }
    if k < items.len() {
        items.select_nth_unstable_by(k - 1, order);
        items.truncate(k);
    }
    items.sort_unstable_by(order);
    items
}

/// Total selections per choice, descending.
pub fn rank_size(rec: &RunRecord) -> Vec<u64> {
    let mut sizes: Vec<u64> = rec.choices.iter().map(|c| c.total_selections).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

pub fn lifespan(rec: &RunRecord, choice_id: u64) -> Result<u32, MetricsError> {
    rec.choice(choice_id).map(ChoiceStats::lifespan)
}

/// The `k` longest-lived choices as `(choice_id, lifespan)`.
pub fn top_survivors(rec: &RunRecord, k: usize) -> Vec<(u64, u32)> {
    let items = rec
        .choices
        .iter()
        .enumerate()
        .map(|(id, c)| (c.lifespan(), id as u64))
        .collect();
    top_k_by_key(items, k)
        .into_iter()
        .map(|(span, id)| (id, span))
        .collect()
}

/// The `k` most selected choices as `(choice_id, total_selections)`.
pub fn top_popular(rec: &RunRecord, k: usize) -> Vec<(u64, u64)> {
    let items = rec
        .choices
        .iter()
        .enumerate()
        .map(|(id, c)| (c.total_selections, id as u64))
        .collect();
    top_k_by_key(items, k)
        .into_iter()
        .map(|(total, id)| (id, total))
        .collect()
}

/// Size of the intersection of the top-`k` survivor and top-`k` popular sets.
pub fn top_overlap(rec: &RunRecord, k: usize) -> usize {
    let mut survivors: Vec<u64> = top_survivors(rec, k)
        .into_iter()
        .map(|(id, _)| id)
        .collect();
    survivors.sort_unstable();
    top_popular(rec, k)
        .iter()
        .filter(|(id, _)| survivors.binary_search(id).is_ok())
        .count()
}

/// Mean over periods of the number of choices with at least `threshold`
/// adopters.
pub fn active_choices(rec: &RunRecord, threshold: u32) -> f64 {
    let start = (threshold.max(1) as usize).min(rec.adopter_histogram.len());
    let pairs: u64 = rec.adopter_histogram[start..].iter().sum();
    pairs as f64 / f64::from(rec.periods)
}

/// Expected number of distinct choices after `periods` periods: each of the
/// `periods - 1` steps innovates `n * mu` choices on average.
pub fn expected_choice_count(n: usize, mu: f64, periods: u32) -> f64 {
    n as f64 * (1.0 + mu * (f64::from(periods) - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats {
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    /// Standardised third moment; 0 for a zero-variance sequence.
    pub skewness: f64,
}

pub fn degree_stats(net: &Network) -> DegreeStats {
    moments(&net.degrees())
}

fn moments(values: &[usize]) -> DegreeStats {
    let n = values.len() as f64;
    let mean = values.iter().map(|&d| d as f64).sum::<f64>() / n;
    let (m2, m3) = values.iter().fold((0.0, 0.0), |(m2, m3), &d| {
        let dev = d as f64 - mean;
        (m2 + dev * dev, m3 + dev * dev * dev)
    });
    let variance = m2 / n;
    let skewness = if variance == 0.0 {
        0.0
    } else {
        (m3 / n) / variance.powf(1.5)
    };
    DegreeStats {
        mean,
        variance,
        skewness,
    }
}
