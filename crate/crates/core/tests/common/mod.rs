//! Oracles shared by the property tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use choicenet::dynamics::{rng_from_seed, run_with, CopyRule, SimParams, SimState};
use choicenet::metrics;
use choicenet::netgen::{
    build_complete, build_lattice, build_metafunnel, build_superstar, Network,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const RULES: [CopyRule; 2] = [CopyRule::IncludeSelf, CopyRule::NeighborsOnly];

/// Graphs with at most five nodes.
pub fn small_graphs() -> Vec<Network> {
    vec![
        build_complete(2).unwrap(),
        build_complete(3).unwrap(),
        build_complete(5).unwrap(),
        build_lattice(2).unwrap(),
        build_metafunnel(1, 3, 1).unwrap(), // path 0-1-2-3
        build_metafunnel(1, 4, 1).unwrap(), // path of 5
        build_metafunnel(2, 1, 2).unwrap(), // star with 4 leaves
        build_metafunnel(2, 2, 1).unwrap(),
        build_superstar(2, 2).unwrap(),
        build_superstar(4, 1).unwrap(),
    ]
}

pub fn test_states(n: usize) -> Vec<Vec<u64>> {
    vec![
        (0..n as u64).collect(),
        (0..n as u64).map(|i| i % 2).collect(),
        (0..n as u64).map(|i| u64::from(i == 0)).collect(),
        (0..n as u64).map(|i| i / 2).collect(),
    ]
}

/// Choice weights seen by `agent`: one per pool member holding it.
pub fn proportional_weights(
    net: &Network,
    state: &[u64],
    agent: usize,
    rule: CopyRule,
) -> BTreeMap<u64, u64> {
    let mut weights = BTreeMap::new();
    for &j in net.neighbors(agent) {
        *weights.entry(state[j as usize]).or_insert(0) += 1;
    }
    if rule == CopyRule::IncludeSelf {
        *weights.entry(state[agent]).or_insert(0) += 1;
    }
    weights
}

fn pool(net: &Network, agent: usize, rule: CopyRule) -> Vec<usize> {
    let mut members: Vec<usize> = net.neighbors(agent).iter().map(|&j| j as usize).collect();
    if rule == CopyRule::IncludeSelf {
        members.push(agent);
    }
    members
}

/// Exact joint next-state distribution by enumerating every slot tuple:
/// returns (outcome -> number of tuples, total tuples).
pub fn enumerate_joint(
    net: &Network,
    state: &[u64],
    rule: CopyRule,
) -> (HashMap<Vec<u64>, u64>, u64) {
    let pools: Vec<Vec<usize>> = (0..net.node_count()).map(|a| pool(net, a, rule)).collect();
    let total: u64 = pools.iter().map(|p| p.len() as u64).product();
    let mut outcomes = HashMap::new();
    let mut slots = vec![0usize; pools.len()];
    loop {
        let next: Vec<u64> = slots
            .iter()
            .zip(&pools)
            .map(|(&s, p)| state[p[s]])
            .collect();
        *outcomes.entry(next).or_insert(0) += 1;
        let mut i = 0;
        loop {
            if i == slots.len() {
                return (outcomes, total);
            }
            slots[i] += 1;
            if slots[i] < pools[i].len() {
                break;
            }
            slots[i] = 0;
            i += 1;
        }
    }
}

/// Checks that the enumerated joint law factorises into per-agent
/// proportional weights.
pub fn check_enumeration(net: &Network, state: &[u64], rule: CopyRule) -> Result<(), String> {
    let (outcomes, total) = enumerate_joint(net, state, rule);
    let weights: Vec<BTreeMap<u64, u64>> = (0..net.node_count())
        .map(|a| proportional_weights(net, state, a, rule))
        .collect();
    let pool_sizes: u64 = weights.iter().map(|w| w.values().sum::<u64>()).product();
    if pool_sizes != total {
        return Err(format!(
            "{}: pool sizes {pool_sizes} != {total}",
            net.topology()
        ));
    }
    let mut mass = 0;
    for (next, count) in &outcomes {
        let product: u64 = next
            .iter()
            .enumerate()
            .map(|(a, c)| weights[a].get(c).copied().unwrap_or(0))
            .product();
        if *count != product {
            return Err(format!("{} {state:?} {rule:?}: {next:?}", net.topology()));
        }
        mass += count;
    }
    if mass == total {
        Ok(())
    } else {
        Err(format!("{}: mass {mass} != {total}", net.topology()))
    }
}

pub fn chi_square_critical(dof: usize) -> f64 {
    ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.999)
}

/// Draws `draws` synchronous steps from `state` and compares the joint
/// outcome frequencies with the enumerated distribution at level 0.001.
pub fn chi_square_joint(
    net: &Network,
    state: &[u64],
    rule: CopyRule,
    draws: usize,
    seed: u64,
) -> Result<(), String> {
    let (outcomes, total) = enumerate_joint(net, state, rule);
    let next_id = state.iter().max().unwrap() + 1;
    let mut rng = rng_from_seed(seed);
    let mut observed: HashMap<Vec<u64>, u64> = HashMap::new();
    for _ in 0..draws {
        let mut s = SimState::from_choices(state.to_vec(), next_id, 0);
        s.advance(net, 0.0, rule, &mut rng).unwrap();
        *observed.entry(s.current().to_vec()).or_insert(0) += 1;
    }
    if let Some(key) = observed.keys().find(|k| !outcomes.contains_key(*k)) {
        return Err(format!("impossible outcome {key:?}"));
    }
    let stat: f64 = outcomes
        .iter()
        .map(|(key, &count)| {
            let expected = draws as f64 * count as f64 / total as f64;
            let seen = observed.get(key).copied().unwrap_or(0) as f64;
            (seen - expected).powi(2) / expected
        })
        .sum();
    let dof = outcomes.len() - 1;
    if dof == 0 {
        return Ok(());
    }
    let critical = chi_square_critical(dof);
    if stat < critical {
        Ok(())
    } else {
        Err(format!(
            "{} {rule:?}: chi2 = {stat:.2} >= {critical:.2} (dof {dof})",
            net.topology()
        ))
    }
}

/// The chi-square cases used by both suites.
pub fn chi_square_cases() -> Vec<(Network, Vec<u64>)> {
    vec![
        (build_complete(2).unwrap(), vec![0, 1]),
        (build_metafunnel(1, 3, 1).unwrap(), vec![0, 1, 2, 3]),
        (build_complete(3).unwrap(), vec![0, 1, 1]),
        (build_superstar(2, 2).unwrap(), vec![0, 0, 1, 2, 1]),
    ]
}

#[derive(Default)]
struct Presence {
    periods: Vec<u32>,
    total: u64,
}

/// Runs with a full trace and checks conservation, absorption of extinction
/// and that the record agrees with the trace.
pub fn replay_trace(net: &Network, params: &SimParams) -> Result<(), String> {
    let n = net.node_count() as u64;
    let mut presence: BTreeMap<u64, Presence> = BTreeMap::new();
    let mut period_sums = Vec::new();
    let rec = run_with(net, params, 1, |t, tallies| {
        period_sums.push(tallies.iter().map(|&(_, c)| u64::from(c)).sum::<u64>());
        for &(choice, count) in tallies {
            let p = presence.entry(choice).or_default();
            p.periods.push(t);
            p.total += u64::from(count);
        }
    })
    .map_err(|e| e.to_string())?;

    let label = net.topology();
    if period_sums.iter().any(|&s| s != n) {
        return Err(format!("{label}: adopters do not sum to N every period"));
    }
    if rec.total_selections() != n * u64::from(params.periods) {
        return Err(format!("{label}: total popularity != N*T"));
    }
    if presence.len() as u64 != rec.distinct_choices_ever() {
        return Err(format!("{label}: distinct count disagrees with trace"));
    }
    for (&choice, p) in &presence {
        let first = p.periods[0];
        let last = *p.periods.last().unwrap();
        if p.periods.len() as u32 != last - first + 1 {
            return Err(format!(
                "{label}: choice {choice} came back after extinction"
            ));
        }
        let stats = rec.choice(choice).unwrap();
        if (
            stats.first_period,
            stats.last_period,
            stats.total_selections,
        ) != (first, last, p.total)
            || metrics::lifespan(&rec, choice).unwrap() != last - first + 1
        {
            return Err(format!("{label}: record disagrees with trace for {choice}"));
        }
    }
    Ok(())
}

/// Twenty traced runs: five small networks at four innovation rates.
pub fn extinction_scan() -> Result<usize, String> {
    let nets = [
        build_lattice(4).unwrap(),
        build_complete(6).unwrap(),
        build_metafunnel(2, 2, 2).unwrap(),
        build_superstar(3, 3).unwrap(),
        build_metafunnel(1, 3, 1).unwrap(),
    ];
    let mut runs = 0;
    for (i, net) in nets.iter().enumerate() {
        for (j, mu) in [0.0, 0.02, 0.1, 0.3].into_iter().enumerate() {
            replay_trace(net, &SimParams::new(mu, 200, (i * 10 + j) as u64).unwrap())?;
            runs += 1;
        }
    }
    Ok(runs)
}

/// Runs to fixation at mu = 0 and checks the winner spans all periods.
pub fn mu_zero_winner_check() -> Result<(), String> {
    for (net, periods) in [
        (build_complete(10).unwrap(), 600),
        (build_lattice(3).unwrap(), 1500),
        (build_superstar(3, 3).unwrap(), 600),
        (build_metafunnel(2, 2, 2).unwrap(), 1500),
    ] {
        for seed in 0..5 {
            let params = SimParams::new(0.0, periods, seed).unwrap();
            let mut last_period = Vec::new();
            let rec = run_with(&net, &params, 1, |t, tallies| {
                if t == periods - 1 {
                    last_period = tallies.to_vec();
                }
            })
            .map_err(|e| e.to_string())?;
            if last_period.len() != 1 {
                return Err(format!("{} seed {seed} did not fix", net.topology()));
            }
            let winner = last_period[0].0;
            if metrics::lifespan(&rec, winner).unwrap() != periods
                || metrics::top_popular(&rec, 1)[0].0 != winner
            {
                return Err(format!(
                    "{} seed {seed}: winner lifespan != T",
                    net.topology()
                ));
            }
        }
    }
    Ok(())
}
