use choicenet::dynamics::{run, run_with, SimParams};
use choicenet::metrics::{
    active_choices, degree_stats, lifespan, rank_size, top_overlap, top_popular, top_survivors,
    MetricsError, RunRecord,
};
use choicenet::netgen::{
    build_complete, build_lattice, build_metafunnel, build_superstar, Network, Preset,
};
use proptest::prelude::*;

fn nets() -> Vec<Network> {
    vec![
        build_lattice(5).unwrap(),
        build_complete(12).unwrap(),
        build_metafunnel(2, 3, 2).unwrap(),
        build_superstar(4, 5).unwrap(),
    ]
}

/// Full sort of the per-choice table, independent of the top-k selection.
fn sorted_by<K: Ord + Copy>(rec: &RunRecord, key: impl Fn(u64) -> K) -> Vec<(u64, K)> {
    let mut all: Vec<(u64, K)> = (0..rec.distinct_choices_ever())
        .map(|id| (id, key(id)))
        .collect();
    all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    all
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rankings_agree_with_brute_force(
        net_index in 0usize..4,
        seed in any::<u64>(),
        mu in prop_oneof![Just(0.0), 0.0f64..0.3],
        k in 1usize..60,
    ) {
        let net = &nets()[net_index];
        let rec = run(net, &SimParams::new(mu, 120, seed).unwrap()).unwrap();

        let sizes = rank_size(&rec);
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(sizes.iter().sum::<u64>(), net.node_count() as u64 * 120);

        let popular = top_popular(&rec, k);
        prop_assert_eq!(popular.len(), k.min(rec.distinct_choices_ever() as usize));
        let head: Vec<u64> = popular.iter().map(|&(_, v)| v).collect();
        prop_assert_eq!(&head[..], &sizes[..head.len()]);
        let oracle = sorted_by(&rec, |id| rec.choice(id).unwrap().total_selections);
        prop_assert_eq!(&popular[..], &oracle[..popular.len()]);

        let survivors = top_survivors(&rec, k);
        let oracle = sorted_by(&rec, |id| lifespan(&rec, id).unwrap());
        prop_assert_eq!(&survivors[..], &oracle[..survivors.len()]);
        prop_assert!(survivors.iter().all(|&(_, span)| span <= 120));

        let overlap = top_overlap(&rec, k);
        prop_assert!(overlap <= k);
        prop_assert!(overlap as u64 <= rec.distinct_choices_ever());

        let mut previous = f64::INFINITY;
        for threshold in 1..=net.node_count() as u32 + 1 {
            let a = active_choices(&rec, threshold);
            prop_assert!(a <= previous);
            previous = a;
        }
        prop_assert_eq!(active_choices(&rec, net.node_count() as u32 + 1), 0.0);
    }
}

#[test]
fn overlap_is_everything_when_k_covers_all_choices() {
    for net in nets() {
        let rec = run(&net, &SimParams::new(0.05, 50, 3).unwrap()).unwrap();
        let distinct = rec.distinct_choices_ever() as usize;
        assert_eq!(top_overlap(&rec, distinct), distinct);
        assert_eq!(top_overlap(&rec, distinct + 10), distinct);
        assert_eq!(top_survivors(&rec, distinct + 10).len(), distinct);
    }
}

#[test]
fn active_threshold_matches_per_period_counts() {
    let net = Preset::Lattice22.build();
    for threshold in [1, 5, 20] {
        let rec = run_with(
            &net,
            &SimParams::new(0.01, 300, 8).unwrap(),
            threshold,
            |_, _| {},
        )
        .unwrap();
        let mean = rec
            .active_counts()
            .iter()
            .map(|&c| f64::from(c))
            .sum::<f64>()
            / 300.0;
        assert!((active_choices(&rec, threshold) - mean).abs() < 1e-12);
    }
}

#[test]
fn threshold_one_counts_present_choices() {
    let net = build_complete(8).unwrap();
    let mut present = 0usize;
    let rec = run_with(
        &net,
        &SimParams::new(0.1, 40, 1).unwrap(),
        5,
        |_, tallies| {
            present += tallies.len();
        },
    )
    .unwrap();
    assert!((active_choices(&rec, 1) - present as f64 / 40.0).abs() < 1e-12);
}

#[test]
fn full_innovation_leaves_unit_popularity_and_lifespan() {
    let net = build_superstar(3, 3).unwrap();
    let rec = run(&net, &SimParams::new(1.0, 20, 4).unwrap()).unwrap();
    assert!(rank_size(&rec).iter().all(|&c| c == 1));
    let last = rec.distinct_choices_ever() - 1;
    assert_eq!(lifespan(&rec, last), Ok(1));
    assert_eq!(
        lifespan(&rec, last + 1),
        Err(MetricsError::UnknownChoice(last + 1))
    );
}

#[test]
fn regular_graphs_have_zero_variance() {
    for net in [
        build_complete(2).unwrap(),
        build_complete(9).unwrap(),
        build_lattice(2).unwrap(),
        build_superstar(1, 1).unwrap(),
    ] {
        let stats = degree_stats(&net);
        assert_eq!(stats.variance, 0.0, "{}", net.topology());
        assert_eq!(stats.skewness, 0.0);
    }
}

#[test]
fn canonical_degree_orderings() {
    let stats: Vec<_> = Preset::ALL
        .iter()
        .map(|p| (*p, degree_stats(&p.build())))
        .collect();
    let max_skew = stats
        .iter()
        .max_by(|a, b| a.1.skewness.total_cmp(&b.1.skewness))
        .unwrap();
    let max_mean = stats
        .iter()
        .max_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
        .unwrap();
    assert_eq!(max_skew.0, Preset::Superstar2420);
    assert_eq!(max_mean.0, Preset::Complete475);
    // lattice varies more than the regular complete graph
    assert!(stats[0].1.variance > stats[1].1.variance);
}
