mod common;

use netrel::hazard::{MagnitudeSampler, TruncExpMagnitude};
use netrel::montecarlo::log_checkpoints;
use netrel::network::{Roadway, TransportNetwork};
use netrel::{estimate_connectivity, estimate_probabilistic_event, DfsCheck, McOptions, Scenario};
use proptest::prelude::*;

fn wheatstone() -> TransportNetwork {
    let link = |id, a, b| Roadway {
        id,
        endpoints: [a, b],
        bridge_ids: vec![],
    };
    let links = vec![
        link(0, 0, 1),
        link(1, 0, 2),
        link(2, 1, 2),
        link(3, 1, 3),
        link(4, 2, 3),
    ];
    TransportNetwork::new(vec![0, 1, 2, 3], links, 0, 3).unwrap()
}

const PROBS: [f64; 5] = [0.9, 0.6, 0.5, 0.7, 0.8];

#[test]
fn identical_across_worker_counts() {
    let net = wheatstone();
    let runs: Vec<_> = [1, 2, 8]
        .into_iter()
        .map(|w| {
            estimate_connectivity(
                &net,
                &PROBS,
                150_000,
                &DfsCheck,
                42,
                McOptions::with_workers(w),
            )
            .unwrap()
        })
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.successes, runs[0].successes);
        assert_eq!(r.trace, runs[0].trace);
        assert_eq!(r.p_hat.to_bits(), runs[0].p_hat.to_bits());
    }

    let s = Scenario::shipped();
    let te = MagnitudeSampler::TruncExp(TruncExpMagnitude::new(0.76, 6.8, 7.5).unwrap());
    let nested: Vec<_> = [1, 2, 8]
        .into_iter()
        .map(|w| {
            estimate_probabilistic_event(
                &s,
                te,
                20,
                500,
                true,
                &DfsCheck,
                9,
                McOptions::with_workers(w),
            )
            .unwrap()
        })
        .collect();
    for r in &nested[1..] {
        assert_eq!(r.successes, nested[0].successes);
        assert_eq!(r.trace, nested[0].trace);
    }
}

#[test]
fn unbiased_over_seeds() {
    let net = wheatstone();
    let exact = common::reliability_by_paths(&net, &PROBS);
    let n = 20_000u64;
    let seeds = 50;
    let mean = (0..seeds)
        .map(|s| {
            estimate_connectivity(&net, &PROBS, n, &DfsCheck, s, McOptions::default())
                .unwrap()
                .p_hat
        })
        .sum::<f64>()
        / seeds as f64;
    let se = (exact * (1.0 - exact) / (n * seeds) as f64).sqrt();
    assert!(
        (mean - exact).abs() < 4.0 * se,
        "mean {mean}, exact {exact}, se {se}"
    );
}

#[test]
fn std_err_halves_with_four_times_the_samples() {
    let net = wheatstone();
    let a =
        estimate_connectivity(&net, &PROBS, 40_000, &DfsCheck, 1, McOptions::default()).unwrap();
    let b =
        estimate_connectivity(&net, &PROBS, 160_000, &DfsCheck, 1, McOptions::default()).unwrap();
    let ratio = b.std_err / a.std_err;
    assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");
}

#[test]
fn lookup_table_checker_reproduces_dfs() {
    let net = wheatstone();
    let paths = common::simple_paths(&net);
    let table: Vec<bool> = (0u32..32)
        .map(|mask| {
            let states: Vec<u8> = (0..5).map(|k| (mask >> k & 1) as u8).collect();
            common::connected_by_paths(&paths, &states)
        })
        .collect();
    let lookup = move |_: &TransportNetwork, row: &[u8]| {
        table[row
            .iter()
            .enumerate()
            .fold(0usize, |m, (k, &s)| m | (s as usize) << k)]
    };
    let a = estimate_connectivity(
        &net,
        &PROBS,
        70_000,
        &DfsCheck,
        5,
        McOptions::with_workers(2),
    )
    .unwrap();
    let b = estimate_connectivity(&net, &PROBS, 70_000, &lookup, 5, McOptions::with_workers(3))
        .unwrap();
    assert_eq!(a.successes, b.successes);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn fixed_magnitude_collapses_to_single_level() {
    let s = Scenario::shipped();
    let probs = s.roadway_probs(7.4, None).unwrap();
    let flat = estimate_connectivity(
        s.network(),
        &probs,
        60_000,
        &DfsCheck,
        3,
        McOptions::default(),
    )
    .unwrap();
    for (outer, inner) in [(1, 60_000), (6, 10_000), (60, 1000)] {
        let nested = estimate_probabilistic_event(
            &s,
            MagnitudeSampler::Fixed(7.4),
            outer,
            inner,
            false,
            &DfsCheck,
            3,
            McOptions::default(),
        )
        .unwrap();
        assert_eq!(nested.successes, flat.successes, "{outer} x {inner}");
    }
}

#[test]
fn zero_residual_sigma_matches_no_residuals() {
    let s = Scenario::shipped();
    let mut g = s.gmpe().clone();
    g.sigma_ln_pga = 0.0;
    let quiet = s.with_gmpe(g).unwrap();
    let te = MagnitudeSampler::TruncExp(TruncExpMagnitude::new(0.76, 6.8, 7.5).unwrap());
    let run = |sc: &Scenario, res| {
        estimate_probabilistic_event(sc, te, 30, 1000, res, &DfsCheck, 8, McOptions::default())
            .unwrap()
    };
    assert_eq!(run(&quiet, true).successes, run(&s, false).successes);
    assert_ne!(run(&s, true).successes, run(&s, false).successes);
}

#[test]
fn trace_ends_at_the_estimate() {
    let net = wheatstone();
    let r =
        estimate_connectivity(&net, &PROBS, 12_345, &DfsCheck, 0, McOptions::default()).unwrap();
    let cps: Vec<u64> = r.trace.iter().map(|t| t.sample_index).collect();
    assert_eq!(cps, log_checkpoints(12_345));
    assert_eq!(&cps[..5], &[1, 2, 5, 10, 20]);
    assert_eq!(r.trace.last().unwrap().running_mean, r.p_hat);
    assert_eq!(r.p_hat, r.successes as f64 / 12_345.0);
}

#[test]
fn degenerate_probabilities() {
    let net = wheatstone();
    let one =
        estimate_connectivity(&net, &[1.0; 5], 1000, &DfsCheck, 0, McOptions::default()).unwrap();
    assert_eq!(one.p_hat, 1.0);
    assert_eq!(one.std_err, 0.0);
    let zero =
        estimate_connectivity(&net, &[0.0; 5], 1000, &DfsCheck, 0, McOptions::default()).unwrap();
    assert_eq!(zero.p_hat, 0.0);
}

#[test]
fn bad_arguments() {
    let net = wheatstone();
    assert!(estimate_connectivity(&net, &PROBS, 0, &DfsCheck, 0, McOptions::default()).is_err());
    assert!(
        estimate_connectivity(&net, &PROBS, 10, &DfsCheck, 0, McOptions::with_workers(0)).is_err()
    );
    assert!(
        estimate_connectivity(&net, &PROBS[..4], 10, &DfsCheck, 0, McOptions::default()).is_err()
    );
    assert!(estimate_connectivity(
        &net,
        &[0.5, 0.5, 0.5, 0.5, 1.5],
        10,
        &DfsCheck,
        0,
        McOptions::default()
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn estimate_is_a_probability(seed in any::<u64>(), p in prop::collection::vec(0.0f64..=1.0, 5)) {
        let r = estimate_connectivity(&wheatstone(), &p, 2000, &DfsCheck, seed, McOptions::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.p_hat));
        prop_assert!(r.std_err >= 0.0);
    }
}
