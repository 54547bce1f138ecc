mod common;

use chrono::{NaiveDate, NaiveDateTime};
use ddos_gcn::traffic::{
    generate_traffic, scale_attack_params, write_dataset_to, AttackScenario, CauchyParams, Horizon, NodeMeta,
    NodeProfile, TrafficTable, SLOT_MINUTES, WINDOW_MINUTES,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn day() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

fn uniform_profiles(n: u32, params: CauchyParams, duty: f64) -> Vec<NodeProfile> {
    (0..n)
        .map(|i| NodeProfile {
            node_id: i,
            lat: 32.0 + i as f64 * 1e-3,
            lng: -96.0,
            benign_params: params,
            activity_period: 1440.0,
            activity_duty_cycle: duty,
            activity_phase: (i as f64 * 37.0) % 1440.0,
        })
        .collect()
}

#[test]
fn sample_rows_render_like_the_reference_table() {
    let table = TrafficTable::from_series(
        vec![NodeMeta {
            node_id: 1,
            lat: 10.0,
            lng: 20.0,
        }],
        common::table_one_start(),
        4,
        vec![false, true, true, true],
        vec![0.0, 9.0, 11.0, 10.0],
        vec![false; 4],
    )
    .unwrap();
    let mut out = Vec::new();
    write_dataset_to(&table, &mut out, Some(2)).unwrap();
    let text = String::from_utf8(out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows, common::TABLE_ONE_ROWS);
}

#[test]
fn sampler_matches_analytic_truncated_cdf() {
    for (x0, gamma, m, seed) in [(5.0, 2.0, 100.0, 1), (20.0, 2.0, 30.0, 2), (0.0, 1.0, 10.0, 3)] {
        let p = CauchyParams::new(x0, gamma, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<f64> = (0..100_000).map(|_| p.sample(&mut rng)).collect();
        let d = common::ks_statistic(&draws, |x| common::truncated_cauchy_cdf(x, x0, gamma, m));
        assert!(d < 0.01, "({x0}, {gamma}, {m}): D = {d}");
    }
}

#[test]
fn k_zero_attack_rows_look_benign() {
    let params = CauchyParams::new(20.0, 2.0, 100.0).unwrap();
    let profiles = uniform_profiles(200, params, 0.5);
    let ids: Vec<u32> = profiles.iter().map(|p| p.node_id).collect();
    let horizon = Horizon::from_hours(day(), 24.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let start = day() + chrono::TimeDelta::hours(4);
    let scenario = AttackScenario::with_random_attackers(0.0, start, 12.0, 1.0, &ids, &mut rng).unwrap();
    let table = generate_traffic(&profiles, Some(&scenario), &horizon, &mut rng).unwrap();
    let (mut attack, mut benign) = (Vec::new(), Vec::new());
    for i in 0..table.num_nodes() {
        for t in 0..table.num_slots() {
            if table.label(i, t) {
                attack.push(table.features(i, t)[0]);
            } else if table.active(i, t) {
                benign.push(table.features(i, t)[0]);
            }
        }
    }
    assert!(attack.len() >= 10_000, "{} attack rows", attack.len());
    let d = common::ks_two_sample(&attack, &benign);
    let crit = common::ks_critical(0.01, attack.len(), benign.len());
    assert!(d < crit, "D = {d}, critical {crit}");
}

#[test]
fn larger_k_means_larger_mean_volume() {
    let benign = CauchyParams::new(5.0, 2.0, 100.0).unwrap();
    let mean = |k: f64, seed: u64| {
        let p = scale_attack_params(&benign, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..100_000).map(|_| p.sample(&mut rng)).sum::<f64>() / 1e5
    };
    let ks = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    let means: Vec<f64> = ks.iter().enumerate().map(|(i, &k)| mean(k, 40 + i as u64)).collect();
    for w in means.windows(2) {
        assert!(w[1] > w[0], "{means:?}");
    }
}

#[test]
fn same_seed_same_table() {
    let params = CauchyParams::new(20.0, 2.0, 30.0).unwrap();
    let profiles = uniform_profiles(10, params, 0.5);
    let ids: Vec<u32> = profiles.iter().map(|p| p.node_id).collect();
    let horizon = Horizon::from_hours(day(), 6.0).unwrap();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = AttackScenario::with_random_attackers(0.4, day(), 2.0, 0.5, &ids, &mut rng).unwrap();
        generate_traffic(&profiles, Some(&s), &horizon, &mut rng).unwrap()
    };
    assert_eq!(run(), run());
}

fn params_strategy() -> impl Strategy<Value = CauchyParams> {
    (0.0..50.0f64, 0.1..10.0f64, 1.0..200.0f64).prop_map(|(x0, g, m)| CauchyParams::new(x0, g, m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_identity(p in params_strategy()) {
        let same = scale_attack_params(&p, 0.0).unwrap();
        prop_assert_eq!(same.x0.to_bits(), p.x0.to_bits());
        prop_assert_eq!(same.gamma.to_bits(), p.gamma.to_bits());
        prop_assert_eq!(same.m.to_bits(), p.m.to_bits());
        let doubled = scale_attack_params(&p, 1.0).unwrap();
        prop_assert_eq!(doubled.x0, 2.0 * p.x0);
        prop_assert_eq!(doubled.gamma, 2.0 * p.gamma);
        prop_assert_eq!(doubled.m, 2.0 * p.m);
    }

    #[test]
    fn draws_stay_in_support(p in params_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let x = p.sample(&mut rng);
            prop_assert!((0.0..=p.m).contains(&x));
        }
    }

    #[test]
    fn generated_tables_keep_their_invariants(
        seed in any::<u64>(),
        nodes in 2u32..8,
        hours in 1u32..12,
        k in 0.0..1.0f64,
        ratio in 0.1..1.0f64,
        duty in 0.1..1.0f64,
    ) {
        let profiles = uniform_profiles(nodes, CauchyParams::new(20.0, 2.0, 30.0).unwrap(), duty);
        let ids: Vec<u32> = profiles.iter().map(|p| p.node_id).collect();
        let horizon = Horizon::from_hours(day(), hours as f64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = day() + chrono::TimeDelta::minutes(SLOT_MINUTES * (seed % 6) as i64);
        let s = AttackScenario::with_random_attackers(k, start, hours as f64 / 2.0, ratio, &ids, &mut rng).unwrap();
        let table = generate_traffic(&profiles, Some(&s), &horizon, &mut rng).unwrap();
        for i in 0..table.num_nodes() {
            let series = table.packet_series(i);
            for t in 0..table.num_slots() {
                let f = table.features(i, t);
                if table.label(i, t) {
                    prop_assert!(table.active(i, t));
                }
                for (w, &minutes) in WINDOW_MINUTES.iter().enumerate() {
                    let width = (minutes / SLOT_MINUTES) as usize;
                    let from = (t + 1).saturating_sub(width);
                    let sum: f64 = series[from..=t].iter().sum();
                    prop_assert!((f[w + 1] * width as f64 - sum).abs() < 1e-9);
                }
            }
        }
    }
}
