use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use socicache::config::{CacheSetup, OverlayConfig, ScenarioConfig, WorkloadConfig, TICKS_PER_HOUR};
use socicache::model::{SimTime, StorageKey, UserId, TICKS_PER_DAY};
use socicache::node::{Network, Peer};
use socicache::sim::Simulation;
use socicache::social::{StrategyConfig, StrategyKind};
use socicache::workload::{scaled_mean_gap, user_names, TraceAction, TraceGenerator};
use socicache::PeerError;

fn scenario(kind: StrategyKind, latency: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        peer_count: 16,
        friends_per_user: 6,
        sim_duration_ticks: TICKS_PER_HOUR,
        cache_setup: CacheSetup::Both,
        overlay: OverlayConfig {
            replication_factor: 4,
            hop_latency_ticks: latency,
        },
        ..ScenarioConfig::default()
    };
    cfg.strategy.kind = kind;
    cfg.strategy.n = 4;
    cfg
}

fn run(cfg: &ScenarioConfig) -> Simulation {
    let gen = TraceGenerator::new(cfg).unwrap();
    let mut sim = Simulation::new(cfg, &gen.user_ids());
    sim.run(gen).unwrap();
    sim
}

#[test]
fn subscriptions_are_symmetric_after_quiescence() {
    for kind in StrategyKind::ALL {
        for latency in [0, 700] {
            let sim = run(&scenario(kind, latency));
            let mut links = 0;
            for p in sim.peers() {
                let s = p.social().unwrap();
                for c in s.channels().iter() {
                    let other = sim.peer(c).unwrap().social().unwrap();
                    assert!(other.receivers().contains(p.id()), "{kind} {latency}: {c} misses {}", p.id());
                    links += 1;
                }
                for r in s.receivers().iter() {
                    let other = sim.peer(r).unwrap().social().unwrap();
                    assert!(other.channels().contains(p.id()), "{kind} {latency}: stale receiver {r}");
                }
            }
            assert!(links > 0);
            assert!(sim.consistency_violations().is_empty(), "{kind} {latency}");
        }
    }
}

#[test]
fn caps_hold_with_small_limits() {
    let mut cfg = scenario(StrategyKind::SocialScore, 0);
    cfg.strategy.muc_capacity = 4;
    let sim = run(&cfg);
    for p in sim.peers() {
        let (channels, muc) = p.max_observed();
        assert!(channels <= 4 && muc <= 4, "{channels} {muc}");
    }
    for row in &sim.ledger().rows {
        assert!(row.max_channels <= 4 && row.max_muc <= 4);
    }
}

#[test]
fn six_hours_sample_360_rows() {
    let cfg = ScenarioConfig {
        peer_count: 4,
        friends_per_user: 2,
        ..ScenarioConfig::default()
    };
    let sim = run(&cfg);
    let csv = sim.ledger().to_csv();
    assert_eq!(csv.lines().count(), 361);
    // row-count oracle: one row per 60 s step in (0, 6 h]
    let expected: Vec<u64> = (1..=6 * 60).map(|m| m * 60_000).collect();
    let got: Vec<u64> = sim.ledger().rows.iter().map(|r| r.t.ticks()).collect();
    assert_eq!(got, expected);
}

#[test]
fn each_request_counts_in_exactly_one_tier() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let users = user_names(5);
    let mut net = Network::new(4, 0);
    for u in &users {
        net.dispatcher.set_online(u, true);
    }
    let mut peers: Vec<Peer> = users
        .iter()
        .map(|u| {
            Peer::new(
                u.clone(),
                Some((3, 500)),
                Some(StrategyConfig {
                    n: 2,
                    ..StrategyConfig::default()
                }),
            )
        })
        .collect();
    let key = |o: usize, k: usize| StorageKey::new(users[o].clone(), &format!("wall/{k}")).unwrap();
    for step in 0..5_000u64 {
        let now = SimTime(step * 37);
        let p = rng.random_range(0..peers.len());
        if rng.random_bool(0.2) {
            let k = key(p, rng.random_range(0..4));
            peers[p].add_content(k, vec![0; 16], now, &mut net).unwrap();
        } else {
            let k = key(rng.random_range(0..peers.len()), rng.random_range(0..4));
            let before = *peers[p].counters();
            let result = peers[p].handle_request(&k, now, &mut net);
            let after = *peers[p].counters();
            let moved = [
                after.social_hits - before.social_hits,
                after.current_hits - before.current_hits,
                after.overlay_replies - before.overlay_replies,
                after.unanswered - before.unanswered,
            ];
            assert_eq!(moved.iter().sum::<u64>(), 1);
            assert_eq!(after.total_requests, before.total_requests + 1);
            assert_eq!(result.is_err(), moved[3] == 1);
            if let Err(e) = result {
                assert!(matches!(e, PeerError::NotFound(_)));
            }
        }
        while let Some(env) = net.dispatcher.next_ready() {
            let to = users.iter().position(|u| *u == env.to).unwrap();
            peers[to].receive(env, now, &mut net).unwrap();
        }
    }
    for p in &peers {
        assert!(p.stale_entries(&net.dht).is_empty());
    }
}

#[test]
fn post_gaps_converge_to_scaled_mean() {
    let cfg = ScenarioConfig {
        peer_count: 16,
        friends_per_user: 2,
        sim_duration_ticks: 10 * TICKS_PER_DAY,
        new_experiment_time_days: Some(0.25),
        workload: WorkloadConfig {
            lookup_gap_ticks: TICKS_PER_DAY,
            ..WorkloadConfig::default()
        },
        ..ScenarioConfig::default()
    };
    let mean = scaled_mean_gap(&cfg.dataset, cfg.dataset.avg_ts_interaction, 0.25).unwrap();
    let mut last: HashMap<UserId, u64> = HashMap::new();
    let mut gaps = Vec::new();
    for e in TraceGenerator::new(&cfg).unwrap() {
        if let TraceAction::Post { .. } = e.action {
            if let Some(prev) = last.insert(e.actor.clone(), e.at.ticks()) {
                gaps.push((e.at.ticks() - prev) as f64);
            }
        }
    }
    assert!(gaps.len() >= 10_000, "{}", gaps.len());
    let realized = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!((realized - mean).abs() / mean < 0.05, "{realized} vs {mean}");
}

#[test]
fn friendships_are_symmetric_and_lookups_stay_among_friends() {
    let cfg = ScenarioConfig::default();
    let gen = TraceGenerator::new(&cfg).unwrap();
    let mut pairs = BTreeSet::new();
    for f in gen.friendships() {
        pairs.insert((f.requester.min(f.target), f.requester.max(f.target)));
    }
    assert_eq!(pairs.len(), cfg.peer_count * cfg.friends_per_user / 2);
    let users = gen.user_ids();
    for (i, u) in users.iter().enumerate() {
        let end = SimTime(cfg.sim_duration_ticks);
        for f in gen.friends_at(i, end) {
            let j = users.iter().position(|x| *x == f).unwrap();
            assert!(gen.friends_at(j, end).contains(u));
        }
        assert_eq!(gen.friends_at(i, end).len(), cfg.friends_per_user);
    }
}
