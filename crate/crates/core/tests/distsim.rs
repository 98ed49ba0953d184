mod common;

use cogradio::distsim::*;
use cogradio::mmse::{algorithm1_power_min, PowerMinOptions};
use cogradio::network::*;
use cogradio::ugd::{algorithm4, effective_network, AllocationOptions};
use common::*;
use rand::seq::SliceRandom;

fn targets(cfg: &NetworkConfig, ch: &ChannelSet, shrink: f64) -> Vec<f64> {
    let m = channel_matching_beams(cfg, ch, MatchingMode::Lower).unwrap();
    (0..cfg.ms).map(|i| shrink * received_sinr(cfg, ch, &m, i)).collect()
}

#[test]
fn power_minimization_matches_centralized_run() {
    let opts = PowerMinOptions::default();
    let mut optimal = 0;
    for seed in 0..60 {
        let ms = 2 + (seed as usize % 3);
        let mp = seed as usize % 3;
        let cfg = NetworkConfig::new(ms, mp, 3, 3);
        let ch = sample_channels(&cfg, seed);
        let shrink = if seed % 4 == 0 { 3.0 } else { 0.9 };
        let gamma = targets(&cfg, &ch, shrink);
        let central = algorithm1_power_min(&cfg, &ch, &gamma, &opts);
        let (dist, log) = run_algorithm1_distributed(&cfg, &ch, &gamma, &opts);
        assert_eq!(central.status, dist.status, "seed {seed}");
        assert!(locality_audit(&log, &local_views(&cfg)), "seed {seed}");
        if !central.is_optimal() {
            continue;
        }
        optimal += 1;
        let scale = central.objective.max(1.0);
        assert!((central.objective - dist.objective).abs() <= 1e-9 * scale, "seed {seed}");
        for (a, b) in central.beams.ws.iter().zip(&dist.beams.ws) {
            // Equal up to a common phase: |⟨a, b⟩| = ‖a‖‖b‖ and equal norms.
            assert!((a.norm() - b.norm()).abs() <= 1e-6 * a.norm().max(1e-12));
            assert!(a.norm() * b.norm() - a.inner(b).norm() <= 1e-6 * a.norm_sqr().max(1e-12));
        }
        assert!(constraints_hold_by_hand(&cfg, &ch, &dist.beams.ws, &gamma));
    }
    assert!(optimal >= 30, "only {optimal} optimal instances");
}

fn constraints_hold_by_hand(cfg: &NetworkConfig, ch: &ChannelSet, ws: &[cogradio::linalg::CVector], gamma: &[f64]) -> bool {
    (0..cfg.ms).all(|i| sinr_by_hand(cfg, ch, ws, i) >= gamma[i] - 1e-6)
        && (0..cfg.mp).all(|j| interference_by_hand(ch, ws, j) <= cfg.beta[j] + 1e-6)
}

#[test]
fn without_primaries_only_uplink_powers_are_exchanged() {
    let cfg = NetworkConfig::new(3, 0, 3, 3);
    let ch = sample_channels(&cfg, 5);
    let gamma = targets(&cfg, &ch, 0.9);
    let (res, log) = run_algorithm1_distributed(&cfg, &ch, &gamma, &PowerMinOptions::default());
    assert!(res.is_optimal());
    assert!(!log.messages.is_empty());
    assert!(log.messages.iter().all(|m| matches!(m.payload, Payload::UplinkPower(_))));
}

#[test]
fn primaries_publish_multipliers() {
    let cfg = NetworkConfig::new(2, 2, 3, 3);
    let ch = sample_channels(&cfg, 6);
    let gamma = targets(&cfg, &ch, 0.9);
    let (_, log) = run_algorithm1_distributed(&cfg, &ch, &gamma, &PowerMinOptions::default());
    let duals: Vec<&Message> = log.messages.iter().filter(|m| matches!(m.payload, Payload::DualUpdate(_))).collect();
    assert!(!duals.is_empty());
    assert!(duals.iter().all(|m| matches!(m.from, Agent::PrimaryRx(_)) && m.to == Recipient::Broadcast));
    assert!(log.messages.windows(2).all(|w| w[0].round <= w[1].round));
}

#[test]
fn runs_are_deterministic() {
    let cfg = NetworkConfig::new(3, 2, 3, 3);
    let ch = sample_channels(&cfg, 7);
    let gamma = targets(&cfg, &ch, 0.9);
    let opts = PowerMinOptions::default();
    let (a, la) = run_algorithm1_distributed(&cfg, &ch, &gamma, &opts);
    let (b, lb) = run_algorithm1_distributed(&cfg, &ch, &gamma, &opts);
    assert_eq!(a, b);
    assert_eq!(la, lb);
    let beams = channel_matching_beams(&cfg, &ch, MatchingMode::Lower).unwrap();
    let run = || run_algorithm4_distributed(&cfg, &ch, &beams, &[0.0; 3], &[1.0; 3], &AllocationOptions::default()).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn allocation_is_bit_equal_to_centralized() {
    for seed in 0..40 {
        let ms = 1 + (seed as usize % 4);
        let cfg = NetworkConfig::new(ms, 2, 3, 3);
        let ch = sample_channels(&cfg, seed);
        let beams = channel_matching_beams(&cfg, &ch, MatchingMode::Lower).unwrap();
        let rho: Vec<f64> = (0..ms).map(|k| 1.0 + k as f64).collect();
        let rmin = vec![0.0; ms];
        let opts = AllocationOptions::default();
        let central = algorithm4(&effective_network(&cfg, &ch, &beams), &rmin, &rho, &opts).unwrap();
        let (dist, log) = run_algorithm4_distributed(&cfg, &ch, &beams, &rmin, &rho, &opts).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&central.r_star), bits(&dist.r_star), "seed {seed}");
        assert_eq!(central.trace, dist.trace);
        assert!(locality_audit(&log, &local_views(&cfg)));
        // Exactly one broadcast recommendation per receiver per round.
        for round in 1..=dist.iterations {
            let n = log
                .messages
                .iter()
                .filter(|m| m.round == round && matches!(m.payload, Payload::Recommendation(_)))
                .count();
            assert_eq!(n, ms);
        }
        assert_eq!(replay_algorithm4(&log, &rmin), dist.r_star);
    }
}

#[test]
fn audit_catches_reads_outside_the_view() {
    let cfg = NetworkConfig::new(3, 1, 2, 2);
    let ch = sample_channels(&cfg, 8);
    let beams = channel_matching_beams(&cfg, &ch, MatchingMode::Lower).unwrap();
    let (_, mut log) = run_algorithm4_distributed(&cfg, &ch, &beams, &[0.0; 3], &[1.0; 3], &AllocationOptions::default()).unwrap();
    let views = local_views(&cfg);
    assert!(locality_audit(&log, &views));

    // Receiver 0 peeks at a cross channel it has no business knowing.
    let peek = Resource::Hss { rx: 1, tx: 2 };
    log.accesses.push(Access {
        round: 1,
        agent: Agent::SecondaryRx(0),
        resource: peek,
    });
    let mut widened = views.clone();
    let v = widened.iter_mut().find(|v| v.agent == Agent::SecondaryRx(0)).unwrap();
    v.readable.push(peek);
    v.readable.sort();
    assert!(locality_audit(&log, &widened));
    assert!(!locality_audit(&log, &views));

    // Removing a resource the run actually read also fails.
    let read = log.accesses[0];
    let mut narrowed = views.clone();
    narrowed
        .iter_mut()
        .find(|v| v.agent == read.agent)
        .unwrap()
        .readable
        .retain(|&r| r != read.resource);
    log.accesses.pop();
    assert!(!locality_audit(&log, &narrowed));
}

#[test]
fn audit_ignores_order_within_rounds() {
    let cfg = NetworkConfig::new(3, 2, 3, 3);
    let ch = sample_channels(&cfg, 9);
    let gamma = targets(&cfg, &ch, 0.9);
    let (_, log) = run_algorithm1_distributed(&cfg, &ch, &gamma, &PowerMinOptions::default());
    let views = local_views(&cfg);
    let mut bad = log.clone();
    bad.accesses.push(Access {
        round: 1,
        agent: Agent::PrimaryRx(0),
        resource: Resource::Hps { rx: 0, tx: 0 },
    });
    let mut r = rng(61);
    for _ in 0..10 {
        for l in [&log, &bad] {
            let mut shuffled = l.clone();
            let mut start = 0;
            while start < shuffled.accesses.len() {
                let round = shuffled.accesses[start].round;
                let end = start + shuffled.accesses[start..].iter().take_while(|a| a.round == round).count();
                shuffled.accesses[start..end].shuffle(&mut r);
                start = end;
            }
            assert_eq!(locality_audit(&shuffled, &views), locality_audit(l, &views));
        }
    }
    assert!(locality_audit(&log, &views));
    assert!(!locality_audit(&bad, &views));
}

#[test]
fn log_export_is_line_delimited_json() {
    let cfg = NetworkConfig::new(3, 1, 2, 2);
    let ch = sample_channels(&cfg, 10);
    let beams = channel_matching_beams(&cfg, &ch, MatchingMode::Lower).unwrap();
    let (_, log) = run_algorithm4_distributed(&cfg, &ch, &beams, &[0.0; 3], &[1.0; 3], &AllocationOptions::default()).unwrap();
    let mut buf = Vec::new();
    log.write_jsonl(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut saw_inf = false;
    for (line, m) in text.lines().zip(&log.messages) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["round"], m.round);
        assert_eq!(v["payload"], m.payload.kind());
        let Payload::Recommendation(inc) = &m.payload else { panic!("unexpected payload") };
        for (x, y) in v["values"].as_array().unwrap().iter().zip(inc) {
            if y.is_finite() {
                assert_eq!(x.as_f64().unwrap(), *y);
            } else {
                assert_eq!(x, "inf");
                saw_inf = true;
            }
        }
    }
    assert_eq!(text.lines().count(), log.messages.len());
    assert!(saw_inf || log.messages.is_empty());
}
