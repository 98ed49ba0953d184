//! Acceptance suite. Each criterion prints one line and the process exits
//! nonzero if any criterion fails.

mod common;

use std::time::Instant;

use cogradio::cli::{parse_scenario, run_experiment, run_experiment_with, Experiment, Method, ResultRow, RunOptions, Scenario};
use cogradio::distsim::{local_views, locality_audit, run_algorithm1_distributed, run_algorithm4_distributed};
use cogradio::linalg::CVector;
use cogradio::mld::{mld_power_min, mld_rate_opt, MldRateOptions};
use cogradio::mmse::*;
use cogradio::network::*;
use cogradio::sdp::SdpOptions;
use cogradio::sets::UserSet;
use cogradio::ugd::*;
use common::*;
use rand::Rng;

/// Comparison slack for orderings between independently computed rates.
const ORDER_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;
type Allocator<'a> = &'a dyn Fn(&EffectiveNetwork, &[f64], &[f64]) -> AllocationResult;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenario(name: &str) -> Scenario {
    parse_scenario(format!("{}/../../scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"))).expect("bundled scenario parses")
}

/// Rows of one seed, keyed by method.
fn by_seed(rows: &[ResultRow]) -> Vec<(u64, Vec<&ResultRow>)> {
    let mut out: Vec<(u64, Vec<&ResultRow>)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some((s, v)) if *s == r.seed => v.push(r),
            _ => out.push((r.seed, vec![r])),
        }
    }
    out
}

fn row<'a>(rows: &[&'a ResultRow], m: Method) -> &'a ResultRow {
    rows.iter().find(|r| r.method == m).expect("method row present")
}

fn power_at_scale(cfg: &NetworkConfig, ch: &ChannelSet, scale: f64, opts: &PowerMinOptions) -> PowerMinResult {
    algorithm1_power_min(cfg, ch, &cfg.gamma_for_scale(scale), opts)
}

/// Rate and power problems invert each other on feasible instances.
fn round_trip() -> Outcome {
    let start = Instant::now();
    let opts = RateOptOptions::default();
    let delta = opts.delta;
    let (mut tested, mut worst_rate, mut worst_power) = (0, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    let mut seed = 0;
    while tested < 50 {
        seed += 1;
        let ms = 2 + (seed as usize % 2);
        let mp = seed as usize % 3;
        let base = NetworkConfig::new(ms, mp, 3, 3);
        let ch = sample_channels(&base, seed);
        // Direction 1: the power needed for unit rate scale, used as budget,
        // gives back unit rate scale.
        let p = power_at_scale(&base, &ch, 1.0, &opts.power);
        if !p.is_optimal() {
            continue;
        }
        let cfg = base.clone().with_p0(p.objective);
        let Ok(r) = algorithm2_rate_opt(&cfg, &ch, &opts) else { continue };
        tested += 1;
        let err_rate = (r.rho_star - 1.0).abs();
        worst_rate = worst_rate.max(err_rate);
        // Direction 2: the rate reached under a budget needs at most that budget.
        let budget = 100.0;
        let cfg2 = base.with_p0(budget);
        let Ok(r2) = algorithm2_rate_opt(&cfg2, &ch, &opts) else {
            failures.push(format!("seed {seed}: rate optimization failed"));
            continue;
        };
        let back = power_at_scale(&cfg2, &ch, r2.rho_star, &opts.power);
        let ratio = if back.is_optimal() { back.objective / budget } else { f64::INFINITY };
        worst_power = worst_power.max(ratio);
        if err_rate > 2.0 * delta {
            failures.push(format!("seed {seed}: R(P(1)) = {}", r.rho_star));
        }
        if ratio > 1.0 + 1e-3 {
            failures.push(format!("seed {seed}: P(R(P0))/P0 = {ratio}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        failures.is_empty() && secs < 300.0,
        format!(
            "{tested} instances, max |R(P(1)) - 1| = {worst_rate:.2e}, max P(R(P0))/P0 = {worst_power:.6}, {secs:.1} s{}",
            failures.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn duality_gap_check() -> Outcome {
    let mut r = rng(200);
    let (mut feasible, mut small, mut worst) = (0, 0, 0.0f64);
    let mut seed = 1000;
    while feasible < 100 {
        seed += 1;
        let ms = r.random_range(2..=3);
        let mp = r.random_range(1..=2);
        let cfg = NetworkConfig::new(ms, mp, 3, 3);
        let ch = sample_channels(&cfg, seed);
        let gamma: Vec<f64> = (0..ms).map(|_| r.random_range(0.3..2.0)).collect();
        let res = algorithm1_power_min(&cfg, &ch, &gamma, &PowerMinOptions::default());
        if !res.is_optimal() {
            continue;
        }
        feasible += 1;
        let gap = duality_gap(&res);
        worst = worst.max(gap);
        if gap <= 1e-3 {
            small += 1;
        }
    }
    check(small >= 95, format!("{small}/{feasible} runs with gap <= 1e-3, largest gap {worst:.2e}"))
}

fn grid_oracle() -> Outcome {
    let (mut compared, mut worst) = (0, 0.0f64);
    let mut mismatch = Vec::new();
    for seed in 0..100 {
        let cfg = NetworkConfig::new(1, 1, 2, 2).with_beta(vec![0.5]);
        let ch = sample_channels(&cfg, seed);
        let gamma = 1.0;
        let grid = single_user_grid_power(&cfg, &ch, gamma, 10_000);
        let res = algorithm1_power_min(&cfg, &ch, &[gamma], &PowerMinOptions::default());
        match (grid, res.is_optimal()) {
            (Some(g), true) => {
                compared += 1;
                let rel = (res.objective - g).abs() / g;
                worst = worst.max(rel);
                if rel > 0.01 {
                    mismatch.push(format!("seed {seed}: {} vs grid {g}", res.objective));
                }
            }
            (Some(g), false) => mismatch.push(format!("seed {seed}: grid power {g} but solver infeasible")),
            (None, _) => {}
        }
    }
    check(
        mismatch.is_empty() && compared >= 50,
        format!(
            "{compared} instances against a 10^4-point angle grid, largest relative difference {worst:.2e}{}",
            mismatch.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

/// Channels whose stacked matrix is rank deficient: secondary rows are
/// combinations of the primary rows.
fn rank_deficient(cfg: &NetworkConfig, seed: u64) -> ChannelSet {
    let mut ch = sample_channels(cfg, seed);
    let mut r = rng(seed);
    let wpt: Vec<CVector> = ch.wp.iter().map(|w| w.conj().scale(1.0 / w.norm_sqr())).collect();
    for i in 0..cfg.ms {
        let coef: Vec<f64> = (0..cfg.mp).map(|_| r.random_range(-2.0..2.0)).collect();
        for j in 0..cfg.ms {
            let mut row = CVector::zeros(cfg.ns);
            for (k, c) in coef.iter().enumerate() {
                row = row.add(&ch.hps[k][j].scale(*c));
            }
            ch.hss[i][j] = row;
        }
        for (k, c) in coef.iter().enumerate() {
            ch.hsp[i][k] = wpt[k].scale(*c);
        }
    }
    ch
}

fn screens() -> Outcome {
    let mut r = rng(400);
    let (mut necessary_fail, mut zf_pass, mut wrong) = (0, 0, Vec::new());
    for seed in 0..200u64 {
        let ms = r.random_range(2..=3);
        let mp = r.random_range(1..=2);
        let ns = r.random_range(2..=5);
        let cfg = NetworkConfig::new(ms, mp, ns, 3).with_beta(vec![1.0; mp]);
        let constructed = seed % 5 == 0 && mp < ms;
        let ch = if constructed { rank_deficient(&cfg, seed) } else { sample_channels(&cfg, seed) };
        // The scaled channels weight direct links by the target, so the
        // constructed rank deficiency only survives at unit targets.
        let gamma: Vec<f64> = (0..ms).map(|_| if constructed { 1.0 } else { r.random_range(0.5..3.0) }).collect();
        let scaled = scaled_problem(&cfg, &ch, &gamma);
        let necessary = feasibility_necessary(&scaled, &cfg, &ch);
        let zf = feasibility_sufficient_zf(&cfg, &ch);
        if !necessary || zf {
            let res = algorithm1_power_min(&cfg, &ch, &gamma, &PowerMinOptions::default());
            if !necessary {
                necessary_fail += 1;
                if res.is_optimal() {
                    wrong.push(format!("seed {seed}: fails the rank screen but solved"));
                }
            }
            if zf {
                zf_pass += 1;
                if !res.is_optimal() {
                    wrong.push(format!("seed {seed}: passes the zero-forcing screen but reported infeasible"));
                }
            }
        }
    }
    check(
        wrong.is_empty() && necessary_fail > 0 && zf_pass > 0,
        format!(
            "200 instances: {necessary_fail} fail the rank screen, {zf_pass} pass the zero-forcing screen, {} contradictions{}",
            wrong.len(),
            wrong.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn increment_exactness() -> Outcome {
    let mut r = rng(500);
    let (mut worst, mut checks) = (0.0f64, 0);
    for _ in 0..200 {
        let ms = r.random_range(1..=4);
        let net = random_net(&mut r, ms);
        let rho: Vec<f64> = (0..ms).map(|_| r.random_range(0.5..2.0)).collect();
        let rmin: Vec<f64> = (0..ms).map(|_| if r.random_bool(0.5) { 0.0 } else { r.random_range(0.0..0.3) }).collect();
        for i in 0..ms {
            let rec = algorithm3(&net, i, &rmin, &rho).expect("within caps");
            let brute = theta_star_bruteforce(&net, i, &rmin, &rho).expect("within caps");
            let hand = theta_star_by_hand(&net, i, &rmin, &rho);
            worst = worst.max((rec.min_ratio(&rho) - brute).abs()).max((brute - hand).abs());
            checks += 1;
        }
    }
    check(worst <= 1e-9, format!("200 networks, {checks} receivers, largest deviation {worst:.2e}"))
}

/// Largest `t` with `base + t·dir` accepted by `ok`, by bisection.
fn boundary_point(ok: &dyn Fn(&[f64]) -> bool, base: &[f64], dir: &[f64]) -> Vec<f64> {
    let at = |t: f64| base.iter().zip(dir).map(|(b, d)| b + t * d).collect::<Vec<f64>>();
    let (mut lo, mut hi) = (0.0, 1.0);
    while ok(&at(hi)) {
        hi *= 2.0;
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if ok(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

/// Monotone trace, max-min optimality against random boundary probes and
/// Pareto optimality of one allocation rule under one decodability test.
fn allocation_claims(
    name: &str,
    alloc: Allocator<'_>,
    decodable: &dyn Fn(&EffectiveNetwork, &[f64]) -> bool,
    seed: u64,
) -> (usize, Vec<String>) {
    let mut r = rng(seed);
    let mut problems = Vec::new();
    let instances = 25;
    for n in 0..instances {
        let ms = r.random_range(2..=4);
        let net = random_net(&mut r, ms);
        let rho: Vec<f64> = (0..ms).map(|_| r.random_range(0.5..2.0)).collect();
        let rmin = vec![0.0; ms];
        let res = alloc(&net, &rmin, &rho);
        if !res.trace.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| b >= a)) {
            problems.push(format!("{name} #{n}: trace not monotone"));
        }
        if !decodable(&net, &res.r_star) {
            problems.push(format!("{name} #{n}: result not decodable"));
        }
        let best = min_weighted_gain(&res.r_star, &rmin, &rho);
        for _ in 0..1000 {
            let dir: Vec<f64> = (0..ms).map(|_| r.random_range(0.0..1.0)).collect();
            let probe = boundary_point(&|x: &[f64]| decodable(&net, x), &rmin, &dir);
            // Boundary probes include the decodability slack.
            if min_weighted_gain(&probe, &rmin, &rho) > best + 1e-8 {
                problems.push(format!("{name} #{n}: probe {probe:?} beats {:?}", res.r_star));
                break;
            }
        }
        for k in 0..ms {
            let mut up = res.r_star.clone();
            up[k] += 1e-6;
            if decodable(&net, &up) {
                problems.push(format!("{name} #{n}: user {k} can still grow"));
            }
        }
    }
    (instances, problems)
}

fn allocation_optimality() -> Outcome {
    let opts = AllocationOptions::default();
    let (n1, mut problems) = allocation_claims(
        "group decoding",
        &|net, rmin, rho| algorithm4(net, rmin, rho, &opts).expect("decodable start"),
        &|net, x| ugd_decodable_by_hand(net, x),
        600,
    );
    let (n2, p2) = allocation_claims(
        "joint decoding",
        &|net, rmin, rho| algorithm4mld(net, rmin, rho, &opts).expect("decodable start"),
        &|net, x| mld_decodable_by_hand(net, x),
        601,
    );
    problems.extend(p2);
    check(
        problems.is_empty(),
        format!(
            "{n1} group-decoder and {n2} joint-decoder allocations, 1000 probes each, {} violations{}",
            problems.len(),
            problems.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn decoder_ordering(fig5: &[ResultRow]) -> Outcome {
    let mut violations = Vec::new();
    let seeds = by_seed(fig5);
    for (seed, rows) in &seeds {
        let ugd = row(rows, Method::Ugd).min_rate;
        for m in [Method::Mld, Method::Mmse, Method::UgdMmse] {
            let other = row(rows, m).min_rate;
            if ugd.is_nan() || ugd < other - ORDER_TOL {
                violations.push(format!("seed {seed}: UGD {ugd} < {m} {other}"));
            }
        }
    }
    check(
        violations.is_empty() && seeds.len() == 20,
        format!(
            "{} seeds, {} violations{}",
            seeds.len(),
            violations.len(),
            violations.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn efficiency_ordering(fig6: &[ResultRow]) -> Outcome {
    let seeds = by_seed(fig6);
    let mut sym_beats_ml = 0;
    let mut violations = Vec::new();
    for (seed, rows) in &seeds {
        let sym = row(rows, Method::UgdSym);
        let ugd = row(rows, Method::Ugd);
        if sym.sum_rate >= row(rows, Method::Mld).sum_rate - ORDER_TOL {
            sym_beats_ml += 1;
        }
        if ugd.sum_rate.is_nan() || ugd.sum_rate < sym.sum_rate - ORDER_TOL || (ugd.min_rate - sym.min_rate).abs() > ORDER_TOL {
            violations.push(format!("seed {seed}: UGD ({}, {}) vs UGD-sym ({}, {})", ugd.min_rate, ugd.sum_rate, sym.min_rate, sym.sum_rate));
        }
    }
    let share = sym_beats_ml as f64 / seeds.len() as f64;
    check(
        share >= 0.9 && violations.is_empty(),
        format!(
            "UGD-sym sum >= MLD sum on {sym_beats_ml}/{} seeds; UGD vs UGD-sym: {} violations{}",
            seeds.len(),
            violations.len(),
            violations.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn optimized_beats_matching(rows: &[ResultRow], optimized: Method) -> (usize, Vec<String>) {
    let seeds = by_seed(rows);
    let mut bad = Vec::new();
    for (seed, rs) in &seeds {
        let (o, m) = (row(rs, optimized), row(rs, Method::Matching));
        if !(o.feasible && o.min_rate >= m.min_rate - ORDER_TOL) {
            bad.push(format!("seed {seed}: {optimized} {} < matching {}", o.min_rate, m.min_rate));
        }
    }
    (seeds.len(), bad)
}

fn power_comparison(rows: &[ResultRow]) -> (usize, Vec<String>) {
    let mut both = 0;
    let mut bad = Vec::new();
    for (seed, rs) in by_seed(rows) {
        let (o, m) = (row(&rs, Method::Mmse), row(&rs, Method::Matching));
        if o.feasible && m.feasible {
            both += 1;
            if o.sum_power > m.sum_power * (1.0 + 1e-6) {
                bad.push(format!("seed {seed}: optimized power {} > matching {}", o.sum_power, m.sum_power));
            }
        }
    }
    (both, bad)
}

fn beamformer_value(fig1: &[ResultRow], fig2: &[ResultRow], fig4: &[ResultRow]) -> Outcome {
    let mut bad = Vec::new();
    let (n1, b1) = optimized_beats_matching(fig1, Method::Mmse);
    let (n2, b2) = optimized_beats_matching(fig2, Method::Mmse);
    let (n4, b4) = optimized_beats_matching(fig4, Method::Mld);
    bad.extend(b1.into_iter().chain(b2).chain(b4));

    let mut fig3 = scenario("fig3");
    let rows = run_experiment(&fig3);
    let (both_at_target, b3) = power_comparison(&rows);
    bad.extend(b3);
    // At the scenario's target the matching-direction LP is rarely feasible,
    // so the comparison is repeated at a lower target where both usually are.
    fig3.gamma_override = Some(vec![0.5; fig3.network.ms]);
    let (both_low, b3) = power_comparison(&run_experiment(&fig3));
    bad.extend(b3);

    check(
        bad.is_empty() && both_low > 0,
        format!(
            "min rate: MMSE >= matching on {n1}+{n2} seeds, MLD >= matching on {n4} seeds; \
             power: both feasible on {both_at_target}/{} seeds at target 2 and {both_low} at target 0.5, {} violations{}",
            fig3.seeds.len(),
            bad.len(),
            bad.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn polymatroid_suite() -> Outcome {
    let mut r = rng(1000);
    let mut worst = 0.0f64;
    let mut checks = 0u64;
    for ms in 1..=5 {
        for _ in 0..3 {
            let net = random_net(&mut r, ms);
            let rmin: Vec<f64> = (0..ms).map(|_| r.random_range(0.0..0.5)).collect();
            let full = (1u32 << ms) - 1;
            for i in 0..ms {
                for b in 0..=full {
                    let rest = full & !b;
                    let f = |s: u32| group_rank(&net, i, UserSet(s), UserSet(b));
                    worst = worst.max(f(0).abs());
                    for s in (0..=full).filter(|s| s & !rest == 0) {
                        for t in (0..=full).filter(|t| t & !rest == 0 && s & !t == 0) {
                            worst = worst.max(f(s) - f(t));
                            for x in (0..ms).filter(|x| rest & (1 << x) != 0 && t & (1 << x) == 0) {
                                worst = worst.max((f(t | 1 << x) - f(t)) - (f(s | 1 << x) - f(s)));
                                checks += 1;
                            }
                        }
                    }
                }
                let d = |s: u32, b: u32| delta(&net, i, UserSet(s), UserSet(b), &rmin);
                for code in 0..4usize.pow(ms as u32) {
                    let (mut a, mut b, mut c) = (0u32, 0u32, 0u32);
                    let mut k = code;
                    for j in 0..ms {
                        match k % 4 {
                            0 => a |= 1 << j,
                            1 => b |= 1 << j,
                            2 => c |= 1 << j,
                            _ => {}
                        }
                        k /= 4;
                    }
                    worst = worst.max((d(a, b | c) + d(b, c) - d(a | b, c)).abs());
                    if a != 0 {
                        worst = worst.max(d(a, b | c) - d(a, c));
                    }
                    checks += 1;
                }
            }
        }
    }
    check(worst <= 1e-10, format!("{checks} exhaustive checks up to 5 users, largest violation {worst:.2e}"))
}

fn distributed_equivalence() -> Outcome {
    let opts = PowerMinOptions::default();
    let mut r = rng(1100);
    let (mut runs1, mut worst) = (0, 0.0f64);
    let mut problems = Vec::new();
    for seed in 0..100u64 {
        let ms = r.random_range(2..=4);
        let mp = r.random_range(0..=2);
        let cfg = NetworkConfig::new(ms, mp, 3, 3);
        let ch = sample_channels(&cfg, seed);
        let gamma: Vec<f64> = (0..ms).map(|_| r.random_range(0.2..1.5)).collect();
        let central = algorithm1_power_min(&cfg, &ch, &gamma, &opts);
        let (dist, log) = run_algorithm1_distributed(&cfg, &ch, &gamma, &opts);
        if central.status != dist.status {
            problems.push(format!("power seed {seed}: status differs"));
        }
        if !locality_audit(&log, &local_views(&cfg)) {
            problems.push(format!("power seed {seed}: audit failed"));
        }
        if central.is_optimal() && dist.is_optimal() {
            runs1 += 1;
            let d = (central.objective - dist.objective).abs() / central.objective.max(1.0);
            worst = worst.max(d);
            if d > 1e-9 {
                problems.push(format!("power seed {seed}: objective delta {d:.2e}"));
            }
        }
    }
    let mut runs4 = 0;
    for seed in 0..100u64 {
        let ms = r.random_range(1..=4);
        let cfg = NetworkConfig::new(ms, r.random_range(0..=2), 3, 3);
        let ch = sample_channels(&cfg, seed);
        let beams = channel_matching_beams(&cfg, &ch, MatchingMode::Lower).expect("nonzero channels");
        let rho: Vec<f64> = (0..ms).map(|_| r.random_range(0.5..2.0)).collect();
        let rmin = vec![0.0; ms];
        let ao = AllocationOptions::default();
        let central = algorithm4(&effective_network(&cfg, &ch, &beams), &rmin, &rho, &ao).expect("decodable start");
        let (dist, log) = run_algorithm4_distributed(&cfg, &ch, &beams, &rmin, &rho, &ao).expect("decodable start");
        runs4 += 1;
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        if bits(&central.r_star) != bits(&dist.r_star) {
            problems.push(format!("allocation seed {seed}: rates differ"));
        }
        if !locality_audit(&log, &local_views(&cfg)) {
            problems.push(format!("allocation seed {seed}: audit failed"));
        }
    }
    check(
        problems.is_empty(),
        format!(
            "{runs1} solved power runs (largest objective delta {worst:.2e}), {runs4} bit-equal allocations, audits pass{}",
            problems.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn relaxation_ordering(fig4: &[ResultRow]) -> Outcome {
    let s = scenario("fig4");
    let cfg = &s.network;
    let mut problems = Vec::new();
    let mut solved = 0;
    for (seed, rows) in by_seed(fig4) {
        if !row(&rows, Method::Mld).feasible {
            continue;
        }
        let ch = sample_channels(cfg, seed);
        let Ok(opt) = mld_rate_opt(cfg, &ch, &MldRateOptions::default()) else {
            problems.push(format!("seed {seed}: rate optimization failed"));
            continue;
        };
        for fraction in [0.5, 1.0] {
            let rates: Vec<f64> = cfg.rho.iter().map(|p| fraction * opt.rho_star * p).collect();
            let Ok(res) = mld_power_min(cfg, &ch, &rates, &SdpOptions::default()) else {
                problems.push(format!("seed {seed}: no recovery at {fraction} of the optimum"));
                continue;
            };
            solved += 1;
            // The barrier solver stops within a certified distance of the
            // relaxation optimum, so the bound is what gets compared.
            if res.relaxation_bound() > res.power {
                problems.push(format!("seed {seed}: relaxation bound {} > power {}", res.relaxation_bound(), res.power));
            }
            let net = effective_network(cfg, &ch, &res.beams);
            if !mld_decodable_by_hand(&net, &rates) || !margin_satisfied(cfg, &ch, &res.beams, 1e-6) {
                problems.push(format!("seed {seed}: recovered beams fail re-verification"));
            }
        }
    }
    check(
        problems.is_empty() && solved > 0,
        format!(
            "{solved} recoveries on fig4 seeds, {} violations{}",
            problems.len(),
            problems.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn main() {
    let opts = RunOptions::default();
    let run = |name: &str| {
        let s = scenario(name);
        let e = s.experiment.expect("bundled scenarios name their experiment");
        run_experiment_with(&s, e, &opts).rows
    };
    let (fig1, fig2, fig4, fig5, fig6) = (run("fig1"), run("fig2"), run("fig4"), run("fig5"), run("fig6"));
    debug_assert!(fig5.iter().all(|r| r.experiment == Experiment::Fig5));

    let criteria: Vec<Criterion<'_>> = vec![
        ("rate/power round trip", Box::new(round_trip)),
        ("zero duality gap", Box::new(duality_gap_check)),
        ("single-user grid oracle", Box::new(grid_oracle)),
        ("feasibility screens", Box::new(screens)),
        ("increment exactness", Box::new(increment_exactness)),
        ("allocation optimality", Box::new(allocation_optimality)),
        ("decoder ordering", Box::new(|| decoder_ordering(&fig5))),
        ("efficiency ordering", Box::new(|| efficiency_ordering(&fig6))),
        ("beamformer value", Box::new(|| beamformer_value(&fig1, &fig2, &fig4))),
        ("polymatroid properties", Box::new(polymatroid_suite)),
        ("distributed equivalence", Box::new(distributed_equivalence)),
        ("relaxation ordering", Box::new(|| relaxation_ordering(&fig4))),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {:>2} {tag} [{name}] {detail} ({secs:.1} s)", n + 1);
        failed += outcome.is_err() as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
