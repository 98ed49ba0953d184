//! Per-seed experiment pipelines. Every pipeline draws its channels from the
//! seed, runs the methods it compares and emits one row per method. Solver
//! failures become rows flagged infeasible; they never stop the batch.

use std::fmt;
use std::time::Instant;

use crate::cli::scenario::{Experiment, Scenario};
use crate::distsim::{run_algorithm1_distributed, run_algorithm4_distributed, RunLog};
use crate::mld::{mld_max_common_scale, mld_rate_opt, MldRateOptions};
use crate::mmse::{
    algorithm1_power_min, algorithm2_rate_opt, fixed_direction_powers, PowerMinOptions, PowerMinResult,
    RateOptOptions,
};
use crate::network::{
    channel_matching_beams, margin_satisfied, matched_direction, received_sinr, sample_channels, single_user_rates,
    weighted_sum_power, BeamformerSet, ChannelSet, MatchingMode, NetworkConfig,
};
use crate::ugd::{algorithm4, algorithm4mld, effective_network, strict_fair_rate, AllocationOptions, AllocationResult};

/// SINR target of the power comparison when the scenario sets none.
pub const FIG3_DEFAULT_GAMMA: f64 = 2.0;
/// Allocation rounds of the figure protocols.
pub const FIGURE_ROUNDS: usize = 4;
/// Allocation rounds of `ugd_alloc` when the scenario sets none.
pub const DEFAULT_ROUNDS: usize = 50;
/// Slack used when flagging rows feasible.
pub const CONTRACT_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Mmse,
    Mld,
    Ugd,
    UgdSym,
    UgdMmse,
    Matching,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Mmse,
        Method::Mld,
        Method::Ugd,
        Method::UgdSym,
        Method::UgdMmse,
        Method::Matching,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Mmse => "MMSE",
            Method::Mld => "MLD",
            Method::Ugd => "UGD",
            Method::UgdSym => "UGD-sym",
            Method::UgdMmse => "UGD-MMSE",
            Method::Matching => "matching",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.tag() == tag)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub experiment: Experiment,
    pub method: Method,
    /// Bits per channel use.
    pub min_rate: f64,
    pub sum_rate: f64,
    /// Weighted sum power `Σ α_i ‖w_i‖²`, linear.
    pub sum_power: f64,
    pub feasible: bool,
    pub iterations: usize,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Record wall times; otherwise they are written as 0 so output files
    /// are reproducible byte for byte.
    pub timing: bool,
    /// Run `powermin` and `ugd_alloc` through the message-passing simulator
    /// and keep its logs.
    pub distributed: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    /// Message logs of distributed runs, tagged with their seed.
    pub logs: Vec<(u64, RunLog)>,
}

/// Outcome of one method on one seed.
struct Outcome {
    method: Method,
    rates: Option<Vec<f64>>,
    power: f64,
    feasible: bool,
    iterations: usize,
    millis: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64() * 1e3)
}

fn failed(method: Method, seed: u64, err: impl fmt::Display, millis: f64) -> Outcome {
    eprintln!("seed {seed}, {method}: {err}");
    Outcome {
        method,
        rates: None,
        power: f64::NAN,
        feasible: false,
        iterations: 0,
        millis,
    }
}

fn allocation(method: Method, res: &AllocationResult, power: f64, millis: f64) -> Outcome {
    Outcome {
        method,
        rates: Some(res.r_star.clone()),
        power,
        feasible: true,
        iterations: res.iterations,
        millis,
    }
}

/// SINR targets and margins hold within [`CONTRACT_SLACK`].
fn targets_hold(cfg: &NetworkConfig, ch: &ChannelSet, beams: &BeamformerSet, gamma: &[f64]) -> bool {
    beams.is_finite()
        && (0..cfg.ms).all(|i| received_sinr(cfg, ch, beams, i) >= gamma[i] - CONTRACT_SLACK)
        && margin_satisfied(cfg, ch, beams, CONTRACT_SLACK)
}

/// Budget and margins hold within [`CONTRACT_SLACK`].
fn budget_holds(cfg: &NetworkConfig, ch: &ChannelSet, beams: &BeamformerSet) -> bool {
    beams.is_finite()
        && weighted_sum_power(cfg, beams) <= cfg.p0 * (1.0 + CONTRACT_SLACK)
        && margin_satisfied(cfg, ch, beams, CONTRACT_SLACK)
}

fn power_outcome(cfg: &NetworkConfig, ch: &ChannelSet, res: &PowerMinResult, gamma: &[f64], millis: f64) -> Outcome {
    let feasible = res.is_optimal() && targets_hold(cfg, ch, &res.beams, gamma);
    Outcome {
        method: Method::Mmse,
        rates: res.is_optimal().then(|| single_user_rates(cfg, ch, &res.beams)),
        power: if res.is_optimal() { res.objective } else { f64::INFINITY },
        feasible,
        iterations: res.dual.iteration,
        millis,
    }
}

fn power_options(s: &Scenario) -> PowerMinOptions {
    PowerMinOptions {
        max_outer: s.tolerances.max_outer,
        max_inner: s.tolerances.max_inner,
        ..PowerMinOptions::default()
    }
}

fn allocation_options(s: &Scenario, default_rounds: usize) -> AllocationOptions {
    AllocationOptions {
        conv_eps: s.tolerances.conv_eps,
        max_rounds: s.tolerances.max_rounds.unwrap_or(default_rounds),
    }
}

fn gamma_or(s: &Scenario, default: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
    s.gamma_override.clone().unwrap_or_else(default)
}

/// Runs one seed of `experiment`.
fn run_seed(s: &Scenario, experiment: Experiment, seed: u64, opts: &RunOptions, logs: &mut Vec<(u64, RunLog)>) -> Vec<Outcome> {
    let cfg = &s.network;
    let ch = sample_channels(cfg, seed);
    let zeros = vec![0.0; cfg.ms];
    match experiment {
        Experiment::Powermin => {
            let gamma = gamma_or(s, || cfg.gamma_for_scale(1.0));
            let ((res, log), ms) = timed(|| {
                if opts.distributed {
                    let (r, l) = run_algorithm1_distributed(cfg, &ch, &gamma, &power_options(s));
                    (r, Some(l))
                } else {
                    (algorithm1_power_min(cfg, &ch, &gamma, &power_options(s)), None)
                }
            });
            logs.extend(log.map(|l| (seed, l)));
            vec![power_outcome(cfg, &ch, &res, &gamma, ms)]
        }
        Experiment::Rateopt => vec![rate_opt(s, &ch, seed).0],
        Experiment::Mld => vec![mld_opt(s, &ch, seed)],
        Experiment::UgdAlloc => {
            let (out, ms) = timed(|| {
                let beams = channel_matching_beams(cfg, &ch, MatchingMode::Lower)?;
                let power = weighted_sum_power(cfg, &beams);
                let ao = allocation_options(s, DEFAULT_ROUNDS);
                let (res, log) = if opts.distributed {
                    let (r, l) = run_algorithm4_distributed(cfg, &ch, &beams, &zeros, &cfg.rho, &ao)?;
                    (r, Some(l))
                } else {
                    (algorithm4(&effective_network(cfg, &ch, &beams), &zeros, &cfg.rho, &ao)?, None)
                };
                Ok::<_, Box<dyn std::error::Error>>((res, power, log))
            });
            match out {
                Ok((res, power, log)) => {
                    logs.extend(log.map(|l| (seed, l)));
                    vec![allocation(Method::Ugd, &res, power, ms)]
                }
                Err(e) => vec![failed(Method::Ugd, seed, e, ms)],
            }
        }
        Experiment::Fig1 | Experiment::Fig2 => {
            let (mmse, beams) = rate_opt(s, &ch, seed);
            let mut rows = vec![];
            let ugd = match &beams {
                Some(b) => {
                    let ((res, power), ms) = timed(|| {
                        let r0 = single_user_rates(cfg, &ch, b);
                        let net = effective_network(cfg, &ch, b);
                        (algorithm4(&net, &r0, &cfg.rho, &allocation_options(s, FIGURE_ROUNDS)), weighted_sum_power(cfg, b))
                    });
                    match res {
                        Ok(r) => allocation(Method::UgdMmse, &r, power, ms),
                        Err(e) => failed(Method::UgdMmse, seed, e, ms),
                    }
                }
                None => failed(Method::UgdMmse, seed, "no optimized beams", 0.0),
            };
            rows.push(mmse);
            rows.push(ugd);
            let (matching, ms) = timed(|| channel_matching_beams(cfg, &ch, MatchingMode::Lower));
            rows.push(match matching {
                Ok(b) => Outcome {
                    method: Method::Matching,
                    rates: Some(single_user_rates(cfg, &ch, &b)),
                    power: weighted_sum_power(cfg, &b),
                    feasible: budget_holds(cfg, &ch, &b),
                    iterations: 0,
                    millis: ms,
                },
                Err(e) => failed(Method::Matching, seed, e, ms),
            });
            rows
        }
        Experiment::Fig3 => {
            let gamma = gamma_or(s, || vec![FIG3_DEFAULT_GAMMA; cfg.ms]);
            let (res, ms) = timed(|| algorithm1_power_min(cfg, &ch, &gamma, &power_options(s)));
            let optimized = power_outcome(cfg, &ch, &res, &gamma, ms);
            let (matched, ms) = timed(|| {
                let dirs: Option<Vec<_>> = (0..cfg.ms).map(|i| matched_direction(&ch.hss[i][i])).collect();
                dirs.and_then(|d| fixed_direction_powers(cfg, &ch, &d, &gamma))
            });
            let matching = match matched {
                Some(b) => Outcome {
                    method: Method::Matching,
                    rates: Some(single_user_rates(cfg, &ch, &b)),
                    power: weighted_sum_power(cfg, &b),
                    feasible: targets_hold(cfg, &ch, &b, &gamma),
                    iterations: 0,
                    millis: ms,
                },
                None => Outcome {
                    method: Method::Matching,
                    rates: None,
                    power: f64::INFINITY,
                    feasible: false,
                    iterations: 0,
                    millis: ms,
                },
            };
            vec![optimized, matching]
        }
        Experiment::Fig4 => {
            let optimized = mld_opt(s, &ch, seed);
            let (matching, ms) = timed(|| channel_matching_beams(cfg, &ch, MatchingMode::Lower));
            let matching = match matching {
                Ok(b) => {
                    let scale = mld_max_common_scale(cfg, &ch, &b);
                    Outcome {
                        method: Method::Matching,
                        rates: Some(cfg.rho.iter().map(|r| scale * r).collect()),
                        power: weighted_sum_power(cfg, &b),
                        feasible: budget_holds(cfg, &ch, &b),
                        iterations: 0,
                        millis: ms,
                    }
                }
                Err(e) => failed(Method::Matching, seed, e, ms),
            };
            vec![optimized, matching]
        }
        Experiment::Fig5 | Experiment::Fig6 => {
            let beams = match channel_matching_beams(cfg, &ch, MatchingMode::Lower) {
                Ok(b) => b,
                Err(e) => return Method::ALL[..5].iter().map(|&m| failed(m, seed, &e, 0.0)).collect(),
            };
            let power = weighted_sum_power(cfg, &beams);
            let net = effective_network(cfg, &ch, &beams);
            let ao = allocation_options(s, FIGURE_ROUNDS);
            let (mmse_rates, ms) = timed(|| single_user_rates(cfg, &ch, &beams));
            let mut rows = vec![Outcome {
                method: Method::Mmse,
                rates: Some(mmse_rates.clone()),
                power,
                feasible: budget_holds(cfg, &ch, &beams),
                iterations: 0,
                millis: ms,
            }];
            let (mld, ms) = timed(|| algorithm4mld(&net, &zeros, &cfg.rho, &ao));
            rows.push(match mld {
                Ok(r) => allocation(Method::Mld, &r, power, ms),
                Err(e) => failed(Method::Mld, seed, e, ms),
            });
            let (ugd, ms) = timed(|| algorithm4(&net, &zeros, &cfg.rho, &ao));
            match ugd {
                Ok(r) => {
                    rows.push(allocation(Method::Ugd, &r, power, ms));
                    let (sym, ms2) = timed(|| strict_fair_rate(&r.trace[1], &zeros, &cfg.rho));
                    rows.push(Outcome {
                        method: Method::UgdSym,
                        rates: Some(sym),
                        power,
                        feasible: true,
                        iterations: 1,
                        millis: ms + ms2,
                    });
                }
                Err(e) => {
                    rows.push(failed(Method::Ugd, seed, &e, ms));
                    rows.push(failed(Method::UgdSym, seed, &e, 0.0));
                }
            }
            let (um, ms) = timed(|| algorithm4(&net, &mmse_rates, &cfg.rho, &ao));
            rows.push(match um {
                Ok(r) => allocation(Method::UgdMmse, &r, power, ms),
                Err(e) => failed(Method::UgdMmse, seed, e, ms),
            });
            rows
        }
    }
}

/// Rate maximization for single-user receivers; also returns the beams.
fn rate_opt(s: &Scenario, ch: &ChannelSet, seed: u64) -> (Outcome, Option<BeamformerSet>) {
    let cfg = &s.network;
    let ro = RateOptOptions {
        delta: s.tolerances.bisection_delta,
        power: power_options(s),
    };
    let (res, ms) = timed(|| algorithm2_rate_opt(cfg, ch, &ro));
    match res {
        Ok(r) => (
            Outcome {
                method: Method::Mmse,
                rates: Some(single_user_rates(cfg, ch, &r.beams)),
                power: weighted_sum_power(cfg, &r.beams),
                feasible: budget_holds(cfg, ch, &r.beams),
                iterations: r.probes,
                millis: ms,
            },
            Some(r.beams),
        ),
        Err(e) => (failed(Method::Mmse, seed, e, ms), None),
    }
}

/// Rate maximization for joint (MLD) receivers.
fn mld_opt(s: &Scenario, ch: &ChannelSet, seed: u64) -> Outcome {
    let cfg = &s.network;
    let mo = MldRateOptions {
        delta: s.tolerances.bisection_delta,
        ..MldRateOptions::default()
    };
    let (res, ms) = timed(|| mld_rate_opt(cfg, ch, &mo));
    match res {
        Ok(r) => Outcome {
            method: Method::Mld,
            rates: Some(cfg.rho.iter().map(|p| r.rho_star * p).collect()),
            power: weighted_sum_power(cfg, &r.beams),
            feasible: budget_holds(cfg, ch, &r.beams),
            iterations: r.probes,
            millis: ms,
        },
        Err(e) => failed(Method::Mld, seed, e, ms),
    }
}

/// Runs the scenario's experiment over all seeds.
///
/// # Panics
/// If the scenario names no experiment.
pub fn run_experiment(scenario: &Scenario) -> Vec<ResultRow> {
    let experiment = scenario.experiment.expect("scenario names no experiment");
    run_experiment_with(scenario, experiment, &RunOptions::default()).rows
}

/// Runs `experiment` over all seeds of the scenario, in seed order.
pub fn run_experiment_with(scenario: &Scenario, experiment: Experiment, opts: &RunOptions) -> ExperimentOutput {
    let mut out = ExperimentOutput::default();
    for &seed in &scenario.seeds {
        for o in run_seed(scenario, experiment, seed, opts, &mut out.logs) {
            let (min_rate, sum_rate) = match &o.rates {
                Some(r) => (r.iter().copied().fold(f64::INFINITY, f64::min), r.iter().sum()),
                None => (f64::NAN, f64::NAN),
            };
            out.rows.push(ResultRow {
                seed,
                experiment,
                method: o.method,
                min_rate,
                sum_rate,
                sum_power: o.power,
                feasible: o.feasible && o.rates.is_some(),
                iterations: o.iterations,
                wall_time_ms: if opts.timing { o.millis } else { 0.0 },
            });
        }
    }
    out
}
