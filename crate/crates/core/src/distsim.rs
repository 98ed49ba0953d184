//! Message-passing simulation of the distributed power minimization and rate
//! allocation.
//!
//! Every agent reads channel state through an [`Environment`] that records
//! each access, and talks to the others only through logged [`Message`]s.
//! Rounds are synchronous and agents act in ascending [`Agent`] order, so a
//! run is fully deterministic. Agents call the same numerical kernels as the
//! centralized solvers on their local slice of the data.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::UgdError;
use crate::linalg::{solve_upper, CMatrix, CVector, C64};
use crate::mmse::{
    infeasible, max_abs_diff, optimal, relative_change, uplink_direction, uplink_iterate, uplink_update,
    whiten_outgoing, whitening_factor, DualState, PowerMinOptions, PowerMinResult, StepState, LAMBDA_DIVERGENCE,
};
use crate::network::{
    effective_noises, feasibility_necessary, primary_interference, received_sinr, scaled_problem, BeamformerSet,
    ChannelSet, NetworkConfig, RateVector, ScaledChannels,
};
use crate::sets::UserSet;
use crate::ugd::{
    aggregate_increments, algorithm3, effective_network, iterate_rounds, AllocationOptions, AllocationResult,
    EffectiveNetwork, Recommendation,
};

/// Downlink power control stops once powers move by less than this, relatively.
pub const POWER_CONTROL_TOL: f64 = 1e-14;
/// Cap on downlink power-control sweeps per dual evaluation.
pub const POWER_CONTROL_MAX_ITER: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Agent {
    SecondaryTx(usize),
    SecondaryRx(usize),
    PrimaryRx(usize),
}

/// A piece of state an agent can read from its surroundings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Resource {
    /// Secondary-to-secondary channel row.
    Hss { rx: usize, tx: usize },
    /// Secondary transmitter to primary receiver channel row.
    Hps { rx: usize, tx: usize },
    /// Noise plus primary leakage `a_i` at a secondary receiver.
    NoisePower(usize),
    Alpha(usize),
    TargetSinr(usize),
    /// Rate priority `ρ_k`; public.
    Priority(usize),
    /// Interference margin `β_j`; public.
    MarginLimit(usize),
    /// Measured effective scalar gain `h_ij w_j / √a_i`.
    EffectiveGain { rx: usize, tx: usize },
    /// Measured interference plus noise at a secondary receiver.
    ReceivedPower(usize),
    /// Measured aggregate secondary interference at a primary receiver.
    PrimaryInterference(usize),
}

/// Resources an agent is allowed to read.
#[derive(Clone, Debug, PartialEq)]
pub struct KnowledgeView {
    pub agent: Agent,
    pub readable: Vec<Resource>,
}

impl KnowledgeView {
    /// The local view of `agent`. A secondary transmitter and its receiver
    /// share one view: the outgoing rows of the user's transmitter, the
    /// incoming rows at its receiver, its own noise, weight and target, the
    /// public priorities and margins, and its own measurements. A primary
    /// receiver sees its measured interference and its margin.
    pub fn local(agent: Agent, cfg: &NetworkConfig) -> Self {
        let mut readable = Vec::new();
        match agent {
            Agent::SecondaryTx(i) | Agent::SecondaryRx(i) => {
                for r in 0..cfg.ms {
                    readable.push(Resource::Hss { rx: r, tx: i });
                    readable.push(Resource::Hss { rx: i, tx: r });
                    readable.push(Resource::EffectiveGain { rx: i, tx: r });
                    readable.push(Resource::Priority(r));
                }
                for j in 0..cfg.mp {
                    readable.push(Resource::Hps { rx: j, tx: i });
                    readable.push(Resource::MarginLimit(j));
                }
                readable.extend([
                    Resource::NoisePower(i),
                    Resource::Alpha(i),
                    Resource::TargetSinr(i),
                    Resource::ReceivedPower(i),
                ]);
            }
            Agent::PrimaryRx(j) => {
                readable.extend([Resource::PrimaryInterference(j), Resource::MarginLimit(j)]);
            }
        }
        readable.sort();
        readable.dedup();
        KnowledgeView { agent, readable }
    }

    pub fn allows(&self, resource: Resource) -> bool {
        self.readable.binary_search(&resource).is_ok()
    }
}

/// Local views of every agent in the network, in agent order.
pub fn local_views(cfg: &NetworkConfig) -> Vec<KnowledgeView> {
    agents(cfg).into_iter().map(|a| KnowledgeView::local(a, cfg)).collect()
}

fn agents(cfg: &NetworkConfig) -> Vec<Agent> {
    let mut all: Vec<Agent> = (0..cfg.ms).map(Agent::SecondaryTx).collect();
    all.extend((0..cfg.ms).map(Agent::SecondaryRx));
    all.extend((0..cfg.mp).map(Agent::PrimaryRx));
    all
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Recipient {
    Agent(Agent),
    Broadcast,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Payload {
    /// New multiplier `λ_j` of a primary receiver.
    DualUpdate(f64),
    /// Virtual uplink power `ν_i` of a secondary user.
    UplinkPower(f64),
    /// Proposed rate increments, `+∞` where the sender makes no proposal.
    Recommendation(Vec<f64>),
    /// Whether the sender's own constraint holds at the candidate beams.
    Verdict(bool),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::DualUpdate(_) => "DualUpdate",
            Payload::UplinkPower(_) => "UplinkPower",
            Payload::Recommendation(_) => "Recommendation",
            Payload::Verdict(_) => "Verdict",
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Payload::DualUpdate(v) | Payload::UplinkPower(v) => vec![*v],
            Payload::Recommendation(v) => v.clone(),
            Payload::Verdict(b) => vec![if *b { 1.0 } else { 0.0 }],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Message {
    pub round: usize,
    pub from: Agent,
    pub to: Recipient,
    pub payload: Payload,
}

/// One recorded read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Access {
    pub round: usize,
    pub agent: Agent,
    pub resource: Resource,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog {
    pub messages: Vec<Message>,
    pub accesses: Vec<Access>,
}

impl RunLog {
    /// One JSON object per message: round, sender, recipient, payload type
    /// and values. Infinite values are written as the string `"inf"`.
    pub fn records(&self) -> Vec<Value> {
        self.messages
            .iter()
            .map(|m| {
                let values: Vec<Value> = m
                    .payload
                    .values()
                    .into_iter()
                    .map(|v| if v.is_finite() { json!(v) } else { json!(if v > 0.0 { "inf" } else { "-inf" }) })
                    .collect();
                json!({
                    "round": m.round,
                    "from": m.from,
                    "to": m.to,
                    "payload": m.payload.kind(),
                    "values": values,
                })
            })
            .collect()
    }

    /// Writes [`RunLog::records`] as JSON lines.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in self.records() {
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// The physical surroundings of the agents: channel state plus whatever the
/// current transmissions make measurable. Every read is recorded.
pub struct Environment<'a> {
    cfg: &'a NetworkConfig,
    channels: &'a ChannelSet,
    gamma: Vec<f64>,
    noise: Vec<f64>,
    scaled: Option<ScaledChannels>,
    effective: Option<EffectiveNetwork>,
    round: Cell<usize>,
    accesses: RefCell<Vec<Access>>,
}

impl<'a> Environment<'a> {
    fn new(cfg: &'a NetworkConfig, channels: &'a ChannelSet) -> Self {
        Environment {
            cfg,
            channels,
            gamma: Vec::new(),
            noise: effective_noises(cfg, channels),
            scaled: None,
            effective: None,
            round: Cell::new(0),
            accesses: RefCell::new(Vec::new()),
        }
    }

    fn record(&self, agent: Agent, resource: Resource) {
        self.accesses.borrow_mut().push(Access {
            round: self.round.get(),
            agent,
            resource,
        });
    }

    fn next_round(&self) -> usize {
        self.round.set(self.round.get() + 1);
        self.round.get()
    }

    pub fn hss(&self, agent: Agent, rx: usize, tx: usize) -> &CVector {
        self.record(agent, Resource::Hss { rx, tx });
        &self.channels.hss[rx][tx]
    }

    pub fn hps(&self, agent: Agent, rx: usize, tx: usize) -> &CVector {
        self.record(agent, Resource::Hps { rx, tx });
        &self.channels.hps[rx][tx]
    }

    pub fn noise_power(&self, agent: Agent, i: usize) -> f64 {
        self.record(agent, Resource::NoisePower(i));
        self.noise[i]
    }

    pub fn alpha(&self, agent: Agent, i: usize) -> f64 {
        self.record(agent, Resource::Alpha(i));
        self.cfg.alpha[i]
    }

    pub fn target_sinr(&self, agent: Agent, i: usize) -> f64 {
        self.record(agent, Resource::TargetSinr(i));
        self.gamma[i]
    }

    pub fn margin_limit(&self, agent: Agent, j: usize) -> f64 {
        self.record(agent, Resource::MarginLimit(j));
        self.cfg.beta[j]
    }

    pub fn priority(&self, agent: Agent, rho: &[f64], k: usize) -> f64 {
        self.record(agent, Resource::Priority(k));
        rho[k]
    }

    /// Interference plus noise at secondary receiver `i` while the
    /// transmitters send `wtilde` (scaled coordinates).
    fn received_interference(&self, agent: Agent, i: usize, wtilde: &[CVector]) -> f64 {
        self.record(agent, Resource::ReceivedPower(i));
        let scaled = self.scaled.as_ref().expect("power-minimization environment");
        let leak: f64 = (0..self.cfg.ms)
            .filter(|&j| j != i)
            .map(|j| scaled.hss[i][j].dot(&wtilde[j]).norm_sqr())
            .sum();
        leak + self.noise[i]
    }

    /// Interference at primary receiver `j` normalized by its margin.
    fn normalized_interference(&self, agent: Agent, j: usize, wtilde: &[CVector]) -> f64 {
        self.record(agent, Resource::PrimaryInterference(j));
        let scaled = self.scaled.as_ref().expect("power-minimization environment");
        scaled.hps[j].iter().zip(wtilde).map(|(h, w)| h.dot(w).norm_sqr()).sum::<f64>()
    }

    fn measured_sinr(&self, agent: Agent, i: usize, beams: &BeamformerSet) -> f64 {
        self.record(agent, Resource::ReceivedPower(i));
        received_sinr(self.cfg, self.channels, beams, i)
    }

    fn measured_primary_interference(&self, agent: Agent, j: usize, beams: &BeamformerSet) -> f64 {
        self.record(agent, Resource::PrimaryInterference(j));
        primary_interference(self.channels, beams, j)
    }

    fn effective_gain(&self, agent: Agent, rx: usize, tx: usize) -> C64 {
        self.record(agent, Resource::EffectiveGain { rx, tx });
        self.effective.as_ref().expect("allocation environment").h[rx][tx]
    }

    fn into_accesses(self) -> Vec<Access> {
        self.accesses.into_inner()
    }
}

/// What secondary transmitter `t` knows in scaled coordinates: only its own
/// column of the scaled channel arrays is filled in.
fn local_scaled_column(env: &Environment, t: usize, gamma_t: f64) -> ScaledChannels {
    let cfg = env.cfg;
    let me = Agent::SecondaryTx(t);
    let alpha_t = env.alpha(me, t);
    let hss = (0..cfg.ms)
        .map(|r| {
            (0..cfg.ms)
                .map(|c| {
                    if c != t {
                        return CVector::zeros(cfg.ns);
                    }
                    let d = if r == t { (alpha_t * gamma_t).sqrt() } else { alpha_t.sqrt() };
                    env.hss(me, r, t).scale(1.0 / d)
                })
                .collect()
        })
        .collect();
    let hps = (0..cfg.mp)
        .map(|j| {
            let beta_j = env.margin_limit(me, j);
            (0..cfg.ms)
                .map(|c| {
                    if c == t {
                        env.hps(me, j, t).scale(1.0 / (beta_j * alpha_t).sqrt())
                    } else {
                        CVector::zeros(cfg.ns)
                    }
                })
                .collect()
        })
        .collect();
    ScaledChannels {
        hss,
        hps,
        wp_tilde: Vec::new(),
        gamma: Vec::new(),
    }
}

/// Per-transmitter state within one dual evaluation.
struct TxState {
    u: CMatrix,
    outgoing: Vec<CVector>,
}

/// Distributed power control: each user raises its power to exactly meet
/// its target against the interference its receiver measures. Returns the
/// scaled-coordinate beams, or `None` when the powers diverge.
fn power_control(env: &Environment, txs: &[TxState], dirs: &[CVector]) -> Option<(Vec<CVector>, Vec<CVector>)> {
    let ms = txs.len();
    let own_gain: Vec<f64> = (0..ms).map(|t| txs[t].outgoing[t].dot(&dirs[t]).norm_sqr()).collect();
    let mut p = vec![0.0_f64; ms];
    for _ in 0..POWER_CONTROL_MAX_ITER {
        let beams: Vec<CVector> = (0..ms).map(|t| dirs[t].scale(p[t].sqrt())).collect();
        let wtilde: Vec<CVector> = (0..ms).map(|t| solve_upper(&txs[t].u, &beams[t])).collect();
        let next: Vec<f64> = (0..ms)
            .map(|i| env.received_interference(Agent::SecondaryRx(i), i, &wtilde) / own_gain[i])
            .collect();
        if next.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let change = relative_change(&p, &next);
        p = next;
        if change < POWER_CONTROL_TOL {
            let beams: Vec<CVector> = (0..ms).map(|t| dirs[t].scale(p[t].sqrt())).collect();
            let wtilde = (0..ms).map(|t| solve_upper(&txs[t].u, &beams[t])).collect();
            return Some((beams, wtilde));
        }
    }
    None
}

/// Distributed counterpart of [`crate::mmse::algorithm1_power_min`].
///
/// Per outer iteration, each transmitter whitens its own outgoing rows with
/// the broadcast multipliers, the users run the virtual uplink fixed point
/// by exchanging their uplink powers, and downlink powers settle through
/// measured-interference power control. Each primary receiver then measures
/// its interference, updates its multiplier with the configured step rule
/// and broadcasts it. Once the multipliers stop moving, every receiver
/// checks its own constraint and broadcasts a verdict.
pub fn run_algorithm1_distributed(
    cfg: &NetworkConfig,
    channels: &ChannelSet,
    gamma: &[f64],
    opts: &PowerMinOptions,
) -> (PowerMinResult, RunLog) {
    let mut env = Environment::new(cfg, channels);
    env.gamma = gamma.to_vec();
    let scaled = scaled_problem(cfg, channels, gamma);
    let mut messages = Vec::new();
    let mut dual = DualState {
        lambda: vec![0.0; cfg.mp],
        iteration: 0,
        best_value: f64::NEG_INFINITY,
        best_lambda: vec![0.0; cfg.mp],
    };
    let mut trace = Vec::new();
    // Admission screen run by the simulator before the agents start.
    if gamma.iter().any(|&g| !(g > 0.0)) || !feasibility_necessary(&scaled, cfg, channels) {
        return (infeasible(cfg, dual, trace), RunLog::default());
    }
    env.scaled = Some(scaled);

    let ms = cfg.ms;
    let local: Vec<ScaledChannels> = (0..ms)
        .map(|t| {
            let g = env.target_sinr(Agent::SecondaryTx(t), t);
            local_scaled_column(&env, t, g)
        })
        .collect();
    let mut warm: Option<Vec<f64>> = None;
    let mut steps: Vec<StepState> = vec![opts.step.init(); cfg.mp];

    let result = 'outer: {
        for k in 1..=opts.max_outer {
            dual.iteration = k;
            let txs: Option<Vec<TxState>> = (0..ms)
                .map(|t| {
                    let u = whitening_factor(t, &dual.lambda, &local[t]).ok()?;
                    let outgoing = whiten_outgoing(t, &u, &local[t]);
                    Some(TxState { u, outgoing })
                })
                .collect();
            let Some(txs) = txs else {
                break 'outer infeasible(cfg, dual, trace);
            };

            let up = uplink_iterate(ms, opts.inner_tol, opts.max_inner, warm.as_deref(), |nu| {
                let round = env.next_round();
                (0..ms)
                    .map(|t| {
                        let v = uplink_update(t, &txs[t].outgoing, nu, 1.0).ok();
                        messages.push(Message {
                            round,
                            from: Agent::SecondaryTx(t),
                            to: Recipient::Broadcast,
                            payload: Payload::UplinkPower(v.unwrap_or(f64::NAN)),
                        });
                        v
                    })
                    .collect()
            });
            if !up.converged {
                break 'outer infeasible(cfg, dual, trace);
            }
            let dirs: Option<Vec<CVector>> = (0..ms).map(|t| uplink_direction(t, &txs[t].outgoing, &up.nu).ok()).collect();
            let Some((beams, wtilde)) = dirs.and_then(|d| power_control(&env, &txs, &d)) else {
                break 'outer infeasible(cfg, dual, trace);
            };
            let value = beams.iter().map(CVector::norm_sqr).sum::<f64>() - dual.lambda.iter().sum::<f64>();
            trace.push(value);
            if value > dual.best_value {
                dual.best_value = value;
                dual.best_lambda = dual.lambda.clone();
            }
            if opts.warm_start {
                warm = Some(up.nu.clone());
            }
            let candidate = BeamformerSet {
                ws: (0..ms)
                    .map(|t| wtilde[t].scale(1.0 / env.alpha(Agent::SecondaryTx(t), t).sqrt()))
                    .collect(),
            };
            if cfg.mp == 0 {
                // Nothing is dualized; the first evaluation is final.
                let ok = candidate.is_finite()
                    && (0..ms).all(|i| {
                        let me = Agent::SecondaryRx(i);
                        env.measured_sinr(me, i, &candidate) >= env.target_sinr(me, i) - opts.verify_slack
                    });
                break 'outer if ok {
                    optimal(cfg, candidate, dual, trace)
                } else {
                    infeasible(cfg, dual, trace)
                };
            }

            let round = env.next_round();
            let mut next = Vec::with_capacity(cfg.mp);
            for j in 0..cfg.mp {
                let me = Agent::PrimaryRx(j);
                let s = 1.0 - env.normalized_interference(me, j, &wtilde);
                let l = opts.step.update(&mut steps[j], k, dual.lambda[j], s);
                messages.push(Message {
                    round,
                    from: me,
                    to: Recipient::Broadcast,
                    payload: Payload::DualUpdate(l),
                });
                next.push(l);
            }
            let change = max_abs_diff(&dual.lambda, &next);
            dual.lambda = next;
            if dual.lambda.iter().any(|&l| !(l < LAMBDA_DIVERGENCE)) {
                break 'outer infeasible(cfg, dual, trace);
            }
            if change < opts.outer_tol {
                let round = env.next_round();
                let finite = candidate.is_finite();
                let mut all_ok = true;
                for i in 0..ms {
                    let me = Agent::SecondaryRx(i);
                    let ok = finite && env.measured_sinr(me, i, &candidate) >= env.target_sinr(me, i) - opts.verify_slack;
                    all_ok &= ok;
                    messages.push(Message {
                        round,
                        from: me,
                        to: Recipient::Broadcast,
                        payload: Payload::Verdict(ok),
                    });
                }
                for j in 0..cfg.mp {
                    let me = Agent::PrimaryRx(j);
                    let ok = finite
                        && env.measured_primary_interference(me, j, &candidate) <= env.margin_limit(me, j) + opts.verify_slack;
                    all_ok &= ok;
                    messages.push(Message {
                        round,
                        from: me,
                        to: Recipient::Broadcast,
                        payload: Payload::Verdict(ok),
                    });
                }
                if all_ok {
                    break 'outer optimal(cfg, candidate, dual, trace);
                }
            }
        }
        infeasible(cfg, dual, trace)
    };
    let log = RunLog {
        messages,
        accesses: env.into_accesses(),
    };
    (result, log)
}

/// Distributed counterpart of [`crate::ugd::algorithm4`]. Each receiver
/// measures its own row of the effective network, runs the single-receiver
/// recommendation and broadcasts it; every user applies the min rule.
pub fn run_algorithm4_distributed(
    cfg: &NetworkConfig,
    channels: &ChannelSet,
    beams: &BeamformerSet,
    rmin: &[f64],
    rho: &[f64],
    opts: &AllocationOptions,
) -> Result<(AllocationResult, RunLog), UgdError> {
    let mut env = Environment::new(cfg, channels);
    env.effective = Some(effective_network(cfg, channels, beams));
    let ms = cfg.ms;
    let mut messages = Vec::new();
    let result = iterate_rounds(ms, rmin, rho, opts, |current| {
        let round = env.next_round();
        let mut recs = Vec::with_capacity(ms);
        for i in 0..ms {
            let me = Agent::SecondaryRx(i);
            let h = (0..ms)
                .map(|r| {
                    if r == i {
                        (0..ms).map(|t| env.effective_gain(me, i, t)).collect()
                    } else {
                        vec![C64::new(0.0, 0.0); ms]
                    }
                })
                .collect();
            let priorities: Vec<f64> = (0..ms).map(|k| env.priority(me, rho, k)).collect();
            let rec = algorithm3(&EffectiveNetwork::new(h), i, current, &priorities)?;
            messages.push(Message {
                round,
                from: me,
                to: Recipient::Broadcast,
                payload: Payload::Recommendation(rec.increments.clone()),
            });
            recs.push(rec);
        }
        Ok(recs)
    })?;
    let log = RunLog {
        messages,
        accesses: env.into_accesses(),
    };
    Ok((result, log))
}

/// True iff every recorded read falls inside the reading agent's view.
/// Agents without a view fail the audit.
pub fn locality_audit(log: &RunLog, views: &[KnowledgeView]) -> bool {
    let allowed: HashSet<(Agent, Resource)> = views
        .iter()
        .flat_map(|v| v.readable.iter().map(move |&r| (v.agent, r)))
        .collect();
    log.accesses.iter().all(|a| allowed.contains(&(a.agent, a.resource)))
}

/// Reapplies the broadcast recommendations of an allocation run to `rmin`,
/// round by round, and returns the final rates.
pub fn replay_algorithm4(log: &RunLog, rmin: &[f64]) -> RateVector {
    let mut rounds: BTreeMap<usize, Vec<Recommendation>> = BTreeMap::new();
    for m in &log.messages {
        if let (Agent::SecondaryRx(i), Payload::Recommendation(inc)) = (m.from, &m.payload) {
            rounds.entry(m.round).or_default().push(Recommendation {
                from_receiver: i,
                increments: inc.clone(),
                decoding_set: UserSet::EMPTY,
                partition_trace: Vec::new(),
            });
        }
    }
    let mut current = rmin.to_vec();
    for recs in rounds.values() {
        for (r, d) in current.iter_mut().zip(aggregate_increments(recs, rmin.len())) {
            *r += d;
        }
    }
    current
}
