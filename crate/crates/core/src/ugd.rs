//! Rate allocation for group decoders on a fixed set of beams.
//!
//! Each receiver sees a scalar effective channel `h[i][j] = h_ij w_j / √a_i`
//! with unit noise. A receiver that jointly decodes a group `A` while
//! treating `B` as noise supports the polymatroid with rank function
//! `f(S) = log2(1 + Σ_S |h|² / (1 + Σ_B |h|²))`. The allocation algorithms
//! peel off bottleneck sets of this polymatroid to find weighted max-min
//! fair rate increments.

use crate::error::UgdError;
use crate::linalg::{logdet_capacity, C64};
use crate::network::{effective_noises, BeamformerSet, ChannelSet, NetworkConfig, RateVector};
use crate::sets::UserSet;

/// Slack on every decodability comparison.
pub const DECODE_SLACK: f64 = 1e-9;
/// Largest group handled by exhaustive subset scans.
pub const MAX_GROUP: usize = 20;
/// Largest network handled by [`algorithm3`].
pub const MAX_USERS_ALG3: usize = 16;
/// Largest network handled by [`theta_star_bruteforce`].
pub const MAX_USERS_BRUTEFORCE: usize = 8;

/// Relative tolerance under which two subset ratios count as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveNetwork {
    /// `h[i][j]`: gain of user `j` at receiver `i`, noise normalized to one.
    pub h: Vec<Vec<C64>>,
}

impl EffectiveNetwork {
    pub fn new(h: Vec<Vec<C64>>) -> Self {
        debug_assert!(h.iter().all(|row| row.len() == h.len()));
        EffectiveNetwork { h }
    }

    /// Network with real gains.
    pub fn from_real(h: &[Vec<f64>]) -> Self {
        EffectiveNetwork::new(
            h.iter()
                .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn ms(&self) -> usize {
        self.h.len()
    }

    pub fn users(&self) -> UserSet {
        UserSet::full(self.ms())
    }

    fn gains(&self, i: usize, set: UserSet) -> Vec<C64> {
        set.iter().map(|j| self.h[i][j]).collect()
    }
}

/// Effective scalar network for the given beams.
pub fn effective_network(cfg: &NetworkConfig, channels: &ChannelSet, beams: &BeamformerSet) -> EffectiveNetwork {
    let a = effective_noises(cfg, channels);
    let h = (0..cfg.ms)
        .map(|i| {
            let s = 1.0 / a[i].sqrt();
            (0..cfg.ms)
                .map(|j| channels.hss[i][j].dot(&beams.ws[j]) * s)
                .collect()
        })
        .collect();
    EffectiveNetwork { h }
}

/// Rank `f(S)` of the region at receiver `i` with `B` treated as noise.
pub fn group_rank(net: &EffectiveNetwork, i: usize, s: UserSet, b: UserSet) -> f64 {
    debug_assert!(s.is_disjoint(b));
    if s.is_empty() {
        return 0.0;
    }
    logdet_capacity(&net.gains(i, s), &net.gains(i, b), 1.0)
}

fn check_group(a: UserSet) -> Result<(), UgdError> {
    if a.len() > MAX_GROUP {
        return Err(UgdError::CapExceeded {
            what: "group size",
            value: a.len(),
            cap: MAX_GROUP,
        });
    }
    Ok(())
}

fn sum_over(set: UserSet, values: &[f64]) -> f64 {
    set.iter().map(|j| values[j]).sum()
}

/// True iff the rates of the users in `A` (read from the full-length `r`)
/// lie in the region of receiver `i` decoding `A` with `B` as noise.
pub fn region_member(net: &EffectiveNetwork, i: usize, a: UserSet, b: UserSet, r: &[f64]) -> Result<bool, UgdError> {
    check_group(a)?;
    Ok(a
        .nonempty_subsets()
        .all(|d| sum_over(d, r) <= group_rank(net, i, d, b) + DECODE_SLACK))
}

/// Surplus `f(S) − Σ_S Rmin` of the group `S` at receiver `i`.
pub fn delta(net: &EffectiveNetwork, i: usize, s: UserSet, b: UserSet, rmin: &[f64]) -> f64 {
    group_rank(net, i, s, b) - sum_over(s, rmin)
}

/// Largest common weighted increment for the group `A` decoded at receiver
/// `i` with `B` as noise: the minimum over nonempty `S ⊆ A` of
/// `Δ(S)/Σ_S ρ`.
pub fn theta(net: &EffectiveNetwork, i: usize, a: UserSet, b: UserSet, rmin: &[f64], rho: &[f64]) -> Result<f64, UgdError> {
    check_group(a)?;
    Ok(a
        .nonempty_subsets()
        .map(|s| delta(net, i, s, b, rmin) / sum_over(s, rho))
        .fold(f64::INFINITY, f64::min))
}

/// Users ordered by received amplitude at receiver `i`, strongest first;
/// ties go to the lower index.
pub fn ugd_permutation(net: &EffectiveNetwork, i: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..net.ms()).collect();
    order.sort_by(|&x, &y| net.h[i][y].norm().total_cmp(&net.h[i][x].norm()).then(x.cmp(&y)));
    order
}

/// Equal rate supported at receiver `i` when the `p` strongest users are
/// decoded jointly and the rest are treated as noise.
pub fn symmetric_rate_f(net: &EffectiveNetwork, i: usize, p: usize) -> Result<f64, UgdError> {
    let order = ugd_permutation(net, i);
    let position = order.iter().position(|&j| j == i).expect("receiver index in range") + 1;
    if p < position || p > net.ms() {
        return Err(UgdError::IndexError { p, position });
    }
    let g: Vec<f64> = order.iter().map(|&j| net.h[i][j].norm_sqr()).collect();
    let noise = 1.0 + g[p..].iter().sum::<f64>();
    Ok((1..=p)
        .map(|q| {
            let signal: f64 = g[q - 1..p].iter().sum();
            (1.0 + signal / noise).log2() / (p - q + 1) as f64
        })
        .fold(f64::INFINITY, f64::min))
}

/// Best number `p*` of strongest users to decode at receiver `i` for equal
/// rates, the decoded set, and the supported rate. Ties go to the smaller `p`.
pub fn best_decoding_set(net: &EffectiveNetwork, i: usize) -> (usize, UserSet, f64) {
    let order = ugd_permutation(net, i);
    let position = order.iter().position(|&j| j == i).expect("receiver index in range") + 1;
    let mut best = (position, f64::NEG_INFINITY);
    for p in position..=net.ms() {
        let f = symmetric_rate_f(net, i, p).expect("p within range");
        if f > best.1 {
            best = (p, f);
        }
    }
    (best.0, UserSet::from_indices(&order[..best.0]), best.1)
}

/// Rate increments proposed by one receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct Recommendation {
    pub from_receiver: usize,
    /// Proposed increment per user; `f64::INFINITY` means unconstrained by
    /// this receiver.
    pub increments: Vec<f64>,
    /// Users the receiver decodes jointly.
    pub decoding_set: UserSet,
    /// Extracted sets with their weighted surpluses, in extraction order.
    pub partition_trace: Vec<(UserSet, f64)>,
}

impl Recommendation {
    /// `min_k r_k/ρ_k` over finite increments.
    pub fn min_ratio(&self, rho: &[f64]) -> f64 {
        self.increments
            .iter()
            .zip(rho)
            .filter(|(r, _)| r.is_finite())
            .map(|(r, p)| r / p)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Minimizer of `value(B)` over the nonempty subsets of `s`. Near-ties are
/// broken by `prefer`, then by smaller cardinality, then by lower bitmask.
fn argmin_subset(s: UserSet, value: impl Fn(UserSet) -> f64, prefer: impl Fn(UserSet) -> bool) -> (UserSet, f64) {
    let scored: Vec<(UserSet, f64)> = s.nonempty_subsets().map(|b| (b, value(b))).collect();
    let best = scored.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * best.abs().max(1.0);
    scored
        .into_iter()
        .filter(|(_, v)| *v <= best + tol)
        .min_by_key(|(b, _)| (!prefer(*b), b.len(), b.bits()))
        .expect("nonempty candidate set")
}

fn check_users(ms: usize, cap: usize) -> Result<(), UgdError> {
    if ms > cap {
        return Err(UgdError::CapExceeded {
            what: "Ms",
            value: ms,
            cap,
        });
    }
    Ok(())
}

/// Rate increments that keep user `i` decodable at receiver `i` while
/// maximizing the weighted minimum increment.
pub fn algorithm3(net: &EffectiveNetwork, i: usize, rmin: &[f64], rho: &[f64]) -> Result<Recommendation, UgdError> {
    check_users(net.ms(), MAX_USERS_ALG3)?;
    let mut s = net.users();
    let mut g = UserSet::EMPTY;
    let mut decoding_set = UserSet::EMPTY;
    let mut increments = vec![f64::INFINITY; net.ms()];
    let mut trace = Vec::new();
    while !s.is_empty() {
        let (b, d) = argmin_subset(
            s,
            |b| delta(net, i, b, g, rmin) / sum_over(b, rho),
            |b| !b.contains(i),
        );
        if b.contains(i) || g.contains(i) {
            for j in b.iter() {
                increments[j] = d * rho[j];
            }
            decoding_set = decoding_set.union(b);
        }
        s = s.minus(b);
        g = g.union(b);
        trace.push((b, d));
    }
    Ok(Recommendation {
        from_receiver: i,
        increments,
        decoding_set,
        partition_trace: trace,
    })
}

/// Exhaustive `max_{G ∋ i} θ(G, K∖G)`; test oracle for [`algorithm3`].
pub fn theta_star_bruteforce(net: &EffectiveNetwork, i: usize, rmin: &[f64], rho: &[f64]) -> Result<f64, UgdError> {
    check_users(net.ms(), MAX_USERS_BRUTEFORCE)?;
    let all = net.users();
    let mut best = f64::NEG_INFINITY;
    for g in all.nonempty_subsets().filter(|g| g.contains(i)) {
        best = best.max(theta(net, i, g, all.minus(g), rmin, rho)?);
    }
    Ok(best)
}

/// Some group containing `i` whose rates receiver `i` can decode with the
/// rest as noise, if any (lowest bitmask first).
pub fn ugd_decoding_group(net: &EffectiveNetwork, i: usize, rates: &[f64]) -> Option<UserSet> {
    let all = net.users();
    all.nonempty_subsets()
        .filter(|g| g.contains(i))
        .find(|&g| region_member(net, i, g, all.minus(g), rates).unwrap_or(false))
}

/// True iff every receiver can decode its own user with some group.
pub fn ugd_decodable(net: &EffectiveNetwork, rates: &[f64]) -> bool {
    (0..net.ms()).all(|i| ugd_decoding_group(net, i, rates).is_some())
}

/// The MLD condition on the effective network: for every receiver `i` and
/// every set `V ∋ i`, `Σ_V R ≤ log2(1 + Σ_V |h_i|²)`.
pub fn mld_decodable_effective(net: &EffectiveNetwork, rates: &[f64]) -> bool {
    let all = net.users();
    (0..net.ms()).all(|i| {
        all.nonempty_subsets()
            .filter(|v| v.contains(i))
            .all(|v| sum_over(v, rates) <= group_rank(net, i, v, UserSet::EMPTY) + DECODE_SLACK)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AllocationOptions {
    /// Stop once the largest increment of a round falls below this.
    pub conv_eps: f64,
    pub max_rounds: usize,
}

impl Default for AllocationOptions {
    fn default() -> Self {
        AllocationOptions {
            conv_eps: 1e-9,
            max_rounds: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AllocationResult {
    pub r_star: RateVector,
    /// Decoding group chosen by each receiver in the last round.
    pub partitions: Vec<UserSet>,
    /// Number of rounds run.
    pub iterations: usize,
    /// `R^(0) = Rmin, R^(1), …`.
    pub trace: Vec<RateVector>,
}

/// Per-user increment: the smallest recommendation. Increments below the
/// decodability slack are dropped, so a user pinned at a bottleneck keeps
/// its rate exactly instead of drifting by roundoff.
pub fn aggregate_increments(recs: &[Recommendation], ms: usize) -> Vec<f64> {
    (0..ms)
        .map(|k| {
            let m = recs.iter().map(|r| r.increments[k]).fold(f64::INFINITY, f64::min);
            if m.is_finite() && m >= DECODE_SLACK {
                m
            } else {
                0.0
            }
        })
        .collect()
}

/// Runs `round` until the increments vanish or the round cap is reached.
/// `round` returns the per-receiver recommendations for the current Rmin.
pub(crate) fn iterate_rounds(
    ms: usize,
    rmin: &[f64],
    rho: &[f64],
    opts: &AllocationOptions,
    mut round: impl FnMut(&[f64]) -> Result<Vec<Recommendation>, UgdError>,
) -> Result<AllocationResult, UgdError> {
    let mut current = rmin.to_vec();
    let mut trace = vec![current.clone()];
    let mut partitions = vec![UserSet::EMPTY; ms];
    let mut iterations = 0;
    while iterations < opts.max_rounds {
        let recs = round(&current)?;
        for rec in &recs {
            if rec.min_ratio(rho) < -DECODE_SLACK {
                return Err(UgdError::NotDecodable {
                    receiver: rec.from_receiver,
                });
            }
        }
        partitions = recs.iter().map(|r| r.decoding_set).collect();
        let inc = aggregate_increments(&recs, ms);
        iterations += 1;
        for (r, d) in current.iter_mut().zip(&inc) {
            *r += d;
        }
        trace.push(current.clone());
        if inc.iter().all(|&d| d < opts.conv_eps) {
            break;
        }
    }
    Ok(AllocationResult {
        r_star: current,
        partitions,
        iterations,
        trace,
    })
}

/// Iterated max-min fair allocation for group decoders starting at `rmin`.
pub fn algorithm4(net: &EffectiveNetwork, rmin: &[f64], rho: &[f64], opts: &AllocationOptions) -> Result<AllocationResult, UgdError> {
    check_users(net.ms(), MAX_USERS_ALG3)?;
    iterate_rounds(net.ms(), rmin, rho, opts, |current| {
        (0..net.ms()).map(|i| algorithm3(net, i, current, rho)).collect()
    })
}

/// Equal weighted increments at the level of the weakest user after a
/// first round: `Rmin + x̂ρ` with `x̂ = min_k (R1_k − Rmin_k)/ρ_k`.
pub fn strict_fair_rate(r1: &[f64], rmin: &[f64], rho: &[f64]) -> RateVector {
    let x = r1
        .iter()
        .zip(rmin)
        .zip(rho)
        .map(|((a, b), p)| (a - b) / p)
        .fold(f64::INFINITY, f64::min);
    rmin.iter().zip(rho).map(|(b, p)| b + x * p).collect()
}

/// Increments proposed by receiver `i` under the MLD condition. The first
/// extracted set is the bottleneck among sets containing `i`; afterwards `i`
/// is already assigned, so each candidate `B ⊆ S` is evaluated jointly with
/// the assigned users `E` as `(Δ(B ∪ E) − Σ_E r)/Σ_B ρ`.
pub fn mld_recommendation(net: &EffectiveNetwork, i: usize, rmin: &[f64], rho: &[f64]) -> Result<Recommendation, UgdError> {
    check_users(net.ms(), MAX_USERS_ALG3)?;
    let mut s = net.users();
    let mut assigned = UserSet::EMPTY;
    let mut increments = vec![f64::INFINITY; net.ms()];
    let mut trace = Vec::new();
    while !s.is_empty() {
        let used: f64 = assigned.iter().map(|j| increments[j]).sum();
        let value = |b: UserSet| {
            let v = b.union(assigned);
            if !v.contains(i) {
                return f64::INFINITY;
            }
            (delta(net, i, v, UserSet::EMPTY, rmin) - used) / sum_over(b, rho)
        };
        let (b, d) = argmin_subset(s, value, |_| true);
        for j in b.iter() {
            increments[j] = d * rho[j];
        }
        s = s.minus(b);
        assigned = assigned.union(b);
        trace.push((b, d));
    }
    Ok(Recommendation {
        from_receiver: i,
        increments,
        decoding_set: net.users(),
        partition_trace: trace,
    })
}

/// Iterated max-min fair allocation under the MLD condition.
pub fn algorithm4mld(net: &EffectiveNetwork, rmin: &[f64], rho: &[f64], opts: &AllocationOptions) -> Result<AllocationResult, UgdError> {
    check_users(net.ms(), MAX_USERS_ALG3)?;
    iterate_rounds(net.ms(), rmin, rho, opts, |current| {
        (0..net.ms()).map(|i| mld_recommendation(net, i, current, rho)).collect()
    })
}
