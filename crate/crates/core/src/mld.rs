//! Beamforming for receivers that jointly decode every secondary codeword
//! (maximum-likelihood decoding). The decodability condition at receiver `i`
//! requires, for every set `V` of users containing `i`,
//! `log2(1 + Σ_{j∈V} |h_ij w_j|² / a_i) ≥ Σ_{j∈V} R_j`. Power minimization
//! under that condition is a nonconvex QCQP; it is relaxed to an SDP, a
//! direction per user is read off the relaxed solution and powers are fixed
//! by an LP.

use crate::error::MldError;
use crate::linalg::{dominant_eigenvector, CMatrix, CVector};
use crate::lp::{Cmp, LinearProgram};
use crate::mmse::bisect_rate;
use crate::network::{
    channel_matching_beams, effective_noises, margin_satisfied, matched_direction, weighted_sum_power, BeamformerSet,
    ChannelSet, MatchingMode, NetworkConfig,
};
use crate::sdp::{BlockSdp, LinearConstraint, SdpOptions, SdpStatus};
use crate::sets::UserSet;

/// Largest number of secondary users handled by the subset enumerations.
pub const MAX_USERS: usize = 12;

/// Every set of users that contains `i`, in ascending bitmask order.
pub fn enumerate_decoding_sets(i: usize, ms: usize) -> Result<Vec<UserSet>, MldError> {
    if ms > MAX_USERS {
        return Err(MldError::CapExceeded {
            what: "Ms",
            value: ms,
            cap: MAX_USERS,
        });
    }
    assert!(i < ms, "user index {i} out of range for {ms} users");
    let me = UserSet::singleton(i);
    let mut sets = vec![me];
    sets.extend(UserSet::full(ms).remove(i).nonempty_subsets().map(|s| s.union(me)));
    sets.sort_by_key(|s| s.bits());
    Ok(sets)
}

/// `Σ_{j∈set} |h_ij w_j|²` at secondary receiver `i`.
fn group_power(channels: &ChannelSet, beams: &BeamformerSet, i: usize, set: UserSet) -> f64 {
    set.iter().map(|j| channels.hss[i][j].dot(&beams.ws[j]).norm_sqr()).sum()
}

fn sum_over(set: UserSet, values: &[f64]) -> f64 {
    set.iter().map(|j| values[j]).sum()
}

fn decodable_over(
    cfg: &NetworkConfig,
    channels: &ChannelSet,
    beams: &BeamformerSet,
    rates: &[f64],
    sets_at: impl Fn(usize) -> Vec<UserSet>,
) -> bool {
    let a = effective_noises(cfg, channels);
    (0..cfg.ms).all(|i| {
        sets_at(i).into_iter().all(|set| {
            (1.0 + group_power(channels, beams, i, set) / a[i]).log2() >= sum_over(set, rates)
        })
    })
}

/// True iff every receiver can decode its own user: the condition is checked
/// over all sets containing that user.
pub fn mld_decodable(cfg: &NetworkConfig, channels: &ChannelSet, beams: &BeamformerSet, rates: &[f64]) -> bool {
    let full = UserSet::full(cfg.ms);
    decodable_over(cfg, channels, beams, rates, |i| {
        full.nonempty_subsets().filter(|s| s.contains(i)).collect()
    })
}

/// The stricter condition in which every receiver must be able to decode
/// every user: all nonempty sets are checked.
pub fn mld_full_region_decodable(cfg: &NetworkConfig, channels: &ChannelSet, beams: &BeamformerSet, rates: &[f64]) -> bool {
    let full = UserSet::full(cfg.ms);
    decodable_over(cfg, channels, beams, rates, |_| full.nonempty_subsets().collect())
}

/// Largest common scale `s` such that the rates `s·ρ` satisfy the MLD
/// condition with the given beams.
pub fn mld_max_common_scale(cfg: &NetworkConfig, channels: &ChannelSet, beams: &BeamformerSet) -> f64 {
    let a = effective_noises(cfg, channels);
    let full = UserSet::full(cfg.ms);
    let mut best = f64::INFINITY;
    for i in 0..cfg.ms {
        for set in full.nonempty_subsets().filter(|s| s.contains(i)) {
            let r = (1.0 + group_power(channels, beams, i, set) / a[i]).log2() / sum_over(set, &cfg.rho);
            best = best.min(r);
        }
    }
    best
}

/// One quadratic constraint `wᴴ B w ≤ rhs` with block-diagonal `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadConstraint {
    /// Receiver the constraint belongs to (secondary for rate rows, primary
    /// for margin rows).
    pub receiver: usize,
    /// Users whose blocks appear (the set `V` for rate rows).
    pub set: UserSet,
    /// Nonzero diagonal blocks `(j, B_jj)`.
    pub blocks: Vec<(usize, CMatrix)>,
    pub rhs: f64,
}

impl QuadConstraint {
    /// `wᴴ B w` for stacked beams.
    pub fn quad_value(&self, beams: &BeamformerSet) -> f64 {
        self.blocks.iter().map(|(j, b)| b.quad_form(&beams.ws[*j])).sum()
    }

    /// The full `(Ns·Ms)×(Ns·Ms)` matrix.
    pub fn dense(&self, ms: usize, ns: usize) -> CMatrix {
        block_diagonal(ms, ns, &self.blocks)
    }
}

fn block_diagonal(ms: usize, ns: usize, blocks: &[(usize, CMatrix)]) -> CMatrix {
    let mut m = CMatrix::zeros(ms * ns, ms * ns);
    for (j, b) in blocks {
        for r in 0..ns {
            for c in 0..ns {
                m[(j * ns + r, j * ns + c)] += b[(r, c)];
            }
        }
    }
    m
}

/// Power minimization under the MLD condition written as a QCQP over the
/// stacked beam vector.
#[derive(Clone, Debug, PartialEq)]
pub struct QcqpProblem {
    pub ms: usize,
    pub ns: usize,
    /// Objective weights; the objective matrix is `diag(α) ⊗ I`.
    pub alpha: Vec<f64>,
    pub rate: Vec<QuadConstraint>,
    pub margin: Vec<QuadConstraint>,
}

impl QcqpProblem {
    pub fn objective_matrix(&self) -> CMatrix {
        let blocks: Vec<(usize, CMatrix)> = self
            .alpha
            .iter()
            .enumerate()
            .map(|(j, &a)| (j, CMatrix::identity(self.ns).scale(a)))
            .collect();
        block_diagonal(self.ms, self.ns, &blocks)
    }

    /// The relaxation `X ⪰ 0` in place of `X = wwᴴ`. Rate rows with a zero
    /// right-hand side hold for every PSD `X` and are dropped.
    pub fn relaxation(&self) -> BlockSdp {
        let constraints = self
            .rate
            .iter()
            .filter(|c| c.rhs < 0.0)
            .chain(&self.margin)
            .map(|c| LinearConstraint {
                terms: c.blocks.clone(),
                rhs: c.rhs,
            })
            .collect();
        BlockSdp {
            block_sizes: vec![self.ns; self.ms],
            objective: self.alpha.iter().map(|&a| CMatrix::identity(self.ns).scale(a)).collect(),
            constraints,
        }
    }
}

/// Assembles the QCQP for target rates `rates` (one per secondary user).
pub fn build_qcqp(cfg: &NetworkConfig, channels: &ChannelSet, rates: &[f64]) -> Result<QcqpProblem, MldError> {
    let a = effective_noises(cfg, channels);
    let mut rate = Vec::new();
    for i in 0..cfg.ms {
        for set in enumerate_decoding_sets(i, cfg.ms)? {
            let blocks = set
                .iter()
                .map(|j| (j, CMatrix::gram_of_row(&channels.hss[i][j]).scale(-1.0)))
                .collect();
            rate.push(QuadConstraint {
                receiver: i,
                set,
                blocks,
                rhs: (1.0 - sum_over(set, rates).exp2()) * a[i],
            });
        }
    }
    let margin = (0..cfg.mp)
        .map(|i| QuadConstraint {
            receiver: i,
            set: UserSet::full(cfg.ms),
            blocks: (0..cfg.ms).map(|j| (j, CMatrix::gram_of_row(&channels.hps[i][j]))).collect(),
            rhs: cfg.beta[i],
        })
        .collect();
    Ok(QcqpProblem {
        ms: cfg.ms,
        ns: cfg.ns,
        alpha: cfg.alpha.clone(),
        rate,
        margin,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Block-diagonal solution of side `Ns·Ms`.
    pub x: CMatrix,
    pub blocks: Vec<CMatrix>,
    pub objective: f64,
    /// Certified bound on the suboptimality of `objective`.
    pub gap_bound: f64,
}

pub fn sdp_relax_solve(problem: &QcqpProblem, opts: &SdpOptions) -> SdpSolution {
    let sdp = problem.relaxation();
    let (status, blocks, objective, gap_bound) = if sdp.constraints.iter().all(|c| c.rhs >= 0.0) {
        // The origin is feasible and the objective is PSD, so X = 0 is optimal.
        let zeros = vec![CMatrix::zeros(problem.ns, problem.ns); problem.ms];
        (SdpStatus::Optimal, zeros, 0.0, 0.0)
    } else {
        let sol = sdp.solve(opts);
        (sol.status, sol.blocks, sol.objective, sol.gap_bound)
    };
    let pairs: Vec<(usize, CMatrix)> = blocks.iter().cloned().enumerate().collect();
    SdpSolution {
        status,
        x: block_diagonal(problem.ms, problem.ns, &pairs),
        blocks,
        objective,
        gap_bound,
    }
}

/// Unit beam directions read off a relaxed solution. The solution is
/// block-diagonal, so its dominant eigenvector would live on a single block;
/// each user's direction is instead the dominant eigenvector of its own
/// block, which is exactly `w_i/‖w_i‖` up to phase whenever the relaxed
/// solution is the outer product of a stacked beam vector. A block with no
/// energy falls back to the matched direction.
pub fn rank1_directions(sdp: &SdpSolution, channels: &ChannelSet) -> Result<Vec<CVector>, MldError> {
    sdp.blocks
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let trace = x.trace().re;
            match dominant_eigenvector(x) {
                Ok((v, lambda)) if lambda > 1e-12 * trace.max(1e-300) && trace > 0.0 => Ok(v),
                _ => matched_direction(&channels.hss[j][j])
                    .ok_or(MldError::Infeasible(format!("no usable direction for user {j}"))),
            }
        })
        .collect()
}

/// Minimum-power beams along fixed unit directions: the LP over per-user
/// powers `p ≥ 0` with one row per MLD rate condition and per margin.
pub fn fixed_direction_mld_powers(
    cfg: &NetworkConfig,
    channels: &ChannelSet,
    problem: &QcqpProblem,
    dirs: &[CVector],
) -> Result<BeamformerSet, MldError> {
    let gain = |i: usize, j: usize| channels.hss[i][j].dot(&dirs[j]).norm_sqr();
    let mut lp = LinearProgram::minimize(cfg.alpha.clone());
    let mut rows = Vec::with_capacity(problem.rate.len());
    for c in &problem.rate {
        let mut coeffs = vec![0.0; cfg.ms];
        for j in c.set.iter() {
            coeffs[j] = gain(c.receiver, j);
        }
        lp.add_row(coeffs.clone(), Cmp::Ge, -c.rhs);
        rows.push((coeffs, -c.rhs));
    }
    for c in &problem.margin {
        let coeffs = (0..cfg.ms).map(|j| channels.hps[c.receiver][j].dot(&dirs[j]).norm_sqr()).collect();
        lp.add_row(coeffs, Cmp::Le, c.rhs);
    }
    let mut p = lp.solve().map_err(|e| MldError::Infeasible(e.to_string()))?.x;
    // Absorb the LP's rounding on the rate rows (active rows sit exactly at
    // equality) by a uniform rescale with a little headroom.
    let shortfall = rows
        .iter()
        .filter(|(_, need)| *need > 0.0)
        .map(|(coeffs, need)| need / coeffs.iter().zip(&p).map(|(g, q)| g * q).sum::<f64>())
        .fold(1.0, f64::max);
    let k = shortfall * (1.0 + 1e-9);
    p.iter_mut().for_each(|q| *q *= k);
    Ok(BeamformerSet {
        ws: dirs.iter().zip(&p).map(|(d, q)| d.scale(q.sqrt())).collect(),
    })
}

/// Rank-1 recovery: directions from the relaxed solution, powers from the
/// LP, then a post-hoc check of decodability and margins.
pub fn rank1_recover(
    sdp: &SdpSolution,
    problem: &QcqpProblem,
    cfg: &NetworkConfig,
    channels: &ChannelSet,
    rates: &[f64],
) -> Result<BeamformerSet, MldError> {
    if sdp.status != SdpStatus::Optimal {
        return Err(MldError::Infeasible(format!("relaxation status {:?}", sdp.status)));
    }
    let dirs = rank1_directions(sdp, channels)?;
    let beams = fixed_direction_mld_powers(cfg, channels, problem, &dirs)?;
    if !mld_decodable(cfg, channels, &beams, rates) {
        return Err(MldError::Infeasible("recovered beams are not decodable".into()));
    }
    if !margin_satisfied(cfg, channels, &beams, 1e-6) {
        return Err(MldError::Infeasible("recovered beams violate a margin".into()));
    }
    Ok(beams)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MldPowerMin {
    pub beams: BeamformerSet,
    /// Weighted power of the recovered beams.
    pub power: f64,
    /// Objective of the computed relaxation point; within `relaxation_gap`
    /// above the relaxation optimum.
    pub relaxation_value: f64,
    pub relaxation_gap: f64,
}

impl MldPowerMin {
    /// Certified lower bound on the relaxation optimum, hence on `power`.
    pub fn relaxation_bound(&self) -> f64 {
        self.relaxation_value - self.relaxation_gap
    }
}

/// Full pipeline: QCQP, relaxation, rank-1 recovery.
pub fn mld_power_min(
    cfg: &NetworkConfig,
    channels: &ChannelSet,
    rates: &[f64],
    opts: &SdpOptions,
) -> Result<MldPowerMin, MldError> {
    let problem = build_qcqp(cfg, channels, rates)?;
    let sdp = sdp_relax_solve(&problem, opts);
    let beams = rank1_recover(&sdp, &problem, cfg, channels, rates)?;
    Ok(MldPowerMin {
        power: weighted_sum_power(cfg, &beams),
        beams,
        relaxation_value: sdp.objective,
        relaxation_gap: sdp.gap_bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MldRateOptions {
    pub delta: f64,
    pub sdp: SdpOptions,
}

impl Default for MldRateOptions {
    fn default() -> Self {
        MldRateOptions {
            delta: 1e-3,
            sdp: SdpOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MldRateResult {
    pub rho_star: f64,
    pub beams: BeamformerSet,
    pub probes: usize,
}

/// Largest common rate scale reachable within the budget `cfg.p0`, by
/// bisection with [`mld_power_min`] as the feasibility oracle. The lower
/// end starts at the MLD rate of the lower-mode matching beams; the upper end
/// is the single-user genie bound.
pub fn mld_rate_opt(cfg: &NetworkConfig, channels: &ChannelSet, opts: &MldRateOptions) -> Result<MldRateResult, MldError> {
    if cfg.ms > MAX_USERS {
        return Err(MldError::CapExceeded {
            what: "Ms",
            value: cfg.ms,
            cap: MAX_USERS,
        });
    }
    let mut beams = channel_matching_beams(cfg, channels, MatchingMode::Lower)?;
    let mut rho_min = mld_max_common_scale(cfg, channels, &beams);
    let a = effective_noises(cfg, channels);
    let mut rho_max = (0..cfg.ms)
        .map(|i| (1.0 + cfg.p0 * channels.hss[i][i].norm_sqr() / (cfg.alpha[i] * a[i])).log2() / cfg.rho[i])
        .fold(f64::INFINITY, f64::min);
    let probes = bisect_rate(cfg, &mut rho_min, &mut rho_max, &mut beams, opts.delta, |gamma| {
        let rates: Vec<f64> = gamma.iter().map(|g| g.ln_1p() / std::f64::consts::LN_2).collect();
        mld_power_min(cfg, channels, &rates, &opts.sdp).ok().map(|r| (r.power, r.beams))
    });
    Ok(MldRateResult {
        rho_star: rho_min,
        beams,
        probes,
    })
}
