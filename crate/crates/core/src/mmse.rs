//! Power-minimizing beamforming for single-user (MMSE) receivers.
//!
//! The margin constraints are dualized; for fixed multipliers the remaining
//! SINR-constrained problem is whitened per transmitter and solved through a
//! virtual uplink fixed point plus a downlink power system. A projected
//! subgradient loop maximizes the dual, and a bisection on the common rate
//! scale turns the power minimizer into a rate maximizer.

use crate::error::{LinalgError, MmseError};
use crate::linalg::{cholesky_upper, hermitian_solve, row_times_upper_inverse, solve_real, solve_upper, CMatrix, CVector};
use crate::lp::{Cmp, LinearProgram};
use crate::sdp::{BlockSdp, LinearConstraint};
use crate::network::{
    channel_matching_beams, effective_noises, feasibility_necessary, from_scaled_beams, margin_satisfied,
    received_sinr, scaled_problem, weighted_sum_power, BeamformerSet, ChannelSet, MatchingMode, NetworkConfig,
    ScaledChannels,
};

/// Rule for the multiplier step size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// `μ_k = c / k` for every multiplier.
    Harmonic { c: f64 },
    /// Per-multiplier step that grows by `grow` while `s_j` keeps its sign
    /// and shrinks by `shrink` when it flips. Each primary only needs its own
    /// subgradient history.
    SignAdaptive { initial: f64, grow: f64, shrink: f64 },
    /// Like `SignAdaptive`, but each multiplier moves by its step times the
    /// sign of `s_j`, so a large subgradient at `λ_j = 0` cannot blow up the
    /// next move.
    SignStep { initial: f64, grow: f64, shrink: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::SignStep {
            initial: 1.0,
            grow: 1.2,
            shrink: 0.5,
        }
    }
}

/// Step-size state of one multiplier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepState {
    pub step: f64,
    pub last_s: f64,
}

impl StepState {
    fn adapt(&mut self, k: usize, lambda: f64, s: f64, grow: f64, shrink: f64) {
        if k > 1 {
            let prod = self.last_s * s;
            if prod < 0.0 {
                self.step *= shrink;
            } else if prod > 0.0 && lambda > 0.0 {
                self.step *= grow;
            }
        }
    }
}

impl StepRule {
    pub fn init(&self) -> StepState {
        let step = match *self {
            StepRule::Harmonic { c } => c,
            StepRule::SignAdaptive { initial, .. } | StepRule::SignStep { initial, .. } => initial,
        };
        StepState { step, last_s: 0.0 }
    }

    /// Updates one multiplier `λ_j` at iteration `k` (starting at 1) from its
    /// subgradient component `s_j`, returning the projected new value.
    pub fn update(&self, state: &mut StepState, k: usize, lambda: f64, s: f64) -> f64 {
        let mu = match *self {
            StepRule::Harmonic { c } => c / k as f64,
            StepRule::SignAdaptive { grow, shrink, .. } => {
                state.adapt(k, lambda, s, grow, shrink);
                state.step
            }
            StepRule::SignStep { grow, shrink, .. } => {
                state.adapt(k, lambda, s, grow, shrink);
                if s == 0.0 {
                    0.0
                } else {
                    state.step / s.abs()
                }
            }
        };
        state.last_s = s;
        (lambda - mu * s).max(0.0)
    }
}

/// Multipliers beyond this size are taken as evidence of an unbounded dual,
/// i.e. an infeasible problem.
pub const LAMBDA_DIVERGENCE: f64 = 1e10;

#[derive(Clone, Debug, PartialEq)]
pub struct PowerMinOptions {
    pub max_outer: usize,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub inner_tol: f64,
    pub step: StepRule,
    /// Slack used when re-verifying SINR targets and margins.
    pub verify_slack: f64,
    /// Start each virtual uplink solve from the previous fixed point.
    pub warm_start: bool,
}

impl Default for PowerMinOptions {
    fn default() -> Self {
        PowerMinOptions {
            max_outer: 2000,
            outer_tol: 1e-6,
            max_inner: 500,
            inner_tol: 1e-8,
            step: StepRule::default(),
            verify_slack: 1e-6,
            warm_start: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerMinStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub iteration: usize,
    pub best_value: f64,
    pub best_lambda: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerMinResult {
    pub status: PowerMinStatus,
    pub beams: BeamformerSet,
    /// Weighted sum power of `beams`; `+∞` when infeasible.
    pub objective: f64,
    pub dual_value: f64,
    pub dual: DualState,
    /// Trace of `g(λ^{(k)})`, one entry per outer iteration.
    pub dual_trace: Vec<f64>,
}

impl PowerMinResult {
    pub fn is_optimal(&self) -> bool {
        self.status == PowerMinStatus::Optimal
    }
}

/// Whitened channels `ĥ_{r,t} = h̃_{r,t} U_t^{-1}` indexed `[receiver][transmitter]`
/// together with the per-transmitter factors `U_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Whitened {
    pub hhat: Vec<Vec<CVector>>,
    pub u: Vec<CMatrix>,
}

/// Upper Cholesky factor of `I + Σ_j λ_j h̃psᴴ_{j,t} h̃ps_{j,t}` for transmitter `t`.
pub fn whitening_factor(t: usize, lambda: &[f64], scaled: &ScaledChannels) -> Result<CMatrix, LinalgError> {
    let ns = scaled.hss[0][t].len();
    let mut m = CMatrix::identity(ns);
    for (j, &l) in lambda.iter().enumerate() {
        if l != 0.0 {
            m.add_scaled(&CMatrix::gram_of_row(&scaled.hps[j][t]), l);
        }
    }
    cholesky_upper(&m)
}

/// Whitened outgoing rows of transmitter `t` towards every secondary receiver.
pub fn whiten_outgoing(t: usize, u: &CMatrix, scaled: &ScaledChannels) -> Vec<CVector> {
    scaled.hss.iter().map(|row| row_times_upper_inverse(&row[t], u)).collect()
}

pub fn whiten(lambda: &[f64], scaled: &ScaledChannels) -> Result<Whitened, LinalgError> {
    let ms = scaled.hss.len();
    let u: Vec<CMatrix> = (0..ms).map(|t| whitening_factor(t, lambda, scaled)).collect::<Result<_, _>>()?;
    let cols: Vec<Vec<CVector>> = (0..ms).map(|t| whiten_outgoing(t, &u[t], scaled)).collect();
    let hhat = (0..ms).map(|r| (0..ms).map(|t| cols[t][r].clone()).collect()).collect();
    Ok(Whitened { hhat, u })
}

/// Virtual uplink covariance at transmitter `t`: `I + Σ_j ν_j ĥ_{j,t}ᴴ ĥ_{j,t}`.
///
/// `outgoing[j]` is `ĥ_{j,t}`.
pub fn uplink_covariance(outgoing: &[CVector], nu: &[f64]) -> CMatrix {
    let n = outgoing[0].len();
    let mut s = CMatrix::identity(n);
    for (h, &v) in outgoing.iter().zip(nu) {
        if v != 0.0 {
            s.add_scaled(&CMatrix::gram_of_row(h), v);
        }
    }
    s
}

/// One fixed-point update for user `t`:
/// `ν_t = 1 / ((1 + 1/γ_t) ĥ_{t,t} Σ_t^{-1} ĥ_{t,t}ᴴ)`.
pub fn uplink_update(t: usize, outgoing: &[CVector], nu: &[f64], gamma_t: f64) -> Result<f64, LinalgError> {
    let sigma = uplink_covariance(outgoing, nu);
    let h = &outgoing[t];
    let x = hermitian_solve(&sigma, &h.conj())?;
    let q = h.dot(&x).re;
    Ok(1.0 / ((1.0 + 1.0 / gamma_t) * q))
}

#[derive(Clone, Debug, PartialEq)]
pub struct UplinkSolution {
    pub nu: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Relative change used as the fixed-point stopping rule.
pub fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(o, n)| (n - o).abs() / n.abs().max(1e-300))
        .fold(0.0, f64::max)
}

/// Bound above which virtual uplink powers are treated as diverging.
pub const UPLINK_DIVERGENCE: f64 = 1e12;

/// Jacobi iteration of the virtual uplink fixed point from `start` (zeros if
/// `None`).
pub fn virtual_uplink_fixed_point(
    hhat: &[Vec<CVector>],
    gamma: &[f64],
    tol: f64,
    max_iter: usize,
    start: Option<&[f64]>,
) -> UplinkSolution {
    let ms = hhat.len();
    let outgoing: Vec<Vec<CVector>> = (0..ms).map(|t| hhat.iter().map(|row| row[t].clone()).collect()).collect();
    uplink_iterate(ms, tol, max_iter, start, |nu| {
        (0..ms).map(|t| uplink_update(t, &outgoing[t], nu, gamma[t]).ok()).collect()
    })
}

/// The fixed-point loop shared with the distributed run: `update` maps the
/// current powers to the next ones (`None` entries signal a failed update).
pub(crate) fn uplink_iterate(
    ms: usize,
    tol: f64,
    max_iter: usize,
    start: Option<&[f64]>,
    mut update: impl FnMut(&[f64]) -> Vec<Option<f64>>,
) -> UplinkSolution {
    let mut nu: Vec<f64> = start.map_or_else(|| vec![0.0; ms], <[f64]>::to_vec);
    for it in 1..=max_iter {
        let next: Option<Vec<f64>> = update(&nu).into_iter().map(|v| v.filter(|x| x.is_finite())).collect();
        let Some(next) = next else {
            return UplinkSolution {
                nu,
                converged: false,
                iterations: it,
            };
        };
        let change = relative_change(&nu, &next);
        nu = next;
        if nu.iter().any(|&v| v > UPLINK_DIVERGENCE) {
            return UplinkSolution {
                nu,
                converged: false,
                iterations: it,
            };
        }
        if change < tol {
            return UplinkSolution {
                nu,
                converged: true,
                iterations: it,
            };
        }
    }
    UplinkSolution {
        nu,
        converged: false,
        iterations: max_iter,
    }
}

/// Receive direction of the virtual uplink at transmitter `t`, normalized.
pub fn uplink_direction(t: usize, outgoing: &[CVector], nu: &[f64]) -> Result<CVector, LinalgError> {
    let sigma = uplink_covariance(outgoing, nu);
    let d = hermitian_solve(&sigma, &outgoing[t].conj())?;
    d.normalized().ok_or(LinalgError::ZeroMatrix)
}

/// Downlink gains `G_{r,t} = |ĥ_{r,t} u_t|²`.
pub fn downlink_gains(hhat: &[Vec<CVector>], dirs: &[CVector]) -> Vec<Vec<f64>> {
    hhat.iter()
        .map(|row| row.iter().zip(dirs).map(|(h, u)| h.dot(u).norm_sqr()).collect())
        .collect()
}

/// Solves `(1/γ_i) G_ii p_i − Σ_{j≠i} G_ij p_j = a_i`.
pub fn equality_powers(gains: &[Vec<f64>], a: &[f64], gamma: &[f64]) -> Result<Vec<f64>, MmseError> {
    let ms = a.len();
    let mut m = vec![0.0; ms * ms];
    for i in 0..ms {
        for j in 0..ms {
            m[i * ms + j] = if i == j { gains[i][i] / gamma[i] } else { -gains[i][j] };
        }
    }
    let p = solve_real(&m, a).ok_or_else(|| MmseError::InnerInfeasible("singular downlink power system".into()))?;
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(MmseError::InnerInfeasible("negative downlink power".into()));
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Downlink {
    pub beams: Vec<CVector>,
    pub powers: Vec<f64>,
}

/// Downlink beams `√p_i u_i` meeting every SINR target with equality.
pub fn downlink_power_scaling(nu: &[f64], hhat: &[Vec<CVector>], a: &[f64], gamma: &[f64]) -> Result<Downlink, MmseError> {
    let ms = hhat.len();
    let dirs: Vec<CVector> = (0..ms)
        .map(|t| {
            let outgoing: Vec<CVector> = hhat.iter().map(|row| row[t].clone()).collect();
            uplink_direction(t, &outgoing, nu)
        })
        .collect::<Result<_, _>>()?;
    let gains = downlink_gains(hhat, &dirs);
    let powers = equality_powers(&gains, a, gamma)?;
    let beams = dirs.iter().zip(&powers).map(|(d, p)| d.scale(p.sqrt())).collect();
    Ok(Downlink { beams, powers })
}

/// Value of the dual function and its inner minimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct DualEvaluation {
    pub value: f64,
    /// Minimizer in scaled coordinates `w̃`.
    pub wtilde: BeamformerSet,
    pub nu: Vec<f64>,
    pub inner_iterations: usize,
}

/// Evaluates `g(λ)` with unit SINR targets in scaled coordinates.
pub fn dual_function(
    lambda: &[f64],
    scaled: &ScaledChannels,
    a: &[f64],
    opts: &PowerMinOptions,
    warm: Option<&[f64]>,
) -> Result<DualEvaluation, MmseError> {
    let ms = scaled.hss.len();
    let w = whiten(lambda, scaled)?;
    let ones = vec![1.0; ms];
    let up = virtual_uplink_fixed_point(&w.hhat, &ones, opts.inner_tol, opts.max_inner, warm);
    if !up.converged {
        return Err(MmseError::InnerNotConverged);
    }
    let down = downlink_power_scaling(&up.nu, &w.hhat, a, &ones)?;
    let wtilde = BeamformerSet {
        ws: down.beams.iter().zip(&w.u).map(|(b, u)| solve_upper(u, b)).collect(),
    };
    let value = down.beams.iter().map(CVector::norm_sqr).sum::<f64>() - lambda.iter().sum::<f64>();
    Ok(DualEvaluation {
        value,
        wtilde,
        nu: up.nu,
        inner_iterations: up.iterations,
    })
}

/// `s_j = 1 − Σ_i |h̃ps_{j,i} w̃_i|²`.
pub fn subgradient(wtilde: &BeamformerSet, scaled: &ScaledChannels) -> Vec<f64> {
    scaled
        .hps
        .iter()
        .map(|row| 1.0 - row.iter().zip(&wtilde.ws).map(|(h, w)| h.dot(w).norm_sqr()).sum::<f64>())
        .collect()
}

/// Minimum weighted power for fixed beam directions: an LP in the per-user
/// powers with SINR rows and margin rows. Returns physical beams.
pub fn fixed_direction_powers(
    cfg: &NetworkConfig,
    channels: &ChannelSet,
    directions: &[CVector],
    gamma: &[f64],
) -> Option<BeamformerSet> {
    let ms = cfg.ms;
    let a = effective_noises(cfg, channels);
    let mut lp = LinearProgram::minimize(cfg.alpha.clone());
    for i in 0..ms {
        let coeffs = (0..ms)
            .map(|j| {
                let g = channels.hss[i][j].dot(&directions[j]).norm_sqr();
                if i == j {
                    g
                } else {
                    -gamma[i] * g
                }
            })
            .collect();
        lp.add_row(coeffs, Cmp::Ge, gamma[i] * a[i]);
    }
    for j in 0..cfg.mp {
        let coeffs = (0..ms).map(|i| channels.hps[j][i].dot(&directions[i]).norm_sqr()).collect();
        lp.add_row(coeffs, Cmp::Le, cfg.beta[j]);
    }
    let sol = lp.solve().ok()?;
    Some(BeamformerSet {
        ws: directions.iter().zip(&sol.x).map(|(d, p)| d.scale(p.sqrt())).collect(),
    })
}

/// True iff every SINR target and margin holds within `slack`.
pub fn constraints_hold(cfg: &NetworkConfig, channels: &ChannelSet, beams: &BeamformerSet, gamma: &[f64], slack: f64) -> bool {
    beams.is_finite()
        && (0..cfg.ms).all(|i| received_sinr(cfg, channels, beams, i) >= gamma[i] - slack)
        && margin_satisfied(cfg, channels, beams, slack)
}

pub(crate) fn infeasible(cfg: &NetworkConfig, dual: DualState, dual_trace: Vec<f64>) -> PowerMinResult {
    PowerMinResult {
        status: PowerMinStatus::Infeasible,
        beams: BeamformerSet::zeros(cfg.ms, cfg.ns),
        objective: f64::INFINITY,
        dual_value: dual.best_value,
        dual,
        dual_trace,
    }
}

/// Recovers physical beams from an inner minimizer `w̃`. Two candidates are
/// checked against every constraint (within `slack`): the unscaled minimizer
/// itself, and the same directions with powers re-optimized by an LP. The
/// cheaper passing candidate wins.
pub fn recover_primal(
    cfg: &NetworkConfig,
    channels: &ChannelSet,
    wtilde: &BeamformerSet,
    gamma: &[f64],
    slack: f64,
) -> Option<BeamformerSet> {
    let direct = from_scaled_beams(cfg, wtilde);
    let mut candidates = Vec::with_capacity(2);
    if cfg.mp > 0 {
        let dirs: Option<Vec<CVector>> = direct.ws.iter().map(CVector::normalized).collect();
        if let Some(b) = dirs.and_then(|d| fixed_direction_powers(cfg, channels, &d, gamma)) {
            candidates.push(b);
        }
    }
    candidates.push(direct);
    candidates
        .into_iter()
        .filter(|b| constraints_hold(cfg, channels, b, gamma, slack))
        .min_by(|x, y| weighted_sum_power(cfg, x).total_cmp(&weighted_sum_power(cfg, y)))
}

/// Power minimization with SINR targets `gamma` via the dual subgradient loop.
pub fn algorithm1_power_min(cfg: &NetworkConfig, channels: &ChannelSet, gamma: &[f64], opts: &PowerMinOptions) -> PowerMinResult {
    let scaled = scaled_problem(cfg, channels, gamma);
    let a = effective_noises(cfg, channels);
    let mut dual = DualState {
        lambda: vec![0.0; cfg.mp],
        iteration: 0,
        best_value: f64::NEG_INFINITY,
        best_lambda: vec![0.0; cfg.mp],
    };
    let mut trace = Vec::new();
    if gamma.iter().any(|&g| !(g > 0.0)) || !feasibility_necessary(&scaled, cfg, channels) {
        return infeasible(cfg, dual, trace);
    }

    let mut warm: Option<Vec<f64>> = None;
    let mut steps: Vec<StepState> = vec![opts.step.init(); cfg.mp];
    for k in 1..=opts.max_outer {
        dual.iteration = k;
        let eval = match dual_function(&dual.lambda, &scaled, &a, opts, warm.as_deref()) {
            Ok(e) => e,
            Err(_) => return infeasible(cfg, dual, trace),
        };
        trace.push(eval.value);
        if eval.value > dual.best_value {
            dual.best_value = eval.value;
            dual.best_lambda = dual.lambda.clone();
        }
        if opts.warm_start {
            warm = Some(eval.nu.clone());
        }
        if cfg.mp == 0 {
            return match recover_primal(cfg, channels, &eval.wtilde, gamma, opts.verify_slack) {
                Some(beams) => optimal(cfg, beams, dual, trace),
                None => infeasible(cfg, dual, trace),
            };
        }
        let s = subgradient(&eval.wtilde, &scaled);
        let next: Vec<f64> = (0..cfg.mp)
            .map(|j| opts.step.update(&mut steps[j], k, dual.lambda[j], s[j]))
            .collect();
        let change = max_abs_diff(&dual.lambda, &next);
        dual.lambda = next;
        if dual.lambda.iter().any(|&l| !(l < LAMBDA_DIVERGENCE)) {
            return infeasible(cfg, dual, trace);
        }
        if change < opts.outer_tol {
            if let Some(beams) = recover_primal(cfg, channels, &eval.wtilde, gamma, opts.verify_slack) {
                return optimal(cfg, beams, dual, trace);
            }
        }
    }
    infeasible(cfg, dual, trace)
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub(crate) fn optimal(cfg: &NetworkConfig, beams: BeamformerSet, dual: DualState, dual_trace: Vec<f64>) -> PowerMinResult {
    let objective = weighted_sum_power(cfg, &beams);
    // Without primaries nothing is dualized and the dual value is the primal one.
    let dual_value = if cfg.mp == 0 { objective } else { dual.best_value };
    PowerMinResult {
        status: PowerMinStatus::Optimal,
        beams,
        objective,
        dual_value,
        dual,
        dual_trace,
    }
}

/// Relative primal-dual gap of an optimal result. It can dip a few ulps
/// below zero when the accepted beams use part of the verification slack.
pub fn duality_gap(result: &PowerMinResult) -> f64 {
    (result.objective - result.dual_value) / result.objective.max(1e-12)
}

/// Semidefinite relaxation of the power-minimization problem, with one
/// `Ns×Ns` block `X_i ≈ w_i w_iᴴ` per secondary transmitter. The relaxation
/// is tight for this problem class, so its optimum equals the true minimum
/// power and its infeasibility certifies that of the original problem.
pub fn sinr_relaxation(cfg: &NetworkConfig, channels: &ChannelSet, gamma: &[f64]) -> BlockSdp {
    let a = effective_noises(cfg, channels);
    let mut constraints = Vec::with_capacity(cfg.ms + cfg.mp);
    for i in 0..cfg.ms {
        // γ_i(Σ_{j≠i} |h_ij w_j|² + a_i) − |h_ii w_i|² ≤ 0
        let terms = (0..cfg.ms)
            .map(|j| {
                let g = CMatrix::gram_of_row(&channels.hss[i][j]);
                (j, if j == i { g.scale(-1.0 / gamma[i]) } else { g })
            })
            .collect();
        constraints.push(LinearConstraint { terms, rhs: -a[i] });
    }
    for i in 0..cfg.mp {
        let terms = (0..cfg.ms)
            .map(|j| (j, CMatrix::gram_of_row(&channels.hps[i][j])))
            .collect();
        constraints.push(LinearConstraint {
            terms,
            rhs: cfg.beta[i],
        });
    }
    BlockSdp {
        block_sizes: vec![cfg.ns; cfg.ms],
        objective: cfg.alpha.iter().map(|&al| CMatrix::identity(cfg.ns).scale(al)).collect(),
        constraints,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateOptOptions {
    pub delta: f64,
    pub power: PowerMinOptions,
}

impl Default for RateOptOptions {
    fn default() -> Self {
        RateOptOptions {
            delta: 1e-3,
            power: PowerMinOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateOptResult {
    pub rho_star: f64,
    pub beams: BeamformerSet,
    /// Number of power-minimization calls made by the bisection.
    pub probes: usize,
}

/// Lower and upper bounds on the common rate scale: the worst single-user
/// rate under lower-mode matching beams and the genie (interference-free,
/// full-budget) bound.
pub fn rate_scale_bounds(cfg: &NetworkConfig, channels: &ChannelSet) -> Result<(f64, f64, BeamformerSet), MmseError> {
    let lower = channel_matching_beams(cfg, channels, MatchingMode::Lower)?;
    let a = effective_noises(cfg, channels);
    let rho_min = (0..cfg.ms)
        .map(|i| (1.0 + received_sinr(cfg, channels, &lower, i)).log2() / cfg.rho[i])
        .fold(f64::INFINITY, f64::min);
    let rho_max = (0..cfg.ms)
        .map(|i| (1.0 + cfg.p0 * channels.hss[i][i].norm_sqr() / (cfg.alpha[i] * a[i])).log2() / cfg.rho[i])
        .fold(f64::INFINITY, f64::min);
    Ok((rho_min, rho_max, lower))
}

/// Largest common rate scale whose power minimum fits the budget, by
/// bisection with [`algorithm1_power_min`] as the feasibility oracle.
pub fn algorithm2_rate_opt(cfg: &NetworkConfig, channels: &ChannelSet, opts: &RateOptOptions) -> Result<RateOptResult, MmseError> {
    let (mut rho_min, mut rho_max, mut beams) = rate_scale_bounds(cfg, channels)?;
    let probes = bisect_rate(cfg, &mut rho_min, &mut rho_max, &mut beams, opts.delta, |gamma| {
        let r = algorithm1_power_min(cfg, channels, gamma, &opts.power);
        r.is_optimal().then_some((r.objective, r.beams))
    });
    Ok(RateOptResult {
        rho_star: rho_min,
        beams,
        probes,
    })
}

/// Shared bisection loop. `oracle` returns the minimum power and beams for a
/// target vector, or `None` when infeasible. Starts by probing `rho_min`.
pub(crate) fn bisect_rate(
    cfg: &NetworkConfig,
    rho_min: &mut f64,
    rho_max: &mut f64,
    beams: &mut BeamformerSet,
    delta: f64,
    mut oracle: impl FnMut(&[f64]) -> Option<(f64, BeamformerSet)>,
) -> usize {
    let mut probes = 0;
    if *rho_max < *rho_min {
        *rho_max = *rho_min;
    }
    let mut rho0 = *rho_min;
    loop {
        if rho0 > 0.0 {
            let gamma = cfg.gamma_for_scale(rho0);
            probes += 1;
            match oracle(&gamma) {
                Some((power, b)) if power <= cfg.p0 => {
                    *rho_min = rho0;
                    *beams = b;
                }
                _ => *rho_max = rho0,
            }
        }
        if *rho_max - *rho_min <= delta {
            break;
        }
        rho0 = 0.5 * (*rho_min + *rho_max);
    }
    probes
}
