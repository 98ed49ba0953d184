//! Network and channel model: configuration, sampled channels, SINR and
//! interference accounting, the per-user problem scaling, and the feasibility
//! screens for the power-minimization problem.
//!
//! Indices are zero-based throughout. `hss[i][j]` is the row seen by secondary
//! receiver `i` from secondary transmitter `j`; the other channel families
//! follow the same receiver-then-transmitter convention.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::NetworkError;
use crate::linalg::{matrix_rank, CMatrix, CVector, C64, DEFAULT_RANK_TOL};

/// Rates in bits, one entry per secondary user.
pub type RateVector = Vec<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub ms: usize,
    pub mp: usize,
    pub ns: usize,
    pub np: usize,
    pub sigma_s: Vec<f64>,
    pub alpha: Vec<f64>,
    pub rho: Vec<f64>,
    pub beta: Vec<f64>,
    pub p0: f64,
    pub primary_power: f64,
}

impl NetworkConfig {
    /// Unit noise, unit weights, margins of 5 and a budget of 100 (20 dB).
    pub fn new(ms: usize, mp: usize, ns: usize, np: usize) -> Self {
        NetworkConfig {
            ms,
            mp,
            ns,
            np,
            sigma_s: vec![1.0; ms],
            alpha: vec![1.0; ms],
            rho: vec![1.0; ms],
            beta: vec![5.0; mp],
            p0: 100.0,
            primary_power: 1.0,
        }
    }

    pub fn with_p0(mut self, p0: f64) -> Self {
        self.p0 = p0;
        self
    }

    pub fn with_beta(mut self, beta: Vec<f64>) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_alpha(mut self, alpha: Vec<f64>) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_rho(mut self, rho: Vec<f64>) -> Self {
        self.rho = rho;
        self
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), NetworkError> {
        let mut problems = Vec::new();
        if self.ms == 0 {
            problems.push("Ms must be at least 1".to_string());
        }
        if self.ns == 0 {
            problems.push("Ns must be at least 1".to_string());
        }
        if self.mp > 0 && self.np == 0 {
            problems.push("Np must be at least 1 when Mp > 0".to_string());
        }
        let mut check = |name: &str, v: &[f64], len: usize| {
            if v.len() != len {
                problems.push(format!("{name} has length {} but {len} entries are required", v.len()));
            }
            for (k, &x) in v.iter().enumerate() {
                if !(x > 0.0) || !x.is_finite() {
                    problems.push(format!("{name}[{k}] = {x} must be positive and finite"));
                }
            }
        };
        check("sigma_s", &self.sigma_s, self.ms);
        check("alpha", &self.alpha, self.ms);
        check("rho", &self.rho, self.ms);
        check("beta", &self.beta, self.mp);
        if !(self.p0 > 0.0) || !self.p0.is_finite() {
            problems.push(format!("P0 = {} must be positive and finite", self.p0));
        }
        if !(self.primary_power >= 0.0) || !self.primary_power.is_finite() {
            problems.push(format!("primary_power = {} must be nonnegative", self.primary_power));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(NetworkError::InvalidConfig(problems))
        }
    }

    /// SINR targets `2^{scale·ρ_i} − 1` for a common rate scale.
    pub fn gamma_for_scale(&self, scale: f64) -> Vec<f64> {
        self.rho.iter().map(|r| (scale * r).exp2() - 1.0).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// `hss[i][j]`: secondary rx `i` ← secondary tx `j`, length Ns.
    pub hss: Vec<Vec<CVector>>,
    /// `hsp[i][j]`: secondary rx `i` ← primary tx `j`, length Np.
    pub hsp: Vec<Vec<CVector>>,
    /// `hps[i][j]`: primary rx `i` ← secondary tx `j`, length Ns.
    pub hps: Vec<Vec<CVector>>,
    /// `hpp[i][j]`: primary rx `i` ← primary tx `j`, length Np.
    pub hpp: Vec<Vec<CVector>>,
    /// Primary beamformers, length Np each.
    pub wp: Vec<CVector>,
}

impl ChannelSet {
    pub fn validate(&self, cfg: &NetworkConfig) -> Result<(), NetworkError> {
        let shape = |name: &str, fam: &Vec<Vec<CVector>>, rows: usize, cols: usize, len: usize| {
            if fam.len() != rows || fam.iter().any(|r| r.len() != cols || r.iter().any(|h| h.len() != len)) {
                Err(NetworkError::DimensionMismatch(format!(
                    "{name} must be {rows}x{cols} rows of length {len}"
                )))
            } else {
                Ok(())
            }
        };
        shape("hss", &self.hss, cfg.ms, cfg.ms, cfg.ns)?;
        shape("hsp", &self.hsp, cfg.ms, cfg.mp, cfg.np)?;
        shape("hps", &self.hps, cfg.mp, cfg.ms, cfg.ns)?;
        shape("hpp", &self.hpp, cfg.mp, cfg.mp, cfg.np)?;
        if self.wp.len() != cfg.mp || self.wp.iter().any(|w| w.len() != cfg.np) {
            return Err(NetworkError::DimensionMismatch(format!(
                "wp must hold {} vectors of length {}",
                cfg.mp, cfg.np
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamformerSet {
    pub ws: Vec<CVector>,
}

impl BeamformerSet {
    pub fn zeros(ms: usize, ns: usize) -> Self {
        BeamformerSet {
            ws: vec![CVector::zeros(ns); ms],
        }
    }

    pub fn len(&self) -> usize {
        self.ws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ws.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.ws.iter().all(CVector::is_finite)
    }

    pub fn powers(&self) -> Vec<f64> {
        self.ws.iter().map(CVector::norm_sqr).collect()
    }
}

/// Channel rows rescaled so that every SINR target and margin becomes 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledChannels {
    /// Diagonal `h_ii/√(α_i γ_i)`, off-diagonal `h_ij/√α_j`.
    pub hss: Vec<Vec<CVector>>,
    /// `h^{ps}_ij / √(β_i α_j)`.
    pub hps: Vec<Vec<CVector>>,
    /// `w_pᴴ / ‖w_p‖²`, one per primary.
    pub wp_tilde: Vec<CVector>,
    pub gamma: Vec<f64>,
}

/// How [`channel_matching_beams`] picks the common power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatchingMode {
    /// Largest common scalar meeting the budget and every margin.
    Lower,
    /// Each user alone with the full budget (`α_i‖w_i‖² = P0`).
    Genie,
    /// Every user transmits power `p`.
    FixedPower(f64),
}

fn sample_row(rng: &mut ChaCha8Rng, normal: &Normal<f64>, len: usize) -> CVector {
    (0..len)
        .map(|_| {
            let re = normal.sample(rng);
            let im = normal.sample(rng);
            C64::new(re, im)
        })
        .collect()
}

fn sample_family(rng: &mut ChaCha8Rng, normal: &Normal<f64>, rows: usize, cols: usize, len: usize) -> Vec<Vec<CVector>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| sample_row(rng, normal, len)).collect())
        .collect()
}

/// Draws every channel entry i.i.d. CN(0, 1) from a seeded generator and sets
/// the primary beams to their matched defaults.
pub fn sample_channels(cfg: &NetworkConfig, seed: u64) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
    let hss = sample_family(&mut rng, &normal, cfg.ms, cfg.ms, cfg.ns);
    let hsp = sample_family(&mut rng, &normal, cfg.ms, cfg.mp, cfg.np);
    let hps = sample_family(&mut rng, &normal, cfg.mp, cfg.ms, cfg.ns);
    let hpp = sample_family(&mut rng, &normal, cfg.mp, cfg.mp, cfg.np);
    let mut channels = ChannelSet {
        hss,
        hsp,
        hps,
        hpp,
        wp: vec![CVector::zeros(cfg.np); cfg.mp],
    };
    // A zero direct channel has probability zero under continuous fading.
    if let Ok(wp) = primary_beams_default(cfg, &channels) {
        channels.wp = wp;
    }
    channels
}

/// Primary beams matched to their own direct channel at `primary_power`.
pub fn primary_beams_default(cfg: &NetworkConfig, channels: &ChannelSet) -> Result<Vec<CVector>, NetworkError> {
    let amp = cfg.primary_power.sqrt();
    (0..cfg.mp)
        .map(|i| {
            let h = &channels.hpp[i][i];
            let dir = h
                .conj()
                .normalized()
                .ok_or(NetworkError::ZeroChannel { kind: "primary direct", index: i })?;
            Ok(dir.scale(amp))
        })
        .collect()
}

/// Thermal noise plus primary interference at secondary receiver `i`.
pub fn effective_noise(cfg: &NetworkConfig, channels: &ChannelSet, i: usize) -> f64 {
    let leak: f64 = (0..cfg.mp)
        .map(|j| channels.hsp[i][j].dot(&channels.wp[j]).norm_sqr())
        .sum();
    leak + cfg.sigma_s[i]
}

pub fn effective_noises(cfg: &NetworkConfig, channels: &ChannelSet) -> Vec<f64> {
    (0..cfg.ms).map(|i| effective_noise(cfg, channels, i)).collect()
}

/// Received power `|h_ij w_j|²` at secondary receiver `i` from transmitter `j`.
pub fn received_power(channels: &ChannelSet, beams: &BeamformerSet, i: usize, j: usize) -> f64 {
    channels.hss[i][j].dot(&beams.ws[j]).norm_sqr()
}

/// Single-user SINR at secondary receiver `i`, treating other secondaries as
/// noise.
pub fn received_sinr(cfg: &NetworkConfig, channels: &ChannelSet, beams: &BeamformerSet, i: usize) -> f64 {
    let signal = received_power(channels, beams, i, i);
    let interference: f64 = (0..cfg.ms)
        .filter(|&j| j != i)
        .map(|j| received_power(channels, beams, i, j))
        .sum();
    signal / (interference + effective_noise(cfg, channels, i))
}

/// Rates `log2(1 + SINR_i)` achieved by single-user decoding.
pub fn single_user_rates(cfg: &NetworkConfig, channels: &ChannelSet, beams: &BeamformerSet) -> RateVector {
    (0..cfg.ms)
        .map(|i| (1.0 + received_sinr(cfg, channels, beams, i)).log2())
        .collect()
}

/// Aggregate secondary interference `J_i` at primary receiver `i`.
pub fn primary_interference(channels: &ChannelSet, beams: &BeamformerSet, i: usize) -> f64 {
    channels.hps[i]
        .iter()
        .zip(&beams.ws)
        .map(|(h, w)| h.dot(w).norm_sqr())
        .sum()
}

pub fn weighted_sum_power(cfg: &NetworkConfig, beams: &BeamformerSet) -> f64 {
    cfg.alpha.iter().zip(&beams.ws).map(|(a, w)| a * w.norm_sqr()).sum()
}

/// True iff `J_i ≤ β_i + slack` at every primary receiver.
pub fn margin_satisfied(cfg: &NetworkConfig, channels: &ChannelSet, beams: &BeamformerSet, slack: f64) -> bool {
    (0..cfg.mp).all(|i| primary_interference(channels, beams, i) <= cfg.beta[i] + slack)
}

pub fn scaled_problem(cfg: &NetworkConfig, channels: &ChannelSet, gamma: &[f64]) -> ScaledChannels {
    let hss = (0..cfg.ms)
        .map(|i| {
            (0..cfg.ms)
                .map(|j| {
                    let d = if i == j { (cfg.alpha[i] * gamma[i]).sqrt() } else { cfg.alpha[j].sqrt() };
                    channels.hss[i][j].scale(1.0 / d)
                })
                .collect()
        })
        .collect();
    let hps = (0..cfg.mp)
        .map(|i| {
            (0..cfg.ms)
                .map(|j| channels.hps[i][j].scale(1.0 / (cfg.beta[i] * cfg.alpha[j]).sqrt()))
                .collect()
        })
        .collect();
    let wp_tilde = channels
        .wp
        .iter()
        .map(|w| {
            let n = w.norm_sqr();
            if n > 0.0 {
                w.conj().scale(1.0 / n)
            } else {
                CVector::zeros(w.len())
            }
        })
        .collect();
    ScaledChannels {
        hss,
        hps,
        wp_tilde,
        gamma: gamma.to_vec(),
    }
}

/// Maps physical beams to scaled coordinates `√α_i w_i`.
pub fn to_scaled_beams(cfg: &NetworkConfig, beams: &BeamformerSet) -> BeamformerSet {
    BeamformerSet {
        ws: beams.ws.iter().zip(&cfg.alpha).map(|(w, a)| w.scale(a.sqrt())).collect(),
    }
}

/// Inverse of [`to_scaled_beams`].
pub fn from_scaled_beams(cfg: &NetworkConfig, scaled: &BeamformerSet) -> BeamformerSet {
    BeamformerSet {
        ws: scaled.ws.iter().zip(&cfg.alpha).map(|(w, a)| w.scale(1.0 / a.sqrt())).collect(),
    }
}

/// The stacked channel matrix `Q`: one row per secondary then primary
/// receiver, one column block per secondary then primary transmitter.
pub fn build_q(scaled: &ScaledChannels, cfg: &NetworkConfig, channels: &ChannelSet) -> CMatrix {
    let rows = cfg.ms + cfg.mp;
    let cols = cfg.ns * cfg.ms + cfg.np * cfg.mp;
    let mut q = CMatrix::zeros(rows, cols);
    let sec_off = |j: usize| j * cfg.ns;
    let pri_off = |j: usize| cfg.ns * cfg.ms + j * cfg.np;
    for i in 0..cfg.ms {
        for j in 0..cfg.ms {
            for k in 0..cfg.ns {
                q[(i, sec_off(j) + k)] = scaled.hss[i][j][k];
            }
        }
        for j in 0..cfg.mp {
            for k in 0..cfg.np {
                q[(i, pri_off(j) + k)] = channels.hsp[i][j][k];
            }
        }
    }
    for i in 0..cfg.mp {
        let r = cfg.ms + i;
        for j in 0..cfg.ms {
            for k in 0..cfg.ns {
                q[(r, sec_off(j) + k)] = scaled.hps[i][j][k];
            }
        }
        for k in 0..cfg.np {
            q[(r, pri_off(i) + k)] = scaled.wp_tilde[i][k];
        }
    }
    q
}

/// The block-diagonal beam matrix `T` for scaled secondary beams and the
/// primary beams.
pub fn build_t(cfg: &NetworkConfig, channels: &ChannelSet, scaled_beams: &BeamformerSet) -> Result<CMatrix, NetworkError> {
    if scaled_beams.len() != cfg.ms || scaled_beams.ws.iter().any(|w| w.len() != cfg.ns) {
        return Err(NetworkError::DimensionMismatch(format!(
            "expected {} beams of length {}",
            cfg.ms, cfg.ns
        )));
    }
    let rows = cfg.ns * cfg.ms + cfg.np * cfg.mp;
    let mut t = CMatrix::zeros(rows, cfg.ms + cfg.mp);
    for j in 0..cfg.ms {
        for k in 0..cfg.ns {
            t[(j * cfg.ns + k, j)] = scaled_beams.ws[j][k];
        }
    }
    for j in 0..cfg.mp {
        for k in 0..cfg.np {
            t[(cfg.ns * cfg.ms + j * cfg.np + k, cfg.ms + j)] = channels.wp[j][k];
        }
    }
    Ok(t)
}

pub fn build_qt(
    scaled: &ScaledChannels,
    cfg: &NetworkConfig,
    channels: &ChannelSet,
    scaled_beams: &BeamformerSet,
) -> Result<(CMatrix, CMatrix), NetworkError> {
    channels.validate(cfg)?;
    let q = build_q(scaled, cfg, channels);
    let t = build_t(cfg, channels, scaled_beams)?;
    Ok((q, t))
}

/// Smallest of the `Ms + Mp` normalized ratios encoded by `QT`, with noise
/// `σ_i` on secondary rows and none on primary rows. The scaled problem is
/// satisfied iff this is at least 1.
pub fn qt_min_ratio(q: &CMatrix, t: &CMatrix, cfg: &NetworkConfig) -> Result<f64, NetworkError> {
    let qt = q.matmul(t)?;
    let mut worst = f64::INFINITY;
    for i in 0..qt.rows() {
        let diag = qt[(i, i)].norm_sqr();
        let off: f64 = (0..qt.cols()).filter(|&j| j != i).map(|j| qt[(i, j)].norm_sqr()).sum();
        let noise = if i < cfg.ms { cfg.sigma_s[i] } else { 0.0 };
        worst = worst.min(diag / (off + noise));
    }
    Ok(worst)
}

/// Necessary condition for feasibility: `rank(Q) ≥ (Ms + Mp)/2`.
pub fn feasibility_necessary(scaled: &ScaledChannels, cfg: &NetworkConfig, channels: &ChannelSet) -> bool {
    let q = build_q(scaled, cfg, channels);
    2 * matrix_rank(&q, DEFAULT_RANK_TOL) >= cfg.ms + cfg.mp
}

/// Outgoing rows of secondary transmitter `i` towards every receiver other
/// than its own.
pub fn unintended_rows(cfg: &NetworkConfig, channels: &ChannelSet, i: usize) -> Vec<CVector> {
    let mut rows: Vec<CVector> = (0..cfg.ms).filter(|&j| j != i).map(|j| channels.hss[j][i].clone()).collect();
    rows.extend((0..cfg.mp).map(|j| channels.hps[j][i].clone()));
    rows
}

/// Norm of the component of `v` orthogonal to the span of `basis_rows`ᴴ.
pub fn residual_outside_span(v: &CVector, basis_rows: &[CVector]) -> f64 {
    // Modified Gram-Schmidt with one re-orthogonalisation pass.
    let mut basis: Vec<CVector> = Vec::new();
    for row in basis_rows {
        let mut u = row.conj();
        let n0 = u.norm();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let c = b.inner(&u);
                u = u.sub(&b.scale_complex(c));
            }
        }
        let n = u.norm();
        if n > 1e-12 * n0 {
            basis.push(u.scale(1.0 / n));
        }
    }
    let mut r = v.clone();
    for _ in 0..2 {
        for b in &basis {
            let c = b.inner(&r);
            r = r.sub(&b.scale_complex(c));
        }
    }
    r.norm()
}

/// Sufficient condition for feasibility at any finite targets: every
/// transmitter can null all unintended receivers while still reaching its own.
pub fn feasibility_sufficient_zf(cfg: &NetworkConfig, channels: &ChannelSet) -> bool {
    (0..cfg.ms).all(|i| {
        let h = channels.hss[i][i].conj();
        let rows = unintended_rows(cfg, channels, i);
        residual_outside_span(&h, &rows) > 1e-9 * h.norm()
    })
}

/// Unit beam `hᴴ/‖h‖` matched to a direct channel.
pub fn matched_direction(h: &CVector) -> Option<CVector> {
    h.conj().normalized()
}

/// Beams matched to the direct channels, scaled according to `mode`.
pub fn channel_matching_beams(
    cfg: &NetworkConfig,
    channels: &ChannelSet,
    mode: MatchingMode,
) -> Result<BeamformerSet, NetworkError> {
    let dirs: Vec<CVector> = (0..cfg.ms)
        .map(|i| matched_direction(&channels.hss[i][i]).ok_or(NetworkError::ZeroChannel { kind: "secondary direct", index: i }))
        .collect::<Result<_, _>>()?;
    let powers: Vec<f64> = match mode {
        MatchingMode::Lower => {
            let p = lower_matching_power(cfg, channels, &dirs);
            vec![p; cfg.ms]
        }
        MatchingMode::Genie => cfg.alpha.iter().map(|a| cfg.p0 / a).collect(),
        MatchingMode::FixedPower(p) => vec![p; cfg.ms],
    };
    Ok(BeamformerSet {
        ws: dirs.iter().zip(&powers).map(|(d, p)| d.scale(p.sqrt())).collect(),
    })
}

fn lower_matching_power(cfg: &NetworkConfig, channels: &ChannelSet, dirs: &[CVector]) -> f64 {
    let alpha_sum: f64 = cfg.alpha.iter().sum();
    let mut p = cfg.p0 / alpha_sum;
    for j in 0..cfg.mp {
        let leak: f64 = (0..cfg.ms).map(|i| channels.hps[j][i].dot(&dirs[i]).norm_sqr()).sum();
        if leak > 0.0 {
            p = p.min(cfg.beta[j] / leak);
        }
    }
    p
}
