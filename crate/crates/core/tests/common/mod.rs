//! Helpers shared by the integration tests: seeded random draws and small
//! reference implementations written independently of the library.

#![allow(dead_code, clippy::needless_range_loop)]

use cogradio::linalg::{c64, CMatrix, CVector, C64};
use cogradio::network::{ChannelSet, NetworkConfig};
use cogradio::ugd::EffectiveNetwork;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_c64(rng: &mut ChaCha8Rng) -> C64 {
    c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_cvec(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_vec((0..n).map(|_| random_c64(rng)).collect())
}

pub fn random_cmatrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_c64(rng))
}

/// `BᴴB + I` for a random square `B`.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let b = random_cmatrix(rng, n, n);
    b.adjoint().matmul(&b).unwrap().add(&CMatrix::identity(n)).unwrap()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &CMatrix) -> C64 {
    let n = m.rows();
    let mut a: Vec<Vec<C64>> = (0..n).map(|r| m.row(r).into_vec()).collect();
    let mut d = c64(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].norm().total_cmp(&a[y][k].norm())).unwrap();
        if a[p][k].norm() == 0.0 {
            return c64(0.0, 0.0);
        }
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        d *= a[k][k];
        for r in k + 1..n {
            let f = a[r][k] / a[k][k];
            for c in k..n {
                let v = a[k][c];
                a[r][c] -= f * v;
            }
        }
    }
    d
}

/// Random unitary matrix from Gram-Schmidt on a random square matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let mut cols: Vec<CVector> = Vec::new();
    while cols.len() < n {
        let mut v = random_cvec(rng, n);
        for q in &cols {
            let proj = q.inner(&v);
            v = v.sub(&q.scale_complex(proj));
        }
        if let Some(u) = v.normalized() {
            cols.push(u);
        }
    }
    CMatrix::from_fn(n, n, |r, c| cols[c].as_slice()[r])
}

/// Minimum over the constraint ratios of a plain SINR/margin re-evaluation,
/// written from the channel model directly.
pub fn sinr_by_hand(cfg: &NetworkConfig, ch: &ChannelSet, ws: &[CVector], i: usize) -> f64 {
    let gain = |h: &CVector, w: &CVector| {
        let z: C64 = h.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        z.norm_sqr()
    };
    let signal = gain(&ch.hss[i][i], &ws[i]);
    let mut noise = cfg.sigma_s[i];
    for j in 0..cfg.mp {
        noise += gain(&ch.hsp[i][j], &ch.wp[j]);
    }
    for j in 0..cfg.ms {
        if j != i {
            noise += gain(&ch.hss[i][j], &ws[j]);
        }
    }
    signal / noise
}

pub fn interference_by_hand(ch: &ChannelSet, ws: &[CVector], j: usize) -> f64 {
    ch.hps[j]
        .iter()
        .zip(ws)
        .map(|(h, w)| h.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<C64>().norm_sqr())
        .sum()
}

pub fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn sum_of(v: &[f64]) -> f64 {
    v.iter().sum()
}

/// Minimum weighted power for one two-antenna secondary user and one
/// primary, by search over the beam angle θ on a `points` grid. The beam is
/// `cos θ ĥ + e^{iφ} sin θ ĥ⊥` with `ĥ` the matched direction; for each θ the
/// phase φ is chosen to cancel as much leakage as possible, which gives leakage
/// per unit power `(cos θ |gĥ| − sin θ |gĥ⊥|)²`. `None` when no grid angle is
/// feasible.
pub fn single_user_grid_power(cfg: &NetworkConfig, ch: &ChannelSet, gamma: f64, points: usize) -> Option<f64> {
    assert_eq!((cfg.ms, cfg.mp, cfg.ns), (1, 1, 2));
    let noise = cfg.sigma_s[0] + ch.hsp[0][0].dot(&ch.wp[0]).norm_sqr();
    let h = &ch.hss[0][0];
    let hn = h.norm();
    let matched = CVector::from_vec(vec![h[0].conj() / hn, h[1].conj() / hn]);
    // Orthogonal unit vector: (−h₁, h₀) / ‖h‖ satisfies h·v = 0.
    let ortho = CVector::from_vec(vec![-h[1] / hn, h[0] / hn]);
    let g = &ch.hps[0][0];
    let (ga, gb) = (g.dot(&matched).norm(), g.dot(&ortho).norm());
    let mut best = f64::INFINITY;
    for k in 0..points {
        let theta = std::f64::consts::FRAC_PI_2 * k as f64 / points as f64;
        let gain = hn * hn * theta.cos().powi(2);
        let p = gamma * noise / gain;
        let leak = (theta.cos() * ga - theta.sin() * gb).powi(2);
        if p * leak <= cfg.beta[0] {
            best = best.min(cfg.alpha[0] * p);
        }
    }
    best.is_finite().then_some(best)
}

/// Slack on decodability comparisons, matching the library's convention.
pub const EPS: f64 = 1e-9;

pub fn random_net(r: &mut ChaCha8Rng, ms: usize) -> EffectiveNetwork {
    EffectiveNetwork::new(
        (0..ms)
            .map(|_| (0..ms).map(|_| random_c64(r).scale(r.random_range(0.2..3.0))).collect())
            .collect(),
    )
}

pub fn min_weighted_gain(r: &[f64], rmin: &[f64], rho: &[f64]) -> f64 {
    r.iter().zip(rmin).zip(rho).map(|((a, b), p)| (a - b) / p).fold(f64::INFINITY, f64::min)
}

/// Joint-decoding condition on an effective network: for every receiver
/// `i` and every set `V ∋ i`, `Σ_V R ≤ log2(1 + Σ_V |h_i|²)`.
pub fn mld_decodable_by_hand(net: &EffectiveNetwork, rates: &[f64]) -> bool {
    let ms = net.ms();
    let full = (1u32 << ms) - 1;
    (0..ms).all(|i| {
        (1..=full)
            .filter(|v| v & (1 << i) != 0)
            .all(|v| masked_sum(rates, v) <= rank_by_hand(&net.h[i], v, 0) + EPS)
    })
}

/// `log2(1 + Σ_S |h|² / (1 + Σ_B |h|²))` written with bitmasks.
pub fn rank_by_hand(h: &[C64], s: u32, b: u32) -> f64 {
    let sum = |m: u32| (0..h.len()).filter(|j| m & (1 << j) != 0).map(|j| h[j].norm_sqr()).sum::<f64>();
    if s == 0 {
        0.0
    } else {
        (1.0 + sum(s) / (1.0 + sum(b))).log2()
    }
}

pub fn masked_sum(v: &[f64], m: u32) -> f64 {
    (0..v.len()).filter(|j| m & (1 << j) != 0).map(|j| v[j]).sum()
}

/// `max_{G ∋ i} min_{∅≠S⊆G} (f(S) − Σ_S Rmin)/Σ_S ρ`, with `K∖G` as noise.
pub fn theta_star_by_hand(net: &EffectiveNetwork, i: usize, rmin: &[f64], rho: &[f64]) -> f64 {
    let ms = net.ms();
    let full = (1u32 << ms) - 1;
    let mut best = f64::NEG_INFINITY;
    for g in 1..=full {
        if g & (1 << i) == 0 {
            continue;
        }
        let mut worst = f64::INFINITY;
        for s in 1..=full {
            if s & !g == 0 {
                let v = (rank_by_hand(&net.h[i], s, full & !g) - masked_sum(rmin, s)) / masked_sum(rho, s);
                worst = worst.min(v);
            }
        }
        best = best.max(worst);
    }
    best
}

/// Some group `G ∋ i` decodable at receiver `i` with the rest as noise, for
/// every receiver.
pub fn ugd_decodable_by_hand(net: &EffectiveNetwork, rates: &[f64]) -> bool {
    let ms = net.ms();
    let full = (1u32 << ms) - 1;
    (0..ms).all(|i| {
        (1..=full).filter(|g| g & (1 << i) != 0).any(|g| {
            (1..=full)
                .filter(|s| s & !g == 0)
                .all(|s| masked_sum(rates, s) <= rank_by_hand(&net.h[i], s, full & !g) + EPS)
        })
    })
}

