//! The search criterion: two-level reduction of `H = gamma L - |t><t|`.
//!
//! From an overlap profile this module chooses the gap index `m`, computes
//! `alpha` and the inverse-power moments `M1`, `M2`, solves the two-eigenvalue
//! reduction for `lambda_plus/lambda_minus`, and emits the predictions: the
//! critical jumping rate `gamma_c = M1`, the evolution time
//! `T = pi / (lambda_plus - lambda_minus)`, the peak target overlap, and the
//! assumption margin `chi_eff` that controls the approximation error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::spectral::{OverlapProfile, Spectrum};

/// Default margin demanded of the spectral window; the neglected terms are
/// bounded by `1/(chi - 1)`, so 10 keeps them near the 10% level.
pub const DEFAULT_CHI_MIN: f64 = 10.0;

/// Default ratio for the strongly-regular gap condition `N mu >> F2^2`.
pub const DEFAULT_SRG_GAP_RATIO: f64 = 10.0;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("m = {m} is out of range: profile has {levels} levels and at least one level must sit above the gap")]
    InvalidM { m: usize, levels: usize },
    #[error("target invisible to low subspace (alpha = 0 for m = {m})")]
    TargetInvisible { m: usize },
    #[error("moments undefined — shift the operator first (level {level} has eigenvalue {value} <= 0)")]
    MomentsUndefined { level: usize, value: f64 },
    #[error("jumping rate must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("profile (n = {profile_n}) does not match spectrum (n = {spectrum_n})")]
    MismatchedInputs { profile_n: usize, spectrum_n: usize },
    #[error("no spectral gap supports the two-level reduction (best candidate m = {best_m} with chi_eff = {best_chi}; required {chi_min})")]
    NoValidM {
        best_m: usize,
        best_chi: f64,
        chi_min: f64,
    },
    #[error("moment order must be 1 or 2, got {0}")]
    InvalidMomentOrder(u32),
    #[error("invalid family parameters: {0}")]
    InvalidFamily(String),
    #[error("negative discriminant: k - mu + (lambda - mu)^2/4 < 0, no real Laplacian levels")]
    NegativeDiscriminant,
}

/// Jumping-rate choice for [`analyze`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaChoice<T> {
    /// Use the critical rate `gamma_c = M1`; then `delta = 0`, `eta = pi/4`.
    Critical,
    /// Use an explicit rate.
    Fixed(T),
}

/// Complete output of the two-level reduction for one `(profile, m, gamma)`.
///
/// Serializes to a flat JSON object; `sigma` is the normalized projection of
/// the target onto the low eigenspace, materialized as a full vector so the
/// evolution oracle can start from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchAnalysis<T: Scalar> {
    /// Number of levels below the gap.
    pub m: usize,
    pub alpha: T,
    #[serde(rename = "M1")]
    pub m1: T,
    #[serde(rename = "M2")]
    pub m2: T,
    /// Jumping rate the reduction was evaluated at.
    pub gamma: T,
    /// Critical rate `M1` (always reported).
    pub gamma_c: T,
    /// Detuning `M1/gamma - 1`; zero at the critical rate.
    pub delta: T,
    /// Mixing angle in `(0, pi/2)`; `pi/4` at the critical rate.
    pub eta: T,
    pub lambda_plus: T,
    pub lambda_minus: T,
    /// Predicted optimal evolution time `pi / (lambda_plus - lambda_minus)`.
    #[serde(rename = "T")]
    pub time: T,
    /// Predicted maximum of `|<t|phi(tau)>|` when starting from `sigma`.
    pub peak_overlap: T,
    /// `min(|lambda| / (gamma E_{m-1}), gamma E_m / |lambda|)`; the margin by
    /// which the pair sits inside the spectral window.
    pub chi_eff: T,
    pub sigma: Vec<T>,
}

impl<T: Scalar> SearchAnalysis<T> {
    /// Whether the reduction was evaluated at the critical rate.
    pub fn is_critical(&self) -> bool {
        self.delta == T::zero()
    }
}

struct MomentSums<T> {
    alpha_sq: T,
    m1: T,
    m2: T,
}

fn moment_sums<T: Scalar>(
    profile: &OverlapProfile<T>,
    m: usize,
) -> Result<MomentSums<T>, AnalysisError> {
    let levels = profile.num_levels();
    if m < 1 || m >= levels {
        return Err(AnalysisError::InvalidM { m, levels });
    }
    let mut alpha_sq = T::zero();
    for level in &profile.levels[..m] {
        alpha_sq += level.weight;
    }
    let mut m1 = T::zero();
    let mut m2 = T::zero();
    for (idx, level) in profile.levels.iter().enumerate().skip(m) {
        if level.value <= T::zero() {
            return Err(AnalysisError::MomentsUndefined {
                level: idx,
                value: level.value.to_f64().unwrap_or(f64::NAN),
            });
        }
        let inv = level.weight / level.value;
        m1 += inv;
        m2 += inv / level.value;
    }
    Ok(MomentSums { alpha_sq, m1, m2 })
}

/// Stable positive root of `tan^2 + 2 c tan - 1 = 0`: the half-angle tangent
/// of the angle whose double has cotangent `c`.
fn tan_eta_from_cot2eta<T: Scalar>(c: T) -> T {
    let h = c.hypot(T::one());
    if c >= T::zero() {
        T::one() / (c + h)
    } else {
        h - c
    }
}

/// Runs the two-level reduction.
///
/// `alpha^2` aggregates the lowest `m` level weights; the moments run over
/// the remaining levels, which must all have strictly positive eigenvalues
/// (ground-shift the operator first if not). With [`GammaChoice::Critical`]
/// the detuning is exactly zero and the closed critical-point formulas
/// `lambda = +/- alpha M1 / sqrt(M2)`, `T = pi sqrt(M2) / (2 M1 alpha)`,
/// `peak = M1 / sqrt(M2)` emerge from the general path.
pub fn analyze<T: Scalar>(
    spectrum: &Spectrum<T>,
    profile: &OverlapProfile<T>,
    m: usize,
    gamma: GammaChoice<T>,
) -> Result<SearchAnalysis<T>, AnalysisError> {
    if spectrum.n() != profile.n {
        return Err(AnalysisError::MismatchedInputs {
            profile_n: profile.n,
            spectrum_n: spectrum.n(),
        });
    }
    let sums = moment_sums(profile, m)?;
    if sums.alpha_sq <= T::zero() {
        return Err(AnalysisError::TargetInvisible { m });
    }
    let alpha = sums.alpha_sq.sqrt();
    let (m1, m2) = (sums.m1, sums.m2);
    let gamma_c = m1;
    let gamma = match gamma {
        GammaChoice::Critical => gamma_c,
        GammaChoice::Fixed(g) => {
            if g <= T::zero() {
                return Err(AnalysisError::NonPositiveGamma(
                    g.to_f64().unwrap_or(f64::NAN),
                ));
            }
            g
        }
    };
    let sqrt_m2 = m2.sqrt();
    let delta = m1 / gamma - T::one();
    let cot2eta = delta * gamma / ((T::one() + T::one()) * alpha * sqrt_m2);
    let tan_eta = tan_eta_from_cot2eta(cot2eta);
    let eta = tan_eta.atan();
    let sin2eta = T::one() / cot2eta.hypot(T::one());
    let lam_scale = alpha * gamma / sqrt_m2;
    let lambda_plus = lam_scale * tan_eta;
    let lambda_minus = -lam_scale / tan_eta;
    let time = T::PI() / (lambda_plus - lambda_minus);
    let peak_overlap = gamma / sqrt_m2 * sin2eta;
    let chi_eff = chi_from_parts(
        lambda_plus.abs().max(lambda_minus.abs()),
        gamma,
        profile.levels[m - 1].value,
        profile.levels[m].value,
    );

    // sigma = (1/alpha) * sum_{z < m} t_z |z>: the normalized projection of
    // the target onto the low eigenspace (basis-rotation invariant).
    let n = profile.n;
    let z_low_end = profile.levels[m - 1].z_end;
    let mut sigma = vec![T::zero(); n];
    for z in 0..z_low_end {
        let tz = spectrum.eigenvectors[(profile.target, z)];
        if tz != T::zero() {
            for (i, s) in sigma.iter_mut().enumerate() {
                *s += tz * spectrum.eigenvectors[(i, z)];
            }
        }
    }
    let inv_alpha = T::one() / alpha;
    for s in sigma.iter_mut() {
        *s *= inv_alpha;
    }

    Ok(SearchAnalysis {
        m,
        alpha,
        m1,
        m2,
        gamma,
        gamma_c,
        delta,
        eta,
        lambda_plus,
        lambda_minus,
        time,
        peak_overlap,
        chi_eff,
        sigma,
    })
}

fn chi_from_parts<T: Scalar>(lam_abs: T, gamma: T, e_below: T, e_above: T) -> T {
    let right = gamma * e_above / lam_abs;
    if e_below <= T::zero() {
        right
    } else {
        let left = lam_abs / (gamma * e_below);
        left.min(right)
    }
}

/// One rejected candidate from [`select_m`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedM<T> {
    pub m: usize,
    /// `chi_eff` at the critical rate, when computable.
    pub chi_eff: Option<T>,
    pub reason: String,
}

/// Outcome of the gap search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MSelection<T> {
    pub m: usize,
    pub chi_eff: T,
    /// Every smaller candidate that was tried and rejected.
    pub rejected: Vec<RejectedM<T>>,
}

/// Finds the smallest `m` (over level boundaries, so degenerate levels are
/// never split) whose critical-rate `lambda` pair sits inside the spectral
/// window with margin `chi_min`. `E_{m-1} = 0` makes the lower check pass
/// automatically, matching the disconnected-graph picture.
pub fn select_m<T: Scalar>(
    profile: &OverlapProfile<T>,
    chi_min: T,
) -> Result<MSelection<T>, AnalysisError> {
    let levels = profile.num_levels();
    let mut rejected = Vec::new();
    let mut best: Option<(usize, T)> = None;
    for m in 1..levels {
        let sums = match moment_sums(profile, m) {
            Ok(s) => s,
            Err(e) => {
                rejected.push(RejectedM {
                    m,
                    chi_eff: None,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if sums.alpha_sq <= T::zero() {
            rejected.push(RejectedM {
                m,
                chi_eff: None,
                reason: "alpha = 0: target invisible to low subspace".into(),
            });
            continue;
        }
        // At the critical rate |lambda|/gamma = alpha/sqrt(M2), so both
        // window ratios are gamma-free.
        let alpha = sums.alpha_sq.sqrt();
        let lam_over_gamma = alpha / sums.m2.sqrt();
        let chi = {
            let e_below = profile.levels[m - 1].value;
            let right = profile.levels[m].value / lam_over_gamma;
            if e_below <= T::zero() {
                right
            } else {
                (lam_over_gamma / e_below).min(right)
            }
        };
        if chi >= chi_min {
            return Ok(MSelection {
                m,
                chi_eff: chi,
                rejected,
            });
        }
        if best.map_or(true, |(_, b)| chi > b) {
            best = Some((m, chi));
        }
        rejected.push(RejectedM {
            m,
            chi_eff: Some(chi),
            reason: format!("chi_eff below threshold {chi_min}"),
        });
    }
    let (best_m, best_chi) = best.unwrap_or((0, T::zero()));
    Err(AnalysisError::NoValidM {
        best_m,
        best_chi: best_chi.to_f64().unwrap_or(f64::NAN),
        chi_min: chi_min.to_f64().unwrap_or(f64::NAN),
    })
}

/// Predicted `|<t|phi(tau)>|` over a time grid:
/// `(gamma/sqrt(M2)) sin(2 eta) |sin((lambda_plus - lambda_minus) tau / 2)|`.
pub fn predicted_overlap_curve<T: Scalar>(analysis: &SearchAnalysis<T>, taus: &[T]) -> Vec<T> {
    let two = T::one() + T::one();
    let gap = analysis.lambda_plus - analysis.lambda_minus;
    taus.iter()
        .map(|&tau| analysis.peak_overlap * (gap * tau / two).sin().abs())
        .collect()
}

/// Detuning scale `2 alpha sqrt(M2)`: moving `gamma` beyond this from the
/// critical rate makes `|cot 2 eta| >> 1` and collapses the peak overlap.
pub fn gamma_sensitivity_band<T: Scalar>(analysis: &SearchAnalysis<T>) -> T {
    (T::one() + T::one()) * analysis.alpha * analysis.m2.sqrt()
}

/// Families with closed-form moment sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentFamily<T> {
    /// `M_r = (1/N) sum_{p>=1} C(n,p) / (2p)^r`, `N = 2^n`.
    Hypercube { nbits: usize },
    /// `M_r = (1/N) sum_{k != 0} E(k)^{-r}` over the periodic momentum grid,
    /// `E(k) = 2 (d - sum_j cos k_j)`.
    Lattice { d: usize, side: usize },
    /// `M_r = 1/(R w^r) + 1/R^r`.
    SimplexComplete { blocks: usize, w: T },
    /// Two nonzero Laplacian levels `F1 -/+ F2` with their multiplicities.
    StronglyRegular {
        n: usize,
        k: usize,
        lambda: usize,
        mu: usize,
    },
}

/// Closed-form moment `M_r` for a family, `r` in {1, 2}.
pub fn closed_form_moments<T: Scalar>(
    family: MomentFamily<T>,
    r: u32,
) -> Result<T, AnalysisError> {
    if r != 1 && r != 2 {
        return Err(AnalysisError::InvalidMomentOrder(r));
    }
    match family {
        MomentFamily::Hypercube { nbits } => {
            if nbits < 1 {
                return Err(AnalysisError::InvalidFamily(
                    "hypercube needs nbits >= 1".into(),
                ));
            }
            let n = nbits;
            let big_n = T::from_count(1usize << n);
            let two = T::one() + T::one();
            let mut sum = T::zero();
            let mut binom = T::one(); // C(n, p) built multiplicatively
            for p in 1..=n {
                binom = binom * T::from_count(n - p + 1) / T::from_count(p);
                let e = two * T::from_count(p);
                let denom = if r == 1 { e } else { e * e };
                sum += binom / denom;
            }
            Ok(sum / big_n)
        }
        MomentFamily::Lattice { d, side } => {
            if d < 1 || side < 3 || side % 2 == 0 {
                return Err(AnalysisError::InvalidFamily(
                    "lattice needs d >= 1 and odd side >= 3".into(),
                ));
            }
            let n = side.pow(d as u32);
            let two = T::one() + T::one();
            let cos_table: Vec<T> = (0..side)
                .map(|x| (two * T::PI() * T::from_count(x) / T::from_count(side)).cos())
                .collect();
            let mut sum = T::zero();
            let mut idx = vec![0usize; d];
            for flat in 1..n {
                // d-digit counter in base `side`
                let mut rest = flat;
                for slot in idx.iter_mut() {
                    *slot = rest % side;
                    rest /= side;
                }
                let mut cos_sum = T::zero();
                for &x in &idx {
                    cos_sum += cos_table[x];
                }
                let e = two * (T::from_count(d) - cos_sum);
                let denom = if r == 1 { e } else { e * e };
                sum += T::one() / denom;
            }
            Ok(sum / T::from_count(n))
        }
        MomentFamily::SimplexComplete { blocks, w } => {
            if blocks < 2 || w <= T::zero() {
                return Err(AnalysisError::InvalidFamily(
                    "simplex needs R >= 2 and w > 0".into(),
                ));
            }
            let r_blocks = T::from_count(blocks);
            let wr = if r == 1 { w } else { w * w };
            let rr = if r == 1 { r_blocks } else { r_blocks * r_blocks };
            Ok(T::one() / (r_blocks * wr) + T::one() / rr)
        }
        MomentFamily::StronglyRegular { n, k, lambda, mu } => {
            let check = srg_check(n, k, lambda, mu)?;
            let nn = T::from_f64_const(n as f64);
            let f1 = T::from_f64_const(check.f1);
            let f2 = T::from_f64_const(check.f2);
            let lo = f1 - f2;
            let hi = f1 + f2;
            if lo <= T::zero() {
                return Err(AnalysisError::InvalidFamily(
                    "smallest nonzero Laplacian level is not positive".into(),
                ));
            }
            // adjacency multiplicities of theta = (lambda - mu)/2 +/- F2
            let n1 = T::from_f64_const((n - 1) as f64);
            let two = T::one() + T::one();
            let lam_mu = T::from_f64_const(lambda as f64 - mu as f64);
            let kk = T::from_f64_const(k as f64);
            let split = (two * kk + n1 * lam_mu) / (two * f2);
            let mult_lo = (n1 - split) / two; // carries Laplacian level F1 - F2
            let mult_hi = (n1 + split) / two;
            let w_lo = mult_lo / nn;
            let w_hi = mult_hi / nn;
            let (dlo, dhi) = if r == 1 { (lo, hi) } else { (lo * lo, hi * hi) };
            Ok(w_lo / dlo + w_hi / dhi)
        }
    }
}

/// Feasibility and gap diagnostics for strongly-regular parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SrgCheck {
    /// Whether `k (k - lambda - 1) = (N - k - 1) mu` holds exactly.
    pub feasible: bool,
    /// `F1 = k - (lambda - mu)/2`.
    pub f1: f64,
    /// `F2 = sqrt(k - mu + (lambda - mu)^2 / 4)`.
    pub f2: f64,
    /// Whether `N mu >= 10 * F2^2`: the condition for `F1 >> F2` and hence a
    /// single dominant Laplacian level.
    pub gap_condition: bool,
    /// `|F1^2 - (lambda - mu)^2/4 - (N mu + k - mu)|`; 0 for feasible
    /// parameters.
    pub identity_residual: f64,
}

/// Evaluates the strongly-regular feasibility identity, the two nonzero
/// Laplacian levels, and the gap condition (ratio [`DEFAULT_SRG_GAP_RATIO`]).
pub fn srg_check(n: usize, k: usize, lambda: usize, mu: usize) -> Result<SrgCheck, AnalysisError> {
    if mu < 1 || n == 0 || k == 0 || k + 1 > n || lambda + 1 > k {
        return Err(AnalysisError::InvalidFamily(
            "strongly regular parameters need 1 <= lambda + 1 <= k < n and mu >= 1".into(),
        ));
    }
    let (nf, kf, lf, mf) = (n as f64, k as f64, lambda as f64, mu as f64);
    let half_diff = (lf - mf) / 2.0;
    let disc = kf - mf + half_diff * half_diff;
    if disc < 0.0 {
        return Err(AnalysisError::NegativeDiscriminant);
    }
    let f1 = kf - half_diff;
    let f2 = disc.sqrt();
    let feasible = k * (k - lambda - 1) == (n - k - 1) * mu;
    let identity_residual = (f1 * f1 - half_diff * half_diff - (nf * mf + kf - mf)).abs();
    let gap_condition = nf * mf >= DEFAULT_SRG_GAP_RATIO * disc;
    Ok(SrgCheck {
        feasible,
        f1,
        f2,
        gap_condition,
        identity_residual,
    })
}
