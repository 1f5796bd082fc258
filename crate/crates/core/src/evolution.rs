//! Exact-dynamics oracle for `H = gamma L - |t><t|`.
//!
//! Evolution is computed by full spectral decomposition of `H`: exact up to
//! eigensolver accuracy, with one decomposition reused across a whole success
//! curve. Dense `O(N^3)` solves are affordable at the sizes handled here and
//! leave no step-size error to argue about.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criterion::{self, AnalysisError, GammaChoice, SearchAnalysis};
use crate::graphs::{self, GraphError, SearchOperator};
use crate::scalar::Scalar;
use crate::spectral::{self, OverlapProfile, SpectralError, Spectrum};

pub type CVector<T> = Array1<Complex<T>>;

/// Absolute distance below which `lambda` counts as sitting on a pole
/// `gamma E_z` of the eigenvalue condition.
pub const POLE_TOL: f64 = 1e-12;

/// Tolerated deviation of an initial state's norm from 1.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("initial state norm {norm} is not 1 within {NORM_TOL}")]
    NotNormalized { norm: f64 },
    #[error("jumping rate must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("target vertex {target} out of range for dimension {n}")]
    TargetOutOfRange { target: usize, n: usize },
    #[error("state dimension {got} does not match operator dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("time grid needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("lambda = {lambda} lies within {POLE_TOL} of the pole gamma E_z = {pole}")]
    PoleProximity { lambda: f64, pole: f64 },
    #[error("two-stage search needs R >= 4 and 1 <= w < sqrt(R), got R = {r}, w = {w}")]
    TwoStageParameters { r: usize, w: f64 },
    #[error("no level boundary at cumulative multiplicity {want}; the low clusters merged")]
    NoStageTwoBoundary { want: usize },
}

/// Exact success curve `p(tau) = |<t| e^{-i H tau} |psi0>|^2` on a time grid,
/// with the grid peak and its golden-section refinement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionTrace<T: Scalar> {
    pub taus: Vec<T>,
    pub probs: Vec<T>,
    /// Grid argmax.
    pub peak_tau: T,
    pub peak_prob: T,
    /// Peak after one golden-section pass over the two grid cells around the
    /// argmax (`p` is smooth, so this resolves the local maximum exactly).
    pub refined_peak_tau: T,
    pub refined_peak_prob: T,
    pub gamma: T,
    pub target: usize,
    /// Human-readable tag for the initial state ("uniform", "sigma", ...).
    pub initial_state: String,
}

/// Search Hamiltonian `H = gamma * op - |t><t|`.
pub fn build_hamiltonian<T: Scalar>(
    op: &SearchOperator<T>,
    gamma: T,
    target: usize,
) -> Result<Array2<T>, EvolutionError> {
    if gamma <= T::zero() {
        return Err(EvolutionError::NonPositiveGamma(
            gamma.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if target >= op.n {
        return Err(EvolutionError::TargetOutOfRange { target, n: op.n });
    }
    let mut h = op.matrix.mapv(|x| x * gamma);
    h[(target, target)] -= T::one();
    Ok(h)
}

/// Cached eigendecomposition of a Hamiltonian, reused across time points.
pub struct Propagator<T: Scalar> {
    pub values: Array1<T>,
    pub vectors: Array2<T>,
}

impl<T: Scalar> Propagator<T> {
    pub fn new(h: ArrayView2<T>) -> Result<Self, EvolutionError> {
        let (values, vectors) = spectral::eigh(h)?;
        Ok(Propagator { values, vectors })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Eigenbasis coefficients `c_z = <z|psi>`.
    pub fn coefficients(&self, psi: &CVector<T>) -> CVector<T> {
        let n = self.n();
        let mut c = Array1::from_elem(n, Complex::new(T::zero(), T::zero()));
        for i in 0..n {
            let p = psi[i];
            if p.re != T::zero() || p.im != T::zero() {
                for z in 0..n {
                    c[z] += p * self.vectors[(i, z)];
                }
            }
        }
        c
    }

    /// `e^{-i H tau} |psi>` from precomputed coefficients.
    pub fn evolve_coefficients(&self, c: &CVector<T>, tau: T) -> CVector<T> {
        let n = self.n();
        let mut phased = Vec::with_capacity(n);
        for z in 0..n {
            phased.push(c[z] * Complex::from_polar(T::one(), -self.values[z] * tau));
        }
        let mut out = Array1::from_elem(n, Complex::new(T::zero(), T::zero()));
        for i in 0..n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (z, ph) in phased.iter().enumerate() {
                acc += *ph * self.vectors[(i, z)];
            }
            out[i] = acc;
        }
        out
    }

    pub fn evolve(&self, psi0: &CVector<T>, tau: T) -> CVector<T> {
        self.evolve_coefficients(&self.coefficients(psi0), tau)
    }
}

fn check_normalized<T: Scalar>(psi: &CVector<T>) -> Result<(), EvolutionError> {
    let norm = state_norm(psi);
    if (norm - T::one()).abs() > T::from_f64_const(NORM_TOL) {
        return Err(EvolutionError::NotNormalized {
            norm: norm.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

pub fn state_norm<T: Scalar>(psi: &CVector<T>) -> T {
    psi.iter()
        .map(|a| a.re * a.re + a.im * a.im)
        .sum::<T>()
        .sqrt()
}

/// Uniform superposition over all vertices.
pub fn uniform_state<T: Scalar>(n: usize) -> CVector<T> {
    let amp = T::one() / T::from_count(n).sqrt();
    Array1::from_elem(n, Complex::new(amp, T::zero()))
}

/// Complex state from real amplitudes (normalization is the caller's job).
pub fn complex_state<T: Scalar>(real: &[T]) -> CVector<T> {
    Array1::from_iter(real.iter().map(|&x| Complex::new(x, T::zero())))
}

/// One-shot evolution `e^{-i H tau} |psi0>` by diagonalizing `H`.
pub fn evolve<T: Scalar>(
    h: ArrayView2<T>,
    psi0: &CVector<T>,
    tau: T,
) -> Result<CVector<T>, EvolutionError> {
    if psi0.len() != h.nrows() {
        return Err(EvolutionError::DimensionMismatch {
            got: psi0.len(),
            want: h.nrows(),
        });
    }
    check_normalized(psi0)?;
    Ok(Propagator::new(h)?.evolve(psi0, tau))
}

struct AmplitudeKernel<T: Scalar> {
    /// `q_z = <t|z> <z|psi0>`
    q: Vec<Complex<T>>,
    values: Vec<T>,
}

impl<T: Scalar> AmplitudeKernel<T> {
    fn new(prop: &Propagator<T>, c: &CVector<T>, target: usize) -> Self {
        let n = prop.n();
        let q = (0..n).map(|z| c[z] * prop.vectors[(target, z)]).collect();
        AmplitudeKernel {
            q,
            values: prop.values.to_vec(),
        }
    }

    /// `|<t| e^{-i H tau} |psi0>|^2` in O(N).
    fn prob(&self, tau: T) -> T {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (qz, &ez) in self.q.iter().zip(self.values.iter()) {
            acc += *qz * Complex::from_polar(T::one(), -ez * tau);
        }
        acc.re * acc.re + acc.im * acc.im
    }
}

/// Golden-section maximization of a smooth function on [lo, hi].
fn golden_max<T: Scalar, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T) -> (T, T) {
    let phi = (T::from_f64_const(5.0).sqrt() - T::one()) / (T::one() + T::one());
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..70 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = (lo + hi) / (T::one() + T::one());
    (mid, f(mid))
}

/// Samples the exact success probability on a uniform grid over
/// `[0, tau_max]`, reusing a single eigendecomposition of `H`.
pub fn success_curve<T: Scalar>(
    op: &SearchOperator<T>,
    gamma: T,
    target: usize,
    psi0: &CVector<T>,
    tau_max: T,
    steps: usize,
) -> Result<EvolutionTrace<T>, EvolutionError> {
    let h = build_hamiltonian(op, gamma, target)?;
    let prop = Propagator::new(h.view())?;
    success_curve_with(&prop, gamma, target, psi0, tau_max, steps, "custom")
}

/// Success curve over a prebuilt propagator (for callers that share the
/// decomposition with other measurements).
#[allow(clippy::too_many_arguments)]
pub fn success_curve_with<T: Scalar>(
    prop: &Propagator<T>,
    gamma: T,
    target: usize,
    psi0: &CVector<T>,
    tau_max: T,
    steps: usize,
    initial_state: &str,
) -> Result<EvolutionTrace<T>, EvolutionError> {
    let n = prop.n();
    if steps < 2 {
        return Err(EvolutionError::TooFewSteps(steps));
    }
    if target >= n {
        return Err(EvolutionError::TargetOutOfRange { target, n });
    }
    if psi0.len() != n {
        return Err(EvolutionError::DimensionMismatch {
            got: psi0.len(),
            want: n,
        });
    }
    check_normalized(psi0)?;

    let c = prop.coefficients(psi0);
    let kernel = AmplitudeKernel::new(prop, &c, target);

    let dt = tau_max / T::from_count(steps - 1);
    let mut taus = Vec::with_capacity(steps);
    let mut probs = Vec::with_capacity(steps);
    let mut peak_idx = 0;
    let mut peak_prob = T::neg_infinity();
    for k in 0..steps {
        let tau = dt * T::from_count(k);
        let p = kernel.prob(tau);
        if p > peak_prob {
            peak_prob = p;
            peak_idx = k;
        }
        taus.push(tau);
        probs.push(p);
    }
    let lo = taus[peak_idx.saturating_sub(1)];
    let hi = taus[(peak_idx + 1).min(steps - 1)];
    let (mut refined_peak_tau, mut refined_peak_prob) = golden_max(|t| kernel.prob(t), lo, hi);
    if refined_peak_prob < peak_prob {
        refined_peak_tau = taus[peak_idx];
        refined_peak_prob = peak_prob;
    }

    Ok(EvolutionTrace {
        peak_tau: taus[peak_idx],
        peak_prob,
        refined_peak_tau,
        refined_peak_prob,
        taus,
        probs,
        gamma,
        target,
        initial_state: initial_state.to_string(),
    })
}

/// Residual `|sum_z t_z^2 / (gamma E_z - lambda) - 1|` of the eigenvalue
/// condition, evaluated over aggregated levels. Exact eigenvalues of `H`
/// satisfy the condition exactly.
pub fn verify_eigen_condition<T: Scalar>(
    profile: &OverlapProfile<T>,
    gamma: T,
    lambda: T,
) -> Result<T, EvolutionError> {
    let mut sum = T::zero();
    for level in &profile.levels {
        let denom = gamma * level.value - lambda;
        if denom.abs() < T::from_f64_const(POLE_TOL) {
            return Err(EvolutionError::PoleProximity {
                lambda: lambda.to_f64().unwrap_or(f64::NAN),
                pole: (gamma * level.value).to_f64().unwrap_or(f64::NAN),
            });
        }
        sum += level.weight / denom;
    }
    Ok((sum - T::one()).abs())
}

/// The reconstructed eigenpair with overlap diagnostics.
#[derive(Debug, Clone)]
pub struct LambdaStates<T: Scalar> {
    pub plus: Array1<T>,
    pub minus: Array1<T>,
    /// `<t|lambda+/->`; should equal `(gamma/sqrt(M2)) f_{+/-}(eta)`.
    pub t_overlap_plus: T,
    pub t_overlap_minus: T,
    /// `<sigma|lambda+/->`; should equal `-cos(eta)` and `+sin(eta)`.
    pub sigma_overlap_plus: T,
    pub sigma_overlap_minus: T,
}

/// Rebuilds the two dominant eigenstates of `H` from the reduction:
/// `|lambda> = (gamma/sqrt(M2)) f(eta) sum_z t_z / (gamma E_z - lambda) |z>`,
/// normalized, with `f_+ = sin(eta)`, `f_- = cos(eta)`.
pub fn reconstruct_lambda_states<T: Scalar>(
    spectrum: &Spectrum<T>,
    profile: &OverlapProfile<T>,
    analysis: &SearchAnalysis<T>,
) -> Result<LambdaStates<T>, EvolutionError> {
    let n = spectrum.n();
    let target = profile.target;
    let gamma = analysis.gamma;
    let prefactor = gamma / analysis.m2.sqrt();
    let f_plus = analysis.eta.sin();
    let f_minus = analysis.eta.cos();

    let mut states = Vec::with_capacity(2);
    for (&lambda, &f) in [analysis.lambda_plus, analysis.lambda_minus]
        .iter()
        .zip([f_plus, f_minus].iter())
    {
        let mut coef = vec![T::zero(); n];
        for (z, cz) in coef.iter_mut().enumerate() {
            let denom = gamma * spectrum.eigenvalues[z] - lambda;
            if denom.abs() < T::from_f64_const(POLE_TOL) {
                return Err(EvolutionError::PoleProximity {
                    lambda: lambda.to_f64().unwrap_or(f64::NAN),
                    pole: (gamma * spectrum.eigenvalues[z])
                        .to_f64()
                        .unwrap_or(f64::NAN),
                });
            }
            *cz = prefactor * f * spectrum.eigenvectors[(target, z)] / denom;
        }
        let mut state = Array1::zeros(n);
        for (z, &cz) in coef.iter().enumerate() {
            if cz != T::zero() {
                for i in 0..n {
                    state[i] += cz * spectrum.eigenvectors[(i, z)];
                }
            }
        }
        let norm = state.iter().map(|&x| x * x).sum::<T>().sqrt();
        state.mapv_inplace(|x| x / norm);
        states.push(state);
    }
    let minus = states.pop().expect("two states");
    let plus = states.pop().expect("two states");

    let dot_sigma = |v: &Array1<T>| -> T {
        analysis
            .sigma
            .iter()
            .zip(v.iter())
            .map(|(&a, &b)| a * b)
            .sum()
    };
    Ok(LambdaStates {
        t_overlap_plus: plus[target],
        t_overlap_minus: minus[target],
        sigma_overlap_plus: dot_sigma(&plus),
        sigma_overlap_minus: dot_sigma(&minus),
        plus,
        minus,
    })
}

/// Result of the two-stage search on the simplex of complete graphs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoStageSc<T> {
    /// Stage-1 rate `(1/R)(1 + 1/w)`.
    pub gamma1: T,
    /// Stage-1 predicted time from the reduction at `gamma1`.
    pub t1: T,
    /// Candidate closed forms for the stage-1 time; the measured
    /// `stage1_peak_tau` arbitrates between the two denominators.
    pub t1_candidate_2w_plus_1: T,
    pub t1_candidate_2w_plus_2: T,
    pub stage1_peak_tau: T,
    pub stage1_peak_prob: T,
    /// `|<s1|psi(T1)>|^2` against the uniform state on the target's block.
    pub fidelity_s1: T,
    /// Stage-2 rate `1/R`.
    pub gamma2: T,
    pub t2: T,
    /// `|<t|psi>|` after running stage 2 on the stage-1 output state.
    pub final_overlap: T,
    /// Squared: the full two-stage success probability.
    pub final_prob: T,
    /// Stage-2 success probability when started from the exact `|s1>`.
    pub stage2_alone_prob: T,
}

/// Runs the two-stage search: localize onto the target's block at
/// `gamma1 = (1/R)(1 + 1/w)`, then search within the block at `gamma2 = 1/R`,
/// both on the ground-shifted SC operator. The target is vertex 0.
pub fn two_stage_sc<T: Scalar>(
    r_blocks: usize,
    w: T,
    steps: usize,
) -> Result<TwoStageSc<T>, EvolutionError> {
    let r = r_blocks;
    if r < 4 || w < T::one() || w * w >= T::from_count(r) {
        return Err(EvolutionError::TwoStageParameters {
            r,
            w: w.to_f64().unwrap_or(f64::NAN),
        });
    }
    let n = r * (r + 1);
    let target = 0usize;
    let rt = T::from_count(r);
    let two = T::one() + T::one();

    let op = graphs::simplex_complete_operator(r, w)?;
    let spectrum = spectral::eig_sym(&op)?;
    let shifted = spectrum.ground_shift();
    let op_shifted = op.shifted_by(spectrum.eigenvalues[0]);
    let profile = spectral::target_overlaps(
        &shifted,
        target,
        T::from_f64_const(spectral::DEFAULT_DEGENERACY_TOL),
    )?;

    // stage 1: uniform state, m = 1, closed-form rate
    let gamma1 = (T::one() / rt) * (T::one() + T::one() / w);
    let analysis1 = criterion::analyze(&shifted, &profile, 1, GammaChoice::Fixed(gamma1))?;
    let t1 = analysis1.time;

    let h1 = build_hamiltonian(&op_shifted, gamma1, target)?;
    let prop1 = Propagator::new(h1.view())?;
    let psi0 = uniform_state(n);
    let trace1 = success_curve_with(&prop1, gamma1, target, &psi0, two * t1, steps, "uniform")?;
    let psi_t1 = prop1.evolve(&psi0, t1);

    // |s1> = uniform over the target's block (vertices 0..r)
    let amp = T::one() / rt.sqrt();
    let mut s1 = Array1::from_elem(n, Complex::new(T::zero(), T::zero()));
    for i in 0..r {
        s1[i] = Complex::new(amp, T::zero());
    }
    let fidelity_s1 = {
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..r {
            acc += psi_t1[i] * amp;
        }
        acc.re * acc.re + acc.im * acc.im
    };

    // stage 2: the level boundary covering the lowest R + 1 eigenvalues
    let mut cum = 0usize;
    let mut m2_boundary = None;
    for (idx, level) in profile.levels.iter().enumerate() {
        cum += level.mult;
        if cum == r + 1 {
            m2_boundary = Some(idx + 1);
            break;
        }
        if cum > r + 1 {
            break;
        }
    }
    let m2 = m2_boundary.ok_or(EvolutionError::NoStageTwoBoundary { want: r + 1 })?;
    let gamma2 = T::one() / rt;
    let analysis2 = criterion::analyze(&shifted, &profile, m2, GammaChoice::Fixed(gamma2))?;
    let t2 = analysis2.time;

    let h2 = build_hamiltonian(&op_shifted, gamma2, target)?;
    let prop2 = Propagator::new(h2.view())?;
    let psi_final = prop2.evolve(&psi_t1, t2);
    let final_overlap = psi_final[target].norm();
    let psi_alone = prop2.evolve(&s1, t2);
    let stage2_alone_prob = psi_alone[target].norm_sqr();

    let sqrt_rn = (rt * T::from_count(n)).sqrt();
    Ok(TwoStageSc {
        gamma1,
        t1,
        t1_candidate_2w_plus_1: T::PI() * sqrt_rn / (two * w + T::one()),
        t1_candidate_2w_plus_2: T::PI() * sqrt_rn / (two * (w + T::one())),
        stage1_peak_tau: trace1.refined_peak_tau,
        stage1_peak_prob: trace1.refined_peak_prob,
        fidelity_s1,
        gamma2,
        t2,
        final_overlap,
        final_prob: final_overlap * final_overlap,
        stage2_alone_prob,
    })
}
