//! Cross-module pipeline tests: generator -> operator -> spectrum -> profile
//! -> analysis -> oracle, pinned against independently computed values
//! (closed forms where they exist, a reference LAPACK run elsewhere).

use approx::assert_relative_eq;
use qwsearch::criterion::{
    self, analyze, gamma_sensitivity_band, select_m, AnalysisError, GammaChoice, MomentFamily,
};
use qwsearch::evolution::{self, uniform_state, verify_eigen_condition};
use qwsearch::graphs::{self, OperatorKind};
use qwsearch::spectral::{self, OverlapProfile, DEFAULT_DEGENERACY_TOL};

const TOL: f64 = DEFAULT_DEGENERACY_TOL;

fn laplacian_profile(
    g: &qwsearch::Graph64,
    target: usize,
) -> (qwsearch::Spectrum64, OverlapProfile<f64>) {
    let op = graphs::laplacian(g);
    let spectrum = spectral::eig_sym(&op).unwrap();
    let profile = spectral::target_overlaps(&spectrum, target, TOL).unwrap();
    (spectrum, profile)
}

fn profile_moments(profile: &OverlapProfile<f64>, m: usize) -> (f64, f64) {
    let m1 = profile.levels[m..]
        .iter()
        .map(|l| l.weight / l.value)
        .sum();
    let m2 = profile.levels[m..]
        .iter()
        .map(|l| l.weight / (l.value * l.value))
        .sum();
    (m1, m2)
}

#[test]
fn complete_graph_laplacian_spectrum() {
    let g = graphs::complete_graph::<f64>(4).unwrap();
    let spectrum = spectral::eig_sym(&graphs::laplacian(&g)).unwrap();
    let expect = [0.0, 4.0, 4.0, 4.0];
    for (have, want) in spectrum.eigenvalues.iter().zip(expect) {
        assert!((have - want).abs() < 1e-12, "{have} vs {want}");
    }
}

#[test]
fn hypercube_spectrum_binomial_multiplicities() {
    // eigenvalue 2p with multiplicity C(nbits, p)
    let g = graphs::hypercube::<f64>(3).unwrap();
    let (_, profile) = laplacian_profile(&g, 0);
    let shape: Vec<(f64, usize)> = profile.levels.iter().map(|l| (l.value, l.mult)).collect();
    assert_eq!(shape.len(), 4);
    for (idx, (value, mult, binom)) in [(0usize, 1usize, 1usize), (1, 3, 3), (2, 3, 3), (3, 1, 1)]
        .iter()
        .map(|&(p, m, b)| (p, m, b))
        .enumerate()
    {
        assert!((shape[idx].0 - 2.0 * value as f64).abs() < 1e-10);
        assert_eq!(shape[idx].1, mult);
        // level weight = C(n, p) / N
        assert_relative_eq!(
            profile.levels[idx].weight,
            binom as f64 / 8.0,
            max_relative = 1e-10
        );
        let _ = mult;
    }
    let g2 = graphs::hypercube::<f64>(2).unwrap();
    let s2 = spectral::eig_sym(&graphs::laplacian(&g2)).unwrap();
    let expect = [0.0, 2.0, 2.0, 4.0];
    for (have, want) in s2.eigenvalues.iter().zip(expect) {
        assert!((have - want).abs() < 1e-12);
    }
}

#[test]
fn complete_graph_overlap_levels() {
    // levels {(0, 1, 1/N), (N, N-1, 1 - 1/N)}
    let n = 16;
    let g = graphs::complete_graph::<f64>(n).unwrap();
    let (_, profile) = laplacian_profile(&g, 3);
    assert_eq!(profile.num_levels(), 2);
    assert_eq!(profile.levels[0].mult, 1);
    assert_eq!(profile.levels[1].mult, n - 1);
    assert_relative_eq!(profile.levels[0].weight, 1.0 / n as f64, max_relative = 1e-10);
    assert_relative_eq!(
        profile.levels[1].weight,
        1.0 - 1.0 / n as f64,
        max_relative = 1e-10
    );
    assert_relative_eq!(profile.total_weight(), 1.0, epsilon = 1e-10);
}

#[test]
fn lattice_spectrum_matches_momentum_closed_form() {
    // numeric eigenvalues equal the multiset {2 (d - sum cos(2 pi m / side))}
    for (d, side) in [(1usize, 5usize), (2, 5), (3, 3), (3, 7)] {
        let g = graphs::cubic_lattice::<f64>(d, side).unwrap();
        let spectrum = spectral::eig_sym(&graphs::laplacian(&g)).unwrap();
        let n = side.pow(d as u32);
        let mut closed = Vec::with_capacity(n);
        for flat in 0..n {
            let mut rest = flat;
            let mut cos_sum = 0.0;
            for _ in 0..d {
                let m = rest % side;
                rest /= side;
                cos_sum += (2.0 * std::f64::consts::PI * m as f64 / side as f64).cos();
            }
            closed.push(2.0 * (d as f64 - cos_sum));
        }
        closed.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (have, want) in spectrum.eigenvalues.iter().zip(closed) {
            assert!(
                (have - want).abs() <= 1e-9,
                "d={d} side={side}: {have} vs {want}"
            );
        }
    }
}

#[test]
fn lattice_d1_side5_first_gap() {
    let g = graphs::cubic_lattice::<f64>(1, 5).unwrap();
    let spectrum = spectral::eig_sym(&graphs::laplacian(&g)).unwrap();
    assert_relative_eq!(
        spectrum.eigenvalues[1],
        1.3819660112501051,
        max_relative = 1e-12
    );
}

#[test]
fn paley13_three_levels() {
    let g = graphs::paley::<f64>(13).unwrap();
    let (_, profile) = laplacian_profile(&g, 0);
    assert_eq!(profile.num_levels(), 3);
    let f2 = 3.25f64.sqrt();
    assert!(profile.levels[0].value.abs() < 1e-9);
    assert_relative_eq!(profile.levels[1].value, 6.5 - f2, max_relative = 1e-10);
    assert_relative_eq!(profile.levels[2].value, 6.5 + f2, max_relative = 1e-10);
    assert_eq!(profile.levels[1].mult, 6);
    assert_eq!(profile.levels[2].mult, 6);
}

#[test]
fn latin_square_has_three_levels() {
    let g = graphs::latin_square_graph::<f64>(4, 3).unwrap();
    let (_, profile) = laplacian_profile(&g, 0);
    assert_eq!(profile.num_levels(), 3);
}

#[test]
fn shifted_adjacency_complete_graph() {
    // C(n): a0 = n - 1, operator (n-1) I - A has spectrum {0, n, ..., n}
    let n = 7;
    let g = graphs::complete_graph::<f64>(n).unwrap();
    let op = graphs::shifted_adjacency(&g).unwrap();
    assert_eq!(op.kind, OperatorKind::ShiftedAdjacency);
    assert_relative_eq!(op.shift_applied, -(n as f64 - 1.0), max_relative = 1e-10);
    let spectrum = spectral::eig_sym(&op).unwrap();
    assert!(spectrum.eigenvalues[0].abs() < 1e-9);
    for z in 1..n {
        assert_relative_eq!(spectrum.eigenvalues[z], n as f64, max_relative = 1e-10);
    }

    let empty = qwsearch::Graph64::new(3, vec![]).unwrap();
    let zop = graphs::shifted_adjacency(&empty).unwrap();
    assert!(zop.matrix.iter().all(|&x| x.abs() < 1e-15));
}

#[test]
fn ground_shift_bookkeeping() {
    // SC with w = 2 has ground energy 1 - w = -1
    let op = graphs::simplex_complete_operator::<f64>(6, 2.0).unwrap();
    let spectrum = spectral::eig_sym(&op).unwrap();
    assert_relative_eq!(spectrum.eigenvalues[0], -1.0, max_relative = 1e-9);
    let shifted = spectrum.ground_shift();
    assert_eq!(shifted.eigenvalues[0], 0.0);
    assert_relative_eq!(shifted.shift_applied, -1.0, max_relative = 1e-9);
    // already-zero ground energy: identity
    let again = shifted.ground_shift();
    assert_eq!(again.eigenvalues[0], 0.0);
    assert_relative_eq!(again.shift_applied, shifted.shift_applied, epsilon = 1e-15);
}

#[test]
fn sc_uniform_vector_eigenvalue() {
    // uniform vector has eigenvalue 1 - w (row sums)
    for w in [1.0f64, 2.5] {
        let op = graphs::simplex_complete_operator::<f64>(5, w).unwrap();
        let n = op.n;
        let u = 1.0 / (n as f64).sqrt();
        for i in 0..n {
            let row_action: f64 = (0..n).map(|j| op.matrix[(i, j)] * u).sum();
            assert!(
                (row_action - (1.0 - w) * u).abs() < 1e-12,
                "w={w} row {i}"
            );
        }
    }
}

#[test]
fn disjoint_union_kernel_is_per_component_uniform() {
    // eigenvalue-0 multiplicity = number of components; the kernel projector
    // equals the sum of per-component uniform projectors (basis-invariant
    // form of "eigenvectors supported on one component each")
    let a = graphs::complete_graph::<f64>(4).unwrap();
    let b = graphs::complete_graph::<f64>(9).unwrap();
    let u = graphs::disjoint_union(&[a, b]).unwrap();
    let spectrum = spectral::eig_sym(&graphs::laplacian(&u)).unwrap();
    let zero_mult = spectrum.eigenvalues.iter().filter(|e| e.abs() < 1e-9).count();
    assert_eq!(zero_mult, 2);
    let n = 13;
    for i in 0..n {
        for j in 0..n {
            let have: f64 = (0..2)
                .map(|z| spectrum.eigenvectors[(i, z)] * spectrum.eigenvectors[(j, z)])
                .sum();
            let want = if i < 4 && j < 4 {
                0.25
            } else if i >= 4 && j >= 4 {
                1.0 / 9.0
            } else {
                0.0
            };
            assert!((have - want).abs() < 1e-9, "P[{i}][{j}] = {have}");
        }
    }
}

#[test]
fn complete_graph_analysis_critical() {
    // alpha = 1/sqrt(N), M_r = (1 - 1/N)/N^r, peak = sqrt(1 - 1/N)
    let n = 64;
    let g = graphs::complete_graph::<f64>(n).unwrap();
    let (spectrum, profile) = laplacian_profile(&g, 0);
    let analysis = analyze(&spectrum, &profile, 1, GammaChoice::Critical).unwrap();
    assert_relative_eq!(analysis.alpha, 0.125, max_relative = 1e-12);
    assert_relative_eq!(analysis.m1, 63.0 / 4096.0, max_relative = 1e-12);
    assert_relative_eq!(analysis.m2, 63.0 / 262144.0, max_relative = 1e-12);
    assert_relative_eq!(analysis.gamma, analysis.gamma_c, epsilon = 0.0);
    assert_eq!(analysis.delta, 0.0);
    assert_relative_eq!(analysis.eta, std::f64::consts::FRAC_PI_4, max_relative = 1e-14);
    assert_relative_eq!(analysis.time, 12.665711058386405, max_relative = 1e-10);
    assert_relative_eq!(
        analysis.peak_overlap,
        (63.0f64 / 64.0).sqrt(),
        max_relative = 1e-12
    );
    // closed critical-point forms
    assert_relative_eq!(
        analysis.time,
        std::f64::consts::PI * analysis.m2.sqrt() / (2.0 * analysis.m1 * analysis.alpha),
        max_relative = 1e-10
    );
    assert_relative_eq!(
        analysis.peak_overlap,
        analysis.m1 / analysis.m2.sqrt(),
        max_relative = 1e-10
    );
    // lambda pair
    let lam = analysis.alpha * analysis.m1 / analysis.m2.sqrt();
    assert_relative_eq!(analysis.lambda_plus, lam, max_relative = 1e-12);
    assert_relative_eq!(analysis.lambda_minus, -lam, max_relative = 1e-12);
    // sigma is the uniform state for a connected graph at m = 1
    for &s in &analysis.sigma {
        assert_relative_eq!(s, 0.125, max_relative = 1e-9);
    }
}

#[test]
fn general_gamma_path_at_critical_rate_matches() {
    let g = graphs::complete_graph::<f64>(64).unwrap();
    let (spectrum, profile) = laplacian_profile(&g, 0);
    let crit = analyze(&spectrum, &profile, 1, GammaChoice::Critical).unwrap();
    let fixed = analyze(&spectrum, &profile, 1, GammaChoice::Fixed(crit.m1)).unwrap();
    assert_relative_eq!(crit.lambda_plus, fixed.lambda_plus, max_relative = 1e-10);
    assert_relative_eq!(crit.lambda_minus, fixed.lambda_minus, max_relative = 1e-10);
    assert_relative_eq!(crit.time, fixed.time, max_relative = 1e-10);
    assert_relative_eq!(crit.peak_overlap, fixed.peak_overlap, max_relative = 1e-10);
    assert_eq!(fixed.delta, 0.0);
}

#[test]
fn jc64_analysis_reference_values() {
    // frozen from an independent LAPACK pipeline (non-bridge target)
    let n = 64;
    let g = graphs::joined_complete::<f64>(n, 0, n / 2).unwrap();
    let (spectrum, profile) = laplacian_profile(&g, 1);
    let analysis = analyze(&spectrum, &profile, 2, GammaChoice::Critical).unwrap();
    assert_relative_eq!(analysis.alpha, 0.17693515619592659, max_relative = 1e-9);
    assert_relative_eq!(analysis.m1, 0.030270885330470166, max_relative = 1e-8);
    assert_relative_eq!(analysis.m2, 0.00094594157796868946, max_relative = 1e-8);
    assert_relative_eq!(analysis.time, 9.0201296061529845, max_relative = 1e-8);
    // sigma concentrates on the target's half
    let s_amp = (2.0 / n as f64).sqrt();
    for i in 0..n / 2 {
        assert!((analysis.sigma[i] - s_amp).abs() < 0.05, "sigma[{i}]");
    }
    for i in n / 2..n {
        assert!(analysis.sigma[i].abs() < 0.05, "sigma[{i}]");
    }
}

#[test]
fn select_m_complete_graphs() {
    // chi for C(N) at m = 1 is sqrt(N - 1)
    let g = graphs::complete_graph::<f64>(64).unwrap();
    let (_, profile) = laplacian_profile(&g, 0);
    let sel = select_m(&profile, 7.0).unwrap();
    assert_eq!(sel.m, 1);
    assert_relative_eq!(sel.chi_eff, 63.0f64.sqrt(), max_relative = 1e-9);
    // sqrt(63) = 7.94 < 10: the default margin rejects C(64), reporting the
    // best candidate
    match select_m(&profile, 10.0) {
        Err(AnalysisError::NoValidM {
            best_m, best_chi, ..
        }) => {
            assert_eq!(best_m, 1);
            assert!((best_chi - 63.0f64.sqrt()).abs() < 1e-9);
        }
        other => panic!("expected NoValidM, got {other:?}"),
    }
    let g256 = graphs::complete_graph::<f64>(256).unwrap();
    let (_, profile256) = laplacian_profile(&g256, 0);
    let sel256 = select_m(&profile256, 10.0).unwrap();
    assert_eq!(sel256.m, 1);
    assert_relative_eq!(sel256.chi_eff, 255.0f64.sqrt(), max_relative = 1e-9);
}

#[test]
fn select_m_joined_complete_needs_two_levels() {
    let g = graphs::joined_complete::<f64>(64, 0, 32).unwrap();
    let (_, profile) = laplacian_profile(&g, 1);
    let sel = select_m(&profile, 3.0).unwrap();
    assert_eq!(sel.m, 2, "m = 1 fails: E_1 = 4/N sits far below alpha/sqrt(M2)");
    assert!(
        sel.chi_eff > 5.4 && sel.chi_eff < 5.8,
        "chi = {}",
        sel.chi_eff
    );
    let rejected_m1 = &sel.rejected[0];
    assert_eq!(rejected_m1.m, 1);
    assert!(rejected_m1.chi_eff.unwrap() < 1.1);
    // at N = 256 the margin clears the default threshold
    let g256 = graphs::joined_complete::<f64>(256, 0, 128).unwrap();
    let (_, p256) = laplacian_profile(&g256, 1);
    let sel256 = select_m(&p256, 10.0).unwrap();
    assert_eq!(sel256.m, 2);
    assert!(sel256.chi_eff > 11.0);
}

#[test]
fn select_m_sc_accepts_m1_and_stage2_boundary() {
    let op = graphs::simplex_complete_operator::<f64>(25, 1.0).unwrap();
    let spectrum = spectral::eig_sym(&op).unwrap().ground_shift();
    let profile = spectral::target_overlaps(&spectrum, 0, TOL).unwrap();
    let sel = select_m(&profile, 3.0).unwrap();
    assert_eq!(sel.m, 1);
    assert!(sel.chi_eff > 4.5 && sel.chi_eff < 5.5, "chi = {}", sel.chi_eff);
    // forcing the boundary at cumulative multiplicity R + 1 also clears 3
    let mut cum = 0;
    let mut m2 = 0;
    for (idx, level) in profile.levels.iter().enumerate() {
        cum += level.mult;
        if cum >= 26 {
            m2 = idx + 1;
            break;
        }
    }
    let analysis = analyze(&spectrum, &profile, m2, GammaChoice::Critical).unwrap();
    assert!(analysis.chi_eff >= 3.0, "chi = {}", analysis.chi_eff);
}

#[test]
fn select_m_disconnected_union_spans_the_kernel() {
    // two complete graphs, target in component 0: the selected low subspace
    // is the two-dimensional kernel (one state per component) and sigma is
    // the uniform vector on component 0. Whether the two zero eigenvalues
    // land in one mult-2 level or two split levels depends on solver noise,
    // so the assertion is on the cumulative multiplicity below the gap.
    let a = graphs::complete_graph::<f64>(16).unwrap();
    let u = graphs::disjoint_union(&[a.clone(), a]).unwrap();
    let op = graphs::laplacian(&u);
    let spectrum = spectral::eig_sym(&op).unwrap();
    let profile = spectral::target_overlaps(&spectrum, 3, 0.0).unwrap();
    let sel = select_m(&profile, 3.0).unwrap();
    let low_dim: usize = profile.levels[..sel.m].iter().map(|l| l.mult).sum();
    assert_eq!(low_dim, 2, "low subspace must span both component kernels");
    assert_relative_eq!(sel.chi_eff, 15.0f64.sqrt(), max_relative = 1e-9);
    let analysis = analyze(&spectrum, &profile, sel.m, GammaChoice::Critical).unwrap();
    assert_relative_eq!(analysis.alpha, 0.25, max_relative = 1e-9);
    for i in 0..16 {
        assert!((analysis.sigma[i] - 0.25).abs() < 1e-9, "sigma[{i}]");
    }
    for i in 16..32 {
        assert!(analysis.sigma[i].abs() < 1e-9, "sigma[{i}]");
    }
}

#[test]
fn analyze_rejects_bad_inputs() {
    let g = graphs::complete_graph::<f64>(8).unwrap();
    let (spectrum, profile) = laplacian_profile(&g, 0);
    assert!(matches!(
        analyze(&spectrum, &profile, 0, GammaChoice::<f64>::Critical),
        Err(AnalysisError::InvalidM { .. })
    ));
    assert!(matches!(
        analyze(&spectrum, &profile, 2, GammaChoice::<f64>::Critical),
        Err(AnalysisError::InvalidM { .. })
    ));
    assert!(matches!(
        analyze(&spectrum, &profile, 1, GammaChoice::Fixed(-0.5)),
        Err(AnalysisError::NonPositiveGamma(_))
    ));
    // a nonpositive eigenvalue above the gap leaves the moments undefined
    let bad = qwsearch::Spectrum64 {
        eigenvalues: ndarray::array![-0.5, 0.0, 1.0],
        eigenvectors: ndarray::Array2::eye(3),
        shift_applied: 0.0,
    };
    let bad_profile = spectral::target_overlaps(&bad, 1, 0.0).unwrap();
    assert!(matches!(
        analyze(&bad, &bad_profile, 1, GammaChoice::<f64>::Critical),
        Err(AnalysisError::MomentsUndefined { .. })
    ));
}

#[test]
fn gamma_band_complete_64() {
    let g = graphs::complete_graph::<f64>(64).unwrap();
    let (spectrum, profile) = laplacian_profile(&g, 0);
    let analysis = analyze(&spectrum, &profile, 1, GammaChoice::Critical).unwrap();
    let band = gamma_sensitivity_band(&analysis);
    assert_relative_eq!(band, 0.0038756122720672716, max_relative = 1e-10);
    // band shrinks with N
    let mut prev = band;
    for n in [16usize, 64, 256] {
        let gn = graphs::complete_graph::<f64>(n).unwrap();
        let (s, p) = laplacian_profile(&gn, 0);
        let a = analyze(&s, &p, 1, GammaChoice::Critical).unwrap();
        let b = gamma_sensitivity_band(&a);
        if n > 16 {
            assert!(b < prev, "band not decreasing at N = {n}");
        }
        prev = b;
    }
    // detuning by 10 bands collapses the predicted overlap below half the
    // critical value
    let detuned = analyze(
        &spectrum,
        &profile,
        1,
        GammaChoice::Fixed(analysis.gamma_c + 10.0 * band),
    )
    .unwrap();
    assert!(detuned.peak_overlap < 0.5 * analysis.peak_overlap);
}

#[test]
fn closed_moments_match_numeric_spectra() {
    // hypercube n = 10 at 1e-10 (reference values from the exact binomial sum)
    let m1 = criterion::closed_form_moments::<f64>(MomentFamily::Hypercube { nbits: 10 }, 1)
        .unwrap();
    let m2 = criterion::closed_form_moments::<f64>(MomentFamily::Hypercube { nbits: 10 }, 2)
        .unwrap();
    assert_relative_eq!(m1, 0.11444285559275794, max_relative = 1e-12);
    assert_relative_eq!(m2, 0.016334772472809293, max_relative = 1e-12);
    let g = graphs::hypercube::<f64>(10).unwrap();
    let (_, profile) = laplacian_profile(&g, 0);
    let (num1, num2) = profile_moments(&profile, 1);
    assert_relative_eq!(m1, num1, max_relative = 1e-10);
    assert_relative_eq!(m2, num2, max_relative = 1e-10);

    // lattice
    for (d, side) in [(2usize, 5usize), (3, 5)] {
        let lm1 =
            criterion::closed_form_moments::<f64>(MomentFamily::Lattice { d, side }, 1).unwrap();
        let lm2 =
            criterion::closed_form_moments::<f64>(MomentFamily::Lattice { d, side }, 2).unwrap();
        let lg = graphs::cubic_lattice::<f64>(d, side).unwrap();
        let (_, lp) = laplacian_profile(&lg, 0);
        let (n1, n2) = profile_moments(&lp, 1);
        assert_relative_eq!(lm1, n1, max_relative = 1e-8);
        assert_relative_eq!(lm2, n2, max_relative = 1e-8);
    }

    // strongly regular: Paley(13) and Latin square (4, 3)
    let pm1 = criterion::closed_form_moments::<f64>(
        MomentFamily::StronglyRegular {
            n: 13,
            k: 6,
            lambda: 2,
            mu: 3,
        },
        1,
    )
    .unwrap();
    let pg = graphs::paley::<f64>(13).unwrap();
    let (_, pp) = laplacian_profile(&pg, 0);
    let (pn1, _) = profile_moments(&pp, 1);
    assert_relative_eq!(pm1, pn1, max_relative = 1e-8);

    let lm2 = criterion::closed_form_moments::<f64>(
        MomentFamily::StronglyRegular {
            n: 16,
            k: 9,
            lambda: 4,
            mu: 6,
        },
        2,
    )
    .unwrap();
    let lg = graphs::latin_square_graph::<f64>(4, 3).unwrap();
    let (_, lp) = laplacian_profile(&lg, 0);
    let (_, ln2) = profile_moments(&lp, 1);
    assert_relative_eq!(lm2, ln2, max_relative = 1e-8);

    // SC: perturbative closed form, O(w/R) accuracy
    for w in [1.0f64, 3.0] {
        let r = 25;
        let op = graphs::simplex_complete_operator::<f64>(r, w).unwrap();
        let spectrum = spectral::eig_sym(&op).unwrap().ground_shift();
        let profile = spectral::target_overlaps(&spectrum, 0, TOL).unwrap();
        let (n1, n2) = profile_moments(&profile, 1);
        let c1 = criterion::closed_form_moments(
            MomentFamily::SimplexComplete { blocks: r, w },
            1,
        )
        .unwrap();
        let c2 = criterion::closed_form_moments(
            MomentFamily::SimplexComplete { blocks: r, w },
            2,
        )
        .unwrap();
        let tol = 5.0 * w / r as f64;
        assert!((c1 - n1).abs() / n1 <= tol, "w={w}: M1 {c1} vs {n1}");
        assert!((c2 - n2).abs() / n2 <= tol, "w={w}: M2 {c2} vs {n2}");
    }
}

#[test]
fn lattice_closed_moments_frozen_values() {
    for (d, side, r, want) in [
        (3usize, 7usize, 1u32, 0.2206296459962272),
        (3, 7, 2, 0.084307762475272566),
        (5, 3, 1, 0.11394604481024206),
        (5, 3, 2, 0.016080881979373088),
        (4, 5, 1, 0.14963547049441761),
        (4, 5, 2, 0.030643386857749078),
        (3, 21, 2, 0.23418607460735771),
    ] {
        let have =
            criterion::closed_form_moments::<f64>(MomentFamily::Lattice { d, side }, r).unwrap();
        assert_relative_eq!(have, want, max_relative = 1e-12);
    }
}

#[test]
fn eigen_condition_residuals() {
    let n = 64;
    let g = graphs::complete_graph::<f64>(n).unwrap();
    let (spectrum, profile) = laplacian_profile(&g, 0);
    let analysis = analyze(&spectrum, &profile, 1, GammaChoice::Critical).unwrap();
    let gamma = analysis.gamma;

    // exact eigenvalues of H satisfy the condition exactly
    let h = evolution::build_hamiltonian(&graphs::laplacian(&g), gamma, 0).unwrap();
    let (h_evals, _) = spectral::eigh(h.view()).unwrap();
    let lam_plus_exact = h_evals
        .iter()
        .copied()
        .filter(|&e| e > 0.0)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .unwrap();
    let lam_minus_exact = h_evals
        .iter()
        .copied()
        .filter(|&e| e < 0.0)
        .max_by(|a, b| a.partial_cmp(b).unwrap())
        .unwrap();
    for lam in [lam_plus_exact, lam_minus_exact] {
        let resid = verify_eigen_condition(&profile, gamma, lam).unwrap();
        assert!(resid <= 1e-6, "residual {resid} at lambda = {lam}");
    }

    // predicted pair: residual bounded by the assumption margin
    for lam in [analysis.lambda_plus, analysis.lambda_minus] {
        let resid = verify_eigen_condition(&profile, gamma, lam).unwrap();
        assert!(
            resid <= 1.0 / analysis.chi_eff,
            "residual {resid} vs 1/chi = {}",
            1.0 / analysis.chi_eff
        );
    }

    // a value far from any eigenvalue of H leaves an O(1) residual
    let resid = verify_eigen_condition(&profile, gamma, 0.5).unwrap();
    assert!(resid > 0.1, "expected O(1) residual, got {resid}");

    // pole proximity is flagged
    assert!(verify_eigen_condition(&profile, gamma, 0.0).is_err());
}

#[test]
fn reconstructed_lambda_states_match_numeric_eigenvectors() {
    let n = 256;
    let g = graphs::complete_graph::<f64>(n).unwrap();
    let (spectrum, profile) = laplacian_profile(&g, 0);
    let analysis = analyze(&spectrum, &profile, 1, GammaChoice::Critical).unwrap();
    let states =
        evolution::reconstruct_lambda_states(&spectrum, &profile, &analysis).unwrap();

    let h = evolution::build_hamiltonian(&graphs::laplacian(&g), analysis.gamma, 0).unwrap();
    let (h_evals, h_vecs) = spectral::eigh(h.view()).unwrap();
    let chi = analysis.chi_eff;
    for (lam, state) in [
        (analysis.lambda_plus, &states.plus),
        (analysis.lambda_minus, &states.minus),
    ] {
        let z = (0..n)
            .min_by(|&a, &b| {
                (h_evals[a] - lam)
                    .abs()
                    .partial_cmp(&(h_evals[b] - lam).abs())
                    .unwrap()
            })
            .unwrap();
        let overlap: f64 = (0..n).map(|i| state[i] * h_vecs[(i, z)]).sum();
        assert!(
            overlap.abs() >= 1.0 - 5.0 / chi,
            "overlap {} vs bound {}",
            overlap.abs(),
            1.0 - 5.0 / chi
        );
    }
    // <sigma|lambda+> = -cos(eta), <sigma|lambda-> = +sin(eta), here both
    // 1/sqrt(2) at the critical rate
    let half = std::f64::consts::FRAC_1_SQRT_2;
    assert!((states.sigma_overlap_plus + half).abs() < 5.0 / chi);
    assert!((states.sigma_overlap_minus - half).abs() < 5.0 / chi);
    // |<t|lambda+>| = |<t|lambda->| at the critical rate up to O(1/chi)
    assert!(
        (states.t_overlap_plus.abs() - states.t_overlap_minus.abs()).abs()
            < 5.0 / chi * states.t_overlap_plus.abs()
    );
}

#[test]
fn search_analysis_serializes_flat() {
    let g = graphs::complete_graph::<f64>(8).unwrap();
    let (spectrum, profile) = laplacian_profile(&g, 0);
    let analysis = analyze(&spectrum, &profile, 1, GammaChoice::Critical).unwrap();
    let json = serde_json::to_value(&analysis).unwrap();
    for key in [
        "m",
        "alpha",
        "M1",
        "M2",
        "gamma",
        "gamma_c",
        "delta",
        "eta",
        "lambda_plus",
        "lambda_minus",
        "T",
        "peak_overlap",
        "chi_eff",
        "sigma",
    ] {
        assert!(json.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(json["sigma"].as_array().unwrap().len(), 8);
}

#[test]
fn f32_pipeline_smoke() {
    let g = graphs::complete_graph::<f32>(16).unwrap();
    let op = graphs::laplacian(&g);
    let spectrum = spectral::eig_sym(&op).unwrap();
    let profile = spectral::target_overlaps(&spectrum, 0, 1e-4f32).unwrap();
    let analysis = analyze(&spectrum, &profile, 1, GammaChoice::<f32>::Critical).unwrap();
    assert!((analysis.alpha - 0.25).abs() < 1e-5);
    let trace = evolution::success_curve(
        &op,
        1.0 / 16.0f32,
        0,
        &uniform_state::<f32>(16),
        2.0 * analysis.time,
        501,
    )
    .unwrap();
    assert!(trace.refined_peak_prob > 0.99);
}
