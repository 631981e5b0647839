mod common;

use common::random_state;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spdc_qkd::metrics::{chsh_max, TSIRELSON};
use spdc_qkd::spdc::{coincidence_rate_exact, kappa_exact, SourceParams};
use spdc_qkd::state::{bell_state, fidelity, werner_mix, BellState};
use spdc_qkd::tomography::{
    born_frequencies, coincidence_rate_from_counts, fit_kappa, mle_reconstruct, monte_carlo_uncertainty,
    simulate_counts, synthesize_frequencies, MleOptions, TomographyDataset, TomographySettings,
};

#[test]
fn noiseless_round_trip_on_random_states() {
    let settings = TomographySettings::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..50 {
        let rho = random_state(&mut rng);
        let r = mle_reconstruct(&born_frequencies(&rho, &settings), &settings, &MleOptions::default()).unwrap();
        let f = fidelity(&r.rho, &rho);
        assert!(f >= 0.999, "state {i}: fidelity {f}, {} iterations", r.iterations);
    }
}

#[test]
fn pure_state_round_trip() {
    let settings = TomographySettings::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..5 {
        let rho = common::random_pure(&mut rng);
        let r = mle_reconstruct(&born_frequencies(&rho, &settings), &settings, &MleOptions::default()).unwrap();
        assert!(fidelity(&r.rho, &rho) >= 0.999);
    }
}

#[test]
fn werner_weight_recovered_through_chsh() {
    let settings = TomographySettings::standard();
    for kappa in [0.0, 0.02, 0.1, 0.3] {
        let w = werner_mix(&bell_state(BellState::PsiPlus), kappa).unwrap();
        let r = mle_reconstruct(&born_frequencies(&w, &settings), &settings, &MleOptions::default()).unwrap();
        let recovered = 1.0 - chsh_max(&r.rho) / TSIRELSON;
        assert!((recovered - kappa).abs() < 1e-4, "κ = {kappa}: {recovered}");
    }
}

#[test]
fn fit_kappa_recovers_werner_grid() {
    let settings = TomographySettings::standard();
    let phi = bell_state(BellState::PhiPlus);
    for k in 0..=10 {
        let kappa = 0.05 * k as f64;
        let f = born_frequencies(&werner_mix(&phi, kappa).unwrap(), &settings);
        let fit = fit_kappa(&f, &settings, &phi).unwrap();
        assert!((fit - kappa).abs() < 1e-6, "{kappa}: {fit}");
    }
}

#[test]
fn fit_kappa_matches_closed_form_on_model_frequencies() {
    let settings = TomographySettings::standard();
    for kind in [BellState::PhiPlus, BellState::PsiMinus] {
        let rho_b = bell_state(kind);
        for n in [0.01, 0.0737, 0.5] {
            for ea in [0.1, 0.5, 1.0] {
                for eb in [0.2, 0.7, 1.0] {
                    let p = SourceParams::new(n, ea, eb).unwrap();
                    let fit = fit_kappa(&synthesize_frequencies(&rho_b, &p, &settings), &settings, &rho_b).unwrap();
                    let exact = kappa_exact(&p).unwrap();
                    assert!((fit - exact).abs() < 1e-6, "{kind} {n} {ea} {eb}: {fit} vs {exact}");
                }
            }
        }
    }
}

#[test]
fn simulated_counts_reproduce_coincidence_rate() {
    let phi = bell_state(BellState::PhiPlus);
    let p = SourceParams::new(1e-3, 0.3, 0.4).unwrap();
    let (tau, duration) = (1e-9, 0.01);
    let n_win = duration / tau;
    let expected = coincidence_rate_exact(&p);
    // the average of 9 quadruple sums, each Poisson with mean N_win r_C
    let se = (expected * n_win / 9.0).sqrt() / n_win;
    // separate projections count multi-pair windows twice; that excess must
    // stay well inside the statistical error for the round trip to hold
    let c = synthesize_frequencies(&phi, &p, &TomographySettings::standard());
    let quadruple_mean = c.iter().sum::<f64>() / 9.0;
    assert!(
        quadruple_mean >= expected && quadruple_mean - expected < se,
        "{quadruple_mean} vs {expected}"
    );
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = simulate_counts(&phi, &p, tau, duration, &mut rng).unwrap();
        let r_c = coincidence_rate_from_counts(&ds).unwrap();
        assert!((r_c - expected).abs() < 3.0 * se, "{r_c} vs {expected} ± {se}");
    }
}

fn werner_counts(kappa: f64, scale: f64) -> TomographyDataset {
    let settings = TomographySettings::standard();
    let w = werner_mix(&bell_state(BellState::PhiPlus), kappa).unwrap();
    let counts = born_frequencies(&w, &settings).map(|p| (p * scale).round() as u64);
    TomographyDataset::new(counts, 1e-9, 1.0).unwrap()
}

#[test]
fn monte_carlo_is_reproducible() {
    let ds = werner_counts(0.05, 2000.0);
    let a = monte_carlo_uncertainty(&ds, 50, 2024).unwrap();
    let b = monte_carlo_uncertainty(&ds, 50, 2024).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    assert_eq!(a.samples, 50);
    assert_eq!(a.seed, 2024);
}

#[test]
fn monte_carlo_std_scales_with_counts() {
    // far enough from the boundary of the state space that resampled
    // reconstructions stay full rank and the spread is Gaussian
    let small = monte_carlo_uncertainty(&werner_counts(0.2, 10_000.0), 200, 1).unwrap();
    let large = monte_carlo_uncertainty(&werner_counts(0.2, 1_000_000.0), 200, 1).unwrap();
    let ratio = small.s.std / large.s.std;
    assert!((10.0 / 1.5..=10.0 * 1.5).contains(&ratio), "ratio {ratio}");
    assert!(small.s.std > 0.0 && small.q.std > 0.0 && small.r_c.std > 0.0);
}

#[test]
fn zero_counts_stay_zero_under_resampling() {
    let settings = TomographySettings::standard();
    let counts = born_frequencies(&bell_state(BellState::PhiPlus), &settings).map(|p| (p * 1000.0).round() as u64);
    assert!(counts.contains(&0));
    let ds = TomographyDataset::new(counts, 1e-9, 1.0).unwrap();
    let r = monte_carlo_uncertainty(&ds, 30, 5).unwrap();
    assert!((r.s.mean - TSIRELSON).abs() < 0.05);
    assert!(r.s.std > 0.0);
}
