use spdc_qkd::optimize::{model_key_rate, optimize_gain, qd_threshold, NoiseModel};

const ETAS: [f64; 8] = [0.05, 0.1, 0.16, 0.2, 0.3, 0.5, 0.8, 1.0];

#[test]
fn optimum_beats_relative_neighbours() {
    for eta in ETAS {
        let g = optimize_gain(eta, eta).unwrap();
        for factor in [1.0 - 1e-3, 1.0 + 1e-3] {
            let r = model_key_rate(g.n_bar_opt * factor, eta, eta).unwrap();
            assert!(g.r_key_opt >= r, "eta {eta}: {} < {r}", g.r_key_opt);
        }
    }
}

#[test]
fn optimal_gain_depends_weakly_on_transmittance() {
    for eta in [1e-4, 1e-3, 0.01, 0.05, 0.3, 0.7, 1.0] {
        let n = optimize_gain(eta, eta).unwrap().n_bar_opt;
        assert!((n - 0.0737).abs() < 0.01, "eta {eta}: {n}");
    }
}

#[test]
fn asymmetric_transmittance_is_symmetric_in_arms() {
    let a = optimize_gain(0.2, 0.6).unwrap();
    let b = optimize_gain(0.6, 0.2).unwrap();
    assert!((a.n_bar_opt - b.n_bar_opt).abs() < 1e-6);
    assert!((a.r_key_opt - b.r_key_opt).abs() < 1e-15);
}

#[test]
fn threshold_decreases_with_concurrence() {
    for model in [NoiseModel::Dephasing, NoiseModel::White] {
        let t: Vec<f64> = (0..=20)
            .map(|k| 0.8 + 0.01 * k as f64)
            .map(|c| qd_threshold(c, model).unwrap().r_c_threshold)
            .collect();
        assert!(t.windows(2).all(|w| w[1] < w[0]), "{model}: {t:?}");
    }
}
