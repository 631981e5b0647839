#![allow(dead_code)]

use nalgebra::{Matrix2, Matrix4, Vector2, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use spdc_qkd::{BlochVector, DensityMatrix};

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Ginibre-distributed state `GG† / Tr(GG†)`; full rank with probability one.
pub fn random_state<R: Rng>(rng: &mut R) -> DensityMatrix {
    let g =
        Matrix4::<Complex64>::from_fn(|_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    DensityMatrix::from_unnormalized(g * g.adjoint()).unwrap()
}

/// Random pure state.
pub fn random_pure<R: Rng>(rng: &mut R) -> DensityMatrix {
    let v = nalgebra::Vector4::<Complex64>::from_fn(|_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    DensityMatrix::from_pure(&(v / c(v.norm()))).unwrap()
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::<f64>::from_fn(|_, _| rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

pub fn random_bloch<R: Rng>(rng: &mut R) -> BlochVector {
    let v = random_unit(rng);
    BlochVector::new(v[0], v[1], v[2])
}

/// Jones matrix of a linear retarder with its fast axis at `theta` from the
/// horizontal and retardance `delta`: `R(θ) diag(1, e^{iδ}) R(−θ)`.
pub fn retarder(theta: f64, delta: f64) -> Matrix2<Complex64> {
    let (s, co) = theta.sin_cos();
    let rot = |s: f64| Matrix2::new(c(co), c(-s), c(s), c(co));
    rot(s) * Matrix2::new(c(1.0), c(0.0), c(0.0), Complex64::from_polar(1.0, delta)) * rot(-s)
}

/// Projector realized by HWP(θ_H), then QWP(θ_Q), then the horizontal port
/// of a polarizing beam splitter: `M† |H><H| M` with `M = QWP · HWP`.
pub fn waveplate_projector(theta_q: f64, theta_h: f64) -> Matrix2<Complex64> {
    let m = retarder(theta_q, -std::f64::consts::FRAC_PI_2) * retarder(theta_h, std::f64::consts::PI);
    let psi = m.adjoint() * Vector2::new(c(1.0), c(0.0));
    psi * psi.adjoint()
}

/// `(1 + x·σ)/2`, written out.
pub fn bloch_projector(x: &[f64; 3]) -> Matrix2<Complex64> {
    Matrix2::new(
        c((1.0 + x[2]) / 2.0),
        Complex64::new(x[0], -x[1]) / 2.0,
        Complex64::new(x[0], x[1]) / 2.0,
        c((1.0 - x[2]) / 2.0),
    )
}

/// `⟨(a·σ) ⊗ (b·σ)⟩` from explicit operators.
pub fn correlator(rho: &DensityMatrix, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let op = |v: &Vector3<f64>| {
        Matrix2::new(
            c(v[2]),
            Complex64::new(v[0], -v[1]),
            Complex64::new(v[0], v[1]),
            c(-v[2]),
        )
    };
    rho.expectation(&op(a).kronecker(&op(b)))
}

/// Brute-force CHSH maximum: alternating exact maximization of the four
/// directions from many random starts. Each half-step maximizes a linear
/// function of one unit vector, whose gradient is read off explicit
/// correlators.
pub fn brute_force_chsh<R: Rng>(rho: &DensityMatrix, rng: &mut R, starts: usize) -> f64 {
    let basis = [Vector3::x(), Vector3::y(), Vector3::z()];
    // gradient of a ↦ ⟨(a·σ) ⊗ (b·σ)⟩
    let grad_a = |b: &Vector3<f64>| Vector3::from_fn(|i, _| correlator(rho, &basis[i], b));
    let grad_b = |a: &Vector3<f64>| Vector3::from_fn(|i, _| correlator(rho, a, &basis[i]));
    let dir = |v: Vector3<f64>, fallback: Vector3<f64>| if v.norm() > 1e-14 { v.normalize() } else { fallback };
    let mut best = f64::NEG_INFINITY;
    for _ in 0..starts {
        let (mut a1, mut a2) = (random_unit(rng), random_unit(rng));
        let (mut b1, mut b2) = (random_unit(rng), random_unit(rng));
        let mut s = f64::NEG_INFINITY;
        for _ in 0..500 {
            a1 = dir(grad_a(&(b1 + b2)), a1);
            a2 = dir(grad_a(&(b1 - b2)), a2);
            b1 = dir(grad_b(&(a1 + a2)), b1);
            b2 = dir(grad_b(&(a1 - a2)), b2);
            let next = correlator(rho, &a1, &(b1 + b2)) + correlator(rho, &a2, &(b1 - b2));
            if (next - s).abs() < 1e-13 {
                s = next;
                break;
            }
            s = next;
        }
        best = best.max(s);
    }
    best
}

/// Brute-force minimal QBER `(1 − max ⟨(q₁·σ) ⊗ (q₂·σ)⟩)/2`.
pub fn brute_force_qber<R: Rng>(rho: &DensityMatrix, rng: &mut R, starts: usize) -> f64 {
    let basis = [Vector3::x(), Vector3::y(), Vector3::z()];
    let mut best = f64::NEG_INFINITY;
    for _ in 0..starts {
        let mut q1 = random_unit(rng);
        let mut q2 = random_unit(rng);
        let mut e = f64::NEG_INFINITY;
        for _ in 0..500 {
            let g1 = Vector3::from_fn(|i, _| correlator(rho, &basis[i], &q2));
            if g1.norm() > 1e-14 {
                q1 = g1.normalize();
            }
            let g2 = Vector3::from_fn(|i, _| correlator(rho, &q1, &basis[i]));
            if g2.norm() > 1e-14 {
                q2 = g2.normalize();
            }
            let next = correlator(rho, &q1, &q2);
            if (next - e).abs() < 1e-13 {
                e = next;
                break;
            }
            e = next;
        }
        best = best.max(e);
    }
    (1.0 - best) / 2.0
}

/// Truncated Poisson sum `Σ_k P(k) (1 − A^k − B^k + D^k)` for the
/// coincidence probability, where `A`, `B` and `D` are the single-pair
/// probabilities of no click at Alice, no click at Bob, and no
/// click at all.
pub fn coincidence_series(p10: f64, p01: f64, p00: f64, n_bar: f64) -> f64 {
    let a = p01 + p00;
    let b = p10 + p00;
    let d = p00;
    let mut weight = (-n_bar).exp();
    let mut sum = 0.0;
    let mut k = 0i32;
    loop {
        sum += weight * (1.0 - a.powi(k) - b.powi(k) + d.powi(k));
        k += 1;
        weight *= n_bar / k as f64;
        if k as f64 > n_bar && weight < 1e-18 {
            break;
        }
    }
    sum
}
