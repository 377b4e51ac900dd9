//! Independent reference computations and random generators shared by the
//! integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tritter_qcm::gaussian::CovarianceMatrix;
use tritter_qcm::optics::ChainConfig;
use tritter_qcm::propagator::{EnvModeSpec, SystemModeSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `q_out = Re U q − Im U p`, `p_out = Im U q + Re U p`, interleaved.
pub fn realify(u: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = u.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = u[(r / 2, c / 2)];
        match (r % 2, c % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

/// Haar-ish random 2 × 2 unitary.
pub fn random_unitary2(rng: &mut impl Rng) -> DMatrix<Complex64> {
    let tau = std::f64::consts::TAU;
    let (a, b, g) = (rng.random::<f64>() * tau, rng.random::<f64>() * tau, rng.random::<f64>() * tau);
    let th = rng.random::<f64>() * std::f64::consts::FRAC_PI_2;
    let e = |x: f64| Complex64::from_polar(1.0, x);
    DMatrix::from_row_slice(
        2,
        2,
        &[e(a + b) * th.cos(), e(a + g) * th.sin(), -e(a - g) * th.sin(), e(a - b) * th.cos()],
    )
}

/// Random physical two-mode covariance `S diag(ν) Sᵀ` with `S` from a
/// passive–squeeze–passive decomposition and `ν ≥ 1/2`.
pub fn random_two_mode_cov(rng: &mut impl Rng, max_squeeze: f64, max_thermal: f64) -> CovarianceMatrix {
    let o1 = realify(&random_unitary2(rng));
    let o2 = realify(&random_unitary2(rng));
    let (r1, r2) = (rng.random::<f64>() * max_squeeze, rng.random::<f64>() * max_squeeze);
    let sq = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![r1.exp(), (-r1).exp(), r2.exp(), (-r2).exp()]));
    let s = o2 * sq * o1;
    let nu1 = 0.5 + rng.random::<f64>() * max_thermal;
    let nu2 = 0.5 + rng.random::<f64>() * max_thermal;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![nu1, nu1, nu2, nu2]));
    let m = &s * d * s.transpose();
    CovarianceMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

/// Smallest symplectic eigenvalue of the partially transposed covariance,
/// read off as the smallest `|eig(i Ω σ̃)|` with `σ̃ = P σ P`, `P = diag(1, 1, 1, −1)`.
pub fn pt_symplectic_min(cov: &CovarianceMatrix) -> f64 {
    let m = cov.matrix();
    let sigma = Matrix4::from_fn(|i, j| m[(i, j)]);
    let p = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
    let pt = p * sigma * p;
    let omega = Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    );
    (omega * pt).complex_eigenvalues().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
}

pub fn log_negativity_oracle(cov: &CovarianceMatrix) -> f64 {
    (-(2.0 * pt_symplectic_min(cov)).ln()).max(0.0)
}

pub fn random_chain(rng: &mut impl Rng, collisions: usize) -> ChainConfig {
    let h = std::f64::consts::FRAC_PI_2;
    let tau = std::f64::consts::TAU;
    ChainConfig::new(
        rng.random::<f64>() * h,
        rng.random::<f64>() * h,
        rng.random::<f64>() * h,
        rng.random::<f64>() * tau - std::f64::consts::PI,
        rng.random::<f64>() * tau - std::f64::consts::PI,
        collisions,
    )
}

pub fn random_mode(rng: &mut impl Rng) -> SystemModeSpec {
    SystemModeSpec::new(
        rng.random::<f64>() * 3.0,
        rng.random::<f64>() * 1.5,
        rng.random::<f64>() * std::f64::consts::TAU,
        Complex64::new(rng.random::<f64>() * 10.0 - 5.0, rng.random::<f64>() * 10.0 - 5.0),
    )
}

pub fn random_env(rng: &mut impl Rng) -> EnvModeSpec {
    EnvModeSpec { alpha: Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) }
}

/// Two-mode squeezed vacuum with squeezing `r`.
pub fn tmsv(r: f64) -> CovarianceMatrix {
    let (c, s) = (0.5 * (2.0 * r).cosh(), 0.5 * (2.0 * r).sinh());
    CovarianceMatrix::new(DMatrix::from_row_slice(
        4,
        4,
        &[c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c],
    ))
    .unwrap()
}

/// Exact mean-field dynamics of the master equation, `d⟨a⟩/dt = G ⟨a⟩` with
/// `G = −iΦ − θ θᵀ/2`, integrated by eigen-free matrix exponentiation (Taylor with scaling and squaring).
pub fn me_mean_propagator(phi_a: f64, phi_b: f64, ta: f64, tb: f64) -> nalgebra::Matrix2<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let g = nalgebra::Matrix2::new(
        -i * phi_a - Complex64::from(0.5 * ta * ta),
        Complex64::from(-0.5 * ta * tb),
        Complex64::from(-0.5 * ta * tb),
        -i * phi_b - Complex64::from(0.5 * tb * tb),
    );
    let scale = 10;
    let a = g / Complex64::from(2f64.powi(scale));
    let mut e = nalgebra::Matrix2::identity();
    let mut term = nalgebra::Matrix2::identity();
    for k in 1..20 {
        term = term * a / Complex64::from(k as f64);
        e += term;
    }
    for _ in 0..scale {
        e = e * e;
    }
    e
}
