mod common;

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use tritter_qcm::analysis::fit_decay_series;
use tritter_qcm::liouvillian::{
    adjoint_liouvillian, build_operators, coherent_density, jump_operator, lindblad_evolve, spectrum, DensitySeries,
    JumpOperator, DEFAULT_RE_TOLERANCE,
};
use tritter_qcm::optics::ChainConfig;
use tritter_qcm::propagator::{propagate, EnvModeSpec, SystemModeSpec};

const ALPHA: f64 = 0.5;
const T1: f64 = PI / 8.0;
const T2: f64 = PI / 4.0;
const T3: f64 = PI / 8.0;
const PHI_A: f64 = PI / 8.0;

fn evolve(phi_b: f64, n_max: usize, t_max: usize) -> (JumpOperator, DensitySeries) {
    let jump = jump_operator(T1, T2, T3, n_max).unwrap();
    let rho0 = coherent_density(n_max, Complex64::from(ALPHA), Complex64::from(ALPHA)).unwrap();
    let series = lindblad_evolve(&rho0, PHI_A, phi_b, &jump, t_max, 0.1).unwrap();
    (jump, series)
}

/// `(⟨a⟩, ⟨b⟩)` per unit time.
fn me_means(series: &DensitySeries) -> (Vec<Complex64>, Vec<Complex64>) {
    let ops = build_operators(series.n_max).unwrap();
    (series.expectation(&ops.a_a), series.expectation(&ops.a_b))
}

fn qcm_q(phi_b: f64, collisions: usize) -> (Vec<f64>, Vec<f64>) {
    let cfg = ChainConfig::new(T1, T2, T3, PHI_A, phi_b, collisions);
    let mode = SystemModeSpec::coherent(Complex64::from(ALPHA));
    let traj = propagate(&cfg, &mode, &mode, &EnvModeSpec::vacuum()).unwrap();
    (traj.mean_q(0), traj.mean_q(1))
}

#[test]
fn me_means_follow_linear_equation() {
    for phi_b in [PI / 4.0, PI / 6.0, PI / 8.0] {
        let (jump, series) = evolve(phi_b, 6, 40);
        assert!(series.max_trace_drift < 1e-9);
        let (a, b) = me_means(&series);
        let g = common::me_mean_propagator(PHI_A, phi_b, jump.theta_tilde_a, jump.theta_tilde_b);
        let mut v = nalgebra::Vector2::new(Complex64::from(ALPHA), Complex64::from(ALPHA));
        for t in 0..=40 {
            assert!((a[t] - v[0]).norm() < 1e-4, "phi_b {phi_b}, t {t}: {} vs {}", a[t], v[0]);
            assert!((b[t] - v[1]).norm() < 1e-4);
            v = g * v;
        }
    }
}

#[test]
fn me_tracks_collision_model() {
    for phi_b in [PI / 4.0, PI / 6.0, PI / 8.0] {
        let l = 100;
        let (_, series) = evolve(phi_b, 8, l);
        let (a, b) = me_means(&series);
        let (qa, qb) = qcm_q(phi_b, l);
        let mut sq = 0.0;
        for t in 0..=l {
            sq += (SQRT_2 * a[t].re - qa[t]).powi(2) + (SQRT_2 * b[t].re - qb[t]).powi(2);
        }
        let rms = (sq / (2 * (l + 1)) as f64).sqrt() / (SQRT_2 * ALPHA);
        assert!(rms < 0.05, "phi_b {phi_b}: normalized rms {rms}");
    }
}

#[test]
fn me_decay_matches_gap() {
    for phi_b in [PI / 4.0, PI / 6.0] {
        let (_, series) = evolve(phi_b, 5, 200);
        let (a, _) = me_means(&series);
        let q: Vec<f64> = a.iter().map(|z| SQRT_2 * z.re).collect();
        let fit = fit_decay_series(&q, (100, 200)).unwrap();

        let jump = jump_operator(T1, T2, T3, 5).unwrap();
        let lm = adjoint_liouvillian(PHI_A, phi_b, &jump, 5).unwrap();
        let gap = spectrum(&lm, DEFAULT_RE_TOLERANCE).unwrap().gap;
        let rel = (fit.rate - gap).abs() / gap;
        assert!(rel < 0.10, "phi_b {phi_b}: fitted {} vs gap {gap}", fit.rate);
    }
}

#[test]
fn equal_phases_keep_oscillating() {
    let (jump, series) = evolve(PHI_A, 5, 200);
    let (a, _) = me_means(&series);
    let q: Vec<f64> = a.iter().map(|z| SQRT_2 * z.re).collect();
    let fit = fit_decay_series(&q, (100, 200)).unwrap();
    assert!(fit.rate < 1e-3, "{}", fit.rate);
    // Only the component orthogonal to the jump direction survives.
    let (ta, tb) = (jump.theta_tilde_a, jump.theta_tilde_b);
    let dark = ALPHA * tb * (tb - ta) / (ta * ta + tb * tb);
    let late = a[150..].iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    assert!((late - dark.abs()).abs() < 1e-3 * ALPHA, "{late} vs {dark}");
}
