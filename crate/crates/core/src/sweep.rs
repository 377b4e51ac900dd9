//! Parameter sweeps over `(ϑ₂ − ϑ₁, ϑ₃ − ϑ₁)` at fixed `ϑ₁`.

use rayon::prelude::*;

use crate::measures::{log_negativity, mari_measure_cov, SyncVariant};
use crate::optics::ChainConfig;
use crate::propagator::{propagate_final, EnvModeSpec, SystemModeSpec};
use crate::{Error, Result};

/// Evenly spaced axis including both end points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(start: f64, stop: f64, steps: usize) -> Self {
        Self { start, stop, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| self.start + h * k as f64).collect()
    }

    /// Grid spacing (0 for a single point).
    pub fn step(&self) -> f64 {
        if self.steps < 2 {
            0.0
        } else {
            (self.stop - self.start) / (self.steps - 1) as f64
        }
    }
}

/// `axis1` offsets `ϑ₂ − ϑ₁`, `axis2` offsets `ϑ₃ − ϑ₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    pub theta1: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, ax) in [("axis1", &self.axis1), ("axis2", &self.axis2)] {
            if ax.steps < 2 {
                return Err(Error::invalid(format!("sweep {name} needs at least 2 steps, got {}", ax.steps)));
            }
            if !ax.start.is_finite() || !ax.stop.is_finite() {
                return Err(Error::invalid(format!("sweep {name} bounds must be finite")));
            }
        }
        let tol = 1e-12;
        let ok = |t: f64| (-tol..=std::f64::consts::FRAC_PI_2 + tol).contains(&t);
        if !ok(self.theta1) {
            return Err(Error::invalid(format!("sweep theta1 = {} outside [0, pi/2]", self.theta1)));
        }
        for (name, ax) in [("axis1", &self.axis1), ("axis2", &self.axis2)] {
            for d in [ax.start, ax.stop] {
                if !ok(self.theta1 + d) {
                    return Err(Error::invalid(format!(
                        "sweep {name} offset {d} puts an angle at {} outside [0, pi/2]",
                        self.theta1 + d
                    )));
                }
            }
        }
        Ok(())
    }

    /// `(d21, d31)` pairs, `axis1` major.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let a2 = self.axis2.values();
        self.axis1.values().into_iter().flat_map(|d21| a2.iter().map(move |&d31| (d21, d31))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub d21: f64,
    pub d31: f64,
    pub s_re_final: f64,
    pub e_n_final: f64,
}

fn clamp_angle(t: f64) -> f64 {
    t.clamp(0.0, std::f64::consts::FRAC_PI_2)
}

fn evaluate(
    base: &ChainConfig,
    grid: &GridSpec,
    spec_a: &SystemModeSpec,
    spec_b: &SystemModeSpec,
    env: &EnvModeSpec,
    (d21, d31): (f64, f64),
) -> Result<SweepRow> {
    let cfg = ChainConfig {
        theta1: grid.theta1,
        theta2: clamp_angle(grid.theta1 + d21),
        theta3: clamp_angle(grid.theta1 + d31),
        ..*base
    };
    let last = propagate_final(&cfg, spec_a, spec_b, env)?;
    let s_c = mari_measure_cov(&last.cov, SyncVariant::AntiPhase)?;
    let m = last.quadrature_means();
    let c = last.cov.matrix();
    let r = |k: usize| (c[(2 * k, 2 * k)] + c[(2 * k + 1, 2 * k + 1)] + m[2 * k].powi(2) + m[2 * k + 1].powi(2)).sqrt();
    let e_n = log_negativity(&last.cov)?.e_n;
    Ok(SweepRow { d21, d31, s_re_final: r(0) * r(1) * s_c, e_n_final: e_n })
}

/// Evaluates every grid point at `base.collisions` on a pool of `jobs`
/// threads. Rows come back in `axis1`-major order regardless of `jobs`.
pub fn run_sweep(
    base: &ChainConfig,
    grid: &GridSpec,
    spec_a: &SystemModeSpec,
    spec_b: &SystemModeSpec,
    env: &EnvModeSpec,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    base.validate()?;
    if jobs == 0 {
        return Err(Error::invalid("jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let points = grid.points();
    pool.install(|| {
        points.par_iter().map(|&p| evaluate(base, grid, spec_a, spec_b, env, p)).collect::<Result<Vec<_>>>()
    })
}
