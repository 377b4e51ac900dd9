//! Decay rates and oscillation frequencies of mean-quadrature trajectories.

use crate::propagator::Trajectory;
use crate::{Error, Result};

/// Fewest envelope extrema accepted by [`fit_decay`].
pub const MIN_EXTREMA: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `|slope|` of `ln |x|` against collision number.
    pub rate: f64,
    /// Signed slope; negative for decay.
    pub slope: f64,
    pub r_squared: f64,
    pub extrema: usize,
}

/// Indices `k` in `lo..=hi` where `|x_k|` is a local maximum.
fn envelope_extrema(values: &[f64], lo: usize, hi: usize) -> Vec<usize> {
    let hi = hi.min(values.len().saturating_sub(1));
    (lo.max(1)..hi)
        .filter(|&k| {
            let (l, m, r) = (values[k - 1].abs(), values[k].abs(), values[k + 1].abs());
            m > 0.0 && m >= l && m > r
        })
        .collect()
}

fn regress(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Log-linear fit of the envelope extrema of `values[lo..=hi]`.
pub fn fit_decay_series(values: &[f64], window: (usize, usize)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if lo >= hi {
        return Err(Error::invalid(format!("empty fit window [{lo}, {hi}]")));
    }
    let ext = envelope_extrema(values, lo, hi);
    if ext.len() < MIN_EXTREMA {
        return Err(Error::InsufficientData(format!(
            "{} envelope extrema in [{lo}, {hi}], need {MIN_EXTREMA}",
            ext.len()
        )));
    }
    let xs: Vec<f64> = ext.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = ext.iter().map(|&k| values[k].abs().ln()).collect();
    let (slope, r_squared) = regress(&xs, &ys);
    Ok(DecayFit { rate: slope.abs(), slope, r_squared, extrema: ext.len() })
}

/// Decay fit of `⟨q⟩` of mode 0 (`a`) or 1 (`b`). The trajectory is indexed by collision count.
pub fn fit_decay(traj: &Trajectory, mode: usize, window: (usize, usize)) -> Result<DecayFit> {
    fit_decay_series(&traj.mean_q(mode), window)
}

/// Cycles per collision from linearly interpolated zero crossings.
pub fn oscillation_frequency_series(values: &[f64]) -> Result<f64> {
    let mut crossings = Vec::new();
    for k in 1..values.len() {
        let (a, b) = (values[k - 1], values[k]);
        if a == 0.0 && k == 1 {
            crossings.push(0.0);
        }
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            if b == 0.0 {
                crossings.push(k as f64);
            } else {
                crossings.push((k - 1) as f64 + a / (a - b));
            }
        }
    }
    crossings.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    if crossings.len() < 2 {
        return Err(Error::InsufficientData(format!("{} zero crossings, need 2", crossings.len())));
    }
    let half_period = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    Ok(1.0 / (2.0 * half_period))
}

/// Frequency of `⟨q⟩` of the given mode.
pub fn oscillation_frequency(traj: &Trajectory, mode: usize) -> Result<f64> {
    oscillation_frequency_series(&traj.mean_q(mode))
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("spearman needs two equally long series of length >= 2"));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::DegenerateInput("constant series has no rank correlation".into()));
    }
    Ok(cov / (vx * vy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}
