//! Synchronization and entanglement measures of the two system modes.

use crate::gaussian::{is_physical, CovarianceMatrix};
use crate::propagator::{Trajectory, TrajectoryPoint};
use crate::{Error, Result};

/// Discriminants below this magnitude are treated as zero, relative to `max(1, Σ²)`.
pub const DISCRIMINANT_TOL: f64 = 1e-12;

/// Which collective quadrature is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SyncVariant {
    /// `(q_a + q_b)/√2`: anti-phase locking.
    #[default]
    AntiPhase,
    /// `(q_a − q_b)/√2`: in-phase locking.
    InPhase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncPoint {
    pub collisions: usize,
    pub s_c: f64,
    pub s_re: f64,
    pub r_a: f64,
    pub r_b: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SyncSeries {
    pub points: Vec<SyncPoint>,
}

impl SyncSeries {
    pub fn last(&self) -> Option<&SyncPoint> {
        self.points.last()
    }

    pub fn s_re(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.s_re).collect()
    }

    pub fn s_c(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.s_c).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Negativity {
    pub e_n: f64,
    /// Smallest symplectic eigenvalue of the partially transposed covariance.
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementPoint {
    pub collisions: usize,
    pub e_n: f64,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EntanglementSeries {
    pub points: Vec<EntanglementPoint>,
}

impl EntanglementSeries {
    pub fn last(&self) -> Option<&EntanglementPoint> {
        self.points.last()
    }

    pub fn e_n(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.e_n).collect()
    }
}

fn require_two_mode_physical(cov: &CovarianceMatrix) -> Result<()> {
    if cov.n_modes() != 2 {
        return Err(Error::invalid(format!("expected a two-mode covariance, got {} modes", cov.n_modes())));
    }
    let report = is_physical(cov);
    if !report.physical {
        return Err(Error::invalid(format!(
            "covariance is not physical (min eigenvalue of σ + iΩ/2 is {:e})",
            report.min_eigenvalue
        )));
    }
    Ok(())
}

/// `Var q₋ + Var p₋` of the collective quadrature, from covariance blocks.
pub fn collective_variance(cov: &CovarianceMatrix, variant: SyncVariant) -> f64 {
    let m = cov.matrix();
    let sign = match variant {
        SyncVariant::AntiPhase => 1.0,
        SyncVariant::InPhase => -1.0,
    };
    let var_q = 0.5 * (m[(0, 0)] + m[(2, 2)] + 2.0 * sign * m[(0, 2)]);
    let var_p = 0.5 * (m[(1, 1)] + m[(3, 3)] + 2.0 * sign * m[(1, 3)]);
    var_q + var_p
}

/// Mari's measure `S_c = 1 / (Var q₋ + Var p₋)` for one covariance.
pub fn mari_measure_cov(cov: &CovarianceMatrix, variant: SyncVariant) -> Result<f64> {
    require_two_mode_physical(cov)?;
    let d = collective_variance(cov, variant);
    if !(d > 0.0) {
        return Err(Error::NumericalDegeneracy(format!("collective variance {d:e} is not positive")));
    }
    Ok(1.0 / d)
}

/// Quadrature amplitude `R = ⟨q² + p²⟩^{1/2}` from unshifted moments.
fn amplitude(point: &TrajectoryPoint, mode: usize) -> f64 {
    let m = point.quadrature_means();
    let c = point.cov.matrix();
    let (q, p) = (m[2 * mode], m[2 * mode + 1]);
    (c[(2 * mode, 2 * mode)] + c[(2 * mode + 1, 2 * mode + 1)] + q * q + p * p).sqrt()
}

fn sync_point(point: &TrajectoryPoint, variant: SyncVariant) -> Result<SyncPoint> {
    let s_c = mari_measure_cov(&point.cov, variant)?;
    let r_a = amplitude(point, 0);
    let r_b = amplitude(point, 1);
    if !(r_a > 0.0 && r_b > 0.0) {
        return Err(Error::DegenerateInput(format!("zero quadrature amplitude after {} collisions", point.collisions)));
    }
    Ok(SyncPoint { collisions: point.collisions, s_c, s_re: r_a * r_b * s_c, r_a, r_b })
}

/// Mari's measure per collision.
pub fn mari_measure(traj: &Trajectory) -> Result<Vec<f64>> {
    traj.points.iter().map(|p| mari_measure_cov(&p.cov, SyncVariant::AntiPhase)).collect()
}

/// Full synchronization series (`S_c`, `S_re`, `R_a`, `R_b`) per collision.
pub fn relative_measure(traj: &Trajectory) -> Result<SyncSeries> {
    relative_measure_with(traj, SyncVariant::AntiPhase)
}

pub fn relative_measure_with(traj: &Trajectory, variant: SyncVariant) -> Result<SyncSeries> {
    let points = traj.points.iter().map(|p| sync_point(p, variant)).collect::<Result<_>>()?;
    Ok(SyncSeries { points })
}

fn det2(m: &CovarianceMatrix, i: usize, j: usize) -> f64 {
    m.block(i, j).determinant()
}

/// Logarithmic negativity `E_N = max(−ln 2μ, 0)` of a two-mode covariance.
pub fn log_negativity(cov: &CovarianceMatrix) -> Result<Negativity> {
    require_two_mode_physical(cov)?;
    let sigma = det2(cov, 0, 0) + det2(cov, 1, 1) - 2.0 * det2(cov, 0, 1);
    let det = cov.determinant();
    let mut disc = sigma * sigma - 4.0 * det;
    let tol = DISCRIMINANT_TOL * (sigma * sigma).max(1.0);
    if disc < 0.0 {
        if disc < -tol {
            return Err(Error::NumericalDegeneracy(format!("negative discriminant Σ² − 4 det σ = {disc:e}")));
        }
        disc = 0.0;
    }
    let mu_sq = 0.5 * (sigma - disc.sqrt());
    if !(mu_sq > 0.0) {
        return Err(Error::NumericalDegeneracy(format!("symplectic eigenvalue squared {mu_sq:e}")));
    }
    let mu = mu_sq.sqrt();
    Ok(Negativity { e_n: (-(2.0 * mu).ln()).max(0.0), mu, sigma })
}

pub fn entanglement_series(traj: &Trajectory) -> Result<EntanglementSeries> {
    let points = traj
        .points
        .iter()
        .map(|p| {
            let n = log_negativity(&p.cov)?;
            Ok(EntanglementPoint { collisions: p.collisions, e_n: n.e_n, mu: n.mu, sigma: n.sigma })
        })
        .collect::<Result<_>>()?;
    Ok(EntanglementSeries { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn cov(entries: [f64; 16]) -> CovarianceMatrix {
        CovarianceMatrix::new(DMatrix::from_row_slice(4, 4, &entries)).unwrap()
    }

    fn thermal(n: f64) -> CovarianceMatrix {
        CovarianceMatrix::new(DMatrix::identity(4, 4) * (n + 0.5)).unwrap()
    }

    fn tmsv(r: f64) -> CovarianceMatrix {
        let (c, s) = (0.5 * (2.0 * r).cosh(), 0.5 * (2.0 * r).sinh());
        cov([
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ])
    }

    #[test]
    fn vacuum_saturates_mari() {
        assert!((mari_measure_cov(&thermal(0.0), SyncVariant::AntiPhase).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn thermal_mari() {
        assert!((mari_measure_cov(&thermal(2.0), SyncVariant::AntiPhase).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn variant_flips_cross_term() {
        let c = tmsv(0.5);
        let anti = collective_variance(&c, SyncVariant::AntiPhase);
        let inph = collective_variance(&c, SyncVariant::InPhase);
        // q-correlation and p-anticorrelation cancel in the sum of both quadratures.
        assert!((anti - inph).abs() < 1e-14);
        let c = cov([
            1.0, 0.0, 0.4, 0.0, //
            0.0, 1.0, 0.0, 0.4, //
            0.4, 0.0, 1.0, 0.0, //
            0.0, 0.4, 0.0, 1.0,
        ]);
        assert!((collective_variance(&c, SyncVariant::AntiPhase) - 2.8).abs() < 1e-14);
        assert!((collective_variance(&c, SyncVariant::InPhase) - 1.2).abs() < 1e-14);
    }

    #[test]
    fn nonphysical_rejected() {
        let c = CovarianceMatrix::new(DMatrix::identity(4, 4) * 0.1).unwrap();
        assert!(matches!(mari_measure_cov(&c, SyncVariant::AntiPhase), Err(Error::InvalidArgument(_))));
        assert!(matches!(log_negativity(&c), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn vacuum_not_entangled() {
        let n = log_negativity(&thermal(0.0)).unwrap();
        assert!((n.mu - 0.5).abs() < 1e-12);
        assert_eq!(n.e_n, 0.0);
    }

    #[test]
    fn tmsv_negativity() {
        let n = log_negativity(&tmsv(1.0)).unwrap();
        assert!((n.e_n - 2.0).abs() < 1e-9, "{}", n.e_n);
        assert!((n.mu - 0.5 * (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn product_of_squeezed_states_not_entangled() {
        let (a, b) = (0.5 * 3f64.exp(), 0.5 * (-3f64).exp());
        let c = cov([
            a, 0.0, 0.0, 0.0, //
            0.0, b, 0.0, 0.0, //
            0.0, 0.0, b, 0.0, //
            0.0, 0.0, 0.0, a,
        ]);
        assert_eq!(log_negativity(&c).unwrap().e_n, 0.0);
    }

    #[test]
    fn wrong_dimension() {
        let c = CovarianceMatrix::vacuum(3).unwrap();
        assert!(log_negativity(&c).is_err());
    }
}
