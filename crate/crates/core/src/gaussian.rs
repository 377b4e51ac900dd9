//! Continuous-variable Gaussian states.
//!
//! Quadratures are interleaved `[q₁, p₁, …, q_N, p_N]` with
//! `q = (a† + a)/√2` and `p = i(a† − a)/√2`, so the vacuum covariance is `I/2`
//! and a covariance is physical iff `σ + iΩ/2 ≥ 0`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::{Error, Result};

/// Symmetry tolerance accepted for covariance entries.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Minimum eigenvalue of `σ + iΩ/2` still considered physical.
pub const PHYSICALITY_TOL: f64 = -1e-10;

/// The canonical symplectic form `Ω = ⊕ⱼ [[0, 1], [−1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

pub fn symplectic_form(n_modes: usize) -> Result<SymplecticForm> {
    if n_modes == 0 {
        return Err(Error::invalid("symplectic form needs at least one mode"));
    }
    let dim = 2 * n_modes;
    let mut matrix = DMatrix::zeros(dim, dim);
    for k in 0..n_modes {
        matrix[(2 * k, 2 * k + 1)] = 1.0;
        matrix[(2 * k + 1, 2 * k)] = -1.0;
    }
    Ok(SymplecticForm { n_modes, matrix })
}

/// Real symmetric `2N × 2N` covariance matrix in interleaved ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates shape and symmetry, then stores the exactly symmetrized matrix.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (r, c) = entries.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(Error::invalid(format!("covariance must be square with even dimension, got {r}x{c}")));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("covariance has non-finite entries"));
        }
        let asym = (&entries - entries.transpose()).abs().max();
        let scale = entries.abs().max().max(1.0);
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::invalid(format!("covariance is not symmetric (max |σ − σᵀ| = {asym:e})")));
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        Ok(Self { n_modes: r / 2, entries })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("covariance needs at least one mode"));
        }
        Ok(Self { n_modes, entries: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5 })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// The `2 × 2` block coupling modes `i` and `j` (`⟨R_{2i+·} R_{2j+·}⟩`).
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        let m = &self.entries;
        Matrix2::new(m[(2 * i, 2 * j)], m[(2 * i, 2 * j + 1)], m[(2 * i + 1, 2 * j)], m[(2 * i + 1, 2 * j + 1)])
    }

    /// Reduced covariance of a single mode.
    pub fn mode(&self, i: usize) -> CovarianceMatrix {
        let b = self.block(i, i);
        CovarianceMatrix {
            n_modes: 1,
            entries: DMatrix::from_row_slice(2, 2, &[b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]]),
        }
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }
}

/// Outcome of the Robertson–Schrödinger test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    pub physical: bool,
    /// Smallest eigenvalue of the Hermitian matrix `σ + iΩ/2`.
    pub min_eigenvalue: f64,
}

pub fn is_physical(cov: &CovarianceMatrix) -> PhysicalityReport {
    let omega = symplectic_form(cov.n_modes).expect("n_modes >= 1 by construction");
    let dim = 2 * cov.n_modes;
    let h =
        DMatrix::<Complex64>::from_fn(dim, dim, |i, j| Complex64::new(cov.entries[(i, j)], 0.5 * omega.matrix[(i, j)]));
    let min_eigenvalue = h.symmetric_eigenvalues().min();
    PhysicalityReport { physical: min_eigenvalue >= PHYSICALITY_TOL, min_eigenvalue }
}

/// Checks a raw matrix, rejecting non-symmetric input.
pub fn is_physical_matrix(entries: &DMatrix<f64>) -> Result<PhysicalityReport> {
    CovarianceMatrix::new(entries.clone()).map(|c| is_physical(&c))
}

/// Mean quadrature vector plus covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: CovarianceMatrix,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: CovarianceMatrix) -> Result<Self> {
        if mean.len() != 2 * cov.n_modes {
            return Err(Error::invalid(format!(
                "mean has length {} but covariance describes {} modes",
                mean.len(),
                cov.n_modes
            )));
        }
        let report = is_physical(&cov);
        if !report.physical {
            return Err(Error::invalid(format!(
                "covariance violates the uncertainty relation (min eigenvalue {:e})",
                report.min_eigenvalue
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        Ok(Self { mean: DVector::zeros(2 * n_modes), cov: CovarianceMatrix::vacuum(n_modes)? })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &CovarianceMatrix {
        &self.cov
    }

    pub fn n_modes(&self) -> usize {
        self.cov.n_modes
    }

    pub fn mode(&self, i: usize) -> Result<GaussianState> {
        if i >= self.n_modes() {
            return Err(Error::invalid(format!("mode {i} out of range")));
        }
        Ok(GaussianState {
            mean: DVector::from_column_slice(&[self.mean[2 * i], self.mean[2 * i + 1]]),
            cov: self.cov.mode(i),
        })
    }
}

/// Single-mode Gaussian Wigner function evaluated on `(q, p)` points.
pub fn wigner(state: &GaussianState, grid: &[(f64, f64)]) -> Result<Vec<f64>> {
    if state.n_modes() != 1 {
        return Err(Error::invalid(format!(
            "Wigner evaluation needs a single-mode state, got {} modes",
            state.n_modes()
        )));
    }
    let b = state.cov.block(0, 0);
    let det = b.determinant();
    if !(det > 0.0) {
        return Err(Error::NumericalDegeneracy(format!("covariance determinant {det:e} is not positive")));
    }
    let inv = b.try_inverse().ok_or_else(|| Error::NumericalDegeneracy("covariance is singular".into()))?;
    let centre = Vector2::new(state.mean[0], state.mean[1]);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    Ok(grid
        .iter()
        .map(|&(q, p)| {
            let d = Vector2::new(q, p) - centre;
            norm * (-0.5 * d.dot(&(inv * d))).exp()
        })
        .collect())
}

/// Square grid for Wigner export: `points × points` samples spanning
/// `±(|R̄| + 4√max diag σ)` on both axes, row-major with `q` slowest.
pub fn default_wigner_grid(state: &GaussianState, points: usize) -> Vec<(f64, f64)> {
    let b = state.cov.block(0, 0);
    let half = state.mean.norm() + 4.0 * b[(0, 0)].max(b[(1, 1)]).sqrt();
    let axis: Vec<f64> = if points < 2 {
        vec![0.0]
    } else {
        (0..points).map(|k| -half + 2.0 * half * k as f64 / (points - 1) as f64).collect()
    };
    axis.iter().flat_map(|&q| axis.iter().map(move |&p| (q, p))).collect()
}
