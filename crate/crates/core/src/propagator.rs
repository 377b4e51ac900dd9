//! Stroboscopic propagation of the two system modes.
//!
//! [`propagate`] evaluates the closed-form reduced covariance built from the
//! inverse joint scattering matrix `M = S_J⁻¹ = S_J†` and transports means as
//! `⟨a_out⟩ = S_J ⟨a_in⟩`. [`symplectic_oracle`] reaches the same numbers by
//! evolving the full joint Gaussian state with the real quadrature image of
//! `S_J`, and is kept as an independent check.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;

use crate::gaussian::{is_physical, CovarianceMatrix, GaussianState};
use crate::optics::{ChainAccumulator, ChainConfig, ScatteringMatrix, UNITARITY_TOL};
use crate::{Error, Result};

/// Largest chain accepted by the dense oracle.
pub const ORACLE_MAX_COLLISIONS: usize = 100;

/// Input state of a system mode: displaced squeezed thermal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemModeSpec {
    /// Mean thermal photon number.
    pub n_th: f64,
    /// Squeezing strength.
    pub xi: f64,
    /// Squeezing angle (radians).
    pub varphi: f64,
    /// Complex displacement `⟨a⟩`.
    pub alpha: Complex64,
}

impl SystemModeSpec {
    pub fn new(n_th: f64, xi: f64, varphi: f64, alpha: Complex64) -> Self {
        Self { n_th, xi, varphi, alpha }
    }

    pub fn vacuum() -> Self {
        Self::new(0.0, 0.0, 0.0, Complex64::new(0.0, 0.0))
    }

    pub fn coherent(alpha: Complex64) -> Self {
        Self::new(0.0, 0.0, 0.0, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_th >= 0.0 && self.n_th.is_finite()) {
            return Err(Error::invalid(format!("n_th = {} must be finite and >= 0", self.n_th)));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::invalid(format!("xi = {} must be finite and >= 0", self.xi)));
        }
        if !self.varphi.is_finite() || !self.alpha.re.is_finite() || !self.alpha.im.is_finite() {
            return Err(Error::invalid("varphi and alpha must be finite"));
        }
        Ok(())
    }

    fn n_sym(&self) -> f64 {
        self.n_th + 0.5
    }

    /// `n_th + ½` times `cosh ξ` and `sinh ξ`.
    fn weights(&self) -> (f64, f64) {
        (self.n_sym() * self.xi.cosh(), self.n_sym() * self.xi.sinh())
    }

    /// Single-mode input covariance `[[q q, q p], [p q, p p]]`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let (ch, sh) = self.weights();
        let (s, c) = self.varphi.sin_cos();
        [[ch + sh * c, sh * s], [sh * s, ch - sh * c]]
    }

    /// `(⟨q⟩, ⟨p⟩)`.
    pub fn quadrature_mean(&self) -> (f64, f64) {
        (std::f64::consts::SQRT_2 * self.alpha.re, std::f64::consts::SQRT_2 * self.alpha.im)
    }
}

/// Coherent environment input, identical for every environment mode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnvModeSpec {
    pub alpha: Complex64,
}

impl EnvModeSpec {
    pub fn vacuum() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    /// Number of collisions applied.
    pub collisions: usize,
    pub mean_a: Complex64,
    pub mean_b: Complex64,
    pub cov: CovarianceMatrix,
}

impl TrajectoryPoint {
    /// `[⟨q_a⟩, ⟨p_a⟩, ⟨q_b⟩, ⟨p_b⟩]`.
    pub fn quadrature_means(&self) -> [f64; 4] {
        let r = std::f64::consts::SQRT_2;
        [r * self.mean_a.re, r * self.mean_a.im, r * self.mean_b.re, r * self.mean_b.im]
    }

    /// Single-mode state of mode 0 (`a`) or 1 (`b`).
    pub fn mode_state(&self, mode: usize) -> Result<GaussianState> {
        let m = self.quadrature_means();
        GaussianState::new(DVector::from_row_slice(&m), self.cov.clone())?.mode(mode)
    }
}

/// Means and covariance of the system modes after `0..=L` collisions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }

    /// `⟨q_a⟩` (mode 0) or `⟨q_b⟩` (mode 1) per collision.
    pub fn mean_q(&self, mode: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.quadrature_means()[2 * mode]).collect()
    }

    pub fn mean_p(&self, mode: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.quadrature_means()[2 * mode + 1]).collect()
    }
}

/// Squeezing contribution `n sinh ξ (cos φ Re X + sin φ Im X)` of an input
/// mode to a same-quadrature covariance element.
fn sq_even(sh: f64, varphi: f64, x: Complex64) -> f64 {
    let (s, c) = varphi.sin_cos();
    sh * (c * x.re + s * x.im)
}

/// Squeezing contribution `n sinh ξ (sin φ Re X − cos φ Im X)` to a `q p` element.
fn sq_odd(sh: f64, varphi: f64, x: Complex64) -> f64 {
    let (s, c) = varphi.sin_cos();
    sh * (s * x.re - c * x.im)
}

/// Closed-form `4 × 4` system covariance from the first two rows of `S_J`.
///
/// With `M = S_J†`, `M_{j,1} = conj(S_J[a, j])` and `M_{j,2} = conj(S_J[b, j])`.
/// Environment vacua contribute `(1 − |M₁₁|² − |M₂₁|²)/2` to the diagonal of
/// the `A` block (and likewise for `B`) and `½ Σ_{j≥3} M*_{j1} M_{j2}` to `C`.
fn covariance_from_rows(
    row_a: &[Complex64],
    row_b: &[Complex64],
    spec_a: &SystemModeSpec,
    spec_b: &SystemModeSpec,
) -> Matrix4<f64> {
    let m11 = row_a[0].conj();
    let m21 = row_a[1].conj();
    let m12 = row_b[0].conj();
    let m22 = row_b[1].conj();

    let (ch_a, sh_a) = spec_a.weights();
    let (ch_b, sh_b) = spec_b.weights();
    let (va, vb) = (spec_a.varphi, spec_b.varphi);

    let env_a = 0.5 * (1.0 - m11.norm_sqr() - m21.norm_sqr());
    let env_b = 0.5 * (1.0 - m12.norm_sqr() - m22.norm_sqr());
    let env_ab: Complex64 = row_a[2..].iter().zip(&row_b[2..]).map(|(x, y)| x * y.conj()).sum::<Complex64>() * 0.5;

    // A block: output mode a.
    let a_sq = sq_even(sh_a, va, m11 * m11) + sq_even(sh_b, vb, m21 * m21);
    let a_th = ch_a * m11.norm_sqr() + ch_b * m21.norm_sqr() + env_a;
    let a12 = sq_odd(sh_a, va, m11 * m11) + sq_odd(sh_b, vb, m21 * m21);

    // B block: output mode b.
    let b_sq = sq_even(sh_a, va, m12 * m12) + sq_even(sh_b, vb, m22 * m22);
    let b_th = ch_a * m12.norm_sqr() + ch_b * m22.norm_sqr() + env_b;
    let b12 = sq_odd(sh_a, va, m12 * m12) + sq_odd(sh_b, vb, m22 * m22);

    // C block: cross terms. The thermal part is complex in general; its real
    // part enters C₁₁ and C₂₂, its imaginary part splits C₁₂ from C₂₁.
    let c_sq = sq_even(sh_a, va, m11 * m12) + sq_even(sh_b, vb, m21 * m22);
    let c_th = m11.conj() * m12 * ch_a + m21.conj() * m22 * ch_b + env_ab;
    let c_odd = sq_odd(sh_a, va, m11 * m12) + sq_odd(sh_b, vb, m21 * m22);
    let c11 = c_sq + c_th.re;
    let c22 = -c_sq + c_th.re;
    let c12 = c_odd - c_th.im;
    let c21 = c_odd + c_th.im;

    let a11 = a_sq + a_th;
    let a22 = -a_sq + a_th;
    let b11 = b_sq + b_th;
    let b22 = -b_sq + b_th;

    Matrix4::new(
        a11, a12, c11, c12, //
        a12, a22, c21, c22, //
        c11, c21, b11, b12, //
        c12, c22, b12, b22,
    )
}

fn to_cov(m: Matrix4<f64>) -> CovarianceMatrix {
    CovarianceMatrix::new(DMatrix::from_iterator(4, 4, m.iter().copied()))
        .expect("closed-form covariance is symmetric by construction")
}

/// Reduced system covariance for a given joint scattering matrix.
pub fn reduced_covariance(
    s_j: &ScatteringMatrix,
    spec_a: &SystemModeSpec,
    spec_b: &SystemModeSpec,
    _env: &EnvModeSpec,
) -> Result<CovarianceMatrix> {
    spec_a.validate()?;
    spec_b.validate()?;
    if s_j.dim() < 2 {
        return Err(Error::invalid("joint scattering matrix must cover both system modes"));
    }
    let defect = s_j.unitarity_defect();
    if !(defect < UNITARITY_TOL) {
        return Err(Error::invalid(format!("joint scattering matrix not unitary (defect {defect:e})")));
    }
    let e = s_j.entries();
    let row_a: Vec<Complex64> = e.row(0).iter().copied().collect();
    let row_b: Vec<Complex64> = e.row(1).iter().copied().collect();
    Ok(to_cov(covariance_from_rows(&row_a, &row_b, spec_a, spec_b)))
}

/// `(⟨a_a⟩, ⟨a_b⟩)`: first two entries of `S_J · m_in`.
pub fn first_moments(s_j: &ScatteringMatrix, means_in: &[Complex64]) -> Result<(Complex64, Complex64)> {
    if means_in.len() != s_j.dim() {
        return Err(Error::invalid(format!("{} input means for a {}-mode chain", means_in.len(), s_j.dim())));
    }
    let e = s_j.entries();
    let dot = |r: usize| (0..e.ncols()).map(|k| e[(r, k)] * means_in[k]).sum::<Complex64>();
    Ok((dot(0), dot(1)))
}

fn input_means(collisions: usize, a: &SystemModeSpec, b: &SystemModeSpec, env: &EnvModeSpec) -> Vec<Complex64> {
    let mut m = vec![env.alpha; collisions + 2];
    m[0] = a.alpha;
    m[1] = b.alpha;
    m
}

fn check_inputs(cfg: &ChainConfig, a: &SystemModeSpec, b: &SystemModeSpec, env: &EnvModeSpec) -> Result<()> {
    cfg.validate()?;
    a.validate()?;
    b.validate()?;
    if !env.alpha.re.is_finite() || !env.alpha.im.is_finite() {
        return Err(Error::invalid("environment displacement must be finite"));
    }
    Ok(())
}

/// Full trajectory `ℓ = 0..=L` from incrementally accumulated prefix products.
pub fn propagate(
    cfg: &ChainConfig,
    spec_a: &SystemModeSpec,
    spec_b: &SystemModeSpec,
    env: &EnvModeSpec,
) -> Result<Trajectory> {
    check_inputs(cfg, spec_a, spec_b, env)?;
    let means = input_means(cfg.collisions, spec_a, spec_b, env);
    let mut acc = ChainAccumulator::new(cfg)?;
    let mut points = Vec::with_capacity(cfg.collisions + 1);
    loop {
        let l = acc.collisions_done();
        let s = acc.product();
        // Only the modes touched so far carry non-trivial entries.
        let width = l + 2;
        let row_a: Vec<Complex64> = (0..width).map(|k| s[(0, k)]).collect();
        let row_b: Vec<Complex64> = (0..width).map(|k| s[(1, k)]).collect();
        let mean_a: Complex64 = row_a.iter().zip(&means).map(|(x, m)| x * m).sum();
        let mean_b: Complex64 = row_b.iter().zip(&means).map(|(x, m)| x * m).sum();
        let cov = to_cov(covariance_from_rows(&row_a, &row_b, spec_a, spec_b));
        let report = is_physical(&cov);
        if !report.physical {
            return Err(Error::InternalConsistency(format!(
                "covariance after {l} collisions violates the uncertainty relation \
                 (min eigenvalue {:e})",
                report.min_eigenvalue
            )));
        }
        points.push(TrajectoryPoint { collisions: l, mean_a, mean_b, cov });
        if !acc.advance() {
            break;
        }
    }
    Ok(Trajectory { points })
}

/// State after the last collision only.
pub fn propagate_final(
    cfg: &ChainConfig,
    spec_a: &SystemModeSpec,
    spec_b: &SystemModeSpec,
    env: &EnvModeSpec,
) -> Result<TrajectoryPoint> {
    check_inputs(cfg, spec_a, spec_b, env)?;
    let s = crate::optics::joint_scattering(cfg)?;
    let cov = reduced_covariance(&s, spec_a, spec_b, env)?;
    let (mean_a, mean_b) = first_moments(&s, &input_means(cfg.collisions, spec_a, spec_b, env))?;
    let report = is_physical(&cov);
    if !report.physical {
        return Err(Error::InternalConsistency(format!(
            "final covariance violates the uncertainty relation (min eigenvalue {:e})",
            report.min_eigenvalue
        )));
    }
    Ok(TrajectoryPoint { collisions: cfg.collisions, mean_a, mean_b, cov })
}

/// Real interleaved image of a complex mode transformation:
/// `q_out = Re S q − Im S p`, `p_out = Im S q + Re S p`.
pub fn quadrature_transform(s: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = s[(i, j)];
            r[(2 * i, 2 * j)] = z.re;
            r[(2 * i, 2 * j + 1)] = -z.im;
            r[(2 * i + 1, 2 * j)] = z.im;
            r[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    r
}

/// Product input state of all `L + 2` modes.
pub fn joint_input_state(
    collisions: usize,
    spec_a: &SystemModeSpec,
    spec_b: &SystemModeSpec,
    env: &EnvModeSpec,
) -> Result<GaussianState> {
    let n = collisions + 2;
    let mut cov = DMatrix::identity(2 * n, 2 * n) * 0.5;
    let mut mean = DVector::zeros(2 * n);
    for (k, spec) in [spec_a, spec_b].into_iter().enumerate() {
        let c = spec.covariance();
        for i in 0..2 {
            for j in 0..2 {
                cov[(2 * k + i, 2 * k + j)] = c[i][j];
            }
        }
        let (q, p) = spec.quadrature_mean();
        mean[2 * k] = q;
        mean[2 * k + 1] = p;
    }
    let r = std::f64::consts::SQRT_2;
    for k in 2..n {
        mean[2 * k] = r * env.alpha.re;
        mean[2 * k + 1] = r * env.alpha.im;
    }
    GaussianState::new(mean, CovarianceMatrix::new(cov)?)
}

/// Evolves the full joint Gaussian state through dense chain prefixes and
/// hands each `(ℓ, state)` to `visit`.
pub fn for_each_joint_state<F>(
    cfg: &ChainConfig,
    spec_a: &SystemModeSpec,
    spec_b: &SystemModeSpec,
    env: &EnvModeSpec,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &GaussianState) -> Result<()>,
{
    check_inputs(cfg, spec_a, spec_b, env)?;
    if cfg.collisions > ORACLE_MAX_COLLISIONS {
        return Err(Error::invalid(format!(
            "dense oracle is capped at {ORACLE_MAX_COLLISIONS} collisions, got {}",
            cfg.collisions
        )));
    }
    let input = joint_input_state(cfg.collisions, spec_a, spec_b, env)?;
    let n = cfg.collisions + 2;
    let seim = crate::optics::seim(&cfg.with_collisions(1))?;
    let mut product = DMatrix::<Complex64>::identity(n, n);
    for l in 0..=cfg.collisions {
        if l > 0 {
            let mut step = DMatrix::<Complex64>::identity(n, n);
            let idx = [0, 1, l + 1];
            for (a, &ra) in idx.iter().enumerate() {
                for (b, &rb) in idx.iter().enumerate() {
                    step[(ra, rb)] = seim.entries()[(a, b)];
                }
            }
            if !cfg.markovian && l >= 2 {
                let mixer = crate::optics::beam_splitter(cfg.eta(), l, l + 1, n)?;
                step *= mixer.entries();
            }
            product = step * product;
        }
        let r = quadrature_transform(&product);
        let mean = &r * input.mean();
        let cov = &r * input.cov().matrix() * r.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        let state = GaussianState::new(mean, CovarianceMatrix::new(cov)?)
            .map_err(|e| Error::InternalConsistency(format!("joint state after {l} collisions: {e}")))?;
        visit(l, &state)?;
    }
    Ok(())
}

/// Trajectory obtained from the full joint state (`L ≤ 100`).
pub fn symplectic_oracle(
    cfg: &ChainConfig,
    spec_a: &SystemModeSpec,
    spec_b: &SystemModeSpec,
    env: &EnvModeSpec,
) -> Result<Trajectory> {
    let mut points = Vec::with_capacity(cfg.collisions + 1);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for_each_joint_state(cfg, spec_a, spec_b, env, |l, state| {
        let m = state.mean();
        let cov = state.cov().matrix().view((0, 0), (4, 4)).into_owned();
        points.push(TrajectoryPoint {
            collisions: l,
            mean_a: Complex64::new(r * m[0], r * m[1]),
            mean_b: Complex64::new(r * m[2], r * m[3]),
            cov: CovarianceMatrix::new(cov)?,
        });
        Ok(())
    })?;
    Ok(Trajectory { points })
}

/// Total photon number `Σ ⟨a†a⟩` of a joint state.
pub fn total_photon_number(state: &GaussianState) -> f64 {
    let m = state.mean();
    let c = state.cov().matrix();
    (0..state.n_modes())
        .map(|k| {
            let var = c[(2 * k, 2 * k)] + c[(2 * k + 1, 2 * k + 1)];
            0.5 * (var + m[2 * k] * m[2 * k] + m[2 * k + 1] * m[2 * k + 1]) - 0.5
        })
        .sum()
}
