//! Scattering matrices of the optical network.
//!
//! A scattering matrix `S` maps input to output annihilation operators,
//! `a_out = S · a_in`. Chain modes are ordered
//! `[system_a, system_b, env_1, …, env_L]` (labels are 1-based in exports).

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;

use crate::{Error, Result};

/// Frobenius-norm tolerance for accepting a matrix as unitary.
pub const UNITARITY_TOL: f64 = 1e-9;

const ANGLE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    SystemA,
    SystemB,
    Env(usize),
    /// Generic port of a free-standing component.
    Port(usize),
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::SystemA => f.write_str("system_a"),
            ModeLabel::SystemB => f.write_str("system_b"),
            ModeLabel::Env(j) => write!(f, "env_{j}"),
            ModeLabel::Port(j) => write!(f, "port_{j}"),
        }
    }
}

pub fn chain_labels(collisions: usize) -> Vec<ModeLabel> {
    let mut labels = vec![ModeLabel::SystemA, ModeLabel::SystemB];
    labels.extend((1..=collisions).map(ModeLabel::Env));
    labels
}

fn port_labels(dim: usize) -> Vec<ModeLabel> {
    (1..=dim).map(ModeLabel::Port).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    entries: DMatrix<Complex64>,
    labels: Vec<ModeLabel>,
}

impl ScatteringMatrix {
    /// Wraps a square complex matrix, checking unitarity.
    pub fn new(entries: DMatrix<Complex64>, labels: Vec<ModeLabel>) -> Result<Self> {
        let s = Self::new_unchecked(entries, labels)?;
        let defect = s.unitarity_defect();
        if !(defect < UNITARITY_TOL) {
            return Err(Error::invalid(format!("scattering matrix is not unitary (‖SS† − I‖_F = {defect:e})")));
        }
        Ok(s)
    }

    pub(crate) fn new_unchecked(entries: DMatrix<Complex64>, labels: Vec<ModeLabel>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::invalid("scattering matrix must be square and non-empty"));
        }
        if labels.len() != entries.nrows() {
            return Err(Error::invalid(format!("{} labels for a {}-mode matrix", labels.len(), entries.nrows())));
        }
        Ok(Self { entries, labels })
    }

    pub fn identity(labels: Vec<ModeLabel>) -> Self {
        let n = labels.len();
        Self { entries: DMatrix::identity(n, n), labels }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    /// `S⁻¹ = S†`.
    pub fn inverse(&self) -> DMatrix<Complex64> {
        self.entries.adjoint()
    }

    /// `‖S S† − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        (&self.entries * self.entries.adjoint() - DMatrix::<Complex64>::identity(n, n)).norm()
    }

    /// Matrix product `self · rhs` (rhs applied first).
    pub fn compose(&self, rhs: &ScatteringMatrix) -> Result<ScatteringMatrix> {
        if self.dim() != rhs.dim() {
            return Err(Error::invalid("cannot compose scattering matrices of different size"));
        }
        Ok(Self { entries: &self.entries * &rhs.entries, labels: self.labels.clone() })
    }

    /// Writes `row,col,re,im` with 1-based indices, skipping exact zeros.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "re", "im"])?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.entries[(i, j)];
                if z.re != 0.0 || z.im != 0.0 {
                    w.write_record(&[(i + 1).to_string(), (j + 1).to_string(), z.re.to_string(), z.im.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// All tunable parameters of the collision chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    /// Environment beam-splitter angle; `π/2` (full transmission) is Markovian.
    pub theta_e: f64,
    pub collisions: usize,
    pub markovian: bool,
}

impl ChainConfig {
    /// Markovian chain.
    pub fn new(theta1: f64, theta2: f64, theta3: f64, phi_a: f64, phi_b: f64, collisions: usize) -> Self {
        Self { theta1, theta2, theta3, phi_a, phi_b, theta_e: FRAC_PI_2, collisions, markovian: true }
    }

    /// Same chain with environment–environment mixing at angle `theta_e`.
    pub fn with_theta_e(mut self, theta_e: f64) -> Self {
        self.theta_e = theta_e;
        self.markovian = false;
        self
    }

    /// Same chain with environment memory `eta = π/2 − θ_E` (`eta = 0` is Markovian).
    pub fn with_eta(self, eta: f64) -> Self {
        self.with_theta_e(FRAC_PI_2 - eta)
    }

    pub fn with_collisions(mut self, collisions: usize) -> Self {
        self.collisions = collisions;
        self
    }

    /// Environment memory angle `π/2 − θ_E`; zero for Markovian chains.
    pub fn eta(&self) -> f64 {
        if self.markovian {
            0.0
        } else {
            FRAC_PI_2 - self.theta_e
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("theta1", self.theta1), ("theta2", self.theta2), ("theta3", self.theta3), ("theta_e", self.theta_e)]
        {
            check_angle(name, v)?;
        }
        for (name, v) in [("phi_a", self.phi_a), ("phi_b", self.phi_b)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        if self.collisions == 0 {
            return Err(Error::invalid("collisions must be at least 1"));
        }
        Ok(())
    }
}

fn check_angle(name: &str, v: f64) -> Result<()> {
    if !(v >= -ANGLE_SLACK && v <= FRAC_PI_2 + ANGLE_SLACK) {
        return Err(Error::invalid(format!("{name} = {v} is outside [0, π/2]")));
    }
    Ok(())
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Two-mode mixer `[[cos θ, sin θ], [−sin θ, cos θ]]` on modes `(i, j)`,
/// identity elsewhere.
pub fn beam_splitter(theta: f64, mode_i: usize, mode_j: usize, dim: usize) -> Result<ScatteringMatrix> {
    if mode_i == mode_j || mode_i >= dim || mode_j >= dim {
        return Err(Error::invalid(format!("beam splitter modes ({mode_i}, {mode_j}) invalid for dimension {dim}")));
    }
    if !theta.is_finite() {
        return Err(Error::invalid("beam splitter angle must be finite"));
    }
    let (t, r) = theta.sin_cos();
    let mut m = DMatrix::identity(dim, dim);
    m[(mode_i, mode_i)] = c(r);
    m[(mode_i, mode_j)] = c(t);
    m[(mode_j, mode_i)] = c(-t);
    m[(mode_j, mode_j)] = c(r);
    Ok(ScatteringMatrix { entries: m, labels: port_labels(dim) })
}

/// `S⁽³⁾ S⁽²⁾ S⁽¹⁾` in mode order `[a₁, a₂, a₃]`: mixers on (1,2), (2,3), (1,2).
pub fn tritter(theta1: f64, theta2: f64, theta3: f64) -> Result<ScatteringMatrix> {
    check_angle("theta1", theta1)?;
    check_angle("theta2", theta2)?;
    check_angle("theta3", theta3)?;
    let s1 = beam_splitter(theta1, 0, 1, 3)?;
    let s2 = beam_splitter(theta2, 1, 2, 3)?;
    let s3 = beam_splitter(theta3, 0, 1, 3)?;
    s3.compose(&s2)?.compose(&s1)
}

/// Per-collision unitary in mode order `[system_a, system_b, env]`.
pub(crate) fn seim_matrix(cfg: &ChainConfig) -> Matrix3<Complex64> {
    let (t1, r1) = cfg.theta1.sin_cos();
    let (t2, r2) = cfg.theta2.sin_cos();
    let (t3, r3) = cfg.theta3.sin_cos();
    let s3 = Matrix3::new(c(r3), c(0.0), c(t3), c(0.0), c(1.0), c(0.0), c(-t3), c(0.0), c(r3));
    let s2 = Matrix3::new(c(1.0), c(0.0), c(0.0), c(0.0), c(r2), c(t2), c(0.0), c(-t2), c(r2));
    let s1 = Matrix3::new(c(r1), c(0.0), c(t1), c(0.0), c(1.0), c(0.0), c(-t1), c(0.0), c(r1));
    let phase = Matrix3::from_diagonal(&nalgebra::Vector3::new(
        Complex64::from_polar(1.0, cfg.phi_a),
        Complex64::from_polar(1.0, cfg.phi_b),
        c(1.0),
    ));
    s3 * s2 * s1 * phase
}

/// Scattering matrix of one system–environment interaction module.
pub fn seim(cfg: &ChainConfig) -> Result<ScatteringMatrix> {
    cfg.validate()?;
    let m = seim_matrix(cfg);
    Ok(ScatteringMatrix { entries: DMatrix::from_iterator(3, 3, m.iter().copied()), labels: chain_labels(1) })
}

/// Incremental builder of the chain product `S_ℓ · … · S₁`.
///
/// Each collision left-multiplies the running product by a matrix that only
/// touches rows `{system_a, system_b, env_ℓ}` (and, for non-Markovian chains,
/// the environment pair `{env_{ℓ−1}, env_ℓ}`), so advancing costs `O(L)`.
#[derive(Debug, Clone)]
pub struct ChainAccumulator {
    seim: Matrix3<Complex64>,
    /// `(cos η, sin η)` for the environment mixer, `None` when Markovian.
    env_mixer: Option<(f64, f64)>,
    collisions: usize,
    done: usize,
    product: DMatrix<Complex64>,
}

impl ChainAccumulator {
    pub fn new(cfg: &ChainConfig) -> Result<Self> {
        cfg.validate()?;
        let dim = cfg.collisions + 2;
        let env_mixer = (!cfg.markovian).then(|| {
            let eta = cfg.eta();
            (eta.cos(), eta.sin())
        });
        Ok(Self {
            seim: seim_matrix(cfg),
            env_mixer,
            collisions: cfg.collisions,
            done: 0,
            product: DMatrix::identity(dim, dim),
        })
    }

    /// Number of collisions applied so far.
    pub fn collisions_done(&self) -> usize {
        self.done
    }

    pub fn product(&self) -> &DMatrix<Complex64> {
        &self.product
    }

    /// Applies the next collision; returns false once the chain is complete.
    pub fn advance(&mut self) -> bool {
        if self.done == self.collisions {
            return false;
        }
        let j = self.done + 1;
        let env = j + 1;
        let cols = self.product.ncols();
        if let (Some((ce, se)), true) = (self.env_mixer, j >= 2) {
            let prev = env - 1;
            for k in 0..cols {
                let x = self.product[(prev, k)];
                let y = self.product[(env, k)];
                self.product[(prev, k)] = x * ce + y * se;
                self.product[(env, k)] = y * ce - x * se;
            }
        }
        let rows = [0, 1, env];
        let s = &self.seim;
        for k in 0..cols {
            let v = [self.product[(0, k)], self.product[(1, k)], self.product[(env, k)]];
            for (a, &row) in rows.iter().enumerate() {
                self.product[(row, k)] = s[(a, 0)] * v[0] + s[(a, 1)] * v[1] + s[(a, 2)] * v[2];
            }
        }
        self.done = j;
        true
    }

    pub fn into_scattering(self) -> ScatteringMatrix {
        let labels = chain_labels(self.collisions);
        ScatteringMatrix { entries: self.product, labels }
    }
}

/// Joint `(L+2) × (L+2)` scattering matrix of the full chain.
pub fn joint_scattering(cfg: &ChainConfig) -> Result<ScatteringMatrix> {
    let mut acc = ChainAccumulator::new(cfg)?;
    while acc.advance() {}
    Ok(acc.into_scattering())
}

/// Embeds the per-collision unitary for collision `j` (1-based) in the full chain.
fn embedded_collision(seim: &Matrix3<Complex64>, j: usize, dim: usize) -> DMatrix<Complex64> {
    let idx = [0, 1, j + 1];
    let mut m = DMatrix::identity(dim, dim);
    for (a, &ra) in idx.iter().enumerate() {
        for (b, &rb) in idx.iter().enumerate() {
            m[(ra, rb)] = seim[(a, b)];
        }
    }
    m
}

/// Same product as [`joint_scattering`] built from dense full-size factors.
/// `O(L⁴)`; used as a reference for the incremental path.
pub fn joint_scattering_dense(cfg: &ChainConfig) -> Result<ScatteringMatrix> {
    cfg.validate()?;
    let dim = cfg.collisions + 2;
    let seim = seim_matrix(cfg);
    let mut product = DMatrix::<Complex64>::identity(dim, dim);
    for j in 1..=cfg.collisions {
        let mut step = embedded_collision(&seim, j, dim);
        if !cfg.markovian && j >= 2 {
            let mixer = beam_splitter(cfg.eta(), j, j + 1, dim)?;
            step *= mixer.entries;
        }
        product = step * product;
    }
    Ok(ScatteringMatrix { entries: product, labels: chain_labels(cfg.collisions) })
}
