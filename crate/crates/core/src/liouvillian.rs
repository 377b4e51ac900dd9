//! Truncated-Fock master-equation model of the collision chain.
//!
//! To first order in the beam-splitter angles one collision acts like a unit
//! time step of a Lindblad equation with Hamiltonian `H = φ_a N_a + φ_b N_b`
//! and a single collective jump operator `o = ϑ̃_a a_a + ϑ̃_b a_b`, where
//! `ϑ̃_a = ϑ₁ + ϑ₃` and `ϑ̃_b = ϑ₂`.
//!
//! Superoperators use row-major vectorization, `vec(X)[i·d + j] = X[i, j]`,
//! so that `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.

use std::collections::BTreeMap;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Residual bound for `L̄† vec(I) = 0`.
pub const IDENTITY_RESIDUAL_TOL: f64 = 1e-10;
/// Eigenpairs with a larger relative residual flag the spectrum as ill-conditioned.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-7;
/// Default `|Re c|` threshold (scaled by `max(1, spectral radius)`).
pub const DEFAULT_RE_TOLERANCE: f64 = 1e-10;
/// Dark-state residual bound.
pub const DARK_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Operator on the two-mode truncated Fock space, basis `|n⟩⊗|m⟩`, `n` major.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    n_max: usize,
    entries: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn new(n_max: usize, entries: DMatrix<Complex64>) -> Result<Self> {
        let d = n_max * n_max;
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::invalid(format!(
                "operator is {}x{}, expected {d}x{d} for n_max = {n_max}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { n_max, entries })
    }

    /// Per-mode cutoff (single-mode dimension).
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max * self.n_max
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self { n_max: self.n_max, entries: self.entries.adjoint() }
    }

    /// Index of `|n, m⟩`.
    pub fn index(n_max: usize, n: usize, m: usize) -> usize {
        n * n_max + m
    }

    /// `|ψ⟩⟨ψ|` for a coefficient map; coefficients are normalized first.
    pub fn projector(n_max: usize, coeffs: &BTreeMap<(usize, usize), Complex64>) -> Result<Self> {
        let psi = state_vector(n_max, coeffs)?;
        Ok(Self { n_max, entries: &psi * psi.adjoint() })
    }
}

/// Ladder and number operators of both modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperators {
    pub a_a: FockOperator,
    pub a_b: FockOperator,
    pub n_a: FockOperator,
    pub n_b: FockOperator,
}

fn check_cutoff(n_max: usize) -> Result<()> {
    if n_max < 2 {
        return Err(Error::invalid(format!("Fock cutoff n_max = {n_max} must be at least 2")));
    }
    Ok(())
}

/// Single-mode truncated annihilation operator.
pub fn single_mode_annihilation(n_max: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(n_max, n_max);
    for n in 1..n_max {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

pub fn build_operators(n_max: usize) -> Result<FockOperators> {
    check_cutoff(n_max)?;
    let a = single_mode_annihilation(n_max);
    let id = DMatrix::<Complex64>::identity(n_max, n_max);
    let num = a.adjoint() * &a;
    let op = |m: DMatrix<Complex64>| FockOperator { n_max, entries: m };
    Ok(FockOperators {
        a_a: op(a.kronecker(&id)),
        a_b: op(id.kronecker(&a)),
        n_a: op(num.kronecker(&id)),
        n_b: op(id.kronecker(&num)),
    })
}

/// Collective jump operator with its effective couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub theta_tilde_a: f64,
    pub theta_tilde_b: f64,
    pub op: FockOperator,
}

/// `o = (ϑ₁ + ϑ₃) a_a + ϑ₂ a_b`.
pub fn jump_operator(theta1: f64, theta2: f64, theta3: f64, n_max: usize) -> Result<JumpOperator> {
    jump_operator_tilde(theta1 + theta3, theta2, n_max)
}

pub fn jump_operator_tilde(theta_tilde_a: f64, theta_tilde_b: f64, n_max: usize) -> Result<JumpOperator> {
    let ops = build_operators(n_max)?;
    let entries = ops.a_a.entries * c(theta_tilde_a) + ops.a_b.entries * c(theta_tilde_b);
    Ok(JumpOperator { theta_tilde_a, theta_tilde_b, op: FockOperator { n_max, entries } })
}

/// Heisenberg (adjoint) or Schrödinger generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Adjoint,
    Schrodinger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillianMatrix {
    pub picture: Picture,
    /// Single-mode (or single-qubit) dimension.
    pub n_max: usize,
    pub entries: DMatrix<Complex64>,
    pub theta_tilde_a: f64,
    pub theta_tilde_b: f64,
    pub phi_a: f64,
    pub phi_b: f64,
}

impl LiouvillianMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `‖L̄† vec(I)‖_∞`.
    pub fn identity_residual(&self) -> f64 {
        let d = self.n_max * self.n_max;
        let mut id = nalgebra::DVector::<Complex64>::zeros(d * d);
        for k in 0..d {
            id[k * d + k] = c(1.0);
        }
        (&self.entries * id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn hamiltonian(phi_a: f64, phi_b: f64, ops: &FockOperators) -> DMatrix<Complex64> {
    &ops.n_a.entries * c(phi_a) + &ops.n_b.entries * c(phi_b)
}

/// `i(H⊗I − I⊗Hᵀ) + o†⊗oᵀ − (o†o⊗I)/2 − (I⊗oᵀo*)/2`.
fn adjoint_generator(h: &DMatrix<Complex64>, o: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = h.nrows();
    let id = DMatrix::<Complex64>::identity(d, d);
    let od = o.adjoint();
    let odo = &od * o;
    let mut l = (h.kronecker(&id) - id.kronecker(&h.transpose())) * I;
    l += od.kronecker(&o.transpose());
    l -= odo.kronecker(&id) * c(0.5);
    l -= id.kronecker(&odo.transpose()) * c(0.5);
    l
}

/// `−i(H⊗I − I⊗Hᵀ) + O⊗O* − (O†O⊗I)/2 − (I⊗(O†O)ᵀ)/2`.
fn schrodinger_generator(h: &DMatrix<Complex64>, o: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = h.nrows();
    let id = DMatrix::<Complex64>::identity(d, d);
    let odo = o.adjoint() * o;
    let mut l = (h.kronecker(&id) - id.kronecker(&h.transpose())) * (-I);
    l += o.kronecker(&o.conjugate());
    l -= odo.kronecker(&id) * c(0.5);
    l -= id.kronecker(&odo.transpose()) * c(0.5);
    l
}

pub fn adjoint_liouvillian(phi_a: f64, phi_b: f64, jump: &JumpOperator, n_max: usize) -> Result<LiouvillianMatrix> {
    if jump.op.n_max != n_max {
        return Err(Error::invalid(format!(
            "jump operator built for n_max = {}, Liouvillian requested for {n_max}",
            jump.op.n_max
        )));
    }
    if !phi_a.is_finite() || !phi_b.is_finite() {
        return Err(Error::invalid("phases must be finite"));
    }
    let ops = build_operators(n_max)?;
    let h = hamiltonian(phi_a, phi_b, &ops);
    let lm = LiouvillianMatrix {
        picture: Picture::Adjoint,
        n_max,
        entries: adjoint_generator(&h, &jump.op.entries),
        theta_tilde_a: jump.theta_tilde_a,
        theta_tilde_b: jump.theta_tilde_b,
        phi_a,
        phi_b,
    };
    let res = lm.identity_residual();
    if !(res < IDENTITY_RESIDUAL_TOL) {
        return Err(Error::InternalConsistency(format!(
            "adjoint Liouvillian does not fix the identity (residual {res:e})"
        )));
    }
    Ok(lm)
}

/// Schrödinger-picture generator of the same model.
pub fn schrodinger_liouvillian(phi_a: f64, phi_b: f64, jump: &JumpOperator) -> Result<LiouvillianMatrix> {
    let n_max = jump.op.n_max;
    let ops = build_operators(n_max)?;
    let h = hamiltonian(phi_a, phi_b, &ops);
    Ok(LiouvillianMatrix {
        picture: Picture::Schrodinger,
        n_max,
        entries: schrodinger_generator(&h, &jump.op.entries),
        theta_tilde_a: jump.theta_tilde_a,
        theta_tilde_b: jump.theta_tilde_b,
        phi_a,
        phi_b,
    })
}

/// Two qubits with collective decay `O = ϑ̃_a σ⁻_a + ϑ̃_b σ⁻_b` and
/// `H = φ_a σ⁺_aσ⁻_a + φ_b σ⁺_bσ⁻_b`; basis `|s_a s_b⟩`, `σ⁻ = |0⟩⟨1|`.
pub fn spin_liouvillian(phi_a: f64, phi_b: f64, theta_tilde_a: f64, theta_tilde_b: f64) -> LiouvillianMatrix {
    let lower = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
    let id = DMatrix::<Complex64>::identity(2, 2);
    let sm_a = lower.kronecker(&id);
    let sm_b = id.kronecker(&lower);
    let h = sm_a.adjoint() * &sm_a * c(phi_a) + sm_b.adjoint() * &sm_b * c(phi_b);
    let o = &sm_a * c(theta_tilde_a) + &sm_b * c(theta_tilde_b);
    LiouvillianMatrix {
        picture: Picture::Schrodinger,
        n_max: 2,
        entries: schrodinger_generator(&h, &o),
        theta_tilde_a,
        theta_tilde_b,
        phi_a,
        phi_b,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted by descending real part.
    pub eigenvalues: Vec<Complex64>,
    /// `|Re c|` of the slowest decaying eigenvalue; 0 when none decays.
    pub gap: f64,
    /// False when every eigenvalue lies on the imaginary axis.
    pub gap_defined: bool,
    pub pure_imaginary_count: usize,
    pub zero_count: usize,
    /// Threshold actually used for `|Re c|`.
    pub re_threshold: f64,
    /// Largest relative eigen-residual `‖L ψ − c ψ‖ / (‖L‖ ‖ψ‖)`.
    pub max_residual: f64,
    pub well_conditioned: bool,
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues (and, for the residual check, eigenvectors) of a generator.
pub fn spectrum(lm: &LiouvillianMatrix, re_tolerance: f64) -> Result<Spectrum> {
    let n = lm.dim();
    let (s, u) = eigen_sequential(&lm.entries, true)?;
    let u = u.expect("eigenvectors requested");
    let norm = frobenius(&lm.entries).max(f64::MIN_POSITIVE);

    let mut max_residual: f64 = 0.0;
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = s[k];
        let v = nalgebra::DVector::from_fn(n, |i, _| u[(i, k)]);
        let vn = v.norm();
        if vn > 0.0 {
            let r = (&lm.entries * &v - &v * lambda).norm() / (norm * vn);
            max_residual = max_residual.max(r);
        }
        values.push(lambda);
    }
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical(format!("non-finite eigenvalue (max residual {max_residual:e})")));
    }
    Ok(classify(values, re_tolerance, max_residual))
}

/// Eigenvalues only, without the residual check.
pub fn eigenvalues(lm: &LiouvillianMatrix) -> Result<Vec<Complex64>> {
    Ok(eigen_sequential(&lm.entries, false)?.0)
}

/// Single-threaded complex eigendecomposition, so results do not depend on
/// the machine's core count.
fn eigen_sequential(m: &DMatrix<Complex64>, vectors: bool) -> Result<(Vec<Complex64>, Option<faer::Mat<Complex64>>)> {
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::evd::{evd_cplx, evd_scratch, ComputeEigenvectors};

    let n = m.nrows();
    let a = faer::Mat::<Complex64>::from_fn(n, n, |i, j| m[(i, j)]);
    let mut s = faer::diag::Diag::<Complex64>::zeros(n);
    let mut u = vectors.then(|| faer::Mat::<Complex64>::zeros(n, n));
    let want = if vectors { ComputeEigenvectors::Yes } else { ComputeEigenvectors::No };
    let par = faer::Par::Seq;
    let mut buf = MemBuffer::new(evd_scratch::<Complex64>(n, ComputeEigenvectors::No, want, par, Default::default()));
    evd_cplx(
        a.as_ref(),
        s.as_mut(),
        None,
        u.as_mut().map(|u| u.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let values = (0..n).map(|k| s.column_vector()[k]).collect();
    Ok((values, u))
}

fn classify(mut values: Vec<Complex64>, re_tolerance: f64, max_residual: f64) -> Spectrum {
    values.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    let radius = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = re_tolerance * radius.max(1.0);
    let decaying = values.iter().find(|z| z.re.abs() > tol);
    let pure_imaginary_count = values.iter().filter(|z| z.re.abs() <= tol && z.im.abs() > tol).count();
    let zero_count = values.iter().filter(|z| z.norm() <= tol).count();
    Spectrum {
        gap: decaying.map_or(0.0, |z| z.re.abs()),
        gap_defined: decaying.is_some(),
        eigenvalues: values,
        pure_imaginary_count,
        zero_count,
        re_threshold: tol,
        max_residual,
        well_conditioned: max_residual <= EIGEN_RESIDUAL_TOL,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkStateReport {
    /// `‖o|ψ⟩‖ < 1e−10`.
    pub dark: bool,
    pub residual: f64,
    /// All support shares one energy `φ_a n + φ_b m`.
    pub hamiltonian_eigenstate: bool,
    /// Dark and stationary under `H`.
    pub decoherence_free: bool,
}

fn normalized(coeffs: &BTreeMap<(usize, usize), Complex64>) -> Result<BTreeMap<(usize, usize), Complex64>> {
    if coeffs.is_empty() {
        return Err(Error::invalid("empty coefficient map"));
    }
    let norm = coeffs.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::invalid("coefficient map has zero or non-finite norm"));
    }
    Ok(coeffs.iter().map(|(&k, &v)| (k, v / norm)).collect())
}

/// Applies `o` in the untruncated Fock basis and checks the dissipator
/// annihilates `|ψ⟩ = Σ c_{n,m} |n, m⟩`.
pub fn dark_state_check(
    coeffs: &BTreeMap<(usize, usize), Complex64>,
    theta_tilde_a: f64,
    theta_tilde_b: f64,
    phi_a: f64,
    phi_b: f64,
) -> Result<DarkStateReport> {
    let coeffs = normalized(coeffs)?;
    // (o ψ)_{n,m} = ϑ̃_a √(n+1) c_{n+1,m} + ϑ̃_b √(m+1) c_{n,m+1}.
    let mut image: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    for (&(n, m), &v) in &coeffs {
        if n > 0 {
            *image.entry((n - 1, m)).or_default() += v * theta_tilde_a * (n as f64).sqrt();
        }
        if m > 0 {
            *image.entry((n, m - 1)).or_default() += v * theta_tilde_b * (m as f64).sqrt();
        }
    }
    let residual = image.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let energies: Vec<f64> =
        coeffs.iter().filter(|(_, v)| v.norm() > 0.0).map(|(&(n, m), _)| phi_a * n as f64 + phi_b * m as f64).collect();
    let e0 = energies[0];
    let scale = phi_a.abs().max(phi_b.abs()).max(1.0);
    let hamiltonian_eigenstate = energies.iter().all(|e| (e - e0).abs() <= 1e-12 * scale);
    let dark = residual < DARK_TOL;
    Ok(DarkStateReport { dark, residual, hamiltonian_eigenstate, decoherence_free: dark && hamiltonian_eigenstate })
}

/// Normalized state vector on the truncated space.
pub fn state_vector(
    n_max: usize,
    coeffs: &BTreeMap<(usize, usize), Complex64>,
) -> Result<nalgebra::DVector<Complex64>> {
    check_cutoff(n_max)?;
    let coeffs = normalized(coeffs)?;
    let mut psi = nalgebra::DVector::zeros(n_max * n_max);
    for (&(n, m), &v) in &coeffs {
        if n >= n_max || m >= n_max {
            return Err(Error::invalid(format!("|{n},{m}⟩ lies above the cutoff n_max = {n_max}")));
        }
        psi[FockOperator::index(n_max, n, m)] = v;
    }
    Ok(psi)
}

/// One-excitation dark state `∝ ϑ̃_b|1,0⟩ − ϑ̃_a|0,1⟩`.
pub fn one_excitation_dark_state(theta_tilde_a: f64, theta_tilde_b: f64) -> BTreeMap<(usize, usize), Complex64> {
    BTreeMap::from([((1, 0), c(theta_tilde_b)), ((0, 1), c(-theta_tilde_a))])
}

/// Two-excitation dark state solving both shell conditions with `c₂₀ = 1`.
pub fn two_excitation_dark_state(theta_tilde_a: f64, theta_tilde_b: f64) -> BTreeMap<(usize, usize), Complex64> {
    let r = theta_tilde_a / theta_tilde_b;
    BTreeMap::from([((2, 0), c(1.0)), ((1, 1), c(-std::f64::consts::SQRT_2 * r)), ((0, 2), c(r * r))])
}

/// Density matrices at integer times `0, 1, …, t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySeries {
    pub n_max: usize,
    pub states: Vec<DMatrix<Complex64>>,
    pub max_trace_drift: f64,
}

impl DensitySeries {
    pub fn expectation(&self, op: &FockOperator) -> Vec<Complex64> {
        self.states.iter().map(|rho| (op.entries() * rho).trace()).collect()
    }

    /// `⟨ψ|ρ(t)|ψ⟩` for a pure reference state.
    pub fn fidelity_with(&self, psi: &nalgebra::DVector<Complex64>) -> Vec<f64> {
        self.states.iter().map(|rho| (psi.adjoint() * rho * psi)[(0, 0)].re).collect()
    }
}

fn check_density(rho: &DMatrix<Complex64>) -> Result<()> {
    let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > 1e-10 {
        return Err(Error::invalid(format!("density matrix not Hermitian (defect {herm:e})")));
    }
    let tr = rho.trace();
    if (tr - c(1.0)).norm() > 1e-10 {
        return Err(Error::invalid(format!("density matrix trace {tr} is not 1")));
    }
    let h = (rho + rho.adjoint()) * c(0.5);
    let min = h.symmetric_eigenvalues().min();
    if min < -1e-10 {
        return Err(Error::invalid(format!("density matrix not positive (min eigenvalue {min:e})")));
    }
    Ok(())
}

/// Fixed-step RK4 integration of
/// `dρ/dt = −i[H, ρ] + oρo† − o†oρ/2 − ρo†o/2`, recording every unit time.
pub fn lindblad_evolve(
    rho0: &FockOperator,
    phi_a: f64,
    phi_b: f64,
    jump: &JumpOperator,
    t_max: usize,
    dt: f64,
) -> Result<DensitySeries> {
    let n_max = rho0.n_max;
    if jump.op.n_max != n_max {
        return Err(Error::invalid("density matrix and jump operator use different cutoffs"));
    }
    let substeps = (1.0 / dt).round();
    if !(dt > 0.0) || !(dt <= 1.0) || (substeps * dt - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("time step {dt} must divide one unit of time")));
    }
    let substeps = substeps as usize;
    check_density(&rho0.entries)?;

    let ops = build_operators(n_max)?;
    // Effective non-Hermitian generator K = −iH − o†o/2, so dρ/dt = Kρ + ρK† + oρo†.
    let h = hamiltonian(phi_a, phi_b, &ops);
    let o = &jump.op.entries;
    let od = o.adjoint();
    let k = &h * (-I) - (&od * o) * c(0.5);
    let d = k.nrows();
    let dense = |m: &DMatrix<Complex64>| Mat::<Complex64>::from_fn(d, d, |i, j| m[(i, j)]);
    let (kf, kdf, of, odf) = (dense(&k), dense(&k.adjoint()), dense(o), dense(&od));
    let mut tmp = Mat::<Complex64>::zeros(d, d);
    let mut rhs = |rho: &Mat<Complex64>, out: &mut Mat<Complex64>| {
        matmul(out.as_mut(), Accum::Replace, &kf, rho, c(1.0), Par::Seq);
        matmul(out.as_mut(), Accum::Add, rho, &kdf, c(1.0), Par::Seq);
        matmul(tmp.as_mut(), Accum::Replace, &of, rho, c(1.0), Par::Seq);
        matmul(out.as_mut(), Accum::Add, &tmp, &odf, c(1.0), Par::Seq);
    };
    let axpy =
        |x: &Mat<Complex64>, a: Complex64, y: &Mat<Complex64>| Mat::from_fn(d, d, |i, j| x[(i, j)] + a * y[(i, j)]);

    let mut rho = dense(&rho0.entries);
    let mut states = Vec::with_capacity(t_max + 1);
    states.push(rho0.entries.clone());
    let mut max_drift: f64 = 0.0;
    let dtc = c(dt);
    let [mut k1, mut k2, mut k3, mut k4] = std::array::from_fn(|_| Mat::<Complex64>::zeros(d, d));
    for t in 1..=t_max {
        for _ in 0..substeps {
            rhs(&rho, &mut k1);
            rhs(&axpy(&rho, dtc * 0.5, &k1), &mut k2);
            rhs(&axpy(&rho, dtc * 0.5, &k2), &mut k3);
            rhs(&axpy(&rho, dtc, &k3), &mut k4);
            let w = dtc / 6.0;
            rho = Mat::from_fn(d, d, |i, j| {
                rho[(i, j)] + w * (k1[(i, j)] + c(2.0) * (k2[(i, j)] + k3[(i, j)]) + k4[(i, j)])
            });
        }
        let trace: Complex64 = (0..d).map(|i| rho[(i, i)]).sum();
        let drift = (trace - c(1.0)).norm();
        max_drift = max_drift.max(drift);
        if drift > 1e-6 {
            return Err(Error::Numerical(format!("trace drift {drift:e} at t = {t}; reduce the step size")));
        }
        states.push(DMatrix::from_fn(d, d, |i, j| rho[(i, j)]));
    }
    Ok(DensitySeries { n_max, states, max_trace_drift: max_drift })
}

/// Truncated coherent product state `|α_a⟩⊗|α_b⟩`, renormalized.
pub fn coherent_density(n_max: usize, alpha_a: Complex64, alpha_b: Complex64) -> Result<FockOperator> {
    check_cutoff(n_max)?;
    let amp = |alpha: Complex64| -> Vec<Complex64> {
        let mut v = Vec::with_capacity(n_max);
        let mut term = c((-0.5 * alpha.norm_sqr()).exp());
        for n in 0..n_max {
            if n > 0 {
                term = term * alpha / (n as f64).sqrt();
            }
            v.push(term);
        }
        v
    };
    let (va, vb) = (amp(alpha_a), amp(alpha_b));
    let mut coeffs = BTreeMap::new();
    for n in 0..n_max {
        for m in 0..n_max {
            coeffs.insert((n, m), va[n] * vb[m]);
        }
    }
    FockOperator::projector(n_max, &coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, SQRT_2};

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn ladder_entries() {
        let a = single_mode_annihilation(3);
        assert_eq!(a[(0, 1)], c(1.0));
        assert!((a[(1, 2)].re - SQRT_2).abs() < 1e-15);
        assert_eq!(a.iter().filter(|z| z.norm() > 0.0).count(), 2);
    }

    #[test]
    fn modes_commute() {
        let ops = build_operators(4).unwrap();
        let comm = &ops.a_a.entries * &ops.a_b.entries - &ops.a_b.entries * &ops.a_a.entries;
        assert_eq!(max_abs(&comm), 0.0);
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let n = 5;
        let a = single_mode_annihilation(n);
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        let id = DMatrix::<Complex64>::identity(n - 1, n - 1);
        assert!(max_abs(&(comm.view((0, 0), (n - 1, n - 1)) - id)) < 1e-14);
        assert!((comm[(n - 1, n - 1)].re - (1.0 - n as f64)).abs() < 1e-12);
    }

    #[test]
    fn cutoff_too_small() {
        assert!(matches!(build_operators(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn jump_operator_examples() {
        let j = jump_operator(FRAC_PI_8, FRAC_PI_4, FRAC_PI_8, 3).unwrap();
        let ops = build_operators(3).unwrap();
        let expect = (&ops.a_a.entries + &ops.a_b.entries) * c(FRAC_PI_4);
        assert!(max_abs(&(j.op.entries() - expect)) < 1e-15);
        let zero = jump_operator(0.0, 0.0, 0.0, 3).unwrap();
        assert_eq!(max_abs(zero.op.entries()), 0.0);
        // Vacuum is annihilated.
        assert_eq!(j.op.entries().column(0).iter().map(|z| z.norm()).sum::<f64>(), 0.0);
    }

    #[test]
    fn identity_is_fixed_point() {
        let j = jump_operator(0.3, 0.5, 0.2, 4).unwrap();
        let l = adjoint_liouvillian(0.4, -0.9, &j, 4).unwrap();
        assert!(l.identity_residual() < 1e-12);
        assert_eq!(l.dim(), 256);
        assert!(adjoint_liouvillian(0.4, 0.1, &j, 3).is_err());
    }

    #[test]
    fn closed_dynamics_spectrum() {
        let (pa, pb) = (0.3, 0.7);
        let j = jump_operator(0.0, 0.0, 0.0, 3).unwrap();
        let l = adjoint_liouvillian(pa, pb, &j, 3).unwrap();
        let s = spectrum(&l, DEFAULT_RE_TOLERANCE).unwrap();
        assert!(!s.gap_defined);
        assert_eq!(s.gap, 0.0);
        for z in &s.eigenvalues {
            assert!(z.re.abs() < 1e-12);
            // Im = φ_a Δn + φ_b Δm with |Δ| ≤ 2.
            let hit =
                (-2..=2).any(|dn: i32| (-2..=2).any(|dm: i32| (z.im - (pa * dn as f64 + pb * dm as f64)).abs() < 1e-9));
            assert!(hit, "{z}");
        }
    }

    #[test]
    fn spectrum_conjugation_symmetric_and_stable() {
        let j = jump_operator(0.2, 0.4, 0.1, 3).unwrap();
        let l = adjoint_liouvillian(0.3, 0.5, &j, 3).unwrap();
        let s = spectrum(&l, DEFAULT_RE_TOLERANCE).unwrap();
        assert!(s.well_conditioned, "{}", s.max_residual);
        assert!(s.gap_defined && s.gap > 0.0);
        for z in &s.eigenvalues {
            assert!(z.re <= 1e-9);
            assert!(s.eigenvalues.iter().any(|w| (w - z.conj()).norm() < 1e-9));
        }
        assert!(s.eigenvalues.iter().any(|z| z.norm() < 1e-10));
        for w in s.eigenvalues.windows(2) {
            assert!(w[0].re >= w[1].re);
        }
    }

    #[test]
    fn dark_state_examples() {
        let (ta, tb) = (0.7, 0.4);
        let r = dark_state_check(&one_excitation_dark_state(ta, tb), ta, tb, 0.3, 0.3).unwrap();
        assert!(r.dark && r.residual < 1e-14 && r.decoherence_free);
        let r = dark_state_check(&two_excitation_dark_state(ta, tb), ta, tb, 0.3, 0.3).unwrap();
        assert!(r.dark && r.hamiltonian_eigenstate);
        let r = dark_state_check(&two_excitation_dark_state(ta, tb), ta, tb, 0.3, 0.5).unwrap();
        assert!(r.dark && !r.hamiltonian_eigenstate && !r.decoherence_free);
        let single = BTreeMap::from([((1, 0), c(1.0))]);
        assert!(!dark_state_check(&single, ta, tb, 0.0, 0.0).unwrap().dark);
        assert!(dark_state_check(&BTreeMap::new(), ta, tb, 0.0, 0.0).is_err());
    }

    #[test]
    fn vacuum_is_stationary() {
        let j = jump_operator(0.2, 0.3, 0.2, 3).unwrap();
        let rho = FockOperator::projector(3, &BTreeMap::from([((0, 0), c(1.0))])).unwrap();
        let s = lindblad_evolve(&rho, 0.1, 0.2, &j, 5, 0.1).unwrap();
        for r in &s.states {
            assert!(max_abs(&(r - rho.entries())) < 1e-14);
        }
    }

    #[test]
    fn evolution_matches_exponential() {
        let n_max = 3;
        let j = jump_operator(0.3, 0.2, 0.1, n_max).unwrap();
        let (pa, pb) = (0.4, 0.1);
        let rho = coherent_density(n_max, Complex64::new(0.4, 0.1), Complex64::new(-0.2, 0.3)).unwrap();
        let series = lindblad_evolve(&rho, pa, pb, &j, 3, 0.05).unwrap();
        assert!(series.max_trace_drift < 1e-8);
        let l = schrodinger_liouvillian(pa, pb, &j).unwrap();
        let d = n_max * n_max;
        let mut v = nalgebra::DVector::from_fn(d * d, |k, _| rho.entries()[(k / d, k % d)]);
        // Independent propagation by a Taylor-series exponential of the superoperator.
        let mut prop = DMatrix::<Complex64>::identity(d * d, d * d);
        let mut term = prop.clone();
        for k in 1..40 {
            term = &term * &l.entries / c(k as f64);
            prop += &term;
        }
        for t in 1..=3 {
            v = &prop * v;
            let expect = DMatrix::from_fn(d, d, |i, jj| v[i * d + jj]);
            assert!(max_abs(&(&series.states[t] - expect)) < 1e-8);
        }
    }

    #[test]
    fn bad_density_rejected() {
        let j = jump_operator(0.2, 0.3, 0.2, 2).unwrap();
        let rho = FockOperator::new(2, DMatrix::identity(4, 4)).unwrap();
        assert!(lindblad_evolve(&rho, 0.0, 0.0, &j, 1, 0.1).is_err());
        let ok = FockOperator::projector(2, &BTreeMap::from([((0, 0), c(1.0))])).unwrap();
        assert!(lindblad_evolve(&ok, 0.0, 0.0, &j, 1, 0.3).is_err());
    }

    #[test]
    fn spin_model() {
        let l = spin_liouvillian(0.3, 0.3, 0.5, 0.5);
        assert_eq!(l.dim(), 16);
        let singlet = [0.0, 1.0, -1.0, 0.0].map(|x| x / SQRT_2);
        let v = nalgebra::DVector::from_fn(16, |k, _| c(singlet[k / 4] * singlet[k % 4]));
        assert!((&l.entries * v).norm() < 1e-14);
        let s = spectrum(&l, DEFAULT_RE_TOLERANCE).unwrap();
        assert!(s.zero_count >= 2, "{:?}", s.eigenvalues);
        let closed = spectrum(&spin_liouvillian(0.3, 0.7, 0.0, 0.0), DEFAULT_RE_TOLERANCE).unwrap();
        assert!(closed.eigenvalues.iter().all(|z| z.re.abs() < 1e-12));
    }

    #[test]
    fn spin_model_preserves_trace() {
        let l = spin_liouvillian(0.2, 0.5, 0.4, 0.9);
        // Row vector vec(I)ᵀ annihilates the generator: trace is conserved.
        for col in 0..16 {
            let s: Complex64 = (0..4).map(|k| l.entries[(k * 4 + k, col)]).sum();
            assert!(s.norm() < 1e-14);
        }
    }
}
