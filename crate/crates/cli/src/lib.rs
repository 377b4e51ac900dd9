//! Command implementations behind the `tritter-qcm` binary.

pub mod config;

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use tritter_qcm::analysis::fit_decay;
use tritter_qcm::gaussian::{default_wigner_grid, wigner};
use tritter_qcm::liouvillian::{
    adjoint_liouvillian, dark_state_check, jump_operator, one_excitation_dark_state, spectrum,
    two_excitation_dark_state,
};
use tritter_qcm::measures::{entanglement_series, relative_measure};
use tritter_qcm::output;
use tritter_qcm::propagator::propagate;
use tritter_qcm::sweep::run_sweep;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] tritter_qcm::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 1 for usage and schema problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(io_err(&path))?;
    Ok((path, BufWriter::new(f)))
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Resolved output directory: explicit flag or environment, then config, then `out`.
pub fn output_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

/// Writes `trajectory.csv` and `measures.csv`; returns the written paths.
pub fn cmd_propagate(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let traj = propagate(&cfg.chain, &cfg.system_a, &cfg.system_b, &cfg.env)?;
    let sync = relative_measure(&traj)?;
    let ent = entanglement_series(&traj)?;
    prepare_dir(out)?;
    let (p1, w) = create(out, "trajectory.csv")?;
    output::write_trajectory(w, &traj)?;
    let (p2, w) = create(out, "measures.csv")?;
    output::write_measures(w, &sync, &ent)?;
    Ok(vec![p1, p2])
}

/// Writes `sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<PathBuf, CliError> {
    let grid = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("config has no [sweep] section".into()))?;
    let rows = run_sweep(&cfg.chain, grid, &cfg.system_a, &cfg.system_b, &cfg.env, jobs)?;
    prepare_dir(out)?;
    let (p, w) = create(out, "sweep.csv")?;
    output::write_sweep(w, &rows)?;
    Ok(p)
}

/// Writes `spectrum.csv` and `spectrum_report.txt`; returns the report text.
pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let ch = &cfg.chain;
    let opts = &cfg.spectrum;
    let jump = jump_operator(ch.theta1, ch.theta2, ch.theta3, opts.n_max)?;
    let lm = adjoint_liouvillian(ch.phi_a, ch.phi_b, &jump, opts.n_max)?;
    let spec = spectrum(&lm, opts.re_tolerance)?;

    let mut r = String::new();
    let valid = cfg.env.alpha.norm() == 0.0;
    if !valid {
        eprintln!("warning: env.alpha != 0; the master-equation comparison assumes a vacuum-mean environment");
    }
    let _ = writeln!(r, "valid_comparison = {valid}");
    let _ = writeln!(r, "n_max = {}", opts.n_max);
    let _ = writeln!(r, "theta_tilde_a = {}", jump.theta_tilde_a);
    let _ = writeln!(r, "theta_tilde_b = {}", jump.theta_tilde_b);
    let _ = writeln!(r, "eigenvalues = {}", spec.eigenvalues.len());
    let _ = writeln!(r, "pure_imaginary_count = {}", spec.pure_imaginary_count);
    let _ = writeln!(r, "zero_count = {}", spec.zero_count);
    let _ = writeln!(r, "gap_defined = {}", spec.gap_defined);
    let _ = writeln!(r, "decaying_gap = {}", spec.gap);
    let persistent = spec.pure_imaginary_count > 0;
    let asymptotic = if persistent { 0.0 } else { spec.gap };
    let _ = writeln!(r, "persistent_oscillation = {persistent}");
    let _ = writeln!(r, "asymptotic_gap = {asymptotic}");
    let _ = writeln!(r, "max_eigen_residual = {:e}", spec.max_residual);
    let _ = writeln!(r, "well_conditioned = {}", spec.well_conditioned);

    let traj = propagate(ch, &cfg.system_a, &cfg.system_b, &cfg.env)?;
    let window = opts.fit_window.unwrap_or((ch.collisions / 2, ch.collisions));
    match fit_decay(&traj, 0, window) {
        Ok(fit) => {
            let _ = writeln!(r, "fit_window = [{}, {}]", window.0, window.1);
            let _ = writeln!(r, "fitted_rate = {}", fit.rate);
            let _ = writeln!(r, "fit_r_squared = {}", fit.r_squared);
            if asymptotic > 0.0 {
                let _ = writeln!(r, "relative_mismatch = {}", (fit.rate - asymptotic).abs() / asymptotic);
            }
        }
        Err(e) => {
            let _ = writeln!(r, "fitted_rate = unavailable ({e})");
        }
    }

    let (ta, tb) = (jump.theta_tilde_a, jump.theta_tilde_b);
    if tb != 0.0 {
        for (name, coeffs) in [
            ("one_excitation", one_excitation_dark_state(ta, tb)),
            ("two_excitation", two_excitation_dark_state(ta, tb)),
        ] {
            let d = dark_state_check(&coeffs, ta, tb, ch.phi_a, ch.phi_b)?;
            let cs: Vec<String> = coeffs.iter().map(|((n, m), v)| format!("c{n}{m}={}{:+}i", v.re, v.im)).collect();
            let _ = writeln!(
                r,
                "dark_state.{name} = {{ coefficients = \"{}\", residual = {:e}, dark = {}, hamiltonian_eigenstate = {}, decoherence_free = {} }}",
                cs.join(" "),
                d.residual,
                d.dark,
                d.hamiltonian_eigenstate,
                d.decoherence_free
            );
        }
    }

    prepare_dir(out)?;
    let (_, w) = create(out, "spectrum.csv")?;
    output::write_spectrum(w, &spec.eigenvalues)?;
    let path = out.join("spectrum_report.txt");
    std::fs::write(&path, &r).map_err(io_err(&path))?;
    Ok(r)
}

/// Writes `wigner_L{l}_{a,b}.csv` for every requested snapshot.
pub fn cmd_wigner(cfg: &RunConfig, out: &Path, snapshots: &[usize]) -> Result<Vec<PathBuf>, CliError> {
    if snapshots.is_empty() {
        return Err(CliError::Usage("no Wigner snapshots requested (use --collisions or [wigner] collisions)".into()));
    }
    if let Some(&l) = snapshots.iter().find(|&&l| l > cfg.chain.collisions) {
        return Err(CliError::Usage(format!(
            "snapshot {l} exceeds the configured {} collisions",
            cfg.chain.collisions
        )));
    }
    let traj = propagate(&cfg.chain, &cfg.system_a, &cfg.system_b, &cfg.env)?;
    prepare_dir(out)?;
    let mut written = Vec::new();
    for &l in snapshots {
        let point = &traj.points[l];
        for (mode, tag) in [(0, "a"), (1, "b")] {
            let state = point.mode_state(mode)?;
            let grid = default_wigner_grid(&state, cfg.wigner.points);
            let w = wigner(&state, &grid)?;
            let (p, f) = create(out, &format!("wigner_L{l}_{tag}.csv"))?;
            output::write_wigner(f, &grid, &w)?;
            written.push(p);
        }
    }
    Ok(written)
}
