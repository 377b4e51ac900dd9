//! TOML run configuration.
//!
//! Angles may be numbers (radians) or short expressions such as `"pi/4"`,
//! `"-pi/8"`, `"3*pi/8"` or `"0.1"`. Every section rejects unknown keys.
//! Validation errors carry the line of the offending key.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;
use tritter_qcm::optics::ChainConfig;
use tritter_qcm::propagator::{EnvModeSpec, SystemModeSpec};
use tritter_qcm::sweep::{AxisSpec, GridSpec};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Number(f64),
    Expr(String),
}

impl Angle {
    pub fn radians(&self) -> Result<f64, String> {
        match self {
            Angle::Number(x) => Ok(*x),
            Angle::Expr(s) => parse_angle(s),
        }
    }
}

/// Evaluates a product/quotient of numbers and `pi` with an optional sign.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    if body.is_empty() {
        return Err(format!("empty angle expression {text:?}"));
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut token = String::new();
    let apply = |value: &mut f64, op: char, token: &str| -> Result<(), String> {
        let x = match token {
            "pi" | "π" | "PI" => std::f64::consts::PI,
            "" => return Err(format!("malformed angle expression {text:?}")),
            t => t.parse::<f64>().map_err(|_| format!("malformed angle expression {text:?}"))?,
        };
        if op == '*' {
            *value *= x;
        } else {
            *value /= x;
        }
        Ok(())
    };
    for ch in body.chars() {
        if ch == '*' || ch == '/' {
            apply(&mut value, op, &token)?;
            token.clear();
            op = ch;
        } else {
            token.push(ch);
        }
    }
    apply(&mut value, op, &token)?;
    let v = sign * value;
    if !v.is_finite() {
        return Err(format!("angle expression {text:?} is not finite"));
    }
    Ok(v)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub theta1: Angle,
    pub theta2: Angle,
    pub theta3: Angle,
    pub phi_a: Angle,
    pub phi_b: Angle,
    pub collisions: usize,
    /// Environment mixing angle; 0 is Markovian.
    pub eta: Option<Angle>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    #[serde(default)]
    pub n_th: f64,
    #[serde(default)]
    pub xi: f64,
    #[serde(default = "zero_angle")]
    pub varphi: Angle,
    /// `[re, im]`.
    #[serde(default)]
    pub alpha: [f64; 2],
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    #[serde(default)]
    pub alpha: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub start: Angle,
    pub stop: Angle,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub theta1: Angle,
    /// Offsets `ϑ₂ − ϑ₁`.
    pub d21: AxisSection,
    /// Offsets `ϑ₃ − ϑ₁`.
    pub d31: AxisSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// `[lo, hi]` collision window for the decay fit; defaults to the second half of the run.
    pub fit_window: Option<[usize; 2]>,
    #[serde(default = "default_re_tolerance")]
    pub re_tolerance: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSection {
    #[serde(default)]
    pub collisions: Vec<usize>,
    #[serde(default = "default_points")]
    pub points: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub chain: ChainSection,
    pub system_a: ModeSection,
    pub system_b: ModeSection,
    #[serde(default)]
    pub env: EnvSection,
    pub sweep: Option<SweepSection>,
    pub spectrum: Option<SpectrumSection>,
    pub wigner: Option<WignerSection>,
    #[serde(default)]
    pub output: OutputSection,
}

fn zero_angle() -> Angle {
    Angle::Number(0.0)
}
fn default_n_max() -> usize {
    5
}
fn default_re_tolerance() -> f64 {
    tritter_qcm::liouvillian::DEFAULT_RE_TOLERANCE
}
fn default_points() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    pub n_max: usize,
    pub fit_window: Option<(usize, usize)>,
    pub re_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerOptions {
    pub collisions: Vec<usize>,
    pub points: usize,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chain: ChainConfig,
    pub system_a: SystemModeSpec,
    pub system_b: SystemModeSpec,
    pub env: EnvModeSpec,
    pub sweep: Option<GridSpec>,
    pub spectrum: SpectrumOptions,
    pub wigner: WignerOptions,
    pub output_dir: Option<PathBuf>,
}

/// Line (1-based) of `key` inside `[section]` (dotted sections allowed).
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
            current = h.trim().to_string();
            continue;
        }
        let Some((k, _)) = t.split_once('=') else { continue };
        let k = k.trim();
        if current == section && (k == key || k.starts_with(&format!("{key}."))) {
            return Some(i + 1);
        }
        // `d21 = { start = ... }` style inline tables.
        if let Some((parent, child)) = section.rsplit_once('.') {
            if current == parent && k == child {
                return Some(i + 1);
            }
        }
    }
    src.lines().position(|l| l.trim().starts_with(&format!("[{section}]"))).map(|i| i + 1)
}

struct Ctx<'a> {
    src: &'a str,
    path: &'a Path,
}

impl Ctx<'_> {
    fn err(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> CliError {
        let line = locate(self.src, section, key).map_or(String::new(), |l| format!(":{l}"));
        CliError::Config(format!("{}{line}: {section}.{key}: {msg}", self.path.display()))
    }

    fn angle(&self, section: &str, key: &str, a: &Angle) -> Result<f64, CliError> {
        a.radians().map_err(|m| self.err(section, key, m))
    }

    fn beam_angle(&self, section: &str, key: &str, a: &Angle) -> Result<f64, CliError> {
        let v = self.angle(section, key, a)?;
        if !(-1e-12..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&v) {
            return Err(self.err(section, key, format!("{v} is outside [0, pi/2]")));
        }
        Ok(v)
    }

    fn mode(&self, section: &str, m: &ModeSection) -> Result<SystemModeSpec, CliError> {
        if !(m.n_th >= 0.0 && m.n_th.is_finite()) {
            return Err(self.err(section, "n_th", format!("{} must be finite and >= 0", m.n_th)));
        }
        if !(m.xi >= 0.0 && m.xi.is_finite()) {
            return Err(self.err(section, "xi", format!("{} must be finite and >= 0", m.xi)));
        }
        if !m.alpha.iter().all(|x| x.is_finite()) {
            return Err(self.err(section, "alpha", "components must be finite"));
        }
        let varphi = self.angle(section, "varphi", &m.varphi)?;
        Ok(SystemModeSpec::new(m.n_th, m.xi, varphi, Complex64::new(m.alpha[0], m.alpha[1])))
    }
}

impl RunConfig {
    pub fn from_str(src: &str, path: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(src)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.to_string().trim_end())))?;
        let ctx = Ctx { src, path };

        let c = &raw.chain;
        let theta1 = ctx.beam_angle("chain", "theta1", &c.theta1)?;
        let theta2 = ctx.beam_angle("chain", "theta2", &c.theta2)?;
        let theta3 = ctx.beam_angle("chain", "theta3", &c.theta3)?;
        let phi_a = ctx.angle("chain", "phi_a", &c.phi_a)?;
        let phi_b = ctx.angle("chain", "phi_b", &c.phi_b)?;
        if c.collisions == 0 {
            return Err(ctx.err("chain", "collisions", "must be at least 1"));
        }
        let mut chain = ChainConfig::new(theta1, theta2, theta3, phi_a, phi_b, c.collisions);
        if let Some(eta) = &c.eta {
            chain = chain.with_eta(ctx.beam_angle("chain", "eta", eta)?);
        }

        let system_a = ctx.mode("system_a", &raw.system_a)?;
        let system_b = ctx.mode("system_b", &raw.system_b)?;
        if !raw.env.alpha.iter().all(|x| x.is_finite()) {
            return Err(ctx.err("env", "alpha", "components must be finite"));
        }
        let env = EnvModeSpec { alpha: Complex64::new(raw.env.alpha[0], raw.env.alpha[1]) };

        let sweep = match &raw.sweep {
            None => None,
            Some(s) => {
                let theta1 = ctx.beam_angle("sweep", "theta1", &s.theta1)?;
                let mut axes = Vec::new();
                for (name, ax) in [("d21", &s.d21), ("d31", &s.d31)] {
                    let sec = format!("sweep.{name}");
                    let start = ctx.angle(&sec, "start", &ax.start)?;
                    let stop = ctx.angle(&sec, "stop", &ax.stop)?;
                    if ax.steps < 2 {
                        return Err(ctx.err(&sec, "steps", format!("{} must be at least 2", ax.steps)));
                    }
                    for (k, v) in [("start", start), ("stop", stop)] {
                        let t = theta1 + v;
                        if !(-1e-12..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&t) {
                            return Err(ctx.err(&sec, k, format!("theta1 + {v} = {t} is outside [0, pi/2]")));
                        }
                    }
                    axes.push(AxisSpec::new(start, stop, ax.steps));
                }
                Some(GridSpec { axis1: axes[0], axis2: axes[1], theta1 })
            }
        };

        let spectrum = match &raw.spectrum {
            None => SpectrumOptions { n_max: default_n_max(), fit_window: None, re_tolerance: default_re_tolerance() },
            Some(s) => {
                if s.n_max < 2 {
                    return Err(ctx.err("spectrum", "n_max", format!("{} must be at least 2", s.n_max)));
                }
                if !(s.re_tolerance > 0.0 && s.re_tolerance.is_finite()) {
                    return Err(ctx.err("spectrum", "re_tolerance", "must be positive"));
                }
                let fit_window = match s.fit_window {
                    None => None,
                    Some([lo, hi]) => {
                        if lo >= hi || hi > c.collisions {
                            return Err(ctx.err(
                                "spectrum",
                                "fit_window",
                                format!("[{lo}, {hi}] must satisfy lo < hi <= collisions"),
                            ));
                        }
                        Some((lo, hi))
                    }
                };
                SpectrumOptions { n_max: s.n_max, fit_window, re_tolerance: s.re_tolerance }
            }
        };

        let wigner = match &raw.wigner {
            None => WignerOptions { collisions: Vec::new(), points: default_points() },
            Some(w) => {
                if w.points < 2 {
                    return Err(ctx.err("wigner", "points", "must be at least 2"));
                }
                if let Some(&l) = w.collisions.iter().find(|&&l| l > c.collisions) {
                    return Err(ctx.err(
                        "wigner",
                        "collisions",
                        format!("snapshot {l} exceeds collisions = {}", c.collisions),
                    ));
                }
                WignerOptions { collisions: w.collisions.clone(), points: w.points }
            }
        };

        Ok(RunConfig { chain, system_a, system_b, env, sweep, spectrum, wigner, output_dir: raw.output.dir })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_str(&src, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const BASE: &str = r#"
[chain]
theta1 = "pi/4"
theta2 = "pi/8"
theta3 = "pi/4"
phi_a = "pi/8"
phi_b = "pi/8"
collisions = 150

[system_a]
n_th = 2.0
xi = 0.5
varphi = 0.1
alpha = [15.0, 0.0]

[system_b]
n_th = 2.0
xi = 0.5
varphi = 0.1
alpha = [15.0, 0.0]
"#;

    fn parse(src: &str) -> Result<RunConfig, CliError> {
        RunConfig::from_str(src, Path::new("run.toml"))
    }

    #[test]
    fn angle_expressions() {
        assert_eq!(parse_angle("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle("-pi/8").unwrap(), -PI / 8.0);
        assert!((parse_angle("3*pi/8").unwrap() - 3.0 * PI / 8.0).abs() < 1e-15);
        assert_eq!(parse_angle(" 0.25 ").unwrap(), 0.25);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        for bad in ["", "pi//4", "pie", "*pi", "1/0"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn base_config() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.chain.collisions, 150);
        assert!(c.chain.markovian);
        assert_eq!(c.system_a.alpha, Complex64::new(15.0, 0.0));
        assert!(c.sweep.is_none());
        assert_eq!(c.spectrum.n_max, 5);
    }

    #[test]
    fn out_of_range_angle_names_field_and_line() {
        let src = BASE.replace("theta1 = \"pi/4\"", "theta1 = 2.0");
        let e = parse(&src).unwrap_err().to_string();
        assert!(e.contains("run.toml:3: chain.theta1"), "{e}");
    }

    #[test]
    fn unknown_key_rejected() {
        let src = BASE.replace("collisions = 150", "collisions = 150\nbogus = 1");
        let e = parse(&src).unwrap_err().to_string();
        assert!(e.contains("bogus") && e.contains("line"), "{e}");
    }

    #[test]
    fn sweep_section() {
        let src = format!(
            "{BASE}\n[sweep]\ntheta1 = \"pi/4\"\nd21 = {{ start = \"-pi/4\", stop = \"pi/4\", steps = 21 }}\n\
             [sweep.d31]\nstart = \"-pi/4\"\nstop = \"pi/4\"\nsteps = 1\n"
        );
        let e = parse(&src).unwrap_err().to_string();
        assert!(e.contains("sweep.d31.steps"), "{e}");
        let ok = src.replace("steps = 1\n", "steps = 21\n");
        let g = parse(&ok).unwrap().sweep.unwrap();
        assert_eq!(g.axis1.steps, 21);
        let bad = ok.replace("stop = \"pi/4\", steps", "stop = \"pi/2\", steps");
        let e = parse(&bad).unwrap_err().to_string();
        assert!(e.contains("run.toml:24: sweep.d21.stop"), "{e}");
    }

    #[test]
    fn wigner_snapshot_beyond_run() {
        let src = format!("{BASE}\n[wigner]\ncollisions = [60, 200]\n");
        let e = parse(&src).unwrap_err().to_string();
        assert!(e.contains("wigner.collisions") && e.contains("200"), "{e}");
    }

    #[test]
    fn eta_turns_on_memory() {
        let src = BASE.replace("collisions = 150", "collisions = 150\neta = \"pi/8\"");
        let c = parse(&src).unwrap();
        assert!(!c.chain.markovian);
        assert!((c.chain.eta() - PI / 8.0).abs() < 1e-15);
    }
}
