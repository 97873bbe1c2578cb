//! Run configuration: `key = value` files, flag overrides and
//! per-command defaults.
//!
//! Keys are case-insensitive and `-` and `_` are interchangeable, so the
//! file key `h_min` and the flag `--h-min` name the same setting.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use symperr::experiments::{log_grid, DEFAULT_H_COUNT, DEFAULT_H_MAX, DEFAULT_H_MIN};
use symperr::hamiltonian::{
    harmonic_oscillator, quadratic_model, tokamak_model, Model, Nondimensionalizer, PhysicalParams,
};
use symperr::integrators::{SchemeConfig, Variant};
use symperr::PhaseState;

/// A rejected setting, reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

type CfgResult<T> = Result<T, ConfigError>;

pub const KEYS: &[&str] = &[
    "hamiltonian",
    "scheme",
    "n",
    "m",
    "m1",
    "m2",
    "h",
    "steps",
    "stride",
    "h_min",
    "h_max",
    "h_count",
    "out",
    "jobs",
    "full_scale",
    "major_radius",
    "minor_radius",
    "b0",
    "mass",
    "charge",
    "q0",
    "p0",
];

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Raw settings, later keys overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> CfgResult<()> {
        let key = normalize_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::new(&key, "unknown setting"));
        }
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> CfgResult<Self> {
        let mut out = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(&format!("line {}", i + 1), "expected `key = value`"))?;
            out.set(k, v.trim())?;
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> CfgResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `other` wins on every key it sets.
    pub fn overlay(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> CfgResult<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| ConfigError::new(key, format!("expected {what}, got `{v}`"))))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str, what: &str) -> CfgResult<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<T>()
                            .map_err(|_| ConfigError::new(key, format!("expected a list of {what}, got `{v}`")))
                    })
                    .collect()
            })
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Trajectory,
    DefectSweep,
    Jtilde,
    EnergyDrift,
    Optimality,
    SvOrders,
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Quadratic,
    Tokamak,
    Harmonic,
}

impl std::str::FromStr for ModelKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "quadratic" => Ok(ModelKind::Quadratic),
            "tokamak" => Ok(ModelKind::Tokamak),
            "harmonic" => Ok(ModelKind::Harmonic),
            _ => Err(()),
        }
    }
}

/// A validated configuration. Tokamak physical parameters and the
/// tokamak initial state are SI; `h` and times are in units of `T0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub hamiltonian: ModelKind,
    /// `None` selects the command's default scheme set.
    pub scheme: Option<Variant>,
    pub n: usize,
    pub ms: Vec<usize>,
    pub m1: usize,
    pub m2: usize,
    pub h: f64,
    pub steps: usize,
    pub stride: usize,
    pub h_grid: Vec<f64>,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub full_scale: bool,
    pub params: PhysicalParams,
    /// Initial state in model coordinates (nondimensional for the tokamak).
    pub initial: PhaseState,
    /// Whether `n` or `h` were set explicitly (the optimality grid uses them).
    pub n_given: bool,
    pub h_given: bool,
    pub m_given: bool,
}

pub const CI_DRIFT_STEPS: usize = 300_000;
pub const FULL_DRIFT_STEPS: usize = 3_000_000;

/// A deterministic generic start point for the quadratic and harmonic models.
pub fn default_state(n: usize) -> PhaseState {
    let q = (0..n).map(|i| 0.4 - 0.25 * i as f64 / n as f64).collect();
    let p = (0..n).map(|i| -0.3 + 0.5 * i as f64 / n as f64).collect();
    PhaseState::new(q, p)
}

fn positive_finite(key: &str, v: f64) -> CfgResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(key, format!("must be finite and > 0, got {v}")))
    }
}

fn at_least_one(key: &str, v: usize) -> CfgResult<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(ConfigError::new(key, "must be >= 1"))
    }
}

impl RunConfig {
    pub fn resolve(command: Command, s: &Settings) -> CfgResult<Self> {
        use Command::*;
        let hamiltonian = match s.get("hamiltonian") {
            Some(v) => v.parse().map_err(|_| {
                ConfigError::new("hamiltonian", format!("unknown model `{v}` (quadratic, tokamak, harmonic)"))
            })?,
            None if command == Optimality => ModelKind::Quadratic,
            None => ModelKind::Tokamak,
        };
        if command == Optimality && hamiltonian != ModelKind::Quadratic {
            return Err(ConfigError::new(
                "hamiltonian",
                "the optimality oracle is defined for the quadratic model only",
            ));
        }
        let scheme: Option<Variant> = match s.get("scheme") {
            Some(v) => Some(v.parse().map_err(|_| {
                let names: Vec<_> = Variant::ALL.iter().map(|v| v.name()).collect();
                ConfigError::new("scheme", format!("unknown scheme `{v}` ({})", names.join(", ")))
            })?),
            None => None,
        };

        let n_given = s.get("n").is_some();
        let n = at_least_one("N", s.parsed("n", "an integer")?.unwrap_or(3))?;
        if hamiltonian == ModelKind::Tokamak && n != 3 {
            return Err(ConfigError::new("N", "the tokamak model is 3-dimensional"));
        }
        if hamiltonian == ModelKind::Quadratic && n < 2 {
            return Err(ConfigError::new("N", "the quadratic model needs N >= 2"));
        }

        let m_given = s.get("m").is_some();
        let default_ms: &[usize] = match command {
            DefectSweep | Volume | Optimality => &[1, 2, 3],
            EnergyDrift => &[2, 3],
            _ => &[3],
        };
        let mut ms = s.list::<usize>("m", "integers")?.unwrap_or_else(|| default_ms.to_vec());
        if matches!(scheme, Some(v) if !v.uses_fpi()) && command != EnergyDrift {
            // The iteration count does not enter these schemes.
            ms = vec![1];
        }
        for &m in &ms {
            at_least_one("M", m)?;
        }
        if matches!(command, Trajectory | Jtilde) && ms.len() != 1 {
            return Err(ConfigError::new("M", "this command takes a single iteration count"));
        }
        let m1 = at_least_one("M1", s.parsed("m1", "an integer")?.unwrap_or(1))?;
        let m2 = at_least_one("M2", s.parsed("m2", "an integer")?.unwrap_or(3))?;
        if command == SvOrders && m1 == m2 {
            return Err(ConfigError::new("M2", "sv-orders needs M1 != M2 to separate the block orders"));
        }

        let h_given = s.get("h").is_some();
        let default_h = if command == EnergyDrift { 0.25 } else { 0.1 };
        let h = positive_finite("h", s.parsed("h", "a number")?.unwrap_or(default_h))?;

        let full_scale = match s.get("full_scale") {
            None => false,
            Some("true" | "1" | "yes") => true,
            Some("false" | "0" | "no") => false,
            Some(v) => return Err(ConfigError::new("full_scale", format!("expected true or false, got `{v}`"))),
        };
        let default_steps = match command {
            EnergyDrift if full_scale => FULL_DRIFT_STEPS,
            EnergyDrift => CI_DRIFT_STEPS,
            _ => 20_000,
        };
        let steps = at_least_one("steps", s.parsed("steps", "an integer")?.unwrap_or(default_steps))?;
        if command == EnergyDrift && steps < symperr::experiments::MIN_DRIFT_STEPS {
            return Err(ConfigError::new(
                "steps",
                format!("energy drift runs need at least {}", symperr::experiments::MIN_DRIFT_STEPS),
            ));
        }
        let default_stride = match command {
            EnergyDrift => (steps / 1000).max(1),
            _ => 10,
        };
        let stride = at_least_one("stride", s.parsed("stride", "an integer")?.unwrap_or(default_stride))?;

        let h_min = positive_finite("h_min", s.parsed("h_min", "a number")?.unwrap_or(DEFAULT_H_MIN))?;
        let h_max = positive_finite("h_max", s.parsed("h_max", "a number")?.unwrap_or(DEFAULT_H_MAX))?;
        let h_count: usize = s.parsed("h_count", "an integer")?.unwrap_or(DEFAULT_H_COUNT);
        if h_max <= h_min {
            return Err(ConfigError::new("h_max", "must exceed h_min"));
        }
        if matches!(command, DefectSweep | SvOrders | Volume) && h_count < 6 {
            return Err(ConfigError::new("h_count", "order fits need at least 6 step sizes"));
        }
        let h_grid = log_grid(h_min, h_max, h_count.max(2)).map_err(|e| ConfigError::new("h_count", e.to_string()))?;

        let jobs = at_least_one("jobs", s.parsed("jobs", "an integer")?.unwrap_or(1))?;

        let mut params = PhysicalParams::default();
        for (key, slot) in [
            ("major_radius", &mut params.major_radius),
            ("minor_radius", &mut params.a),
            ("b0", &mut params.b0),
            ("mass", &mut params.mass),
            ("charge", &mut params.charge),
        ] {
            if let Some(v) = s.parsed::<f64>(key, "a number")? {
                *slot = positive_finite(key, v)?;
            }
        }
        params.validate().map_err(|e| ConfigError::new("major_radius", e.to_string()))?;

        let q0 = s.list::<f64>("q0", "numbers")?;
        let p0 = s.list::<f64>("p0", "numbers")?;
        let initial = match hamiltonian {
            ModelKind::Tokamak => {
                let mut si = PhysicalParams::reference_initial_state();
                if let Some(q) = q0 {
                    si.q = q;
                }
                if let Some(p) = p0 {
                    si.p = p;
                }
                Nondimensionalizer::new(&params).nondimensionalize(&si)
            }
            _ => {
                let mut z = default_state(n);
                if let Some(q) = q0 {
                    z.q = q;
                }
                if let Some(p) = p0 {
                    z.p = p;
                }
                z
            }
        };
        if initial.q.len() != n {
            return Err(ConfigError::new("q0", format!("expected {n} components")));
        }
        if initial.p.len() != n {
            return Err(ConfigError::new("p0", format!("expected {n} components")));
        }
        if !initial.is_finite() {
            return Err(ConfigError::new("q0", "initial state must be finite"));
        }

        let out = s.get("out").map(PathBuf::from);
        if let Some(path) = &out {
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !dir.is_dir() {
                return Err(ConfigError::new("out", format!("directory {} does not exist", dir.display())));
            }
        }

        let cfg = RunConfig {
            command,
            hamiltonian,
            scheme,
            n,
            ms,
            m1,
            m2,
            h,
            steps,
            stride,
            h_grid,
            out,
            jobs,
            full_scale,
            params,
            initial,
            n_given,
            h_given,
            m_given,
        };
        cfg.check_scheme()?;
        Ok(cfg)
    }

    /// Rejects scheme/model combinations that cannot run.
    fn check_scheme(&self) -> CfgResult<()> {
        let Some(v) = self.scheme else { return Ok(()) };
        match v {
            Variant::LinearImplicitEM if self.hamiltonian != ModelKind::Tokamak => {
                Err(ConfigError::new("scheme", "linear-implicit needs the tokamak (vector-potential) model"))
            }
            Variant::ExactSEQuadratic(_) if self.hamiltonian != ModelKind::Quadratic => {
                Err(ConfigError::new("scheme", "the exact schemes need the quadratic model"))
            }
            _ => Ok(()),
        }
    }

    pub fn model(&self) -> symperr::Result<Model> {
        Ok(match self.hamiltonian {
            ModelKind::Quadratic => Model::Quadratic(quadratic_model(self.n)?),
            ModelKind::Harmonic => Model::Harmonic(harmonic_oscillator(self.n)),
            ModelKind::Tokamak => Model::Tokamak(tokamak_model(self.params)?),
        })
    }

    /// The scheme for a single-`M` command, defaulting to q-implicit.
    pub fn scheme_for(&self, m: usize) -> symperr::Result<SchemeConfig> {
        let v = self.scheme.unwrap_or(Variant::QImplicitSE);
        let (m1, m2) = if v.is_sv() { (self.m1, self.m2) } else { (m, m) };
        SchemeConfig::new(v, self.h, if v.is_sv() { m1.min(m2) } else { m }, m1, m2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_normalizes_keys() {
        let s = Settings::parse("# run\nH-Min = 0.01  # lower\nM = 1,2\n\nscheme=sv-pq\n").unwrap();
        assert_eq!(s.get("h_min"), Some("0.01"));
        assert_eq!(s.get("m"), Some("1,2"));
        assert_eq!(s.get("scheme"), Some("sv-pq"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert_eq!(Settings::parse("colour = red").unwrap_err().field, "colour");
        assert_eq!(Settings::parse("h 0.1").unwrap_err().field, "line 1");
    }

    #[test]
    fn overlay_prefers_flags() {
        let mut file = Settings::parse("h = 0.2\nsteps = 100").unwrap();
        let mut flags = Settings::default();
        flags.set("h", "0.05").unwrap();
        file.overlay(&flags);
        let cfg = RunConfig::resolve(Command::Trajectory, &file).unwrap();
        assert_eq!(cfg.h, 0.05);
        assert_eq!(cfg.steps, 100);
    }

    #[test]
    fn field_names_in_errors() {
        let mut s = Settings::default();
        s.set("h", "0").unwrap();
        assert_eq!(RunConfig::resolve(Command::Trajectory, &s).unwrap_err().field, "h");
        let mut s = Settings::default();
        s.set("N", "4").unwrap();
        assert_eq!(RunConfig::resolve(Command::Jtilde, &s).unwrap_err().field, "N");
        let mut s = Settings::default();
        s.set("M1", "2").unwrap();
        s.set("M2", "2").unwrap();
        assert_eq!(RunConfig::resolve(Command::SvOrders, &s).unwrap_err().field, "M2");
        let mut s = Settings::default();
        s.set("hamiltonian", "harmonic").unwrap();
        s.set("scheme", "linear-implicit").unwrap();
        assert_eq!(RunConfig::resolve(Command::Trajectory, &s).unwrap_err().field, "scheme");
    }

    #[test]
    fn drift_defaults_follow_scale() {
        let mut s = Settings::default();
        assert_eq!(RunConfig::resolve(Command::EnergyDrift, &s).unwrap().steps, CI_DRIFT_STEPS);
        s.set("full-scale", "true").unwrap();
        let cfg = RunConfig::resolve(Command::EnergyDrift, &s).unwrap();
        assert_eq!((cfg.steps, cfg.stride, cfg.h), (FULL_DRIFT_STEPS, 3000, 0.25));
    }

    #[test]
    fn tokamak_default_state_is_nondimensional() {
        let cfg = RunConfig::resolve(Command::Jtilde, &Settings::default()).unwrap();
        let si = Nondimensionalizer::new(&cfg.params).dimensionalize(&cfg.initial);
        assert!(si.max_abs_diff(&PhysicalParams::reference_initial_state()) < 1e-15);
        assert!(cfg.initial.q[0] > 0.0 && cfg.initial.q[0] < 1.0);
    }
}
