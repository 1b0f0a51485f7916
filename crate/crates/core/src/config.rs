//! Scenario files: one `key = value` per line, `#` starts a comment.
//!
//! Unknown and repeated keys are rejected. Exactly one of `vortex.gamma` and
//! `vortex.lambda` sets the pair strength; `gamma` is converted with
//! `lambda = pi sqrt(gamma) |y0|^(3/2)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::ConfigError;
use crate::taylor_sign::lambda_from_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaveKind {
    #[default]
    ZeroWave,
    OddBump,
}

impl WaveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WaveKind::ZeroWave => "zero_wave",
            WaveKind::OddBump => "odd_bump",
        }
    }
}

impl FromStr for WaveKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero_wave" => Ok(WaveKind::ZeroWave),
            "odd_bump" => Ok(WaveKind::OddBump),
            _ => Err("expected `zero_wave` or `odd_bump`".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Rk4,
    Picard,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Rk4 => "rk4",
            Scheme::Picard => "picard",
        }
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rk4" => Ok(Scheme::Rk4),
            "picard" => Ok(Scheme::Picard),
            _ => Err("expected `rk4` or `picard`".into()),
        }
    }
}

/// How the pair strength was given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strength {
    Gamma(f64),
    Lambda(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub half_length: f64,
    pub n_points: usize,
    pub x0: f64,
    pub y0: f64,
    pub strength: Strength,
    pub wave_kind: WaveKind,
    pub wave_amplitude: f64,
    pub l0: f64,
    pub delta0: f64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub cfl_safety: f64,
    /// Order of the post-step `exp(-36 (|k|/k_max)^p)` filter; 0 disables it.
    pub filter_order: u32,
    pub output_path: PathBuf,
    pub output_stride: usize,
    pub monitor_path: Option<PathBuf>,
    pub eta1: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            half_length: 200.0,
            n_points: 1 << 14,
            x0: 1.0,
            y0: -12.0,
            strength: Strength::Gamma(8.0),
            wave_kind: WaveKind::ZeroWave,
            wave_amplitude: 0.0,
            l0: 10.0,
            delta0: 1000.0,
            dt: 0.002,
            t_end: 1.0,
            scheme: Scheme::Rk4,
            picard_tol: 1e-10,
            picard_max_iter: 50,
            cfl_safety: 0.5,
            filter_order: 36,
            output_path: PathBuf::from("trajectory.csv"),
            output_stride: 1,
            monitor_path: None,
            eta1: 0.5,
        }
    }
}

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "grid.half_length",
    "grid.n",
    "vortex.x0",
    "vortex.y0",
    "vortex.gamma",
    "vortex.lambda",
    "wave.kind",
    "wave.amplitude",
    "gevrey.L0",
    "gevrey.delta0",
    "time.dt",
    "time.t_end",
    "time.scheme",
    "time.picard_tol",
    "time.picard_max_iter",
    "time.cfl_safety",
    "time.filter_order",
    "output.path",
    "output.stride",
    "output.monitor_path",
    "monitor.eta1",
];

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: reason.into() }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value.parse().map_err(|_| invalid(key, value, "not a number"))?;
    if !v.is_finite() {
        return Err(invalid(key, value, "must be finite"));
    }
    Ok(v)
}

fn parse_positive(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v = parse_f64(key, value)?;
    if v <= 0.0 {
        return Err(invalid(key, value, "must be positive"));
    }
    Ok(v)
}

fn parse_int<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| invalid(key, value, "not a non-negative integer"))
}

impl ScenarioConfig {
    /// Pair strength `lambda`.
    pub fn lambda(&self) -> f64 {
        match self.strength {
            Strength::Lambda(l) => l,
            Strength::Gamma(g) => lambda_from_gamma(g, self.y0),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.to_string() })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
            }
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey(k.to_string()));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::DuplicateKey(k.to_string()));
            }
        }
        Self::from_entries(&entries)
    }

    fn from_entries(e: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let strength = match (e.get("vortex.gamma"), e.get("vortex.lambda")) {
            (Some(_), Some(_)) => return Err(ConfigError::GammaLambdaConflict),
            (None, None) => return Err(ConfigError::NoStrength),
            (Some(g), None) => {
                let v = parse_f64("vortex.gamma", g)?;
                if v < 0.0 {
                    return Err(invalid("vortex.gamma", g, "must be >= 0"));
                }
                Strength::Gamma(v)
            }
            (None, Some(l)) => Strength::Lambda(parse_f64("vortex.lambda", l)?),
        };
        let mut c = ScenarioConfig { strength, ..ScenarioConfig::default() };
        for (k, v) in e {
            let k = k.as_str();
            match k {
                "grid.half_length" => c.half_length = parse_positive(k, v)?,
                "grid.n" => {
                    c.n_points = parse_int(k, v)?;
                    if !c.n_points.is_power_of_two() || c.n_points < 16 {
                        return Err(invalid(k, v, "must be a power of two >= 16"));
                    }
                }
                "vortex.x0" => c.x0 = parse_positive(k, v)?,
                "vortex.y0" => {
                    c.y0 = parse_f64(k, v)?;
                    if c.y0 >= 0.0 {
                        return Err(invalid(k, v, "must be negative (below the interface)"));
                    }
                }
                "vortex.gamma" | "vortex.lambda" => {}
                "wave.kind" => c.wave_kind = v.parse().map_err(|r: String| invalid(k, v, r))?,
                "wave.amplitude" => {
                    c.wave_amplitude = parse_f64(k, v)?;
                    if c.wave_amplitude < 0.0 {
                        return Err(invalid(k, v, "must be >= 0"));
                    }
                }
                "gevrey.L0" => {
                    c.l0 = parse_f64(k, v)?;
                    if c.l0 < 4.0 {
                        return Err(invalid(k, v, "must be >= 4"));
                    }
                }
                "gevrey.delta0" => c.delta0 = parse_positive(k, v)?,
                "time.dt" => c.dt = parse_positive(k, v)?,
                "time.t_end" => {
                    c.t_end = parse_f64(k, v)?;
                    if c.t_end < 0.0 {
                        return Err(invalid(k, v, "must be >= 0"));
                    }
                }
                "time.scheme" => c.scheme = v.parse().map_err(|r: String| invalid(k, v, r))?,
                "time.picard_tol" => c.picard_tol = parse_positive(k, v)?,
                "time.picard_max_iter" => {
                    c.picard_max_iter = parse_int(k, v)?;
                    if c.picard_max_iter == 0 {
                        return Err(invalid(k, v, "must be >= 1"));
                    }
                }
                "time.cfl_safety" => {
                    c.cfl_safety = parse_positive(k, v)?;
                    if c.cfl_safety > 1.0 {
                        return Err(invalid(k, v, "must lie in (0, 1]"));
                    }
                }
                "time.filter_order" => c.filter_order = parse_int(k, v)?,
                "output.path" => c.output_path = PathBuf::from(v),
                "output.stride" => {
                    c.output_stride = parse_int(k, v)?;
                    if c.output_stride == 0 {
                        return Err(invalid(k, v, "must be >= 1"));
                    }
                }
                "output.monitor_path" => c.monitor_path = Some(PathBuf::from(v)),
                "monitor.eta1" => {
                    c.eta1 = parse_f64(k, v)?;
                    if c.eta1 < 0.0 {
                        return Err(invalid(k, v, "must be >= 0"));
                    }
                }
                _ => return Err(ConfigError::UnknownKey(k.to_string())),
            }
        }
        Ok(c)
    }

    /// Writes every key; [`ScenarioConfig::parse`] inverts this exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("grid.half_length", self.half_length.to_string());
        put("grid.n", self.n_points.to_string());
        put("vortex.x0", self.x0.to_string());
        put("vortex.y0", self.y0.to_string());
        match self.strength {
            Strength::Gamma(g) => put("vortex.gamma", g.to_string()),
            Strength::Lambda(l) => put("vortex.lambda", l.to_string()),
        }
        put("wave.kind", self.wave_kind.as_str().into());
        put("wave.amplitude", self.wave_amplitude.to_string());
        put("gevrey.L0", self.l0.to_string());
        put("gevrey.delta0", self.delta0.to_string());
        put("time.dt", self.dt.to_string());
        put("time.t_end", self.t_end.to_string());
        put("time.scheme", self.scheme.as_str().into());
        put("time.picard_tol", self.picard_tol.to_string());
        put("time.picard_max_iter", self.picard_max_iter.to_string());
        put("time.cfl_safety", self.cfl_safety.to_string());
        put("time.filter_order", self.filter_order.to_string());
        put("output.path", self.output_path.display().to_string());
        put("output.stride", self.output_stride.to_string());
        if let Some(p) = &self.monitor_path {
            put("output.monitor_path", p.display().to_string());
        }
        put("monitor.eta1", self.eta1.to_string());
        s
    }
}
