//! Line-based `key = value` files.
//!
//! One assignment per line, `#` starts a comment, keys are unique. A numeric
//! value may carry a unit token after the number; if present it must match
//! the unit documented for the key (`1` for dimensionless). Three file kinds
//! share the syntax: device parameter files, run configs and fit specs.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use dbmd_core::params::{param_info, PARAMETERS};
use dbmd_core::simulator::Scheme;
use dbmd_core::{
    CircuitConfig, CircuitMode, DeviceParameters, Error as CoreError, FitSpec, FreeParameter,
    IntegratorSettings, WaveformSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{}: ", file.display())?;
        }
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn at(entry: &Entry, message: impl Into<String>) -> Self {
        ConfigError {
            file: None,
            line: Some(entry.line),
            key: Some(entry.key.clone()),
            message: message.into(),
        }
    }

    fn in_file(mut self, file: &Path) -> Self {
        self.file.get_or_insert_with(|| file.to_path_buf());
        self
    }

    /// Attributes a core validation error to the line that set the key.
    fn from_core(err: CoreError, entries: &[Entry]) -> Self {
        let (key, message) = match &err {
            CoreError::InvalidParameter { name, reason } => (Some(name.clone()), reason.clone()),
            CoreError::Domain { name, value, domain } => {
                (Some(name.to_string()), format!("{value} is outside {domain}"))
            }
            other => (None, other.to_string()),
        };
        let line = key
            .as_ref()
            .and_then(|k| entries.iter().find(|e| &e.key == k))
            .map(|e| e.line);
        ConfigError {
            file: None,
            line,
            key,
            message,
        }
    }
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |key: Option<String>, message: &str| ConfigError {
            file: None,
            line: Some(line),
            key,
            message: message.to_string(),
        };
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(None, "expected `key = value`"));
        };
        let key = key.trim();
        let value = value.trim();
        let valid_key = !key.is_empty()
            && key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.');
        if !valid_key {
            return Err(err(Some(key.to_string()), "malformed key"));
        }
        if value.is_empty() {
            return Err(err(Some(key.to_string()), "missing value"));
        }
        if let Some(first) = seen.get(key) {
            return Err(err(
                Some(key.to_string()),
                &format!("duplicate key (first set on line {first})"),
            ));
        }
        seen.insert(key.to_string(), line);
        out.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
        });
    }
    Ok(out)
}

fn parse_number(entry: &Entry, token: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| ConfigError::at(entry, format!("`{token}` is not a number")))?;
    if !v.is_finite() {
        return Err(ConfigError::at(entry, "value must be finite"));
    }
    Ok(v)
}

fn check_unit(entry: &Entry, unit: Option<&str>, expected: &str) -> Result<()> {
    match unit {
        None => Ok(()),
        Some(u) if u == expected => Ok(()),
        Some(u) => Err(ConfigError::at(
            entry,
            format!("unit mismatch: got `{u}`, expected `{expected}`"),
        )),
    }
}

/// `count` numbers followed by an optional unit token.
fn numbers(entry: &Entry, count: usize, unit: &str) -> Result<Vec<f64>> {
    let tokens: Vec<&str> = entry.value.split_whitespace().collect();
    if tokens.len() < count || tokens.len() > count + 1 {
        return Err(ConfigError::at(
            entry,
            format!("expected {count} number(s) optionally followed by `{unit}`"),
        ));
    }
    check_unit(entry, tokens.get(count).copied(), unit)?;
    tokens[..count].iter().map(|t| parse_number(entry, t)).collect()
}

fn number(entry: &Entry, unit: &str) -> Result<f64> {
    Ok(numbers(entry, 1, unit)?[0])
}

fn integer(entry: &Entry) -> Result<u64> {
    entry
        .value
        .parse()
        .map_err(|_| ConfigError::at(entry, "expected a non-negative integer"))
}

fn unknown(entry: &Entry) -> ConfigError {
    ConfigError::at(entry, "unknown key")
}

// ---------------------------------------------------------------- parameters

pub fn parse_params(text: &str) -> Result<DeviceParameters> {
    let entries = parse_entries(text)?;
    let mut p = DeviceParameters::default();
    for e in &entries {
        let info = param_info(&e.key).ok_or_else(|| unknown(e))?;
        let v = number(e, info.unit)?;
        p.set(&e.key, v)
            .map_err(|err| ConfigError::from_core(err, &entries))?;
    }
    p.validate()
        .map_err(|err| ConfigError::from_core(err, &entries))?;
    Ok(p)
}

pub fn load_params(path: &Path) -> Result<DeviceParameters> {
    let text = read(path)?;
    parse_params(&text).map_err(|e| e.in_file(path))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| ConfigError {
        file: Some(path.to_path_buf()),
        line: None,
        key: None,
        message: format!("cannot read: {e}"),
    })
}

/// Shortest round-trip representation, in exponent form for very small or
/// large magnitudes.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Parameter file in canonical order, one commented line per entry.
pub fn write_params(p: &DeviceParameters) -> String {
    let mut out = String::from("# Device parameters. SI units; `1` marks dimensionless values.\n");
    for info in PARAMETERS {
        let v = p.get(info.name).expect("listed parameter");
        let value = format_value(v);
        let unit = if info.unit == "1" { String::new() } else { format!(" {}", info.unit) };
        out.push_str(&format!("\n# {}\n{} = {value}{unit}\n", info.description, info.name));
    }
    out
}

// ---------------------------------------------------------------- run config

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveformKind {
    Triangle,
    Step,
    PiecewiseLinear,
}

/// Waveform keys as given; a concrete waveform is assembled per command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaveformKeys {
    pub kind: Option<WaveformKind>,
    pub period: Option<f64>,
    pub peak_pos: Option<f64>,
    pub peak_neg: Option<f64>,
    pub amplitude: Option<f64>,
    pub duration: Option<f64>,
    pub breakpoints: Option<Vec<(f64, f64)>>,
}

impl WaveformKeys {
    pub fn build(&self) -> std::result::Result<WaveformSpec, CoreError> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CoreError::InvalidParameter {
                name: name.to_string(),
                reason: "required for this waveform".into(),
            })
        };
        let spec = match self.kind {
            Some(WaveformKind::Triangle) | None => WaveformSpec::triangle(
                need(self.period, "period")?,
                need(self.peak_pos, "peak_pos")?,
                need(self.peak_neg, "peak_neg")?,
            ),
            Some(WaveformKind::Step) => {
                WaveformSpec::step(need(self.amplitude, "amplitude")?, need(self.duration, "duration")?)
            }
            Some(WaveformKind::PiecewiseLinear) => WaveformSpec::PiecewiseLinear {
                breakpoints: self.breakpoints.clone().ok_or_else(|| CoreError::InvalidParameter {
                    name: "breakpoints".into(),
                    reason: "required for this waveform".into(),
                })?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params_file: Option<PathBuf>,
    pub params: DeviceParameters,
    pub circuit: CircuitConfig,
    pub waveform: WaveformKeys,
    pub integrator: IntegratorSettings,
    pub z0: f64,
    pub output: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params_file: None,
            params: DeviceParameters::default(),
            circuit: CircuitConfig::default(),
            waveform: WaveformKeys::default(),
            integrator: IntegratorSettings::default(),
            z0: 1.0,
            output: None,
            plot: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> std::result::Result<(), CoreError> {
        self.params.validate()?;
        self.circuit.validate()?;
        if self.circuit.mode != CircuitMode::QuasiStatic {
            return Err(CoreError::InvalidParameter {
                name: "mode".into(),
                reason: "time-domain runs use the quasi-static circuit".into(),
            });
        }
        self.integrator.validate()?;
        if !(0.0..=1.0).contains(&self.z0) {
            return Err(CoreError::Domain {
                name: "z0",
                value: self.z0,
                domain: "[0, 1]",
            });
        }
        if self.waveform.kind.is_some() {
            self.waveform.build()?;
        }
        Ok(())
    }
}

fn breakpoints(entry: &Entry) -> Result<Vec<(f64, f64)>> {
    entry
        .value
        .split(',')
        .map(|pair| {
            let (t, e) = pair
                .split_once(':')
                .ok_or_else(|| ConfigError::at(entry, "expected `t:e` pairs separated by commas"))?;
            Ok((parse_number(entry, t.trim())?, parse_number(entry, e.trim())?))
        })
        .collect()
}

/// Parses a run config; relative paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let entries = parse_entries(text)?;
    let mut c = RunConfig::default();
    for e in &entries {
        let path = || base_dir.join(&e.value);
        match e.key.as_str() {
            "params" => c.params_file = Some(path()),
            "output" => c.output = Some(path()),
            "plot" => c.plot = Some(path()),
            "source_resistance" => c.circuit.source_resistance = number(e, "Ohm")?,
            "c_e" => c.circuit.c_e = number(e, "F")?,
            "c_t" => c.circuit.c_t = number(e, "F")?,
            "mode" => {
                c.circuit.mode = match e.value.as_str() {
                    "quasi-static" => CircuitMode::QuasiStatic,
                    "capacitive" => CircuitMode::Capacitive,
                    _ => return Err(ConfigError::at(e, "expected `quasi-static` or `capacitive`")),
                }
            }
            "waveform" => {
                c.waveform.kind = Some(match e.value.as_str() {
                    "triangle" => WaveformKind::Triangle,
                    "step" => WaveformKind::Step,
                    "piecewise-linear" => WaveformKind::PiecewiseLinear,
                    _ => {
                        return Err(ConfigError::at(
                            e,
                            "expected `triangle`, `step` or `piecewise-linear`",
                        ))
                    }
                })
            }
            "period" => c.waveform.period = Some(number(e, "s")?),
            "peak_pos" => c.waveform.peak_pos = Some(number(e, "V")?),
            "peak_neg" => c.waveform.peak_neg = Some(number(e, "V")?),
            "amplitude" => c.waveform.amplitude = Some(number(e, "V")?),
            "duration" => c.waveform.duration = Some(number(e, "s")?),
            "breakpoints" => c.waveform.breakpoints = Some(breakpoints(e)?),
            "dt_init" => c.integrator.dt_init = number(e, "s")?,
            "dt_min" => c.integrator.dt_min = number(e, "s")?,
            "dt_max" => c.integrator.dt_max = number(e, "s")?,
            "max_dz_per_step" => c.integrator.max_dz_per_step = number(e, "1")?,
            "error_tol" => c.integrator.error_tol = number(e, "1")?,
            "scheme" => {
                c.integrator.scheme = match e.value.as_str() {
                    "adaptive-explicit" => Scheme::AdaptiveExplicit,
                    "implicit-midpoint" => Scheme::ImplicitMidpoint,
                    _ => {
                        return Err(ConfigError::at(
                            e,
                            "expected `adaptive-explicit` or `implicit-midpoint`",
                        ))
                    }
                }
            }
            "samples" => c.integrator.samples = integer(e)? as usize,
            "abs_tol_current" => c.integrator.solver.abs_tol_current = number(e, "A")?,
            "rel_tol" => c.integrator.solver.rel_tol = number(e, "1")?,
            "max_iterations" => c.integrator.solver.max_iterations = integer(e)? as usize,
            "z0" => c.z0 = number(e, "1")?,
            _ => return Err(unknown(e)),
        }
    }
    if let Some(path) = &c.params_file {
        c.params = load_params(path)?;
    }
    c.validate()
        .map_err(|err| ConfigError::from_core(err, &entries))?;
    Ok(c)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base).map_err(|e| e.in_file(path))
}

// ---------------------------------------------------------------- fit spec

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub spec: FitSpec,
    pub datasets: Vec<PathBuf>,
    /// Normalization area attached to every dataset, m².
    pub area: f64,
}

pub fn parse_fit_spec(text: &str, base_dir: &Path) -> Result<FitConfig> {
    let entries = parse_entries(text)?;
    let mut spec = FitSpec::default();
    let mut datasets = Vec::new();
    let mut area = DeviceParameters::default().geometry.cross_section;
    for e in &entries {
        if let Some(name) = e.key.strip_prefix("free.") {
            let info = param_info(name).ok_or_else(|| ConfigError::at(e, "unknown parameter"))?;
            let v = numbers(e, 3, info.unit)?;
            spec.free.push(FreeParameter {
                name: name.to_string(),
                lower: v[0],
                upper: v[1],
                initial: v[2],
            });
            continue;
        }
        if let Some(name) = e.key.strip_prefix("fixed.") {
            let info = param_info(name).ok_or_else(|| ConfigError::at(e, "unknown parameter"))?;
            spec.fixed.push((name.to_string(), number(e, info.unit)?));
            continue;
        }
        match e.key.as_str() {
            "datasets" => {
                datasets = e.value.split(',').map(|s| base_dir.join(s.trim())).collect();
            }
            "area" => area = number(e, "m^2")?,
            "weights" => {
                spec.weights = e
                    .value
                    .split(',')
                    .map(|w| parse_number(e, w.trim()))
                    .collect::<Result<_>>()?;
            }
            "restarts" => spec.restarts = integer(e)? as usize,
            "seed" => spec.seed = integer(e)?,
            "max_evaluations" => spec.max_evaluations = integer(e)? as usize,
            "jitter" => spec.jitter = number(e, "1")?,
            "f_tol" => spec.f_tol = number(e, "1")?,
            "f_target" => spec.f_target = number(e, "1")?,
            _ => return Err(unknown(e)),
        }
    }
    if !(area > 0.0) {
        let e = entries.iter().find(|e| e.key == "area").expect("area was set");
        return Err(ConfigError::at(e, "must be > 0"));
    }
    let n = if datasets.is_empty() { spec.weights.len() } else { datasets.len() };
    // Free names map back to `free.<name>` lines for error attribution.
    spec.validate(n).map_err(|err| {
        let mut ce = ConfigError::from_core(err, &entries);
        if ce.line.is_none() {
            if let Some(k) = &ce.key {
                let prefixed = format!("free.{k}");
                ce.line = entries.iter().find(|e| e.key == prefixed).map(|e| e.line);
            }
        }
        ce
    })?;
    Ok(FitConfig {
        spec,
        datasets,
        area,
    })
}

pub fn load_fit_spec(path: &Path) -> Result<FitConfig> {
    let text = read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_fit_spec(&text, base).map_err(|e| e.in_file(path))
}
