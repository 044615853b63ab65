//! Command-line front end: configs in, CSV and SVG out.
//!
//! Exit codes: 0 success, 1 bad input (flags, config, data files, I/O),
//! 2 solver or integration failure, 3 fit without improvement.

pub mod config;
pub mod csv_io;
pub mod svg;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use dbmd_core::calibration::fit;
use dbmd_core::experiments::{default_negative_peak, run_hysteresis, run_step_response};
use dbmd_core::simulator::integrate;
use dbmd_core::{Device, Error as CoreError, HysteresisMetrics, WaveformSpec};

use config::{ConfigError, RunConfig, WaveformKind};
use csv_io::CsvError;
use svg::PlotStyle;

#[derive(Debug, Parser)]
#[command(name = "dbmd", version, about = "Double-barrier memristive device simulator")]
pub struct Cli {
    /// Run config file (`key = value` lines).
    #[arg(long, env = "DBMD_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    /// Device parameter file; overrides `params` in the config.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Number of output samples per run.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One triangle period from the high-resistance state.
    Hysteresis {
        #[arg(long, allow_negative_numbers = true)]
        peak_pos: Option<f64>,
        /// Defaults to −2/3 of the positive peak.
        #[arg(long, allow_negative_numbers = true)]
        peak_neg: Option<f64>,
        #[arg(long)]
        period: Option<f64>,
        /// CSV output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Constant bias from the high-resistance state.
    Step {
        #[arg(long, allow_negative_numbers = true)]
        amplitude: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Hysteresis runs for several positive peaks plus a metrics table.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "1.8,2.3,3")]
        peaks: Vec<f64>,
        /// Negative peak as a fraction of the positive one.
        #[arg(long, default_value_t = 2.0 / 3.0)]
        neg_ratio: f64,
        #[arg(long)]
        period: Option<f64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write one SVG per run.
        #[arg(long)]
        plot: bool,
    },
    /// Integrate the waveform given in the config file.
    Run {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Fit free parameters to measured `t,e,i` traces.
    Fit {
        #[arg(long)]
        spec: PathBuf,
        /// Dataset CSVs; replace the spec's `datasets` when given.
        #[arg(long = "data")]
        data: Vec<PathBuf>,
        /// Fitted parameter file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the effective device parameters as a parameter file.
    Params {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: CsvError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Run(CoreError),
    #[error("fit did not improve on the initial parameters\n{0}")]
    NotConverged(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(
                CoreError::SolverFailure { .. }
                | CoreError::IntegrationFailure { .. }
                | CoreError::OutOfRegime { .. },
            ) => 2,
            CliError::NotConverged(_) => 3,
            _ => 1,
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Config file (if any) with command-line overrides applied and validated.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => config::load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.params {
        cfg.params_file = Some(path.clone());
        cfg.params = config::load_params(path)?;
    }
    if let Some(n) = cli.samples {
        cfg.integrator.samples = n;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

/// Output of one command: files to write and text for stdout.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(PathBuf, String)>,
    pub stdout: String,
}

fn series_outputs(
    series: &dbmd_core::TimeSeries,
    out: Option<PathBuf>,
    plot: Option<PathBuf>,
    style: PlotStyle,
) -> Result<Outcome, CliError> {
    let csv = csv_io::write_series(series);
    let mut o = Outcome::default();
    match out {
        Some(p) => o.files.push((p, csv)),
        None => o.stdout = csv,
    }
    if let Some(p) = plot {
        let svg = svg::render(series, style).map_err(|e| CliError::Usage(e.to_string()))?;
        o.files.push((p, svg));
    }
    Ok(o)
}

fn metrics_line(m: &HysteresisMetrics) -> String {
    format!(
        "loop_area = {:.6e}, max_branch_ratio = {:.4}, i_at_peak = {:.6e} A{}",
        m.loop_area,
        m.max_branch_ratio,
        m.i_at_peak,
        if m.closed { "" } else { " (loop not closed)" }
    )
}

/// Runs a parsed command without touching the file system for outputs.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = effective_config(cli)?;
    let device = Device::new(cfg.params.clone())?;
    let wk = &cfg.waveform;
    match &cli.command {
        Command::Hysteresis {
            peak_pos,
            peak_neg,
            period,
            out,
            plot,
        } => {
            let pos = peak_pos.or(wk.peak_pos).unwrap_or(3.0);
            let neg = peak_neg.or(wk.peak_neg).unwrap_or_else(|| default_negative_peak(pos));
            let period = period.or(wk.period).unwrap_or(100.0);
            let spec = WaveformSpec::triangle(period, pos, neg);
            spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let (series, m) = run_hysteresis(&device, &cfg.circuit, &spec, &cfg.integrator)?;
            let mut o = series_outputs(
                &series,
                out.clone().or(cfg.output.clone()),
                plot.clone().or(cfg.plot.clone()),
                PlotStyle::Hysteresis,
            )?;
            if !o.files.is_empty() {
                o.stdout = metrics_line(&m) + "\n";
            }
            Ok(o)
        }
        Command::Step {
            amplitude,
            duration,
            out,
            plot,
        } => {
            let a = amplitude
                .or(wk.amplitude)
                .ok_or_else(|| CliError::Usage("`--amplitude` is required".into()))?;
            let d = duration.or(wk.duration).unwrap_or(600.0);
            if !(d > 0.0 && d.is_finite()) {
                return Err(CliError::Usage("`duration` must be > 0".into()));
            }
            let series = run_step_response(&device, &cfg.circuit, a, d, &cfg.integrator).map_err(|e| match e {
                CoreError::InvalidParameter { .. } => CliError::Usage(e.to_string()),
                other => CliError::Run(other),
            })?;
            series_outputs(
                &series,
                out.clone().or(cfg.output.clone()),
                plot.clone().or(cfg.plot.clone()),
                PlotStyle::Step,
            )
        }
        Command::Sweep {
            peaks,
            neg_ratio,
            period,
            out_dir,
            plot,
        } => {
            if peaks.is_empty() {
                return Err(CliError::Usage("`--peaks` needs at least one value".into()));
            }
            if !(*neg_ratio >= 0.0 && neg_ratio.is_finite()) {
                return Err(CliError::Usage("`--neg-ratio` must be >= 0".into()));
            }
            let period = period.or(wk.period).unwrap_or(100.0);
            let mut o = Outcome::default();
            let mut rows = Vec::new();
            for &p in peaks {
                let spec = WaveformSpec::triangle(period, p, -neg_ratio * p);
                spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                let (series, m) = run_hysteresis(&device, &cfg.circuit, &spec, &cfg.integrator)?;
                o.files.push((out_dir.join(format!("hysteresis_{p}.csv")), csv_io::write_series(&series)));
                if *plot {
                    let svg = svg::render(&series, PlotStyle::Hysteresis)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    o.files.push((out_dir.join(format!("hysteresis_{p}.svg")), svg));
                }
                o.stdout.push_str(&format!("peak {p} V: {}\n", metrics_line(&m)));
                rows.push((p, -neg_ratio * p, m));
            }
            o.files.push((out_dir.join("metrics.csv"), csv_io::write_metrics(&rows)));
            Ok(o)
        }
        Command::Run { out, plot } => {
            if wk.kind.is_none() {
                return Err(CliError::Usage("the config must set `waveform`".into()));
            }
            let spec = wk.build().map_err(|e| CliError::Usage(e.to_string()))?;
            let series = integrate(&device, &cfg.circuit, &spec, &cfg.integrator, cfg.z0)?;
            let style = match wk.kind {
                Some(WaveformKind::Triangle) => PlotStyle::Hysteresis,
                _ => PlotStyle::Step,
            };
            series_outputs(&series, out.clone().or(cfg.output.clone()), plot.clone().or(cfg.plot.clone()), style)
        }
        Command::Fit { spec, data, out } => {
            let fc = config::load_fit_spec(spec)?;
            let paths = if data.is_empty() { fc.datasets.clone() } else { data.clone() };
            if paths.is_empty() {
                return Err(CliError::Usage("no datasets given (`--data` or `datasets`)".into()));
            }
            let mut datasets = Vec::new();
            for p in &paths {
                let text = read(p)?;
                let name = p.display().to_string();
                let d = csv_io::read_dataset(&text, &name, fc.area).map_err(|source| CliError::Csv {
                    path: p.clone(),
                    source,
                })?;
                datasets.push(d);
            }
            fc.spec
                .validate(datasets.len())
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let r = fit(&fc.spec, &cfg.params, &datasets, &cfg.circuit, &cfg.integrator)?;
            let mut report = format!(
                "objective = {:.6e} after {} evaluations\n",
                r.objective_value, r.evaluations
            );
            for (d, e) in datasets.iter().zip(&r.residuals) {
                report.push_str(&format!("  {}: {e:.6e}\n", d.name));
            }
            for f in &fc.spec.free {
                report.push_str(&format!(
                    "  {} = {}\n",
                    f.name,
                    config::format_value(r.best_parameters.get(&f.name).expect("validated name"))
                ));
            }
            if !r.converged {
                return Err(CliError::NotConverged(report + &r.diagnostics));
            }
            Ok(Outcome {
                files: vec![(out.clone(), config::write_params(&r.best_parameters))],
                stdout: report,
            })
        }
        Command::Params { out } => {
            let text = config::write_params(&cfg.params);
            Ok(match out {
                Some(p) => Outcome {
                    files: vec![(p.clone(), text)],
                    stdout: String::new(),
                },
                None => Outcome {
                    files: Vec::new(),
                    stdout: text,
                },
            })
        }
    }
}

/// Parses arguments, runs, writes outputs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = execute(&cli).and_then(|o| {
        // Outputs are written only once every run has succeeded.
        for (path, text) in &o.files {
            write_atomic(path, text)?;
        }
        Ok(o)
    });
    match result {
        Ok(o) => {
            // A closed pipe (`dbmd ... | head`) is not an error.
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(o.stdout.as_bytes()).and_then(|_| out.flush());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
