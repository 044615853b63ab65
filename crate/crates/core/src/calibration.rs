//! Parameter fitting against measured `(t, e, i)` traces.
//!
//! Each dataset is replayed as a piecewise-linear source through its own
//! `(t, e)` points from the high-resistance state, with output at the
//! dataset timestamps. The objective is the weighted sum over datasets of
//! the RMSE between asinh-scaled simulated and measured currents. Free
//! parameters are mapped to the real line through a logistic transform and
//! minimized with Nelder–Mead, restarted from seeded jitter around the best
//! point so far.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::CircuitConfig;
use crate::error::{Error, Result};
use crate::experiments::scaled_current;
use crate::model::Device;
use crate::params::DeviceParameters;
use crate::simulator::{integrate_at, IntegratorSettings, TimeSeries};
use crate::waveform::WaveformSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub e: f64,
    pub i: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub records: Vec<Record>,
    /// Normalization area of the measured device, m².
    pub area: f64,
}

impl Dataset {
    pub fn new(name: impl Into<String>, records: Vec<Record>, area: f64) -> Result<Self> {
        let d = Dataset {
            name: name.into(),
            records,
            area,
        };
        d.validate()?;
        Ok(d)
    }

    /// Takes `(t, e, i)` from every sample of a simulated series.
    pub fn from_series(name: impl Into<String>, series: &TimeSeries, area: f64) -> Result<Self> {
        let records = series
            .samples
            .iter()
            .map(|s| Record {
                t: s.t,
                e: s.e,
                i: s.i,
            })
            .collect();
        Dataset::new(name, records, area)
    }

    pub fn validate(&self) -> Result<()> {
        if self.records.len() < 2 {
            return Err(Error::invalid("records", "a dataset needs at least two records"));
        }
        if self.records[0].t != 0.0 {
            return Err(Error::invalid("records", "the first record must be at t = 0"));
        }
        if self.records.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid("records", "time must be strictly increasing"));
        }
        if self
            .records
            .iter()
            .any(|r| !r.t.is_finite() || !r.e.is_finite() || !r.i.is_finite())
        {
            return Err(Error::invalid("records", "values must be finite"));
        }
        if !(self.area > 0.0 && self.area.is_finite()) {
            return Err(Error::invalid("area", "must be > 0"));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn waveform(&self) -> WaveformSpec {
        WaveformSpec::PiecewiseLinear {
            breakpoints: self.records.iter().map(|r| (r.t, r.e)).collect(),
        }
    }
}

/// RMSE between asinh-scaled currents, with `sim` interpolated linearly
/// onto the dataset timestamps.
pub fn log_current_error(sim: &TimeSeries, data: &Dataset) -> Result<f64> {
    let (Some(first), Some(last)) = (sim.first(), sim.last()) else {
        return Err(Error::Calibration("simulated series is empty".into()));
    };
    let (t0, t1) = (data.records[0].t, data.records[data.records.len() - 1].t);
    let slack = 1e-9 * t1.abs().max(1.0);
    if first.t > t0 + slack || last.t < t1 - slack {
        return Err(Error::Calibration(format!(
            "simulation covers [{}, {}] s but dataset '{}' spans [{t0}, {t1}] s",
            first.t, last.t, data.name
        )));
    }
    let mut acc = 0.0;
    for r in &data.records {
        let i_sim = sim.current_at(r.t).unwrap_or(0.0);
        let d = scaled_current(i_sim) - scaled_current(r.i);
        acc += d * d;
    }
    Ok((acc / data.records.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeParameter {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub initial: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    pub free: Vec<FreeParameter>,
    /// Applied to the base parameters before fitting.
    pub fixed: Vec<(String, f64)>,
    /// One weight per dataset; empty means weight 1 for all.
    pub weights: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
    /// Evaluation budget per restart.
    pub max_evaluations: usize,
    /// Jitter of restart points, in logistic coordinates.
    pub jitter: f64,
    /// Stop a restart when the simplex objective spread falls below this.
    pub f_tol: f64,
    /// Skip the remaining restarts once the best objective is at or below this.
    pub f_target: f64,
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec {
            free: Vec::new(),
            fixed: Vec::new(),
            weights: Vec::new(),
            restarts: 3,
            seed: 1,
            max_evaluations: 2000,
            jitter: 0.3,
            f_tol: 1e-12,
            f_target: 0.0,
        }
    }
}

impl FitSpec {
    pub fn validate(&self, n_datasets: usize) -> Result<()> {
        let probe = DeviceParameters::default();
        for f in &self.free {
            if probe.get(&f.name).is_none() {
                return Err(Error::invalid(f.name.clone(), "unknown parameter"));
            }
            if !(f.lower.is_finite() && f.upper.is_finite() && f.lower < f.upper) {
                return Err(Error::invalid(f.name.clone(), "bounds must be finite with lower < upper"));
            }
            if !(f.lower..=f.upper).contains(&f.initial) {
                return Err(Error::invalid(f.name.clone(), "initial value must lie within bounds"));
            }
        }
        for (k, f) in self.free.iter().enumerate() {
            if self.free[..k].iter().any(|g| g.name == f.name) {
                return Err(Error::invalid(f.name.clone(), "listed twice as free"));
            }
        }
        for (name, _) in &self.fixed {
            if probe.get(name).is_none() {
                return Err(Error::invalid(name.clone(), "unknown parameter"));
            }
        }
        if !self.weights.is_empty() && self.weights.len() != n_datasets {
            return Err(Error::invalid("weights", "need one weight per dataset"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights", "must be finite and >= 0"));
        }
        if self.max_evaluations == 0 {
            return Err(Error::invalid("max_evaluations", "must be > 0"));
        }
        if !(self.f_target >= 0.0 && self.f_tol >= 0.0) {
            return Err(Error::invalid("f_target", "tolerances must be >= 0"));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::invalid("jitter", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub best_parameters: DeviceParameters,
    pub objective_value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Per-dataset error at the best parameters, unweighted.
    pub residuals: Vec<f64>,
    /// Best-so-far objective after the initial point and after each restart.
    pub history: Vec<f64>,
    pub diagnostics: String,
}

/// Objective evaluator over a fixed set of datasets.
pub struct Objective<'a> {
    datasets: &'a [Dataset],
    weights: Vec<f64>,
    cfg: &'a CircuitConfig,
    settings: &'a IntegratorSettings,
    times: Vec<Vec<f64>>,
    waves: Vec<WaveformSpec>,
}

impl<'a> Objective<'a> {
    pub fn new(
        datasets: &'a [Dataset],
        weights: &[f64],
        cfg: &'a CircuitConfig,
        settings: &'a IntegratorSettings,
    ) -> Result<Self> {
        if datasets.is_empty() {
            return Err(Error::Calibration("at least one dataset is required".into()));
        }
        for d in datasets {
            d.validate()?;
        }
        let weights = if weights.is_empty() {
            vec![1.0; datasets.len()]
        } else {
            weights.to_vec()
        };
        Ok(Objective {
            datasets,
            weights,
            cfg,
            settings,
            times: datasets.iter().map(Dataset::times).collect(),
            waves: datasets.iter().map(Dataset::waveform).collect(),
        })
    }

    /// Per-dataset errors.
    pub fn residuals(&self, params: &DeviceParameters) -> Result<Vec<f64>> {
        let device = Device::new(params.clone())?;
        let mut out = Vec::with_capacity(self.datasets.len());
        for k in 0..self.datasets.len() {
            let sim = integrate_at(&device, self.cfg, &self.waves[k], self.settings, 1.0, &self.times[k])?;
            out.push(log_current_error(&sim, &self.datasets[k])?);
        }
        Ok(out)
    }

    pub fn value(&self, params: &DeviceParameters) -> Result<f64> {
        let r = self.residuals(params)?;
        Ok(r.iter().zip(&self.weights).map(|(r, w)| r * w).sum())
    }
}

fn logistic(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}

fn logit(x: f64) -> f64 {
    // Keep initial values on the bounds representable.
    let x = x.clamp(1e-9, 1.0 - 1e-9);
    (x / (1.0 - x)).ln()
}

fn to_params(base: &DeviceParameters, free: &[FreeParameter], y: &[f64]) -> Option<DeviceParameters> {
    let mut p = base.clone();
    for (f, &yk) in free.iter().zip(y) {
        let v = f.lower + (f.upper - f.lower) * logistic(yk);
        p.set(&f.name, v).ok()?;
    }
    p.validate().ok()?;
    Some(p)
}

/// Fits the free parameters of `spec` starting from `base`.
pub fn fit(
    spec: &FitSpec,
    base: &DeviceParameters,
    datasets: &[Dataset],
    cfg: &CircuitConfig,
    settings: &IntegratorSettings,
) -> Result<FitResult> {
    spec.validate(datasets.len())?;
    let mut start = base.clone();
    for (name, v) in &spec.fixed {
        start.set(name, *v)?;
    }
    for f in &spec.free {
        start.set(&f.name, f.initial)?;
    }
    start.validate()?;
    let objective = Objective::new(datasets, &spec.weights, cfg, settings)?;
    let initial_value = objective.value(&start)?;
    let mut evaluations = 1;

    if spec.free.is_empty() {
        let residuals = objective.residuals(&start)?;
        return Ok(FitResult {
            best_parameters: start,
            objective_value: initial_value,
            evaluations,
            converged: true,
            residuals,
            history: vec![initial_value],
            diagnostics: "no free parameters".into(),
        });
    }

    // Invalid or failing points are ranked as +inf.
    let mut eval = |y: &[f64]| -> f64 {
        evaluations += 1;
        match to_params(&start, &spec.free, y) {
            Some(p) => objective.value(&p).unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        }
    };

    let y0: Vec<f64> = spec
        .free
        .iter()
        .map(|f| logit((f.initial - f.lower) / (f.upper - f.lower)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut best_y = y0.clone();
    let mut best_f = initial_value;
    let mut history = vec![best_f];
    let mut notes = Vec::new();

    for restart in 0..=spec.restarts {
        if best_f <= spec.f_target {
            notes.push(format!("target reached, {} restarts skipped", spec.restarts + 1 - restart));
            break;
        }
        let origin: Vec<f64> = if restart == 0 {
            best_y.clone()
        } else {
            best_y
                .iter()
                .map(|y| y + spec.jitter * rng.gen_range(-1.0..=1.0))
                .collect()
        };
        let run = nelder_mead(&mut eval, &origin, 0.5, spec.max_evaluations, spec.f_tol);
        if run.f < best_f {
            best_f = run.f;
            best_y = run.x;
        }
        notes.push(format!(
            "restart {restart}: {} evaluations, f = {:e}{}",
            run.evaluations,
            run.f,
            if run.converged { "" } else { " (budget exhausted)" }
        ));
        debug_assert!(history.last().map_or(true, |&h| best_f <= h));
        history.push(best_f);
    }

    let best_parameters = if best_f < initial_value {
        to_params(&start, &spec.free, &best_y)
            .ok_or_else(|| Error::Calibration("best point left the valid region".into()))?
    } else {
        start.clone()
    };
    // Re-evaluate once so the reported value belongs to the returned parameters.
    let residuals = objective.residuals(&best_parameters)?;
    let objective_value = objective.value(&best_parameters)?;
    let converged = objective_value < initial_value || initial_value == 0.0;
    if !converged {
        notes.push(format!("no restart improved on the initial objective {initial_value:e}"));
    }
    Ok(FitResult {
        best_parameters,
        objective_value,
        evaluations,
        converged,
        residuals,
        history,
        diagnostics: notes.join("\n"),
    })
}

pub struct NelderMeadRun {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead with standard coefficients (1, 2, ½, ½) and an axis-aligned
/// initial simplex of edge `step`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    step: f64,
    max_evaluations: usize,
    f_tol: f64,
) -> NelderMeadRun {
    let n = x0.len();
    let mut evals = 0;
    let mut call = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = call(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for k in 0..n {
        let mut x = x0.to_vec();
        x[k] += step;
        let v = call(&x, &mut evals);
        simplex.push((x, v));
    }
    let mut converged = false;
    while evals < max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() <= f_tol || (simplex[0].1 == 0.0 && simplex[n].1 == 0.0) {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let worst = simplex[n].0.clone();
        let xr = along(1.0, &worst);
        let fr = call(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0, &worst);
            let fe = call(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(0.5, &worst);
                let fc = call(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-0.5, &worst);
                let fc = call(&xc, &mut evals);
                (xc, fc)
            };
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best
                        .iter()
                        .zip(&p.0)
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    let v = call(&x, &mut evals);
                    *p = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    NelderMeadRun {
        x,
        f: fx,
        evaluations: evals,
        converged,
    }
}
