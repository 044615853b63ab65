//! Time integration of the state equation coupled to the quasi-static
//! circuit solve.
//!
//! Each right-hand-side evaluation solves the operating point for the
//! current source voltage and state, then evaluates `ż`. Step size is
//! controlled by step doubling on `z` and by a cap on `|Δz|` per step.
//! Steps never cross waveform kinks or output times, and `z` is clamped to
//! `[0, 1]` after every stage.

use crate::circuit::{solve_operating_point, CircuitConfig, OperatingPoint, SolverSettings};
use crate::error::{Error, Result};
use crate::model::Device;
use crate::waveform::WaveformSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Explicit midpoint rule with step doubling and Richardson extrapolation.
    #[default]
    AdaptiveExplicit,
    /// Implicit midpoint rule with step doubling.
    ImplicitMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub max_dz_per_step: f64,
    /// Local error tolerance on `z` per step.
    pub error_tol: f64,
    pub scheme: Scheme,
    /// Number of evenly spaced output samples, endpoints included.
    pub samples: usize,
    pub solver: SolverSettings,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            dt_init: 1e-2,
            dt_min: 1e-3,
            dt_max: 1.0,
            max_dz_per_step: 0.01,
            error_tol: 1e-9,
            scheme: Scheme::AdaptiveExplicit,
            samples: 2000,
            solver: SolverSettings::default(),
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0) {
            return Err(Error::invalid("dt_min", "must be > 0"));
        }
        if !(self.dt_init >= self.dt_min) {
            return Err(Error::invalid("dt_init", "must be >= dt_min"));
        }
        if !(self.dt_max >= self.dt_init && self.dt_max.is_finite()) {
            return Err(Error::invalid("dt_max", "must be finite and >= dt_init"));
        }
        if !(self.max_dz_per_step > 0.0 && self.max_dz_per_step <= 0.05) {
            return Err(Error::invalid("max_dz_per_step", "must lie in (0, 0.05]"));
        }
        if !(self.error_tol > 0.0) {
            return Err(Error::invalid("error_tol", "must be > 0"));
        }
        if self.samples < 2 {
            return Err(Error::invalid("samples", "must be >= 2"));
        }
        self.solver.validate()
    }
}

/// One recorded instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub e: f64,
    pub u: f64,
    pub i: f64,
    pub u_s: f64,
    pub u_e: f64,
    pub u_t: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
    /// Right-hand-side evaluations that hit the exponent cap.
    pub saturation_events: usize,
    /// Operating points that needed the bracketed fallback.
    pub solver_fallbacks: usize,
}

impl TimeSeries {
    pub fn from_samples(samples: Vec<Sample>) -> Self {
        TimeSeries {
            samples,
            ..TimeSeries::default()
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Linear interpolation of the current at time `t` (clamped to the span).
    pub fn current_at(&self, t: f64) -> Option<f64> {
        let s = &self.samples;
        let last = s.last()?;
        if t >= last.t {
            return Some(last.i);
        }
        if t <= s[0].t {
            return Some(s[0].i);
        }
        let k = s.partition_point(|x| x.t <= t);
        let (a, b) = (&s[k - 1], &s[k]);
        Some(a.i + (b.i - a.i) * (t - a.t) / (b.t - a.t))
    }
}

/// Stateful right-hand side: keeps the last operating point as warm start.
struct Rhs<'a> {
    device: &'a Device,
    cfg: &'a CircuitConfig,
    spec: &'a WaveformSpec,
    solver: &'a SolverSettings,
    warm: Option<OperatingPoint>,
    saturation_events: usize,
    fallbacks: usize,
}

impl<'a> Rhs<'a> {
    fn op(&mut self, t: f64, z: f64) -> Result<OperatingPoint> {
        let e = self.spec.eval(t);
        let op = solve_operating_point(e, z, self.cfg, self.device, self.solver, self.warm.as_ref())?;
        if op.fallback {
            self.fallbacks += 1;
        }
        self.warm = Some(op);
        Ok(op)
    }

    fn rate(&mut self, t: f64, z: f64) -> Result<f64> {
        let z = z.clamp(0.0, 1.0);
        let op = self.op(t, z)?;
        let r = self.device.state_rate(op.u, op.u_s, op.u_e, z);
        if r.saturated || op.saturated {
            self.saturation_events += 1;
        }
        Ok(r.rate)
    }

    fn sample(&mut self, t: f64, z: f64) -> Result<Sample> {
        let op = self.op(t, z)?;
        Ok(Sample {
            t,
            e: self.spec.eval(t),
            u: op.u,
            i: op.i,
            u_s: op.u_s,
            u_e: op.u_e,
            u_t: op.u_t,
            z,
        })
    }
}

fn output_times(duration: f64, samples: usize) -> Vec<f64> {
    let n = samples - 1;
    (0..=n).map(|k| duration * k as f64 / n as f64).collect()
}

fn check_z0(z0: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z0) {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "z0",
            value: z0,
            domain: "[0, 1]",
        })
    }
}

/// Integrates over the waveform's natural duration with evenly spaced output.
pub fn integrate(
    device: &Device,
    cfg: &CircuitConfig,
    spec: &WaveformSpec,
    settings: &IntegratorSettings,
    z0: f64,
) -> Result<TimeSeries> {
    settings.validate()?;
    spec.validate()?;
    let times = output_times(spec.duration(), settings.samples);
    integrate_at(device, cfg, spec, settings, z0, &times)
}

/// Integrates from `times[0]` and records a sample at every entry of `times`.
pub fn integrate_at(
    device: &Device,
    cfg: &CircuitConfig,
    spec: &WaveformSpec,
    settings: &IntegratorSettings,
    z0: f64,
    times: &[f64],
) -> Result<TimeSeries> {
    settings.validate()?;
    spec.validate()?;
    check_z0(z0)?;
    check_times(times)?;

    let mut rhs = Rhs {
        device,
        cfg,
        spec,
        solver: &settings.solver,
        warm: None,
        saturation_events: 0,
        fallbacks: 0,
    };
    let mut samples = Vec::with_capacity(times.len());
    let mut t = times[0];
    let mut z = z0;
    let mut h = settings.dt_init;
    samples.push(rhs.sample(t, z)?);

    for &t_out in &times[1..] {
        let mut stops = spec.breakpoints_in(t, t_out);
        stops.push(t_out);
        for t_stop in stops {
            while t < t_stop {
                let remaining = t_stop - t;
                // Avoid leaving a sliver step before the stop.
                let forced = h >= remaining || remaining - h < 1e-9 * t_stop.abs().max(1.0);
                let step = if forced { remaining } else { h };
                match try_step(&mut rhs, settings, t, z, step)? {
                    StepOutcome::Accepted { z: z_new, next_h } => {
                        t = if forced { t_stop } else { t + step };
                        z = z_new;
                        // Keep the controller's suggestion across forced short steps.
                        h = if forced { next_h.max(h) } else { next_h };
                        h = h.clamp(settings.dt_min, settings.dt_max);
                    }
                    StepOutcome::Rejected { next_h } => {
                        if step <= settings.dt_min {
                            return Err(Error::IntegrationFailure {
                                t,
                                z,
                                reason: format!(
                                    "step size fell below dt_min = {} s",
                                    settings.dt_min
                                ),
                            });
                        }
                        h = next_h.max(settings.dt_min).min(step * 0.9);
                    }
                }
            }
        }
        samples.push(rhs.sample(t_out, z)?);
    }

    Ok(TimeSeries {
        samples,
        saturation_events: rhs.saturation_events,
        solver_fallbacks: rhs.fallbacks,
    })
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::invalid("samples", "need at least two output times"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("samples", "output times must be finite and >= 0"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("samples", "output times must be strictly increasing"));
    }
    Ok(())
}

enum StepOutcome {
    Accepted { z: f64, next_h: f64 },
    Rejected { next_h: f64 },
}

fn try_step(
    rhs: &mut Rhs<'_>,
    settings: &IntegratorSettings,
    t: f64,
    z: f64,
    h: f64,
) -> Result<StepOutcome> {
    let (full, half) = match settings.scheme {
        Scheme::AdaptiveExplicit => {
            let f0 = rhs.rate(t, z)?;
            let full = explicit_midpoint(rhs, t, z, h, f0)?;
            let mid = explicit_midpoint(rhs, t, z, 0.5 * h, f0)?;
            let f_mid = rhs.rate(t + 0.5 * h, mid)?;
            let half = explicit_midpoint(rhs, t + 0.5 * h, mid, 0.5 * h, f_mid)?;
            (full, half)
        }
        Scheme::ImplicitMidpoint => {
            let full = implicit_midpoint(rhs, t, z, h)?;
            let mid = implicit_midpoint(rhs, t, z, 0.5 * h)?;
            let half = implicit_midpoint(rhs, t + 0.5 * h, mid, 0.5 * h)?;
            (full, half)
        }
    };
    // Second-order pair: error of the half-step result is (half − full)/3.
    let err = (half - full).abs() / 3.0;
    let dz = (half - z).abs();
    let safety = 0.9;
    let grow = if err > 0.0 {
        (safety * (settings.error_tol / err).cbrt()).clamp(0.2, 4.0)
    } else {
        4.0
    };
    if err > settings.error_tol || dz > settings.max_dz_per_step {
        let shrink = if dz > settings.max_dz_per_step {
            0.9 * settings.max_dz_per_step / dz
        } else {
            1.0
        };
        return Ok(StepOutcome::Rejected {
            next_h: h * grow.min(shrink).min(0.9),
        });
    }
    let z_new = (half + (half - full) / 3.0).clamp(0.0, 1.0);
    Ok(StepOutcome::Accepted {
        z: z_new,
        next_h: h * grow,
    })
}

fn explicit_midpoint(rhs: &mut Rhs<'_>, t: f64, z: f64, h: f64, f0: f64) -> Result<f64> {
    let z_half = (z + 0.5 * h * f0).clamp(0.0, 1.0);
    let f_half = rhs.rate(t + 0.5 * h, z_half)?;
    Ok((z + h * f_half).clamp(0.0, 1.0))
}

/// Solves `z₁ = z₀ + h·f(t + h/2, (z₀ + z₁)/2)` by a safeguarded secant iteration.
fn implicit_midpoint(rhs: &mut Rhs<'_>, t: f64, z0: f64, h: f64) -> Result<f64> {
    let tm = t + 0.5 * h;
    let g = |z1: f64, rhs: &mut Rhs<'_>| -> Result<f64> {
        Ok(z1 - z0 - h * rhs.rate(tm, 0.5 * (z0 + z1))?)
    };
    let f0 = rhs.rate(t, z0)?;
    let mut a = z0;
    let mut ga = g(a, rhs)?;
    let mut b = (z0 + h * f0).clamp(0.0, 1.0);
    if b == a {
        b = (a + 1e-9).min(1.0);
        if b == a {
            b = a - 1e-9;
        }
    }
    let mut gb = g(b, rhs)?;
    for _ in 0..50 {
        if gb == 0.0 || (b - a).abs() <= 1e-15 {
            break;
        }
        let denom = gb - ga;
        if denom == 0.0 {
            break;
        }
        let c = b - gb * (b - a) / denom;
        a = b;
        ga = gb;
        b = c;
        gb = g(b, rhs)?;
    }
    if !b.is_finite() {
        return Err(Error::IntegrationFailure {
            t,
            z: z0,
            reason: "implicit midpoint iteration diverged".into(),
        });
    }
    // Clamping afterwards handles roots that lie outside [0, 1].
    Ok(b.clamp(0.0, 1.0))
}

/// Fixed-step classical Runge–Kutta reference with step `dt` (each output
/// interval is split into equal sub-steps no longer than `dt`).
pub fn integrate_fixed_reference(
    device: &Device,
    cfg: &CircuitConfig,
    spec: &WaveformSpec,
    solver: &SolverSettings,
    z0: f64,
    times: &[f64],
    dt: f64,
) -> Result<TimeSeries> {
    spec.validate()?;
    check_z0(z0)?;
    check_times(times)?;
    if !(dt > 0.0) {
        return Err(Error::invalid("dt_min", "must be > 0"));
    }
    let mut rhs = Rhs {
        device,
        cfg,
        spec,
        solver,
        warm: None,
        saturation_events: 0,
        fallbacks: 0,
    };
    let mut z = z0;
    let mut samples = vec![rhs.sample(times[0], z)?];
    for w in times.windows(2) {
        let n = ((w[1] - w[0]) / dt).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            let t = w[0] + k as f64 * h;
            let k1 = rhs.rate(t, z)?;
            let k2 = rhs.rate(t + 0.5 * h, z + 0.5 * h * k1)?;
            let k3 = rhs.rate(t + 0.5 * h, z + 0.5 * h * k2)?;
            let k4 = rhs.rate(t + h, z + h * k3)?;
            z = (z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, 1.0);
        }
        samples.push(rhs.sample(w[1], z)?);
    }
    Ok(TimeSeries {
        samples,
        saturation_events: rhs.saturation_events,
        solver_fallbacks: rhs.fallbacks,
    })
}
