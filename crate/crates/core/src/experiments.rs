//! Hysteresis sweeps, step responses and retention runs, plus loop metrics.

use crate::circuit::CircuitConfig;
use crate::error::{Error, Result};
use crate::model::Device;
use crate::simulator::{integrate, IntegratorSettings, Sample, TimeSeries};
use crate::waveform::WaveformSpec;

/// Reference current for the asinh scaling, 1 pA.
pub const I_REF: f64 = 1e-12;

/// Operating range of the source voltage for step runs.
pub const OPERATING_RANGE: (f64, f64) = (-2.0, 3.0);

/// Tolerance on `|z(end) − z(start)|` for a loop to count as closed.
pub const CLOSURE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisMetrics {
    /// Enclosed area in the `(u, asinh(i / I_REF))` plane, summed over lobes.
    pub loop_area: f64,
    /// Largest ratio between the two branch currents at equal voltage.
    pub max_branch_ratio: f64,
    /// Current at the sample with the largest source voltage.
    pub i_at_peak: f64,
    pub closed: bool,
}

/// Scaled current used for plotting and fitting.
pub fn scaled_current(i: f64) -> f64 {
    (i / I_REF).asinh()
}

/// Loop metrics of a sampled sweep.
///
/// The series is cut into lobes of constant sign of `e` (each lobe keeps
/// its neighboring zero-crossing samples). Each lobe is closed and its
/// shoelace area taken in absolute value, so the result does not depend on
/// traversal direction. Within each lobe the sample of largest `|e|` splits
/// the rising and falling branch.
pub fn loop_metrics(series: &TimeSeries) -> Result<HysteresisMetrics> {
    let s = &series.samples;
    if s.len() < 2 {
        return Err(Error::invalid("series", "need at least two samples"));
    }
    let mut area = 0.0;
    let mut ratio: f64 = 1.0;
    for (a, b) in lobes(s) {
        let lobe = &s[a..=b];
        area += shoelace(lobe).abs();
        ratio = ratio.max(branch_ratio(lobe));
    }
    let peak = s
        .iter()
        .enumerate()
        .fold(0, |k, (j, x)| if x.e > s[k].e { j } else { k });
    let z_gap = (s[0].z - s[s.len() - 1].z).abs();
    Ok(HysteresisMetrics {
        loop_area: area,
        max_branch_ratio: ratio,
        i_at_peak: s[peak].i,
        closed: z_gap <= CLOSURE_TOL,
    })
}

fn sign(e: f64) -> i8 {
    if e > 0.0 {
        1
    } else if e < 0.0 {
        -1
    } else {
        0
    }
}

/// Index ranges of constant-sign runs, widened by one sample on each side.
fn lobes(s: &[Sample]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < s.len() {
        let sg = sign(s[k].e);
        if sg == 0 {
            k += 1;
            continue;
        }
        let start = k;
        while k < s.len() && sign(s[k].e) == sg {
            k += 1;
        }
        let a = start.saturating_sub(1);
        let b = k.min(s.len() - 1);
        out.push((a, b));
    }
    // A series with no sign change at all (constant voltage) is one lobe.
    if out.is_empty() {
        out.push((0, s.len() - 1));
    }
    out
}

fn shoelace(s: &[Sample]) -> f64 {
    let n = s.len();
    let mut acc = 0.0;
    for k in 0..n {
        let p = &s[k];
        let q = &s[(k + 1) % n];
        acc += p.u * scaled_current(q.i) - q.u * scaled_current(p.i);
    }
    0.5 * acc
}

fn branch_ratio(lobe: &[Sample]) -> f64 {
    let apex = lobe
        .iter()
        .enumerate()
        .fold(0, |k, (j, x)| if x.e.abs() > lobe[k].e.abs() { j } else { k });
    let up = sorted_branch(&lobe[..=apex]);
    let down = sorted_branch(&lobe[apex..]);
    if up.len() < 2 || down.len() < 2 {
        return 1.0;
    }
    let lo = up[0].0.max(down[0].0);
    let hi = up[up.len() - 1].0.min(down[down.len() - 1].0);
    if !(hi > lo) {
        return 1.0;
    }
    const GRID: usize = 400;
    let mut best: f64 = 1.0;
    for k in 0..=GRID {
        let u = lo + (hi - lo) * k as f64 / GRID as f64;
        let a = interp(&up, u).abs();
        let b = interp(&down, u).abs();
        let (small, large) = if a < b { (a, b) } else { (b, a) };
        if small >= I_REF {
            best = best.max(large / small);
        }
    }
    best
}

fn sorted_branch(s: &[Sample]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = s.iter().map(|x| (x.u, x.i)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn interp(points: &[(f64, f64)], u: f64) -> f64 {
    let k = points.partition_point(|p| p.0 <= u).clamp(1, points.len() - 1);
    let (ua, ia) = points[k - 1];
    let (ub, ib) = points[k];
    if ub == ua {
        return 0.5 * (ia + ib);
    }
    ia + (ib - ia) * (u - ua) / (ub - ua)
}

/// One full triangle period from the high-resistance state.
pub fn run_hysteresis(
    device: &Device,
    cfg: &CircuitConfig,
    spec: &WaveformSpec,
    settings: &IntegratorSettings,
) -> Result<(TimeSeries, HysteresisMetrics)> {
    if !matches!(spec, WaveformSpec::Triangle { .. }) {
        return Err(Error::invalid("waveform", "hysteresis needs a triangle waveform"));
    }
    let series = integrate(device, cfg, spec, settings, 1.0)?;
    let metrics = loop_metrics(&series)?;
    Ok((series, metrics))
}

/// Constant bias from the high-resistance state.
pub fn run_step_response(
    device: &Device,
    cfg: &CircuitConfig,
    amplitude: f64,
    duration: f64,
    settings: &IntegratorSettings,
) -> Result<TimeSeries> {
    let (lo, hi) = OPERATING_RANGE;
    if !(lo..=hi).contains(&amplitude) {
        return Err(Error::invalid(
            "amplitude",
            format!("must lie in [{lo}, {hi}] V"),
        ));
    }
    integrate(device, cfg, &WaveformSpec::step(amplitude, duration), settings, 1.0)
}

/// Zero bias from an arbitrary initial state.
pub fn run_retention(
    device: &Device,
    cfg: &CircuitConfig,
    z0: f64,
    duration: f64,
    settings: &IntegratorSettings,
) -> Result<TimeSeries> {
    integrate(device, cfg, &WaveformSpec::step(0.0, duration), settings, z0)
}

/// Negative peak used when only a positive peak is given: two thirds of it,
/// mirroring the (3, −2) V pair.
pub fn default_negative_peak(pos_peak: f64) -> f64 {
    -2.0 / 3.0 * pos_peak
}
