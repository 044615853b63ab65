//! Excitation waveforms.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum WaveformSpec {
    /// 0 → `pos_peak` at T/4 → 0 at T/2 → `neg_peak` at 3T/4 → 0 at T,
    /// linear in between, repeating with period T.
    Triangle {
        period: f64,
        pos_peak: f64,
        neg_peak: f64,
    },
    /// Constant `amplitude` from t = 0 on.
    Step { amplitude: f64, duration: f64 },
    /// Linear interpolation through `(t, e)` breakpoints, held at the last
    /// value afterwards.
    PiecewiseLinear { breakpoints: Vec<(f64, f64)> },
}

impl WaveformSpec {
    pub fn triangle(period: f64, pos_peak: f64, neg_peak: f64) -> Self {
        WaveformSpec::Triangle {
            period,
            pos_peak,
            neg_peak,
        }
    }

    pub fn step(amplitude: f64, duration: f64) -> Self {
        WaveformSpec::Step {
            amplitude,
            duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WaveformSpec::Triangle {
                period,
                pos_peak,
                neg_peak,
            } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::invalid("period", "must be > 0"));
                }
                if !pos_peak.is_finite() {
                    return Err(Error::invalid("peak_pos", "must be finite"));
                }
                if !(neg_peak.is_finite() && *neg_peak <= 0.0) {
                    return Err(Error::invalid("peak_neg", "must be finite and <= 0"));
                }
            }
            WaveformSpec::Step {
                amplitude,
                duration,
            } => {
                if !amplitude.is_finite() {
                    return Err(Error::invalid("amplitude", "must be finite"));
                }
                if !(duration.is_finite() && *duration > 0.0) {
                    return Err(Error::invalid("duration", "must be > 0"));
                }
            }
            WaveformSpec::PiecewiseLinear { breakpoints } => {
                if breakpoints.is_empty() {
                    return Err(Error::invalid("breakpoints", "at least one breakpoint required"));
                }
                if breakpoints[0].0 != 0.0 {
                    return Err(Error::invalid("breakpoints", "first breakpoint must be at t = 0"));
                }
                for w in breakpoints.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::invalid(
                            "breakpoints",
                            "times must be strictly increasing",
                        ));
                    }
                }
                if breakpoints.iter().any(|(t, e)| !t.is_finite() || !e.is_finite()) {
                    return Err(Error::invalid("breakpoints", "values must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Natural run length: one period, the step duration, or the last
    /// breakpoint time.
    pub fn duration(&self) -> f64 {
        match self {
            WaveformSpec::Triangle { period, .. } => *period,
            WaveformSpec::Step { duration, .. } => *duration,
            WaveformSpec::PiecewiseLinear { breakpoints } => {
                breakpoints.last().map(|b| b.0).unwrap_or(0.0)
            }
        }
    }

    /// Source voltage at time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            WaveformSpec::Triangle {
                period,
                pos_peak,
                neg_peak,
            } => {
                let x = (t / period).rem_euclid(1.0) * 4.0;
                if x < 1.0 {
                    pos_peak * x
                } else if x < 2.0 {
                    pos_peak * (2.0 - x)
                } else if x < 3.0 {
                    neg_peak * (x - 2.0)
                } else {
                    neg_peak * (4.0 - x)
                }
            }
            WaveformSpec::Step { amplitude, .. } => *amplitude,
            WaveformSpec::PiecewiseLinear { breakpoints } => interpolate(breakpoints, t),
        }
    }

    /// Kink times in `(t0, t1)`, ascending. Integrators stop on these.
    pub fn breakpoints_in(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self {
            WaveformSpec::Triangle { period, .. } => {
                let quarter = period / 4.0;
                let mut k = (t0 / quarter).floor() as i64 + 1;
                loop {
                    let t = k as f64 * quarter;
                    if t >= t1 {
                        break;
                    }
                    if t > t0 {
                        out.push(t);
                    }
                    k += 1;
                }
            }
            WaveformSpec::Step { .. } => {}
            WaveformSpec::PiecewiseLinear { breakpoints } => {
                out.extend(breakpoints.iter().map(|b| b.0).filter(|&t| t > t0 && t < t1));
            }
        }
        out
    }
}

fn interpolate(points: &[(f64, f64)], t: f64) -> f64 {
    let Some(&(t_last, e_last)) = points.last() else {
        return 0.0;
    };
    if t >= t_last {
        return e_last;
    }
    if t <= points[0].0 {
        return points[0].1;
    }
    let k = points.partition_point(|p| p.0 <= t);
    let (ta, ea) = points[k - 1];
    let (tb, eb) = points[k];
    ea + (eb - ea) * (t - ta) / (tb - ta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_vertices_and_peaks() {
        let w = WaveformSpec::triangle(100.0, 3.0, -2.0);
        assert_eq!(w.eval(25.0), 3.0);
        assert_eq!(w.eval(75.0), -2.0);
        for t in [0.0, 50.0, 100.0] {
            assert_eq!(w.eval(t), 0.0);
        }
        assert!((w.eval(12.5) - 1.5).abs() < 1e-15);
        assert!((w.eval(62.5) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_is_constant() {
        let w = WaveformSpec::step(2.5, 600.0);
        for t in [1e-9, 1.0, 300.0, 600.0, 700.0] {
            assert_eq!(w.eval(t), 2.5);
        }
    }

    #[test]
    fn pwl_interpolates_and_clamps() {
        let w = WaveformSpec::PiecewiseLinear {
            breakpoints: vec![(0.0, 0.0), (10.0, 1.0), (20.0, -1.0)],
        };
        w.validate().unwrap();
        assert_eq!(w.eval(5.0), 0.5);
        assert_eq!(w.eval(15.0), 0.0);
        assert_eq!(w.eval(25.0), -1.0);
        assert_eq!(w.breakpoints_in(0.0, 20.0), vec![10.0]);
    }

    #[test]
    fn triangle_breakpoints() {
        let w = WaveformSpec::triangle(100.0, 3.0, -2.0);
        assert_eq!(w.breakpoints_in(0.0, 100.0), vec![25.0, 50.0, 75.0]);
        assert_eq!(w.breakpoints_in(20.0, 60.0), vec![25.0, 50.0]);
    }

    #[test]
    fn invalid_specs() {
        assert!(WaveformSpec::triangle(0.0, 3.0, -2.0).validate().is_err());
        assert!(WaveformSpec::triangle(100.0, 3.0, 2.0).validate().is_err());
        assert!(WaveformSpec::step(1.0, -1.0).validate().is_err());
        let w = WaveformSpec::PiecewiseLinear {
            breakpoints: vec![(0.0, 0.0), (0.0, 1.0)],
        };
        assert!(w.validate().is_err());
    }
}
