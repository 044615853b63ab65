//! Operating point of the series network
//! `R_0 → Schottky diode → (R̂_e ‖ C_e) → (R̂_t ‖ C_t)`.
//!
//! The quasi-static solve treats `(u_s, u_e, u_t)` as unknowns and applies a
//! damped Newton iteration with the analytic Jacobian. A bracketed bisection
//! over `u_s` serves as the fallback and as an independent reference.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::model::Device;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CircuitMode {
    #[default]
    QuasiStatic,
    Capacitive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitConfig {
    /// Source resistance R_0, Ω.
    pub source_resistance: f64,
    /// Electrolyte parasitic capacitance, F.
    pub c_e: f64,
    /// Tunnel-barrier parasitic capacitance, F.
    pub c_t: f64,
    pub mode: CircuitMode,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        CircuitConfig {
            source_resistance: 0.1,
            c_e: 0.0,
            c_t: 0.0,
            mode: CircuitMode::QuasiStatic,
        }
    }
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.source_resistance.is_finite() && self.source_resistance > 0.0) {
            return Err(Error::invalid("source_resistance", "must be > 0"));
        }
        for (name, c) in [("c_e", self.c_e), ("c_t", self.c_t)] {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::invalid(name, "must be >= 0"));
            }
        }
        if self.mode == CircuitMode::Capacitive && !(self.c_e > 0.0 && self.c_t > 0.0) {
            return Err(Error::invalid(
                "mode",
                "capacitive mode requires c_e > 0 and c_t > 0",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Current tolerance on the region-current balance, A.
    pub abs_tol_current: f64,
    /// Relative tolerance on KVL closure and on the Newton step.
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Initial Newton step fraction.
    pub damping: f64,
    /// Geometric growth factor of the oracle bracket.
    pub bracket_expansion: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            abs_tol_current: 1e-15,
            rel_tol: 1e-9,
            max_iterations: 100,
            damping: 1.0,
            bracket_expansion: 2.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol_current > 0.0) {
            return Err(Error::invalid("abs_tol_current", "must be > 0"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be > 0"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations", "must be >= 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping", "must lie in (0, 1]"));
        }
        if !(self.bracket_expansion > 1.0) {
            return Err(Error::invalid("bracket_expansion", "must be > 1"));
        }
        Ok(())
    }
}

/// Instantaneous electrical solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub u_s: f64,
    pub u_e: f64,
    pub u_t: f64,
    /// Device voltage `u_s + u_e + u_t`.
    pub u: f64,
    pub i: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Largest absolute region-current residual, A.
    pub residual_norm: f64,
    /// The Newton path failed and the bracketed solver produced this point.
    pub fallback: bool,
    /// An exponential hit the overflow cap while evaluating this point.
    pub saturated: bool,
}

impl OperatingPoint {
    pub fn zero() -> Self {
        OperatingPoint {
            u_s: 0.0,
            u_e: 0.0,
            u_t: 0.0,
            u: 0.0,
            i: 0.0,
            converged: true,
            iterations: 0,
            residual_norm: 0.0,
            fallback: false,
            saturated: false,
        }
    }
}

/// Series-constraint residuals `(r1, r2, r3)` in A:
/// `i_s − u_e/R̂_e`, `i_s − i_t`, `i_s − (e − u_s − u_e − u_t)/R_0`.
pub fn kcl_residual(
    u_s: f64,
    u_e: f64,
    u_t: f64,
    e: f64,
    z: f64,
    cfg: &CircuitConfig,
    device: &Device,
) -> Result<[f64; 3]> {
    let i_s = device.schottky(u_s, z).current;
    let i_t = device.tunnel(u_t, z)?.current;
    let r_e = device.electrolyte_resistance(z);
    Ok([
        i_s - u_e / r_e,
        i_s - i_t,
        i_s - (e - u_s - u_e - u_t) / cfg.source_resistance,
    ])
}

/// Jacobian of [`kcl_residual`] with respect to `(u_s, u_e, u_t)`, rows by residual.
pub fn kcl_jacobian(
    u_s: f64,
    u_t: f64,
    z: f64,
    cfg: &CircuitConfig,
    device: &Device,
) -> Result<[[f64; 3]; 3]> {
    let g_s = device.schottky(u_s, z).conductance;
    let g_t = device.tunnel(u_t, z)?.conductance;
    let j = assemble_jacobian(g_s, g_t, device.electrolyte_resistance(z), cfg.source_resistance);
    Ok([
        [j[(0, 0)], j[(0, 1)], j[(0, 2)]],
        [j[(1, 0)], j[(1, 1)], j[(1, 2)]],
        [j[(2, 0)], j[(2, 1)], j[(2, 2)]],
    ])
}

fn assemble_jacobian(g_s: f64, g_t: f64, r_e: f64, r0: f64) -> Matrix3<f64> {
    #[rustfmt::skip]
    let j = Matrix3::new(
        g_s,            -1.0 / r_e, 0.0,
        g_s,            0.0,        -g_t,
        g_s + 1.0 / r0, 1.0 / r0,   1.0 / r0,
    );
    j
}

fn check_inputs(e: f64, z: f64, cfg: &CircuitConfig) -> Result<()> {
    if !e.is_finite() {
        return Err(Error::Domain {
            name: "e",
            value: e,
            domain: "finite",
        });
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain {
            name: "z",
            value: z,
            domain: "[0, 1]",
        });
    }
    cfg.validate()
}

/// Quasi-static operating point: damped Newton, bracketed fallback.
pub fn solve_operating_point(
    e: f64,
    z: f64,
    cfg: &CircuitConfig,
    device: &Device,
    settings: &SolverSettings,
    warm_start: Option<&OperatingPoint>,
) -> Result<OperatingPoint> {
    check_inputs(e, z, cfg)?;
    if cfg.mode != CircuitMode::QuasiStatic {
        return Err(Error::invalid(
            "mode",
            "operating-point solve requires quasi-static mode",
        ));
    }
    match newton(e, z, cfg, device, settings, warm_start) {
        Ok(op) => Ok(op),
        Err(_) => {
            let mut op = solve_operating_point_bracketed(e, z, cfg, device, settings)?;
            op.fallback = true;
            Ok(op)
        }
    }
}

/// Damped Newton iteration without fallback.
pub fn newton(
    e: f64,
    z: f64,
    cfg: &CircuitConfig,
    device: &Device,
    settings: &SolverSettings,
    warm_start: Option<&OperatingPoint>,
) -> Result<OperatingPoint> {
    let r0 = cfg.source_resistance;
    let r_e = device.electrolyte_resistance(z);
    let t_lim = device.tunnel_monotone_limit(z);
    let fail = |reason: String| Error::SolverFailure { e, z, reason };

    let mut x = match warm_start {
        Some(op) => Vector3::new(op.u_s, op.u_e, op.u_t.clamp(-t_lim, t_lim)),
        None => cold_start(e, z, cfg, device),
    };

    // Residuals scaled to volts for the line search.
    let scale = Vector3::new(r_e, r_e, r0);
    let eval = |x: &Vector3<f64>| -> Option<(Vector3<f64>, Matrix3<f64>, bool)> {
        let s = device.schottky(x[0], z);
        let t = device.tunnel(x[2], z).ok()?;
        let r = Vector3::new(
            s.current - x[1] / r_e,
            s.current - t.current,
            s.current - (e - x[0] - x[1] - x[2]) / r0,
        );
        Some((r, assemble_jacobian(s.conductance, t.conductance, r_e, r0), s.saturated))
    };

    let (mut r, mut jac, mut saturated) =
        eval(&x).ok_or_else(|| fail("initial guess outside the tunnel regime".into()))?;
    let mut last_step = f64::INFINITY;
    for iter in 0..=settings.max_iterations {
        let kvl = (r[2] * r0).abs();
        let current_ok = r[0].abs() <= settings.abs_tol_current && r[1].abs() <= settings.abs_tol_current;
        let kvl_ok = kvl <= settings.rel_tol * e.abs() + 1e-12;
        let step_ok = last_step <= settings.rel_tol * x.amax() + 1e-15;
        if current_ok && kvl_ok && (step_ok || r.iter().all(|v| *v == 0.0)) {
            return Ok(make_point(x, device.schottky(x[0], z).current, iter, &r, saturated));
        }
        if iter == settings.max_iterations {
            break;
        }

        let dx = jac
            .lu()
            .solve(&(-r))
            .ok_or_else(|| fail("singular Jacobian".into()))?;
        let mut lambda = settings.damping;
        // Junction-style limiting: the diode voltage moves at most a few n·U_ϑ per step.
        let vmax = 0.25;
        if dx[0].abs() * lambda > vmax {
            lambda = vmax / dx[0].abs();
        }
        let norm0 = r.component_mul(&scale).norm();
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = x + dx * lambda;
            trial[2] = trial[2].clamp(-t_lim, t_lim);
            if let Some((rt, jt, st)) = eval(&trial) {
                let norm = rt.component_mul(&scale).norm();
                if norm.is_finite() && (norm < norm0 || norm == 0.0) {
                    accepted = Some((trial, rt, jt, st));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, rt, jt, st)) = accepted else {
            // No descent: take the limited step anyway if it is already tiny.
            if (dx * lambda).amax() <= settings.rel_tol * x.amax() + 1e-15 {
                last_step = 0.0;
                continue;
            }
            return Err(fail("line search found no descent".into()));
        };
        last_step = (trial - x).amax();
        x = trial;
        r = rt;
        jac = jt;
        saturated |= st;
    }
    Err(fail(format!(
        "no convergence after {} iterations",
        settings.max_iterations
    )))
}

fn make_point(x: Vector3<f64>, i: f64, iterations: usize, r: &Vector3<f64>, saturated: bool) -> OperatingPoint {
    OperatingPoint {
        u_s: x[0],
        u_e: x[1],
        u_t: x[2],
        u: x[0] + x[1] + x[2],
        i,
        converged: true,
        iterations,
        residual_norm: r[0].abs().max(r[1].abs()),
        fallback: false,
        saturated,
    }
}

/// Initial guess for a cold solve: put the whole source voltage on the
/// Schottky region unless that would drive more current than the series
/// resistors could carry.
fn cold_start(e: f64, z: f64, cfg: &CircuitConfig, device: &Device) -> Vector3<f64> {
    if e <= 0.0 {
        return Vector3::new(e, 0.0, 0.0);
    }
    let r_e = device.electrolyte_resistance(z);
    let s = device.schottky(e, z);
    let cap = e / (r_e + cfg.source_resistance);
    if s.current <= cap {
        let i = s.current;
        return Vector3::new(e - r_e * i, r_e * i, 0.0);
    }
    // Invert the forward exponential for the capped current.
    let p = &device.params.schottky;
    let n = p.n0 + z * (p.n1 - p.n0);
    let n_ut = n * device.derived.thermal_voltage;
    let pref = s.current / (e / n_ut).exp_m1();
    let u_s = n_ut * (cap / pref).ln_1p();
    Vector3::new(u_s.min(e), (e - u_s).max(0.0), 0.0)
}

/// Recovers `u_t` with `i_t(u_t) = i` by bisection over the monotone range.
/// Returns `±∞` when `i` lies beyond the current reachable in that range.
fn invert_tunnel(i: f64, z: f64, device: &Device) -> f64 {
    if i == 0.0 {
        return 0.0;
    }
    let lim = device.tunnel_monotone_limit(z);
    let eval = |u: f64| device.tunnel(u, z).map(|r| r.current).unwrap_or(f64::NAN);
    if i >= eval(lim) {
        return f64::INFINITY;
    }
    if i <= eval(-lim) {
        return f64::NEG_INFINITY;
    }
    let (mut lo, mut hi) = if i > 0.0 { (0.0, lim) } else { (-lim, 0.0) };
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = eval(mid);
        if v == i {
            return mid;
        }
        if v < i {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the closer endpoint
    if (eval(lo) - i).abs() <= (eval(hi) - i).abs() {
        lo
    } else {
        hi
    }
}

/// Reference solve: bisection on `u_s` with the other regions recovered
/// from the Schottky current. Deterministic to the last bit.
pub fn solve_operating_point_bracketed(
    e: f64,
    z: f64,
    cfg: &CircuitConfig,
    device: &Device,
    settings: &SolverSettings,
) -> Result<OperatingPoint> {
    check_inputs(e, z, cfg)?;
    let r0 = cfg.source_resistance;
    let r_e = device.electrolyte_resistance(z);

    // KVL mismatch as a function of u_s; decreasing in u_s.
    let kvl = |u_s: f64| -> f64 {
        let i = device.schottky(u_s, z).current;
        let u_t = invert_tunnel(i, z, device);
        e - r0 * i - u_s - r_e * i - u_t
    };

    let mut lo = e.min(0.0) - 1.0;
    let mut hi = e.max(0.0) + 1.0;
    let mut f_lo = kvl(lo);
    let mut f_hi = kvl(hi);
    let mut expansions = 0;
    while !(f_lo >= 0.0 && f_hi <= 0.0) {
        expansions += 1;
        if expansions > 64 {
            return Err(Error::SolverFailure {
                e,
                z,
                reason: format!(
                    "no sign change of the KVL mismatch on [{lo}, {hi}] V \
                     (f = {f_lo}, {f_hi})"
                ),
            });
        }
        let width = (hi - lo) * (settings.bracket_expansion - 1.0) * 0.5;
        if !(f_lo >= 0.0) {
            lo -= width;
            f_lo = kvl(lo);
        }
        if !(f_hi <= 0.0) {
            hi += width;
            f_hi = kvl(hi);
        }
    }

    let mut iterations = 0;
    let u_s = loop {
        if f_lo == 0.0 {
            break lo;
        }
        if f_hi == 0.0 {
            break hi;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break if f_lo.abs() <= f_hi.abs() { lo } else { hi };
        }
        iterations += 1;
        let f = kvl(mid);
        if f > 0.0 {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
            f_hi = f;
        }
    };

    let s = device.schottky(u_s, z);
    let i = s.current;
    let u_t = invert_tunnel(i, z, device);
    if !u_t.is_finite() {
        return Err(Error::SolverFailure {
            e,
            z,
            reason: "bisection converged outside the tunnel regime".into(),
        });
    }
    let u_e = r_e * i;
    let i_t = device.tunnel(u_t, z)?.current;
    Ok(OperatingPoint {
        u_s,
        u_e,
        u_t,
        u: u_s + u_e + u_t,
        i,
        converged: true,
        iterations,
        residual_norm: (i - i_t).abs(),
        fallback: false,
        saturated: s.saturated,
    })
}

/// Capacitive-mode dynamics: `(du_e/dt, du_t/dt, i)`.
pub fn transient_rhs(
    u_e: f64,
    u_t: f64,
    z: f64,
    e: f64,
    cfg: &CircuitConfig,
    device: &Device,
) -> Result<(f64, f64, f64)> {
    check_inputs(e, z, cfg)?;
    if cfg.mode != CircuitMode::Capacitive {
        return Err(Error::invalid("mode", "transient_rhs requires capacitive mode"));
    }
    let r0 = cfg.source_resistance;
    let v = e - u_e - u_t;
    // h(u_s) = u_s + R_0·i_s(u_s) − v is increasing with a root between 0 and v.
    let h = |u_s: f64| {
        let s = device.schottky(u_s, z);
        (u_s + r0 * s.current - v, 1.0 + r0 * s.conductance)
    };
    let (mut lo, mut hi) = (v.min(0.0), v.max(0.0));
    let mut x = 0.5 * (lo + hi);
    let mut solved = v == 0.0;
    if solved {
        x = 0.0;
    }
    for _ in 0..200 {
        if solved {
            break;
        }
        let (f, df) = h(x);
        if f == 0.0 {
            solved = true;
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - f / df;
        let next = if newton > lo && newton < hi && df > 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || next == lo || next == hi {
            x = next;
            solved = true;
        } else {
            x = next;
        }
    }
    if !solved && !(hi - lo <= 1e-12) {
        return Err(Error::SolverFailure {
            e,
            z,
            reason: "scalar current solve did not converge".into(),
        });
    }
    let i = device.schottky(x, z).current;
    let i_t = device.tunnel(u_t, z)?.current;
    let r_e = device.electrolyte_resistance(z);
    Ok(((i - u_e / r_e) / cfg.c_e, (i - i_t) / cfg.c_t, i))
}
