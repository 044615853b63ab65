//! Region equations of the lumped device model.
//!
//! All functions are pure. Exponentials share a cap of [`EXP_CAP`] natural-log
//! units: a result whose logarithm would exceed the cap is clamped to
//! `±exp(EXP_CAP)` and reported through a `saturated` flag instead of
//! overflowing to infinity.

use crate::error::{Error, Result};
use crate::params::{DerivedQuantities, DeviceParameters, IonKinetics, WindowParams};

/// Shared exponent cap, in natural-log units.
pub const EXP_CAP: f64 = 700.0;

/// `exp(x)` clamped at `exp(EXP_CAP)`.
pub fn capped_exp(x: f64) -> (f64, bool) {
    if x > EXP_CAP {
        (EXP_CAP.exp(), true)
    } else {
        (x.exp(), false)
    }
}

/// `ln(sinh(a))` for `a > 0`, stable for large `a`.
fn ln_sinh(a: f64) -> f64 {
    a + (-(-2.0 * a).exp_m1()).ln() - std::f64::consts::LN_2
}

/// `ln(expm1(x))` for `x > 0`, stable for large `x`.
fn ln_expm1(x: f64) -> f64 {
    x + (-(-x).exp_m1()).ln()
}

/// Hopping rate `ν·exp(−φ_a)` for a normalized barrier `φ_a`.
pub fn arrhenius_rate(phi_a: f64, nu: f64) -> Result<f64> {
    if !(phi_a >= 0.0) {
        return Err(Error::invalid(
            "phi_a",
            format!("activation energy must be >= 0, got {phi_a}"),
        ));
    }
    if !(nu >= 0.0) {
        return Err(Error::invalid(
            "nu",
            format!("hop frequency must be >= 0, got {nu}"),
        ));
    }
    Ok(nu * (-phi_a).exp())
}

fn check_state(z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "z",
            value: z,
            domain: "[0, 1]",
        })
    }
}

/// Window function `(1−2w₀)(1−(2z−1)^{2p}) + w₀`.
pub fn window(z: f64, wp: &WindowParams) -> Result<f64> {
    check_state(z)?;
    Ok(window_unchecked(z, wp))
}

#[inline]
fn window_unchecked(z: f64, wp: &WindowParams) -> f64 {
    let pow = (2.0 * z - 1.0).powi(2 * wp.steepness as i32);
    (1.0 - 2.0 * wp.offset) * (1.0 - pow) + wp.offset
}

#[inline]
fn window_slope(z: f64, wp: &WindowParams) -> f64 {
    let p2 = 2 * wp.steepness as i32;
    -(1.0 - 2.0 * wp.offset) * f64::from(p2) * (2.0 * z - 1.0).powi(p2 - 1) * 2.0
}

/// 1 for `xi > 0`, 0 otherwise (including `xi == 0`).
#[inline]
pub fn unit_step(xi: f64) -> f64 {
    if xi > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Polarity- and state-dependent normalized activation energy.
#[inline]
pub fn activation_energy(u: f64, z: f64, k: &IonKinetics) -> f64 {
    unit_step(u) * (k.phi_a1 + z * (k.phi_a0 - k.phi_a1) - k.phi_ar) + k.phi_ar
}

/// Share of the Schottky voltage that drives ions during reset.
#[inline]
pub fn reset_coupling(u: f64, u_s: f64, z: f64) -> f64 {
    unit_step(-u) * (1.0 - z) * u_s
}

#[inline]
pub fn linear_state_param(v0: f64, v1: f64, z: f64) -> f64 {
    v0 + z * (v1 - v0)
}

/// Current and small-signal conductance of a region at one bias point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionEval {
    /// A
    pub current: f64,
    /// dI/dV in S
    pub conductance: f64,
    pub saturated: bool,
}

/// Schottky-contact current `i_s(u_s, z)`.
pub fn schottky_current(u_s: f64, z: f64, p: &DeviceParameters, d: &DerivedQuantities) -> f64 {
    schottky_eval(u_s, z, p, d).current
}

/// Schottky current together with `∂i_s/∂u_s`.
pub fn schottky_eval(u_s: f64, z: f64, p: &DeviceParameters, d: &DerivedQuantities) -> RegionEval {
    debug_assert!((0.0..=1.0).contains(&z));
    let s = &p.schottky;
    let u_th = d.thermal_voltage;
    let phi_s = linear_state_param(s.phi_s0, s.phi_s1, z);
    let n = linear_state_param(s.n0, s.n1, z);
    let n_ut = n * u_th;

    // Image-charge term; identically zero on the forward branch.
    let (lowering, lowering_slope) = if u_s < 0.0 {
        let scale = d.norm_schottky_thickness * u_th;
        let root = ((u_s.abs() - u_s) / scale).sqrt();
        (s.alpha_f * root, -s.alpha_f / (scale * root))
    } else {
        (0.0, 0.0)
    };

    let x = u_s / n_ut;
    let ln_pref = d.schottky_scale.ln() - (phi_s + lowering);
    if x > 0.0 && ln_pref + x > EXP_CAP - 1.0 {
        // Log domain: ln i = ln_pref + ln(expm1 x)
        let (mag, saturated) = capped_exp(ln_pref + ln_expm1(x));
        let (grad, _) = capped_exp(ln_pref + x - n_ut.ln());
        return RegionEval {
            current: mag,
            conductance: grad,
            saturated,
        };
    }

    let pref = d.schottky_scale * (-(phi_s + lowering)).exp();
    let em1 = x.exp_m1();
    let current = pref * em1;
    let mut conductance = pref * x.exp() / n_ut;
    if u_s < 0.0 {
        conductance -= pref * lowering_slope * em1;
    }
    RegionEval {
        current,
        conductance,
        saturated: false,
    }
}

/// Largest |u_t| inside the intermediate Simmons regime (φ_t(±u_t) > 0).
pub fn tunnel_regime_limit(p: &DeviceParameters, d: &DerivedQuantities) -> f64 {
    2.0 * p.tunnel.phi_t0 * d.thermal_voltage
}

/// Intermediate-regime Simmons tunnel current `i_t(u_t, z)`.
pub fn tunnel_current(u_t: f64, z: f64, p: &DeviceParameters, d: &DerivedQuantities) -> Result<f64> {
    tunnel_eval(u_t, z, p, d).map(|r| r.current)
}

/// Tunnel current together with `∂i_t/∂u_t`.
///
/// The difference `g(−u_t) − g(u_t)` is rewritten as
/// `e^{−α√φ₋}·[−2δ − φ₊·expm1(−α(√φ₊ − √φ₋))]` with `δ = u_t/(2U_ϑ)` and
/// `√φ₊ − √φ₋ = 2δ/(√φ₊ + √φ₋)`, which avoids cancellation at small bias.
/// The magnitude is evaluated at `|u_t|` so the result is exactly odd.
pub fn tunnel_eval(u_t: f64, z: f64, p: &DeviceParameters, d: &DerivedQuantities) -> Result<RegionEval> {
    debug_assert!((0.0..=1.0).contains(&z));
    let t = &p.tunnel;
    let u_th = d.thermal_voltage;
    let delta = 0.5 * u_t.abs() / u_th;
    let phi_hi = t.phi_t0 + delta;
    let phi_lo = t.phi_t0 - delta;
    if !(phi_lo > 0.0) {
        return Err(Error::OutOfRegime {
            u_t,
            limit: tunnel_regime_limit(p, d),
        });
    }
    let alpha = linear_state_param(t.alpha_t0, t.alpha_t1, z);
    let s_hi = phi_hi.sqrt();
    let s_lo = phi_lo.sqrt();
    let ds = 2.0 * delta / (s_hi + s_lo);
    let base = (-alpha * s_lo).exp();
    let diff = base * (-2.0 * delta - phi_hi * (-alpha * ds).exp_m1());
    let scale = d.tunnel_scale / (alpha * alpha);
    let current = (scale * diff).copysign(u_t);

    // d/du [g(φ₀−δ) − g(φ₀+δ)] = −(g'(φ₋) + g'(φ₊)) / (2U_ϑ), g'(φ) = e^{−α√φ}(1 − α√φ/2)
    let g_slope = |s: f64| (-alpha * s).exp() * (1.0 - 0.5 * alpha * s);
    let conductance = -scale * (g_slope(s_lo) + g_slope(s_hi)) / (2.0 * u_th);
    Ok(RegionEval {
        current: if u_t == 0.0 { 0.0 } else { current },
        conductance,
        saturated: false,
    })
}

/// Electrolyte resistance `R̂_e(z)`.
#[inline]
pub fn electrolyte_resistance(z: f64, p: &DeviceParameters) -> f64 {
    linear_state_param(p.electrolyte.r_e0, p.electrolyte.r_e1, z)
}

/// Normalized tunnel thickness `α_t(z)`.
#[inline]
pub fn tunnel_thickness(z: f64, p: &DeviceParameters) -> f64 {
    linear_state_param(p.tunnel.alpha_t0, p.tunnel.alpha_t1, z)
}

/// `ż` with its partial derivatives at fixed device voltage `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRate {
    /// 1/s
    pub rate: f64,
    pub d_du_s: f64,
    pub d_du_e: f64,
    pub d_dz: f64,
    pub saturated: bool,
}

/// Normalized ion drift velocity `ż`.
pub fn state_derivative(
    u: f64,
    u_s: f64,
    u_e: f64,
    z: f64,
    p: &DeviceParameters,
    d: &DerivedQuantities,
) -> f64 {
    state_rate(u, u_s, u_e, z, p, d).rate
}

pub fn state_rate(
    u: f64,
    u_s: f64,
    u_e: f64,
    z: f64,
    p: &DeviceParameters,
    d: &DerivedQuantities,
) -> StateRate {
    debug_assert!((0.0..=1.0).contains(&z));
    let k = &p.kinetics;
    let w = window_unchecked(z, &p.window);
    let phi_a = activation_energy(u, z, k);
    let u_r = reset_coupling(u, u_s, z);
    let u_ref = d.ref_electrolyte_voltage;
    let arg = (u_r + u_e - k.coulomb_voltage) / u_ref;

    // amp·sinh(arg) and amp·cosh(arg) with amp = Ż·w·e^{−φ_a}
    let (sh, ch, saturated) = if arg.abs() < EXP_CAP - 1.0 {
        let amp = d.drift_amplitude * w * (-phi_a).exp();
        (amp * arg.sinh(), amp * arg.cosh(), false)
    } else {
        // Log domain; sinh and cosh agree in magnitude here.
        let ln_amp = (d.drift_amplitude * w).ln() - phi_a;
        let (mag, sat) = capped_exp(ln_amp + ln_sinh(arg.abs()));
        (mag.copysign(arg), mag, sat)
    };

    let rate = -sh;
    let cosh_term = -ch / u_ref;
    let d_du_s = cosh_term * unit_step(-u) * (1.0 - z);
    let d_du_e = cosh_term;
    let d_phi_a_dz = unit_step(u) * (k.phi_a0 - k.phi_a1);
    let d_ur_dz = -unit_step(-u) * u_s;
    let d_dz = rate * (window_slope(z, &p.window) / w - d_phi_a_dz) + cosh_term * d_ur_dz;
    StateRate {
        rate,
        d_du_s,
        d_du_e,
        d_dz,
        saturated,
    }
}

/// Parameters bundled with their derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Device {
    pub params: DeviceParameters,
    pub derived: DerivedQuantities,
}

impl Device {
    pub fn new(params: DeviceParameters) -> Result<Self> {
        let derived = params.derive()?;
        Ok(Device { params, derived })
    }

    pub fn schottky(&self, u_s: f64, z: f64) -> RegionEval {
        schottky_eval(u_s, z, &self.params, &self.derived)
    }

    pub fn tunnel(&self, u_t: f64, z: f64) -> Result<RegionEval> {
        tunnel_eval(u_t, z, &self.params, &self.derived)
    }

    pub fn electrolyte_resistance(&self, z: f64) -> f64 {
        electrolyte_resistance(z, &self.params)
    }

    pub fn state_rate(&self, u: f64, u_s: f64, u_e: f64, z: f64) -> StateRate {
        state_rate(u, u_s, u_e, z, &self.params, &self.derived)
    }

    /// Largest |u_t| on which the tunnel current is strictly increasing
    /// (α_t(z)·√φ_t > 2 on both barrier sides), capped by the regime bound.
    pub fn tunnel_monotone_limit(&self, z: f64) -> f64 {
        let alpha = tunnel_thickness(z, &self.params);
        let phi_min = 4.0 / (alpha * alpha);
        let limit = 2.0 * self.derived.thermal_voltage * (self.params.tunnel.phi_t0 - phi_min);
        limit.min(tunnel_regime_limit(&self.params, &self.derived) * (1.0 - 1e-12))
    }
}

impl Default for Device {
    fn default() -> Self {
        Device::new(DeviceParameters::default()).expect("default parameters are valid")
    }
}
