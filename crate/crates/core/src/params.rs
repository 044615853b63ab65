//! Device parameter set and the normalization constants derived from it.
//!
//! Every scalar parameter is addressable by a stable snake_case name. The
//! names double as configuration-file keys and as free-parameter names for
//! calibration.

use std::f64::consts::PI;

use crate::constants::{Environment, PhysicalConstants};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceGeometry {
    /// Electrolyte width d_e in m.
    pub electrolyte_width: f64,
    /// Absolute Schottky-barrier thickness d_s in m.
    pub schottky_thickness: f64,
    /// Nominal absolute tunnel-barrier thickness d_t in m.
    pub tunnel_thickness: f64,
    /// Ion hopping distance per jump in m.
    pub hop_distance: f64,
    /// Cross-sectional area in m².
    pub cross_section: f64,
}

impl DeviceGeometry {
    /// Lower bound of the average ion position, m.
    pub fn x_min(&self) -> f64 {
        0.0
    }

    /// Upper bound of the average ion position (the electrolyte centre), m.
    pub fn x_max(&self) -> f64 {
        self.electrolyte_width / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonKinetics {
    /// Attempt frequency ν in Hz.
    pub hop_frequency: f64,
    /// Charge number of the mobile ions.
    pub charge_number: u32,
    /// Normalized set-direction activation energy at z = 1.
    pub phi_a0: f64,
    /// Normalized set-direction activation energy at z = 0.
    pub phi_a1: f64,
    /// Normalized activation energy for the reset direction.
    pub phi_ar: f64,
    /// Voltage representing the Coulomb potential, V.
    pub coulomb_voltage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowParams {
    pub offset: f64,
    pub steepness: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchottkyParams {
    pub phi_s0: f64,
    pub phi_s1: f64,
    pub n0: f64,
    pub n1: f64,
    /// Weight of the image-charge term. Negative values increase the
    /// reverse current with |u_s|, positive values suppress it.
    pub alpha_f: f64,
    /// Effective Richardson constant, A/(m²·K²).
    pub richardson: f64,
    pub relative_permittivity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelParams {
    /// Barrier height normalized by k_B·ϑ.
    pub phi_t0: f64,
    pub alpha_t0: f64,
    pub alpha_t1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectrolyteParams {
    pub r_e0: f64,
    pub r_e1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParameters {
    pub constants: PhysicalConstants,
    pub env: Environment,
    pub geometry: DeviceGeometry,
    pub kinetics: IonKinetics,
    pub window: WindowParams,
    pub schottky: SchottkyParams,
    pub tunnel: TunnelParams,
    pub electrolyte: ElectrolyteParams,
}

/// Name, SI unit and short description of an addressable parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamInfo {
    pub name: &'static str,
    pub unit: &'static str,
    pub description: &'static str,
}

const fn info(name: &'static str, unit: &'static str, description: &'static str) -> ParamInfo {
    ParamInfo {
        name,
        unit,
        description,
    }
}

/// All addressable parameters in canonical file order.
pub const PARAMETERS: &[ParamInfo] = &[
    info("temperature", "K", "absolute device temperature"),
    info("electrolyte_width", "m", "electrolyte width d_e"),
    info("schottky_thickness", "m", "Schottky-barrier thickness d_s"),
    info("tunnel_thickness", "m", "nominal tunnel-barrier thickness d_t"),
    info("hop_distance", "m", "ion hopping distance per jump"),
    info("cross_section", "m^2", "device cross-sectional area A"),
    info("hop_frequency", "Hz", "ion hopping attempt frequency"),
    info("charge_number", "1", "charge number of the mobile ions (integer)"),
    info("phi_a0", "1", "set activation energy at z=1, units of k_B*T"),
    info("phi_a1", "1", "set activation energy at z=0, units of k_B*T"),
    info("phi_ar", "1", "reset activation energy, units of k_B*T"),
    info("coulomb_voltage", "V", "Coulomb-potential voltage U_C"),
    info("window_offset", "1", "window offset w_0"),
    info("window_steepness", "1", "window edge exponent p (integer)"),
    info("phi_s0", "1", "Schottky barrier height at z=0, units of k_B*T"),
    info("phi_s1", "1", "Schottky barrier height at z=1, units of k_B*T"),
    info("n0", "1", "Schottky ideality factor at z=0"),
    info("n1", "1", "Schottky ideality factor at z=1"),
    info("alpha_f", "1", "image-charge term weight"),
    info("richardson", "A/(m^2*K^2)", "effective Richardson constant"),
    info("relative_permittivity", "1", "relative permittivity of the electrolyte"),
    info("phi_t0", "1", "tunnel barrier height, units of k_B*T"),
    info("alpha_t0", "1", "normalized tunnel thickness at z=0"),
    info("alpha_t1", "1", "normalized tunnel thickness at z=1"),
    info("r_e0", "Ohm", "electrolyte resistance at z=0"),
    info("r_e1", "Ohm", "electrolyte resistance at z=1"),
];

pub fn param_info(name: &str) -> Option<&'static ParamInfo> {
    PARAMETERS.iter().find(|p| p.name == name)
}

impl Default for DeviceParameters {
    /// The shipped default device (`params/dbmd_default.params`).
    fn default() -> Self {
        DeviceParameters {
            constants: PhysicalConstants::CODATA,
            env: Environment::default(),
            geometry: DeviceGeometry {
                electrolyte_width: 5e-9,
                schottky_thickness: 2e-9,
                tunnel_thickness: 1.2e-9,
                hop_distance: 0.5e-9,
                cross_section: 1e-12,
            },
            kinetics: IonKinetics {
                hop_frequency: 1e12,
                charge_number: 2,
                phi_a0: 27.0,
                phi_a1: 40.0,
                phi_ar: 29.0,
                coulomb_voltage: 0.025,
            },
            window: WindowParams {
                offset: 0.02,
                steepness: 4,
            },
            schottky: SchottkyParams {
                phi_s0: 30.0,
                phi_s1: 35.0,
                n0: 3.0,
                n1: 4.0,
                alpha_f: -1.5,
                richardson: 1.2e6,
                relative_permittivity: 40.0,
            },
            tunnel: TunnelParams {
                // 3 eV / (k_B * 300 K)
                phi_t0: 116.04518121550082,
                alpha_t0: 1.7,
                alpha_t1: 2.0,
            },
            electrolyte: ElectrolyteParams {
                r_e0: 1e6,
                r_e1: 1e7,
            },
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {v}")))
    }
}

fn integral(name: &str, v: f64, min: u32) -> Result<u32> {
    if v.is_finite() && v.fract() == 0.0 && v >= f64::from(min) && v <= f64::from(u32::MAX) {
        Ok(v as u32)
    } else {
        Err(Error::invalid(
            name,
            format!("must be an integer >= {min}, got {v}"),
        ))
    }
}

impl DeviceParameters {
    /// Checks every component invariant.
    pub fn validate(&self) -> Result<()> {
        let c = &self.constants;
        positive("boltzmann", c.boltzmann)?;
        positive("elementary_charge", c.elementary_charge)?;
        positive("planck", c.planck)?;
        positive("electron_mass", c.electron_mass)?;
        positive("vacuum_permittivity", c.vacuum_permittivity)?;
        positive("temperature", self.env.temperature)?;

        let g = &self.geometry;
        positive("electrolyte_width", g.electrolyte_width)?;
        positive("schottky_thickness", g.schottky_thickness)?;
        positive("tunnel_thickness", g.tunnel_thickness)?;
        positive("hop_distance", g.hop_distance)?;
        positive("cross_section", g.cross_section)?;
        if g.hop_distance > g.electrolyte_width {
            return Err(Error::invalid(
                "hop_distance",
                "must not exceed electrolyte_width",
            ));
        }

        let k = &self.kinetics;
        positive("hop_frequency", k.hop_frequency)?;
        if k.charge_number < 1 {
            return Err(Error::invalid("charge_number", "must be >= 1"));
        }
        non_negative("phi_a0", k.phi_a0)?;
        non_negative("phi_a1", k.phi_a1)?;
        non_negative("phi_ar", k.phi_ar)?;
        finite("coulomb_voltage", k.coulomb_voltage)?;

        let w = &self.window;
        if !(w.offset > 0.0 && w.offset < 0.5) {
            return Err(Error::invalid(
                "window_offset",
                format!("must satisfy 0 < w_0 < 1/2, got {}", w.offset),
            ));
        }
        if w.steepness < 1 {
            return Err(Error::invalid("window_steepness", "must be >= 1"));
        }

        let s = &self.schottky;
        positive("phi_s0", s.phi_s0)?;
        finite("phi_s1", s.phi_s1)?;
        if s.phi_s1 < s.phi_s0 {
            return Err(Error::invalid("phi_s1", "must be >= phi_s0"));
        }
        for (name, n) in [("n0", s.n0), ("n1", s.n1)] {
            if !(n.is_finite() && n >= 1.0) {
                return Err(Error::invalid(name, format!("must be >= 1, got {n}")));
            }
        }
        finite("alpha_f", s.alpha_f)?;
        positive("richardson", s.richardson)?;
        if !(s.relative_permittivity.is_finite() && s.relative_permittivity >= 1.0) {
            return Err(Error::invalid(
                "relative_permittivity",
                format!("must be >= 1, got {}", s.relative_permittivity),
            ));
        }

        let t = &self.tunnel;
        positive("phi_t0", t.phi_t0)?;
        positive("alpha_t0", t.alpha_t0)?;
        finite("alpha_t1", t.alpha_t1)?;
        if t.alpha_t1 < t.alpha_t0 {
            return Err(Error::invalid("alpha_t1", "must be >= alpha_t0"));
        }

        let e = &self.electrolyte;
        positive("r_e0", e.r_e0)?;
        finite("r_e1", e.r_e1)?;
        if e.r_e1 < e.r_e0 {
            return Err(Error::invalid("r_e1", "must be >= r_e0"));
        }
        Ok(())
    }

    /// Reads a parameter by name.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "temperature" => self.env.temperature,
            "electrolyte_width" => self.geometry.electrolyte_width,
            "schottky_thickness" => self.geometry.schottky_thickness,
            "tunnel_thickness" => self.geometry.tunnel_thickness,
            "hop_distance" => self.geometry.hop_distance,
            "cross_section" => self.geometry.cross_section,
            "hop_frequency" => self.kinetics.hop_frequency,
            "charge_number" => f64::from(self.kinetics.charge_number),
            "phi_a0" => self.kinetics.phi_a0,
            "phi_a1" => self.kinetics.phi_a1,
            "phi_ar" => self.kinetics.phi_ar,
            "coulomb_voltage" => self.kinetics.coulomb_voltage,
            "window_offset" => self.window.offset,
            "window_steepness" => f64::from(self.window.steepness),
            "phi_s0" => self.schottky.phi_s0,
            "phi_s1" => self.schottky.phi_s1,
            "n0" => self.schottky.n0,
            "n1" => self.schottky.n1,
            "alpha_f" => self.schottky.alpha_f,
            "richardson" => self.schottky.richardson,
            "relative_permittivity" => self.schottky.relative_permittivity,
            "phi_t0" => self.tunnel.phi_t0,
            "alpha_t0" => self.tunnel.alpha_t0,
            "alpha_t1" => self.tunnel.alpha_t1,
            "r_e0" => self.electrolyte.r_e0,
            "r_e1" => self.electrolyte.r_e1,
            _ => return None,
        })
    }

    /// Writes a parameter by name. Integer parameters reject fractional
    /// values; cross-field invariants are checked by [`validate`](Self::validate).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "temperature" => self.env.temperature = value,
            "electrolyte_width" => self.geometry.electrolyte_width = value,
            "schottky_thickness" => self.geometry.schottky_thickness = value,
            "tunnel_thickness" => self.geometry.tunnel_thickness = value,
            "hop_distance" => self.geometry.hop_distance = value,
            "cross_section" => self.geometry.cross_section = value,
            "hop_frequency" => self.kinetics.hop_frequency = value,
            "charge_number" => self.kinetics.charge_number = integral(name, value, 1)?,
            "phi_a0" => self.kinetics.phi_a0 = value,
            "phi_a1" => self.kinetics.phi_a1 = value,
            "phi_ar" => self.kinetics.phi_ar = value,
            "coulomb_voltage" => self.kinetics.coulomb_voltage = value,
            "window_offset" => self.window.offset = value,
            "window_steepness" => self.window.steepness = integral(name, value, 1)?,
            "phi_s0" => self.schottky.phi_s0 = value,
            "phi_s1" => self.schottky.phi_s1 = value,
            "n0" => self.schottky.n0 = value,
            "n1" => self.schottky.n1 = value,
            "alpha_f" => self.schottky.alpha_f = value,
            "richardson" => self.schottky.richardson = value,
            "relative_permittivity" => self.schottky.relative_permittivity = value,
            "phi_t0" => self.tunnel.phi_t0 = value,
            "alpha_t0" => self.tunnel.alpha_t0 = value,
            "alpha_t1" => self.tunnel.alpha_t1 = value,
            "r_e0" => self.electrolyte.r_e0 = value,
            "r_e1" => self.electrolyte.r_e1 = value,
            _ => return Err(Error::invalid(name, "unknown parameter name")),
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedQuantities> {
        derive_quantities(self)
    }
}

/// Normalization constants that follow from [`DeviceParameters`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// k_B·ϑ/q_e, V.
    pub thermal_voltage: f64,
    /// Reference electrolyte voltage U_e, V.
    pub ref_electrolyte_voltage: f64,
    /// Drift amplitude Ż, 1/s.
    pub drift_amplitude: f64,
    /// α_s = 2 d_s / D_s.
    pub norm_schottky_thickness: f64,
    /// I_s = R_i A ϑ², A.
    pub schottky_scale: f64,
    /// I_t, A.
    pub tunnel_scale: f64,
    /// D_t, m.
    pub tunnel_norm_length: f64,
    /// D_s, m.
    pub schottky_norm_length: f64,
}

pub fn derive_quantities(params: &DeviceParameters) -> Result<DerivedQuantities> {
    params.validate()?;
    let c = &params.constants;
    let g = &params.geometry;
    let t = params.env.temperature;
    let kt = c.boltzmann * t;

    let thermal_voltage = kt / c.elementary_charge;
    let ref_electrolyte_voltage = 2.0 / f64::from(params.kinetics.charge_number)
        * (g.electrolyte_width / g.hop_distance)
        * thermal_voltage;
    let a = g.hop_distance / (g.x_max() - g.x_min());
    let drift_amplitude = 2.0 * params.kinetics.hop_frequency * a;
    let schottky_norm_length = c.elementary_charge * c.elementary_charge
        / (4.0 * PI * c.vacuum_permittivity * params.schottky.relative_permittivity * kt);
    let norm_schottky_thickness = 2.0 * g.schottky_thickness / schottky_norm_length;
    let schottky_scale = params.schottky.richardson * g.cross_section * t * t;
    let tunnel_norm_length = c.planck / (4.0 * PI * (2.0 * c.electron_mass * kt).sqrt());
    let tunnel_scale = g.cross_section / (tunnel_norm_length * tunnel_norm_length)
        * (c.boltzmann * c.elementary_charge / (2.0 * PI * c.planck))
        * t;

    let d = DerivedQuantities {
        thermal_voltage,
        ref_electrolyte_voltage,
        drift_amplitude,
        norm_schottky_thickness,
        schottky_scale,
        tunnel_scale,
        tunnel_norm_length,
        schottky_norm_length,
    };
    for (name, v) in [
        ("thermal_voltage", d.thermal_voltage),
        ("ref_electrolyte_voltage", d.ref_electrolyte_voltage),
        ("drift_amplitude", d.drift_amplitude),
        ("norm_schottky_thickness", d.norm_schottky_thickness),
        ("schottky_scale", d.schottky_scale),
        ("tunnel_scale", d.tunnel_scale),
        ("tunnel_norm_length", d.tunnel_norm_length),
        ("schottky_norm_length", d.schottky_norm_length),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(
                name,
                format!("derived quantity is not finite and positive ({v})"),
            ));
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters_are_valid() {
        DeviceParameters::default().validate().unwrap();
    }

    #[test]
    fn thermal_voltage_at_300k() {
        let d = DeviceParameters::default().derive().unwrap();
        // k_B * 300 / q_e, evaluated at 60 digits
        assert!((d.thermal_voltage - 0.025851999786435535741).abs() < 1e-17);
    }

    #[test]
    fn equal_width_and_hop_gives_thermal_reference_voltage() {
        let mut p = DeviceParameters::default();
        p.kinetics.charge_number = 2;
        p.geometry.hop_distance = p.geometry.electrolyte_width;
        let d = p.derive().unwrap();
        assert_eq!(d.ref_electrolyte_voltage, d.thermal_voltage);
    }

    #[test]
    fn half_width_hop_gives_twice_the_frequency() {
        let mut p = DeviceParameters::default();
        p.geometry.hop_distance = p.geometry.electrolyte_width / 2.0;
        let d = p.derive().unwrap();
        assert_eq!(d.drift_amplitude, 2.0 * p.kinetics.hop_frequency);
    }

    #[test]
    fn nonpositive_temperature_is_rejected() {
        let mut p = DeviceParameters::default();
        p.env.temperature = 0.0;
        let err = p.derive().unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { ref name, .. } if name == "temperature"));
        p.env.temperature = -5.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn nonpositive_length_is_rejected() {
        let mut p = DeviceParameters::default();
        p.geometry.schottky_thickness = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn ordering_invariants() {
        let mut p = DeviceParameters::default();
        p.schottky.phi_s1 = p.schottky.phi_s0 - 1.0;
        assert!(p.validate().is_err());

        let mut p = DeviceParameters::default();
        p.tunnel.alpha_t1 = p.tunnel.alpha_t0 * 0.5;
        assert!(p.validate().is_err());

        let mut p = DeviceParameters::default();
        p.electrolyte.r_e1 = p.electrolyte.r_e0 * 0.5;
        assert!(p.validate().is_err());

        let mut p = DeviceParameters::default();
        p.window.offset = 0.5;
        assert!(p.validate().is_err());

        let mut p = DeviceParameters::default();
        p.geometry.hop_distance = 2.0 * p.geometry.electrolyte_width;
        assert!(p.validate().is_err());
    }

    #[test]
    fn geometry_bounds() {
        let g = DeviceParameters::default().geometry;
        assert_eq!(g.x_min(), 0.0);
        assert_eq!(g.x_max(), g.electrolyte_width / 2.0);
    }

    #[test]
    fn get_set_cover_every_listed_parameter() {
        let mut p = DeviceParameters::default();
        for info in PARAMETERS {
            let v = p.get(info.name).unwrap_or_else(|| panic!("{}", info.name));
            p.set(info.name, v).unwrap();
        }
        assert_eq!(p, DeviceParameters::default());
        assert!(p.get("nope").is_none());
        assert!(p.set("nope", 1.0).is_err());
        assert!(p.set("charge_number", 1.5).is_err());
        assert!(p.set("window_steepness", 0.0).is_err());
    }
}
