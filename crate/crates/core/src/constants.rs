/// Physical constants (CODATA 2018 exact / recommended values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// J/K
    pub boltzmann: f64,
    /// C
    pub elementary_charge: f64,
    /// J·s
    pub planck: f64,
    /// kg
    pub electron_mass: f64,
    /// F/m
    pub vacuum_permittivity: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        boltzmann: 1.380649e-23,
        elementary_charge: 1.602176634e-19,
        planck: 6.62607015e-34,
        electron_mass: 9.1093837015e-31,
        vacuum_permittivity: 8.8541878128e-12,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Device ambient conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    /// Absolute temperature in K.
    pub temperature: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Environment { temperature: 300.0 }
    }
}
