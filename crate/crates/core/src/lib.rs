//! Lumped-element model of a double-barrier memristive device.
//!
//! The device is a series stack of a Schottky contact, a solid electrolyte
//! and a tunnel barrier whose parameters all depend on one internal state
//! `z ∈ [0, 1]`, the normalized average ion position (`z = 1` is the
//! high-resistance equilibrium). This crate evaluates the region equations
//! ([`model`]), solves the series circuit at an instant ([`circuit`]),
//! integrates the state in time ([`simulator`]), runs the hysteresis and
//! step-response experiments ([`experiments`]) and fits parameters to
//! measured traces ([`calibration`]).

pub mod calibration;
pub mod circuit;
pub mod constants;
pub mod error;
pub mod experiments;
pub mod model;
pub mod params;
pub mod simulator;
pub mod waveform;

pub use calibration::{Dataset, FitResult, FitSpec, FreeParameter, Record};
pub use circuit::{CircuitConfig, CircuitMode, OperatingPoint, SolverSettings};
pub use constants::{Environment, PhysicalConstants};
pub use error::{Error, Result};
pub use experiments::HysteresisMetrics;
pub use model::Device;
pub use params::{DerivedQuantities, DeviceParameters};
pub use simulator::{IntegratorSettings, Sample, Scheme, TimeSeries};
pub use waveform::WaveformSpec;
