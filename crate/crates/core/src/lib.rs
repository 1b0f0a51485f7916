//! Water waves over an embedded point-vortex pair.
//!
//! Pseudo-spectral operators on a uniform periodic grid, the closed-form
//! Taylor-sign coefficient for a flat interface, Gevrey-class diagnostics and
//! a time integrator for the coupled interface/vortex system.

// Validation is written as `!(x > 0.0)` on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod gevrey;
pub mod grid;
pub mod quadrature;
pub mod simulator;
pub mod spectral;
pub mod taylor_sign;
pub mod verify;
pub mod waterwave;

pub use config::{Scheme, ScenarioConfig, Strength, WaveKind};
pub use error::{ConfigError, FieldError, GevreyError, QuadratureError, SimError, SpectralError, TaylorError};
pub use grid::{Field, Grid, GridSpec};
pub use taylor_sign::{Extremum, PairConfig};
pub use waterwave::{AssemblyOptions, DerivedFields, SqDiffScheme, Vortex, WaveState};
pub use simulator::{IntegratorConfig, MonitorReport, RunOutcome, StepRecord, StopReason, TRAJECTORY_HEADER};
pub use verify::{CheckResult, Mutation, VerifyOptions};
