//! Lagrangian descriptors for n-dimensional vector fields.

pub mod analysis;
pub mod cli;
pub mod descriptor;
pub mod error;
pub mod frames;
pub mod integrator;
pub mod io;
pub mod systems;

pub use descriptor::{
    compute_field, descriptor_at, partial_derivative, partial_derivative_field, select_p, time_average, Axis,
    DescriptorKind, GridSpec, LDConfig, ScalarField,
};
pub use error::{Error, Result};
pub use integrator::{integrate, integrate_with_quadrature, IntegratorConfig, Trajectory};
pub use systems::{evaluate_field, exact_solution, SystemId, VectorField, VectorFieldSpec};
