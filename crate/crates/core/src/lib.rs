//! Split semi-Lagrangian transport for Vlasov-Poisson, guiding-center and
//! incompressible Euler models, with integral deferred correction of the
//! splitting error.
//!
//! Everything numeric is generic over [`Real`]; the aliases below fix the
//! scalar to `f64` or `f32`.

pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod field_solve;
pub mod idc_core;
pub mod idc_pde;
pub mod mesh;
pub mod real;
pub mod reconstruct;
pub mod scenario;
pub mod sl1d;
pub mod split_step;
pub mod stability;

pub use diagnostics::DiagnosticsRecord;
pub use driver::{run, ConvergenceTable, RunConfig, RunOutcome};
pub use error::{Error, Result};
pub use idc_pde::{IdcPdeConfig, StrangCorrection};
pub use mesh::{Axis, Boundary, PhaseGrid, ScalarField};
pub use real::Real;
pub use reconstruct::ReconKind;
pub use scenario::{Scenario, ScenarioTag};
pub use split_step::{ModelKind, SplitKind};

pub type Grid = PhaseGrid<f64>;
pub type Field = ScalarField<f64>;
pub type VlasovPoisson = split_step::VlasovPoisson<f64>;
pub type Drift2D = split_step::Drift2D<f64>;

pub type Grid32 = PhaseGrid<f32>;
pub type Field32 = ScalarField<f32>;
pub type VlasovPoisson32 = split_step::VlasovPoisson<f32>;
pub type Drift2D32 = split_step::Drift2D<f32>;
