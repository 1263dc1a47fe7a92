//! Thermosyphon condenser simulation: a stabilized mixed finite-volume solver
//! for the air/panel temperature pair, a primal-mixed solver for two-phase
//! flow on a pipe network, and the staggered iteration coupling them.

pub mod benchmarks;
pub mod coupling;
pub mod error;
pub mod mesh;
pub mod mfv;
pub mod output;
pub mod pipenet;
pub mod quadrature;
pub mod reduction;
pub mod scenario;
pub mod sparse;
pub mod twophase;

pub use error::{Error, Result};
pub use mesh::{CellField, EdgeFluxField, StructuredGrid2D};
pub use mfv::{AdrProblem2D, BoundaryCondition, StabilizationKind};
pub use pipenet::{build_network, FluidState, NetworkSpec, PipeNetwork};
pub use sparse::SparseMatrix;
pub use twophase::{CorrelationSet, HeatTransferModel, SaturationModel};
