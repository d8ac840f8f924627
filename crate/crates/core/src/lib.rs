//! Immersed finite elements for three-dimensional H(curl) interface problems.
//!
//! The crate builds unfitted tetrahedral meshes, constructs local immersed
//! nodal / edge / face bases that encode the interface jump conditions,
//! assembles the Petrov-Galerkin curl-curl system, and solves it with an
//! auxiliary-space preconditioner whose smoother inverts the interface block
//! exactly. The [`analysis`] module holds the experiment drivers.

pub mod analysis;
pub mod assembly;
pub mod derham;
pub mod error;
pub mod geometry;
pub mod ife_local;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod solvers;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub mod prelude {
    pub use crate::analysis::manufactured::ManufacturedSolution;
    pub use crate::assembly::SystemMatrices;
    pub use crate::derham::{ElementBases, Flavor};
    pub use crate::geometry::{CutConfig, Discretization, LevelSet, Side};
    pub use crate::ife_local::{CoefficientPair, LocalBasis};
    pub use crate::mesh::{build_background_mesh, BoxDomain, Mesh};
    pub use crate::solvers::{CsrMatrix, LinearOperator, SolveReport};
    pub use crate::{Error, Mat3, Result, Vec3};
}
