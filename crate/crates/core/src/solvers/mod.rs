//! Sparse linear algebra, Krylov methods, multigrid and the interface-aware preconditioner.

pub mod amg;
pub mod dense;
pub mod direct;
pub mod eigen;
pub mod hx;
pub mod krylov;
pub mod sparse;

pub use amg::{Amg, AmgOptions, AuxSolver};
pub use dense::{lu_dense, DenseLu};
pub use direct::{rcm, EnvelopeCholesky, ProfileLu};
pub use eigen::{lanczos, LanczosResult};
pub use hx::{expand_elements, AuxiliaryCorrection, HxPreconditioner, InterfaceBlock};
pub use krylov::{gmres, pcg, KrylovOptions, SolveReport};
pub use sparse::{CsrMatrix, FnOperator, Identity, LinearOperator};
