//! Numerical toolkit for shape-parametrized design studies.
//!
//! * [`geometry`]: triangle meshes, OBJ/STL I/O, pressure force, volume, ITTC-57 drag
//! * [`ffd`]: free-form deformation on Bernstein control lattices
//! * [`dmd`]: dynamic mode decomposition of equispaced snapshots
//! * [`activesubspace`]: gradient covariance, active directions, polynomial response surfaces
//! * [`rigidbody`]: quaternion kinematics and a 6-DOF integrator
//! * [`surrogate`]: analytic objectives and synthetic time series
//! * [`campaign`]: sampling, evaluation, reduction and analysis of a parameter study
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below name the double-precision instantiations used by the CLI.

pub mod activesubspace;
pub mod campaign;
pub mod dmd;
pub mod error;
pub mod ffd;
pub mod geometry;
pub mod linalg;
pub mod rigidbody;
pub mod rng;
pub mod scalar;
pub mod surrogate;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point3d = geometry::Point3<f64>;
pub type TriMesh64 = geometry::TriMesh<f64>;
pub type FfdLattice64 = ffd::FfdLattice<f64>;
pub type ParameterBinding64 = ffd::ParameterBinding<f64>;
pub type SnapshotSet64 = dmd::SnapshotSet<f64>;
pub type DmdModel64 = dmd::DmdModel<f64>;
pub type SampleTable64 = activesubspace::SampleTable<f64>;
pub type AsDecomposition64 = activesubspace::AsDecomposition<f64>;
pub type ResponseSurface64 = activesubspace::ResponseSurface<f64>;
pub type Quaternion64 = rigidbody::Quaternion<f64>;
pub type RigidBodyState64 = rigidbody::RigidBodyState<f64>;
pub type BodyProperties64 = rigidbody::BodyProperties<f64>;
