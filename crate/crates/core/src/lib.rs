//! Triangle meshes as discrete Riemannian manifolds, and periodic dynamic
//! movement primitives that live on them.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: mesh loading, validation, closest points and tangent planes;
//! - [`geodesic`]: locally shortest polylines between surface points;
//! - [`manifold`]: logarithmic and exponential maps, parallel transport;
//! - [`dmp`]: fitting and integrating periodic movement primitives;
//! - [`oracle`]: smooth parametric surfaces used as reference solutions;
//! - [`surface`]: synthetic meshes and demonstration curves;
//! - [`io`], [`bench`]: file formats and the timing harness.

pub mod bench;
pub mod dmp;
pub mod error;
pub mod geodesic;
pub mod io;
pub mod manifold;
pub mod mesh;
pub mod oracle;
pub mod par;
pub mod surface;

pub use error::{Error, Result};
pub use geodesic::{build_solver, path_length, GeodesicEngine, GeodesicPath, GeodesicSolver};
pub use mesh::{Mesh, SurfacePoint, TangentVector, Vec3};
