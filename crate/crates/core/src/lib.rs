//! Two-dimensional adaptive finite elements for brittle-damage energies.
//!
//! This crate implements the discrete fracture energy
//!
//! ```text
//! F_eps(u) = (1/eps) * integral over Omega of f(eps * A e(u):e(u)) dx
//! ```
//!
//! on angle- and edge-constrained triangulations, together with the machinery
//! needed to minimize it and to certify its limit behaviour at desk scale:
//!
//! - [`geometry`]: meshes, admissibility validation, polygon clipping and the
//!   slicing/projection primitives used by the diagnostics,
//! - [`elasticity`]: P1 kinematics, Hooke tensors and dissipation profiles,
//! - [`energy`]: energy assembly, damage thresholding and crack-length
//!   bookkeeping,
//! - [`solver`]: Dirichlet setups and alternating displacement/damage descent,
//! - [`adapt`]: local mesh optimization (vertex relocation, edge flips),
//! - [`recovery`]: the crack-adapted strip triangulation whose interpolants
//!   attain the limit surface energy `kappa * sin(theta0) * crack length`,
//! - [`diagnostics`]: convergence-in-measure metric, slice counting,
//!   two-family projection coverage and rigid-motion fitting,
//! - [`io`]: text mesh formats, VTK export and CSV reports.
//!
//! # Example
//!
//! Certify the limit surface constant on a unit-square crack:
//!
//! ```
//! use griffith_core::elasticity::HookeTensor;
//! use griffith_core::geometry::AdmissibilityParams;
//! use griffith_core::recovery::{gamma_certificate, CrackSegment, Rect};
//! use griffith_core::{Point2, Vec2};
//!
//! let crack = CrackSegment::new(
//!     Point2::new(0.0, 0.5),
//!     Point2::new(1.0, 0.5),
//!     Vec2::ZERO,
//!     Vec2::new(1.0, 0.0), // unit jump across the crack
//! )?;
//! let theta0 = AdmissibilityParams::theta0_max_deg();
//! let certs = gamma_certificate(
//!     &Rect::unit(),
//!     &crack,
//!     &[1.0 / 16.0, 1.0 / 32.0],
//!     6.0,
//!     theta0,
//!     &HookeTensor::identity(),
//!     1.0,
//! )?;
//! let sin_theta0 = theta0.to_radians().sin();
//! for cert in &certs {
//!     assert!((cert.energy.total - sin_theta0).abs() / sin_theta0 < 0.05);
//! }
//! # Ok::<(), griffith_core::Error>(())
//! ```

pub mod adapt;
pub mod diagnostics;
pub mod elasticity;
pub mod energy;
pub mod geometry;
pub mod io;
pub mod recovery;
pub mod solver;

mod algebra;
mod error;
mod numeric;

pub use algebra::{Mat2, Vec2};
pub use error::{Error, Result};
pub use geometry::Point2;
