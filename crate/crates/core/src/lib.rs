//! Numerical laboratory for magnetic geodesic flows on surfaces.
//!
//! A surface patch is a conformal chart `g = λ²(dx² + dy²)`; a magnetic field
//! is a scalar `b` with `Ω = b dA`. Unit-speed magnetic geodesics have
//! geodesic curvature `b`. On top of the integrator the crate provides
//! magnetic Jacobi fields, the index form, scattering data on convex domains
//! and closed-orbit censuses.

pub mod boundary;
pub mod bump;
pub mod closure;
pub mod error;
pub mod expr;
pub mod flow;
pub mod geometry;
pub mod index_form;
pub mod jacobi;
pub mod magnetic;
pub mod quadrature;
pub mod scattering;

pub type Vec2 = nalgebra::Vector2<f64>;

pub use boundary::{BoundaryCurve, ConvexityReport, DomainSpec};
pub use bump::Bump;
pub use closure::{closure_census, closure_gap, pass_count, CensusReport, OrbitRecord, OrbitStatus};
pub use error::{Error, Result};
pub use flow::{integrate, magnetic_exp, PhasePoint, StepControl, Trajectory};
pub use geometry::{ChartKind, ChartMetric, MetricJet};
pub use index_form::{cut_corner, index_evaluate, index_gram, FieldOnGeodesic, GramSpectrum};
pub use jacobi::{first_conjugate, propagate_jacobi, symplectic_pairing, variational_consistency, JacobiState};
pub use magnetic::{FieldSource, MagneticSystem};
pub use scattering::{exit_event, scattering, scattering_table, ScatteringRecord, ScatteringTable, Status};
