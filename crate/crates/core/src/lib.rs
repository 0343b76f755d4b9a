//! Coupled 1D-3D electrothermal field solver on rectilinear FIT grids.
//!
//! Thin wires are treated as 1D subproblems embedded in a 3D Finite
//! Integration Technique discretization. The electric potential of the wire is
//! coupled to the bulk by sampling the 3D field on a circle around the wire
//! and rescaling it with the logarithmic line-source profile.
//!
//! All numerical types are generic over [`Real`] (implemented for `f32` and
//! `f64`); the aliases at the crate root fix the scalar to `f64`, which is what
//! the presets and the command line tool use.

pub mod analysis;
pub mod assembly;
pub mod cli_io;
pub mod error;
pub mod geometry;
pub mod materials;
pub mod mesh;
pub mod model;
pub mod solver;
pub mod sparse;
pub mod wire_coupling;

pub use error::{Error, Result};

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Scalar type accepted by every numerical routine in the crate.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + faer::traits::RealField
    + 'static
{
    /// Relative residual accepted from a direct solve.
    fn residual_tolerance() -> Self;

    fn lit(v: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(v).expect("representable literal")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("representable count")
    }

    fn pi() -> Self {
        Self::lit(std::f64::consts::PI)
    }
}

impl Real for f64 {
    fn residual_tolerance() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn residual_tolerance() -> Self {
        1e-4
    }
}

pub type Axis1D = mesh::Axis1D<f64>;
pub type RectilinearGrid = mesh::RectilinearGrid<f64>;
pub type DualMeasures = mesh::DualMeasures<f64>;
pub type SparseMatrix = sparse::SparseMatrix<f64>;
pub type Vec3 = geometry::Vec3<f64>;
pub type WireCurve = wire_coupling::WireCurve<f64>;
pub type Wire1DGrid = wire_coupling::Wire1DGrid<f64>;
pub type CouplingSet = wire_coupling::CouplingSet<f64>;
pub type MaterialField = materials::MaterialField<f64>;
pub type Model = model::Model<f64>;
pub type ElectrothermalState = solver::ElectrothermalState<f64>;

/// Number of worker threads used by the factorizations; `0` uses all
/// cores, `1` runs sequentially.
pub fn set_threads(n: usize) {
    let par = if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) };
    faer::set_global_parallelism(par);
}
