//! Lattice geometry, coefficient fields and lattice functions.

mod counting;
mod field;
mod function;
mod geometry;

pub use counting::{cardinality_constant, count_in_dilation, unit_ball_volume, DilationCount};
pub use field::{CoefficientField, FieldFile, NeighborSet};
pub use function::{fmt_float, LatticeFunction, SpinConfiguration};
pub use geometry::{
    jump_datum, lattice_points, normalize, physical, rotation_to, LatticeRegion, Rotation, Site,
    BOUNDARY_TOL,
};
pub(crate) use geometry::jump_value;
