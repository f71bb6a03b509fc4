//! Scalar reductions on surfaces: the Kazdan-Warner-type equation on a flat
//! torus, constant torus solutions, critical-orbit counting, zeros of
//! meromorphic 1-forms on punctured spheres, and the goodness test for
//! H-surfaces.

pub mod counting;
pub mod goodness;
pub mod kazdan_warner;
pub mod sphere_zeros;
pub mod torus_const;

pub use counting::{count_critical_orbits, enumerate_zero_partitions};
pub use goodness::{goodness_check, Goodness, HSurfaceTorus};
pub use kazdan_warner::{critical_orbit_slice, eta, kazdan_warner_solve, KwSolution, TorusGrid, WeightFields};
pub use sphere_zeros::{punctured_sphere_zeros, residue_check, SphereZeros};
pub use torus_const::{torus_constant_solution, TorusConstant};
