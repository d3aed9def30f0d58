//! Hexahedral meshes and the unit-cell quantities used to convert current
//! densities into currents.

pub mod builders;
pub mod hex;
pub mod mesh;

pub use builders::{build_scenario_mesh, CurvedSpecimen, GapStrip, GeometrySpec, MeshSpec, RoughSurface, Specimen};
pub use hex::{element_axis_areas, element_volume, unit_cell_geom, UnitCellGeom};
pub use mesh::{Mesh, Region};
