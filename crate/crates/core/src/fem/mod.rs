//! Trilinear element kernels for the coupled potential/temperature problem.

pub mod constitutive;
pub mod element;
pub mod shape;

pub use constitutive::{constitutive, EffectiveProps, Fluxes};
pub use element::{element_system, ElementInput, ElementSystem, Mode};
pub use shape::{shape_trilinear, GaussPointData, N_GP};
