//! Assembly, linear and nonlinear solves, and the staggered time loop.

pub mod assembly;
pub mod bc;
pub mod linear;
pub mod newton;
pub mod time_loop;

pub use assembly::{assemble, Assembler, DofMap, GlobalSystem, ResidualNorms, StepData};
pub use bc::{Dirichlet, Field, TimeFunction};
pub use linear::{LinearSolver, LinearStats, LinearStrategy};
pub use newton::{newton_solve, NewtonReport, NewtonSettings, NonlinearProblem};
pub use time_loop::{FieldState, RunStats, Simulation, SimulationSetup, StepReport};
