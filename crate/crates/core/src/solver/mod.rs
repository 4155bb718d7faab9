//! Time stepping of the driven wave equation in mild form, lagged snapshots,
//! the Girsanov shift and a Picard reference solver.

mod coefficients;
mod drive;
mod lag;
mod picard;
mod state;
mod stepper;

pub use coefficients::{Coefficients, Nonlinearity};
pub use drive::{girsanov_shift, Control, DriveDescriptor, DriveSpec, Shift};
pub use lag::{dyadic_lag, lagged_snapshot, lagged_snapshot_with, FreePropagator};
pub use picard::{picard_reference, PicardReport};
pub use state::{step_of, FieldState, SaveGrid, Trajectory, TrajectoryHeader};
pub use stepper::{KickRule, Solver, SolverOptions, StepForcing};
