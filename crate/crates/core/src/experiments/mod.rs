//! Problem generators and batch runners for the two benchmark families:
//! the rotation resolvent and nonnegative-hyperplane feasibility.

mod feasibility;
mod rotation;

pub use feasibility::{
    dr_step_schedules, feasibility_stop, gen_feasibility, gen_start, make_batch_methods,
    run_feasibility_batch, BatchConfig, BatchMethod, BatchResult, BatchRow, FeasibilityInstance,
    BATCH_CSV_HEADER, START_SCALE,
};
pub use rotation::{
    run_rotation_experiment, RotationOutputs, RotationSettings, DEFAULT_ROTATION_METHODS,
};
