//! Closed-loop simulation under scripted scenarios and its figures of merit.

pub mod design;
pub mod foms;
pub mod integrate;
pub mod plant;
pub mod run;
pub mod scenario;

pub use design::{
    design_compensators, jacobian_loops, CompensatorSet, CompensatorSource, LoopCompensator, OperatingDrives,
    TuningOverrides,
};
pub use foms::{compute_foms, trace_foms, FoMReport, LoopFoM};
pub use integrate::{integrate, Method, Trajectory};
pub use plant::{BedModel, ClosedLoopPlant, Disturbances, Manipulated};
pub use run::{
    closed_loop_simulate, simulate_many, stiffness_check, undisturbed, SimJob, SimOptions, Trace, TRACE_COLUMNS,
};
pub use scenario::{Event, EventTarget, Scenario};
