//! Temporary build surface while the remaining modules land.

pub mod decomposition;
pub mod matrix;
pub mod rounding;
pub mod rng;
pub mod schedule;
pub mod throughput;
pub mod topology;

mod assignment;
mod maxflow;

pub use decomposition::{BvnTerm, DecompositionError, DutyLossReport, Matching, PhaseTag, PhasedMatchings};
pub use matrix::{Axis, MatrixError, NormalizedMatrix, ScaledMatrix, SquareMatrix, TrafficMatrix};
pub use rounding::{IntegerMatrix, RoundingError};
pub use schedule::{CapacityMatrix, PeriodicSchedule, ScheduleError};
pub use throughput::{FlowCertificate, RoutingMode, ThroughputError, ThroughputReport};
pub use topology::{DegreeDeficit, Multigraph, TopologyError};
