//! Time evolution inside a sector.

pub mod krylov;
pub mod schedule;
pub mod state;
pub mod trajectory;
pub mod trotter;

pub use krylov::{evolve_krylov, evolve_krylov_report, KrylovOptions, KrylovReport};
pub use schedule::{schedule_sublayers, SublayerSchedule};
pub use state::StateVector;
pub use trajectory::{run_trajectory, run_trajectory_with, Engine, FnObserver, Observer, TimePoint, TimeSeries};
pub use trotter::{trotter_step, TrotterEngine};
