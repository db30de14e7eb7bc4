//! Quantum jump dynamics driven by a sequence of reals in `[0, 1)`.
//!
//! Each jump reduces a state (or a bare discrete distribution) to one
//! outcome: the Born probabilities are put in canonical descending order,
//! laid out as a cumulative partition of `[0, 1)`, and the driver's next
//! real picks the half-open interval it falls in. Drivers range from a
//! seeded stochastic generator to fully deterministic sources (a fixed
//! list, left shifts of one binary expansion, fractional parts of jump
//! instants), and the `statistics` module checks how random the
//! deterministic ones look.

pub mod drivers;
pub mod error;
pub mod jump;
pub mod manifest;
pub mod probability;
pub mod quantum;
pub mod scalar;
pub mod statistics;
pub mod unit_real;

pub use drivers::{Driver, DriverConfig, DriverKind, DriverSpec};
pub use error::{Error, Result};
pub use jump::{run, replay_verify, JumpCount, JumpScript, RunConfig, RunConfigSpec, RunOptions, Trajectory};
pub use manifest::RunManifest;
pub use probability::{DiscreteDistribution, OrderingMode};
pub use quantum::{reduce, retrodiction_witness, StateVector};
pub use scalar::{NumberSpec, ScalarMode};
pub use unit_real::{seed_constant, SeedConstant, UnitReal};
