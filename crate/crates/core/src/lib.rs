//! Online vector scheduling.
//!
//! Jobs are `d`-dimensional load vectors that arrive one at a time and must be
//! placed irrevocably on one of `m` machines. The crate provides:
//!
//! * [`schedulers`]: two-pool potential schedulers for identical machines
//!   (makespan and all-norms variants), a greedy potential scheduler for
//!   per-dimension norm targets on unrelated machines, and baselines;
//! * [`transforms`]: the input normalisations those schedulers assume;
//! * [`adversaries`]: adaptive lower-bound constructions (a monochromatic
//!   clique game, its encoding as a scheduling instance, and a pairing
//!   adversary for unrelated machines);
//! * [`oracles`]: brute-force optima, lower bounds and exact potential
//!   comparisons used to check everything else.

pub mod adversaries;
pub mod error;
pub mod metrics;
pub mod model;
pub mod oracles;
pub mod schedulers;
pub mod transforms;

pub use error::{Error, Result};
pub use metrics::{all_norms_report, load_matrix, lr_norm, norm_of, NormTable};
pub use model::{
    Assignment, Entry, Instance, JobLoad, LoadMatrix, MachineModel, Norm, NormSpec, Pool,
};
pub use schedulers::{OnlineScheduler, Schedule};
