//! Online schedulers behind one streaming interface.
//!
//! A scheduler sees one job at a time and answers with an irrevocable machine
//! index. Nothing about future jobs is reachable through [`OnlineScheduler`].

mod baseline;
mod two_pool;
mod vsall;
mod vsany;

pub use baseline::{
    baseline_greedy_makespan, baseline_uniform_random, GreedyMakespan, UniformRandom,
};
pub use two_pool::{
    alpha_for, derand_potential, greedy_overflow, vsmax_i_derandomized, vsmax_i_randomized,
    TwoPoolScheduler, Variant, VsmaxIConfig,
};
pub use vsall::{vsall_i, vsall_norm_certificate, NormCertificate, VsallIScheduler};
pub use vsany::{
    log2_potential, pow_r, vsany_certificate, vsany_u_greedy, VsanyCertificate,
    VsanyPotentialConfig, VsanyUScheduler,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Assignment, Instance, JobLoad, LoadMatrix};

/// Loads of the two pools of a two-pool scheduler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolLoads {
    /// Jobs kept by the first procedure.
    pub primary: LoadMatrix,
    /// Jobs passed to the greedy second procedure.
    pub overflow: LoadMatrix,
    /// First-procedure bookkeeping load, including passed jobs.
    pub virtual_primary: LoadMatrix,
}

/// What a scheduler has committed to so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub assignment: Assignment,
    /// Actual machine loads (for two-pool schedulers, primary plus paired overflow machine).
    pub loads: LoadMatrix,
    pub pools: Option<PoolLoads>,
}

/// Outcome of one invariant check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl InvariantCheck {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        InvariantCheck {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

pub trait OnlineScheduler {
    fn name(&self) -> &'static str;

    /// Places one job and returns the (actual) machine it went to.
    fn step(&mut self, job: &JobLoad) -> Result<usize>;

    /// Current assignment and loads.
    fn snapshot(&self) -> Schedule;

    /// Scheduler-specific invariants that should hold after every step.
    fn invariants(&self) -> Vec<InvariantCheck> {
        Vec::new()
    }

    fn finish(self) -> Schedule
    where
        Self: Sized,
    {
        self.snapshot()
    }
}

impl<S: OnlineScheduler + ?Sized> OnlineScheduler for Box<S> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn step(&mut self, job: &JobLoad) -> Result<usize> {
        (**self).step(job)
    }

    fn snapshot(&self) -> Schedule {
        (**self).snapshot()
    }

    fn invariants(&self) -> Vec<InvariantCheck> {
        (**self).invariants()
    }
}

/// Feeds every job of `instance` to `scheduler` in order.
pub fn run_stream<S: OnlineScheduler + ?Sized>(
    scheduler: &mut S,
    instance: &Instance,
) -> Result<Schedule> {
    for job in &instance.jobs {
        scheduler.step(job)?;
    }
    Ok(scheduler.snapshot())
}

/// Index of the smallest score; ties go to the earliest entry.
pub(crate) fn argmin_by_score(scores: impl IntoIterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores {
        match best {
            Some((_, b)) if s >= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}
