//! Comparison baselines.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use super::{argmin_by_score, OnlineScheduler, Schedule};
use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, JobLoad, LoadMatrix, Pool};

/// Puts each job where the machine's resulting max-over-dimensions load is smallest.
pub struct GreedyMakespan {
    m: usize,
    loads: LoadMatrix,
    assignment: Assignment,
}

impl GreedyMakespan {
    pub fn new(m: usize, d: usize) -> Self {
        GreedyMakespan {
            m,
            loads: LoadMatrix::zeros(m, d),
            assignment: Assignment::default(),
        }
    }
}

impl OnlineScheduler for GreedyMakespan {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn step(&mut self, job: &JobLoad) -> Result<usize> {
        let index = self.assignment.len();
        let i = argmin_by_score(job.eligible_machines(self.m).into_iter().map(|i| {
            let row = job.row(i).expect("eligible");
            let after = self
                .loads
                .row(i)
                .iter()
                .zip(&row)
                .map(|(a, b)| a + b)
                .fold(0.0, f64::max);
            (i, after)
        }))
        .ok_or(Error::AllForbidden { job: index })?;
        self.loads.add(i, &job.row(i).expect("eligible"));
        self.assignment.push(i, Pool::None);
        Ok(i)
    }

    fn snapshot(&self) -> Schedule {
        Schedule {
            assignment: self.assignment.clone(),
            loads: self.loads.clone(),
            pools: None,
        }
    }
}

/// Uniformly random machine per job (uniform over eligible machines when some are forbidden).
pub struct UniformRandom {
    m: usize,
    rng: Xoshiro256StarStar,
    loads: LoadMatrix,
    assignment: Assignment,
}

impl UniformRandom {
    pub fn new(m: usize, d: usize, seed: u64) -> Self {
        UniformRandom {
            m,
            rng: Xoshiro256StarStar::seed_from_u64(seed),
            loads: LoadMatrix::zeros(m, d),
            assignment: Assignment::default(),
        }
    }
}

impl OnlineScheduler for UniformRandom {
    fn name(&self) -> &'static str {
        "random"
    }

    fn step(&mut self, job: &JobLoad) -> Result<usize> {
        let eligible = job.eligible_machines(self.m);
        if eligible.is_empty() {
            return Err(Error::AllForbidden {
                job: self.assignment.len(),
            });
        }
        let i = eligible[self.rng.gen_range(0..eligible.len())];
        self.loads.add(i, &job.row(i).expect("eligible"));
        self.assignment.push(i, Pool::None);
        Ok(i)
    }

    fn snapshot(&self) -> Schedule {
        Schedule {
            assignment: self.assignment.clone(),
            loads: self.loads.clone(),
            pools: None,
        }
    }
}

pub fn baseline_greedy_makespan(instance: &Instance) -> Result<Assignment> {
    let mut s = GreedyMakespan::new(instance.m, instance.d);
    Ok(super::run_stream(&mut s, instance)?.assignment)
}

pub fn baseline_uniform_random(instance: &Instance, seed: u64) -> Result<Assignment> {
    let mut s = UniformRandom::new(instance.m, instance.d, seed);
    Ok(super::run_stream(&mut s, instance)?.assignment)
}
