//! Two-pool schedulers for the makespan objective on identical machines.
//!
//! Pool M1 takes every job first (uniformly at random, or by minimising an
//! exponential potential); a job that pushes its M1 machine past the pass
//! threshold in some dimension is handed to pool M2, which packs greedily.
//! Machine `i` of M1 is paired with machine `i` of M2.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use super::{argmin_by_score, InvariantCheck, OnlineScheduler, PoolLoads, Schedule};
use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, JobLoad, LoadMatrix, Pool};
use crate::transforms::VolumePrior;

/// `10 log d / log log d` (base 2), or 10 when `d < 4`.
pub fn alpha_for(d: usize) -> f64 {
    if d < 4 {
        return 10.0;
    }
    let log_d = (d as f64).log2();
    10.0 * log_d / log_d.log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Randomized { seed: u64 },
    Derandomized,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VsmaxIConfig {
    pub alpha: f64,
    pub pass_threshold: f64,
    pub variant: Variant,
}

impl VsmaxIConfig {
    /// Uniform M1 placement, pass at `2 alpha + 1`.
    pub fn randomized(d: usize, seed: u64) -> Self {
        let alpha = alpha_for(d);
        VsmaxIConfig {
            alpha,
            pass_threshold: 2.0 * alpha + 1.0,
            variant: Variant::Randomized { seed },
        }
    }

    /// Potential-guided M1 placement, pass at `3 alpha + 1`.
    pub fn derandomized(d: usize) -> Self {
        let alpha = alpha_for(d);
        VsmaxIConfig {
            alpha,
            pass_threshold: 3.0 * alpha + 1.0,
            variant: Variant::Derandomized,
        }
    }

    /// Strict upper bound on any actual M1 entry.
    pub fn primary_bound(&self) -> f64 {
        self.pass_threshold + 1.0
    }
}

/// `sum_i sum_k alpha^(L_ik - (alpha/m) P_k)` for M1 loads `L` and prefix volume `P`.
pub fn derand_potential(primary: &LoadMatrix, prefix_volume: &[f64], alpha: f64) -> f64 {
    let m = primary.machines();
    let log2_alpha = alpha.log2();
    (0..primary.dims())
        .map(|k| column_potential(primary, k, prefix_volume[k], alpha / m as f64, log2_alpha))
        .sum()
}

fn column_potential(
    primary: &LoadMatrix,
    k: usize,
    prefix: f64,
    rate: f64,
    log2_alpha: f64,
) -> f64 {
    (0..primary.machines())
        .map(|i| ((primary.get(i, k) - rate * prefix) * log2_alpha).exp2())
        .sum()
}

/// M2 machine minimising the M2 makespan after adding `job`; lowest index on ties.
pub fn greedy_overflow(job: &[f64], overflow: &LoadMatrix) -> usize {
    let current = overflow.makespan();
    argmin_by_score((0..overflow.machines()).map(|i| {
        let row_after = overflow
            .row(i)
            .iter()
            .zip(job)
            .map(|(a, b)| a + b)
            .fold(0.0, f64::max);
        (i, current.max(row_after))
    }))
    .expect("at least one machine")
}

pub struct TwoPoolScheduler {
    config: VsmaxIConfig,
    m: usize,
    d: usize,
    prior: Option<VolumePrior>,
    rng: Option<Xoshiro256StarStar>,
    virtual_primary: LoadMatrix,
    primary: LoadMatrix,
    overflow: LoadMatrix,
    prefix_volume: Vec<f64>,
    columns: Vec<f64>,
    potential_trace: Vec<f64>,
    overflow_volume: f64,
    assignment: Assignment,
}

impl TwoPoolScheduler {
    /// Expects jobs that already satisfy the transformed-instance properties.
    pub fn new(m: usize, d: usize, config: VsmaxIConfig) -> Self {
        let rng = match config.variant {
            Variant::Randomized { seed } => Some(Xoshiro256StarStar::seed_from_u64(seed)),
            Variant::Derandomized => None,
        };
        TwoPoolScheduler {
            config,
            m,
            d,
            prior: None,
            rng,
            virtual_primary: LoadMatrix::zeros(m, d),
            primary: LoadMatrix::zeros(m, d),
            overflow: LoadMatrix::zeros(m, d),
            prefix_volume: vec![0.0; d],
            columns: vec![m as f64; d],
            potential_trace: vec![(m * d) as f64],
            overflow_volume: 0.0,
            assignment: Assignment::default(),
        }
    }

    /// Applies the three VSMAX-I transformations to each raw job on arrival.
    pub fn with_prior(prior: VolumePrior, d: usize, config: VsmaxIConfig) -> Self {
        let mut s = Self::new(prior.m, d, config);
        s.prior = Some(prior);
        s
    }

    pub fn config(&self) -> &VsmaxIConfig {
        &self.config
    }

    /// `Phi(0), Phi(1), ...`; only maintained by the derandomized variant.
    pub fn potential_trace(&self) -> &[f64] {
        &self.potential_trace
    }

    /// Total volume `V_2` of the jobs passed to M2.
    pub fn overflow_volume(&self) -> f64 {
        self.overflow_volume
    }

    pub fn passed_jobs(&self) -> usize {
        self.assignment
            .pools
            .iter()
            .filter(|p| **p == Pool::Overflow)
            .count()
    }

    pub fn pools(&self) -> PoolLoads {
        PoolLoads {
            primary: self.primary.clone(),
            overflow: self.overflow.clone(),
            virtual_primary: self.virtual_primary.clone(),
        }
    }

    fn choose_primary(&mut self, p: &[f64]) -> usize {
        match self.config.variant {
            Variant::Randomized { .. } => self.rng.as_mut().expect("seeded").gen_range(0..self.m),
            Variant::Derandomized => {
                let rate = self.config.alpha / self.m as f64;
                let log2_alpha = self.config.alpha.log2();
                let touched: Vec<usize> = (0..self.d).filter(|&k| p[k] != 0.0).collect();
                argmin_by_score((0..self.m).map(|i| {
                    let delta: f64 = touched
                        .iter()
                        .map(|&k| {
                            let shift = rate * (self.prefix_volume[k] + p[k]);
                            let before = self.virtual_primary.get(i, k) - shift;
                            ((before + p[k]) * log2_alpha).exp2() - (before * log2_alpha).exp2()
                        })
                        .sum();
                    (i, delta)
                }))
                .expect("at least one machine")
            }
        }
    }

    fn step_vector(&mut self, p: &[f64]) -> usize {
        let i = self.choose_primary(p);
        self.virtual_primary.add(i, p);
        for (acc, &x) in self.prefix_volume.iter_mut().zip(p) {
            *acc += x;
        }
        if self.config.variant == Variant::Derandomized {
            let rate = self.config.alpha / self.m as f64;
            let log2_alpha = self.config.alpha.log2();
            for k in (0..self.d).filter(|&k| p[k] != 0.0) {
                self.columns[k] = column_potential(
                    &self.virtual_primary,
                    k,
                    self.prefix_volume[k],
                    rate,
                    log2_alpha,
                );
            }
            self.potential_trace.push(self.columns.iter().sum());
        }

        let passes = self
            .virtual_primary
            .row(i)
            .iter()
            .any(|&x| x >= self.config.pass_threshold);
        if passes {
            let target = greedy_overflow(p, &self.overflow);
            self.overflow.add(target, p);
            self.overflow_volume += p.iter().sum::<f64>();
            self.assignment.push(target, Pool::Overflow);
            target
        } else {
            self.primary.add(i, p);
            self.assignment.push(i, Pool::Primary);
            i
        }
    }
}

impl OnlineScheduler for TwoPoolScheduler {
    fn name(&self) -> &'static str {
        match self.config.variant {
            Variant::Randomized { .. } => "vsmax-i-rand",
            Variant::Derandomized => "vsmax-i-derand",
        }
    }

    fn step(&mut self, job: &JobLoad) -> Result<usize> {
        let p = job.as_identical().ok_or_else(|| {
            Error::InvalidInstance("two-pool scheduler needs identical machines".into())
        })?;
        if p.len() != self.d {
            return Err(Error::InvalidInstance(format!(
                "expected {} dimensions, got {}",
                self.d,
                p.len()
            )));
        }
        let p = match &self.prior {
            Some(prior) => prior.vsmax_job(p),
            None => p.to_vec(),
        };
        Ok(self.step_vector(&p))
    }

    fn snapshot(&self) -> Schedule {
        Schedule {
            assignment: self.assignment.clone(),
            loads: self.primary.sum(&self.overflow),
            pools: Some(self.pools()),
        }
    }

    fn invariants(&self) -> Vec<InvariantCheck> {
        let bound = self.config.primary_bound();
        let primary_max = self.primary.makespan();
        let mut checks = vec![InvariantCheck::new(
            "primary_bound",
            primary_max < bound,
            format!("max M1 load {primary_max} < {bound}"),
        )];
        let m2_bound = self.overflow_volume / self.m as f64 + 1.0;
        let m2 = self.overflow.makespan();
        checks.push(InvariantCheck::new(
            "overflow_makespan",
            m2 <= m2_bound * (1.0 + 1e-12),
            format!("M2 makespan {m2} <= V2/m + 1 = {m2_bound}"),
        ));
        if self.config.variant == Variant::Derandomized {
            let worst = self
                .potential_trace
                .windows(2)
                .enumerate()
                .find(|(_, w)| w[1] > w[0] * (1.0 + 1e-12));
            checks.push(InvariantCheck::new(
                "potential_monotone",
                worst.is_none(),
                match worst {
                    Some((j, w)) => format!("Phi({}) = {} > Phi({}) = {}", j + 1, w[1], j, w[0]),
                    None => format!("{} steps non-increasing", self.potential_trace.len() - 1),
                },
            ));
            let end = *self.potential_trace.last().expect("Phi(0) recorded");
            let md = (self.m * self.d) as f64;
            checks.push(InvariantCheck::new(
                "potential_end",
                end <= md * (1.0 + 1e-12),
                format!("Phi(n) = {end} <= md = {md}"),
            ));
            let v2_bound = self.m as f64 / self.d as f64;
            checks.push(InvariantCheck::new(
                "overflow_volume",
                self.overflow_volume <= v2_bound,
                format!("V2 = {} <= m/d = {v2_bound}", self.overflow_volume),
            ));
        }
        checks
    }
}

/// Randomized two-pool run over a pre-transformed instance.
pub fn vsmax_i_randomized(instance: &Instance, seed: u64) -> Result<(Schedule, TwoPoolScheduler)> {
    let mut s = TwoPoolScheduler::new(
        instance.m,
        instance.d,
        VsmaxIConfig::randomized(instance.d, seed),
    );
    let schedule = super::run_stream(&mut s, instance)?;
    Ok((schedule, s))
}

/// Derandomized two-pool run over a pre-transformed instance.
pub fn vsmax_i_derandomized(instance: &Instance) -> Result<(Schedule, TwoPoolScheduler)> {
    let mut s = TwoPoolScheduler::new(
        instance.m,
        instance.d,
        VsmaxIConfig::derandomized(instance.d),
    );
    let schedule = super::run_stream(&mut s, instance)?;
    Ok((schedule, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_values() {
        assert_eq!(alpha_for(2), 10.0);
        assert_eq!(alpha_for(4), 20.0);
        assert_eq!(alpha_for(16), 20.0);
        assert!((alpha_for(64) - 60.0 / 6f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn potential_start_and_arithmetic() {
        let lm = LoadMatrix::zeros(3, 5);
        assert_eq!(derand_potential(&lm, &[0.0; 5], 20.0), 15.0);

        let mut one = LoadMatrix::zeros(1, 1);
        one.add(0, &[1.0]);
        assert_eq!(derand_potential(&one, &[1.0], 4.0), 1.0 / 64.0);
    }

    #[test]
    fn overflow_examples() {
        assert_eq!(greedy_overflow(&[1.0, 0.0], &LoadMatrix::zeros(3, 2)), 0);
        let mut lm = LoadMatrix::zeros(2, 1);
        lm.add(0, &[2.0]);
        assert_eq!(greedy_overflow(&[1.0], &lm), 1);
    }

    #[test]
    fn single_job_stays_in_primary() {
        let inst = Instance::identical(4, 4, vec![vec![1.0, 0.5, 0.25, 0.25]]).unwrap();
        for seed in 0..20 {
            let (sched, s) = vsmax_i_randomized(&inst, seed).unwrap();
            assert_eq!(sched.assignment.pools, vec![Pool::Primary]);
            assert_eq!(s.passed_jobs(), 0);
        }
    }

    #[test]
    fn randomized_is_deterministic_per_seed() {
        let jobs = (0..50)
            .map(|j| vec![(j % 7) as f64 / 7.0 + 0.1; 4])
            .collect();
        let inst = Instance::identical(5, 4, jobs).unwrap();
        let a = vsmax_i_randomized(&inst, 99).unwrap().0;
        let b = vsmax_i_randomized(&inst, 99).unwrap().0;
        assert_eq!(a, b);
        let c = vsmax_i_randomized(&inst, 100).unwrap().0;
        assert_ne!(a.assignment, c.assignment);
    }

    #[test]
    fn derandomized_first_job_goes_to_machine_zero() {
        let inst = Instance::identical(4, 4, vec![vec![0.5; 4]]).unwrap();
        let (sched, _) = vsmax_i_derandomized(&inst).unwrap();
        assert_eq!(sched.assignment.machines, vec![0]);
    }

    #[test]
    fn low_threshold_forces_overflow() {
        let cfg = VsmaxIConfig {
            alpha: 4.0,
            pass_threshold: 1.5,
            variant: Variant::Derandomized,
        };
        let mut s = TwoPoolScheduler::new(1, 1, cfg);
        let job = JobLoad::Identical(vec![1.0]);
        assert_eq!(s.step(&job).unwrap(), 0);
        s.step(&job).unwrap();
        let snap = s.snapshot();
        assert_eq!(snap.assignment.pools, vec![Pool::Primary, Pool::Overflow]);
        let pools = snap.pools.unwrap();
        assert_eq!(pools.primary.get(0, 0), 1.0);
        assert_eq!(pools.overflow.get(0, 0), 1.0);
        assert_eq!(pools.virtual_primary.get(0, 0), 2.0);
        assert_eq!(snap.loads.get(0, 0), 2.0);
        assert_eq!(s.overflow_volume(), 1.0);
    }
}
