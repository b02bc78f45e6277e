//! All-norms scheduling on identical machines: volume-normalise, clip at one,
//! and hand the clipped vectors to the derandomized two-pool scheduler. Norms
//! are measured on the unclipped normalised loads.

use serde::{Deserialize, Serialize};

use super::two_pool::{TwoPoolScheduler, VsmaxIConfig};
use super::{InvariantCheck, OnlineScheduler, Schedule};
use crate::error::{Error, Result};
use crate::metrics::norm_of;
use crate::model::{Instance, JobLoad, LoadMatrix, Norm};
use crate::oracles::opt_lower_bound_lr;
use crate::transforms::VolumePrior;

pub struct VsallIScheduler {
    prior: VolumePrior,
    inner: TwoPoolScheduler,
    true_loads: LoadMatrix,
    clipped_loads: LoadMatrix,
    small_loads: LoadMatrix,
    large_counts: Vec<usize>,
}

impl VsallIScheduler {
    pub fn new(prior: VolumePrior, d: usize) -> Self {
        let m = prior.m;
        VsallIScheduler {
            prior,
            inner: TwoPoolScheduler::new(m, d, VsmaxIConfig::derandomized(d)),
            true_loads: LoadMatrix::zeros(m, d),
            clipped_loads: LoadMatrix::zeros(m, d),
            small_loads: LoadMatrix::zeros(m, d),
            large_counts: vec![0; m * d],
        }
    }

    pub fn inner(&self) -> &TwoPoolScheduler {
        &self.inner
    }

    /// Realised per-(machine, dimension) bound on the clipped load:
    /// `3 alpha + 2` on M1 plus `V_2/m + 1` on M2.
    pub fn alpha_prime(&self) -> f64 {
        let cfg = self.inner.config();
        cfg.primary_bound() + 1.0 + self.inner.overflow_volume() / self.prior.m as f64
    }

    pub fn clipped_loads(&self) -> &LoadMatrix {
        &self.clipped_loads
    }

    /// Number of jobs on `machine` that were clipped in dimension `k`.
    pub fn large_count(&self, machine: usize, k: usize) -> usize {
        self.large_counts[machine * self.true_loads.dims() + k]
    }

    /// Sum of unclipped loads on `machine` in dimension `k`.
    pub fn small_load(&self, machine: usize, k: usize) -> f64 {
        self.small_loads.get(machine, k)
    }
}

impl OnlineScheduler for VsallIScheduler {
    fn name(&self) -> &'static str {
        "vsall-i"
    }

    fn step(&mut self, job: &JobLoad) -> Result<usize> {
        let raw = job
            .as_identical()
            .ok_or_else(|| Error::InvalidInstance("vsall-i needs identical machines".into()))?;
        let (normalized, clipped) = self.prior.vsall_job(raw);
        let i = self.inner.step(&JobLoad::Identical(clipped.clone()))?;
        self.true_loads.add(i, &normalized);
        self.clipped_loads.add(i, &clipped);
        let d = self.true_loads.dims();
        for (k, &x) in normalized.iter().enumerate() {
            if x > 1.0 {
                self.large_counts[i * d + k] += 1;
            } else {
                self.small_loads.add_entry(i, k, x);
            }
        }
        Ok(i)
    }

    fn snapshot(&self) -> Schedule {
        let inner = self.inner.snapshot();
        Schedule {
            assignment: inner.assignment,
            loads: self.true_loads.clone(),
            pools: inner.pools,
        }
    }

    fn invariants(&self) -> Vec<InvariantCheck> {
        let bound = self.alpha_prime();
        let (m, d) = (self.true_loads.machines(), self.true_loads.dims());
        let max_large = self.large_counts.iter().copied().max().unwrap_or(0);
        let max_small = self.small_loads.makespan();
        let max_clipped = self.clipped_loads.makespan();
        let mut checks = self.inner.invariants();
        checks.push(InvariantCheck::new(
            "large_count",
            (max_large as f64) <= bound,
            format!("max large jobs per (machine, dim) {max_large} <= {bound}"),
        ));
        checks.push(InvariantCheck::new(
            "small_load",
            max_small <= bound,
            format!("max small load {max_small} <= {bound}"),
        ));
        checks.push(InvariantCheck::new(
            "clipped_load",
            max_clipped <= bound,
            format!("max clipped load {max_clipped} <= {bound} over {m}x{d}"),
        ));
        checks
    }
}

/// Streams `instance` (raw, with volume metadata) through [`VsallIScheduler`].
pub fn vsall_i(instance: &Instance) -> Result<(Schedule, VsallIScheduler)> {
    let prior = VolumePrior::from_instance(instance)?;
    let mut s = VsallIScheduler::new(prior, instance.d);
    let schedule = super::run_stream(&mut s, instance)?;
    Ok((schedule, s))
}

/// `||L(k)||_r <= 2^(1+1/r) alpha'^((r-1)/r) LB(k, r)` for one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormCertificate {
    pub dim: usize,
    pub r: f64,
    pub value: f64,
    pub lower_bound: f64,
    pub factor: f64,
    pub passed: bool,
}

impl NormCertificate {
    /// `value / (factor * lower_bound)`; at most one when the certificate holds.
    pub fn slack_ratio(&self) -> f64 {
        let rhs = self.factor * self.lower_bound;
        if rhs == 0.0 {
            if self.value == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.value / rhs
        }
    }
}

/// Checks the all-norms bound for every dimension of `loads` at exponent `r`,
/// with relative tolerance `tol`. `normalized` holds the volume-normalised
/// (unclipped) jobs.
pub fn vsall_norm_certificate(
    loads: &LoadMatrix,
    normalized: &Instance,
    alpha_prime: f64,
    r: f64,
    tol: f64,
) -> Result<Vec<NormCertificate>> {
    let factor = 2f64.powf(1.0 + 1.0 / r) * alpha_prime.powf((r - 1.0) / r);
    (0..loads.dims())
        .map(|k| {
            let value = norm_of(&loads.column(k), Norm::Lr(r));
            let lower_bound = opt_lower_bound_lr(normalized, k, Norm::Lr(r))?;
            let passed = value <= factor * lower_bound * (1.0 + tol);
            Ok(NormCertificate {
                dim: k,
                r,
                value,
                lower_bound,
                factor,
                passed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_is_conserved() {
        let jobs = vec![
            vec![3.0, 0.5],
            vec![1.0, 2.5],
            vec![0.2, 0.2],
            vec![5.0, 1.0],
        ];
        let inst = Instance::identical(3, 2, jobs).unwrap();
        let (sched, _) = vsall_i(&inst).unwrap();
        let normalized = crate::transforms::normalize_volume(&inst).unwrap();
        for k in 0..2 {
            let col: f64 = sched.loads.column(k).iter().sum();
            let expected: f64 = normalized
                .jobs
                .iter()
                .map(|j| j.as_identical().unwrap()[k])
                .sum();
            assert!((col - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }

    #[test]
    fn single_machine_ratio_is_one() {
        let jobs = vec![vec![3.0], vec![1.0], vec![2.0]];
        let inst = Instance::identical(1, 1, jobs).unwrap();
        let (sched, s) = vsall_i(&inst).unwrap();
        let normalized = crate::transforms::normalize_volume(&inst).unwrap();
        for r in [1.0, 2.0, 3.0] {
            let c = vsall_norm_certificate(&sched.loads, &normalized, s.alpha_prime(), r, 1e-9)
                .unwrap();
            assert!((c[0].value / c[0].lower_bound - 1.0).abs() < 1e-12);
            assert!(c[0].passed);
        }
    }

    #[test]
    fn large_jobs_are_counted() {
        let inst = Instance::identical(2, 1, vec![vec![10.0], vec![1.0], vec![1.0]]).unwrap();
        let (_, s) = vsall_i(&inst).unwrap();
        let total: usize = (0..2).map(|i| s.large_count(i, 0)).sum();
        assert_eq!(total, 1);
        assert!(s.invariants().iter().all(|c| c.passed));
    }
}
