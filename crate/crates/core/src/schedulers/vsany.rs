//! Greedy potential minimisation for per-dimension norm targets on unrelated
//! machines.
//!
//! With `L_k` the `r_k`-norm of dimension `k` and `q_k = r_k + log2 d`, the
//! potential is `sum_k alpha_k L_k^q_k` where `alpha_k = (3 q_k)^-q_k`. The
//! weights underflow binary64 quickly, so everything is kept in log2 space
//! and combined with a max-shifted log-sum-exp.

use serde::{Deserialize, Serialize};

use super::{argmin_by_score, InvariantCheck, OnlineScheduler, Schedule};
use crate::error::{Error, Result};
use crate::metrics::norm_of;
use crate::model::{Assignment, Instance, JobLoad, LoadMatrix, Norm, NormSpec};
use crate::transforms::normalize_target_job;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VsanyPotentialConfig {
    /// Exponent used for each dimension (`max(1, log2 m)` for makespan dimensions).
    pub r: Vec<f64>,
    pub q: Vec<f64>,
    /// `log2 alpha_k = -q_k log2(3 q_k)`.
    pub log2_alpha: Vec<f64>,
}

impl VsanyPotentialConfig {
    pub fn new(spec: &NormSpec, m: usize) -> Result<Self> {
        spec.validate(m)?;
        let d = spec.dims();
        if d == 0 {
            return Err(Error::InvalidNorm("no dimensions".into()));
        }
        let log_d = (d as f64).log2();
        let r: Vec<f64> = spec
            .norms
            .iter()
            .map(|n| match n {
                Norm::Lr(r) => *r,
                Norm::Makespan => NormSpec::max_exponent(m),
            })
            .collect();
        let q: Vec<f64> = r.iter().map(|r| r + log_d).collect();
        if let Some(bad) = q.iter().find(|q| !(q.is_finite() && **q >= 1.0)) {
            return Err(Error::InvalidNorm(format!("q = {bad} must be at least 1")));
        }
        let log2_alpha = q.iter().map(|q| -q * (3.0 * q).log2()).collect();
        Ok(VsanyPotentialConfig { r, q, log2_alpha })
    }

    pub fn dims(&self) -> usize {
        self.r.len()
    }
}

/// `x^r`, using repeated multiplication for small integral `r`.
pub fn pow_r(x: f64, r: f64) -> f64 {
    if r.fract() == 0.0 && (1.0..=64.0).contains(&r) {
        x.powi(r as i32)
    } else {
        x.powf(r)
    }
}

/// `log2 sum_i x_i^r`, summing in ascending order so the result depends only
/// on the multiset of loads.
fn log2_power_sum(column: &mut [f64], r: f64) -> f64 {
    for x in column.iter_mut() {
        *x = pow_r(*x, r);
    }
    column.sort_by(f64::total_cmp);
    column.iter().sum::<f64>().log2()
}

fn log2_sum_exp2(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp2()).sum::<f64>().log2()
}

fn log2_term(cfg: &VsanyPotentialConfig, k: usize, log2_sum: f64) -> f64 {
    if log2_sum == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    cfg.log2_alpha[k] + cfg.q[k] / cfg.r[k] * log2_sum
}

/// `log2 sum_k alpha_k L_k^q_k`; negative infinity when every load is zero.
pub fn log2_potential(loads: &LoadMatrix, cfg: &VsanyPotentialConfig) -> f64 {
    let terms: Vec<f64> = (0..loads.dims())
        .map(|k| log2_term(cfg, k, log2_power_sum(&mut loads.column(k), cfg.r[k])))
        .collect();
    log2_sum_exp2(&terms)
}

pub struct VsanyUScheduler {
    cfg: VsanyPotentialConfig,
    m: usize,
    targets: Option<Vec<f64>>,
    loads: LoadMatrix,
    assignment: Assignment,
    trace: Vec<f64>,
    jobs_seen: usize,
}

impl VsanyUScheduler {
    /// Jobs are expected already divided by their targets.
    pub fn new(m: usize, spec: &NormSpec) -> Result<Self> {
        let cfg = VsanyPotentialConfig::new(spec, m)?;
        let d = cfg.dims();
        Ok(VsanyUScheduler {
            cfg,
            m,
            targets: None,
            loads: LoadMatrix::zeros(m, d),
            assignment: Assignment::default(),
            trace: vec![f64::NEG_INFINITY],
            jobs_seen: 0,
        })
    }

    /// Divides each arriving job by `spec.targets` before placing it.
    pub fn with_targets(m: usize, spec: &NormSpec) -> Result<Self> {
        let mut s = Self::new(m, spec)?;
        s.targets = Some(spec.targets.clone());
        Ok(s)
    }

    pub fn config(&self) -> &VsanyPotentialConfig {
        &self.cfg
    }

    /// `log2 Phi` after each step, starting from the empty schedule.
    pub fn potential_trace(&self) -> &[f64] {
        &self.trace
    }

    /// `log2 Phi` that would result from putting `job` on each eligible machine.
    pub fn candidate_scores(&self, job: &JobLoad) -> Vec<(usize, f64)> {
        let d = self.cfg.dims();
        let base: Vec<f64> = (0..d)
            .map(|k| log2_power_sum(&mut self.loads.column(k), self.cfg.r[k]))
            .collect();
        job.eligible_machines(self.m)
            .into_iter()
            .map(|i| {
                let row = job.row(i).expect("eligible");
                let terms: Vec<f64> = (0..d)
                    .map(|k| {
                        let log2_sum = if row[k] == 0.0 {
                            base[k]
                        } else {
                            let mut col = self.loads.column(k);
                            col[i] += row[k];
                            log2_power_sum(&mut col, self.cfg.r[k])
                        };
                        log2_term(&self.cfg, k, log2_sum)
                    })
                    .collect();
                (i, log2_sum_exp2(&terms))
            })
            .collect()
    }
}

impl OnlineScheduler for VsanyUScheduler {
    fn name(&self) -> &'static str {
        "vsany-u"
    }

    fn step(&mut self, job: &JobLoad) -> Result<usize> {
        let index = self.jobs_seen;
        let normalized;
        let job = match (&self.targets, job) {
            (Some(t), JobLoad::Unrelated(_)) => {
                normalized = normalize_target_job(job, t, index)?;
                &normalized
            }
            (Some(_), JobLoad::Identical(_)) => {
                return Err(Error::InvalidInstance(
                    "target normalisation needs unrelated machines".into(),
                ))
            }
            (None, _) => job,
        };
        if job.dims() != self.cfg.dims() {
            return Err(Error::InvalidInstance(format!(
                "expected {} dimensions, got {}",
                self.cfg.dims(),
                job.dims()
            )));
        }
        let scores = self.candidate_scores(job);
        let i =
            argmin_by_score(scores.iter().copied()).ok_or(Error::AllForbidden { job: index })?;
        let score = scores
            .iter()
            .find(|(c, _)| *c == i)
            .map(|(_, s)| *s)
            .expect("chosen");
        self.loads.add(i, &job.row(i).expect("eligible"));
        self.assignment.push(i, crate::model::Pool::None);
        self.trace.push(score);
        self.jobs_seen += 1;
        Ok(i)
    }

    fn snapshot(&self) -> Schedule {
        Schedule {
            assignment: self.assignment.clone(),
            loads: self.loads.clone(),
            pools: None,
        }
    }

    fn invariants(&self) -> Vec<InvariantCheck> {
        let cert = vsany_certificate(&self.loads, &self.cfg);
        vec![
            InvariantCheck::new(
                "potential_certificate",
                cert.potential_holds,
                format!(
                    "log2((2-e^0.5) Phi) = {} <= log2 d = {}",
                    cert.lhs_log2, cert.rhs_log2
                ),
            ),
            InvariantCheck::new(
                "norm_bound",
                cert.norms_hold,
                format!("L_k / (20 q_k) max = {}", cert.worst_norm_ratio),
            ),
        ]
    }
}

/// Final guarantees of the greedy on target-normalised loads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VsanyCertificate {
    /// `log2((2 - e^(1/2)) sum_k alpha_k L_k^q_k)`.
    pub lhs_log2: f64,
    /// `log2 d`.
    pub rhs_log2: f64,
    pub potential_holds: bool,
    /// `L_k` per dimension, measured with the potential's exponent.
    pub norms: Vec<f64>,
    /// `max_k L_k / (20 q_k)`.
    pub worst_norm_ratio: f64,
    pub norms_hold: bool,
}

pub fn vsany_certificate(loads: &LoadMatrix, cfg: &VsanyPotentialConfig) -> VsanyCertificate {
    let d = cfg.dims();
    let lhs_log2 = (2.0 - 0.5f64.exp()).log2() + log2_potential(loads, cfg);
    let rhs_log2 = (d as f64).log2();
    let norms: Vec<f64> = (0..d)
        .map(|k| norm_of(&loads.column(k), Norm::Lr(cfg.r[k])))
        .collect();
    let worst_norm_ratio = norms
        .iter()
        .zip(&cfg.q)
        .map(|(l, q)| l / (20.0 * q))
        .fold(0.0, f64::max);
    VsanyCertificate {
        lhs_log2,
        rhs_log2,
        potential_holds: lhs_log2 <= rhs_log2,
        norms,
        worst_norm_ratio,
        norms_hold: worst_norm_ratio <= 1.0,
    }
}

/// Streams an already target-normalised unrelated instance through the greedy.
pub fn vsany_u_greedy(instance: &Instance, spec: &NormSpec) -> Result<(Schedule, VsanyUScheduler)> {
    let mut s = VsanyUScheduler::new(instance.m, spec)?;
    let schedule = super::run_stream(&mut s, instance)?;
    Ok((schedule, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Entry;

    fn unrelated_job(rows: &[&[f64]]) -> Vec<Vec<Entry>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| Entry::Load(x)).collect())
            .collect()
    }

    #[test]
    fn config_weights() {
        let spec = NormSpec::uniform(Norm::Lr(2.0), 4, 4).unwrap();
        let cfg = VsanyPotentialConfig::new(&spec, 4).unwrap();
        assert_eq!(cfg.q, vec![4.0; 4]);
        assert_eq!(cfg.log2_alpha[0], -4.0 * 12f64.log2());
    }

    #[test]
    fn symmetric_first_job_goes_to_machine_zero() {
        let spec = NormSpec::uniform(Norm::Lr(1.0), 2, 2).unwrap();
        let inst =
            Instance::unrelated(2, 2, vec![unrelated_job(&[&[1.0, 0.5], &[1.0, 0.5]])]).unwrap();
        let (sched, _) = vsany_u_greedy(&inst, &spec).unwrap();
        assert_eq!(sched.assignment.machines, vec![0]);
    }

    #[test]
    fn smaller_increase_wins() {
        let spec = NormSpec::uniform(Norm::Lr(1.0), 1, 2).unwrap();
        let inst = Instance::unrelated(2, 1, vec![unrelated_job(&[&[2.0], &[1.0]])]).unwrap();
        let (sched, _) = vsany_u_greedy(&inst, &spec).unwrap();
        assert_eq!(sched.assignment.machines, vec![1]);
    }

    #[test]
    fn forbidden_machines_are_skipped() {
        let spec = NormSpec::uniform(Norm::Lr(1.0), 1, 2).unwrap();
        let job = vec![vec![Entry::Forbidden], vec![Entry::Load(5.0)]];
        let inst = Instance::unrelated(2, 1, vec![job]).unwrap();
        let (sched, _) = vsany_u_greedy(&inst, &spec).unwrap();
        assert_eq!(sched.assignment.machines, vec![1]);
    }

    #[test]
    fn log_space_survives_huge_q() {
        // q = 140: alpha_k = 420^-140 underflows binary64, its log does not.
        let cfg = VsanyPotentialConfig {
            r: vec![64.0; 64],
            q: vec![140.0; 64],
            log2_alpha: vec![-140.0 * 420f64.log2(); 64],
        };
        assert_eq!(cfg.log2_alpha[0].exp2(), 0.0);
        let mut lm = LoadMatrix::zeros(2, 64);
        lm.add_entry(0, 3, 1.0);
        let p = log2_potential(&lm, &cfg);
        assert!((p - cfg.log2_alpha[3]).abs() < 1e-9);
    }

    #[test]
    fn empty_schedule_certificate_is_trivial() {
        let spec = NormSpec::uniform(Norm::Lr(1.0), 2, 2).unwrap();
        let cfg = VsanyPotentialConfig::new(&spec, 2).unwrap();
        let cert = vsany_certificate(&LoadMatrix::zeros(2, 2), &cfg);
        assert!(cert.potential_holds && cert.norms_hold);
    }
}
