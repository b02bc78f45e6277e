use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::norm_of;
use crate::model::{Assignment, Instance, LoadMatrix, Norm, NormSpec};

/// Largest number of complete assignments [`brute_force_opt`] will consider.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Largest load over all machines and dimensions.
    Makespan,
    /// Norm of one dimension's load vector.
    DimNorm { dim: usize, norm: Norm },
    /// `max_k ||L(k)||_{r_k} / T_k`; at most 1 iff the targets are met.
    TargetRatio(NormSpec),
}

impl Objective {
    fn eval(&self, loads: &LoadMatrix) -> f64 {
        match self {
            Objective::Makespan => loads.makespan(),
            Objective::DimNorm { dim, norm } => norm_of(&loads.column(*dim), *norm),
            Objective::TargetRatio(spec) => (0..loads.dims())
                .map(|k| {
                    let v = norm_of(&loads.column(k), spec.norms[k]);
                    let t = spec.targets[k];
                    if t > 0.0 {
                        v / t
                    } else if v == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max),
        }
    }

    fn validate(&self, d: usize, m: usize) -> Result<()> {
        match self {
            Objective::Makespan => Ok(()),
            Objective::DimNorm { dim, .. } if *dim >= d => Err(Error::BadParams(format!(
                "dimension {dim} out of range for d = {d}"
            ))),
            Objective::DimNorm { .. } => Ok(()),
            Objective::TargetRatio(spec) if spec.dims() != d => Err(Error::BadParams(format!(
                "norm spec has {} dimensions, instance {d}",
                spec.dims()
            ))),
            Objective::TargetRatio(spec) => spec.validate(m),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForce {
    pub value: f64,
    pub assignment: Assignment,
}

struct Dfs<'a> {
    rows: Vec<Vec<(usize, Vec<f64>)>>,
    objective: &'a Objective,
    stack: Vec<LoadMatrix>,
    current: Vec<usize>,
    best: f64,
    best_assignment: Option<Vec<usize>>,
}

impl Dfs<'_> {
    fn visit(&mut self, j: usize) {
        if j == self.rows.len() {
            let v = self.objective.eval(&self.stack[j]);
            if v < self.best || self.best_assignment.is_none() {
                self.best = v;
                self.best_assignment = Some(self.current.clone());
            }
            return;
        }
        for c in 0..self.rows[j].len() {
            let (i, ref row) = self.rows[j][c];
            let mut next = self.stack[j].clone();
            next.add(i, row);
            // Loads only grow, so a partial value above the incumbent cannot improve.
            if self.best_assignment.is_some() && self.objective.eval(&next) > self.best {
                continue;
            }
            self.stack[j + 1] = next;
            self.current.push(i);
            self.visit(j + 1);
            self.current.pop();
        }
    }
}

/// Minimum of `objective` over every assignment, skipping forbidden
/// placements. Machines are tried in increasing order, so among equal values
/// the lexicographically smallest assignment wins.
pub fn brute_force_opt(instance: &Instance, objective: &Objective) -> Result<BruteForce> {
    let (m, d, n) = (instance.m, instance.d, instance.n());
    objective.validate(d, m)?;
    let count = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(format!(
            "{m}^{n} assignments exceed {ENUMERATION_LIMIT}"
        )));
    }
    let rows: Vec<Vec<(usize, Vec<f64>)>> = instance
        .jobs
        .iter()
        .enumerate()
        .map(|(j, job)| {
            let r: Vec<_> = job
                .eligible_machines(m)
                .into_iter()
                .map(|i| (i, job.row(i).expect("eligible")))
                .collect();
            if r.is_empty() {
                Err(Error::AllForbidden { job: j })
            } else {
                Ok(r)
            }
        })
        .collect::<Result<_>>()?;
    let mut dfs = Dfs {
        rows,
        objective,
        stack: vec![LoadMatrix::zeros(m, d); n + 1],
        current: Vec::with_capacity(n),
        best: f64::INFINITY,
        best_assignment: None,
    };
    dfs.visit(0);
    let machines = dfs
        .best_assignment
        .expect("every job has an eligible machine");
    Ok(BruteForce {
        value: dfs.best,
        assignment: Assignment::from_machines(machines),
    })
}

/// Lower bound on the optimal norm of dimension `k` on identical machines:
/// `max(sum_j p_j^r, m (sum_j p_j / m)^r)^(1/r)`; for makespan,
/// `max(max_j p_j, sum_j p_j / m)`.
pub fn opt_lower_bound_lr(instance: &Instance, k: usize, norm: Norm) -> Result<f64> {
    if k >= instance.d {
        return Err(Error::BadParams(format!(
            "dimension {k} out of range for d = {}",
            instance.d
        )));
    }
    let column: Vec<f64> = instance.identical_jobs()?.iter().map(|p| p[k]).collect();
    let m = instance.m as f64;
    let sum: f64 = column.iter().sum();
    Ok(match norm {
        Norm::Makespan => column.iter().copied().fold(sum / m, f64::max),
        Norm::Lr(1.0) => sum,
        Norm::Lr(r) => {
            let per_job = norm_of(&column, norm);
            let spread = m.powf(1.0 / r) * (sum / m);
            per_job.max(spread)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Entry;

    #[test]
    fn single_job_goes_to_machine_zero() {
        let inst = Instance::identical(2, 1, vec![vec![1.0]]).unwrap();
        let b = brute_force_opt(&inst, &Objective::Makespan).unwrap();
        assert_eq!(b.value, 1.0);
        assert_eq!(b.assignment.machines, vec![0]);
    }

    #[test]
    fn two_unit_jobs_split() {
        let inst = Instance::identical(2, 1, vec![vec![1.0], vec![1.0]]).unwrap();
        let b = brute_force_opt(&inst, &Objective::Makespan).unwrap();
        assert_eq!(b.value, 1.0);
        assert_eq!(b.assignment.machines, vec![0, 1]);
    }

    #[test]
    fn forbidden_placements_are_skipped() {
        let jobs = vec![
            vec![vec![Entry::Forbidden], vec![Entry::Load(5.0)]],
            vec![vec![Entry::Load(1.0)], vec![Entry::Load(1.0)]],
        ];
        let inst = Instance::unrelated(2, 1, jobs).unwrap();
        let b = brute_force_opt(&inst, &Objective::Makespan).unwrap();
        assert_eq!((b.value, b.assignment.machines), (5.0, vec![1, 0]));
    }

    #[test]
    fn too_large() {
        let inst = Instance::identical(4, 1, vec![vec![1.0]; 12]).unwrap();
        assert!(matches!(
            brute_force_opt(&inst, &Objective::Makespan),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn lower_bound_examples() {
        let inst = Instance::identical(2, 1, vec![vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(
            opt_lower_bound_lr(&inst, 0, Norm::Lr(2.0)).unwrap(),
            2f64.sqrt()
        );
        assert_eq!(opt_lower_bound_lr(&inst, 0, Norm::Lr(1.0)).unwrap(), 2.0);
        let inst = Instance::identical(3, 1, vec![vec![0.5], vec![2.0], vec![0.25]]).unwrap();
        assert_eq!(opt_lower_bound_lr(&inst, 0, Norm::Makespan).unwrap(), 2.0);
        assert_eq!(opt_lower_bound_lr(&inst, 0, Norm::Lr(1.0)).unwrap(), 2.75);
    }

    #[test]
    fn target_ratio_objective() {
        let inst = Instance::identical(2, 2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let spec = NormSpec::uniform(Norm::Lr(1.0), 2, 2).unwrap();
        let b = brute_force_opt(&inst, &Objective::TargetRatio(spec)).unwrap();
        assert_eq!(b.value, 1.0);
        assert_eq!(b.assignment.machines, vec![0, 0]);
    }
}
