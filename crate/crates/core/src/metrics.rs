//! Load accounting and per-dimension norms.

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, LoadMatrix, Norm};

/// Loads induced by the assigned prefix of `instance`'s jobs.
pub fn load_matrix(instance: &Instance, assignment: &Assignment) -> Result<LoadMatrix> {
    if assignment.len() > instance.n() {
        return Err(Error::InvalidInstance(format!(
            "assignment covers {} jobs but the instance has {}",
            assignment.len(),
            instance.n()
        )));
    }
    let mut lm = LoadMatrix::zeros(instance.m, instance.d);
    for (j, (&machine, job)) in assignment.machines.iter().zip(&instance.jobs).enumerate() {
        if machine >= instance.m {
            return Err(Error::MachineOutOfRange {
                machine,
                machines: instance.m,
            });
        }
        let row = job
            .row(machine)
            .ok_or(Error::AssignedForbidden { job: j, machine })?;
        lm.add(machine, &row);
    }
    Ok(lm)
}

/// `(sum_i x_i^r)^(1/r)` over nonnegative entries, or the max for `Makespan`.
///
/// The sum is taken relative to the largest entry so that a vector with a
/// single nonzero entry returns that entry exactly. `r = 1` is a plain sum.
pub fn norm_of(values: &[f64], norm: Norm) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    match norm {
        Norm::Makespan => max,
        Norm::Lr(1.0) => values.iter().sum(),
        Norm::Lr(r) => {
            if max == 0.0 {
                return 0.0;
            }
            let scaled: f64 = values.iter().map(|&x| (x / max).powf(r)).sum();
            max * scaled.powf(1.0 / r)
        }
    }
}

/// Norm of dimension `k`'s machine loads.
pub fn lr_norm(loads: &LoadMatrix, k: usize, norm: Norm) -> Result<f64> {
    if let Norm::Lr(r) = norm {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::InvalidNorm(format!(
                "exponent {r} must be finite and >= 1"
            )));
        }
    }
    if k >= loads.dims() {
        return Err(Error::InvalidInstance(format!(
            "dimension {k} out of range"
        )));
    }
    Ok(norm_of(&loads.column(k), norm))
}

/// Norms for every (dimension, exponent) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct NormTable {
    pub norms: Vec<Norm>,
    /// `values[k][e]` is dimension `k` under `norms[e]`.
    pub values: Vec<Vec<f64>>,
}

pub fn all_norms_report(loads: &LoadMatrix, norms: &[Norm]) -> Result<NormTable> {
    if norms.is_empty() {
        return Err(Error::InvalidNorm("empty exponent set".into()));
    }
    let values = (0..loads.dims())
        .map(|k| {
            norms
                .iter()
                .map(|&n| lr_norm(loads, k, n))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormTable {
        norms: norms.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Entry, Instance};

    fn matrix(columns: &[&[f64]]) -> LoadMatrix {
        let m = columns[0].len();
        let mut lm = LoadMatrix::zeros(m, columns.len());
        for (k, col) in columns.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                lm.add_entry(i, k, x);
            }
        }
        lm
    }

    #[test]
    fn single_insertion() {
        let inst = Instance::identical(2, 2, vec![vec![2.0, 3.0]]).unwrap();
        let lm = load_matrix(&inst, &Assignment::from_machines(vec![0])).unwrap();
        assert_eq!(lm.row(0), &[2.0, 3.0]);
        assert_eq!(lm.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn empty_assignment_is_zero() {
        let inst = Instance::identical(3, 2, vec![vec![1.0, 1.0]]).unwrap();
        let lm = load_matrix(&inst, &Assignment::default()).unwrap();
        assert_eq!(lm.makespan(), 0.0);
    }

    #[test]
    fn additive() {
        let inst = Instance::identical(2, 1, vec![vec![1.0]; 3]).unwrap();
        let lm = load_matrix(&inst, &Assignment::from_machines(vec![0, 0, 0])).unwrap();
        assert_eq!(lm.get(0, 0), 3.0);
        assert_eq!(lm.job_count(0), 3);
    }

    #[test]
    fn forbidden_placement_is_an_error() {
        let inst = Instance::unrelated(
            2,
            1,
            vec![vec![vec![Entry::Forbidden], vec![Entry::Load(1.0)]]],
        )
        .unwrap();
        let err = load_matrix(&inst, &Assignment::from_machines(vec![0])).unwrap_err();
        assert_eq!(err, Error::AssignedForbidden { job: 0, machine: 0 });
        assert!(load_matrix(&inst, &Assignment::from_machines(vec![1])).is_ok());
    }

    #[test]
    fn norm_examples() {
        let lm = matrix(&[&[3.0, 4.0], &[7.0, 2.0]]);
        assert_eq!(lr_norm(&lm, 0, Norm::Lr(2.0)).unwrap(), 5.0);
        assert_eq!(lr_norm(&lm, 1, Norm::Makespan).unwrap(), 7.0);
        let ones = matrix(&[&[1.0, 1.0, 1.0, 1.0]]);
        assert_eq!(lr_norm(&ones, 0, Norm::Lr(1.0)).unwrap(), 4.0);
        assert!(lr_norm(&ones, 0, Norm::Lr(0.5)).is_err());
    }

    #[test]
    fn single_nonzero_entry_is_exact() {
        let lm = matrix(&[&[0.0, 4.0, 0.0]]);
        for r in [1.5, 2.0, 3.0, 7.0] {
            assert_eq!(lr_norm(&lm, 0, Norm::Lr(r)).unwrap(), 4.0);
        }
    }

    #[test]
    fn report_composes_norms() {
        let lm = matrix(&[&[3.0, 4.0]]);
        let t = all_norms_report(&lm, &[Norm::Lr(1.0), Norm::Lr(2.0), Norm::Makespan]).unwrap();
        assert_eq!(t.values, vec![vec![7.0, 5.0, 4.0]]);

        let zero = LoadMatrix::zeros(3, 2);
        let t = all_norms_report(&zero, &[Norm::Lr(2.0), Norm::Makespan]).unwrap();
        assert!(t.values.iter().flatten().all(|&v| v == 0.0));

        let twin = matrix(&[&[1.0, 2.0], &[1.0, 2.0]]);
        let t = all_norms_report(&twin, &[Norm::Lr(3.0)]).unwrap();
        assert_eq!(t.values[0], t.values[1]);

        assert!(all_norms_report(&lm, &[]).is_err());
    }
}
