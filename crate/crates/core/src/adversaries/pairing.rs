//! Pairing adversary for per-dimension norm targets on unrelated machines.
//!
//! `m = d = 2^h` and machine `i` is tied to dimension `i`. Each phase pairs
//! the active machines in ascending order and issues one job per pair that
//! costs 1 in its own dimension on either machine of the pair and is forbidden
//! elsewhere. The machine that takes the job stays active. After `h` phases a
//! final unit job goes to the last active machine, which ends with load
//! `h + 1` in its own dimension; reversing every pairing decision gives load
//! at most 1 everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{load_matrix, norm_of};
use crate::model::{Assignment, Entry, Instance, JobLoad, LoadMatrix, Norm};
use crate::schedulers::OnlineScheduler;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingRun {
    pub h: usize,
    pub instance: Instance,
    pub algorithm: Assignment,
    pub algorithm_loads: LoadMatrix,
    pub reverse: Assignment,
    pub reverse_loads: LoadMatrix,
    /// Active machines at the start of each phase, final phase included.
    pub active: Vec<Vec<usize>>,
    /// The last active machine, whose dimension carries load `h + 1`.
    pub witness: usize,
    /// Set when the witness norm exponent exceeds `h`; that case needs a
    /// different construction which is not provided here.
    pub fallback_needed: bool,
}

impl PairingRun {
    /// Norm of dimension `k` under the scheduler and under the reverse assignment.
    pub fn norms(&self, k: usize, norm: Norm) -> (f64, f64) {
        (
            norm_of(&self.algorithm_loads.column(k), norm),
            norm_of(&self.reverse_loads.column(k), norm),
        )
    }
}

fn pair_job(m: usize, a: usize, b: usize) -> Vec<Vec<Entry>> {
    (0..m)
        .map(|i| {
            if i == a || i == b {
                (0..m)
                    .map(|k| Entry::Load(if k == i { 1.0 } else { 0.0 }))
                    .collect()
            } else {
                vec![Entry::Forbidden; m]
            }
        })
        .collect()
}

/// Drives `scheduler` through the construction. `witness_exponent` is the
/// norm exponent of the witness dimension (1 when targets are all L1).
pub fn vsany_u_pairing_adversary(
    h: usize,
    scheduler: &mut dyn OnlineScheduler,
    witness_exponent: f64,
) -> Result<PairingRun> {
    if !(1..=20).contains(&h) {
        return Err(Error::BadParams(format!("h = {h} must be in 1..=20")));
    }
    let m = 1usize << h;
    let mut jobs = Vec::new();
    let mut chosen = Vec::new();
    let mut reverse = Vec::new();
    let mut active: Vec<usize> = (0..m).collect();
    let mut history = Vec::new();
    for _ in 0..h {
        history.push(active.clone());
        let mut next = Vec::with_capacity(active.len() / 2);
        for pair in active.chunks(2) {
            let (a, b) = (pair[0], pair[1]);
            let job = pair_job(m, a, b);
            let i = scheduler.step(&JobLoad::Unrelated(job.clone()))?;
            if i != a && i != b {
                return Err(Error::AssignedForbidden {
                    job: jobs.len(),
                    machine: i,
                });
            }
            jobs.push(job);
            chosen.push(i);
            reverse.push(if i == a { b } else { a });
            next.push(i);
        }
        active = next;
    }
    history.push(active.clone());
    let last = active[0];
    let final_job: Vec<Vec<Entry>> = (0..m)
        .map(|i| {
            if i == last {
                (0..m)
                    .map(|k| Entry::Load(if k == last { 1.0 } else { 0.0 }))
                    .collect()
            } else {
                vec![Entry::Forbidden; m]
            }
        })
        .collect();
    let i = scheduler.step(&JobLoad::Unrelated(final_job.clone()))?;
    if i != last {
        return Err(Error::AssignedForbidden {
            job: jobs.len(),
            machine: i,
        });
    }
    jobs.push(final_job);
    chosen.push(last);
    reverse.push(last);

    let instance = Instance::unrelated(m, m, jobs)?;
    let algorithm = Assignment::from_machines(chosen);
    let reverse = Assignment::from_machines(reverse);
    let algorithm_loads = load_matrix(&instance, &algorithm)?;
    let reverse_loads = load_matrix(&instance, &reverse)?;
    Ok(PairingRun {
        h,
        instance,
        algorithm,
        algorithm_loads,
        reverse,
        reverse_loads,
        active: history,
        witness: last,
        fallback_needed: witness_exponent > h as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NormSpec;
    use crate::schedulers::{GreedyMakespan, VsanyUScheduler};

    #[test]
    fn h1_ratio_two() {
        let mut g = GreedyMakespan::new(2, 2);
        let run = vsany_u_pairing_adversary(1, &mut g, 1.0).unwrap();
        assert_eq!(run.instance.n(), 2);
        let (alg, rev) = run.norms(run.witness, Norm::Lr(1.0));
        assert_eq!((alg, rev), (2.0, 1.0));
        assert!(!run.fallback_needed);
    }

    #[test]
    fn h3_vsany() {
        let spec = NormSpec::uniform(Norm::Lr(1.0), 8, 8).unwrap();
        let mut s = VsanyUScheduler::new(8, &spec).unwrap();
        let run = vsany_u_pairing_adversary(3, &mut s, 1.0).unwrap();
        assert_eq!(run.algorithm_loads.get(run.witness, run.witness), 4.0);
        for k in 0..8 {
            assert_eq!(run.reverse_loads.makespan(), 1.0);
            let col = run.algorithm_loads.column(k);
            assert!(col.iter().enumerate().all(|(i, &x)| i == k || x == 0.0));
        }
        let sizes: Vec<usize> = run.active.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![8, 4, 2, 1]);
    }

    #[test]
    fn fallback_is_reported() {
        let mut g = GreedyMakespan::new(2, 2);
        assert!(
            vsany_u_pairing_adversary(1, &mut g, 2.0)
                .unwrap()
                .fallback_needed
        );
    }
}
