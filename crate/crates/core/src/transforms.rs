//! Online instance transformations for the identical-machines algorithms and
//! target normalisation for unrelated machines.
//!
//! Every transformation acts on one job at a time given a-priori metadata
//! (the volume vector `V` and the largest load `T`), so the streaming
//! schedulers and the batch functions share the same arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Entry, Instance, JobLoad, MachineModel, NormSpec};

/// Relative slack allowed on the upper bounds in [`check_properties`].
pub const PROPERTY_SLACK: f64 = 1e-12;

/// A-priori knowledge the identical-machines algorithms start from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumePrior {
    pub m: usize,
    pub volume: Vec<f64>,
    pub max_load: f64,
}

impl VolumePrior {
    pub fn from_instance(instance: &Instance) -> Result<Self> {
        require_identical(instance)?;
        let mut inst = instance.clone();
        if inst.volume.is_none() || inst.max_load.is_none() {
            inst.refresh_metadata();
        }
        Ok(VolumePrior {
            m: inst.m,
            volume: inst.volume.unwrap_or_default(),
            max_load: inst.max_load.unwrap_or(0.0),
        })
    }

    /// `V_k / m`, the per-machine share of dimension `k`.
    pub fn share(&self, k: usize) -> f64 {
        self.volume[k] / self.m as f64
    }

    /// Whether the largest job dominates the per-machine share of `k`.
    pub fn is_capped(&self, k: usize) -> bool {
        self.volume[k] > 0.0 && self.max_load >= self.share(k)
    }

    /// Volume normalisation of one job vector. Zero-volume dimensions stay as they are.
    pub fn normalize(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(k, &x)| {
                if self.volume[k] > 0.0 {
                    x / self.share(k)
                } else {
                    x
                }
            })
            .collect()
    }

    /// The three VSMAX-I transformations applied to one raw job vector.
    pub fn vsmax_job(&self, p: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                if self.volume[k] == 0.0 {
                    x
                } else if self.is_capped(k) {
                    x / self.max_load
                } else {
                    x / self.share(k)
                }
            })
            .collect();
        floor_vector(&scaled)
    }

    /// Volume normalisation followed by clipping at one; returns
    /// `(normalised, clipped)`.
    pub fn vsall_job(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let normalized = self.normalize(p);
        let clipped = normalized.iter().map(|&x| x.min(1.0)).collect();
        (normalized, clipped)
    }
}

fn require_identical(instance: &Instance) -> Result<()> {
    if instance.model != MachineModel::Identical {
        return Err(Error::InvalidInstance(
            "transformation needs identical machines".into(),
        ));
    }
    Ok(())
}

fn map_identical(instance: &Instance, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Instance> {
    let jobs = instance.identical_jobs()?.into_iter().map(f).collect();
    Instance::identical(instance.m, instance.d, jobs)
}

/// Raises every entry to at least `(1/d) * max_k p(k)`.
fn floor_vector(p: &[f64]) -> Vec<f64> {
    let floor = p.iter().copied().fold(0.0, f64::max) / p.len() as f64;
    p.iter().map(|&x| x.max(floor)).collect()
}

/// Divides dimension `k` by `V_k / m`.
pub fn normalize_volume(instance: &Instance) -> Result<Instance> {
    let prior = VolumePrior::from_instance(instance)?;
    map_identical(instance, |p| prior.normalize(p))
}

/// Renormalises every dimension with `T >= V_k/m` by `T` instead of `V_k/m`.
///
/// `normalized` is the output of [`normalize_volume`]; `prior` describes the
/// original instance. A zero `T` leaves everything untouched.
pub fn cap_by_max_job(normalized: &Instance, prior: &VolumePrior) -> Result<Instance> {
    if prior.max_load == 0.0 {
        return Ok(normalized.clone());
    }
    map_identical(normalized, |p| {
        p.iter()
            .enumerate()
            .map(|(k, &x)| {
                if prior.is_capped(k) {
                    x * (prior.share(k) / prior.max_load)
                } else {
                    x
                }
            })
            .collect()
    })
}

/// Raises small entries to `(1/d) * max_k' p_j(k')`.
pub fn floor_small_loads(instance: &Instance) -> Result<Instance> {
    map_identical(instance, floor_vector)
}

/// Clips entries above one; `large[j][k]` marks the clipped entries.
pub fn clip_to_one(instance: &Instance) -> Result<(Instance, Vec<Vec<bool>>)> {
    let jobs = instance.identical_jobs()?;
    let large = jobs
        .iter()
        .map(|p| p.iter().map(|&x| x > 1.0).collect())
        .collect();
    let clipped = map_identical(instance, |p| p.iter().map(|&x| x.min(1.0)).collect())?;
    Ok((clipped, large))
}

/// Transformations 1-3 in sequence, from the original instance's metadata.
pub fn vsmax_pipeline(instance: &Instance) -> Result<Instance> {
    let prior = VolumePrior::from_instance(instance)?;
    map_identical(instance, |p| prior.vsmax_job(p))
}

/// Divides each finite entry by its dimension's target. With a zero target,
/// any machine that would receive positive load in that dimension becomes
/// forbidden for the job.
pub fn normalize_target_job(job: &JobLoad, targets: &[f64], index: usize) -> Result<JobLoad> {
    let JobLoad::Unrelated(rows) = job else {
        return Err(Error::InvalidInstance(
            "target normalisation needs unrelated machines".into(),
        ));
    };
    let rows: Vec<Vec<Entry>> = rows
        .iter()
        .map(|row| {
            let blocked = row
                .iter()
                .zip(targets)
                .any(|(e, &t)| t == 0.0 && matches!(e, Entry::Load(x) if *x > 0.0));
            if blocked {
                return vec![Entry::Forbidden; row.len()];
            }
            row.iter()
                .zip(targets)
                .map(|(e, &t)| match *e {
                    Entry::Load(x) if t > 0.0 => Entry::Load(x / t),
                    other => other,
                })
                .collect()
        })
        .collect();
    let machines = rows.len();
    let out = JobLoad::Unrelated(rows);
    if out.eligible_machines(machines).is_empty() {
        return Err(Error::AllForbidden { job: index });
    }
    Ok(out)
}

pub fn normalize_targets(instance: &Instance, spec: &NormSpec) -> Result<Instance> {
    if spec.dims() != instance.d {
        return Err(Error::InvalidNorm(format!(
            "norm spec has {} dimensions, instance has {}",
            spec.dims(),
            instance.d
        )));
    }
    let jobs = instance
        .jobs
        .iter()
        .enumerate()
        .map(|(j, job)| normalize_target_job(job, &spec.targets, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance {
        jobs,
        ..instance.clone()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropertySet {
    /// Column sums at most `2m`, entries in `[0, 1]`, entries within a factor `d` of the job's max.
    VsmaxI,
    /// Column sums at most `m`, entries in `[0, 1]`.
    VsallI,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// `(job, dimension)`; the job is `None` for column-sum properties.
    pub witness: Option<(Option<usize>, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn within(x: f64, bound: f64) -> bool {
    x <= bound + PROPERTY_SLACK * bound.abs().max(1.0)
}

pub fn check_properties(instance: &Instance, which: PropertySet) -> Result<PropertyReport> {
    let jobs = instance.identical_jobs()?;
    let m = instance.m as f64;
    let d = instance.d;

    let sum_bound = match which {
        PropertySet::VsmaxI => 2.0 * m,
        PropertySet::VsallI => m,
    };
    let column_witness = (0..d).find(|&k| !within(jobs.iter().map(|p| p[k]).sum(), sum_bound));
    let mut checks = vec![PropertyCheck {
        name: "column_sum",
        passed: column_witness.is_none(),
        witness: column_witness.map(|k| (None, k)),
    }];

    let range_witness = jobs.iter().enumerate().find_map(|(j, p)| {
        p.iter()
            .position(|&x| !(x >= 0.0 && within(x, 1.0)))
            .map(|k| (Some(j), k))
    });
    checks.push(PropertyCheck {
        name: "unit_range",
        passed: range_witness.is_none(),
        witness: range_witness,
    });

    if which == PropertySet::VsmaxI {
        let spread_witness = jobs.iter().enumerate().find_map(|(j, p)| {
            let max = p.iter().copied().fold(0.0, f64::max);
            let floor = max / d as f64;
            p.iter()
                .position(|&x| x < floor * (1.0 - PROPERTY_SLACK) || x > max)
                .map(|k| (Some(j), k))
        });
        checks.push(PropertyCheck {
            name: "bounded_spread",
            passed: spread_witness.is_none(),
            witness: spread_witness,
        });
    }
    Ok(PropertyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(m: usize, jobs: Vec<Vec<f64>>) -> Instance {
        let d = jobs[0].len();
        Instance::identical(m, d, jobs).unwrap()
    }

    fn loads(i: &Instance) -> Vec<Vec<f64>> {
        i.identical_jobs()
            .unwrap()
            .into_iter()
            .map(<[f64]>::to_vec)
            .collect()
    }

    #[test]
    fn volume_normalisation() {
        // V = 10, m = 5: a load of 4 becomes 2.
        let i = inst(5, vec![vec![4.0, 0.0], vec![6.0, 0.0]]);
        let n = normalize_volume(&i).unwrap();
        assert_eq!(loads(&n), vec![vec![2.0, 0.0], vec![3.0, 0.0]]);
        assert_eq!(n.volume.as_ref().unwrap()[0], 5.0);
        assert_eq!(n.volume.as_ref().unwrap()[1], 0.0);
    }

    #[test]
    fn cap_boundary_and_halving() {
        // m = 2, V = [2, 4], T = 2. Dim 0: share 1 <= T, capped by T. Dim 1: share 2 = T exactly.
        let i = inst(2, vec![vec![1.0, 2.0], vec![1.0, 2.0]]);
        let prior = VolumePrior::from_instance(&i).unwrap();
        let n = normalize_volume(&i).unwrap();
        let c = cap_by_max_job(&n, &prior).unwrap();
        // Dim 1 boundary: unchanged.
        assert_eq!(
            c.jobs[0].as_identical().unwrap()[1],
            n.jobs[0].as_identical().unwrap()[1]
        );
        // Dim 0: T = 2 * share, normalized load 1 -> 0.5.
        assert_eq!(n.jobs[0].as_identical().unwrap()[0], 1.0);
        assert_eq!(c.jobs[0].as_identical().unwrap()[0], 0.5);
        let max = loads(&c).into_iter().flatten().fold(0.0, f64::max);
        assert!(max <= 1.0);
    }

    #[test]
    fn all_zero_instance_is_untouched() {
        let i = inst(3, vec![vec![0.0, 0.0]; 2]);
        let prior = VolumePrior::from_instance(&i).unwrap();
        let n = normalize_volume(&i).unwrap();
        assert_eq!(cap_by_max_job(&n, &prior).unwrap(), n);
        assert_eq!(vsmax_pipeline(&i).unwrap(), i);
    }

    #[test]
    fn floor_examples() {
        let f = floor_small_loads(&inst(1, vec![vec![1.0, 0.0]])).unwrap();
        assert_eq!(loads(&f), vec![vec![1.0, 0.5]]);
        let same = inst(2, vec![vec![0.3, 0.3, 0.3]]);
        assert_eq!(floor_small_loads(&same).unwrap(), same);
    }

    #[test]
    fn clip_flags_large_entries() {
        let (c, large) = clip_to_one(&inst(2, vec![vec![3.5, 0.9]])).unwrap();
        assert_eq!(loads(&c), vec![vec![1.0, 0.9]]);
        assert_eq!(large, vec![vec![true, false]]);
        let small = inst(2, vec![vec![0.2, 1.0]]);
        let (c, large) = clip_to_one(&small).unwrap();
        assert_eq!(c, small);
        assert!(large.iter().flatten().all(|f| !f));
    }

    #[test]
    fn idempotent_floor_and_clip() {
        let i = inst(3, vec![vec![5.0, 0.1, 0.0], vec![0.0, 2.0, 7.0]]);
        let once = floor_small_loads(&i).unwrap();
        assert_eq!(floor_small_loads(&once).unwrap(), once);
        let (c1, _) = clip_to_one(&i).unwrap();
        let (c2, _) = clip_to_one(&c1).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn target_normalisation() {
        let job = |rows: Vec<Vec<Entry>>| JobLoad::Unrelated(rows);
        let j = job(vec![vec![Entry::Load(6.0)], vec![Entry::Forbidden]]);
        let n = normalize_target_job(&j, &[2.0], 0).unwrap();
        assert_eq!(n, job(vec![vec![Entry::Load(3.0)], vec![Entry::Forbidden]]));

        // Zero target: zero-load machine stays eligible, positive-load machine is dropped.
        let j = job(vec![
            vec![Entry::Load(0.0), Entry::Load(1.0)],
            vec![Entry::Load(2.0), Entry::Load(1.0)],
        ]);
        let n = normalize_target_job(&j, &[0.0, 1.0], 0).unwrap();
        assert!(n.is_eligible(0));
        assert!(!n.is_eligible(1));

        let j = job(vec![vec![Entry::Load(1.0)], vec![Entry::Load(2.0)]]);
        assert_eq!(
            normalize_target_job(&j, &[0.0], 4),
            Err(Error::AllForbidden { job: 4 })
        );
    }

    #[test]
    fn planted_violation_and_vacuous_pass() {
        let bad = inst(2, vec![vec![1.5, 0.2]]);
        let r = check_properties(&bad, PropertySet::VsallI).unwrap();
        let c = r.get("unit_range").unwrap();
        assert!(!c.passed);
        assert_eq!(c.witness, Some((Some(0), 0)));

        let empty = Instance::identical(2, 3, vec![]).unwrap();
        assert!(check_properties(&empty, PropertySet::VsmaxI)
            .unwrap()
            .all_passed());
    }
}
