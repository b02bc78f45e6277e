//! Domain types shared by the schedulers, adversaries and oracles.
//!
//! Machines and dimensions are 0-based everywhere. Loads are binary64; the
//! oracles module owns the exact-arithmetic paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One entry of an unrelated-machines load grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Entry {
    Load(f64),
    /// The job can never be placed on this machine.
    Forbidden,
}

impl Entry {
    pub fn finite(self) -> Option<f64> {
        match self {
            Entry::Load(x) => Some(x),
            Entry::Forbidden => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MachineModel {
    Identical,
    Unrelated,
}

/// The load a job puts on the machines, per dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum JobLoad {
    /// Same vector on every machine.
    Identical(Vec<f64>),
    /// Row `i` is the vector on machine `i`.
    Unrelated(Vec<Vec<Entry>>),
}

impl JobLoad {
    pub fn model(&self) -> MachineModel {
        match self {
            JobLoad::Identical(_) => MachineModel::Identical,
            JobLoad::Unrelated(_) => MachineModel::Unrelated,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            JobLoad::Identical(v) => v.len(),
            JobLoad::Unrelated(rows) => rows.first().map_or(0, Vec::len),
        }
    }

    /// A machine is eligible when its row holds no `Forbidden` entry.
    pub fn is_eligible(&self, machine: usize) -> bool {
        match self {
            JobLoad::Identical(_) => true,
            JobLoad::Unrelated(rows) => rows
                .get(machine)
                .is_some_and(|row| row.iter().all(|e| matches!(e, Entry::Load(_)))),
        }
    }

    pub fn eligible_machines(&self, machines: usize) -> Vec<usize> {
        (0..machines).filter(|&i| self.is_eligible(i)).collect()
    }

    /// Load in dimension `k` when placed on `machine`; `None` if forbidden.
    pub fn load(&self, machine: usize, k: usize) -> Option<f64> {
        match self {
            JobLoad::Identical(v) => Some(v[k]),
            JobLoad::Unrelated(rows) => rows[machine][k].finite(),
        }
    }

    /// The whole vector placed on `machine`, or `None` if the machine is not eligible.
    pub fn row(&self, machine: usize) -> Option<Vec<f64>> {
        match self {
            JobLoad::Identical(v) => Some(v.clone()),
            JobLoad::Unrelated(rows) => rows.get(machine)?.iter().map(|e| e.finite()).collect(),
        }
    }

    /// Identical-model vector, if this is one.
    pub fn as_identical(&self) -> Option<&[f64]> {
        match self {
            JobLoad::Identical(v) => Some(v),
            JobLoad::Unrelated(_) => None,
        }
    }

    fn validate(&self, job: usize, m: usize, d: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(format!("job {job}: {msg}")));
        match self {
            JobLoad::Identical(v) => {
                if v.len() != d {
                    return bad(format!("expected {d} dimensions, found {}", v.len()));
                }
                if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                    return bad(format!("load {x} is not a finite nonnegative number"));
                }
            }
            JobLoad::Unrelated(rows) => {
                if rows.len() != m {
                    return bad(format!("expected {m} machine rows, found {}", rows.len()));
                }
                for row in rows {
                    if row.len() != d {
                        return bad(format!("expected {d} dimensions, found {}", row.len()));
                    }
                    for e in row {
                        if let Entry::Load(x) = e {
                            if !(x.is_finite() && *x >= 0.0) {
                                return bad(format!("load {x} is not a finite nonnegative number"));
                            }
                        }
                    }
                }
                if !(0..m).any(|i| self.is_eligible(i)) {
                    return Err(Error::AllForbidden { job });
                }
            }
        }
        Ok(())
    }
}

/// A complete (static) input: machines, dimensions and the ordered job stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub m: usize,
    pub d: usize,
    pub model: MachineModel,
    pub jobs: Vec<JobLoad>,
    /// Per-dimension total volume `V_k` (identical model).
    pub volume: Option<Vec<f64>>,
    /// Largest single load over all jobs and dimensions (identical model).
    pub max_load: Option<f64>,
}

impl Instance {
    /// Builds an identical-machines instance and fills in its volume metadata.
    pub fn identical(m: usize, d: usize, jobs: Vec<Vec<f64>>) -> Result<Self> {
        let jobs = jobs.into_iter().map(JobLoad::Identical).collect();
        let mut inst = Instance {
            m,
            d,
            model: MachineModel::Identical,
            jobs,
            volume: None,
            max_load: None,
        };
        inst.validate_shape()?;
        inst.refresh_metadata();
        Ok(inst)
    }

    pub fn unrelated(m: usize, d: usize, jobs: Vec<Vec<Vec<Entry>>>) -> Result<Self> {
        let jobs = jobs.into_iter().map(JobLoad::Unrelated).collect();
        let inst = Instance {
            m,
            d,
            model: MachineModel::Unrelated,
            jobs,
            volume: None,
            max_load: None,
        };
        inst.validate_shape()?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    /// Recomputes `volume` and `max_load` from the jobs (identical model only).
    pub fn refresh_metadata(&mut self) {
        if self.model != MachineModel::Identical {
            self.volume = None;
            self.max_load = None;
            return;
        }
        let (volume, max_load) =
            volume_and_max(self.d, self.jobs.iter().filter_map(JobLoad::as_identical));
        self.volume = Some(volume);
        self.max_load = Some(max_load);
    }

    /// Identical job vectors in order. Fails on the unrelated model.
    pub fn identical_jobs(&self) -> Result<Vec<&[f64]>> {
        self.jobs
            .iter()
            .map(|j| {
                j.as_identical().ok_or_else(|| {
                    Error::InvalidInstance("expected identical-machines jobs".into())
                })
            })
            .collect()
    }

    fn validate_shape(&self) -> Result<()> {
        if self.m == 0 || self.d == 0 {
            return Err(Error::InvalidInstance(
                "need at least one machine and one dimension".into(),
            ));
        }
        for (j, job) in self.jobs.iter().enumerate() {
            if job.model() != self.model {
                return Err(Error::InvalidInstance(format!(
                    "job {j} does not match the machine model"
                )));
            }
            job.validate(j, self.m, self.d)?;
        }
        Ok(())
    }

    /// Full validation, including that stored metadata matches the jobs bit for bit.
    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if self.model == MachineModel::Identical {
            let (volume, max_load) =
                volume_and_max(self.d, self.jobs.iter().filter_map(JobLoad::as_identical));
            if let Some(v) = &self.volume {
                if v.len() != self.d
                    || v.iter()
                        .zip(&volume)
                        .any(|(a, b)| a.to_bits() != b.to_bits())
                {
                    return Err(Error::InvalidInstance(
                        "volume does not match the jobs".into(),
                    ));
                }
            }
            if let Some(t) = self.max_load {
                if t.to_bits() != max_load.to_bits() {
                    return Err(Error::InvalidInstance(
                        "max_load does not match the jobs".into(),
                    ));
                }
            }
        } else if self.volume.is_some() || self.max_load.is_some() {
            return Err(Error::InvalidInstance(
                "volume metadata is only defined for identical machines".into(),
            ));
        }
        Ok(())
    }
}

fn volume_and_max<'a>(d: usize, jobs: impl Iterator<Item = &'a [f64]>) -> (Vec<f64>, f64) {
    let mut volume = vec![0.0; d];
    let mut max_load = 0.0f64;
    for p in jobs {
        for (v, &x) in volume.iter_mut().zip(p) {
            *v += x;
            max_load = max_load.max(x);
        }
    }
    (volume, max_load)
}

/// Running `m x d` machine loads for a partial assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadMatrix {
    m: usize,
    d: usize,
    loads: Vec<f64>,
    jobs: Vec<usize>,
}

impl LoadMatrix {
    pub fn zeros(m: usize, d: usize) -> Self {
        LoadMatrix {
            m,
            d,
            loads: vec![0.0; m * d],
            jobs: vec![0; m],
        }
    }

    pub fn machines(&self) -> usize {
        self.m
    }

    pub fn dims(&self) -> usize {
        self.d
    }

    pub fn get(&self, machine: usize, k: usize) -> f64 {
        self.loads[machine * self.d + k]
    }

    pub fn row(&self, machine: usize) -> &[f64] {
        &self.loads[machine * self.d..(machine + 1) * self.d]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, k)).collect()
    }

    pub fn job_count(&self, machine: usize) -> usize {
        self.jobs[machine]
    }

    /// Adds one job's vector to `machine`.
    pub fn add(&mut self, machine: usize, load: &[f64]) {
        debug_assert_eq!(load.len(), self.d);
        let row = &mut self.loads[machine * self.d..(machine + 1) * self.d];
        for (x, &p) in row.iter_mut().zip(load) {
            *x += p;
        }
        self.jobs[machine] += 1;
    }

    /// Adds `amount` to a single entry without counting a job.
    pub fn add_entry(&mut self, machine: usize, k: usize, amount: f64) {
        self.loads[machine * self.d + k] += amount;
    }

    /// Records one more job on `machine` whose load was added entrywise.
    pub fn count_job(&mut self, machine: usize) {
        self.jobs[machine] += 1;
    }

    /// All loads, row-major.
    pub fn values(&self) -> &[f64] {
        &self.loads
    }

    pub fn row_max(&self, machine: usize) -> f64 {
        self.row(machine).iter().copied().fold(0.0, f64::max)
    }

    /// Maximum over all machines and dimensions.
    pub fn makespan(&self) -> f64 {
        self.loads.iter().copied().fold(0.0, f64::max)
    }

    /// Elementwise sum of two matrices of the same shape.
    pub fn sum(&self, other: &LoadMatrix) -> LoadMatrix {
        assert_eq!((self.m, self.d), (other.m, other.d));
        LoadMatrix {
            m: self.m,
            d: self.d,
            loads: self
                .loads
                .iter()
                .zip(&other.loads)
                .map(|(a, b)| a + b)
                .collect(),
            jobs: self
                .jobs
                .iter()
                .zip(&other.jobs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Norm applied to the per-machine loads of one dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Norm {
    Lr(f64),
    Makespan,
}

impl Norm {
    pub fn exponent(self) -> Option<f64> {
        match self {
            Norm::Lr(r) => Some(r),
            Norm::Makespan => None,
        }
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Norm::Lr(r) => write!(f, "{r}"),
            Norm::Makespan => f.write_str("inf"),
        }
    }
}

/// Per-dimension objective norms and target values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub norms: Vec<Norm>,
    pub targets: Vec<f64>,
}

impl NormSpec {
    pub fn new(norms: Vec<Norm>, targets: Vec<f64>, m: usize) -> Result<Self> {
        let spec = NormSpec { norms, targets };
        spec.validate(m)?;
        Ok(spec)
    }

    /// Same norm in every dimension, all targets 1.
    pub fn uniform(norm: Norm, d: usize, m: usize) -> Result<Self> {
        Self::new(vec![norm; d], vec![1.0; d], m)
    }

    pub fn dims(&self) -> usize {
        self.norms.len()
    }

    /// Largest admissible finite exponent for `m` machines.
    pub fn max_exponent(m: usize) -> f64 {
        (m as f64).log2().max(1.0)
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.norms.len() != self.targets.len() {
            return Err(Error::InvalidNorm(
                "norms and targets differ in length".into(),
            ));
        }
        let hi = Self::max_exponent(m);
        for n in &self.norms {
            if let Norm::Lr(r) = n {
                if !(r.is_finite() && *r >= 1.0 && *r <= hi + 1e-12) {
                    return Err(Error::InvalidNorm(format!(
                        "exponent {r} outside [1, {hi}]"
                    )));
                }
            }
        }
        if let Some(t) = self.targets.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::InvalidNorm(format!(
                "target {t} is not finite and nonnegative"
            )));
        }
        Ok(())
    }
}

/// Which pool of a two-pool scheduler received a job.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pool {
    Primary,
    Overflow,
    None,
}

/// Per-job machine choice, in arrival order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub machines: Vec<usize>,
    pub pools: Vec<Pool>,
}

impl Assignment {
    pub fn from_machines(machines: Vec<usize>) -> Self {
        let pools = vec![Pool::None; machines.len()];
        Assignment { machines, pools }
    }

    pub fn push(&mut self, machine: usize, pool: Pool) {
        self.machines.push(machine);
        self.pools.push(pool);
    }

    pub fn len(&self) -> usize {
        self.machines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty()
    }
}
