//! JSON instance files.
//!
//! ```json
//! {"model": "unrelated", "m": 2, "d": 1,
//!  "jobs": [[[0.5], ["inf"]]], "targets": [1.0], "norms": [2.0]}
//! ```
//!
//! Forbidden entries and the makespan norm are both written as `"inf"`.
//! Adaptive adversaries have no static job list; they are stored by name
//! and parameters under `adaptive`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vsched_core::{Entry, Instance, JobLoad, MachineModel, Norm, NormSpec};

use crate::error::{HarnessError, Result};

const INF: &str = "inf";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl AdaptiveSpec {
    pub fn param_usize(&self, name: &str) -> Result<usize> {
        self.params
            .get(name)
            .and_then(Value::as_u64)
            .map(|x| x as usize)
            .ok_or_else(|| {
                HarnessError::BadParams(format!("{} needs integer parameter {name:?}", self.kind))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub model: String,
    pub m: usize,
    pub d: usize,
    #[serde(default)]
    pub jobs: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_load: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norms: Option<Vec<Value>>,
    /// Hidden assignment of a planted instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveSpec>,
}

fn entry_value(e: Entry) -> Value {
    match e {
        Entry::Load(x) => Value::from(x),
        Entry::Forbidden => Value::from(INF),
    }
}

fn parse_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| HarnessError::Schema(format!("{what}: expected a number, got {v}")))
}

fn parse_entry(v: &Value) -> Result<Entry> {
    match v {
        Value::String(s) if s == INF => Ok(Entry::Forbidden),
        other => Ok(Entry::Load(parse_f64(other, "unrelated entry")?)),
    }
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| HarnessError::Schema(format!("{what}: expected an array")))
}

pub fn norm_value(n: Norm) -> Value {
    match n {
        Norm::Lr(r) => Value::from(r),
        Norm::Makespan => Value::from(INF),
    }
}

pub fn parse_norm(v: &Value) -> Result<Norm> {
    match v {
        Value::String(s) if s == INF => Ok(Norm::Makespan),
        other => Ok(Norm::Lr(parse_f64(other, "norm")?)),
    }
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance) -> Self {
        let jobs = Value::Array(
            instance
                .jobs
                .iter()
                .map(|j| match j {
                    JobLoad::Identical(p) => Value::from(p.clone()),
                    JobLoad::Unrelated(rows) => Value::Array(
                        rows.iter()
                            .map(|row| Value::Array(row.iter().map(|e| entry_value(*e)).collect()))
                            .collect(),
                    ),
                })
                .collect(),
        );
        InstanceFile {
            model: match instance.model {
                MachineModel::Identical => "identical",
                MachineModel::Unrelated => "unrelated",
            }
            .into(),
            m: instance.m,
            d: instance.d,
            jobs,
            volume: instance.volume.clone(),
            max_load: instance.max_load,
            targets: None,
            norms: None,
            planted: None,
            adaptive: None,
        }
    }

    pub fn adaptive(model: &str, m: usize, d: usize, spec: AdaptiveSpec) -> Self {
        InstanceFile {
            model: model.into(),
            m,
            d,
            jobs: Value::Array(Vec::new()),
            volume: None,
            max_load: None,
            targets: None,
            norms: None,
            planted: None,
            adaptive: Some(spec),
        }
    }

    pub fn with_spec(mut self, spec: &NormSpec) -> Self {
        self.targets = Some(spec.targets.clone());
        self.norms = Some(spec.norms.iter().map(|n| norm_value(*n)).collect());
        self
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let jobs = array(&self.jobs, "jobs")?;
        let mut inst = match self.model.as_str() {
            "identical" => {
                let jobs = jobs
                    .iter()
                    .map(|j| {
                        array(j, "identical job")?
                            .iter()
                            .map(|x| parse_f64(x, "load"))
                            .collect()
                    })
                    .collect::<Result<Vec<Vec<f64>>>>()?;
                Instance::identical(self.m, self.d, jobs)?
            }
            "unrelated" => {
                let jobs = jobs
                    .iter()
                    .map(|j| {
                        array(j, "unrelated job")?
                            .iter()
                            .map(|row| array(row, "machine row")?.iter().map(parse_entry).collect())
                            .collect()
                    })
                    .collect::<Result<Vec<Vec<Vec<Entry>>>>>()?;
                Instance::unrelated(self.m, self.d, jobs)?
            }
            other => return Err(HarnessError::Schema(format!("unknown model {other:?}"))),
        };
        if self.volume.is_some() || self.max_load.is_some() {
            inst.volume = self.volume.clone();
            inst.max_load = self.max_load;
            inst.validate()?;
        }
        Ok(inst)
    }

    /// Norm targets, when the file carries them; a missing `norms` list means L1.
    pub fn norm_spec(&self) -> Result<Option<NormSpec>> {
        let Some(targets) = &self.targets else {
            return Ok(None);
        };
        let norms = match &self.norms {
            Some(ns) => ns.iter().map(parse_norm).collect::<Result<Vec<_>>>()?,
            None => vec![Norm::Lr(1.0); targets.len()],
        };
        Ok(Some(NormSpec::new(norms, targets.clone(), self.m)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forbidden_is_inf() {
        let inst = Instance::unrelated(
            2,
            1,
            vec![vec![vec![Entry::Load(0.5)], vec![Entry::Forbidden]]],
        )
        .unwrap();
        let f = InstanceFile::from_instance(&inst);
        let json = serde_json::to_string(&f.jobs).unwrap();
        assert_eq!(json, r#"[[[0.5],["inf"]]]"#);
        assert_eq!(
            InstanceFile::from_json(&f.to_json().unwrap())
                .unwrap()
                .to_instance()
                .unwrap(),
            inst
        );
    }

    #[test]
    fn identical_round_trip_is_bit_exact() {
        let jobs = vec![vec![0.1, 1.0 / 3.0, 2e-300], vec![123456.789, 0.0, 5e-324]];
        let inst = Instance::identical(2, 3, jobs).unwrap();
        let back = InstanceFile::from_json(&InstanceFile::from_instance(&inst).to_json().unwrap())
            .unwrap()
            .to_instance()
            .unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn norms_parse() {
        let f: InstanceFile = serde_json::from_str(
            r#"{"model":"unrelated","m":4,"d":2,"jobs":[],"targets":[1.0,2.0],"norms":[2,"inf"]}"#,
        )
        .unwrap();
        let spec = f.norm_spec().unwrap().unwrap();
        assert_eq!(spec.norms, vec![Norm::Lr(2.0), Norm::Makespan]);
    }

    #[test]
    fn bad_metadata_is_rejected() {
        let inst = Instance::identical(2, 1, vec![vec![1.0]]).unwrap();
        let mut f = InstanceFile::from_instance(&inst);
        f.volume = Some(vec![2.0]);
        assert!(f.to_instance().is_err());
    }
}
