//! Seeded instance generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use serde_json::Value;
use vsched_core::adversaries::{encoding_dims, DEFAULT_DIMS_CAP};
use vsched_core::{norm_of, Entry, Instance, LoadMatrix, Norm, NormSpec};

use crate::error::{HarnessError, Result};
use crate::files::{AdaptiveSpec, InstanceFile};

pub fn rng(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(seed)
}

/// Sparse-ish identical load vectors: each entry is zero with probability
/// `zero_p`, otherwise uniform in `(0, 1]`, occasionally scaled up by 10 to
/// produce jobs that dominate their dimension.
pub fn random_identical_jobs(r: &mut impl Rng, d: usize, n: usize, zero_p: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let heavy = r.gen_bool(0.05);
            (0..d)
                .map(|_| {
                    if r.gen_bool(zero_p) {
                        0.0
                    } else {
                        let x = 1.0 - r.gen::<f64>();
                        if heavy {
                            10.0 * x
                        } else {
                            x
                        }
                    }
                })
                .collect()
        })
        .collect()
}

pub fn random_identical(m: usize, d: usize, n: usize, seed: u64) -> Result<Instance> {
    check_dims(m, d)?;
    let jobs = random_identical_jobs(&mut rng(seed), d, n, 0.3);
    Ok(Instance::identical(m, d, jobs)?)
}

/// Unrelated jobs: each machine row is forbidden with probability
/// `forbid_p` (at least one row always stays eligible), entries uniform in
/// `(0, 1]`.
pub fn random_unrelated(
    m: usize,
    d: usize,
    n: usize,
    forbid_p: f64,
    seed: u64,
) -> Result<Instance> {
    check_dims(m, d)?;
    let mut r = rng(seed);
    let jobs = (0..n)
        .map(|_| {
            let keep = r.gen_range(0..m);
            (0..m)
                .map(|i| {
                    if i != keep && r.gen_bool(forbid_p) {
                        vec![Entry::Forbidden; d]
                    } else {
                        (0..d).map(|_| Entry::Load(1.0 - r.gen::<f64>())).collect()
                    }
                })
                .collect()
        })
        .collect();
    Ok(Instance::unrelated(m, d, jobs)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Planted {
    pub instance: Instance,
    pub spec: NormSpec,
    /// The hidden assignment whose norms define the targets.
    pub assignment: Vec<usize>,
}

/// Exponents `{1, 2, log2 m}` restricted to the valid range `[1, max(1, log2 m)]`.
pub fn planted_exponents(m: usize) -> Vec<f64> {
    let top = NormSpec::max_exponent(m);
    let mut out: Vec<f64> = vec![1.0, 2.0, (m as f64).log2()]
        .into_iter()
        .filter(|r| *r >= 1.0 && *r <= top)
        .collect();
    out.dedup();
    out
}

/// Unrelated instance with a hidden assignment; targets are that
/// assignment's per-dimension norms, so the normalised optimum is at most 1.
pub fn planted_feasible(m: usize, d: usize, n: usize, seed: u64) -> Result<Planted> {
    check_dims(m, d)?;
    if n == 0 {
        return Err(HarnessError::BadParams(
            "planted-feasible needs n >= 1".into(),
        ));
    }
    let mut r = rng(seed);
    let exps = planted_exponents(m);
    let norms: Vec<Norm> = (0..d)
        .map(|_| Norm::Lr(*exps.choose(&mut r).expect("non-empty")))
        .collect();
    let assignment: Vec<usize> = (0..n).map(|_| r.gen_range(0..m)).collect();
    let jobs: Vec<Vec<Vec<Entry>>> = assignment
        .iter()
        .map(|&hidden| {
            (0..m)
                .map(|i| {
                    if i != hidden && r.gen_bool(0.25) {
                        vec![Entry::Forbidden; d]
                    } else {
                        (0..d).map(|_| Entry::Load(1.0 - r.gen::<f64>())).collect()
                    }
                })
                .collect()
        })
        .collect();
    let instance = Instance::unrelated(m, d, jobs)?;
    let mut loads = LoadMatrix::zeros(m, d);
    for (job, &i) in instance.jobs.iter().zip(&assignment) {
        loads.add(i, &job.row(i).expect("hidden machine is eligible"));
    }
    let targets = (0..d)
        .map(|k| norm_of(&loads.column(k), norms[k]))
        .collect();
    let spec = NormSpec::new(norms, targets, m)?;
    Ok(Planted {
        instance,
        spec,
        assignment,
    })
}

/// Builds an instance file of the named kind. `params` holds the
/// kind-specific integers (`m`, `d`, `n` or `h`).
pub fn gen_file(kind: &str, params: &BTreeMap<String, usize>, seed: u64) -> Result<InstanceFile> {
    let get = |name: &str| {
        params
            .get(name)
            .copied()
            .ok_or_else(|| HarnessError::BadParams(format!("{kind} needs parameter {name}")))
    };
    match kind {
        "random-identical" => Ok(InstanceFile::from_instance(&random_identical(
            get("m")?,
            get("d")?,
            get("n")?,
            seed,
        )?)),
        "random-unrelated" => Ok(InstanceFile::from_instance(&random_unrelated(
            get("m")?,
            get("d")?,
            get("n")?,
            0.25,
            seed,
        )?)),
        "planted-feasible" => {
            let p = planted_feasible(get("m")?, get("d")?, get("n")?, seed)?;
            let mut f = InstanceFile::from_instance(&p.instance).with_spec(&p.spec);
            f.planted = Some(p.assignment);
            Ok(f)
        }
        "clique-encode" => {
            let m = get("m")?;
            let d = encoding_dims(m, DEFAULT_DIMS_CAP)?;
            let spec = AdaptiveSpec {
                kind: kind.into(),
                params: [("m".to_string(), Value::from(m))].into(),
            };
            Ok(InstanceFile::adaptive("identical", m, d, spec))
        }
        "pairing-lb" => {
            let h = get("h")?;
            if !(1..=20).contains(&h) {
                return Err(HarnessError::BadParams(format!(
                    "h = {h} must be in 1..=20"
                )));
            }
            let m = 1usize << h;
            let spec = AdaptiveSpec {
                kind: kind.into(),
                params: [("h".to_string(), Value::from(h))].into(),
            };
            let targets = NormSpec::uniform(Norm::Lr(1.0), m, m)?;
            Ok(InstanceFile::adaptive("unrelated", m, m, spec).with_spec(&targets))
        }
        other => Err(HarnessError::BadParams(format!(
            "unknown generator kind {other:?}"
        ))),
    }
}

fn check_dims(m: usize, d: usize) -> Result<()> {
    if m == 0 || d == 0 {
        return Err(HarnessError::BadParams(format!(
            "m = {m} and d = {d} must be positive"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_targets_match_hidden_norms() {
        let p = planted_feasible(3, 2, 10, 4).unwrap();
        let mut loads = LoadMatrix::zeros(3, 2);
        for (job, &i) in p.instance.jobs.iter().zip(&p.assignment) {
            loads.add(i, &job.row(i).unwrap());
        }
        for k in 0..2 {
            assert_eq!(
                p.spec.targets[k],
                norm_of(&loads.column(k), p.spec.norms[k])
            );
        }
    }

    #[test]
    fn exponents_respect_range() {
        assert_eq!(planted_exponents(1), vec![1.0]);
        assert_eq!(planted_exponents(2), vec![1.0]);
        assert_eq!(planted_exponents(4), vec![1.0, 2.0]);
        assert_eq!(planted_exponents(16), vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn pairing_file_echoes_parameters() {
        let f = gen_file("pairing-lb", &[("h".to_string(), 3)].into(), 0).unwrap();
        assert_eq!((f.m, f.d), (8, 8));
        assert_eq!(f.adaptive.unwrap().param_usize("h").unwrap(), 3);
    }

    #[test]
    fn same_seed_same_bytes() {
        let params: BTreeMap<String, usize> = [
            ("m".to_string(), 3),
            ("d".to_string(), 2),
            ("n".to_string(), 10),
        ]
        .into();
        let a = gen_file("planted-feasible", &params, 9)
            .unwrap()
            .to_json()
            .unwrap();
        let b = gen_file("planted-feasible", &params, 9)
            .unwrap()
            .to_json()
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            random_identical(4, 3, 20, 1).unwrap(),
            random_identical(4, 3, 20, 1).unwrap()
        );
        assert_ne!(
            random_identical(4, 3, 20, 1).unwrap(),
            random_identical(4, 3, 20, 2).unwrap()
        );
    }
}
