//! The clique game as a vector scheduling instance on identical machines.
//!
//! With `t = m` colours and `s = sqrt(m)`, dimensions are the `s`-subsets of
//! the `m^2` potential vertices, ranked in colex order. Vertex `v` arrives as a
//! binary job with a 1 in dimension `S` iff `v` is in `S` and the members of
//! `S` seen so far (including `v`) form a clique. The machine the scheduler
//! picks is the bin of `v` in the game.

use serde::{Deserialize, Serialize};

use super::clique::max_mono_clique;
use super::clique_game::{exact_sqrt, CliqueGame, StringSource};
use crate::error::{Error, Result};
use crate::metrics::norm_of;
use crate::model::{JobLoad, LoadMatrix, Norm};
use crate::schedulers::OnlineScheduler;

pub const DEFAULT_DIMS_CAP: u128 = 100_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by i + 1 at every step.
        acc = match acc.checked_mul(n - i) {
            Some(x) => x / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Colex rank of a strictly increasing subset: `sum_i C(c_i, i + 1)`.
pub fn colex_rank(subset: &[usize]) -> usize {
    subset
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(c as u128, i as u128 + 1) as usize)
        .sum()
}

/// All `k`-subsets of `0..n` in colex order, so the `r`-th item has rank `r`.
pub fn colex_subsets(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = (k <= n).then(|| (0..k).collect());
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        // Advance: bump the lowest position that can move, reset the ones below it.
        let c = cur.as_mut().expect("checked above");
        let mut i = 0;
        loop {
            if i == k {
                cur = None;
                break;
            }
            let limit = if i + 1 < k { c[i + 1] } else { n };
            if c[i] + 1 < limit {
                c[i] += 1;
                for (j, x) in c.iter_mut().enumerate().take(i) {
                    *x = j;
                }
                break;
            }
            i += 1;
        }
        Some(out)
    })
}

/// Calls `f(rank, subset)` for every `k`-subset of `0..n` that contains `v`.
fn for_each_subset_containing(n: usize, k: usize, v: usize, mut f: impl FnMut(usize, &[usize])) {
    let others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
    for pick in colex_subsets(others.len(), k - 1) {
        let mut subset: Vec<usize> = pick.iter().map(|&i| others[i]).collect();
        let pos = subset.partition_point(|&u| u < v);
        subset.insert(pos, v);
        f(colex_rank(&subset), &subset);
    }
}

/// Number of dimensions for `m` machines, checked against `cap`.
pub fn encoding_dims(m: usize, cap: u128) -> Result<usize> {
    let s = exact_sqrt(m)?;
    let d = binomial((m * m) as u128, s as u128);
    if d > cap {
        return Err(Error::CapExceeded { dims: d, cap });
    }
    Ok(d as usize)
}

#[derive(Clone, Debug)]
pub struct EncodedRun {
    pub m: usize,
    pub d: usize,
    pub game: CliqueGame,
    /// Dimensions with entry 1, per job.
    pub supports: Vec<Vec<u32>>,
    /// Machine chosen for each job.
    pub machines: Vec<usize>,
    /// Loads induced by the scheduler's choices.
    pub loads: LoadMatrix,
    /// Dimension of the filled slot and the machine holding it.
    pub witness: Option<(usize, usize)>,
}

impl EncodedRun {
    pub fn job(&self, j: usize) -> JobLoad {
        let mut v = vec![0.0; self.d];
        for &k in &self.supports[j] {
            v[k as usize] = 1.0;
        }
        JobLoad::Identical(v)
    }

    /// Loads when every job goes to the machine numbered by its adversary colour.
    pub fn adversary_loads(&self) -> LoadMatrix {
        let mut lm = LoadMatrix::zeros(self.m, self.d);
        for (p, support) in self.game.placements().iter().zip(&self.supports) {
            lm.count_job(p.color);
            for &k in support {
                lm.add_entry(p.color, k as usize, 1.0);
            }
        }
        lm
    }
}

/// Plays the encoded game against `scheduler`, drawing strings from `source`.
pub fn encode_vsmax_adaptive(
    m: usize,
    source: &mut StringSource,
    scheduler: &mut dyn OnlineScheduler,
    dims_cap: u128,
) -> Result<EncodedRun> {
    let d = encoding_dims(m, dims_cap)?;
    let s = exact_sqrt(m)?;
    let n = m * m;
    let mut game = CliqueGame::new(m)?;
    let mut alive = vec![true; d];
    let mut loads = LoadMatrix::zeros(m, d);
    let mut supports = Vec::new();
    let mut machines = Vec::new();
    while !game.halted() {
        let string = source.next_string(m, s).ok_or_else(|| {
            Error::BadParams(format!(
                "string source ran out after {} jobs",
                game.vertex_count()
            ))
        })?;
        let v = game.issue(string)?;
        let g = game.graph();
        let mut support = Vec::new();
        for_each_subset_containing(n, s, v, |rank, subset| {
            let ok = alive[rank] && subset.iter().all(|&u| u >= v || g.has_edge(u, v));
            alive[rank] = ok;
            if ok {
                support.push(rank as u32);
            }
        });
        support.sort_unstable();
        let mut job = vec![0.0; d];
        for &k in &support {
            job[k as usize] = 1.0;
        }
        let i = scheduler.step(&JobLoad::Identical(job))?;
        if i >= m {
            return Err(Error::MachineOutOfRange {
                machine: i,
                machines: m,
            });
        }
        game.place(i)?;
        loads.count_job(i);
        for &k in &support {
            loads.add_entry(i, k as usize, 1.0);
        }
        supports.push(support);
        machines.push(i);
    }
    let witness = game
        .full_slot()
        .map(|(bin, slot)| (colex_rank(game.occupants(bin, slot)), bin));
    Ok(EncodedRun {
        m,
        d,
        game,
        supports,
        machines,
        loads,
        witness,
    })
}

/// Loads rebuilt from the final graph alone: machine `i`, dimension `S` counts
/// the members `v` of `S` placed on `i` whose prefix `{u in S : u <= v}` is a
/// clique.
pub fn recompute_loads(run: &EncodedRun) -> LoadMatrix {
    let s = exact_sqrt(run.m).expect("validated at encode time");
    let arrived = run.machines.len();
    let g = run.game.graph();
    let mut lm = LoadMatrix::zeros(run.m, run.d);
    for &i in &run.machines {
        lm.count_job(i);
    }
    for (rank, subset) in colex_subsets(run.m * run.m, s).enumerate() {
        for (a, &v) in subset.iter().enumerate() {
            if v >= arrived {
                break;
            }
            if g.is_clique(&subset[..=a]) {
                lm.add_entry(run.machines[v], rank, 1.0);
            }
        }
    }
    lm
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub norm: Norm,
    /// Norm of the witness dimension under the scheduler.
    pub algorithm: f64,
    /// Largest monochromatic clique of the adversary colouring.
    pub adversary_clique: usize,
    /// `C * m^(1/(2r))`.
    pub adversary_bound: f64,
    /// Largest per-dimension norm under the adversary colouring.
    pub adversary: f64,
    pub ratio: f64,
}

/// Scheduler versus adversary colouring for each norm.
pub fn lr_ratio_report(run: &EncodedRun, norms: &[Norm]) -> Result<Vec<RatioRow>> {
    let (k, _) = run
        .witness
        .ok_or_else(|| Error::BadParams("run has no filled slot".into()))?;
    let c = max_mono_clique(run.game.graph(), &run.game.adversary_coloring())?;
    let adv = run.adversary_loads();
    norms
        .iter()
        .map(|&norm| {
            let algorithm = norm_of(&run.loads.column(k), norm);
            let bound = match norm {
                Norm::Makespan => c as f64,
                Norm::Lr(r) => c as f64 * (run.m as f64).powf(1.0 / (2.0 * r)),
            };
            let adversary = (0..run.d)
                .map(|k| norm_of(&adv.column(k), norm))
                .fold(0.0, f64::max);
            Ok(RatioRow {
                norm,
                algorithm,
                adversary_clique: c,
                adversary_bound: bound,
                adversary,
                ratio: algorithm / adversary,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedulers::GreedyMakespan;

    #[test]
    fn binomials() {
        assert_eq!(binomial(16, 2), 120);
        assert_eq!(binomial(81, 3), 85320);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(256, 4), 174_792_640);
    }

    #[test]
    fn colex_order_matches_rank() {
        for (r, sub) in colex_subsets(7, 3).enumerate() {
            assert_eq!(colex_rank(&sub), r);
        }
        assert_eq!(colex_subsets(7, 3).count(), 35);
        assert_eq!(colex_subsets(3, 3).count(), 1);
    }

    #[test]
    fn subsets_containing_vertex() {
        let mut seen = Vec::new();
        for_each_subset_containing(6, 2, 3, |r, s| {
            assert!(s.contains(&3));
            assert_eq!(colex_rank(s), r);
            seen.push(r);
        });
        assert_eq!(seen.len(), 5);
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(encoding_dims(4, DEFAULT_DIMS_CAP).unwrap(), 120);
        assert_eq!(
            encoding_dims(16, DEFAULT_DIMS_CAP),
            Err(Error::CapExceeded {
                dims: 174_792_640,
                cap: DEFAULT_DIMS_CAP
            })
        );
        assert!(encoding_dims(5, DEFAULT_DIMS_CAP).is_err());
    }

    #[test]
    fn m4_structure() {
        let mut sched = GreedyMakespan::new(4, 120);
        let run = encode_vsmax_adaptive(
            4,
            &mut StringSource::random(9),
            &mut sched,
            DEFAULT_DIMS_CAP,
        )
        .unwrap();
        assert_eq!(run.loads, recompute_loads(&run));
        let (k, i) = run.witness.unwrap();
        assert_eq!(run.loads.get(i, k), 2.0);
        assert_eq!(run.loads.column(k).iter().sum::<f64>(), 2.0);
        for k in 0..run.d {
            let ones = run
                .supports
                .iter()
                .filter(|s| s.contains(&(k as u32)))
                .count();
            assert!(ones <= 2);
        }
        assert_eq!(sched.snapshot().loads, run.loads);
    }
}
