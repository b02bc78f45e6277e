//! Predefined experiment grids, run in parallel across seeds and aggregated
//! in a fixed order.
//!
//! CSV columns: `suite, cell, seeds, trials, mean_ratio, max_ratio, failures`.
//! A trial is one (cell, seed) run; its ratio is suite-specific (see
//! [`SUITES`]). `failures` counts trials with a failed invariant or an error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vsched_core::adversaries::StrategyKind;
use vsched_core::oracles::opt_lower_bound_lr;
use vsched_core::schedulers::{vsany_certificate, GreedyMakespan, VsanyUScheduler};
use vsched_core::transforms::vsmax_pipeline;
use vsched_core::{Norm, NormSpec, OnlineScheduler};

use crate::acceptance;
use crate::error::{HarnessError, Result};
use crate::gen::{planted_feasible, random_identical};
use crate::run::{run_game, run_static, Algorithm, RunOptions};

/// Suite names with the meaning of their ratio column.
pub const SUITES: [(&str, &str); 6] = [
    (
        "acceptance",
        "criterion headline metric; trials and failures as counted by the criterion",
    ),
    (
        "vsmax",
        "derandomized makespan over the transformed-instance lower bound",
    ),
    (
        "vsall",
        "worst norm over lower bound across r in {1,2,3,4,log2 m,inf}",
    ),
    (
        "vsany",
        "worst normalised L_k over 20 q_k on planted-feasible instances",
    ),
    (
        "pairing",
        "witness-dimension norm over reverse-assignment norm",
    ),
    ("clique", "algorithm clique over adversary clique at halt"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub suite: String,
    pub cell: String,
    pub seeds: usize,
    pub trials: usize,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    pub failures: usize,
}

pub const HEADER: [&str; 7] = [
    "suite",
    "cell",
    "seeds",
    "trials",
    "mean_ratio",
    "max_ratio",
    "failures",
];

/// One trial: `Some(ratio)` on success, `None` when it failed.
type Trial = Option<f64>;

fn aggregate(suite: &str, cell: String, seeds: usize, trials: Vec<Trial>) -> BenchRow {
    let ok: Vec<f64> = trials.iter().flatten().copied().collect();
    let mean = if ok.is_empty() {
        f64::NAN
    } else {
        ok.iter().sum::<f64>() / ok.len() as f64
    };
    BenchRow {
        suite: suite.into(),
        cell,
        seeds,
        trials: trials.len(),
        mean_ratio: mean,
        max_ratio: ok.iter().copied().fold(f64::NAN, f64::max),
        failures: trials.len() - ok.len(),
    }
}

fn over_seeds(seeds: &[u64], f: impl Fn(u64) -> Result<Option<f64>> + Sync) -> Vec<Trial> {
    seeds.par_iter().map(|&s| f(s).ok().flatten()).collect()
}

fn vsmax_trial(m: usize, d: usize, seed: u64) -> Result<Option<f64>> {
    let inst = random_identical(m, d, 200, seed)?;
    let out = run_static(
        Algorithm::VsmaxIDerand,
        &inst,
        None,
        "bench",
        RunOptions {
            seed,
            check: true,
            dims_cap: None,
        },
    )?;
    if !out.passed() {
        return Ok(None);
    }
    let t = vsmax_pipeline(&inst)?;
    let lb = (0..d)
        .map(|k| opt_lower_bound_lr(&t, k, Norm::Makespan))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let lb = lb.into_iter().fold(0.0, f64::max);
    let makespan = out.rows.iter().map(|r| r.value).fold(0.0, f64::max);
    Ok(Some(makespan / lb))
}

fn vsall_trial(m: usize, d: usize, seed: u64) -> Result<Option<f64>> {
    let inst = random_identical(m, d, 200, seed)?;
    let out = run_static(
        Algorithm::VsallI,
        &inst,
        None,
        "bench",
        RunOptions {
            seed,
            check: false,
            dims_cap: None,
        },
    )?;
    Ok(out
        .passed()
        .then(|| out.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)))
}

fn vsany_trial(m: usize, d: usize, seed: u64) -> Result<Option<f64>> {
    let p = planted_feasible(m, d, 100, seed)?;
    let mut s = VsanyUScheduler::with_targets(m, &p.spec)?;
    for job in &p.instance.jobs {
        s.step(job)?;
    }
    let cert = vsany_certificate(&s.snapshot().loads, s.config());
    Ok((cert.potential_holds && cert.norms_hold).then_some(cert.worst_norm_ratio))
}

fn pairing_trial(h: usize, alg: &str) -> Result<Option<f64>> {
    let m = 1usize << h;
    let mut s: Box<dyn OnlineScheduler> = match alg {
        "vsany-u" => Box::new(VsanyUScheduler::new(
            m,
            &NormSpec::uniform(Norm::Lr(1.0), m, m)?,
        )?),
        _ => Box::new(GreedyMakespan::new(m, m)),
    };
    let run = vsched_core::adversaries::vsany_u_pairing_adversary(h, s.as_mut(), 1.0)?;
    let (a, r) = run.norms(run.witness, Norm::Lr(1.0));
    Ok(Some(a / r))
}

fn clique_trial(t: usize, kind: StrategyKind, seed: u64) -> Result<Option<f64>> {
    let (g, _) = run_game(t, kind, seed)?;
    Ok(g.adversary_within_bound
        .then(|| g.algorithm_clique as f64 / g.adversary_clique.max(1) as f64))
}

/// Runs `suite` over `seeds`. An empty seed list yields no rows.
pub fn run_suite(suite: &str, seeds: &[u64]) -> Result<Vec<BenchRow>> {
    if !SUITES.iter().any(|(s, _)| *s == suite) {
        return Err(HarnessError::BadParams(format!("unknown suite {suite:?}")));
    }
    if seeds.is_empty() {
        return Ok(Vec::new());
    }
    let n = seeds.len();
    let mut rows = Vec::new();
    match suite {
        "acceptance" => {
            for c in acceptance::run_all() {
                rows.push(BenchRow {
                    suite: suite.into(),
                    cell: format!("{}-{}", c.id, c.name),
                    seeds: n,
                    trials: c.trials,
                    mean_ratio: c.metric,
                    max_ratio: c.metric,
                    failures: if c.passed { 0 } else { c.failures.max(1) },
                });
            }
        }
        "vsmax" => {
            for m in [2, 4, 8, 16] {
                for d in [4, 16, 64] {
                    rows.push(aggregate(
                        suite,
                        format!("m={m},d={d}"),
                        n,
                        over_seeds(seeds, |s| vsmax_trial(m, d, s)),
                    ));
                }
            }
        }
        "vsall" => {
            for m in [2, 4, 8, 16] {
                for d in [2, 8, 16] {
                    rows.push(aggregate(
                        suite,
                        format!("m={m},d={d}"),
                        n,
                        over_seeds(seeds, |s| vsall_trial(m, d, s)),
                    ));
                }
            }
        }
        "vsany" => {
            for m in [4, 8, 16] {
                for d in [2, 4, 8] {
                    rows.push(aggregate(
                        suite,
                        format!("m={m},d={d}"),
                        n,
                        over_seeds(seeds, |s| vsany_trial(m, d, s)),
                    ));
                }
            }
        }
        "pairing" => {
            for h in 1..=6 {
                for alg in ["vsany-u", "greedy"] {
                    rows.push(aggregate(
                        suite,
                        format!("h={h},{alg}"),
                        n,
                        over_seeds(seeds, |_| pairing_trial(h, alg)),
                    ));
                }
            }
        }
        "clique" => {
            for t in [4, 9, 16] {
                for kind in StrategyKind::ALL {
                    let trials = over_seeds(seeds, |s| clique_trial(t, kind, s));
                    rows.push(aggregate(suite, format!("t={t},{kind:?}"), n, trials));
                }
            }
        }
        _ => unreachable!("checked above"),
    }
    Ok(rows)
}

pub fn write_rows<W: std::io::Write>(w: W, rows: &[BenchRow]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(HEADER)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
