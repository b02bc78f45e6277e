//! The ten acceptance criteria, each a self-contained seeded experiment with
//! its own runtime budget.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::Serialize;
use vsched_core::adversaries::{
    encode_vsmax_adaptive, exact_sqrt, max_mono_clique, recompute_loads, sample_good_sequence,
    vsany_u_pairing_adversary, Graph, StrategyKind, StringSource, DEFAULT_DIMS_CAP,
};
use vsched_core::oracles::{
    brute_force_opt, exact_potential_argmin, exhaustive_clique, opt_lower_bound_lr, Objective,
};
use vsched_core::schedulers::{
    vsall_i, vsall_norm_certificate, vsany_certificate, vsmax_i_derandomized, vsmax_i_randomized,
    GreedyMakespan, TwoPoolScheduler, VsanyUScheduler, VsmaxIConfig,
};
use vsched_core::transforms::{normalize_volume, vsmax_pipeline};
use vsched_core::{norm_of, Entry, Instance, JobLoad, Norm, NormSpec, OnlineScheduler};

use crate::error::Result;
use crate::gen::{planted_feasible, random_identical_jobs, rng};
use crate::run::{run_game, GameSummary};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Headline number of the experiment (a ratio, fraction or count).
    pub metric: f64,
    pub trials: usize,
    pub failures: usize,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] criterion {:>2} {}: {} ({:.2}s, limit {}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        )
    }
}

struct Outcome {
    ok: bool,
    detail: String,
    metric: f64,
    trials: usize,
    failures: usize,
}

fn timed(
    id: usize,
    name: &'static str,
    limit_secs: u64,
    f: impl FnOnce() -> Result<Outcome>,
) -> CriterionResult {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(limit_secs);
    match out {
        Ok(o) => CriterionResult {
            id,
            name,
            passed: o.ok && elapsed < limit,
            detail: o.detail,
            metric: o.metric,
            trials: o.trials,
            failures: o.failures,
            elapsed,
            limit,
        },
        Err(e) => CriterionResult {
            id,
            name,
            passed: false,
            detail: format!("error: {e}"),
            metric: f64::NAN,
            trials: 0,
            failures: 1,
            elapsed,
            limit,
        },
    }
}

const SLACK: f64 = 1e-12;

/// Potential never increases, ends at most `md`, and the overflow pool stays small.
pub fn potential_monotonicity() -> CriterionResult {
    timed(1, "potential-monotonicity", 30, || {
        let mut failures = 0;
        let mut worst_step = 0.0f64;
        let mut worst_end = 0.0f64;
        for i in 0..100u64 {
            let mut r = rng(10_000 + i);
            let m = r.gen_range(1..=16);
            let d = [4, 16, 64][r.gen_range(0..3)];
            let n = r.gen_range(1..=500);
            let raw = Instance::identical(m, d, random_identical_jobs(&mut r, d, n, 0.3))?;
            let t = vsmax_pipeline(&raw)?;
            let (_, s) = vsmax_i_derandomized(&t)?;
            let trace = s.potential_trace();
            let step = trace
                .windows(2)
                .map(|w| w[1] / w[0] - 1.0)
                .fold(f64::NEG_INFINITY, f64::max);
            let md = (m * d) as f64;
            let end = *trace.last().expect("Phi(0)") / md;
            worst_step = worst_step.max(step);
            worst_end = worst_end.max(end);
            let v2 = s.overflow_volume();
            let m2 = s.pools().overflow.makespan();
            let ok = step <= SLACK
                && end <= 1.0
                && v2 <= m as f64 / d as f64
                && m2 <= (v2 / m as f64 + 1.0) * (1.0 + SLACK);
            failures += usize::from(!ok);
        }
        Ok(Outcome {
            ok: failures == 0,
            detail: format!("{failures}/100 failing; max relative step {worst_step:.3e}; max Phi(n)/md {worst_end:.4}"),
            metric: worst_end,
            trials: 100,
            failures,
        })
    })
}

/// Derandomized makespan within `3a + 2 + V2/m + 1`; transformed optimum at least 1.
pub fn vsmax_vs_oracle() -> CriterionResult {
    timed(2, "vsmax-i-vs-oracle", 60, || {
        let mut failures = 0;
        let mut min_opt = f64::INFINITY;
        let mut worst = 0.0f64;
        for i in 0..200u64 {
            let mut r = rng(20_000 + i);
            let m = r.gen_range(1..=3);
            let n = r.gen_range(1..=8);
            let d = r.gen_range(1..=6);
            // An all-zero instance has no volume to normalize by; redraw it.
            let jobs = loop {
                let jobs = random_identical_jobs(&mut r, d, n, 0.3);
                if jobs.iter().flatten().any(|&x| x > 0.0) {
                    break jobs;
                }
            };
            let raw = Instance::identical(m, d, jobs)?;
            let t = vsmax_pipeline(&raw)?;
            let (sched, s) = vsmax_i_derandomized(&t)?;
            let bound = s.config().primary_bound() + 1.0 + s.overflow_volume() / m as f64 + 1.0;
            let opt = brute_force_opt(&t, &Objective::Makespan)?.value;
            min_opt = min_opt.min(opt);
            worst = worst.max(sched.loads.makespan() / bound);
            failures += usize::from(!(sched.loads.makespan() <= bound && opt >= 1.0 - SLACK));
        }
        Ok(Outcome {
            ok: failures == 0,
            detail: format!(
                "{failures}/200 failing; min OPT {min_opt:.6}; max makespan/bound {worst:.4}"
            ),
            metric: min_opt,
            trials: 200,
            failures,
        })
    })
}

/// Randomized variant keeps M1 below `2a + 2` and rarely passes jobs on.
pub fn randomized_variant() -> CriterionResult {
    timed(3, "vsmax-i-randomized", 60, || {
        let (m, d, n) = (8, 16, 200);
        let mut failures = 0;
        let mut passed = 0usize;
        let mut worst = 0.0f64;
        for seed in 0..1000u64 {
            let mut r = rng(30_000 + seed);
            let raw = Instance::identical(m, d, random_identical_jobs(&mut r, d, n, 0.3))?;
            let t = vsmax_pipeline(&raw)?;
            let (_, s) = vsmax_i_randomized(&t, seed)?;
            let m1 = s.pools().primary.makespan();
            let bound = s.config().primary_bound();
            worst = worst.max(m1);
            failures += usize::from(m1 >= bound);
            passed += s.passed_jobs();
        }
        let fraction = passed as f64 / (1000 * n) as f64;
        Ok(Outcome {
            ok: failures == 0 && fraction <= 0.05,
            detail: format!("{failures}/1000 runs over 2a+2; max M1 load {worst:.3}; pass fraction {fraction:.2e}"),
            metric: fraction,
            trials: 1000,
            failures,
        })
    })
}

/// All-norms certificate for every dimension and exponent.
pub fn vsall_certificate() -> CriterionResult {
    timed(4, "vsall-i-norm-certificate", 60, || {
        let mut failures = 0;
        let mut worst = 0.0f64;
        for i in 0..100u64 {
            let mut r = rng(40_000 + i);
            let m = r.gen_range(1..=16);
            let d = r.gen_range(1..=16);
            let n = r.gen_range(1..=200);
            let raw = Instance::identical(m, d, random_identical_jobs(&mut r, d, n, 0.3))?;
            let (sched, s) = vsall_i(&raw)?;
            let normalized = normalize_volume(&raw)?;
            let mut ok = true;
            for rexp in [1.0, 2.0, 3.0, 4.0, NormSpec::max_exponent(m)] {
                for c in
                    vsall_norm_certificate(&sched.loads, &normalized, s.alpha_prime(), rexp, 1e-9)?
                {
                    ok &= c.passed;
                    worst = worst.max(c.slack_ratio());
                }
            }
            failures += usize::from(!ok);
        }
        Ok(Outcome {
            ok: failures == 0,
            detail: format!("{failures}/100 failing; max norm / (factor * LB) {worst:.4}"),
            metric: worst,
            trials: 100,
            failures,
        })
    })
}

fn sixteenths(r: &mut impl Rng) -> f64 {
    r.gen_range(0..=32) as f64 / 16.0
}

/// Greedy choice equals the exact potential argmin.
pub fn vsany_exactness() -> CriterionResult {
    timed(5, "vsany-u-exact-argmin", 30, || {
        let mut steps = 0;
        let mut disagree = 0;
        let mut undecided = 0;
        let mut max_bits = 0;
        let mut seed = 50_000u64;
        while steps < 100 {
            let mut r = rng(seed);
            seed += 1;
            let m = r.gen_range(1..=4);
            let d = [1, 2][r.gen_range(0..2)];
            let top = NormSpec::max_exponent(m).floor() as u32;
            let norms = (0..d)
                .map(|_| Norm::Lr(r.gen_range(1..=top) as f64))
                .collect();
            let spec = NormSpec::new(norms, vec![1.0; d], m)?;
            let mut s = VsanyUScheduler::new(m, &spec)?;
            let n = r.gen_range(1..=10);
            for _ in 0..n {
                if steps == 100 {
                    break;
                }
                let keep = r.gen_range(0..m);
                let rows = (0..m)
                    .map(|i| {
                        if i != keep && r.gen_bool(0.2) {
                            vec![Entry::Forbidden; d]
                        } else {
                            (0..d).map(|_| Entry::Load(sixteenths(&mut r))).collect()
                        }
                    })
                    .collect();
                let job = JobLoad::Unrelated(rows);
                let exact = exact_potential_argmin(&s.snapshot().loads, &job, &spec)?;
                let chosen = s.step(&job)?;
                steps += 1;
                max_bits = max_bits.max(exact.max_bits);
                undecided += usize::from(!exact.decided);
                disagree += usize::from(exact.machine != Some(chosen));
            }
        }
        Ok(Outcome {
            ok: disagree == 0 && undecided == 0,
            detail: format!("{steps} steps, {disagree} disagreements, {undecided} undecided, max precision {max_bits} bits"),
            metric: disagree as f64,
            trials: steps,
            failures: disagree + undecided,
        })
    })
}

/// Potential and norm certificates on planted-feasible instances.
pub fn vsany_certificates() -> CriterionResult {
    timed(6, "vsany-u-certificate", 60, || {
        let mut failures = 0;
        let mut worst_gap = f64::NEG_INFINITY;
        let mut worst_norm = 0.0f64;
        for i in 0..50u64 {
            let mut r = rng(60_000 + i);
            let m = r.gen_range(2..=16);
            let d = r.gen_range(1..=8);
            let n = r.gen_range(1..=80);
            let p = planted_feasible(m, d, n, 60_000 + i)?;
            let mut s = VsanyUScheduler::with_targets(m, &p.spec)?;
            for job in &p.instance.jobs {
                s.step(job)?;
            }
            let cert = vsany_certificate(&s.snapshot().loads, s.config());
            worst_gap = worst_gap.max(cert.lhs_log2 - cert.rhs_log2);
            worst_norm = worst_norm.max(cert.worst_norm_ratio);
            failures += usize::from(!(cert.potential_holds && cert.norms_hold));
        }
        Ok(Outcome {
            ok: failures == 0,
            detail: format!(
                "{failures}/50 failing; max log2((2-e^.5)Phi) - log2 d = {worst_gap:.3}; max L_k/(20 q_k) = {worst_norm:.4}"
            ),
            metric: worst_norm,
            trials: 50,
            failures,
        })
    })
}

/// The pairing adversary forces exactly `h + 1` against a reverse optimum of 1.
pub fn pairing_exact_ratio() -> CriterionResult {
    timed(7, "pairing-adversary-ratio", 5, || {
        let mut failures = 0;
        let mut trials = 0;
        for h in 1..=6usize {
            let m = 1usize << h;
            let spec = NormSpec::uniform(Norm::Lr(1.0), m, m)?;
            let schedulers: Vec<Box<dyn OnlineScheduler>> = vec![
                Box::new(VsanyUScheduler::new(m, &spec)?),
                Box::new(GreedyMakespan::new(m, m)),
            ];
            for mut s in schedulers {
                trials += 1;
                let run = vsany_u_pairing_adversary(h, s.as_mut(), 1.0)?;
                let w = run.witness;
                let mut norms: Vec<Norm> = (1..=h).map(|r| Norm::Lr(r as f64)).collect();
                norms.push(Norm::Makespan);
                let target = (h + 1) as f64;
                let witness_ok = norms.iter().all(|&nm| run.norms(w, nm).0 == target);
                let reverse_ok = (0..m).all(|k| {
                    norms
                        .iter()
                        .all(|&nm| norm_of(&run.reverse_loads.column(k), nm) == 1.0)
                });
                let halving = run.active.windows(2).all(|p| p[1].len() * 2 == p[0].len());
                let concentrated =
                    (0..m).all(|k| (0..m).all(|i| i == k || run.algorithm_loads.get(i, k) == 0.0));
                failures += usize::from(
                    !(witness_ok && reverse_ok && halving && concentrated && !run.fallback_needed),
                );
            }
        }
        Ok(Outcome {
            ok: failures == 0,
            detail: format!("h = 1..6 against vsany-u and greedy: {failures}/{trials} failing"),
            metric: failures as f64,
            trials,
            failures,
        })
    })
}

/// Strategies are forced to a `sqrt(t)` clique; random strings are good sequences.
pub fn clique_game() -> CriterionResult {
    timed(8, "clique-game", 120, || {
        let mut failures = 0;
        let mut trials = 0;
        let mut notes = Vec::new();
        for t in [4usize, 9, 16] {
            let s = exact_sqrt(t)?;
            for kind in StrategyKind::ALL {
                for seed in 0..10u64 {
                    trials += 1;
                    let (g, _): (GameSummary, _) = run_game(t, kind, seed)?;
                    failures += usize::from(
                        !(g.algorithm_clique == s && g.vertices <= t * t && g.full_slot.is_some()),
                    );
                }
            }
            let mut clean = 0;
            let mut worst_clique = 0;
            let mut worst_pq = 0;
            let mut shapes = true;
            for seed in 0..100u64 {
                if let Ok((_, cert)) = sample_good_sequence(t, 80_000 + seed, 0) {
                    clean += usize::from(cert.retries == 0);
                    worst_clique = worst_clique.max(cert.max_adversary_clique);
                    worst_pq = worst_pq.max(cert.pq_max.unwrap_or(0));
                    shapes &= cert.shape_checks_passed;
                }
            }
            let pq_ok = t < 10 || worst_pq <= 9;
            failures += usize::from(!(clean >= 95 && shapes && pq_ok));
            notes.push(format!("t={t}: {clean}/100 clean, max adversary clique {worst_clique}, max P(S,q) {worst_pq}"));
        }
        Ok(Outcome {
            ok: failures == 0,
            detail: format!("{failures} failing; {}", notes.join("; ")),
            metric: failures as f64,
            trials,
            failures,
        })
    })
}

/// Encoded loads match a recount from the final graph; the witness carries `sqrt(m)`.
pub fn encoding_structure() -> CriterionResult {
    timed(9, "encoding-structure", 120, || {
        let mut failures = 0;
        let mut notes = Vec::new();
        for (m, d) in [(4usize, 120usize), (9, 85_320)] {
            let s = exact_sqrt(m)?;
            let schedulers: Vec<Box<dyn OnlineScheduler>> = vec![
                Box::new(TwoPoolScheduler::new(m, d, VsmaxIConfig::derandomized(d))),
                Box::new(GreedyMakespan::new(m, d)),
            ];
            for (which, mut sched) in schedulers.into_iter().enumerate() {
                let run = encode_vsmax_adaptive(
                    m,
                    &mut StringSource::random(90_000 + which as u64),
                    sched.as_mut(),
                    DEFAULT_DIMS_CAP,
                )?;
                let same = run.d == d && run.loads == recompute_loads(&run);
                let witness = run
                    .witness
                    .map(|(k, _)| norm_of(&run.loads.column(k), Norm::Makespan));
                let mut per_dim = vec![Vec::new(); d];
                for (v, sup) in run.supports.iter().enumerate() {
                    for &k in sup {
                        per_dim[k as usize].push(v);
                    }
                }
                let sparse = per_dim
                    .iter()
                    .all(|vs| vs.len() <= s && run.game.graph().is_clique(vs));
                let ok = same && witness == Some(s as f64) && sparse;
                failures += usize::from(!ok);
                notes.push(format!(
                    "m={m} {}: d={}, jobs {}, witness load {:?}",
                    sched.name(),
                    run.d,
                    run.machines.len(),
                    witness
                ));
            }
        }
        Ok(Outcome {
            ok: failures == 0,
            detail: format!("{failures} failing; {}", notes.join("; ")),
            metric: failures as f64,
            trials: 4,
            failures,
        })
    })
}

fn random_colored_graph(r: &mut impl Rng) -> (Graph, Vec<usize>) {
    let n = r.gen_range(0..=20);
    let p = r.gen_range(0.2..0.95);
    let colors = r.gen_range(1..=3);
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(p) {
                g.add_edge(u, v);
            }
        }
    }
    (g, (0..n).map(|_| r.gen_range(0..colors)).collect())
}

/// The oracles agree with each other.
pub fn oracle_consistency() -> CriterionResult {
    timed(10, "oracle-self-consistency", 60, || {
        let mut r = rng(100_000);
        let mut clique_fail = 0;
        for _ in 0..200 {
            let (g, c) = random_colored_graph(&mut r);
            clique_fail += usize::from(exhaustive_clique(&g, &c)? != max_mono_clique(&g, &c)?);
        }
        let mut lb_fail = 0;
        let mut lb_checks = 0;
        let mut worst = 0.0f64;
        for _ in 0..150 {
            let m = r.gen_range(1..=3);
            let n = r.gen_range(1..=7);
            let d = r.gen_range(1..=3);
            let inst = Instance::identical(m, d, random_identical_jobs(&mut r, d, n, 0.2))?;
            for k in 0..d {
                for norm in [
                    Norm::Lr(1.0),
                    Norm::Lr(1.5),
                    Norm::Lr(2.0),
                    Norm::Lr(3.0),
                    Norm::Makespan,
                ] {
                    let lb = opt_lower_bound_lr(&inst, k, norm)?;
                    let opt = brute_force_opt(&inst, &Objective::DimNorm { dim: k, norm })?.value;
                    lb_checks += 1;
                    if opt > 0.0 {
                        worst = worst.max(lb / opt);
                    }
                    lb_fail += usize::from(lb > opt * (1.0 + SLACK));
                }
            }
        }
        Ok(Outcome {
            ok: clique_fail == 0 && lb_fail == 0,
            detail: format!(
                "clique oracles disagree on {clique_fail}/200 graphs; LB > OPT in {lb_fail}/{lb_checks} checks (max LB/OPT {worst:.6})"
            ),
            metric: worst,
            trials: 200 + lb_checks,
            failures: clique_fail + lb_fail,
        })
    })
}

pub const CRITERIA: [fn() -> CriterionResult; 10] = [
    potential_monotonicity,
    vsmax_vs_oracle,
    randomized_variant,
    vsall_certificate,
    vsany_exactness,
    vsany_certificates,
    pairing_exact_ratio,
    clique_game,
    encoding_structure,
    oracle_consistency,
];

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().map(|f| f()).collect()
}
