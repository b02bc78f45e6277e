//! Streaming runs with per-step invariant checks and CSV/JSON reporting.

use serde::{Deserialize, Serialize};
use vsched_core::adversaries::{
    clique_game_play, encode_vsmax_adaptive, lr_ratio_report, max_mono_clique,
    vsany_u_pairing_adversary, StrategyKind, StringSource, Transcript, GOOD_CLIQUE_BOUND,
};
use vsched_core::oracles::opt_lower_bound_lr;
use vsched_core::schedulers::{
    GreedyMakespan, InvariantCheck, TwoPoolScheduler, UniformRandom, VsallIScheduler,
    VsanyUScheduler, VsmaxIConfig,
};
use vsched_core::transforms::{normalize_volume, vsmax_pipeline, VolumePrior};
use vsched_core::{
    load_matrix, norm_of, Assignment, Instance, JobLoad, LoadMatrix, MachineModel, Norm, NormSpec,
    OnlineScheduler,
};

use crate::error::{HarnessError, Result};
use crate::files::{AdaptiveSpec, InstanceFile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    VsmaxIRand,
    VsmaxIDerand,
    VsallI,
    VsanyU,
    Greedy,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::VsmaxIRand,
        Algorithm::VsmaxIDerand,
        Algorithm::VsallI,
        Algorithm::VsanyU,
        Algorithm::Greedy,
        Algorithm::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::VsmaxIRand => "vsmax-i-rand",
            Algorithm::VsmaxIDerand => "vsmax-i-derand",
            Algorithm::VsallI => "vsall-i",
            Algorithm::VsanyU => "vsany-u",
            Algorithm::Greedy => "greedy",
            Algorithm::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| HarnessError::BadParams(format!("unknown algorithm {s:?}")))
    }
}

/// One CSV row: a (dimension, norm) measurement for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: String,
    pub instance_id: String,
    pub seed: u64,
    pub dimension: usize,
    pub norm: String,
    pub value: f64,
    pub lower_bound: f64,
    pub ratio: f64,
    /// `name:pass` / `name:fail` pairs joined by `;`.
    pub checks: String,
}

/// `value / lower_bound`, with `0 / 0` read as 1.
pub fn ratio(value: f64, lower_bound: f64) -> f64 {
    if value == 0.0 && lower_bound == 0.0 {
        1.0
    } else {
        value / lower_bound
    }
}

fn norm_label(n: Norm) -> String {
    n.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFailure {
    pub step: usize,
    pub check: InvariantCheck,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunTranscript {
    pub algorithm: String,
    pub instance_id: String,
    pub seed: u64,
    pub assignment: Assignment,
    pub final_checks: Vec<InvariantCheck>,
    /// First failure of each invariant during per-step checking.
    pub step_failures: Vec<StepFailure>,
    pub rows: Vec<ReportRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<Transcript>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub rows: Vec<ReportRow>,
    pub transcript: RunTranscript,
}

impl RunOutcome {
    /// True when every final and per-step invariant held.
    pub fn passed(&self) -> bool {
        self.transcript.step_failures.is_empty()
            && self.transcript.final_checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Evaluate invariants after every step instead of only at the end.
    pub check: bool,
    pub dims_cap: Option<u128>,
}

fn checks_label(checks: &[InvariantCheck], failures: &[StepFailure]) -> String {
    checks
        .iter()
        .map(|c| {
            let ok = c.passed && !failures.iter().any(|f| f.check.name == c.name);
            format!("{}:{}", c.name, if ok { "pass" } else { "fail" })
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn identical_prior(instance: &Instance, alg: Algorithm) -> Result<VolumePrior> {
    if instance.model != MachineModel::Identical {
        return Err(HarnessError::BadParams(format!(
            "{} needs an identical-machines instance",
            alg.name()
        )));
    }
    Ok(VolumePrior::from_instance(instance)?)
}

/// Scheduler for a static instance; identical-machine algorithms transform raw jobs online.
pub fn build_scheduler(
    alg: Algorithm,
    instance: &Instance,
    spec: Option<&NormSpec>,
    seed: u64,
) -> Result<Box<dyn OnlineScheduler>> {
    let (m, d) = (instance.m, instance.d);
    Ok(match alg {
        Algorithm::VsmaxIRand => Box::new(TwoPoolScheduler::with_prior(
            identical_prior(instance, alg)?,
            d,
            VsmaxIConfig::randomized(d, seed),
        )),
        Algorithm::VsmaxIDerand => Box::new(TwoPoolScheduler::with_prior(
            identical_prior(instance, alg)?,
            d,
            VsmaxIConfig::derandomized(d),
        )),
        Algorithm::VsallI => Box::new(VsallIScheduler::new(identical_prior(instance, alg)?, d)),
        Algorithm::VsanyU => {
            let spec = spec
                .ok_or_else(|| HarnessError::BadParams("vsany-u needs targets and norms".into()))?;
            if instance.model != MachineModel::Unrelated {
                return Err(HarnessError::BadParams(
                    "vsany-u needs an unrelated-machines instance".into(),
                ));
            }
            Box::new(VsanyUScheduler::with_targets(m, spec)?)
        }
        Algorithm::Greedy => Box::new(GreedyMakespan::new(m, d)),
        Algorithm::Random => Box::new(UniformRandom::new(m, d, seed)),
    })
}

/// Streams `jobs` through `scheduler`, recording the first failure of each
/// invariant when `check` is set.
pub fn drive<'a>(
    scheduler: &mut dyn OnlineScheduler,
    jobs: impl IntoIterator<Item = &'a JobLoad>,
    check: bool,
) -> Result<Vec<StepFailure>> {
    let mut failures: Vec<StepFailure> = Vec::new();
    for (step, job) in jobs.into_iter().enumerate() {
        scheduler.step(job)?;
        if check {
            for c in scheduler.invariants() {
                if !c.passed && !failures.iter().any(|f| f.check.name == c.name) {
                    failures.push(StepFailure { step, check: c });
                }
            }
        }
    }
    Ok(failures)
}

/// Makespan lower bound per dimension for unrelated machines:
/// `max(max_j min_i p_ij(k), sum_j min_i p_ij(k) / m)`.
fn unrelated_makespan_lb(instance: &Instance, k: usize) -> f64 {
    let mins: Vec<f64> = instance
        .jobs
        .iter()
        .map(|j| {
            j.eligible_machines(instance.m)
                .into_iter()
                .filter_map(|i| j.load(i, k))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let sum: f64 = mins.iter().sum();
    mins.iter().copied().fold(sum / instance.m as f64, f64::max)
}

fn exponent_grid(m: usize) -> Vec<Norm> {
    let mut rs = vec![1.0, 2.0, 3.0, 4.0, NormSpec::max_exponent(m)];
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    rs.into_iter()
        .map(Norm::Lr)
        .chain([Norm::Makespan])
        .collect()
}

/// `(dimension, norm, value, lower bound)` measurements for a finished static run.
fn measurements(
    alg: Algorithm,
    instance: &Instance,
    spec: Option<&NormSpec>,
    loads: &LoadMatrix,
    assignment: &Assignment,
) -> Result<Vec<(usize, Norm, f64, f64)>> {
    let d = instance.d;
    let mut out = Vec::new();
    match alg {
        Algorithm::VsmaxIRand | Algorithm::VsmaxIDerand => {
            let t = vsmax_pipeline(instance)?;
            for k in 0..d {
                let v = norm_of(&loads.column(k), Norm::Makespan);
                out.push((
                    k,
                    Norm::Makespan,
                    v,
                    opt_lower_bound_lr(&t, k, Norm::Makespan)?,
                ));
            }
        }
        Algorithm::VsallI => {
            let normalized = normalize_volume(instance)?;
            for k in 0..d {
                for norm in exponent_grid(instance.m) {
                    let v = norm_of(&loads.column(k), norm);
                    out.push((k, norm, v, opt_lower_bound_lr(&normalized, k, norm)?));
                }
            }
        }
        Algorithm::VsanyU => {
            let spec = spec.expect("checked when building");
            for k in 0..d {
                out.push((
                    k,
                    spec.norms[k],
                    norm_of(&loads.column(k), spec.norms[k]),
                    1.0,
                ));
            }
        }
        Algorithm::Greedy | Algorithm::Random => {
            let raw = load_matrix(instance, assignment)?;
            match (instance.model, spec) {
                (MachineModel::Unrelated, Some(spec)) => {
                    for k in 0..d {
                        let v = norm_of(&raw.column(k), spec.norms[k]) / spec.targets[k];
                        out.push((k, spec.norms[k], v, 1.0));
                    }
                }
                (MachineModel::Unrelated, None) => {
                    for k in 0..d {
                        out.push((
                            k,
                            Norm::Makespan,
                            norm_of(&raw.column(k), Norm::Makespan),
                            unrelated_makespan_lb(instance, k),
                        ));
                    }
                }
                (MachineModel::Identical, _) => {
                    for k in 0..d {
                        let v = norm_of(&raw.column(k), Norm::Makespan);
                        out.push((
                            k,
                            Norm::Makespan,
                            v,
                            opt_lower_bound_lr(instance, k, Norm::Makespan)?,
                        ));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn rows_from(
    alg: &str,
    instance_id: &str,
    seed: u64,
    checks: &str,
    measured: Vec<(usize, Norm, f64, f64)>,
) -> Vec<ReportRow> {
    measured
        .into_iter()
        .map(|(k, norm, value, lb)| ReportRow {
            algorithm: alg.to_string(),
            instance_id: instance_id.to_string(),
            seed,
            dimension: k,
            norm: norm_label(norm),
            value,
            lower_bound: lb,
            ratio: ratio(value, lb),
            checks: checks.to_string(),
        })
        .collect()
}

/// Runs `alg` on a static instance.
pub fn run_static(
    alg: Algorithm,
    instance: &Instance,
    spec: Option<&NormSpec>,
    instance_id: &str,
    opts: RunOptions,
) -> Result<RunOutcome> {
    let mut s = build_scheduler(alg, instance, spec, opts.seed)?;
    let step_failures = drive(s.as_mut(), &instance.jobs, opts.check)?;
    let schedule = s.snapshot();
    let final_checks = s.invariants();
    let label = checks_label(&final_checks, &step_failures);
    let measured = measurements(alg, instance, spec, &schedule.loads, &schedule.assignment)?;
    let rows = rows_from(alg.name(), instance_id, opts.seed, &label, measured);
    Ok(RunOutcome {
        transcript: RunTranscript {
            algorithm: alg.name().into(),
            instance_id: instance_id.into(),
            seed: opts.seed,
            assignment: schedule.assignment,
            final_checks,
            step_failures,
            rows: rows.clone(),
            game: None,
        },
        rows,
    })
}

/// Scheduler for an adaptive driver, where no volume prior is available.
fn adaptive_scheduler(
    alg: Algorithm,
    m: usize,
    d: usize,
    seed: u64,
) -> Result<Box<dyn OnlineScheduler>> {
    Ok(match alg {
        Algorithm::VsmaxIRand => Box::new(TwoPoolScheduler::new(
            m,
            d,
            VsmaxIConfig::randomized(d, seed),
        )),
        Algorithm::VsmaxIDerand => {
            Box::new(TwoPoolScheduler::new(m, d, VsmaxIConfig::derandomized(d)))
        }
        Algorithm::VsanyU => Box::new(VsanyUScheduler::new(
            m,
            &NormSpec::uniform(Norm::Lr(1.0), d, m)?,
        )?),
        Algorithm::Greedy => Box::new(GreedyMakespan::new(m, d)),
        Algorithm::Random => Box::new(UniformRandom::new(m, d, seed)),
        Algorithm::VsallI => {
            return Err(HarnessError::BadParams(
                "vsall-i needs volume metadata, which adaptive drivers lack".into(),
            ))
        }
    })
}

/// Runs `alg` against a named adaptive adversary.
pub fn run_adaptive(
    alg: Algorithm,
    spec: &AdaptiveSpec,
    instance_id: &str,
    opts: RunOptions,
) -> Result<RunOutcome> {
    match spec.kind.as_str() {
        "pairing-lb" => {
            let h = spec.param_usize("h")?;
            if !(1..=20).contains(&h) {
                return Err(HarnessError::BadParams(format!(
                    "h = {h} must be in 1..=20"
                )));
            }
            let m = 1usize << h;
            let mut s = adaptive_scheduler(alg, m, m, opts.seed)?;
            let run = vsany_u_pairing_adversary(h, s.as_mut(), 1.0)?;
            let final_checks = s.invariants();
            let label = checks_label(&final_checks, &[]);
            let measured = (0..m)
                .map(|k| {
                    let (a, r) = run.norms(k, Norm::Lr(1.0));
                    (k, Norm::Lr(1.0), a, r)
                })
                .collect();
            let rows = rows_from(alg.name(), instance_id, opts.seed, &label, measured);
            Ok(RunOutcome {
                transcript: RunTranscript {
                    algorithm: alg.name().into(),
                    instance_id: instance_id.into(),
                    seed: opts.seed,
                    assignment: run.algorithm,
                    final_checks,
                    step_failures: Vec::new(),
                    rows: rows.clone(),
                    game: None,
                },
                rows,
            })
        }
        "clique-encode" => {
            let m = spec.param_usize("m")?;
            let outcome = run_encode(m, alg, opts)?;
            Ok(outcome.run)
        }
        other => Err(HarnessError::BadParams(format!(
            "unknown adaptive kind {other:?}"
        ))),
    }
}

/// Runs a file: static instances directly, adaptive ones through their driver.
pub fn run_file(
    alg: Algorithm,
    file: &InstanceFile,
    instance_id: &str,
    opts: RunOptions,
) -> Result<RunOutcome> {
    match &file.adaptive {
        Some(spec) => run_adaptive(alg, spec, instance_id, opts),
        None => {
            let instance = file.to_instance()?;
            let spec = file.norm_spec()?;
            run_static(alg, &instance, spec.as_ref(), instance_id, opts)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub t: usize,
    pub strategy: String,
    pub seed: u64,
    pub vertices: usize,
    pub full_slot: Option<(usize, usize)>,
    pub algorithm_clique: usize,
    pub adversary_clique: usize,
    pub adversary_within_bound: bool,
}

pub fn run_game(t: usize, strategy: StrategyKind, seed: u64) -> Result<(GameSummary, Transcript)> {
    let mut s = strategy.build(seed);
    let game = clique_game_play(t, s.as_mut(), &mut StringSource::random(seed))?;
    let algorithm_clique = max_mono_clique(game.graph(), &game.bin_coloring())?;
    let adversary_clique = max_mono_clique(game.graph(), &game.adversary_coloring())?;
    let summary = GameSummary {
        t,
        strategy: s.name().into(),
        seed,
        vertices: game.vertex_count(),
        full_slot: game.full_slot(),
        algorithm_clique,
        adversary_clique,
        adversary_within_bound: adversary_clique <= GOOD_CLIQUE_BOUND,
    };
    Ok((summary, game.transcript(s.name())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodeSummary {
    pub m: usize,
    pub d: usize,
    pub algorithm: String,
    pub seed: u64,
    pub jobs: usize,
    pub witness_dimension: Option<usize>,
    pub witness_max_load: f64,
    pub adversary_clique: usize,
    pub adversary_within_bound: bool,
    /// `(norm, algorithm value, adversary value, ratio)`.
    pub ratios: Vec<(String, f64, f64, f64)>,
}

pub struct EncodeOutcome {
    pub summary: EncodeSummary,
    pub run: RunOutcome,
}

pub fn run_encode(m: usize, alg: Algorithm, opts: RunOptions) -> Result<EncodeOutcome> {
    let cap = opts
        .dims_cap
        .unwrap_or(vsched_core::adversaries::DEFAULT_DIMS_CAP);
    let d = vsched_core::adversaries::encoding_dims(m, cap)?;
    let mut s = adaptive_scheduler(alg, m, d, opts.seed)?;
    let run = encode_vsmax_adaptive(m, &mut StringSource::random(opts.seed), s.as_mut(), cap)?;
    let final_checks = s.invariants();
    let label = checks_label(&final_checks, &[]);
    let mut norms: Vec<Norm> = [1.0, 2.0, 4.0].into_iter().map(Norm::Lr).collect();
    norms.push(Norm::Makespan);
    let report = lr_ratio_report(&run, &norms)?;
    let (wk, wi) = run
        .witness
        .map_or((None, 0.0), |(k, i)| (Some(k), run.loads.get(i, k)));
    let adversary_clique = report.first().map_or(0, |r| r.adversary_clique);
    let measured = report
        .iter()
        .map(|r| (wk.unwrap_or(0), r.norm, r.algorithm, r.adversary))
        .collect();
    let id = format!("clique-encode-m{m}");
    let rows = rows_from(alg.name(), &id, opts.seed, &label, measured);
    let summary = EncodeSummary {
        m,
        d,
        algorithm: alg.name().into(),
        seed: opts.seed,
        jobs: run.machines.len(),
        witness_dimension: wk,
        witness_max_load: wi,
        adversary_clique,
        adversary_within_bound: adversary_clique <= GOOD_CLIQUE_BOUND,
        ratios: report
            .iter()
            .map(|r| (norm_label(r.norm), r.algorithm, r.adversary, r.ratio))
            .collect(),
    };
    let transcript = RunTranscript {
        algorithm: alg.name().into(),
        instance_id: id,
        seed: opts.seed,
        assignment: Assignment::from_machines(run.machines.clone()),
        final_checks,
        step_failures: Vec::new(),
        rows: rows.clone(),
        game: Some(run.game.transcript(alg.name())),
    };
    Ok(EncodeOutcome {
        summary,
        run: RunOutcome { rows, transcript },
    })
}

/// Writes rows as CSV with a fixed header.
pub fn write_rows<W: std::io::Write>(w: W, rows: &[ReportRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record([
            "algorithm",
            "instance_id",
            "seed",
            "dimension",
            "norm",
            "value",
            "lower_bound",
            "ratio",
            "checks",
        ])?;
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
