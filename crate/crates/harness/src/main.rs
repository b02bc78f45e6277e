//! `vsched`: generate instances, run schedulers, play the lower-bound games
//! and run experiment suites.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use vsched_core::adversaries::StrategyKind;
use vsched_harness::bench::{self, SUITES};
use vsched_harness::files::InstanceFile;
use vsched_harness::gen::gen_file;
use vsched_harness::run::{run_encode, run_file, run_game, write_rows, Algorithm, RunOptions};

const RUN_CSV_HELP: &str = "CSV columns: algorithm, instance_id, seed, dimension, norm, value, lower_bound, ratio, checks. \
norm is the exponent r or \"inf\" for makespan; ratio = value / lower_bound (0/0 reads as 1); \
checks lists name:pass|fail for each scheduler invariant.";

#[derive(Parser)]
#[command(
    name = "vsched",
    version,
    about = "Online vector scheduling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    ///
    /// Kinds: random-identical (m, d, n), random-unrelated (m, d, n),
    /// planted-feasible (m, d, n), clique-encode (m), pairing-lb (h).
    Gen {
        kind: String,
        /// Kind parameters as name=value, e.g. m=4 d=2 n=10.
        params: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an algorithm on an instance file and emit a CSV report.
    #[command(after_help = RUN_CSV_HELP)]
    Run {
        /// vsmax-i-rand, vsmax-i-derand, vsall-i, vsany-u, greedy or random.
        algorithm: String,
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check invariants after every step.
        #[arg(long)]
        check: bool,
        /// CSV output path; stdout when omitted. The JSON transcript goes next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dimension cap for adaptive encodings.
        #[arg(long)]
        dims_cap: Option<u128>,
    },
    /// Play the clique game with a built-in strategy.
    Game {
        t: usize,
        /// bin-greedy, random or round-robin.
        strategy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Transcript output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play the encoded clique game against a scheduler.
    Encode {
        m: usize,
        /// vsmax-i-rand, vsmax-i-derand, greedy or random.
        algorithm: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dims_cap: Option<u128>,
    },
    /// Run an experiment suite across seeds and write aggregate CSV.
    #[command(after_help = bench_help())]
    Bench {
        suite: String,
        /// Seeds, e.g. 0..10 or 1,2,3. Empty yields a header-only CSV.
        #[arg(long, default_value = "0..10")]
        seeds: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a good string sequence for the clique game.
    Sequence {
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        retries: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn bench_help() -> String {
    let mut s = String::from(
        "CSV columns: suite, cell, seeds, trials, mean_ratio, max_ratio, failures.\nSuites:\n",
    );
    for (name, ratio) in SUITES {
        s.push_str(&format!("  {name}: {ratio}\n"));
    }
    s
}

fn parse_params(params: &[String]) -> Result<BTreeMap<String, usize>> {
    params
        .iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .with_context(|| format!("parameter {p:?} is not name=value"))?;
            Ok((
                k.to_string(),
                v.parse()
                    .with_context(|| format!("parameter {k} must be an integer"))?,
            ))
        })
        .collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = s.split_once("..") {
        return Ok((a.parse()?..b.parse()?).collect());
    }
    s.split(',').map(|x| Ok(x.trim().parse()?)).collect()
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout()),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn transcript_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` when some invariant failed.
fn real_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Gen {
            kind,
            params,
            seed,
            out,
        } => {
            let file = gen_file(&kind, &parse_params(&params)?, seed)?;
            let mut w = sink(out.as_deref())?;
            writeln!(w, "{}", file.to_json()?)?;
            Ok(true)
        }
        Command::Run {
            algorithm,
            instance,
            seed,
            check,
            out,
            dims_cap,
        } => {
            let alg = Algorithm::parse(&algorithm)?;
            let file = InstanceFile::read(&instance)
                .with_context(|| format!("reading {}", instance.display()))?;
            let id = instance
                .file_stem()
                .map_or("instance".into(), |s| s.to_string_lossy().into_owned());
            let outcome = run_file(
                alg,
                &file,
                &id,
                RunOptions {
                    seed,
                    check,
                    dims_cap,
                },
            )?;
            write_rows(sink(out.as_deref())?, &outcome.rows)?;
            if let Some(out) = &out {
                write_json(Some(&transcript_path(out)), &outcome.transcript)?;
            }
            for f in &outcome.transcript.step_failures {
                eprintln!(
                    "invariant {} failed at step {}: {}",
                    f.check.name, f.step, f.check.detail
                );
            }
            for c in outcome.transcript.final_checks.iter().filter(|c| !c.passed) {
                eprintln!("invariant {} failed: {}", c.name, c.detail);
            }
            Ok(outcome.passed())
        }
        Command::Game {
            t,
            strategy,
            seed,
            out,
        } => {
            let (summary, transcript) = run_game(t, StrategyKind::parse(&strategy)?, seed)?;
            if let Some(out) = &out {
                write_json(Some(out), &transcript)?;
            }
            write_json(None, &summary)?;
            Ok(summary.adversary_within_bound)
        }
        Command::Encode {
            m,
            algorithm,
            seed,
            out,
            dims_cap,
        } => {
            let alg = Algorithm::parse(&algorithm)?;
            let outcome = run_encode(
                m,
                alg,
                RunOptions {
                    seed,
                    check: false,
                    dims_cap,
                },
            )?;
            if let Some(out) = &out {
                write_json(Some(out), &outcome.run.transcript)?;
            }
            write_json(None, &outcome.summary)?;
            Ok(outcome.run.passed() && outcome.summary.adversary_within_bound)
        }
        Command::Bench { suite, seeds, out } => {
            let rows = bench::run_suite(&suite, &parse_seeds(&seeds)?)?;
            bench::write_rows(sink(out.as_deref())?, &rows)?;
            Ok(rows.iter().all(|r| r.failures == 0))
        }
        Command::Sequence {
            t,
            seed,
            retries,
            out,
        } => {
            let (strings, cert) = vsched_core::adversaries::sample_good_sequence(t, seed, retries)?;
            if let Some(out) = &out {
                write_json(Some(out), &strings)?;
            }
            write_json(None, &cert)?;
            if !cert.passed {
                bail!("certificate failed");
            }
            Ok(true)
        }
    }
}
