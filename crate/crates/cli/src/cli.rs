//! `setsketch` command line.
//!
//! Exit status: 0 when a decode succeeds (or the command has nothing to
//! decode), 1 when a decode fails, 2 on usage, I/O or frame errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use setsketch::oracle::{parse_u64, InjectedHashTable};
use setsketch::{
    deserialize, reconcile_local, serialize, DecodeLimits, DecodeOutcome, DecodeTrace, HashParams,
    Sketch64,
};

use crate::experiment::{anomaly_stats, estimate_threshold, run_sweep, time_decode, SweepSpec};
use crate::output::{emit, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DECODE_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "setsketch",
    version,
    about = "Linear set sketches: build, merge, decode, reconcile"
)]
struct Cli {
    /// Output format for tables and decode results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Explicit slot table (`key: b1,b2,...` per line) overriding the seeded
    /// hash for the listed keys. Testing aid.
    #[arg(long, global = true, hide = true)]
    inject_table: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write an empty sketch file.
    Create {
        #[arg(long, default_value_t = 64)]
        w: u32,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 32)]
        r: u32,
        #[arg(long, default_value = "0", value_parser = parse_key_arg)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Toggle keys in a sketch file, in place.
    Toggle {
        #[arg(long)]
        sketch: PathBuf,
        #[arg(long = "key", alias = "keys", value_delimiter = ',', value_parser = parse_key_arg)]
        keys: Vec<u64>,
        #[arg(long)]
        keys_file: Option<PathBuf>,
    },
    /// XOR two sketch files into a third.
    Merge {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a sketch file and print the recovered keys.
    Decode {
        #[arg(long)]
        sketch: PathBuf,
        /// Print the per-round queues and steps.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        max_rounds: Option<usize>,
    },
    /// Decode the symmetric difference between local keys and a remote sketch.
    Reconcile {
        #[arg(long)]
        local_keys: PathBuf,
        #[arg(long)]
        remote_sketch: PathBuf,
    },
    /// Experiments.
    #[command(subcommand)]
    Bench(Bench),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value = "0", value_parser = parse_key_arg)]
    seed: u64,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Bench {
    /// Success rate over a grid of loads.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        loads: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 32)]
        r: u32,
    },
    /// Bisect the load at which decoding stops succeeding.
    Threshold {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
    },
    /// Decode time against n.
    Timing {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.75)]
        c: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
    /// Native-anomaly counts and anomalous decode steps.
    Anomalies {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 500)]
        trials: usize,
    },
}

fn parse_key_arg(s: &str) -> Result<u64, String> {
    parse_u64(s.trim()).ok_or_else(|| format!("not an integer: {s:?}"))
}

/// Runs the command line and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn read_sketch(path: &Path) -> anyhow::Result<Sketch64> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize(&bytes).with_context(|| format!("decoding frame {}", path.display()))
}

fn write_sketch(path: &Path, sketch: &Sketch64) -> anyhow::Result<()> {
    fs::write(path, serialize(sketch)).with_context(|| format!("writing {}", path.display()))
}

fn read_keys(path: &Path) -> anyhow::Result<Vec<u64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_u64(l).ok_or_else(|| anyhow!("bad key {l:?} in {}", path.display())))
        .collect()
}

fn injected(
    path: &Option<PathBuf>,
    params: HashParams,
) -> anyhow::Result<Option<InjectedHashTable>> {
    path.as_ref()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(InjectedHashTable::parse(&text, params)?)
        })
        .transpose()
}

#[derive(Serialize)]
struct TraceRound {
    round: usize,
    queue: Vec<usize>,
    /// `[bucket, key]` pairs.
    steps: Vec<(usize, u64)>,
}

#[derive(Serialize)]
struct DecodeReport {
    status: String,
    rounds_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    keys: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bytes_on_wire: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<TraceRound>>,
}

fn trace_rounds(trace: &DecodeTrace<u64>) -> Vec<TraceRound> {
    trace
        .rounds
        .iter()
        .enumerate()
        .map(|(i, r)| TraceRound {
            round: i + 1,
            queue: r.queue.clone(),
            steps: r.steps.iter().map(|s| (s.bucket, s.key)).collect(),
        })
        .collect()
}

fn print_report(report: &DecodeReport, format: Format) -> anyhow::Result<i32> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report)?),
        Format::Csv => {
            if let Some(rounds) = &report.trace {
                for r in rounds {
                    let steps: Vec<String> =
                        r.steps.iter().map(|(b, k)| format!("{b}:{k}")).collect();
                    eprintln!(
                        "round {}: queue={:?} steps=[{}]",
                        r.round,
                        r.queue,
                        steps.join(", ")
                    );
                }
            }
            println!("key");
            for k in &report.keys {
                println!("{k}");
            }
        }
    }
    eprintln!("status: {} ({} rounds)", report.status, report.rounds_used);
    Ok(if report.status == "success" {
        EXIT_OK
    } else {
        EXIT_DECODE_FAILURE
    })
}

fn report_of(outcome: &DecodeOutcome<u64>, trace: Option<&DecodeTrace<u64>>) -> DecodeReport {
    DecodeReport {
        status: outcome.status.to_string(),
        rounds_used: outcome.rounds_used,
        steps: Some(outcome.steps),
        keys: outcome.keys.clone(),
        bytes_on_wire: None,
        trace: trace.map(trace_rounds),
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let format = cli.format;
    match cli.command {
        Command::Create {
            w,
            k,
            n,
            r,
            seed,
            out,
        } => {
            let sketch = Sketch64::with_params(HashParams::new(w, k, n, seed, r)?)?;
            write_sketch(&out, &sketch)?;
            Ok(EXIT_OK)
        }
        Command::Toggle {
            sketch: path,
            mut keys,
            keys_file,
        } => {
            if let Some(file) = &keys_file {
                keys.extend(read_keys(file)?);
            }
            if keys.is_empty() {
                return Err(anyhow!("no keys given (use --key or --keys-file)"));
            }
            let sketch = read_sketch(&path)?;
            let params = *sketch.params();
            let sketch = match injected(&cli.inject_table, params)? {
                Some(table) => {
                    let mut s = sketch.rehash(table)?;
                    for &k in &keys {
                        s.toggle(k)?;
                    }
                    s.rehash(params)?
                }
                None => {
                    let mut s = sketch;
                    for &k in &keys {
                        s.toggle(k)?;
                    }
                    s
                }
            };
            write_sketch(&path, &sketch)?;
            Ok(EXIT_OK)
        }
        Command::Merge { a, b, out } => {
            let mut merged = read_sketch(&a)?;
            merged.merge(&read_sketch(&b)?)?;
            write_sketch(&out, &merged)?;
            Ok(EXIT_OK)
        }
        Command::Decode {
            sketch,
            trace,
            max_rounds,
        } => {
            let sketch = read_sketch(&sketch)?;
            let limits = max_rounds.map(DecodeLimits::rounds).unwrap_or_default();
            let (outcome, tr) = match injected(&cli.inject_table, *sketch.params())? {
                Some(table) => sketch.rehash(table)?.decode_traced(limits),
                None => {
                    let mut s = sketch;
                    s.decode_traced(limits)
                }
            };
            print_report(&report_of(&outcome, trace.then_some(&tr)), format)
        }
        Command::Reconcile {
            local_keys,
            remote_sketch,
        } => {
            let keys = read_keys(&local_keys)?;
            let remote = fs::read(&remote_sketch)
                .with_context(|| format!("reading {}", remote_sketch.display()))?;
            let report = reconcile_local(keys, &remote, DecodeLimits::default())?;
            let out = DecodeReport {
                status: report.status.to_string(),
                rounds_used: report.rounds_used,
                steps: None,
                keys: report.difference,
                bytes_on_wire: Some(report.bytes_on_wire),
                trace: None,
            };
            print_report(&out, format)
        }
        Command::Bench(bench) => run_bench(bench, format),
    }
}

fn run_bench(bench: Bench, format: Format) -> anyhow::Result<i32> {
    match bench {
        Bench::Sweep {
            common,
            n,
            loads,
            trials,
            r,
        } => {
            let spec = SweepSpec {
                k: common.k,
                n,
                loads,
                trials,
                base_seed: common.seed,
                guard_bits: r,
            };
            emit(&run_sweep(&spec)?, format, common.out.as_deref())?;
        }
        Bench::Threshold {
            common,
            n,
            trials,
            tol,
        } => {
            let est = estimate_threshold(common.k, n, trials, tol, common.seed)?;
            emit(&[est], format, common.out.as_deref())?;
        }
        Bench::Timing {
            common,
            c,
            n,
            repeats,
        } => {
            emit(
                &time_decode(common.k, c, &n, repeats, common.seed)?,
                format,
                common.out.as_deref(),
            )?;
        }
        Bench::Anomalies {
            common,
            n,
            c,
            trials,
        } => {
            let stats = anomaly_stats(n, c, common.k, trials, common.seed)?;
            emit(&[stats], format, common.out.as_deref())?;
        }
    }
    Ok(EXIT_OK)
}
