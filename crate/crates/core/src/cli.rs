//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime failures.
//! Diagnostics go to stderr; stdout and `--out` files only ever carry results.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::channel::read_fixture;
use crate::error::{Error, Result};
use crate::flops::ratio_table;
use crate::select::{select, select_maxr, Selector};
use crate::sim::{
    parse_selector_choice, run_ber_arms, run_sumrate_arms, write_ber_csv, write_sumrate_csv, Arm,
    Scheme, SimConfig, DEFAULT_TARGET_BIT_ERRORS,
};

pub const SEED_ENV: &str = "MUMIMO_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "mimo-tas",
    version,
    about = "Transmit antenna selection for multiuser MIMO with ZF and THP precoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo bit error rate curves (16-QAM).
    Ber(BerArgs),
    /// Monte Carlo mean sum rate curves.
    Sumrate(RateArgs),
    /// Closed-form selector complexity and ratio to exhaustive search.
    Complexity(ComplexityArgs),
    /// Run one selector on a channel fixture.
    Select(SelectArgs),
}

#[derive(Debug, Args)]
struct CommonSim {
    /// Precoding scheme: lzf, zfthp or all.
    #[arg(long, default_value = "lzf")]
    scheme: String,
    /// Selector: optimum, rc, maxr, singleqr, none or all.
    #[arg(long, default_value = "none")]
    selector: String,
    /// Number of transmit antennas N.
    #[arg(long, value_parser = parse_count)]
    n: usize,
    /// Number of users M (= RF chains).
    #[arg(long, value_parser = parse_count)]
    m: usize,
    /// SNR grid in dB as start:step:stop (inclusive) or a single value.
    #[arg(long, value_parser = parse_snr_grid)]
    snr: SnrGrid,
    /// Random seed; defaults to $MUMIMO_SEED, then 1.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, value_parser = parse_count)]
    workers: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BerArgs {
    #[command(flatten)]
    common: CommonSim,
    /// Maximum trials per SNR point; scientific notation accepted.
    #[arg(long, value_parser = parse_trials, default_value = "1e6")]
    trials: u64,
    /// Stop a point once this many bit errors are counted.
    #[arg(long, value_parser = parse_trials, default_value_t = DEFAULT_TARGET_BIT_ERRORS)]
    target_errors: u64,
}

#[derive(Debug, Args)]
struct RateArgs {
    #[command(flatten)]
    common: CommonSim,
    /// Channel realizations per SNR point; scientific notation accepted.
    #[arg(long, value_parser = parse_trials, default_value = "1e4")]
    trials: u64,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    #[arg(long, value_parser = parse_count)]
    n: usize,
    #[arg(long, value_parser = parse_count)]
    m: usize,
    /// Emit CSV instead of an aligned table.
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// Channel fixture file.
    #[arg(long)]
    channel: PathBuf,
    /// optimum, rc, maxr or singleqr.
    #[arg(long, value_parser = parse_selector)]
    selector: Selector,
    /// Disable maxR pruning.
    #[arg(long)]
    no_prune: bool,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid(pub Vec<f64>);

/// Parses `start:step:stop` (inclusive) or a single value.
pub fn parse_snr_grid(s: &str) -> std::result::Result<SnrGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("invalid number {t:?} in SNR grid"))
    };
    match parts.as_slice() {
        [one] => Ok(SnrGrid(vec![num(one)?])),
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step <= 0.0 {
                return Err("SNR step must be positive".into());
            }
            if stop < start {
                return Err("SNR stop must not be below start".into());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return Err("SNR grid too large".into());
            }
            Ok(SnrGrid(
                (0..count).map(|i| start + i as f64 * step).collect(),
            ))
        }
        _ => Err("expected start:step:stop or a single value".into()),
    }
}

/// Positive integer count, accepting forms like `2e6` and `1000`.
pub fn parse_trials(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return if v >= 1 {
            Ok(v)
        } else {
            Err("must be at least 1".into())
        };
    }
    let v: f64 = s.parse().map_err(|_| format!("invalid count {s:?}"))?;
    if !v.is_finite() || v < 1.0 || v.fract() != 0.0 || v > 1e15 {
        return Err(format!("{s:?} is not a positive integer count"));
    }
    Ok(v as u64)
}

fn parse_count(s: &str) -> std::result::Result<usize, String> {
    let v: usize = s.parse().map_err(|_| format!("invalid count {s:?}"))?;
    if v == 0 || v > 64 * 1024 {
        return Err(format!("{v} is out of range"));
    }
    Ok(v)
}

fn parse_selector(s: &str) -> std::result::Result<Selector, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 2,
            };
        }
    };
    let outcome = match cli.command {
        Command::Ber(a) => run_ber_cmd(a),
        Command::Sumrate(a) => run_sumrate_cmd(a),
        Command::Complexity(a) => run_complexity_cmd(a),
        Command::Select(a) => run_select_cmd(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> std::result::Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v:?} is not a valid seed"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn resolve_arms(scheme: &str, selector: &str) -> std::result::Result<Vec<Arm>, Failure> {
    let schemes: Vec<Scheme> = if scheme.eq_ignore_ascii_case("all") {
        vec![Scheme::Lzf, Scheme::ZfThp]
    } else {
        vec![scheme
            .parse()
            .map_err(|_| Failure::Usage(format!("invalid value {scheme:?} for '--scheme'")))?]
    };
    let selectors: Vec<Option<Selector>> = if selector.eq_ignore_ascii_case("all") {
        Selector::ALL.iter().copied().map(Some).collect()
    } else {
        vec![parse_selector_choice(selector)
            .map_err(|_| Failure::Usage(format!("invalid value {selector:?} for '--selector'")))?]
    };
    Ok(schemes
        .iter()
        .flat_map(|&scheme| selectors.iter().map(move |&selector| Arm { scheme, selector }))
        .collect())
}

fn sim_config(
    c: &CommonSim,
    arm: Arm,
    trials: u64,
    target: u64,
) -> std::result::Result<SimConfig, Failure> {
    if c.n < c.m {
        return Err(Failure::Usage(format!(
            "'--n' ({}) must be at least '--m' ({})",
            c.n, c.m
        )));
    }
    Ok(SimConfig {
        n_antennas: c.n,
        n_users: c.m,
        scheme: arm.scheme,
        selector: arm.selector,
        snr_grid_db: c.snr.0.clone(),
        max_trials: trials,
        target_bit_errors: target,
        seed: resolve_seed(c.seed)?,
    })
}

fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> std::result::Result<T, Failure> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Failure::Runtime(Error::Config(e.to_string())))?;
            Ok(pool.install(f))
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_ber_cmd(a: BerArgs) -> std::result::Result<(), Failure> {
    let arms = resolve_arms(&a.common.scheme, &a.common.selector)?;
    let config = sim_config(&a.common, arms[0], a.trials, a.target_errors)?;
    let started = Instant::now();
    let curves = with_workers(a.common.workers, || run_ber_arms(&config, &arms))??;
    for c in &curves {
        if c.discarded > 0 {
            eprintln!(
                "note: {}/{} discarded {} singular trials",
                c.arm.scheme,
                crate::sim::selector_label(c.arm.selector),
                c.discarded
            );
        }
    }
    eprintln!("ber: {} curves in {:.2?}", curves.len(), started.elapsed());
    let out = open_output(a.common.out.as_deref())?;
    write_ber_csv(out, config.n_antennas, config.n_users, &curves)?;
    Ok(())
}

fn run_sumrate_cmd(a: RateArgs) -> std::result::Result<(), Failure> {
    let arms = resolve_arms(&a.common.scheme, &a.common.selector)?;
    let config = sim_config(&a.common, arms[0], a.trials, DEFAULT_TARGET_BIT_ERRORS)?;
    let started = Instant::now();
    let curves = with_workers(a.common.workers, || run_sumrate_arms(&config, &arms))??;
    eprintln!("sumrate: {} curves in {:.2?}", curves.len(), started.elapsed());
    let out = open_output(a.common.out.as_deref())?;
    write_sumrate_csv(out, config.n_antennas, config.n_users, &curves)?;
    Ok(())
}

#[derive(Serialize)]
struct ComplexityRow {
    scheme: Selector,
    flops: f64,
    ratio_pct: String,
}

fn run_complexity_cmd(a: ComplexityArgs) -> std::result::Result<(), Failure> {
    if a.n < a.m {
        return Err(Failure::Usage(format!(
            "'--n' ({}) must be at least '--m' ({})",
            a.n, a.m
        )));
    }
    let rows = ratio_table(a.n, a.m)?;
    let mut out = open_output(a.out.as_deref())?;
    if a.csv {
        let mut w = csv::Writer::from_writer(out);
        for r in &rows {
            w.serialize(ComplexityRow {
                scheme: r.scheme,
                flops: r.flops,
                ratio_pct: r.rounded_ratio(),
            })
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush().map_err(Error::from)?;
    } else {
        let write = |out: &mut Box<dyn Write>| -> io::Result<()> {
            writeln!(out, "N = {}, M = {}", a.n, a.m)?;
            writeln!(out, "{:<10} {:>16} {:>12}", "scheme", "flops", "C/Copt*100")?;
            for r in &rows {
                writeln!(
                    out,
                    "{:<10} {:>16} {:>12}",
                    r.scheme.name(),
                    format_flops(r.flops),
                    r.rounded_ratio()
                )?;
            }
            out.flush()
        };
        write(&mut out).map_err(Error::from)?;
    }
    Ok(())
}

fn format_flops(f: f64) -> String {
    if f.fract() == 0.0 {
        format!("{f:.0}")
    } else {
        format!("{f:.2}")
    }
}

#[derive(Serialize)]
struct SelectJson {
    selector: Selector,
    subset: Vec<usize>,
    metric: f64,
    flops: u64,
}

fn run_select_cmd(a: SelectArgs) -> std::result::Result<(), Failure> {
    let channel = read_fixture(&a.channel)?;
    let result = match (a.selector, a.no_prune) {
        (Selector::MaxR, true) => select_maxr(&channel.h, false)?,
        (sel, _) => select(&channel.h, sel)?,
    };
    let report = SelectJson {
        selector: a.selector,
        subset: result.subset.one_based(),
        metric: result.metric,
        flops: result.flops.weighted(),
    };
    let mut out = io::stdout().lock();
    let res = if a.json {
        serde_json::to_writer(&mut out, &report)
            .map_err(io::Error::from)
            .and_then(|_| writeln!(out))
    } else {
        let subset: Vec<String> = report.subset.iter().map(|i| i.to_string()).collect();
        writeln!(out, "selector: {}", report.selector)
            .and_then(|_| writeln!(out, "subset: {}", subset.join(" ")))
            .and_then(|_| writeln!(out, "metric: {}", report.metric))
            .and_then(|_| writeln!(out, "flops: {}", report.flops))
    };
    res.map_err(Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_grid_inclusive() {
        let g = parse_snr_grid("0:2:24").unwrap();
        assert_eq!(g.0.len(), 13);
        assert_eq!(g.0[12], 24.0);
        assert_eq!(parse_snr_grid("5").unwrap().0, vec![5.0]);
        assert_eq!(parse_snr_grid("0:0.5:1").unwrap().0, vec![0.0, 0.5, 1.0]);
        assert!(parse_snr_grid("0:0:3").is_err());
        assert!(parse_snr_grid("3:1:0").is_err());
        assert!(parse_snr_grid("a:1:2").is_err());
        assert!(parse_snr_grid("1:2").is_err());
    }

    #[test]
    fn trial_counts() {
        assert_eq!(parse_trials("2e6").unwrap(), 2_000_000);
        assert_eq!(parse_trials("1000").unwrap(), 1000);
        assert_eq!(parse_trials("1.5e3").unwrap(), 1500);
        assert!(parse_trials("0").is_err());
        assert!(parse_trials("2.5").is_err());
        assert!(parse_trials("-1e3").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(dispatch(["mimo-tas", "complexity", "--n", "8"]), 2);
        assert_eq!(dispatch(["mimo-tas", "complexity", "--n", "8", "--m", "4", "--bogus"]), 2);
        assert_eq!(dispatch(["mimo-tas", "complexity", "--n", "3", "--m", "4"]), 2);
        assert_eq!(dispatch(["mimo-tas", "frobnicate"]), 2);
    }
}
