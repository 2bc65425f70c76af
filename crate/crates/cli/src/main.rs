//! `absnormal`: command-line front end for the normal-number constructions
//! and the equidistribution toolkit.
//!
//! Exit codes: 0 success, 1 I/O or verification failure, 2 invalid input,
//! 3 a scale or precision cap was hit.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use absnormal::arith::{format_rational, parse_rational, DEFAULT_PRECISION_CAP};
use absnormal::constants::{analyze_pair, compute_constants, Variant};
use absnormal::equidist::{
    default_h, discrepancy_extreme, discrepancy_star, doubling_lengths, erdos_turan_bound, hs5_bound_holds,
    hs5_sum, orbit_table, weyl_sum, EtConstants, DEFAULT_HS5_TOL,
};
use absnormal::plan::{default_plan, ln_a20_all_n, toy_plan_from_csv, SequencePlan, DEFAULT_LN_BETA_FLOOR};
use absnormal::report::{orbit_rows_table, schmidt_report, sierpinski_report, ExperimentReport};
use absnormal::schedule::Schedule;
use absnormal::schmidt::{emit_digits, verify_state, ConstructionState, DEFAULT_WIDTH_CAP};
use absnormal::sierpinski::{verify_sierpinski, MeasureMode, SierpinskiParams, SierpinskiState, ToyCaps};
use absnormal::{Error, Rational};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::json;

#[derive(Parser)]
#[command(name = "absnormal", version, about = "Construct absolutely normal numbers and measure their equidistribution")]
struct Cli {
    /// worker threads for the parallel sections (results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explicit constants for a base pair
    Constants {
        #[arg(long)]
        r: u64,
        #[arg(long)]
        s: u64,
        #[arg(long, default_value = "large-n")]
        variant: String,
        #[arg(long)]
        json: bool,
    },
    /// Emit a sequence plan as JSON
    Plan {
        #[arg(long, default_value_t = 16)]
        horizon: usize,
        /// CSV rows `r,s,beta[,gamma]`
        #[arg(long)]
        toy: Option<PathBuf>,
        /// lower clamp for ln beta in the default plan
        #[arg(long, default_value_t = DEFAULT_LN_BETA_FLOOR, allow_hyphen_values = true)]
        ln_beta_floor: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The exhaustive-minimisation construction
    Schmidt {
        #[command(subcommand)]
        action: SchmidtAction,
    },
    /// The interval-removal construction
    Sierpinski {
        #[command(subcommand)]
        action: SierpinskiAction,
    },
    /// Discrepancy of point sets and orbits
    Disc {
        #[command(subcommand)]
        action: DiscAction,
    },
    /// Weyl sum of the orbit b^n x, n = 1..N
    Weyl {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        t: i64,
    },
    /// Erdős–Turán bound for the orbit b^n x
    Et {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long = "H")]
        h: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 3.0)]
        c2: f64,
    },
    /// Truncated cosine-product sum over a digit window
    Hs5 {
        #[arg(long)]
        r: u64,
        #[arg(long)]
        s: u64,
        #[arg(long)]
        l: BigUint,
        #[arg(long = "K")]
        k: u32,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_HS5_TOL)]
        tol: f64,
    },
    /// Rebuild a report from a saved state file
    Report {
        #[arg(long)]
        state: PathBuf,
        /// bases in which the orbit of the constructed number is measured
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        bases: Vec<u64>,
        /// largest orbit length (lengths double up to it)
        #[arg(long = "N", default_value_t = 256)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SchmidtAction {
    /// Run (or resume) the construction
    Run {
        /// paper | power:C | toy:FILE
        #[arg(long, default_value = "paper")]
        schedule: String,
        #[arg(long)]
        steps: usize,
        /// plan JSON as written by `plan`; default plan otherwise
        #[arg(long)]
        plan: Option<PathBuf>,
        /// horizon of the default plan (raised to cover the run)
        #[arg(long, default_value_t = 16)]
        horizon: usize,
        #[arg(long)]
        state: PathBuf,
        /// continue from the state file, adding `steps` steps
        #[arg(long)]
        resume: bool,
        #[arg(long, default_value_t = DEFAULT_WIDTH_CAP)]
        width_cap: u32,
        #[arg(long, env = "ABSNORMAL_PRECISION_CAP", default_value_t = DEFAULT_PRECISION_CAP)]
        precision_cap: u32,
        /// replay every step single-threaded and re-check each argmin
        #[arg(long)]
        verify: bool,
    },
    /// Digits of the constructed number that are already certain
    Digits {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        base: u32,
        #[arg(long)]
        max: Option<usize>,
    },
}

#[derive(Subcommand)]
enum SierpinskiAction {
    /// Run (or resume) the construction
    Run {
        #[arg(long, default_value_t = 2)]
        base: u32,
        #[arg(long, default_value = "1/2")]
        eps: String,
        #[arg(long)]
        digits: usize,
        /// JSON caps replacing the true truncation ranges
        #[arg(long)]
        toy: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        resume: bool,
        /// recompute each step in both measure modes and compare
        #[arg(long)]
        verify: bool,
    },
}

#[derive(Subcommand)]
enum DiscAction {
    /// Exact discrepancies of the rationals in a CSV file
    Exact {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Discrepancy table of the orbit b^n x along doubling lengths
    Orbit {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        report: Format,
    },
}

#[derive(Args)]
struct OrbitArgs {
    #[arg(long)]
    x: String,
    #[arg(long)]
    base: u64,
    #[arg(long = "N")]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Bound,
}

enum Failure {
    Core(Error),
    Io(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Core(
            Error::PrecisionExhausted { .. } | Error::WidthExceedsCap { .. } | Error::ScaleExceedsCap { .. },
        ) => 3,
        Failure::Core(Error::Verification(_)) | Failure::Io(_) | Failure::Verify(_) => 1,
        Failure::Core(_) => 2,
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn rational_arg(s: &str) -> CliResult<Rational> {
    Ok(parse_rational(s)?)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serialises");
    s.push('\n');
    s
}

fn parse_points(text: &str) -> CliResult<Vec<Rational>> {
    let mut pts = Vec::new();
    for (i, field) in text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split(','))
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .enumerate()
    {
        match parse_rational(field) {
            Ok(x) => pts.push(x),
            // a header such as `x` is tolerated in first position
            Err(_) if i == 0 => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(pts)
}

fn load_plan(path: Option<&Path>, horizon: usize) -> CliResult<SequencePlan> {
    match path {
        Some(p) => {
            let text = read(p)?;
            let plan: SequencePlan = serde_json::from_str(&text)
                .map_err(|e| Error::Invalid(format!("plan file {}: {e}", p.display())))?;
            plan.validate()?;
            Ok(plan)
        }
        None => Ok(default_plan(horizon, DEFAULT_LN_BETA_FLOOR)?),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(format!("thread pool: {e}")))?;
    }
    let argv: Vec<String> = std::env::args().collect();
    match cli.command {
        Command::Constants { r, s, variant, json } => {
            let variant: Variant = variant.parse()?;
            let set = compute_constants(&analyze_pair(r, s)?, variant);
            if json {
                let v = serde_json::to_value(&set).expect("constants serialise");
                print!("{}", pretty(&v));
            } else {
                for (name, value, formula) in set.describe() {
                    println!("{name:<11} {value:<40} {formula}");
                }
            }
        }
        Command::Plan { horizon, toy, ln_beta_floor, out } => {
            let plan = match toy {
                Some(p) => toy_plan_from_csv(&read(&p)?, horizon)?,
                None => default_plan(horizon, ln_beta_floor)?,
            };
            let mut text = serde_json::to_string_pretty(&plan).expect("plan serialises");
            text.push('\n');
            emit(out.as_deref(), &text)?;
        }
        Command::Schmidt { action } => schmidt(action)?,
        Command::Sierpinski { action } => sierpinski(action)?,
        Command::Disc { action } => match action {
            DiscAction::Exact { points, json } => {
                let pts = parse_points(&read(&points)?)?;
                let ext = discrepancy_extreme(&pts)?;
                let star = discrepancy_star(&pts)?;
                if json {
                    print!(
                        "{}",
                        pretty(&json!({
                            "n": pts.len(),
                            "extreme": format_rational(&ext),
                            "star": format_rational(&star),
                        }))
                    );
                } else {
                    println!("extreme {}", format_rational(&ext));
                    println!("star {}", format_rational(&star));
                }
            }
            DiscAction::Orbit { orbit, report } => {
                let x = rational_arg(&orbit.x)?;
                let rows = orbit_table(&x, orbit.base, &doubling_lengths(orbit.n), EtConstants::default())?;
                let mut rep = ExperimentReport::new(argv, true);
                rep.descriptors.insert("x".into(), format_rational(&x));
                rep.tables.push(orbit_rows_table(orbit.base, &rows));
                match report {
                    Format::Json => print!("{}", rep.to_json()),
                    Format::Csv => print!("{}", rep.tables[0].to_csv()?),
                }
            }
        },
        Command::Weyl { orbit, t } => {
            let x = rational_arg(&orbit.x)?;
            let z = weyl_sum(&x, orbit.base, t, orbit.n);
            print!(
                "{}",
                pretty(&json!({
                    "x": format_rational(&x),
                    "base": orbit.base,
                    "t": t,
                    "N": orbit.n,
                    "re": z.re,
                    "im": z.im,
                    "abs": z.norm(),
                    "abs_over_N": if orbit.n > 0 { z.norm() / orbit.n as f64 } else { 0.0 },
                }))
            );
        }
        Command::Et { orbit, h, c1, c2 } => {
            let x = rational_arg(&orbit.x)?;
            let h = h.unwrap_or_else(|| default_h(orbit.n));
            let et = erdos_turan_bound(&x, orbit.base, orbit.n, h, EtConstants { c1, c2 })?;
            let pts = absnormal::equidist::orbit_points(&x, orbit.base, orbit.n);
            let ext = discrepancy_extreme(&pts)?;
            print!(
                "{}",
                pretty(&json!({
                    "x": format_rational(&x),
                    "base": orbit.base,
                    "N": orbit.n,
                    "H": et.h,
                    "bound": et.bound,
                    "normalised_sums": et.normalised_sums,
                    "extreme": format_rational(&ext),
                    "dominates": et.bound >= absnormal::arith::rational_to_f64(&ext),
                }))
            );
        }
        Command::Hs5 { r, s, l, k, n, tol } => {
            let res = hs5_sum(r, s, &l, k, n, tol)?;
            let ln_a20 = ln_a20_all_n(r, s);
            print!(
                "{}",
                pretty(&json!({
                    "r": r,
                    "s": s,
                    "l": l.to_string(),
                    "K": k,
                    "N": n,
                    "value": res.value,
                    "certified_error": res.certified_error,
                    "hypothesis_holds": res.hypothesis_holds,
                    "factors": res.factors,
                    "ln_a20_all_n": ln_a20,
                    "bound_holds": ln_a20.map(|a| hs5_bound_holds(res.value + res.certified_error, n, a)),
                }))
            );
        }
        Command::Report { state, bases, n, format, out } => {
            let text = read(&state)?;
            let lengths = doubling_lengths(n);
            let rep = match ConstructionState::from_json(&text) {
                Ok(st) => schmidt_report(&st, &bases, &lengths, argv)?,
                Err(first) => match SierpinskiState::from_json(&text) {
                    Ok(st) => sierpinski_report(&st, &bases, &lengths, argv)?,
                    Err(_) => return Err(first.into()),
                },
            };
            let body = match format {
                Format::Json => rep.to_json(),
                Format::Csv => rep.to_csv()?,
            };
            emit(out.as_deref(), &body)?;
        }
    }
    Ok(())
}

fn schmidt(action: SchmidtAction) -> CliResult<()> {
    match action {
        SchmidtAction::Run {
            schedule,
            steps,
            plan,
            horizon,
            state,
            resume,
            width_cap,
            precision_cap,
            verify,
        } => {
            let mut st = if resume {
                ConstructionState::load(&state)?
            } else {
                let plan = load_plan(plan.as_deref(), horizon.max(steps + 1))?;
                let schedule = Schedule::parse(&schedule, plan.s_at(1)?, precision_cap)?;
                ConstructionState::new(plan, schedule, width_cap)
            };
            // save whatever completed before a cap error
            let outcome = st.run(steps);
            st.save(&state).map_err(|e| Failure::Io(format!("cannot write {}: {e}", state.display())))?;
            outcome?;
            eprintln!(
                "{} steps, xi = {}, certified = {}",
                st.m,
                format_rational(&st.xi),
                st.certified()
            );
            if verify {
                let audits = verify_state(&st)?;
                if let Some(bad) = audits.iter().find(|a| !(a.argmin_confirmed && a.ordering_ok && a.nested)) {
                    return Err(Failure::Verify(format!("step {} failed verification: {bad:?}", bad.m)));
                }
                eprintln!("verified {} steps", audits.len());
            }
        }
        SchmidtAction::Digits { state, base, max } => {
            if base < 2 {
                return Err(Error::Invalid("base must be at least 2".into()).into());
            }
            let st = ConstructionState::load(&state)?;
            let mut d = emit_digits(&st, base);
            if let Some(m) = max {
                d.digits.truncate(m);
            }
            println!("{d}");
        }
    }
    Ok(())
}

fn sierpinski(action: SierpinskiAction) -> CliResult<()> {
    let SierpinskiAction::Run { base, eps, digits, toy, mode, state, resume, verify } = action;
    let mut st = if resume {
        SierpinskiState::load(&state)?
    } else {
        let caps = match toy {
            Some(p) => Some(
                serde_json::from_str::<ToyCaps>(&read(&p)?)
                    .map_err(|e| Error::Invalid(format!("caps file {}: {e}", p.display())))?,
            ),
            None => None,
        };
        let params = SierpinskiParams::new(rational_arg(&eps)?, base, caps)?;
        let mode = match mode {
            Mode::Exact => MeasureMode::Exact,
            Mode::Bound => MeasureMode::Bound,
        };
        SierpinskiState::new(params, mode)
    };
    let outcome = st.run(digits);
    st.save(&state).map_err(|e| Failure::Io(format!("cannot write {}: {e}", state.display())))?;
    outcome?;
    println!("{}", st.digits);
    eprintln!("{} digits, certified = {}", st.digits.len(), st.certified());
    if verify {
        let audits = verify_sierpinski(&st)?;
        if let Some(s) = st.steps.iter().find(|s| !s.survives) {
            return Err(Failure::Verify(format!("digit {} leaves no surviving mass", s.n)));
        }
        eprintln!("verified {} digits", audits.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Core(e) => e.to_string(),
                Failure::Io(m) | Failure::Verify(m) => m.clone(),
            };
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&f))
        }
    }
}
