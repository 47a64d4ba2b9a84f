use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aar_cli::dsl::parse_spec;
use aar_core::balance::{balanced_verdict, BalanceError, Mode};
use aar_core::classify::{classify, verdicts_for, ClassifyError};
use aar_core::construct::{ConstructError, Goal, Options, Placement, Registry, TubeSchedule, ZSet};
use aar_core::num::{parse_number, render_decimal, render_rational, ExtendedReal, Rational};
use aar_core::seq::{profile, SeqError, SequenceSpec};
use aar_core::verify::{envelope_oracle, trace, Trace};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aar", version, about = "Limits in average reachable by rearranging a sequence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Numeric,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Analytic => Mode::AnalyticOnly,
            ModeArg::Numeric => Mode::WithNumericEvidence,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    Floor,
    Centered,
}

#[derive(Args)]
struct Evidence {
    /// How verdicts without an analytic rule are handled.
    #[arg(long, value_enum, default_value = "analytic")]
    mode: ModeArg,
    /// Horizon for numeric evidence.
    #[arg(long = "n", default_value_t = 100_000)]
    horizon: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Print the set of limits in average reachable by rearrangement.
    Classify {
        spec: String,
        #[command(flatten)]
        evidence: Evidence,
    },
    /// Decide whether c_n / (c_1 + ... + c_(n-1)) -> 0 for a sequence tending to +inf.
    Balanced {
        spec: String,
        #[command(flatten)]
        evidence: Evidence,
    },
    /// Build a rearrangement and write its permutation prefix and trace.
    Construct {
        spec: String,
        /// Limit in average to reach (`p/q`, decimal, `+inf` or `-inf`).
        #[arg(long, allow_hyphen_values = true, group = "goal")]
        target: Option<String>,
        /// Make the averages oscillate.
        #[arg(long, group = "goal")]
        oscillate: bool,
        /// Make the averages accumulate exactly at Z, e.g. `1/4, 3/4` or `[0, 1]`.
        #[arg(long, group = "goal")]
        realize: Option<String>,
        /// Strategy name; the first applicable one when omitted.
        #[arg(long)]
        strategy: Option<String>,
        /// Number of outputs.
        #[arg(long = "n", default_value_t = 100_000)]
        n: u64,
        /// Output path stem: writes STEM.csv, STEM.perm and, if any, STEM.schedule.
        #[arg(long, default_value = "trace")]
        out: PathBuf,
        /// Write exact p/q columns in the CSV.
        #[arg(long)]
        exact: bool,
        #[arg(long, value_enum, default_value = "floor")]
        placement: PlacementArg,
    },
    /// List the registered construction strategies.
    Strategies,
    /// Check a trace CSV; exit status 1 when any check fails.
    Verify {
        #[arg(long, default_value = "trace.csv")]
        trace: PathBuf,
        /// Averages within EPS of TARGET (beyond 1/EPS for infinite targets).
        #[arg(long, num_args = 2, value_names = ["TARGET", "EPS"], allow_hyphen_values = true)]
        tube: Option<Vec<String>>,
        /// First index the tube applies to.
        #[arg(long, default_value_t = 1)]
        from: u64,
        /// Tube schedule file written by `construct`.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Exact recurrence and jump identities.
        #[arg(long)]
        identities: bool,
        /// Source indices pairwise distinct.
        #[arg(long)]
        distinct: bool,
        /// Source indices 1..=K all present.
        #[arg(long, value_name = "K")]
        cover: Option<u64>,
    },
    /// Extremes and, for up to 12 values, every average of K of the VALUES.
    Oracle {
        /// Comma-separated rationals.
        values: String,
        k: usize,
    },
}

struct Failure {
    code: &'static str,
    detail: String,
}

impl Failure {
    fn new(code: &'static str, detail: impl ToString) -> Self {
        Failure { code, detail: detail.to_string() }
    }
}

fn seq_code(e: &SeqError) -> &'static str {
    match e {
        SeqError::Malformed(_) => "malformed-spec",
        SeqError::UnknownProfile(_) => "unknown-profile",
        SeqError::InconsistentProfile(_) => "inconsistent-profile",
    }
}

fn balance_code(e: &BalanceError) -> &'static str {
    match e {
        BalanceError::NonPositiveTerm(_) => "non-positive-term",
        BalanceError::IndexTooSmall(_) => "index-too-small",
        BalanceError::NotDivergent(_) => "not-divergent",
        BalanceError::Profile(e) => seq_code(e),
    }
}

impl From<ConstructError> for Failure {
    fn from(e: ConstructError) -> Self {
        let code = match &e {
            ConstructError::UndeclaredLimit => "undeclared-limit",
            ConstructError::WeightOutOfRange(_) => "weight-out-of-range",
            ConstructError::TargetUnreachable { .. } => "target-unreachable",
            ConstructError::DegenerateRange(_) => "degenerate-range",
            ConstructError::NotDivergent(_) => "not-divergent",
            ConstructError::NotBalanced(_) => "not-balanced",
            ConstructError::TargetNotAbove { .. } => "target-not-above",
            ConstructError::DensityFails(_) => "density-fails",
            ConstructError::ZOutsideRange { .. } => "z-outside-range",
            ConstructError::MissingInfinity(_) => "missing-infinity",
            ConstructError::InsufficientEvidence(_) => "insufficient-evidence",
            ConstructError::UnknownStrategy(_) => "unknown-strategy",
            ConstructError::Unsupported(_) => "unsupported",
            ConstructError::Profile(e) => seq_code(e),
            ConstructError::Balance(e) => balance_code(e),
        };
        Failure::new(code, e)
    }
}

impl From<ClassifyError> for Failure {
    fn from(e: ClassifyError) -> Self {
        let code = match &e {
            ClassifyError::InsufficientEvidence(_) => "insufficient-evidence",
            ClassifyError::Profile(e) => seq_code(e),
            ClassifyError::Balance(e) => balance_code(e),
        };
        Failure::new(code, e)
    }
}

impl From<BalanceError> for Failure {
    fn from(e: BalanceError) -> Self {
        Failure::new(balance_code(&e), e)
    }
}

impl From<SeqError> for Failure {
    fn from(e: SeqError) -> Self {
        Failure::new(seq_code(&e), e)
    }
}

fn spec_arg(text: &str) -> Result<SequenceSpec, Failure> {
    parse_spec(text).map_err(|e| Failure::new("parse", e))
}

fn number(text: &str) -> Result<Rational, Failure> {
    parse_number(text).map_err(|e| Failure::new("bad-number", e))
}

fn extended(text: &str) -> Result<ExtendedReal, Failure> {
    match text.trim() {
        "+inf" | "inf" => Ok(ExtendedReal::PosInf),
        "-inf" => Ok(ExtendedReal::NegInf),
        t => number(t).map(ExtendedReal::Finite),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))
}

fn with_extension(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Runs one command; `Ok(false)` means a verification check failed.
fn run(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::Classify { spec, evidence } => {
            let spec = spec_arg(&spec)?;
            let v = verdicts_for(&spec, evidence.mode.into(), evidence.horizon)?;
            println!("{}", classify(&profile(&spec)?, &v)?);
        }
        Command::Balanced { spec, evidence } => {
            let spec = spec_arg(&spec)?;
            println!("{}", balanced_verdict(&spec, evidence.mode.into(), evidence.horizon)?);
        }
        Command::Construct { spec, target, oscillate, realize, strategy, n, out, exact, placement } => {
            let spec = spec_arg(&spec)?;
            let goal = match (target, oscillate, realize) {
                (Some(t), _, _) => Goal::Target(extended(&t)?),
                (_, true, _) => Goal::Oscillate,
                (_, _, Some(z)) => Goal::Realize(z.parse::<ZSet>().map_err(|e| Failure::new("bad-z", e))?),
                _ => return Err(Failure::new("usage", "one of --target, --oscillate, --realize is required")),
            };
            let placement = match placement {
                PlacementArg::Floor => Placement::Floor,
                PlacementArg::Centered => Placement::Centered,
            };
            let (name, mut r) = Registry::default().build(&spec, &goal, strategy.as_deref(), &Options { placement })?;
            let t = trace(&mut r, n);
            let mut perm = String::with_capacity(16 * t.entries.len());
            for e in &t.entries {
                let _ = writeln!(perm, "{} {}", e.n, e.source_index);
            }
            write(&with_extension(&out, "csv"), &t.to_csv(exact))?;
            write(&with_extension(&out, "perm"), &perm)?;
            if let Some(s) = r.schedule() {
                write(&with_extension(&out, "schedule"), &s.to_string())?;
            }
            println!("strategy {name}");
            println!("outputs {}", t.len());
            if let Some(e) = t.entries.last() {
                println!("average {}", render_decimal(&e.average, 12));
            }
        }
        Command::Strategies => {
            let reg = Registry::default();
            for name in reg.names() {
                println!("{name}: {}", reg.get(name)?.summary());
            }
        }
        Command::Verify { trace: path, tube, from, schedule, identities, distinct, cover } => {
            let text = read(&path)?;
            let t = Trace::from_csv(&text).map_err(|e| Failure::new("bad-trace", e))?;
            let exact = text.lines().nth(1).is_none_or(|l| !l.trim_end().ends_with(','));
            if identities && !exact {
                return Err(Failure::new("usage", "exact identities need a trace written with --exact"));
            }
            if tube.is_none() && schedule.is_none() && !identities && !distinct && cover.is_none() {
                return Err(Failure::new("usage", "no check requested"));
            }
            let mut ok = true;
            let mut report = |name: &str, failure: Option<String>| {
                match &failure {
                    None => println!("PASS {name}"),
                    Some(why) => println!("FAIL {name}: {why}"),
                }
                ok &= failure.is_none();
            };
            if let Some(args) = tube {
                let (target, eps) = (extended(&args[0])?, number(&args[1])?);
                let v = t.tube_violation(&target, &eps, from);
                report("tube", v.map(|n| format!("average at n = {n} is {}", render_decimal(t.average(n).expect("in trace"), 12))));
            }
            if let Some(p) = schedule {
                let s: TubeSchedule = read(&p)?.parse().map_err(|e| Failure::new("bad-schedule", e))?;
                report("schedule", t.schedule_violation(&s).map(|(k, n)| format!("stage {k} left at n = {n}")));
            }
            if identities {
                report("recurrence", t.recurrence_violation().map(|n| format!("n = {n}")));
                report("jump-identity", t.jump_identity_violation().map(|n| format!("n = {n}")));
            }
            if distinct {
                let mut seen = std::collections::HashSet::new();
                let dup = t.entries.iter().find(|e| !seen.insert(e.source_index));
                report("distinct", dup.map(|e| format!("index {} repeated at n = {}", e.source_index, e.n)));
            }
            if let Some(k) = cover {
                let present: std::collections::HashSet<u64> = t.entries.iter().map(|e| e.source_index).collect();
                let missing = (1..=k).find(|i| !present.contains(i));
                report("cover", missing.map(|i| format!("index {i} missing")));
            }
            return Ok(ok);
        }
        Command::Oracle { values, k } => {
            let values = values.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
            let e = envelope_oracle(&values, k).map_err(|e| Failure::new("bad-k", e))?;
            match e.achievable {
                Some(set) => println!("{}", set.iter().map(render_rational).collect::<Vec<_>>().join(", ")),
                None => println!("[{}, {}]", render_rational(&e.min), render_rational(&e.max)),
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("ERROR {}: {}", f.code, f.detail);
            ExitCode::from(2)
        }
    }
}
