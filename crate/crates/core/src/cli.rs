//! Command-line front end. `main.rs` only forwards to [`run_cli`].

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::Error;
use crate::exact::{self, format_rational, DEFAULT_ENUMERATION_CAP};
use crate::generators::Family;
use crate::io::{format_profile, load_profile};
use crate::mechanisms::MechanismSpec;
use crate::montecarlo::{
    estimate, exact_report, fit_comment_lines, parse_sweep_config, rows_to_csv, rows_to_json, sweep, DeltaParam,
    GapReport, GeneratorTemplate, KParam, SweepRow, TrialPlan,
};
use crate::profile::Model;
use crate::verify::{
    builtin_oracle, catalog, check_impartial, check_sample_constant, check_sample_mechanism_impartial,
    check_strong_sample, measure_additive_gap_exhaustive, refute_two_additive, sample_function, ExactMechanism,
    MechanismOracle, ProfileSpace, Witness, DEFAULT_PROFILE_BUDGET,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Witnesses printed in text mode before the rest are summarized.
const SHOWN_WITNESSES: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "impsel", version, about = "Impartial selection mechanisms: simulation, exact evaluation, verification")]
pub struct Cli {
    /// Master seed; required wherever randomness is used.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a profile from an instance family.
    Gen(GenArgs),
    /// Estimate (or compute exactly) the additive gap of a mechanism on a profile.
    Run(RunArgs),
    /// Print the exact winner distribution.
    Exact(ExactArgs),
    /// Run a sweep described by a JSON config.
    Sweep(SweepArgs),
    /// Exhaustive checks over small profile spaces.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Run the four-vertex refutation driver against a built-in oracle.
    Refute(RefuteArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub family: Family,
    #[arg(long)]
    pub n: usize,
    /// Degree of vertex 0 for single-worst (default: the bound-stress degree).
    #[arg(long)]
    pub delta: Option<usize>,
    #[arg(long)]
    pub v: Option<usize>,
    /// Sample size for bound-stress (default: ⌈√n⌉).
    #[arg(long)]
    pub k: Option<usize>,
    /// Edge probability for random-multi.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub center: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub mech: MechanismSpec,
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, conflicts_with = "trials")]
    pub exact: bool,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Cap on enumerated draw sequences for --exact.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub budget: u128,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub mech: MechanismSpec,
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub budget: u128,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub config: PathBuf,
    /// Append a log-log fit of gap against n per mechanism.
    #[arg(long)]
    pub fit: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Target {
    #[arg(long)]
    pub mech: Option<MechanismSpec>,
    /// Built-in deterministic oracle: dictator:V, plurality, majority-default:D, fixed-sample:V.
    #[arg(long)]
    pub oracle: Option<String>,
}

#[derive(Debug, Args)]
pub struct SpaceArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "single")]
    pub model: Model,
    /// Cap on the number of profiles enumerated.
    #[arg(long, default_value_t = DEFAULT_PROFILE_BUDGET)]
    pub budget: u128,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Exhaustive impartiality check.
    Impartial {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Strong-sample, impartiality and constancy checks for a sample function.
    StrongSample {
        /// Catalog name, or `all`.
        #[arg(long)]
        g: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_PROFILE_BUDGET)]
        budget: u128,
    },
    /// Exact worst-case additive gap over a profile space.
    Gap {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        space: SpaceArgs,
    },
}

#[derive(Debug, Args)]
pub struct RefuteArgs {
    #[arg(long)]
    pub oracle: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_) | Error::Config { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

struct Output {
    text: String,
    code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, code: EXIT_OK }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(rendered.as_bytes()) } else { stderr.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Failure::Runtime(e.to_string())),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &out.text).map_err(|e| format!("{}: {e}", path.display())),
                None => stdout.write_all(out.text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => out.code,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    EXIT_FAILURE
                }
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "usage error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(cli, a),
        Command::Run(a) => cmd_run(cli, a),
        Command::Exact(a) => cmd_exact(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Verify(v) => cmd_verify(cli, v),
        Command::Refute(a) => cmd_refute(cli, a),
    }
}

fn cmd_gen(cli: &Cli, a: &GenArgs) -> Result<Output, Failure> {
    let mut t = GeneratorTemplate::new(a.family);
    if let Some(d) = a.delta {
        t.delta = DeltaParam::Fixed(d);
    }
    if let Some(k) = a.k {
        t.k = KParam::Fixed(k);
    }
    if let Some(v) = a.v {
        t.v = v;
    }
    if let Some(p) = a.p {
        t.p = p;
    }
    if let Some(c) = a.center {
        t.center = c;
    }
    let seed = match (a.family.is_seeded(), cli.seed) {
        (true, None) => return Err(Failure::Usage(format!("--seed is required for {}", a.family))),
        (_, s) => s.unwrap_or(0),
    };
    let profile = t.resolve(a.n, seed).generate()?;
    Ok(Output::ok(format_profile(&profile)))
}

fn report_text(mechanism: &MechanismSpec, r: &GapReport) -> String {
    let mut s = String::new();
    writeln!(s, "mechanism {mechanism}").unwrap();
    writeln!(s, "n {}", r.n).unwrap();
    writeln!(s, "k {}", r.k).unwrap();
    writeln!(s, "delta {}", r.delta).unwrap();
    writeln!(s, "mean_degree {}", r.mean_degree).unwrap();
    if let Some(m) = &r.mean_degree_exact {
        writeln!(s, "mean_degree_exact {m}").unwrap();
    }
    writeln!(s, "gap {}", r.gap).unwrap();
    writeln!(s, "std_err {}", r.std_err).unwrap();
    writeln!(s, "ci95 {}", r.ci95_half_width).unwrap();
    writeln!(s, "no_winner_rate {}", r.no_winner_rate).unwrap();
    writeln!(s, "trials {}", r.trials).unwrap();
    writeln!(s, "master_seed {}", r.master_seed).unwrap();
    writeln!(s, "exact {}", r.exact).unwrap();
    s
}

fn cmd_run(cli: &Cli, a: &RunArgs) -> Result<Output, Failure> {
    let profile = load_profile(&a.profile)?;
    let report = match (a.exact, a.trials) {
        (true, _) => exact_report(&a.mech, &profile, a.budget)?,
        (false, Some(trials)) => {
            let seed = cli.seed.ok_or_else(|| Failure::Usage("--trials needs --seed".into()))?;
            estimate(&a.mech, &profile, &TrialPlan::new(a.mech.clone(), trials, seed))?
        }
        (false, None) if a.mech.is_deterministic() => exact_report(&a.mech, &profile, a.budget)?,
        (false, None) => return Err(Failure::Usage("pass --exact or --trials".into())),
    };
    let text = match cli.format.unwrap_or(Format::Text) {
        Format::Text => report_text(&a.mech, &report),
        Format::Json => {
            let row = SweepRow { mechanism: a.mech.to_string(), generator: "file".into(), instance_seed: 0, report };
            format!("{}\n", serde_json::to_string_pretty(&row).unwrap())
        }
        Format::Csv => {
            let row = SweepRow { mechanism: a.mech.to_string(), generator: "file".into(), instance_seed: 0, report };
            rows_to_csv(&[row])
        }
    };
    Ok(Output::ok(text))
}

fn cmd_exact(cli: &Cli, a: &ExactArgs) -> Result<Output, Failure> {
    let profile = load_profile(&a.profile)?;
    let dist = exact::exact_distribution_with_cap(&a.mech, &profile, a.budget)?;
    let mean = exact::expected_winner_degree(&dist, &profile);
    let gap = exact::additive_gap(&dist, &profile);
    let text = match cli.format.unwrap_or(Format::Text) {
        Format::Json => {
            let mut doc = dist.to_json();
            doc["mechanism"] = json!(a.mech.to_string());
            doc["expected_degree"] = json!(format_rational(&mean));
            doc["gap"] = json!(format_rational(&gap));
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
        }
        Format::Csv => {
            let mut s = String::from("vertex,probability\n");
            for (u, p) in dist.probs().iter().enumerate() {
                writeln!(s, "{u},{}", format_rational(p)).unwrap();
            }
            writeln!(s, "none,{}", format_rational(dist.p_none())).unwrap();
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (u, p) in dist.probs().iter().enumerate() {
                writeln!(s, "p[{u}] = {}", format_rational(p)).unwrap();
            }
            writeln!(s, "p[none] = {}", format_rational(dist.p_none())).unwrap();
            writeln!(s, "expected_degree = {}", format_rational(&mean)).unwrap();
            writeln!(s, "gap = {}", format_rational(&gap)).unwrap();
            s
        }
    };
    Ok(Output::ok(text))
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> Result<Output, Failure> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Failure::Runtime(format!("{}: {e}", a.config.display())))?;
    let seed = cli.seed.ok_or_else(|| Failure::Usage("sweep needs --seed".into()))?;
    // --seed replaces any seed in the config file.
    let text = match serde_json::from_str::<serde_json::Value>(&text) {
        Ok(serde_json::Value::Object(mut obj)) => {
            obj.remove("seed");
            obj.insert("master_seed".into(), json!(seed));
            serde_json::Value::Object(obj).to_string()
        }
        _ => text,
    };
    let config = parse_sweep_config(&text)?;
    let rows = sweep(&config)?;
    let format = match (cli.format, config.format.as_deref()) {
        (Some(f), _) => f,
        (None, Some("json")) => Format::Json,
        _ => Format::Csv,
    };
    let out = match format {
        Format::Json => rows_to_json(&rows, a.fit),
        Format::Csv | Format::Text => {
            let mut s = rows_to_csv(&rows);
            if a.fit {
                s.push_str(&fit_comment_lines(&rows));
            }
            s
        }
    };
    if cli.out.is_none() {
        if let Some(path) = &config.output {
            std::fs::write(path, &out).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            return Ok(Output::ok(String::new()));
        }
    }
    Ok(Output::ok(out))
}

fn oracle_for(target: &Target, budget: u128) -> Result<Box<dyn MechanismOracle>, Failure> {
    match (&target.mech, &target.oracle) {
        (Some(spec), _) => Ok(Box::new(ExactMechanism { spec: spec.clone(), cap: budget })),
        (None, Some(name)) => Ok(Box::new(builtin_oracle(name).map_err(|e| Failure::Usage(e.to_string()))?)),
        (None, None) => Err(Failure::Usage("pass --mech or --oracle".into())),
    }
}

fn witness_json(w: &Witness) -> serde_json::Value {
    json!({
        "kind": w.kind.name(),
        "vertex": w.vertex,
        "detail": w.detail,
        "gap": w.gap.as_ref().map(format_rational),
        "relabeling": w.relabeling,
        "profile_a": format_profile(&w.profile_a),
        "profile_b": w.profile_b.as_ref().map(format_profile),
    })
}

fn witness_list_text(witnesses: &[Witness]) -> String {
    let mut s = String::new();
    for w in witnesses.iter().take(SHOWN_WITNESSES) {
        s.push_str(&w.to_string());
    }
    if witnesses.len() > SHOWN_WITNESSES {
        writeln!(s, "... {} more", witnesses.len() - SHOWN_WITNESSES).unwrap();
    }
    s
}

fn cmd_verify(cli: &Cli, v: &VerifyCommand) -> Result<Output, Failure> {
    let json_mode = cli.format == Some(Format::Json);
    match v {
        VerifyCommand::Impartial { target, space } => {
            let ps = ProfileSpace::new(space.n, space.model, space.budget)?;
            let oracle = oracle_for(target, DEFAULT_ENUMERATION_CAP)?;
            let witnesses = check_impartial(oracle.as_ref(), &ps)?;
            let verdict = if witnesses.is_empty() { "verified" } else { "violated" };
            let code = if witnesses.is_empty() { EXIT_OK } else { EXIT_FAILURE };
            let text = if json_mode {
                let doc = json!({
                    "mechanism": oracle.name(),
                    "verdict": verdict,
                    "profiles": ps.len(),
                    "witnesses": witnesses.iter().map(witness_json).collect::<Vec<_>>(),
                });
                format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
            } else {
                let mut s = witness_list_text(&witnesses);
                writeln!(s, "{verdict} ({} profiles, {} witnesses)", ps.len(), witnesses.len()).unwrap();
                s
            };
            Ok(Output { text, code })
        }
        VerifyCommand::StrongSample { g, n, budget } => {
            let functions = if g == "all" {
                catalog()
            } else {
                vec![sample_function(g).map_err(|e| Failure::Usage(e.to_string()))?]
            };
            let mut text = String::new();
            let mut rows = Vec::new();
            let mut falsified = false;
            for f in &functions {
                let strong = check_strong_sample(f, *n, *budget)?;
                let impartial = check_sample_mechanism_impartial(f, *n, *budget)?;
                let (constant, constant_witness) = check_sample_constant(f, *n, *budget)?;
                let contradiction = strong.is_empty() && impartial.is_empty() && !constant;
                falsified |= contradiction;
                let verdict = if contradiction { "characterization falsified" } else { "consistent" };
                if json_mode {
                    rows.push(json!({
                        "g": f.name(),
                        "n": n,
                        "strong": strong.is_empty(),
                        "impartial": impartial.is_empty(),
                        "constant": constant,
                        "verdict": verdict,
                        "strong_witness": strong.first().map(witness_json),
                        "impartial_witness": impartial.first().map(witness_json),
                        "constant_witness": constant_witness.as_ref().map(witness_json),
                    }));
                } else {
                    let yn = |b: bool| if b { "yes" } else { "no" };
                    if let Some(w) = strong.first() {
                        text.push_str(&w.to_string());
                    } else if let Some(w) = impartial.first() {
                        text.push_str(&w.to_string());
                    }
                    writeln!(
                        text,
                        "{} n={n}: strong={} ({} witnesses) impartial={} ({} witnesses) constant={} => {verdict}",
                        f.name(),
                        yn(strong.is_empty()),
                        strong.len(),
                        yn(impartial.is_empty()),
                        impartial.len(),
                        yn(constant),
                    )
                    .unwrap();
                }
            }
            if json_mode {
                text = format!("{}\n", serde_json::to_string_pretty(&rows).unwrap());
            }
            Ok(Output { text, code: if falsified { EXIT_FAILURE } else { EXIT_OK } })
        }
        VerifyCommand::Gap { target, space } => {
            let ps = ProfileSpace::new(space.n, space.model, space.budget)?;
            let oracle = oracle_for(target, DEFAULT_ENUMERATION_CAP)?;
            let m = measure_additive_gap_exhaustive(oracle.as_ref(), &ps)?;
            let text = if json_mode {
                let doc = json!({
                    "mechanism": oracle.name(),
                    "alpha": format_rational(&m.alpha),
                    "profiles": m.profiles,
                    "worst_profile": format_profile(&m.worst_profile),
                });
                format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
            } else {
                format!(
                    "{}\nalpha = {} ({} profiles)\n",
                    format_profile(&m.worst_profile).trim_end(),
                    format_rational(&m.alpha),
                    m.profiles
                )
            };
            Ok(Output::ok(text))
        }
    }
}

fn cmd_refute(cli: &Cli, a: &RefuteArgs) -> Result<Output, Failure> {
    let oracle = builtin_oracle(&a.oracle).map_err(|e| Failure::Usage(e.to_string()))?;
    let w = refute_two_additive(&oracle)?;
    let valid = w.validate(&oracle)?;
    let verdict = if valid { "witness validated" } else { "witness failed validation" };
    let text = if cli.format == Some(Format::Json) {
        let mut doc = witness_json(&w);
        doc["oracle"] = json!(oracle.name());
        doc["validated"] = json!(valid);
        format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
    } else {
        format!("{w}{} against {}: {verdict}\n", w.kind, oracle.name())
    };
    Ok(Output { text, code: if valid { EXIT_OK } else { EXIT_FAILURE } })
}
