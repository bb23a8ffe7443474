//! The `infomeasure` command line.
//!
//! Exit codes are shared by all subcommands: `0` success or pass, `1` audit
//! or characterization failure, `2` usage or validation error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::audit::{run_audit, AuditConfig, Axiom, SamplingConfig};
use crate::characterization::{characterize, Method};
use crate::dsl;
use crate::handle::{MeasureHandle, MeasureKind};
use crate::measures::{
    q_entropy, q_relative_entropy, relative_entropy, shannon_entropy, AbsolutelyContinuousPair,
    Distribution, MeasureError, QParameter,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "infomeasure",
    version,
    about = "Entropies, relative entropies and their axioms on finite distributions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a built-in measure on a distribution file
    Compute(ComputeArgs),
    /// Run a randomized axiom audit and write a JSON report
    Audit(AuditArgs),
    /// Extract the characterization constant of a candidate measure
    Characterize(CharacterizeArgs),
    /// Tabulate S_q (or D_q for pairs) over a range of q as CSV
    Profile(ProfileArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltinMeasure {
    Shannon,
    Kl,
    QEntropy,
    QKl,
}

impl BuiltinMeasure {
    fn kind(self) -> MeasureKind {
        match self {
            BuiltinMeasure::Shannon | BuiltinMeasure::QEntropy => MeasureKind::Entropy,
            BuiltinMeasure::Kl | BuiltinMeasure::QKl => MeasureKind::Divergence,
        }
    }

    fn needs_q(self) -> bool {
        matches!(self, BuiltinMeasure::QEntropy | BuiltinMeasure::QKl)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Entropy,
    Divergence,
}

impl From<KindArg> for MeasureKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Entropy => MeasureKind::Entropy,
            KindArg::Divergence => MeasureKind::Divergence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fit,
    Thm2,
    Thm3,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fit => Method::FitLog,
            MethodArg::Thm2 => Method::QEntropy,
            MethodArg::Thm3 => Method::QRelativeEntropy,
        }
    }
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[arg(long, value_enum)]
    pub measure: BuiltinMeasure,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// JSON file {"p": [...], "r": [...]}
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct MeasureSelection {
    /// Built-in measure
    #[arg(
        long,
        value_enum,
        conflicts_with = "dsl",
        required_unless_present = "dsl"
    )]
    pub measure: Option<BuiltinMeasure>,
    /// Per-index summand expression, e.g. "p*log(p/r)"
    #[arg(long)]
    pub dsl: Option<String>,
    /// Kind of the measure; inferred when omitted
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub measure: MeasureSelection,
    /// Comma-separated axioms; all axioms of the measure's kind by default
    #[arg(long, value_delimiter = ',')]
    pub axioms: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub max_n: usize,
    #[arg(long, default_value_t = 4)]
    pub max_blocks: usize,
    #[arg(long, default_value_t = 0.25)]
    pub zero_prob: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, env = "INFOMEASURE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Where to write the JSON report
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    #[command(flatten)]
    pub measure: MeasureSelection,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, env = "INFOMEASURE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub q_from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub q_to: f64,
    #[arg(long)]
    pub steps: usize,
    /// CSV destination; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Input file: `{"p": [...], "r": [...]}` with `r` optional.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub p: Vec<f64>,
    #[serde(default)]
    pub r: Option<Vec<f64>>,
}

pub enum LoadedInput {
    Single(Distribution),
    Pair(AbsolutelyContinuousPair),
}

impl DistributionFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::usage(format!("invalid distribution file {}: {e}", path.display()))
        })
    }

    pub fn p(&self) -> Result<Distribution, CliError> {
        Distribution::new(self.p.clone()).map_err(|e| CliError::usage(format!("p: {e}")))
    }

    pub fn r(&self) -> Result<Option<Distribution>, CliError> {
        self.r
            .as_ref()
            .map(|r| Distribution::new(r.clone()).map_err(|e| CliError::usage(format!("r: {e}"))))
            .transpose()
    }

    /// Validates the file as a single distribution or as a pair in A_n.
    pub fn load(&self) -> Result<LoadedInput, CliError> {
        let p = self.p()?;
        match self.r()? {
            None => Ok(LoadedInput::Single(p)),
            Some(r) => AbsolutelyContinuousPair::new(p, r)
                .map(LoadedInput::Pair)
                .map_err(pair_error),
        }
    }
}

fn pair_error(e: MeasureError) -> CliError {
    match e {
        MeasureError::NotAbsolutelyContinuous { index } => {
            CliError::usage(format!("infinite: p_i>0, r_i=0 at index {index}"))
        }
        other => CliError::usage(other.to_string()),
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

/// `%.15g`-style rendering: 15 significant digits, trailing zeros trimmed.
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn parse_q(q: Option<f64>) -> Result<Option<QParameter>, CliError> {
    q.map(|v| QParameter::new(v).map_err(|e| CliError::usage(e.to_string())))
        .transpose()
}

fn require_q(q: Option<QParameter>, what: &str) -> Result<QParameter, CliError> {
    q.ok_or_else(|| CliError::usage(format!("{what} requires --q")))
}

fn resolve_measure(
    sel: &MeasureSelection,
) -> Result<(MeasureHandle, Option<QParameter>), CliError> {
    let q = parse_q(sel.q)?;
    if let Some(builtin) = sel.measure {
        if let Some(kind) = sel.kind {
            if MeasureKind::from(kind) != builtin.kind() {
                return Err(CliError::usage(format!(
                    "measure {builtin:?} is {}-type, not {}",
                    builtin.kind(),
                    MeasureKind::from(kind)
                )));
            }
        }
        let handle = match builtin {
            BuiltinMeasure::Shannon => MeasureHandle::shannon(),
            BuiltinMeasure::Kl => MeasureHandle::relative_entropy(),
            BuiltinMeasure::QEntropy => MeasureHandle::q_entropy(require_q(q, "q-entropy")?),
            BuiltinMeasure::QKl => MeasureHandle::q_relative_entropy(require_q(q, "q-kl")?),
        };
        if !builtin.needs_q() && q.is_some_and(|q| !q.is_unit()) {
            return Err(CliError::usage(format!(
                "--q does not apply to {builtin:?}"
            )));
        }
        return Ok((handle, q));
    }
    let source = sel
        .dsl
        .as_deref()
        .expect("clap enforces --measure or --dsl");
    let expr =
        dsl::parse(source).map_err(|e| CliError::usage(dsl::DslError::from(e).render(source)))?;
    let kind = match sel.kind {
        Some(k) => k.into(),
        None if expr.uses_r() => MeasureKind::Divergence,
        None => MeasureKind::Entropy,
    };
    let handle = dsl::as_measure(&expr, kind, q).map_err(|e| CliError::usage(e.render(source)))?;
    Ok((handle, q))
}

pub fn cmd_compute(args: &ComputeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = DistributionFile::read(&args.input)?;
    let q = parse_q(args.q)?;
    let value = match args.measure {
        BuiltinMeasure::Shannon => shannon_entropy(&file.p()?),
        BuiltinMeasure::QEntropy => q_entropy(&file.p()?, require_q(q, "q-entropy")?),
        BuiltinMeasure::Kl | BuiltinMeasure::QKl => {
            let LoadedInput::Pair(pair) = file.load()? else {
                return Err(CliError::usage(
                    "divergence measures need an \"r\" array in the input",
                ));
            };
            if args.measure == BuiltinMeasure::Kl {
                relative_entropy(&pair)
            } else {
                q_relative_entropy(&pair, require_q(q, "q-kl")?)
            }
        }
    };
    writeln!(out, "{}", format_value(value)).map_err(io_error)?;
    Ok(EXIT_OK)
}

pub fn cmd_audit(args: &AuditArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (handle, q) = resolve_measure(&args.measure)?;
    let axioms = if args.axioms.is_empty() {
        Axiom::defaults_for(handle.kind())
    } else {
        args.axioms
            .iter()
            .map(|s| s.trim().parse::<Axiom>().map_err(CliError::usage))
            .collect::<Result<Vec<_>, _>>()?
    };
    let cfg = AuditConfig {
        axioms,
        trials: args.trials,
        sampling: SamplingConfig {
            max_n: args.max_n,
            max_blocks: args.max_blocks,
            zero_probability: args.zero_prob,
        },
        tol: args.tol,
        seed: args.seed,
        q: q.unwrap_or(QParameter::ONE),
    };
    let report = run_audit(&handle, &cfg).map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(path) = &args.report {
        let mut json = report.to_json();
        json.push('\n');
        fs::write(path, json)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    for rec in &report.axioms {
        writeln!(
            out,
            "{}: {} max_residual={} mean_residual={} trials={}",
            rec.name,
            if rec.pass { "PASS" } else { "FAIL" },
            format_value(rec.max_residual),
            format_value(rec.mean_residual),
            rec.trials
        )
        .map_err(io_error)?;
    }
    writeln!(out, "not checked: {}", report.not_checked.join(", ")).map_err(io_error)?;
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

pub fn cmd_characterize(args: &CharacterizeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (handle, q) = resolve_measure(&args.measure)?;
    let method = Method::from(args.method);
    if method != Method::FitLog {
        let q = require_q(q, "--method thm2/thm3")?;
        if q.is_unit() {
            return Err(CliError::usage("--method thm2/thm3 requires q != 1"));
        }
    }
    let result = characterize(&handle, method, q, args.trials, args.seed)
        .map_err(|e| CliError::usage(e.to_string()))?;
    writeln!(out, "{}", result.to_json()).map_err(io_error)?;
    Ok(if result.max_residual <= args.tol {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

/// `steps` rows of `q,value` with q evenly spaced from `from` to `to`.
pub fn profile_rows(
    input: &LoadedInput,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>, CliError> {
    if steps < 2 {
        return Err(CliError::usage("--steps must be at least 2"));
    }
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(CliError::usage(
            "--q-from must be finite and less than --q-to",
        ));
    }
    let last = (steps - 1) as f64;
    (0..steps)
        .map(|i| {
            let qv = if i == steps - 1 {
                to
            } else {
                from + (to - from) * (i as f64 / last)
            };
            let q = QParameter::new(qv).map_err(|e| CliError::usage(e.to_string()))?;
            let value = match input {
                LoadedInput::Single(p) => q_entropy(p, q),
                LoadedInput::Pair(pair) => q_relative_entropy(pair, q),
            };
            Ok((qv, value))
        })
        .collect()
}

pub fn render_profile_csv(rows: &[(f64, f64)]) -> String {
    let mut csv = String::from("q,value\n");
    for &(q, v) in rows {
        csv.push_str(&format!("{},{}\n", format_value(q), format_value(v)));
    }
    csv
}

pub fn cmd_profile(args: &ProfileArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let input = DistributionFile::read(&args.input)?.load()?;
    let rows = profile_rows(&input, args.q_from, args.q_to, args.steps)?;
    let csv = render_profile_csv(&rows);
    match &args.out {
        Some(path) => fs::write(path, csv)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?,
        None => out.write_all(csv.as_bytes()).map_err(io_error)?,
    }
    Ok(EXIT_OK)
}

fn io_error(e: std::io::Error) -> CliError {
    CliError::usage(format!("write failed: {e}"))
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Compute(a) => cmd_compute(a, out),
        Command::Audit(a) => cmd_audit(a, out),
        Command::Characterize(a) => cmd_characterize(a, out),
        Command::Profile(a) => cmd_profile(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
