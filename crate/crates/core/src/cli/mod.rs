//! The `dpl` command line: verify, sweep, derive, eval-term and list.
//!
//! Exit codes: 0 all pass, 1 a residual exceeded its tolerance, 2 usage or
//! domain error, 3 evaluation error.

mod output;

pub use output::{Format, Row, Summary, CSV_HEADER};

use crate::evaluator::{eval_term, CValue, EvalError, IdentityParams, Strategy};
use crate::registry::{character, parse_range, Registry, RegistryEntry, RegistryError};
use crate::specfun::PrecisionContext;
use crate::termlang::{bind_term, parse_term_template, Bindings};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EVAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dpl", version, about = "Verify sum formulas for double polylogarithms of Hurwitz type")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify an identity at one point or over its default battery.
    Verify(RunArgs),
    /// Verify an identity over the cartesian product of parameter ranges.
    Sweep(RunArgs),
    /// Check that partial fractions turn one identity's left side into another's.
    Derive(DeriveArgs),
    /// Evaluate a single term.
    EvalTerm(EvalTermArgs),
    /// List the registered identities.
    List(ListArgs),
}

/// Parameter values. Under `sweep` each accepts a range `3..12` or a list `1,3,5`.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub l: Option<String>,
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long = "N")]
    pub n_mod: Option<String>,
    #[arg(long = "M")]
    pub m_weight: Option<String>,
    /// Built-in character name (chi0, chi3, chi4) or a JSON table file.
    #[arg(long)]
    pub chi: Option<String>,
    /// Any other parameter as name=value.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub extra: Vec<String>,
}

impl ParamArgs {
    fn assignments(&self) -> Result<Vec<(String, String)>, String> {
        let mut out = Vec::new();
        let named = [
            ("k", &self.k),
            ("l", &self.l),
            ("s", &self.s),
            ("x", &self.x),
            ("b", &self.b),
            ("N", &self.n_mod),
            ("M", &self.m_weight),
            ("chi", &self.chi),
        ];
        for (name, v) in named {
            if let Some(v) = v {
                out.push((name.to_string(), v.clone()));
            }
        }
        for e in &self.extra {
            let (k, v) = e.split_once('=').ok_or_else(|| format!("--param expects NAME=VALUE, got '{e}'"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalOpts {
    /// Working precision in decimal digits.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(15..=200))]
    pub digits: u32,
    #[arg(long, default_value = "auto", value_parser = parse_strategy)]
    pub strategy: Strategy,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub id: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub opts: EvalOpts,
    /// Number of points evaluated concurrently.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=256))]
    pub jobs: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DeriveArgs {
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    /// Depth values to check, as a range or list.
    #[arg(long, default_value = "1..4")]
    pub k: String,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalTermArgs {
    /// Term in the identity language, e.g. "sum(m>=1, n>=1) 1 / (m*(m+n)^2)".
    pub term: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub opts: EvalOpts,
}

#[derive(Debug, Clone, Args)]
pub struct ListArgs {
    /// Only identities carrying this tag.
    #[arg(long)]
    pub tag: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(code) => code,
        Err(Failure { code, msg }) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}

struct Failure {
    code: i32,
    msg: String,
}

fn usage(msg: impl ToString) -> Failure {
    Failure { code: EXIT_USAGE, msg: msg.to_string() }
}

impl From<RegistryError> for Failure {
    fn from(e: RegistryError) -> Failure {
        usage(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure { code: EXIT_EVAL, msg: format!("writing output: {e}") }
    }
}

fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Verify(a) => run_points(a, false, stdout),
        Command::Sweep(a) => run_points(a, true, stdout),
        Command::Derive(a) => run_derive(a, stdout),
        Command::EvalTerm(a) => run_eval_term(a, stdout),
        Command::List(a) => run_list(a, stdout),
    }
}

/// Writes to `--out` when given, otherwise to standard output.
fn with_sink(out: &Option<PathBuf>, stdout: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let mut w = io::BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        None => f(stdout)?,
    }
    Ok(())
}

/// Battery points with explicit flags applied. Each flag overrides the matching
/// parameter of every default point; a range or list multiplies the battery.
pub fn battery(entry: &RegistryEntry, params: &ParamArgs, allow_ranges: bool) -> Result<Vec<BTreeMap<String, String>>, String> {
    let mut axes = Vec::new();
    for (name, text) in params.assignments()? {
        let vals = if name == "chi" || name == "x" || name == "b" {
            parse_range_or_list(&text)
        } else {
            parse_range(&text).map_err(|e| e.to_string())?
        };
        if vals.len() > 1 && !allow_ranges {
            return Err(format!("--{name} {text} names several values; use `dpl sweep` for ranges"));
        }
        axes.push((name, vals));
    }
    let base: Vec<BTreeMap<String, String>> =
        if entry.meta.battery.is_empty() { vec![BTreeMap::new()] } else { entry.meta.battery.clone() };
    let mut points: Vec<BTreeMap<String, String>> = Vec::new();
    for b in base {
        let mut expanded = vec![b];
        for (name, vals) in &axes {
            expanded = expanded
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), v.clone());
                        q
                    })
                })
                .collect();
        }
        for p in expanded {
            if !points.contains(&p) {
                points.push(p);
            }
        }
    }
    Ok(points)
}

fn parse_range_or_list(text: &str) -> Vec<String> {
    parse_range(text).unwrap_or_else(|_| vec![text.to_string()])
}

fn describe_point(entry: &RegistryEntry, point: &BTreeMap<String, String>) -> String {
    let mut parts = Vec::new();
    for p in &entry.spec.params {
        if let Some(v) = point.get(&p.name) {
            parts.push(format!("{}={v}", p.name));
        }
    }
    for (k, v) in point {
        if entry.spec.param(k).is_none() {
            parts.push(format!("{k}={v}"));
        }
    }
    parts.join(";")
}

/// Evaluates one point; errors become rows with exit code 2 (domain) or 3.
pub fn evaluate_point(entry: &RegistryEntry, point: &BTreeMap<String, String>, ctx: &PrecisionContext, strategy: Strategy) -> Row {
    let label = if strategy == Strategy::Auto { entry.meta.strategy } else { strategy };
    let err_row = |msg: String, code: i32| {
        Row::from_error(&entry.id, describe_point(entry, point), ctx.working_digits, label.to_string(), msg, code)
    };
    let params = match entry.params(point) {
        Ok(p) => p,
        Err(e) => return err_row(e.to_string(), EXIT_USAGE),
    };
    match entry.verify(&params, ctx, strategy) {
        Ok(r) => Row::from_report(&r),
        Err(e) => {
            let code = if e.is_domain() { EXIT_USAGE } else { EXIT_EVAL };
            err_row(e.to_string(), code)
        }
    }
}

/// Usage and domain errors outrank evaluation errors, which outrank residual failures.
pub fn combined_exit(rows: &[Row]) -> i32 {
    let codes: Vec<i32> = rows.iter().map(|r| r.exit).collect();
    [EXIT_USAGE, EXIT_EVAL, EXIT_FAIL].into_iter().find(|c| codes.contains(c)).unwrap_or(EXIT_PASS)
}

#[derive(Serialize)]
struct SweepReport<'a> {
    summary: &'a Summary,
    reports: &'a [Row],
}

fn run_points(a: &RunArgs, sweep: bool, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let registry = Registry::load()?;
    let entry = registry.get(&a.id)?;
    let points = battery(entry, &a.params, sweep).map_err(usage)?;
    let ctx = PrecisionContext::with_digits(a.opts.digits).map_err(usage)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs as usize)
        .build()
        .map_err(|e| Failure { code: EXIT_EVAL, msg: e.to_string() })?;
    // par_iter keeps battery order in the collected rows regardless of completion order.
    let rows: Vec<Row> =
        pool.install(|| points.par_iter().map(|p| evaluate_point(entry, p, &ctx, a.opts.strategy)).collect());
    let summary = Summary::of(&entry.id, &rows);
    with_sink(&a.opts.out, stdout, |w| match a.opts.format {
        Format::Text => {
            output::write_rows_text(&rows, w)?;
            if sweep || rows.len() > 1 {
                output::write_summary_text(&summary, w)?;
            }
            Ok(())
        }
        Format::Json => {
            if sweep {
                serde_json::to_writer_pretty(&mut *w, &SweepReport { summary: &summary, reports: &rows })?;
            } else {
                serde_json::to_writer_pretty(&mut *w, &rows)?;
            }
            writeln!(w)
        }
        Format::Csv => output::write_csv(&rows, w),
    })?;
    Ok(combined_exit(&rows))
}

fn run_derive(a: &DeriveArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let registry = Registry::load()?;
    let ks = parse_range(&a.k)?
        .iter()
        .map(|v| v.parse::<i64>().map_err(|_| usage(format!("--k expects integers, got '{v}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = registry.derive(&a.from, &a.to, &ks)?;
    with_sink(&a.out, stdout, |w| output::write_derivation(&rep, a.format, w))?;
    Ok(if rep.pass() { EXIT_PASS } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct TermRecord {
    term: String,
    params: String,
    digits: u32,
    strategy: String,
    value: crate::evaluator::ComplexRecord,
    bound: f64,
    method: String,
    elapsed_ms: f64,
}

fn run_eval_term(a: &EvalTermArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let template = parse_term_template(&a.term).map_err(usage)?;
    let mut env = Bindings::new();
    let mut params = IdentityParams::new();
    let assignments = a.params.assignments().map_err(usage)?;
    for (name, text) in &assignments {
        match name.as_str() {
            "x" => params = params.with_x(text.parse::<CValue>().map_err(|e| usage(format!("x: {e}")))?),
            "b" => params = params.with_b(text.parse::<CValue>().map_err(|e| usage(format!("b: {e}")))?),
            "chi" => params = params.with_char("chi", character(text).map_err(usage)?),
            _ => {
                let v = text.parse::<CValue>().ok().and_then(|v| v.as_rational());
                let v = v.ok_or_else(|| usage(format!("{name}: '{text}' is not a rational number")))?;
                env.insert(name.clone(), v.clone());
                params = params.with(name, v);
            }
        }
    }
    if let Some(x) = &params.x {
        if x.abs_f64() > 1.0 + 1e-15 {
            return Err(usage(format!("|x| > 1 for x = {x}")));
        }
    }
    let term = bind_term(&template, &env).map_err(usage)?;
    let ctx = PrecisionContext::with_digits(a.opts.digits).map_err(usage)?;
    let start = Instant::now();
    let value = eval_term(&term, &params, &ctx, a.opts.strategy).map_err(|e: EvalError| Failure {
        code: if e.is_domain() { EXIT_USAGE } else { EXIT_EVAL },
        msg: e.to_string(),
    })?;
    let d = ctx.output_digits as usize;
    let rec = TermRecord {
        term: term.to_string(),
        params: assignments.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";"),
        digits: ctx.working_digits,
        strategy: a.opts.strategy.to_string(),
        value: crate::evaluator::ComplexRecord { re: value.value.re_string(d), im: value.value.im_string(d) },
        bound: value.abs_error_bound,
        method: value.method.to_string(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    with_sink(&a.opts.out, stdout, |w| match a.opts.format {
        Format::Text => writeln!(
            w,
            "{}\n  value = {} {} i\n  bound = {:e}  method = {}  {:.1} ms",
            rec.term, rec.value.re, rec.value.im, rec.bound, rec.method, rec.elapsed_ms
        ),
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, &rec)?;
            writeln!(w)
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["term", "params", "digits", "strategy", "value_re", "value_im", "bound", "method", "elapsed_ms"])?;
            c.write_record([
                rec.term.clone(),
                rec.params.clone(),
                rec.digits.to_string(),
                rec.strategy.clone(),
                rec.value.re.clone(),
                rec.value.im.clone(),
                format!("{:e}", rec.bound),
                rec.method.clone(),
                format!("{:.3}", rec.elapsed_ms),
            ])?;
            c.flush()
        }
    })?;
    Ok(EXIT_PASS)
}

#[derive(Serialize)]
struct ListRecord<'a> {
    id: &'a str,
    params: String,
    strategy: String,
    tolerance: f64,
    tags: &'a [String],
    summary: &'a str,
}

fn run_list(a: &ListArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let registry = Registry::load()?;
    let records: Vec<ListRecord> = registry
        .list(a.tag.as_deref())
        .into_iter()
        .map(|e| ListRecord {
            id: &e.id,
            params: e.spec.param_summary(),
            strategy: e.meta.strategy.to_string(),
            tolerance: e.meta.tolerance,
            tags: &e.meta.tags,
            summary: &e.meta.summary,
        })
        .collect();
    with_sink(&a.out, stdout, |w| match a.format {
        Format::Text => {
            for r in &records {
                writeln!(w, "{:<15} {:<45} [{}] {}", r.id, r.params, r.tags.join(","), r.summary)?;
            }
            Ok(())
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, &records)?;
            writeln!(w)
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["id", "params", "strategy", "tolerance", "tags", "summary"])?;
            for r in &records {
                c.write_record([
                    r.id.to_string(),
                    r.params.clone(),
                    r.strategy.clone(),
                    format!("{:e}", r.tolerance),
                    r.tags.join(";"),
                    r.summary.to_string(),
                ])?;
            }
            c.flush()
        }
    })?;
    Ok(EXIT_PASS)
}
