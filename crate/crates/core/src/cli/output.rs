use crate::evaluator::{ComplexRecord, IdentityReport};
use crate::termlang::DerivationReport;
use serde::Serialize;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// One battery point. Keys up to `elapsed_ms` follow the report schema; failed
/// evaluations carry `error` and leave the numeric fields empty.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub identity: String,
    pub params: String,
    pub digits: u32,
    pub strategy: String,
    pub lhs: Option<ComplexRecord>,
    pub rhs: Option<ComplexRecord>,
    pub residual: Option<f64>,
    pub bound: Option<f64>,
    pub pass: bool,
    pub elapsed_ms: f64,
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub exit: i32,
}

impl Row {
    pub fn from_report(r: &IdentityReport) -> Row {
        let rec = r.record();
        let pass = rec.pass;
        Row {
            identity: rec.identity,
            params: rec.params,
            digits: rec.digits,
            strategy: rec.strategy,
            lhs: Some(rec.lhs),
            rhs: Some(rec.rhs),
            residual: Some(rec.residual).filter(|v| v.is_finite()),
            bound: Some(rec.bound).filter(|v| v.is_finite()),
            pass,
            elapsed_ms: rec.elapsed_ms,
            tolerance: Some(r.tolerance),
            error: None,
            exit: if pass { 0 } else { 1 },
        }
    }

    pub fn from_error(identity: &str, params: String, digits: u32, strategy: String, msg: String, exit: i32) -> Row {
        Row {
            identity: identity.to_string(),
            params,
            digits,
            strategy,
            lhs: None,
            rhs: None,
            residual: None,
            bound: None,
            pass: false,
            elapsed_ms: 0.0,
            tolerance: None,
            error: Some(msg),
            exit,
        }
    }
}

/// Aggregate over a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub identity: String,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    pub worst_residual: Option<f64>,
    pub worst_params: Option<String>,
    pub slowest_ms: Option<f64>,
    pub slowest_params: Option<String>,
}

impl Summary {
    pub fn of(identity: &str, rows: &[Row]) -> Summary {
        let evaluated: Vec<&Row> = rows.iter().filter(|r| r.error.is_none()).collect();
        let worst = evaluated
            .iter()
            .filter_map(|r| r.residual.map(|v| (v, r)))
            .max_by(|a, b| a.0.total_cmp(&b.0));
        let slowest = evaluated.iter().max_by(|a, b| a.elapsed_ms.total_cmp(&b.elapsed_ms));
        Summary {
            identity: identity.to_string(),
            total: rows.len(),
            passed: rows.iter().filter(|r| r.pass).count(),
            failed: evaluated.iter().filter(|r| !r.pass).count(),
            errors: rows.len() - evaluated.len(),
            worst_residual: worst.map(|w| w.0),
            worst_params: worst.map(|w| w.1.params.clone()),
            slowest_ms: slowest.map(|r| r.elapsed_ms),
            slowest_params: slowest.map(|r| r.params.clone()),
        }
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "identity", "params", "digits", "strategy", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "residual", "bound", "pass",
    "elapsed_ms", "tolerance", "error",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn sci(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

fn short(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into())
}

pub fn write_csv(rows: &[Row], out: &mut dyn Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let part = |c: &Option<ComplexRecord>, re: bool| {
            c.as_ref().map(|c| if re { c.re.clone() } else { c.im.clone() }).unwrap_or_default()
        };
        w.write_record([
            r.identity.clone(),
            r.params.clone(),
            r.digits.to_string(),
            r.strategy.clone(),
            part(&r.lhs, true),
            part(&r.lhs, false),
            part(&r.rhs, true),
            part(&r.rhs, false),
            sci(r.residual),
            sci(r.bound),
            r.pass.to_string(),
            format!("{:.3}", r.elapsed_ms),
            sci(r.tolerance),
            opt(&r.error),
        ])?;
    }
    w.flush()
}

pub fn write_rows_text(rows: &[Row], out: &mut dyn Write) -> io::Result<()> {
    for r in rows {
        let params = if r.params.is_empty() { "-" } else { &r.params };
        match &r.error {
            Some(e) => writeln!(out, "ERROR {:<15} {params}: {e}", r.identity)?,
            None => {
                let lhs = r.lhs.as_ref().map(|c| c.re.clone()).unwrap_or_default();
                writeln!(
                    out,
                    "{} {:<15} {params}  [{}]  lhs={lhs}  residual={}  bound={}  tol={}  {:.1} ms",
                    if r.pass { "PASS " } else { "FAIL " },
                    r.identity,
                    r.strategy,
                    short(r.residual),
                    short(r.bound),
                    short(r.tolerance),
                    r.elapsed_ms
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_summary_text(s: &Summary, out: &mut dyn Write) -> io::Result<()> {
    write!(out, "{}: {}/{} pass", s.identity, s.passed, s.total)?;
    if s.failed > 0 {
        write!(out, ", {} failed", s.failed)?;
    }
    if s.errors > 0 {
        write!(out, ", {} errors", s.errors)?;
    }
    if let (Some(v), Some(p)) = (s.worst_residual, &s.worst_params) {
        write!(out, "; worst residual {v:.2e} at {}", if p.is_empty() { "-" } else { p })?;
    }
    if let (Some(v), Some(p)) = (s.slowest_ms, &s.slowest_params) {
        write!(out, "; slowest {v:.1} ms at {}", if p.is_empty() { "-" } else { p })?;
    }
    writeln!(out)
}

#[derive(Serialize)]
struct KCheckRecord<'a> {
    param: &'a str,
    value: i64,
    bindings: String,
    pass: bool,
    from_terms: usize,
    to_terms: usize,
    witness: Option<&'a str>,
}

#[derive(Serialize)]
struct DerivationRecord<'a> {
    from: &'a str,
    to: &'a str,
    pass: bool,
    checks: Vec<KCheckRecord<'a>>,
}

pub fn write_derivation(rep: &DerivationReport, format: Format, out: &mut dyn Write) -> io::Result<()> {
    let bindings = |c: &crate::termlang::KCheck| {
        c.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    };
    match format {
        Format::Text => {
            writeln!(out, "{} -> {} (depth parameter {})", rep.from, rep.to, rep.param)?;
            for c in &rep.checks {
                write!(
                    out,
                    "  {}  {}: {} terms vs {} terms",
                    if c.pass { "pass" } else { "FAIL" },
                    bindings(c),
                    c.from_terms,
                    c.to_terms
                )?;
                match &c.witness {
                    Some(w) => writeln!(out, "; first mismatch {w}")?,
                    None => writeln!(out)?,
                }
            }
            writeln!(out, "result: {}", if rep.pass() { "pass" } else { "FAIL" })
        }
        Format::Json => {
            let rec = DerivationRecord {
                from: &rep.from,
                to: &rep.to,
                pass: rep.pass(),
                checks: rep
                    .checks
                    .iter()
                    .map(|c| KCheckRecord {
                        param: &rep.param,
                        value: c.k,
                        bindings: bindings(c),
                        pass: c.pass,
                        from_terms: c.from_terms,
                        to_terms: c.to_terms,
                        witness: c.witness.as_deref(),
                    })
                    .collect(),
            };
            serde_json::to_writer_pretty(&mut *out, &rec)?;
            writeln!(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["from", "to", "param", "value", "bindings", "pass", "from_terms", "to_terms", "witness"])?;
            for c in &rep.checks {
                w.write_record([
                    rep.from.clone(),
                    rep.to.clone(),
                    rep.param.clone(),
                    c.k.to_string(),
                    bindings(c),
                    c.pass.to_string(),
                    c.from_terms.to_string(),
                    c.to_terms.to_string(),
                    c.witness.clone().unwrap_or_default(),
                ])?;
            }
            w.flush()
        }
    }
}
