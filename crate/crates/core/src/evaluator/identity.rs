use super::classes::{split_double, split_single, NumEnv};
use super::direct::{eval_kernel_direct, DEFAULT_CUTOFF};
use super::params::{CValue, IdentityParams};
use super::reduced::{eval_kernel_reduced, eval_single_split};
use super::{EvalError, Strategy};
use crate::specfun::{gauss_sum, Character, EvalResult, HPComplex, PrecisionContext};
use crate::termlang::{
    canonicalize, expand_side, reduce_term, BoundWeight, DoubleSumTerm, IdentitySpec, Side, SingleSumTerm, Term,
    TermError,
};
use rug::float::Constant;
use rug::{Float, Rational};
use serde::Serialize;
use std::collections::BTreeSet;
use std::time::Instant;

fn uncatalogued(e: TermError) -> EvalError {
    match e {
        TermError::Structure(m) | TermError::NonMatchingShifts(m) => EvalError::Uncatalogued(m),
        other => EvalError::Term(other),
    }
}

fn coeff_complex(c: &Rational, prec: u32) -> HPComplex {
    HPComplex::from_rational(c, prec)
}

pub fn eval_single(t: &SingleSumTerm, params: &IdentityParams, ctx: &PrecisionContext) -> Result<EvalResult, EvalError> {
    let env = NumEnv::new(params, ctx.prec());
    let split = split_single(t, &env)?;
    Ok(eval_single_split(&split, ctx)?.times(&coeff_complex(&t.coeff, ctx.prec())))
}

fn eval_double_reduced(t: &DoubleSumTerm, env: &NumEnv, ctx: &PrecisionContext) -> Result<EvalResult, EvalError> {
    let (pieces, _) = reduce_term(t).map_err(uncatalogued)?;
    let mut acc = EvalResult::zero(ctx.prec());
    for piece in pieces {
        let mut part = EvalResult::zero(ctx.prec());
        for k in split_double(&piece, env)? {
            part.accumulate(&eval_kernel_reduced(&k, ctx)?);
        }
        acc.accumulate(&part.times(&coeff_complex(&piece.coeff, ctx.prec())));
    }
    Ok(acc)
}

fn eval_double_direct(t: &DoubleSumTerm, env: &NumEnv, ctx: &PrecisionContext, cutoff: i64) -> Result<EvalResult, EvalError> {
    let mut acc = EvalResult::zero(ctx.prec());
    for k in split_double(t, env)? {
        acc.accumulate(&eval_kernel_direct(&k, ctx, cutoff)?);
    }
    Ok(acc.times(&coeff_complex(&t.coeff, ctx.prec())))
}

fn eval_double_used(
    t: &DoubleSumTerm,
    params: &IdentityParams,
    ctx: &PrecisionContext,
    strategy: Strategy,
) -> Result<(EvalResult, Strategy), EvalError> {
    let env = NumEnv::new(params, ctx.prec());
    match strategy {
        Strategy::Reduction => Ok((eval_double_reduced(t, &env, ctx)?, Strategy::Reduction)),
        Strategy::Direct => Ok((eval_double_direct(t, &env, ctx, DEFAULT_CUTOFF)?, Strategy::Direct)),
        Strategy::Auto => match eval_double_reduced(t, &env, ctx) {
            Ok(v) => Ok((v, Strategy::Reduction)),
            Err(EvalError::Uncatalogued(_)) => Ok((eval_double_direct(t, &env, ctx, DEFAULT_CUTOFF)?, Strategy::Direct)),
            Err(e) => Err(e),
        },
    }
}

/// Value of a double sum including its coefficient.
pub fn eval_double(
    t: &DoubleSumTerm,
    params: &IdentityParams,
    ctx: &PrecisionContext,
    strategy: Strategy,
) -> Result<EvalResult, EvalError> {
    Ok(eval_double_used(t, params, ctx, strategy)?.0)
}

pub fn eval_term(t: &Term, params: &IdentityParams, ctx: &PrecisionContext, strategy: Strategy) -> Result<EvalResult, EvalError> {
    match t {
        Term::Double(d) => eval_double(d, params, ctx, strategy),
        Term::Single(s) => eval_single(s, params, ctx),
    }
}

/// Direct-strategy value with an explicit cutoff, for truncation-robustness checks.
pub fn eval_term_with_cutoff(t: &Term, params: &IdentityParams, ctx: &PrecisionContext, cutoff: i64) -> Result<EvalResult, EvalError> {
    match t {
        Term::Double(d) => {
            let env = NumEnv::new(params, ctx.prec());
            eval_double_direct(d, &env, ctx, cutoff)
        }
        Term::Single(s) => eval_single(s, params, ctx),
    }
}

/// coeff · π^a · sin(πb)^s · cos(πb)^c · Π √n.
pub fn eval_weight(w: &BoundWeight, b: Option<&HPComplex>, prec: u32) -> Result<HPComplex, EvalError> {
    let mut v = coeff_complex(&w.coeff, prec);
    let key = &w.key;
    if key.pi != 0 {
        let pi = HPComplex::from_real(Float::with_val(prec, Constant::Pi));
        v = &v * &pi.powi(key.pi as i64);
    }
    if key.sin != 0 || key.cos != 0 {
        let b = b.ok_or_else(|| EvalError::Missing("b".into()))?;
        let pib = b.with_prec(prec).scale(&Float::with_val(prec, Constant::Pi));
        for (p, val) in [(key.sin, pib.sin()), (key.cos, pib.cos())] {
            if p == 0 {
                continue;
            }
            if p < 0 && val.abs_f64() < 1e-40 {
                return Err(EvalError::Domain("weight divides by a vanishing sin(πb) or cos(πb)".into()));
            }
            v = &v * &val.powi(p as i64);
        }
    }
    for (n, p) in &key.sqrt {
        let r = HPComplex::from_real(Float::with_val(prec, *n).sqrt());
        v = &v * &r.powi(*p as i64);
    }
    Ok(v)
}

/// One evaluated side and the strategies its double sums actually used.
#[derive(Debug, Clone)]
pub struct SideValue {
    pub value: EvalResult,
    pub used: BTreeSet<Strategy>,
}

pub(crate) fn eval_side_resolved(
    spec: &IdentitySpec,
    side: Side,
    params: &IdentityParams,
    ctx: &PrecisionContext,
    strategy: Strategy,
) -> Result<SideValue, EvalError> {
    let prec = ctx.prec();
    let env = NumEnv::new(params, prec);
    let mut total = EvalResult::zero(prec);
    let mut used = BTreeSet::new();
    for g in expand_side(spec, side, &params.values)? {
        let weight = eval_weight(&g.weight, env.b.as_ref(), prec)?;
        let mut group = EvalResult::zero(prec);
        // Reduction pieces from all terms of the group are pooled so shared shapes are summed once.
        let mut pool: Vec<Term> = Vec::new();
        let mut direct: Vec<&DoubleSumTerm> = Vec::new();
        for t in &g.terms {
            match t {
                Term::Single(s) => group.accumulate(&eval_single(s, params, ctx)?),
                Term::Double(d) => match strategy {
                    Strategy::Direct => direct.push(d),
                    _ => match reduce_term(d) {
                        Ok((pieces, _)) => pool.extend(pieces.into_iter().map(Term::Double)),
                        Err(e) => match (strategy, uncatalogued(e)) {
                            (Strategy::Auto, EvalError::Uncatalogued(_)) => direct.push(d),
                            (_, err) => return Err(err),
                        },
                    },
                },
            }
        }
        for t in canonicalize(&pool) {
            let d = t.as_double().expect("pool holds double sums");
            let mut part = EvalResult::zero(prec);
            let mut ok = true;
            match split_double(d, &env) {
                Ok(kernels) => {
                    for k in kernels {
                        match eval_kernel_reduced(&k, ctx) {
                            Ok(v) => part.accumulate(&v),
                            Err(EvalError::Uncatalogued(m)) if strategy == Strategy::Auto => {
                                let _ = m;
                                ok = false;
                                break;
                            }
                            Err(e) => return Err(e),
                        }
                    }
                }
                Err(e) => return Err(e),
            }
            if ok {
                used.insert(Strategy::Reduction);
                group.accumulate(&part.times(&coeff_complex(&d.coeff, prec)));
            } else {
                used.insert(Strategy::Direct);
                group.accumulate(&eval_double_direct(d, &env, ctx, DEFAULT_CUTOFF)?);
            }
        }
        for d in direct {
            used.insert(Strategy::Direct);
            group.accumulate(&eval_double_direct(d, &env, ctx, DEFAULT_CUTOFF)?);
        }
        total.accumulate(&group.times(&weight));
    }
    Ok(SideValue { value: total, used })
}

/// Evaluates one side after checking the parameters against the identity's domain.
pub fn eval_side(
    spec: &IdentitySpec,
    side: Side,
    params: &IdentityParams,
    ctx: &PrecisionContext,
    strategy: Strategy,
) -> Result<SideValue, EvalError> {
    let resolved = params.resolve(spec, false)?;
    eval_side_resolved(spec, side, &resolved, ctx, strategy)
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub identity: String,
    pub params: Vec<(String, String)>,
    pub digits: u32,
    pub output_digits: u32,
    pub strategy: String,
    pub lhs: EvalResult,
    pub rhs: EvalResult,
    pub residual: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub elapsed_ms: f64,
}

/// Flat, ordered projection of a report used for JSON and CSV output.
#[derive(Debug, Clone, Serialize)]
pub struct ComplexRecord {
    pub re: String,
    pub im: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRecord {
    pub identity: String,
    pub params: String,
    pub digits: u32,
    pub strategy: String,
    pub lhs: ComplexRecord,
    pub rhs: ComplexRecord,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
    pub elapsed_ms: f64,
}

impl IdentityReport {
    pub fn pass(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.bound.max(self.tolerance)
    }

    pub fn with_tolerance(mut self, tol: f64) -> IdentityReport {
        self.tolerance = tol;
        self
    }

    pub fn params_string(&self) -> String {
        self.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }

    pub fn record(&self) -> ReportRecord {
        let d = self.output_digits as usize;
        let c = |v: &HPComplex| ComplexRecord { re: v.re_string(d), im: v.im_string(d) };
        ReportRecord {
            identity: self.identity.clone(),
            params: self.params_string(),
            digits: self.digits,
            strategy: self.strategy.clone(),
            lhs: c(&self.lhs.value),
            rhs: c(&self.rhs.value),
            residual: self.residual,
            bound: self.bound,
            pass: self.pass(),
            elapsed_ms: self.elapsed_ms,
        }
    }
}

fn used_label(requested: Strategy, used: &BTreeSet<Strategy>) -> String {
    if used.is_empty() {
        return match requested {
            Strategy::Direct => "direct".into(),
            _ => "reduction".into(),
        };
    }
    used.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("+")
}

/// Evaluates both sides; the report passes when the residual is within the
/// combined bound (tolerance 0 until set by the caller).
pub fn eval_identity(
    spec: &IdentitySpec,
    params: &IdentityParams,
    ctx: &PrecisionContext,
    strategy: Strategy,
) -> Result<IdentityReport, EvalError> {
    let start = Instant::now();
    let resolved = params.resolve(spec, false)?;
    let lhs = eval_side_resolved(spec, Side::Lhs, &resolved, ctx, strategy)?;
    let rhs = eval_side_resolved(spec, Side::Rhs, &resolved, ctx, strategy)?;
    let residual = (&lhs.value.value - &rhs.value.value).abs_f64();
    let bound = lhs.value.abs_error_bound + rhs.value.abs_error_bound;
    let mut used = lhs.used.clone();
    used.extend(rhs.used.iter().copied());
    Ok(IdentityReport {
        identity: spec.id.clone(),
        params: resolved.describe(spec),
        digits: ctx.working_digits,
        output_digits: ctx.output_digits,
        strategy: used_label(strategy, &used),
        lhs: lhs.value,
        rhs: rhs.value,
        residual,
        bound,
        tolerance: 0.0,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Σ_a conj(χ(a)) · side(x = e^{2πia/f}) / τ(conj χ): turns x-twists into χ-twists
/// when χ is primitive.
pub fn gauss_average(
    spec: &IdentitySpec,
    side: Side,
    chi: &Character,
    params: &IdentityParams,
    ctx: &PrecisionContext,
    strategy: Strategy,
) -> Result<EvalResult, EvalError> {
    let prec = ctx.prec();
    let f = chi.modulus();
    let conj = chi.conj();
    let tau = gauss_sum(&conj, ctx);
    if tau.value.abs_f64() < 1e-20 {
        return Err(EvalError::Domain(format!("{} has a vanishing Gauss sum", chi.name())));
    }
    let mut acc = EvalResult::zero(prec);
    for a in 1..=f {
        let w = conj.value(a as i64);
        if w.is_zero() {
            continue;
        }
        let p = params.clone().with_x(CValue::root(f, a as i64));
        let v = eval_side(spec, side, &p, ctx, strategy)?;
        acc.accumulate_scaled(&w.to_complex(prec), &v.value);
    }
    Ok(acc.times(&tau.value.recip()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{hurwitz_zeta, HPComplex};
    use crate::termlang::parse_term;

    fn zeta(s: i64, ctx: &PrecisionContext) -> HPComplex {
        hurwitz_zeta(&Float::with_val(ctx.prec(), s), &HPComplex::one(ctx.prec()), ctx).unwrap().value
    }

    fn value(text: &str, params: &IdentityParams, strategy: Strategy) -> EvalResult {
        let ctx = PrecisionContext::default();
        eval_term(&parse_term(text).unwrap(), params, &ctx, strategy).unwrap()
    }

    #[test]
    fn euler_and_gkz_examples() {
        let ctx = PrecisionContext::default();
        let p = IdentityParams::new();
        let z3 = zeta(3, &ctx);
        let v = value("sum(m>=1, n>=1) 1 / (m*(m+n)^2)", &p, Strategy::Reduction);
        assert!((&v.value - &z3).abs_f64() < 1e-45, "{:?}", v);
        assert!(v.abs_error_bound < 1e-40);
        let v = value("sum(m>=1, n>=1) 1 / (m^2*(m+n)^2)", &p, Strategy::Reduction);
        let want = zeta(4, &ctx).scale(&Float::with_val(ctx.prec(), 0.75));
        assert!((&v.value - &want).abs_f64() < 1e-45);
        let v = value("sum(m>=0, n>=0) 1 / ((n+1/2)*(m+n+1)^2)", &p, Strategy::Reduction);
        let want = z3.scale(&Float::with_val(ctx.prec(), 3.5));
        assert!((&v.value - &want).abs_f64() < 1e-45);
    }

    #[test]
    fn direct_agrees_with_reduction() {
        let p = IdentityParams::new().with_x(CValue::real(Rational::from((1, 2)))).with_b(CValue::real(Rational::from((1, 4))));
        for text in [
            "sum(m>=1, n>=1) 1 / (m*(m+n)^2)",
            "sum(m>=1, n>=0) x^n / (m*(n+b)*(m+n+b)^2)",
            "sum(m>b, n>=0) x^(m+n) / ((m-b)^2*(m+n)^2)",
            "sum(m>=1, n>=0) 1 / ((n+b)^2*(m+n+b)^2)",
        ] {
            let r = value(text, &p, Strategy::Reduction);
            let d = value(text, &p, Strategy::Direct);
            let diff = (&r.value - &d.value).abs_f64();
            assert!(diff <= r.abs_error_bound + d.abs_error_bound, "{text}: {diff} vs {} + {}", r.abs_error_bound, d.abs_error_bound);
            assert!(diff < 1e-15, "{text}: {diff}");
        }
    }
}
