mod common;

use common::suites::random_term;
use common::*;
use dpl::evaluator::{eval_side, eval_term, numeric_derivative_b, CValue, EvalError, IdentityParams, Strategy};
use dpl::specfun::{hurwitz_zeta, make_character, Character, EvalResult, HPComplex};
use dpl::termlang::{
    canonicalize, expand_side, parse_term, reduce_mixed, Bindings, Combo, ParamKind, Side, Term, TermTemplate,
};
use proptest::prelude::*;
use proptest::sample::select;
use proptest::strategy::Strategy as _;
use proptest::test_runner::TestCaseError;
use rug::{Float, Rational};

fn announce(name: &str) {
    println!("{name}: seed {}", seed_hex());
}

/// Small admissible bindings for every numeric parameter of an identity.
fn sample_bindings(spec: &dpl::termlang::IdentitySpec) -> Vec<Bindings> {
    let mut out = vec![Bindings::new()];
    for p in spec.numeric_params() {
        let vals: Vec<Rational> = match &p.kind {
            ParamKind::Int { min, odd: true } => vec![Rational::from(*min | 1), Rational::from((*min | 1) + 2)],
            ParamKind::Int { min, .. } => vec![Rational::from(*min), Rational::from(min + 2)],
            ParamKind::Real { min } => vec![min.clone(), Rational::from(min + 1)],
            _ => continue,
        };
        out = out
            .into_iter()
            .flat_map(|b| {
                vals.iter().map(move |v| {
                    let mut nb = b.clone();
                    nb.insert(p.name.clone(), v.clone());
                    nb
                })
            })
            .collect();
    }
    out
}

#[test]
fn registry_terms_survive_render_and_parse() {
    let reg = registry();
    let mut seen = 0;
    for entry in reg.list(None) {
        for env in sample_bindings(&entry.spec) {
            for side in [Side::Lhs, Side::Rhs] {
                let groups = match expand_side(&entry.spec, side, &env) {
                    Ok(g) => g,
                    Err(e) => panic!("{} {env:?}: {e}", entry.id),
                };
                for g in groups {
                    for t in &g.terms {
                        let back = parse_term(&t.to_string()).unwrap_or_else(|e| panic!("{}: {t}: {e}", entry.id));
                        assert_eq!(&back, t, "{}: {t}", entry.id);
                        seen += 1;
                    }
                    let once = canonicalize(&g.terms);
                    assert_eq!(canonicalize(&once), once, "{}: canonical form is not a fixed point", entry.id);
                }
            }
        }
    }
    assert!(seen > 300, "only {seen} terms exercised");
}

fn pure_exponents(t: &Term) -> u32 {
    match t {
        Term::Double(d) => d
            .denom
            .iter()
            .filter(|f| f.combo != Combo::MN)
            .filter_map(|f| f.integer_exponent())
            .map(|e| e as u32)
            .sum(),
        Term::Single(_) => 0,
    }
}

/// Partial fractions terminate within (Σ pure exponents)² steps, leave no term with both
/// an m-factor and an n-factor, and preserve the value.
#[test]
fn partial_fractions_preserve_value() {
    announce("partial_fractions_preserve_value");
    let ctx = ctx();
    let mut runner = runner(200);
    runner
        .run(&random_term(), |t| {
            let parsed = t.parse();
            prop_assume!(parsed.is_ok());
            let parsed = parsed.unwrap();
            let reduced = reduce_mixed(std::slice::from_ref(&parsed));
            prop_assume!(reduced.is_ok(), "shifts do not pair up");
            let (group, stats) = reduced.unwrap();
            let limit = pure_exponents(&parsed).pow(2) as usize;
            prop_assert!(stats.steps <= limit, "{}: {} steps > {limit}", t.text, stats.steps);
            for r in &group {
                if let Term::Double(d) = r {
                    prop_assert!(!d.is_mixed(), "{} left a mixed term {r}", t.text);
                }
            }
            let p = t.params();
            let fail = |e: EvalError| TestCaseError::fail(format!("{} at x={} b={}: {e}", t.text, t.x, t.b));
            let whole = eval_term(&parsed, &p, &ctx, Strategy::Direct).map_err(fail)?;
            let mut parts = EvalResult::zero(ctx.prec());
            for r in &group {
                parts.accumulate(&eval_term(r, &p, &ctx, Strategy::Auto).map_err(fail)?);
            }
            let res = dist(&whole.value, &parts.value);
            let bound = whole.abs_error_bound + parts.abs_error_bound + slack(&ctx, whole.value.abs_f64());
            prop_assert!(res <= bound, "{} at x={} b={}: {res:e} > {bound:e}", t.text, t.x, t.b);
            Ok(())
        })
        .unwrap();
}

fn congruence_text(coeff: i64, offset: i64) -> String {
    let c = match coeff {
        1 => "n".to_string(),
        -1 => "-n".to_string(),
        c => format!("{c}n"),
    };
    match offset {
        0 => c,
        o if o > 0 => format!("{c}+{o}"),
        o => format!("{c}{o}"),
    }
}

/// Summing a congruence-restricted term over all offsets c of m ≡ a·n + c (mod N)
/// recovers the unrestricted term.
#[test]
fn congruence_classes_are_complete() {
    announce("congruence_classes_are_complete");
    let ctx = ctx();
    let shapes = select(vec![
        "sum(m>=1, n>=1{cong}) {num} / (m*(m+n)^{r})",
        "sum(m>=1, n>=1{cong}) {num} / (n^{p}*(m+n)^{r})",
        "sum(m>=1, n>=1{cong}) {num} / (m*n^{p}*(m+n)^{r})",
    ]);
    let nums = select(vec!["x^n", "x^(m+n)", "1"]);
    let strategy = (shapes, nums, select(vec![3i64, 5]), select(vec![1i64, -2, -1]), 1u32..=2, 2u32..=3, select(vec!["1/2", "1", "-1", "-1/3"]));
    runner(100)
        .run(&strategy, |(shape, num, modulus, a, p, r, x)| {
            let text = |cong: &str| {
                shape.replace("{cong}", cong).replace("{num}", num).replace("{p}", &p.to_string()).replace("{r}", &r.to_string())
            };
            let params = params_x(x);
            let eval = |s: &str| -> Result<EvalResult, TestCaseError> {
                let t = parse_term(s).map_err(|e| TestCaseError::fail(format!("{s}: {e}")))?;
                eval_term(&t, &params, &ctx, Strategy::Auto).map_err(|e| TestCaseError::fail(format!("{s} at x={x}: {e}")))
            };
            let whole = eval(&text(""))?;
            let mut parts = EvalResult::zero(ctx.prec());
            for c in 0..modulus {
                parts.accumulate(&eval(&text(&format!("; m={} mod {modulus}", congruence_text(a, c))))?);
            }
            let res = dist(&whole.value, &parts.value);
            let bound = whole.abs_error_bound + parts.abs_error_bound + slack(&ctx, whole.value.abs_f64());
            prop_assert!(res <= bound, "{} at x={x} split mod {modulus}: {res:e} > {bound:e}", text(""));
            Ok(())
        })
        .unwrap();
}

/// χ(ab) = χ(a)χ(b), χ(1) = 1, χ(a) = 0 exactly when gcd(a, f) > 1, for characters built from tables.
#[test]
fn characters_are_multiplicative() {
    announce("characters_are_multiplicative");
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let prec = ctx().prec();
    // Characters mod 5 (generator 2) and mod 8 (generators -1, 5) from explicit tables.
    let mod5 = |t: u32| {
        let mut table = vec![(0.0, 0.0); 5];
        for (j, a) in [1usize, 2, 4, 3].into_iter().enumerate() {
            let ang = std::f64::consts::FRAC_PI_2 * (j as u32 * t) as f64;
            table[a] = (ang.cos(), ang.sin());
        }
        make_character(5, &table).unwrap()
    };
    let mod8 = |s1: i32, s2: i32| {
        let mut table = vec![(0.0, 0.0); 8];
        for (a, e1, e2) in [(1usize, 0, 0), (3, 1, 1), (5, 0, 1), (7, 1, 0)] {
            table[a] = ((s1.pow(e1) * s2.pow(e2)) as f64, 0.0);
        }
        make_character(8, &table).unwrap()
    };
    let mut chars: Vec<Character> = ["chi0", "chi3", "chi4"].iter().map(|n| Character::builtin(n).unwrap()).collect();
    chars.extend((0..4).map(mod5));
    chars.extend([(1, 1), (1, -1), (-1, 1), (-1, -1)].map(|(a, b)| mod8(a, b)));
    runner(200)
        .run(&(0..chars.len(), -50i64..50, -50i64..50), |(i, a, b)| {
            let chi = &chars[i];
            let f = chi.modulus() as i64;
            let v = |n: i64| chi.value_complex(n, prec);
            prop_assert!(dist(&v(1), &HPComplex::one(prec)) == 0.0);
            prop_assert_eq!(v(a).is_zero(), gcd(a, f) > 1, "{} at {}", chi.name(), a);
            prop_assert!(dist(&v(a * b), &(&v(a) * &v(b))) < 1e-60, "{} at {a}, {b}", chi.name());
            prop_assert!(dist(&v(a + f), &v(a)) == 0.0);
            Ok(())
        })
        .unwrap();
}

/// Doubling working precision moves Hurwitz values by no more than the coarser bound.
#[test]
fn hurwitz_bounds_are_honest() {
    announce("hurwitz_bounds_are_honest");
    let shift = (1i64..=16).prop_flat_map(|den| (1i64..=4 * den, Just(den), -8i64..=8));
    runner(150)
        .run(&(select(vec![20u32, 30, 40]), 3i64..=24, shift), |(d, s2, (an, ad, im))| {
            let (lo, hi) = (ctx_digits(d), ctx_digits(2 * d));
            let a = |c: &dpl::specfun::PrecisionContext| {
                let p = c.prec();
                HPComplex::new(Float::with_val(p, &q(an, ad)), Float::with_val(p, im) / 4u32)
            };
            let s = |c: &dpl::specfun::PrecisionContext| Float::with_val(c.prec(), s2) / 2u32;
            let coarse = hurwitz_zeta(&s(&lo), &a(&lo), &lo).unwrap();
            let fine = hurwitz_zeta(&s(&hi), &a(&hi), &hi).unwrap();
            let res = dist(&coarse.value.with_prec(hi.prec()), &fine.value);
            let bound = coarse.abs_error_bound + fine.abs_error_bound;
            prop_assert!(res <= bound, "s={s2}/2 a={an}/{ad}+{im}/4 i at {d} digits: moved {res:e} > {bound:e}");
            Ok(())
        })
        .unwrap();
}

/// Differentiating both sides of the Hurwitz-type sum formula in b keeps them equal.
#[test]
fn derivative_of_both_sides_agrees() {
    let reg = registry();
    let spec = &reg.get("thm-1.1").unwrap().spec;
    let ctx = ctx();
    for (k, x, b) in [(1, "1/2", "1/2"), (2, "-1", "1/3"), (1, "i", "3/4"), (2, "1", "1/4")] {
        let p = IdentityParams::new().with("k", k).with_x(cv(x));
        let b0 = cv(b);
        let l = numeric_derivative_b(spec, Side::Lhs, 1, &b0, &p, &ctx, Strategy::Reduction).unwrap();
        let r = numeric_derivative_b(spec, Side::Rhs, 1, &b0, &p, &ctx, Strategy::Reduction).unwrap();
        let res = dist(&l.value, &r.value);
        assert!(res <= l.abs_error_bound + r.abs_error_bound, "k={k} x={x} b={b}: {res:e}");
        assert!(res < 1e-20, "k={k} x={x} b={b}: {res:e}");
    }
}

#[test]
fn derivative_stencil_respects_the_range_boundary() {
    let reg = registry();
    let spec = &reg.get("thm-1.1").unwrap().spec;
    let p = IdentityParams::new().with("k", 1).with_x(cv("1/2"));
    let e = numeric_derivative_b(spec, Side::Lhs, 1, &CValue::real(1), &p, &ctx(), Strategy::Reduction).unwrap_err();
    assert!(e.to_string().contains("crosses an integer"), "{e}");
}

#[test]
fn templates_with_free_parameters_are_not_terms() {
    let t = dpl::termlang::parse_term_template("sum(m>=1, n>=1) x^n / (m*(m+n)^(k+1))").unwrap();
    assert!(matches!(t, TermTemplate::Double(_)));
    assert!(parse_term("sum(m>=1, n>=1) x^n / (m*(m+n)^(k+1))").is_err());
}

#[test]
fn sides_evaluate_the_same_under_both_strategies() {
    let reg = registry();
    let entry = reg.get("cor-1.2").unwrap();
    let ctx = ctx();
    for x in ["1/2", "i", "ru(3,1)"] {
        let p = IdentityParams::new().with("k", 2).with_x(cv(x));
        let a = eval_side(&entry.spec, Side::Lhs, &p, &ctx, Strategy::Reduction).unwrap().value;
        let b = eval_side(&entry.spec, Side::Lhs, &p, &ctx, Strategy::Direct).unwrap().value;
        assert!(dist(&a.value, &b.value) <= a.abs_error_bound + b.abs_error_bound, "x={x}");
    }
}
