//! Randomized property suites. Each returns a one-line summary on success and the
//! shrunk counterexample on failure; all draw from the fixed [`SEED`].

use super::*;
use dpl::evaluator::{eval_term_with_cutoff, CValue, EvalError, Strategy, DEFAULT_CUTOFF};
use dpl::specfun::{gauss_sum, hurwitz_zeta, lerch_phi, make_character, polylog, Character};
use dpl::termlang::{parse_term, Term, TermError};
use proptest::prelude::*;
use proptest::sample::select;
use proptest::test_runner::TestError;
use proptest::strategy::Strategy as _;
use rug::ops::Pow;
use rug::Float;
use std::collections::BTreeMap;

type SuiteResult = Result<String, String>;

fn finish<V: std::fmt::Debug>(name: &str, cases: u32, r: Result<(), TestError<V>>) -> SuiteResult {
    match r {
        Ok(()) => Ok(format!("{name}: {cases} draws")),
        Err(e) => Err(format!("{name}: {e}")),
    }
}

const X_UNIT_AND_DISK: [&str; 9] = ["1", "-1", "1/2", "-1/3", "i", "ru(3,1)", "ru(5,2)", "1/2+1/3i", "-2/5i"];

/// Li(a;x)·ζ(c) = Σ x^n/(n^a (m+n)^c) + Σ x^(m+n)/(n^c (m+n)^a) + Li(a+c;x); at x = 1 this is
/// ζ(a)ζ(c) = ζ₂(a,c) + ζ₂(c,a) + ζ(a+c). Each draw also verifies the registry's twisted form
/// ζ(2)Li(k+1;x) at a random k.
pub fn stuffle(cases: u32) -> SuiteResult {
    let ctx = ctx();
    let reg = registry();
    let aux = reg.get("aux-stuffle").expect("aux-stuffle is registered");
    let s = Strategy::Reduction;
    let r = runner(cases).run(&(2i64..=5, 2i64..=5, 1i64..=4, select(X_UNIT_AND_DISK.to_vec())), |(a, c, k, x)| {
        let p = params_x(x);
        let li_a = term(&format!("single(n>=1) x^n / n^{a}"), &p, &ctx, s);
        let z_c = term(&format!("single(n>=1) 1 / n^{c}"), &p, &ctx, s);
        let li_ac = term(&format!("single(n>=1) x^n / n^{}", a + c), &p, &ctx, s);
        let d1 = term(&format!("sum(m>=1, n>=1) x^n / (n^{a}*(m+n)^{c})"), &p, &ctx, s);
        let d2 = term(&format!("sum(m>=1, n>=1) x^(m+n) / (n^{c}*(m+n)^{a})"), &p, &ctx, s);
        let lhs = &li_a.value * &z_c.value;
        let rhs = d1.plus(&d2).plus(&li_ac);
        let bound = li_a.value.abs_f64() * z_c.abs_error_bound
            + z_c.value.abs_f64() * li_a.abs_error_bound
            + rhs.abs_error_bound
            + slack(&ctx, lhs.abs_f64());
        let res = dist(&lhs, &rhs.value);
        prop_assert!(res <= bound, "a={a} c={c} x={x}: residual {res:e} > bound {bound:e}");

        let mut point = BTreeMap::new();
        point.insert("k".to_string(), k.to_string());
        point.insert("x".to_string(), x.to_string());
        let rep = aux.verify(&aux.params(&point).unwrap(), &ctx, s).unwrap();
        prop_assert!(rep.pass(), "aux-stuffle k={k} x={x}: residual {:e}", rep.residual);
        Ok(())
    });
    finish("stuffle", cases, r)
}

/// ζ(s,a) − ζ(s,a+1) = a^{−s}; ζ(s,a) = 2^{−s}(ζ(s,a/2) + ζ(s,(a+1)/2)); Φ(x,s,a) − xΦ(x,s,a+1) = a^{−s};
/// for integer s also ζ(s,1/2) = (2^s − 1)ζ(s) and Li(s;x) + Li(s;−x) = 2^{1−s}Li(s;x²).
pub fn bisection_shift(cases: u32) -> SuiteResult {
    let ctx = ctx();
    let prec = ctx.prec();
    let shift = (1i64..=12).prop_flat_map(|den| (1i64..=3 * den, Just(den)));
    let r = runner(cases).run(&(4i64..=20, shift, select(X_UNIT_AND_DISK.to_vec())), |(s2, (an, ad), x)| {
        let s = Float::with_val(prec, s2) / 2u32;
        let a = HPComplex::from_rational(&q(an, ad), prec);
        let xv = cv(x).to_complex(prec);
        let a_pow = a.pow_real(&(-s.clone()));
        let check = |what: &str, lhs: &HPComplex, rhs: &HPComplex, bound: f64| -> Result<(), TestCaseError> {
            let res = dist(lhs, rhs);
            let bound = bound + slack(&ctx, rhs.abs_f64());
            prop_assert!(res <= bound, "{what} s={s2}/2 a={an}/{ad} x={x}: residual {res:e} > bound {bound:e}");
            Ok(())
        };

        let z0 = hurwitz_zeta(&s, &a, &ctx).unwrap();
        let z1 = hurwitz_zeta(&s, &a.add_i64(1), &ctx).unwrap();
        check("shift", &(&z0.value - &z1.value), &a_pow, z0.abs_error_bound + z1.abs_error_bound)?;

        let half = q(1, 2);
        let h0 = hurwitz_zeta(&s, &a.scale_rational(&half), &ctx).unwrap();
        let h1 = hurwitz_zeta(&s, &a.add_i64(1).scale_rational(&half), &ctx).unwrap();
        let two_s = Float::with_val(prec, 2).pow(&s);
        let split = (&h0.value + &h1.value).scale(&Float::with_val(prec, two_s.recip_ref()));
        check("bisection", &split, &z0.value, z0.abs_error_bound + (h0.abs_error_bound + h1.abs_error_bound) / two_s.to_f64())?;

        let p0 = lerch_phi(&xv, &s, &a, &ctx).unwrap();
        let p1 = lerch_phi(&xv, &s, &a.add_i64(1), &ctx).unwrap();
        check(
            "lerch shift",
            &(&p0.value - &(&xv * &p1.value)),
            &a_pow,
            p0.abs_error_bound + xv.abs_f64() * p1.abs_error_bound,
        )?;

        if s2 % 2 == 0 {
            let n = s2 / 2;
            let zh = hurwitz_zeta(&s, &HPComplex::from_rational(&half, prec), &ctx).unwrap();
            let z = hurwitz_zeta(&s, &HPComplex::one(prec), &ctx).unwrap();
            let f = two_s.to_f64() - 1.0;
            let scaled = z.value.scale(&(two_s.clone() - 1u32));
            check("half shift", &zh.value, &scaled, zh.abs_error_bound + f * z.abs_error_bound)?;

            let neg = -xv.clone();
            let lp = polylog(n, &xv, &ctx).unwrap();
            let lm = polylog(n, &neg, &ctx).unwrap();
            let l2 = polylog(n, &xv.square(), &ctx).unwrap();
            let w = Float::with_val(prec, 2).pow(1 - n);
            check(
                "polylog duplication",
                &(&lp.value + &lm.value),
                &l2.value.scale(&w),
                lp.abs_error_bound + lm.abs_error_bound + w.to_f64() * l2.abs_error_bound,
            )?;
        }
        Ok(())
    });
    finish("bisection/shift", cases, r)
}

fn primitive_root(p: u64) -> u64 {
    (2..p)
        .find(|&g| {
            let mut v = 1u64;
            (1..p - 1).all(|_| {
                v = v * g % p;
                v != 1
            })
        })
        .expect("p is prime")
}

/// The character mod the prime p sending a primitive root to e^{2πit/(p−1)}.
fn prime_character(p: u64, t: u64) -> Character {
    let g = primitive_root(p);
    let mut table = vec![(0.0, 0.0); p as usize];
    let mut a = 1u64;
    for j in 0..p - 1 {
        let angle = 2.0 * std::f64::consts::PI * (j * t) as f64 / (p - 1) as f64;
        table[a as usize] = (angle.cos(), angle.sin());
        a = a * g % p;
    }
    make_character(p, &table).expect("valid character table")
}

fn character_pool() -> impl proptest::strategy::Strategy<Value = Character> {
    prop_oneof![
        select(vec!["chi0", "chi3", "chi4"]).prop_map(|n| Character::builtin(n).unwrap()),
        (select(vec![5u64, 7, 11, 13]), 0u64..12).prop_map(|(p, t)| prime_character(p, t % (p - 1))),
    ]
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// For a primitive f-th root ω: Φ(ω,s,b) = f^{−s} Σ_r ω^r ζ(s,(r+b)/f) and
/// Σ_j Li(s;ω^j) = f^{1−s}ζ(s) through the evaluator's exact-root path; character
/// orthogonality and the Gauss-sum inversion χ(n)τ(χ̄) = Σ_a χ̄(a)e^{2πian/f} for n ≤ 3f.
pub fn root_grouping(cases: u32) -> SuiteResult {
    let ctx = ctx();
    let prec = ctx.prec();
    let root = (2u64..=12).prop_flat_map(|f| (Just(f), (1..f).prop_filter("primitive", move |a| gcd(*a, f) == 1)));
    let shift = (1i64..=12).prop_flat_map(|den| (1i64..=den, Just(den)));
    let r = runner(cases).run(&(root, 2i64..=4, shift, character_pool()), |((f, a), s, (bn, bd), chi)| {
        let sf = Float::with_val(prec, s);
        let w = HPComplex::root_of_unity(f, a as i64, prec);
        let b = q(bn, bd);
        let phi = lerch_phi(&w, &sf, &HPComplex::from_rational(&b, prec), &ctx).unwrap();
        let mut acc = HPComplex::zero(prec);
        let mut acc_bound = 0.0;
        for r in 0..f as i64 {
            let shift = HPComplex::from_rational(&((b.clone() + r) / f), prec);
            let z = hurwitz_zeta(&sf, &shift, &ctx).unwrap();
            acc += &(&HPComplex::root_of_unity(f, a as i64 * r, prec) * &z.value);
            acc_bound += z.abs_error_bound;
        }
        let fs = (f as f64).powi(-(s as i32));
        let grouped = acc.scale(&Float::with_val(prec, f).pow(-s));
        let res = dist(&phi.value, &grouped);
        let bound = phi.abs_error_bound + fs * acc_bound + slack(&ctx, f as f64 * phi.value.abs_f64());
        prop_assert!(res <= bound, "lerch f={f} a={a} s={s} b={bn}/{bd}: residual {res:e} > bound {bound:e}");

        let mut sum = EvalResult::zero(prec);
        for j in 0..f as i64 {
            let p = IdentityParams::new().with_x(CValue::root(f, j));
            sum.accumulate(&term(&format!("single(n>=1) x^n / n^{s}"), &p, &ctx, Strategy::Reduction));
        }
        let z = hurwitz_zeta(&sf, &HPComplex::one(prec), &ctx).unwrap();
        let ff = Float::with_val(prec, f).pow(1 - s);
        let want = z.value.scale(&ff);
        let res = dist(&sum.value, &want);
        let bound = sum.abs_error_bound + ff.to_f64() * z.abs_error_bound + slack(&ctx, f as f64);
        prop_assert!(res <= bound, "polylog grouping f={f} s={s}: residual {res:e} > bound {bound:e}");

        let m = chi.modulus();
        let total = (1..=m as i64).fold(HPComplex::zero(prec), |t, n| &t + &chi.value_complex(n, prec));
        if !chi.is_principal() {
            prop_assert!(total.abs_f64() <= slack(&ctx, m as f64), "{}: sum of values {:e}", chi.name(), total.abs_f64());
        }
        // Inversion needs a primitive character; principal ones mod p > 1 are not.
        if chi.is_principal() && m > 1 {
            return Ok(());
        }
        let conj = chi.conj();
        let tau = gauss_sum(&conj, &ctx);
        for n in 1..=3 * m as i64 {
            let mut rhs = HPComplex::zero(prec);
            for a in 1..=m as i64 {
                rhs += &(&conj.value_complex(a, prec) * &HPComplex::root_of_unity(m, a * n, prec));
            }
            let lhs = &chi.value_complex(n, prec) * &tau.value;
            let res = dist(&lhs, &rhs);
            prop_assert!(
                res <= tau.abs_error_bound + slack(&ctx, m as f64),
                "{} n={n}: Gauss inversion residual {res:e}",
                chi.name()
            );
        }
        Ok(())
    });
    finish("root-of-unity grouping", cases, r)
}

/// A random double sum drawn from the shapes the registry uses.
#[derive(Debug, Clone)]
pub struct RandomTerm {
    pub text: String,
    pub x: &'static str,
    pub b: &'static str,
}

impl RandomTerm {
    pub fn params(&self) -> IdentityParams {
        params_xb(self.x, self.b)
    }

    pub fn parse(&self) -> Result<Term, TermError> {
        parse_term(&self.text)
    }
}

pub fn random_term() -> impl proptest::strategy::Strategy<Value = RandomTerm> {
    let shapes = select(vec![
        "sum(m>=1, n>=1) {num} / (m^{p}*(m+n)^{r})",
        "sum(m>=1, n>=0) {num} / ((n+b)^{p}*(m+n+b)^{r})",
        "sum(m>b, n>=0) {num} / ((m-b)^{p}*(m+n)^{r})",
        "sum(m>=1, n>=1) {num} / (m^{p}*n^{q}*(m+n)^{r})",
        "sum(m>=1, n>=0) {num} / ((m+b)^{p}*(n+1/2)^{q}*(m+n+b+1/2)^{r})",
    ]);
    let nums = select(vec!["1", "x^n", "x^(m+n)", "x^(n+1)"]);
    let xs = select(vec!["1", "-1", "1/2", "-1/3", "i", "ru(3,1)", "1/2+1/2i"]);
    let bs = select(vec!["1/4", "1/3", "1/2", "2/3", "3/4", "1"]);
    (shapes, nums, 1u32..=3, 1u32..=2, 1u32..=3, xs, bs).prop_map(|(shape, num, p, q, r, x, b)| RandomTerm {
        text: shape
            .replace("{num}", num)
            .replace("{p}", &p.to_string())
            .replace("{q}", &q.to_string())
            .replace("{r}", &r.to_string()),
        x,
        b,
    })
}

/// |reduction − direct| ≤ sum of bounds for random double sums.
pub fn strategy_agreement(cases: u32) -> SuiteResult {
    let ctx = ctx();
    let r = runner(cases).run(&random_term(), |t| {
        let parsed = t.parse();
        prop_assume!(parsed.is_ok());
        let parsed = parsed.unwrap();
        let p = t.params();
        let red = dpl::evaluator::eval_term(&parsed, &p, &ctx, Strategy::Reduction);
        prop_assume!(!matches!(red, Err(EvalError::Uncatalogued(_))), "reduction does not catalogue this shape");
        let dir = dpl::evaluator::eval_term(&parsed, &p, &ctx, Strategy::Direct);
        let (red, dir) = match (red, dir) {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => return Err(TestCaseError::fail(format!("{t:?}: {:?} / {:?}", a.err(), b.err()))),
        };
        let res = dist(&red.value, &dir.value);
        let bound = red.abs_error_bound + dir.abs_error_bound + slack(&ctx, red.value.abs_f64());
        prop_assert!(res <= bound, "{} at x={} b={}: |reduction - direct| = {res:e} > {bound:e}", t.text, t.x, t.b);
        Ok(())
    });
    finish("strategy agreement", cases, r)
}

/// Doubling the direct truncation point, or the working precision of a reduction, moves
/// the value by no more than the coarser run's bound.
pub fn cutoff_robustness(cases: u32) -> SuiteResult {
    let ctx = ctx();
    let cutoffs = select(vec![DEFAULT_CUTOFF, 3 * DEFAULT_CUTOFF / 2, 2 * DEFAULT_CUTOFF]);
    let digits = select(vec![20u32, 25, 30]);
    let r = runner(cases).run(&(random_term(), cutoffs, digits), |(t, cutoff, d)| {
        let parsed = t.parse();
        prop_assume!(parsed.is_ok());
        let parsed = parsed.unwrap();
        let p = t.params();
        let fail = |e: EvalError| TestCaseError::fail(format!("{} at x={} b={}: {e}", t.text, t.x, t.b));
        let coarse = eval_term_with_cutoff(&parsed, &p, &ctx, cutoff).map_err(fail)?;
        let fine = eval_term_with_cutoff(&parsed, &p, &ctx, 2 * cutoff).map_err(fail)?;
        let res = dist(&coarse.value, &fine.value);
        let bound = coarse.abs_error_bound + slack(&ctx, coarse.value.abs_f64());
        prop_assert!(res <= bound, "{} at x={} b={}, T={cutoff}: moved {res:e} > {bound:e}", t.text, t.x, t.b);

        let lo = ctx_digits(d);
        let hi = ctx_digits(2 * d);
        let a = dpl::evaluator::eval_term(&parsed, &p, &lo, Strategy::Auto).map_err(fail)?;
        let b = dpl::evaluator::eval_term(&parsed, &p, &hi, Strategy::Auto).map_err(fail)?;
        let res = dist(&a.value, &b.value);
        let bound = a.abs_error_bound + slack(&lo, a.value.abs_f64());
        prop_assert!(res <= bound, "{} at x={} b={}, {d} vs {} digits: moved {res:e} > {bound:e}", t.text, t.x, t.b, 2 * d);
        Ok(())
    });
    finish("cutoff robustness", cases, r)
}
