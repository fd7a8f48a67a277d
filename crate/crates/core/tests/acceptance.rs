//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Batteries and tolerances are pinned here rather than read from the identity
//! metadata, so loosening a meta file cannot make this report greener.
//! `cargo test --test acceptance -- 4 8` runs a subset.

mod common;

use common::*;
use dpl::evaluator::{
    eval_g, eval_identity, eval_side, g_derivatives_at_one, gauss_average, numeric_derivative_b,
    richardson_derivative_step, CValue, IdentityParams, IdentityReport, Strategy,
};
use dpl::registry::{RegistryEntry, DERIVATION_PAIRS};
use dpl::specfun::{polylog, Character, HPComplex};
use dpl::termlang::{check_derivation, parse_identity, Side};
use rug::float::Constant;
use rug::Float;
use std::collections::BTreeMap;
use std::time::Instant;

type Outcome = Result<String, String>;

/// Cartesian product of named value lists, in order.
fn grid(axes: &[(&str, &[&str])]) -> Vec<BTreeMap<String, String>> {
    let mut out = vec![BTreeMap::new()];
    for (name, values) in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut p = p.clone();
                    p.insert(name.to_string(), v.to_string());
                    p
                })
            })
            .collect();
    }
    out
}

fn describe(p: &BTreeMap<String, String>) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Copy)]
enum Tol {
    Abs(f64),
    Rel(f64),
}

impl Tol {
    fn limit(self, r: &IdentityReport) -> f64 {
        match self {
            Tol::Abs(t) => t,
            Tol::Rel(t) => t * r.rhs.value.abs_f64(),
        }
    }
}

struct Run {
    points: usize,
    worst: f64,
    slowest_ms: f64,
}

/// Verifies `id` over `points`; every residual must be within `tol` and every point
/// within `max_ms`.
fn battery(id: &str, points: &[BTreeMap<String, String>], strategy: Strategy, tol: Tol, max_ms: f64) -> Result<Run, String> {
    let reg = registry();
    let entry = reg.get(id).map_err(|e| e.to_string())?;
    let ctx = ctx();
    let mut run = Run { points: 0, worst: 0.0, slowest_ms: 0.0 };
    for p in points {
        let params = entry.params(p).map_err(|e| format!("{id} {}: {e}", describe(p)))?;
        let rep = eval_identity(&entry.spec, &params, &ctx, strategy).map_err(|e| format!("{id} {}: {e}", describe(p)))?;
        let limit = tol.limit(&rep);
        if !(rep.residual <= limit) {
            return Err(format!("{id} {} [{strategy}]: residual {:.2e} > {limit:.0e}", describe(p), rep.residual));
        }
        if rep.elapsed_ms > max_ms {
            return Err(format!("{id} {}: {:.0} ms exceeds {max_ms:.0} ms", describe(p), rep.elapsed_ms));
        }
        run.points += 1;
        run.worst = run.worst.max(rep.residual);
        run.slowest_ms = run.slowest_ms.max(rep.elapsed_ms);
    }
    Ok(run)
}

fn summary(id: &str, strategy: Strategy, r: &Run) -> String {
    format!("{id} [{strategy}] {} pts, worst {:.1e}, slowest {:.0} ms", r.points, r.worst, r.slowest_ms)
}

fn batteries(list: &[(&str, Vec<BTreeMap<String, String>>, Strategy, Tol, f64)]) -> Outcome {
    let mut parts = Vec::new();
    for (id, points, strategy, tol, max_ms) in list {
        let run = battery(id, points, *strategy, *tol, *max_ms)?;
        parts.push(summary(id, *strategy, &run));
    }
    Ok(parts.join("; "))
}

const NO_LIMIT: f64 = f64::INFINITY;
const R: Strategy = Strategy::Reduction;
const D: Strategy = Strategy::Direct;

fn c1() -> Outcome {
    let l: Vec<String> = (3..=12).map(|l| l.to_string()).collect();
    let l: Vec<&str> = l.iter().map(String::as_str).collect();
    batteries(&[("euler-sum", grid(&[("l", &l)]), R, Tol::Abs(1e-40), 1000.0)])
}

fn c2() -> Outcome {
    let n = grid(&[("N", &["2", "3", "4", "5"])]);
    batteries(&[
        ("gkz-even", n.clone(), R, Tol::Abs(1e-40), NO_LIMIT),
        ("gkz-odd", n, R, Tol::Abs(1e-40), NO_LIMIT),
    ])
}

fn c3() -> Outcome {
    batteries(&[
        ("ohno-zudilin", grid(&[("l", &["3", "4", "5", "6", "7", "8"])]), R, Tol::Abs(1e-35), NO_LIMIT),
        ("nakamura-1", grid(&[("N", &["2", "3", "4", "5"])]), R, Tol::Abs(1e-35), NO_LIMIT),
        ("nakamura-2", grid(&[("M", &["4", "5", "6"])]), R, Tol::Abs(1e-35), NO_LIMIT),
    ])
}

fn c4() -> Outcome {
    let pts = grid(&[("k", &["1", "2", "3"]), ("b", &["1/4", "1/2", "3/4"]), ("x", &["1", "1/2", "-1", "i"])]);
    batteries(&[
        ("thm-1.1", pts.clone(), R, Tol::Abs(1e-25), 60_000.0),
        ("thm-1.1", pts, D, Tol::Abs(1e-8), 60_000.0),
    ])
}

const COR_1_2_X: [&str; 5] = ["1", "-1", "1/2", "i", "ru(3,1)"];

fn cor_1_2_grid() -> Vec<BTreeMap<String, String>> {
    grid(&[("k", &["1", "2", "3", "4", "5"]), ("x", &COR_1_2_X)])
}

fn c5() -> Outcome {
    batteries(&[
        ("cor-1.2", cor_1_2_grid(), R, Tol::Abs(1e-25), 60_000.0),
        ("cor-1.2", cor_1_2_grid(), D, Tol::Abs(1e-8), 60_000.0),
    ])
}

/// Averaging an x-identity over x = e^{2πia/f} with weights χ̄(a)/τ(χ̄) must give the
/// character identity's sides.
fn gauss_consistency(x_id: &str, chi_id: &str, tol: f64) -> Outcome {
    let reg = registry();
    let (xe, ce) = (reg.get(x_id).unwrap(), reg.get(chi_id).unwrap());
    let ctx = ctx();
    let mut worst = 0f64;
    let mut n = 0;
    for chi in ["chi3", "chi4"] {
        for k in 1..=3i64 {
            let p = IdentityParams::new().with("k", k);
            let pc = p.clone().with_char("chi", Character::builtin(chi).unwrap());
            for side in [Side::Lhs, Side::Rhs] {
                let avg = gauss_average(&xe.spec, side, &Character::builtin(chi).unwrap(), &p, &ctx, R)
                    .map_err(|e| format!("{x_id} averaged over {chi}, k={k}: {e}"))?;
                let direct = eval_side(&ce.spec, side, &pc, &ctx, R).map_err(|e| format!("{chi_id} {chi} k={k}: {e}"))?;
                let res = dist(&avg.value, &direct.value.value);
                if res > tol {
                    return Err(format!("{x_id} averaged over {chi}, k={k}, {side:?}: differs from {chi_id} by {res:.2e}"));
                }
                worst = worst.max(res);
                n += 1;
            }
        }
    }
    Ok(format!("{x_id} averaged vs {chi_id}: {n} sides, worst {worst:.1e}"))
}

fn c6() -> Outcome {
    let pts = grid(&[("k", &["1", "2", "3"]), ("chi", &["chi3", "chi4"])]);
    let b = batteries(&[
        ("cor-1.3", pts.clone(), R, Tol::Abs(1e-8), NO_LIMIT),
        ("cor-1.5-L", pts, R, Tol::Abs(1e-8), NO_LIMIT),
    ])?;
    let g1 = gauss_consistency("cor-1.2", "cor-1.3", 1e-8)?;
    let g2 = gauss_consistency("thm-1.4", "cor-1.5-L", 1e-8)?;
    Ok(format!("{b}; {g1}; {g2}"))
}

fn c7() -> Outcome {
    batteries(&[
        ("thm-1.4", cor_1_2_grid(), R, Tol::Abs(1e-8), NO_LIMIT),
        ("cor-1.5-sfnu", grid(&[("k", &["2", "3", "4", "5", "6"])]), R, Tol::Abs(1e-30), NO_LIMIT),
    ])
}

fn c8() -> Outcome {
    let pts = grid(&[("s", &["1", "3/2", "2", "3"]), ("b", &["1/4", "1/2", "3/4"]), ("x", &["1", "1/2", "-1"])]);
    batteries(&[("thm-2.1", pts, D, Tol::Abs(1e-8), NO_LIMIT)])
}

/// Base step for differencing g around b = 1; h/4 stays outside the Taylor window of eval_g.
const G_STEP: (i32, i32) = (1, 100);

fn c9() -> Outcome {
    let ctx = ctx();
    let prec = ctx.prec();
    let h = q(G_STEP.0.into(), G_STEP.1.into());
    let one = CValue::real(1);
    let mut worst = [0f64; 4];
    let mut count = 0;
    for k in 1..=3i64 {
        for x in ["1", "1/2", "-1", "i"] {
            let xv = cv(x).to_complex(prec);
            let closed = g_derivatives_at_one(k, &xv, &ctx).map_err(|e| e.to_string())?;
            let g = |b: &CValue| eval_g(&b.to_complex(prec), k, &xv, &ctx);
            // g(1) from the symmetric means (g(1+h) + g(1-h))/2 = g(1) + O(h²), extrapolated.
            let mean = |h: &rug::Rational| -> Result<HPComplex, String> {
                let up = g(&one.add_rational(h).unwrap()).map_err(|e| e.to_string())?;
                let down = g(&one.add_rational(&(-h.clone())).unwrap()).map_err(|e| e.to_string())?;
                Ok((&up.value + &down.value).scale_rational(&q(1, 2)))
            };
            let m: Vec<HPComplex> = (0..3)
                .map(|i| mean(&(h.clone() / (1u32 << i))))
                .collect::<Result<_, _>>()?;
            let r1: Vec<HPComplex> = (0..2).map(|i| (&m[i + 1].scale_i64(4) - &m[i]).scale_rational(&q(1, 3))).collect();
            let g0 = (&r1[1].scale_i64(16) - &r1[0]).scale_rational(&q(1, 15));
            let e0 = relative(&g0, &closed[0].value);
            let d1 = richardson_derivative_step(&g, 1, &one, &h, &ctx).map_err(|e| e.to_string())?;
            let d2 = richardson_derivative_step(&g, 2, &one, &h, &ctx).map_err(|e| e.to_string())?;
            let e1 = relative(&d1.value, &closed[1].value);
            let e2 = relative(&d2.value, &closed[2].value);
            if e0 > 1e-6 || e1 > 1e-6 || e2 > 1e-5 {
                return Err(format!("g at k={k}, x={x}: relative errors {e0:.1e}, {e1:.1e}, {e2:.1e}"));
            }

            // x · d/db of the thm-1.1 right side at b = 1 equals −π²Li(k+1;x) + 2(k+3)Li(k+3;x).
            let reg = registry();
            let spec = &reg.get("thm-1.1").unwrap().spec;
            let p = IdentityParams::new().with("k", k).with_x(cv(x));
            let d = numeric_derivative_b(spec, Side::Rhs, 1, &one, &p, &ctx, R).map_err(|e| e.to_string())?;
            let got = &d.value * &xv;
            let pi2 = HPComplex::from_real(Float::with_val(prec, Constant::Pi).square());
            let l1 = polylog(k + 1, &xv, &ctx).map_err(|e| e.to_string())?;
            let l3 = polylog(k + 3, &xv, &ctx).map_err(|e| e.to_string())?;
            let want = &l3.value.scale_i64(2 * (k + 3)) - &(&pi2 * &l1.value);
            let e3 = relative(&got, &want);
            if e3 > 1e-6 {
                return Err(format!("right-side derivative at k={k}, x={x}: relative error {e3:.1e}"));
            }
            for (w, e) in worst.iter_mut().zip([e0, e1, e2, e3]) {
                *w = w.max(e);
            }
            count += 1;
        }
    }
    let run = battery("prop-3.1", &cor_1_2_grid(), R, Tol::Abs(1e-8), NO_LIMIT)?;
    Ok(format!(
        "g, g', g'' at {count} (k,x): worst rel {:.1e}, {:.1e}, {:.1e}; rhs derivative worst rel {:.1e}; {}",
        worst[0],
        worst[1],
        worst[2],
        worst[3],
        summary("prop-3.1", R, &run)
    ))
}

fn c10() -> Outcome {
    let k = ["3", "4", "5"];
    batteries(&[
        ("rem-3.4-higher", grid(&[("k", &k), ("x", &["1", "1/2"])]), R, Tol::Abs(1e-8), NO_LIMIT),
        ("rem-3.4-akf2", grid(&[("k", &k)]), R, Tol::Abs(1e-30), NO_LIMIT),
    ])
}

fn c11() -> Outcome {
    batteries(&[
        ("thm-4.1", grid(&[("N", &["1", "3", "5"]), ("k", &["1", "2"]), ("x", &["1", "1/2"])]), R, Tol::Abs(1e-8), NO_LIMIT),
        ("cor-4.2", grid(&[("k", &["1", "2", "3", "4"])]), R, Tol::Abs(1e-10), NO_LIMIT),
        ("prop-4.3", grid(&[("s", &["1", "2"]), ("N", &["1", "3", "5"]), ("x", &["1", "1/2"])]), R, Tol::Abs(1e-8), NO_LIMIT),
    ])
}

fn c12() -> Outcome {
    batteries(&[
        ("thm-4.4", grid(&[("N", &["1", "3"]), ("k", &["1", "2"]), ("x", &["1", "1/2"])]), R, Tol::Abs(1e-8), NO_LIMIT),
        ("example-n1", vec![BTreeMap::new()], R, Tol::Rel(1e-10), NO_LIMIT),
        ("example-n3", vec![BTreeMap::new()], R, Tol::Abs(1e-8), NO_LIMIT),
    ])
}

/// Replaces exactly one occurrence of `from` in an entry's source and reparses it.
fn perturbed(entry: &RegistryEntry, from: &str, to: &str) -> Result<dpl::termlang::IdentitySpec, String> {
    if entry.source.matches(from).count() != 1 {
        return Err(format!("{}: perturbation site '{from}' is not unique", entry.id));
    }
    parse_identity(&entry.source.replacen(from, to, 1)).map_err(|e| format!("{}: {e}", entry.id))
}

fn c13() -> Outcome {
    let reg = registry();
    let ks = [1, 2, 3, 4];
    let mut parts = Vec::new();
    for (from, to) in DERIVATION_PAIRS {
        let rep = reg.derive(from, to, &ks).map_err(|e| e.to_string())?;
        if !rep.pass() {
            let bad = rep.checks.iter().find(|c| !c.pass).unwrap();
            return Err(format!("{from} -> {to} fails at {}={}: {:?}", rep.param, bad.k, bad.witness));
        }
        parts.push(format!("{from} -> {to} k=1..4 ok"));
    }
    let get = |id: &str| reg.get(id).unwrap();
    let controls = [
        (perturbed(get("thm-2.1"), "-sum(m>b, n>=0) x^n / ((m-b)^2", "sum(m>b, n>=0) x^n / ((m-b)^2")?, get("thm-1.1").spec.clone(), "thm-2.1 with +(m-b)^2 term"),
        (perturbed(get("prop-4.3"), "-sum(m>=1, n>=1; m=-2n mod N) x^(m+n)", "sum(m>=1, n>=1; m=-2n mod N) x^(m+n)")?, get("thm-4.1").spec.clone(), "prop-4.3 with +x^(m+n) term"),
        (get("thm-2.1").spec.clone(), perturbed(get("thm-1.1"), "-k : sum(m>b", "-(k+1) : sum(m>b")?, "thm-1.1 with coefficient -(k+1)"),
    ];
    for (from, to, label) in controls {
        let rep = check_derivation(&from, &to, &ks).map_err(|e| format!("{label}: {e}"))?;
        let failing: Vec<_> = rep.checks.iter().filter(|c| !c.pass).collect();
        if failing.len() != rep.checks.len() {
            return Err(format!("negative control '{label}' passed at some sample point"));
        }
        match failing.iter().find(|c| c.witness.is_none()) {
            Some(c) => return Err(format!("negative control '{label}' fails at k={} without a witness", c.k)),
            None => parts.push(format!("{label} rejected, e.g. {}", failing[0].witness.as_deref().unwrap())),
        }
    }
    Ok(parts.join("; "))
}

const DRAWS: u32 = 100;

fn c14() -> Outcome {
    let suites: [fn(u32) -> Result<String, String>; 5] = [
        suites::stuffle,
        suites::bisection_shift,
        suites::root_grouping,
        suites::strategy_agreement,
        suites::cutoff_robustness,
    ];
    let mut parts = vec![format!("seed {}", seed_hex())];
    for s in suites {
        parts.push(s(DRAWS)?);
    }
    Ok(parts.join("; "))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 14] = [
        (1, "Euler sum formula", c1),
        (2, "GKZ split", c2),
        (3, "Ohno-Zudilin and Nakamura", c3),
        (4, "Hurwitz-type sum formula", c4),
        (5, "untwisted x-sum formula", c5),
        (6, "character identities", c6),
        (7, "polylog sum formula and zeta(k+3) evaluation", c7),
        (8, "real-s functional relation", c8),
        (9, "derivative suite", c9),
        (10, "higher-weight formulas", c10),
        (11, "congruence suite", c11),
        (12, "half-shift suite", c12),
        (13, "symbolic derivations", c13),
        (14, "property suites", c14),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS ({name}, {secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL ({name}, {secs:.1} s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
