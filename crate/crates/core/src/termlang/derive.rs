//! Symbolic derivation checks: one side, partial-fraction reduced, must equal another
//! side term by term within each transcendental weight class.

use super::ast::{IdentitySpec, ParamKind, Side};
use super::expand::{expand_side, WeightKey};
use super::expr::Bindings;
use super::reduce::reduce_mixed;
use super::term::{canonicalize, Term, TermGroup};
use super::TermError;
use rug::Rational;
use std::collections::BTreeMap;

/// Terms of one side grouped by weight key, rational weights folded in.
pub type CanonicalSide = BTreeMap<WeightKey, TermGroup>;

/// Expands a side, applies partial fractions, and merges like terms per weight key.
pub fn canonical_side(spec: &IdentitySpec, side: Side, env: &Bindings) -> Result<CanonicalSide, TermError> {
    let mut acc: BTreeMap<WeightKey, Vec<Term>> = BTreeMap::new();
    for g in expand_side(spec, side, env)? {
        let (reduced, _) = reduce_mixed(&g.scaled_terms())?;
        acc.entry(g.weight.key.clone()).or_default().extend(reduced);
    }
    Ok(acc
        .into_iter()
        .map(|(k, terms)| (k, canonicalize(&terms)))
        .filter(|(_, terms)| !terms.is_empty())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KCheck {
    pub k: i64,
    pub bindings: Bindings,
    pub pass: bool,
    pub from_terms: usize,
    pub to_terms: usize,
    /// First term whose coefficient differs, with the weight it belongs to.
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivationReport {
    pub from: String,
    pub to: String,
    pub param: String,
    pub checks: Vec<KCheck>,
}

impl DerivationReport {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

fn first_mismatch(a: &CanonicalSide, b: &CanonicalSide) -> Option<String> {
    let mut keys: Vec<&WeightKey> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let empty = TermGroup::new();
    for key in keys {
        let ga = a.get(key).unwrap_or(&empty);
        let gb = b.get(key).unwrap_or(&empty);
        if ga == gb {
            continue;
        }
        let coeffs = |g: &TermGroup| -> BTreeMap<Term, Rational> {
            g.iter().map(|t| (t.shape(), t.coeff().clone())).collect()
        };
        let (ca, cb) = (coeffs(ga), coeffs(gb));
        let mut shapes: Vec<&Term> = ca.keys().chain(cb.keys()).collect();
        shapes.sort();
        shapes.dedup();
        for s in shapes {
            let x = ca.get(s).cloned().unwrap_or_default();
            let y = cb.get(s).cloned().unwrap_or_default();
            if x != y {
                return Some(format!("[{key}] {s}: derived coefficient {x}, target coefficient {y}"));
            }
        }
    }
    None
}

/// Name of the parameter that plays the role of the depth k (`k` or `s`).
fn depth_param(spec: &IdentitySpec) -> Option<String> {
    ["k", "s"].iter().find(|n| spec.param(n).is_some_and(|p| p.is_numeric())).map(|n| n.to_string())
}

/// Small admissible values for parameters other than the depth, so each depth is
/// checked at several points.
fn extra_samples(spec: &IdentitySpec, skip: &str) -> Vec<(String, Vec<Rational>)> {
    spec.numeric_params()
        .filter(|p| p.name != skip)
        .map(|p| {
            let vals: Vec<Rational> = match &p.kind {
                ParamKind::Int { min, odd: true } => {
                    let start = if min.rem_euclid(2) == 1 { *min } else { min + 1 };
                    vec![start.into(), (start + 2).into(), (start + 4).into()]
                }
                ParamKind::Int { min, odd: false } => vec![(*min).into(), (min + 1).into(), (min + 2).into()],
                ParamKind::Real { min } => (0..3).map(|i| Rational::from(min + i)).collect(),
                _ => vec![],
            };
            (p.name.clone(), vals)
        })
        .collect()
}

fn cartesian(axes: &[(String, Vec<Rational>)]) -> Vec<Bindings> {
    let mut out = vec![Bindings::new()];
    for (name, vals) in axes {
        out = out
            .into_iter()
            .flat_map(|b| {
                vals.iter().map(move |v| {
                    let mut nb = b.clone();
                    nb.insert(name.clone(), v.clone());
                    nb
                })
            })
            .collect();
    }
    out
}

/// Checks that `from`'s LHS, reduced by partial fractions, equals `to`'s LHS as an
/// exact multiset of weighted terms for each depth in `ks`.
pub fn check_derivation(from: &IdentitySpec, to: &IdentitySpec, ks: &[i64]) -> Result<DerivationReport, TermError> {
    let from_param = depth_param(from)
        .ok_or_else(|| TermError::Derivation(format!("{} has no depth parameter k or s", from.id)))?;
    let to_param = depth_param(to)
        .ok_or_else(|| TermError::Derivation(format!("{} has no depth parameter k or s", to.id)))?;
    for p in from.numeric_params().chain(to.numeric_params()) {
        if p.name != from_param && p.name != to_param && (from.param(&p.name).is_none() || to.param(&p.name).is_none()) {
            return Err(TermError::Derivation(format!("parameter '{}' is not shared by {} and {}", p.name, from.id, to.id)));
        }
    }
    let extras = extra_samples(from, &from_param);
    let mut checks = Vec::new();
    for &k in ks {
        for extra in cartesian(&extras) {
            let mut env_from = extra.clone();
            env_from.insert(from_param.clone(), Rational::from(k));
            let mut env_to = extra.clone();
            env_to.insert(to_param.clone(), Rational::from(k));
            let a = canonical_side(from, Side::Lhs, &env_from)?;
            let b = canonical_side(to, Side::Lhs, &env_to)?;
            let witness = first_mismatch(&a, &b);
            checks.push(KCheck {
                k,
                bindings: env_to,
                pass: witness.is_none(),
                from_terms: a.values().map(Vec::len).sum(),
                to_terms: b.values().map(Vec::len).sum(),
                witness,
            });
        }
    }
    Ok(DerivationReport { from: from.id.clone(), to: to.id.clone(), param: to_param, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::termlang::parser::parse_identity;

    const FROM: &str = r#"
identity "pf" params (k: int >= 1, x: disk) {
  lhs: [ sum(m>=1, n>=1) x^n / (m*n^k*(m+n)) ];
  rhs: [ single(n>=1) x^n / (n^(k+2)) ];
}"#;

    const TO: &str = r#"
identity "flat" params (k: int >= 1, x: disk) {
  lhs: [
      family nu = 2..k+1 : sum(m>=1, n>=1) x^n / (n^(k+2-nu)*(m+n)^nu),
      sum(m>=1, n>=1) x^n / (m*(m+n)^(k+1))
    ];
  rhs: [ single(n>=1) x^n / (n^(k+2)) ];
}"#;

    #[test]
    fn telescoped_family_matches() {
        let from = parse_identity(FROM).unwrap();
        let to = parse_identity(TO).unwrap();
        let r = check_derivation(&from, &to, &[1, 2, 3, 4]).unwrap();
        assert!(r.pass(), "{r:?}");
        let bad = parse_identity(&TO.replace("family nu = 2..k+1 :", "family nu = 2..k+1, 2 :")).unwrap();
        let r = check_derivation(&from, &bad, &[2]).unwrap();
        assert!(!r.pass());
        let w = r.checks[0].witness.as_deref().unwrap();
        assert!(w.contains("derived coefficient 1, target coefficient 2"), "{w}");
    }
}
