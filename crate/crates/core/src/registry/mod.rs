//! The catalogue of identities: `.dpl` sources, metadata, test batteries and the
//! partial-fraction derivation pairs.
//!
//! The built-in catalogue is compiled into the binary. Setting `DPL_IDENTITY_DIR`
//! loads `<id>.dpl` / `<id>.meta.json` pairs from that directory instead.

use crate::evaluator::{eval_identity, CValue, EvalError, IdentityParams, IdentityReport, Strategy};
use crate::specfun::{make_character, Character, PrecisionContext};
use crate::termlang::{check_derivation, parse_identity, DerivationReport, IdentitySpec, ParamKind, TermError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const IDENTITY_DIR_VAR: &str = "DPL_IDENTITY_DIR";

macro_rules! builtin {
    ($($id:literal),* $(,)?) => {
        &[$(($id,
            include_str!(concat!("../../identities/", $id, ".dpl")),
            include_str!(concat!("../../identities/", $id, ".meta.json")))),*]
    };
}

static BUILTIN: &[(&str, &str, &str)] = builtin!(
    "aux-phi", "aux-stuffle", "cor-1.2", "cor-1.3", "cor-1.5-L", "cor-1.5-sfnu", "cor-4.2",
    "euler-sum", "example-n1", "example-n3", "gkz-even", "gkz-odd", "nakamura-1", "nakamura-2",
    "ohno-zudilin", "prop-3.1", "prop-4.3", "prop-4.5", "rem-3.4-akf2", "rem-3.4-higher",
    "thm-1.1", "thm-1.4", "thm-2.1", "thm-4.1", "thm-4.4",
);

/// Pairs (from, to) whose left sides are related by partial fractions alone.
pub const DERIVATION_PAIRS: &[(&str, &str)] = &[("thm-2.1", "thm-1.1"), ("prop-4.3", "thm-4.1"), ("prop-4.5", "thm-4.4")];

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown identity '{id}'{}", suggest(.suggestions))]
    UnknownId { id: String, suggestions: Vec<String> },
    #[error("{id}: {source}")]
    Parse { id: String, source: TermError },
    #[error("{id}: bad metadata: {msg}")]
    Meta { id: String, msg: String },
    #[error("cannot read identity directory {}: {msg}", .path.display())]
    Io { path: PathBuf, msg: String },
    #[error("{from} -> {to} is not a partial-fraction pair (known pairs: {})", known_pairs())]
    NotPair { from: String, to: String },
    #[error("{0}")]
    Param(String),
    #[error(transparent)]
    Term(#[from] TermError),
}

fn suggest(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!("; did you mean {}?", s.join(", "))
    }
}

fn known_pairs() -> String {
    DERIVATION_PAIRS.iter().map(|(a, b)| format!("{a} -> {b}")).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivation {
    pub parent: String,
    pub specialization: String,
}

/// Contents of `<id>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub id: String,
    pub summary: String,
    /// Absolute residual tolerance for the default strategy.
    pub tolerance: f64,
    /// Tolerance when the direct strategy is forced, if looser.
    #[serde(default)]
    pub direct_tolerance: Option<f64>,
    /// Residual measured relative to |rhs|.
    #[serde(default)]
    pub relative: bool,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub battery: Vec<BTreeMap<String, String>>,
    #[serde(default)]
    pub derived_from: Option<Derivation>,
}

#[derive(Debug, Clone)]
pub struct RegistryEntry {
    pub id: String,
    pub source: String,
    pub spec: IdentitySpec,
    pub meta: Meta,
}

impl RegistryEntry {
    fn load(id: &str, dpl: &str, meta: &str) -> Result<RegistryEntry, RegistryError> {
        let spec = parse_identity(dpl).map_err(|source| RegistryError::Parse { id: id.to_string(), source })?;
        let meta: Meta =
            serde_json::from_str(meta).map_err(|e| RegistryError::Meta { id: id.to_string(), msg: e.to_string() })?;
        let bad = |msg: String| RegistryError::Meta { id: id.to_string(), msg };
        if spec.id != id || meta.id != id {
            return Err(bad(format!("file names id '{id}', source names '{}', metadata names '{}'", spec.id, meta.id)));
        }
        if !(meta.tolerance > 0.0) {
            return Err(bad("tolerance must be positive".into()));
        }
        let entry = RegistryEntry { id: id.to_string(), source: dpl.to_string(), spec, meta };
        for point in &entry.meta.battery {
            entry.params(point).map_err(|e| bad(format!("battery point {point:?}: {e}")))?;
        }
        Ok(entry)
    }

    /// Tolerance for a run under `strategy`.
    pub fn tolerance(&self, strategy: Strategy) -> f64 {
        match (strategy, self.meta.direct_tolerance) {
            (Strategy::Direct, Some(t)) => t.max(self.meta.tolerance),
            _ => self.meta.tolerance,
        }
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.meta.tags.iter().any(|t| t == tag)
    }

    /// Evaluates both sides at `params` and attaches this entry's tolerance.
    /// `Strategy::Auto` defers to the entry's preferred strategy.
    pub fn verify(&self, params: &IdentityParams, ctx: &PrecisionContext, strategy: Strategy) -> Result<IdentityReport, EvalError> {
        let strategy = if strategy == Strategy::Auto { self.meta.strategy } else { strategy };
        let report = eval_identity(&self.spec, params, ctx, strategy)?;
        let mut tol = self.tolerance(strategy);
        if self.meta.relative {
            tol *= report.rhs.value.abs_f64().max(1.0);
        }
        Ok(report.with_tolerance(tol))
    }

    /// Converts textual `name=value` assignments into parameters of this identity.
    /// Names not declared by the identity are rejected; pinned values may be omitted.
    pub fn params(&self, values: &BTreeMap<String, String>) -> Result<IdentityParams, RegistryError> {
        bind_params(&self.spec, values)
    }
}

/// Parses textual parameter values against the declarations of `spec`.
pub fn bind_params(spec: &IdentitySpec, values: &BTreeMap<String, String>) -> Result<IdentityParams, RegistryError> {
    let mut p = IdentityParams::new();
    for (name, text) in values {
        let decl = spec.param(name).ok_or_else(|| {
            RegistryError::Param(format!("{} has no parameter '{name}' (parameters: {})", spec.id, spec.param_summary()))
        })?;
        let bad = |e: String| RegistryError::Param(format!("{name}: {e}"));
        match &decl.kind {
            ParamKind::Int { .. } | ParamKind::Real { .. } => {
                let v: CValue = text.parse().map_err(bad)?;
                let q = v.as_rational().ok_or_else(|| bad(format!("'{text}' is not real")))?;
                p = p.with(name, q);
            }
            ParamKind::Disk | ParamKind::FixedX(_) => p = p.with_x(text.parse().map_err(bad)?),
            ParamKind::UnitInterval => p = p.with_b(text.parse().map_err(bad)?),
            ParamKind::Char { .. } => p = p.with_char(name, character(text).map_err(bad)?),
        }
    }
    p.resolve(spec, false).map_err(|e: EvalError| RegistryError::Param(e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CharacterTable {
    name: Option<String>,
    /// Values at residues 0..f as [re, im] pairs.
    values: Vec<(f64, f64)>,
}

/// A built-in character (`chi0`, `chi3`, `chi4`) or a JSON table file
/// `{"name": "...", "values": [[re, im], ...]}` listing χ(0), ..., χ(f−1).
pub fn character(text: &str) -> Result<Character, String> {
    if let Some(chi) = Character::builtin(text) {
        return Ok(chi);
    }
    let path = Path::new(text);
    if !path.is_file() {
        return Err(format!("unknown character '{text}' (expected chi0, chi3, chi4 or a table file)"));
    }
    let body = std::fs::read_to_string(path).map_err(|e| format!("{text}: {e}"))?;
    let table: CharacterTable = serde_json::from_str(&body).map_err(|e| format!("{text}: {e}"))?;
    let chi = make_character(table.values.len() as u64, &table.values).map_err(|e| format!("{text}: {e}"))?;
    Ok(match table.name {
        Some(n) => chi.named(&n),
        None => chi,
    })
}

/// Splits "k=1;x=1/2" or "k=1,x=1/2" into assignments.
pub fn parse_assignments(text: &str) -> Result<BTreeMap<String, String>, RegistryError> {
    let mut out = BTreeMap::new();
    for part in text.split(';').flat_map(|p| split_top_level(p)).filter(|s| !s.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| RegistryError::Param(format!("expected name=value, got '{part}'")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Registry {
    entries: BTreeMap<String, RegistryEntry>,
}

impl Registry {
    /// The compiled-in catalogue.
    pub fn builtin() -> Registry {
        let entries = BUILTIN
            .iter()
            .map(|(id, dpl, meta)| {
                let e = RegistryEntry::load(id, dpl, meta).unwrap_or_else(|e| panic!("built-in identity is invalid: {e}"));
                (id.to_string(), e)
            })
            .collect();
        Registry { entries }
    }

    /// Loads every `<id>.dpl` with a matching `<id>.meta.json` from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Registry, RegistryError> {
        let io = |e: std::io::Error| RegistryError::Io { path: dir.to_path_buf(), msg: e.to_string() };
        let mut entries = BTreeMap::new();
        for item in std::fs::read_dir(dir).map_err(io)? {
            let path = item.map_err(io)?.path();
            let Some(id) = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(".dpl")) else {
                continue;
            };
            let dpl = std::fs::read_to_string(&path).map_err(io)?;
            let meta_path = dir.join(format!("{id}.meta.json"));
            let meta = std::fs::read_to_string(&meta_path)
                .map_err(|e| RegistryError::Meta { id: id.to_string(), msg: format!("{}: {e}", meta_path.display()) })?;
            entries.insert(id.to_string(), RegistryEntry::load(id, &dpl, &meta)?);
        }
        Ok(Registry { entries })
    }

    /// The directory named by `DPL_IDENTITY_DIR` if set, otherwise the built-ins.
    pub fn load() -> Result<Registry, RegistryError> {
        match std::env::var_os(IDENTITY_DIR_VAR) {
            Some(dir) if !dir.is_empty() => Registry::from_dir(Path::new(&dir)),
            _ => Ok(Registry::builtin()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Result<&RegistryEntry, RegistryError> {
        self.entries.get(id).ok_or_else(|| RegistryError::UnknownId { id: id.to_string(), suggestions: self.suggest(id) })
    }

    /// Up to three known ids closest to `id`.
    pub fn suggest(&self, id: &str) -> Vec<String> {
        let mut scored: Vec<(f64, &String)> = self
            .entries
            .keys()
            .map(|k| (strsim::normalized_damerau_levenshtein(id, k), k))
            .filter(|(s, _)| *s >= 0.5)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored.into_iter().take(3).map(|(_, k)| k.clone()).collect()
    }

    /// Entries in lexicographic id order, optionally restricted to a tag.
    pub fn list(&self, tag: Option<&str>) -> Vec<&RegistryEntry> {
        self.entries.values().filter(|e| tag.is_none_or(|t| e.has_tag(t))).collect()
    }

    /// Checks a known derivation pair at the depths `ks`.
    pub fn derive(&self, from: &str, to: &str, ks: &[i64]) -> Result<DerivationReport, RegistryError> {
        let a = self.get(from)?;
        let b = self.get(to)?;
        if !DERIVATION_PAIRS.contains(&(from, to)) {
            return Err(RegistryError::NotPair { from: from.to_string(), to: to.to_string() });
        }
        Ok(check_derivation(&a.spec, &b.spec, ks)?)
    }
}

/// Splits at commas outside parentheses, so `ru(3,1)` stays whole.
fn split_top_level(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur.trim().to_string());
    out
}

/// Parses "3..12", "1,3,5" or "2" into a list of values.
pub fn parse_range(text: &str) -> Result<Vec<String>, RegistryError> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let bad = || RegistryError::Param(format!("bad range '{text}' (expected a..b with integers a <= b)"));
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).map(|v| v.to_string()).collect());
    }
    let vals: Vec<String> = split_top_level(text).into_iter().filter(|s| !s.is_empty()).collect();
    if vals.is_empty() {
        return Err(RegistryError::Param("empty value list".into()));
    }
    Ok(vals)
}
