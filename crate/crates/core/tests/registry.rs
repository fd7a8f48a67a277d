mod common;

use common::*;
use dpl::evaluator::Strategy;
use dpl::registry::{Registry, RegistryError, DERIVATION_PAIRS};
use std::path::PathBuf;

const IDS: [&str; 25] = [
    "euler-sum", "gkz-even", "gkz-odd", "ohno-zudilin", "nakamura-1", "nakamura-2", "thm-1.1", "cor-1.2",
    "cor-1.3", "thm-1.4", "cor-1.5-L", "cor-1.5-sfnu", "thm-2.1", "prop-3.1", "rem-3.4-higher", "rem-3.4-akf2",
    "thm-4.1", "cor-4.2", "prop-4.3", "prop-4.5", "thm-4.4", "example-n1", "example-n3", "aux-stuffle", "aux-phi",
];

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dpl-registry-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn catalogue_is_complete() {
    let reg = registry();
    let mut want: Vec<&str> = IDS.to_vec();
    want.sort();
    assert_eq!(reg.ids().collect::<Vec<_>>(), want);
}

#[test]
fn disk_corpus_matches_the_built_in_one() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("identities");
    let disk = Registry::from_dir(&dir).unwrap();
    let builtin = registry();
    assert!(disk.ids().eq(builtin.ids()));
    for id in builtin.ids() {
        let (a, b) = (disk.get(id).unwrap(), builtin.get(id).unwrap());
        assert_eq!(a.meta, b.meta, "{id}");
        assert_eq!(a.spec, b.spec, "{id}");
    }
}

#[test]
fn tag_filters() {
    let reg = registry();
    let ids = |tag| reg.list(Some(tag)).iter().map(|e| e.id.clone()).collect::<Vec<_>>();
    assert_eq!(ids("character"), ["cor-1.3", "cor-1.5-L"]);
    assert_eq!(ids("congruence"), ["cor-4.2", "prop-4.3", "prop-4.5", "thm-4.1", "thm-4.4"]);
    assert!(ids("no-such-tag").is_empty());
    assert_eq!(reg.list(None).len(), IDS.len());
}

#[test]
fn specializations_name_their_parent() {
    let reg = registry();
    for (id, parent) in [("cor-1.2", "thm-1.1"), ("cor-4.2", "thm-4.1")] {
        let d = reg.get(id).unwrap().meta.derived_from.clone().unwrap_or_else(|| panic!("{id} has no derivation note"));
        assert_eq!(d.parent, parent);
        assert!(!d.specialization.is_empty());
        reg.get(&d.parent).unwrap();
    }
}

#[test]
fn unknown_ids_suggest_neighbours() {
    let reg = registry();
    match reg.get("thm-11") {
        Err(RegistryError::UnknownId { suggestions, .. }) => assert!(suggestions.contains(&"thm-1.1".to_string())),
        other => panic!("{other:?}"),
    }
    let msg = reg.get("eulersum").unwrap_err().to_string();
    assert!(msg.contains("did you mean euler-sum"), "{msg}");
}

#[test]
fn derivation_pairs_pass_and_other_pairs_are_refused() {
    let reg = registry();
    for (from, to) in DERIVATION_PAIRS {
        let r = reg.derive(from, to, &[1, 2, 3]).unwrap();
        assert!(r.pass(), "{from} -> {to}: {:?}", r.checks.iter().find(|c| !c.pass));
    }
    let e = reg.derive("thm-1.1", "cor-1.3", &[1]).unwrap_err();
    assert!(matches!(e, RegistryError::NotPair { .. }), "{e}");
    assert!(e.to_string().contains("not a partial-fraction pair"));
}

/// Every default battery point verifies under the entry's preferred strategy. The
/// real-s relation runs its slow direct battery in the acceptance report instead.
#[test]
fn default_batteries_pass() {
    let reg = registry();
    let ctx = ctx();
    for entry in reg.list(None) {
        if entry.meta.strategy == Strategy::Direct {
            continue;
        }
        assert!(!entry.meta.battery.is_empty(), "{} has no battery", entry.id);
        for point in &entry.meta.battery {
            let rep = entry.verify(&entry.params(point).unwrap(), &ctx, Strategy::Auto).unwrap();
            assert!(rep.pass(), "{} {point:?}: residual {:e}, tolerance {:e}", entry.id, rep.residual, rep.tolerance);
        }
    }
}

#[test]
fn loading_rejects_inconsistent_files() {
    let dir = scratch_dir("bad");
    std::fs::write(dir.join("a.dpl"), "identity \"b\" params (k: int >= 1) { lhs: [ single(n>=1) 1 / n^(k+1) ]; rhs: [ single(n>=1) 1 / n^(k+1) ]; }").unwrap();
    std::fs::write(dir.join("a.meta.json"), r#"{"id": "a", "summary": "s", "tolerance": 1e-10}"#).unwrap();
    let e = Registry::from_dir(&dir).unwrap_err();
    assert!(matches!(e, RegistryError::Meta { .. }), "{e}");

    std::fs::write(dir.join("a.dpl"), "identity \"a\" params (k: int >= 1) { lhs: [ single(n>=1) 1 / n^(k+1) ]; rhs: [ single(n>=1) 1 / n^(k+1) ]; }").unwrap();
    std::fs::write(dir.join("a.meta.json"), r#"{"id": "a", "summary": "s", "tolerance": 1e-10, "origin": "x"}"#).unwrap();
    assert!(Registry::from_dir(&dir).is_err(), "unknown metadata keys are rejected");

    std::fs::write(dir.join("a.meta.json"), r#"{"id": "a", "summary": "s", "tolerance": 1e-10, "battery": [{"k": "0"}]}"#).unwrap();
    let e = Registry::from_dir(&dir).unwrap_err().to_string();
    assert!(e.contains("battery point"), "{e}");

    std::fs::write(dir.join("a.meta.json"), r#"{"id": "a", "summary": "s", "tolerance": 1e-10, "battery": [{"k": "2"}]}"#).unwrap();
    let reg = Registry::from_dir(&dir).unwrap();
    assert_eq!(reg.ids().collect::<Vec<_>>(), ["a"]);
    std::fs::remove_dir_all(&dir).unwrap();
}
