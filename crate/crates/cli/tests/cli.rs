use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use topos_core::io::{parse_presheaf, parse_site, PresheafFile, UniverseDump};
use topos_core::names::build_universe;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn topos(args: &[&str]) -> Output {
    let args: Vec<String> = args
        .iter()
        .map(|a| if a.ends_with(".json") || a.ends_with(".sx") { data(a).display().to_string() } else { a.to_string() })
        .collect();
    Command::new(env!("CARGO_BIN_EXE_topos")).args(&args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

fn summary(r: &Value) -> Vec<String> {
    r["summary"].as_array().map(|a| a.iter().map(|s| s.as_str().unwrap().to_string()).collect()).unwrap_or_default()
}

#[test]
fn validate_dense_chain() {
    let out = topos(&["validate", "--site", "two_chain_dense.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    for axiom in ["maximality", "stability", "local_character"] {
        assert_eq!(check(&r, axiom)["pass"], true);
    }
    assert_eq!(r["inputs_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn validate_reports_witnesses() {
    let out = topos(&["validate", "--site", "bad_maximality.json"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(check(&r, "maximality")["witness"][0]["object"], "0");
    let out = topos(&["validate", "--site", "not_a_sieve.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(check(&report(&out), "sieves")["witness"][0]["sieve"][0], "id_1");
}

#[test]
fn parse_errors_exit_two_with_position() {
    let out = topos(&["validate", "--site", "broken.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("broken.json:3:"), "{err}");
    let bad = std::env::temp_dir().join("topos_cli_unclosed.sx");
    std::fs::write(&bad, "(and true\n  (mem x").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_topos"))
        .args(["force", "--site", data("two_chain_dense.json").to_str().unwrap(), "--formula", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("unclosed.sx:2:3:"));
    assert_eq!(topos(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(topos(&["validate", "--site", "missing.json"]).status.code(), Some(2));
}

#[test]
fn axioms_on_the_point() {
    let out = topos(&["axioms", "--site", "trivial_point.json", "--rank", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(summary(&r).contains(&"infinity: not checkable".to_string()));
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn lem_separates_the_topologies() {
    let out = topos(&["force", "--site", "two_chain_dense.json", "--rank", "3", "--formula", "lem_test.sx"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&report(&out)), vec!["forced at 1: true"]);
    let out = topos(&["force", "--site", "two_chain_trivial.json", "--rank", "3", "--formula", "lem_test.sx"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&report(&out)), vec!["forced at 1: false"]);
}

#[test]
fn closed_formulas_are_evaluated_everywhere() {
    let out = topos(&["force", "--site", "two_chain_trivial.json", "--rank", "2", "--formula", "extensionality.sx"]);
    assert_eq!(summary(&report(&out)), vec!["forced at 0: true", "forced at 1: true"]);
    let out = topos(&["force", "--site", "two_chain_trivial.json", "--formula", "lem_test.sx", "--at", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_stable() {
    let runs: Vec<Vec<&str>> = vec![
        vec!["universe", "--site", "two_chain_dense.json", "--rank", "3"],
        vec!["sheafify", "--site", "two_chain_trivial.json", "--presheaf", "two_chain_presheaf.json"],
        vec!["wtype", "--site", "two_chain_dense.json", "--morphism", "two_leaves.json", "--depth", "3", "--sheaf"],
        vec!["mvs", "--site", "two_chain_dense.json", "--morphism", "fibre_of_two.json", "--family", "all"],
        vec!["axioms", "--site", "two_chain_dense.json", "--rank", "3"],
    ];
    for args in runs {
        let a = topos(&args);
        let b = topos(&args);
        let mut seq = args.clone();
        seq.push("--sequential");
        let c = topos(&seq);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stdout, c.stdout, "{args:?} sequential");
    }
}

#[test]
fn timing_is_opt_in() {
    let plain = report(&topos(&["validate", "--site", "two_chain_dense.json"]));
    assert!(plain.get("timing_ms").is_none());
    let timed = report(&topos(&["validate", "--site", "two_chain_dense.json", "--timing"]));
    assert!(timed["timing_ms"].is_u64());
}

#[test]
fn emitted_artifacts_reparse() {
    let site = parse_site(&std::fs::read_to_string(data("two_chain_dense.json")).unwrap()).unwrap();
    let r = report(&topos(&["universe", "--site", "two_chain_dense.json", "--rank", "3"]));
    let dump: UniverseDump = serde_json::from_value(r["output"].clone()).unwrap();
    assert_eq!(dump, UniverseDump::from_universe(&build_universe(&site.topology, 3)));

    let r = report(&topos(&["sheafify", "--site", "two_chain_dense.json", "--presheaf", "two_chain_presheaf.json"]));
    let file: PresheafFile = serde_json::from_value(r["output"]["sheaf"].clone()).unwrap();
    let p = parse_presheaf(&serde_json::to_string(&file).unwrap(), &site.category).unwrap();
    assert_eq!(PresheafFile::from_presheaf(&p), file);
    assert_eq!(p.sizes(), &[2, 2]);
}

#[test]
fn wtype_and_mvs_reports() {
    let r =
        report(&topos(&["wtype", "--site", "two_chain_dense.json", "--morphism", "two_leaves.json", "--depth", "2"]));
    assert_eq!(r["output"]["stabilized"], false);
    assert_eq!(r["output"]["sizes_by_height"][2]["1"], 3);

    let out = topos(&["mvs", "--site", "two_chain_dense.json", "--morphism", "fibre_of_two.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["output"]["mvs"].as_array().unwrap().len(), 5);
    assert!(r["output"]["family"].as_array().unwrap().iter().any(|m| m["over"] == "y(1)"));
    assert_eq!(check(&r, "generic")["pass"], true);

    let family = std::env::temp_dir().join("topos_cli_family.json");
    std::fs::write(&family, r#"{"members": [{"0": [0, 1], "1": [0, 1]}]}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_topos"))
        .args(["mvs", "--site", data("two_chain_dense.json").to_str().unwrap()])
        .args(["--morphism", data("fibre_of_two.json").to_str().unwrap(), "--family", family.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(check(&r, "member_0_is_mvs")["pass"], true);
    assert_eq!(check(&r, "generic")["pass"], false);
    assert!(!check(&r, "generic")["witness"].is_null());
}
