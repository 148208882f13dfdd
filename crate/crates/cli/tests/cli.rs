use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::Parser;
use slicenc::{execute, write_artifacts, Cli, Run};
use slicenc_core::scenario::ScenarioDoc;
use slicenc_opt::instances;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn run(args: &[&str]) -> Run {
    let cli = Cli::try_parse_from(std::iter::once("slicenc").chain(args.iter().copied())).unwrap();
    execute(&cli).unwrap()
}

fn artifact<'a>(r: &'a Run, name: &str) -> &'a str {
    &r.artifacts.iter().find(|a| a.name == name).unwrap_or_else(|| panic!("no {name}")).content
}

fn rows(csv: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(csv.as_bytes()).records().map(Result::unwrap).collect()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let i = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|x| x.unwrap()[i].to_string()).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn binary(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_slicenc")).args(args).output().unwrap()
}

#[test]
fn catalog_lists_six_selectable_splits() {
    let r = run(&["catalog"]);
    let csv = artifact(&r, "catalog.csv");
    assert_eq!(column(csv, "split"), ["O1", "O2", "O4", "O6", "O8", "O9"]);
    let o9: f64 = column(csv, "required_capacity_bps")[5].parse().unwrap();
    assert!((o9 - 1.0752e9).abs() < 1.0);
    assert_eq!(r.report.scenario_digest, None);
}

#[test]
fn catalog_overrides_recompute_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.toml", "");
    let half = write(dir.path(), "half.toml", "[radio]\nn_rb = 50\nsample_rate = 15.36e6\n");
    let base = artifact(&run(&["catalog"]), "catalog.csv").to_string();
    assert_eq!(artifact(&run(&["catalog", "--overrides", &empty]), "catalog.csv"), base);
    let changed = artifact(&run(&["catalog", "--overrides", &half]), "catalog.csv").to_string();
    let before = column(&base, "required_capacity_bps");
    let after = column(&changed, "required_capacity_bps");
    // The O9 fronthaul scales with the resource blocks.
    assert!(after[5].parse::<f64>().unwrap() < before[5].parse::<f64>().unwrap());

    let bad = write(dir.path(), "bad.toml", "[radio]\nn_rb = 0\n");
    let cli = Cli::try_parse_from(["slicenc", "catalog", "--overrides", &bad]).unwrap();
    assert_eq!(execute(&cli).unwrap_err().exit_code(), 1);
}

#[test]
fn analyze_appendix_reports_bound_and_bursts() {
    let r = run(&["analyze", "--scenario", &fixture("appendix_a.scenario")]);
    let csv = artifact(&r, "analyze.csv");
    let total: f64 = column(csv, "total_s")[0].parse().unwrap();
    assert!((total - 1.43153667431e-3).abs() / 1.43153667431e-3 < 1e-9);
    let bursts = artifact(&r, "bursts.csv");
    assert!(rows(bursts).iter().any(|b| &b[0] == "f1" && &b[1] == "f3" && &b[2] == "n5" && &b[3] == "2085.502976"));
}

#[test]
fn analyze_table7_meets_urllc_sla() {
    let r = run(&[
        "analyze",
        "--scenario",
        &fixture("fig6_default.scenario"),
        "--decision",
        &fixture("table7.decision"),
        "--format",
        "json-lines",
    ]);
    let lines = artifact(&r, "analyze.jsonl");
    let mut urllc = 0;
    for l in lines.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        if v["slice"] == "urllc" {
            urllc += 1;
            assert!(v["total_s"].as_f64().unwrap() <= 1e-3);
        }
    }
    assert_eq!(urllc, 200);
}

const EMPTY: &str = r#"
name = "idle"
roles = { cu = "c" }
nodes = [{ id = "c", capacity_bps = 1e9, latency_s = 1e-5 }]
vdus = [{ id = 1, node = "c", embb_demand_bps = 0.0 }]

[decision]
vdus = [{ vdu = 1, admitted = 0 }]
"#;

#[test]
fn analyze_without_flows_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "idle.scenario", EMPTY);
    let r = run(&["analyze", "--scenario", &s]);
    assert_eq!(r.artifacts.len(), 1);
    assert_eq!(
        artifact(&r, "analyze.csv"),
        "flow,slice,vdu,path,network_s,ran_s,propagation_s,total_s,sla_s,margin_s\n"
    );
}

fn tiny_file(dir: &Path, seed: u64) -> String {
    let doc = instances::tiny(seed, 2).doc;
    write(dir, &format!("tiny{seed}.scenario"), &doc.to_toml().unwrap())
}

#[test]
fn optimize_writes_allocation_and_reusable_solution() {
    let dir = tempfile::tempdir().unwrap();
    let s = tiny_file(dir.path(), 7);
    let r = run(&["optimize", "--scenario", &s, "--grid-step", "0.25"]);
    assert!(r.failure.is_none());
    let csv = artifact(&r, "optimize.csv");
    let header: Vec<String> = csv.lines().next().unwrap().split(',').map(String::from).collect();
    assert_eq!(header[0], "node");
    assert_eq!(&header[header.len() - 3..], ["split", "admitted", "profit"]);
    let solution = write(dir.path(), "solution.toml", artifact(&r, "solution.toml"));
    let again = run(&["analyze", "--scenario", &s, "--decision", &solution]);
    assert_eq!(again.report.exit_code, 0);
}

#[test]
fn optimize_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = instances::tiny(7, 2).doc;
    let s = tiny_file(dir.path(), 7);

    let budget = binary(&["optimize", "--scenario", &s, "--grid-step", "0.25", "--max-nodes", "1"]);
    assert_eq!(budget.status.code(), Some(3));

    for n in &mut doc.nodes {
        n.capacity_bps = 1e6;
    }
    let starved = write(dir.path(), "starved.scenario", &doc.to_toml().unwrap());
    let out = binary(&["optimize", "--scenario", &starved, "--grid-step", "0.25"]);
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(binary(&["optimize"]).status.code(), Some(1));
    let broken = write(dir.path(), "broken.scenario", "name = ");
    assert_eq!(binary(&["analyze", "--scenario", &broken]).status.code(), Some(1));
}

#[test]
fn simulate_same_seed_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--scenario", &fixture("appendix_a.scenario"), "--seed", "1", "--duration", "0.2"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.artifacts, b.artifacts);
    assert!(artifact(&a, "summary.toml").contains("digest = "));

    let out = dir.path().join("out");
    let report = write_artifacts(&a, &out).unwrap();
    assert_eq!(report.outputs.len(), 3);
    assert!(out.join("run_report.json").exists());
    assert_eq!(std::fs::read_to_string(out.join("simulate.csv")).unwrap(), artifact(&a, "simulate.csv"));
}

#[test]
fn simulate_sweep_rows_follow_counts() {
    let r = run(&[
        "simulate",
        "--scenario",
        &fixture("appendix_a.scenario"),
        "--model",
        "poisson",
        "--duration",
        "0.05",
        "--sweep",
        "1",
        "--counts",
        "1,3",
        "--runs",
        "2",
    ]);
    assert_eq!(column(artifact(&r, "sweep.csv"), "ue_count"), ["1", "3"]);
}

#[test]
fn cashflow_matches_break_even_utilisation() {
    let r = run(&["cashflow", &fixture("verizon_q3_2022.cashflow")]);
    let csv = artifact(&r, "cashflow.csv");
    let zeta: f64 = column(csv, "zeta")[0].parse().unwrap();
    let gamma: f64 = column(csv, "gamma")[0].parse().unwrap();
    let f_be: f64 = column(csv, "break_even_connections")[0].parse().unwrap();
    assert!((zeta - 0.5571).abs() < 5e-4);
    assert!((gamma - 0.118).abs() < 1e-3);
    assert!((f_be - 79.807e6).abs() < 0.01e6);
}

#[test]
fn digest_ignores_key_order_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("appendix_a.scenario")).unwrap();
    let doc = ScenarioDoc::parse(&text).unwrap();
    // Re-serialising moves every key into canonical order and drops comments.
    let moved = write(dir.path(), "moved.scenario", &doc.to_toml().unwrap());
    let a = run(&["analyze", "--scenario", &fixture("appendix_a.scenario")]);
    let b = run(&["analyze", "--scenario", &moved]);
    assert!(a.report.scenario_digest.is_some());
    assert_eq!(a.report.scenario_digest, b.report.scenario_digest);
    assert_eq!(artifact(&a, "analyze.csv"), artifact(&b, "analyze.csv"));
}
