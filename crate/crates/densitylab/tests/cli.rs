use std::process::Command;

use densitylab::cli::{run, EXIT_OK, EXIT_UNKNOWN, EXIT_USAGE, EXIT_VIOLATION};
use serde_json::Value;

const A_STAR: &str = "blocks(geo(2,1), ap(2,2))";

fn dl(args: &[&str]) -> densitylab::cli::Output {
    run(std::iter::once("densitylab").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut v = vec!["--format", "json"];
    v.extend_from_slice(args);
    let o = dl(&v);
    (o.code, serde_json::from_str(&o.stdout).unwrap_or_else(|e| panic!("{e}: {o:?}")))
}

#[test]
fn eval_block_set() {
    let o = dl(&["eval", "--density", "asymptotic", A_STAR]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.starts_with("2/3"), "{}", o.stdout);
    let (code, v) = json(&["eval", "--density", "lower", A_STAR]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["value"]["kind"], "exact");
    assert_eq!(v["value"]["lo"], "1/3");
    let (_, v) = json(&["eval", "--density", "banach", A_STAR]);
    assert_eq!(v["value"]["lo"], "1/1");
}

#[test]
fn eval_other_densities() {
    let (code, v) = json(&["eval", "--density", "omega", "union(ap(1,2), ap(4,8))"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["value"]["lo"], "5/8");
    let (_, v) = json(&["eval", "--density", "two-valued:density-zero", "ap(3,5)"]);
    assert_eq!(v["value"]["lo"], "1/1");
    let (code, v) = json(&["eval", "--density", "sup-tad", "--branches", "|0,|1,0|1", "blocks(geo(2,1), codes(\"|1\", 2))"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["value"]["kind"], "exact");
    assert_eq!(v["value"]["lo"], "1/4");
    assert_eq!(v["certificate"]["type"], "equal");
}

#[test]
fn estimates_exit_unknown() {
    // Blocks indexed by a code set have no closed logarithmic density here.
    let o = dl(&["eval", "--density", "logarithmic", "--horizon", "65536", "blocks(geo(2,1), codes(\"0|1\", 1))"]);
    assert_eq!(o.code, EXIT_UNKNOWN, "{o:?}");
    assert!(o.stdout.starts_with("~ "));
}

#[test]
fn ideal_divergence_certificate() {
    let (code, v) = json(&["ideal", "--ideal", "summable:harmonic", A_STAR]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["verdict"], "not-in");
    assert_eq!(v["certificate"]["type"], "divergence");
    assert_eq!(v["recheck"], "ok");
    let (code, v) = json(&["ideal", "--ideal", "fin", "shift(fin{1,2}, -1)"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["certificate"]["type"], "boundedness");
    let (code, v) = json(&["ideal", "--ideal", "summable:1/2", "blocks(tri, codes(\"|1\", 2))"]);
    assert_eq!(code, EXIT_UNKNOWN);
    assert_eq!(v["verdict"], "unknown");
}

#[test]
fn usage_errors() {
    let o = dl(&["eval", "ap(0,3)"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("1:1"), "{}", o.stderr);
    let o = dl(&["eval", "union(ap(1,2),\n  nope)"]);
    assert!(o.stderr.contains("2:3"), "{}", o.stderr);
    for bad in [
        vec!["bogus"],
        vec!["eval"],
        vec!["ideal", "--ideal", "summable:2", "full"],
        vec!["eval", "--density", "nope", "full"],
        vec!["--budget", "x", "eval", "full"],
        vec!["tad", "--scheme", "lin(2)", "--branches", "|0,|1"],
        vec!["tad", "--branches", "|0,0|0"],
    ] {
        assert_eq!(dl(&bad).code, EXIT_USAGE, "{bad:?}");
    }
    assert_eq!(dl(&["--help"]).code, EXIT_OK);
}

#[test]
fn suites_report_violations() {
    let (code, v) = json(&["gallery", "block"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["counts"]["fail"], 0);
    let (code, v) = json(&["gallery", "gap", "--n", "1000", "--shifts", "9"]);
    assert_eq!(code, EXIT_VIOLATION);
    let l9 = v["checks"].as_array().unwrap().iter().find(|c| c["input"] == "l = 9").unwrap();
    assert_eq!(l9["got"], "3 [10, 15, 45]");
    let (code, v) = json(&["tad", "--canonical", "8", "--shifts", "4", "--limit", "100000"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["counts"]["pass"], 28 * 9 + 8);
    let (code, v) = json(&["axioms", "--density", "omega", "--pairs", "20", "--translation", "--shifts", "1", "--null-ideal", "piece-finite"]);
    assert_eq!(code, EXIT_VIOLATION);
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert_eq!(v[0]["counts"]["fail"], 0);
    assert_eq!(v[2]["counts"]["fail"], 0);
}

#[test]
fn witnesses() {
    let (code, v) = json(&["witness", "--density", "omega", "5/8"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["expr"], "union(ap(1,2), ap(4,8))");
    let (code, v) = json(&["witness", "2/7"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["value"]["lo"], "2/7");
    assert_eq!(dl(&["witness", "--density", "omega", "1/3"]).code, EXIT_USAGE);
}

#[test]
fn files_by_path() {
    let dir = std::env::temp_dir().join(format!("densitylab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let expr = dir.join("a.set");
    std::fs::write(&expr, "blocks(\n  geo(2,1),\n  ap(2,2)\n)\n").unwrap();
    let o = dl(&["eval", "-f", expr.to_str().unwrap()]);
    assert!(o.stdout.starts_with("2/3"), "{o:?}");
    let assign = dir.join("values.txt");
    std::fs::write(&assign, "# member values\n|0 1/4\n|1 3/4\n").unwrap();
    let (code, v) = json(&[
        "eval",
        "--density",
        "sup-tad",
        "--assign",
        assign.to_str().unwrap(),
        "union(blocks(geo(2,1), codes(\"|0\", 2)), blocks(geo(2,1), codes(\"|1\", 2)))",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["value"]["lo"], "3/4");
    let corpus = dir.join("corpus.txt");
    std::fs::write(&corpus, "full\nap(1,2)\nfin{4,5}\n").unwrap();
    let (code, v) = json(&["axioms", "--density", "asymptotic", "--corpus", corpus.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(v["counts"]["pass"].as_u64().unwrap() > 0);
    std::fs::write(&assign, "|0 1/3\n").unwrap();
    let o = dl(&["eval", "--density", "sup-tad", "--assign", assign.to_str().unwrap(), "full"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("line 1"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_is_deterministic() {
    for args in [
        vec!["ideal", "--ideal", "piece-finite", "union(ap(2,4), codes(\"0|1\", 3))"],
        vec!["gallery", "block", "--n", "6", "--shifts", "2"],
        vec!["tad", "--canonical", "4", "--shifts", "2", "--scheme", "tri"],
    ] {
        let mut full = vec!["--format", "json"];
        full.extend(args);
        assert_eq!(dl(&full).stdout, dl(&full).stdout);
    }
    let (_, v) = json(&["--timing", "gallery", "block", "--n", "3"]);
    assert!(v["wall_time_ms"].is_u64());
}

#[test]
fn binary_exit_codes_and_budget_env() {
    let bin = env!("CARGO_BIN_EXE_densitylab");
    let st = Command::new(bin).args(["eval", A_STAR]).output().unwrap();
    assert_eq!(st.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&st.stdout).starts_with("2/3"));
    let st = Command::new(bin).args(["eval", "ap(0,3)"]).output().unwrap();
    assert_eq!(st.status.code(), Some(EXIT_USAGE));
    // A tiny budget leaves only the trivial enclosure.
    let sparse = "blocks(geo(2,1), codes(\"0|1\", 1))";
    let run_with = |budget: Option<&str>| {
        let mut c = Command::new(bin);
        c.args(["--format", "json", "eval", sparse]);
        if let Some(b) = budget {
            c.env("DENSITYLAB_BUDGET", b);
        }
        let o = c.output().unwrap();
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        (o.status.code(), v["value"]["kind"].as_str().unwrap().to_string())
    };
    assert_eq!(run_with(Some("1")), (Some(EXIT_UNKNOWN), "enclosure".into()));
    assert_eq!(run_with(None), (Some(EXIT_UNKNOWN), "estimate".into()));
    let st = Command::new(bin).env("DENSITYLAB_BUDGET", "zero").args(["eval", "full"]).output().unwrap();
    assert_eq!(st.status.code(), Some(EXIT_USAGE));
}
