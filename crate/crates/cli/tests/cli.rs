use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn smw(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smw"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("smw runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn machine(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "machines", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn simulate_reaches_the_target() {
    let d = TempDir::new().unwrap();
    let o = smw(
        d.path(),
        &["simulate", "--machine", "adding:a", "--start", "L a.0 p(1) R", "--target", "p(3) R", "--guard", "length-preserving"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = read(d.path(), "trace.jsonl");
    let lines: Vec<&str> = trace.lines().collect();
    assert!(lines[0].contains("\"config_hash\""));
    // header plus W_0..W_5
    assert_eq!(lines.len(), 7);
    assert!(lines[6].contains("L a.0 p(3) R"));
}

#[test]
fn simulate_exit_codes() {
    let d = TempDir::new().unwrap();
    let bad = d.path().join("bad.json");
    fs::write(&bad, "{\"tape_alphabets\": [").unwrap();
    let o = smw(&d.path().join("x"), &["simulate", "--machine", bad.to_str().unwrap(), "--start", "k"]);
    assert_eq!(code(&o), 1);
    let o = smw(&d.path().join("y"), &["simulate", "--machine", "adding:a", "--start", "L a.0 p(1) R", "--budget", "0", "--target", "p(3) R"]);
    assert_eq!(code(&o), 2);
    let o = smw(&d.path().join("z"), &["simulate", "--machine", "adding:a", "--start", "L a.0 p(1) R", "--strategy", "bfs"]);
    assert_eq!(code(&o), 1);
    let o = smw(&d.path().join("w"), &["simulate", "--machine", "adding:a", "--start", "L q p(1) R"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn adding_verify_passes_and_catches_bad_tables() {
    let d = TempDir::new().unwrap();
    for n in ["0", "6"] {
        let o = smw(&d.path().join(n), &["adding-verify", "--n-max", n]);
        assert_eq!(code(&o), 0, "n_max {n}");
    }
    let table = read(&d.path().join("6"), "g-table.csv");
    assert!(table.contains("\n6,253,64,384,det,0\n"));
    let bad = d.path().join("bad.csv");
    fs::write(&bad, "n,g(n),lower,upper,strategy,wall_time_ms\n3,200,8,48,given,0\n").unwrap();
    let o = smw(&d.path().join("b"), &["adding-verify", "--n-max", "4", "--g-table", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(read(&d.path().join("b"), "summary.txt").contains("g(3) = 200"));
    let o = smw(&d.path().join("c"), &["adding-verify", "--n-max", "99"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn compose_counts_and_steps() {
    let d = TempDir::new().unwrap();
    let o = smw(d.path(), &["compose", "--machine", &machine("grow.json"), "--start", "k1 k2", "--steps", "grow,grow"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let counts = read(d.path(), "counts.csv");
    assert!(counts.contains("positive,8\nexpected,8\n"));
    let steps = read(d.path(), "steps.csv");
    assert!(steps.contains("1,grow,7,5,1\n2,grow,15,13,2\n"));
    // composed.json is a loadable machine file
    let composed = read(d.path(), "composed.json");
    let again = smachine_core::Machine::from_json(&composed).unwrap();
    assert_eq!(again.n_positive(), 8);

    let bad = d.path().join("half.json");
    fs::write(
        &bad,
        r#"{"tape_alphabets": [["a"]], "state_alphabets": [["k1"], ["k2"]],
            "rules": [{"name": "half", "substitutions": [{"pattern": "k2", "replacement": "a k2"}]}]}"#,
    )
    .unwrap();
    let o = smw(&d.path().join("h"), &["compose", "--machine", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let o = smw(&d.path().join("s"), &["compose", "--machine", &machine("shuttle.json")]);
    assert_eq!(code(&o), 0);
}

#[test]
fn present_writes_a_stable_presentation() {
    let d = TempDir::new().unwrap();
    let args = ["present", "--machine", "adding:a", "--w0", "L p(3) R"];
    assert_eq!(code(&smw(&d.path().join("1"), &args)), 0);
    assert_eq!(code(&smw(&d.path().join("2"), &args)), 0);
    let one = read(&d.path().join("1"), "presentation.txt");
    assert_eq!(one, read(&d.path().join("2"), "presentation.txt"));
    let lines: Vec<&str> = one.lines().collect();
    assert!(lines[0].starts_with("! smw "));
    assert_eq!(lines[1], "! generators: L p(1) p(2) p(3) R a.0 a.1 kappa1 kappa2 r1(a) r12(a) r2(a) r21 r13 r3(a)");
    assert_eq!(lines[2], "! tags: transition=18 fixing=0 auxiliary=12 hub=1");
    assert_eq!(lines.len(), 3 + 31);
    let o = smw(&d.path().join("3"), &["present", "--machine", "adding:a"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn analyze_predicates_and_bounds() {
    let d = TempDir::new().unwrap();
    let o = smw(d.path(), &["analyze", "--bases", "Q1Q2Q1", "--max-len", "4"]);
    assert_eq!(code(&o), 0);
    let p = read(d.path(), "predicates.csv");
    assert!(p.contains("\nQ1Q2Q1,true,false,true,true\n"));
    assert!(p.contains("\nQ3Q1Q2Q1,false,false,true,true\n"));
    assert_eq!(p.lines().filter(|l| l.starts_with('Q')).count(), 3 + 9 + 27 + 81);

    let o = smw(&d.path().join("b"), &["analyze", "--n", "4", "--dispersion", "0"]);
    assert_eq!(code(&o), 0);
    assert!(read(&d.path().join("b"), "bounds.csv").contains("lemma5,\"M=1 n=4 E=0\",32,,true"));

    let o = smw(&d.path().join("c"), &["analyze", "--r", "1", "--n", "4"]);
    assert_eq!(code(&o), 2);
    let o = smw(&d.path().join("e"), &["analyze", "--epsilon", "0.2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let d = TempDir::new().unwrap();
    let run = |sub: &str, seed: &str| {
        let dir = d.path().join(sub);
        let o = smw(&dir, &["--seed", seed, "analyze", "--bases", "Q1Q2,Q2Q1", "--max-len", "6", "--sample", "50"]);
        assert_eq!(code(&o), 0);
        read(&dir, "predicates.csv")
    };
    let a = run("a", "7");
    assert_eq!(a, run("b", "7"));
    assert_ne!(a, run("c", "8"));
    for sub in ["x", "y"] {
        assert_eq!(code(&smw(&d.path().join(sub), &["adding-verify", "--n-max", "5"])), 0);
    }
    assert_eq!(read(&d.path().join("x"), "g-table.csv"), read(&d.path().join("y"), "g-table.csv"));
}
