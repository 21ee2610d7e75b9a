use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_seminar-vns");

const T1: &str = "format_version = 1
n = 4
m = 2
w_max = 10
weights = [[10, 0], [10, 0], [0, 10], [0, 10]]
groups = [[1], [2]]
";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env_remove("SEMINAR_VNS_WORKERS").output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t1.toml"), T1).unwrap();
    dir
}

#[test]
fn solve_finds_t1_optimum() {
    let dir = setup();
    let stdout = ok(dir.path(), &["solve", "t1.toml", "--out", "o"]);
    assert!(stdout.contains("best utility 40"), "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("o/report.json"))).unwrap();
    assert_eq!(report["best_utility"], 40);
    assert!(report["timestamp_unix"].is_u64());
    assert!(report["wall_time_ms"].is_number());
    let archive = read(dir.path().join("o/archive.json"));
    assert!(archive.contains("[1,1,2,2]"), "{archive}");
}

#[test]
fn no_timing_outputs_are_byte_identical() {
    let dir = setup();
    let p = dir.path();
    ok(p, &["generate", "--n", "14", "--m", "4", "--groups", "2", "--seed", "9", "--out", "g.toml"]);
    for out in ["a", "b"] {
        ok(p, &["solve", "g.toml", "--mode", "bi", "--seed", "3", "--evals", "20000", "--no-timing", "--out", out]);
    }
    for file in ["archive.json", "report.json"] {
        assert_eq!(read(p.join("a").join(file)), read(p.join("b").join(file)), "{file}");
    }
    let report: serde_json::Value = serde_json::from_str(&read(p.join("a/report.json"))).unwrap();
    assert!(report["timestamp_unix"].is_null() && report["wall_time_ms"].is_null());
}

#[test]
fn neighborhood_selection() {
    let dir = setup();
    ok(dir.path(), &["solve", "t1.toml", "--neighborhoods", "swap2", "--out", "o"]);
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("o/report.json"))).unwrap();
    assert_eq!(report["neighborhoods"], serde_json::json!(["swap2"]));
    let out = run(dir.path(), &["solve", "t1.toml", "--neighborhoods", "shift", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &["solve", "t1.toml", "--neighborhoods", "swap9", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_and_guard() {
    let dir = setup();
    let p = dir.path();
    let stdout = ok(p, &["oracle", "t1.toml", "--out", "or.json"]);
    assert!(stdout.contains("optimum 40"), "{stdout}");
    let oracle: serde_json::Value = serde_json::from_str(&read(p.join("or.json"))).unwrap();
    assert_eq!(oracle["optimum_utility"], 40);

    ok(p, &["generate", "--n", "20", "--m", "5", "--out", "big.toml"]);
    let out = run(p, &["oracle", "big.toml", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("neighborhood search"), "{stderr}");
    assert!(!p.join("x.json").exists());
}

#[test]
fn invalid_input_exits_with_2() {
    let dir = setup();
    let p = dir.path();
    std::fs::write(p.join("bad.toml"), T1.replace("[0, 10]]", "[0, 9]]")).unwrap();
    let out = run(p, &["solve", "bad.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("student 4"));
    // the same file is accepted once rows are rescaled
    ok(p, &["solve", "bad.toml", "--normalize", "--out", "o"]);
    assert_eq!(run(p, &["solve", "missing.toml", "--out", "o"]).status.code(), Some(2));
    assert_eq!(run(p, &["solve"]).status.code(), Some(2));
}

#[test]
fn generate_is_deterministic() {
    let dir = setup();
    let p = dir.path();
    let args = |out| vec!["generate", "--n", "30", "--m", "8", "--groups", "3", "--seed", "5", "--favored", "1-3", "--out", out];
    ok(p, &args("a.toml"));
    ok(p, &args("b.toml"));
    assert_eq!(read(p.join("a.toml")), read(p.join("b.toml")));
    assert!(read(p.join("a.toml")).contains("n = 30"));
}

#[test]
fn family_writes_one_file_per_size() {
    let dir = setup();
    let p = dir.path();
    ok(p, &["generate", "--n", "12", "--m", "4", "--out", "base.toml"]);
    ok(p, &["family", "base.toml", "--targets", "10-11,14", "--seed", "2", "--out", "fam"]);
    for n in [10, 11, 14] {
        assert!(read(p.join(format!("fam/n{n}.toml"))).contains(&format!("n = {n}\n")));
    }
    assert_eq!(std::fs::read_dir(p.join("fam")).unwrap().count(), 3);
}

#[test]
fn import_matrix() {
    let dir = setup();
    let p = dir.path();
    std::fs::write(p.join("m.csv"), "# export\nstudent;A;B;C\nann;5;5;0\nbob;0;4;6\ncid;10;0;0\n").unwrap();
    ok(p, &["import", "m.csv", "--groups", "1,2;3", "--out", "imp.toml"]);
    let text = read(p.join("imp.toml"));
    assert!(text.contains("groups = [[1, 2], [3]]"), "{text}");
    assert!(text.contains("\"ann\""));
    let stdout = ok(p, &["solve", "imp.toml", "--out", "o"]);
    assert!(stdout.contains("best utility 21"), "{stdout}");
    assert_eq!(run(p, &["import", "m.csv", "--w-max", "7", "--out", "x.toml"]).status.code(), Some(2));
    assert_eq!(run(p, &["import", "m.csv", "--groups", "0", "--out", "x.toml"]).status.code(), Some(2));
}

#[test]
fn frontier_tsv() {
    let dir = setup();
    let p = dir.path();
    ok(p, &["generate", "--n", "10", "--m", "3", "--groups", "2", "--seed", "4", "--out", "g.toml"]);
    ok(p, &["frontier", "g.toml", "--evals", "20000", "--out", "f.tsv", "--archive", "a.json"]);
    let tsv = read(p.join("f.tsv"));
    let mut lines = tsv.lines();
    assert_eq!(lines.next(), Some("utility\timbalance\timbalance_decimal\talternatives\tcap_hit"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert!(!rows.is_empty());
    // utilities strictly decrease while imbalance strictly improves
    for w in rows.windows(2) {
        assert!(w[0][0].parse::<i64>().unwrap() > w[1][0].parse::<i64>().unwrap());
        assert!(w[0][2].parse::<f64>().unwrap() > w[1][2].parse::<f64>().unwrap());
    }
    assert!(read(p.join("a.json")).contains("\"bi_objective\""));
}

/// Reference benchmark setup: a 34-student base,
/// sizes 30 to 45, 25 runs of 100 000 evaluations per cell.
#[test]
fn benchmark_reference_setup() {
    let dir = setup();
    let p = dir.path();
    ok(p, &["generate", "--n", "34", "--m", "15", "--groups", "4", "--seed", "1", "--out", "base.toml"]);
    let args = ["benchmark", "base.toml", "--targets", "30-45", "--seed", "1", "--no-timing"];
    ok(p, &[&args[..], &["--out", "a"]].concat());
    let table = read(p.join("a/table.tsv"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "instance\tswap2\tswap3\tshift\tshift+swap2\tVNS");
    assert_eq!(lines.len(), 17);
    for (k, line) in lines[1..].iter().enumerate() {
        let n = 30 + k;
        assert!(line.starts_with(&format!("n{n}\t")));
        let expected = if n % 15 == 0 { 2 } else { 0 };
        assert_eq!(line.matches("n/a").count(), expected, "{line}");
    }
    let diff = read(p.join("a/differences.tsv"));
    assert_eq!(diff.lines().count(), 17);
    let runs: serde_json::Value = serde_json::from_str(&read(p.join("a/runs.json"))).unwrap();
    assert_eq!(runs["rows"][0]["cells"]["VNS"]["utilities"].as_array().unwrap().len(), 25);
    assert!(runs["rows"][15]["cells"]["shift"].is_null());

    // same seed and another worker count: same files
    Command::new(BIN)
        .args([&args[..], &["--out", "b"]].concat())
        .current_dir(p)
        .env("SEMINAR_VNS_WORKERS", "3")
        .output()
        .unwrap();
    for file in ["table.tsv", "differences.tsv", "runs.json"] {
        assert_eq!(read(p.join("a").join(file)), read(p.join("b").join(file)), "{file}");
    }
}

#[test]
fn serve_answers_http() {
    let dir = setup();
    let mut child = Command::new(BIN)
        .args(["serve", "--addr", "127.0.0.1:0", "--data-dir"])
        .arg(dir.path().join("data"))
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    stderr.read_line(&mut line).unwrap();
    let addr = line.trim().rsplit("http://").next().unwrap().to_string();

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /version HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"api_version\":1"), "{response}");
}
