//! Acceptance run: the `pathid reproduce` binary executes every check and
//! this target prints one PASS/FAIL line per criterion. It runs without the
//! libtest harness so the lines are never captured. Tolerances and time
//! budgets are pinned in the checks themselves. Criterion 9 additionally
//! spawns the binary for each manifest case to confirm real process exit
//! codes.

use std::path::PathBuf;
use std::process::Command;

use pathid_cli::contract::parse_cases;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn spawned_exit_codes() -> Result<usize, String> {
    let data = data_dir();
    let src = std::fs::read_to_string(data.join("cases.txt")).map_err(|e| e.to_string())?;
    let cases = parse_cases(&src, &data)?;
    for c in &cases {
        let out = Command::new(env!("CARGO_BIN_EXE_pathid")).args(&c.args).output().map_err(|e| e.to_string())?;
        if out.status.code() != Some(c.exit) {
            return Err(format!("cases.txt:{}: process exited {:?}, expected {}", c.line, out.status.code(), c.exit));
        }
        if let Some(g) = &c.golden {
            if std::fs::read(g).map_err(|e| e.to_string())? != out.stdout {
                return Err(format!("cases.txt:{}: process stdout differs from golden", c.line));
            }
        }
    }
    Ok(cases.len())
}

fn main() {
    let out_dir = tempfile::tempdir().expect("temp dir");
    let run = Command::new(env!("CARGO_BIN_EXE_pathid"))
        .arg("reproduce")
        .arg("--out")
        .arg(out_dir.path())
        .arg("--data")
        .arg(data_dir())
        .output()
        .expect("run pathid reproduce");
    let results: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.path().join("results.json")).expect("results.json")).expect("valid json");
    assert!(out_dir.path().join("report.md").exists());
    let timing: Vec<String> = String::from_utf8_lossy(&run.stdout).lines().map(str::to_string).collect();
    let spawned = spawned_exit_codes();
    let mut all = true;
    for c in results["checks"].as_array().expect("checks") {
        let id = c["id"].as_u64().expect("id");
        let mut passed = c["passed"].as_bool().expect("passed");
        let mut detail = c["detail"].as_str().expect("detail").to_string();
        if id == 9 {
            match &spawned {
                Ok(n) => detail.push_str(&format!("; {n} spawned processes exit as expected")),
                Err(e) => {
                    passed = false;
                    detail = e.clone();
                }
            }
        }
        let secs = timing
            .iter()
            .find(|l| l.contains(&format!("[{id}] ")))
            .and_then(|l| l.split('(').nth(1))
            .and_then(|s| s.split(')').next())
            .unwrap_or("?");
        println!("{} criterion {id}: {} ({secs}): {detail}", if passed { "PASS" } else { "FAIL" }, c["title"].as_str().unwrap_or(""));
        all &= passed;
    }
    let count = results["checks"].as_array().map_or(0, Vec::len);
    if count != 9 || !all || run.status.code() != Some(0) {
        eprintln!("acceptance failed: {count} criteria reported, all passed: {all}, reproduce exit {:?}", run.status.code());
        std::process::exit(1);
    }
    println!("acceptance: all 9 criteria passed");
}
