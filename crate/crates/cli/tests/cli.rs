use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coopetition"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coopetition-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim()).unwrap()
}

const MARKET: &str = r#""market":{"k":3,"dist":{"kind":"uniform","r_min":50,"r_max":200},"eta_apo":0.3,"delta_lte":0.4,"r_lte":250}"#;

fn config(name: &str, body: &str) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn payoff_curve_has_requested_rows() {
    let out = bin()
        .args([
            "payoff-curve",
            "--preset",
            "fig4",
            "--c-min",
            "42",
            "--c-max",
            "200",
            "--steps",
            "400",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("c,expected_payoff,regime,expected_payment")
    );
    assert_eq!(lines.count(), 400);
}

#[test]
fn abstentions_are_written_as_n() {
    let csv = scratch("abstain.csv");
    let cfg = config(
        "abstain.json",
        &format!("{{{MARKET},\"replications\":200}}"),
    );
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "point,rep,r_1,r_2,r_3,b_1,b_2,b_3,mode,winner,r_pay,pi_a_lte,pi_b_lte,pi_a_apo,pi_b_apo,w_a,w_b,w_max"
    );
    assert_eq!(text.lines().count(), 201);
    assert!(text.lines().skip(1).any(|l| l.split(',').any(|f| f == "N")));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["summary"]["replications"], 200);
}

#[test]
fn unknown_keys_exit_with_config_error() {
    let cfg = config("unknown.json", &format!("{{{MARKET},\"seeds\":3}}"));
    let out = bin()
        .args(["optimize", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "invalid_config");
}

#[test]
fn invalid_market_exits_with_config_error() {
    let bad = MARKET.replace("\"eta_apo\":0.3", "\"eta_apo\":1.5");
    let cfg = config("bad.json", &format!("{{{bad}}}"));
    let out = bin()
        .args(["equilibrium", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn failed_certification_exits_with_three() {
    let out = bin()
        .args([
            "verify",
            "--preset",
            "appendixK",
            "--c",
            "55",
            "--mutation",
            "never-abstain",
            "--samples",
            "5000",
        ])
        .args(["--n-types", "20", "--n-bids", "21"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "certification_failed");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["certified"], false);
    assert_eq!(report["mutation"], "never-abstain");
}

#[test]
fn multi_commands_need_a_multi_market() {
    let out = bin()
        .args(["multi-lte", "optimize", "--preset", "fig4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["verify", "--preset", "fig11"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_are_json() {
    let out = bin().args(["optimize"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn equilibrium_json_shape() {
    let out = bin()
        .args(["equilibrium", "--preset", "appendixK", "--c", "55"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["regime"], "standard");
    assert_eq!(v["c"], 55.0);
    assert!(v["r_x"].is_null());
    let r_t = v["r_t"].as_f64().unwrap();
    assert_eq!(
        format!("{r_t}").trim_start_matches("65.").len(),
        7,
        "nine significant digits: {r_t}"
    );
    let bands: Vec<&str> = v["breakpoints"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["action"].as_str().unwrap())
        .collect();
    assert_eq!(bands, ["truthful", "reserve", "abstain"]);
}

#[test]
fn optimize_sweep_writes_one_row_per_market() {
    let csv = scratch("sweep.csv");
    let cfg = config(
        "sweep.json",
        &format!("{{{MARKET},\"sweep\":{{\"r_lte\":[60,120,240],\"k\":[2,3]}}}}"),
    );
    let out = bin()
        .args(["optimize", "--config"])
        .arg(&cfg)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 6);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 7);
}
