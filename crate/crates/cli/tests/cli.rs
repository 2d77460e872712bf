//! End-to-end checks of the binary: exit codes, schemas, determinism.

use std::io::Write;
use std::process::{Command, Output};

fn spamrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spamrace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(args: &[&str]) -> serde_json::Value {
    let out = spamrace(args);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn solve_emits_versioned_json_with_known_root() {
    let doc = stdout_json(&[
        "solve",
        "--n",
        "2",
        "--V",
        "10",
        "--C",
        "1",
        "--lambdaT",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(doc["schema"], 1);
    let x = doc["x_star"].as_f64().unwrap();
    assert!((x - 0.48227692131585226).abs() < 1e-12);
    assert!((doc["b_star"].as_f64().unwrap() - 7.800035884837746).abs() < 1e-10);
    assert!(doc["spam_ratio"].is_null());
}

#[test]
fn solve_routes_zero_advantage_to_baseline() {
    let doc = stdout_json(&[
        "solve",
        "--n",
        "2",
        "--v",
        "10",
        "--g",
        "2",
        "--r",
        "0.5",
        "--lambdaT",
        "0",
    ]);
    // V = 9, C = 1, so K* = 4.5 and R* = 4.5
    assert_eq!(doc["V"], 9.0);
    assert_eq!(doc["C"], 1.0);
    assert_eq!(doc["K_base"], 4.5);
    assert_eq!(doc["R_base"], 4.5);
    assert!(doc["x_star"].is_null());
}

#[test]
fn compare_fills_every_column_and_verifies() {
    let out = spamrace(&[
        "compare",
        "--n",
        "2",
        "--V",
        "10",
        "--C",
        "1",
        "--lambdaT",
        "1",
        "--verify",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,v,g,r,lambda,T,V,C,x_star,k_l_star,k_w_star,u_l_star,u_w_star,b_star,K_base,K_tb,R_base,R_tb,spam_ratio,revenue_delta"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("2,,,,1.0,1.0,10.0,1.0,"));
    assert!(!row.contains(",,,,,")); // equilibrium columns are filled
}

#[test]
fn compare_rejects_zero_advantage_with_usage_error() {
    let out = spamrace(&[
        "compare",
        "--n",
        "2",
        "--V",
        "10",
        "--C",
        "1",
        "--lambdaT",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda*T > 0"));
}

#[test]
fn separate_lambda_and_advantage_match_their_product() {
    // equilibrium quantities depend on lambda and T only through the product
    let via_product = stdout_json(&[
        "solve",
        "--n",
        "2",
        "--V",
        "10",
        "--C",
        "1",
        "--lambdaT",
        "1",
    ]);
    let via_pair = stdout_json(&[
        "solve", "--n", "2", "--V", "10", "--C", "1", "--lambda", "2", "--T", "0.5",
    ]);
    assert_eq!(via_product["x_star"], via_pair["x_star"]);
    assert_eq!(via_product["k_l_star"], via_pair["k_l_star"]);
    assert_eq!(via_pair["lambda"], 2.0);
    assert_eq!(via_pair["T"], 0.5);
}

#[test]
fn conflicting_parameterizations_are_usage_errors() {
    let out = spamrace(&[
        "solve",
        "--n",
        "2",
        "--V",
        "10",
        "--C",
        "1",
        "--v",
        "10",
        "--g",
        "2",
        "--r",
        "0.5",
        "--lambdaT",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = spamrace(&["solve", "--n", "2", "--V", "10", "--C", "1"]);
    assert_eq!(out.status.code(), Some(1));

    // --lambda without --T
    let out = spamrace(&[
        "solve", "--n", "2", "--V", "10", "--C", "1", "--lambda", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_domain_is_rejected() {
    let out = spamrace(&[
        "solve",
        "--n",
        "1",
        "--V",
        "10",
        "--C",
        "1",
        "--lambdaT",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = spamrace(&[
        "solve",
        "--n",
        "2",
        "--v",
        "5",
        "--g",
        "5",
        "--r",
        "0.5",
        "--lambdaT",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gas cost"));
}

#[test]
fn sweep_is_ordered_and_deterministic() {
    let args = [
        "sweep",
        "--n",
        "2,3",
        "--lambdaT",
        "0.1,1",
        "--vc",
        "10,100",
        "--format",
        "csv",
    ];
    let first = spamrace(&args);
    assert!(first.status.success());
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    // outer n, middle lambda*T, inner V/C
    assert!(rows[0].starts_with("2,,,,1.0,0.1,10.0,1.0,"));
    assert!(rows[1].starts_with("2,,,,1.0,0.1,100.0,1.0,"));
    assert!(rows[2].starts_with("2,,,,1.0,1.0,10.0,1.0,"));
    assert!(rows[4].starts_with("3,,,,1.0,0.1,10.0,1.0,"));

    let second = spamrace(&args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn simulate_is_seed_deterministic() {
    let args = [
        "simulate",
        "baseline",
        "--profile",
        "2,6",
        "--lambda",
        "1",
        "--reps",
        "20000",
        "--seed",
        "7",
    ];
    let first = spamrace(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, spamrace(&args).stdout);

    let doc: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["analytic_probs"][0], 0.25);

    let reseeded = spamrace(&[
        "simulate",
        "baseline",
        "--profile",
        "2,6",
        "--lambda",
        "1",
        "--reps",
        "20000",
        "--seed",
        "8",
    ]);
    assert_ne!(first.stdout, reseeded.stdout);
}

#[test]
fn simulate_timeboost_and_full_game_run() {
    let doc = stdout_json(&[
        "simulate",
        "timeboost",
        "--profile",
        "1,1",
        "--lambda",
        "1",
        "--T",
        "0.6931471805599453",
        "--winner",
        "0",
        "--reps",
        "20000",
        "--seed",
        "3",
    ]);
    assert!((doc["analytic_probs"][0].as_f64().unwrap() - 0.75).abs() < 1e-12);

    let doc = stdout_json(&[
        "simulate",
        "full",
        "--n",
        "2",
        "--V",
        "10",
        "--C",
        "1",
        "--lambdaT",
        "1",
        "--reps",
        "20000",
        "--seed",
        "4",
    ]);
    // defaults play the equilibrium: mean payoffs near u_l* = 0.1684
    let payoff = doc["mean_payoffs"][0].as_f64().unwrap();
    assert!((payoff - 0.1684).abs() < 0.05, "payoff {payoff}");
}

const TX_FIXTURE: &str = "\
chain,timestamp_ms,tx_hash,sender,recipient,value,selector,calldata_hash,gas_fee_eth,status,timeboosted
arbitrum,1744884000000,0x01,0xaaa,0xbbb,0,a9059cbb,e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855,0.05,success,false
arbitrum,1744884000500,0x02,0xaaa,0xbbb,0,a9059cbb,e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855,0.05,failed,false
arbitrum,1744884001500,0x03,0xaaa,0xbbb,0,a9059cbb,e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855,0.05,failed,false
";

const AUCTION_FIXTURE: &str = "\
round_id,timestamp_ms,payment_eth
1,1744884005000,0.3
";

#[test]
fn metrics_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let tx_path = dir.path().join("txs.csv");
    let auction_path = dir.path().join("auctions.csv");
    std::fs::File::create(&tx_path)
        .unwrap()
        .write_all(TX_FIXTURE.as_bytes())
        .unwrap();
    std::fs::File::create(&auction_path)
        .unwrap()
        .write_all(AUCTION_FIXTURE.as_bytes())
        .unwrap();

    let out = spamrace(&[
        "metrics",
        "--txs",
        tx_path.to_str().unwrap(),
        "--auctions",
        auction_path.to_str().unwrap(),
        "--treated",
        "arbitrum",
        "--window-ms",
        "2000",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text,
        "chain,date,rep_txs,rep_gas_eth,failed_rep_txs,pct_failed,revenue_eth\n\
         arbitrum,2025-04-17,2,0.1,2,1.000000,0.4\n"
    );
}

#[test]
fn metrics_reports_malformed_rows_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let tx_path = dir.path().join("txs.csv");
    let bad = TX_FIXTURE.replace("0.05,failed,false", "-0.05,failed,false");
    std::fs::File::create(&tx_path)
        .unwrap()
        .write_all(bad.as_bytes())
        .unwrap();
    let out = spamrace(&[
        "metrics",
        "--txs",
        tx_path.to_str().unwrap(),
        "--treated",
        "arbitrum",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("result.json");
    let out = spamrace(&[
        "solve",
        "--n",
        "2",
        "--V",
        "10",
        "--C",
        "1",
        "--lambdaT",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(doc["schema"], 1);
}
