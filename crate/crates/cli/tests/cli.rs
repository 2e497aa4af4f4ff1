use std::io::Write;
use std::process::{Command, Output};

fn m2o(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_m2o")).args(args).env_remove("M2O_SEED").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const FAST: [&str; 2] = ["--key-size", "test-512"];

#[test]
fn honest_run_reconciles() {
    let o = m2o(&[&["run", "--nc", "3", "--scenario", "honest"][..], &FAST].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 9 + 6);
    assert!(stderr(&o).contains("0 discrepancies"), "{}", stderr(&o));
}

#[test]
fn rejected_attack_is_the_expected_outcome() {
    let o = m2o(&[&["run", "--nc", "3", "--scenario", "replay-msg1"][..], &FAST].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // the replayed request costs the server one extra decryption
    assert!(stderr(&o).contains("hgaka as 1 se: expected 8, measured 9"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["run", "--nc", "1"],
        vec!["run", "--nc", "2", "--key-size", "test-64"],
        vec!["run", "--nc", "2", "--key-size", "test-512", "--scenario", "nope"],
        vec!["run", "--nc", "2", "--key-size", "test-512", "--delta-t", "0"],
        vec!["run", "--nc", "three"],
        vec!["costs", "--range", "9..3"],
        vec!["costs", "--range", "1..3"],
        vec!["costs", "--timing-preset", "no-such-preset"],
        vec!["calibrate", "--iterations", "10"],
        vec!["frobnicate"],
    ] {
        let o = m2o(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn runs_are_deterministic_and_seed_falls_back_to_env() {
    let a = m2o(&[&["run", "--nc", "4", "--seed", "17"][..], &FAST].concat());
    let b = m2o(&[&["run", "--nc", "4", "--seed", "17"][..], &FAST].concat());
    assert_eq!(stdout(&a), stdout(&b));
    let env = Command::new(env!("CARGO_BIN_EXE_m2o"))
        .args([&["run", "--nc", "4"][..], &FAST].concat())
        .env("M2O_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(stdout(&env), stdout(&a));
    let c = m2o(&[&["run", "--nc", "4", "--seed", "18"][..], &FAST].concat());
    assert_ne!(stdout(&c), stdout(&a));
}

#[test]
fn config_file_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("dump.txt");
    let mut f = std::fs::File::create(&cfg).unwrap();
    writeln!(f, "nc = 2\nkey-size = \"test-512\"\nseed = 3\nscenario = \"eavesdrop\"").unwrap();
    let o = m2o(&["run", "--config", cfg.to_str().unwrap(), "--nc", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 15);
    assert!(stderr(&o).contains("scenario eavesdrop nc=3"));
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn cost_curves() {
    let o = m2o(&["costs", "--range", "5..400"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("nc,comm_hgaka_bits,comm_hga_bits,comm_m2o_total,comm_kerberos,"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 396);
    let pcc = |row: &Vec<String>, col: usize| row[col].parse::<f64>().unwrap();
    let near = |x: f64, want: f64| (x - want).abs() <= 0.1 * want;
    assert!(near(pcc(&rows[0], 5), 3.0) && near(pcc(&rows[395], 5), 41.0));
    assert!(near(pcc(&rows[0], 6), 29.0) && near(pcc(&rows[395], 6), 871.0));
    for r in &rows {
        assert!(r[3].parse::<u64>().unwrap() > r[4].parse::<u64>().unwrap());
    }

    let one = m2o(&["costs", "--range", "3"]);
    assert_eq!(
        csv_rows(&stdout(&one)),
        vec!["3,6272,17200,23472,18240,2.536000,25.029000,5.100000".split(',').map(str::to_owned).collect::<Vec<_>>()]
    );
}

#[test]
fn calibrated_preset_feeds_costs() {
    let dir = tempfile::tempdir().unwrap();
    let preset = dir.path().join("local.toml");
    let o = m2o(&["calibrate", "--iterations", "100", "--key-size", "test-512", "--out", preset.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&preset).unwrap();
    for k in ["se", "ae", "ad", "h", "hmac", "kse", "ksd"] {
        assert!(text.contains(&format!("\n{k} = ")), "{text}");
    }
    let o = m2o(&["costs", "--range", "2..4", "--timing-preset", preset.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(csv_rows(&stdout(&o)).len(), 3);
}

#[test]
fn scenario_suite_and_negative_control() {
    let o = m2o(&["scenarios", "--key-size", "test-512", "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let table = stdout(&o);
    assert_eq!(table.lines().count(), 1 + 3 * 10);
    for name in
        ["client-impersonation", "as-impersonation", "target-impersonation", "eavesdrop", "replay-msg1", "dos-flood"]
    {
        assert_eq!(table.lines().filter(|l| l.starts_with(name)).count(), 3, "{name}");
    }

    let o = m2o(&["scenarios", "--key-size", "test-512", "--seed", "4", "--break-replay-cache"]);
    assert_eq!(code(&o), 1);
    let failed: Vec<_> = stdout(&o).lines().filter(|l| l.contains("FAIL")).map(|l| l.to_owned()).collect();
    assert_eq!(failed.len(), 6, "{failed:?}");
    assert!(failed.iter().all(|l| l.starts_with("replay")));
}
