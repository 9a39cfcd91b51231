use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pointgas::freefermi::f_density;
use serde_json::Value;

fn pointgas(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointgas"))
        .args(args)
        .current_dir(dir)
        .env("POINTGAS_CACHE_DIR", dir.join("cache"))
        .output()
        .expect("binary runs")
}

fn summary(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect()
}

const SMALL: &[(&str, &[&str])] = &[
    ("fermi", &["--beta", "0.5", "--rho", "2", "--q", "1"]),
    ("hardy", &["--samples", "2", "--resolution", "6"]),
    ("twobody", &["--elements", "60", "--a-inv", "-0.5"]),
    ("spectrum2", &["--basis", "12", "--beta", "2"]),
    ("occupations", &["--N", "4", "--q", "1"]),
    ("ledger", &["--N", "300", "--beta", "2"]),
];

#[test]
fn resolved_config_reproduces_csv() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, flags) in SMALL {
        let first = format!("a/{cmd}.csv");
        let mut args = vec![*cmd, "--out", first.as_str()];
        args.extend_from_slice(flags);
        let o = pointgas(dir.path(), &args);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));

        let conf = format!("a/{cmd}.conf");
        let second = format!("b/{cmd}.csv");
        let o = pointgas(dir.path(), &[cmd, "--config", &conf, "--out", &second]);
        assert!(o.status.success(), "{cmd} rerun: {}", String::from_utf8_lossy(&o.stderr));

        let a = fs::read(dir.path().join(&first)).unwrap();
        let b = fs::read(dir.path().join(&second)).unwrap();
        assert_eq!(a, b, "{cmd}: CSV differs after rerun");
        let head = String::from_utf8(a).unwrap();
        assert!(head.starts_with(&format!("# pointgas-csv v1 {cmd}: ")), "{cmd}: {head}");

        // the rerun's resolved config differs only in `out`
        let ca = fs::read_to_string(dir.path().join(&conf)).unwrap();
        let cb = fs::read_to_string(dir.path().join(format!("b/{cmd}.conf"))).unwrap();
        let strip = |s: &str| s.lines().filter(|l| !l.starts_with("out =")).map(String::from).collect::<Vec<_>>();
        assert_eq!(strip(&ca), strip(&cb));
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.conf"), "# trial\ncommand = fermi\nbeta = 4\nrho = 0.5\n").unwrap();
    let o = pointgas(dir.path(), &["fermi", "--config", "run.conf", "--beta", "2"]);
    assert!(o.status.success());
    let conf = fs::read_to_string(dir.path().join("fermi.conf")).unwrap();
    assert!(conf.contains("beta = 2.0\n") && conf.contains("rho = 0.5\n"), "{conf}");
}

#[test]
fn strict_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&str, &str)] = &[
        ("unknown.conf", "beta = 1\ntemperature = 3\n"),
        ("dup.conf", "beta = 1\nbeta = 2\n"),
        ("garbled.conf", "beta: 1\n"),
        ("wrong.conf", "command = ledger\n"),
        ("value.conf", "q = two\n"),
    ];
    for (name, text) in cases {
        fs::write(dir.path().join(name), text).unwrap();
        let o = pointgas(dir.path(), &["fermi", "--config", name]);
        assert_eq!(o.status.code(), Some(2), "{name}");
    }
    assert_eq!(pointgas(dir.path(), &["fermi", "--temperature", "3"]).status.code(), Some(2));
    assert_eq!(pointgas(dir.path(), &["melt"]).status.code(), Some(2));
    assert!(!dir.path().join("fermi.csv").exists());
}

#[test]
fn fermi_example_is_one_thermo_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = pointgas(dir.path(), &["fermi", "--beta", "1", "--rho", "1", "--q", "2"]);
    assert!(o.status.success());
    let rows = data_rows(&fs::read_to_string(dir.path().join("fermi.csv")).unwrap());
    assert_eq!(rows.len(), 1);
    let want = f_density(1.0, 1.0, 2).unwrap();
    let f: f64 = rows[0][4].parse().unwrap();
    assert_eq!(f.to_bits(), want.f.to_bits());
    assert_eq!(summary(&dir.path().join("fermi.json"))["ok"], true);
}

#[test]
fn hardy_box_table_clears_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let o = pointgas(dir.path(), &["hardy", "--lemma", "box", "--c0", "16", "--c1", "144", "--samples", "20", "--resolution", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&fs::read_to_string(dir.path().join("hardy.csv")).unwrap());
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() >= 0.95 && r[7] == "true"));
}

#[test]
fn failed_check_exits_one_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = pointgas(dir.path(), &["hardy", "--samples", "1", "--resolution", "4", "--min-lambda", "1e9"]);
    assert_eq!(o.status.code(), Some(1));
    let s = summary(&dir.path().join("hardy.json"));
    assert_eq!(s["ok"], false);
    assert_eq!(s["failures"].as_array().unwrap().len(), 1);
    assert!(dir.path().join("hardy.csv").exists());
}

#[test]
fn ledger_example_records_every_term() {
    let dir = tempfile::tempdir().unwrap();
    let o = pointgas(dir.path(), &["ledger", "--N", "1000", "--rho", "1", "--beta", "1"]);
    assert!(o.status.success());
    let s = summary(&dir.path().join("ledger.json"));
    let r = &s["result"];
    for k in ["finite_size_defect", "tail_term"] {
        assert!(r["terms"][k].is_number(), "{k}");
    }
    for k in ["e_bar", "f_local", "f_free", "headline_deficit", "ell", "m"] {
        assert!(r[k].is_number(), "{k}");
    }
    assert!(r["delta"]["delta"].is_number());
    // default constants leave δ ≥ 1/4: no lower bound, and the reason is recorded
    assert_eq!(r["feasible"], false);
    assert!(r["blocking"].as_str().unwrap().contains("delta"));
}

#[test]
fn spectra_are_cached_under_the_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["spectrum2", "--basis", "12", "--q", "2"];
    assert!(pointgas(dir.path(), &args).status.success());
    let entries: Vec<_> = fs::read_dir(dir.path().join("cache"))
        .unwrap()
        .flatten()
        .filter(|e| e.file_name().to_string_lossy().ends_with(".json"))
        .collect();
    assert_eq!(entries.len(), 2);
    let first = fs::read(dir.path().join("spectrum2.csv")).unwrap();
    assert!(pointgas(dir.path(), &args).status.success());
    assert_eq!(first, fs::read(dir.path().join("spectrum2.csv")).unwrap());
    let o = pointgas(dir.path(), &["spectrum2", "--basis", "12", "--cache", "false", "--out", "nocache.csv"]);
    assert!(o.status.success());
    assert_eq!(first, fs::read(dir.path().join("nocache.csv")).unwrap());
}

#[test]
fn occupations_report_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    assert!(pointgas(dir.path(), &["occupations", "--N", "5", "--m", "2", "--q", "3"]).status.success());
    let s = summary(&dir.path().join("occupations.json"));
    assert_eq!(s["result"]["identity_holds"], true);
    // C(24, 5)
    assert_eq!(s["result"]["binomial"], "42504");
}
