use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use modexp_core::numerics::LookupTable;
use num_bigint::BigUint;
use serde_json::Value;

fn modexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modexp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = modexp(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("modexp-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

/// Drops the manifest comment and any file separators.
fn body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[test]
fn simulate_n15_all_variants() {
    let report: Value = serde_json::from_str(&stdout(&["simulate"])).unwrap();
    assert_eq!(report["ok"], true);
    assert_eq!(report["identical_outputs"], true);
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 16);
    for r in runs {
        assert_eq!(r["verified"], true);
        assert_eq!(r["tally_matches_meter"], true);
    }
    let expected: Vec<(u64, u64)> = serde_json::from_value(report["expected"].clone()).unwrap();
    for (x, y) in expected {
        assert_eq!(y, (0..x).fold(1, |acc, _| acc * 7 % 15));
    }
}

#[test]
fn same_manifest_same_bytes() {
    for args in [
        vec![
            "--seed",
            "9",
            "simulate",
            "--modulus",
            "21",
            "--base",
            "5",
            "--ne",
            "5",
            "--variant",
            "0,7,15",
        ],
        vec!["cost", "--variant", "all"],
        vec!["estimate", "--n", "1024", "--ne", "1536", "--budget-mqb", "5,10"],
    ] {
        assert_eq!(stdout(&args), stdout(&args));
    }
    let a = stdout(&["--seed", "1", "simulate", "--variant", "0"]);
    let b = stdout(&["--seed", "2", "simulate", "--variant", "0"]);
    assert_ne!(a, b);
}

#[test]
fn out_dir_matches_stdout() {
    let dir = scratch("out");
    let d = dir.to_str().unwrap();
    let printed = stdout(&["cost", "--variant", "original"]);
    stdout(&["--out", d, "cost", "--variant", "original"]);
    let written = fs::read_to_string(dir.join("cost.csv")).unwrap();
    assert_eq!(body(&printed), body(&written));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn tables_round_trip_and_prune() {
    let dir = scratch("tables");
    let d = dir.to_str().unwrap();
    let args = [
        "--out",
        d,
        "tables",
        "--modulus",
        "0x35",
        "--base",
        "5",
        "--ne",
        "6",
        "--we",
        "2",
        "--wm",
        "2",
        "--i",
        "1",
        "--j",
        "1",
    ];
    stdout(&args);
    let read = |f: &str| LookupTable::from_text(&fs::read_to_string(dir.join(f)).unwrap()).unwrap();
    let plain = read("multiply_i1_j1.txt");
    let pruned = read("pruned_i1_j1.txt");
    read("phase_fixup_i1_j1.txt");
    let direct = read("direct_exp.txt");
    // 53, base 5, window (i=1, j=1): 5^{e·4}·4·m mod 53.
    for addr in 0..plain.len() {
        let (m, e) = ((addr >> 2) as u64, (addr & 3) as u64);
        let want = BigUint::from(5u32).modpow(&BigUint::from(4 * e), &BigUint::from(53u32)) * (4 * m) % 53u32;
        assert_eq!(plain.get(addr), &want);
        assert_eq!(&(pruned.get(addr) ^ BigUint::from(m << 2)), plain.get(addr));
    }
    for x in 0..direct.len() as u32 {
        assert_eq!(direct.get(x as usize), &(BigUint::from(5u32).pow(x) % 53u32));
    }
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn cost_spot_values() {
    let text = body(&stdout(&["cost", "--variant", "original,opt3", "--nep", "0"]));
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "original");
    assert_eq!(rows[0][8..11], ["1024", "4096", "96"]);
    assert_eq!(rows[0][1..], rows[1][1..]);
    let json: Value = serde_json::from_str(&stdout(&["cost", "--variant", "combined", "--format", "json"])).unwrap();
    assert!(json.to_string().contains("combined"));
}

#[test]
fn estimate_single_point() {
    let text = stdout(&["estimate", "--point", "17,27,5,5,5,1024", "--budget-mqb", "25"]);
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    let header = "n,n_e,gate err,L1,L2,d_off,g_mul,g_exp,g_sep,%,v.p.r,E[vol],Mqb,hrs,E[hrs],B Tofs";
    assert_eq!(data.iter().filter(|l| **l == header).count(), 3);
    let rows: Vec<&&str> = data.iter().filter(|l| **l != header).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with("2048,3029,1e-3,17,27,5,5,5,1024,")));
}

#[test]
fn bad_input_exits_two() {
    for args in [
        vec!["estimate", "--perr", "0.5", "--point", "17,27,5,5,5,1024"],
        vec!["estimate", "--point", "1,2,3"],
        vec!["simulate", "--modulus", "16"],
        vec!["tables", "--modulus", "21", "--base", "7", "--ne", "3"],
        vec!["cost", "--variant", "opt9"],
    ] {
        assert_eq!(modexp(&args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(
        modexp(&["--config", "/nonexistent/profile.conf", "estimate"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn overflowing_point_is_reported() {
    let out = modexp(&["estimate", "--point", "9,11,2,5,5,1024"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn config_digest_is_recorded() {
    let dir = scratch("config");
    fs::create_dir_all(&dir).unwrap();
    let conf = dir.join("p.conf");
    fs::write(&conf, "p_phys = 0.001\n").unwrap();
    let c = conf.to_str().unwrap();
    let text = stdout(&["--config", c, "estimate", "--point", "17,27,5,5,5,1024"]);
    let line = text.lines().find(|l| l.starts_with("# manifest ")).unwrap();
    let m: Value = serde_json::from_str(line.trim_start_matches("# manifest ")).unwrap();
    let digest = m["config_digest"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(digest.chars().all(|ch| ch.is_ascii_hexdigit()));
    let plain = stdout(&["estimate", "--point", "17,27,5,5,5,1024"]);
    assert!(plain.contains("\"config_digest\":\"none\""));
    assert_eq!(body(&plain), body(&text));
    fs::write(&conf, "no_such_key = 1\n").unwrap();
    assert_eq!(modexp(&["--config", c, "estimate"]).status.code(), Some(2));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn coset_adder_books_costs_only() {
    let report: Value = serde_json::from_str(&stdout(&[
        "simulate",
        "--adder",
        "coset",
        "--coset-pad",
        "3",
        "--variant",
        "0,15",
    ]))
    .unwrap();
    assert_eq!(report["ok"], true);
    for r in report["runs"].as_array().unwrap() {
        assert!(r["verified"].is_null());
        assert_eq!(r["tally_matches_meter"], true);
    }
}
