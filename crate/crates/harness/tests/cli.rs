use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use vsched_harness::files::InstanceFile;
use vsched_harness::gen::gen_file;

fn vsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vsched"))
        .args(args)
        .output()
        .expect("spawn vsched")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn params(p: &[(&str, usize)]) -> BTreeMap<String, usize> {
    p.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn generated_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, p) in [
        ("random-identical", params(&[("m", 4), ("d", 3), ("n", 20)])),
        ("random-unrelated", params(&[("m", 4), ("d", 2), ("n", 20)])),
        ("planted-feasible", params(&[("m", 4), ("d", 2), ("n", 12)])),
        ("pairing-lb", params(&[("h", 3)])),
        ("clique-encode", params(&[("m", 4)])),
    ] {
        let file = gen_file(kind, &p, 7).unwrap();
        let path = dir.path().join(format!("{kind}.json"));
        file.write(&path).unwrap();
        let back = InstanceFile::read(&path).unwrap();
        assert_eq!(back.to_json().unwrap(), file.to_json().unwrap(), "{kind}");
        if file.adaptive.is_none() {
            assert_eq!(
                back.to_instance().unwrap(),
                file.to_instance().unwrap(),
                "{kind}"
            );
        }
    }
}

#[test]
fn gen_is_seed_deterministic() {
    let a = stdout(&vsched(&[
        "gen",
        "random-identical",
        "m=3",
        "d=2",
        "n=9",
        "--seed",
        "5",
    ]));
    let b = stdout(&vsched(&[
        "gen",
        "random-identical",
        "m=3",
        "d=2",
        "n=9",
        "--seed",
        "5",
    ]));
    let c = stdout(&vsched(&[
        "gen",
        "random-identical",
        "m=3",
        "d=2",
        "n=9",
        "--seed",
        "6",
    ]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

fn gen_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_string_lossy().into_owned();
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", &path]);
    let o = vsched(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn run_writes_csv_and_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_to(
        dir.path(),
        "inst.json",
        &["random-identical", "m=4", "d=4", "n=50"],
    );
    for alg in [
        "vsmax-i-derand",
        "vsmax-i-rand",
        "vsall-i",
        "greedy",
        "random",
    ] {
        let out = dir.path().join(format!("{alg}.csv"));
        let o = vsched(&["run", alg, &inst, "--check", "--out", out.to_str().unwrap()]);
        assert!(
            o.status.success(),
            "{alg}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let mut rdr = csv::Reader::from_path(&out).unwrap();
        let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(
            header,
            [
                "algorithm",
                "instance_id",
                "seed",
                "dimension",
                "norm",
                "value",
                "lower_bound",
                "ratio",
                "checks"
            ]
        );
        let rows = rdr.records().count();
        assert!(rows >= 4, "{alg}: {rows} rows");
        assert!(out.with_extension("json").exists());
    }
}

#[test]
fn run_vsany_on_planted_and_pairing() {
    let dir = tempfile::tempdir().unwrap();
    let planted = gen_to(
        dir.path(),
        "planted.json",
        &["planted-feasible", "m=4", "d=2", "n=16"],
    );
    let pairing = gen_to(dir.path(), "pairing.json", &["pairing-lb", "h=3"]);
    for inst in [planted, pairing] {
        let o = vsched(&["run", "vsany-u", &inst, "--check"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with("algorithm,"));
    }
}

#[test]
fn game_and_encode_report_json() {
    let o = vsched(&["game", "9", "bin-greedy", "--seed", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["algorithm_clique"], 3);

    let o = vsched(&["encode", "4", "greedy"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let _: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
}

#[test]
fn bench_with_no_seeds_is_header_only() {
    let o = vsched(&["bench", "pairing", "--seeds", ""]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o).trim(),
        "suite,cell,seeds,trials,mean_ratio,max_ratio,failures"
    );
}

#[test]
fn bad_input_exits_nonzero() {
    assert_eq!(
        vsched(&["run", "nope", "missing.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        vsched(&["gen", "random-identical", "m=x"]).status.code(),
        Some(2)
    );
    assert!(!vsched(&["game", "5", "bin-greedy"]).status.success());
}

#[test]
fn help_documents_csv_schema() {
    let run = stdout(&vsched(&["run", "--help"]));
    assert!(run.contains("lower_bound") && run.contains("ratio"));
    let bench = stdout(&vsched(&["bench", "--help"]));
    assert!(bench.contains("mean_ratio"));
}
