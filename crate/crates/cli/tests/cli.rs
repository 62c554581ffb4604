use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revtree"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn revtree")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn pseudonym(i: u32) -> String {
    format!("{i:064x}")
}

const SMALL_SIM: [&str; 8] = [
    "--num-obus",
    "60",
    "--num-revoked",
    "200",
    "--epochs",
    "3",
    "--queries-per-epoch",
    "1500",
];

#[test]
fn single_row_binary_build() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("one.csv"),
        format!("pseudonym,epoch,frequency\n{},0,5\n", pseudonym(7)),
    )
    .unwrap();
    let out = run(
        d,
        &[
            "build", "one.csv", "--k", "2", "--epoch", "0", "--seed", "1", "--out", "t.hcrt",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("leaf_count\t1\n"), "{text}");
    assert!(text.contains("depth\t1\n"), "{text}");
    let bytes = std::fs::read(d.join("t.hcrt")).unwrap();
    revtree::decode_tree(&bytes).unwrap();
    assert!(d.join("t.hcrt.mpu").exists());
}

#[test]
fn duplicate_rows_are_input_errors_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = pseudonym(1);
    std::fs::write(d.join("dup.csv"), format!("{p},0,1\n{p},0,2\n")).unwrap();
    let out = run(
        d,
        &[
            "build", "dup.csv", "--k", "2", "--epoch", "0", "--seed", "1", "--out", "t.hcrt",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("t.hcrt").exists());
    assert!(!d.join("t.hcrt.mpu").exists());
}

#[test]
fn malformed_row_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("bad.csv"),
        format!("{},0,1\n# note\n{},x,1\n", pseudonym(1), pseudonym(2)),
    )
    .unwrap();
    let out = run(
        d,
        &[
            "build", "bad.csv", "--k", "3", "--epoch", "0", "--seed", "1", "--out", "t.hcrt",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

fn built_tree(d: &Path) {
    let rows: String = (0..20)
        .map(|i| format!("{},1,{}\n", pseudonym(i), i * 3))
        .collect();
    std::fs::write(d.join("leaves.csv"), rows).unwrap();
    let out = run(
        d,
        &[
            "build",
            "leaves.csv",
            "--k",
            "3",
            "--epoch",
            "4",
            "--seed",
            "5",
            "--out",
            "t.hcrt",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn old_proof_is_stale() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    built_tree(d);
    let p = pseudonym(4);
    assert!(run(
        d,
        &["prove", "t.hcrt", "--pseudonym", &p, "--out", "p.hprf"]
    )
    .status
    .success());
    let out = run(
        d,
        &[
            "verify",
            "p.hprf",
            "--pseudonym",
            &p,
            "--mpu-file",
            "t.hcrt.mpu",
            "--current-epoch",
            "40",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stdout(&out).starts_with("reject\tstale"),
        "{}",
        stdout(&out)
    );

    let other = pseudonym(5);
    let out = run(
        d,
        &[
            "verify",
            "p.hprf",
            "--pseudonym",
            &other,
            "--mpu-file",
            "t.hcrt.mpu",
            "--current-epoch",
            "4",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stdout(&out).starts_with("reject\tpseudonym-mismatch"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn proving_an_unrevoked_pseudonym_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    built_tree(d);
    let out = run(
        d,
        &[
            "prove",
            "t.hcrt",
            "--pseudonym",
            &pseudonym(999),
            "--out",
            "p.hprf",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(format!("{}{}", stdout(&out), stderr(&out)).contains("not revoked"));
    assert!(!d.join("p.hprf").exists());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        run(d, &["build", "x.csv", "--epoch", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(run(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(d, &["simulate", "--k", "1"]).status.code(), Some(2));
}

#[test]
fn bench_emits_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        &[
            "bench",
            "--k-list",
            "2,3,4,5",
            "--zipf-list",
            "0,1.2",
            "--out",
            "b.csv",
        ][..],
        &SMALL_SIM,
    ]
    .concat();
    let out = run(d, &args);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(d.join("b.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let ratio_col = headers.iter().position(|h| h == "depth_ratio").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 8);
    for row in rows.iter().filter(|r| r[1].parse::<f64>().unwrap() == 1.2) {
        let ratio: f64 = row[ratio_col].parse().unwrap();
        assert!(ratio < 1.0, "k={} ratio={ratio}", &row[0]);
    }
}

#[test]
fn json_report_parses() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        &["simulate", "--format", "json", "--series-out", "s.csv"][..],
        &SMALL_SIM,
    ]
    .concat();
    let out = run(d, &args);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["epochs"], 3);
    assert_eq!(report["series"].as_array().unwrap().len(), 3);
    assert_eq!(
        std::fs::read_to_string(d.join("s.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );
}
