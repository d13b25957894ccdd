use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ecdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecdm")).args(args).output().expect("run ecdm")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const TOY: &str = "gene_a,gene_b\n1,2\n2,-1\n3,5\n4,0\n";

#[test]
fn toy_csv_matches_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let v = json(&ecdm(&["test", "--data", data.to_str().unwrap(), "--p1", "1", "--format", "json"]));
    assert_eq!(v["t_hat"], -2.625);
    assert_eq!(v["w1"], 1.25);
    assert_eq!(v["w2"], 46.125);
    assert_eq!(v["u_n"], 4.0);
    let delta = (2.0_f64 * 1.25 * 46.125).sqrt() / 4.0;
    assert!((v["delta_scale"].as_f64().unwrap() - delta).abs() < 1e-15);
    assert_eq!(v["test"]["reject"], false);
    assert_eq!(v["test"]["ci"]["lower"], 0.0);
    assert!((v["kappa"].as_f64().unwrap() - 1.25 * 46.125 / (4.0 * 2.625_f64).powi(2)).abs() < 1e-15);
}

#[test]
fn text_report_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("report.txt");
    let o = ecdm(&["test", "--data", data.to_str().unwrap(), "--p1", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(out).unwrap();
    assert!(text.contains("T_n = -2.625"), "{text}");
    assert!(text.contains("reject H0 = false"), "{text}");
}

#[test]
fn named_block_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", "x,y,z\n1,5,2\n2,5,-1\n3,5,5\n4,5,0\n");
    let by_name = json(&ecdm(&[
        "test", "--data", data.to_str().unwrap(), "--block1-cols", "x,y", "--format", "json",
    ]));
    assert_eq!(by_name["p1"], 2);
    assert_eq!(by_name["t_hat"], -2.625);
    let missing = ecdm(&["test", "--data", data.to_str().unwrap(), "--block1-cols", "nope"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn constant_block_exits_3_and_names_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "c.csv", "a,flat\n1,7\n2,7\n3,7\n4,7\n");
    let o = ecdm(&["test", "--data", data.to_str().unwrap(), "--p1", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("flat"), "{}", stderr(&o));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "1,2\n3,x\n5,6\n7,8\n");
    let o = ecdm(&["test", "--data", bad.to_str().unwrap(), "--p1", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column 2"));

    let short = write(dir.path(), "short.csv", "1,2\n3,4\n5,6\n");
    assert_eq!(ecdm(&["test", "--data", short.to_str().unwrap(), "--p1", "1"]).status.code(), Some(2));

    let toy = write(dir.path(), "toy.csv", TOY);
    assert_eq!(ecdm(&["test", "--data", toy.to_str().unwrap(), "--p1", "2"]).status.code(), Some(2));
    let o = ecdm(&["test", "--data", toy.to_str().unwrap(), "--p1", "1", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_sigma0_reproduces_test_fields() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "1,2,0.5\n2,-1,3\n3,5,1\n4,0,-2\n0,1,1\n");
    let zeros = write(dir.path(), "s0.csv", "0,0\n");
    let d = data.to_str().unwrap();
    let test = json(&ecdm(&["test", "--data", d, "--p1", "1", "--format", "json"]));
    let st = json(&ecdm(&[
        "structure", "--data", d, "--p1", "1", "--sigma0", zeros.to_str().unwrap(), "--format", "json",
    ]));
    assert_eq!(st["t_hat_0"], test["t_hat"]);
    assert_eq!(st["sigma0_norm_sq"], 0.0);
    assert_eq!(st["outcome"]["statistic"], test["test"]["statistic"]);
    assert_eq!(st["outcome"]["reject"], test["test"]["reject"]);
}

#[test]
fn structure_known_value_and_bad_shape() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let d = data.to_str().unwrap();
    let half = write(dir.path(), "half.csv", "0.5\n");
    let st = json(&ecdm(&["structure", "--data", d, "--p1", "1", "--sigma0", half.to_str().unwrap(), "--format", "json"]));
    assert_eq!(st["t_hat_0"], -1.375);
    assert_eq!(st["sigma0_norm_sq"], 0.25);

    let wide = write(dir.path(), "wide.csv", "0.5,1\n");
    let o = ecdm(&["structure", "--data", d, "--p1", "1", "--sigma0", wide.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let junk = write(dir.path(), "junk.csv", "a\n0.5\n");
    let o = ecdm(&["structure", "--data", d, "--p1", "1", "--sigma0", junk.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

const SCENARIO: &str = "coupling = \"null\"\ndistribution = \"gaussian\"\nreplications = 40\nseed = 5\n\
                        [covariance]\np1 = 8\np2 = 8\n";

#[test]
fn simulate_writes_summary_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", SCENARIO);
    let out = dir.path().join("run");
    let o = ecdm(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["replications"], 40);
    assert!(summary["size"].is_f64());
    assert!(summary["rejection"]["se"].as_f64().unwrap() >= 0.0);
    let table = fs::read_to_string(out.join("replications.csv")).unwrap();
    assert_eq!(table.lines().count(), 41);
    assert!(table.starts_with("replication,t_hat,w1,w2"));
}

#[test]
fn simulate_seed_override_changes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", SCENARIO);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = ecdm(&[
            "simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed,
        ]);
        assert!(o.status.success());
        fs::read(out.join("replications.csv")).unwrap()
    };
    assert_eq!(run("a", "9"), run("b", "9"));
    assert_ne!(run("c", "9"), run("d", "10"));
}

#[test]
fn simulate_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let shared_p1_2 = write(
        dir.path(),
        "b.toml",
        "coupling = \"shared\"\ndistribution = \"gaussian\"\nreplications = 5\nseed = 1\n[covariance]\np1 = 2\np2 = 8\n",
    );
    let o = ecdm(&["simulate", "--config", shared_p1_2.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("coupling"), "{}", stderr(&o));

    let unknown = write(dir.path(), "u.toml", &format!("{SCENARIO}colour = 3\n"));
    let o = ecdm(&["simulate", "--config", unknown.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn exported_samples_round_trip_through_test() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "s.toml",
        "coupling = \"shared\"\ndistribution = \"chisq\"\nreplications = 3\nseed = 21\n[covariance]\np1 = 6\np2 = 7\n",
    );
    let out = dir.path().join("run");
    let o = ecdm(&[
        "simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--export-samples", "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("replications.csv")).unwrap();
    let sigma_star = fs::read_to_string(out.join("sigma_star.csv")).unwrap();
    assert_eq!(sigma_star.lines().count(), 6);
    for (r, row) in table.lines().skip(1).enumerate() {
        let fields: Vec<f64> = row.split(',').take(4).map(|f| f.parse().unwrap()).collect();
        let sample = out.join(format!("sample_{r}.csv"));
        let v = json(&ecdm(&["test", "--data", sample.to_str().unwrap(), "--p1", "6", "--format", "json"]));
        for (i, key) in ["t_hat", "w1", "w2"].iter().enumerate() {
            let got = v[key].as_f64().unwrap();
            let want = fields[i + 1];
            assert!((got - want).abs() <= 1e-12 * want.abs(), "replication {r} {key}: {got} vs {want}");
        }
    }
}

#[test]
fn true_cross_covariance_centres_the_structure_statistic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "s.toml",
        "coupling = \"shared\"\ndistribution = \"gaussian\"\nreplications = 200\nseed = 4\nn = 24\n\
         [covariance]\np1 = 10\np2 = 10\n",
    );
    let out = dir.path().join("run");
    let o = ecdm(&[
        "simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--export-samples", "200",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sigma = out.join("sigma_star.csv");
    let stats: Vec<f64> = (0..200)
        .map(|r| {
            let sample = out.join(format!("sample_{r}.csv"));
            let v = json(&ecdm(&[
                "structure", "--data", sample.to_str().unwrap(), "--p1", "10", "--sigma0", sigma.to_str().unwrap(),
                "--format", "json",
            ]));
            v["outcome"]["statistic"].as_f64().unwrap()
        })
        .collect();
    let mean = stats.iter().sum::<f64>() / stats.len() as f64;
    let sd = (stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (stats.len() - 1) as f64).sqrt();
    assert!(mean.abs() <= 3.0 * sd / (stats.len() as f64).sqrt(), "mean {mean}, sd {sd}");
}

#[test]
fn version_prints() {
    let o = ecdm(&["version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ecdm "));
}
