use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rrg-spectra"));
    c.env_remove("SOURCE_DATE_EPOCH");
    c
}

fn run(sub: &str, args: &[&str]) -> Output {
    bin().arg(sub).args(args).args(["--workers", "1"]).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

fn json(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

fn generate(tmp: &TempDir, name: &str, extra: &[&str]) -> String {
    let out = path(tmp, name);
    let mut args = vec!["--V", "60", "--d", "3", "--n", "12", "--seed", "9", "--out", &out];
    args.extend_from_slice(extra);
    let o = run("generate", &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "run-metadata.json" {
                out.push((p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn single_graph_ensemble() {
    let tmp = TempDir::new().unwrap();
    let out = path(&tmp, "one");
    let o = run("generate", &["--V", "10", "--d", "3", "--n", "1", "--out", &out]);
    assert_eq!(code(&o), 0);
    let manifest = json(Path::new(&out).join("manifest.json"));
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 1);
    assert_eq!(fs::read_dir(Path::new(&out).join("graphs")).unwrap().count(), 1);
}

#[test]
fn generate_rerun_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let out = generate(&tmp, "ens", &["--magnetic"]);
    let first = tree(Path::new(&out));
    assert_eq!(first.iter().filter(|(n, _)| n.starts_with("graphs")).count(), 12);
    generate(&tmp, "ens", &["--magnetic"]);
    assert_eq!(tree(Path::new(&out)), first);

    let mut c = bin();
    let other = path(&tmp, "epoch");
    let o = c
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .args(["generate", "--V", "60", "--d", "3", "--n", "12", "--seed", "9", "--magnetic", "--out", &other])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let m = json(Path::new(&other).join("manifest.json"));
    assert_eq!(m["created"], "2023-11-14T22:13:20Z");
    let graphs = |t: &[(String, Vec<u8>)]| -> Vec<(String, Vec<u8>)> {
        t.iter().filter(|(n, _)| n.starts_with("graphs")).cloned().collect()
    };
    assert_eq!(graphs(&tree(Path::new(&other))), graphs(&first));
}

#[test]
fn run_metadata_accompanies_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = generate(&tmp, "ens", &[]);
    let meta = json(Path::new(&out).join("run-metadata.json"));
    let hash = meta["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert!(meta["versions"]["rrg-spectra"].is_string());
    assert!(meta["timings"].as_array().unwrap().iter().any(|t| t["stage"] == "generate"));
    assert!(meta["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f == "manifest.json"));
    let cfg = json(Path::new(&out).join("config.json"));
    assert_eq!(cfg["command"], "generate");
    assert_eq!(cfg["V"], 60);
}

#[test]
fn config_file_precedence() {
    let tmp = TempDir::new().unwrap();
    let file = path(&tmp, "cfg.json");
    fs::write(&file, r#"{"V": 40, "d": 4, "ensemble_size": 3, "master_seed": 5}"#).unwrap();
    let out = path(&tmp, "ens");
    let o = run("generate", &["--config", &file, "--d", "3", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = json(Path::new(&out).join("config.json"));
    assert_eq!((cfg["V"].as_u64(), cfg["d"].as_u64()), (Some(40), Some(3)));
    assert_eq!(cfg["ensemble_size"], 3);
    assert_eq!(cfg["t_max"], 160);

    // The dumped config reproduces the run when fed back in.
    let again = path(&tmp, "again");
    let o = run("generate", &["--config", &Path::new(&out).join("config.json").to_string_lossy(), "--out", &again]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let graphs = |d: &str| tree(&Path::new(d).join("graphs"));
    assert_eq!(graphs(&out), graphs(&again));

    fs::write(&file, r#"{"vertices": 40}"#).unwrap();
    assert_eq!(code(&run("generate", &["--config", &file, "--out", &path(&tmp, "x")])), 1);
}

#[test]
fn spectra_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let ens = generate(&tmp, "ens", &["--magnetic"]);
    let a = path(&tmp, "a");
    let b = path(&tmp, "b");
    assert_eq!(code(&run("spectra", &["--ensemble", &ens, "--out", &a])), 0);
    assert_eq!(code(&run("spectra", &["--ensemble", &ens, "--out", &b])), 0);
    let spectra = |d: &str| tree(&Path::new(d).join("spectra"));
    assert_eq!(spectra(&a), spectra(&b));
    let names: Vec<String> = spectra(&a).into_iter().map(|(n, _)| n).collect();
    assert!(names.contains(&"plain/graph_000011.csv".to_string()));
    assert!(names.contains(&"magnetic/graph_000000.csv".to_string()));
    let first = read(Path::new(&a).join("spectra/plain/graph_000000.csv"));
    assert!(first.starts_with("graph_id,j,mu,phi,theta,clamped\n"));
    assert_eq!(first.lines().count(), 60);

    let plain_only = path(&tmp, "plain");
    assert_eq!(code(&run("spectra", &["--ensemble", &ens, "--magnetic", "false", "--out", &plain_only])), 0);
    assert!(!Path::new(&plain_only).join("spectra/magnetic").exists());
}

#[test]
fn stats_plain_overlays_orthogonal_surmise() {
    let tmp = TempDir::new().unwrap();
    let ens = generate(&tmp, "ens", &[]);
    let out = path(&tmp, "stats");
    let o = run("stats", &["--ensemble", &ens, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = Path::new(&out);
    for f in [
        "pofs_plain.csv",
        "kunfolded_plain.csv",
        "ktilde_plain.csv",
        "var_over_mean.csv",
        "baseline_plain.csv",
        "fig1.gp",
        "fig2.gp",
        "fig3.gp",
    ] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    assert!(!dir.join("pofs_magnetic.csv").exists());
    let fig1 = read(dir.join("fig1.gp"));
    assert!(fig1.contains("'pofs_plain.csv'") && fig1.contains("title 'COE'"));
    assert!(read(dir.join("fig3.gp")).contains("title 'COE'"));
    let pofs = read(dir.join("pofs_plain.csv"));
    assert!(pofs.starts_with("x,estimate,stderr,n\n"));
    assert_eq!(pofs.lines().count(), 1 + 80);
}

#[test]
fn stats_magnetic_uses_unitary_baselines() {
    let tmp = TempDir::new().unwrap();
    let ens = generate(&tmp, "ens", &["--magnetic"]);
    let out = path(&tmp, "stats");
    let o = run("stats", &["--ensemble", &ens, "--out", &out, "--estimator", "walks", "--count-mode", "clamped"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = Path::new(&out);
    assert!(dir.join("pofs_magnetic.csv").exists());
    assert!(read(dir.join("fig2.gp")).contains("title 'CUE'"));
    let meta = json(dir.join("ktilde_magnetic.json"));
    assert_eq!(meta["label"], "Ktilde_walks");
    assert_eq!(meta["metadata"]["extra"]["count_mode"], "clamped");
    let cfg = json(dir.join("config.json"));
    assert_eq!(cfg["magnetic"], true);
}

#[test]
fn empty_ensemble_directory_fails_cleanly() {
    let tmp = TempDir::new().unwrap();
    let empty = path(&tmp, "empty");
    fs::create_dir(&empty).unwrap();
    let out = path(&tmp, "out");
    let o = run("stats", &["--ensemble", &empty, "--out", &out]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("manifest"));
    let left: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left, vec![std::ffi::OsString::from("empty")]);
}

#[test]
fn failing_computation_leaves_no_partial_output() {
    let tmp = TempDir::new().unwrap();
    let ens = generate(&tmp, "ens", &[]);
    fs::remove_file(Path::new(&ens).join("graphs/graph_000005.txt")).unwrap();
    let out = path(&tmp, "spectra");
    let o = run("spectra", &["--ensemble", &ens, "--out", &out]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("graph_000005.txt"));
    let left: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left, vec![std::ffi::OsString::from("ens")]);
}

#[test]
fn verify_default_suite_passes() {
    let tmp = TempDir::new().unwrap();
    let ens = generate(&tmp, "ens", &["--magnetic"]);
    let out = path(&tmp, "verify");
    let o = run("verify", &["--ensemble", &ens, "--out", &out]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(!stdout.contains("FAIL"));
    let report = json(Path::new(&out).join("verify-report.json"));
    assert!(report["checks"].as_array().unwrap().len() >= 9);
}

#[test]
fn verify_names_corrupted_graph_file() {
    let tmp = TempDir::new().unwrap();
    let ens = generate(&tmp, "ens", &[]);
    let victim = Path::new(&ens).join("graphs/graph_000003.txt");
    let text = read(&victim).replacen("\n0 ", "\n0 0 ", 1);
    fs::write(&victim, text).unwrap();
    let o = run("verify", &["--ensemble", &ens, "--out", &path(&tmp, "v")]);
    assert_eq!(code(&o), 2);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL") && l.contains("graph_000003.txt")), "{stdout}");
}

#[test]
fn verify_tightened_tolerance_reports_margins() {
    let tmp = TempDir::new().unwrap();
    let o = run("verify", &["--tolerance-scale", "1e-3", "--out", &path(&tmp, "v")]);
    assert_eq!(code(&o), 2);
    let stdout = String::from_utf8_lossy(&o.stdout);
    let numeric: Vec<&str> = stdout.lines().filter(|l| l.contains("error/tolerance")).collect();
    assert!(numeric.len() >= 6, "{stdout}");
    assert!(numeric.iter().any(|l| l.starts_with("FAIL orthogonal transform")));
}

#[test]
fn collapse_writes_figure_scripts() {
    let tmp = TempDir::new().unwrap();
    let ens = generate(&tmp, "ens", &["--magnetic"]);
    let out = path(&tmp, "collapse");
    let o = run("collapse", &["--ensemble", &ens, "--degrees", "3,5", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = Path::new(&out);
    for f in ["collapse_transform_d3.csv", "collapse_transform_d5.csv", "fig4.gp", "fig5.gp"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    assert!(read(dir.join("fig4.gp")).contains("collapse_magnetic_0_V60_d3.csv"));
    assert!(read(dir.join("fig5.gp")).contains("collapse_plain_0_V60_d3.csv"));
    let rows: Vec<Vec<f64>> = read(dir.join("collapse_transform_d5.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let small = &rows[0];
    assert!((small[2] / small[3] - 1.0).abs() < 0.05, "{small:?}");
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&run("generate", &["--V", "11", "--d", "3", "--out", &path(&tmp, "a")])), 1);
    assert_eq!(code(&run("generate", &["--no-such-flag"])), 1);
    assert_eq!(code(&run("stats", &["--out", &path(&tmp, "b")])), 1);
    let ens = generate(&tmp, "ens", &[]);
    assert_eq!(code(&run("stats", &["--ensemble", &ens, "--out", &ens])), 1);
    assert_eq!(code(&run("stats", &["--ensemble", &ens, "--magnetic", "--out", &path(&tmp, "c")])), 1);
    assert_eq!(code(&run("stats", &["--ensemble", &ens, "--V", "62", "--out", &path(&tmp, "d")])), 1);
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(code(&help), 0);
}
