use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use motornet::dataio::{synth_mi, write_container, SynthConfig};
use tempfile::TempDir;

fn motornet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motornet")).args(args).env_remove("MOTORNET_DATA_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synthetic(dir: &Path) -> PathBuf {
    let set = synth_mi(&SynthConfig { subjects: 2, trials_per_class: 12, ..SynthConfig::two_class(5) }).unwrap();
    let path = dir.join("synth.eegt");
    write_container(&set, &path).unwrap();
    path
}

fn run_args<'a>(data: &'a str, out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["run", "--data", data, "--out", out, "--window", "none", "--resample", "none", "--threads", "1"];
    v.extend_from_slice(extra);
    v
}

#[test]
fn validate_bundled_spec() {
    let o = motornet(&["validate"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "ok, flatten=240, params=1972");
}

#[test]
fn validate_reports_violations_as_config_error() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("bad.spec");
    let text = motornet::builder::EEGNET_SPEC.replace("groups_list = [1, 8, 16, 1]", "groups_list = [1, 3, 16, 1]");
    fs::write(&spec, text).unwrap();
    let o = motornet(&["validate", "--spec", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("groups"));
}

#[test]
fn build_prints_layers_and_writes_weights() {
    let dir = TempDir::new().unwrap();
    let w = dir.path().join("w.bin");
    let o = motornet(&["build", "--seed", "3", "--out", w.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("flatten=240, params=1972"));
    assert!(text.lines().any(|l| l.contains("dense") && l.contains("964")), "{text}");
    assert_eq!(&fs::read(&w).unwrap()[..4], b"MNWT");
}

#[test]
fn missing_data_is_a_config_error_without_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = motornet(&["run", "--data", "/no/such/file.eegt", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn corrupt_data_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("x.eegt");
    fs::write(&data, b"XXXXjunk").unwrap();
    let out = dir.path().join("out");
    let o = motornet(&["run", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn bad_values_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let data = synthetic(dir.path());
    for extra in [["--reps", "0"], ["--scheme", "kfold"], ["--ema", "1.5"], ["--method", "svm"]] {
        let o = motornet(&run_args(data.to_str().unwrap(), "unused", &extra));
        assert_eq!(o.status.code(), Some(2), "{extra:?}");
    }
}

#[test]
fn fbcsp_run_writes_every_artifact() {
    let dir = TempDir::new().unwrap();
    let data = synthetic(dir.path());
    let out = dir.path().join("fb");
    let o = motornet(&run_args(data.to_str().unwrap(), out.to_str().unwrap(), &["--method", "fbcsp", "--reps", "2"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["manifest.txt", "results.csv", "results.md", "summary.rslt", "folds.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    assert!(csv.starts_with("subject,FBCSP-single"), "{csv}");
    assert_eq!(fs::read_dir(out.join("models")).unwrap().count(), 2);
    assert_eq!(fs::read_to_string(out.join("folds.csv")).unwrap().lines().count(), 1 + 2 * 2);
}

#[test]
fn manifest_reproduces_results_bitwise() {
    let dir = TempDir::new().unwrap();
    let data = synthetic(dir.path());
    let first = dir.path().join("a");
    let o = motornet(&run_args(
        data.to_str().unwrap(),
        first.to_str().unwrap(),
        &["--epochs", "3", "--reps", "2", "--scheme", "mixed", "--seed", "9", "--batch-size", "8"],
    ));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let second = dir.path().join("b");
    let manifest = first.join("manifest.txt");
    let o = motornet(&["run", "--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["results.csv", "results.md", "summary.rslt"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
    let models = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d.join("models")).unwrap().map(|e| fs::read(e.unwrap().path()).unwrap()).collect();
        v.sort();
        v
    };
    assert_eq!(models(&first), models(&second));
    let m = fs::read_to_string(&manifest).unwrap();
    assert!(m.contains("epochs = 3") && m.contains("window = none") && m.contains("scheme = mixed"), "{m}");
}

#[test]
fn data_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    synthetic(dir.path());
    let out = dir.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_motornet"))
        .args(run_args("synth.eegt", out.to_str().unwrap(), &["--method", "fbcsp", "--reps", "1"]))
        .env("MOTORNET_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let data = synthetic(dir.path());
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("cfg");
    fs::write(
        &cfg,
        format!("# sweep entry\ndata = {}\nmethod = fbcsp\nreps = 5\nwindow = none\nresample = none\n", data.display()),
    )
    .unwrap();
    let o = motornet(&["run", "--config", cfg.to_str().unwrap(), "--reps", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(out.join("manifest.txt")).unwrap().contains("reps = 1"));
}

#[test]
fn report_merges_and_marks() {
    let dir = TempDir::new().unwrap();
    let data = synthetic(dir.path());
    let d = data.to_str().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(motornet(&run_args(d, a.to_str().unwrap(), &["--method", "fbcsp", "--reps", "1"])).status.success());
    assert!(motornet(&run_args(d, b.to_str().unwrap(), &["--epochs", "2", "--reps", "1", "--batch-size", "8"])).status.success());
    let (sa, sb) = (a.join("summary.rslt"), b.join("summary.rslt"));
    let o = motornet(&["report", sa.to_str().unwrap(), sb.to_str().unwrap(), "--format", "csv", "--compare", "EEGNet-single,FBCSP-single"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("subject,FBCSP-single,EEGNet-single"), "{text}");
    assert_eq!(text.lines().count(), 4);
    let o = motornet(&["report", sa.to_str().unwrap(), sa.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn convert_csv_manifest() {
    let dir = TempDir::new().unwrap();
    let mut manifest = String::from("path,label,subject,session\n");
    for i in 0..4 {
        let rows: Vec<String> = (0..3).map(|c| (0..5).map(|t| format!("{}", i * 100 + c * 10 + t)).collect::<Vec<_>>().join(",")).collect();
        fs::write(dir.path().join(format!("t{i}.csv")), rows.join("\n")).unwrap();
        manifest.push_str(&format!("t{i}.csv,{},1,{}\n", i % 2, if i < 2 { "train" } else { "test" }));
    }
    let m = dir.path().join("trials.csv");
    fs::write(&m, manifest).unwrap();
    let out = dir.path().join("c.eegt");
    let o = motornet(&["convert", "--manifest", m.to_str().unwrap(), "--fs", "250", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let set = motornet::dataio::read_container(&out).unwrap();
    assert_eq!((set.n_trials(), set.n_channels(), set.n_samples()), (4, 3, 5));
    assert_eq!(set.trial(3)[7], 312.0);
    let o = motornet(&["convert", "--manifest", "/none.csv", "--fs", "250", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
