use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use motornet::builder::{build_model, validate_spec, ModelSpec};
use motornet::dataio::{convert_csv, extract_window, read_container, write_container, Preprocess, TrialSet};
use motornet::evaluation::{
    emit_table, make_splits, run_experiment, EegNetMethod, ExperimentOutput, FoldRecord, Method, ResultsTable,
    SplitOptions, TableFormat,
};
use motornet::fbcsp::FbcspConfig;

use crate::config::{MethodName, RunConfig};
use crate::error::{classify, config, data, CliResult, Context, Kind};

fn load_spec(path: Option<&Path>) -> CliResult<ModelSpec> {
    match path {
        None => Ok(ModelSpec::eegnet()),
        Some(p) => ModelSpec::load(p).kind(Kind::Config, || format!("loading spec {}", p.display())),
    }
}

pub fn validate(spec: Option<&Path>) -> CliResult<String> {
    let spec = load_spec(spec)?;
    if let Err(violations) = validate_spec(&spec) {
        let mut msg = format!("{} violation(s):", violations.len());
        for v in &violations {
            let _ = write!(msg, "\n  {v}");
        }
        return Err(config(anyhow::anyhow!(msg)));
    }
    let (_, report) = build_model::<f32>(&spec, 0).map_err(classify)?;
    let flatten = report.flatten_dim.map_or("none".to_string(), |d| d.to_string());
    Ok(format!("ok, flatten={flatten}, params={}", report.param_count))
}

pub fn build(spec: Option<&Path>, seed: u64, out: Option<&Path>) -> CliResult<String> {
    let spec = load_spec(spec)?;
    let (model, report) = build_model::<f32>(&spec, seed).map_err(config)?;
    let mut s = format!("{:<4} {:<12} {:<18} {:<18} {:>7}\n", "#", "layer", "input", "output", "params");
    for (i, l) in report.layers.iter().enumerate() {
        let _ = writeln!(s, "{i:<4} {:<12} {:<18} {:<18} {:>7}", l.kind.to_string(), format!("{:?}", l.input), format!("{:?}", l.output), l.params);
    }
    let _ = write!(s, "flatten={}, params={}", report.flatten_dim.map_or("none".into(), |d| d.to_string()), report.param_count);
    for w in &report.warnings {
        let _ = write!(s, "\nwarning: {w}");
    }
    if let Some(path) = out {
        let mut buf = Vec::new();
        model.snapshot().write_to(&mut buf).map_err(classify)?;
        fs::write(path, buf).kind(Kind::Data, || format!("writing {}", path.display()))?;
        let _ = write!(s, "\nweights written to {}", path.display());
    }
    Ok(s)
}

pub fn convert(manifest: &Path, fs: f64, out: &Path) -> CliResult<String> {
    if !manifest.is_file() {
        return Err(config(anyhow::anyhow!("manifest {} does not exist", manifest.display())));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(config(anyhow::anyhow!("sampling rate must be positive, got {fs}")));
    }
    let set = convert_csv(manifest, fs).map_err(|e| classify(e).context(format!("converting {}", manifest.display())))?;
    write_container(&set, out).map_err(classify)?;
    Ok(format!(
        "wrote {}: {} trials, {} channels, {} samples at {} Hz, subjects {:?}",
        out.display(),
        set.n_trials(),
        set.n_channels(),
        set.n_samples(),
        set.fs,
        set.subject_ids()
    ))
}

/// Loads the container and applies the configured window and preprocessing.
pub fn prepare(cfg: &RunConfig) -> CliResult<TrialSet> {
    let set = read_container(&cfg.data).map_err(|e| classify(e).context(format!("reading {}", cfg.data.display())))?;
    let set = match cfg.window {
        Some((a, b)) => extract_window(&set, a, b).map_err(|e| classify(e).context("extracting trial window"))?,
        None => set,
    };
    let pre = Preprocess { bandpass: cfg.bandpass, filter_order: Some(cfg.filter_order), ema_decay: cfg.ema, resample_hz: cfg.resample };
    pre.apply(&set).map_err(|e| classify(e).context("preprocessing"))
}

fn method(cfg: &RunConfig, set: &TrialSet) -> CliResult<Method> {
    Ok(match cfg.method {
        MethodName::Eegnet => {
            let spec = load_spec(cfg.spec.as_deref())?;
            validate_spec(&spec).map_err(|v| config(anyhow::anyhow!(motornet::Error::Spec(v))))?;
            let mut m = EegNetMethod::new(spec, cfg.epochs);
            m.batch_size = cfg.batch_size;
            Method::EegNet(m)
        }
        MethodName::Fbcsp => {
            let n_classes = set.classes().iter().max().map_or(0, |&c| c as usize + 1);
            Method::Fbcsp(FbcspConfig { pairs: cfg.csp_pairs, k: cfg.csp_features, n_classes, ..Default::default() })
        }
    })
}

fn folds_csv(records: &[FoldRecord]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let opt = |v: Option<String>| v.unwrap_or_default();
    w.write_record([
        "fold", "group", "rep", "test_subject", "seed", "accuracy", "n_train", "n_test", "best_epoch", "final_loss", "elapsed_ms",
    ])
    .map_err(data)?;
    for r in records {
        w.write_record([
            r.fold.to_string(),
            r.group.to_string(),
            r.rep.to_string(),
            r.test_subject.to_string(),
            r.seed.to_string(),
            format!("{:.4}", r.accuracy),
            r.n_train.to_string(),
            r.n_test.to_string(),
            opt(r.best_epoch.map(|e| e.to_string())),
            opt(r.final_loss.map(|l| format!("{l:.6}"))),
            r.elapsed_ms.to_string(),
        ])
        .map_err(data)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| data(anyhow::anyhow!("{e}")))?).map_err(data)
}

/// Files a run produces, relative to its output directory.
pub struct RunArtifacts {
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

/// Runs the experiment without touching the output directory.
pub fn execute(cfg: &RunConfig) -> CliResult<(ExperimentOutput, RunArtifacts)> {
    let set = prepare(cfg)?;
    let method = method(cfg, &set)?;
    let opts = SplitOptions { loso_test: cfg.loso_test, seed: cfg.seed };
    let plan = make_splits(cfg.scheme, &set, &opts).map_err(|e| classify(e).context(format!("building {} splits", cfg.scheme)))?;
    log::info!(
        "{} trials, {} channels x {} samples at {} Hz; {} folds, {} reps",
        set.n_trials(),
        set.n_channels(),
        set.n_samples(),
        set.fs,
        plan.folds.len(),
        cfg.reps
    );
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build().map_err(config)?;
    let output = pool.install(|| run_experiment(&method, &set, &plan, cfg.reps, cfg.seed, true)).map_err(classify)?;

    let mut table = ResultsTable::default();
    table.push(output.column.clone());
    let mut summary = Vec::new();
    table.write_summary(&mut summary).map_err(classify)?;
    let mut files = vec![
        (PathBuf::from("manifest.txt"), cfg.manifest().into_bytes()),
        (PathBuf::from("results.csv"), emit_table(&table, TableFormat::Csv).map_err(classify)?.into_bytes()),
        (PathBuf::from("results.md"), emit_table(&table, TableFormat::Markdown).map_err(classify)?.into_bytes()),
        (PathBuf::from("summary.rslt"), summary),
        (PathBuf::from("folds.csv"), folds_csv(&output.records)?.into_bytes()),
    ];
    let stem = output.column.name.to_ascii_lowercase();
    for ((group, rep), bytes) in &output.models {
        files.push((PathBuf::from("models").join(format!("{stem}-g{group}-r{rep}.bin")), bytes.clone()));
    }
    Ok((output, RunArtifacts { files }))
}

pub fn run(cfg: &RunConfig) -> CliResult<String> {
    let (output, artifacts) = execute(cfg)?;
    for (rel, bytes) in &artifacts.files {
        let path = cfg.out.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).kind(Kind::Data, || format!("creating {}", dir.display()))?;
        }
        fs::write(&path, bytes).kind(Kind::Data, || format!("writing {}", path.display()))?;
    }
    let col = &output.column;
    Ok(format!("{}: {:.2}±{:.2} over {} subjects; results in {}", col.name, col.avg_mean(), col.avg_std(), col.subjects.len(), cfg.out.display()))
}

pub fn report(summaries: &[PathBuf], format: TableFormat, compare: &[(String, String)]) -> CliResult<String> {
    let mut table = ResultsTable::default();
    for p in summaries {
        if !p.is_file() {
            return Err(config(anyhow::anyhow!("summary {} does not exist", p.display())));
        }
        let t = ResultsTable::load_summary(p).map_err(|e| classify(e).context(format!("reading {}", p.display())))?;
        for c in t.columns {
            if table.column(&c.name).is_some() {
                return Err(config(anyhow::anyhow!("column {:?} appears twice", c.name)));
            }
            table.push(c);
        }
    }
    for (a, b) in compare {
        let t = table.compare(a, b).map_err(|e| config(e).context(format!("comparing {a} with {b}")))?;
        table.mark(a, t.p).map_err(config)?;
    }
    emit_table(&table, format).map_err(classify)
}

/// Flags of `run` that were given, keyed by config name.
pub fn given(pairs: &[(&str, Option<String>)]) -> BTreeMap<String, String> {
    pairs.iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect()
}
