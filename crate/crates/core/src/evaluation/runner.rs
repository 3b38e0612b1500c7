use std::time::Instant;

use rayon::prelude::*;

use super::splits::{Fold, SplitPlan};
use super::stats::accuracy;
use super::table::Column;
use crate::builder::{build_model, ModelSpec};
use crate::dataio::TrialSet;
use crate::error::{Error, Result};
use crate::fbcsp::{ovr_fit, FbcspConfig};
use crate::nn::{predict, train, AdamConfig, LabeledBatch, Tensor, TrainConfig};
use crate::seed::derive;

/// Settings of a spec-built network trained with Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct EegNetMethod {
    pub spec: ModelSpec,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl EegNetMethod {
    pub fn new(spec: ModelSpec, epochs: usize) -> Self {
        Self { spec, epochs, batch_size: 32, adam: AdamConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Method {
    EegNet(EegNetMethod),
    Fbcsp(FbcspConfig),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::EegNet(_) => "EEGNet",
            Method::Fbcsp(_) => "FBCSP",
        }
    }
}

/// Outcome of one fold in one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub fold: usize,
    pub group: usize,
    pub rep: usize,
    pub test_subject: u8,
    pub seed: u64,
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub best_epoch: Option<usize>,
    pub final_loss: Option<f64>,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub column: Column,
    pub records: Vec<FoldRecord>,
    /// Serialized fitted models keyed by `(group, rep)`, when requested.
    pub models: Vec<((usize, usize), Vec<u8>)>,
}

struct JobResult {
    accs: Vec<(usize, f64)>,
    best_epoch: Option<usize>,
    final_loss: Option<f64>,
    model: Option<Vec<u8>>,
    elapsed_ms: u128,
}

fn network_input(set: &TrialSet) -> Result<(Tensor<f32>, Vec<usize>)> {
    let (n, c, t) = (set.n_trials(), set.n_channels(), set.n_samples());
    let x = set.data().clone().reshape(&[n, 1, c, t])?;
    Ok((x, set.labels.iter().map(|&l| l as usize).collect()))
}

fn run_network(
    m: &EegNetMethod,
    set: &TrialSet,
    folds: &[(usize, &Fold)],
    seed: u64,
    keep: bool,
) -> Result<JobResult> {
    let started = Instant::now();
    let first = folds[0].1;
    let mut spec = m.spec.clone();
    if (spec.h, spec.w) != (set.n_channels(), set.n_samples()) {
        spec = spec.with_input(set.n_channels(), set.n_samples());
    }
    let classes = set.labels.iter().max().map_or(0, |&l| l as usize + 1);
    if spec.layers_ff > 0 && spec.n_outputs() != Some(classes) {
        spec = spec.with_outputs(classes);
    }
    let (mut model, _) = build_model::<f32>(&spec, derive(seed, &[0]))?;
    let (xt, yt) = network_input(&set.subset(&first.train)?)?;
    let val = match &first.validation {
        Some(v) => Some(network_input(&set.subset(v)?)?),
        None => None,
    };
    let cfg = TrainConfig { epochs: m.epochs, batch_size: m.batch_size, seed: derive(seed, &[1]), adam: m.adam };
    let val_batch = match &val {
        Some((x, y)) => Some(LabeledBatch::new(x, y)?),
        None => None,
    };
    let report = train(&mut model, LabeledBatch::new(&xt, &yt)?, &cfg, val_batch)?;
    let mut accs = Vec::with_capacity(folds.len());
    for &(i, f) in folds {
        let (x, y) = network_input(&set.subset(&f.test)?)?;
        let (pred, _) = predict(&mut model, &x, 256)?;
        accs.push((i, accuracy(&pred, &y)?));
    }
    let model_bytes = if keep {
        let mut buf = Vec::new();
        report.final_params.write_to(&mut buf)?;
        Some(buf)
    } else {
        None
    };
    Ok(JobResult {
        accs,
        best_epoch: report.best_epoch,
        final_loss: report.epoch_loss.last().copied(),
        model: model_bytes,
        elapsed_ms: started.elapsed().as_millis(),
    })
}

fn run_fbcsp(cfg: &FbcspConfig, set: &TrialSet, folds: &[(usize, &Fold)], keep: bool) -> Result<JobResult> {
    let started = Instant::now();
    let model = ovr_fit(&set.subset(&folds[0].1.train)?, cfg)?;
    let mut accs = Vec::with_capacity(folds.len());
    for &(i, f) in folds {
        let test = set.subset(&f.test)?;
        accs.push((i, accuracy(&model.predict(&test)?, &test.labels)?));
    }
    let model_bytes = if keep {
        let mut buf = Vec::new();
        model.write_to(&mut buf)?;
        Some(buf)
    } else {
        None
    };
    Ok(JobResult { accs, best_epoch: None, final_loss: None, model: model_bytes, elapsed_ms: started.elapsed().as_millis() })
}

/// Fits and evaluates `method` on every fold for `reps` repetitions.
///
/// Folds sharing a training set are fitted once per repetition. Each
/// `(group, rep)` job gets the seed `derive(seed, [group, rep])` and jobs
/// run in parallel on the current rayon pool; results do not depend on the
/// execution order. FBCSP is deterministic, so it is fitted once per group
/// and its accuracies repeated across repetitions. Any failing job aborts
/// the whole run.
pub fn run_experiment(
    method: &Method,
    set: &TrialSet,
    plan: &SplitPlan,
    reps: usize,
    seed: u64,
    keep_models: bool,
) -> Result<ExperimentOutput> {
    if reps == 0 {
        return Err(Error::invalid("at least one repetition is required"));
    }
    if plan.folds.is_empty() {
        return Err(Error::invalid("split plan has no folds"));
    }
    plan.check(set)?;
    let groups = plan.groups();
    let members: Vec<Vec<(usize, &Fold)>> =
        (0..groups).map(|g| plan.folds.iter().enumerate().filter(|(_, f)| f.group == g).collect()).collect();
    let job_reps = match method {
        Method::Fbcsp(_) => 1,
        Method::EegNet(_) => reps,
    };
    let jobs: Vec<(usize, usize)> = (0..groups).flat_map(|g| (0..job_reps).map(move |r| (g, r))).collect();
    let results: Vec<JobResult> = jobs
        .par_iter()
        .map(|&(g, r)| {
            let folds = &members[g];
            if folds.is_empty() {
                return Err(Error::invalid(format!("fold group {g} is empty")));
            }
            let job_seed = derive(seed, &[g as u64, r as u64]);
            let out = match method {
                Method::EegNet(m) => run_network(m, set, folds, job_seed, keep_models),
                Method::Fbcsp(cfg) => run_fbcsp(cfg, set, folds, keep_models),
            };
            out.map_err(|e| match e {
                Error::Numeric(msg) => Error::Numeric(format!("fold group {g}, repetition {r}: {msg}")),
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    let mut acc = vec![vec![0.0; reps]; plan.folds.len()];
    let mut records = Vec::new();
    let mut models = Vec::new();
    for (&(g, r), res) in jobs.iter().zip(results) {
        let reps_covered: Vec<usize> = if job_reps == 1 { (0..reps).collect() } else { vec![r] };
        for &(i, a) in &res.accs {
            let f = &plan.folds[i];
            for &rr in &reps_covered {
                acc[i][rr] = a;
                records.push(FoldRecord {
                    fold: i,
                    group: g,
                    rep: rr,
                    test_subject: f.test_subject,
                    seed: derive(seed, &[g as u64, r as u64]),
                    accuracy: a,
                    n_train: f.train.len(),
                    n_test: f.test.len(),
                    best_epoch: res.best_epoch,
                    final_loss: res.final_loss,
                    elapsed_ms: res.elapsed_ms,
                });
            }
        }
        if let Some(bytes) = res.model {
            models.push(((g, r), bytes));
        }
    }
    records.sort_by_key(|r| (r.fold, r.rep));
    let name = format!("{}-{}", method.name(), plan.scheme);
    let column = Column::new(name, plan.folds.iter().map(|f| f.test_subject).collect(), acc)?;
    Ok(ExperimentOutput { column, records, models })
}
